//! The registered experiments. Each fills a [`Report`] with records and checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use siegel_core::degree_one::{
    gamma0_genus, kloosterman, large_sieve_check, newform_direction, petersson_gram, petersson_oracle, weil_bound,
    EllipticCurve,
};
use siegel_core::lattice_forms::automorphisms_in;
use siegel_core::poincare::{
    level_one_cusp_dimension, lipschitz_pair, poincare_fourier_coeff, poincare_gram_rank, sup_search, BergmanEvaluator, Nonsingularity,
};
use siegel_core::symplectic::{act, gamma0p_cosets_sp2, is_symplectic};
use siegel_core::{Family, GridSpec, GroupDescriptor, HalfIntegralForm, SiegelPoint, SymplecticElement};

use crate::config::ExperimentName;
use crate::report::{Check, Record, Report};
use crate::LabError;

type Step = Result<(), LabError>;

pub fn run(report: &mut Report) -> Step {
    use ExperimentName::*;
    match report.experiment {
        VerifyScaling => verify_scaling(report),
        VerifyLimit => verify_limit(report),
        VerifyLipschitz => verify_lipschitz(report),
        CuspConfig => cusp_config(report),
        CosetCount => coset_count(report),
        KloostermanTable => kloosterman_table(report),
        PeterssonGram => gram(report),
        LargeSieve => large_sieve(report),
        Nonvanishing => nonvanishing(report),
        LinearIndependence => linear_independence(report),
        BergmanDomainBound => domain_bound(report),
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `t·1_n`.
fn scalar_form(n: usize, t: u64) -> HalfIntegralForm {
    HalfIntegralForm::diagonal(&vec![t as i64; n])
}

fn weight(k: u64) -> u32 {
    u32::try_from(k).expect("weights are validated ≤ 400")
}

fn gamma0(level: u64) -> Result<GroupDescriptor, LabError> {
    Ok(GroupDescriptor::new(1, Family::Gamma0, level)?)
}

fn scaling_grid(n: usize, k: u32, y_steps: usize) -> GridSpec {
    let mut g = GridSpec::for_weight(n, k);
    g.y_steps = y_steps;
    if n == 2 {
        g.refine_iterations = 8;
    }
    g
}

fn verify_scaling(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    let group = cfg.group()?;
    let n = cfg.degree;
    // A zero cusp space has an identically vanishing kernel and no logarithm.
    let (weights, empty): (Vec<u64>, Vec<u64>) = cfg
        .k
        .iter()
        .partition(|&&k| group.level() > 1 || level_one_cusp_dimension(n, weight(k)) != Some(0));
    rep.note("skippedEmptyWeights", Value::from(empty));
    if weights.len() < 2 {
        return Err(LabError::Usage("fewer than two weights with nonzero cusp forms".into()));
    }
    let rows: Vec<(u64, f64, f64, f64, bool, f64)> = weights
        .par_iter()
        .map(|&k| {
            let started = Instant::now();
            let ev = BergmanEvaluator::new(&group, weight(k), &cfg.truncation)?;
            let s = sup_search(&ev, &scaling_grid(n, weight(k), cfg.y_steps))?;
            Ok((k, s.refined_max, s.tail, s.argmax_y, s.on_boundary, started.elapsed().as_secs_f64()))
        })
        .collect::<Result<_, LabError>>()?;
    for &(k, sup, tail, y, edge, wall) in &rows {
        let params = BTreeMap::from([
            ("k".to_string(), json!(k)),
            ("argmaxY".to_string(), json!(y)),
            ("onBoundary".to_string(), json!(edge)),
        ]);
        rep.records.push(Record { params, value: sup, tail_estimate: Some(tail), wall_time: wall });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let fitted = slope(&xs, &ys);
    let target = 3.0 * (n * (n + 1)) as f64 / 4.0;
    rep.note("slope", fitted);
    rep.note("targetSlope", target);
    rep.check(Check::new(
        "sup-norm slope",
        fitted,
        format!("{target} ± {}", cfg.tol),
        (fitted - target).abs() <= cfg.tol,
    ));
    Ok(())
}

fn verify_limit(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    let group = cfg.group()?;
    let n = cfg.degree;
    let units = if group.contains_minus_one() { 2.0 } else { 1.0 };
    for &k in &cfg.k {
        for &t in &cfg.t {
            let started = Instant::now();
            let form = scalar_form(n, t);
            let c = poincare_fourier_coeff(&group, &form, &form, weight(k), &cfg.truncation)?;
            let want = automorphisms_in(&group, &form, &form)? as f64 / units;
            rep.records.push(Record::new([("k", json!(k)), ("t", json!(t)), ("tPrime", json!(t))], c.value, Some(c.tail), started));
            rep.check(Check::new(
                format!("p_{t}({t}) at k={k}"),
                c.value,
                format!("{want} ± {}", cfg.tol),
                (c.value - want).abs() <= cfg.tol,
            ));
            if n == 1 {
                let started = Instant::now();
                let off = poincare_fourier_coeff(&group, &form, &scalar_form(1, t + 1), weight(k), &cfg.truncation)?;
                rep.records.push(Record::new(
                    [("k", json!(k)), ("t", json!(t)), ("tPrime", json!(t + 1))],
                    off.value,
                    Some(off.tail),
                    started,
                ));
                rep.check(Check::new(
                    format!("|p_{t}({})| at k={k}", t + 1),
                    off.value.abs(),
                    format!("≤ {}", cfg.tol),
                    off.value.abs() <= cfg.tol,
                ));
                if matches!(group.family(), Family::Full | Family::Gamma0) && k % 2 == 0 {
                    let oracle = petersson_oracle(&group, weight(k), t as i64, t as i64, cfg.truncation.c_max)?;
                    let gap = (oracle.value - c.value).abs();
                    rep.check(Check::new(format!("oracle agreement for p_{t}({t}) at k={k}"), gap, "≤ 1e-4", gap <= 1e-4));
                }
            }
        }
    }
    Ok(())
}

fn verify_lipschitz(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    let lattice = cfg.group()?.dual_lattice();
    let points: &[(f64, f64)] = if cfg.degree == 1 { &[(0.0, 1.0), (0.3, 1.1)] } else { &[(0.0, 1.0)] };
    let mut worst = 0.0_f64;
    for &k in &cfg.k {
        for &(x, y) in points {
            let started = Instant::now();
            let z = SiegelPoint::scalar(cfg.degree, x, y)?;
            let pair = lipschitz_pair(&lattice, weight(k), &z, &cfg.truncation)?;
            let gap = pair.relative_gap();
            worst = worst.max(gap);
            let tail = (pair.lhs_tail + pair.rhs_tail) / pair.lhs.norm();
            rep.records.push(Record::new([("k", json!(k)), ("x", json!(x)), ("y", json!(y))], gap, Some(tail), started));
        }
    }
    rep.check(Check::new("largest relative gap", worst, format!("≤ {:e}", cfg.tol), worst <= cfg.tol));
    Ok(())
}

/// `(n11, n12, n22)` for each conjugate of `Γ₀⁽²⁾(p)`, keyed by the class
/// `j` of the conjugating representative.
fn cusp_config(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    for &p in &cfg.p {
        let started = Instant::now();
        let base = GroupDescriptor::new(2, Family::Gamma0, p)?;
        let mut hist: BTreeMap<(u64, (u64, u64, u64)), usize> = BTreeMap::new();
        for (i, g) in gamma0p_cosets_sp2(p)?.iter().enumerate() {
            // Representatives come as 1, then p(p+1) of class 1, then p³ of class 2.
            let j = if i == 0 { 0 } else if i as u64 <= p * (p + 1) { 1 } else { 2 };
            let w = base.conjugated(g)?.cusp_width_config().widths;
            *hist.entry((j, (w[0][0], w[0][1], w[1][1]))).or_default() += 1;
        }
        for (&(j, (a, b, c)), &count) in &hist {
            rep.records.push(Record::new(
                [("p", json!(p)), ("rClass", json!(j)), ("n11", json!(a)), ("n12", json!(b)), ("n22", json!(c))],
                count as f64,
                None,
                started,
            ));
        }
        let kinds: std::collections::BTreeSet<_> = hist.keys().map(|k| k.1).collect();
        let want: std::collections::BTreeSet<_> = [(1, 1, 1), (1, 1, p), (p, 1, 1), (p, p, p)].into_iter().collect();
        let shown: Vec<String> = kinds.iter().map(|(a, b, c)| format!("({a},{c},{b})")).collect();
        rep.check(Check::new(
            format!("configurations for p={p} as (n11,n22,n12)"),
            shown.join(" "),
            format!("(1,1,1) (1,{p},1) ({p},1,1) ({p},{p},{p})"),
            kinds == want,
        ));
    }
    Ok(())
}

fn coset_count(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    for &p in &cfg.p {
        let started = Instant::now();
        let reps = gamma0p_cosets_sp2(p)?;
        let group = GroupDescriptor::new(2, Family::Gamma0, p)?;
        let mut distinct = true;
        for (i, g) in reps.iter().enumerate() {
            distinct &= is_symplectic(&g.to_matrix())?;
            distinct &= reps[..i].iter().all(|h| !group.contains(&g.mul(&h.inverse())));
        }
        let want = (p + 1) * (p * p + 1);
        rep.records.push(Record::new([("p", json!(p)), ("pairwiseDistinct", json!(distinct))], reps.len() as f64, None, started));
        rep.check(Check::new(
            format!("|Γ₀(p)\\Sp₂(ℤ)| for p={p}"),
            reps.len(),
            format!("{want}, pairwise distinct"),
            reps.len() as u64 == want && distinct,
        ));
    }
    Ok(())
}

/// `Σ_{d mod c, (d,c)=1} e((m·d̄ + n·d)/c)` by trial inversion.
pub fn brute_kloosterman(m: i64, n: i64, c: i64) -> (f64, f64) {
    let (mut re, mut im) = (0.0, 0.0);
    for d in 0..c {
        if let Some(dbar) = (0..c).find(|x| (x * d).rem_euclid(c) == 1 % c) {
            let theta = 2.0 * PI * ((m * dbar + n * d).rem_euclid(c)) as f64 / c as f64;
            re += theta.cos();
            im += theta.sin();
        }
    }
    (re, im)
}

fn kloosterman_table(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    let group = cfg.group()?;
    let brute_ok = matches!(group.family(), Family::Full | Family::Gamma0) && group.conjugator().is_none();
    let level = group.level();
    let (mut worst_gap, mut worst_weil) = (0.0_f64, 0.0_f64);
    for &m in &cfg.t {
        for &n in &cfg.t {
            for c in 1..=cfg.truncation.c_max {
                let started = Instant::now();
                let s = kloosterman(&group, m as i64, n as i64, c)?;
                let ratio = s.norm() / weil_bound(m as i64, n as i64, c);
                worst_weil = worst_weil.max(ratio);
                if brute_ok {
                    let (re, im) = if c % level == 0 { brute_kloosterman(m as i64, n as i64, c as i64) } else { (0.0, 0.0) };
                    worst_gap = worst_gap.max(((s.re - re).powi(2) + (s.im - im).powi(2)).sqrt());
                }
                rep.records.push(Record::new(
                    [("m", json!(m)), ("n", json!(n)), ("c", json!(c)), ("imag", json!(s.im)), ("weilRatio", json!(ratio))],
                    s.re,
                    None,
                    started,
                ));
            }
        }
    }
    if brute_ok {
        rep.check(Check::new("max |S − brute force|", worst_gap, format!("≤ {:e}", cfg.tol), worst_gap <= cfg.tol));
    } else {
        rep.note("bruteForce", "skipped: the direct formula covers Γ₀(N) only");
    }
    rep.check(Check::new("max |S| / (d(c)·√c·√gcd(m,n,c))", worst_weil, "≤ 1", worst_weil <= 1.0));
    Ok(())
}

/// `[SL₂(ℤ) : Γ₀(N)] = N·∏_{p | N}(1 + 1/p)`.
fn gamma0_index(level: u64) -> u64 {
    let (mut n, mut out, mut p) = (level, level, 2);
    while p * p <= n {
        if n % p == 0 {
            out = out / p * (p + 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out = out / n * (n + 1);
    }
    out
}

fn curve_of_level(q: u64) -> Option<EllipticCurve> {
    [EllipticCurve::X0_11, EllipticCurve::X0_14, EllipticCurve::X0_15].into_iter().find(|e| e.conductor == q)
}

fn gram(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    for &q in &cfg.q {
        let started = Instant::now();
        let g = petersson_gram(&gamma0(q)?, cfg.size, cfg.truncation.c_max, cfg.summation)?;
        let wall = started.elapsed().as_secs_f64();
        for (i, row) in g.entries.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let params = BTreeMap::from([
                    ("q".to_string(), json!(q)),
                    ("quantity".to_string(), json!("entry")),
                    ("m".to_string(), json!(i + 1)),
                    ("n".to_string(), json!(j + 1)),
                ]);
                rep.records.push(Record { params, value: v, tail_estimate: None, wall_time: wall });
            }
        }
        for (i, &l) in g.eigenvalues.iter().enumerate() {
            let params = BTreeMap::from([
                ("q".to_string(), json!(q)),
                ("quantity".to_string(), json!("eigenvalue")),
                ("m".to_string(), json!(i + 1)),
            ]);
            rep.records.push(Record { params, value: l, tail_estimate: None, wall_time: wall });
        }
        let tr = g.trace();
        let herm = g.hermitian_defect();
        rep.check(Check::new(format!("q={q} hermitian defect"), herm, "≤ 1e-8", herm <= 1e-8));
        let lmin = g.min_eigenvalue();
        rep.check(Check::new(
            format!("q={q} smallest eigenvalue"),
            lmin,
            format!("≥ {:.3e} (−1e−4·trace)", -1e-4 * tr),
            lmin >= -1e-4 * tr,
        ));
        let rank = g.numerical_rank(1e-3, 1e-8);
        let genus = gamma0_genus(q);
        rep.note(&format!("rank_q{q}"), rank);
        rep.note(&format!("genus_q{q}"), genus);
        // Coefficients up to the Sturm bound μ/6 separate weight-2 forms.
        if cfg.size as u64 * 6 >= gamma0_index(q) {
            let want = genus.min(cfg.size as u64) as usize;
            rep.check(Check::new(format!("q={q} numerical rank"), rank, format!("{want} (genus)"), rank == want));
        }
        if let (Some(curve), 1) = (curve_of_level(q), genus) {
            let oracle = newform_direction(&curve, cfg.size);
            let top = &g.eigenvectors[0];
            let err = (1..cfg.size)
                .map(|i| (top[i] / top[0] - oracle[i] / oracle[0]).abs() / (oracle[i] / oracle[0]).abs().max(1.0))
                .fold(0.0, f64::max);
            rep.check(Check::new(
                format!("q={q} top eigenvector vs a_E(n)/√n"),
                err,
                format!("≤ {}", cfg.tol),
                err <= cfg.tol,
            ));
        }
    }
    Ok(())
}

fn large_sieve(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    let mut maxima = Vec::new();
    for &q in &cfg.q {
        let started = Instant::now();
        let g = petersson_gram(&gamma0(q)?, cfg.size, cfg.truncation.c_max, cfg.summation)?;
        let ls = large_sieve_check(&g, q, cfg.trials, cfg.seed);
        rep.records.push(Record::new(
            [("q", json!(q)), ("normaliser", json!(ls.normaliser)), ("e1Ratio", json!(ls.e1_ratio))],
            ls.max_ratio,
            None,
            started,
        ));
        rep.check(Check::new(format!("q={q} max ratio"), ls.max_ratio, format!("≤ {}", cfg.tol), ls.max_ratio <= cfg.tol));
        maxima.push(ls.max_ratio);
    }
    let trend = maxima.windows(2).all(|w| w[1] <= w[0]);
    rep.check(Check::new("max ratio non-increasing in q", Value::from(maxima), "non-increasing", trend));
    Ok(())
}

fn nonvanishing(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    let group = cfg.group()?;
    for &k in &cfg.k {
        for &t in &cfg.t {
            let started = Instant::now();
            let form = scalar_form(cfg.degree, t);
            let c = poincare_fourier_coeff(&group, &form, &form, weight(k), &cfg.truncation)?;
            rep.records.push(Record::new([("k", json!(k)), ("t", json!(t))], c.value, Some(c.tail), started));
            rep.check(Check::new(format!("p_{t}({t}) > 0 at k={k}"), c.value, "> 0", c.value > 0.0));
        }
    }
    Ok(())
}

fn linear_independence(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    let group = cfg.group()?;
    let forms: Vec<HalfIntegralForm> = cfg.t.iter().map(|&t| scalar_form(cfg.degree, t)).collect();
    for &k in &cfg.k {
        let started = Instant::now();
        let g = poincare_gram_rank(&group, weight(k), &forms, &cfg.truncation)?;
        for (i, row) in g.matrix.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                rep.records.push(Record::new(
                    [("k", json!(k)), ("t", json!(cfg.t[i])), ("tPrime", json!(cfg.t[j]))],
                    v,
                    Some(g.tails[i][j]),
                    started,
                ));
            }
        }
        rep.note(&format!("normalizedDet_k{k}"), g.normalized_det);
        rep.check(Check::new(
            format!("nonsingular at k={k}"),
            format!("{:?}", g.status),
            "diagonally dominant or determinant certificate",
            g.status != Nonsingularity::Indeterminate,
        ));
    }
    Ok(())
}

/// Right coset representatives `γ_i` of `Γ\SL₂(ℤ)`, so `ℱ_Γ = ⋃ γ_i ℱ₁`.
fn degree_one_reps(group: &GroupDescriptor) -> Result<Vec<SymplecticElement>, LabError> {
    let mut out = vec![SymplecticElement::identity(1)];
    if group.level() > 1 {
        for j in 0..group.level() as i64 {
            out.push(SymplecticElement::from_i64(1, &[0, -1, 1, j])?);
        }
    }
    Ok(out)
}

/// Sample points of `ℱ_n`: for n = 1 three real parts on geometric `y`
/// grids starting at the lower arc, for n = 2 the ray `i·y·1₂`.
fn domain_points(n: usize, k: u64, steps: usize) -> Result<Vec<SiegelPoint>, LabError> {
    let top = (k as f64 / PI).max(3.0);
    let geometric = |lo: f64| -> Vec<f64> {
        if steps == 1 {
            return vec![lo];
        }
        (0..steps).map(|i| lo * (top / lo).powf(i as f64 / (steps - 1) as f64)).collect()
    };
    let mut out = Vec::new();
    if n == 1 {
        for x in [0.0_f64, 0.25, 0.5] {
            for y in geometric((1.0 - x * x).sqrt()) {
                out.push(SiegelPoint::scalar(1, x, y)?);
            }
        }
    } else {
        for y in geometric(1.0) {
            out.push(SiegelPoint::scalar(n, 0.0, y)?);
        }
    }
    Ok(out)
}

/// Sweeps `𝔹·det(V)^{(n+1)/2}/k^{3n(n+1)/4}` over `ℱ_Γ` and
/// `𝔹/min{k^{n(n+1)/2}det Y^{3(n+1)/4}, k^{3n(n+1)/4}det Y^{(n+1)/2}}` over `ℱ_n`.
fn domain_bound(rep: &mut Report) -> Step {
    let cfg = rep.config.clone();
    let group = cfg.group()?;
    let n = cfg.degree;
    let nf = n as f64;
    let half = nf * (nf + 1.0) / 2.0;
    let reps = if n == 1 { degree_one_reps(&group)? } else { vec![SymplecticElement::identity(n)] };
    let mut max_f1 = Vec::new();
    let mut max_fg = Vec::new();
    for &k in &cfg.k {
        let kf = k as f64;
        let ev = BergmanEvaluator::new(&group, weight(k), &cfg.truncation)?;
        let points = domain_points(n, k, cfg.y_steps)?;
        let jobs: Vec<(usize, usize)> = (0..reps.len()).flat_map(|r| (0..points.len()).map(move |p| (r, p))).collect();
        let rows: Vec<(usize, usize, f64, f64, f64, f64, f64)> = jobs
            .par_iter()
            .map(|&(r, p)| {
                let started = Instant::now();
                let z = &points[p];
                let w = act(&reps[r], z)?;
                let b = ev.eval(&w)?;
                let dv = w.y().det();
                let fg = b.value * dv.powf((nf + 1.0) / 2.0) / kf.powf(1.5 * half);
                let dy = z.y().det();
                let f1 = b.value / (kf.powf(half) * dy.powf(0.75 * (nf + 1.0))).min(kf.powf(1.5 * half) * dy.powf((nf + 1.0) / 2.0));
                Ok((r, p, fg, f1, b.tail, dv, started.elapsed().as_secs_f64()))
            })
            .collect::<Result<_, LabError>>()?;
        let (mut m1, mut mg) = (0.0_f64, 0.0_f64);
        for &(r, p, fg, f1, tail, dv, wall) in &rows {
            let z = &points[p];
            let base = [
                ("k".to_string(), json!(k)),
                ("rep".to_string(), json!(r)),
                ("x".to_string(), json!(z.x().get(0, 0))),
                ("y".to_string(), json!(z.y().get(0, 0))),
                ("detV".to_string(), json!(dv)),
            ];
            let mut params: BTreeMap<String, Value> = base.iter().cloned().collect();
            params.insert("region".into(), json!("F_Gamma"));
            rep.records.push(Record { params, value: fg, tail_estimate: Some(tail), wall_time: wall });
            mg = mg.max(fg);
            if r == 0 {
                let mut params: BTreeMap<String, Value> = base.into_iter().collect();
                params.insert("region".into(), json!("F_1"));
                rep.records.push(Record { params, value: f1, tail_estimate: Some(tail), wall_time: wall });
                m1 = m1.max(f1);
            }
        }
        max_f1.push(m1);
        max_fg.push(mg);
    }
    rep.note("maxRatioF1", Value::from(max_f1.clone()));
    rep.note("maxRatioFGamma", Value::from(max_fg.clone()));
    for (name, maxima) in [("F_1", &max_f1), ("F_Gamma", &max_fg)] {
        let finite = maxima.iter().all(|m| m.is_finite());
        rep.check(Check::new(format!("{name} ratios finite"), finite, "true", finite));
        if cfg.k.len() >= 2 {
            let xs: Vec<f64> = cfg.k.iter().map(|&k| (k as f64).ln()).collect();
            let ys: Vec<f64> = maxima.iter().map(|m| m.ln()).collect();
            let s = slope(&xs, &ys);
            rep.check(Check::new(
                format!("{name} growth exponent of the max ratio in k"),
                s,
                format!("≤ {} (ε)", cfg.tol),
                s <= cfg.tol,
            ));
        }
    }
    Ok(())
}
