//! Poincaré series on `Γ\𝐇_n`, their Fourier coefficients by quadrature,
//! the Lipschitz identity, and the diagonal Bergman kernel
//! `𝔹_{k,Γ}(Z) = det(Y)^k Σ_F |F(Z)|²` for `n ∈ {1, 2}`.
//!
//! Every sum over `Γ_∞\Γ` runs over the classes of a [`CosetSystem`]. Inside a
//! class `γ` the unit sum over `V ∈ 𝒰_Γ` is organised around a Minkowski
//! reduction of `Im γ⟨Z⟩`, so that shells in `V` can be enumerated directly.
//! Magnitudes are carried in log scale and exponentiated per term.

use crate::error::{Error, Result};
use crate::exact_linalg::{minkowski_reduce, reduce_small, short_vectors, IntMatrix, RealSymMatrix};
use crate::lattice_forms::{automorphisms_in, enumerate_forms, HalfIntegralForm};
use crate::small::{CMat, IMat, RMat};
use crate::special::{ln_gamma, ComplexSum};
use crate::subgroup::{sym_index_pairs, DualLatticeDescriptor, GroupDescriptor};
use crate::symplectic::{enumerate_cosets, SiegelPoint, SmallSymplectic, SymplecticElement};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

const TWO_PI: f64 = 2.0 * PI;
/// Share of the Gaussian decay spent on the theta bound of a unit tail.
const TAIL_SPLIT: f64 = 0.25;

/// The normalising constants `a_{n,k}`, `b_{n,k}` and `c_{n,k}` in log scale.
///
/// `b = |b|·i^q` with `q = nk mod 4`; `a` and `c` are positive. They satisfy
/// `c⁻¹·b = a·(2i)^{nk}`, which ties the Fourier and geometric forms of the
/// Bergman kernel together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectralConstants {
    pub degree: usize,
    pub weight: u32,
    pub log_a: f64,
    pub log_b: f64,
    pub b_quarter_turns: u32,
    pub log_c: f64,
}

impl SpectralConstants {
    pub fn a(&self) -> f64 {
        self.log_a.exp()
    }

    pub fn b(&self) -> Complex64 {
        Complex64::i().powu(self.b_quarter_turns) * self.log_b.exp()
    }

    pub fn c(&self) -> f64 {
        self.log_c.exp()
    }
}

/// `log Γ_n(s)` with `Γ_n(s) = π^{n(n−1)/4} ∏_{j<n} Γ(s − j/2)`.
pub fn log_gamma_n(n: usize, s: f64) -> Result<f64> {
    let mut acc = (n * n.saturating_sub(1)) as f64 / 4.0 * PI.ln();
    for j in 0..n {
        let x = s - j as f64 / 2.0;
        if x <= 0.0 {
            return Err(Error::Domain(format!("Γ has a pole or negative argument at {x}")));
        }
        acc += ln_gamma(x);
    }
    Ok(acc)
}

/// `log Γ(x)/Γ(x − h)`, exact up to rounding when `h` is a whole number.
fn ln_gamma_ratio(x: f64, h: f64) -> f64 {
    if h.fract() == 0.0 && h <= 64.0 {
        (1..=h as u32).map(|j| (x - f64::from(j)).ln()).sum()
    } else {
        ln_gamma(x) - ln_gamma(x - h)
    }
}

/// `a_{n,k} = 2^{−n(n+3)/2} π^{−n(n+1)/2} ∏_{v=1}^n Γ(k−(v−1)/2)/Γ(k−(v+n)/2)`,
/// `b_{n,k} = (2√π)^{n(n−1)/2} (−2πi)^{−nk} ∏_{ν<n} Γ(k−ν/2)`,
/// `c_{n,k} = (4π)^{n(n+1)/2−nk} Γ_n(k−(n+1)/2)`.
pub fn constants(n: usize, k: u32) -> Result<SpectralConstants> {
    if n == 0 {
        return Err(Error::Structural("degree must be positive".into()));
    }
    let (nf, kf) = (n as f64, f64::from(k));
    if kf <= nf {
        return Err(Error::Domain(format!("weight {k} puts a Γ factor at a pole for degree {n}")));
    }
    let mut log_a = -nf * (nf + 3.0) / 2.0 * LN_2 - nf * (nf + 1.0) / 2.0 * PI.ln();
    for v in 1..=n {
        let v = v as f64;
        log_a += ln_gamma_ratio(kf - (v - 1.0) / 2.0, (nf + 1.0) / 2.0);
    }
    let mut log_b = nf * (nf - 1.0) / 2.0 * (2.0 * PI.sqrt()).ln() - nf * kf * TWO_PI.ln();
    for nu in 0..n {
        log_b += ln_gamma(kf - nu as f64 / 2.0);
    }
    // (−2πi)^{−1} = i/(2π).
    let b_quarter_turns = ((n as u64 * u64::from(k)) % 4) as u32;
    let log_c = (nf * (nf + 1.0) / 2.0 - nf * kf) * (4.0 * PI).ln() + log_gamma_n(n, kf - (nf + 1.0) / 2.0)?;
    Ok(SpectralConstants { degree: n, weight: k, log_a, log_b, b_quarter_turns, log_c })
}

/// `dim S_k(Sp_n(ℤ))` for even `k` and `n ∈ {1, 2}`, from the generators of
/// weights 4, 6 (and 10, 12 for n = 2) and surjectivity of the Siegel Φ map.
pub fn level_one_cusp_dimension(n: usize, k: u32) -> Option<u64> {
    if k % 2 == 1 {
        return None;
    }
    // Monomials of total weight k in generators of the given weights.
    fn count(k: u32, gens: &[u32]) -> u64 {
        match gens.split_first() {
            None => u64::from(k == 0),
            Some((&g, rest)) => (0..=k / g).map(|i| count(k - i * g, rest)).sum(),
        }
    }
    let elliptic = count(k, &[4, 6]);
    match n {
        1 => Some(elliptic.saturating_sub(1)),
        2 if k < 4 => Some(0),
        2 => Some(count(k, &[4, 6, 10, 12]) - elliptic),
        _ => None,
    }
}

/// Whether truncation shortfalls are reported or raised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMode {
    /// Tail estimates are returned alongside values.
    #[default]
    Standard,
    /// A tail estimate above `tail_tol·|value|` is a parameter error.
    Strict,
}

/// Cutoffs shared by every evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct TruncationParams {
    /// Height `H` handed to [`enumerate_cosets`].
    pub coset_height: u64,
    /// Fixed `tr(TY)` bound for `T`-sums; chosen from the tail envelope when absent.
    pub lattice_trace_bound: Option<f64>,
    /// Points per coordinate of the quadrature grid.
    pub quadrature_grid: usize,
    pub tail_tol: f64,
    /// Largest modulus in degree-one `c`-sums.
    pub c_max: u64,
    pub precision: PrecisionMode,
    /// Height `y₀` of the horizontal slice used for Fourier coefficients.
    pub y0: Option<f64>,
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self::for_degree(1)
    }
}

impl TruncationParams {
    pub fn for_degree(n: usize) -> Self {
        Self {
            coset_height: if n == 1 { 40 } else { 2 },
            lattice_trace_bound: None,
            quadrature_grid: if n == 1 { 32 } else { 8 },
            tail_tol: 1e-10,
            c_max: 2000,
            precision: PrecisionMode::Standard,
            y0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Parameter(format!("{what} must be positive")));
        if self.quadrature_grid == 0 {
            return bad("quadrature grid");
        }
        if !(self.tail_tol > 0.0) {
            return bad("tail tolerance");
        }
        if self.c_max == 0 {
            return bad("cMax");
        }
        if let Some(b) = self.lattice_trace_bound {
            if !(b > 0.0) {
                return bad("lattice trace bound");
            }
        }
        if let Some(y) = self.y0 {
            if !(y > 0.0) {
                return bad("y0");
            }
        }
        Ok(())
    }

    /// Every cutoff doubled and the tolerance tightened a hundredfold.
    pub fn doubled(&self) -> Self {
        Self {
            coset_height: self.coset_height * 2,
            lattice_trace_bound: self.lattice_trace_bound.map(|b| 2.0 * b),
            quadrature_grid: self.quadrature_grid * 2,
            tail_tol: self.tail_tol / 100.0,
            c_max: self.c_max * 2,
            precision: self.precision,
            y0: self.y0,
        }
    }

    fn ln_tol(&self) -> f64 {
        self.tail_tol.ln()
    }

    fn enforce(&self, what: &str, value: f64, tail: f64) -> Result<()> {
        if self.precision == PrecisionMode::Strict && tail > self.tail_tol * value.abs().max(1e-300) {
            return Err(Error::Parameter(format!("{what}: tail estimate {tail:.3e} exceeds tolerance")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct ClassTerm {
    g: SmallSymplectic,
    height: u64,
}

/// Representatives of `Γ_{0,∞}\Γ` up to a height, one per translation offset.
#[derive(Debug, Clone)]
pub struct CosetSystem {
    group: GroupDescriptor,
    height: u64,
    terms: Vec<ClassTerm>,
    minus_one: bool,
    index: f64,
}

impl CosetSystem {
    pub fn new(group: &GroupDescriptor, height: u64) -> Result<Self> {
        let n = group.degree();
        if !(1..=2).contains(&n) {
            return Err(Error::Capability(format!("coset sums for degree {n}")));
        }
        let mut terms = Vec::new();
        for class in enumerate_cosets(group, height)? {
            for s in &class.offsets {
                let g = SymplecticElement::translation(s)?.mul(&class.representative);
                let g = g
                    .to_small()
                    .ok_or_else(|| Error::Capability("coset representative exceeds machine integers".into()))?;
                terms.push(ClassTerm { g, height: class.height });
            }
        }
        Ok(Self {
            group: group.clone(),
            height,
            terms,
            minus_one: group.contains_minus_one(),
            index: group.translation_index() as f64,
        })
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn degree(&self) -> usize {
        self.group.degree()
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `1/2` when `−1 ∈ Γ`, since the unit sum then meets every element twice.
    pub fn symmetry_weight(&self) -> f64 {
        if self.minus_one {
            0.5
        } else {
            1.0
        }
    }

    /// `|𝒮_Γ| = [Sym_n(ℤ) : 𝒮_Γ]`.
    pub fn translation_index(&self) -> f64 {
        self.index
    }
}

/// `λ_min(D^{−1/2} G D^{−1/2})` with `D = diag G`: `G[v] ≥ ratio·Σ g_ii v_i²`.
fn diagonal_ratio(g: &RMat) -> f64 {
    let n = g.n;
    let mut m = RMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, g.get(i, j) / (g.get(i, i) * g.get(j, j)).sqrt());
        }
    }
    m.min_eigenvalue()
}

/// `Σ_{m∈ℤ} e^{−a m²}`.
fn theta1(a: f64) -> f64 {
    let mut s = 1.0;
    let mut m = 1.0_f64;
    loop {
        let t = (-a * m * m).exp();
        s += 2.0 * t;
        if t < 1e-18 * s {
            return s;
        }
        m += 1.0;
    }
}

/// Upper bound for `Σ_{V ∈ ℤ^{n×n}} e^{−a·Σ_j v_jᵗ G v_j}`.
fn theta_matrix_bound(g: &RMat, a: f64) -> f64 {
    let n = g.n;
    let r = diagonal_ratio(g);
    (0..n).map(|i| theta1(a * r * g.get(i, i))).product::<f64>().powi(n as i32)
}

/// All `V ∈ GL_n(ℤ)`, `n ≤ 2`, with `tr(Q·VᵗGV) ≤ bound`, and that value.
fn units_below(g: &RMat, q: &RMat, bound: f64) -> Vec<(IMat, f64)> {
    let value = |v: &IMat| q.trace_mul(&g.congruence(&RMat::from_int(v)));
    if !(bound > 0.0) {
        return Vec::new();
    }
    match g.n {
        1 => {
            let val = q.get(0, 0) * g.get(0, 0);
            if val <= bound {
                vec![(IMat::identity(1), val), (IMat::from_slice(1, &[-1]), val)]
            } else {
                Vec::new()
            }
        }
        2 => {
            // tr(Q·VᵗGV) ≥ λ_min(Q)·(G[v₁] + G[v₂]).
            let col_bound = bound / q.min_eigenvalue();
            let mut cols: Vec<([i64; 3], f64)> = Vec::new();
            for (v, val) in short_vectors(g, col_bound) {
                cols.push((v, val));
                cols.push(([-v[0], -v[1], 0], val));
            }
            cols.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            let mut out = Vec::new();
            for (a, qa) in &cols {
                for (b, qb) in &cols {
                    if qa + qb > col_bound * (1.0 + 1e-12) {
                        break;
                    }
                    if (a[0] * b[1] - a[1] * b[0]).abs() != 1 {
                        continue;
                    }
                    let v = IMat::from_slice(2, &[a[0], b[0], a[1], b[1]]);
                    let val = value(&v);
                    if val <= bound {
                        out.push((v, val));
                    }
                }
            }
            out
        }
        n => unreachable!("unit shells for degree {n}"),
    }
}

/// `tr(T·Z)` for real `T` and complex `Z`.
fn ctrace(t: &RMat, z: &CMat) -> Complex64 {
    let n = t.n;
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += z.get(j, i) * t.get(i, j);
        }
    }
    s
}

fn polar(ln_mag: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(ln_mag.exp(), phase)
}

fn reduce_point_im(w: &CMat) -> Result<(RMat, IMat, CMat)> {
    let (yr, v0) =
        reduce_small(&w.im()).ok_or_else(|| Error::Precision("reduction of Im γ⟨Z⟩ lost positivity".into()))?;
    let wr = w.congruence(&v0.to_complex());
    Ok((yr, v0, wr))
}

/// A value with its a posteriori tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail: f64,
    /// Number of `(γ, V)` terms actually summed.
    pub terms: usize,
}

struct ClassOut {
    value: Complex64,
    tail: f64,
    height: u64,
    terms: usize,
}

/// Ratio of everything beyond height `H` to the shell at `H`: about
/// `h^{n(n+1)−1}` classes of size `h^{−nk}` sit at height `h`.
fn shell_factor(n: usize, k: u32, height: u64) -> f64 {
    let excess = (n as f64) * f64::from(k) - (n * (n + 1)) as f64;
    1.0 + height as f64 / excess.max(1.0)
}

/// Class-level tails plus the extrapolated outermost height shell.
fn combine(outs: Vec<ClassOut>, height: u64, weight: f64, shell: f64) -> SeriesValue {
    let value: ComplexSum = outs.iter().map(|o| o.value).collect();
    let mut tail = 0.0;
    let mut terms = 0;
    for o in &outs {
        tail += o.tail;
        terms += o.terms;
        if o.height == height && height > 0 {
            tail += shell * o.value.norm();
        }
    }
    SeriesValue { value: value.value() * weight, tail: tail * weight, terms }
}

fn check_weight(n: usize, k: u32) -> Result<()> {
    if u64::from(k) <= 2 * n as u64 + 1 {
        return Err(Error::Convergence(format!("weight {k} ≤ 2n+1 = {}: the series does not converge", 2 * n + 1)));
    }
    Ok(())
}

fn check_form(group: &GroupDescriptor, t: &HalfIntegralForm) -> Result<()> {
    if t.degree() != group.degree() {
        return Err(Error::Structural("form and group have different degrees".into()));
    }
    if !t.is_positive() {
        return Err(Error::Domain("T must be positive definite".into()));
    }
    if !t.in_dual(&group.dual_lattice()) {
        return Err(Error::Domain("T is not in the dual of the translation lattice".into()));
    }
    Ok(())
}

/// `P_T(Z)·e^{2π s₀}` summed class by class.
struct PoincareKernel<'a> {
    sys: &'a CosetSystem,
    t: RMat,
    lam_t: f64,
    k: u32,
    ln_tol: f64,
    full_units: bool,
}

impl<'a> PoincareKernel<'a> {
    fn new(sys: &'a CosetSystem, t: &HalfIntegralForm, k: u32, trunc: &TruncationParams) -> Self {
        Self {
            sys,
            t: t.to_small(),
            lam_t: t.min_eigenvalue(),
            k,
            ln_tol: trunc.ln_tol(),
            full_units: sys.group.level() == 1,
        }
    }

    fn class(&self, term: &ClassTerm, z: &CMat, s0: f64) -> Result<ClassOut> {
        let kf = f64::from(self.k);
        let (w, j) = term.g.act(z).ok_or_else(|| Error::Precision("singular CZ + D".into()))?;
        let (yr, v0, wr) = reduce_point_im(&w)?;
        let ln_w0 = -kf * j.norm().ln() + TWO_PI * s0;
        // For q(V) > q_max: e^{−2πq} ≤ e^{−2π(1−δ)q_max}·e^{−2πδq}, and
        // Σ_V e^{−2πδ q(V)} is bounded by a product of theta values.
        let theta = theta_matrix_bound(&yr, TWO_PI * TAIL_SPLIT * self.lam_t);
        let keep = TWO_PI * (1.0 - TAIL_SPLIT);
        // q(V) ≥ λ_min(T)·tr Y' for every invertible V when Y' is reduced.
        let q_min = self.lam_t * yr.trace();
        let ln_class_max = ln_w0 - keep * q_min + theta.ln();
        if ln_class_max < self.ln_tol {
            return Ok(ClassOut { value: Complex64::new(0.0, 0.0), tail: ln_class_max.exp(), height: term.height, terms: 0 });
        }
        let q_max = (ln_w0 + theta.ln() - self.ln_tol) / keep;
        let phase0 = -kf * j.arg();
        let mut acc = ComplexSum::new();
        let mut terms = 0;
        for (vp, _) in units_below(&yr, &self.t, q_max) {
            let v = v0.mul(&vp);
            if !self.full_units && !self.sys.group.contains_unit(&v) {
                continue;
            }
            let tr = ctrace(&self.t, &wr.congruence(&vp.to_complex()));
            let sign = if v.det() < 0 && self.k % 2 == 1 { PI } else { 0.0 };
            acc.add(polar(ln_w0 - TWO_PI * tr.im, phase0 + TWO_PI * tr.re + sign));
            terms += 1;
        }
        let tail = (ln_w0 - keep * q_max).exp() * theta;
        Ok(ClassOut { value: acc.value(), tail, height: term.height, terms })
    }

    fn sum(&self, z: &CMat, s0: f64, parallel: bool) -> Result<SeriesValue> {
        let outs: Result<Vec<ClassOut>> = if parallel {
            self.sys.terms.par_iter().map(|c| self.class(c, z, s0)).collect()
        } else {
            self.sys.terms.iter().map(|c| self.class(c, z, s0)).collect()
        };
        let shell = shell_factor(self.sys.degree(), self.k, self.sys.height);
        Ok(combine(outs?, self.sys.height, self.sys.symmetry_weight(), shell))
    }
}

/// `P_{T;Γ}(Z) = Σ_{γ ∈ Γ_∞\Γ} J(γ,Z)^{−k} e(tr(T·γ⟨Z⟩))` on a prepared coset system.
pub fn poincare_eval_in(
    sys: &CosetSystem,
    t: &HalfIntegralForm,
    k: u32,
    z: &SiegelPoint,
    trunc: &TruncationParams,
) -> Result<SeriesValue> {
    trunc.validate()?;
    check_weight(sys.degree(), k)?;
    check_form(&sys.group, t)?;
    if z.degree() != sys.degree() {
        return Err(Error::Structural("point and group have different degrees".into()));
    }
    let s0 = t.trace_with(z.y());
    let scaled = PoincareKernel::new(sys, t, k, trunc).sum(&z.to_cmat(), s0, true)?;
    let f = (-TWO_PI * s0).exp();
    let out = SeriesValue { value: scaled.value * f, tail: scaled.tail * f, terms: scaled.terms };
    trunc.enforce("Poincaré series", out.value.norm(), out.tail)?;
    Ok(out)
}

pub fn poincare_eval(
    group: &GroupDescriptor,
    t: &HalfIntegralForm,
    k: u32,
    z: &SiegelPoint,
    trunc: &TruncationParams,
) -> Result<SeriesValue> {
    let sys = CosetSystem::new(group, trunc.coset_height)?;
    poincare_eval_in(&sys, t, k, z, trunc)
}

/// A Fourier coefficient extracted by quadrature on the slice `Y = y₀·1_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FourierCoefficient {
    pub value: f64,
    pub imag_residual: f64,
    /// Truncation tail plus `rounding`.
    pub tail: f64,
    /// One ulp of the largest scaled sample.
    pub rounding: f64,
    pub y0: f64,
    pub grid: usize,
}

/// Slice height balancing `|J|^{−k} ≈ y₀^{−k}` against the amplification
/// `e^{2π y₀ tr T′}`, floored at `1.5·ω`.
pub fn default_y0(k: u32, t_prime: &HalfIntegralForm, omega: u64) -> f64 {
    (1.5 * omega as f64).max(f64::from(k) / (TWO_PI * t_prime.trace()))
}

/// `p_T(T′) = |𝒮_Γ|⁻¹ ∫ P_T(X + iY₀) e(−tr T′X) dX · e^{2π tr T′Y₀}`, with the
/// integral replaced by the mean over a uniform grid on the box of widths.
pub fn poincare_fourier_coeff_in(
    sys: &CosetSystem,
    t: &HalfIntegralForm,
    t_prime: &HalfIntegralForm,
    k: u32,
    trunc: &TruncationParams,
) -> Result<FourierCoefficient> {
    trunc.validate()?;
    let n = sys.degree();
    check_weight(n, k)?;
    check_form(&sys.group, t)?;
    check_form(&sys.group, t_prime)?;
    let cusp = sys.group.cusp_width_config();
    let pairs = sym_index_pairs(n);
    let m = trunc.quadrature_grid;
    let max_freq = pairs
        .iter()
        .map(|&(i, j)| {
            let f = t_prime.get(i, j) * cusp.widths[i][j] as f64 * if i == j { 1.0 } else { 2.0 };
            f.abs().round() as usize
        })
        .max()
        .unwrap_or(0);
    if m <= 2 * max_freq {
        return Err(Error::Parameter(format!(
            "quadrature grid {m} aliases frequency {max_freq}; need more than {}",
            2 * max_freq
        )));
    }
    let y0 = trunc.y0.unwrap_or_else(|| default_y0(k, t_prime, cusp.omega));
    let s0 = y0 * t_prime.trace();
    let kernel = PoincareKernel::new(sys, t, k, trunc);
    let tp = t_prime.to_small();
    let total = m.pow(pairs.len() as u32);
    let samples: Result<Vec<(Complex64, f64)>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut x = RMat::zeros(n);
            let mut rest = idx;
            for &(i, j) in &pairs {
                let v = cusp.widths[i][j] as f64 * (rest % m) as f64 / m as f64;
                rest /= m;
                x.set(i, j, v);
                x.set(j, i, v);
            }
            let z = CMat::from_parts(&x, &RMat::identity(n).scale(y0));
            let p = kernel.sum(&z, s0, false)?;
            let phase = Complex64::from_polar(1.0, -TWO_PI * tp.trace_mul(&x));
            Ok((p.value * phase, p.tail))
        })
        .collect();
    let samples = samples?;
    let mean: ComplexSum = samples.iter().map(|s| s.0).collect();
    let mean = mean.value() / total as f64;
    // Samples carry the factor e^{2π tr(T′)y₀}; cancellation in the mean
    // cannot resolve anything below one ulp of the largest sample.
    let rounding = f64::EPSILON * samples.iter().fold(0.0_f64, |a, s| a.max(s.0.norm()));
    let tail = samples.iter().map(|s| s.1).sum::<f64>() / total as f64 + rounding;
    let out = FourierCoefficient { value: mean.re, imag_residual: mean.im.abs(), tail, rounding, y0, grid: m };
    // Unconjugated families are stable under X ↦ −X, so their coefficients are real.
    if sys.group.conjugator().is_none() && out.imag_residual > (1e-6_f64).max(10.0 * tail) * out.value.abs().max(1.0) {
        return Err(Error::Parameter(format!(
            "imaginary residual {:.3e} signals aliasing; refine the grid",
            out.imag_residual
        )));
    }
    trunc.enforce("Fourier coefficient", out.value, out.tail)?;
    Ok(out)
}

pub fn poincare_fourier_coeff(
    group: &GroupDescriptor,
    t: &HalfIntegralForm,
    t_prime: &HalfIntegralForm,
    k: u32,
    trunc: &TruncationParams,
) -> Result<FourierCoefficient> {
    let sys = CosetSystem::new(group, trunc.coset_height)?;
    poincare_fourier_coeff_in(&sys, t, t_prime, k, trunc)
}

/// One positive `T` with `s·log det T` and `tr(TY)` precomputed.
#[derive(Debug, Clone, Copy)]
struct FormRow {
    t: RMat,
    s_ln_det: f64,
    tr_y: f64,
}

fn form_rows(lattice: &DualLatticeDescriptor, y: &RealSymMatrix, bound: f64, s: f64) -> Result<Vec<FormRow>> {
    let forms = enumerate_forms(lattice, y, bound)?;
    Ok(forms
        .forms
        .iter()
        .map(|t| FormRow { t: t.to_small(), s_ln_det: s * t.det().ln(), tr_y: t.trace_with(y) })
        .collect())
}

/// `Σ_T exp(shift + s log det T) e(tr(T·W))`.
fn form_exp_sum(rows: &[FormRow], w: &CMat, shift: f64) -> Complex64 {
    let acc: ComplexSum = rows
        .iter()
        .map(|r| {
            let tr = ctrace(&r.t, w);
            polar(shift + r.s_ln_det - TWO_PI * tr.im, TWO_PI * tr.re)
        })
        .collect();
    acc.value()
}

fn lcm_denominator(lattice: &DualLatticeDescriptor) -> f64 {
    lattice.denominators.iter().flatten().fold(1u64, |a, &b| num_integer::lcm(a, b)) as f64
}

/// Log of an upper bound for `Σ_{T>0, tr(TY) > b} det T^s e^{−2π tr(TY)}`.
///
/// On the shell `tr(TY) ∈ [m, m+1)`: `det T ≤ ((m+1)/n)^n / det Y` by AM–GM
/// applied to `Y^{1/2}TY^{1/2}`, and at most `(2·den·(m+1)/λ_min(Y) + 1)^d`
/// grid points satisfy `tr(TY) ≤ m+1`.
fn ln_form_tail(n: usize, s: f64, y: &RealSymMatrix, den: f64, b: f64) -> f64 {
    let nf = n as f64;
    let d = (n * (n + 1) / 2) as f64;
    let lam = y.min_eigenvalue();
    let ln_det_y = y.det().ln();
    let mut logs = Vec::new();
    let mut m = b.floor().max(0.0);
    let mut best = f64::NEG_INFINITY;
    loop {
        let t1 = m + 1.0;
        let l = d * (2.0 * den * t1 / lam + 1.0).ln() + nf * s * (t1 / nf).ln() - s * ln_det_y - TWO_PI * m;
        best = best.max(l);
        logs.push(l);
        if (m > b + 5.0 && l < best - 46.0) || m > b + 1e5 {
            break;
        }
        m += 1.0;
    }
    best + logs.iter().map(|l| (l - best).exp()).sum::<f64>().ln()
}

/// Smallest bound `b` (on a geometric ladder) whose tail envelope is below `ln_target`.
fn trace_bound_for(n: usize, s: f64, y: &RealSymMatrix, den: f64, ln_target: f64) -> Result<f64> {
    let mut b = (n as f64 * s / TWO_PI).max(1.0);
    while ln_form_tail(n, s, y, den, b) > ln_target {
        b *= 1.15;
        if b > 1e4 {
            return Err(Error::Convergence("lattice trace bound exceeds 1e4".into()));
        }
    }
    Ok(b)
}

/// `Σ_T det T^s e(tr(TZ))·e^{shift}` with a self-consistent tail envelope.
fn adaptive_form_sum(
    lattice: &DualLatticeDescriptor,
    z: &SiegelPoint,
    s: f64,
    shift: f64,
    trunc: &TruncationParams,
) -> Result<(Complex64, f64, usize)> {
    let n = z.degree();
    let den = lcm_denominator(lattice);
    let w = z.to_cmat();
    let mut b = trunc.lattice_trace_bound.unwrap_or((n as f64 * s / TWO_PI).max(1.0) * 1.5 + 2.0);
    loop {
        let rows = form_rows(lattice, z.y(), b, s)?;
        let sum = form_exp_sum(&rows, &w, shift);
        let tail = (shift + ln_form_tail(n, s, z.y(), den, b)).exp();
        if trunc.lattice_trace_bound.is_some() || tail <= trunc.tail_tol * 1e-2 * sum.norm() || b > 1e3 {
            return Ok((sum, tail, rows.len()));
        }
        b *= 1.3;
    }
}

/// Both sides of `Σ_{S∈𝒮_Γ} det(Z+S)^{−k} = b⁻¹|𝒮_Γ|⁻¹ Σ_{T∈Λ_Γ} det T^{k−(n+1)/2} e(tr TZ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzPair {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub lhs_tail: f64,
    pub rhs_tail: f64,
    /// Half-width of the box of lattice coordinates summed on the left.
    pub box_radius: u64,
    pub forms: usize,
}

impl LipschitzPair {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).norm() / self.lhs.norm()
    }
}

fn lattice_coordinates(lattice: &DualLatticeDescriptor) -> Result<(Vec<RMat>, f64)> {
    let n = lattice.degree;
    let pairs = sym_index_pairs(n);
    let mut coords = Vec::new();
    let mut mats = Vec::new();
    for g in &lattice.generators {
        let v = g.to_i64_vec().ok_or_else(|| Error::Capability("lattice generator too large".into()))?;
        coords.extend(pairs.iter().map(|&(i, j)| v[i * n + j]));
        mats.push(RMat::from_int(&IMat::from_slice(n, &v)));
    }
    let d = pairs.len();
    if mats.len() != d {
        return Err(Error::Structural("translation lattice basis has the wrong rank".into()));
    }
    let index = IntMatrix::from_i64(d, d, &coords)?.det()?;
    let index: f64 = index.to_string().parse::<f64>().map_err(|e| Error::Precision(e.to_string()))?;
    Ok((mats, index.abs()))
}

/// `Σ det(Z + S)^{−k}` over `S = Σ m_i G_i`, `|m_i| ≤ r`.
fn lattice_box_sum(gens: &[RMat], z: &CMat, k: u32, r: i64) -> Complex64 {
    let d = gens.len();
    let side = (2 * r + 1) as usize;
    let inner = side.pow(d as u32 - 1);
    let rows: Vec<Complex64> = (0..side)
        .into_par_iter()
        .map(|first| {
            let mut acc = ComplexSum::new();
            for idx in 0..inner {
                let mut w = *z;
                let mut rest = idx;
                let mut coeff = vec![first as i64 - r];
                for _ in 1..d {
                    coeff.push((rest % side) as i64 - r);
                    rest /= side;
                }
                for (c, g) in coeff.iter().zip(gens) {
                    if *c != 0 {
                        w = w.add(&CMat::from_real(&g.scale(*c as f64)));
                    }
                }
                acc.add(w.det().inv().powu(k));
            }
            acc.value()
        })
        .collect();
    rows.into_iter().collect::<ComplexSum>().value()
}

pub fn lipschitz_pair(
    lattice: &DualLatticeDescriptor,
    k: u32,
    z: &SiegelPoint,
    trunc: &TruncationParams,
) -> Result<LipschitzPair> {
    trunc.validate()?;
    let n = lattice.degree;
    if z.degree() != n {
        return Err(Error::Structural("point and lattice have different degrees".into()));
    }
    if (k as usize) <= n {
        return Err(Error::Convergence(format!("Σ det(Z+S)^−k diverges for k = {k} ≤ n = {n}")));
    }
    let consts = constants(n, k)?;
    let (gens, index) = lattice_coordinates(lattice)?;
    let w = z.to_cmat();
    // Successive dyadic differences shrink geometrically once the box is
    // large; their observed ratio extrapolates the tail.
    let r_max: i64 = match n {
        1 => 1 << 20,
        2 => 64,
        _ => 8,
    };
    let mut r = 8;
    let mut prev = lattice_box_sum(&gens, &w, k, 4);
    let mut prev_diff = (prev - lattice_box_sum(&gens, &w, k, 2)).norm();
    let (lhs, lhs_tail) = loop {
        let cur = lattice_box_sum(&gens, &w, k, r);
        let diff = (cur - prev).norm();
        let ratio = if prev_diff > 0.0 { (diff / prev_diff).min(0.9) } else { 0.5 };
        let tail = diff * ratio / (1.0 - ratio);
        if tail <= 1e-2 * trunc.tail_tol * cur.norm() || r >= r_max {
            break (cur, tail);
        }
        prev = cur;
        prev_diff = diff;
        r *= 2;
    };
    let s = f64::from(k) - (n as f64 + 1.0) / 2.0;
    let shift = -consts.log_b - index.ln();
    let (sum, rhs_tail, forms) = adaptive_form_sum(lattice, z, s, shift, trunc)?;
    // b⁻¹ = |b|⁻¹·i^{−q}.
    let rhs = sum * Complex64::i().powu((4 - consts.b_quarter_turns) % 4);
    trunc.enforce("Lipschitz sum", lhs.norm(), lhs_tail)?;
    Ok(LipschitzPair { lhs, rhs, lhs_tail, rhs_tail, box_radius: r as u64, forms })
}

/// The normalisation applied to the kernel diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BergmanNormalization {
    /// `det(Y)^k Σ_F |F(Z)|²` over an orthonormal basis.
    #[default]
    Kernel,
    /// The kernel multiplied once more by `a_{n,k}/2`.
    ExtraHalfA,
}

/// `𝔹_{k,Γ}(Z)` with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BergmanValue {
    pub value: f64,
    pub imag_residual: f64,
    pub tail: f64,
    pub pairs: usize,
    pub forms: usize,
    pub trace_bound: f64,
}

/// Reusable evaluator of `𝔹_{k,Γ}` at many points.
#[derive(Debug, Clone)]
pub struct BergmanEvaluator {
    sys: CosetSystem,
    k: u32,
    consts: SpectralConstants,
    trunc: TruncationParams,
    normalization: BergmanNormalization,
    dual: DualLatticeDescriptor,
}

impl BergmanEvaluator {
    pub fn new(group: &GroupDescriptor, k: u32, trunc: &TruncationParams) -> Result<Self> {
        trunc.validate()?;
        let n = group.degree();
        if u64::from(k) < 2 * n as u64 + 2 {
            return Err(Error::Domain(format!("weight {k} below 2n+2 = {}", 2 * n + 2)));
        }
        let sys = CosetSystem::new(group, trunc.coset_height)?;
        Ok(Self {
            consts: constants(n, k)?,
            dual: group.dual_lattice(),
            sys,
            k,
            trunc: trunc.clone(),
            normalization: BergmanNormalization::Kernel,
        })
    }

    pub fn with_normalization(mut self, normalization: BergmanNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn constants(&self) -> &SpectralConstants {
        &self.consts
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.sys.group
    }

    /// `det(Y)^k c⁻¹|𝒮_Γ|⁻¹ Σ_T det T^{k−(n+1)/2} P_T(Z) e(−tr T Z̄)`, with the
    /// `T`-sum moved inside the coset sum: each `(γ, V)` contributes
    /// `det V^k J(γ,Z)^{−k} Σ_T det T^s e(tr T(W − Z̄))`, `W = Vᵗγ⟨Z⟩V`.
    pub fn eval(&self, z: &SiegelPoint) -> Result<BergmanValue> {
        let n = self.sys.degree();
        if z.degree() != n {
            return Err(Error::Structural("point and group have different degrees".into()));
        }
        let kf = f64::from(self.k);
        let s = kf - (n as f64 + 1.0) / 2.0;
        let y = z.y();
        let ln_det_y = y.det().ln();
        let ln_tol = self.trunc.ln_tol();
        let ln_index = self.sys.index.ln();
        let mut ln_pref = kf * ln_det_y - self.consts.log_c - ln_index + self.sys.symmetry_weight().ln();
        if self.normalization == BergmanNormalization::ExtraHalfA {
            ln_pref += self.consts.log_a - LN_2;
        }
        let den = lcm_denominator(&self.dual);
        // Each pair's T-tail is at most det(Y)^k c⁻¹|𝒮|⁻¹ times the envelope at Y.
        let ln_t_scale = kf * ln_det_y - self.consts.log_c - ln_index;
        let bound = match self.trunc.lattice_trace_bound {
            Some(b) => b,
            None => trace_bound_for(n, s, y, den, ln_tol + self.consts.log_a - ln_t_scale)?,
        };
        let rows = form_rows(&self.dual, y, bound, s)?;
        let mut suffix = vec![f64::NEG_INFINITY; rows.len() + 1];
        for i in (0..rows.len()).rev() {
            suffix[i] = suffix[i + 1].max(rows[i].s_ln_det - TWO_PI * rows[i].tr_y);
        }
        let ys = y.to_small();
        let y_inv = ys.inverse().ok_or_else(|| Error::Precision("Y is singular".into()))?;
        let zm = z.to_cmat();
        let zbar = CMat::from_parts(&zm.re(), &ys.scale(-1.0));
        let ctx = PairContext {
            k: self.k,
            n,
            ln_det_y,
            ys,
            y_inv,
            zbar,
            rows: &rows,
            suffix: &suffix,
            ln_pref,
            ln_floor: ln_tol + self.consts.log_a - ((rows.len() + 1) as f64).ln(),
            ln_tol,
            // Σ_S [det A/|det(X + S + iA)|]^k counts about 1 + 2a√(2π/k) translates
            // per coordinate when A's entries are of size a.
            ln_mult: (n * (n + 1) / 2) as f64 * (1.0 + 4.0 * ys.trace() * (TWO_PI / kf).sqrt()).ln(),
            full_units: self.sys.group.level() == 1,
            group: &self.sys.group,
        };
        let outs: Result<Vec<ClassOut>> = self.sys.terms.par_iter().map(|c| ctx.class(c, &zm)).collect();
        let outs = outs?;
        let total = combine(outs, self.sys.height, 1.0, shell_factor(n, self.k, self.sys.height));
        let t_tail = (ln_t_scale + ln_form_tail(n, s, y, den, bound)).exp() * total.terms.max(1) as f64;
        let tail = total.tail + t_tail;
        let out = BergmanValue {
            value: total.value.re,
            imag_residual: total.value.im.abs(),
            tail,
            pairs: total.terms,
            forms: rows.len(),
            trace_bound: bound,
        };
        let floor = tail + out.imag_residual + 1e-8 * self.consts.a();
        if out.value < -floor {
            return Err(Error::Convergence(format!(
                "Bergman kernel came out negative ({:.3e}); truncation failed",
                out.value
            )));
        }
        self.trunc.enforce("Bergman kernel", out.value, out.tail)?;
        Ok(out)
    }
}

struct PairContext<'a> {
    k: u32,
    n: usize,
    ln_det_y: f64,
    ys: RMat,
    y_inv: RMat,
    zbar: CMat,
    rows: &'a [FormRow],
    suffix: &'a [f64],
    ln_pref: f64,
    ln_floor: f64,
    ln_tol: f64,
    ln_mult: f64,
    full_units: bool,
    group: &'a GroupDescriptor,
}

impl PairContext<'_> {
    fn class(&self, term: &ClassTerm, z: &CMat) -> Result<ClassOut> {
        let kf = f64::from(self.k);
        let nf = self.n as f64;
        let (w, j) = term.g.act(z).ok_or_else(|| Error::Precision("singular CZ + D".into()))?;
        let ln_j = j.norm().ln();
        let (yr, v0, wr) = reduce_point_im(&w)?;
        // Relative to a_{n,k}, a pair is at most [2^n det Y/(|J| det(Y + Y_V))]^k
        // per lattice translate, and det(Y + Y_V) ≥ det Y·(1 + tr(Y⁻¹Y_V)).
        let ln_cap = nf * LN_2 - ln_j + (self.ln_mult - self.ln_tol) / kf;
        let q_cap = ln_cap.exp() - 1.0;
        let mut acc = ComplexSum::new();
        let mut terms = 0;
        let ln_pair = self.ln_pref - kf * ln_j;
        let phase0 = -kf * j.arg();
        for (vp, _) in units_below(&yr, &self.y_inv, q_cap) {
            let v = v0.mul(&vp);
            if !self.full_units && !self.group.contains_unit(&v) {
                continue;
            }
            let wv = wr.congruence(&vp.to_complex());
            let a = self.ys.add(&wv.im());
            let est = kf * (nf * LN_2 + self.ln_det_y - ln_j - a.det().ln()) + self.ln_mult;
            if est < self.ln_tol {
                continue;
            }
            let diff = wv.sub(&self.zbar);
            let sign = if v.det() < 0 && self.k % 2 == 1 { PI } else { 0.0 };
            for (row, &smax) in self.rows.iter().zip(self.suffix) {
                if ln_pair + smax < self.ln_floor {
                    break;
                }
                let tr = ctrace(&row.t, &diff);
                acc.add(polar(ln_pair + row.s_ln_det - TWO_PI * tr.im, phase0 + TWO_PI * tr.re + sign));
            }
            terms += 1;
        }
        Ok(ClassOut { value: acc.value(), tail: 0.0, height: term.height, terms })
    }
}

pub fn bergman_eval(group: &GroupDescriptor, k: u32, z: &SiegelPoint, trunc: &TruncationParams) -> Result<BergmanValue> {
    BergmanEvaluator::new(group, k, trunc)?.eval(z)
}

/// `det(Y)^k·|𝒮_Γ|⁻¹|b|⁻¹ Σ_T det T^{k−(n+1)/2} e^{−2π tr(TY)}` and its ratio to `k^{n(n+1)/4}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LatticeSumCheck {
    pub value: f64,
    pub ratio: f64,
    pub tail: f64,
    pub forms: usize,
}

/// Minkowski-reducedness test up to relative rounding.
fn is_reduced(y: &RealSymMatrix) -> Result<bool> {
    let (r, _) = minkowski_reduce(y)?;
    let scale = y.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let same_diag = (0..y.dim()).all(|i| (r.get(i, i) - y.get(i, i)).abs() <= 1e-12 * scale);
    let off_ok = (0..y.dim()).all(|i| (0..i).all(|j| 2.0 * y.get(i, j).abs() <= y.get(j, j) * (1.0 + 1e-12)));
    Ok(same_diag && off_ok)
}

pub fn lattice_sum_check(
    group: &GroupDescriptor,
    k: u32,
    y: &RealSymMatrix,
    trunc: &TruncationParams,
) -> Result<LatticeSumCheck> {
    trunc.validate()?;
    let n = group.degree();
    if y.dim() != n {
        return Err(Error::Structural("Y has the wrong size".into()));
    }
    if !is_reduced(y)? {
        return Err(Error::Domain("Y is not Minkowski reduced".into()));
    }
    if y.get(0, 0) < 3f64.sqrt() / 2.0 * (1.0 - 1e-12) {
        return Err(Error::Domain("y₁₁ < √3/2: Y is outside the fundamental domain".into()));
    }
    let consts = constants(n, k)?;
    let kf = f64::from(k);
    let s = kf - (n as f64 + 1.0) / 2.0;
    let index = group.translation_index() as f64;
    let shift = kf * y.det().ln() - consts.log_b - index.ln();
    let z = SiegelPoint::new(RealSymMatrix::zeros(n), y.clone())?;
    let (sum, tail, forms) = adaptive_form_sum(&group.dual_lattice(), &z, s, shift, trunc)?;
    let value = sum.re;
    Ok(LatticeSumCheck { value, ratio: value / kf.powf((n * (n + 1)) as f64 / 4.0), tail, forms })
}

/// `ℳ(Γ; Z) = Σ_{Γ_{0,∞}\Γ} |det(CZ + D)|^{−s}` truncated at a height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MajorantSum {
    pub value: f64,
    /// Geometric extrapolation of the two outermost dyadic height blocks.
    pub tail_trend: f64,
    pub classes: usize,
}

pub fn majorant_sum(group: &GroupDescriptor, s: f64, z: &SiegelPoint, height: u64) -> Result<MajorantSum> {
    let n = group.degree();
    if !(s > n as f64 + 1.0) {
        return Err(Error::Convergence(format!("majorant diverges for s = {s} ≤ n + 1")));
    }
    if z.degree() != n {
        return Err(Error::Structural("point and group have different degrees".into()));
    }
    let sys = CosetSystem::new(group, height)?;
    let zm = z.to_cmat();
    let mut by_height = vec![0.0_f64; height as usize + 1];
    for term in &sys.terms {
        let j = term.g.automorphy(&zm).norm();
        if j < 1.0 - 1e-9 {
            return Err(Error::Domain(format!("|J(γ, Z)| = {j:.6} < 1: Z is outside the fundamental domain")));
        }
        by_height[term.height as usize] += j.powf(-s);
    }
    let value: f64 = crate::special::sum_compensated(&by_height);
    let block = |lo: u64, hi: u64| -> f64 { (lo + 1..=hi).map(|h| by_height[h as usize]).sum() };
    let outer = block(height / 2, height);
    let inner = block(height / 4, height / 2);
    let tail_trend = if inner > 0.0 && outer < inner {
        let r = outer / inner;
        outer * r / (1.0 - r)
    } else {
        outer
    };
    Ok(MajorantSum { value, tail_trend, classes: sys.len() })
}

/// Search grid for [`sup_search`]: points `X + i·y·S` over shapes `S`,
/// real parts `X`, and `y` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridSpec {
    pub shapes: Vec<RealSymMatrix>,
    pub real_parts: Vec<RealSymMatrix>,
    pub y_min: f64,
    pub y_max: f64,
    pub y_steps: usize,
    pub refine_iterations: usize,
}

impl GridSpec {
    /// Default region for weight `k`: `y` from the floor of `ℱ₁` up to `k/4`
    /// for n = 1, and from 1 up to `k/5` for n = 2.
    pub fn for_weight(n: usize, k: u32) -> Self {
        let kf = f64::from(k);
        let sym = |v: &[f64]| RealSymMatrix::new(n, v.to_vec()).expect("symmetric");
        match n {
            1 => Self {
                shapes: vec![sym(&[1.0])],
                real_parts: vec![sym(&[0.0]), sym(&[0.25]), sym(&[0.5])],
                y_min: 3f64.sqrt() / 2.0,
                y_max: (kf / 4.0).max(3.0),
                y_steps: 40,
                refine_iterations: 30,
            },
            _ => Self {
                shapes: vec![sym(&[1.0, 0.0, 0.0, 1.0]), sym(&[1.0, 0.5, 0.5, 1.0]), sym(&[1.0, 0.0, 0.0, 1.5])],
                real_parts: vec![sym(&[0.0, 0.0, 0.0, 0.0]), sym(&[0.5, 0.0, 0.0, 0.0])],
                y_min: 1.0,
                y_max: (kf / 5.0).max(3.0),
                y_steps: 12,
                refine_iterations: 16,
            },
        }
    }

    fn point(&self, shape: usize, real: usize, y: f64) -> Result<SiegelPoint> {
        SiegelPoint::new(self.real_parts[real].clone(), self.shapes[shape].scaled(y))
    }

    fn y_at(&self, i: usize) -> f64 {
        if self.y_steps <= 1 {
            return self.y_min;
        }
        self.y_min + (self.y_max - self.y_min) * i as f64 / (self.y_steps - 1) as f64
    }
}

/// Grid and refined maxima of `𝔹_{k,Γ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupResult {
    pub grid_max: f64,
    pub grid_argmax: SiegelPoint,
    pub refined_max: f64,
    pub refined_argmax: SiegelPoint,
    /// `y` of the refined maximiser, in units of the shape.
    pub argmax_y: f64,
    /// The grid maximum sits on the first or last `y` of the grid.
    pub on_boundary: bool,
    pub tail: f64,
    pub evaluations: usize,
}

pub fn sup_search(evaluator: &BergmanEvaluator, grid: &GridSpec) -> Result<SupResult> {
    if grid.shapes.is_empty() || grid.real_parts.is_empty() || grid.y_steps == 0 || !(grid.y_max >= grid.y_min) {
        return Err(Error::Parameter("empty search grid".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize, 0usize, 0.0);
    let mut evaluations = 0;
    for shape in 0..grid.shapes.len() {
        for real in 0..grid.real_parts.len() {
            for i in 0..grid.y_steps {
                let v = evaluator.eval(&grid.point(shape, real, grid.y_at(i))?)?;
                evaluations += 1;
                if v.value > best.0 {
                    best = (v.value, shape, real, i, v.tail);
                }
            }
        }
    }
    let (grid_max, shape, real, i, mut tail) = best;
    let on_boundary = grid.y_steps > 1 && (i == 0 || i == grid.y_steps - 1);
    let grid_argmax = grid.point(shape, real, grid.y_at(i))?;
    // Golden-section ascent on the bracket around the grid maximiser.
    let (mut lo, mut hi) = (grid.y_at(i.saturating_sub(1)), grid.y_at((i + 1).min(grid.y_steps - 1)));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut f = |y: f64| -> Result<(f64, f64)> {
        evaluations += 1;
        let v = evaluator.eval(&grid.point(shape, real, y)?)?;
        Ok((v.value, v.tail))
    };
    let (mut refined_max, mut argmax_y) = (grid_max, grid.y_at(i));
    if hi > lo {
        let mut a = hi - ratio * (hi - lo);
        let mut b = lo + ratio * (hi - lo);
        let mut fa = f(a)?;
        let mut fb = f(b)?;
        for _ in 0..grid.refine_iterations {
            if fa.0 > fb.0 {
                hi = b;
                b = a;
                fb = fa;
                a = hi - ratio * (hi - lo);
                fa = f(a)?;
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + ratio * (hi - lo);
                fb = f(b)?;
            }
        }
        for (y, (v, t)) in [(a, fa), (b, fb)] {
            if v > refined_max {
                refined_max = v;
                argmax_y = y;
                tail = t;
            }
        }
    }
    Ok(SupResult {
        grid_max,
        grid_argmax,
        refined_max,
        refined_argmax: grid.point(shape, real, argmax_y)?,
        argmax_y,
        on_boundary,
        tail,
        evaluations,
    })
}

/// How nonsingularity of a coefficient matrix was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonsingularity {
    DiagonallyDominant,
    Determinant,
    Indeterminate,
}

/// `M_ij = p_{T_j}(T_i)` with the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PoincareGram {
    pub matrix: Vec<Vec<f64>>,
    pub tails: Vec<Vec<f64>>,
    /// `M_ij·(det T_j/det T_i)^{s/2}` with `s = k − (n+1)/2`, a symmetric matrix.
    pub balanced: Vec<Vec<f64>>,
    pub status: Nonsingularity,
    /// `|det B| / ∏ ‖row_i(B)‖` for the balanced matrix `B`, in `[0, 1]`.
    pub normalized_det: f64,
}

impl PoincareGram {
    pub fn nonsingular(&self) -> bool {
        self.status != Nonsingularity::Indeterminate
    }
}

pub fn poincare_gram_rank(
    group: &GroupDescriptor,
    k: u32,
    forms: &[HalfIntegralForm],
    trunc: &TruncationParams,
) -> Result<PoincareGram> {
    for (i, a) in forms.iter().enumerate() {
        for b in &forms[i + 1..] {
            if automorphisms_in(group, a, b)? > 0 {
                return Err(Error::Parameter("forms must be pairwise inequivalent under the unit group".into()));
            }
        }
    }
    let sys = CosetSystem::new(group, trunc.coset_height)?;
    let m = forms.len();
    let mut matrix = vec![vec![0.0; m]; m];
    let mut tails = vec![vec![0.0; m]; m];
    for (i, ti) in forms.iter().enumerate() {
        for (j, tj) in forms.iter().enumerate() {
            let c = poincare_fourier_coeff_in(&sys, tj, ti, k, trunc)?;
            matrix[i][j] = c.value;
            tails[i][j] = c.tail;
        }
    }
    // p_T(T′)·(det T/det T′)^{s/2} is symmetric; rescaling rows and columns
    // by positive factors does not change singularity.
    let s = f64::from(k) - (group.degree() as f64 + 1.0) / 2.0;
    let scale: Vec<f64> = forms.iter().map(|t| (0.5 * s * t.det().ln()).exp()).collect();
    let balanced: Vec<Vec<f64>> =
        (0..m).map(|i| (0..m).map(|j| matrix[i][j] * scale[j] / scale[i]).collect()).collect();
    let balanced_tails: Vec<Vec<f64>> =
        (0..m).map(|i| (0..m).map(|j| tails[i][j] * scale[j] / scale[i]).collect()).collect();
    let dominant = (0..m).all(|i| {
        let off: f64 = (0..m).filter(|&j| j != i).map(|j| balanced[i][j].abs() + balanced_tails[i][j]).sum();
        balanced[i][i].abs() - balanced_tails[i][i] > off
    });
    let dm = DMatrix::from_fn(m, m, |i, j| balanced[i][j]);
    let row_norms: f64 = (0..m).map(|i| dm.row(i).norm()).product();
    let normalized_det = if m == 0 { 1.0 } else { dm.determinant().abs() / row_norms.max(1e-300) };
    let max_tail = balanced_tails.iter().flatten().fold(0.0_f64, |a, &b| a.max(b));
    let max_entry = balanced.iter().flatten().fold(0.0_f64, |a, &b| a.max(b.abs())).max(1e-300);
    let status = if dominant {
        Nonsingularity::DiagonallyDominant
    } else if normalized_det > 1e-6 && normalized_det > 10.0 * m as f64 * max_tail / max_entry {
        Nonsingularity::Determinant
    } else {
        Nonsingularity::Indeterminate
    };
    Ok(PoincareGram { matrix, tails, balanced, status, normalized_det })
}
