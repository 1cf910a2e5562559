//! Degree-one toolkit: Kloosterman sums at the cusp ∞ of a congruence
//! subgroup, weight-2 Poincaré coefficients, the Petersson Gram matrix, a
//! large-sieve statistic, and the classical `k ≥ 4` coefficient formula.
//!
//! Point counts on elliptic curves provide the Hecke eigenvalues that the
//! Gram matrices are compared against.

use crate::error::{Error, Result};
use crate::special::{bessel_jn, e, ComplexSum, CompensatedSum};
use crate::subgroup::{Family, GroupDescriptor};
use crate::symplectic::SymplecticElement;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

pub use crate::special::bessel_j1;

/// An admissible bottom row `(c, d)` together with the upper-left entry `a`
/// of a group element realising it; `a` is well defined mod `cω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RealizedRow {
    pub d: i64,
    pub a: i64,
}

fn check_degree_one(group: &GroupDescriptor) -> Result<()> {
    if group.degree() != 1 {
        return Err(Error::Capability(format!("degree-one routine called on degree {}", group.degree())));
    }
    Ok(())
}

/// The cusp width `ω` of a degree-one group.
pub fn cusp_width(group: &GroupDescriptor) -> u64 {
    group.cusp_width_config().omega
}

/// Which bottom rows mod `N` occur in `Γ`.
///
/// Elements of `SL₂(ℤ/N)` sharing a bottom row differ by a left factor
/// `n(t)`, so admissibility of `(c, d)` depends only on `(c mod N, d mod N)`.
struct RowTable {
    level: i64,
    omega: i64,
    admissible: Vec<bool>,
}

impl RowTable {
    fn new(group: &GroupDescriptor) -> Result<Self> {
        check_degree_one(group)?;
        let q = group.level() as i64;
        let mut admissible = vec![false; (q * q) as usize];
        for cr in 0..q {
            for dr in 0..q {
                if cr.gcd(&dr).gcd(&q) != 1 && q > 1 {
                    continue;
                }
                // A coprime integer lift of the residues exists; search a small window.
                let lift = (0..4 * q + 4)
                    .flat_map(|i| (0..4 * q + 4).map(move |j| (cr + i * q, dr + j * q)))
                    .find(|&(c, d)| c > 0 && c.gcd(&d) == 1);
                if let Some((c, d)) = lift {
                    admissible[(cr * q + dr) as usize] = Self::offset(group, q, c, d).is_some();
                }
            }
        }
        Ok(Self { level: q, omega: cusp_width(group) as i64, admissible })
    }

    /// The completion `(a₀, b₀; c, d)` and the least `t` with `n(t)γ₀ ∈ Γ`.
    fn offset(group: &GroupDescriptor, q: i64, c: i64, d: i64) -> Option<(i64, i64)> {
        let g = d.extended_gcd(&c);
        // a·d + x·c = 1, so (a, −x; c, d) has determinant 1.
        let (a0, b0) = (g.x, -g.y);
        (0..q)
            .find(|&t| {
                let r = [a0 + t * c, b0 + t * d, c, d].map(|v| v.rem_euclid(q));
                group.contains_residues(&r)
            })
            .map(|t| (a0, t))
    }

    fn rows(&self, group: &GroupDescriptor, c: i64) -> Vec<RealizedRow> {
        let q = self.level;
        let base = (c.rem_euclid(q) * q) as usize;
        if !self.admissible[base..base + q as usize].iter().any(|&x| x) {
            return Vec::new();
        }
        let modulus = c * self.omega;
        (0..modulus)
            .filter(|&d| self.admissible[base + d.rem_euclid(q) as usize] && d.gcd(&c) == 1)
            .filter_map(|d| {
                let (a0, t) = Self::offset(group, q, c, d)?;
                Some(RealizedRow { d, a: (a0 + t * c).rem_euclid(modulus) })
            })
            .collect()
    }
}

/// Rows `(c, d)`, `d ∈ [0, cω)`, of elements of `Γ`, with their `a`-entries.
///
/// `(c, d)` is completed to `γ₀ ∈ SL₂(ℤ)`; every matrix with that bottom row
/// is `n(t)γ₀`, so it suffices to test `t` modulo the level.
pub fn realized_rows(group: &GroupDescriptor, c: u64) -> Result<Vec<RealizedRow>> {
    if c == 0 {
        return Err(Error::Domain("modulus c must be positive".into()));
    }
    Ok(RowTable::new(group)?.rows(group, c as i64))
}

/// `D(c) ⊆ [0, cω)`: residues `d` with `(c, d)` the bottom row of some `γ ∈ Γ`.
pub fn d_set(group: &GroupDescriptor, c: u64) -> Result<Vec<i64>> {
    Ok(realized_rows(group, c)?.into_iter().map(|r| r.d).collect())
}

fn kloosterman_from_rows(rows: &[RealizedRow], m: i64, n: i64, modulus: i64) -> Complex64 {
    rows.iter()
        .map(|r| e(((m * r.a + n * r.d).rem_euclid(modulus)) as f64 / modulus as f64))
        .collect::<ComplexSum>()
        .value()
}

/// `S_Γ(m, n; c) = Σ_{d ∈ D(c)} e((m·ā + n·d)/(cω))` with `ā` the `a`-entry of the realising element.
pub fn kloosterman(group: &GroupDescriptor, m: i64, n: i64, c: u64) -> Result<Complex64> {
    let rows = realized_rows(group, c)?;
    Ok(kloosterman_from_rows(&rows, m, n, c as i64 * cusp_width(group) as i64))
}

/// `S_Γ(m, n; c)` for `c = 1, …, c_max`.
pub fn kloosterman_series(group: &GroupDescriptor, m: i64, n: i64, c_max: u64) -> Result<Vec<Complex64>> {
    let table = RowTable::new(group)?;
    Ok((1..=c_max as i64)
        .into_par_iter()
        .map(|c| kloosterman_from_rows(&table.rows(group, c), m, n, c * table.omega))
        .collect())
}

/// Kloosterman sums for every `c ≤ c_max` and every pair `1 ≤ m, n ≤ k`,
/// indexed `[c − 1][(m − 1)·k + (n − 1)]`.
fn kloosterman_table(group: &GroupDescriptor, k: usize, c_max: u64) -> Result<Vec<Vec<Complex64>>> {
    let table = RowTable::new(group)?;
    let omega = table.omega;
    Ok((1..=c_max as i64)
        .into_par_iter()
        .map(|c| {
            let rows = table.rows(group, c);
            let modulus = c * omega;
            if rows.is_empty() {
                return vec![Complex64::new(0.0, 0.0); k * k];
            }
            // At most cω unit-size terms per entry, so plain sums lose < 1e-11.
            let roots: Vec<Complex64> = (0..modulus).map(|j| e(j as f64 / modulus as f64)).collect();
            let mut acc = vec![Complex64::new(0.0, 0.0); k * k];
            for r in &rows {
                let mut am = 0;
                for m in 0..k {
                    am += r.a;
                    if am >= modulus {
                        am -= modulus;
                    }
                    let mut idx = am;
                    let out = &mut acc[m * k..(m + 1) * k];
                    for slot in out.iter_mut() {
                        idx += r.d;
                        if idx >= modulus {
                            idx -= modulus;
                        }
                        *slot += roots[idx as usize];
                    }
                }
            }
            acc
        })
        .collect())
}

/// Number of divisors of `c`.
pub fn divisor_count(c: u64) -> u64 {
    let mut count = 0;
    let mut i = 1;
    while i * i <= c {
        if c % i == 0 {
            count += if i * i == c { 1 } else { 2 };
        }
        i += 1;
    }
    count
}

/// `d(c)·√c·√gcd(m, n, c)`, the Weil-shaped bound.
pub fn weil_bound(m: i64, n: i64, c: u64) -> f64 {
    let g = m.unsigned_abs().gcd(&n.unsigned_abs()).gcd(&c);
    divisor_count(c) as f64 * (c as f64).sqrt() * (g as f64).sqrt()
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn euler_phi(n: u64) -> u64 {
    factorize(n).iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Genus of `X₀(N)`, i.e. `dim S₂(Γ₀(N))`, from the index, the elliptic
/// points of orders 2 and 3, and the cusps.
pub fn gamma0_genus(level: u64) -> u64 {
    let f = factorize(level);
    let index: u64 = f.iter().map(|&(p, e)| p.pow(e - 1) * (p + 1)).product();
    let nu2: u64 = if level % 4 == 0 {
        0
    } else {
        f.iter().map(|&(p, _)| if p == 2 { 1 } else if p % 4 == 1 { 2 } else { 0 }).product()
    };
    let nu3: u64 = if level % 9 == 0 {
        0
    } else {
        f.iter().map(|&(p, _)| if p == 3 { 1 } else if p % 3 == 1 { 2 } else { 0 }).product()
    };
    let cusps: u64 = (1..=level).filter(|d| level % d == 0).map(|d| euler_phi(d.gcd(&(level / d)))).sum();
    // 12g = 12 + μ − 3ν₂ − 4ν₃ − 6ν_∞ is always a non-negative multiple of 12.
    (12 + index - 3 * nu2 - 4 * nu3 - 6 * cusps) / 12
}

/// How the conditionally convergent weight-2 `c`-sum is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summation {
    /// Plain partial sum up to `c_max`.
    Sharp,
    /// First-order Cesàro means: term `c` weighted by `1 − c/(c_max + 1)`.
    Cesaro,
    /// Full weight up to `c_max/2`, then a raised-cosine taper to zero at `c_max`.
    #[default]
    Tapered,
}

impl std::str::FromStr for Summation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sharp" => Ok(Self::Sharp),
            "cesaro" => Ok(Self::Cesaro),
            "tapered" => Ok(Self::Tapered),
            other => Err(Error::Parameter(format!("unknown summation '{other}'"))),
        }
    }
}

impl Summation {
    fn weight(self, c: f64, c_max: f64) -> f64 {
        match self {
            Summation::Sharp => 1.0,
            Summation::Cesaro => 1.0 - c / (c_max + 1.0),
            Summation::Tapered => {
                let t = c / c_max;
                if t <= 0.5 {
                    1.0
                } else {
                    0.5 * (1.0 + (PI * (2.0 * t - 1.0)).cos())
                }
            }
        }
    }
}

/// A weight-2 coefficient with the Weil-shaped bound on the omitted terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Weight2Coeff {
    pub value: f64,
    pub tail_bound: f64,
    pub c_max: u64,
}

/// Envelope for the omitted terms `c > C`: the Weil-shaped bound with the
/// mean order `log c` of the divisor function and `J₁(x) ≤ x/2` give
/// `Σ_{c>C} √g·log c·c^{−3/2}·x/2 ≤ √g·x·(ln C + 2)/√C`.
fn weight2_tail(m: i64, n: i64, omega: f64, c_max: u64) -> f64 {
    let x = 4.0 * PI * ((m * n) as f64).sqrt() / omega;
    let g = (m.min(n) as f64).sqrt();
    let cf = c_max as f64;
    (4.0 * PI / omega) * ((n as f64) / (m as f64)).sqrt() * g * x * (cf.ln() + 2.0) / cf.sqrt()
}

fn weight2_from_table(
    table: &[Vec<Complex64>],
    k: usize,
    m: usize,
    n: usize,
    omega: f64,
    summation: Summation,
) -> f64 {
    let c_max = table.len();
    let x0 = 4.0 * PI * ((m * n) as f64).sqrt() / omega;
    let mut acc = CompensatedSum::new();
    for (ci, row) in table.iter().enumerate() {
        let c = (ci + 1) as f64;
        let s = row[(m - 1) * k + (n - 1)].re;
        if s == 0.0 {
            continue;
        }
        let w = summation.weight(c, c_max as f64);
        acc.add(w * s / c * bessel_j1(x0 / c));
    }
    let delta = if m == n { 2.0 } else { 0.0 };
    delta - (4.0 * PI / omega) * ((n as f64) / (m as f64)).sqrt() * acc.value()
}

/// `p_m(n) = 2δ(m,n) − (4π/ω)(n/m)^{1/2} Σ_{c ≤ C} S_Γ(m,n;c)/c·J₁(4π√(mn)/(cω))`.
pub fn weight2_coeff(group: &GroupDescriptor, m: i64, n: i64, c_max: u64, summation: Summation) -> Result<Weight2Coeff> {
    check_degree_one(group)?;
    if m < 1 || n < 1 {
        return Err(Error::Domain("indices must be positive".into()));
    }
    if c_max == 0 {
        return Err(Error::Parameter("cMax must be positive".into()));
    }
    let omega = cusp_width(group) as f64;
    let x0 = 4.0 * PI * ((m * n) as f64).sqrt() / omega;
    let terms: Vec<f64> = kloosterman_series(group, m, n, c_max)?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let cf = (i + 1) as f64;
            summation.weight(cf, c_max as f64) * s.re / cf * bessel_j1(x0 / cf)
        })
        .collect();
    let sum = crate::special::sum_compensated(&terms);
    let delta = if m == n { 2.0 } else { 0.0 };
    Ok(Weight2Coeff {
        value: delta - (4.0 * PI / omega) * ((n as f64) / (m as f64)).sqrt() * sum,
        tail_bound: weight2_tail(m, n, omega, c_max),
        c_max,
    })
}

/// `M_{mn} = (2/ω²)(m/n)^{1/2} p_m(n)` for `1 ≤ m, n ≤ K` with its spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GramMatrix {
    pub size: usize,
    pub omega: u64,
    pub c_max: u64,
    pub entries: Vec<Vec<f64>>,
    /// Eigenvalues of the symmetrised matrix, largest first.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors matching `eigenvalues`, as rows.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl GramMatrix {
    pub fn trace(&self) -> f64 {
        (0..self.size).map(|i| self.entries[i][i]).sum()
    }

    /// `max |M_{mn} − M_{nm}|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.size {
            for j in 0..i {
                worst = worst.max((self.entries[i][j] - self.entries[j][i]).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Eigenvalues above `rel·λ₁`, or 0 when `λ₁` itself is below `abs_floor`.
    pub fn numerical_rank(&self, rel: f64, abs_floor: f64) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        if top <= abs_floor {
            return 0;
        }
        self.eigenvalues.iter().filter(|&&l| l > rel * top).count()
    }

    /// `aᴴ M a`.
    pub fn quadratic_form(&self, a: &[Complex64]) -> f64 {
        let mut acc = ComplexSum::new();
        for (i, ai) in a.iter().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                acc.add(ai.conj() * self.entries[i][j] * aj);
            }
        }
        acc.value().re
    }
}

/// Gram matrix from Kloosterman sums summed up to `c_max`.
pub fn petersson_gram(group: &GroupDescriptor, size: usize, c_max: u64, summation: Summation) -> Result<GramMatrix> {
    check_degree_one(group)?;
    if size == 0 || c_max == 0 {
        return Err(Error::Parameter("K and cMax must be positive".into()));
    }
    let omega = cusp_width(group);
    let w = omega as f64;
    let table = kloosterman_table(group, size, c_max)?;
    let mut entries = vec![vec![0.0; size]; size];
    for m in 1..=size {
        for n in 1..=size {
            let p = weight2_from_table(&table, size, m, n, w, summation);
            entries[m - 1][n - 1] = 2.0 / (w * w) * ((m as f64) / (n as f64)).sqrt() * p;
        }
    }
    let sym = DMatrix::from_fn(size, size, |i, j| 0.5 * (entries[i][j] + entries[j][i]));
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| {
            let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            // Fix the sign so the first sizeable entry is positive.
            let pivot = v.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
            v.into_iter().map(|x| x * pivot.signum()).collect()
        })
        .collect();
    Ok(GramMatrix { size, omega, c_max, entries, eigenvalues, eigenvectors })
}

/// Outcome of [`large_sieve_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LargeSieve {
    pub level: u64,
    pub size: usize,
    pub seed: u64,
    pub normaliser: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Ratio at the first standard basis vector.
    pub e1_ratio: f64,
}

/// `(1/ω²)(log K + K/(qω))`.
pub fn large_sieve_normaliser(omega: u64, level: u64, size: usize) -> f64 {
    let w = omega as f64;
    ((size as f64).ln() + size as f64 / (level as f64 * w)) / (w * w)
}

/// `aᴴMa / ((1/ω²)(log K + K/(qω))‖a‖²)` over seeded random complex vectors.
pub fn large_sieve_check(gram: &GramMatrix, level: u64, trials: usize, seed: u64) -> LargeSieve {
    let norm = large_sieve_normaliser(gram.omega, level, gram.size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios: Vec<f64> = (0..trials)
        .map(|_| {
            let a: Vec<Complex64> = (0..gram.size)
                .map(|_| Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI)))
                .collect();
            let len2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            gram.quadratic_form(&a) / (norm * len2)
        })
        .collect();
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e1_ratio = gram.entries[0][0] / norm;
    LargeSieve { level, size: gram.size, seed, normaliser: norm, ratios, max_ratio, e1_ratio }
}

/// `p_m(n) = δ(m,n) + (2π i^{−k}/ω)(n/m)^{(k−1)/2} Σ_{c ≤ C} S(m,n;c)/c·J_{k−1}(4π√(mn)/(cω))`
/// for `Γ₀(N)`, with its tail bound from `|S| ≤ c` and `J_ν(x) ≤ (x/2)^ν/ν!`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassicalCoeff {
    pub value: f64,
    pub tail_bound: f64,
}

pub fn petersson_oracle(group: &GroupDescriptor, k: u32, m: i64, n: i64, c_max: u64) -> Result<ClassicalCoeff> {
    check_degree_one(group)?;
    if k < 4 || k % 2 == 1 {
        return Err(Error::Domain(format!("weight {k} must be even and at least 4")));
    }
    if !matches!(group.family(), Family::Full | Family::Gamma0) || group.conjugator().is_some() {
        return Err(Error::Capability("the classical formula is implemented for Γ₀(N) only".into()));
    }
    if m < 1 || n < 1 || c_max == 0 {
        return Err(Error::Domain("indices and cMax must be positive".into()));
    }
    let x0 = 4.0 * PI * ((m * n) as f64).sqrt();
    let nu = k - 1;
    let terms: Vec<f64> = kloosterman_series(group, m, n, c_max)?
        .iter()
        .enumerate()
        .map(|(i, s)| s.re / (i + 1) as f64 * bessel_jn(nu, x0 / (i + 1) as f64))
        .collect();
    let sign = if k % 4 == 0 { 1.0 } else { -1.0 };
    let ratio = ((n as f64) / (m as f64)).powf(f64::from(nu) / 2.0);
    let delta = if m == n { 1.0 } else { 0.0 };
    let value = delta + 2.0 * PI * sign * ratio * crate::special::sum_compensated(&terms);
    // Σ_{c>C} (x₀/2c)^ν/ν! ≤ (x₀/2)^ν/ν!·C^{1−ν}/(ν−1).
    let ln_tail = f64::from(nu) * (x0 / 2.0).ln() - crate::special::ln_gamma(f64::from(nu) + 1.0)
        + (1.0 - f64::from(nu)) * (c_max as f64).ln()
        - f64::from(nu - 1).ln();
    Ok(ClassicalCoeff { value, tail_bound: 2.0 * PI * ratio * ln_tail.exp() })
}

/// `y² + a₁xy + a₃y = x³ + a₂x² + a₄x + a₆` over ℤ, a minimal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EllipticCurve {
    pub a: [i64; 5],
    pub conductor: u64,
}

impl EllipticCurve {
    /// The curve of conductor 11: `y² + y = x³ − x² − 10x − 20`.
    pub const X0_11: Self = Self { a: [0, -1, 1, -10, -20], conductor: 11 };
    /// Conductor 14: `y² + xy + y = x³ + 4x − 6`.
    pub const X0_14: Self = Self { a: [1, 0, 1, 4, -6], conductor: 14 };
    /// Conductor 15: `y² + xy + y = x³ + x² − 10x − 10`.
    pub const X0_15: Self = Self { a: [1, 1, 1, -10, -10], conductor: 15 };

    /// Projective points mod `p`, the singular one included.
    pub fn count_points(&self, p: i64) -> i64 {
        let [a1, a2, a3, a4, a6] = self.a.map(|v| v.rem_euclid(p));
        let mut count = 1;
        for x in 0..p {
            let rhs = (((x * x % p) * x + a2 * x % p * x + a4 * x + a6) % p + p) % p;
            for y in 0..p {
                let lhs = (y * y + a1 * x % p * y + a3 * y) % p;
                if lhs == rhs {
                    count += 1;
                }
            }
        }
        count
    }

    /// `a_p = p + 1 − #E(𝔽_p)`, valid at good and bad primes for a minimal model.
    pub fn ap(&self, p: i64) -> i64 {
        p + 1 - self.count_points(p)
    }

    /// `a_1, …, a_K` from multiplicativity and the Hecke recursion at good primes.
    pub fn coefficients(&self, size: usize) -> Vec<i64> {
        let mut a = vec![0i64; size + 1];
        if size >= 1 {
            a[1] = 1;
        }
        for n in 2..=size {
            let p = smallest_prime_factor(n);
            let mut pk = p;
            let mut e = 1;
            while n % (pk * p) == 0 {
                pk *= p;
                e += 1;
            }
            let rest = n / pk;
            let ap = self.ap(p as i64);
            let good = self.conductor % p as u64 != 0;
            // a_{p^e} by the recursion, then multiply by the coprime part.
            let (mut prev, mut cur) = (1i64, ap);
            for _ in 1..e {
                let next = if good { ap * cur - p as i64 * prev } else { ap * cur };
                prev = cur;
                cur = next;
            }
            a[n] = cur * a[rest];
        }
        a
    }
}

fn smallest_prime_factor(n: usize) -> usize {
    (2..).find(|p| n % p == 0 || p * p > n).map(|p| if n % p == 0 { p } else { n }).unwrap_or(n)
}

/// The Gram matrix a single newform `f` would produce, `∝ a_f(m)a_f(n)/√(mn)`,
/// as a unit vector.
pub fn newform_direction(curve: &EllipticCurve, size: usize) -> Vec<f64> {
    let a = curve.coefficients(size);
    let v: Vec<f64> = (1..=size).map(|n| a[n] as f64 / (n as f64).sqrt()).collect();
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / len).collect()
}

/// The element `(a b; c d)` realising a row from [`realized_rows`].
pub fn realizing_element(row: &RealizedRow, c: i64) -> Result<SymplecticElement> {
    let (a, d) = (row.a, row.d);
    let det = a * d - 1;
    if det % c != 0 {
        return Err(Error::Structural("row and a-entry are not completable".into()));
    }
    SymplecticElement::from_i64(1, &[a, det / c, c, d])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma0(n: u64) -> GroupDescriptor {
        GroupDescriptor::new(1, Family::Gamma0, n).unwrap()
    }

    #[test]
    fn genus_of_small_levels() {
        // Levels 1..=10, 12, 13, 16, 18, 25 carry no weight-2 cusp forms.
        for n in (1..=10).chain([12, 13, 16, 18, 25]) {
            assert_eq!(gamma0_genus(n), 0, "N = {n}");
        }
        for (n, g) in [(11, 1), (14, 1), (15, 1), (17, 1), (23, 2), (37, 2), (64, 3), (100, 7)] {
            assert_eq!(gamma0_genus(n), g, "N = {n}");
        }
    }

    #[test]
    fn d_sets_of_small_moduli() {
        let full = GroupDescriptor::full(1);
        assert_eq!(d_set(&full, 1).unwrap(), vec![0]);
        assert_eq!(d_set(&full, 3).unwrap(), vec![1, 2]);
        assert!(d_set(&gamma0(2), 1).unwrap().is_empty());
        assert_eq!(d_set(&gamma0(2), 2).unwrap(), vec![1]);
        let principal = GroupDescriptor::new(1, Family::Principal, 3).unwrap();
        assert_eq!(d_set(&principal, 3).unwrap(), vec![1, 4, 7]);
        assert!(d_set(&principal, 2).unwrap().is_empty());
    }

    #[test]
    fn realised_rows_lie_in_the_group() {
        for g in [gamma0(6), GroupDescriptor::new(1, Family::Principal, 3).unwrap()] {
            for c in 1..=12u64 {
                for row in realized_rows(&g, c).unwrap() {
                    let el = realizing_element(&row, c as i64).unwrap();
                    assert!(g.contains(&el), "c = {c}, row {row:?}");
                }
            }
        }
    }

    #[test]
    fn kloosterman_small_values() {
        let full = GroupDescriptor::full(1);
        let s1 = kloosterman(&full, 1, 1, 1).unwrap();
        assert!((s1 - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let s3 = kloosterman(&full, 1, 1, 3).unwrap();
        assert!((s3 - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn kloosterman_matches_direct_inverse_sum() {
        for n_level in [1u64, 4, 11] {
            let g = if n_level == 1 { GroupDescriptor::full(1) } else { gamma0(n_level) };
            for c in (1..=40u64).filter(|c| c % n_level == 0) {
                for (m, n) in [(1, 1), (2, 3), (5, 7)] {
                    let mut direct = Complex64::new(0.0, 0.0);
                    for d in 0..c as i64 {
                        let gg = d.extended_gcd(&(c as i64));
                        if gg.gcd == 1 {
                            let dbar = gg.x.rem_euclid(c as i64);
                            direct += e((m * dbar + n * d) as f64 / c as f64);
                        }
                    }
                    let s = kloosterman(&g, m, n, c).unwrap();
                    assert!((s - direct).norm() < 1e-12, "N={n_level} c={c}");
                    assert!(s.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kloosterman_is_bounded_by_the_residue_count() {
        let g = gamma0(3);
        for c in 1..=60 {
            let count = d_set(&g, c).unwrap().len() as f64;
            assert!(kloosterman(&g, 2, 5, c).unwrap().norm() <= count + 1e-9);
        }
    }

    #[test]
    fn weil_bound_holds_for_the_full_group() {
        let full = GroupDescriptor::full(1);
        for c in 1..=200u64 {
            for (m, n) in [(1, 1), (1, 2), (3, 5)] {
                assert!(kloosterman(&full, m, n, c).unwrap().norm() <= weil_bound(m, n, c) + 1e-9);
            }
        }
    }

    #[test]
    fn bessel_j1_series_start() {
        assert_eq!(bessel_j1(0.0), 0.0);
        let x = 1e-3;
        assert!((bessel_j1(x) - (x / 2.0 - x.powi(3) / 16.0)).abs() < 1e-15);
    }

    #[test]
    fn point_counts_of_the_conductor_eleven_curve() {
        let c = EllipticCurve::X0_11;
        assert_eq!(c.coefficients(10), vec![0, 1, -2, -1, 2, 1, 2, -2, 0, -2, -2]);
        assert_eq!(c.ap(11), 1);
    }

    #[test]
    fn classical_coefficients_tend_to_delta() {
        let full = GroupDescriptor::full(1);
        let p = petersson_oracle(&full, 40, 1, 1, 50).unwrap();
        assert!((p.value - 1.0).abs() < 1e-6);
        let q = petersson_oracle(&full, 40, 1, 2, 50).unwrap();
        assert!(q.value.abs() < 1e-2, "{}", q.value);
        assert!(petersson_oracle(&full, 5, 1, 1, 10).is_err());
    }

    #[test]
    fn classical_weight_twelve_ratio_gives_tau_two() {
        // S₁₂ is spanned by Δ, so P₁ is a multiple of Δ and p₁(2)/p₁(1) = τ(2).
        let full = GroupDescriptor::full(1);
        let p11 = petersson_oracle(&full, 12, 1, 1, 200).unwrap().value;
        let p12 = petersson_oracle(&full, 12, 1, 2, 200).unwrap().value;
        assert!((p12 / p11 + 24.0).abs() < 1e-8, "{}", p12 / p11);
    }
}
