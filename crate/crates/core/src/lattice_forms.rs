//! Positive half-integral forms: enumeration under a trace bound,
//! automorphism counts, and the unit theta sums `H_Γ(T, Y)`.

use crate::error::{Error, Result};
use crate::exact_linalg::{IntMatrix, RationalSymMatrix, RealSymMatrix};
use crate::small::{IMat, RMat};
use crate::special::CompensatedSum;
use crate::subgroup::{DualLatticeDescriptor, GroupDescriptor};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Symmetric `T = M / den` with integer `M`, kept in lowest terms
/// (`gcd(M, den) = 1`, `den > 0`), so equality is structural.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfIntegralForm {
    n: usize,
    numer: Vec<i64>,
    den: i64,
}

impl fmt::Debug for HalfIntegralForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})/{}", self.numer, self.den)
    }
}

impl HalfIntegralForm {
    pub fn new(n: usize, numer: Vec<i64>, den: i64) -> Result<Self> {
        if numer.len() != n * n || den == 0 {
            return Err(Error::Structural(format!("form needs {} entries and nonzero denominator", n * n)));
        }
        if (0..n).any(|i| (0..i).any(|j| numer[i * n + j] != numer[j * n + i])) {
            return Err(Error::Domain("form is not symmetric".into()));
        }
        let g = numer.iter().fold(den.abs(), |g, &x| g.gcd(&x));
        let s = if den < 0 { -g } else { g };
        Ok(Self { n, numer: numer.iter().map(|x| x / s).collect(), den: den / s })
    }

    /// `T` from `G = 2T` with even diagonal, i.e. `T ∈ Λ_n`.
    pub fn from_twice(n: usize, g: &[i64]) -> Result<Self> {
        if g.len() == n * n && (0..n).any(|i| g[i * n + i] % 2 != 0) {
            return Err(Error::Domain("2T must have even diagonal".into()));
        }
        Self::new(n, g.to_vec(), 2)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1; n])
    }

    pub fn diagonal(d: &[i64]) -> Self {
        let n = d.len();
        let mut numer = vec![0; n * n];
        for (i, &x) in d.iter().enumerate() {
            numer[i * n + i] = x;
        }
        Self::new(n, numer, 1).expect("diagonal is symmetric")
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// Numerator `M` with `T = M / den`.
    pub fn numerator(&self) -> &[i64] {
        &self.numer
    }

    pub fn denominator(&self) -> i64 {
        self.den
    }

    /// `2T` when it is integral (always for `T ∈ Λ_n`).
    pub fn twice(&self) -> Option<Vec<i64>> {
        (2 % self.den == 0).then(|| self.numer.iter().map(|x| x * (2 / self.den)).collect())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.numer[i * self.n + j] as f64 / self.den as f64
    }

    pub fn to_rational(&self) -> RationalSymMatrix {
        let data = self
            .numer
            .iter()
            .map(|&x| BigRational::new(BigInt::from(x), BigInt::from(self.den)))
            .collect();
        RationalSymMatrix::new(self.n, data).expect("symmetric")
    }

    pub fn to_real(&self) -> RealSymMatrix {
        RealSymMatrix::new(self.n, (0..self.n * self.n).map(|k| self.numer[k] as f64 / self.den as f64).collect())
            .expect("symmetric")
    }

    pub(crate) fn to_small(&self) -> RMat {
        self.to_real().to_small()
    }

    /// Exact positivity from the leading principal minors of `M`.
    pub fn is_positive(&self) -> bool {
        integer_positive(self.n, &self.numer)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.numer[i * self.n + i]).sum::<i64>() as f64 / self.den as f64
    }

    /// `tr(T·Y)`.
    pub fn trace_with(&self, y: &RealSymMatrix) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.numer[i * n + j] as f64 * y.get(j, i);
            }
        }
        s / self.den as f64
    }

    pub fn det(&self) -> f64 {
        self.to_real().det()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.to_real().min_eigenvalue()
    }

    /// `T[U] = UᵗTU`, exact.
    pub fn congruence(&self, u: &[i64]) -> Self {
        let n = self.n;
        let m = IMat::from_slice(n, &self.numer).congruence(&IMat::from_slice(n, u));
        Self::new(n, m.to_vec(), self.den).expect("congruence preserves symmetry")
    }

    /// `λ·T` for rational `λ = p/q`.
    pub fn scaled(&self, p: i64, q: i64) -> Self {
        Self::new(self.n, self.numer.iter().map(|x| x * p).collect(), self.den * q).expect("symmetric")
    }

    pub fn in_dual(&self, lattice: &DualLatticeDescriptor) -> bool {
        lattice.contains(&self.to_rational())
    }
}

fn integer_positive(n: usize, m: &[i64]) -> bool {
    match n {
        1 => m[0] > 0,
        2 => m[0] > 0 && m[0] as i128 * m[3] as i128 - m[1] as i128 * m[2] as i128 > 0,
        3 => {
            let at = |i: usize, j: usize| m[i * 3 + j] as i128;
            let d2 = at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
            let d3 = at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1))
                - at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0))
                + at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
            at(0, 0) > 0 && d2 > 0 && d3 > 0
        }
        _ => IntMatrix::from_i64(n, n, m).map(|x| x.to_rational_sym().is_positive()).unwrap_or(false),
    }
}

trait ToRationalSym {
    fn to_rational_sym(&self) -> RationalSymMatrix;
}

impl ToRationalSym for IntMatrix {
    fn to_rational_sym(&self) -> RationalSymMatrix {
        let data = self.entries().iter().map(|x| BigRational::from_integer(x.clone())).collect();
        RationalSymMatrix::new(self.rows(), data).expect("symmetric")
    }
}

/// `{T ∈ Λ*_Γ : T > 0, tr(TY) ≤ B}`, sorted by `tr(TY)`.
#[derive(Debug, Clone)]
pub struct FormEnumeration {
    pub lattice: DualLatticeDescriptor,
    pub y: RealSymMatrix,
    pub bound: f64,
    pub forms: Vec<HalfIntegralForm>,
}

impl FormEnumeration {
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }
}

/// Complete enumeration of positive `T ∈ Λ*_Γ` with `tr(TY) ≤ bound`.
///
/// Candidates live on the grid `t_ii ∈ (1/d_ii)ℤ`, `t_ij ∈ (1/d_ij)ℤ` given
/// by the descriptor's denominators. Boxing: `λ_min(Y)·tr T ≤ tr(TY)` bounds
/// each `t_ii`, and `t_ij² < t_ii·t_jj` bounds the off-diagonal entries.
/// Survivors are filtered by exact positivity and the trace pairing.
pub fn enumerate_forms(lattice: &DualLatticeDescriptor, y: &RealSymMatrix, bound: f64) -> Result<FormEnumeration> {
    let n = lattice.degree;
    if !(1..=3).contains(&n) {
        return Err(Error::Capability(format!("form enumeration for degree {n}")));
    }
    if y.dim() != n {
        return Err(Error::Structural("Y has the wrong size".into()));
    }
    let lam = y.min_eigenvalue();
    if lam <= 0.0 {
        return Err(Error::Domain("Y must be positive definite".into()));
    }
    if !(bound > 0.0) {
        return Err(Error::Parameter("trace bound must be positive".into()));
    }
    let den = lattice.denominators.iter().flatten().fold(1i64, |acc, &d| acc.lcm(&(d as i64)));
    let step = |i: usize, j: usize| den / lattice.denominators[i][j] as i64;
    let slack = bound * (1.0 + 1e-12);
    let t_max = slack / lam;
    let generators: Vec<Vec<i64>> = lattice
        .generators
        .iter()
        .map(|s| s.to_i64_vec().expect("lattice generators fit in i64"))
        .collect();
    let in_dual = |m: &[i64]| generators.iter().all(|s| m.iter().zip(s).map(|(a, b)| a * b).sum::<i64>() % den == 0);

    let diag_ranges: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            let s = step(i, i);
            let top = (t_max * den as f64 / s as f64).floor() as i64;
            (1..=top).map(|k| k * s).collect()
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut forms = Vec::new();
    let mut diag = vec![0i64; n];
    let mut visit_diag = |diag: &[i64]| {
        // Partial trace with the diagonal only is a lower bound up to the
        // off-diagonal contribution, so no pruning here beyond λ_min.
        let tr_t: f64 = diag.iter().map(|&d| d as f64).sum::<f64>() / den as f64;
        if tr_t * lam > slack {
            return;
        }
        let ranges: Vec<Vec<i64>> = pairs
            .iter()
            .map(|&(i, j)| {
                let s = step(i, j);
                let lim = ((diag[i] as f64) * (diag[j] as f64)).sqrt();
                let top = (lim / s as f64).ceil() as i64;
                (-top..=top).map(|k| k * s).filter(|&x| ((x as i128) * (x as i128)) < diag[i] as i128 * diag[j] as i128).collect()
            })
            .collect();
        let total: usize = ranges.iter().map(Vec::len).product();
        let mut m = vec![0i64; n * n];
        for i in 0..n {
            m[i * n + i] = diag[i];
        }
        for idx in 0..total {
            let mut t = idx;
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let v = ranges[k][t % ranges[k].len()];
                t /= ranges[k].len();
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
            if !integer_positive(n, &m) {
                continue;
            }
            let tr: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[i * n + j] as f64 * y.get(j, i)).sum::<f64>()
                / den as f64;
            if tr > slack || !in_dual(&m) {
                continue;
            }
            forms.push((tr, HalfIntegralForm::new(n, m.clone(), den).expect("symmetric")));
        }
    };
    let sizes: Vec<usize> = diag_ranges.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    for idx in 0..total {
        let mut t = idx;
        for i in 0..n {
            diag[i] = diag_ranges[i][t % sizes[i]];
            t /= sizes[i];
        }
        visit_diag(&diag);
    }
    forms.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(FormEnumeration { lattice: lattice.clone(), y: y.clone(), bound, forms: forms.into_iter().map(|x| x.1).collect() })
}

/// Smallest norm bound `tr(UᵗU)` guaranteed to contain every `U` with
/// `UᵗTU = T′`: `tr T′ = tr(T·UUᵗ) ≥ λ_min(T)·tr(UᵗU)`.
pub fn required_norm_bound(t: &HalfIntegralForm, t_prime: &HalfIntegralForm) -> u64 {
    (t_prime.trace() / t.min_eigenvalue() * (1.0 + 1e-9)).floor() as u64
}

/// `#{U ∈ units : UᵗTU = T′}`; `units` must be complete up to `norm_bound`.
pub fn automorphism_count(
    t: &HalfIntegralForm,
    t_prime: &HalfIntegralForm,
    units: &[IntMatrix],
    norm_bound: u64,
) -> Result<usize> {
    if t.degree() != t_prime.degree() {
        return Err(Error::Structural("forms of different degree".into()));
    }
    if !t.is_positive() {
        return Err(Error::Domain("T must be positive definite".into()));
    }
    let need = required_norm_bound(t, t_prime);
    if norm_bound < need {
        return Err(Error::Parameter(format!("unit list complete to norm {norm_bound}, need {need}")));
    }
    Ok(units
        .iter()
        .filter_map(IntMatrix::to_i64_vec)
        .filter(|u| t.congruence(u) == *t_prime)
        .count())
}

/// `|Aut_Γ(T′; T)| = #{U ∈ 𝒰_Γ : T[U] = T′}`.
pub fn automorphisms_in(group: &GroupDescriptor, t: &HalfIntegralForm, t_prime: &HalfIntegralForm) -> Result<usize> {
    let bound = required_norm_bound(t, t_prime).max(t.degree() as u64);
    let units = group.unit_group_elements(bound);
    automorphism_count(t, t_prime, &units, bound)
}

/// `Σ_{m > r} (2√m + 1)^{n²} e^{−c·m}`: crude bound for the shells of
/// integer matrices with `tr(UᵗU) = m > r` when each term is `≤ e^{−c·m}`.
pub fn shell_tail_bound(n: usize, c: f64, r: u64) -> f64 {
    let mut sum = CompensatedSum::default();
    let mut m = r + 1;
    loop {
        let term = ((n * n) as f64 * (2.0 * (m as f64).sqrt() + 1.0).ln() - c * m as f64).exp();
        sum.add(term);
        // Terms eventually decrease geometrically with ratio ≤ e^{−c/2}.
        if term < 1e-300 || (m > r + 10 && term < 1e-20 * sum.value()) {
            break;
        }
        m += 1;
    }
    sum.value()
}

/// Smallest shell radius whose crude tail falls below `tol`.
pub fn shell_radius(n: usize, c: f64, tol: f64) -> Result<u64> {
    if !(c > 0.0) {
        return Err(Error::Domain("decay rate must be positive".into()));
    }
    let mut r = n as u64;
    while shell_tail_bound(n, c, r) > tol {
        r += 1;
        if r > 100_000 {
            return Err(Error::Convergence("unit shell radius exceeds 1e5".into()));
        }
    }
    Ok(r)
}

/// Value and certified tail of a theta sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaTail {
    pub value: f64,
    pub tail_bound: f64,
    pub shell_radius: u64,
    pub terms: usize,
}

/// `H_Γ(T, Y) = Σ_{U ∈ 𝒰_Γ} exp(−2π tr(T·UᵗYU))`, truncated at the first
/// norm shell whose crude tail bound is below `tail_tol`.
pub fn theta_tail(group: &GroupDescriptor, t: &HalfIntegralForm, y: &RealSymMatrix, tail_tol: f64) -> Result<ThetaTail> {
    let n = group.degree();
    if t.degree() != n || y.dim() != n {
        return Err(Error::Structural("degree mismatch".into()));
    }
    let lt = t.min_eigenvalue();
    let ly = y.min_eigenvalue();
    if !(lt > 0.0) || !(ly > 0.0) {
        return Err(Error::Domain("T and Y must be positive definite".into()));
    }
    let c = 2.0 * PI * lt * ly;
    let r = shell_radius(n, c, tail_tol)?;
    let units = group.unit_group_elements(r);
    let ts = t.to_small();
    let ys = y.to_small();
    let value: CompensatedSum = units
        .iter()
        .map(|u| {
            let u = RMat::from_int(&u.to_small().expect("small unit"));
            (-2.0 * PI * ts.trace_mul(&ys.congruence(&u))).exp()
        })
        .collect();
    Ok(ThetaTail { value: value.value(), tail_bound: shell_tail_bound(n, c, r), shell_radius: r, terms: units.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subgroup::Family;
    use std::collections::BTreeSet;

    fn y2(a: f64, b: f64, c: f64) -> RealSymMatrix {
        RealSymMatrix::new(2, vec![a, b, b, c]).unwrap()
    }

    /// Brute force over all `G = 2T` with entries in `[−2B', 2B']`.
    fn brute_forms(y: &RealSymMatrix, bound: f64, box_: i64) -> BTreeSet<HalfIntegralForm> {
        let mut out = BTreeSet::new();
        for g11 in (-2 * box_..=2 * box_).filter(|x| x % 2 == 0) {
            for g22 in (-2 * box_..=2 * box_).filter(|x| x % 2 == 0) {
                for g12 in -2 * box_..=2 * box_ {
                    let t = HalfIntegralForm::from_twice(2, &[g11, g12, g12, g22]).unwrap();
                    if t.is_positive() && t.trace_with(y) <= bound {
                        out.insert(t);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn degree_one_example() {
        let lat = DualLatticeDescriptor::standard(1);
        let e = enumerate_forms(&lat, &RealSymMatrix::identity(1), 5.0).unwrap();
        let want: Vec<_> = (1..=5).map(|t| HalfIntegralForm::diagonal(&[t])).collect();
        assert_eq!(e.forms, want);
    }

    #[test]
    fn degree_two_small_example() {
        let lat = DualLatticeDescriptor::standard(2);
        let y = RealSymMatrix::identity(2);
        let e = enumerate_forms(&lat, &y, 2.0).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e.forms.iter().cloned().collect::<BTreeSet<_>>(), brute_forms(&y, 2.0, 2));
        assert!(e.forms.iter().all(|t| t.get(0, 0) == 1.0 && t.get(1, 1) == 1.0));
    }

    #[test]
    fn enumeration_is_complete_against_brute_force() {
        let lat = DualLatticeDescriptor::standard(2);
        for y in [RealSymMatrix::identity(2), y2(1.0, 0.4, 0.7), y2(2.0, -0.9, 1.1), y2(0.8, 0.0, 3.0)] {
            for b in [1.0, 2.5, 4.0, 6.0] {
                let e = enumerate_forms(&lat, &y, b).unwrap();
                let got: BTreeSet<_> = e.forms.iter().cloned().collect();
                assert_eq!(got.len(), e.len(), "duplicates");
                let box_ = (b / y.min_eigenvalue()).ceil() as i64;
                assert_eq!(got, brute_forms(&y, b, box_), "Y = {y:?}, B = {b}");
            }
        }
    }

    #[test]
    fn dual_lattice_enumeration_for_principal_level() {
        let group = GroupDescriptor::new(2, Family::Principal, 2).unwrap();
        let lat = group.dual_lattice();
        let y = RealSymMatrix::identity(2);
        let e = enumerate_forms(&lat, &y, 1.5).unwrap();
        // Λ*_Γ(2) = ½Λ₂: positive T with tr T ≤ 3/2 are ½·G/2 with G = 2T' ∈ 2Λ₂.
        let mut want = BTreeSet::new();
        for t in brute_forms(&y, 3.0, 3) {
            want.insert(t.scaled(1, 2));
        }
        assert_eq!(e.forms.iter().cloned().collect::<BTreeSet<_>>(), want);
        assert!(e.forms.iter().all(|t| t.in_dual(&lat)));
    }

    #[test]
    fn counts_grow_like_the_cube_of_the_bound() {
        let lat = DualLatticeDescriptor::standard(2);
        let y = RealSymMatrix::identity(2);
        let c: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&b| enumerate_forms(&lat, &y, b).unwrap().len() as f64).collect();
        for w in c.windows(2) {
            let slope = (w[1] / w[0]).log2();
            assert!((slope - 3.0).abs() < 0.05, "counts {c:?}");
        }
    }

    #[test]
    fn degree_three_enumeration_is_positive_and_bounded() {
        let lat = DualLatticeDescriptor::standard(3);
        let y = RealSymMatrix::identity(3);
        let e = enumerate_forms(&lat, &y, 3.0).unwrap();
        // tr T = 3 forces diagonal 1, and off-diagonals in {0, ±½} with T > 0.
        assert!(e.forms.iter().all(|t| t.is_positive() && t.trace() <= 3.0));
        assert!(e.forms.contains(&HalfIntegralForm::identity(3)));
        assert!(enumerate_forms(&DualLatticeDescriptor::standard(4), &RealSymMatrix::identity(4), 1.0).is_err());
    }

    #[test]
    fn automorphism_examples() {
        let full1 = GroupDescriptor::full(1);
        let one = HalfIntegralForm::identity(1);
        assert_eq!(automorphisms_in(&full1, &one, &one).unwrap(), 2);
        let full2 = GroupDescriptor::full(2);
        let id = HalfIntegralForm::identity(2);
        assert_eq!(automorphisms_in(&full2, &id, &id).unwrap(), 8);
        let d12 = HalfIntegralForm::diagonal(&[1, 2]);
        assert_eq!(automorphisms_in(&full2, &d12, &d12).unwrap(), 4);
        // Brute force over ‖U‖∞ ≤ 2 agrees.
        let mut brute = 0;
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                for c in -2i64..=2 {
                    for d in -2i64..=2 {
                        if (a * d - b * c).abs() == 1 && d12.congruence(&[a, b, c, d]) == d12 {
                            brute += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(brute, 4);
        let units = full2.unit_group_elements(2);
        assert!(matches!(automorphism_count(&d12, &d12, &units, 2), Err(Error::Parameter(_))));
    }

    #[test]
    fn automorphism_counts_are_even_and_divide_group_order() {
        let full2 = GroupDescriptor::full(2);
        let hex = HalfIntegralForm::from_twice(2, &[2, 1, 1, 2]).unwrap();
        let n = automorphisms_in(&full2, &hex, &hex).unwrap();
        assert_eq!(n, 12);
        for t in enumerate_forms(&DualLatticeDescriptor::standard(2), &RealSymMatrix::identity(2), 5.0).unwrap().forms {
            let a = automorphisms_in(&full2, &t, &t).unwrap();
            assert_eq!(a % 2, 0);
            assert!(a == 4 || a == 8 || a == 12 || a == 2, "{t:?}: {a}");
        }
    }

    #[test]
    fn theta_tail_degree_one() {
        let g = GroupDescriptor::full(1);
        for (t, y) in [(1, 1.0), (3, 0.25), (2, 0.7)] {
            let h = theta_tail(&g, &HalfIntegralForm::diagonal(&[t]), &RealSymMatrix::scalar(1, y), 1e-15).unwrap();
            let want = 2.0 * (-2.0 * PI * t as f64 * y).exp();
            assert!((h.value - want).abs() <= 1e-15 * want.max(1e-300) + 1e-300, "{} vs {want}", h.value);
        }
    }

    #[test]
    fn theta_tail_degree_two_matches_exhaustive_box() {
        let g = GroupDescriptor::full(2);
        let t = HalfIntegralForm::identity(2);
        for y in [RealSymMatrix::identity(2), y2(0.6, 0.2, 0.5)] {
            let h = theta_tail(&g, &t, &y, 1e-16).unwrap();
            let mut brute = CompensatedSum::default();
            let ys = y.to_small();
            for a in -4i64..=4 {
                for b in -4i64..=4 {
                    for c in -4i64..=4 {
                        for d in -4i64..=4 {
                            if (a * d - b * c).abs() == 1 {
                                let u = RMat::from_int(&IMat::from_slice(2, &[a, b, c, d]));
                                brute.add((-2.0 * PI * ys.congruence(&u).trace()).exp());
                            }
                        }
                    }
                }
            }
            assert!((h.value - brute.value()).abs() <= 1e-12 * brute.value(), "{} vs {}", h.value, brute.value());
        }
        let h = theta_tail(&g, &t, &RealSymMatrix::identity(2), 1e-16).unwrap();
        // Shell tr(UᵗU) = 3 adds 16·e^{−6π}, a relative 4e−3.
        assert!((h.value - 8.0 * (-4.0 * PI).exp()).abs() < 1e-2 * h.value);
    }

    #[test]
    fn theta_tail_is_monotone_in_loewner_order() {
        let g = GroupDescriptor::full(2);
        let t = HalfIntegralForm::from_twice(2, &[2, 1, 1, 4]).unwrap();
        let y = y2(0.5, 0.1, 0.4);
        for p in [y2(0.1, 0.0, 0.0), y2(0.2, 0.1, 0.1), y2(0.0, 0.0, 0.3)] {
            let a = theta_tail(&g, &t, &y, 1e-18).unwrap().value;
            let b = theta_tail(&g, &t, &y.add(&p).unwrap(), 1e-18).unwrap().value;
            assert!(b < a);
        }
    }

    #[test]
    fn subgroup_theta_is_bounded_by_full_group_theta() {
        let t = HalfIntegralForm::identity(2);
        let y = y2(0.4, 0.1, 0.5);
        let full = theta_tail(&GroupDescriptor::full(2), &t, &y, 1e-16).unwrap().value;
        let sub = theta_tail(&GroupDescriptor::new(2, Family::Principal, 3).unwrap(), &t, &y, 1e-16).unwrap().value;
        assert!(sub <= full);
    }
}
