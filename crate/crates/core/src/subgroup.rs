//! Congruence subgroups of Sp_n(ℤ): exact membership, conjugation, cusp
//! widths at ∞, the translation lattice `𝒮_Γ`, its dual `Λ*_Γ`, and the unit
//! group `𝒰_Γ = {U ∈ GL_n(ℤ) : m(U) ∈ Γ}`.
//!
//! Every test is done on residues mod the level `N`: all families below
//! contain `Γ⁽ⁿ⁾(N)`, which is the kernel of reduction mod `N`.

use crate::error::{Error, Result};
use crate::exact_linalg::{IntMatrix, RationalSymMatrix};
use crate::small::IMat;
use crate::symplectic::SymplecticElement;
use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

/// Largest residue group `GL_n(ℤ/N)` we are willing to walk.
const MAX_RESIDUE_GROUP: u64 = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Full,
    /// `C ≡ 0`.
    Gamma0,
    /// `B ≡ 0`.
    GammaUpper0,
    /// `B ≡ C ≡ 0`.
    Gamma0Upper0,
    /// `C ≡ 0`, `A ≡ 1`.
    Gamma1,
    /// `g ≡ 1`.
    Principal,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Full => "full",
            Family::Gamma0 => "gamma0",
            Family::GammaUpper0 => "gamma_upper0",
            Family::Gamma0Upper0 => "gamma0_upper0",
            Family::Gamma1 => "gamma1",
            Family::Principal => "principal",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "full" => Ok(Family::Full),
            "gamma0" => Ok(Family::Gamma0),
            "gamma_upper0" | "gammaupper0" => Ok(Family::GammaUpper0),
            "gamma0_upper0" | "gamma0upper0" => Ok(Family::Gamma0Upper0),
            "gamma1" => Ok(Family::Gamma1),
            "principal" => Ok(Family::Principal),
            other => Err(Error::Parameter(format!("unknown group family '{other}'"))),
        }
    }
}

/// Residues mod `N` of a conjugator and its inverse, row-major `2n × 2n`.
#[derive(Debug, Clone)]
struct ConjugatorResidues {
    g: Vec<i64>,
    g_inv: Vec<i64>,
}

/// A congruence subgroup `Γ` of Sp_n(ℤ), optionally replaced by `g⁻¹Γg`.
#[derive(Debug, Clone)]
pub struct GroupDescriptor {
    degree: usize,
    family: Family,
    level: u64,
    conjugator: Option<SymplecticElement>,
    conj_res: Option<ConjugatorResidues>,
    translations: OnceLock<Vec<Vec<i64>>>,
}

impl PartialEq for GroupDescriptor {
    fn eq(&self, o: &Self) -> bool {
        self.degree == o.degree
            && self.family == o.family
            && self.level == o.level
            && self.conjugator == o.conjugator
    }
}

/// Widths at ∞: `n_ij` is the least `t ≥ 1` with `n(t·E_ij) ∈ Γ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspData {
    pub widths: Vec<Vec<u64>>,
    pub omega: u64,
    #[serde(rename = "latticeIndex")]
    pub lattice_index: u64,
}

/// `Λ*_Γ = {T : tr(TS) ∈ ℤ for all S ∈ 𝒮_Γ}`, described by a basis of `𝒮_Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualLatticeDescriptor {
    pub degree: usize,
    /// A ℤ-basis of `𝒮_Γ`.
    pub generators: Vec<IntMatrix>,
    /// Denominators `n_ii` on the diagonal and `2 n_ij` off it, from the
    /// widths: `Λ*_Γ` lies on this grid because `n_ij·E_ij ∈ 𝒮_Γ`.
    /// Membership itself uses the trace pairing only.
    pub denominators: Vec<Vec<u64>>,
}

impl DualLatticeDescriptor {
    /// `Λ_n`, the dual of `Sym_n(ℤ)`.
    pub fn standard(n: usize) -> Self {
        let generators = sym_basis(n).into_iter().map(|v| sym_from_coords(n, &v, 1)).collect();
        let denominators = (0..n).map(|i| (0..n).map(|j| if i == j { 1 } else { 2 }).collect()).collect();
        Self { degree: n, generators, denominators }
    }

    pub fn contains(&self, t: &RationalSymMatrix) -> bool {
        dual_lattice_contains(self, t)
    }
}

/// Exact trace-pairing test `tr(T·S) ∈ ℤ` for every generator `S`.
pub fn dual_lattice_contains(desc: &DualLatticeDescriptor, t: &RationalSymMatrix) -> bool {
    assert_eq!(t.dim(), desc.degree, "dimension mismatch");
    desc.generators
        .iter()
        .all(|s| t.trace_pairing(s).map(|x| x.is_integer()).unwrap_or(false))
}

/// Number of independent entries of a symmetric `n × n` matrix.
pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Coordinate order `(i, j)`, `i ≤ j`, row by row.
pub fn sym_index_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn sym_basis(n: usize) -> Vec<Vec<i64>> {
    let d = sym_dim(n);
    (0..d).map(|k| (0..d).map(|l| i64::from(k == l)).collect()).collect()
}

/// `Σ_k scale·v_k·E_k`, where `E_(i,j)` has ones at `(i,j)` and `(j,i)`.
fn sym_from_coords(n: usize, v: &[i64], scale: i64) -> IntMatrix {
    let mut m = IntMatrix::zeros(n, n);
    for (&(i, j), &x) in sym_index_pairs(n).iter().zip(v) {
        m.set(i, j, BigInt::from(scale * x));
        m.set(j, i, BigInt::from(scale * x));
    }
    m
}

/// `(A + S·C, B + S·D; C, D)` mod `q`, for residues `g` of degree `n`.
fn translate_residues(n: usize, q: i64, s: &[i64], g: &[i64]) -> Vec<i64> {
    let w = 2 * n;
    let mut out = g.to_vec();
    for i in 0..n {
        for j in 0..w {
            let add: i64 = (0..n).map(|k| s[i * n + k] * g[(n + k) * w + j]).sum();
            out[i * w + j] = (g[i * w + j] + add).rem_euclid(q);
        }
    }
    out
}

fn mat_mul_mod(dim: usize, q: i64, x: &[i64], y: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let a = x[i * dim + k];
            if a == 0 {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += a * y[k * dim + j];
            }
        }
        for j in 0..dim {
            out[i * dim + j] = out[i * dim + j].rem_euclid(q);
        }
    }
    out
}

/// `m(U) = (Uᵗ 0; 0 U⁻¹)` mod `q` for a residue `U` with `det U ≡ ±1`, `n ≤ 3`.
fn m_residues(n: usize, q: i64, u: &[i64]) -> Vec<i64> {
    let w = 2 * n;
    let small = IMat::from_slice(n, u);
    // U⁻¹ = det(U)·adj(U) because det U = ±1 mod q.
    let sign = if small.det().rem_euclid(q) == 1 % q { 1 } else { -1 };
    let adj = small.adjugate();
    let mut out = vec![0i64; w * w];
    for i in 0..n {
        for j in 0..n {
            out[i * w + j] = u[j * n + i].rem_euclid(q);
            out[(n + i) * w + n + j] = (sign * adj.get(i, j)).rem_euclid(q);
        }
    }
    out
}

impl GroupDescriptor {
    /// Level 1 is normalised to the full group, and so is the full family
    /// at any level.
    pub fn new(degree: usize, family: Family, level: u64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Parameter("degree must be positive".into()));
        }
        if level == 0 {
            return Err(Error::Parameter("level must be positive".into()));
        }
        let (family, level) = if level == 1 || family == Family::Full { (Family::Full, 1) } else { (family, level) };
        Ok(Self { degree, family, level, conjugator: None, conj_res: None, translations: OnceLock::new() })
    }

    pub fn full(degree: usize) -> Self {
        Self::new(degree, Family::Full, 1).expect("valid")
    }

    /// `g⁻¹Γg`, composing with any existing conjugator.
    pub fn conjugated(&self, g: &SymplecticElement) -> Result<Self> {
        if g.degree() != self.degree {
            return Err(Error::Structural("conjugator degree mismatch".into()));
        }
        let total = match &self.conjugator {
            // h ∈ g⁻¹(c⁻¹Γc)g ⇔ (c g) h (c g)⁻¹ ∈ Γ.
            Some(c) => c.mul(g),
            None => g.clone(),
        };
        let q = self.level;
        let conj_res = Some(ConjugatorResidues { g: total.residues(q), g_inv: total.inverse().residues(q) });
        Ok(Self {
            degree: self.degree,
            family: self.family,
            level: self.level,
            conjugator: Some(total),
            conj_res,
            translations: OnceLock::new(),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn conjugator(&self) -> Option<&SymplecticElement> {
        self.conjugator.as_ref()
    }

    pub fn contains(&self, g: &SymplecticElement) -> bool {
        assert_eq!(g.degree(), self.degree, "degree mismatch");
        if self.level == 1 {
            return true;
        }
        self.contains_residues(&g.residues(self.level))
    }

    /// Membership of an element given by its residues mod `N`.
    pub fn contains_residues(&self, r: &[i64]) -> bool {
        let q = self.level as i64;
        if q == 1 {
            return true;
        }
        let w = 2 * self.degree;
        match &self.conj_res {
            Some(c) => {
                let x = mat_mul_mod(w, q, &mat_mul_mod(w, q, &c.g, r), &c.g_inv);
                self.base_contains(&x)
            }
            None => self.base_contains(r),
        }
    }

    fn base_contains(&self, r: &[i64]) -> bool {
        let n = self.degree;
        let w = 2 * n;
        let block_is = |r0: usize, c0: usize, one: bool| {
            (0..n).all(|i| (0..n).all(|j| r[(r0 + i) * w + c0 + j] == i64::from(one && i == j)))
        };
        let a1 = || block_is(0, 0, true);
        let b0 = || block_is(0, n, false);
        let c0 = || block_is(n, 0, false);
        let d1 = || block_is(n, n, true);
        match self.family {
            Family::Full => true,
            Family::Gamma0 => c0(),
            Family::GammaUpper0 => b0(),
            Family::Gamma0Upper0 => b0() && c0(),
            Family::Gamma1 => c0() && a1(),
            Family::Principal => a1() && b0() && c0() && d1(),
        }
    }

    /// `m(U) ∈ Γ` for a machine-integer unimodular `U`.
    pub(crate) fn contains_unit(&self, u: &IMat) -> bool {
        if self.level == 1 {
            return true;
        }
        let q = self.level as i64;
        let r: Vec<i64> = u.to_vec().iter().map(|x| x.rem_euclid(q)).collect();
        self.contains_residues(&m_residues(self.degree, q, &r))
    }

    pub fn contains_minus_one(&self) -> bool {
        self.contains(&SymplecticElement::identity(self.degree).neg())
    }

    /// Residues `S ∈ Sym_n(ℤ/N)` with `n(S) ∈ Γ`, as row-major `n × n` vectors.
    pub fn translation_residues(&self) -> &[Vec<i64>] {
        self.translations.get_or_init(|| {
            let n = self.degree;
            let q = self.level as i64;
            let id = SymplecticElement::identity(n).residues(self.level);
            sym_residues(n, q).filter(|s| self.contains_residues(&translate_residues(n, q, s, &id))).collect()
        })
    }

    /// A ℤ-basis of `𝒮_Γ` (row Hermite form of `N·Sym_n(ℤ)` plus lifted residues).
    pub fn translation_lattice_basis(&self) -> Vec<IntMatrix> {
        let n = self.degree;
        let d = sym_dim(n);
        let q = self.level as i64;
        let pairs = sym_index_pairs(n);
        let mut rows: Vec<i64> = Vec::new();
        for k in 0..d {
            rows.extend((0..d).map(|l| if k == l { q } else { 0 }));
        }
        let mut count = d;
        for s in self.translation_residues() {
            rows.extend(pairs.iter().map(|&(i, j)| s[i * n + j]));
            count += 1;
        }
        let m = IntMatrix::from_i64(count, d, &rows).expect("shape");
        let (h, _) = m.row_hermite();
        let h = h.to_rows_i64().expect("entries bounded by N");
        h.into_iter()
            .filter(|r| r.iter().any(|&x| x != 0))
            .map(|r| sym_from_coords(n, &r, 1))
            .collect()
    }

    /// `[Sym_n(ℤ) : 𝒮_Γ]`.
    pub fn translation_index(&self) -> u64 {
        let d = sym_dim(self.degree) as u32;
        self.level.pow(d) / self.translation_residues().len() as u64
    }

    /// `S mod 𝒮_Γ` (entries in `[0, N)`, lexicographically least
    /// representative) with `n(S)·g ∈ Γ`.
    pub fn translation_offsets(&self, g: &SymplecticElement) -> Vec<IntMatrix> {
        let n = self.degree;
        let q = self.level as i64;
        if q == 1 {
            return vec![IntMatrix::zeros(n, n)];
        }
        let r = g.residues(self.level);
        let trans = self.translation_residues();
        let mut found: Vec<Vec<i64>> = sym_residues(n, q)
            .filter(|s| self.contains_residues(&translate_residues(n, q, s, &r)))
            .map(|s| {
                trans
                    .iter()
                    .map(|t| s.iter().zip(t).map(|(a, b)| (a + b).rem_euclid(q)).collect::<Vec<i64>>())
                    .min()
                    .expect("zero translation present")
            })
            .collect();
        found.sort();
        found.dedup();
        found.into_iter().map(|s| IntMatrix::from_i64(n, n, &s).expect("square")).collect()
    }

    /// Cusp widths at ∞, searching divisors of `N` only.
    pub fn cusp_width_config(&self) -> CuspData {
        let n = self.degree;
        let q = self.level;
        let divisors: Vec<u64> = (1..=q).filter(|t| q % t == 0).collect();
        let trans = self.translation_residues();
        let mut widths = vec![vec![0u64; n]; n];
        for (i, j) in sym_index_pairs(n) {
            let width = divisors
                .iter()
                .copied()
                .find(|&t| {
                    let mut s = vec![0i64; n * n];
                    let tt = (t % q) as i64;
                    s[i * n + j] = tt;
                    s[j * n + i] = tt;
                    q == 1 || trans.contains(&s)
                })
                .expect("n(N·E) always lies in Γ");
            widths[i][j] = width;
            widths[j][i] = width;
        }
        let omega = widths.iter().flatten().fold(1u64, |acc, &w| acc.lcm(&w));
        let lattice_index = sym_index_pairs(n).iter().map(|&(i, j)| widths[i][j]).product();
        CuspData { widths, omega, lattice_index }
    }

    pub fn dual_lattice(&self) -> DualLatticeDescriptor {
        let widths = self.cusp_width_config().widths;
        let n = self.degree;
        let denominators =
            (0..n).map(|i| (0..n).map(|j| if i == j { widths[i][j] } else { 2 * widths[i][j] }).collect()).collect();
        DualLatticeDescriptor { degree: n, generators: self.translation_lattice_basis(), denominators }
    }

    /// Integral lifts of the left cosets `u·Ū` of `Ū = 𝒰_Γ mod N` in the
    /// image of GL_n(ℤ) mod `N`. Since `m(U)m(V) = m(VU)`, these index
    /// the `m(𝒰_Γ)`-orbits on `{m(U)·g₀}`.
    pub fn unit_coset_representatives(&self) -> Result<Vec<IntMatrix>> {
        let n = self.degree;
        if self.level == 1 {
            return Ok(vec![IntMatrix::identity(n)]);
        }
        let q = self.level as i64;
        let size = self.level.checked_pow((n * n) as u32).unwrap_or(u64::MAX);
        if n > 3 || size > MAX_RESIDUE_GROUP {
            return Err(Error::Capability(format!("GL_{n}(Z/{q}) too large to enumerate")));
        }
        let (order, lifts) = residue_image_with_lifts(n, q);
        let units: Vec<&Vec<i64>> =
            order.iter().filter(|u| self.contains_residues(&m_residues(n, q, u))).collect();
        let mut assigned: HashSet<Vec<i64>> = HashSet::with_capacity(order.len());
        let mut reps = Vec::new();
        for x in &order {
            if assigned.contains(x) {
                continue;
            }
            reps.push(IntMatrix::from_i64(n, n, &lifts[x]).expect("square"));
            for u in &units {
                assigned.insert(mat_mul_mod(n, q, x, u));
            }
        }
        Ok(reps)
    }

    /// All `U ∈ GL_n(ℤ)` with `tr(UᵗU) ≤ norm_bound` and `m(U) ∈ Γ`, sorted.
    pub fn unit_group_elements(&self, norm_bound: u64) -> Vec<IntMatrix> {
        let n = self.degree;
        let vectors = short_integer_vectors(n, norm_bound as i64);
        let mut out = Vec::new();
        let mut cols: Vec<usize> = Vec::with_capacity(n);
        collect_units(self, &vectors, norm_bound as i64, &mut cols, &mut out);
        out.sort_by(|a: &IntMatrix, b: &IntMatrix| a.to_i64_vec().cmp(&b.to_i64_vec()));
        out
    }
}

/// All of `Sym_n(ℤ/q)` as row-major residue vectors.
fn sym_residues(n: usize, q: i64) -> impl Iterator<Item = Vec<i64>> {
    let pairs = sym_index_pairs(n);
    let d = pairs.len() as u32;
    (0..q.pow(d)).map(move |mut idx| {
        let mut s = vec![0i64; n * n];
        for &(i, j) in &pairs {
            let x = idx % q;
            idx /= q;
            s[i * n + j] = x;
            s[j * n + i] = x;
        }
        s
    })
}

/// Breadth-first walk of the image of GL_n(ℤ) in GL_n(ℤ/q) under
/// elementary transvections and a sign change; each residue keeps the
/// integral lift of the first word reaching it, so lifts are short.
fn residue_image_with_lifts(n: usize, q: i64) -> (Vec<Vec<i64>>, HashMap<Vec<i64>, Vec<i64>>) {
    let mut gens: Vec<Vec<i64>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                for s in [1, -1] {
                    let mut e: Vec<i64> = (0..n * n).map(|k| i64::from(k % (n + 1) == 0)).collect();
                    e[i * n + j] = s;
                    gens.push(e);
                }
            }
        }
    }
    let mut flip: Vec<i64> = (0..n * n).map(|k| i64::from(k % (n + 1) == 0)).collect();
    flip[0] = -1;
    gens.push(flip);
    let id: Vec<i64> = (0..n * n).map(|k| i64::from(k % (n + 1) == 0)).collect();
    let reduce = |v: &[i64]| v.iter().map(|x| x.rem_euclid(q)).collect::<Vec<i64>>();
    let mut lifts: HashMap<Vec<i64>, Vec<i64>> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    lifts.insert(reduce(&id), id.clone());
    order.push(reduce(&id));
    queue.push_back(id);
    while let Some(x) = queue.pop_front() {
        for g in &gens {
            let y = int_mul(n, &x, g);
            let key = reduce(&y);
            if !lifts.contains_key(&key) {
                lifts.insert(key.clone(), y.clone());
                order.push(key);
                queue.push_back(y);
            }
        }
    }
    (order, lifts)
}

fn int_mul(n: usize, x: &[i64], y: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i * n + j] += x[i * n + k] * y[k * n + j];
            }
        }
    }
    out
}

/// Nonzero vectors of `ℤⁿ` with squared length at most `bound`, with norms.
fn short_integer_vectors(n: usize, bound: i64) -> Vec<(Vec<i64>, i64)> {
    let r = (bound as f64).sqrt().floor() as i64;
    let side = (2 * r + 1) as usize;
    let mut out = Vec::new();
    for idx in 0..side.pow(n as u32) {
        let mut t = idx;
        let v: Vec<i64> = (0..n)
            .map(|_| {
                let x = (t % side) as i64 - r;
                t /= side;
                x
            })
            .collect();
        let norm: i64 = v.iter().map(|x| x * x).sum();
        if norm > 0 && norm <= bound {
            out.push((v, norm));
        }
    }
    out
}

fn collect_units(
    group: &GroupDescriptor,
    vectors: &[(Vec<i64>, i64)],
    budget: i64,
    cols: &mut Vec<usize>,
    out: &mut Vec<IntMatrix>,
) {
    let n = group.degree();
    if cols.len() == n {
        let mut u = vec![0i64; n * n];
        for (j, &c) in cols.iter().enumerate() {
            for i in 0..n {
                u[i * n + j] = vectors[c].0[i];
            }
        }
        let m = IntMatrix::from_i64(n, n, &u).expect("square");
        if m.is_unimodular() && group.contains(&SymplecticElement::m(&m).expect("unimodular")) {
            out.push(m);
        }
        return;
    }
    // Every remaining column has squared length at least 1.
    let reserve = (n - cols.len() - 1) as i64;
    for (idx, (_, norm)) in vectors.iter().enumerate() {
        if *norm + reserve > budget {
            continue;
        }
        // Gram pruning: a column parallel to an earlier one gives det 0.
        if cols.iter().any(|&c| parallel(&vectors[c].0, &vectors[idx].0)) {
            continue;
        }
        cols.push(idx);
        collect_units(group, vectors, budget - norm, cols, out);
        cols.pop();
    }
}

fn parallel(a: &[i64], b: &[i64]) -> bool {
    let ab: i64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: i64 = a.iter().map(|x| x * x).sum();
    let bb: i64 = b.iter().map(|x| x * x).sum();
    ab * ab == aa * bb
}

/// `E_ij` (symmetric elementary matrix) scaled by `t`.
pub fn elementary_symmetric(n: usize, i: usize, j: usize, t: i64) -> IntMatrix {
    let mut m = IntMatrix::zeros(n, n);
    m.set(i, j, BigInt::from(t));
    m.set(j, i, BigInt::from(t));
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::gamma0p_cosets_sp2;
    use crate::symplectic::tests::random_element;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn sym(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(rows)
    }

    #[test]
    fn membership_examples() {
        let s = sym(&[&[1, -2], &[-2, 5]]);
        for n_level in [2u64, 3, 7] {
            let principal = GroupDescriptor::new(2, Family::Principal, n_level).unwrap();
            let ns = SymplecticElement::translation(&s.scale(&BigInt::from(n_level))).unwrap();
            assert!(principal.contains(&ns));
            let g0 = GroupDescriptor::new(2, Family::Gamma0, n_level).unwrap();
            assert!(!g0.contains(&SymplecticElement::w(2, 2).unwrap()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g0 = GroupDescriptor::new(2, Family::Gamma0, 6).unwrap();
        for _ in 0..50 {
            let u = random_element(&mut rng, 2, 3);
            let v = u.a().clone();
            if v.is_unimodular() {
                assert!(g0.contains(&SymplecticElement::m(&v).unwrap()));
            }
        }
        assert!(g0.contains(&SymplecticElement::m(&sym(&[&[2, 1], &[1, 1]])).unwrap()));
    }

    #[test]
    fn level_one_is_the_full_group() {
        let g = GroupDescriptor::new(2, Family::Principal, 1).unwrap();
        assert_eq!(g.family(), Family::Full);
        assert!(g.contains(&SymplecticElement::w(2, 1).unwrap()));
        assert!(GroupDescriptor::new(2, Family::Gamma0, 0).is_err());
    }

    #[test]
    fn membership_respects_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let groups = [
            GroupDescriptor::new(2, Family::Gamma0, 4).unwrap(),
            GroupDescriptor::new(2, Family::Gamma1, 3).unwrap(),
            GroupDescriptor::new(2, Family::GammaUpper0, 5).unwrap(),
            GroupDescriptor::new(1, Family::Gamma0Upper0, 6).unwrap(),
            GroupDescriptor::new(2, Family::Principal, 2).unwrap(),
        ];
        let mut checked = 0;
        while checked < 500 {
            for group in &groups {
                let n = group.degree();
                let g = random_element(&mut rng, n, 5);
                let h = random_element(&mut rng, n, 5);
                if group.contains(&g) && group.contains(&h) {
                    assert!(group.contains(&g.mul(&h)));
                    assert!(group.contains(&g.inverse()));
                    checked += 1;
                }
                // Elements of Γ⁽ⁿ⁾(N) are always members.
                let q = group.level() as i64;
                let s = IntMatrix::from_rows(&[&[q]]);
                let t = if n == 1 { s } else { sym(&[&[q, 2 * q], &[2 * q, -q]]) };
                let x = SymplecticElement::translation(&t).unwrap();
                let k = g.mul(&x).mul(&g.inverse());
                assert!(group.contains(&k.mul(&k)));
                checked += 1;
            }
        }
    }

    #[test]
    fn principal_cusp_data() {
        for (n, q) in [(1usize, 4u64), (2, 3), (2, 5), (3, 2)] {
            let c = GroupDescriptor::new(n, Family::Principal, q).unwrap().cusp_width_config();
            assert!(c.widths.iter().flatten().all(|&w| w == q));
            assert_eq!(c.omega, q);
            assert_eq!(c.lattice_index, q.pow((n * (n + 1) / 2) as u32));
        }
    }

    #[test]
    fn gamma0_cusp_data_has_width_one() {
        for q in [2u64, 6, 11] {
            let c = GroupDescriptor::new(2, Family::Gamma0, q).unwrap().cusp_width_config();
            assert_eq!(c.omega, 1);
            assert_eq!(c.lattice_index, 1);
        }
    }

    fn config_histogram(p: u64) -> BTreeMap<(u64, u64, u64), usize> {
        let base = GroupDescriptor::new(2, Family::Gamma0, p).unwrap();
        let mut hist = BTreeMap::new();
        for g in gamma0p_cosets_sp2(p).unwrap() {
            let c = base.conjugated(&g).unwrap().cusp_width_config();
            assert_eq!(p % c.omega, 0);
            *hist.entry((c.widths[0][0], c.widths[0][1], c.widths[1][1])).or_insert(0) += 1;
        }
        hist
    }

    /// Widths `(n11, n12, n22)` of the conjugate by a representative whose
    /// bottom-left block is `(a1 a2; 0 0)`, from `C·S·Cᵗ ≡ 0 mod p`.
    fn widths_from_c_row(p: u64, a1: u64, a2: u64) -> (u64, u64, u64) {
        let w = |divisible: bool| if divisible { 1 } else { p };
        (w(a1 * a1 % p == 0), w(2 * a1 * a2 % p == 0), w(a2 * a2 % p == 0))
    }

    #[test]
    fn gamma0p_conjugate_configurations() {
        for p in [3u64, 5, 7] {
            let hist = config_histogram(p);
            // j = 0: C = 0. j = 2: C = 1₂. j = 1: p translates for each line
            // (1,0), (0,1), (x,1) of ℙ¹(𝔽_p).
            let mut want: BTreeMap<(u64, u64, u64), usize> = BTreeMap::new();
            *want.entry((1, 1, 1)).or_default() += 1;
            *want.entry((p, p, p)).or_default() += (p * p * p) as usize;
            let lines = std::iter::once((1, 0)).chain((0..p).map(|x| (x, 1)));
            for (a1, a2) in lines {
                *want.entry(widths_from_c_row(p, a1, a2)).or_default() += p as usize;
            }
            assert_eq!(hist, want, "p = {p}");
            let kinds: Vec<_> = hist.keys().copied().collect();
            assert_eq!(kinds, vec![(1, 1, 1), (1, 1, p), (p, 1, 1), (p, p, p)]);
            assert!(hist.keys().any(|&(a, b, c)| a.max(b).max(c) == p));
        }
    }

    #[test]
    fn gamma0_2_conjugates_include_a_mixed_configuration() {
        // For p = 2 the line (1,1) has 2·c1·c2 ≡ 0, so n12 = 1 while n11 = n22 = 2.
        let hist = config_histogram(2);
        assert_eq!(hist.get(&(2, 1, 2)), Some(&2));
        assert_eq!(hist.values().sum::<usize>(), 15);
    }

    #[test]
    fn cusp_data_depends_only_on_the_coset() {
        let p = 3;
        let base = GroupDescriptor::new(2, Family::Gamma0, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for g in gamma0p_cosets_sp2(p).unwrap().iter().step_by(3) {
            let mut h = random_element(&mut rng, 2, 4);
            while !base.contains(&h) {
                h = random_element(&mut rng, 2, 4);
            }
            let a = base.conjugated(g).unwrap().cusp_width_config();
            let b = base.conjugated(&h.mul(g)).unwrap().cusp_width_config();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cusp_data_json_shape() {
        let c = GroupDescriptor::new(2, Family::Principal, 2).unwrap().cusp_width_config();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        assert_eq!(v["latticeIndex"], 8);
        assert_eq!(v["omega"], 2);
        assert_eq!(v["widths"][0][1], 2);
    }

    #[test]
    fn unit_group_examples() {
        let full = GroupDescriptor::full(2);
        let signed_perms = full.unit_group_elements(2);
        assert_eq!(signed_perms.len(), 8);
        for u in &signed_perms {
            assert_eq!(u.transpose().mul(u).unwrap(), IntMatrix::identity(2));
        }
        for q in [3u64, 4, 7] {
            let p = GroupDescriptor::new(2, Family::Principal, q).unwrap();
            assert_eq!(p.unit_group_elements(2), vec![IntMatrix::identity(2)]);
        }
        // Brute-force oracle for norm ≤ 6 over ‖U‖∞ ≤ 2.
        let units = full.unit_group_elements(6);
        let mut brute = Vec::new();
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                for c in -2i64..=2 {
                    for d in -2i64..=2 {
                        if (a * d - b * c).abs() == 1 && a * a + b * b + c * c + d * d <= 6 {
                            brute.push(IntMatrix::from_rows(&[&[a, b], &[c, d]]));
                        }
                    }
                }
            }
        }
        brute.sort_by_key(|m| m.to_i64_vec());
        assert_eq!(units, brute);
        assert!(units.contains(&sym(&[&[1, 1], &[0, 1]])));
    }

    #[test]
    fn dual_lattice_examples() {
        let full = GroupDescriptor::full(2).dual_lattice();
        let half = RationalSymMatrix::from_fraction(2, &[2, 1, 1, 2], 2).unwrap();
        assert!(dual_lattice_contains(&full, &half));
        let third = RationalSymMatrix::from_fraction(2, &[3, 1, 1, 3], 3).unwrap();
        assert!(!dual_lattice_contains(&full, &third));
        assert_eq!(full, DualLatticeDescriptor::standard(2));
        for q in [2i64, 5] {
            let dual = GroupDescriptor::new(2, Family::Principal, q as u64).unwrap().dual_lattice();
            let t0 = RationalSymMatrix::from_fraction(2, &[1, 0, 0, 1], q).unwrap();
            assert!(dual.contains(&t0));
            let bad = RationalSymMatrix::from_fraction(2, &[1, 0, 0, 1], q * q).unwrap();
            assert!(!dual.contains(&bad));
        }
    }

    #[test]
    fn translation_lattice_index_matches_widths_for_standard_families() {
        for g in [
            GroupDescriptor::new(2, Family::Principal, 4).unwrap(),
            GroupDescriptor::new(2, Family::GammaUpper0, 3).unwrap(),
            GroupDescriptor::new(2, Family::Gamma0, 5).unwrap(),
        ] {
            assert_eq!(g.translation_index(), g.cusp_width_config().lattice_index);
            assert_eq!(g.translation_lattice_basis().len(), 3);
        }
    }

    #[test]
    fn unit_coset_representatives_partition_the_residue_image() {
        // Γ₀: Ū is everything; principal level 3: |GL₂(ℤ) mod 3| = |{det = ±1}| = 48.
        assert_eq!(GroupDescriptor::new(2, Family::Gamma0, 3).unwrap().unit_coset_representatives().unwrap().len(), 1);
        let p3 = GroupDescriptor::new(2, Family::Principal, 3).unwrap();
        let reps = p3.unit_coset_representatives().unwrap();
        assert_eq!(reps.len(), 48);
        assert!(reps.iter().all(IntMatrix::is_unimodular));
        // Degree one, principal level 5: U = ±1 gives two cosets.
        let p5 = GroupDescriptor::new(1, Family::Principal, 5).unwrap();
        assert_eq!(p5.unit_coset_representatives().unwrap().len(), 2);
    }
}
