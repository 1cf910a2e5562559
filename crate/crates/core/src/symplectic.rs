//! Sp_n(ℤ) elements, their action on Siegel's upper half space, automorphy
//! factors, completion of coprime symmetric pairs, and coset enumeration.
//!
//! Conventions: `m(U) = (Uᵗ 0; 0 U⁻¹)`, `n(S) = (1 S; 0 1)`,
//! `g⟨Z⟩ = (AZ + B)(CZ + D)⁻¹` and `J(g, Z) = det(CZ + D)`.

use crate::error::{Error, Result};
use crate::exact_linalg::{IntMatrix, RealSymMatrix, SymmetricForm};
use crate::small::{CMat, IMat};
use crate::subgroup::GroupDescriptor;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::One;
use std::collections::BTreeSet;

/// Integer symplectic matrix `(A B; C D)` of degree `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymplecticElement {
    n: usize,
    a: IntMatrix,
    b: IntMatrix,
    c: IntMatrix,
    d: IntMatrix,
}

/// Standard form `(0 −1; 1 0)` of size `2n`.
pub fn standard_form(n: usize) -> IntMatrix {
    let mut j = IntMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j.set(i, n + i, BigInt::from(-1));
        j.set(n + i, i, BigInt::one());
    }
    j
}

/// Exact test of `gᵗ J g = J`.
pub fn is_symplectic(g: &IntMatrix) -> Result<bool> {
    if !g.is_square() || g.rows() % 2 != 0 {
        return Err(Error::Structural(format!(
            "symplectic test needs an even square matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    let j = standard_form(g.rows() / 2);
    Ok(g.transpose().mul(&j)?.mul(g)? == j)
}

impl SymplecticElement {
    /// Assembles and verifies `(A B; C D)`.
    pub fn from_blocks(a: IntMatrix, b: IntMatrix, c: IntMatrix, d: IntMatrix) -> Result<Self> {
        let full = IntMatrix::from_blocks(&a, &b, &c, &d)?;
        if !is_symplectic(&full)? {
            return Err(Error::Domain("blocks do not form a symplectic matrix".into()));
        }
        Ok(Self { n: a.rows(), a, b, c, d })
    }

    pub fn from_matrix(m: &IntMatrix) -> Result<Self> {
        if !is_symplectic(m)? {
            return Err(Error::Domain("matrix is not symplectic".into()));
        }
        let n = m.rows() / 2;
        Ok(Self {
            n,
            a: m.block(0, 0, n, n),
            b: m.block(0, n, n, n),
            c: m.block(n, 0, n, n),
            d: m.block(n, n, n, n),
        })
    }

    /// Row-major `2n × 2n` integer entries.
    pub fn from_i64(n: usize, entries: &[i64]) -> Result<Self> {
        Self::from_matrix(&IntMatrix::from_i64(2 * n, 2 * n, entries)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            a: IntMatrix::identity(n),
            b: IntMatrix::zeros(n, n),
            c: IntMatrix::zeros(n, n),
            d: IntMatrix::identity(n),
        }
    }

    /// `(0 −1; 1 0)`.
    pub fn inversion(n: usize) -> Self {
        Self {
            n,
            a: IntMatrix::zeros(n, n),
            b: IntMatrix::identity(n).neg(),
            c: IntMatrix::identity(n),
            d: IntMatrix::zeros(n, n),
        }
    }

    /// `m(U) = (Uᵗ 0; 0 U⁻¹)` for unimodular `U`.
    pub fn m(u: &IntMatrix) -> Result<Self> {
        if !u.is_square() || !u.is_unimodular() {
            return Err(Error::Domain("m(U) needs U in GL_n(Z)".into()));
        }
        let n = u.rows();
        let inv = unimodular_inverse(u)?;
        Ok(Self { n, a: u.transpose(), b: IntMatrix::zeros(n, n), c: IntMatrix::zeros(n, n), d: inv })
    }

    /// `n(S) = (1 S; 0 1)` for symmetric integral `S`.
    pub fn translation(s: &IntMatrix) -> Result<Self> {
        if !s.is_symmetric() {
            return Err(Error::Domain("n(S) needs S symmetric".into()));
        }
        let n = s.rows();
        Ok(Self {
            n,
            a: IntMatrix::identity(n),
            b: s.clone(),
            c: IntMatrix::zeros(n, n),
            d: IntMatrix::identity(n),
        })
    }

    /// `w_j`: blocks `A = D = diag(0_j, 1_{n−j})`, `B = diag(−1_j, 0)`, `C = diag(1_j, 0)`.
    pub fn w(n: usize, j: usize) -> Result<Self> {
        if j > n {
            return Err(Error::Domain(format!("w_j needs j ≤ n, got j={j}, n={n}")));
        }
        let diag = |f: &dyn Fn(usize) -> i64| {
            let mut m = IntMatrix::zeros(n, n);
            for i in 0..n {
                m.set(i, i, BigInt::from(f(i)));
            }
            m
        };
        let a = diag(&|i| i64::from(i >= j));
        let b = diag(&|i| -i64::from(i < j));
        let c = diag(&|i| i64::from(i < j));
        Ok(Self { n, d: a.clone(), a, b, c })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &IntMatrix {
        &self.a
    }

    pub fn b(&self) -> &IntMatrix {
        &self.b
    }

    pub fn c(&self) -> &IntMatrix {
        &self.c
    }

    pub fn d(&self) -> &IntMatrix {
        &self.d
    }

    pub fn to_matrix(&self) -> IntMatrix {
        IntMatrix::from_blocks(&self.a, &self.b, &self.c, &self.d).expect("square blocks")
    }

    pub fn mul(&self, o: &Self) -> Self {
        let m = |x: &IntMatrix, y: &IntMatrix| x.mul(y).expect("matching degree");
        let s = |x: IntMatrix, y: IntMatrix| x.add(&y).expect("matching degree");
        Self {
            n: self.n,
            a: s(m(&self.a, &o.a), m(&self.b, &o.c)),
            b: s(m(&self.a, &o.b), m(&self.b, &o.d)),
            c: s(m(&self.c, &o.a), m(&self.d, &o.c)),
            d: s(m(&self.c, &o.b), m(&self.d, &o.d)),
        }
    }

    /// `g⁻¹ = (Dᵗ −Bᵗ; −Cᵗ Aᵗ)`.
    pub fn inverse(&self) -> Self {
        Self {
            n: self.n,
            a: self.d.transpose(),
            b: self.b.transpose().neg(),
            c: self.c.transpose().neg(),
            d: self.a.transpose(),
        }
    }

    pub fn neg(&self) -> Self {
        Self { n: self.n, a: self.a.neg(), b: self.b.neg(), c: self.c.neg(), d: self.d.neg() }
    }

    /// Row-major `2n × 2n` residues in `[0, modulus)`.
    pub fn residues(&self, modulus: u64) -> Vec<i64> {
        self.to_matrix().rem_euclid(modulus)
    }

    /// Blocks as small machine-integer matrices, if `n ≤ 3` and entries fit.
    pub fn to_small(&self) -> Option<SmallSymplectic> {
        Some(SmallSymplectic {
            a: self.a.to_small()?,
            b: self.b.to_small()?,
            c: self.c.to_small()?,
            d: self.d.to_small()?,
        })
    }

    /// `max(‖C‖∞, ‖D‖∞)`.
    pub fn bottom_height(&self) -> BigInt {
        self.c.max_abs().max(self.d.max_abs())
    }
}

/// Inverse of a unimodular integer matrix via its Hermite transform.
pub(crate) fn unimodular_inverse(u: &IntMatrix) -> Result<IntMatrix> {
    let (h, v) = u.row_hermite();
    if h != IntMatrix::identity(u.rows()) {
        return Err(Error::Domain("matrix is not unimodular".into()));
    }
    Ok(v)
}

/// Machine-integer copy of a symplectic element for numeric loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallSymplectic {
    pub a: IMat,
    pub b: IMat,
    pub c: IMat,
    pub d: IMat,
}

impl SmallSymplectic {
    /// `(g⟨Z⟩, J(g, Z))`; `None` if `CZ + D` is numerically singular.
    pub fn act(&self, z: &CMat) -> Option<(CMat, Complex64)> {
        let cz_d = self.c.to_complex().mul(z).add(&self.d.to_complex());
        let j = cz_d.det();
        let inv = cz_d.inverse()?;
        let mut w = self.a.to_complex().mul(z).add(&self.b.to_complex()).mul(&inv);
        w.symmetrize();
        Some((w, j))
    }

    pub fn automorphy(&self, z: &CMat) -> Complex64 {
        self.c.to_complex().mul(z).add(&self.d.to_complex()).det()
    }
}

/// Point `Z = X + iY` of Siegel's upper half space.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    x: RealSymMatrix,
    y: RealSymMatrix,
}

impl SiegelPoint {
    pub fn new(x: RealSymMatrix, y: RealSymMatrix) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::Structural("real and imaginary parts differ in size".into()));
        }
        if !y.definiteness().positive {
            return Err(Error::Domain("imaginary part must be positive definite".into()));
        }
        Ok(Self { x, y })
    }

    /// `x·1_n + i·y·1_n`.
    pub fn scalar(n: usize, x: f64, y: f64) -> Result<Self> {
        Self::new(RealSymMatrix::scalar(n, x), RealSymMatrix::scalar(n, y))
    }

    pub fn degree(&self) -> usize {
        self.x.dim()
    }

    pub fn x(&self) -> &RealSymMatrix {
        &self.x
    }

    pub fn y(&self) -> &RealSymMatrix {
        &self.y
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_parts(&self.x.to_small(), &self.y.to_small())
    }

    pub(crate) fn from_cmat(z: &CMat) -> Result<Self> {
        Self::new(RealSymMatrix::from_small(&z.re()), RealSymMatrix::from_small(&z.im()))
    }

}

fn small_or_err(g: &SymplecticElement, z: &SiegelPoint) -> Result<SmallSymplectic> {
    if g.degree() != z.degree() {
        return Err(Error::Structural("degree of element and point differ".into()));
    }
    if z.degree() > 3 {
        return Err(Error::Capability("numeric action implemented for n ≤ 3".into()));
    }
    g.to_small()
        .ok_or_else(|| Error::Precision("entries exceed machine integers".into()))
}

/// `g⟨Z⟩ = (AZ + B)(CZ + D)⁻¹`.
pub fn act(g: &SymplecticElement, z: &SiegelPoint) -> Result<SiegelPoint> {
    let s = small_or_err(g, z)?;
    let (w, _) = s
        .act(&z.to_cmat())
        .ok_or_else(|| Error::Precision("CZ + D numerically singular".into()))?;
    SiegelPoint::from_cmat(&w)
        .map_err(|_| Error::Precision("image lost positivity in floating point".into()))
}

/// `J(g, Z) = det(CZ + D)`.
pub fn automorphy_factor(g: &SymplecticElement, z: &SiegelPoint) -> Result<Complex64> {
    Ok(small_or_err(g, z)?.automorphy(&z.to_cmat()))
}

/// Checks that `(C, D)` is a coprime symmetric pair.
pub fn check_coprime_symmetric(c: &IntMatrix, d: &IntMatrix) -> Result<()> {
    let n = c.rows();
    if !c.is_square() || d.rows() != n || d.cols() != n {
        return Err(Error::Structural("C and D must be square of equal size".into()));
    }
    if !c.mul(&d.transpose())?.is_symmetric() {
        return Err(Error::Domain("C·Dᵗ is not symmetric".into()));
    }
    let mut stacked = IntMatrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            stacked.set(i, j, c[(i, j)].clone());
            stacked.set(i, n + j, d[(i, j)].clone());
        }
    }
    if !stacked.minor_gcd(n).is_one() {
        return Err(Error::Domain("(C D) is not primitive (pair not coprime)".into()));
    }
    Ok(())
}

/// Completes a coprime symmetric pair to a symplectic element with bottom
/// blocks exactly `(C, D)`.
pub fn complete_pair(c: &IntMatrix, d: &IntMatrix) -> Result<SymplecticElement> {
    check_coprime_symmetric(c, d)?;
    let n = c.rows();
    // Row-reduce P = (Dᵗ; −Cᵗ): V·P = (1; 0), so the first n rows of V give
    // (A₀ | B₀) with A₀Dᵗ − B₀Cᵗ = 1.
    let mut p = IntMatrix::zeros(2 * n, n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, d[(j, i)].clone());
            p.set(n + i, j, -&c[(j, i)]);
        }
    }
    let (h, v) = p.row_hermite();
    if h.block(0, 0, n, n) != IntMatrix::identity(n) {
        return Err(Error::Domain("pair is not coprime".into()));
    }
    let a0 = v.block(0, 0, n, n);
    let b0 = v.block(0, n, n, n);
    // Make A Bᵗ symmetric: A = A₀ + X C, B = B₀ + X D with X − Xᵗ = A₀B₀ᵗ − B₀A₀ᵗ.
    let k = a0.mul(&b0.transpose())?.sub(&b0.mul(&a0.transpose())?)?;
    let mut x = IntMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            x.set(i, j, k[(i, j)].clone());
        }
    }
    let a = a0.add(&x.mul(c)?)?;
    let b = b0.add(&x.mul(d)?)?;
    SymplecticElement::from_blocks(a, b, c.clone(), d.clone())
}

/// One class of `Γ_{0,∞}\Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosetClass {
    /// Bottom blocks of every element of the class.
    pub c: IntMatrix,
    pub d: IntMatrix,
    /// An element of Sp_n(ℤ) with bottom blocks `(C, D)`.
    pub representative: SymplecticElement,
    /// `S mod 𝒮_Γ` with `n(S)·representative ∈ Γ`, entries in `[0, N)`.
    pub offsets: Vec<IntMatrix>,
    /// Height `max(‖C₀‖∞, ‖D₀‖∞)` of the reduced pair the class was built from.
    pub height: u64,
}

impl CosetClass {
    /// `n(S)·representative` for the first offset.
    pub fn element(&self) -> SymplecticElement {
        match self.offsets.first() {
            Some(s) => SymplecticElement::translation(s).expect("symmetric").mul(&self.representative),
            None => self.representative.clone(),
        }
    }
}

/// Canonical form of the `GL_n(ℤ)`-orbit of a pair: row Hermite form of
/// the `n × 2n` matrix `(C D)`, computed in machine integers.
fn canonical_pair(n: usize, cd: &[i64]) -> Vec<i64> {
    let cols = 2 * n;
    let mut h: Vec<Vec<i64>> = cd.chunks(cols).map(<[i64]>::to_vec).collect();
    let mut pivot = 0;
    for col in 0..cols {
        if pivot == n {
            break;
        }
        loop {
            let nz: Vec<usize> = (pivot..n).filter(|&i| h[i][col] != 0).collect();
            if nz.len() <= 1 {
                if let Some(&i) = nz.first() {
                    h.swap(pivot, i);
                }
                break;
            }
            let m = *nz.iter().min_by_key(|&&i| h[i][col].abs()).expect("nonempty");
            for &i in &nz {
                if i != m {
                    let q = h[i][col].div_euclid(h[m][col]);
                    for j in 0..cols {
                        h[i][j] -= q * h[m][j];
                    }
                }
            }
        }
        if h[pivot][col] == 0 {
            continue;
        }
        if h[pivot][col] < 0 {
            h[pivot].iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..pivot {
            let q = h[i][col].div_euclid(h[pivot][col]);
            for j in 0..cols {
                h[i][j] -= q * h[pivot][j];
            }
        }
        pivot += 1;
    }
    h.into_iter().flatten().collect()
}

fn pair_is_symmetric(n: usize, c: &[i64], d: &[i64]) -> bool {
    // C·Dᵗ symmetric.
    for i in 0..n {
        for j in 0..i {
            let cij: i64 = (0..n).map(|k| c[i * n + k] * d[j * n + k]).sum();
            let cji: i64 = (0..n).map(|k| c[j * n + k] * d[i * n + k]).sum();
            if cij != cji {
                return false;
            }
        }
    }
    true
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn pair_is_primitive(n: usize, c: &[i64], d: &[i64]) -> bool {
    match n {
        1 => gcd_i64(c[0], d[0]) == 1,
        2 => {
            let col = |k: usize| if k < 2 { [c[k], c[2 + k]] } else { [d[k - 2], d[2 + (k - 2)]] };
            let mut g = 0;
            for p in 0..4 {
                for q in p + 1..4 {
                    let (u, v) = (col(p), col(q));
                    g = gcd_i64(g, u[0] * v[1] - u[1] * v[0]);
                    if g == 1 {
                        return true;
                    }
                }
            }
            false
        }
        _ => unreachable!("degree checked by caller"),
    }
}

/// Canonical `GL_n(ℤ)`-orbit representatives of coprime symmetric pairs with
/// `‖C‖∞, ‖D‖∞ ≤ h`, keyed by their smallest in-box height.
fn reduced_pairs(n: usize, h: i64) -> Vec<(Vec<i64>, u64)> {
    let mut seen: std::collections::BTreeMap<Vec<i64>, u64> = std::collections::BTreeMap::new();
    let m = n * n;
    let c_range: Vec<i64> = (-h..=h).collect();
    // D needs ±1 entries even at h = 0 so the parabolic class is present.
    let hd = h.max(1);
    let d_range: Vec<i64> = (-hd..=hd).collect();
    let mut c = vec![0i64; m];
    let mut d = vec![0i64; m];
    let total = c_range.len().pow(m as u32) * d_range.len().pow(m as u32);
    for idx in 0..total {
        let mut t = idx;
        for k in 0..m {
            c[k] = c_range[t % c_range.len()];
            t /= c_range.len();
        }
        for k in 0..m {
            d[k] = d_range[t % d_range.len()];
            t /= d_range.len();
        }
        if !pair_is_symmetric(n, &c, &d) || !pair_is_primitive(n, &c, &d) {
            continue;
        }
        let mut cd = Vec::with_capacity(2 * m);
        for i in 0..n {
            cd.extend_from_slice(&c[i * n..(i + 1) * n]);
            cd.extend_from_slice(&d[i * n..(i + 1) * n]);
        }
        let key = canonical_pair(n, &cd);
        let height = c.iter().chain(d.iter()).map(|x| x.unsigned_abs()).max().unwrap_or(0);
        seen.entry(key).and_modify(|e| *e = (*e).min(height)).or_insert(height);
    }
    let mut out: Vec<(Vec<i64>, u64)> = seen.into_iter().collect();
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Classes of `Γ_{0,∞}\Γ` whose reduced pair has `‖C‖∞ ≤ h` and `‖D‖∞ ≤ max(h, 1)`.
///
/// Every `GL_n(ℤ)`-orbit of pairs splits into `𝒰_Γ`-orbits indexed by the
/// cosets `GL_n(ℤ)/𝒰_Γ`; a coset contributes a class when some translate
/// `n(S)·m(U)·g₀` lies in `Γ`.
pub fn enumerate_cosets(group: &GroupDescriptor, h: u64) -> Result<Vec<CosetClass>> {
    let n = group.degree();
    if n == 0 || n > 2 {
        return Err(Error::Capability(format!("coset enumeration for degree {n}")));
    }
    let unit_reps = group.unit_coset_representatives()?;
    let pairs = reduced_pairs(n, h as i64);
    let mut out = Vec::new();
    for (cd, height) in pairs {
        let mut cflat = Vec::with_capacity(n * n);
        let mut dflat = Vec::with_capacity(n * n);
        for i in 0..n {
            cflat.extend_from_slice(&cd[i * 2 * n..i * 2 * n + n]);
            dflat.extend_from_slice(&cd[i * 2 * n + n..(i + 1) * 2 * n]);
        }
        let c0 = IntMatrix::from_i64(n, n, &cflat)?;
        let d0 = IntMatrix::from_i64(n, n, &dflat)?;
        let g0 = complete_pair(&c0, &d0)?;
        for u in &unit_reps {
            let g = SymplecticElement::m(u)?.mul(&g0);
            let offsets = group.translation_offsets(&g);
            if offsets.is_empty() {
                continue;
            }
            out.push(CosetClass {
                c: g.c().clone(),
                d: g.d().clone(),
                representative: g,
                offsets,
                height,
            });
        }
    }
    Ok(out)
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|q| q * q <= p).all(|q| p % q != 0)
}

/// Right coset representatives `w_j n(B_j) m(A⁻¹)` of `Γ₀⁽²⁾(p)\Sp₂(ℤ)`.
///
/// `B_j` runs over symmetric `j × j` matrices with entries in `[0, p)`,
/// embedded in the top-left corner; `A` runs over the identity and
/// `(0 1; −1 x)`, `x ∈ [0, p)`, when `j = 1`, and is the identity otherwise.
/// The coset of `w_1 n(b) m(M)` is fixed by `b` and the line through the
/// first column of `M`; `M = A⁻¹` makes those lines `(1,0)` and `(x,1)`,
/// i.e. all of `ℙ¹(𝔽_p)`. With `M = Aᵗ` or `M = A` the line would not
/// depend on `x`.
pub fn gamma0p_cosets_sp2(p: u64) -> Result<Vec<SymplecticElement>> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    let p = p as i64;
    let mut out = vec![SymplecticElement::identity(2)];
    let w1 = SymplecticElement::w(2, 1)?;
    let mut a_reps = vec![IntMatrix::identity(2)];
    for x in 0..p {
        a_reps.push(IntMatrix::from_rows(&[&[0, 1], &[-1, x]]));
    }
    for a in &a_reps {
        let m_a = SymplecticElement::m(&unimodular_inverse(a)?)?;
        for b in 0..p {
            let nb = SymplecticElement::translation(&IntMatrix::from_rows(&[&[b, 0], &[0, 0]]))?;
            out.push(w1.mul(&nb).mul(&m_a));
        }
    }
    let w2 = SymplecticElement::w(2, 2)?;
    for b11 in 0..p {
        for b12 in 0..p {
            for b22 in 0..p {
                let s = IntMatrix::from_rows(&[&[b11, b12], &[b12, b22]]);
                out.push(w2.mul(&SymplecticElement::translation(&s)?));
            }
        }
    }
    Ok(out)
}

/// Sorted set of distinct bottom-row canonical forms, used by tests.
pub fn canonical_bottom_rows(classes: &[CosetClass]) -> BTreeSet<Vec<i64>> {
    classes
        .iter()
        .map(|c| {
            let n = c.c.rows();
            let mut cd = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    cd.push(c.c[(i, j)].clone());
                }
                for j in 0..n {
                    cd.push(c.d[(i, j)].clone());
                }
            }
            let m = IntMatrix::new(n, 2 * n, cd).expect("shape");
            m.row_hermite().0.to_i64_vec().expect("small")
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::subgroup::{Family, GroupDescriptor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_element(rng: &mut ChaCha8Rng, n: usize, steps: usize) -> SymplecticElement {
        let mut g = SymplecticElement::identity(n);
        for _ in 0..steps {
            let h = match rng.gen_range(0..3) {
                0 => {
                    let mut u = IntMatrix::identity(n);
                    if n > 1 {
                        let i = rng.gen_range(0..n);
                        let j = (i + rng.gen_range(1..n)) % n;
                        u.set(i, j, BigInt::from(rng.gen_range(-2..=2)));
                    } else {
                        u.set(0, 0, BigInt::from(if rng.gen() { 1 } else { -1 }));
                    }
                    SymplecticElement::m(&u).unwrap()
                }
                1 => {
                    let mut s = IntMatrix::zeros(n, n);
                    for i in 0..n {
                        for j in i..n {
                            let v = BigInt::from(rng.gen_range(-2..=2));
                            s.set(i, j, v.clone());
                            s.set(j, i, v);
                        }
                    }
                    SymplecticElement::translation(&s).unwrap()
                }
                _ => SymplecticElement::w(n, rng.gen_range(1..=n)).unwrap(),
            };
            g = g.mul(&h);
        }
        g
    }

    pub(crate) fn random_point(rng: &mut ChaCha8Rng, n: usize) -> SiegelPoint {
        let mut x = vec![0.0; n * n];
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = rng.gen_range(-1.0..1.0);
            }
            for j in i..n {
                let v = rng.gen_range(-1.0..1.0);
                x[i * n + j] = v;
                x[j * n + i] = v;
            }
        }
        let mut y = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                y[i * n + j] = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum::<f64>() + if i == j { 0.3 } else { 0.0 };
            }
        }
        SiegelPoint::new(RealSymMatrix::new(n, x).unwrap(), RealSymMatrix::new(n, y).unwrap()).unwrap()
    }

    fn i2() -> SiegelPoint {
        SiegelPoint::scalar(2, 0.0, 1.0).unwrap()
    }

    #[test]
    fn symplectic_relation_examples() {
        assert!(is_symplectic(&IntMatrix::identity(4)).unwrap());
        for j in 0..=2 {
            assert!(is_symplectic(&SymplecticElement::w(2, j).unwrap().to_matrix()).unwrap());
        }
        let swapped = IntMatrix::from_rows(&[&[0, 1, 0, 0], &[1, 0, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
        assert!(!is_symplectic(&swapped).unwrap());
        assert!(matches!(is_symplectic(&IntMatrix::identity(3)), Err(Error::Structural(_))));
    }

    #[test]
    fn action_examples() {
        let z = random_point(&mut ChaCha8Rng::seed_from_u64(1), 2);
        let w = act(&SymplecticElement::identity(2), &z).unwrap();
        assert!(w.x().as_slice().iter().zip(z.x().as_slice()).all(|(a, b)| (a - b).abs() < 1e-14));

        let i1 = SiegelPoint::scalar(1, 0.0, 1.0).unwrap();
        let w = act(&SymplecticElement::inversion(1), &i1).unwrap();
        assert!(w.x().get(0, 0).abs() < 1e-15 && (w.y().get(0, 0) - 1.0).abs() < 1e-15);

        let s = IntMatrix::from_rows(&[&[2, -1], &[-1, 3]]);
        let w = act(&SymplecticElement::translation(&s).unwrap(), &z).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let shift = s.to_rows_i64().unwrap()[i][j] as f64;
                assert!((w.x().get(i, j) - z.x().get(i, j) - shift).abs() < 1e-13);
                assert!((w.y().get(i, j) - z.y().get(i, j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn automorphy_examples() {
        let z = random_point(&mut ChaCha8Rng::seed_from_u64(2), 2);
        assert_eq!(automorphy_factor(&SymplecticElement::identity(2), &z).unwrap(), Complex64::new(1.0, 0.0));
        let i1 = SiegelPoint::scalar(1, 0.0, 1.0).unwrap();
        let j = automorphy_factor(&SymplecticElement::inversion(1), &i1).unwrap();
        assert!((j - Complex64::i()).norm() < 1e-15);
        let j = automorphy_factor(&SymplecticElement::w(2, 1).unwrap(), &i2()).unwrap();
        assert!((j - Complex64::i()).norm() < 1e-15);
    }

    #[test]
    fn cocycle_and_imaginary_part_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=2 {
            for _ in 0..200 {
                let g1 = random_element(&mut rng, n, 4);
                let g2 = random_element(&mut rng, n, 4);
                let z = random_point(&mut rng, n);
                let lhs = automorphy_factor(&g1.mul(&g2), &z).unwrap();
                let g2z = act(&g2, &z).unwrap();
                let rhs = automorphy_factor(&g1, &g2z).unwrap() * automorphy_factor(&g2, &z).unwrap();
                assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm().max(1.0), "{lhs} vs {rhs}");

                let j = automorphy_factor(&g1, &z).unwrap();
                let w = act(&g1, &z).unwrap();
                let want = z.y().det() / j.norm_sqr();
                assert!((w.y().det() - want).abs() <= 1e-9 * want, "{} vs {want}", w.y().det());
            }
        }
    }

    #[test]
    fn complete_pair_examples() {
        let g = complete_pair(&IntMatrix::zeros(2, 2), &IntMatrix::identity(2)).unwrap();
        assert!(g.c().is_zero() && *g.d() == IntMatrix::identity(2));
        let g = complete_pair(&IntMatrix::identity(1), &IntMatrix::zeros(1, 1)).unwrap();
        assert_eq!(g, SymplecticElement::inversion(1));
        let g = complete_pair(&IntMatrix::identity(2), &IntMatrix::zeros(2, 2)).unwrap();
        assert_eq!(g, SymplecticElement::inversion(2));

        let c = IntMatrix::from_rows(&[&[1, 2], &[0, 3]]);
        let d = IntMatrix::from_rows(&[&[4, 1], &[1, 1]]);
        // C·Dᵗ = (6 3; 3 3) is symmetric and (C D) is primitive.
        let g = complete_pair(&c, &d).unwrap();
        assert_eq!((g.c(), g.d()), (&c, &d));

        let two = IntMatrix::from_rows(&[&[2]]);
        assert!(matches!(complete_pair(&two, &IntMatrix::from_rows(&[&[4]])), Err(Error::Domain(_))));
        let c = IntMatrix::identity(2);
        let d = IntMatrix::from_rows(&[&[0, 1], &[0, 0]]);
        assert!(matches!(complete_pair(&c, &d), Err(Error::Domain(_))));
    }

    #[test]
    fn random_completions_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g = random_element(&mut rng, 2, 6);
            let h = complete_pair(g.c(), g.d()).unwrap();
            assert_eq!((h.c(), h.d()), (g.c(), g.d()));
        }
    }

    /// Coprime rows `(c, d)` with `|c|, |d| ≤ h`, up to sign.
    fn degree_one_rows(h: i64, keep: impl Fn(i64, i64) -> bool) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        for c in -h..=h {
            for d in -h..=h {
                if num_integer::gcd(c, d) == 1 && keep(c, d) {
                    let (c, d) = if c < 0 || (c == 0 && d < 0) { (-c, -d) } else { (c, d) };
                    out.insert(vec![c, d]);
                }
            }
        }
        out
    }

    #[test]
    fn degree_one_cosets_match_coprime_rows() {
        let full = GroupDescriptor::full(1);
        let classes = enumerate_cosets(&full, 1).unwrap();
        assert_eq!(classes.len(), 4);
        assert_eq!(canonical_bottom_rows(&classes), degree_one_rows(1, |_, _| true));
        assert!(classes.iter().all(|c| c.offsets.len() == 1 && c.offsets[0].is_zero()));

        let g0 = GroupDescriptor::new(1, Family::Gamma0, 2).unwrap();
        let classes = enumerate_cosets(&g0, 2).unwrap();
        let rows = canonical_bottom_rows(&classes);
        assert_eq!(rows, degree_one_rows(2, |c, _| c % 2 == 0));
        assert_eq!(rows.len(), 3);
        assert!(classes.iter().all(|c| g0.contains(&c.element())));
    }

    #[test]
    fn degree_two_parabolic_class_only_at_height_zero() {
        let classes = enumerate_cosets(&GroupDescriptor::full(2), 0).unwrap();
        assert_eq!(classes.len(), 1);
        assert!(classes[0].c.is_zero());
    }

    #[test]
    fn degree_two_classes_are_distinct_orbits() {
        let classes = enumerate_cosets(&GroupDescriptor::full(2), 1).unwrap();
        assert_eq!(canonical_bottom_rows(&classes).len(), classes.len());
        for c in &classes {
            check_coprime_symmetric(&c.c, &c.d).unwrap();
            assert!(c.height <= 1);
        }
    }

    #[test]
    fn unsupported_degree_is_a_capability_error() {
        assert!(matches!(enumerate_cosets(&GroupDescriptor::full(3), 1), Err(Error::Capability(_))));
    }

    #[test]
    fn gamma0p_coset_counts_and_distinctness() {
        for (p, want) in [(2u64, 15usize), (3, 40), (5, 156)] {
            let reps = gamma0p_cosets_sp2(p).unwrap();
            assert_eq!(reps.len(), want);
            assert_eq!(want as u64, (p + 1) * (p * p + 1));
            let group = GroupDescriptor::new(2, Family::Gamma0, p).unwrap();
            for (i, g) in reps.iter().enumerate() {
                assert!(is_symplectic(&g.to_matrix()).unwrap());
                for h in &reps[..i] {
                    assert!(!group.contains(&g.mul(&h.inverse())), "p={p}: cosets coincide");
                }
            }
        }
        assert!(matches!(gamma0p_cosets_sp2(4), Err(Error::Domain(_))));
    }
}
