//! Exact integer and rational matrices, floating symmetric matrices,
//! positive-definiteness tests, and Minkowski reduction in degree ≤ 3.

use crate::error::{Error, Result};
use crate::small::{IMat, RMat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::sync::OnceLock;

/// Dense integer matrix with arbitrary-precision entries, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].to_string()).collect())
            .collect();
        write!(f, "IntMatrix{rows:?}")
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Structural(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_i64(rows: usize, cols: usize, data: &[i64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| BigInt::from(x)).collect())
    }

    /// Builds from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let flat: Vec<i64> = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self::from_i64(r, c, &flat).expect("shape checked")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[j * self.rows + i] = self[(i, j)].clone();
            }
        }
        m
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::Structural(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut m = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    m.data[i * o.cols + j] += a * &o[(k, j)];
                }
            }
        }
        Ok(m)
    }

    fn zip_with(&self, o: &Self, f: impl Fn(&BigInt, &BigInt) -> BigInt) -> Result<Self> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(Error::Structural("shape mismatch".into()));
        }
        let data = self.data.iter().zip(&o.data).map(|(a, b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.zip_with(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.zip_with(o, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }

    pub fn scale(&self, s: &BigInt) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> BigInt {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_default()
    }

    /// Sub-block of shape `h × w` with top-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Self {
        let mut m = Self::zeros(h, w);
        for i in 0..h {
            for j in 0..w {
                m.data[i * w + j] = self[(r0 + i, c0 + j)].clone();
            }
        }
        m
    }

    /// Assembles `(A B; C D)` from four equally sized square blocks.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        let n = a.rows;
        if [a, b, c, d].iter().any(|m| m.rows != n || m.cols != n) {
            return Err(Error::Structural("blocks must be square of equal size".into()));
        }
        let mut m = Self::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * 2 * n + j] = a[(i, j)].clone();
                m.data[i * 2 * n + j + n] = b[(i, j)].clone();
                m.data[(i + n) * 2 * n + j] = c[(i, j)].clone();
                m.data[(i + n) * 2 * n + j + n] = d[(i, j)].clone();
            }
        }
        Ok(m)
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<BigInt> {
        if !self.is_square() {
            return Err(Error::Structural("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a: Vec<Vec<BigInt>> =
            (0..n).map(|i| self.data[i * n..(i + 1) * n].to_vec()).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        Ok(sign * &a[n - 1][n - 1])
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().map(|d| d.abs().is_one()).unwrap_or(false)
    }

    /// Entries as machine integers, if they all fit.
    pub fn to_i64_vec(&self) -> Option<Vec<i64>> {
        self.data.iter().map(ToPrimitive::to_i64).collect()
    }

    /// Row-major nested `i64` rows, if all entries fit.
    pub fn to_rows_i64(&self) -> Option<Vec<Vec<i64>>> {
        let flat = self.to_i64_vec()?;
        Some(flat.chunks(self.cols.max(1)).map(<[i64]>::to_vec).collect())
    }

    /// Entries reduced into `[0, modulus)`.
    pub fn rem_euclid(&self, modulus: u64) -> Vec<i64> {
        let m = BigInt::from(modulus);
        self.data
            .iter()
            .map(|x| x.mod_floor(&m).to_i64().expect("residue fits"))
            .collect()
    }

    /// Small-matrix view for square matrices of order ≤ 3 with `i64` entries.
    pub fn to_small(&self) -> Option<IMat> {
        if !self.is_square() || self.rows > 3 {
            return None;
        }
        Some(IMat::from_slice(self.rows, &self.to_i64_vec()?))
    }

    pub fn from_small(m: &IMat) -> Self {
        Self::from_i64(m.n, m.n, &m.to_vec()).expect("square")
    }

    /// Row Hermite normal form `H = V · self` with `V` unimodular.
    ///
    /// Pivots are positive and entries above each pivot lie in `[0, pivot)`.
    pub fn row_hermite(&self) -> (Self, Self) {
        let (r, c) = (self.rows, self.cols);
        let mut h: Vec<Vec<BigInt>> = (0..r).map(|i| self.data[i * c..(i + 1) * c].to_vec()).collect();
        let mut v: Vec<Vec<BigInt>> = (0..r)
            .map(|i| (0..r).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        let mut pivot_row = 0;
        for col in 0..c {
            if pivot_row == r {
                break;
            }
            // Euclid on column `col` over rows pivot_row..r.
            loop {
                let nz: Vec<usize> = (pivot_row..r).filter(|&i| !h[i][col].is_zero()).collect();
                if nz.len() <= 1 {
                    if let Some(&i) = nz.first() {
                        h.swap(pivot_row, i);
                        v.swap(pivot_row, i);
                    }
                    break;
                }
                let &m = nz
                    .iter()
                    .min_by(|&&a, &&b| h[a][col].abs().cmp(&h[b][col].abs()))
                    .expect("nonempty");
                for &i in &nz {
                    if i == m {
                        continue;
                    }
                    let q = h[i][col].div_floor(&h[m][col]);
                    for j in 0..c {
                        let t = &q * &h[m][j];
                        h[i][j] -= t;
                    }
                    for j in 0..r {
                        let t = &q * &v[m][j];
                        v[i][j] -= t;
                    }
                }
            }
            if h[pivot_row][col].is_zero() {
                continue;
            }
            if h[pivot_row][col].is_negative() {
                h[pivot_row].iter_mut().for_each(|x| *x = -&*x);
                v[pivot_row].iter_mut().for_each(|x| *x = -&*x);
            }
            for i in 0..pivot_row {
                let q = h[i][col].div_floor(&h[pivot_row][col]);
                if q.is_zero() {
                    continue;
                }
                for j in 0..c {
                    let t = &q * &h[pivot_row][j];
                    h[i][j] -= t;
                }
                for j in 0..r {
                    let t = &q * &v[pivot_row][j];
                    v[i][j] -= t;
                }
            }
            pivot_row += 1;
        }
        let hm = Self { rows: r, cols: c, data: h.into_iter().flatten().collect() };
        let vm = Self { rows: r, cols: r, data: v.into_iter().flatten().collect() };
        (hm, vm)
    }

    /// Gcd of all `k × k` minors; equals 1 iff the rows extend to a basis
    /// of ℤ^cols (for `k = rows`).
    pub fn minor_gcd(&self, k: usize) -> BigInt {
        let mut g = BigInt::zero();
        for rs in combinations(self.rows, k) {
            for cs in combinations(self.cols, k) {
                let mut sub = Self::zeros(k, k);
                for (a, &i) in rs.iter().enumerate() {
                    for (b, &j) in cs.iter().enumerate() {
                        sub.data[a * k + b] = self[(i, j)].clone();
                    }
                }
                g = g.gcd(&sub.det().expect("square"));
                if g.is_one() {
                    return g;
                }
            }
        }
        g
    }
}

/// All increasing `k`-subsets of `0..n`.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Certificate attached to a positive-definiteness decision.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Leading principal minors, computed exactly.
    Minors(Vec<BigRational>),
    /// `M = L·diag(d)·Lᵗ` with unit lower-triangular `L` (row-major).
    Ldl { l: Vec<f64>, d: Vec<f64> },
}

/// Outcome of [`is_positive_definite`].
#[derive(Debug, Clone, PartialEq)]
pub struct Definiteness {
    pub positive: bool,
    pub witness: Witness,
}

/// Symmetric matrices admitting a positive-definiteness test.
pub trait SymmetricForm {
    fn definiteness(&self) -> Definiteness;
}

/// Decides `M > 0` and returns the certificate used.
pub fn is_positive_definite<M: SymmetricForm>(m: &M) -> Definiteness {
    m.definiteness()
}

/// Symmetric matrix with exact rational entries.
#[derive(Clone)]
pub struct RationalSymMatrix {
    n: usize,
    data: Vec<BigRational>,
    positive: OnceLock<bool>,
}

impl fmt::Debug for RationalSymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).to_string()).collect())
            .collect();
        write!(f, "RationalSymMatrix{rows:?}")
    }
}

impl PartialEq for RationalSymMatrix {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.data == o.data
    }
}

impl RationalSymMatrix {
    pub fn new(n: usize, data: Vec<BigRational>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Structural(format!("{} entries for order {n}", data.len())));
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::Structural(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        Ok(Self { n, data, positive: OnceLock::new() })
    }

    /// `num / den` entrywise from integer numerators.
    pub fn from_fraction(n: usize, num: &[i64], den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        Self::new(
            n,
            num.iter()
                .map(|&x| BigRational::new(BigInt::from(x), BigInt::from(den)))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.n + j]
    }

    /// `tr(self · S)` for an integer matrix `S`.
    pub fn trace_pairing(&self, s: &IntMatrix) -> Result<BigRational> {
        if s.rows() != self.n || s.cols() != self.n {
            return Err(Error::Structural("pairing dimension mismatch".into()));
        }
        let mut acc = BigRational::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.get(i, j) * BigRational::from_integer(s[(j, i)].clone());
            }
        }
        Ok(acc)
    }

    /// Leading principal minors, in order of size.
    pub fn leading_minors(&self) -> Vec<BigRational> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut minors = Vec::with_capacity(n);
        let mut det = BigRational::one();
        for k in 0..n {
            let p = a[k * n + k].clone();
            if p.is_zero() {
                // Pivot vanishes: this minor is zero, remaining ones need a
                // fresh computation without elimination shortcuts.
                minors.push(BigRational::zero());
                for m in k + 1..n {
                    minors.push(Self::principal_det(&self.data, n, m + 1));
                }
                return minors;
            }
            det *= &p;
            minors.push(det.clone());
            for i in k + 1..n {
                let f = &a[i * n + k] / &p;
                for j in k..n {
                    let t = &f * &a[k * n + j];
                    a[i * n + j] -= t;
                }
            }
        }
        minors
    }

    fn principal_det(data: &[BigRational], n: usize, m: usize) -> BigRational {
        let mut a: Vec<BigRational> =
            (0..m).flat_map(|i| data[i * n..i * n + m].to_vec()).collect();
        let mut det = BigRational::one();
        for k in 0..m {
            let Some(piv) = (k..m).find(|&r| !a[r * m + k].is_zero()) else {
                return BigRational::zero();
            };
            if piv != k {
                for j in 0..m {
                    a.swap(k * m + j, piv * m + j);
                }
                det = -det;
            }
            let p = a[k * m + k].clone();
            det *= &p;
            for i in k + 1..m {
                let f = &a[i * m + k] / &p;
                for j in k..m {
                    let t = &f * &a[k * m + j];
                    a[i * m + j] -= t;
                }
            }
        }
        det
    }

    pub fn det(&self) -> BigRational {
        Self::principal_det(&self.data, self.n, self.n)
    }

    /// Cached positive-definiteness flag.
    pub fn is_positive(&self) -> bool {
        *self.positive.get_or_init(|| self.leading_minors().iter().all(Signed::is_positive))
    }

    pub fn to_real(&self) -> RealSymMatrix {
        RealSymMatrix {
            n: self.n,
            data: self.data.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
        }
    }
}

impl SymmetricForm for RationalSymMatrix {
    fn definiteness(&self) -> Definiteness {
        let minors = self.leading_minors();
        let positive = minors.iter().all(Signed::is_positive);
        let _ = self.positive.set(positive);
        Definiteness { positive, witness: Witness::Minors(minors) }
    }
}

/// Symmetric matrix of binary64 values; serialised as a list of rows.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RealSymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for RealSymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Structural("rows of unequal length".into()));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }
}

impl From<RealSymMatrix> for Vec<Vec<f64>> {
    fn from(m: RealSymMatrix) -> Self {
        m.data.chunks(m.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

impl RealSymMatrix {
    /// Validates symmetry to `1e-12` relative and symmetrises exactly.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Structural(format!("{} entries for order {n}", data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite entry".into()));
        }
        let scale = data.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
        let mut data = data;
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::Structural(format!("entry ({i},{j}) breaks symmetry")));
                }
                let m = 0.5 * (a + b);
                data[i * n + j] = m;
                data[j * n + i] = m;
            }
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        let mut data = vec![0.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = s);
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        if self.n != o.n {
            return Err(Error::Structural("dimension mismatch".into()));
        }
        Ok(Self { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() })
    }

    /// LDLᵗ factorisation; `None` once a pivot is not strictly positive.
    pub fn ldl(&self) -> (bool, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        let mut d = vec![0.0; n];
        for j in 0..n {
            let mut s = self.get(j, j);
            for k in 0..j {
                s -= l[j * n + k] * l[j * n + k] * d[k];
            }
            d[j] = s;
            l[j * n + j] = 1.0;
            if !(s > 0.0) {
                return (false, l, d);
            }
            for i in j + 1..n {
                let mut t = self.get(i, j);
                for k in 0..j {
                    t -= l[i * n + k] * l[j * n + k] * d[k];
                }
                l[i * n + j] = t / s;
            }
        }
        (true, l, d)
    }

    pub fn det(&self) -> f64 {
        match self.n {
            0 => 1.0,
            1..=3 => self.to_small().det(),
            _ => nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.data).determinant(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self.n {
            1..=3 => self.to_small().min_eigenvalue(),
            _ => nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.data)
                .symmetric_eigenvalues()
                .min(),
        }
    }

    /// `Uᵗ · self · U`.
    pub fn congruence(&self, u: &IntMatrix) -> Result<Self> {
        if u.rows() != self.n || !u.is_square() {
            return Err(Error::Structural("congruence dimension mismatch".into()));
        }
        let n = self.n;
        let uf: Vec<f64> = u.entries().iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += uf[a * n + i] * self.data[a * n + b] * uf[b * n + j];
                    }
                }
                out[i * n + j] = s;
            }
        }
        Self::new(n, out)
    }

    /// `tr(self · o)`.
    pub fn trace_mul(&self, o: &Self) -> f64 {
        let n = self.n;
        (0..n).flat_map(|i| (0..n).map(move |k| (i, k))).map(|(i, k)| self.get(i, k) * o.get(k, i)).sum()
    }

    /// Small-matrix view; panics for order > 3.
    pub fn to_small(&self) -> RMat {
        RMat::from_slice(self.n, &self.data)
    }

    pub fn from_small(m: &RMat) -> Self {
        Self { n: m.n, data: m.to_vec() }
    }
}

impl SymmetricForm for RealSymMatrix {
    fn definiteness(&self) -> Definiteness {
        let (positive, l, d) = self.ldl();
        Definiteness { positive, witness: Witness::Ldl { l, d } }
    }
}

/// Minkowski reduction for `n ≤ 3`.
///
/// Returns `(Uᵗ Y U, U)`. Columns of `U` are chosen greedily as successive
/// shortest vectors extending to a basis; among vectors of equal length the
/// one with fewest nonzero entries, then lowest last index, then
/// lexicographically smallest absolute pattern wins. The first nonzero entry
/// of each column of `U` is positive.
pub fn minkowski_reduce(y: &RealSymMatrix) -> Result<(RealSymMatrix, IntMatrix)> {
    let n = y.dim();
    if n == 0 || n > 3 {
        return Err(Error::Capability(format!(
            "exact reduction is available for degree 1 to 3, got {n}"
        )));
    }
    if !y.definiteness().positive {
        return Err(Error::Domain("reduction needs a positive-definite matrix".into()));
    }
    let (yr, u) = reduce_small(&y.to_small())
        .ok_or_else(|| Error::Precision("reduction lost positivity in floating point".into()))?;
    Ok((RealSymMatrix::from_small(&yr), IntMatrix::from_small(&u)))
}

/// Weak normal form for any degree: repeated size reduction and diagonal
/// sorting. Not Minkowski-reduced in general for `n > 3`.
pub fn weak_reduce(y: &RealSymMatrix) -> Result<(RealSymMatrix, IntMatrix)> {
    let n = y.dim();
    if !y.definiteness().positive {
        return Err(Error::Domain("reduction needs a positive-definite matrix".into()));
    }
    let mut g = y.as_slice().to_vec();
    let mut u: Vec<i64> = (0..n * n).map(|k| i64::from(k / n == k % n)).collect();
    weak_reduce_raw(n, &mut g, &mut u);
    let um = IntMatrix::from_i64(n, n, &u)?;
    Ok((y.congruence(&um)?, um))
}

/// In-place weak reduction of a Gram matrix `g` with basis-change tracking.
fn weak_reduce_raw(n: usize, g: &mut [f64], u: &mut [i64]) {
    let col_op = |g: &mut [f64], u: &mut [i64], j: usize, i: usize, q: i64| {
        // column_j -= q · column_i, applied as a congruence.
        let qf = q as f64;
        for r in 0..n {
            u[r * n + j] -= q * u[r * n + i];
        }
        for r in 0..n {
            g[r * n + j] -= qf * g[r * n + i];
        }
        for c in 0..n {
            g[j * n + c] -= qf * g[i * n + c];
        }
    };
    for _ in 0..500 {
        let mut changed = false;
        // Sort by diagonal (stable insertion sort keeps determinism).
        for j in 1..n {
            let mut k = j;
            while k > 0 && g[k * n + k] < g[(k - 1) * n + (k - 1)] * (1.0 - 1e-14) {
                swap_basis(n, g, u, k - 1, k);
                k -= 1;
                changed = true;
            }
        }
        for j in 1..n {
            for i in (0..j).rev() {
                let r = g[i * n + j] / g[i * n + i];
                if r.abs() > 0.5 * (1.0 + 1e-12) {
                    col_op(g, u, j, i, r.round() as i64);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn swap_basis(n: usize, g: &mut [f64], u: &mut [i64], a: usize, b: usize) {
    for r in 0..n {
        u.swap(r * n + a, r * n + b);
        g.swap(r * n + a, r * n + b);
    }
    for c in 0..n {
        g.swap(a * n + c, b * n + c);
    }
}

/// Fincke–Pohst enumeration of all `v ≠ 0` with `G[v] ≤ bound`, one of each
/// `±v` pair (first nonzero entry positive).
pub(crate) fn short_vectors(g: &RMat, bound: f64) -> Vec<([i64; 3], f64)> {
    let n = g.n;
    // q-form: G[v] = Σ_i q_ii (v_i + Σ_{j>i} q_ij v_j)².
    let mut q = [[0.0_f64; 3]; 3];
    for i in 0..n {
        for j in i..n {
            q[i][j] = g.get(i, j);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            q[j][i] = q[i][j];
            q[i][j] /= q[i][i];
        }
        for k in i + 1..n {
            for l in k..n {
                q[k][l] -= q[k][i] * q[i][l];
            }
        }
    }
    let mut out = Vec::new();
    let mut v = [0i64; 3];
    fn rec(
        level: usize,
        n: usize,
        q: &[[f64; 3]; 3],
        remaining: f64,
        v: &mut [i64; 3],
        bound: f64,
        out: &mut Vec<([i64; 3], f64)>,
    ) {
        let center: f64 = -(level + 1..n).map(|j| q[level][j] * v[j] as f64).sum::<f64>();
        let radius = (remaining.max(0.0) / q[level][level]).sqrt() + 1e-9;
        let lo = (center - radius).ceil() as i64;
        let hi = (center + radius).floor() as i64;
        for x in lo..=hi {
            v[level] = x;
            let d = x as f64 - center;
            let used = q[level][level] * d * d;
            let rem = remaining - used;
            if rem < -1e-9 * bound.max(1.0) {
                continue;
            }
            if level == 0 {
                let val = bound - rem;
                if v[..n].iter().any(|&t| t != 0) {
                    let first = v[..n].iter().find(|&&t| t != 0).copied().unwrap_or(0);
                    if first > 0 {
                        out.push((*v, val));
                    }
                }
            } else {
                rec(level - 1, n, q, rem, v, bound, out);
            }
        }
        v[level] = 0;
    }
    rec(n - 1, n, &q, bound, &mut v, bound, &mut out);
    out
}

/// Tie-break key for equal-length vectors.
fn tie_key(v: &[i64; 3], n: usize) -> (usize, usize, Vec<i64>, Vec<i64>) {
    let nnz = v[..n].iter().filter(|&&x| x != 0).count();
    let last = v[..n].iter().rposition(|&x| x != 0).unwrap_or(0);
    let abs: Vec<i64> = v[..n].iter().rev().map(|x| x.abs()).collect();
    let signs: Vec<i64> = v[..n].iter().map(|x| -x.signum()).collect();
    (nnz, last, abs, signs)
}

/// Core of [`minkowski_reduce`] on small matrices; `None` on numerical failure.
pub(crate) fn reduce_small(y: &RMat) -> Option<(RMat, IMat)> {
    let n = y.n;
    if n == 1 {
        return Some((*y, IMat::identity(1)));
    }
    let mut g = y.to_vec();
    let mut u0 = IMat::identity(n).to_vec();
    weak_reduce_raw(n, &mut g, &mut u0);
    let gp = RMat::from_slice(n, &g);
    let u0 = IMat::from_slice(n, &u0);
    let mut bound = gp.trace() * (1.0 + 1e-9);
    let mut chosen: Vec<[i64; 3]> = Vec::new();
    for _attempt in 0..6 {
        let mut cands = short_vectors(&gp, bound);
        if cands.is_empty() {
            return None;
        }
        cands.sort_by(|a, b| {
            let (la, lb) = (a.1, b.1);
            let tol = 1e-11 * la.abs().max(lb.abs());
            if (la - lb).abs() > tol {
                la.partial_cmp(&lb).unwrap()
            } else {
                tie_key(&a.0, n).cmp(&tie_key(&b.0, n))
            }
        });
        chosen.clear();
        for (v, _) in &cands {
            let k = chosen.len();
            if k == n {
                break;
            }
            let mut rows: Vec<i64> = chosen.iter().flat_map(|c| c[..n].to_vec()).collect();
            rows.extend_from_slice(&v[..n]);
            let m = IntMatrix::from_i64(k + 1, n, &rows).ok()?;
            if m.minor_gcd(k + 1).is_one() {
                chosen.push(*v);
            }
        }
        if chosen.len() == n {
            break;
        }
        bound *= 4.0;
    }
    if chosen.len() != n {
        return None;
    }
    let mut v = IMat::zeros(n);
    for (j, c) in chosen.iter().enumerate() {
        for i in 0..n {
            v.set(i, j, c[i]);
        }
    }
    let u = u0.mul(&v);
    let mut u = u;
    for j in 0..n {
        let first = (0..n).map(|i| u.get(i, j)).find(|&x| x != 0).unwrap_or(1);
        if first < 0 {
            for i in 0..n {
                u.set(i, j, -u.get(i, j));
            }
        }
    }
    let uf = RMat::from_int(&u);
    let mut yr = y.congruence(&uf);
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (yr.get(i, j) + yr.get(j, i));
            yr.set(i, j, m);
            yr.set(j, i, m);
        }
    }
    Some((yr, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: usize, xs: &[i64]) -> RationalSymMatrix {
        RationalSymMatrix::from_fraction(n, xs, 1).unwrap()
    }

    #[test]
    fn identity_is_positive_definite() {
        for n in 1..=4 {
            let m = RationalSymMatrix::new(
                n,
                (0..n * n)
                    .map(|k| BigRational::from_integer(BigInt::from(i64::from(k / n == k % n))))
                    .collect(),
            )
            .unwrap();
            assert!(is_positive_definite(&m).positive);
            assert!(is_positive_definite(&RealSymMatrix::identity(n)).positive);
        }
    }

    #[test]
    fn indefinite_two_by_two_rejected() {
        assert!(!is_positive_definite(&rat(2, &[1, 2, 2, 1])).positive);
        let r = RealSymMatrix::new(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(!is_positive_definite(&r).positive);
    }

    #[test]
    fn minors_of_two_one_one_two() {
        let d = is_positive_definite(&rat(2, &[2, 1, 1, 2]));
        assert!(d.positive);
        let want: Vec<BigRational> = [2, 3].iter().map(|&x| BigRational::from_integer(x.into())).collect();
        assert_eq!(d.witness, Witness::Minors(want));
    }

    #[test]
    fn asymmetric_rational_rejected() {
        assert!(matches!(
            RationalSymMatrix::from_fraction(2, &[1, 2, 3, 1], 1),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let m = IntMatrix::from_rows(&[&[2, -1, 3], &[0, 4, 1], &[5, 2, -2]]);
        // 2(−8−2) − (−1)(0−5) + 3(0−20) = −20 − 5 − 60
        assert_eq!(m.det().unwrap(), BigInt::from(-85));
    }

    #[test]
    fn row_hermite_transform_is_consistent() {
        let m = IntMatrix::from_rows(&[&[4, 6, 2, 7], &[6, 9, 3, 1]]);
        let (h, v) = m.row_hermite();
        assert_eq!(v.mul(&m).unwrap(), h);
        assert!(v.is_unimodular());
        assert!(h[(0, 0)] > BigInt::zero());
        assert!(h[(1, 0)].is_zero());
    }

    #[test]
    fn reduce_identity_and_scalar() {
        for n in 1..=3 {
            let (yr, u) = minkowski_reduce(&RealSymMatrix::identity(n)).unwrap();
            assert_eq!(yr, RealSymMatrix::identity(n));
            assert_eq!(u, IntMatrix::identity(n));
        }
        let (yr, u) = minkowski_reduce(&RealSymMatrix::new(1, vec![5.0]).unwrap()).unwrap();
        assert_eq!(yr.get(0, 0), 5.0);
        assert_eq!(u, IntMatrix::identity(1));
    }

    /// Smallest value of `Uᵗ Y U` top-left entry over unimodular `U`, ‖U‖∞ ≤ 3.
    fn brute_min_y11(y: &RealSymMatrix) -> f64 {
        let mut best = f64::INFINITY;
        for a in -3i64..=3 {
            for c in -3i64..=3 {
                for b in -3i64..=3 {
                    for d in -3i64..=3 {
                        if (a * d - b * c).abs() != 1 {
                            continue;
                        }
                        let (a, c) = (a as f64, c as f64);
                        let v = y.get(0, 0) * a * a + 2.0 * y.get(0, 1) * a * c + y.get(1, 1) * c * c;
                        best = best.min(v);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn reduce_nearly_degenerate_pair() {
        let y = RealSymMatrix::new(2, vec![1.0, 0.9, 0.9, 1.0]).unwrap();
        let (yr, u) = minkowski_reduce(&y).unwrap();
        assert!((yr.get(0, 0) - brute_min_y11(&y)).abs() < 1e-12);
        assert!((yr.get(0, 0) - 0.2).abs() < 1e-12);
        assert!(u.is_unimodular());
    }

    fn random_pd(n: usize, seed: &[f64]) -> RealSymMatrix {
        // A = lower-triangular from seed, Y = A Aᵗ + 0.05·1.
        let mut a = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in 0..=i {
                a[i * n + j] = seed[k];
                k += 1;
            }
        }
        let mut y = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                y[i * n + j] = (0..n).map(|t| a[i * n + t] * a[j * n + t]).sum::<f64>()
                    + if i == j { 0.05 } else { 0.0 };
            }
        }
        RealSymMatrix::new(n, y).unwrap()
    }

    fn check_reduced(yr: &RealSymMatrix) {
        let n = yr.dim();
        for i in 1..n {
            assert!(yr.get(i - 1, i - 1) <= yr.get(i, i) * (1.0 + 1e-9));
        }
        for i in 0..n {
            for j in i + 1..n {
                assert!(2.0 * yr.get(i, j).abs() <= yr.get(i, i) * (1.0 + 1e-9));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn reduction_invariants_dim2(seed in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let y = random_pd(2, &seed);
            let (yr, u) = minkowski_reduce(&y).unwrap();
            prop_assert!(u.is_unimodular());
            prop_assert!(((yr.det() - y.det()) / y.det()).abs() < 1e-12);
            check_reduced(&yr);
            // y11 is the minimum of Y[v] over v ≠ 0 with ‖v‖∞ ≤ 10.
            let mut best = f64::INFINITY;
            for a in -10i64..=10 {
                for b in -10i64..=10 {
                    if a == 0 && b == 0 { continue; }
                    let (a, b) = (a as f64, b as f64);
                    best = best.min(y.get(0,0)*a*a + 2.0*y.get(0,1)*a*b + y.get(1,1)*b*b);
                }
            }
            prop_assert!((yr.get(0,0) - best).abs() <= 1e-10 * best.max(1.0));
            let (yr2, u2) = minkowski_reduce(&yr).unwrap();
            prop_assert_eq!(u2, IntMatrix::identity(2));
            prop_assert_eq!(yr2, yr);
        }

        #[test]
        fn reduction_invariants_dim3(seed in proptest::collection::vec(-3.0f64..3.0, 6)) {
            let y = random_pd(3, &seed);
            let (yr, u) = minkowski_reduce(&y).unwrap();
            prop_assert!(u.is_unimodular());
            prop_assert!(((yr.det() - y.det()) / y.det()).abs() < 1e-10);
            check_reduced(&yr);
            let (_, u2) = minkowski_reduce(&yr).unwrap();
            prop_assert_eq!(u2, IntMatrix::identity(3));
        }
    }

    #[test]
    fn weak_reduce_is_size_reduced_in_degree_four() {
        let y = random_pd(4, &[1.0, 2.0, 0.5, -1.0, 0.3, 0.7, 2.0, -0.4, 0.1, 1.5]);
        let (yr, u) = weak_reduce(&y).unwrap();
        assert!(u.is_unimodular());
        check_reduced(&yr);
        assert!(matches!(minkowski_reduce(&y), Err(Error::Capability(_))));
    }
}
