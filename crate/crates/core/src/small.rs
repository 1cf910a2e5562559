//! Stack-allocated square matrices of size at most 3, used in hot loops.
//!
//! Entries are stored row-major in a fixed array of nine slots; only the
//! leading `n × n` block is meaningful.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_N: usize = 3;

/// Scalar operations needed by the small-matrix routines.
pub trait Scalar:
    Copy
    + Default
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self {
        Self::default()
    }
    fn one() -> Self;
}

impl Scalar for f64 {
    fn one() -> Self {
        1.0
    }
}

impl Scalar for i64 {
    fn one() -> Self {
        1
    }
}

impl Scalar for Complex64 {
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
}

/// Square matrix of order `n ≤ 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Small<T: Scalar> {
    pub n: usize,
    pub a: [T; 9],
}

pub type RMat = Small<f64>;
pub type CMat = Small<Complex64>;
pub type IMat = Small<i64>;

impl<T: Scalar> Small<T> {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_N, "small matrices hold order at most 3");
        Self { n, a: [T::zero(); 9] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * 3 + i] = T::one();
        }
        m
    }

    /// Builds from a row-major slice of length `n²`.
    pub fn from_slice(n: usize, xs: &[T]) -> Self {
        assert_eq!(xs.len(), n * n);
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i * 3 + j] = xs[i * n + j];
            }
        }
        m
    }

    pub fn to_vec(&self) -> Vec<T> {
        let n = self.n;
        (0..n * n).map(|k| self.a[(k / n) * 3 + k % n]).collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * 3 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * 3 + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[j * 3 + i] = self.a[i * 3 + j];
            }
        }
        m
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    s = s + self.a[i * 3 + k] * o.a[k * 3 + j];
                }
                m.a[i * 3 + j] = s;
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut m = *self;
        for k in 0..9 {
            m.a[k] = self.a[k] + o.a[k];
        }
        m
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut m = *self;
        for k in 0..9 {
            m.a[k] = self.a[k] - o.a[k];
        }
        m
    }

    pub fn det(&self) -> T {
        let a = &self.a;
        match self.n {
            0 => T::one(),
            1 => a[0],
            2 => a[0] * a[4] - a[1] * a[3],
            _ => {
                a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                    + a[2] * (a[3] * a[7] - a[4] * a[6])
            }
        }
    }

    /// Adjugate matrix, so that `M · adj(M) = det(M) · 1`.
    pub fn adjugate(&self) -> Self {
        let a = &self.a;
        let mut m = Self::zeros(self.n);
        match self.n {
            0 => {}
            1 => m.a[0] = T::one(),
            2 => {
                m.a[0] = a[4];
                m.a[1] = -a[1];
                m.a[3] = -a[3];
                m.a[4] = a[0];
            }
            _ => {
                let c = |r0: usize, r1: usize, c0: usize, c1: usize| {
                    a[r0 * 3 + c0] * a[r1 * 3 + c1] - a[r0 * 3 + c1] * a[r1 * 3 + c0]
                };
                m.a[0] = c(1, 2, 1, 2);
                m.a[1] = -c(0, 2, 1, 2);
                m.a[2] = c(0, 1, 1, 2);
                m.a[3] = -c(1, 2, 0, 2);
                m.a[4] = c(0, 2, 0, 2);
                m.a[5] = -c(0, 1, 0, 2);
                m.a[6] = c(1, 2, 0, 1);
                m.a[7] = -c(0, 2, 0, 1);
                m.a[8] = c(0, 1, 0, 1);
            }
        }
        m
    }

    /// `Uᵗ · self · U`.
    pub fn congruence(&self, u: &Self) -> Self {
        u.transpose().mul(self).mul(u)
    }

    /// `tr(self · o)`.
    pub fn trace_mul(&self, o: &Self) -> T {
        let n = self.n;
        let mut s = T::zero();
        for i in 0..n {
            for k in 0..n {
                s = s + self.a[i * 3 + k] * o.a[k * 3 + i];
            }
        }
        s
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |s, i| s + self.a[i * 3 + i])
    }
}

impl RMat {
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let mut m = self.adjugate();
        m.a.iter_mut().for_each(|x| *x /= d);
        Some(m)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.a.iter_mut().for_each(|x| *x *= s);
        m
    }

    /// Smallest eigenvalue of a symmetric matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        match self.n {
            1 => self.a[0],
            2 => {
                let (p, q, r) = (self.a[0], self.a[1], self.a[4]);
                let m = 0.5 * (p + r);
                let d = (0.25 * (p - r) * (p - r) + q * q).sqrt();
                // Stable form of m − d.
                let hi = m + d;
                if hi > 0.0 {
                    (p * r - q * q) / hi
                } else {
                    m - d
                }
            }
            _ => {
                let m = nalgebra::Matrix3::from_fn(|i, j| self.a[i * 3 + j]);
                m.symmetric_eigenvalues().min()
            }
        }
    }

    pub fn from_int(m: &IMat) -> Self {
        let mut r = Self::zeros(m.n);
        for k in 0..9 {
            r.a[k] = m.a[k] as f64;
        }
        r
    }
}

impl CMat {
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        let inv = d.inv();
        let mut m = self.adjugate();
        m.a.iter_mut().for_each(|x| *x *= inv);
        Some(m)
    }

    pub fn from_parts(x: &RMat, y: &RMat) -> Self {
        let mut m = Self::zeros(x.n);
        for k in 0..9 {
            m.a[k] = Complex64::new(x.a[k], y.a[k]);
        }
        m
    }

    pub fn from_real(x: &RMat) -> Self {
        let mut m = Self::zeros(x.n);
        for k in 0..9 {
            m.a[k] = Complex64::new(x.a[k], 0.0);
        }
        m
    }

    pub fn re(&self) -> RMat {
        let mut m = RMat::zeros(self.n);
        for k in 0..9 {
            m.a[k] = self.a[k].re;
        }
        m
    }

    pub fn im(&self) -> RMat {
        let mut m = RMat::zeros(self.n);
        for k in 0..9 {
            m.a[k] = self.a[k].im;
        }
        m
    }

    /// Symmetrises in place; the action of Sp_n keeps matrices symmetric, so
    /// this only removes rounding asymmetry.
    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in 0..i {
                let v = (self.a[i * 3 + j] + self.a[j * 3 + i]) * 0.5;
                self.a[i * 3 + j] = v;
                self.a[j * 3 + i] = v;
            }
        }
    }
}

impl IMat {
    pub fn to_complex(&self) -> CMat {
        let mut m = CMat::zeros(self.n);
        for k in 0..9 {
            m.a[k] = Complex64::new(self.a[k] as f64, 0.0);
        }
        m
    }

    pub fn max_abs(&self) -> i64 {
        self.to_vec().iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// Squared Frobenius norm `tr(UᵗU)`.
    pub fn frob2(&self) -> i64 {
        self.to_vec().iter().map(|x| x * x).sum()
    }

    /// Inverse of a unimodular matrix (exact).
    pub fn unimodular_inverse(&self) -> Option<Self> {
        let d = self.det();
        if d != 1 && d != -1 {
            return None;
        }
        let mut m = self.adjugate();
        m.a.iter_mut().for_each(|x| *x *= d);
        Some(m)
    }

    pub fn rem_euclid(&self, modulus: i64) -> Self {
        let mut m = *self;
        m.a.iter_mut().for_each(|x| *x = x.rem_euclid(modulus));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_three_by_three() {
        let m = RMat::from_slice(3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let p = m.mul(&m.inverse().unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.get(i, j) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn integer_unimodular_inverse_is_exact() {
        let u = IMat::from_slice(2, &[2, 1, 1, 1]);
        assert_eq!(u.mul(&u.unimodular_inverse().unwrap()), IMat::identity(2));
    }

    #[test]
    fn min_eigenvalue_two_by_two() {
        let m = RMat::from_slice(2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((m.min_eigenvalue() - 1.0).abs() < 1e-15);
    }
}
