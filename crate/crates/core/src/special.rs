//! Scalar special functions and compensated summation.
//!
//! `ln_gamma` is delegated to `statrs`; Bessel functions of integer order are
//! computed here because no maintained crate in the dependency set provides them.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Natural logarithm of the Gamma function for positive real arguments.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Neumaier-compensated accumulator for real sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}

/// Compensated accumulator for complex sums (componentwise).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl std::iter::FromIterator<Complex64> for ComplexSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = Self::new();
        iter.into_iter().for_each(|z| acc.add(z));
        acc
    }
}

/// Compensated sum of a slice, in slice order.
pub fn sum_compensated(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<CompensatedSum>().value()
}

/// `e(x) = exp(2πi x)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * x).sin_cos();
    Complex64::new(c, s)
}

/// Bessel function of the first kind of order one.
///
/// Power series below 8, Miller backward recurrence on [8, 25), Hankel
/// asymptotics from 25 on. Absolute error stays below 1e-14 on x ≥ 0.
pub fn bessel_j1(x: f64) -> f64 {
    if x < 0.0 {
        return -bessel_j1(-x);
    }
    if x < 8.0 {
        j_series(1, x)
    } else if x < 25.0 {
        bessel_jn(1, x)
    } else {
        j1_asymptotic(x)
    }
}

/// Ascending series `Σ (-1)^m (x/2)^{2m+ν} / (m! (m+ν)!)`.
fn j_series(nu: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term = h.powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut acc = CompensatedSum::new();
    acc.add(term);
    let q = -h * h;
    for m in 1..200u32 {
        term *= q / (f64::from(m) * f64::from(m + nu));
        acc.add(term);
        if term.abs() < 1e-18 * acc.value().abs().max(1e-300) {
            break;
        }
    }
    acc.value()
}

/// Hankel expansion of J₁ for large argument.
fn j1_asymptotic(x: f64) -> f64 {
    let mu = 4.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let eight_x = 8.0 * x;
    for k in 1..40 {
        let kk = f64::from(k);
        let odd = 2.0 * kk - 1.0;
        term *= (mu - odd * odd) / (kk * eight_x);
        if term.abs() < 1e-17 {
            break;
        }
        if k % 2 == 1 {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            q += sign * term;
        } else {
            let sign = if (k / 2) % 2 == 1 { -1.0 } else { 1.0 };
            p += sign * term;
        }
    }
    let chi = x - 0.75 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Bessel function `J_ν(x)` of nonnegative integer order, x ≥ 0.
///
/// Miller's backward recurrence normalised by `J₀ + 2 Σ J_{2j} = 1`; the
/// ascending series is used when x is small compared with ν.
pub fn bessel_jn(nu: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        let v = bessel_jn(nu, -x);
        return if nu % 2 == 1 { -v } else { v };
    }
    if x * x < 0.25 * f64::from(nu + 1) || x < 4.0 {
        return j_series(nu, x);
    }
    let start = {
        let base = x.max(f64::from(nu));
        let s = (base + 30.0 + 8.0 * base.sqrt()).ceil() as u32;
        s + (s % 2)
    };
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut norm = CompensatedSum::new();
    let mut wanted = 0.0;
    for m in (0..start).rev() {
        // j currently holds the unnormalised J_{m+1}; compute J_m.
        let jm = 2.0 * f64::from(m + 1) / x * j - jp1;
        jp1 = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            wanted *= 1e-250;
            let v = norm.value() * 1e-250;
            norm = CompensatedSum::new();
            norm.add(v);
        }
        if m == nu {
            wanted = j;
        }
        if m == 0 {
            norm.add(j);
        } else if m % 2 == 0 {
            norm.add(2.0 * j);
        }
    }
    wanted / norm.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct alternating series with many terms, evaluated with compensation.
    fn series_oracle(nu: u32, x: f64, terms: u32) -> f64 {
        let mut acc = CompensatedSum::new();
        for m in 0..terms {
            let lt = (2 * m + nu) as f64 * (0.5 * x).ln()
                - ln_gamma(f64::from(m) + 1.0)
                - ln_gamma(f64::from(m + nu) + 1.0);
            let s = if m % 2 == 0 { 1.0 } else { -1.0 };
            acc.add(s * lt.exp());
        }
        acc.value()
    }

    #[test]
    fn j1_at_zero_and_small() {
        assert_eq!(bessel_j1(0.0), 0.0);
        let x: f64 = 1e-3;
        assert!((bessel_j1(x) - (x / 2.0 - x.powi(3) / 16.0)).abs() < 1e-16);
    }

    #[test]
    fn j1_at_one_matches_forty_term_series() {
        let oracle = series_oracle(1, 1.0, 40);
        assert!((bessel_j1(1.0) - oracle).abs() < 1e-12);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
    }

    #[test]
    fn j1_branches_agree_at_seams() {
        for &x in &[7.999_999, 8.0, 8.000_001] {
            assert!((j_series(1, x) - bessel_jn(1, x)).abs() < 1e-13, "seam at {x}");
        }
        for &x in &[24.999_999, 25.0, 25.000_001] {
            assert!((bessel_jn(1, x) - j1_asymptotic(x)).abs() < 1e-14, "seam at {x}");
        }
    }

    /// (ν, x, J_ν(x)) from a 40-digit evaluation.
    const JN_TABLE: &[(u32, f64, f64)] = &[
        (0, 0.5, 0.938_469_807_240_812_9),
        (0, 6.0, 0.150_645_257_250_996_93),
        (0, 63.0, 0.081_857_686_447_809_27),
        (1, 2.0, 0.576_724_807_756_873_4),
        (1, 12.566, -0.154_593_737_974_801_13),
        (1, 200.0, -0.054_304_538_182_378_22),
        (5, 0.5, 8.053_627_241_357_474e-6),
        (5, 30.0, -0.143_240_295_512_077_08),
        (11, 2.0, 2.304_284_758_367_251_4e-8),
        (11, 12.566, 0.291_330_845_604_278_4),
        (11, 63.0, -0.034_108_592_866_485_47),
        (23, 6.0, 2.495_677_252_481_062_9e-12),
        (23, 12.566, 1.604_199_228_440_069e-5),
        (23, 63.0, 0.048_616_419_750_958_37),
        (39, 12.566, 2.426_591_304_047_748_8e-16),
        (39, 30.0, 8.072_443_064_970_712e-4),
        (39, 63.0, 0.071_122_533_320_473_91),
        (39, 200.0, -0.052_562_110_568_429_78),
    ];

    #[test]
    fn jn_matches_reference_table() {
        for &(nu, x, want) in JN_TABLE {
            let got = bessel_jn(nu, x);
            let tol = 1e-13 * want.abs().max(1e-3);
            assert!((got - want).abs() < tol.max(1e-15 * want.abs()), "J_{nu}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn j_series_agrees_with_direct_summation_at_small_argument() {
        for nu in [0u32, 3, 7] {
            let x = 0.7;
            assert!((j_series(nu, x) - series_oracle(nu, x, 40)).abs() < 1e-15);
        }
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum_compensated(&xs), 2.0);
    }
}
