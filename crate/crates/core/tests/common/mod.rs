//! Shared oracles and fixtures for the integration suites.
//!
//! Everything here is deliberately independent of the library's own
//! solution paths: dense Gaussian elimination instead of the banded
//! solver, companion-matrix roots instead of the closed form, a
//! rational-approximation normal CDF for the distribution tests.

#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use mvhp_core::numerics::quartic_roots;
use mvhp_core::SymMatrix64;

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for j in col..n {
                a[i][j] -= f * a[col][j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    x
}

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 erf
/// approximation (absolute error below 1.5e-7, far inside what a
/// 200-sample empirical CDF can resolve).
pub fn normal_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * z.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-z * z).exp();
    let erf = if z >= 0.0 { erf } else { -erf };
    0.5 * (1.0 + erf)
}

/// Two-sided Kolmogorov-Smirnov statistic against the standard normal.
pub fn ks_statistic(sample: &mut [f64]) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (k, &x) in sample.iter().enumerate() {
        let cdf = normal_cdf(x);
        let hi = (k as f64 + 1.0) / n - cdf;
        let lo = cdf - k as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic two-sided KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.62762 / (n as f64).sqrt()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

/// Real root in (-2, 0) of
/// `t^4 + 8 t^3 + (24+delta) t^2 + (32+4 delta) t + 16`
/// by companion-matrix eigenvalues.
///
/// Near small `delta` the quartic's roots cluster at the quadruple root
/// -2, where raw companion eigenvalues (this solver's and LAPACK's
/// alike) only carry ~1e-9 accuracy; two Newton corrections on the
/// cancellation-free factored form `(t+2)^4 + delta t (t+4)` restore
/// full precision so the 1e-9 comparison is meaningful.
pub fn theta1_from_quartic_oracle(delta: f64) -> f64 {
    let roots = quartic_roots(16.0, 32.0 + 4.0 * delta, 24.0 + delta, 8.0, 1.0).unwrap();
    let mut best = None;
    for r in roots {
        if r.im.abs() < 1e-7 && r.re > -2.0 && r.re < 0.0 {
            best = Some(r.re);
        }
    }
    let mut t = best.expect("one real root in (-2, 0)");
    for _ in 0..2 {
        let h = t + 2.0;
        let p = h.powi(4) + delta * t * (t + 4.0);
        let dp = 4.0 * h.powi(3) + delta * (2.0 * t + 4.0);
        if dp != 0.0 {
            t -= p / dp;
        }
    }
    t
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Published irregular covariance estimate for the eight-country
/// industrial production panel (lower triangle, 4 significant digits).
pub fn published_sigma_eps() -> SymMatrix64 {
    SymMatrix64::from_lower(&[
        vec![0.8429],
        vec![0.02121, 0.7632],
        vec![0.09744, 0.1419, 0.7497],
        vec![0.1871, 0.06468, 0.06268, 1.159],
        vec![-0.1544, 0.2812, 0.06318, 0.1073, 2.583],
        vec![0.06602, 0.2387, 0.2089, 0.265, 0.1438, 3.048],
        vec![0.06847, 0.247, 0.08804, 0.131, 0.1751, 0.3083, 1.686],
        vec![
            0.09582, 0.1087, 0.0776, 0.1215, 0.1535, 0.1928, 0.1191, 0.6269,
        ],
    ])
    .unwrap()
}

/// Published regularized trend-noise covariance for the same panel.
pub fn published_sigma_xi() -> SymMatrix64 {
    SymMatrix64::from_lower(&[
        vec![0.07748],
        vec![0.06312, 0.05871],
        vec![0.08688, 0.08175, 0.1239],
        vec![0.0734, 0.06911, 0.09324, 0.1618],
        vec![0.04262, 0.03635, 0.05105, 0.05275, 0.03846],
        vec![0.02446, 0.01703, 0.02533, 0.03828, 0.01042, 0.02073],
        vec![
            0.04151, 0.04143, 0.05226, 0.06523, 0.02957, 0.01757, 0.04876,
        ],
        vec![
            0.03398, 0.03357, 0.05591, 0.03005, 0.02341, 0.005987, 0.01746, 0.04468,
        ],
    ])
    .unwrap()
}

/// Published signal-noise spectrum of the same panel, descending.
pub const PUBLISHED_DELTA: [f64; 8] = [
    0.3127, 0.08487, 0.03726, 0.01205, 0.01085, 0.0054, 0.004519, 0.00006944,
];

/// Published identity-shift that regularized the trend-noise covariance.
pub const PUBLISHED_ALPHA: f64 = 0.0015428533;
