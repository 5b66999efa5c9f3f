//! Smooth-trend extraction.
//!
//! Each decoupled component `k` of the transformed panel `P^{-1} y_t` is
//! smoothed with its own penalty weight `lambda_k = 1 / delta_k` (the
//! penalized problem's constant is the noise-to-signal ratio, so an
//! estimated ratio of 1/14400 reproduces the standard monthly smoothing
//! constant 14400). The component trends are mapped back through `P`.
//!
//! `delta_k = 0` is the exact infinite-weight limit: that component's
//! trend is the least-squares line, never a huge finite penalty.

use rayon::prelude::*;

use crate::decoupling::Decoupling;
use crate::numerics::{solve_pentadiagonal, PentaBands};
use crate::panel::TimeSeriesPanel;
use crate::{Error, Float, Result};

/// Trend/cycle split of a panel.
#[derive(Clone, Debug)]
pub struct TrendResult<F> {
    pub trend: TimeSeriesPanel<F>,
    pub cycle: TimeSeriesPanel<F>,
    /// Per-component penalty weight; infinity marks the line-fit limit.
    pub per_component_lambda: Vec<F>,
    pub transform_used: Decoupling<F>,
}

/// Least-squares line through the data, the infinite-penalty limit.
fn line_fit<F: Float>(x: &[F]) -> Vec<F> {
    let n = x.len();
    let nf = F::cast(n as f64);
    let mean_t = (nf - F::one()) / F::cast(2.0);
    let mean_x = x.iter().copied().sum::<F>() / nf;
    let mut stt = F::zero();
    let mut stx = F::zero();
    for (t, &xt) in x.iter().enumerate() {
        let dt = F::cast(t as f64) - mean_t;
        stt = stt + dt * dt;
        stx = stx + dt * (xt - mean_x);
    }
    let slope = if stt > F::zero() {
        stx / stt
    } else {
        F::zero()
    };
    (0..n)
        .map(|t| mean_x + slope * (F::cast(t as f64) - mean_t))
        .collect()
}

/// Bands of `I + lambda D'D` with `D` the (N-2) x N second-difference
/// operator.
fn smoother_bands<F: Float>(n: usize, lambda: F) -> PentaBands<F> {
    let mut dtd_diag = vec![F::zero(); n];
    let mut dtd_s1 = vec![F::zero(); n - 1];
    let mut dtd_s2 = vec![F::zero(); n - 2];
    let one = F::one();
    let two = F::cast(2.0);
    let four = F::cast(4.0);
    for t in 0..n - 2 {
        dtd_diag[t] = dtd_diag[t] + one;
        dtd_diag[t + 1] = dtd_diag[t + 1] + four;
        dtd_diag[t + 2] = dtd_diag[t + 2] + one;
        dtd_s1[t] = dtd_s1[t] - two;
        dtd_s1[t + 1] = dtd_s1[t + 1] - two;
        dtd_s2[t] = dtd_s2[t] + one;
    }
    let diag = dtd_diag
        .into_iter()
        .map(|v| one + lambda * v)
        .collect::<Vec<_>>();
    let s1 = dtd_s1.into_iter().map(|v| lambda * v).collect::<Vec<_>>();
    let s2 = dtd_s2.into_iter().map(|v| lambda * v).collect::<Vec<_>>();
    PentaBands {
        sub2: s2.clone(),
        sub1: s1.clone(),
        diag,
        super1: s1,
        super2: s2,
    }
}

/// Smooths one series by penalized least squares,
/// `argmin sum (x_t - mu_t)^2 + lambda sum (d2 mu_t)^2`.
///
/// `lambda = 0` returns the series; the infinity sentinel returns the
/// least-squares line. Needs at least 4 observations.
pub fn hp_smooth<F: Float>(x: &[F], lambda: F) -> Result<Vec<F>> {
    if x.len() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: x.len(),
        });
    }
    if lambda.is_nan() || lambda < F::zero() {
        return Err(Error::InvalidConfig(format!(
            "smoothing weight must be nonnegative, got {lambda}"
        )));
    }
    if lambda == F::zero() {
        return Ok(x.to_vec());
    }
    if lambda == F::infinity() {
        return Ok(line_fit(x));
    }
    let bands = smoother_bands(x.len(), lambda);
    solve_pentadiagonal(&bands, x)
}

fn lambda_for<F: Float>(delta_k: F) -> F {
    if delta_k == F::zero() {
        F::infinity()
    } else {
        F::one() / delta_k
    }
}

fn extract_with_lambdas<F: Float>(
    y: &TimeSeriesPanel<F>,
    dec: &Decoupling<F>,
    lambdas: Vec<F>,
) -> Result<TrendResult<F>> {
    let d = y.dim();
    if dec.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: dec.dim(),
        });
    }
    let n = y.len();

    // transformed panel columns: row t of P^{-1} y
    let mut transformed: Vec<Vec<F>> = vec![vec![F::zero(); n]; d];
    for t in 0..n {
        let yt = dec.p_inv.mul_vec(y.row(t));
        for (k, v) in yt.into_iter().enumerate() {
            transformed[k][t] = v;
        }
    }

    let smoothed: Vec<Vec<F>> = transformed
        .par_iter()
        .zip(lambdas.par_iter())
        .map(|(col, &lam)| hp_smooth(col, lam))
        .collect::<Result<Vec<_>>>()?;

    let mut trend_rows = Vec::with_capacity(n);
    let mut cycle_rows = Vec::with_capacity(n);
    let mut mu_tilde = vec![F::zero(); d];
    for t in 0..n {
        for k in 0..d {
            mu_tilde[k] = smoothed[k][t];
        }
        let mu = dec.p.mul_vec(&mu_tilde);
        let cycle: Vec<F> = y.row(t).iter().zip(&mu).map(|(&yv, &m)| yv - m).collect();
        trend_rows.push(mu);
        cycle_rows.push(cycle);
    }
    let mut trend = TimeSeriesPanel::from_rows(trend_rows, y.names().to_vec())?;
    let mut cycle = TimeSeriesPanel::from_rows(cycle_rows, y.names().to_vec())?;
    if let Some(f) = y.frequency() {
        trend = trend.with_frequency(f);
        cycle = cycle.with_frequency(f);
    }
    Ok(TrendResult {
        trend,
        cycle,
        per_component_lambda: lambdas,
        transform_used: dec.clone(),
    })
}

/// Extracts trends with each component's estimated signal-noise ratio,
/// `lambda_k = 1 / delta_k` (infinite for common-trend components).
pub fn extract_trends<F: Float>(
    y: &TimeSeriesPanel<F>,
    dec: &Decoupling<F>,
) -> Result<TrendResult<F>> {
    let lambdas = dec.delta.iter().map(|&d| lambda_for(d)).collect();
    extract_with_lambdas(y, dec, lambdas)
}

/// Same pipeline with a single fixed penalty weight on every decoupled
/// component.
pub fn extract_trends_fixed<F: Float>(
    y: &TimeSeriesPanel<F>,
    dec: &Decoupling<F>,
    lambda_override: F,
) -> Result<TrendResult<F>> {
    if lambda_override <= F::zero() || !lambda_override.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "fixed smoothing weight must be positive and finite, got {lambda_override}"
        )));
    }
    extract_with_lambdas(y, dec, vec![lambda_override; dec.dim()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoupling::decouple;
    use crate::meta::StructuralParams;
    use crate::numerics::SymMatrix;
    use crate::simulation::{seeded_rng, simulate, std_normal, SimConfig};

    fn identity_decoupling(d: usize) -> Decoupling<f64> {
        decouple(&StructuralParams::new(SymMatrix::identity(d), SymMatrix::identity(d)).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_lambda_returns_input() {
        let x = vec![1.0f64, 4.0, -2.0, 7.0, 0.0];
        assert_eq!(hp_smooth(&x, 0.0).unwrap(), x);
    }

    #[test]
    fn linear_series_is_fixed_point() {
        let x: Vec<f64> = (0..30).map(|t| 1.5 + 0.3 * t as f64).collect();
        for lambda in [1.0, 1600.0, 14400.0, f64::INFINITY] {
            let mu = hp_smooth(&x, lambda).unwrap();
            for (a, b) in mu.iter().zip(&x) {
                assert!((a - b).abs() < 1e-9, "lambda={lambda}");
            }
        }
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            hp_smooth(&[1.0f64, 2.0, 3.0], 1.0),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(hp_smooth(&[1.0f64; 10], -1.0).is_err());
    }

    #[test]
    fn matches_dense_normal_equations() {
        let mut rng = seeded_rng(113);
        let n = 80;
        let x: Vec<f64> = (0..n).map(|_| std_normal(&mut rng)).collect();
        let lambda = 14400.0;
        let mu = hp_smooth(&x, lambda).unwrap();

        // dense oracle: assemble I + lambda D'D and solve by Gaussian
        // elimination with partial pivoting
        let mut a = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            a[i][i] = 1.0;
        }
        for t in 0..n - 2 {
            let row = [(t, 1.0), (t + 1, -2.0), (t + 2, 1.0)];
            for &(i, ci) in &row {
                for &(j, cj) in &row {
                    a[i][j] += lambda * ci * cj;
                }
            }
        }
        let mut rhs = x.clone();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            rhs.swap(col, piv);
            for i in col + 1..n {
                let f = a[i][col] / a[col][col];
                for j in col..n {
                    a[i][j] -= f * a[col][j];
                }
                rhs[i] -= f * rhs[col];
            }
        }
        let mut dense = vec![0.0f64; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in i + 1..n {
                s -= a[i][j] * dense[j];
            }
            dense[i] = s / a[i][i];
        }

        for t in 0..n {
            assert!(
                (mu[t] - dense[t]).abs() <= 1e-9,
                "t={t}: {} vs {}",
                mu[t],
                dense[t]
            );
        }
    }

    #[test]
    fn smoothness_is_monotone_in_lambda() {
        let mut rng = seeded_rng(127);
        let x: Vec<f64> = (0..200).map(|_| std_normal(&mut rng)).collect();
        let roughness = |mu: &[f64]| -> f64 {
            mu.windows(3)
                .map(|w| (w[2] - 2.0 * w[1] + w[0]).powi(2))
                .sum()
        };
        let mut prev = f64::INFINITY;
        for k in 0..=6 {
            let lambda = 10f64.powi(k);
            let r = roughness(&hp_smooth(&x, lambda).unwrap());
            assert!(r <= prev + 1e-12, "lambda={lambda}: {r} > {prev}");
            prev = r;
        }
    }

    #[test]
    fn additivity_always_holds() {
        let mut rng = seeded_rng(131);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![std_normal(&mut rng), std_normal(&mut rng)])
            .collect();
        let y = TimeSeriesPanel::from_rows(rows, vec!["a".into(), "b".into()]).unwrap();
        let dec = decouple(
            &StructuralParams::new(
                SymMatrix::from_rows(vec![vec![1.0, 0.3], vec![0.3, 2.0]]).unwrap(),
                SymMatrix::from_rows(vec![vec![0.5, 0.1], vec![0.1, 0.8]]).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        let res = extract_trends(&y, &dec).unwrap();
        for t in 0..y.len() {
            for j in 0..2 {
                let sum = res.trend.get(t, j) + res.cycle.get(t, j);
                assert!((sum - y.get(t, j)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn identity_transform_equals_columnwise_smoothing() {
        let mut rng = seeded_rng(137);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![std_normal(&mut rng), std_normal(&mut rng)])
            .collect();
        let y = TimeSeriesPanel::from_rows(rows, vec!["a".into(), "b".into()]).unwrap();
        let dec = identity_decoupling(2);
        assert!(dec.delta.iter().all(|&d| (d - 1.0).abs() < 1e-12));
        let res = extract_trends(&y, &dec).unwrap();
        for j in 0..2 {
            let col = y.column(j);
            let mu = hp_smooth(&col, res.per_component_lambda[j]).unwrap();
            for t in 0..y.len() {
                assert_eq!(res.trend.get(t, j), mu[t], "column {j} row {t}");
            }
        }
    }

    #[test]
    fn cointegrated_component_gets_a_line() {
        // sigma_xi = diag(1, 0): second decoupled component is a common
        // trend and must come back as an exact straight line
        let params =
            StructuralParams::new(SymMatrix::identity(2), SymMatrix::diag(&[1.0, 0.0])).unwrap();
        let dec = decouple(&params).unwrap();
        assert_eq!(dec.cointegration_rank, 1);
        let mut rng = seeded_rng(139);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![std_normal(&mut rng), std_normal(&mut rng)])
            .collect();
        let y = TimeSeriesPanel::from_rows(rows, vec!["a".into(), "b".into()]).unwrap();
        let res = extract_trends(&y, &dec).unwrap();
        assert_eq!(res.per_component_lambda[1], f64::INFINITY);
        // transformed trend component 1 is linear: second differences zero
        let mut tilde = vec![0.0f64; y.len()];
        for t in 0..y.len() {
            let m = dec.p_inv.mul_vec(res.trend.row(t));
            tilde[t] = m[1];
        }
        for w in tilde.windows(3) {
            assert!((w[2] - 2.0 * w[1] + w[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_panel_has_zero_cycle() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|t| vec![1.0 + 2.0 * t as f64, -3.0 + 0.25 * t as f64])
            .collect();
        let y = TimeSeriesPanel::from_rows(rows, vec!["a".into(), "b".into()]).unwrap();
        let dec = decouple(
            &StructuralParams::new(
                SymMatrix::from_rows(vec![vec![1.0, 0.2], vec![0.2, 1.0]]).unwrap(),
                SymMatrix::from_rows(vec![vec![0.4, 0.0], vec![0.0, 0.1]]).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        for res in [
            extract_trends(&y, &dec).unwrap(),
            extract_trends_fixed(&y, &dec, 14400.0).unwrap(),
        ] {
            for t in 0..y.len() {
                for j in 0..2 {
                    assert!(res.cycle.get(t, j).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn fixed_override_matches_estimated_when_ratios_equal() {
        let mut rng = seeded_rng(149);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![std_normal(&mut rng), std_normal(&mut rng)])
            .collect();
        let y = TimeSeriesPanel::from_rows(rows, vec!["a".into(), "b".into()]).unwrap();
        // equal ratios 0.25 on both components
        let params =
            StructuralParams::new(SymMatrix::identity(2), SymMatrix::diag(&[0.25, 0.25])).unwrap();
        let dec = decouple(&params).unwrap();
        let a = extract_trends(&y, &dec).unwrap();
        let b = extract_trends_fixed(&y, &dec, 4.0).unwrap();
        for t in 0..y.len() {
            for j in 0..2 {
                assert_eq!(a.trend.get(t, j), b.trend.get(t, j));
            }
        }
    }

    #[test]
    fn fixed_override_rejects_nonpositive() {
        let y = TimeSeriesPanel::from_rows(vec![vec![0.0f64; 2]; 20], vec!["a".into(), "b".into()])
            .unwrap();
        let dec = identity_decoupling(2);
        assert!(extract_trends_fixed(&y, &dec, 0.0).is_err());
        assert!(extract_trends_fixed(&y, &dec, -3.0).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let y = TimeSeriesPanel::from_rows(
            vec![vec![0.0f64; 3]; 20],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let dec = identity_decoupling(2);
        assert!(matches!(
            extract_trends(&y, &dec),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn extraction_beats_raw_series_against_true_trend() {
        let se = SymMatrix::<f64>::from_rows(vec![vec![1.0, 0.3], vec![0.3, 1.5]]).unwrap();
        let sx = SymMatrix::from_rows(vec![vec![0.02, 0.0], vec![0.0, 0.05]]).unwrap();
        let cfg = SimConfig::new(se.clone(), sx.clone(), 2000, 3000);
        let out = simulate(&cfg).unwrap();
        let dec = decouple(&StructuralParams::new(se, sx).unwrap()).unwrap();
        let res = extract_trends(&out.panel, &dec).unwrap();
        let mut rmse_trend = 0.0f64;
        let mut rmse_raw = 0.0f64;
        for t in 0..out.panel.len() {
            for j in 0..2 {
                let truth = out.true_trend[t][j];
                rmse_trend += (res.trend.get(t, j) - truth).powi(2);
                rmse_raw += (out.panel.get(t, j) - truth).powi(2);
            }
        }
        assert!(
            rmse_trend < rmse_raw,
            "smoothing must reduce trend error: {rmse_trend} vs {rmse_raw}"
        );
    }
}
