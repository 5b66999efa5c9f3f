//! Panel generation from the structural model, for Monte Carlo
//! validation of the estimators.
//!
//! Randomness is pinned to `ChaCha12` so identical configs produce
//! bit-identical panels on every platform; replications derive their own
//! streams from `seed + replication index`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::numerics::{cholesky, sym_eig, Matrix, SymMatrix};
use crate::panel::TimeSeriesPanel;
use crate::{Error, Float, Result};

/// Noise law for both disturbance vectors. Scaled-t keeps unit variance
/// per component; `df > 4` keeps fourth moments finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseDistribution {
    Gaussian,
    ScaledT { df: f64 },
}

/// Configuration of one simulated panel.
#[derive(Clone, Debug)]
pub struct SimConfig<F> {
    pub d: usize,
    pub n: usize,
    pub sigma_eps: SymMatrix<F>,
    pub sigma_xi: SymMatrix<F>,
    pub seed: u64,
    pub noise: NoiseDistribution,
    pub init_mu: Vec<F>,
    pub init_beta: Vec<F>,
}

impl<F: Float> SimConfig<F> {
    pub fn new(sigma_eps: SymMatrix<F>, sigma_xi: SymMatrix<F>, n: usize, seed: u64) -> Self {
        let d = sigma_eps.order();
        SimConfig {
            d,
            n,
            sigma_eps,
            sigma_xi,
            seed,
            noise: NoiseDistribution::Gaussian,
            init_mu: vec![F::zero(); d],
            init_beta: vec![F::zero(); d],
        }
    }

    pub fn with_noise(mut self, noise: NoiseDistribution) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 12 {
            return Err(Error::TooShort {
                needed: 12,
                got: self.n,
            });
        }
        if self.sigma_eps.order() != self.d || self.sigma_xi.order() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: self.sigma_xi.order(),
            });
        }
        if self.init_mu.len() != self.d || self.init_beta.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: self.init_mu.len(),
            });
        }
        if let NoiseDistribution::ScaledT { df } = self.noise {
            if df.is_nan() || df <= 4.0 {
                return Err(Error::InvalidConfig(format!(
                    "scaled-t needs df > 4 for finite fourth moments, got {df}"
                )));
            }
        }
        Ok(())
    }
}

/// Simulated panel together with the true trend path for oracle use.
#[derive(Clone, Debug)]
pub struct SimOutput<F> {
    pub panel: TimeSeriesPanel<F>,
    pub true_trend: Vec<Vec<F>>,
}

/// Deterministic generator for a seed.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Seed for replication `rep` of a base seed.
pub fn replication_seed(seed: u64, rep: u64) -> u64 {
    seed.wrapping_add(rep)
}

/// Unit-variance sampler prepared once per simulation.
enum Sampler {
    Gaussian,
    ScaledT { dist: StudentT<f64>, scale: f64 },
}

impl Sampler {
    fn new(noise: NoiseDistribution) -> Self {
        match noise {
            NoiseDistribution::Gaussian => Sampler::Gaussian,
            NoiseDistribution::ScaledT { df } => Sampler::ScaledT {
                dist: StudentT::new(df).expect("validated df"),
                scale: ((df - 2.0) / df).sqrt(),
            },
        }
    }

    fn draw<F: Float, R: Rng>(&self, rng: &mut R) -> F {
        match self {
            Sampler::Gaussian => {
                let x: f64 = StandardNormal.sample(rng);
                F::cast(x)
            }
            Sampler::ScaledT { dist, scale } => {
                let x: f64 = dist.sample(rng);
                F::cast(x * scale)
            }
        }
    }
}

/// Standard normal draw, exposed for Monte Carlo harnesses.
pub fn std_normal<F: Float, R: Rng>(rng: &mut R) -> F {
    let x: f64 = StandardNormal.sample(rng);
    F::cast(x)
}

/// Random symmetric matrix with standard normal entries (mirrored).
pub fn random_sym<F: Float, R: Rng>(rng: &mut R, d: usize) -> SymMatrix<F> {
    let mut m = SymMatrix::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            m.set(i, j, std_normal(rng));
        }
    }
    m
}

/// Random symmetric positive definite matrix `A'A/d + ridge * I`.
pub fn random_spd<F: Float, R: Rng>(rng: &mut R, d: usize, ridge: f64) -> SymMatrix<F> {
    let mut a = Matrix::<F>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = std_normal(rng);
        }
    }
    let ata = a.transpose().matmul(&a);
    let mut out = SymMatrix::from_matrix_symmetrized(&ata).scale(F::cast(1.0 / d as f64));
    for i in 0..d {
        out.set(i, i, out.get(i, i) + F::cast(ridge));
    }
    out
}

/// Factor `B` with `cov = B B'`, accepting positive semidefinite input.
///
/// Uses the Cholesky factor when the matrix is numerically definite and
/// falls back to the eigendecomposition square root otherwise, clamping
/// roundoff-negative eigenvalues to zero.
pub fn psd_factor<F: Float>(cov: &SymMatrix<F>) -> Result<Matrix<F>> {
    match cholesky(cov) {
        Ok(m) => Ok(m.transpose()),
        Err(Error::NotPositiveDefinite { .. }) => {
            let ep = sym_eig(cov)?;
            let scale = ep
                .values
                .first()
                .copied()
                .unwrap_or(F::zero())
                .max(F::one());
            let tol = F::cast(1e-10) * scale;
            let mut b = ep.vectors.clone();
            for (k, &lam) in ep.values.iter().enumerate() {
                if lam < -tol {
                    return Err(Error::NotPositiveDefinite {
                        context: "covariance has a negative eigenvalue",
                    });
                }
                b.scale_col(k, lam.max(F::zero()).sqrt());
            }
            Ok(b)
        }
        Err(e) => Err(e),
    }
}

/// Draws a panel from the structural recursion and returns it with the
/// true trend path.
pub fn simulate<F: Float>(cfg: &SimConfig<F>) -> Result<SimOutput<F>> {
    cfg.validate()?;
    let d = cfg.d;
    let eps_factor = psd_factor(&cfg.sigma_eps)?;
    let xi_factor = psd_factor(&cfg.sigma_xi)?;
    let mut rng = seeded_rng(cfg.seed);
    let sampler = Sampler::new(cfg.noise);

    let mut mu = cfg.init_mu.clone();
    let mut beta = cfg.init_beta.clone();
    let mut rows = Vec::with_capacity(cfg.n);
    let mut trend = Vec::with_capacity(cfg.n);
    let mut shock = vec![F::zero(); d];
    for _ in 0..cfg.n {
        for s in shock.iter_mut() {
            *s = sampler.draw(&mut rng);
        }
        let eps = eps_factor.mul_vec(&shock);
        for s in shock.iter_mut() {
            *s = sampler.draw(&mut rng);
        }
        let xi = xi_factor.mul_vec(&shock);

        let y: Vec<F> = mu.iter().zip(&eps).map(|(&m, &e)| m + e).collect();
        trend.push(mu.clone());
        rows.push(y);

        for j in 0..d {
            mu[j] = mu[j] + beta[j];
            beta[j] = beta[j] + xi[j];
        }
    }
    let names = (1..=d).map(|j| format!("y{j}")).collect();
    Ok(SimOutput {
        panel: TimeSeriesPanel::from_rows(rows, names)?,
        true_trend: trend,
    })
}

/// Sample autocovariances `G_j = N^{-1} sum_t z_t z_{t-j}'` for
/// `j = 0..=max_lag`, without mean subtraction.
///
/// This is the estimator the aggregation approach is benchmarked
/// against; it is provided for comparison experiments only.
pub fn sample_autocovariances<F: Float>(
    z: &TimeSeriesPanel<F>,
    max_lag: usize,
) -> Result<Vec<Matrix<F>>> {
    let n = z.len();
    if 4 * max_lag >= n {
        return Err(Error::LagTooLarge { lag: max_lag, n });
    }
    let d = z.dim();
    let inv_n = F::one() / F::cast(n as f64);
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let mut g = Matrix::zeros(d, d);
        for t in lag..n {
            let zt = z.row(t);
            let zl = z.row(t - lag);
            for i in 0..d {
                for j in 0..d {
                    g[(i, j)] = g[(i, j)] + zt[i] * zl[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] = g[(i, j)] * inv_n;
            }
        }
        out.push(g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::difference_twice;

    #[test]
    fn seed_determinism() {
        let cfg = SimConfig::new(
            SymMatrix::<f64>::identity(2),
            SymMatrix::diag(&[0.5, 0.1]),
            200,
            42,
        );
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.panel, b.panel);
        assert_eq!(a.true_trend, b.true_trend);
        let c = simulate(&cfg.clone().with_seed(43)).unwrap();
        assert_ne!(a.panel, c.panel);
    }

    #[test]
    fn zero_trend_noise_means_constant_trend() {
        let cfg = SimConfig::new(SymMatrix::<f64>::identity(2), SymMatrix::zeros(2), 100, 7);
        let out = simulate(&cfg).unwrap();
        for row in &out.true_trend {
            assert_eq!(row, &vec![0.0, 0.0]);
        }
    }

    #[test]
    fn zero_irregular_reproduces_trend_and_shifted_xi() {
        // with eps = 0, y = mu and the second difference is xi_{t-2}
        let cfg = SimConfig::new(
            SymMatrix::<f64>::zeros(2),
            SymMatrix::diag(&[1.0, 2.0]),
            50,
            9,
        );
        let out = simulate(&cfg).unwrap();
        for t in 0..out.panel.len() {
            for j in 0..2 {
                assert_eq!(out.panel.get(t, j), out.true_trend[t][j]);
            }
        }
        let z = difference_twice(&out.panel).unwrap();
        // replay the same xi draws
        let mut rng = seeded_rng(9);
        let xi_factor = psd_factor(&cfg.sigma_xi).unwrap();
        let mut xis = Vec::new();
        for _ in 0..cfg.n {
            let mut shock = [0.0f64; 2];
            for s in shock.iter_mut() {
                *s = std_normal(&mut rng);
            }
            let _eps = shock; // first block consumed by eps even when zero
            let mut shock2 = [0.0f64; 2];
            for s in shock2.iter_mut() {
                *s = std_normal(&mut rng);
            }
            xis.push(xi_factor.mul_vec(&shock2));
        }
        // z_t (0-indexed t over the differenced panel) equals xi_t exactly:
        // z row k corresponds to original time k+2 and xi index k.
        for k in 0..z.len() {
            for j in 0..2 {
                assert!((z.get(k, j) - xis[k][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaled_t_requires_heavy_df() {
        let cfg = SimConfig::new(SymMatrix::<f64>::identity(1), SymMatrix::identity(1), 50, 1)
            .with_noise(NoiseDistribution::ScaledT { df: 3.0 });
        assert!(matches!(simulate(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn scaled_t_has_unit_variance() {
        let mut rng = seeded_rng(12);
        let n = 200_000;
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        let sampler = Sampler::new(NoiseDistribution::ScaledT { df: 6.0 });
        for _ in 0..n {
            let x: f64 = sampler.draw(&mut rng);
            sum += x;
            sumsq += x * x;
        }
        let var = sumsq / n as f64 - (sum / n as f64).powi(2);
        assert!((var - 1.0).abs() < 0.05, "var={var}");
    }

    #[test]
    fn moment_match_large_sample() {
        // with sigma_xi = 0 and zero initial state the panel IS the
        // irregular draw, so its second moment must match sigma_eps
        let se = SymMatrix::from_rows(vec![vec![2.0f64, 0.8], vec![0.8, 1.5]]).unwrap();
        let cfg = SimConfig::new(se.clone(), SymMatrix::zeros(2), 100_000, 5);
        let out = simulate(&cfg).unwrap();
        let g = sample_autocovariances(&out.panel, 0).unwrap();
        let diff = SymMatrix::from_matrix_symmetrized(&g[0]).sub(&se);
        let rel = diff.frobenius_norm() / se.frobenius_norm();
        assert!(rel < 0.02, "Frobenius-relative deviation {rel}");
    }

    #[test]
    fn gamma2_of_difference_approaches_sigma_eps() {
        let se = SymMatrix::from_rows(vec![vec![2.0f64, 0.8], vec![0.8, 1.5]]).unwrap();
        let cfg = SimConfig::new(se.clone(), SymMatrix::diag(&[0.01, 0.02]), 200_000, 5);
        let out = simulate(&cfg).unwrap();
        let z = difference_twice(&out.panel).unwrap();
        let g = sample_autocovariances(&z, 2).unwrap();
        // the entrywise estimator noise scales with gamma_0 ~ 6 sigma_eps,
        // so the check is loose even at this sample size
        for i in 0..2 {
            for j in 0..2 {
                let rel = (g[2][(i, j)] - se.get(i, j)).abs() / se.get(i, j).abs();
                assert!(
                    rel < 0.10,
                    "({i},{j}): {} vs {}",
                    g[2][(i, j)],
                    se.get(i, j)
                );
            }
        }
    }

    #[test]
    fn iid_series_has_vanishing_lag3() {
        let cfg = SimConfig::new(
            SymMatrix::<f64>::identity(2),
            SymMatrix::zeros(2),
            50_000,
            77,
        );
        let out = simulate(&cfg).unwrap();
        let z = difference_twice(&out.panel).unwrap();
        let g = sample_autocovariances(&z, 3).unwrap();
        let scale = g[0].max_abs();
        assert!(g[3].max_abs() < 0.05 * scale, "lag-3 should be noise");
    }

    #[test]
    fn constant_series_autocovariance_is_outer_product() {
        let rows = vec![vec![2.0f64, -1.0]; 40];
        let z = TimeSeriesPanel::from_rows(rows, vec!["a".into(), "b".into()]).unwrap();
        let g = sample_autocovariances(&z, 0).unwrap();
        assert!((g[0][(0, 0)] - 4.0).abs() < 1e-12);
        assert!((g[0][(0, 1)] + 2.0).abs() < 1e-12);
        assert!((g[0][(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lag_gate() {
        let rows = vec![vec![0.0f64]; 20];
        let z = TimeSeriesPanel::from_rows(rows, vec!["a".into()]).unwrap();
        assert!(matches!(
            sample_autocovariances(&z, 5),
            Err(Error::LagTooLarge { .. })
        ));
    }

    #[test]
    fn gamma_ratio_matches_model() {
        // Gamma_1 / Gamma_2 = -4 entrywise in the model
        let cfg = SimConfig::new(
            SymMatrix::<f64>::diag(&[1.0, 2.0]),
            SymMatrix::diag(&[0.3, 0.6]),
            50_000,
            21,
        );
        let out = simulate(&cfg).unwrap();
        let z = difference_twice(&out.panel).unwrap();
        let g = sample_autocovariances(&z, 2).unwrap();
        for i in 0..2 {
            let ratio = g[1][(i, i)] / g[2][(i, i)];
            assert!((ratio + 4.0).abs() < 0.15, "ratio={ratio}");
        }
    }
}
