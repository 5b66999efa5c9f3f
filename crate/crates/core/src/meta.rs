//! Covariance estimation through aggregation.
//!
//! Instead of a multivariate likelihood, the estimator fits d(d+1)/2
//! univariate constrained MA(2) models to the aggregated series `w'z_t`
//! for `w` ranging over the unit vectors and their pairwise sums, turns
//! each fit into model-implied autocovariances, and reassembles the
//! matrices `Gamma_0`, `Gamma_1 = -4 Gamma_2`, `Gamma_2` linearly. The
//! structural covariances follow as `sigma_eps = Gamma_2` and
//! `sigma_xi = Gamma_0 - 6 Gamma_2`, with an additive-identity shift to
//! restore positive definiteness when estimation noise breaks it.
//!
//! The scalar fits are mutually independent and run in parallel; results
//! are keyed by aggregation vector, never by completion order.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::ma2_mle::{fit, ScalarMa2Fit, ScalarSeries};
use crate::numerics::{cholesky, sym_eig, SymMatrix};
use crate::panel::TimeSeriesPanel;
use crate::scalar_ma2::{autocov_from_fit, ScalarMa2};
use crate::{Error, Float, Result};

/// Default minimum signal-noise ratio for monthly data (the standard
/// smoothing constant 14400).
pub const MONTHLY_MIN_SNR: f64 = 1.0 / 14400.0;
/// Default minimum signal-noise ratio for quarterly data (constant 1600).
pub const QUARTERLY_MIN_SNR: f64 = 1.0 / 1600.0;

/// A 0/1 aggregation vector: a unit vector `e_i` or a pairwise sum
/// `e_i + e_j`, the only members of the aggregation set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AggVector {
    d: usize,
    i: usize,
    j: Option<usize>,
}

impl AggVector {
    pub fn singleton(i: usize, d: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: i,
            });
        }
        Ok(AggVector { d, i, j: None })
    }

    pub fn pair(i: usize, j: usize, d: usize) -> Result<Self> {
        if i >= d || j >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: i.max(j),
            });
        }
        if i == j {
            return Err(Error::InvalidConfig(
                "pair aggregation needs two distinct indices".into(),
            ));
        }
        let (i, j) = (i.min(j), i.max(j));
        Ok(AggVector { d, i, j: Some(j) })
    }

    /// Parses a full 0/1 vector, rejecting anything outside the set.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let ones: Vec<usize> = bits
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .collect();
        match ones.as_slice() {
            [i] => Self::singleton(*i, bits.len()),
            [i, j] => Self::pair(*i, *j, bits.len()),
            _ => Err(Error::InvalidConfig(format!(
                "aggregation vector must have one or two unit entries, got {}",
                ones.len()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn indices(&self) -> (usize, Option<usize>) {
        (self.i, self.j)
    }

    pub fn bits(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.d];
        out[self.i] = 1;
        if let Some(j) = self.j {
            out[j] = 1;
        }
        out
    }

    fn key(&self) -> (usize, usize) {
        (self.i, self.j.unwrap_or(self.i))
    }
}

impl std::fmt::Display for AggVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.j {
            None => write!(f, "e{}", self.i + 1),
            Some(j) => write!(f, "e{}+e{}", self.i + 1, j + 1),
        }
    }
}

/// The full aggregation set: d singletons, then the d(d-1)/2 pairs in
/// lexicographic order.
pub fn aggregation_set(d: usize) -> Vec<AggVector> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        out.push(AggVector { d, i, j: None });
    }
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(AggVector { d, i, j: Some(j) });
        }
    }
    out
}

/// Autocovariance matrices of the twice-differenced process.
///
/// `gamma1` is constructed as `-4 * gamma2`, so the moment constraint
/// holds exactly rather than up to estimation error.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocovSet<F> {
    gamma0: SymMatrix<F>,
    gamma2: SymMatrix<F>,
    gamma1: SymMatrix<F>,
}

impl<F: Float> AutocovSet<F> {
    pub fn new(gamma0: SymMatrix<F>, gamma2: SymMatrix<F>) -> Result<Self> {
        if gamma0.order() != gamma2.order() {
            return Err(Error::DimensionMismatch {
                expected: gamma0.order(),
                got: gamma2.order(),
            });
        }
        let gamma1 = gamma2.scale(F::cast(-4.0));
        Ok(AutocovSet {
            gamma0,
            gamma2,
            gamma1,
        })
    }

    pub fn gamma0(&self) -> &SymMatrix<F> {
        &self.gamma0
    }

    pub fn gamma1(&self) -> &SymMatrix<F> {
        &self.gamma1
    }

    pub fn gamma2(&self) -> &SymMatrix<F> {
        &self.gamma2
    }

    pub fn order(&self) -> usize {
        self.gamma0.order()
    }
}

/// Structural covariance pair, with the regularization shifts that were
/// applied to reach it (zero when untouched).
#[derive(Clone, Debug)]
pub struct StructuralParams<F> {
    pub sigma_eps: SymMatrix<F>,
    pub sigma_xi: SymMatrix<F>,
    pub regularization_alpha: F,
}

impl<F: Float> StructuralParams<F> {
    pub fn new(sigma_eps: SymMatrix<F>, sigma_xi: SymMatrix<F>) -> Result<Self> {
        if sigma_eps.order() != sigma_xi.order() {
            return Err(Error::DimensionMismatch {
                expected: sigma_eps.order(),
                got: sigma_xi.order(),
            });
        }
        Ok(StructuralParams {
            sigma_eps,
            sigma_xi,
            regularization_alpha: F::zero(),
        })
    }

    pub fn order(&self) -> usize {
        self.sigma_eps.order()
    }
}

/// Second difference `z_t = y_t - 2 y_{t-1} + y_{t-2}`, dropping the
/// first two rows.
pub fn difference_twice<F: Float>(y: &TimeSeriesPanel<F>) -> Result<TimeSeriesPanel<F>> {
    let n = y.len();
    if n < 12 {
        return Err(Error::TooShort { needed: 12, got: n });
    }
    let d = y.dim();
    let two = F::cast(2.0);
    let mut rows = Vec::with_capacity(n - 2);
    for t in 2..n {
        let mut row = Vec::with_capacity(d);
        for j in 0..d {
            row.push(y.get(t, j) - two * y.get(t - 1, j) + y.get(t - 2, j));
        }
        rows.push(row);
    }
    let mut z = TimeSeriesPanel::from_rows(rows, y.names().to_vec())?;
    if let Some(f) = y.frequency() {
        z = z.with_frequency(f);
    }
    Ok(z)
}

/// Aggregated scalar series `x_t = w'z_t`.
pub fn aggregate<F: Float>(z: &TimeSeriesPanel<F>, w: &AggVector) -> Result<ScalarSeries<F>> {
    if w.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: w.dim(),
        });
    }
    let (i, j) = w.indices();
    let values = (0..z.len())
        .map(|t| match j {
            None => z.get(t, i),
            Some(j) => z.get(t, i) + z.get(t, j),
        })
        .collect();
    ScalarSeries::new(values)
}

/// Reassembles the autocovariance matrices from per-aggregate MA(2)
/// parameters.
///
/// The inputs must be model-implied parameter triples (never sample
/// autocovariances); diagonals come from the singletons and off-diagonals
/// from `(G_k)_{ij} = (g_k^{(ei+ej)} - g_k^{(ei)} - g_k^{(ej)}) / 2`.
pub fn reconstruct_gammas<F: Float>(
    fits: &BTreeMap<(usize, usize), ScalarMa2<F>>,
    d: usize,
) -> Result<AutocovSet<F>> {
    let lookup = |i: usize, j: usize| -> Result<(F, F, F)> {
        fits.get(&(i, j))
            .map(autocov_from_fit)
            .ok_or_else(|| Error::MissingAggregate {
                w: if i == j {
                    format!("e{}", i + 1)
                } else {
                    format!("e{}+e{}", i + 1, j + 1)
                },
            })
    };
    let half = F::cast(0.5);
    let mut gamma0 = SymMatrix::zeros(d);
    let mut gamma2 = SymMatrix::zeros(d);
    for i in 0..d {
        let (g0, _, g2) = lookup(i, i)?;
        gamma0.set(i, i, g0);
        gamma2.set(i, i, g2);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let (gp0, _, gp2) = lookup(i, j)?;
            let (gi0, _, gi2) = lookup(i, i)?;
            let (gj0, _, gj2) = lookup(j, j)?;
            // grouping the singleton terms keeps the value symmetric in
            // (i, j) bit for bit, so column permutations commute exactly
            gamma0.set(i, j, half * (gp0 - (gi0 + gj0)));
            gamma2.set(i, j, half * (gp2 - (gi2 + gj2)));
        }
    }
    AutocovSet::new(gamma0, gamma2)
}

/// Structural covariances implied by the autocovariances:
/// `sigma_eps = Gamma_2`, `sigma_xi = Gamma_0 - 6 Gamma_2`.
pub fn extract_structural<F: Float>(g: &AutocovSet<F>) -> StructuralParams<F> {
    let sigma_eps = g.gamma2().clone();
    let sigma_xi = g.gamma0().sub(&g.gamma2().scale(F::cast(6.0)));
    StructuralParams {
        sigma_eps,
        sigma_xi,
        regularization_alpha: F::zero(),
    }
}

/// Smallest eigenvalue of `(sigma_xi + alpha I) sigma_eps^{-1}`, computed
/// through the symmetric whitened form.
fn min_snr_eigenvalue<F: Float>(
    chol_inv_t: &crate::numerics::Matrix<F>, // (M')^{-1}
    sigma_xi: &SymMatrix<F>,
    alpha: F,
) -> Result<F> {
    let shifted = sigma_xi.add_scaled_identity(alpha);
    let b = chol_inv_t
        .matmul(&shifted.to_matrix())
        .matmul(&chol_inv_t.transpose());
    let w = SymMatrix::from_matrix_symmetrized(&b);
    let ep = sym_eig(&w)?;
    Ok(*ep.values.last().expect("nonempty spectrum"))
}

/// Shifts `sigma_xi` by the smallest `alpha >= 0` that lifts the minimum
/// eigenvalue of `sigma_xi sigma_eps^{-1}` to `target_min_snr`.
///
/// `alpha` is located by bisection on the (strictly increasing) minimum
/// eigenvalue to an absolute tolerance of 1e-12; if the target already
/// holds, the input is returned unchanged with `alpha = 0`.
pub fn regularize<F: Float>(
    p: &StructuralParams<F>,
    target_min_snr: F,
) -> Result<StructuralParams<F>> {
    let m = cholesky(&p.sigma_eps)?; // errors if sigma_eps is not PD
    let chol_inv_t = m.invert_upper_triangular()?.transpose();
    if min_snr_eigenvalue(&chol_inv_t, &p.sigma_xi, F::zero())? >= target_min_snr {
        return Ok(StructuralParams {
            sigma_eps: p.sigma_eps.clone(),
            sigma_xi: p.sigma_xi.clone(),
            regularization_alpha: F::zero(),
        });
    }
    // growing the shift by lambda_max(sigma_eps) * target plus the most
    // negative xi eigenvalue always reaches the target; double to be safe
    let eps_eigs = sym_eig(&p.sigma_eps)?;
    let xi_eigs = sym_eig(&p.sigma_xi)?;
    let lam_max_eps = eps_eigs.values[0];
    let xi_min = *xi_eigs.values.last().expect("nonempty");
    let mut hi =
        (target_min_snr * lam_max_eps - xi_min.min(F::zero())).max(F::cast(1e-30)) * F::cast(2.0);
    let mut guard = 0;
    while min_snr_eigenvalue(&chol_inv_t, &p.sigma_xi, hi)? < target_min_snr {
        hi = hi * F::cast(2.0);
        guard += 1;
        if guard > 200 {
            return Err(Error::NoConvergence {
                what: "regularization bracket",
                iterations: guard,
            });
        }
    }
    let mut lo = F::zero();
    let tol = F::cast(1e-12);
    // the midpoint degenerating to an endpoint means the scalar type's
    // resolution is exhausted; stop there rather than demanding the
    // absolute tolerance
    for _ in 0..256 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) / F::cast(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if min_snr_eigenvalue(&chol_inv_t, &p.sigma_xi, mid)? >= target_min_snr {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(StructuralParams {
        sigma_eps: p.sigma_eps.clone(),
        sigma_xi: p.sigma_xi.add_scaled_identity(hi),
        regularization_alpha: hi,
    })
}

/// One per-aggregate fit in the estimation report.
#[derive(Clone, Debug)]
pub struct AggregateFit<F> {
    pub w: AggVector,
    pub fit: ScalarMa2Fit<F>,
}

/// Full output of the estimation pipeline.
#[derive(Clone, Debug)]
pub struct MetaReport<F> {
    pub structural: StructuralParams<F>,
    pub autocovs: AutocovSet<F>,
    pub fits: Vec<AggregateFit<F>>,
    /// Additive shift applied to `sigma_eps` when the raw estimate was
    /// not positive definite (zero in the regular case).
    pub sigma_eps_shift: F,
    /// Minimum eigenvalue of the signal-noise ratio after regularization.
    pub min_snr: F,
}

/// Runs the full estimation pipeline on a raw panel.
///
/// Differences twice, fits every aggregate, reassembles the
/// autocovariances, extracts the structural covariances, and regularizes
/// the signal-noise spectrum up to `target_min_snr`. If any scalar fit
/// fails the whole estimation fails with the offending aggregate named.
pub fn meta_estimate<F: Float>(y: &TimeSeriesPanel<F>, target_min_snr: F) -> Result<MetaReport<F>> {
    let d = y.dim();
    if d == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    let z = difference_twice(y)?;
    let ws = aggregation_set(d);
    let fits: Vec<AggregateFit<F>> = ws
        .par_iter()
        .map(|w| {
            let x = aggregate(&z, w)?;
            let fit = fit(&x).map_err(|e| Error::AggregateFitFailed {
                w: w.to_string(),
                source: Box::new(e),
            })?;
            Ok(AggregateFit { w: w.clone(), fit })
        })
        .collect::<Result<Vec<_>>>()?;

    let params: BTreeMap<(usize, usize), ScalarMa2<F>> = fits
        .iter()
        .map(|af| (af.w.key(), af.fit.params()))
        .collect();
    let autocovs = reconstruct_gammas(&params, d)?;
    let mut structural = extract_structural(&autocovs);

    // the difference of two estimated matrices can lose definiteness on
    // either side; sigma_eps gets a documented identity shift first
    let mut sigma_eps_shift = F::zero();
    if cholesky(&structural.sigma_eps).is_err() {
        let trace = structural.sigma_eps.trace();
        if trace <= F::zero() || trace.is_nan() {
            return Err(Error::NotPositiveDefinite {
                context: "estimated sigma_eps has nonpositive trace",
            });
        }
        let target = F::cast(1e-8) * trace / F::cast(d as f64);
        let lam_min = *sym_eig(&structural.sigma_eps)?
            .values
            .last()
            .expect("nonempty");
        sigma_eps_shift = target - lam_min;
        structural.sigma_eps = structural.sigma_eps.add_scaled_identity(sigma_eps_shift);
    }

    let structural = regularize(&structural, target_min_snr)?;
    let m = cholesky(&structural.sigma_eps)?;
    let chol_inv_t = m.invert_upper_triangular()?.transpose();
    let min_snr = min_snr_eigenvalue(&chol_inv_t, &structural.sigma_xi, F::zero())?;

    Ok(MetaReport {
        structural,
        autocovs,
        fits,
        sigma_eps_shift,
        min_snr,
    })
}
