//! Decoupling transform and closed-form VMA(2) reduced form.
//!
//! With `sigma_eps = M'M` (Cholesky) and the eigendecomposition
//! `(M')^{-1} sigma_xi M^{-1} = Q D Q'`, the transform `P = M'Q`
//! simultaneously whitens the irregular covariance
//! (`P^{-1} sigma_eps P'^{-1} = I`) and diagonalizes the trend noise
//! (`P^{-1} sigma_xi P'^{-1} = D`). The diagonal of `D` holds the scalar
//! signal-noise ratios of the decoupled components, and the reduced-form
//! parameters follow per component from the scalar closed form:
//!
//! ```text
//! Theta_1 = P diag(alpha_k) P^{-1}
//! Theta_2 = P diag(beta_k)  P^{-1}
//! Omega   = P diag(1/beta_k) P'   ( = Theta_2^{-1} sigma_eps )
//! ```
//!
//! `P` is kept exactly as `M'Q` (no unit-norm rescaling) because the
//! outer-product form of `Omega` depends on it; only column signs are
//! normalized for reproducible output, which leaves every identity
//! intact.

use crate::meta::StructuralParams;
use crate::numerics::{cholesky, sym_eig, Matrix, SymMatrix};
use crate::scalar_ma2::{invertibility_margin, theta_from_snr, ScalarMa2};
use crate::{Error, Float, Result};

/// Decoupling transform with the signal-noise spectrum.
#[derive(Clone, Debug)]
pub struct Decoupling<F> {
    pub p: Matrix<F>,
    pub p_inv: Matrix<F>,
    /// Signal-noise ratios, sorted descending, clamped to zero below
    /// `snr_zero_tol`.
    pub delta: Vec<F>,
    /// Number of ratios clamped to exactly zero (common trends).
    pub cointegration_rank: usize,
    /// Clamp tolerance that was applied: `1e-12 * max(1, delta_max)`.
    pub snr_zero_tol: F,
}

impl<F: Float> Decoupling<F> {
    pub fn dim(&self) -> usize {
        self.delta.len()
    }
}

/// Closed-form reduced form of the twice-differenced process.
#[derive(Clone, Debug)]
pub struct ReducedForm<F> {
    pub theta1_mat: Matrix<F>,
    pub theta2_mat: Matrix<F>,
    pub omega: SymMatrix<F>,
    /// Minimum root modulus of each scalar factor `1 + a_k z + b_k z^2`;
    /// entries equal to one certify unit-root (common trend) components.
    pub invertibility_margins: Vec<F>,
}

impl<F: Float> ReducedForm<F> {
    /// Smallest root modulus across components; `> 1` means the VMA(2)
    /// is strictly invertible.
    pub fn min_margin(&self) -> F {
        self.invertibility_margins
            .iter()
            .fold(F::infinity(), |m, &x| m.min(x))
    }
}

/// Computes the decoupling transform of a structural pair.
///
/// `sigma_eps` must be positive definite; `sigma_xi` must be positive
/// semidefinite up to roundoff (ratios below `-snr_zero_tol` report
/// [`Error::NegativeSnrEigenvalue`], signalling missing regularization).
pub fn decouple<F: Float>(params: &StructuralParams<F>) -> Result<Decoupling<F>> {
    let m = cholesky(&params.sigma_eps)?;
    let m_inv = m.invert_upper_triangular()?;
    let m_inv_t = m_inv.transpose(); // (M')^{-1}
    let w_full = m_inv_t.matmul(&params.sigma_xi.to_matrix()).matmul(&m_inv);
    let w = SymMatrix::from_matrix_symmetrized(&w_full);
    let ep = sym_eig(&w)?;

    let delta_max = ep.values.first().copied().unwrap_or(F::zero());
    let tol = F::cast(1e-12) * delta_max.max(F::one());
    let mut delta = Vec::with_capacity(ep.values.len());
    for &v in &ep.values {
        if v < -tol {
            return Err(Error::NegativeSnrEigenvalue {
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
        delta.push(if v.abs() <= tol { F::zero() } else { v });
    }
    let cointegration_rank = delta.iter().filter(|&&v| v == F::zero()).count();

    let m_t = m.transpose();
    let mut p = m_t.matmul(&ep.vectors);
    let mut p_inv = ep.vectors.transpose().matmul(&m_inv_t);

    // sign convention on P's columns for reproducible output; flipping a
    // column of P together with the matching row of P^{-1} preserves
    // every similarity and congruence identity
    let d = delta.len();
    for k in 0..d {
        let mut best = 0usize;
        for i in 1..d {
            if p[(i, k)].abs() > p[(best, k)].abs() {
                best = i;
            }
        }
        if p[(best, k)] < F::zero() {
            for i in 0..d {
                p[(i, k)] = -p[(i, k)];
                p_inv[(k, i)] = -p_inv[(k, i)];
            }
        }
    }

    Ok(Decoupling {
        p,
        p_inv,
        delta,
        cointegration_rank,
        snr_zero_tol: tol,
    })
}

/// Closed-form reduced form `(Theta_1, Theta_2, Omega)` of a structural
/// pair.
///
/// Common-trend components (`delta_k = 0`) carry the boundary pair
/// `alpha = -2`, `beta = 1` and a unit-modulus root recorded in the
/// invertibility margins.
pub fn reduced_form<F: Float>(params: &StructuralParams<F>) -> Result<ReducedForm<F>> {
    let dec = decouple(params)?;
    reduced_form_from_decoupling(&dec)
}

/// Reduced form from an already-computed decoupling.
pub fn reduced_form_from_decoupling<F: Float>(dec: &Decoupling<F>) -> Result<ReducedForm<F>> {
    let d = dec.dim();
    let mut alphas = Vec::with_capacity(d);
    let mut betas = Vec::with_capacity(d);
    let mut margins = Vec::with_capacity(d);
    for &delta_k in &dec.delta {
        let (a, b) = theta_from_snr(delta_k)?;
        margins.push(invertibility_margin(&ScalarMa2 {
            theta1: a,
            theta2: b,
            omega: F::one(),
        }));
        alphas.push(a);
        betas.push(b);
    }

    let similarity = |coeffs: &[F]| -> Matrix<F> {
        let mut scaled = dec.p.clone();
        for (k, &c) in coeffs.iter().enumerate() {
            scaled.scale_col(k, c);
        }
        scaled.matmul(&dec.p_inv)
    };
    let theta1_mat = similarity(&alphas);
    let theta2_mat = similarity(&betas);

    let mut scaled = dec.p.clone();
    for (k, &b) in betas.iter().enumerate() {
        scaled.scale_col(k, F::one() / b);
    }
    let omega_full = scaled.matmul(&dec.p.transpose());
    let omega = SymMatrix::from_matrix_symmetrized(&omega_full);

    Ok(ReducedForm {
        theta1_mat,
        theta2_mat,
        omega,
        invertibility_margins: margins,
    })
}

/// Signal-noise matrix ratio `sigma_xi sigma_eps^{-1}` with its spectral
/// report.
pub fn snr_matrix<F: Float>(params: &StructuralParams<F>) -> Result<(Matrix<F>, Decoupling<F>)> {
    let m = cholesky(&params.sigma_eps)?;
    let m_inv = m.invert_upper_triangular()?;
    // sigma_eps^{-1} = M^{-1} (M')^{-1}
    let eps_inv = m_inv.matmul(&m_inv.transpose());
    let ratio = params.sigma_xi.to_matrix().matmul(&eps_inv);
    let dec = decouple(params)?;
    Ok((ratio, dec))
}
