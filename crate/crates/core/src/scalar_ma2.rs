//! Closed-form maps between the scalar signal-noise ratio and the
//! constrained MA(2) parameters, plus the moment identities of the
//! reduced form.
//!
//! The twice-differenced scalar smooth-trend process is an MA(2)
//! `z_t = (1 + theta1 L + theta2 L^2) u_t` whose parameters are pinned by
//! the single ratio `delta = sigma_xi / sigma_eps`:
//!
//! ```text
//! theta1 = -2 + 0.5 * sqrt(-2 delta + 2 sqrt(delta^2 + 16 delta))
//! theta2 = -theta1 / (4 + theta1)
//! omega  = sigma_eps / theta2
//! ```
//!
//! `delta = 0` is the common-trend (cointegration) boundary with the
//! exact pair `(-2, 1)` and a unit-modulus MA root.

use crate::{Error, Float, Result};

/// Constrained MA(2) parameter triple with `theta2 = -theta1/(4+theta1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarMa2<F> {
    pub theta1: F,
    pub theta2: F,
    pub omega: F,
}

impl<F: Float> ScalarMa2<F> {
    /// Parameters implied by a signal-noise ratio and irregular variance.
    pub fn from_structural(sigma_eps: F, sigma_xi: F) -> Result<Self> {
        if sigma_eps <= F::zero() || !sigma_eps.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sigma_eps must be positive and finite, got {sigma_eps}"
            )));
        }
        let delta = sigma_xi / sigma_eps;
        let (theta1, theta2) = theta_from_snr(delta)?;
        Ok(ScalarMa2 {
            theta1,
            theta2,
            omega: sigma_eps / theta2,
        })
    }
}

/// Scalar structural variances with their ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarStructural<F> {
    pub sigma_eps: F,
    pub sigma_xi: F,
}

impl<F: Float> ScalarStructural<F> {
    pub fn new(sigma_eps: F, sigma_xi: F) -> Result<Self> {
        if sigma_eps <= F::zero() || !sigma_eps.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sigma_eps must be positive and finite, got {sigma_eps}"
            )));
        }
        if sigma_xi < F::zero() || !sigma_xi.is_finite() {
            return Err(Error::NegativeSnr {
                delta: (sigma_xi / sigma_eps).to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(ScalarStructural {
            sigma_eps,
            sigma_xi,
        })
    }

    pub fn delta(&self) -> F {
        self.sigma_xi / self.sigma_eps
    }

    /// The implied constrained MA(2) triple.
    pub fn reduced(&self) -> Result<ScalarMa2<F>> {
        ScalarMa2::from_structural(self.sigma_eps, self.sigma_xi)
    }
}

/// MA(2) parameters `(theta1, theta2)` for a signal-noise ratio.
///
/// `delta = 0` returns the exact boundary pair `(-2, 1)`. The naive
/// formula cancels catastrophically for large `delta`, so the map is
/// evaluated through algebraically equivalent rationalized forms that
/// stay accurate over the whole range (including `delta` near the
/// floating-point limits).
pub fn theta_from_snr<F: Float>(delta: F) -> Result<(F, F)> {
    if delta.is_nan() || delta == F::infinity() {
        return Err(Error::NonFinite {
            what: "signal-noise ratio",
        });
    }
    if delta < F::zero() {
        return Err(Error::NegativeSnr {
            delta: delta.to_f64().unwrap_or(f64::NAN),
        });
    }
    let two = F::cast(2.0);
    if delta == F::zero() {
        return Ok((-two, F::one()));
    }

    let theta1 = if delta < F::one() {
        // s = sqrt(delta^2 + 16 delta), r = s - delta computed without
        // cancellation; on this branch sqrt(r/2) stays below 1.25, so
        // the subtraction from 2 keeps a safe margin.
        let s = (delta * (delta + F::cast(16.0))).sqrt();
        let r = F::cast(16.0) * delta / (s + delta);
        (r / two).sqrt() - two
    } else {
        // w = (s + delta)/delta avoids overflow; the difference
        // theta1 = u - 2 is rationalized to -64/(delta w^2 (u+2)).
        let w = F::one() + (F::one() + F::cast(16.0) / delta).sqrt();
        let u = (F::cast(8.0) / w).sqrt();
        -F::cast(64.0) / (delta * w * w * (u + two))
    };
    let theta2 = -theta1 / (F::cast(4.0) + theta1);
    Ok((theta1, theta2))
}

/// Signal-noise ratio implied by `theta1` under the MA(2) constraint.
///
/// Evaluates the exact factorization `(theta1+2)^4 / (-theta1 (4+theta1))`
/// of the moment identity `delta = (1+theta1^2+theta2^2)/theta2 - 6`,
/// which is stable near the cointegration boundary. `theta1 = 0` is the
/// white-noise limit and maps to positive infinity.
pub fn snr_from_theta<F: Float>(theta1: F) -> Result<F> {
    let two = F::cast(2.0);
    if theta1.is_nan() || theta1 < -two || theta1 > F::zero() {
        return Err(Error::OutOfInvertibleRange {
            theta1: theta1.to_f64().unwrap_or(f64::NAN),
        });
    }
    if theta1 == -two {
        return Ok(F::zero());
    }
    if theta1 == F::zero() {
        return Ok(F::infinity());
    }
    let h = theta1 + two;
    Ok(h * h * h * h / (-theta1 * (F::cast(4.0) + theta1)))
}

/// Model-implied autocovariances `(gamma0, gamma1, gamma2)` of the MA(2).
///
/// `gamma1 = -4 gamma2` holds up to rounding as an algebraic consequence
/// of the parameter constraint.
pub fn autocov_from_fit<F: Float>(fit: &ScalarMa2<F>) -> (F, F, F) {
    let gamma2 = fit.theta2 * fit.omega;
    let gamma1 = fit.theta1 * (fit.theta2 + F::one()) * fit.omega;
    let gamma0 = fit.omega * (F::one() + fit.theta1 * fit.theta1 + fit.theta2 * fit.theta2);
    (gamma0, gamma1, gamma2)
}

/// Minimum modulus of the roots of `1 + theta1 z + theta2 z^2`.
///
/// Greater than one means strictly invertible; exactly one is the
/// common-trend boundary; an MA with no roots (both coefficients zero)
/// reports positive infinity.
pub fn invertibility_margin<F: Float>(fit: &ScalarMa2<F>) -> F {
    let (b, a) = (fit.theta1, fit.theta2);
    if a == F::zero() {
        return if b == F::zero() {
            F::infinity()
        } else {
            (F::one() / b).abs()
        };
    }
    let four = F::cast(4.0);
    let disc = b * b - four * a;
    if disc < F::zero() {
        // complex pair; |z|^2 equals the root product 1/theta2
        return (F::one() / a).abs().sqrt();
    }
    let sd = disc.sqrt();
    let q = if b >= F::zero() {
        -(b + sd) / F::cast(2.0)
    } else {
        -(b - sd) / F::cast(2.0)
    };
    if q == F::zero() {
        // b = disc = 0: double root at 0 of the reversed polynomial
        return (F::one() / a).abs().sqrt();
    }
    let r1 = (q / a).abs();
    let r2 = (F::one() / q).abs();
    r1.min(r2)
}
