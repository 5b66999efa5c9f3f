//! Multivariate smooth-trend (Hodrick-Prescott) modelling.
//!
//! The library estimates the multivariate smooth-trend model
//!
//! ```text
//! y_t   = mu_t + eps_t,          var(eps_t) = sigma_eps
//! mu_t1 = mu_t + beta_t,
//! beta_t1 = beta_t + xi_t,       var(xi_t)  = sigma_xi
//! ```
//!
//! by aggregation (fit d(d+1)/2 univariate constrained MA(2) models and
//! reassemble the autocovariance matrices), computes the closed-form
//! invertible VMA(2) reduced form of the twice-differenced process, and
//! extracts smooth trends component by component after decoupling the
//! system with the signal-noise matrix ratio's eigenbasis.
//!
//! All numerical kernels are generic over the scalar type through the
//! [`Float`] trait; `f64` aliases for the main types live at the crate
//! root (`SymMatrix64`, `Panel64`, ...). `f64` is the intended production
//! type; `f32` instantiations work but cannot meet the documented
//! tolerances.

#![allow(clippy::needless_range_loop)]

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{FromPrimitive, NumCast};

pub mod decoupling;
mod error;
pub mod ma2_mle;
pub mod meta;
pub mod numerics;
pub mod panel;
pub mod scalar_ma2;
pub mod simulation;
pub mod trend;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Scalar type the numerical kernels are generic over.
pub trait Float:
    num_traits::Float + FromPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Lossy conversion from any primitive numeric type.
    fn cast<T: num_traits::ToPrimitive>(x: T) -> Self {
        NumCast::from(x).expect("numeric cast failed")
    }
}

impl Float for f32 {}
impl Float for f64 {}

pub type Matrix64 = numerics::Matrix<f64>;
pub type SymMatrix64 = numerics::SymMatrix<f64>;
pub type EigenPair64 = numerics::EigenPair<f64>;
pub type Panel64 = panel::TimeSeriesPanel<f64>;
pub type ScalarSeries64 = ma2_mle::ScalarSeries<f64>;
pub type ScalarMa2Fit64 = ma2_mle::ScalarMa2Fit<f64>;
pub type AutocovSet64 = meta::AutocovSet<f64>;
pub type StructuralParams64 = meta::StructuralParams<f64>;
pub type MetaReport64 = meta::MetaReport<f64>;
pub type Decoupling64 = decoupling::Decoupling<f64>;
pub type ReducedForm64 = decoupling::ReducedForm<f64>;
pub type TrendResult64 = trend::TrendResult<f64>;
pub type SimConfig64 = simulation::SimConfig<f64>;
