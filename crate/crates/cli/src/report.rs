//! JSON report formats.
//!
//! All reals are serialized with 17 significant digits (`{:.16e}`), which
//! round-trips every f64 exactly and keeps reruns byte-identical; key
//! order is fixed by struct order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use mvhp_core::decoupling::{Decoupling, ReducedForm};
use mvhp_core::meta::MetaReport;
use mvhp_core::numerics::{Matrix, SymMatrix};
use mvhp_core::{Matrix64, SymMatrix64};

use crate::error::CliError;

/// Estimation report: structural covariances, decoupling, reduced form,
/// per-aggregate fits, and diagnostics.
#[derive(Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub sigma_eps: Vec<Vec<f64>>,
    pub sigma_xi: Vec<Vec<f64>>,
    pub alpha: f64,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub theta1_mat: Vec<Vec<f64>>,
    pub theta2_mat: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    pub per_aggregate: Vec<AggregateEntry>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AggregateEntry {
    pub w: Vec<u8>,
    pub theta1: f64,
    pub theta2: f64,
    pub omega: f64,
    pub se_theta1: f64,
    pub boundary: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub min_snr_eigenvalue: f64,
    pub invertibility_margins: Vec<f64>,
    pub cointegration_rank: usize,
    pub sigma_eps_shift: f64,
    pub series: Vec<String>,
}

/// Standalone reduced-form report for `factorize`.
#[derive(Debug, Serialize, Deserialize)]
pub struct FactorizeReport {
    pub theta1_mat: Vec<Vec<f64>>,
    pub theta2_mat: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub gamma_residuals: GammaResiduals,
    pub invertibility_margins: Vec<f64>,
    pub cointegration_rank: usize,
}

/// Relative Frobenius residuals of the three moment identities the
/// reduced form must satisfy.
#[derive(Debug, Serialize, Deserialize)]
pub struct GammaResiduals {
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Input file for `factorize`: the two structural covariance matrices.
#[derive(Debug, Serialize, Deserialize)]
pub struct CovariancesFile {
    pub sigma_eps: Vec<Vec<f64>>,
    pub sigma_xi: Vec<Vec<f64>>,
}

pub fn matrix_rows(m: &Matrix64) -> Vec<Vec<f64>> {
    m.to_rows()
}

pub fn sym_rows(m: &SymMatrix64) -> Vec<Vec<f64>> {
    m.to_matrix().to_rows()
}

pub fn sym_from_rows(rows: Vec<Vec<f64>>, what: &str) -> Result<SymMatrix64, CliError> {
    SymMatrix::from_rows(rows)
        .map_err(|e| CliError::input(format!("{what} is not an exactly symmetric matrix: {e}")))
}

pub fn build_estimate_report(
    meta: &MetaReport<f64>,
    dec: &Decoupling<f64>,
    rf: &ReducedForm<f64>,
    series: Vec<String>,
) -> EstimateReport {
    EstimateReport {
        sigma_eps: sym_rows(&meta.structural.sigma_eps),
        sigma_xi: sym_rows(&meta.structural.sigma_xi),
        alpha: meta.structural.regularization_alpha,
        p: matrix_rows(&dec.p),
        delta: dec.delta.clone(),
        theta1_mat: matrix_rows(&rf.theta1_mat),
        theta2_mat: matrix_rows(&rf.theta2_mat),
        omega: sym_rows(&rf.omega),
        per_aggregate: meta
            .fits
            .iter()
            .map(|af| AggregateEntry {
                w: af.w.bits(),
                theta1: af.fit.theta1,
                theta2: af.fit.theta2,
                omega: af.fit.omega,
                se_theta1: af.fit.se_theta1,
                boundary: af.fit.boundary,
            })
            .collect(),
        diagnostics: Diagnostics {
            min_snr_eigenvalue: meta.min_snr,
            invertibility_margins: rf.invertibility_margins.clone(),
            cointegration_rank: dec.cointegration_rank,
            sigma_eps_shift: meta.sigma_eps_shift,
            series,
        },
    }
}

pub fn build_factorize_report(dec: &Decoupling<f64>, rf: &ReducedForm<f64>) -> FactorizeReport {
    FactorizeReport {
        theta1_mat: matrix_rows(&rf.theta1_mat),
        theta2_mat: matrix_rows(&rf.theta2_mat),
        omega: sym_rows(&rf.omega),
        delta: dec.delta.clone(),
        p: matrix_rows(&dec.p),
        gamma_residuals: GammaResiduals {
            gamma0: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
        },
        invertibility_margins: rf.invertibility_margins.clone(),
        cointegration_rank: dec.cointegration_rank,
    }
}

/// Relative Frobenius errors of the moment identities for a structural
/// pair and its reduced form.
pub fn gamma_residuals(
    sigma_eps: &SymMatrix64,
    sigma_xi: &SymMatrix64,
    rf: &ReducedForm<f64>,
) -> GammaResiduals {
    let se = sigma_eps.to_matrix();
    let sx = sigma_xi.to_matrix();
    let om = rf.omega.to_matrix();
    let (t1, t2) = (&rf.theta1_mat, &rf.theta2_mat);

    let g0 = om
        .add(&t1.matmul(&om).matmul(&t1.transpose()))
        .add(&t2.matmul(&om).matmul(&t2.transpose()));
    let expect0 = se.scale(6.0).add(&sx);
    let gamma0 = g0.sub(&expect0).frobenius_norm() / expect0.frobenius_norm();

    let g1 = t1.matmul(&om).add(&t2.matmul(&om).matmul(&t1.transpose()));
    let gamma1 = g1.add(&se.scale(4.0)).frobenius_norm() / (4.0 * se.frobenius_norm());

    let g2: Matrix<f64> = t2.matmul(&om);
    let gamma2 = g2.sub(&se).frobenius_norm() / se.frobenius_norm();

    GammaResiduals {
        gamma0,
        gamma1,
        gamma2,
    }
}

/// Pretty JSON with every float written as `{:.16e}`.
struct SciFormatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

/// Serializes a report to deterministic, lossless JSON.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut out = Vec::new();
    let formatter = SciFormatter {
        pretty: PrettyFormatter::new(),
    };
    let mut ser = Serializer::with_formatter(&mut out, formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::internal(format!("report serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| CliError::internal(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = to_json_string(value)?;
    std::fs::write(path, body)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, CliError> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&body)
        .map_err(|e| CliError::input(format!("malformed {what} {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::excessive_precision)]
    fn floats_carry_17_significant_digits() {
        #[derive(Serialize)]
        struct S {
            x: f64,
        }
        let json = to_json_string(&S {
            x: 0.1234567890123456789,
        })
        .unwrap();
        assert!(json.contains("1.2345678901234568e-1"), "{json}");
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn json_floats_round_trip_exactly() {
        #[derive(Serialize, Deserialize)]
        struct S {
            xs: Vec<f64>,
        }
        let values = vec![
            std::f64::consts::PI,
            1.0 / 3.0,
            -4.9406564584124654e-324,
            6.94444444444444e-5,
            0.0,
            1e308,
        ];
        let json = to_json_string(&S { xs: values.clone() }).unwrap();
        let back: S = serde_json::from_str(&json).unwrap();
        for (a, b) in values.iter().zip(&back.xs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
