//! Batch command-line tool for multivariate smooth-trend estimation,
//! trend extraction, reduced-form factorization, and panel simulation.

mod error;
mod io;
mod report;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use mvhp_core::decoupling::{decouple, reduced_form_from_decoupling, Decoupling};
use mvhp_core::meta::{meta_estimate, StructuralParams, MONTHLY_MIN_SNR, QUARTERLY_MIN_SNR};
use mvhp_core::simulation::{simulate, NoiseDistribution, SimConfig};
use mvhp_core::trend::{extract_trends, extract_trends_fixed, TrendResult};
use mvhp_core::Panel64;

use error::CliError;
use io::{load_panel, write_panel, PanelFile};

#[derive(Parser)]
#[command(
    name = "mvhp",
    version,
    about = "Multivariate smooth-trend estimation and extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Frequency {
    /// Minimum signal-noise ratio 1/14400
    Monthly,
    /// Minimum signal-noise ratio 1/1600
    Quarterly,
    /// Supply the floor through --snr-floor
    Custom,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate structural covariances and the reduced form from a panel CSV
    Estimate {
        /// Panel CSV (header row of names, optional leading date column)
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Frequency::Monthly)]
        freq: Frequency,
        /// Minimum signal-noise eigenvalue enforced by regularization
        #[arg(long)]
        snr_floor: Option<f64>,
        /// Output report JSON
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract smooth trends, writing trend.csv and cycle.csv
    Detrend {
        #[arg(long)]
        input: PathBuf,
        /// Estimation report to reuse; omitted means estimate in-process
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Emit per-series SVG charts (two sample windows each)
        #[arg(long)]
        emit_plots: bool,
        /// Smoothing weight of the fixed-weight overlay in the charts
        #[arg(long, default_value_t = 14400.0)]
        fixed_lambda: f64,
        #[arg(long, value_enum, default_value_t = Frequency::Monthly)]
        freq: Frequency,
        #[arg(long)]
        snr_floor: Option<f64>,
    },
    /// Simulate a panel from a structural model config JSON
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output panel CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form reduced form from user-supplied covariance matrices
    Factorize {
        /// JSON with sigma_eps and sigma_xi as row-major arrays
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// MVHP_THREADS caps worker parallelism for the whole process.
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("MVHP_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Estimate {
            input,
            freq,
            snr_floor,
            out,
        } => run_estimate(&input, freq, snr_floor, &out),
        Command::Detrend {
            input,
            report,
            out_dir,
            emit_plots,
            fixed_lambda,
            freq,
            snr_floor,
        } => run_detrend(
            &input,
            report.as_deref(),
            &out_dir,
            emit_plots,
            fixed_lambda,
            freq,
            snr_floor,
        ),
        Command::Simulate { config, out } => run_simulate(&config, &out),
        Command::Factorize { input, out } => run_factorize(&input, &out),
    }
}

fn resolve_snr_floor(freq: Frequency, snr_floor: Option<f64>) -> Result<f64, CliError> {
    if let Some(floor) = snr_floor {
        if floor < 0.0 || !floor.is_finite() {
            return Err(CliError::input(format!(
                "--snr-floor must be a nonnegative finite number, got {floor}"
            )));
        }
        return Ok(floor);
    }
    match freq {
        Frequency::Monthly => Ok(MONTHLY_MIN_SNR),
        Frequency::Quarterly => Ok(QUARTERLY_MIN_SNR),
        Frequency::Custom => Err(CliError::input(
            "--freq custom requires an explicit --snr-floor",
        )),
    }
}

fn run_estimate(
    input: &Path,
    freq: Frequency,
    snr_floor: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    let target = resolve_snr_floor(freq, snr_floor)?;
    let PanelFile { panel, .. } = load_panel(input)?;
    let meta = meta_estimate(&panel, target)?;
    let dec = decouple(&meta.structural)?;
    let rf = reduced_form_from_decoupling(&dec)?;
    let doc = report::build_estimate_report(&meta, &dec, &rf, panel.names().to_vec());
    report::write_json(out, &doc)
}

/// Any JSON carrying `sigma_eps` and `sigma_xi` works here, so a full
/// estimation report and a hand-written covariance file are both valid.
fn structural_from_report(path: &Path, d: usize) -> Result<StructuralParams<f64>, CliError> {
    let doc: report::CovariancesFile = report::read_json(path, "estimation report")?;
    let sigma_eps = report::sym_from_rows(doc.sigma_eps, "sigma_eps")?;
    let sigma_xi = report::sym_from_rows(doc.sigma_xi, "sigma_xi")?;
    if sigma_eps.order() != d {
        return Err(CliError::input(format!(
            "report is for {} series but the panel has {d}",
            sigma_eps.order()
        )));
    }
    StructuralParams::new(sigma_eps, sigma_xi).map_err(CliError::from)
}

fn run_detrend(
    input: &Path,
    report_path: Option<&Path>,
    out_dir: &Path,
    emit_plots: bool,
    fixed_lambda: f64,
    freq: Frequency,
    snr_floor: Option<f64>,
) -> Result<(), CliError> {
    let PanelFile { panel, dates } = load_panel(input)?;
    let structural = match report_path {
        Some(path) => structural_from_report(path, panel.dim())?,
        None => {
            let target = resolve_snr_floor(freq, snr_floor)?;
            meta_estimate(&panel, target)?.structural
        }
    };
    let dec = decouple(&structural)?;
    let result = extract_trends(&panel, &dec)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", out_dir.display())))?;
    write_panel(&out_dir.join("trend.csv"), &result.trend, dates.as_deref())?;
    write_panel(&out_dir.join("cycle.csv"), &result.cycle, dates.as_deref())?;

    if emit_plots {
        let fixed = extract_trends_fixed(&panel, &dec, fixed_lambda)?;
        emit_charts(out_dir, &panel, &result, &fixed)?;
    }
    Ok(())
}

fn emit_charts(
    out_dir: &Path,
    panel: &Panel64,
    estimated: &TrendResult<f64>,
    fixed: &TrendResult<f64>,
) -> Result<(), CliError> {
    for j in 0..panel.dim() {
        let raw = panel.column(j);
        let est = estimated.trend.column(j);
        let fix = fixed.trend.column(j);
        for (w, (lo, hi)) in svg::windows(panel.len()).into_iter().enumerate() {
            let body = svg::chart(&[
                svg::Line {
                    values: &raw[lo..hi],
                    stroke: "#999999",
                    width: 1.0,
                },
                svg::Line {
                    values: &fix[lo..hi],
                    stroke: "#000000",
                    width: 0.8,
                },
                svg::Line {
                    values: &est[lo..hi],
                    stroke: "#000000",
                    width: 2.5,
                },
            ]);
            let name = sanitize(&panel.names()[j]);
            let path = out_dir.join(format!("{name}_window{}.svg", w + 1));
            std::fs::write(&path, body)
                .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if cleaned.is_empty() {
        "series".to_owned()
    } else {
        cleaned
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NoiseSpec {
    Gaussian,
    ScaledT { df: f64 },
}

#[derive(Debug, Deserialize)]
struct SimConfigFile {
    n: usize,
    sigma_eps: Vec<Vec<f64>>,
    sigma_xi: Vec<Vec<f64>>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    noise: Option<NoiseSpec>,
    #[serde(default)]
    init_mu: Option<Vec<f64>>,
    #[serde(default)]
    init_beta: Option<Vec<f64>>,
}

fn run_simulate(config: &Path, out: &Path) -> Result<(), CliError> {
    let file: SimConfigFile = report::read_json(config, "simulation config")?;
    let sigma_eps = report::sym_from_rows(file.sigma_eps, "sigma_eps")?;
    let sigma_xi = report::sym_from_rows(file.sigma_xi, "sigma_xi")?;
    let mut cfg: SimConfig<f64> = SimConfig::new(sigma_eps, sigma_xi, file.n, file.seed);
    match file.noise {
        None | Some(NoiseSpec::Gaussian) => {}
        Some(NoiseSpec::ScaledT { df }) => {
            cfg = cfg.with_noise(NoiseDistribution::ScaledT { df });
        }
    }
    if let Some(mu) = file.init_mu {
        cfg.init_mu = mu;
    }
    if let Some(beta) = file.init_beta {
        cfg.init_beta = beta;
    }
    let out_data = simulate(&cfg)?;
    write_panel(out, &out_data.panel, None)
}

fn run_factorize(input: &Path, out: &Path) -> Result<(), CliError> {
    let file: report::CovariancesFile = report::read_json(input, "covariance file")?;
    let sigma_eps = report::sym_from_rows(file.sigma_eps, "sigma_eps")?;
    let sigma_xi = report::sym_from_rows(file.sigma_xi, "sigma_xi")?;
    if sigma_eps.order() != sigma_xi.order() {
        return Err(CliError::input(format!(
            "sigma_eps is {}x{0} but sigma_xi is {1}x{1}",
            sigma_eps.order(),
            sigma_xi.order()
        )));
    }
    let params = StructuralParams::new(sigma_eps.clone(), sigma_xi.clone())?;
    let dec: Decoupling<f64> = decouple(&params)?;
    let rf = reduced_form_from_decoupling(&dec)?;
    let mut doc = report::build_factorize_report(&dec, &rf);
    doc.gamma_residuals = report::gamma_residuals(&sigma_eps, &sigma_xi, &rf);
    report::write_json(out, &doc)
}
