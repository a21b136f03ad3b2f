//! The `hypervar` command set.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Method;
use crate::hyperboloid::{
    GEvaluator, HyperboloidProblem, McConfig, MethodChoice, DEFAULT_REPLICATES,
    DEFAULT_SAMPLES_PER_REPLICATE,
};
use crate::io::{self, SYMMETRY_TOL};
use crate::linalg::{
    build_signed_spectrum, cholesky, sym_eigen, SignedSpectrum, SymmetricMatrix, DEFAULT_ZERO_TOL,
};
use crate::portfolio::{self, ReturnSeries, DEFAULT_DAY_COUNT};
use crate::solver::{solve_var_with, SolveTolerance, VarResult};

#[derive(Debug, Parser)]
#[command(
    name = "hypervar",
    version,
    about = "Quadratic Value-at-Risk for delta-hedged option portfolios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the daily log-return covariance from close prices (EWMA).
    Covariance(CovarianceArgs),
    /// Solve G(R) = alpha and report the Value-at-Risk for each level.
    Var(VarArgs),
    /// Tabulate G(R) on a list of radii.
    Gfun(GfunArgs),
}

#[derive(Debug, Args)]
pub struct CovarianceArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long, default_value_t = 0.94)]
    pub lambda: f64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where the quadratic model comes from.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Daily log-return covariance CSV.
    #[arg(long, conflicts_with = "instruments")]
    pub sigma: Option<PathBuf>,
    /// Diagonal of Gamma1 as a CSV vector.
    #[arg(long = "gamma1-diag", conflicts_with_all = ["gamma1", "instruments"])]
    pub gamma1_diag: Option<PathBuf>,
    /// Full Gamma1 matrix CSV.
    #[arg(long, conflicts_with = "instruments")]
    pub gamma1: Option<PathBuf>,
    /// Daily time decay of the portfolio.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "instruments")]
    pub theta: Option<f64>,
    /// Option positions CSV; Sigma is then estimated from --prices.
    #[arg(long, requires = "prices")]
    pub instruments: Option<PathBuf>,
    #[arg(long, requires = "instruments")]
    pub prices: Option<PathBuf>,
    #[arg(long, default_value_t = 0.94)]
    pub lambda: f64,
    #[arg(long = "day-count", default_value_t = DEFAULT_DAY_COUNT)]
    pub day_count: f64,
    /// Relative asymmetry accepted in matrix inputs before averaging.
    #[arg(long = "symmetry-tol", default_value_t = SYMMETRY_TOL)]
    pub symmetry_tol: f64,
    /// Eigenvalues below this fraction of the spectral radius count as zero.
    #[arg(long = "zero-tol", default_value_t = DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub replicates: usize,
    /// Samples per replicate.
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_REPLICATE)]
    pub samples: usize,
    #[arg(long = "no-antithetic")]
    pub no_antithetic: bool,
    /// auto, neg-only, pos-only, mixed, general or oracle.
    #[arg(long, default_value = "auto", value_parser = MethodChoice::parse)]
    pub method: MethodChoice,
    /// Tolerance on |G(R) - alpha|; Monte Carlo routes also accept SE/2.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VarArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GfunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long = "R", value_delimiter = ',', required = true)]
    pub r: Vec<f64>,
    /// Also write `R,G,standardError` rows to this CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Quadratic model ready for the hyperboloid reduction.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub labels: Option<Vec<String>>,
    pub sigma: SymmetricMatrix,
    pub gamma1: SymmetricMatrix,
    pub theta: Option<f64>,
}

impl ModelInputs {
    pub fn spectrum(&self, zero_tol: f64) -> Result<SignedSpectrum> {
        let c = cholesky(&self.sigma)?;
        build_signed_spectrum(&c, &self.gamma1, zero_tol)
    }
}

fn path_string(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

pub fn load_model(args: &ModelArgs) -> Result<ModelInputs> {
    if let Some(inst_path) = &args.instruments {
        let prices_path = args
            .prices
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("--instruments needs --prices".into()))?;
        return load_from_positions(inst_path, prices_path, args);
    }
    let sigma_path = args.sigma.as_ref().ok_or_else(|| {
        Error::InvalidInput(
            "give --sigma with --gamma1-diag or --gamma1, or --instruments with --prices".into(),
        )
    })?;
    let sigma = io::parse_symmetric_matrix(&io::read_text(sigma_path)?, args.symmetry_tol)?;
    let gamma1 = match (&args.gamma1_diag, &args.gamma1) {
        (Some(p), None) => SymmetricMatrix::from_diagonal(&io::parse_vector(&io::read_text(p)?)?),
        (None, Some(p)) => {
            io::parse_symmetric_matrix(&io::read_text(p)?, args.symmetry_tol)?.matrix
        }
        _ => {
            return Err(Error::InvalidInput(
                "give exactly one of --gamma1-diag and --gamma1".into(),
            ))
        }
    };
    if gamma1.dim() != sigma.matrix.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Sigma is {0}x{0} but Gamma1 has dimension {1}",
            sigma.matrix.dim(),
            gamma1.dim()
        )));
    }
    Ok(ModelInputs {
        labels: sigma.labels,
        sigma: sigma.matrix,
        gamma1,
        theta: args.theta,
    })
}

fn load_from_positions(
    inst_path: &Path,
    prices_path: &Path,
    args: &ModelArgs,
) -> Result<ModelInputs> {
    let table = io::parse_prices(&io::read_text(prices_path)?)?;
    let series = ReturnSeries::from_prices(table.tickers.clone(), &table.rows)?;
    let full = portfolio::ewma_covariance(&series, args.lambda)?;
    let rows = io::parse_instruments(&io::read_text(inst_path)?)?;

    let mut names: Vec<String> = Vec::new();
    for r in &rows {
        if !names.contains(&r.name) {
            names.push(r.name.clone());
        }
    }
    let mut index = Vec::with_capacity(names.len());
    for name in &names {
        let i = table
            .tickers
            .iter()
            .position(|t| t == name)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "instrument underlying '{name}' has no price column"
                ))
            })?;
        index.push(i);
    }
    let n = names.len();
    let sub: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| full.get(index[i], index[j])).collect())
        .collect();
    let sigma = SymmetricMatrix::from_rows(&sub, 0.0)?;

    let instruments = rows
        .into_iter()
        .map(|row| {
            let k = names
                .iter()
                .position(|n| *n == row.name)
                .expect("name collected above");
            let vol = portfolio::vol_from_sigma(&sigma, k, args.day_count);
            row.into_instrument(|_| (vol > 0.0).then_some(vol))
        })
        .collect::<Result<Vec<_>>>()?;
    let model = portfolio::build_quadratic_model(&instruments, &sigma, args.day_count)?;
    if !model.is_delta_hedged() {
        let worst = model.delta1.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        return Err(Error::InvalidInput(format!(
            "portfolio is not delta-hedged (largest |Delta1| = {worst:e}); leave hedge_shares empty to hedge automatically"
        )));
    }
    Ok(ModelInputs {
        labels: Some(model.tickers),
        sigma: model.sigma,
        gamma1: model.gamma1,
        theta: Some(model.theta),
    })
}

fn mc_config(engine: &EngineArgs) -> Result<McConfig> {
    McConfig::new(
        engine.seed,
        engine.replicates,
        engine.samples,
        !engine.no_antithetic,
    )
}

fn solve_tolerance(engine: &EngineArgs, method: Method) -> Result<SolveTolerance> {
    let base = SolveTolerance::for_method(method);
    match engine.tol {
        None => Ok(base),
        Some(t) if t > 0.0 && t.is_finite() => Ok(SolveTolerance { abs: t, ..base }),
        Some(t) => Err(Error::InvalidInput(format!(
            "--tol must be positive, got {t}"
        ))),
    }
}

/// One row of the JSON report; key names and order are part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ReportRow {
    pub alpha: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub g_at_r: f64,
    pub standard_error: f64,
    pub method: Method,
    pub n_plus: usize,
    pub n_minus: usize,
}

/// Settings echoed in the report so a run can be repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1_diag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruments: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub day_count: Option<f64>,
    pub theta: f64,
    pub alphas: Vec<f64>,
    pub method: String,
    pub seed: u64,
    pub replicates: usize,
    pub samples_per_replicate: usize,
    pub antithetic: bool,
    pub tolerance: f64,
    pub zero_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub results: Vec<ReportRow>,
    pub config: ReportConfig,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    /// Aligned text table of the results.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:>8} {:>10} {:>14} {:>10} {:>10} {:>9} {:>5} {:>5}\n",
            "alpha", "R", "V", "G(R)", "SE", "method", "n+", "n-"
        );
        for r in &self.results {
            out.push_str(&format!(
                "{:>8} {:>10.6} {:>14.6} {:>10.6} {:>10.2e} {:>9} {:>5} {:>5}\n",
                r.alpha,
                r.r,
                r.v,
                r.g_at_r,
                r.standard_error,
                r.method.tag(),
                r.n_plus,
                r.n_minus
            ));
        }
        out
    }
}

fn validate_alphas(alphas: &[f64]) -> Result<Vec<f64>> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput("no alpha given".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1), got {a}"
        )));
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup();
    Ok(sorted)
}

/// Runs the `var` pipeline and assembles the report, ordered by α descending.
pub fn var_report(args: &VarArgs) -> Result<Report> {
    let alphas = validate_alphas(&args.alpha)?;
    let model = load_model(&args.model)?;
    let theta = model
        .theta
        .ok_or_else(|| Error::InvalidInput("--theta is required with --sigma".into()))?;
    let spectrum = model.spectrum(args.model.zero_tol)?;
    let (n_plus, n_minus) = (spectrum.n_plus(), spectrum.n_minus());
    let problem = HyperboloidProblem::normal(spectrum)?;
    let method = args.engine.method.resolve(&problem)?;
    let mc = mc_config(&args.engine)?;
    let tol = solve_tolerance(&args.engine, method)?;
    let evaluator = GEvaluator::new(&problem, method, mc)?;

    let solved: Vec<VarResult> = alphas
        .par_iter()
        .map(|&alpha| solve_var_with(&mut evaluator.clone(), alpha, theta, tol))
        .collect::<Result<_>>()?;

    let results = solved
        .iter()
        .map(|s| ReportRow {
            alpha: s.alpha,
            r: s.r,
            v: s.v,
            g_at_r: s.g_at_r,
            standard_error: s.standard_error,
            method: s.method,
            n_plus,
            n_minus,
        })
        .collect();
    let from_positions = args.model.instruments.is_some();
    Ok(Report {
        results,
        config: ReportConfig {
            sigma: path_string(&args.model.sigma),
            gamma1_diag: path_string(&args.model.gamma1_diag),
            gamma1: path_string(&args.model.gamma1),
            instruments: path_string(&args.model.instruments),
            prices: path_string(&args.model.prices),
            lambda: from_positions.then_some(args.model.lambda),
            day_count: from_positions.then_some(args.model.day_count),
            theta,
            alphas,
            method: method.tag().to_string(),
            seed: mc.seed,
            replicates: mc.replicates,
            samples_per_replicate: mc.samples_per_replicate,
            antithetic: mc.antithetic,
            tolerance: tol.abs,
            zero_tol: args.model.zero_tol,
        },
    })
}

/// One tabulated point of `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GPoint {
    pub r: f64,
    pub g: f64,
    pub standard_error: f64,
    pub method: Method,
}

pub fn gfun_points(args: &GfunArgs) -> Result<Vec<GPoint>> {
    if let Some(r) = args.r.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "R must be finite and nonnegative, got {r}"
        )));
    }
    let model = load_model(&args.model)?;
    let problem = HyperboloidProblem::normal(model.spectrum(args.model.zero_tol)?)?;
    let method = args.engine.method.resolve(&problem)?;
    let mut evaluator = GEvaluator::new(&problem, method, mc_config(&args.engine)?)?;
    args.r
        .iter()
        .map(|&r| {
            let est = evaluator.evaluate(r)?;
            Ok(GPoint {
                r,
                g: est.value,
                standard_error: est.standard_error,
                method: est.method,
            })
        })
        .collect()
}

pub fn format_gfun_csv(points: &[GPoint]) -> String {
    let mut out = String::from("R,G,standardError\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.r, p.g, p.standard_error));
    }
    out
}

fn format_gfun_table(points: &[GPoint]) -> String {
    let mut out = format!("{:>10} {:>12} {:>10} {:>9}\n", "R", "G(R)", "SE", "method");
    for p in points {
        out.push_str(&format!(
            "{:>10} {:>12.8} {:>10.2e} {:>9}\n",
            p.r,
            p.g,
            p.standard_error,
            p.method.tag()
        ));
    }
    if points.first().is_some_and(|p| p.method == Method::PosOnly) {
        out.push_str("(pos-only: G is the lower tail P(|w+|^2 <= R^2))\n");
    }
    out
}

/// Covariance estimate with the labels of its rows.
pub fn covariance_from_prices(text: &str, lambda: f64) -> Result<(Vec<String>, SymmetricMatrix)> {
    let table = io::parse_prices(text)?;
    let series = ReturnSeries::from_prices(table.tickers, &table.rows)?;
    let sigma = portfolio::ewma_covariance(&series, lambda)?;
    Ok((series.tickers, sigma))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Dispatches a parsed command line. Normal output goes to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Covariance(args) => {
            let (tickers, sigma) =
                covariance_from_prices(&io::read_text(&args.prices)?, args.lambda)?;
            let csv = io::format_matrix(Some(&tickers), &sigma);
            let smallest = sym_eigen(&sigma)?.values[0];
            let summary = format!(
                "dimension: {}\nsmallest eigenvalue: {smallest:e}\n",
                sigma.dim()
            );
            match &args.out {
                Some(path) => {
                    write_file(path, &csv)?;
                    out.write_all(summary.as_bytes())?;
                }
                None => {
                    out.write_all(csv.as_bytes())?;
                    eprint!("{summary}");
                }
            }
        }
        Command::Var(args) => {
            let report = var_report(&args)?;
            let json = report.to_json();
            if let Some(path) = &args.out {
                write_file(path, &json)?;
            }
            if args.json {
                out.write_all(json.as_bytes())?;
            } else {
                out.write_all(report.to_table().as_bytes())?;
            }
        }
        Command::Gfun(args) => {
            let points = gfun_points(&args)?;
            if let Some(path) = &args.csv {
                write_file(path, &format_gfun_csv(&points))?;
            }
            out.write_all(format_gfun_table(&points).as_bytes())?;
        }
    }
    Ok(())
}
