//! Command-line front end: `fit`, `bias` and `simulate`.
//!
//! Exit codes: 0 on success, 2 for usage, parse, configuration and domain
//! errors, 3 when an estimate cannot be produced (non-convergence, all-zero
//! counts, infeasible correction, too many failed replications).
//! Diagnostics go to standard error only.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bias::{naive_limit, BiasReport, EivModel};
use crate::corrected::{correct_estimate, moment_laws, CorrectedEstimate};
use crate::dist::{DistSpec, Law};
use crate::error::EivError;
use crate::naive::{fit_naive, Dataset, FitOptions, ModelParams, NaiveEstimate};
use crate::report::{fmt17, fmt4, to_json};
use crate::scenario::{default_error_param, ScenarioFile};
use crate::sim::{
    run_monte_carlo_with_threads, table_rows, Estimator, NuisanceMode, SimReport, TableRow,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ESTIMATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "poisson-eiv",
    version,
    about = "Naive and bias-corrected Poisson regression with a mismeasured covariate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the naive estimator to a `y,w` CSV file and optionally correct it.
    Fit(FitArgs),
    /// Asymptotic bias and MSE of the naive estimator for given laws.
    Bias(BiasArgs),
    /// Run the Monte Carlo scenarios in a scenario file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NuisanceArg {
    Known,
    Moment,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with header `y,w`.
    pub csv: PathBuf,
    /// Covariate law (`gamma:k:lambda`, `normal:mu:sigma2`, `degenerate`).
    #[arg(long = "x")]
    pub x_law: Option<String>,
    /// Error law.
    #[arg(long = "u")]
    pub u_law: Option<String>,
    /// Also compute the corrected naive estimator.
    #[arg(long)]
    pub correct: bool,
    /// How the covariate law is obtained for the correction.
    #[arg(long, value_enum, default_value = "known")]
    pub nuisance: NuisanceArg,
    /// Known error parameter for moment estimation: sigma2 (normal) or k2 (gamma).
    /// Defaults to the corresponding parameter of `--u`.
    #[arg(long)]
    pub error_param: Option<f64>,
    #[arg(long, default_value_t = crate::naive::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = crate::naive::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[arg(long = "x")]
    pub x_law: String,
    #[arg(long = "u", default_value = "degenerate")]
    pub u_law: String,
    /// True coefficients `beta0 beta1`.
    #[arg(long, num_args = 2, value_names = ["BETA0", "BETA1"], allow_negative_numbers = true,
          conflicts_with_all = ["beta0", "beta1"])]
    pub beta: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub beta0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML, `schema_version = 1`).
    pub scenario: PathBuf,
    /// Output directory; receives `table.csv` and `report.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Override the scenario file's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

/// Maps library errors to exit codes: estimation failures are 3, the rest 2.
impl From<EivError> for CliError {
    fn from(e: EivError) -> Self {
        let code = match e {
            EivError::AllZeroCounts
            | EivError::NonConvergence(_)
            | EivError::Overflow { .. }
            | EivError::TooManyFailures { .. }
            | EivError::DegenerateMoment(_) => EXIT_ESTIMATION,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a, stdout),
        Command::Bias(a) => cmd_bias(&a, stdout),
        Command::Simulate(a) => cmd_simulate(&a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn parse_law(s: &str) -> CliResult<DistSpec> {
    s.parse()
        .map_err(|e: EivError| CliError::usage(e.to_string()))
}

fn emit(out_path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out_path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::usage(format!("{}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::usage(e.to_string())),
    }
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    to_json(v).map_err(|e| CliError::usage(e.to_string()))
}

/// Reads a `y,w` CSV (UTF-8, LF or CRLF line endings).
pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() != 2 || &headers[0] != "y" || &headers[1] != "w" {
        return Err(CliError::usage(format!(
            "{}: expected header `y,w`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut y, mut w) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let yi: u64 = rec[0].parse().map_err(|_| {
            CliError::usage(format!(
                "line {line}: y = {:?} is not a non-negative integer",
                &rec[0]
            ))
        })?;
        let wi: f64 = rec[1].parse().map_err(|_| {
            CliError::usage(format!("line {line}: w = {:?} is not a number", &rec[1]))
        })?;
        y.push(yi);
        w.push(wi);
    }
    Dataset::new(y, w).map_err(|e| CliError::usage(e.to_string()))
}

#[derive(Debug, Serialize)]
struct NuisanceInfo {
    mode: NuisanceMode,
    x: DistSpec,
    u: DistSpec,
    error_param: Option<f64>,
}

#[derive(Debug, Serialize)]
struct FitReport {
    n: usize,
    naive: NaiveEstimate,
    corrected: Option<CorrectedOut>,
}

#[derive(Debug, Serialize)]
struct CorrectedOut {
    params: ModelParams,
    nuisance: NuisanceInfo,
    path: crate::bias::MapPath,
    root_iterations: usize,
}

fn correction_laws(a: &FitArgs, data: &Dataset) -> CliResult<NuisanceInfo> {
    let u_law = a
        .u_law
        .as_deref()
        .ok_or_else(|| CliError::usage("--correct requires --u"))?;
    let u = parse_law(u_law)?;
    match a.nuisance {
        NuisanceArg::Known => {
            let x_law = a
                .x_law
                .as_deref()
                .ok_or_else(|| CliError::usage("--nuisance known requires --x"))?;
            Ok(NuisanceInfo {
                mode: NuisanceMode::Known,
                x: parse_law(x_law)?,
                u,
                error_param: None,
            })
        }
        NuisanceArg::Moment => {
            if let Some(x_law) = a.x_law.as_deref() {
                if !matches!(parse_law(x_law)?.law(), Law::Gamma { .. }) {
                    return Err(CliError::usage(
                        "moment estimation requires a gamma covariate law",
                    ));
                }
            }
            let p = a
                .error_param
                .or_else(|| default_error_param(&u))
                .ok_or_else(|| {
                    CliError::usage("--nuisance moment requires a normal or gamma --u")
                })?;
            let template = match u.law() {
                Law::Normal { mean, .. } => DistSpec::normal(mean, p),
                Law::Gamma { rate, .. } => DistSpec::gamma(p, rate),
                Law::DegenerateZero => unreachable!("no default error parameter"),
            }
            .map_err(|e| CliError::usage(e.to_string()))?;
            let (x, u) = match moment_laws(data.w(), &template) {
                Err(e @ EivError::Config(_)) => return Err(CliError::usage(e.to_string())),
                other => other?,
            };
            Ok(NuisanceInfo {
                mode: NuisanceMode::Moment,
                x,
                u,
                error_param: Some(p),
            })
        }
    }
}

pub fn cmd_fit(a: &FitArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let data = read_dataset(&a.csv)?;
    let opts = FitOptions {
        init: None,
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let naive = fit_naive(&data, &opts)?;
    let corrected = if a.correct {
        let nuisance = correction_laws(a, &data)?;
        let c: CorrectedEstimate =
            correct_estimate(&naive, &nuisance.x, &nuisance.u).map_err(|e| CliError {
                code: EXIT_ESTIMATION,
                message: format!("correction infeasible for this sample: {e}"),
            })?;
        Some(CorrectedOut {
            params: c.params,
            nuisance,
            path: c.path,
            root_iterations: c.root_iterations,
        })
    } else {
        None
    };
    let report = FitReport {
        n: data.len(),
        naive,
        corrected,
    };
    emit(a.out.as_deref(), &json(&report)?, stdout)
}

#[derive(Debug, Serialize)]
struct BiasOut {
    x: DistSpec,
    u: DistSpec,
    beta: ModelParams,
    #[serde(flatten)]
    report: BiasReport,
}

pub fn cmd_bias(a: &BiasArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let x = parse_law(&a.x_law)?;
    let u = parse_law(&a.u_law)?;
    let (b0, b1) = match (&a.beta, a.beta1) {
        (Some(b), _) => (b[0], b[1]),
        (None, Some(b1)) => (a.beta0, b1),
        (None, None) => return Err(CliError::usage("give --beta BETA0 BETA1 or --beta1")),
    };
    let beta = ModelParams::new(b0, b1)?;
    let model = EivModel::new(x, u, beta)?;
    let report = naive_limit(&model)?;
    emit(
        a.out.as_deref(),
        &json(&BiasOut { x, u, beta, report })?,
        stdout,
    )
}

pub const TABLE_HEADER: &str =
    "scenario,estimator,asy_bias_beta0,bias_beta0,asy_bias_beta1,bias_beta1,\
asy_mse_beta0,mse_beta0,asy_mse_beta1,mse_beta1,mc_se_beta0,mc_se_beta1";

fn estimator_name(e: Estimator) -> &'static str {
    match e {
        Estimator::Naive => "naive",
        Estimator::Cn => "cn",
    }
}

/// Machine-readable table: one line per estimator row, 17 significant digits.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        let cells = [
            r.asy_bias[0],
            r.bias[0],
            r.asy_bias[1],
            r.bias[1],
            r.asy_mse[0],
            r.mse[0],
            r.asy_mse[1],
            r.mse[1],
            r.mc_std_error[0],
            r.mc_std_error[1],
        ];
        let label = if r.scenario.contains([',', '"', '\n']) {
            format!("\"{}\"", r.scenario.replace('"', "\"\""))
        } else {
            r.scenario.clone()
        };
        out.push_str(&label);
        out.push(',');
        out.push_str(estimator_name(r.estimator));
        for c in cells {
            out.push(',');
            out.push_str(&fmt17(c));
        }
        out.push('\n');
    }
    out
}

/// Human-readable bias and MSE tables at 4 significant digits.
pub fn human_tables(rows: &[TableRow]) -> String {
    let mut out = String::new();
    let mut section = |title: &str, pick: &dyn Fn(&TableRow) -> [f64; 4], heads: [&str; 4]| {
        out.push_str(title);
        out.push('\n');
        out.push_str(&format!(
            "{:<16} {:<6} {:>12} {:>12} {:>12} {:>12}\n",
            "scenario", "", heads[0], heads[1], heads[2], heads[3]
        ));
        for r in rows {
            let v = pick(r);
            out.push_str(&format!(
                "{:<16} {:<6} {:>12} {:>12} {:>12} {:>12}\n",
                r.scenario,
                estimator_name(r.estimator),
                fmt4(v[0]),
                fmt4(v[1]),
                fmt4(v[2]),
                fmt4(v[3])
            ));
        }
        out.push('\n');
    };
    section(
        "Estimated bias",
        &|r| [r.asy_bias[0], r.bias[0], r.asy_bias[1], r.bias[1]],
        ["AsyBias b0", "BIAS b0", "AsyBias b1", "BIAS b1"],
    );
    section(
        "Estimated MSE",
        &|r| [r.asy_mse[0], r.mse[0], r.asy_mse[1], r.mse[1]],
        ["AsyMSE b0", "MSE b0", "AsyMSE b1", "MSE b1"],
    );
    out
}

#[derive(Debug, Serialize)]
struct SimulateOut {
    scenarios: Vec<LabelledReport>,
}

#[derive(Debug, Serialize)]
struct LabelledReport {
    label: String,
    #[serde(flatten)]
    report: SimReport,
}

/// Labelled report per scenario row.
pub type LabelledReports = Vec<(String, SimReport)>;

/// Runs every scenario row and returns `(table rows, reports)`.
pub fn simulate_file(
    file: &ScenarioFile,
    threads: usize,
) -> Result<(Vec<TableRow>, LabelledReports), EivError> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (label, cfg) in &file.rows {
        let report = run_monte_carlo_with_threads(cfg, threads)?;
        rows.extend(table_rows(label, &report));
        reports.push((label.clone(), report));
    }
    Ok((rows, reports))
}

pub fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let text = fs::read_to_string(&a.scenario)
        .map_err(|e| CliError::usage(format!("{}: {e}", a.scenario.display())))?;
    let mut file = ScenarioFile::parse(&text)?;
    if let Some(seed) = a.seed {
        file = file.with_seed(seed);
    }
    let threads = a
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::usage("--threads must be at least 1"));
    }
    let (rows, reports) = simulate_file(&file, threads)?;

    fs::create_dir_all(&a.out).map_err(|e| CliError::usage(format!("{}: {e}", a.out.display())))?;
    let write = |name: &str, body: &str| {
        let p = a.out.join(name);
        fs::write(&p, body).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
    };
    write("table.csv", &table_csv(&rows))?;
    let out = SimulateOut {
        scenarios: reports
            .into_iter()
            .map(|(label, report)| LabelledReport { label, report })
            .collect(),
    };
    write("report.json", &json(&out)?)?;
    stdout
        .write_all(human_tables(&rows).as_bytes())
        .map_err(|e| CliError::usage(e.to_string()))
}
