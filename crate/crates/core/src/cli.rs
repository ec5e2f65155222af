//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a computation fails, 2 on usage
//! errors. Randomized subcommands echo the seed they used on stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::fitcore::{bootstrap_se, Estimator, FitMethod, FitOptions};
use crate::resweights::{
    mc_covariance, moment_table, DistributionKind, MomentMethod, PlottingScheme, TableOptions,
};
use crate::sampling::{
    sample_logistic, sample_loglogistic, sample_weibull, DistributionParams, LocScaleParams,
    RngSeed,
};
use crate::simstudy::{figure_data, run_study, StudyConfig};

pub const SEED_ENV: &str = "ORDERFIT_SEED";
pub const DEFAULT_SEED: u64 = 20_130_821;

const FORMAT_HELP: &str = "\
Number formats: JSON uses the shortest representation that round-trips \
(at most 17 significant digits). Weight tables, covariance matrices and \
samples use the same round-trip form in CSV. Study and figure CSV \
summaries are rounded to 7 significant digits.";

#[derive(Debug, Parser)]
#[command(
    name = "orderfit",
    version,
    about = "Order-statistic regression and ML fitting for log-logistic, Weibull and logistic data",
    after_help = FORMAT_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a distribution to observations read from a file.
    Fit(FitArgs),
    /// Print the residual mean/variance/weight table for a sample size.
    Weights(WeightsArgs),
    /// Monte-Carlo estimate of the full residual covariance matrix.
    Cov(CovArgs),
    /// Draw a random sample.
    Sample(SampleArgs),
    /// Bias/MSE simulation study of the estimators.
    Simstudy(StudyArgs),
    /// Exact, simulated and large-sample residual variances per rank.
    FigureData(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Loglogistic,
    Weibull,
    Logistic,
}

impl From<DistArg> for DistributionKind {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Loglogistic => DistributionKind::LogLogistic,
            DistArg::Weibull => DistributionKind::Weibull,
            DistArg::Logistic => DistributionKind::Logistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    WlsExact,
    WlsAsymptotic,
    WlsMc,
    GlsFull,
    Ml,
}

impl From<MethodArg> for FitMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::WlsExact => FitMethod::WlsExact,
            MethodArg::WlsAsymptotic => FitMethod::WlsAsymptotic,
            MethodArg::WlsMc => FitMethod::WlsMc,
            MethodArg::GlsFull => FitMethod::GlsFull,
            MethodArg::Ml => FitMethod::Ml,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableMethodArg {
    Exact,
    Asymptotic,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum SchemeArg {
    #[default]
    Standard,
    Bernard,
}

impl From<SchemeArg> for PlottingScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Standard => PlottingScheme::Standard,
            SchemeArg::Bernard => PlottingScheme::Bernard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleFormatArg {
    /// CSV with header `x`
    Csv,
    /// one value per line, no header
    Lines,
    Json,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// RNG seed (falls back to $ORDERFIT_SEED, then a fixed default)
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Write results here instead of stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long, value_enum, default_value = "wls-exact")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "standard")]
    pub scheme: SchemeArg,
    /// Monte-Carlo replications for wls-mc and gls-full
    #[arg(long, default_value_t = 5000)]
    pub m: usize,
    /// Also report bootstrap standard errors from this many resamples
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// One value per line, or a single CSV column with optional header `x`
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: TableMethodArg,
    #[arg(long, value_enum, default_value = "standard")]
    pub scheme: SchemeArg,
    /// Monte-Carlo replications for --method mc
    #[arg(long, default_value_t = 5000)]
    pub m: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct CovArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 5000)]
    pub m: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long)]
    pub n: usize,
    /// Scale (log-logistic, Weibull)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Shape (log-logistic, Weibull)
    #[arg(long)]
    pub beta: Option<f64>,
    /// Location (logistic)
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Scale (logistic)
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: SampleFormatArg,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    /// True scale (true location for the logistic)
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// True shapes, comma separated (default: the standard grid)
    #[arg(long, value_delimiter = ',')]
    pub betas: Vec<f64>,
    /// Sample sizes, comma separated (default 15,25,50,100)
    #[arg(long, value_delimiter = ',')]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["wls-exact", "ml"])]
    pub methods: Vec<MethodArg>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    #[arg(long, default_value_t = 5000)]
    pub m: usize,
    #[arg(long, value_enum, default_value = "standard")]
    pub scheme: SchemeArg,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) | Error::InvalidParams(m) => CliError::Usage(m),
            other => CliError::Failure(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses a file of observations, keeping the 1-based file row of each.
pub fn read_observations_with_rows(path: &Path) -> crate::Result<Vec<(usize, f64)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut out = vec![];
    let mut seen_content = false;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if field.trim_matches('"') == "x" {
                continue;
            }
        }
        if field.contains(',') {
            return Err(Error::Parse {
                row,
                message: "expected a single column".into(),
            });
        }
        let value: f64 = field.trim_matches('"').parse().map_err(|_| Error::Parse {
            row,
            message: format!("'{field}' is not a number"),
        })?;
        out.push((row, value));
    }
    if out.is_empty() {
        return Err(Error::Io(format!(
            "{} contains no observations",
            path.display()
        )));
    }
    Ok(out)
}

/// Observations in file order.
pub fn read_observations(path: &Path) -> crate::Result<Vec<f64>> {
    Ok(read_observations_with_rows(path)?
        .into_iter()
        .map(|(_, v)| v)
        .collect())
}

fn emit(output: &OutputArg, text: &str) -> CliResult<()> {
    match &output.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Failure(e.to_string()))
        }
    }
}

fn announce_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

fn run_fit(args: &FitArgs) -> CliResult<()> {
    let dist: DistributionKind = args.dist.into();
    let rows =
        read_observations_with_rows(&args.input).map_err(|e| CliError::Failure(e.to_string()))?;
    let data: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let options = FitOptions {
        method: args.method.into(),
        scheme: args.scheme.into(),
        mc_m: args.m,
        seed: RngSeed(args.seed.seed),
    };
    let randomized =
        matches!(options.method, FitMethod::WlsMc | FitMethod::GlsFull) || args.bootstrap.is_some();
    if randomized {
        announce_seed(args.seed.seed);
    }
    let located = |e: Error| -> CliError {
        match e {
            Error::NonPositiveData { index, value } => CliError::Failure(format!(
                "row {}: observation {value} is not positive; {dist} data must be > 0",
                rows[index - 1].0
            )),
            Error::NonFiniteData { index } => CliError::Failure(format!(
                "row {}: observation is not finite",
                rows[index - 1].0
            )),
            other => other.into(),
        }
    };
    let estimator = Estimator::new(dist, data.len(), options).map_err(located)?;
    let fit = estimator.fit(&data).map_err(located)?;
    let boot = match args.bootstrap {
        Some(reps) => Some(bootstrap_se(dist, &data, &options, reps, options.seed)?),
        None => None,
    };

    let record = fit.record();
    let text = match args.format {
        FormatArg::Json => {
            let mut value = serde_json::to_value(&record).expect("record serializes");
            if let Some(b) = boot {
                value["se_alpha"] = json!(b.se_alpha);
                value["se_beta"] = json!(b.se_beta);
                value["bootstrap_failures"] = json!(b.failures);
            }
            serde_json::to_string_pretty(&value).expect("json") + "\n"
        }
        FormatArg::Csv => {
            let mut header = String::from(
                "dist,method,alpha,beta,theta1,theta2,converged,iterations,condition_number,log_likelihood,warnings",
            );
            let mut row = format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                record.dist.as_str(),
                record.method,
                record.alpha,
                record.beta,
                record.theta1,
                record.theta2,
                record.converged,
                record.iterations,
                record.condition_number,
                record
                    .log_likelihood
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                record.warnings.join("; ").replace(',', ";")
            );
            if let Some(b) = boot {
                header.push_str(",se_alpha,se_beta,bootstrap_failures");
                row.push_str(&format!(",{},{},{}", b.se_alpha, b.se_beta, b.failures));
            }
            format!("{header}\n{row}\n")
        }
    };
    emit(&args.output, &text)
}

fn run_weights(args: &WeightsArgs) -> CliResult<()> {
    let (method, options) = match args.method {
        TableMethodArg::Exact => (
            MomentMethod::Exact,
            TableOptions {
                scheme: args.scheme.into(),
                ..Default::default()
            },
        ),
        TableMethodArg::Asymptotic => (
            MomentMethod::Asymptotic,
            TableOptions {
                scheme: args.scheme.into(),
                ..Default::default()
            },
        ),
        TableMethodArg::Mc => {
            announce_seed(args.seed.seed);
            (
                MomentMethod::MonteCarlo,
                TableOptions {
                    scheme: args.scheme.into(),
                    mc_m: Some(args.m),
                    seed: Some(RngSeed(args.seed.seed)),
                },
            )
        }
    };
    let table = moment_table(args.dist.into(), args.n, method, options)?;
    emit(&args.output, &table.to_csv())
}

fn run_cov(args: &CovArgs) -> CliResult<()> {
    announce_seed(args.seed.seed);
    let cov = mc_covariance(args.dist.into(), args.n, args.m, RngSeed(args.seed.seed))?;
    let log_det = cov.log_det().unwrap_or(f64::NEG_INFINITY);
    let det = log_det.exp();
    let eig = cov.eigenvalues();
    let n = cov.n;
    let text = match args.format {
        FormatArg::Csv => {
            eprintln!(
                "log_det: {log_det}\ndet: {det:e}\nmin_eigenvalue: {:e}\nmax_eigenvalue: {:e}",
                eig[0],
                eig[n - 1]
            );
            let mut out = (1..=n)
                .map(|r| format!("r{r}"))
                .collect::<Vec<_>>()
                .join(",");
            out.push('\n');
            for i in 0..n {
                let row: Vec<String> = (0..n).map(|j| cov.matrix[(i, j)].to_string()).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        FormatArg::Json => {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| cov.matrix[(i, j)]).collect())
                .collect();
            let value = json!({
                "dist": cov.dist,
                "n": n,
                "m": cov.m,
                "seed": cov.seed.value(),
                "log_det": log_det,
                "det": det,
                "min_eigenvalue": eig[0],
                "max_eigenvalue": eig[n - 1],
                "matrix": rows,
            });
            serde_json::to_string_pretty(&value).expect("json") + "\n"
        }
    };
    emit(&args.output, &text)
}

fn run_sample(args: &SampleArgs) -> CliResult<()> {
    let seed = RngSeed(args.seed.seed);
    let dist: DistributionKind = args.dist.into();
    let values = match dist {
        DistributionKind::Logistic => {
            let (Some(mu), Some(sigma)) = (args.mu, args.sigma) else {
                return Err(CliError::Usage(
                    "logistic sampling needs --mu and --sigma".into(),
                ));
            };
            if args.alpha.is_some() || args.beta.is_some() {
                return Err(CliError::Usage(
                    "--alpha/--beta do not apply to the logistic family".into(),
                ));
            }
            announce_seed(seed.value());
            sample_logistic(&LocScaleParams::new(mu, sigma)?, args.n, seed)?
        }
        _ => {
            let (Some(alpha), Some(beta)) = (args.alpha, args.beta) else {
                return Err(CliError::Usage(format!(
                    "{dist} sampling needs --alpha and --beta"
                )));
            };
            if args.mu.is_some() || args.sigma.is_some() {
                return Err(CliError::Usage(format!(
                    "--mu/--sigma do not apply to {dist}"
                )));
            }
            announce_seed(seed.value());
            let p = DistributionParams::new(alpha, beta)?;
            if dist == DistributionKind::Weibull {
                sample_weibull(&p, args.n, seed)?
            } else {
                sample_loglogistic(&p, args.n, seed)?
            }
        }
    };
    let body: String = values.iter().map(|v| format!("{v}\n")).collect();
    let text = match args.format {
        SampleFormatArg::Csv => format!("x\n{body}"),
        SampleFormatArg::Lines => body,
        SampleFormatArg::Json => serde_json::to_string(&values).expect("json") + "\n",
    };
    emit(&args.output, &text)
}

fn run_simstudy(args: &StudyArgs) -> CliResult<()> {
    let dist: DistributionKind = args.dist.into();
    let mut config = StudyConfig::standard_grid(dist, RngSeed(args.seed.seed));
    config.alpha = args.alpha;
    config.reps = args.reps;
    if !args.betas.is_empty() {
        config.beta_grid = args.betas.clone();
    }
    if !args.ns.is_empty() {
        config.n_grid = args.ns.clone();
    }
    config.methods = args.methods.iter().map(|&m| m.into()).collect();
    config.validate()?;
    announce_seed(args.seed.seed);
    let report = run_study(&config)?;
    emit(&args.output, &report.to_csv())
}

fn run_figure(args: &FigureArgs) -> CliResult<()> {
    announce_seed(args.seed.seed);
    let fig = figure_data(
        args.dist.into(),
        args.n,
        args.m,
        RngSeed(args.seed.seed),
        args.scheme.into(),
    )?;
    emit(&args.output, &fig.to_csv())
}

/// Parses `argv` (including the program name) and runs the subcommand.
/// Returns the process exit status.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Weights(a) => run_weights(a),
        Command::Cov(a) => run_cov(a),
        Command::Sample(a) => run_sample(a),
        Command::Simstudy(a) => run_simstudy(a),
        Command::FigureData(a) => run_figure(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Failure(m) => eprintln!("error: {m}"),
            }
            e.exit_code()
        }
    }
}
