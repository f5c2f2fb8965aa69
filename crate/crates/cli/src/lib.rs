//! Command-line front end: every subcommand reads its inputs from files,
//! writes one JSON artifact and maps failures to a stable exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gordonvar::market_data::{assemble_var_input, compute_rates, load_panel, Frequency, PanelSchema};
use gordonvar::valuation::{
    ComparisonConfig, ComparisonRegime, ComparisonSection, ContextFile, ConvergenceSection, EngineConfig,
    ForecastContext, ForecastSection, IrfSection, PriceSection, PricingEngine, Report, SeriesConfig,
    SimulationConfig, SimulationSection, SpectralSection,
};
use gordonvar::var::{estimate_ols, SpectralConfig, VarModel};
use gordonvar::{Error, ErrorClass};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MODEL_STATE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Name of the environment variable that caps worker threads.
pub const THREADS_ENV: &str = "GORDONVAR_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_INPUT,
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => EXIT_INPUT,
                ErrorClass::ModelState => EXIT_MODEL_STATE,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "gordonvar", version, about = "Dividend-discount valuation driven by a VAR(p) process")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a VAR(p) by least squares and write the model file.
    Estimate(EstimateArgs),
    /// Evaluate the convergence conditions of a model.
    Check(CheckArgs),
    /// Theoretical prices and second moments at the origin.
    Value(ValueArgs),
    /// Price-anchored forecast at a horizon.
    Forecast(HorizonArgs),
    /// Mean-path price impulse response at a horizon.
    Irf(HorizonArgs),
    /// Monte Carlo price ensemble at a horizon.
    Simulate(SimulateArgs),
    /// Monte Carlo comparison of the forecasts with and without the origin price.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PanelArgs {
    /// Long-format panel CSV with date, company, price and dividend columns.
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Wide macro CSV with a date column and one column per series.
    #[arg(long = "macro")]
    pub macro_file: Option<PathBuf>,
    /// Sampling frequency of the panel.
    #[arg(long, default_value = "annual")]
    pub frequency: Frequency,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Lag order p.
    #[arg(long, default_value_t = 1)]
    pub lags: usize,
    /// Model file to write (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the forecast origin at the last sample date.
    #[arg(long)]
    pub context_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    pub stability_margin: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Model file written by `estimate`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub stability_margin: f64,
    /// Report file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Model file written by `estimate`.
    #[arg(long)]
    pub model: PathBuf,
    /// Forecast origin as JSON; defaults to the last rows of `--panel`.
    #[arg(long)]
    pub context: Option<PathBuf>,
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Relative tail tolerance of the price series.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Cap on the number of series terms.
    #[arg(long, default_value_t = 100_000)]
    pub max_terms: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub stability_margin: f64,
    /// Report file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValueArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write every series term as CSV (company, q, term).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Skip the second-moment matrix.
    #[arg(long)]
    pub no_second_moments: bool,
}

#[derive(Debug, Clone, Args)]
pub struct HorizonArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `nested` draws the origin price from the model, `observed` uses the
    /// context price on every path.
    #[arg(long, default_value = "nested")]
    pub regime: ComparisonRegime,
}

/// Resolved settings embedded in every report. Output locations are left
/// out so that identical runs produce identical bytes wherever they write.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_file: Option<String>,
    pub frequency: String,
    pub lag_order: usize,
    pub tol: f64,
    pub max_terms: usize,
    pub stability_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<ComparisonRegime>,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to standard error.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let pool = thread_pool()?;
    pool.install(|| match cli.command {
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Value(a) => cmd_value(&a),
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Irf(a) => cmd_irf(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Compare(a) => cmd_compare(&a),
    })
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn schema(frequency: Frequency) -> PanelSchema {
    PanelSchema {
        frequency,
        ..PanelSchema::default()
    }
}

fn load_model(path: &Path) -> CliResult<VarModel<f64>> {
    Ok(VarModel::load(path)?)
}

fn engine_config(stability_margin: f64) -> CliResult<EngineConfig> {
    if !(stability_margin >= 0.0 && stability_margin < 1.0) {
        return Err(CliError::Usage("--stability-margin must lie in [0, 1)".into()));
    }
    Ok(EngineConfig {
        spectral: SpectralConfig {
            stability_margin,
            ..SpectralConfig::default()
        },
        ..EngineConfig::default()
    })
}

fn series_config(common: &CommonArgs) -> CliResult<SeriesConfig> {
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    if common.max_terms == 0 {
        return Err(CliError::Usage("--max-terms must be positive".into()));
    }
    Ok(SeriesConfig {
        tol: common.tol,
        max_terms: common.max_terms,
        ..SeriesConfig::default()
    })
}

fn check_horizon(h: usize) -> CliResult<()> {
    if h == 0 {
        return Err(CliError::Core(Error::HorizonZero));
    }
    Ok(())
}

fn check_paths(n: usize) -> CliResult<()> {
    if n == 0 {
        return Err(CliError::Usage("--paths must be at least 1".into()));
    }
    Ok(())
}

/// Engine, origin and the base run configuration shared by the valuation
/// commands.
struct Session {
    engine: PricingEngine<f64>,
    ctx: ForecastContext<f64>,
    companies: Vec<String>,
    config: RunConfig,
}

fn open_session(common: &CommonArgs) -> CliResult<Session> {
    let model = load_model(&common.model)?;
    let p = model.p();
    let engine = PricingEngine::new(model, &engine_config(common.stability_margin)?)?;
    let (ctx, companies) = match (&common.context, &common.panel.panel) {
        (Some(path), _) => {
            let file: ContextFile = serde_json::from_str(&std::fs::read_to_string(path)?).map_err(Error::from)?;
            (file.into_context()?, Vec::new())
        }
        (None, Some(panel_path)) => {
            let panel = load_panel::<f64>(
                panel_path,
                common.panel.macro_file.as_deref(),
                &schema(common.panel.frequency),
            )?;
            let rates = compute_rates(&panel)?;
            let input = assemble_var_input(&rates, &panel)?;
            if input.layout != engine.model().layout() {
                return Err(CliError::Core(Error::LengthMismatch(format!(
                    "panel has m = {}, ell = {}; model has m = {}, ell = {}",
                    input.layout.m,
                    input.layout.ell,
                    engine.model().layout().m,
                    engine.model().layout().ell
                ))));
            }
            let ctx = ForecastContext::from_sample(&input, &panel, p)?;
            (ctx, panel.company_ids().to_vec())
        }
        (None, None) => return Err(CliError::Usage("either --context or --panel is required".into())),
    };
    let config = RunConfig {
        model: display(&common.model),
        context: common.context.as_deref().map(display),
        panel: if common.context.is_some() { None } else { common.panel.panel.as_deref().map(display) },
        macro_file: if common.context.is_some() {
            None
        } else {
            common.panel.macro_file.as_deref().map(display)
        },
        frequency: common.panel.frequency.to_string(),
        lag_order: p,
        tol: common.tol,
        max_terms: common.max_terms,
        stability_margin: common.stability_margin,
        horizon: None,
        n_paths: None,
        seed: None,
        regime: None,
    };
    Ok(Session {
        engine,
        ctx,
        companies,
        config,
    })
}

fn report_for(command: &str, session: &Session) -> CliResult<Report> {
    let config = serde_json::to_value(&session.config).map_err(Error::from)?;
    let mut report = Report::new(command, config);
    report.companies = session.companies.clone();
    Ok(report)
}

fn cmd_estimate(a: &EstimateArgs) -> CliResult<()> {
    let panel_path = a
        .panel
        .panel
        .as_deref()
        .ok_or_else(|| CliError::Usage("--panel is required".into()))?;
    if a.lags == 0 {
        return Err(CliError::Usage("--lags must be at least 1".into()));
    }
    let panel = load_panel::<f64>(panel_path, a.panel.macro_file.as_deref(), &schema(a.panel.frequency))?;
    let rates = compute_rates(&panel)?;
    let input = assemble_var_input(&rates, &panel)?;
    let model = estimate_ols(&input, a.lags)?;

    let engine_cfg = engine_config(a.stability_margin)?;
    let companion = gordonvar::var::companion(&model);
    let spectral = gordonvar::var::spectral(&companion, &engine_cfg.spectral)?;
    if spectral.stable {
        eprintln!(
            "stable: max eigenvalue modulus {:.6} (n = {}, p = {})",
            spectral.max_modulus,
            model.n(),
            model.p()
        );
    } else {
        eprintln!(
            "warning: unstable model, max eigenvalue modulus {:.6}; valuation commands will refuse it",
            spectral.max_modulus
        );
    }

    let json = model.to_json()?;
    write_output(a.out.as_deref(), &(json + "\n"))?;
    if let Some(path) = &a.context_out {
        let ctx = ForecastContext::from_sample(&input, &panel, a.lags)?;
        let text = serde_json::to_string_pretty(&ctx.to_file()).map_err(Error::from)?;
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn cmd_check(a: &CheckArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let engine = PricingEngine::new(model, &engine_config(a.stability_margin)?)?;
    let spectral = SpectralSection::from_engine(&engine);
    let convergence = match engine.check_convergence() {
        Ok(c) => c,
        Err(e) => {
            let summary = serde_json::to_string(&spectral).map_err(Error::from)?;
            eprintln!("spectral summary: {summary}");
            return Err(e.into());
        }
    };
    let config = serde_json::json!({
        "model": display(&a.model),
        "stability_margin": a.stability_margin,
    });
    let mut report = Report::new("check", config);
    report.convergence = Some(ConvergenceSection::build(&engine, &convergence)?);
    for (i, ok) in convergence.first_ok.iter().enumerate() {
        if !ok {
            eprintln!(
                "company {i}: price series not certified convergent (gate value {})",
                convergence.first_moment_lhs[i]
            );
        }
    }
    write_output(a.out.as_deref(), &report.to_json()?)
}

fn cmd_value(a: &ValueArgs) -> CliResult<()> {
    let session = open_session(&a.common)?;
    let mut series = series_config(&a.common)?;
    series.keep_trace = a.trace.is_some();
    let engine = &session.engine;
    let convergence = engine.check_convergence()?;
    let ctx = session.ctx.without_prices();
    let valued = engine.value(&ctx, &series, !a.no_second_moments)?;

    let mut report = report_for("value", &session)?;
    report.convergence = Some(ConvergenceSection::build(engine, &convergence)?);
    report.prices = Some(PriceSection::from(&valued));
    if let Some(sm) = &valued.second_moment {
        report.set_second_moments(sm);
    }
    if let (Some(path), Some(trace)) = (&a.trace, &valued.trace) {
        write_trace(path, &valued.companies, trace, &session.companies)?;
    }
    write_output(a.common.out.as_deref(), &report.to_json()?)
}

fn write_trace(path: &Path, companies: &[usize], trace: &[Vec<f64>], ids: &[String]) -> CliResult<()> {
    let mut text = String::from("company,q,term\n");
    for (c, terms) in companies.iter().zip(trace) {
        let label = ids.get(*c).cloned().unwrap_or_else(|| c.to_string());
        for (q, t) in terms.iter().enumerate() {
            text.push_str(&format!("{label},{},{t:?}\n", q + 1));
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_forecast(a: &HorizonArgs) -> CliResult<()> {
    check_horizon(a.horizon)?;
    let mut session = open_session(&a.common)?;
    session.config.horizon = Some(a.horizon);
    let forecast = session.engine.price_forecast(&session.ctx, a.horizon)?;
    let mut report = report_for("forecast", &session)?;
    report.forecasts = Some(ForecastSection::from(&forecast));
    write_output(a.common.out.as_deref(), &report.to_json()?)
}

fn cmd_irf(a: &HorizonArgs) -> CliResult<()> {
    check_horizon(a.horizon)?;
    let mut session = open_session(&a.common)?;
    session.config.horizon = Some(a.horizon);
    let irf = session.engine.price_irf(&session.ctx, a.horizon)?;
    let mut report = report_for("irf", &session)?;
    report.irf = Some(IrfSection::mean_path(&irf));
    write_output(a.common.out.as_deref(), &report.to_json()?)
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    check_horizon(a.horizon)?;
    check_paths(a.paths)?;
    let mut session = open_session(&a.common)?;
    session.config.horizon = Some(a.horizon);
    session.config.n_paths = Some(a.paths);
    session.config.seed = Some(a.seed);
    let cfg = SimulationConfig {
        horizon: a.horizon,
        n_paths: a.paths,
        seed: a.seed,
        keep_paths: false,
    };
    let sim = session.engine.simulate_prices(&session.ctx, &cfg)?;
    let mut report = report_for("simulate", &session)?;
    report.forecasts = match session.engine.price_forecast(&session.ctx, a.horizon) {
        Ok(f) => Some(ForecastSection::from(&f)),
        Err(_) => None,
    };
    report.simulation = Some(SimulationSection::build(&sim, a.seed));
    write_output(a.common.out.as_deref(), &report.to_json()?)
}

fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    check_horizon(a.horizon)?;
    check_paths(a.paths)?;
    let mut session = open_session(&a.common)?;
    session.config.horizon = Some(a.horizon);
    session.config.n_paths = Some(a.paths);
    session.config.seed = Some(a.seed);
    session.config.regime = Some(a.regime);
    let cfg = ComparisonConfig {
        horizon: a.horizon,
        n_paths: a.paths,
        seed: a.seed,
        regime: a.regime,
        series: series_config(&a.common)?,
    };
    let cmp = session.engine.forecast_comparison(&session.ctx, &cfg)?;
    let mut report = report_for("compare", &session)?;
    report.comparison = Some(ComparisonSection::from(&cmp));
    write_output(a.common.out.as_deref(), &report.to_json()?)
}
