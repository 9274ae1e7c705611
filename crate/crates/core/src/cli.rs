//! The `xaitune` command line.
//!
//! Exit codes: 0 success, 2 configuration error (including bad arguments),
//! 3 runtime or numerical failure.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::consistency::{all_metrics, Metric, RankBasis};
use crate::data::{load_table, StandardScaler};
use crate::doe::latin_hypercube;
use crate::error::{Error, Result};
use crate::nn::{read_weights, write_weights};
use crate::tuner::{
    pareto_indices, read_run_log, summarize, tune, write_run_log, EvalContext, EvaluationRecord, Mode, Summary,
};
use crate::xai::{attribution_matrix, AttributionMatrix, Baseline, Method};

#[derive(Debug, Parser)]
#[command(name = "xaitune", version, about = "Tune a regression network for loss and explanation consistency")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Latin hypercube design over the search space.
    Doe(DoeArgs),
    /// Run the surrogate-based tuner and summarize the best design.
    Tune(TuneArgs),
    /// Attribution table of a saved model on a data file.
    Explain(ExplainArgs),
    /// Consistency metrics of an attribution table.
    Consistency(ConsistencyArgs),
    /// Pareto front of a run log.
    Pareto(ParetoArgs),
    /// Result and hyperparameter tables from run summaries.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct DoeArgs {
    /// Run configuration (TOML); the search space and seed are taken from it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long, default_value_t = 100)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output table; standard output when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Loss,
    Weighted,
    Desirability,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Loss => Mode::Loss,
            ModeArg::Weighted => Mode::Weighted,
            ModeArg::Desirability => Mode::Desirability,
        }
    }
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for the run log, splits, scaler, model and summary.
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub init: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Weights file written by `tune` (binary, or JSON with a .json extension).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Target column of the data file; the last column when omitted.
    #[arg(long)]
    pub target: Option<String>,
    /// Scaler written by `tune`; features are used as-is when omitted.
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    /// Comma-separated: ig, deeplift, kernelshap.
    #[arg(long, default_value = "ig,deeplift,kernelshap")]
    pub methods: String,
    #[arg(long, default_value_t = 64)]
    pub ig_steps: usize,
    #[arg(long, default_value_t = 2048)]
    pub shap_samples: usize,
    /// Comma-separated baseline in model input space; zero vector when omitted.
    #[arg(long)]
    pub baseline: Option<String>,
    /// Explain only the first N rows.
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisArg {
    Signed,
    Absolute,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    /// Attribution table (method column plus one column per feature).
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = BasisArg::Signed)]
    pub basis: BasisArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Spearman,
    MaxDiff,
    Var,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Spearman => Metric::Spearman,
            MetricArg::MaxDiff => Metric::MaxDiff,
            MetricArg::Var => Metric::Var,
        }
    }
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    /// Run log (one JSON record per line).
    pub log: PathBuf,
    /// Drop records with a larger MSE before computing the front.
    #[arg(long)]
    pub max_mse: Option<f64>,
    #[arg(long, value_enum, default_value_t = MetricArg::Spearman)]
    pub metric: MetricArg,
    /// Emit every record with a `front` column instead of the front only.
    #[arg(long)]
    pub all: bool,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Summary files written by `tune`, or their run directories.
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
    /// Also print the objective trace of this run log.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Parse `args`, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let stdout = std::io::stdout();
    match execute(&cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Doe(a) => cmd_doe(a, out),
        Command::Tune(a) => cmd_tune(a, out),
        Command::Explain(a) => cmd_explain(a, out),
        Command::Consistency(a) => cmd_consistency(a, out),
        Command::Pareto(a) => cmd_pareto(a, out),
        Command::Report(a) => cmd_report(a, out),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Write to `path`, or to `fallback` when no path was given.
fn with_output(path: Option<&Path>, fallback: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => f(fallback),
    }
}

fn write_line(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<output>", e))
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn cmd_doe(a: &DoeArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let space = cfg.space.build()?;
    let points = latin_hypercube(a.n, &space, a.seed.unwrap_or(cfg.smbo.seed))?;
    with_output(a.out.as_deref(), out, |w| {
        let mut t = csv::Writer::from_writer(w);
        let mut header = vec!["index".to_string()];
        header.extend(space.dims.iter().map(|d| format!("raw_{}", d.name)));
        header.extend(space.dims.iter().map(|d| d.name.clone()));
        t.write_record(&header)?;
        for (i, p) in points.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(p.raw.iter().map(|v| v.to_string()));
            rec.extend(p.concrete.0.iter().map(|(_, v)| v.to_string()));
            t.write_record(&rec)?;
        }
        t.flush().map_err(|e| Error::io("<design table>", e))
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn cmd_tune(a: &TuneArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(m) = a.mode {
        cfg.objective.mode = m.into();
    }
    if let Some(p) = &a.data {
        cfg.data.path = p.clone();
    }
    if let Some(s) = a.seed {
        cfg.smbo.seed = s;
    }
    if let Some(n) = a.init {
        cfg.smbo.init = n;
    }
    if let Some(n) = a.budget {
        cfg.smbo.budget = n;
    }
    if let Some(n) = a.repeats {
        cfg.smbo.repeats = n;
    }
    cfg.validate()?;
    let space = cfg.space.build()?;

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let splits = cfg.prepare_data()?;
    let mut ctx = EvalContext::new(&splits, &cfg.objective, &cfg.attribution);
    ctx.record_wall_time = cfg.smbo.record_wall_time;

    std::fs::write(a.out.join("config.toml"), cfg.to_toml()?).map_err(|e| Error::io(a.out.join("config.toml"), e))?;
    write_json(&a.out.join("splits.json"), &splits.indices)?;
    write_json(&a.out.join("scaler.json"), &splits.scaler)?;

    let run = tune(&space, &cfg.smbo, &ctx)?;
    let log_path = a.out.join("run.jsonl");
    let mut w = create(&log_path)?;
    write_run_log(&run.records, &mut w)?;
    w.flush().map_err(|e| Error::io(&log_path, e))?;

    let (summary, models) = summarize(&run, &ctx)?;
    write_weights(&models[0], &a.out.join("best_model.bin"))?;
    write_json(&a.out.join("summary.json"), &summary)?;
    print_tables(&[summary], out)
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("`{t}` is not a number")))
        })
        .collect()
}

fn cmd_explain(a: &ExplainArgs, out: &mut dyn Write) -> Result<()> {
    let methods = a
        .methods
        .split(',')
        .filter(|m| !m.trim().is_empty())
        .map(|m| Method::from_name(m.trim()))
        .collect::<Result<Vec<_>>>()?;
    let baseline = match &a.baseline {
        Some(text) => Baseline::Explicit(parse_list(text)?),
        None => Baseline::Zero,
    };
    let settings = crate::xai::AttributionSettings {
        methods,
        ig_steps: a.ig_steps,
        shap_samples: a.shap_samples,
        baseline,
        max_rows: a.rows,
    };
    settings.validate()?;
    let model = read_weights(&a.model)?;
    let mut ds = load_table(&a.data, a.target.as_deref())?.dataset;
    if let Some(p) = &a.scaler {
        let scaler: StandardScaler = serde_json::from_reader(open(p)?)?;
        ds = scaler.transform(&ds)?;
    }
    if ds.width() != model.input_dim() {
        return Err(Error::config(format!(
            "model expects {} features, {} has {}",
            model.input_dim(),
            a.data.display(),
            ds.width()
        )));
    }
    let e = attribution_matrix(&model, &ds.features, &ds.feature_names, &settings, a.seed)?;
    with_output(a.out.as_deref(), out, |w| e.write_csv(w))
}

fn cmd_consistency(a: &ConsistencyArgs, out: &mut dyn Write) -> Result<()> {
    let e = AttributionMatrix::read_csv(open(&a.input)?)?;
    let basis = match a.basis {
        BasisArg::Signed => RankBasis::Signed,
        BasisArg::Absolute => RankBasis::Absolute,
    };
    write_line(out, "metric,value")?;
    for (metric, value) in all_metrics(&e, basis)? {
        write_line(out, &format!("{},{}", metric.name(), fmt(value)))?;
    }
    Ok(())
}

fn read_log(path: &Path) -> Result<Vec<EvaluationRecord>> {
    let records = read_run_log(open(path)?)?;
    if records.is_empty() {
        return Err(Error::Ingestion {
            line: 0,
            message: format!("{} contains no records", path.display()),
        });
    }
    Ok(records)
}

fn cmd_pareto(a: &ParetoArgs, out: &mut dyn Write) -> Result<()> {
    let metric: Metric = a.metric.into();
    let records = read_log(&a.log)?;
    let kept: Vec<&EvaluationRecord> = records
        .iter()
        .filter(|r| match (r.mse, r.consistency) {
            (Some(m), Some(c)) => m.is_finite() && c.is_finite() && a.max_mse.is_none_or(|max| m <= max),
            _ => false,
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::Ingestion {
            line: 0,
            message: "no records with both MSE and consistency (loss-only runs carry no consistency)".into(),
        });
    }
    let points: Vec<(f64, f64)> = kept
        .iter()
        .map(|r| (r.mse.unwrap_or_default(), metric.to_minimize(r.consistency.unwrap_or_default())))
        .collect();
    let front = pareto_indices(&points);
    with_output(a.out.as_deref(), out, |w| {
        if a.all {
            write_line(w, "index,mse,consistency,objective,front")?;
            for (k, r) in kept.iter().enumerate() {
                let on = front.contains(&k);
                write_line(w, &format!("{},{},{},{},{}", r.index, fmt(points[k].0), fmt(r.consistency.unwrap_or_default()), fmt(r.objective), on))?;
            }
        } else {
            write_line(w, "index,mse,consistency,objective")?;
            for &k in &front {
                let r = kept[k];
                write_line(w, &format!("{},{},{},{}", r.index, fmt(points[k].0), fmt(r.consistency.unwrap_or_default()), fmt(r.objective)))?;
            }
        }
        Ok(())
    })
}

fn load_summary(path: &Path) -> Result<Summary> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    Ok(serde_json::from_reader(open(&file)?)?)
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let summaries = a.summaries.iter().map(|p| load_summary(p)).collect::<Result<Vec<_>>>()?;
    print_tables(&summaries, out)?;
    if let Some(log) = &a.trace {
        write_line(out, "")?;
        write_line(out, "index,phase,mse,consistency,objective,best_so_far")?;
        for r in read_log(log)? {
            let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
            let phase = serde_json::to_value(r.phase)?;
            write_line(
                out,
                &format!(
                    "{},{},{},{},{},{}",
                    r.index,
                    phase.as_str().unwrap_or_default(),
                    opt(r.mse),
                    opt(r.consistency),
                    fmt(r.objective),
                    fmt(r.best_so_far)
                ),
            )?;
        }
    }
    Ok(())
}

/// Best hyperparameters, then metrics on validation and test data, one
/// column per run.
pub fn print_tables(summaries: &[Summary], out: &mut dyn Write) -> Result<()> {
    let titles: Vec<&str> = summaries.iter().map(|s| s.mode.title()).collect();
    write_line(out, &format!("Hyperparameter,{}", titles.join(",")))?;
    if let Some(first) = summaries.first() {
        for (name, _) in &first.hyperparameters.0 {
            let cells: Vec<String> = summaries
                .iter()
                .map(|s| s.hyperparameters.get(name).map(|v| v.to_string()).unwrap_or_default())
                .collect();
            write_line(out, &format!("{name},{}", cells.join(",")))?;
        }
    }
    write_line(out, "")?;
    write_line(out, &format!("Metric,{}", titles.join(",")))?;
    let row = |label: &str, f: &dyn Fn(&Summary) -> Option<f64>| {
        let cells: Vec<String> = summaries.iter().map(|s| f(s).map(fmt).unwrap_or_default()).collect();
        format!("{label},{}", cells.join(","))
    };
    write_line(out, &row("XAI Consistency (Validation Data)", &|s| Some(s.validation.consistency)))?;
    write_line(out, &row("XAI Consistency (Test Data)", &|s| Some(s.test.consistency)))?;
    write_line(out, &row("MSE (Validation Data)", &|s| Some(s.validation.mse)))?;
    write_line(out, &row("MSE (Test Data)", &|s| Some(s.test.mse)))?;
    if summaries.iter().any(|s| s.desirability.is_some()) {
        write_line(out, &row("Desirability D", &|s| s.desirability))?;
        write_line(out, &row("1 - D", &|s| s.one_minus_desirability))?;
    }
    Ok(())
}
