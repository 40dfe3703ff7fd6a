//! The `ig` command line: `train`, `predict`, `explain`, `bench`.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration or usage error,
//! 3 I/O error, 4 data error, 5 arithmetic overflow.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};

use clap::{Args, Parser, Subcommand};

use crate::archive::{ModelArchive, Provenance};
use crate::error::{Error, Result};
use crate::eval::{parse_ratios, render_jsonl, render_table, run_benchmark, BenchOptions};
use crate::infer::{StatsMode, DEFAULT_R};
use crate::kernels::{select_backend, Backend, KernelConfig, DEFAULT_COVERAGE_BLOCK, DEFAULT_PAIR_BATCH};
use crate::mine::MineProgress;
use crate::model::{TrainOptions, Trainer};
use crate::pipeline::{LabelMapping, RawTable, SchemaOptions, DEFAULT_DECIMALS};
use crate::Class;

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DATA: u8 = 4;
pub const EXIT_ARITHMETIC: u8 = 5;

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::UnknownBackend { .. } => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::Data(_)
        | Error::Encoding { .. }
        | Error::SchemaMismatch(_)
        | Error::FilterEmptiedClass(_)
        | Error::EmptyClass(_)
        | Error::Archive(_)
        | Error::Csv(_)
        | Error::Json(_) => EXIT_DATA,
        Error::Overflow(_) => EXIT_ARITHMETIC,
        Error::IndexOutOfRange { .. } | Error::Shape(_) | Error::Contract(_) => EXIT_INTERNAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "ig", version, about = "Interpretable intrusion detection with coherent patterns")]
pub struct Cli {
    /// Worker threads for the parallel backend [env: IG_WORKERS; default: all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mine pure pattern dictionaries from a labeled CSV and save a model.
    Train(TrainArgs),
    /// Score and label every row of a CSV with a saved model.
    Predict(PredictArgs),
    /// Print the matched evidence behind each verdict as text.
    Explain(ExplainArgs),
    /// Train and evaluate over train/test ratios.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Kernel backend (reference, parallel-cpu).
    #[arg(long, default_value = "parallel-cpu")]
    backend: String,
    #[arg(long, default_value_t = DEFAULT_PAIR_BATCH)]
    pair_batch: usize,
    #[arg(long, default_value_t = DEFAULT_COVERAGE_BLOCK)]
    coverage_block: usize,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Labeled CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_col: String,
    /// Comma-separated attack labels; default: anything not normal.
    #[arg(long)]
    attack_values: Option<String>,
    /// Comma-separated normal labels.
    #[arg(long, default_value = "normal")]
    normal_values: String,
    /// Comma-separated columns to leave out of tokenization.
    #[arg(long)]
    ignore_cols: Option<String>,
    /// Decimal places kept after z-scoring numeric columns.
    #[arg(long, default_value_t = DEFAULT_DECIMALS)]
    decimals: u32,
    /// Outlier multiplier for the normal-evidence rule.
    #[arg(long, default_value_t = DEFAULT_R)]
    r: f64,
    /// Where normal-evidence statistics come from: batch or train.
    #[arg(long, default_value = "batch")]
    stats_mode: String,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Output model archive.
    #[arg(long, alias = "model")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Attach matched patterns to each record.
    #[arg(long)]
    explain: bool,
    /// Override the model's outlier multiplier.
    #[arg(long)]
    r: Option<f64>,
    /// JSON-lines output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// 1-based rows to explain; all rows when omitted.
    #[arg(long)]
    row: Vec<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Comma-separated `k:m` splits, or `all`.
    #[arg(long, alias = "ratio", default_value = "all")]
    ratios: String,
    /// Shuffle rows with this seed before splitting.
    #[arg(long)]
    seed: Option<u64>,
    /// Report prefix: writes `<out>.txt` and `<out>.jsonl`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn split_list(s: &str) -> BTreeSet<String> {
    s.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
}

impl DataArgs {
    fn train_options(&self) -> Result<TrainOptions> {
        Ok(TrainOptions {
            schema: SchemaOptions {
                label_column: self.label_col.clone(),
                labels: LabelMapping {
                    normal_values: split_list(&self.normal_values),
                    attack_values: self.attack_values.as_deref().map(split_list),
                },
                decimals: self.decimals,
                ignore_columns: self
                    .ignore_cols
                    .as_deref()
                    .map(|s| split_list(s).into_iter().collect())
                    .unwrap_or_default(),
            },
            r: self.r,
            stats_mode: self.stats_mode.parse::<StatsMode>()?,
        })
    }
}

/// `--workers`, else `IG_WORKERS`, else every available core.
fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => from_env()?,
    };
    if n == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    Ok(n)
}

fn from_env() -> Result<usize> {
    match std::env::var("IG_WORKERS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("IG_WORKERS must be a whole number, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

impl KernelArgs {
    fn build(&self, workers: usize) -> Result<(Box<dyn Backend>, KernelConfig)> {
        let config = KernelConfig {
            pair_batch: self.pair_batch,
            coverage_block: self.coverage_block,
            ..Default::default()
        };
        config.validate()?;
        Ok((select_backend(&self.backend, workers)?, config))
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_all(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    let label = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io(label, e)),
        _ => Ok(()),
    }
}

fn progress_printer() -> impl Fn(Class, MineProgress) + Sync {
    let last = AtomicU64::new(u64::MAX);
    move |class, p| {
        if p.pairs_total < 1_000_000 {
            return;
        }
        let decile = p.pairs_done * 10 / p.pairs_total;
        if last.swap(decile, Ordering::Relaxed) != decile {
            eprintln!("  mining {class}: {}/{} pairs", p.pairs_done, p.pairs_total);
        }
    }
}

fn cmd_train(args: &TrainArgs, workers: usize) -> Result<()> {
    let options = args.data.train_options()?;
    let (backend, config) = args.kernel.build(workers)?;
    let bytes = read_bytes(&args.data.data)?;
    let table = RawTable::from_reader(bytes.as_slice())?;
    let hook = progress_printer();
    let trainer = Trainer::new(backend.as_ref(), config).with_progress(&hook);
    let (model, summary) = trainer.train(&table, &options)?;
    let archive = ModelArchive::new(model, Provenance::for_input(&bytes));
    archive.save(&args.out)?;

    println!("rows             {} ({} attack, {} normal after filtering)", summary.training_rows, summary.attack_rows, summary.normal_rows);
    println!("contradictions   {} rows removed", summary.filter.removed.len());
    println!("vocabulary       {} tokens", archive.model.vocabulary.len());
    println!("candidates       {} attack, {} normal", summary.candidates_attack, summary.candidates_normal);
    println!("pure patterns    {} attack, {} normal", summary.pure_attack, summary.pure_normal);
    println!(
        "time             encode {:.3}s, mine {:.3}s, purify {:.3}s",
        summary.times.encode, summary.times.mine, summary.times.purify
    );
    println!("model            {}", args.out.display());
    Ok(())
}

fn load_model(path: &Path, r: Option<f64>) -> Result<ModelArchive> {
    let mut archive = ModelArchive::load(path)?;
    if let Some(r) = r {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Config(format!("r must be a non-negative number, got {r}")));
        }
        archive.model.classifier.r = r;
    }
    Ok(archive)
}

fn cmd_predict(args: &PredictArgs, workers: usize) -> Result<()> {
    let (backend, config) = args.kernel.build(workers)?;
    let archive = load_model(&args.model, args.r)?;
    let model = &archive.model;
    let table = RawTable::from_path(&args.data)?;
    let batch = model.encode(&table)?;
    let pred = model.predict(&batch.rows, backend.as_ref(), &config)?;

    let mut text = String::new();
    for i in 0..pred.len() {
        let mut record = serde_json::json!({
            "row": i + 1,
            "A": pred.abnormal[i],
            "N": pred.normal[i],
            "label": pred.labels[i],
            "regulation": pred.regulations[i],
        });
        if args.explain {
            let report = model.explain(&batch.rows.row_owned(i), &pred.params)?;
            record["attack_evidence"] = serde_json::to_value(&report.matched_attack_patterns)?;
            record["normal_evidence"] = serde_json::to_value(&report.matched_normal_patterns)?;
        }
        text.push_str(&record.to_string());
        text.push('\n');
    }
    let mut out = open_output(args.out.as_deref())?;
    write_all(out.as_mut(), args.out.as_deref(), &text)?;
    eprintln!(
        "{} rows; normal-evidence threshold {:.4} (mu {:.4}, sigma {:.4}, r {})",
        pred.len(),
        pred.params.threshold(),
        pred.params.mu_n,
        pred.params.sigma_n,
        pred.params.r
    );
    Ok(())
}

fn cmd_explain(args: &ExplainArgs, workers: usize) -> Result<()> {
    let (backend, config) = args.kernel.build(workers)?;
    let archive = load_model(&args.model, args.r)?;
    let model = &archive.model;
    let table = RawTable::from_path(&args.data)?;
    let batch = model.encode(&table)?;
    let pred = model.predict(&batch.rows, backend.as_ref(), &config)?;
    let rows: Vec<usize> = if args.row.is_empty() {
        (1..=pred.len()).collect()
    } else {
        args.row.clone()
    };
    let mut text = String::new();
    for row in rows {
        if row == 0 || row > pred.len() {
            return Err(Error::Config(format!("row {row} out of range 1..={}", pred.len())));
        }
        let report = model.explain(&batch.rows.row_owned(row - 1), &pred.params)?;
        text.push_str(&format!("row {row}: {}", report.to_text()));
    }
    let mut out = open_output(args.out.as_deref())?;
    write_all(out.as_mut(), args.out.as_deref(), &text)
}

fn cmd_bench(args: &BenchArgs, workers: usize) -> Result<()> {
    let ratios = parse_ratios(&args.ratios)?;
    let options = BenchOptions {
        train: args.data.train_options()?,
        shuffle_seed: args.seed,
    };
    let (backend, config) = args.kernel.build(workers)?;
    let table = RawTable::from_path(&args.data.data)?;
    let hook = progress_printer();
    let trainer = Trainer::new(backend.as_ref(), config).with_progress(&hook);
    let outcomes = run_benchmark(&table, &ratios, &trainer, &options);
    let rendered = render_table(&outcomes);
    print!("{rendered}");
    if let Some(prefix) = &args.out {
        let txt = prefix.with_extension("txt");
        let jsonl = prefix.with_extension("jsonl");
        std::fs::write(&txt, &rendered).map_err(|e| Error::io(&txt, e))?;
        std::fs::write(&jsonl, render_jsonl(&outcomes)).map_err(|e| Error::io(&jsonl, e))?;
    }
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} ratios failed", outcomes.len());
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = resolve_workers(cli.workers).and_then(|workers| match &cli.command {
        Command::Train(a) => cmd_train(a, workers),
        Command::Predict(a) => cmd_predict(a, workers),
        Command::Explain(a) => cmd_explain(a, workers),
        Command::Bench(a) => cmd_bench(a, workers),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
