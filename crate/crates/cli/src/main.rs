//! `motifcast` command-line interface.
//!
//! Exit status: 0 on success, 1 on other failures, 2 when the input file is
//! missing, 3 on malformed input, 4 when the data is too degenerate to derive
//! model parameters. Failures print one `motifcast: error[<kind>]: ...` line
//! on stderr.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use motifcast::features::{export_dense_csv, export_vocabulary, DENSE_ROW_LIMIT};
use motifcast::predictor::write_predictions_csv;
use motifcast::*;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "motifcast",
    version,
    about = "Temporal motif transition forecasting"
)]
struct Cli {
    /// Worker threads for sweeps and large candidate scans [default: all cores]
    #[arg(long, global = true, env = "MOTIFCAST_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dataset summary, model parameters and predictability diagnostics as JSON
    Stats(StatsArgs),
    /// Forecast the next k events after the training split
    Predict(PredictArgs),
    /// Per-event motif transition posterior features
    Features(FeaturesArgs),
    /// Precision over grids of k, test ratio and seed
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Edge list: `src dst time` per line, whitespace or comma separated
    input: PathBuf,

    /// Largest motif size in events
    #[arg(long, default_value_t = 3)]
    lmax: usize,

    /// Transition time limit in seconds [default: largest per-node gap between consecutive events]
    #[arg(long)]
    delta_c: Option<f64>,

    /// Half-width of the waiting-time window in seconds
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
}

impl ModelArgs {
    fn config(&self) -> ModelConfig {
        ModelConfig {
            max_size: self.lmax,
            delta_c: self.delta_c,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Fraction of the stream held out as the future
    #[arg(long, default_value_t = 0.2)]
    test_ratio: f64,

    /// Write the JSON summary here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Also save the trained statistics snapshot (JSON)
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Fraction of the stream held out as the future
    #[arg(long, default_value_t = 0.2)]
    test_ratio: f64,

    /// Number of events to forecast
    #[arg(long, short, default_value_t = 100)]
    k: usize,

    /// Random seed
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Predictions CSV [default: stdout]
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Evaluation report JSON [default: stderr]
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Indexing {
    Source,
    Target,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Sparse matrix output (`#rows cols vocab` header, then `row col value`)
    #[arg(long, short)]
    output: PathBuf,

    /// Motif vocabulary TSV [default: vocab.tsv next to the matrix]
    #[arg(long)]
    vocab: Option<PathBuf>,

    /// Column assigned to each transition's posterior
    #[arg(long, value_enum, default_value_t = Indexing::Source)]
    indexing: Indexing,

    /// Also write a dense CSV, one row per event
    #[arg(long)]
    dense: Option<PathBuf>,

    /// Refuse dense output above this many rows
    #[arg(long, default_value_t = DENSE_ROW_LIMIT)]
    dense_limit: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Prediction counts
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "50,100,150,200,250,300,350,400,450,500,550,600,650,700,750,800,850,900,950,1000"
    )]
    ks: Vec<usize>,

    /// Held-out fractions
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    test_ratios: Vec<f64>,

    /// Random seeds
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,

    /// Curve CSV [default: stdout]
    #[arg(long, short)]
    output: Option<PathBuf>,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Parse { .. } | Error::EmptyInput => (3, "parse"),
            Error::UndefinedDeltaC | Error::UndefinedIntensity(_) => (4, "degenerate"),
            Error::InvalidArgument(_) => (1, "argument"),
            Error::Io(_) => (1, "io"),
            _ => (1, "internal"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load(path: &Path) -> CliResult<TemporalGraph> {
    let file = File::open(path).map_err(|e| Failure {
        code: if e.kind() == io::ErrorKind::NotFound {
            2
        } else {
            1
        },
        kind: "input",
        message: format!("cannot open {}: {e}", path.display()),
    })?;
    let g = parse_events(BufReader::new(file))?;
    if g.dropped_self_loops() > 0 {
        eprintln!(
            "motifcast: dropped {} self-loop events",
            g.dropped_self_loops()
        );
    }
    Ok(g)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Failure {
        code: 1,
        kind: "output",
        message: format!("cannot create {}: {e}", path.display()),
    })?;
    Ok(BufWriter::new(file))
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(value: &serde_json::Value, mut out: impl Write) -> CliResult<()> {
    serde_json::to_writer(&mut out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn stats(args: &StatsArgs) -> CliResult<()> {
    let g = load(&args.model.input)?;
    let summary = summary_stats(&g);
    let (train, test) = chronological_split(&g, args.test_ratio)?;
    let model = train_model(&train, &args.model.config())?;
    let value = json!({
        "nodes": summary.nodes,
        "events": summary.events,
        "static_edges": summary.static_edges,
        "timespan_days": summary.timespan_days,
        "dropped_self_loops": g.dropped_self_loops(),
        "test_ratio": args.test_ratio,
        "train_events": train.len(),
        "test_events": test.len(),
        "lmax": model.max_size(),
        "delta_c": model.delta_c(),
        "epsilon": model.epsilon(),
        "p_cold": model.p_cold(),
        "lambda_global": model.lambda_global(),
        "observed_transitions": model.transitions().len(),
        "rer": repeated_event_ratio(&train, &test)?,
        "node_entropy": node_entropy(&train)?,
        "motif_transition_entropy": motif_transition_entropy(&model).ok(),
    });
    if let Some(path) = &args.snapshot {
        let mut out = create(path)?;
        model.save(&train, &mut out)?;
        out.flush()?;
    }
    write_json(&value, sink(args.output.as_deref())?)
}

fn predict(args: &PredictArgs) -> CliResult<()> {
    let g = load(&args.model.input)?;
    let (report, predictions) =
        evaluate(&g, args.test_ratio, args.k, args.seed, &args.model.config())?;
    let (train, _) = chronological_split(&g, args.test_ratio)?;
    let mut out = sink(args.output.as_deref())?;
    write_predictions_csv(&predictions, &train, &mut out)?;
    out.flush()?;
    let value = serde_json::to_value(&report).map_err(io::Error::from)?;
    match &args.report {
        Some(path) => write_json(&value, create(path)?),
        None => write_json(&value, io::stderr().lock()),
    }
}

fn features(args: &FeaturesArgs) -> CliResult<()> {
    let g = load(&args.model.input)?;
    let config = args.model.config();
    let model = train_model(&g, &config)?;
    let indexing = match args.indexing {
        Indexing::Source => ColumnIndexing::Source,
        Indexing::Target => ColumnIndexing::Target,
    };
    let mut matrix = build_feature_matrix(&g, &model, indexing)?;
    let vocab_path = args.vocab.clone().unwrap_or_else(|| {
        args.output
            .parent()
            .unwrap_or(Path::new(""))
            .join(motifcast::features::DEFAULT_VOCAB_REF)
    });
    if let Some(name) = vocab_path.file_name() {
        matrix.vocab_ref = name.to_string_lossy().replace(char::is_whitespace, "_");
    }
    if let Some(path) = &args.dense {
        let mut out = create(path)?;
        export_dense_csv(&matrix, &mut out, args.dense_limit)?;
        out.flush()?;
    }
    let written = export_sparse(&matrix, create(&args.output)?).map_err(Error::from)?;
    let mut vocab_out = create(&vocab_path)?;
    export_vocabulary(model.vocab(), &mut vocab_out)?;
    vocab_out.flush()?;
    eprintln!(
        "motifcast: {} rows, {} nonzero, {} entries, {written} bytes",
        matrix.rows,
        matrix.nonzero_rows(),
        matrix.entries.len()
    );
    Ok(())
}

fn sweep_cmd(args: &SweepArgs) -> CliResult<()> {
    let g = load(&args.model.input)?;
    let table = sweep(
        &g,
        &args.test_ratios,
        &args.ks,
        &args.seeds,
        &args.model.config(),
    )?;
    let mut out = sink(args.output.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: 1,
                kind: "argument",
                message: format!("cannot start {n} worker threads: {e}"),
            })?;
    }
    match &cli.command {
        Command::Stats(a) => stats(a),
        Command::Predict(a) => predict(a),
        Command::Features(a) => features(a),
        Command::Sweep(a) => sweep_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!(
                "motifcast: error[{}]: {}",
                f.kind,
                f.message.replace('\n', " ")
            );
            ExitCode::from(f.code)
        }
    }
}
