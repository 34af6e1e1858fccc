use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ddos_core::config::FileConfig;
use ddos_core::dataset::{clean_and_encode, load_csv, CategoryEncoder, Dataset, RawColumn};
use ddos_core::error::StageContext;
use ddos_core::experiment::{run_full_experiment, write_outputs, ArtifactContext, Track};
use ddos_core::metrics::evaluate;
use ddos_core::synth::{self, SynthConfig};
use ddos_core::ModelArtifact;

/// Dual-track DDoS detection experiments on SDN flow records.
#[derive(Parser, Debug)]
#[command(name = "ddos-detect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run both tracks end to end and write the report and plot data.
    Run(RunArgs),
    /// Print row count, schema and label distribution of a CSV.
    Inspect {
        /// CSV file to inspect.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "label")]
        label_column: String,
    },
    /// Emit a synthetic flow CSV.
    Synth {
        /// Generator settings, e.g. "sep=6,n=2000". Keys: n, benign, ddos,
        /// features, sep, noise, seed. Defaults: 2000 per class, 22
        /// features, sep=6, noise=0, seed=0.
        #[arg(long, default_value = "")]
        synth: String,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "label")]
        label_column: String,
    },
    /// Score a saved model on a labelled CSV.
    Evaluate {
        /// Model file written by `run` (out/models/<model>_<track>.json).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Label column; defaults to the one the model was trained with.
        #[arg(long)]
        label_column: Option<String>,
        /// Also write roc.csv and metrics.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Flow CSV with a 0/1 label column.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    data: Option<PathBuf>,
    /// Use generated data instead, e.g. "sep=6,n=2000".
    #[arg(long)]
    synth: Option<String>,
    /// Label column name [default: label].
    #[arg(long)]
    label_column: Option<String>,
    /// Comma-separated subset of imbalanced,balanced [default: both].
    #[arg(long, value_delimiter = ',')]
    tracks: Option<Vec<Track>>,
    /// Seed for the split, folds and models [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Cross-validation folds [default: 5].
    #[arg(long)]
    folds: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Flat TOML file with experiment settings; flags take precedence.
    /// Keys: split_ratio (0.8), cv_folds (5), seed (0), models, tracks,
    /// smote_k (5), smote_target_ratio (1.0), smote_seed (0), lof_k (20),
    /// lof_threshold (1.5), feature_top_m (all), label_column, and
    /// grid_<model>_<hyperparameter> = [values].
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record the wall-clock time in the report (breaks byte-identical reruns).
    #[arg(long)]
    timestamp: bool,
    /// Skip writing model files.
    #[arg(long)]
    no_models: bool,
}

/// Write to stdout; a closed pipe is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn load_dataset(path: &Path, label_column: &str) -> anyhow::Result<(Dataset, CategoryEncoder)> {
    let table = load_csv(path, label_column).stage("load")?;
    Ok(clean_and_encode(&table).stage("clean")?)
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p).stage("config")?,
        None => FileConfig::default(),
    };
    let mut cfg = file.experiment;
    if let Some(t) = args.tracks {
        cfg.tracks = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(f) = args.folds {
        cfg.cv_folds = f;
    }
    cfg.validate().stage("config")?;
    let label_column = args
        .label_column
        .or(file.label_column)
        .unwrap_or_else(|| "label".to_string());

    let (ds, encoder) = match (&args.data, &args.synth) {
        (Some(p), None) => load_dataset(p, &label_column)?,
        (None, Some(s)) => {
            let sc: SynthConfig = s.parse().stage("synth")?;
            (synth::generate(&sc).stage("synth")?, synth::encoder(&sc))
        }
        _ => bail!("exactly one of --data and --synth is required"),
    };

    let mut outcome = run_full_experiment(&cfg, &ds)?;
    if args.timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        outcome.report.generated_at = Some(format!("unix:{secs}"));
    }
    let ctx = (!args.no_models).then(|| ArtifactContext {
        feature_names: &ds.feature_names,
        label_column: &label_column,
        encoder: &encoder,
    });
    let written = write_outputs(&outcome, &args.out, ctx).stage("write")?;
    let mut text = outcome.report.summary_table();
    text.push_str(&format!("split hash {}\n", outcome.report.split.hash));
    emit(&text)?;
    eprintln!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn cmd_inspect(data: &Path, label_column: &str) -> anyhow::Result<()> {
    let table = load_csv(data, label_column).stage("load")?;
    let dist = table.label_distribution();
    let mut text = format!(
        "rows {}\nfeatures {}\nlabels benign={} ddos={}\nmissing {}\n",
        table.len(),
        table.n_features(),
        dist.benign_count,
        dist.ddos_count,
        table.missing_count()
    );
    for (name, col) in table.feature_names.iter().zip(&table.columns) {
        let extra = match col {
            RawColumn::Categorical(v) => {
                let mut seen: Vec<&str> = v.iter().flatten().map(String::as_str).collect();
                seen.sort_unstable();
                seen.dedup();
                format!(" ({} categories)", seen.len())
            }
            RawColumn::Numeric(_) => String::new(),
        };
        text.push_str(&format!("  {name}: {}{extra}\n", col.kind()));
    }
    emit(&text)
}

fn cmd_synth(spec: &str, out: Option<&Path>, label_column: &str) -> anyhow::Result<()> {
    let cfg: SynthConfig = spec.parse().stage("synth")?;
    let ds = synth::generate(&cfg).stage("synth")?;
    match out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            synth::write_csv(&cfg, &ds, BufWriter::new(f), label_column)?;
            let dist = ds.label_distribution();
            eprintln!("wrote {} rows (benign={} ddos={}) to {}", ds.len(), dist.benign_count, dist.ddos_count, p.display());
        }
        None => synth::write_csv(&cfg, &ds, io::stdout().lock(), label_column)?,
    }
    Ok(())
}

fn cmd_evaluate(model: &Path, data: &Path, label_column: Option<&str>, out: Option<&Path>) -> anyhow::Result<()> {
    let artifact = ModelArtifact::load(model).stage("load-model")?;
    let label = label_column.unwrap_or(&artifact.label_column);
    let table = load_csv(data, label).stage("load")?;
    if table.feature_names != artifact.feature_names {
        bail!("[schema] feature columns differ from the ones the model was trained on");
    }
    let table = ddos_core::dataset::impute_missing(&table).stage("clean")?;
    let ds = artifact.encoder.apply(&table).stage("encode")?;
    let pred = artifact.predict_raw(&ds.x).stage("predict")?;
    let (report, roc) = evaluate(&ds.y, &pred.labels, &pred.positive_probabilities).stage("evaluate")?;
    let json = serde_json::to_string_pretty(&report)?;
    emit(&format!("{json}\n"))?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        std::fs::write(dir.join("metrics.json"), format!("{json}\n"))?;
        if let Some(roc) = roc {
            let mut w = BufWriter::new(File::create(dir.join("roc.csv"))?);
            roc.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Inspect { data, label_column } => cmd_inspect(&data, &label_column),
        Command::Synth {
            synth,
            out,
            label_column,
        } => cmd_synth(&synth, out.as_deref(), &label_column),
        Command::Evaluate {
            model,
            data,
            label_column,
            out,
        } => cmd_evaluate(&model, &data, label_column.as_deref(), out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // stage wrappers already embed their source in the message
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
