//! `qgc` — command-line driver for the quantum generative classifier.
//!
//! Subcommands cover the full experiment lifecycle: `gen-data` materializes
//! seeded synthetic datasets as CSV, `train` runs a config-driven experiment
//! end to end, and `eval`, `density`, `variance`, and `finetune` operate on a
//! saved checkpoint. All randomness flows from explicit seeds, so every
//! command is reproducible bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};

use qgc_sim::encodings::augment_2d;
use qgc_sim::oracles::{accuracy, write_density_csv};
use qgc_sim::pipeline::{
    gen_synthetic, read_dataset_csv, run_experiment, write_dataset_csv, ExperimentConfig,
    SplitTag, SyntheticName,
};
use qgc_sim::qgc::TrainingMode;
use qgc_sim::{ModelCheckpoint, QgcModel};

#[derive(Parser)]
#[command(
    name = "qgc",
    version,
    about = "Quantum generative classification experiments",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset as train/test/OOD CSV files.
    GenData(GenDataArgs),
    /// Train a model from a JSON experiment config and write all artifacts.
    Train(TrainArgs),
    /// Score a saved checkpoint's accuracy on a labeled CSV dataset.
    Eval(EvalArgs),
    /// Tabulate a saved checkpoint's class densities over CSV points.
    Density(DensityArgs),
    /// Estimate finite-shot statistics of one joint projection.
    Variance(VarianceArgs),
    /// Continue generative training of a checkpoint on a latent CSV dataset.
    Finetune(FinetuneArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Dataset family: gauss1d, moons, circles, or spirals.
    #[arg(long)]
    name: String,
    /// Override the default row counts, as "TRAIN,TEST".
    #[arg(long)]
    sizes: Option<String>,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving train.csv, test.csv, and ood.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the training mode: generative or discriminative.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Saved model (checkpoint.json).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Labeled CSV dataset (columns x0…, label).
    #[arg(long)]
    data: PathBuf,
    /// Optional path for the JSON summary (stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    /// Saved model (checkpoint.json).
    #[arg(long)]
    checkpoint: PathBuf,
    /// CSV of evaluation points (labels are ignored; -1 rows are fine).
    #[arg(long)]
    data: PathBuf,
    /// Output CSV: one row per (point, class) with the model density.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VarianceArgs {
    /// Saved model (checkpoint.json).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Input point, comma-separated (e.g. "0.31,0.7").
    #[arg(long)]
    x: String,
    /// Class label of the queried joint projection.
    #[arg(long)]
    label: usize,
    /// Measurement shots per run.
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    /// Independent seeded runs.
    #[arg(long, default_value_t = 50)]
    runs: usize,
    /// Base seed for the per-run measurement streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional path for the JSON report (stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FinetuneArgs {
    /// Saved model to continue from (checkpoint.json).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Labeled latent CSV dataset (columns x0…, label).
    #[arg(long)]
    data: PathBuf,
    /// Full-batch gradient-descent epochs.
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// Learning rate.
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Path for the updated checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// Optional path for the per-epoch loss trace CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => gen_data(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Density(args) => density(args),
        Command::Variance(args) => variance(args),
        Command::Finetune(args) => finetune(args),
    }
}

fn parse_sizes(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        bail!("--sizes expects \"TRAIN,TEST\", got {text:?}");
    }
    let train = parts[0].trim().parse().with_context(|| format!("bad train size {:?}", parts[0]))?;
    let test = parts[1].trim().parse().with_context(|| format!("bad test size {:?}", parts[1]))?;
    Ok((train, test))
}

fn parse_mode(text: &str) -> Result<TrainingMode> {
    match text {
        "generative" => Ok(TrainingMode::Generative),
        "discriminative" => Ok(TrainingMode::Discriminative),
        other => bail!("--mode expects generative or discriminative, got {other:?}"),
    }
}

fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|cell| {
            cell.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coordinate {cell:?} in --x"))
        })
        .collect()
}

fn load_model(path: &Path) -> Result<QgcModel> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read checkpoint {}", path.display()))?;
    let checkpoint = ModelCheckpoint::from_json(&text)?;
    Ok(QgcModel::from_checkpoint(checkpoint)?)
}

/// Match CSV rows to the model's input width, applying the 2-D monomial lift
/// when that is exactly what is missing.
fn fit_rows_to_model(model: &QgcModel, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let want = model.feature_map().input_dim();
    let have = rows[0].len();
    if have == want {
        return Ok(rows.to_vec());
    }
    if have == 2 && want == 5 {
        eprintln!("note: lifting 2-D rows to (x1, x2, x1^2, x2^2, x1*x2) to match the model");
        return Ok(rows.iter().map(|r| augment_2d(r)).collect::<qgc_sim::Result<_>>()?);
    }
    bail!("data has {have} feature columns but the model expects {want}");
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let name: SyntheticName = args.name.parse()?;
    let sizes = args.sizes.as_deref().map(parse_sizes).transpose()?;
    let triplet = gen_synthetic(name, sizes, args.seed)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    for (file, dataset) in [
        ("train.csv", &triplet.train),
        ("test.csv", &triplet.test),
        ("ood.csv", &triplet.ood),
    ] {
        let path = args.out.join(file);
        write_dataset_csv(dataset, &path)?;
        println!("wrote {} rows to {}", dataset.len(), path.display());
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let mut config = ExperimentConfig::from_json_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if let Some(mode) = args.mode.as_deref() {
        config.train.mode = parse_mode(mode)?;
    }
    let report = run_experiment(&config)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let dataset = read_dataset_csv(&args.data, SplitTag::Test)?;
    let (raw_x, truth) = dataset.supervised();
    let features = fit_rows_to_model(&model, &raw_x)?;
    let predicted = model.predict_batch(&features)?;
    let score = accuracy(&predicted, &truth)?;
    let summary = serde_json::json!({
        "checkpoint": args.checkpoint.display().to_string(),
        "data": args.data.display().to_string(),
        "rows": features.len(),
        "classes": model.classes(),
        "accuracy": score,
    });
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&summary)?)
}

fn density(args: DensityArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let dataset = read_dataset_csv(&args.data, SplitTag::Ood)
        .or_else(|_| read_dataset_csv(&args.data, SplitTag::Test))?;
    let points = fit_rows_to_model(&model, dataset.features())?;
    let m_h = model.bandwidth().m_h();
    let mut flat_points = Vec::with_capacity(points.len() * model.classes());
    let mut labels = Vec::with_capacity(points.len() * model.classes());
    let mut densities = Vec::with_capacity(points.len() * model.classes());
    for x in &points {
        let projections = model.projections(x)?;
        for (class, &p) in projections.iter().enumerate() {
            flat_points.push(x.clone());
            labels.push(class);
            densities.push(m_h * p);
        }
    }
    let mut buffer = Vec::new();
    write_density_csv(&mut buffer, &flat_points, &labels, &densities)?;
    fs::write(&args.out, buffer).with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "wrote {} density rows ({} points x {} classes) to {}",
        flat_points.len(),
        points.len(),
        model.classes(),
        args.out.display()
    );
    Ok(())
}

fn variance(args: VarianceArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let x = parse_point(&args.x)?;
    let features = fit_rows_to_model(&model, std::slice::from_ref(&x))?;
    let report = model.shot_estimates(&features[0], args.label, args.shots, args.runs, args.seed)?;
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn finetune(args: FinetuneArgs) -> Result<()> {
    let mut model = load_model(&args.checkpoint)?;
    let dataset = read_dataset_csv(&args.data, SplitTag::Train)?;
    let (raw_x, labels) = dataset.supervised();
    let features = fit_rows_to_model(&model, &raw_x)?;
    let trace = model.finetune_generative(&features, &labels, args.epochs, args.lr)?;
    fs::write(&args.out, model.to_checkpoint().to_json()?)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(trace_path) = &args.trace_out {
        let mut buffer = Vec::new();
        trace.write_csv(&mut buffer)?;
        fs::write(trace_path, buffer)
            .with_context(|| format!("cannot write {}", trace_path.display()))?;
    }
    let final_loss = trace.entries.last().map(|e| e.loss);
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "epochs": args.epochs,
            "rows": features.len(),
            "final_loss": final_loss,
            "checkpoint": args.out.display().to_string(),
        }))?
    );
    Ok(())
}
