use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dendsom::data::{load_dataset, DatasetName, Split, N_LABELS};
use dendsom::error::{Error, Result};
use dendsom::experiment::{
    read_config, run_experiment, run_sweep, write_report_json, write_sweep_csv, write_trials_csv,
    ExperimentConfig, ModelKind, RunKind, SweepParameter,
};
use dendsom::fetch::{fetch_dataset, verify_manifest};
use dendsom::pmi::PmiTables;
use dendsom::som::BmuRule;
use dendsom::{continual, snapshot};

#[derive(Parser)]
#[command(
    name = "dendsom",
    about = "Train and evaluate dendritic self-organizing maps on image benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on a dataset's train split and save a snapshot.
    Train(TrainArgs),
    /// Evaluate a saved model snapshot on a dataset split.
    Eval(EvalArgs),
    /// Run a multi-trial experiment (classification or incremental learning).
    Scenario(ScenarioArgs),
    /// Sweep one hyperparameter across a list of values.
    Sweep(SweepArgs),
    /// Download a dataset, verify checksums, and install it under the data dir.
    FetchData(FetchArgs),
}

/// Flags shared by every experiment-configuring verb.
#[derive(Args)]
struct ConfigArgs {
    /// Dataset: mnist, fashion, or cifar10.
    #[arg(long)]
    dataset: DatasetName,
    /// Architecture: som (whole image) or dendsom (tiled receptive fields).
    #[arg(long, default_value = "dendsom")]
    model: ModelKind,
    /// BMU rule: euclidean or cosine.
    #[arg(long)]
    rule: Option<BmuRule>,
    /// TOML config file; replaces the built-in defaults wholesale.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one resolved config key, e.g. --set alpha0=0.5 --set units=8,8.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory holding the fetched datasets.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Number of seeded trials.
    #[arg(long)]
    trials: Option<usize>,
    /// First trial's seed; trial j uses base_seed + j.
    #[arg(long)]
    base_seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self, scenario: RunKind) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => read_config(path)?,
            None => ExperimentConfig::defaults(self.dataset, self.model, scenario),
        };
        if self.config.is_none() {
            config.scenario = scenario;
        }
        if let Some(rule) = self.rule {
            config.rule = rule;
        }
        if let Some(dir) = &self.data_dir {
            config.data_dir = dir.clone();
        }
        if let Some(trials) = self.trials {
            config.n_trials = trials;
        }
        if let Some(seed) = self.base_seed {
            config.base_seed = seed;
        }
        for kv in &self.overrides {
            let (key, value) = kv.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set expects KEY=VALUE, got {kv:?}"))
            })?;
            config = config.with_override(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Trial seed for weight init and the training shuffle.
    #[arg(long)]
    seed: u64,
    /// Cap the number of training samples (default: one full pass).
    #[arg(long)]
    n_iter: Option<usize>,
    /// Where to write the model snapshot.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Model snapshot written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: DatasetName,
    #[arg(long, default_value = "test")]
    split: CliSplit,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Restrict prediction to these labels (comma separated); default all.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<usize>>,
    /// Write per-sample predictions as CSV here.
    #[arg(long)]
    per_sample: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliSplit {
    Train,
    Test,
}

impl From<CliSplit> for Split {
    fn from(s: CliSplit) -> Split {
        match s {
            CliSplit::Train => Split::Train,
            CliSplit::Test => Split::Test,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// classification, task-il, domain-il, or class-il.
    #[arg(long, default_value = "classification")]
    kind: RunKind,
    /// Directory for report.json, trials.csv, and per-trial curve CSVs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// alpha0, alpha_crit, r_exp, patch_size, units_per_map, or lambda.
    #[arg(long)]
    param: SweepParameter,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Scenario the sweep runs under.
    #[arg(long, default_value = "classification")]
    kind: RunKind,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    #[arg(long)]
    dataset: DatasetName,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Alternate base URL, or a local directory already holding the archives.
    #[arg(long)]
    source: Option<String>,
    /// Re-verify an installed dataset against its manifest instead of fetching.
    #[arg(long)]
    verify: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
                "kind": err.kind(),
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Scenario(args) => scenario(args),
        Command::Sweep(args) => sweep(args),
        Command::FetchData(args) => fetch(args),
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let config = args.config.resolve(RunKind::Classification)?;
    let train = load_dataset(config.dataset, &config.data_dir, Split::Train)?;
    let mut model = config.build_model(train.rows(), train.cols(), N_LABELS, args.seed)?;
    let shuffled = train.shuffled(args.seed);
    let n_iter = args.n_iter.unwrap_or(shuffled.len());
    let stream = (0..shuffled.len()).map(|i| (shuffled.image(i), shuffled.label(i)));
    model.fit(stream, n_iter)?;
    snapshot::save_model(&model, &args.out)?;
    println!(
        "trained {} {} on {} samples; snapshot: {}",
        config.model,
        config.rule,
        n_iter,
        args.out.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let model = snapshot::load_model(&args.model)?;
    let ds = load_dataset(args.dataset, &args.data_dir, args.split.into())?;
    let candidates: Vec<usize> = match args.candidates {
        Some(c) => c,
        None => (0..model.n_labels()).collect(),
    };
    let accuracy = continual::evaluate(&model, &ds, &candidates)?;
    if let Some(path) = args.per_sample {
        let mut w = BufWriter::new(File::create(&path)?);
        write!(w, "sample_id,true_label,predicted_label")?;
        for c in &candidates {
            write!(w, ",score_{c}")?;
        }
        writeln!(w)?;
        let tables = PmiTables::new(&model);
        for i in 0..ds.len() {
            let p = model.predict_with(&tables, ds.image(i), &candidates)?;
            write!(w, "{i},{},{}", ds.label(i), p.label)?;
            for (_, score) in &p.scores {
                write!(w, ",{score}")?;
            }
            writeln!(w)?;
        }
    }
    println!(
        "{} {} accuracy: {:.4} ({} samples)",
        ds.name,
        ds.split,
        accuracy,
        ds.len()
    );
    Ok(())
}

fn scenario(args: ScenarioArgs) -> Result<()> {
    let config = args.config.resolve(args.kind)?;
    let report = run_experiment(&config)?;
    println!(
        "{} {} {} over {} trials: {:.4} +/- {:.4}",
        config.dataset, config.model, config.scenario, config.n_trials, report.mean, report.std_dev
    );
    let out_dir = args.out_dir.or_else(|| config.output_dir.clone());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)?;
        write_report_json(&report, BufWriter::new(File::create(dir.join("report.json"))?))?;
        write_trials_csv(&report, BufWriter::new(File::create(dir.join("trials.csv"))?))?;
        if let Some(scenarios) = &report.scenarios {
            for (j, result) in scenarios.iter().enumerate() {
                let path = dir.join(format!("curves_trial{j}.csv"));
                continual::write_curves_csv(result, BufWriter::new(File::create(path)?))?;
            }
        }
        println!("results written to {}", dir.display());
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let config = args.config.resolve(args.kind)?;
    let results = run_sweep(&config, args.param, &args.values)?;
    for (value, report) in &results {
        println!(
            "{} = {}: {:.4} +/- {:.4}",
            args.param, value, report.mean, report.std_dev
        );
    }
    let out_dir = args.out_dir.or_else(|| config.output_dir.clone());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)?;
        let sweep_path = dir.join(format!("sweep_{}.csv", args.param));
        write_sweep_csv(&results, BufWriter::new(File::create(&sweep_path)?))?;
        for (value, report) in &results {
            let path = dir.join(format!("report_{}_{value}.json", args.param));
            write_report_json(report, BufWriter::new(File::create(path)?))?;
        }
        println!("sweep results written to {}", dir.display());
    }
    Ok(())
}

fn fetch(args: FetchArgs) -> Result<()> {
    if args.verify {
        verify_manifest(&args.data_dir.join(args.dataset.dir_name()))?;
        println!("{} verified against its manifest", args.dataset);
        return Ok(());
    }
    let installed = fetch_dataset(args.dataset, &args.data_dir, args.source.as_deref())?;
    for path in &installed {
        println!("installed {}", path.display());
    }
    Ok(())
}
