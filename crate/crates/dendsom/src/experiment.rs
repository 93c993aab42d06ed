//! Configuration-driven experiment runner: seeded trials over classification
//! or incremental-learning scenarios, hyperparameter sweeps, and CSV/JSON
//! result emission with full config provenance.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::continual::{
    evaluate, make_split, run_scenario, Scenario, ScenarioResult, DEFAULT_SPLIT_PAIRS,
};
use crate::data::{load_dataset, DatasetName, LabeledDataset, Split, N_LABELS};
use crate::error::{Error, Result};
use crate::model::{DendSomModel, TilingSpec};
use crate::som::{BmuRule, DecaySchedule};

/// Architecture family: one whole-image map or a tiling of patch maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Som,
    DendSom,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Som => write!(f, "som"),
            ModelKind::DendSom => write!(f, "dendsom"),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "som" => Ok(ModelKind::Som),
            "dendsom" => Ok(ModelKind::DendSom),
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind {other:?} (expected som or dendsom)"
            ))),
        }
    }
}

/// What one trial runs: a shuffled single-pass classification fit, or one of
/// the sequential incremental-learning scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Classification,
    TaskIl,
    DomainIl,
    ClassIl,
}

impl RunKind {
    pub fn scenario(&self) -> Option<Scenario> {
        match self {
            RunKind::Classification => None,
            RunKind::TaskIl => Some(Scenario::TaskIl),
            RunKind::DomainIl => Some(Scenario::DomainIl),
            RunKind::ClassIl => Some(Scenario::ClassIl),
        }
    }
}

impl std::fmt::Display for RunKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunKind::Classification => write!(f, "classification"),
            RunKind::TaskIl => write!(f, "task-il"),
            RunKind::DomainIl => write!(f, "domain-il"),
            RunKind::ClassIl => write!(f, "class-il"),
        }
    }
}

impl std::str::FromStr for RunKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(RunKind::Classification),
            "task-il" => Ok(RunKind::TaskIl),
            "domain-il" => Ok(RunKind::DomainIl),
            "class-il" => Ok(RunKind::ClassIl),
            other => Err(Error::InvalidParameter(format!(
                "unknown run kind {other:?} \
                 (expected classification, task-il, domain-il, or class-il)"
            ))),
        }
    }
}

/// Initial neighborhood radius: an explicit value, or `auto` for
/// `max(unit_rows, unit_cols) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaInit {
    Auto,
    Value(f64),
}

impl Serialize for SigmaInit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SigmaInit::Auto => s.serialize_str("auto"),
            SigmaInit::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for SigmaInit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(SigmaInit::Value(v)),
            Raw::Text(s) if s == "auto" => Ok(SigmaInit::Auto),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "sigma0 must be a number or \"auto\", got {s:?}"
            ))),
        }
    }
}

/// Everything one experiment needs; serializable so every emitted result can
/// embed its fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetName,
    pub data_dir: PathBuf,
    pub model: ModelKind,
    pub rule: BmuRule,
    /// Units per map, (rows, cols).
    pub units: [usize; 2],
    /// Receptive-field extent, (rows, cols). Ignored for `som`, which always
    /// covers the whole image.
    pub patch: [usize; 2],
    /// Window stride, (rows, cols). Ignored for `som`.
    pub stride: [usize; 2],
    pub alpha0: f64,
    pub sigma0: SigmaInit,
    pub lambda: f64,
    pub alpha_crit: f64,
    pub r_exp: u64,
    pub scenario: RunKind,
    pub n_trials: usize,
    pub base_seed: u64,
    /// Trial-level parallelism; training inside a trial is parallel anyway.
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reference defaults per dataset and architecture. The clock-rewind
    /// divisor is 1 for classification and 2 for the incremental scenarios.
    pub fn defaults(dataset: DatasetName, model: ModelKind, scenario: RunKind) -> Self {
        let (dend_units, patch, stride, som_units) = match dataset {
            DatasetName::Mnist => (8, 10, 3, 21),
            DatasetName::Fashion => (10, 8, 4, 18),
            DatasetName::Cifar10 => (12, 4, 2, 29),
        };
        let side = dataset.image_side();
        let (units, patch, stride) = match model {
            ModelKind::DendSom => ([dend_units; 2], [patch; 2], [stride; 2]),
            ModelKind::Som => ([som_units; 2], [side; 2], [1, 1]),
        };
        let alpha_crit = match dataset {
            DatasetName::Mnist | DatasetName::Fashion => 5e-3,
            DatasetName::Cifar10 => 5e-5,
        };
        ExperimentConfig {
            dataset,
            data_dir: PathBuf::from("data"),
            model,
            rule: BmuRule::Cosine,
            units,
            patch,
            stride,
            alpha0: 0.95,
            sigma0: SigmaInit::Auto,
            lambda: 1e3,
            alpha_crit,
            r_exp: if scenario == RunKind::Classification {
                1
            } else {
                2
            },
            scenario,
            n_trials: 10,
            base_seed: 1,
            workers: 1,
            output_dir: None,
        }
    }

    pub fn resolved_sigma0(&self) -> f64 {
        match self.sigma0 {
            SigmaInit::Auto => self.units[0].max(self.units[1]) as f64 / 2.0,
            SigmaInit::Value(v) => v,
        }
    }

    /// Tiling for images of the given shape: the whole image for `som`, the
    /// configured patch/stride otherwise.
    pub fn tiling(&self, image_rows: usize, image_cols: usize) -> Result<TilingSpec> {
        match self.model {
            ModelKind::Som => TilingSpec::whole_image(image_rows, image_cols),
            ModelKind::DendSom => TilingSpec::new(
                image_rows,
                image_cols,
                self.patch[0],
                self.patch[1],
                self.stride[0],
                self.stride[1],
            ),
        }
    }

    pub fn schedule(&self) -> Result<DecaySchedule> {
        DecaySchedule::new(
            self.alpha0,
            self.resolved_sigma0(),
            self.lambda,
            self.alpha_crit,
            self.r_exp,
        )
    }

    /// Build the trial model for a label space of `n_labels`.
    pub fn build_model(
        &self,
        image_rows: usize,
        image_cols: usize,
        n_labels: usize,
        seed: u64,
    ) -> Result<DendSomModel> {
        DendSomModel::new(
            self.tiling(image_rows, image_cols)?,
            self.units[0],
            self.units[1],
            self.rule,
            self.schedule()?,
            n_labels,
            seed,
        )
    }

    /// Cheap structural validation, run before any data is loaded.
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        let side = self.dataset.image_side();
        self.tiling(side, side)?;
        self.schedule()?;
        Ok(())
    }

    /// Apply a `key=value` override onto the serialized form of the config,
    /// so every field reachable by name is settable from the command line.
    /// Comma-separated values become arrays.
    pub fn with_override(&self, key: &str, value: &str) -> Result<ExperimentConfig> {
        let mut table = match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => t,
            _ => return Err(Error::Config("config did not serialize to a table".into())),
        };
        if !table.contains_key(key) && key != "output_dir" {
            return Err(Error::Config(format!("unknown config key {key:?}")));
        }
        table.insert(key.to_string(), parse_override_value(value));
        let config: ExperimentConfig = toml::Value::Table(table).try_into().map_err(|e| {
            Error::Config(format!("override {key}={value} does not fit: {e}"))
        })?;
        Ok(config)
    }

    /// SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

fn parse_override_value(value: &str) -> toml::Value {
    if value.contains(',') {
        let items: Vec<toml::Value> = value.split(',').map(parse_override_value).collect();
        return toml::Value::Array(items);
    }
    let value = value.trim();
    if let Ok(i) = value.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = value.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = value.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(value.to_string())
    }
}

/// Load a config from a TOML file.
pub fn read_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(toml::from_str(&text)?)
}

/// One trial's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub seconds: f64,
}

/// Aggregated result of `n_trials` seeded runs of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub trials: Vec<TrialOutcome>,
    pub mean: f64,
    /// Sample standard deviation (N-1 denominator); 0 for a single trial.
    pub std_dev: f64,
    /// Per-trial scenario details; present for incremental-learning runs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scenarios: Option<Vec<ScenarioResult>>,
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

fn run_one_trial(
    config: &ExperimentConfig,
    train: &LabeledDataset,
    test: &LabeledDataset,
    trial: usize,
) -> Result<(TrialOutcome, Option<ScenarioResult>)> {
    let seed = config.base_seed + trial as u64;
    let start = Instant::now();
    let (accuracy, scenario_result) = match config.scenario.scenario() {
        None => {
            let mut model = config.build_model(train.rows(), train.cols(), N_LABELS, seed)?;
            let shuffled = train.shuffled(seed);
            let stream = (0..shuffled.len()).map(|i| (shuffled.image(i), shuffled.label(i)));
            model.fit(stream, shuffled.len())?;
            let candidates: Vec<usize> = (0..N_LABELS).collect();
            (evaluate(&model, test, &candidates)?, None)
        }
        Some(scenario) => {
            let train_tasks = make_split(train, &DEFAULT_SPLIT_PAIRS)?;
            let test_tasks = make_split(test, &DEFAULT_SPLIT_PAIRS)?;
            let result = run_scenario(
                |n_labels| config.build_model(train.rows(), train.cols(), n_labels, seed),
                train,
                &train_tasks,
                scenario,
                test,
                &test_tasks,
                seed,
            )?;
            (result.final_accuracy, Some(result))
        }
    };
    let outcome = TrialOutcome {
        trial,
        seed,
        accuracy,
        seconds: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "{} {} {} trial {trial}: accuracy {accuracy:.4} ({:.1}s)",
        config.dataset,
        config.model,
        config.scenario,
        outcome.seconds
    );
    Ok((outcome, scenario_result))
}

/// Run every trial of the configuration: load the dataset once, then one
/// seeded model per trial (`seed = base_seed + trial`). Trials run in
/// parallel when `workers > 1`; results are ordered by trial index.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialReport> {
    config.validate()?;
    let train = load_dataset(config.dataset, &config.data_dir, Split::Train)?;
    let test = load_dataset(config.dataset, &config.data_dir, Split::Test)?;
    if (train.rows(), train.cols()) != (test.rows(), test.cols()) {
        return Err(Error::Config(
            "train and test splits disagree on image shape".into(),
        ));
    }
    // Surface tiling errors against the real image shape before training.
    config.tiling(train.rows(), train.cols())?;

    let results: Vec<(TrialOutcome, Option<ScenarioResult>)> = if config.workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| {
            (0..config.n_trials)
                .into_par_iter()
                .map(|j| run_one_trial(config, &train, &test, j))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        (0..config.n_trials)
            .map(|j| run_one_trial(config, &train, &test, j))
            .collect::<Result<Vec<_>>>()?
    };

    let (trials, scenarios): (Vec<TrialOutcome>, Vec<Option<ScenarioResult>>) =
        results.into_iter().unzip();
    let accuracies: Vec<f64> = trials.iter().map(|t| t.accuracy).collect();
    let (mean, std_dev) = mean_and_std(&accuracies);
    Ok(TrialReport {
        config: config.clone(),
        config_hash: config.hash(),
        trials,
        mean,
        std_dev,
        scenarios: scenarios.into_iter().collect::<Option<Vec<_>>>(),
    })
}

/// Hyperparameters the sweep runner can vary, one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha0,
    AlphaCrit,
    RExp,
    PatchSize,
    UnitsPerMap,
    Lambda,
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha0" => Ok(SweepParameter::Alpha0),
            "alpha_crit" => Ok(SweepParameter::AlphaCrit),
            "r_exp" => Ok(SweepParameter::RExp),
            "patch_size" => Ok(SweepParameter::PatchSize),
            "units_per_map" => Ok(SweepParameter::UnitsPerMap),
            "lambda" => Ok(SweepParameter::Lambda),
            other => Err(Error::UnknownSweepParameter(other.to_string())),
        }
    }
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SweepParameter::Alpha0 => "alpha0",
            SweepParameter::AlphaCrit => "alpha_crit",
            SweepParameter::RExp => "r_exp",
            SweepParameter::PatchSize => "patch_size",
            SweepParameter::UnitsPerMap => "units_per_map",
            SweepParameter::Lambda => "lambda",
        };
        f.write_str(name)
    }
}

fn integer_value(param: SweepParameter, value: f64) -> Result<usize> {
    if value < 1.0 || value.fract() != 0.0 {
        return Err(Error::Config(format!(
            "{param} sweep values must be positive integers, got {value}"
        )));
    }
    Ok(value as usize)
}

/// The configuration with one swept parameter replaced by `value`.
pub fn apply_sweep_value(
    config: &ExperimentConfig,
    param: SweepParameter,
    value: f64,
) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    match param {
        SweepParameter::Alpha0 => c.alpha0 = value,
        SweepParameter::AlphaCrit => c.alpha_crit = value,
        SweepParameter::Lambda => c.lambda = value,
        SweepParameter::RExp => c.r_exp = integer_value(param, value)? as u64,
        SweepParameter::PatchSize => {
            let p = integer_value(param, value)?;
            c.patch = [p, p];
        }
        SweepParameter::UnitsPerMap => {
            let total = integer_value(param, value)?;
            let side = (total as f64).sqrt().round() as usize;
            if side * side != total {
                return Err(Error::Config(format!(
                    "units_per_map must be a perfect square (square maps), got {total}"
                )));
            }
            c.units = [side, side];
        }
    }
    Ok(c)
}

/// Run one `TrialReport` per sweep value, all other settings held fixed.
pub fn run_sweep(
    config: &ExperimentConfig,
    param: SweepParameter,
    values: &[f64],
) -> Result<Vec<(f64, TrialReport)>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| Ok((v, run_experiment(&apply_sweep_value(config, param, v)?)?)))
        .collect()
}

/// Per-trial rows with stable column order.
pub fn write_trials_csv<W: Write>(report: &TrialReport, mut w: W) -> Result<()> {
    writeln!(w, "trial,seed,accuracy,seconds")?;
    for t in &report.trials {
        writeln!(w, "{},{},{},{}", t.trial, t.seed, t.accuracy, t.seconds)?;
    }
    Ok(())
}

/// Parse rows previously written by [`write_trials_csv`].
pub fn read_trials_csv<R: BufRead>(reader: R) -> Result<Vec<TrialOutcome>> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(header)) if header == "trial,seed,accuracy,seconds" => {}
        other => {
            return Err(Error::Config(format!(
                "bad or missing trials CSV header: {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Config(format!("bad trials CSV row: {line:?}")));
        }
        let parse_err = |e: &dyn std::fmt::Display| Error::Config(format!("bad CSV field: {e}"));
        out.push(TrialOutcome {
            trial: fields[0].parse().map_err(|e| parse_err(&e))?,
            seed: fields[1].parse().map_err(|e| parse_err(&e))?,
            accuracy: fields[2].parse().map_err(|e| parse_err(&e))?,
            seconds: fields[3].parse().map_err(|e| parse_err(&e))?,
        });
    }
    Ok(out)
}

/// Sweep summary rows: `value,mean,std`.
pub fn write_sweep_csv<W: Write>(results: &[(f64, TrialReport)], mut w: W) -> Result<()> {
    writeln!(w, "value,mean,std")?;
    for (value, report) in results {
        writeln!(w, "{},{},{}", value, report.mean, report.std_dev)?;
    }
    Ok(())
}

/// Full report as JSON, resolved config included.
pub fn write_report_json<W: Write>(report: &TrialReport, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, report)?;
    Ok(())
}

pub fn read_report_json<R: std::io::Read>(r: R) -> Result<TrialReport> {
    Ok(serde_json::from_reader(r)?)
}
