//! # dendsom
//!
//! Dendritic self-organizing maps: a single layer of small SOMs tiled over
//! image receptive fields, each with a hit matrix counting (label, BMU)
//! co-occurrences, classified by summed pointwise mutual information. The
//! classical whole-image SOM is the one-tile special case of the same model,
//! which makes baseline comparisons a configuration change.
//!
//! Training is online: one pass, batch size one, a shared exponential decay
//! clock across all maps with periodic rewinds for incremental-learning runs.
//!
//! ## Modules
//!
//! - [`som`] — lattice grids, BMU rules (Euclidean and cosine), decay
//!   schedules, neighborhood kernel, weight updates
//! - [`model`] — receptive-field tiling, hit matrices, the training loop
//! - [`pmi`] — smoothed posterior/prior estimation and PMI label scoring
//! - [`snapshot`] — versioned JSON model persistence
//! - [`data`] — IDX and CIFAR-10 binary loaders, seeded shuffling
//! - [`fetch`] — dataset download/install with pinned SHA-256 checksums
//! - [`continual`] — split protocol and the task-/domain-/class-incremental
//!   evaluation harnesses
//! - [`experiment`] — config-driven trial runner, sweeps, CSV/JSON emission

pub mod continual;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fetch;
pub mod model;
pub mod pmi;
pub mod snapshot;
pub mod som;

pub use continual::{
    evaluate, make_split, run_scenario, Scenario, ScenarioResult, SplitTask, DEFAULT_SPLIT_PAIRS,
};
pub use data::{load_cifar10, load_dataset, load_idx, DatasetName, LabeledDataset, Split};
pub use error::{Error, Result};
pub use experiment::{
    run_experiment, run_sweep, ExperimentConfig, ModelKind, RunKind, SweepParameter, TrialOutcome,
    TrialReport,
};
pub use model::{
    extract_receptive_fields, tile_count, DendSomModel, HitMatrix, TilingSpec,
};
pub use pmi::{pmi, posterior, prior, PmiTables, Prediction};
pub use snapshot::{load_model, save_model, SNAPSHOT_MAGIC};
pub use som::{neighborhood_weight, BmuRule, DecaySchedule, SomGrid, UnitIndex};
