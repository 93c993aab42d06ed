//! Split-protocol task construction and the three incremental-learning
//! evaluation harnesses (task-, domain-, and class-incremental).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, N_LABELS};
use crate::error::{Error, Result};
use crate::model::DendSomModel;
use crate::pmi::PmiTables;

/// The canonical five binary tasks over labels 0-9.
pub const DEFAULT_SPLIT_PAIRS: [(usize, usize); 5] = [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)];

/// How much task information the model receives at test time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Task identity given: prediction is restricted to the task's label pair.
    TaskIl,
    /// Task identity hidden, shared binary output space.
    DomainIl,
    /// Task identity hidden, unified ten-way output space.
    ClassIl,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scenario::TaskIl => write!(f, "task-il"),
            Scenario::DomainIl => write!(f, "domain-il"),
            Scenario::ClassIl => write!(f, "class-il"),
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "task-il" => Ok(Scenario::TaskIl),
            "domain-il" => Ok(Scenario::DomainIl),
            "class-il" => Ok(Scenario::ClassIl),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario {other:?} (expected task-il, domain-il, or class-il)"
            ))),
        }
    }
}

/// Label space a scenario trains and predicts over.
pub fn scenario_label_space(scenario: Scenario) -> usize {
    match scenario {
        Scenario::DomainIl => 2,
        Scenario::TaskIl | Scenario::ClassIl => N_LABELS,
    }
}

/// One binary task of the split protocol: an ordered label pair and the
/// dataset indices carrying those labels, in dataset order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitTask {
    pub task_id: usize,
    pub global_labels: (usize, usize),
    pub indices: Vec<usize>,
}

impl SplitTask {
    /// Within-task label (0 or 1) of a global label, when it belongs here.
    pub fn local_label(&self, global: usize) -> Option<usize> {
        if global == self.global_labels.0 {
            Some(0)
        } else if global == self.global_labels.1 {
            Some(1)
        } else {
            None
        }
    }
}

/// Partition a dataset into binary tasks along the given ordered label pairs.
/// Pairs must be disjoint and cover every label present in the dataset;
/// within-task sample order follows dataset order.
pub fn make_split(ds: &LabeledDataset, pairs: &[(usize, usize)]) -> Result<Vec<SplitTask>> {
    if pairs.is_empty() {
        return Err(Error::BadSplit("no label pairs given".into()));
    }
    let mut owner = vec![usize::MAX; N_LABELS];
    for (task_id, &(a, b)) in pairs.iter().enumerate() {
        if a == b {
            return Err(Error::BadSplit(format!("pair ({a}, {b}) repeats a label")));
        }
        for l in [a, b] {
            if l >= N_LABELS {
                return Err(Error::BadSplit(format!("label {l} out of range")));
            }
            if owner[l] != usize::MAX {
                return Err(Error::BadSplit(format!(
                    "label {l} appears in more than one pair"
                )));
            }
            owner[l] = task_id;
        }
    }
    if let Some(&uncovered) = ds.labels().iter().find(|&&l| owner[l] == usize::MAX) {
        return Err(Error::BadSplit(format!(
            "dataset label {uncovered} is not covered by any pair"
        )));
    }
    let mut tasks: Vec<SplitTask> = pairs
        .iter()
        .enumerate()
        .map(|(task_id, &global_labels)| SplitTask {
            task_id,
            global_labels,
            indices: Vec::new(),
        })
        .collect();
    for (i, &label) in ds.labels().iter().enumerate() {
        tasks[owner[label]].indices.push(i);
    }
    Ok(tasks)
}

/// Per-task and aggregate accuracies of one sequential training run.
///
/// `accuracy_after_each_task[r][c]` is the accuracy on test task `c` after
/// training through task `r`; cells with `c > r` probe untrained tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub per_task_accuracy: Vec<f64>,
    pub accuracy_after_each_task: Vec<Vec<f64>>,
    pub final_accuracy: f64,
}

/// Emit the accuracy matrix as CSV rows (trained_through_task, eval_task,
/// accuracy).
pub fn write_curves_csv<W: std::io::Write>(result: &ScenarioResult, mut w: W) -> Result<()> {
    writeln!(w, "trained_through_task,eval_task,accuracy")?;
    for (r, row) in result.accuracy_after_each_task.iter().enumerate() {
        for (c, acc) in row.iter().enumerate() {
            writeln!(w, "{r},{c},{acc}")?;
        }
    }
    Ok(())
}

/// Top-1 accuracy of the model on a dataset, predicting over `candidates`.
pub fn evaluate(model: &DendSomModel, ds: &LabeledDataset, candidates: &[usize]) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let tables = PmiTables::new(model);
    let correct = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let p = model
                .predict_with(&tables, ds.image(i), candidates)
                .expect("dataset images match the model tiling");
            u64::from(p.label == ds.label(i))
        })
        .sum::<u64>();
    Ok(correct as f64 / ds.len() as f64)
}

/// Correct counts on one test task. Returns (scenario-correct, total) plus
/// the unrestricted ten-way correct count when `scenario` is task-IL, for the
/// dominance check.
fn eval_task(
    model: &DendSomModel,
    tables: &PmiTables,
    test_ds: &LabeledDataset,
    task: &SplitTask,
    scenario: Scenario,
) -> Result<(u64, u64, u64)> {
    let all_labels: Vec<usize> = (0..model.n_labels()).collect();
    let pair = [task.global_labels.0, task.global_labels.1];
    let (correct, class_correct) = task
        .indices
        .par_iter()
        .map(|&i| {
            let truth_global = test_ds.label(i);
            let image = test_ds.image(i);
            match scenario {
                Scenario::DomainIl => {
                    let truth_local = task
                        .local_label(truth_global)
                        .expect("test sample belongs to its task");
                    let p = model
                        .predict_with(tables, image, &[0, 1])
                        .expect("evaluation inputs are valid");
                    (u64::from(p.label == truth_local), 0u64)
                }
                Scenario::ClassIl => {
                    let p = model
                        .predict_with(tables, image, &all_labels)
                        .expect("evaluation inputs are valid");
                    (u64::from(p.label == truth_global), 0u64)
                }
                Scenario::TaskIl => {
                    // One score pass serves both the restricted and the
                    // unrestricted decision; scores are candidate-independent.
                    let p = model
                        .predict_with(tables, image, &all_labels)
                        .expect("evaluation inputs are valid");
                    let pair_scores: Vec<(usize, f64)> = p
                        .scores
                        .iter()
                        .filter(|(l, _)| pair.contains(l))
                        .copied()
                        .collect();
                    let restricted = tables.select_label(&pair_scores);
                    (
                        u64::from(restricted == truth_global),
                        u64::from(p.label == truth_global),
                    )
                }
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((correct, task.indices.len() as u64, class_correct))
}

/// Train a fresh model over the tasks strictly sequentially (one pass,
/// within-task order shuffled by `seed`) and measure accuracy on every test
/// task after each training task.
///
/// The factory receives the scenario's label-space size: 2 for domain-IL,
/// 10 otherwise. Domain-IL maps training labels to their within-task value
/// before each step; task-IL restricts prediction to the true task's pair;
/// class-IL predicts over all ten labels.
pub fn run_scenario<F>(
    model_factory: F,
    train_ds: &LabeledDataset,
    train_tasks: &[SplitTask],
    scenario: Scenario,
    test_ds: &LabeledDataset,
    test_tasks: &[SplitTask],
    seed: u64,
) -> Result<ScenarioResult>
where
    F: Fn(usize) -> Result<DendSomModel>,
{
    if train_tasks.len() != test_tasks.len()
        || train_tasks
            .iter()
            .zip(test_tasks)
            .any(|(a, b)| a.global_labels != b.global_labels)
    {
        return Err(Error::ScenarioMismatch(
            "train and test tasks must list the same label pairs in the same order".into(),
        ));
    }
    let n_labels = scenario_label_space(scenario);
    let mut model = model_factory(n_labels)?;
    if model.n_labels() != n_labels {
        return Err(Error::ScenarioMismatch(format!(
            "{scenario} needs a model with {n_labels} labels, factory built {}",
            model.n_labels()
        )));
    }
    if scenario != Scenario::DomainIl {
        for task in train_tasks {
            if task.global_labels.0 >= n_labels || task.global_labels.1 >= n_labels {
                return Err(Error::ScenarioMismatch(format!(
                    "task labels {:?} exceed the model's label space",
                    task.global_labels
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next_index = 1u64;
    let mut accuracy_after_each_task = Vec::with_capacity(train_tasks.len());
    let mut final_counts: Vec<(u64, u64)> = Vec::new();

    for task in train_tasks {
        let mut order = task.indices.clone();
        order.shuffle(&mut rng);
        let stream = order.iter().map(|&i| {
            let global = train_ds.label(i);
            let label = match scenario {
                Scenario::DomainIl => task
                    .local_label(global)
                    .expect("training sample belongs to its task"),
                _ => global,
            };
            (train_ds.image(i), label)
        });
        next_index = model.fit_from(stream, next_index)?;

        let tables = PmiTables::new(&model);
        let mut row = Vec::with_capacity(test_tasks.len());
        let mut counts = Vec::with_capacity(test_tasks.len());
        for test_task in test_tasks {
            let (correct, total, class_correct) =
                eval_task(&model, &tables, test_ds, test_task, scenario)?;
            // Candidate restriction can only remove wrong answers when the
            // true label stays in the set.
            assert!(
                scenario != Scenario::TaskIl || correct >= class_correct,
                "task-IL accuracy fell below the unrestricted accuracy"
            );
            row.push(if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            });
            counts.push((correct, total));
        }
        accuracy_after_each_task.push(row);
        final_counts = counts;
    }

    let per_task_accuracy = accuracy_after_each_task
        .last()
        .cloned()
        .ok_or(Error::EmptyDataset)?;
    let final_accuracy = match scenario {
        Scenario::TaskIl | Scenario::DomainIl => {
            per_task_accuracy.iter().sum::<f64>() / per_task_accuracy.len() as f64
        }
        Scenario::ClassIl => {
            let correct: u64 = final_counts.iter().map(|c| c.0).sum();
            let total: u64 = final_counts.iter().map(|c| c.1).sum();
            correct as f64 / total as f64
        }
    };
    Ok(ScenarioResult {
        scenario,
        per_task_accuracy,
        accuracy_after_each_task,
        final_accuracy,
    })
}
