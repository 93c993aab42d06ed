//! Versioned model snapshots: JSON with a magic header string, carrying the
//! tiling, grid shape, row-major weights, hit matrices, schedule state, and
//! label count.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DendSomModel, HitMatrix, TilingSpec};
use crate::som::{BmuRule, DecaySchedule, SomGrid};

/// Format identifier; bump the trailing digit on breaking layout changes.
pub const SNAPSHOT_MAGIC: &str = "DENDSOM1";

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    magic: String,
    tiling: TilingSpec,
    rule: BmuRule,
    n_labels: usize,
    conventional_gaussian: bool,
    unit_rows: usize,
    unit_cols: usize,
    dim: usize,
    sched: DecaySchedule,
    /// Row-major weights, one vector per map.
    weights: Vec<Vec<f64>>,
    /// Label-major counts, one vector per map.
    hits: Vec<Vec<u64>>,
}

pub fn write_model<W: Write>(model: &DendSomModel, writer: W) -> Result<()> {
    let g0 = &model.grids()[0];
    let snap = Snapshot {
        magic: SNAPSHOT_MAGIC.to_string(),
        tiling: *model.tiling(),
        rule: model.rule(),
        n_labels: model.n_labels(),
        conventional_gaussian: model.conventional_gaussian(),
        unit_rows: g0.rows(),
        unit_cols: g0.cols(),
        dim: g0.dim(),
        sched: model.schedule().clone(),
        weights: model.grids().iter().map(|g| g.weights().to_vec()).collect(),
        hits: model
            .hit_matrices()
            .iter()
            .map(|h| h.counts().to_vec())
            .collect(),
    };
    serde_json::to_writer(writer, &snap)?;
    Ok(())
}

pub fn read_model<R: Read>(reader: R) -> Result<DendSomModel> {
    let snap: Snapshot = serde_json::from_reader(reader)?;
    if snap.magic != SNAPSHOT_MAGIC {
        return Err(Error::BadSnapshotHeader {
            expected: SNAPSHOT_MAGIC,
            found: snap.magic,
        });
    }
    let grids = snap
        .weights
        .into_iter()
        .map(|w| SomGrid::with_weights(snap.unit_rows, snap.unit_cols, snap.dim, w))
        .collect::<Result<Vec<_>>>()?;
    let units = snap.unit_rows * snap.unit_cols;
    let hits = snap
        .hits
        .into_iter()
        .map(|c| HitMatrix::from_counts(snap.n_labels, units, c))
        .collect::<Result<Vec<_>>>()?;
    DendSomModel::from_parts(
        snap.tiling,
        snap.rule,
        snap.n_labels,
        snap.conventional_gaussian,
        snap.sched,
        grids,
        hits,
    )
}

pub fn save_model(model: &DendSomModel, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    write_model(model, BufWriter::new(file))
}

pub fn load_model(path: &Path) -> Result<DendSomModel> {
    let file = File::open(path)?;
    read_model(BufReader::new(file))
}
