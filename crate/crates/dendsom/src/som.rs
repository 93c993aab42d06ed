//! Single-map primitives: lattice geometry, best-matching-unit selection,
//! decay schedules, the neighborhood kernel, and the weight-update step.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound of the uniform weight-initialization range.
pub const INIT_WEIGHT_MAX: f64 = 0.1;

/// Unit count above which single-map BMU search and updates go parallel.
const PAR_WORK_THRESHOLD: usize = 32_768;

/// Which similarity measure selects the best-matching unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BmuRule {
    Euclidean,
    Cosine,
}

impl std::fmt::Display for BmuRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BmuRule::Euclidean => write!(f, "euclidean"),
            BmuRule::Cosine => write!(f, "cosine"),
        }
    }
}

impl std::str::FromStr for BmuRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(BmuRule::Euclidean),
            "cosine" => Ok(BmuRule::Cosine),
            other => Err(Error::InvalidParameter(format!(
                "unknown BMU rule {other:?} (expected \"euclidean\" or \"cosine\")"
            ))),
        }
    }
}

/// A unit's location on the lattice, addressable linearly and by coordinates.
///
/// `linear == row * cols + col` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitIndex {
    pub linear: usize,
    pub row: usize,
    pub col: usize,
}

impl UnitIndex {
    pub fn from_linear(linear: usize, cols: usize) -> Self {
        UnitIndex {
            linear,
            row: linear / cols,
            col: linear % cols,
        }
    }

    pub fn from_coords(row: usize, col: usize, cols: usize) -> Self {
        UnitIndex {
            linear: row * cols + col,
            row,
            col,
        }
    }

    /// Squared Euclidean distance between two lattice positions.
    pub fn lattice_distance_sq(&self, other: &UnitIndex) -> usize {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        dr * dr + dc * dc
    }
}

/// Exponential decay state shared by every map during training.
///
/// `t` is the global training step; `learning_rate` and `neighborhood_radius`
/// both decay as `exp(-t / lambda)` from their initial values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySchedule {
    pub alpha0: f64,
    pub sigma0: f64,
    pub lambda: f64,
    pub alpha_crit: f64,
    pub r_exp: u64,
    pub t: u64,
}

impl DecaySchedule {
    pub fn new(alpha0: f64, sigma0: f64, lambda: f64, alpha_crit: f64, r_exp: u64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha0 must be in (0, 1], got {alpha0}"
            )));
        }
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma0 must be positive, got {sigma0}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(alpha_crit > 0.0 && alpha_crit < alpha0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_crit must satisfy 0 < alpha_crit < alpha0, got {alpha_crit}"
            )));
        }
        if r_exp == 0 {
            return Err(Error::InvalidParameter("r_exp must be >= 1".into()));
        }
        let sched = DecaySchedule {
            alpha0,
            sigma0,
            lambda,
            alpha_crit,
            r_exp,
            t: 0,
        };
        if sched.iter_crit() == 0 {
            return Err(Error::InvalidParameter(format!(
                "iter_crit = floor(lambda * ln(alpha0 / alpha_crit)) must be >= 1, \
                 got 0 for alpha0={alpha0}, alpha_crit={alpha_crit}, lambda={lambda}"
            )));
        }
        Ok(sched)
    }

    /// Current learning rate `alpha0 * exp(-t / lambda)`.
    pub fn learning_rate(&self) -> f64 {
        self.alpha0 * (-(self.t as f64) / self.lambda).exp()
    }

    /// Current neighborhood radius `sigma0 * exp(-t / lambda)`.
    pub fn neighborhood_radius(&self) -> f64 {
        self.sigma0 * (-(self.t as f64) / self.lambda).exp()
    }

    /// Number of steps after which the clock is rewound:
    /// `floor(lambda * ln(alpha0 / alpha_crit))`.
    pub fn iter_crit(&self) -> u64 {
        (self.lambda * (self.alpha0 / self.alpha_crit).ln()).floor() as u64
    }

    /// Advance the shared clock by one training sample.
    pub fn advance(&mut self) {
        self.t += 1;
    }

    /// Rewind the clock to `floor(t / r_exp)`.
    pub fn rewind(&mut self) {
        self.t /= self.r_exp;
    }
}

/// Gaussian lattice kernel `exp(-d^2 / (2 sigma))` between a unit and the BMU.
///
/// The denominator is `2 sigma`, not `2 sigma^2`; see `conventional_gaussian`
/// on [`crate::model::DendSomModel`] builders for the ablation variant.
pub fn neighborhood_weight(unit: UnitIndex, bmu: UnitIndex, sigma: f64) -> f64 {
    let d2 = unit.lattice_distance_sq(&bmu) as f64;
    (-d2 / (2.0 * sigma)).exp()
}

/// A rectangular lattice of units, each holding a weight vector of length `dim`.
///
/// Weights are stored row-major: unit `u` owns `weights[u*dim .. (u+1)*dim]`,
/// and unit `u` sits at lattice position `(u / cols, u % cols)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomGrid {
    rows: usize,
    cols: usize,
    dim: usize,
    weights: Vec<f64>,
}

impl SomGrid {
    /// Build a grid from explicit weights (row-major, `rows*cols` x `dim`).
    pub fn with_weights(rows: usize, cols: usize, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive, got {rows}x{cols} with dim {dim}"
            )));
        }
        if weights.len() != rows * cols * dim {
            return Err(Error::DimensionMismatch {
                what: "grid weights",
                expected: rows * cols * dim,
                actual: weights.len(),
            });
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::NonFinite("grid weights"));
        }
        Ok(SomGrid {
            rows,
            cols,
            dim,
            weights,
        })
    }

    /// Random initialization: i.i.d. uniform on `[0, INIT_WEIGHT_MAX)`.
    pub fn random<R: Rng>(rows: usize, cols: usize, dim: usize, rng: &mut R) -> Result<Self> {
        if rows == 0 || cols == 0 || dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive, got {rows}x{cols} with dim {dim}"
            )));
        }
        let weights = (0..rows * cols * dim)
            .map(|_| rng.gen_range(0.0..INIT_WEIGHT_MAX))
            .collect();
        Ok(SomGrid {
            rows,
            cols,
            dim,
            weights,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn units(&self) -> usize {
        self.rows * self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, unit: usize) -> &[f64] {
        &self.weights[unit * self.dim..(unit + 1) * self.dim]
    }

    pub fn unit_index(&self, linear: usize) -> UnitIndex {
        UnitIndex::from_linear(linear, self.cols)
    }

    /// Largest squared lattice distance on this grid.
    pub(crate) fn max_lattice_distance_sq(&self) -> usize {
        (self.rows - 1) * (self.rows - 1) + (self.cols - 1) * (self.cols - 1)
    }

    fn check_patch(&self, patch: &[f64]) -> Result<()> {
        if patch.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "patch",
                expected: self.dim,
                actual: patch.len(),
            });
        }
        Ok(())
    }

    /// Best-matching unit under the given rule. Ties break to the smallest
    /// linear index.
    pub fn bmu(&self, rule: BmuRule, patch: &[f64]) -> Result<UnitIndex> {
        match rule {
            BmuRule::Euclidean => self.bmu_euclidean(patch),
            BmuRule::Cosine => self.bmu_cosine(patch),
        }
    }

    /// Unit minimizing the squared Euclidean distance to `patch`.
    pub fn bmu_euclidean(&self, patch: &[f64]) -> Result<UnitIndex> {
        self.check_patch(patch)?;
        let best = if self.weights.len() >= PAR_WORK_THRESHOLD {
            (0..self.units())
                .into_par_iter()
                .with_min_len(64)
                .map(|u| (squared_distance(self.weight(u), patch), u))
                .reduce_with(min_by_score)
                .expect("grid has at least one unit")
        } else {
            (0..self.units())
                .map(|u| (squared_distance(self.weight(u), patch), u))
                .reduce(min_by_score)
                .expect("grid has at least one unit")
        };
        Ok(self.unit_index(best.1))
    }

    /// Unit maximizing cosine similarity to `patch`. A zero-norm patch or
    /// zero-norm weight vector contributes similarity 0 for that pairing.
    pub fn bmu_cosine(&self, patch: &[f64]) -> Result<UnitIndex> {
        self.check_patch(patch)?;
        let patch_norm = squared_norm(patch).sqrt();
        let best = if self.weights.len() >= PAR_WORK_THRESHOLD {
            (0..self.units())
                .into_par_iter()
                .with_min_len(64)
                .map(|u| (cosine_similarity_with_norm(self.weight(u), patch, patch_norm), u))
                .reduce_with(max_by_score)
                .expect("grid has at least one unit")
        } else {
            (0..self.units())
                .map(|u| (cosine_similarity_with_norm(self.weight(u), patch, patch_norm), u))
                .reduce(max_by_score)
                .expect("grid has at least one unit")
        };
        Ok(self.unit_index(best.1))
    }

    /// Move every unit toward `patch`:
    /// `w_i' = w_i + alpha(t) * h(i, bmu, sigma(t)) * (patch - w_i)`.
    pub fn update_weights(
        &mut self,
        patch: &[f64],
        bmu: UnitIndex,
        sched: &DecaySchedule,
    ) -> Result<()> {
        self.check_patch(patch)?;
        if bmu.linear >= self.units() || bmu.linear != bmu.row * self.cols + bmu.col {
            return Err(Error::InvalidParameter(format!(
                "bmu index {:?} is not a valid unit of a {}x{} grid",
                bmu, self.rows, self.cols
            )));
        }
        if !patch.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("patch"));
        }
        let alpha = sched.learning_rate();
        let sigma = sched.neighborhood_radius();
        let h_table = neighborhood_table(self.max_lattice_distance_sq(), 2.0 * sigma);
        self.update_with_table(patch, bmu.linear, alpha, &h_table);
        if !self.weights.iter().all(|w| w.is_finite()) {
            return Err(Error::NonFinite("updated weights"));
        }
        Ok(())
    }

    /// Hot-path update with a precomputed `exp(-d2 / (2 sigma))` lookup,
    /// indexed by squared lattice distance.
    pub(crate) fn update_with_table(
        &mut self,
        patch: &[f64],
        bmu_linear: usize,
        alpha: f64,
        h_table: &[f64],
    ) {
        debug_assert_eq!(patch.len(), self.dim);
        let cols = self.cols;
        let dim = self.dim;
        let bmu_row = bmu_linear / cols;
        let bmu_col = bmu_linear % cols;
        let update_unit = |(u, w): (usize, &mut [f64])| {
            let dr = (u / cols).abs_diff(bmu_row);
            let dc = (u % cols).abs_diff(bmu_col);
            let gain = alpha * h_table[dr * dr + dc * dc];
            if gain == 1.0 {
                // A full step lands exactly on the patch.
                w.copy_from_slice(patch);
            } else {
                for (wi, xi) in w.iter_mut().zip(patch) {
                    *wi += gain * (xi - *wi);
                }
            }
        };
        if self.weights.len() >= PAR_WORK_THRESHOLD {
            self.weights
                .par_chunks_mut(dim)
                .enumerate()
                .with_min_len(64)
                .for_each(update_unit);
        } else {
            self.weights
                .chunks_exact_mut(dim)
                .enumerate()
                .for_each(update_unit);
        }
    }
}

/// Kernel values `exp(-d2 / denom)` for every squared lattice distance up to
/// `max_d2`, so one table serves all identically-shaped grids in a step.
pub(crate) fn neighborhood_table(max_d2: usize, denom: f64) -> Vec<f64> {
    (0..=max_d2).map(|d2| (-(d2 as f64) / denom).exp()).collect()
}

#[inline]
fn squared_distance(w: &[f64], x: &[f64]) -> f64 {
    w.iter()
        .zip(x)
        .map(|(wi, xi)| {
            let d = wi - xi;
            d * d
        })
        .sum()
}

#[inline]
fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Cosine similarity given a precomputed patch norm; 0 when either norm is 0.
#[inline]
fn cosine_similarity_with_norm(w: &[f64], x: &[f64], x_norm: f64) -> f64 {
    let mut dot = 0.0;
    let mut w_sq = 0.0;
    for (wi, xi) in w.iter().zip(x) {
        dot += wi * xi;
        w_sq += wi * wi;
    }
    let denom = w_sq.sqrt() * x_norm;
    if denom > 0.0 {
        dot / denom
    } else {
        0.0
    }
}

/// Cosine similarity between two vectors; 0 when either has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    cosine_similarity_with_norm(a, b, squared_norm(b).sqrt())
}

#[inline]
fn min_by_score(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    // Strict `<` keeps the smaller index on equal scores.
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

#[inline]
fn max_by_score(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}
