//! The tiled-map model: receptive-field extraction, per-map BMU computation,
//! hit-matrix accumulation, and the training loop with periodic clock rewinds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::som::{neighborhood_table, BmuRule, DecaySchedule, SomGrid};

/// Number of tiles along one axis: `floor((n - p) / s) + 1`.
pub fn tile_count(n: usize, p: usize, s: usize) -> Result<usize> {
    if n == 0 || p == 0 || s == 0 {
        return Err(Error::InvalidParameter(format!(
            "tile_count arguments must be positive, got n={n}, p={p}, s={s}"
        )));
    }
    if p > n {
        return Err(Error::InvalidParameter(format!(
            "patch extent {p} exceeds image extent {n}"
        )));
    }
    Ok((n - p) / s + 1)
}

/// Strided tiling of a fixed image shape into rectangular receptive fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingSpec {
    pub image_rows: usize,
    pub image_cols: usize,
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub stride_rows: usize,
    pub stride_cols: usize,
}

impl TilingSpec {
    pub fn new(
        image_rows: usize,
        image_cols: usize,
        patch_rows: usize,
        patch_cols: usize,
        stride_rows: usize,
        stride_cols: usize,
    ) -> Result<Self> {
        let spec = TilingSpec {
            image_rows,
            image_cols,
            patch_rows,
            patch_cols,
            stride_rows,
            stride_cols,
        };
        // tile_count validates positivity and patch <= image per axis.
        tile_count(image_rows, patch_rows, stride_rows)?;
        tile_count(image_cols, patch_cols, stride_cols)?;
        Ok(spec)
    }

    /// One tile covering the whole image; the classical single-map layout.
    pub fn whole_image(image_rows: usize, image_cols: usize) -> Result<Self> {
        TilingSpec::new(image_rows, image_cols, image_rows, image_cols, 1, 1)
    }

    pub fn tiles_rows(&self) -> usize {
        (self.image_rows - self.patch_rows) / self.stride_rows + 1
    }

    pub fn tiles_cols(&self) -> usize {
        (self.image_cols - self.patch_cols) / self.stride_cols + 1
    }

    pub fn n_tiles(&self) -> usize {
        self.tiles_rows() * self.tiles_cols()
    }

    pub fn patch_len(&self) -> usize {
        self.patch_rows * self.patch_cols
    }

    pub fn image_len(&self) -> usize {
        self.image_rows * self.image_cols
    }
}

/// All receptive fields of a row-major image, each flattened row-major.
/// Patch (a, b) has its top-left pixel at (a * stride_rows, b * stride_cols);
/// the list is ordered row-major over (a, b).
pub fn extract_receptive_fields(image: &[f64], tiling: &TilingSpec) -> Result<Vec<Vec<f64>>> {
    let mut flat = Vec::new();
    extract_into(image, tiling, &mut flat)?;
    let k = tiling.patch_len();
    Ok(flat.chunks_exact(k).map(|p| p.to_vec()).collect())
}

/// Flat-buffer variant used on the training path; `out` is cleared and filled
/// with `n_tiles * patch_len` values.
pub(crate) fn extract_into(image: &[f64], tiling: &TilingSpec, out: &mut Vec<f64>) -> Result<()> {
    if image.len() != tiling.image_len() {
        return Err(Error::DimensionMismatch {
            what: "image",
            expected: tiling.image_len(),
            actual: image.len(),
        });
    }
    out.clear();
    out.reserve(tiling.n_tiles() * tiling.patch_len());
    let cols = tiling.image_cols;
    for a in 0..tiling.tiles_rows() {
        let r0 = a * tiling.stride_rows;
        for b in 0..tiling.tiles_cols() {
            let c0 = b * tiling.stride_cols;
            for r in r0..r0 + tiling.patch_rows {
                let row = &image[r * cols + c0..r * cols + c0 + tiling.patch_cols];
                out.extend_from_slice(row);
            }
        }
    }
    Ok(())
}

/// Per-map counts of (label, unit) BMU co-occurrences, label-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitMatrix {
    n_labels: usize,
    n_units: usize,
    counts: Vec<u64>,
}

impl HitMatrix {
    pub fn new(n_labels: usize, n_units: usize) -> Self {
        HitMatrix {
            n_labels,
            n_units,
            counts: vec![0; n_labels * n_units],
        }
    }

    pub fn from_counts(n_labels: usize, n_units: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_labels * n_units {
            return Err(Error::DimensionMismatch {
                what: "hit matrix counts",
                expected: n_labels * n_units,
                actual: counts.len(),
            });
        }
        Ok(HitMatrix {
            n_labels,
            n_units,
            counts,
        })
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, label: usize, unit: usize) -> u64 {
        self.counts[label * self.n_units + unit]
    }

    pub fn increment(&mut self, label: usize, unit: usize) {
        self.counts[label * self.n_units + unit] += 1;
    }

    /// Row sum: how often `label` occurred.
    pub fn label_total(&self, label: usize) -> u64 {
        self.counts[label * self.n_units..(label + 1) * self.n_units]
            .iter()
            .sum()
    }

    /// Column sum: how often `unit` was the BMU.
    pub fn unit_total(&self, unit: usize) -> u64 {
        self.counts[unit..]
            .iter()
            .step_by(self.n_units)
            .take(self.n_labels)
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// A single layer of identically-shaped maps tiled over image receptive
/// fields, one hit matrix per map, and one shared decay schedule.
///
/// With a whole-image tiling (one tile) this is exactly the classical
/// single-map model, so the same type serves both architectures.
#[derive(Debug, Clone, PartialEq)]
pub struct DendSomModel {
    tiling: TilingSpec,
    rule: BmuRule,
    n_labels: usize,
    conventional_gaussian: bool,
    sched: DecaySchedule,
    grids: Vec<SomGrid>,
    hits: Vec<HitMatrix>,
}

impl DendSomModel {
    /// Build a model with seeded random weights.
    pub fn new(
        tiling: TilingSpec,
        unit_rows: usize,
        unit_cols: usize,
        rule: BmuRule,
        sched: DecaySchedule,
        n_labels: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_labels == 0 {
            return Err(Error::InvalidParameter("n_labels must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_tiles = tiling.n_tiles();
        let dim = tiling.patch_len();
        let mut grids = Vec::with_capacity(n_tiles);
        for _ in 0..n_tiles {
            grids.push(SomGrid::random(unit_rows, unit_cols, dim, &mut rng)?);
        }
        let units = unit_rows * unit_cols;
        let hits = vec![HitMatrix::new(n_labels, units); n_tiles];
        Ok(DendSomModel {
            tiling,
            rule,
            n_labels,
            conventional_gaussian: false,
            sched,
            grids,
            hits,
        })
    }

    /// Reassemble a model from its parts, enforcing the structural invariants.
    pub fn from_parts(
        tiling: TilingSpec,
        rule: BmuRule,
        n_labels: usize,
        conventional_gaussian: bool,
        sched: DecaySchedule,
        grids: Vec<SomGrid>,
        hits: Vec<HitMatrix>,
    ) -> Result<Self> {
        let n_tiles = tiling.n_tiles();
        if grids.len() != n_tiles || hits.len() != n_tiles {
            return Err(Error::Config(format!(
                "expected {n_tiles} grids and hit matrices, got {} and {}",
                grids.len(),
                hits.len()
            )));
        }
        let (rows, cols) = (grids[0].rows(), grids[0].cols());
        for g in &grids {
            if g.rows() != rows || g.cols() != cols || g.dim() != tiling.patch_len() {
                return Err(Error::Config(
                    "all grids must share (rows, cols) and have dim equal to the patch length"
                        .into(),
                ));
            }
        }
        let total = hits[0].total();
        for h in &hits {
            if h.n_labels() != n_labels || h.n_units() != rows * cols {
                return Err(Error::Config(
                    "hit matrix shape must be n_labels x units".into(),
                ));
            }
            if h.total() != total {
                return Err(Error::Config(
                    "hit matrices must share one total count".into(),
                ));
            }
        }
        Ok(DendSomModel {
            tiling,
            rule,
            n_labels,
            conventional_gaussian,
            sched,
            grids,
            hits,
        })
    }

    /// Use the `2 sigma^2` kernel denominator instead of the default
    /// `2 sigma`. Off by default; kept for ablation runs.
    pub fn with_conventional_gaussian(mut self, enabled: bool) -> Self {
        self.conventional_gaussian = enabled;
        self
    }

    pub fn tiling(&self) -> &TilingSpec {
        &self.tiling
    }

    pub fn rule(&self) -> BmuRule {
        self.rule
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn conventional_gaussian(&self) -> bool {
        self.conventional_gaussian
    }

    pub fn schedule(&self) -> &DecaySchedule {
        &self.sched
    }

    pub fn grids(&self) -> &[SomGrid] {
        &self.grids
    }

    pub fn hit_matrices(&self) -> &[HitMatrix] {
        &self.hits
    }

    pub fn n_maps(&self) -> usize {
        self.grids.len()
    }

    /// Total hit count, identical across all maps by construction.
    pub fn samples_seen(&self) -> u64 {
        self.hits[0].total()
    }

    fn check_image(&self, image: &[f64]) -> Result<()> {
        if image.len() != self.tiling.image_len() {
            return Err(Error::DimensionMismatch {
                what: "image",
                expected: self.tiling.image_len(),
                actual: image.len(),
            });
        }
        if !image.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("image"));
        }
        Ok(())
    }

    fn kernel_denominator(&self, sigma: f64) -> f64 {
        if self.conventional_gaussian {
            2.0 * sigma * sigma
        } else {
            2.0 * sigma
        }
    }

    /// One training sample: per map, find the BMU of its patch, update the
    /// map's weights, and count (label, BMU); then advance the shared clock.
    ///
    /// The maps touch disjoint state, so they are processed in parallel.
    pub fn train_step(&mut self, image: &[f64], label: usize) -> Result<()> {
        if label >= self.n_labels {
            return Err(Error::LabelOutOfRange {
                label,
                n_labels: self.n_labels,
            });
        }
        self.check_image(image)?;
        let mut patches = Vec::new();
        extract_into(image, &self.tiling, &mut patches)?;
        let alpha = self.sched.learning_rate();
        let sigma = self.sched.neighborhood_radius();
        let denom = self.kernel_denominator(sigma);
        let h_table = neighborhood_table(self.grids[0].max_lattice_distance_sq(), denom);
        let rule = self.rule;
        let k = self.tiling.patch_len();
        self.grids
            .par_iter_mut()
            .zip_eq(self.hits.par_iter_mut())
            .zip_eq(patches.par_chunks_exact(k))
            .with_min_len(8)
            .for_each(|((grid, hits), patch)| {
                let bmu = grid
                    .bmu(rule, patch)
                    .expect("patch length matches grid dim by construction");
                grid.update_with_table(patch, bmu.linear, alpha, &h_table);
                hits.increment(label, bmu.linear);
            });
        self.sched.advance();
        Ok(())
    }

    /// Rewind the shared clock to `floor(t / r_exp)` whenever the 1-based
    /// sample index is a multiple of `iter_crit`.
    pub fn maybe_rewind_schedule(&mut self, step_index: u64) {
        if step_index > 0 && step_index % self.sched.iter_crit() == 0 {
            self.sched.rewind();
        }
    }

    /// Train on `n_iter` samples from the stream, in order, exactly once:
    /// `train_step` followed by the rewind check for each sample.
    pub fn fit<'a, I>(&mut self, stream: I, n_iter: usize) -> Result<()>
    where
        I: IntoIterator<Item = (&'a [f64], usize)>,
    {
        let mut it = stream.into_iter();
        if n_iter == 0 {
            if it.next().is_none() {
                return Err(Error::EmptyStream);
            }
            return Ok(());
        }
        let consumed = self.fit_from(it.by_ref().take(n_iter), 1)? - 1;
        if consumed == 0 {
            return Err(Error::EmptyStream);
        }
        if (consumed as usize) < n_iter {
            return Err(Error::StreamTooShort {
                requested: n_iter,
                got: consumed as usize,
            });
        }
        Ok(())
    }

    /// Training continuation with an explicit global 1-based sample index,
    /// so sequential task streams share one rewind counter. Returns the next
    /// index after the consumed stream.
    pub(crate) fn fit_from<'a, I>(&mut self, stream: I, first_index: u64) -> Result<u64>
    where
        I: IntoIterator<Item = (&'a [f64], usize)>,
    {
        let mut i = first_index;
        for (image, label) in stream {
            self.train_step(image, label)?;
            self.maybe_rewind_schedule(i);
            i += 1;
        }
        Ok(i)
    }

    /// Inference-time BMUs, one linear unit index per map. Weights and counts
    /// are left untouched.
    pub fn bmus_for(&self, image: &[f64]) -> Result<Vec<usize>> {
        self.check_image(image)?;
        let mut patches = Vec::new();
        extract_into(image, &self.tiling, &mut patches)?;
        let k = self.tiling.patch_len();
        self.grids
            .iter()
            .zip(patches.chunks_exact(k))
            .map(|(grid, patch)| grid.bmu(self.rule, patch).map(|u| u.linear))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::som::UnitIndex;
    use approx::assert_relative_eq;

    fn small_sched() -> DecaySchedule {
        DecaySchedule::new(0.95, 4.0, 1000.0, 0.005, 1).unwrap()
    }

    fn tiny_model(rule: BmuRule) -> DendSomModel {
        let tiling = TilingSpec::new(4, 4, 2, 2, 2, 2).unwrap();
        DendSomModel::new(tiling, 2, 2, rule, small_sched(), 3, 99).unwrap()
    }

    #[test]
    fn tile_count_matches_known_layouts() {
        assert_eq!(tile_count(28, 10, 3).unwrap(), 7);
        assert_eq!(tile_count(32, 4, 2).unwrap(), 15);
        assert_eq!(tile_count(28, 8, 4).unwrap(), 6);
        assert_eq!(tile_count(17, 17, 5).unwrap(), 1);
    }

    #[test]
    fn tile_count_rejects_patch_larger_than_image() {
        assert!(tile_count(8, 9, 1).is_err());
        assert!(tile_count(8, 4, 0).is_err());
    }

    #[test]
    fn extract_single_tile_is_whole_image() {
        let tiling = TilingSpec::whole_image(2, 3).unwrap();
        let image = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let patches = extract_receptive_fields(&image, &tiling).unwrap();
        assert_eq!(patches.len(), 1);
        assert_eq!(patches[0], image.to_vec());
    }

    #[test]
    fn extract_windows_by_position() {
        // 4x4 image of distinct values 0..15, 2x2 patches at stride 2.
        let tiling = TilingSpec::new(4, 4, 2, 2, 2, 2).unwrap();
        let image: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let patches = extract_receptive_fields(&image, &tiling).unwrap();
        assert_eq!(patches.len(), 4);
        assert_eq!(patches[0], vec![0.0, 1.0, 4.0, 5.0]);
        assert_eq!(patches[1], vec![2.0, 3.0, 6.0, 7.0]);
        assert_eq!(patches[2], vec![8.0, 9.0, 12.0, 13.0]);
        assert_eq!(patches[3], vec![10.0, 11.0, 14.0, 15.0]);
    }

    #[test]
    fn extract_count_matches_tile_count_product() {
        let tiling = TilingSpec::new(28, 28, 10, 10, 3, 3).unwrap();
        let image = vec![0.5; 28 * 28];
        let patches = extract_receptive_fields(&image, &tiling).unwrap();
        assert_eq!(patches.len(), 49);
        assert!(patches.iter().all(|p| p.len() == 100));
    }

    #[test]
    fn extract_rejects_shape_mismatch() {
        let tiling = TilingSpec::new(4, 4, 2, 2, 2, 2).unwrap();
        assert!(extract_receptive_fields(&[0.0; 15], &tiling).is_err());
    }

    #[test]
    fn hit_matrix_totals() {
        let mut h = HitMatrix::new(2, 3);
        h.increment(0, 1);
        h.increment(0, 1);
        h.increment(1, 2);
        assert_eq!(h.count(0, 1), 2);
        assert_eq!(h.label_total(0), 2);
        assert_eq!(h.label_total(1), 1);
        assert_eq!(h.unit_total(1), 2);
        assert_eq!(h.unit_total(0), 0);
        assert_eq!(h.total(), 3);
    }

    #[test]
    fn train_step_increments_every_map_once() {
        let mut model = tiny_model(BmuRule::Cosine);
        let image: Vec<f64> = (0..16).map(|v| v as f64 / 16.0).collect();
        model.train_step(&image, 1).unwrap();
        assert_eq!(model.n_maps(), 4);
        for h in model.hit_matrices() {
            assert_eq!(h.total(), 1);
            assert_eq!(h.label_total(1), 1);
        }
        assert_eq!(model.schedule().t, 1);
    }

    #[test]
    fn train_step_rejects_out_of_range_label() {
        let mut model = tiny_model(BmuRule::Cosine);
        let image = vec![0.1; 16];
        assert!(matches!(
            model.train_step(&image, 3),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn hit_counts_use_pre_update_bmu() {
        // One map, one unit: whatever happens, the single unit is the BMU;
        // with two units where the patch equals one weight vector exactly,
        // the matching unit must be counted even though the update then moves it.
        let tiling = TilingSpec::whole_image(1, 2).unwrap();
        let sched = small_sched();
        let grids = vec![SomGrid::with_weights(2, 1, 2, vec![0.6, 0.8, 0.8, -0.6]).unwrap()];
        let hits = vec![HitMatrix::new(2, 2)];
        let mut model =
            DendSomModel::from_parts(tiling, BmuRule::Cosine, 2, false, sched, grids, hits)
                .unwrap();
        model.train_step(&[0.6, 0.8], 1).unwrap();
        // Unit 0 is exactly aligned with the patch (cos = 1); unit 1 orthogonal.
        assert_eq!(model.hit_matrices()[0].count(1, 0), 1);
        assert_eq!(model.hit_matrices()[0].count(1, 1), 0);
    }

    #[test]
    fn rewind_is_identity_for_r_exp_one() {
        let mut model = tiny_model(BmuRule::Cosine);
        model.sched.t = 5247;
        model.maybe_rewind_schedule(5247);
        assert_eq!(model.schedule().t, 5247);
    }

    #[test]
    fn rewind_halves_clock_for_r_exp_two() {
        let mut model = tiny_model(BmuRule::Cosine);
        model.sched.r_exp = 2;
        model.sched.t = 5247;
        model.maybe_rewind_schedule(5247);
        assert_eq!(model.schedule().t, 2623);
        // Not a multiple of iter_crit: no change.
        model.maybe_rewind_schedule(5248);
        assert_eq!(model.schedule().t, 2623);
    }

    #[test]
    fn fit_zero_iterations_is_identity() {
        let mut model = tiny_model(BmuRule::Cosine);
        let before = model.clone();
        let image = vec![0.3; 16];
        model.fit([(image.as_slice(), 0usize)], 0).unwrap();
        assert_eq!(model, before);
        assert!(model.hit_matrices().iter().all(|h| h.total() == 0));
    }

    #[test]
    fn fit_rejects_empty_stream() {
        let mut model = tiny_model(BmuRule::Cosine);
        let empty: Vec<(&[f64], usize)> = vec![];
        assert!(matches!(
            model.fit(empty.clone(), 0),
            Err(Error::EmptyStream)
        ));
        assert!(matches!(model.fit(empty, 1), Err(Error::EmptyStream)));
    }

    #[test]
    fn fit_rejects_n_iter_beyond_stream() {
        let mut model = tiny_model(BmuRule::Cosine);
        let image = vec![0.3; 16];
        let stream = vec![(image.as_slice(), 0usize); 2];
        assert!(matches!(
            model.fit(stream, 3),
            Err(Error::StreamTooShort {
                requested: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn fit_repeated_sample_stabilizes_bmu() {
        let mut model = tiny_model(BmuRule::Cosine);
        let image: Vec<f64> = (0..16).map(|v| (v as f64).sin().abs()).collect();
        model.fit([(image.as_slice(), 2usize)], 1).unwrap();
        let first = model.bmus_for(&image).unwrap();
        model.fit([(image.as_slice(), 2usize)], 1).unwrap();
        let second = model.bmus_for(&image).unwrap();
        assert_eq!(first, second);
        for (h, &bmu) in model.hit_matrices().iter().zip(&first) {
            assert!(h.count(2, bmu) >= 1);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let image_a: Vec<f64> = (0..16).map(|v| v as f64 / 16.0).collect();
        let image_b: Vec<f64> = (0..16).map(|v| (16 - v) as f64 / 16.0).collect();
        let stream: Vec<(&[f64], usize)> =
            vec![(&image_a, 0), (&image_b, 1), (&image_a, 2), (&image_b, 0)];
        let mut m1 = tiny_model(BmuRule::Cosine);
        let mut m2 = tiny_model(BmuRule::Cosine);
        m1.fit(stream.clone(), 4).unwrap();
        m2.fit(stream, 4).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn map_updates_match_single_map_reference() {
        // Processing maps in parallel must equal updating one map by hand.
        let tiling = TilingSpec::whole_image(2, 2).unwrap();
        let mut model =
            DendSomModel::new(tiling, 3, 3, BmuRule::Euclidean, small_sched(), 2, 5).unwrap();
        let mut reference = model.grids()[0].clone();
        let image = [0.9, 0.1, 0.4, 0.7];
        let bmu = reference.bmu(BmuRule::Euclidean, &image).unwrap();
        reference
            .update_weights(&image, bmu, model.schedule())
            .unwrap();
        model.train_step(&image, 0).unwrap();
        assert_eq!(model.grids()[0], reference);
    }

    #[test]
    fn conventional_gaussian_changes_kernel() {
        let tiling = TilingSpec::whole_image(1, 2).unwrap();
        let sched = DecaySchedule::new(0.5, 4.0, 1000.0, 0.005, 1).unwrap();
        let make = |conv: bool| {
            let grids = vec![SomGrid::with_weights(2, 1, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap()];
            let hits = vec![HitMatrix::new(2, 2)];
            DendSomModel::from_parts(tiling, BmuRule::Euclidean, 2, conv, sched.clone(), grids, hits)
                .unwrap()
        };
        let mut plain = make(false);
        let mut conv = make(true);
        plain.train_step(&[0.0, 0.0], 0).unwrap();
        conv.train_step(&[0.0, 0.0], 0).unwrap();
        // Non-BMU unit update gain differs: exp(-1/(2*4)) vs exp(-1/(2*16)).
        let g_plain = 0.5 * (-1.0f64 / 8.0).exp();
        let g_conv = 0.5 * (-1.0f64 / 32.0).exp();
        assert_relative_eq!(plain.grids()[0].weight(1)[0], 1.0 - g_plain, epsilon = 1e-12);
        assert_relative_eq!(conv.grids()[0].weight(1)[0], 1.0 - g_conv, epsilon = 1e-12);
    }

    #[test]
    fn from_parts_enforces_equal_totals() {
        let tiling = TilingSpec::new(2, 4, 2, 2, 2, 2).unwrap();
        let sched = small_sched();
        let grids = vec![
            SomGrid::with_weights(1, 2, 4, vec![0.1; 8]).unwrap(),
            SomGrid::with_weights(1, 2, 4, vec![0.2; 8]).unwrap(),
        ];
        let mut h0 = HitMatrix::new(2, 2);
        h0.increment(0, 0);
        let hits = vec![h0, HitMatrix::new(2, 2)];
        assert!(DendSomModel::from_parts(
            tiling,
            BmuRule::Cosine,
            2,
            false,
            sched,
            grids,
            hits
        )
        .is_err());
    }

    #[test]
    fn unit_index_consistency_in_bmu_results() {
        let model = tiny_model(BmuRule::Euclidean);
        let image = vec![0.2; 16];
        for &bmu in &model.bmus_for(&image).unwrap() {
            let grid = &model.grids()[0];
            let idx = UnitIndex::from_linear(bmu, grid.cols());
            assert_eq!(idx.linear, idx.row * grid.cols() + idx.col);
        }
    }
}
