//! Probability estimation from hit matrices and pointwise-mutual-information
//! label scoring.
//!
//! All probabilities are additively smoothed so that empty counts never
//! produce a zero denominator or an infinite log: with smoothing `eps`, a
//! count `c` out of a denominator `d` becomes `(c + eps) / (d + eps * n_labels)`.
//! The unsmoothed ratios are recovered as `eps -> 0`.
//!
//! A label with zero observations total has no co-occurrence evidence at all;
//! its smoothed prior collapses to the eps floor while its posterior floor is
//! per-unit, which would hand it a spuriously positive score. [`predict`]
//! therefore drops never-observed labels from the argmax whenever at least
//! one observed candidate exists (their scores are still reported).
//!
//! [`predict`]: DendSomModel::predict

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DendSomModel, HitMatrix};

/// Default additive smoothing applied to both posteriors and priors.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

/// Smoothed `P(label | unit)`: the unit's count for `label` over the unit's
/// total. A never-selected unit yields the uniform distribution.
pub fn posterior(hits: &HitMatrix, unit: usize, label: usize) -> f64 {
    posterior_with_eps(hits, unit, label, SMOOTHING_EPSILON)
}

pub fn posterior_with_eps(hits: &HitMatrix, unit: usize, label: usize, eps: f64) -> f64 {
    let n = hits.n_labels() as f64;
    (hits.count(label, unit) as f64 + eps) / (hits.unit_total(unit) as f64 + eps * n)
}

/// Smoothed `P(label)`: the label's row total over the whole matrix total.
/// On an untrained matrix this degrades to the uniform prior.
pub fn prior(hits: &HitMatrix, label: usize) -> f64 {
    prior_with_eps(hits, label, SMOOTHING_EPSILON)
}

pub fn prior_with_eps(hits: &HitMatrix, label: usize, eps: f64) -> f64 {
    let total = hits.total();
    if total == 0 {
        log::debug!("prior requested on a zero-count hit matrix; returning uniform");
    }
    let n = hits.n_labels() as f64;
    (hits.label_total(label) as f64 + eps) / (total as f64 + eps * n)
}

/// `ln(P(label | unit) / P(label))`, finite for all inputs by smoothing.
/// Positive when the pair co-occurs more often than chance, negative when
/// less often, and 0 under statistical independence.
pub fn pmi(hits: &HitMatrix, unit: usize, label: usize) -> f64 {
    pmi_with_eps(hits, unit, label, SMOOTHING_EPSILON)
}

pub fn pmi_with_eps(hits: &HitMatrix, unit: usize, label: usize, eps: f64) -> f64 {
    (posterior_with_eps(hits, unit, label, eps) / prior_with_eps(hits, label, eps)).ln()
}

/// The argmax label over a candidate set together with every candidate's
/// summed PMI score. Scores do not depend on the candidate set; only the
/// argmax is restricted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: usize,
    /// `(candidate, summed PMI)` in the caller's candidate order.
    pub scores: Vec<(usize, f64)>,
}

/// Per-map PMI lookup tables, precomputed once per trained model so batch
/// inference costs one table lookup per (map, label) instead of recomputing
/// the smoothed ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct PmiTables {
    n_labels: usize,
    n_units: usize,
    /// One table per map, label-major: `tables[m][l * n_units + u]`.
    tables: Vec<Vec<f64>>,
    /// Whether any map observed the label at least once.
    seen: Vec<bool>,
}

impl PmiTables {
    pub fn new(model: &DendSomModel) -> Self {
        Self::with_eps(model, SMOOTHING_EPSILON)
    }

    pub fn with_eps(model: &DendSomModel, eps: f64) -> Self {
        let n_labels = model.n_labels();
        let tables = model
            .hit_matrices()
            .iter()
            .map(|hits| {
                let n_units = hits.n_units();
                let mut table = vec![0.0; n_labels * n_units];
                for label in 0..n_labels {
                    for unit in 0..n_units {
                        table[label * n_units + unit] = pmi_with_eps(hits, unit, label, eps);
                    }
                }
                table
            })
            .collect();
        let seen = (0..n_labels)
            .map(|l| model.hit_matrices().iter().any(|h| h.label_total(l) > 0))
            .collect();
        PmiTables {
            n_labels,
            n_units: model.hit_matrices()[0].n_units(),
            tables,
            seen,
        }
    }

    /// Whether the label was observed at least once during training.
    pub fn is_seen(&self, label: usize) -> bool {
        self.seen[label]
    }

    fn score(&self, bmus: &[usize], label: usize) -> f64 {
        self.tables
            .iter()
            .zip(bmus)
            .map(|(table, &bmu)| table[label * self.n_units + bmu])
            .sum()
    }

    /// Argmax over `(label, score)` pairs, ties to the smallest label.
    /// Never-observed labels are only eligible when no observed label is.
    pub(crate) fn select_label(&self, scores: &[(usize, f64)]) -> usize {
        let any_seen = scores.iter().any(|&(l, _)| self.seen[l]);
        let mut best: Option<(usize, f64)> = None;
        for &(label, score) in scores {
            if any_seen && !self.seen[label] {
                continue;
            }
            best = match best {
                Some((bl, bs)) if score < bs || (score == bs && label > bl) => Some((bl, bs)),
                _ => Some((label, score)),
            };
        }
        best.expect("candidate set is non-empty").0
    }
}

impl DendSomModel {
    /// Predict a label for `image` from the candidate set: each map's BMU
    /// contributes its PMI with every label, and the summed scores are
    /// maximized over the candidates (ties to the smallest label).
    pub fn predict(&self, image: &[f64], candidates: &[usize]) -> Result<Prediction> {
        let tables = PmiTables::new(self);
        self.predict_with(&tables, image, candidates)
    }

    /// `predict` against precomputed tables; the loop of choice for batch
    /// evaluation.
    pub fn predict_with(
        &self,
        tables: &PmiTables,
        image: &[f64],
        candidates: &[usize],
    ) -> Result<Prediction> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        for &c in candidates {
            if c >= self.n_labels() {
                return Err(Error::LabelOutOfRange {
                    label: c,
                    n_labels: self.n_labels(),
                });
            }
        }
        if self.samples_seen() == 0 {
            log::debug!("predicting with an untrained model; scores are uniform");
        }
        let bmus = self.bmus_for(image)?;
        let scores: Vec<(usize, f64)> = candidates
            .iter()
            .map(|&label| (label, tables.score(&bmus, label)))
            .collect();
        Ok(Prediction {
            label: tables.select_label(&scores),
            scores,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HitMatrix, TilingSpec};
    use crate::som::{BmuRule, DecaySchedule, SomGrid};
    use approx::assert_relative_eq;

    /// 2 labels x 2 units with H[A,u0]=3, H[A,u1]=1, H[B,u0]=1, H[B,u1]=3.
    fn cross_matrix() -> HitMatrix {
        HitMatrix::from_counts(2, 2, vec![3, 1, 1, 3]).unwrap()
    }

    #[test]
    fn posterior_ratio() {
        let h = cross_matrix();
        assert_relative_eq!(posterior(&h, 0, 0), 0.75, epsilon = 1e-9);
        assert_relative_eq!(posterior(&h, 0, 1), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn posterior_uniform_on_empty_column() {
        let h = HitMatrix::new(10, 4);
        for label in 0..10 {
            assert_relative_eq!(posterior(&h, 2, label), 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn posterior_single_label_column_saturates() {
        let mut h = HitMatrix::new(3, 2);
        for _ in 0..50 {
            h.increment(1, 0);
        }
        assert!((posterior(&h, 0, 1) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn prior_row_ratios() {
        let h = HitMatrix::from_counts(2, 2, vec![2, 2, 3, 1]).unwrap();
        assert_relative_eq!(prior(&h, 0), 0.5, epsilon = 1e-9);
        let h = HitMatrix::from_counts(2, 2, vec![4, 2, 1, 1]).unwrap();
        assert_relative_eq!(prior(&h, 0), 0.75, epsilon = 1e-9);
        assert_relative_eq!(prior(&h, 1), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn prior_uniform_on_untrained_matrix() {
        let h = HitMatrix::new(4, 3);
        for label in 0..4 {
            assert_relative_eq!(prior(&h, label), 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn pmi_hand_values() {
        let h = cross_matrix();
        assert_relative_eq!(pmi(&h, 0, 0), (1.5f64).ln(), epsilon = 1e-8);
        assert_relative_eq!(pmi(&h, 0, 0), 0.405465, epsilon = 1e-6);
        assert_relative_eq!(pmi(&h, 0, 1), (0.5f64).ln(), epsilon = 1e-8);
        assert_relative_eq!(pmi(&h, 0, 1), -0.693147, epsilon = 1e-6);
    }

    #[test]
    fn pmi_zero_under_independence() {
        // Identical columns: the unit carries no label information.
        let h = HitMatrix::from_counts(3, 2, vec![5, 5, 2, 2, 9, 9]).unwrap();
        for unit in 0..2 {
            for label in 0..3 {
                assert!(pmi(&h, unit, label).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn probability_normalization() {
        let h = HitMatrix::from_counts(3, 2, vec![4, 0, 1, 7, 0, 3]).unwrap();
        for unit in 0..2 {
            let s: f64 = (0..3).map(|l| posterior(&h, unit, l)).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        let s: f64 = (0..3).map(|l| prior(&h, l)).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pmi_exponential_identity() {
        // sum_l P(l) * exp(PMI(l; u)) = sum_l P(l|u) = 1.
        let h = HitMatrix::from_counts(3, 2, vec![4, 0, 1, 7, 0, 3]).unwrap();
        for unit in 0..2 {
            let s: f64 = (0..3).map(|l| prior(&h, l) * pmi(&h, unit, l).exp()).sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pmi_invariant_under_count_scaling() {
        // Positive counts: the eps floor is what breaks exact invariance, so
        // it only holds to ~1e-6 where real counts dominate.
        let base = HitMatrix::from_counts(2, 3, vec![3, 1, 5, 1, 3, 2]).unwrap();
        let scaled = HitMatrix::from_counts(
            2,
            3,
            base.counts().iter().map(|c| c * 17).collect(),
        )
        .unwrap();
        for unit in 0..3 {
            for label in 0..2 {
                assert!((pmi(&base, unit, label) - pmi(&scaled, unit, label)).abs() < 1e-6);
            }
        }
    }

    /// One map over a 1x2 image whose two units are axis-aligned, so the BMU
    /// is input-controlled, with the cross hit matrix installed.
    fn single_map_model() -> DendSomModel {
        let tiling = TilingSpec::whole_image(1, 2).unwrap();
        let sched = DecaySchedule::new(0.95, 1.0, 1000.0, 0.005, 1).unwrap();
        let grids = vec![SomGrid::with_weights(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap()];
        DendSomModel::from_parts(
            tiling,
            BmuRule::Cosine,
            2,
            false,
            sched,
            grids,
            vec![cross_matrix()],
        )
        .unwrap()
    }

    #[test]
    fn predict_follows_pmi_argmax() {
        let model = single_map_model();
        // Input aligned with unit 0: label 0 scores ln(1.5), label 1 ln(0.5).
        let p = model.predict(&[1.0, 0.0], &[0, 1]).unwrap();
        assert_eq!(p.label, 0);
        assert_relative_eq!(p.scores[0].1, (1.5f64).ln(), epsilon = 1e-6);
        assert_relative_eq!(p.scores[1].1, (0.5f64).ln(), epsilon = 1e-6);
        // Input aligned with unit 1 flips the decision.
        let p = model.predict(&[0.0, 1.0], &[0, 1]).unwrap();
        assert_eq!(p.label, 1);
    }

    #[test]
    fn predict_scores_are_candidate_independent() {
        let model = single_map_model();
        let image = [1.0, 0.0];
        let both = model.predict(&image, &[0, 1]).unwrap();
        let only_one = model.predict(&image, &[1]).unwrap();
        assert_eq!(only_one.label, 1);
        assert_eq!(both.scores[1], only_one.scores[0]);
    }

    #[test]
    fn predict_rejects_empty_or_out_of_range_candidates() {
        let model = single_map_model();
        assert!(matches!(
            model.predict(&[1.0, 0.0], &[]),
            Err(Error::EmptyCandidates)
        ));
        assert!(matches!(
            model.predict(&[1.0, 0.0], &[2]),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn predict_single_positive_label_always_wins() {
        // Only label 1 was ever counted anywhere.
        let tiling = TilingSpec::whole_image(1, 2).unwrap();
        let sched = DecaySchedule::new(0.95, 1.0, 1000.0, 0.005, 1).unwrap();
        let grids = vec![SomGrid::with_weights(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap()];
        let hits = vec![HitMatrix::from_counts(3, 2, vec![0, 0, 4, 9, 0, 0]).unwrap()];
        let model =
            DendSomModel::from_parts(tiling, BmuRule::Cosine, 3, false, sched, grids, hits)
                .unwrap();
        for image in [[1.0, 0.0], [0.0, 1.0], [0.7, 0.7]] {
            assert_eq!(model.predict(&image, &[0, 1, 2]).unwrap().label, 1);
        }
    }

    #[test]
    fn never_observed_labels_cannot_outvote_observed_ones() {
        // The smoothed formula gives an unobserved label the score
        // ln(total / unit_total) > 0 at any unit carrying less than the whole
        // mass, which would beat every observed label; predict must not let
        // that happen while any observed candidate is present.
        let tiling = TilingSpec::whole_image(1, 2).unwrap();
        let sched = DecaySchedule::new(0.95, 1.0, 1000.0, 0.005, 1).unwrap();
        let grids = vec![SomGrid::with_weights(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap()];
        // Labels 0 and 1 observed, label 2 never; unit 0 carries 5 of 8 hits.
        let hits = vec![HitMatrix::from_counts(3, 2, vec![4, 1, 1, 2, 0, 0]).unwrap()];
        let model =
            DendSomModel::from_parts(tiling, BmuRule::Cosine, 3, false, sched, grids, hits)
                .unwrap();
        let p = model.predict(&[1.0, 0.0], &[0, 1, 2]).unwrap();
        // The raw score of the unseen label is indeed the largest...
        let unseen_score = p.scores.iter().find(|(l, _)| *l == 2).unwrap().1;
        assert!(p.scores.iter().all(|&(_, s)| s <= unseen_score));
        // ...but the argmax is restricted to observed labels.
        assert_eq!(p.label, 0);
    }

    #[test]
    fn predict_untrained_model_ties_to_smallest_candidate() {
        let tiling = TilingSpec::whole_image(1, 2).unwrap();
        let sched = DecaySchedule::new(0.95, 1.0, 1000.0, 0.005, 1).unwrap();
        let model = DendSomModel::new(tiling, 2, 1, BmuRule::Cosine, sched, 4, 7).unwrap();
        let p = model.predict(&[0.3, 0.4], &[2, 1, 3]).unwrap();
        assert_eq!(p.label, 1);
        assert!(p.scores.iter().all(|&(_, s)| s.abs() < 1e-12));
    }

    #[test]
    fn predict_is_pure() {
        let model = single_map_model();
        let a = model.predict(&[0.9, 0.1], &[0, 1]).unwrap();
        let b = model.predict(&[0.9, 0.1], &[0, 1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tables_match_direct_pmi() {
        let model = single_map_model();
        let tables = PmiTables::new(&model);
        let hits = &model.hit_matrices()[0];
        for unit in 0..2 {
            for label in 0..2 {
                assert_eq!(tables.tables[0][label * 2 + unit], pmi(hits, unit, label));
            }
        }
    }
}
