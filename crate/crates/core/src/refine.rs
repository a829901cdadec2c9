//! Consistency scoring and outlier elimination.
//!
//! Each part gets `S_i`, its average MI against the other parts. A part is
//! kept when `S_i >= mean - k * stddev` over the current set of scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PartSet;
use crate::mutual_info::{self, AnalysisConfig, MiMatrix};
use crate::raster::{self, GrayImage};

pub const DEFAULT_STRICTNESS: f64 = 1.0;
pub const DEFAULT_MIN_KEPT: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// `k` in `mean - k * stddev`; smaller is stricter.
    pub strictness: f64,
    /// Average over all `n` row entries, diagonal included, instead of the
    /// `n - 1` cross-part entries.
    pub include_self_pairs: bool,
    /// Re-run the filter on the survivors until nothing more is removed.
    pub iterative: bool,
    pub min_kept: usize,
    pub analysis: AnalysisConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            strictness: DEFAULT_STRICTNESS,
            include_self_pairs: false,
            iterative: false,
            min_kept: DEFAULT_MIN_KEPT,
            analysis: AnalysisConfig::default(),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.strictness >= 0.0 && self.strictness.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "strictness must be a finite value >= 0, got {}",
                self.strictness
            )));
        }
        if self.min_kept < 2 {
            return Err(Error::InvalidArgument(format!("min_kept must be >= 2, got {}", self.min_kept)));
        }
        self.analysis.validate()
    }
}

/// Sum in ascending order, so the result does not depend on input order.
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Average pairwise MI per part.
pub fn consistency_scores(m: &MiMatrix, include_self: bool) -> Result<Vec<f64>> {
    let n = m.size();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least a 2x2 MI matrix, got {n}x{n}")));
    }
    Ok((0..n)
        .map(|i| {
            let mut row: Vec<f64> = m
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| include_self || j != i)
                .map(|(_, &v)| v)
                .collect();
            let len = row.len() as f64;
            ordered_sum(&mut row) / len
        })
        .collect())
}

/// Mean and population standard deviation.
///
/// The mean is clamped into `[min, max]` of the scores, and a constant input
/// has exactly zero spread, so the best score always clears the threshold.
pub fn threshold_stats(scores: &[f64]) -> Result<(f64, f64)> {
    if scores.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 scores, got {}", scores.len())));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {bad}")));
    }
    let mut sorted = scores.to_vec();
    let n = sorted.len() as f64;
    let mean = ordered_sum(&mut sorted) / n;
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        return Ok((lo, 0.0));
    }
    let mean = mean.clamp(lo, hi);
    let mut sq: Vec<f64> = sorted.iter().map(|s| (s - mean) * (s - mean)).collect();
    Ok((mean, (ordered_sum(&mut sq) / n).sqrt()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutcome {
    pub mean: f64,
    pub stddev: f64,
    pub threshold: f64,
    pub keep: Vec<bool>,
}

pub fn apply_filter(scores: &[f64], strictness: f64) -> Result<FilterOutcome> {
    if strictness.is_nan() || strictness < 0.0 {
        return Err(Error::InvalidArgument(format!("strictness must be >= 0, got {strictness}")));
    }
    let (mean, stddev) = threshold_stats(scores)?;
    let threshold = mean - strictness * stddev;
    let keep = scores.iter().map(|&s| s >= threshold).collect();
    Ok(FilterOutcome { mean, stddev, threshold, keep })
}

/// Keep flags: `true` iff the score reaches `mean - k * stddev`.
pub fn filter_outliers(scores: &[f64], strictness: f64) -> Result<Vec<bool>> {
    Ok(apply_filter(scores, strictness)?.keep)
}

/// One filter pass over the parts still in play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Original part indices scored in this round, ascending.
    pub active: Vec<usize>,
    /// Scores aligned with `active`.
    pub scores: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
    pub threshold: f64,
    pub removed: Vec<usize>,
    /// Parts below threshold that were retained to honour `min_kept`.
    pub rescued: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    /// First-round `S_i` for every part, indexed by part.
    pub scores: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
    pub threshold: f64,
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub rounds: usize,
    pub round_details: Vec<RoundRecord>,
    pub config: RefineConfig,
}

fn run_round(m: &MiMatrix, active: &[usize], cfg: &RefineConfig) -> Result<RoundRecord> {
    let sub = m.submatrix(active);
    let scores = consistency_scores(&sub, cfg.include_self_pairs)?;
    let outcome = apply_filter(&scores, cfg.strictness)?;

    let mut keep = outcome.keep;
    let floor = cfg.min_kept.min(active.len());
    let mut rescued = Vec::new();
    if keep.iter().filter(|&&k| k).count() < floor {
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        for &slot in order.iter().take(floor) {
            if !keep[slot] {
                keep[slot] = true;
                rescued.push(active[slot]);
            }
        }
        rescued.sort_unstable();
    }

    let removed = active.iter().zip(&keep).filter(|(_, &k)| !k).map(|(&i, _)| i).collect();
    Ok(RoundRecord {
        active: active.to_vec(),
        scores,
        mean: outcome.mean,
        stddev: outcome.stddev,
        threshold: outcome.threshold,
        removed,
        rescued,
    })
}

/// Runs the filter on a precomputed MI matrix.
pub fn refine_matrix(m: &MiMatrix, cfg: &RefineConfig) -> Result<RefineReport> {
    cfg.validate()?;
    let n = m.size();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 parts, got {n}")));
    }

    let mut active: Vec<usize> = (0..n).collect();
    let mut removed = Vec::new();
    let mut rounds: Vec<RoundRecord> = Vec::new();
    loop {
        let round = run_round(m, &active, cfg)?;
        let dropped = round.removed.clone();
        rounds.push(round);
        if dropped.is_empty() {
            break;
        }
        active.retain(|i| !dropped.contains(i));
        removed.extend(dropped);
        log::debug!("round {}: removed {:?}", rounds.len(), removed);
        if !cfg.iterative || active.len() <= cfg.min_kept {
            break;
        }
    }
    removed.sort_unstable();

    let first = &rounds[0];
    Ok(RefineReport {
        scores: first.scores.clone(),
        mean: first.mean,
        stddev: first.stddev,
        threshold: first.threshold,
        kept: active,
        removed,
        rounds: rounds.len(),
        round_details: rounds,
        config: *cfg,
    })
}

/// Grayscale conversion, pairwise MI, then filtering.
pub fn refine_images(parts: &[GrayImage], cfg: &RefineConfig) -> Result<RefineReport> {
    cfg.validate()?;
    let m = mutual_info::pairwise_mi_matrix(parts, &cfg.analysis)?;
    refine_matrix(&m, cfg)
}

pub fn refine_set(parts: &PartSet, cfg: &RefineConfig) -> Result<RefineReport> {
    let gray: Vec<GrayImage> = parts.images().map(raster::to_grayscale).collect();
    refine_images(&gray, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix(diag: f64) -> MiMatrix {
        MiMatrix::from_rows(vec![
            vec![diag, 2.0, 4.0],
            vec![2.0, diag, 6.0],
            vec![4.0, 6.0, diag],
        ])
        .unwrap()
    }

    fn matrix_for_scores(rows: Vec<Vec<f64>>) -> MiMatrix {
        MiMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn scores_exclusive_and_inclusive() {
        assert_eq!(consistency_scores(&matrix(0.0), false).unwrap(), vec![3.0, 4.0, 5.0]);
        let s = consistency_scores(&matrix(10.0), true).unwrap();
        assert_abs_diff_eq!(s[0], 16.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[2], 20.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_off_diagonal_gives_constant_scores() {
        let c = 1.25;
        let rows = (0..4).map(|i| (0..4).map(|j| if i == j { 9.0 } else { c }).collect()).collect();
        let s = consistency_scores(&matrix_for_scores(rows), false).unwrap();
        assert!(s.iter().all(|&v| v == c));
    }

    #[test]
    fn scores_need_two_parts() {
        assert!(consistency_scores(&matrix_for_scores(vec![vec![1.0]]), false).is_err());
    }

    #[test]
    fn stats_examples() {
        assert_eq!(threshold_stats(&[5.0; 4]).unwrap(), (5.0, 0.0));
        let (m, s) = threshold_stats(&[5.0, 5.0, 5.0, 1.0]).unwrap();
        assert_eq!(m, 4.0);
        assert_abs_diff_eq!(s, 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(threshold_stats(&[0.0, 2.0]).unwrap(), (1.0, 1.0));
        assert!(threshold_stats(&[1.0]).is_err());
    }

    #[test]
    fn repeated_inexact_value_has_zero_spread() {
        let (m, s) = threshold_stats(&[0.1, 0.1, 0.1]).unwrap();
        assert_eq!((m, s), (0.1, 0.0));
        assert_eq!(filter_outliers(&[0.1, 0.1, 0.1], 0.0).unwrap(), vec![true; 3]);
    }

    #[test]
    fn filter_examples() {
        let out = apply_filter(&[5.0, 5.0, 5.0, 1.0], 1.0).unwrap();
        assert_abs_diff_eq!(out.threshold, 4.0 - 3f64.sqrt(), epsilon = 1e-15);
        assert_eq!(out.keep, vec![true, true, true, false]);
        assert_eq!(filter_outliers(&[5.0, 5.0, 5.0, 1.0], 0.0).unwrap(), vec![true, true, true, false]);
        assert_eq!(filter_outliers(&[2.0, 2.0], 0.0).unwrap(), vec![true, true]);
        assert!(filter_outliers(&[1.0, 2.0], -0.5).is_err());
    }

    #[test]
    fn refine_identical_scores_keeps_everything() {
        let rows = vec![vec![3.0; 4]; 4];
        let r = refine_matrix(&matrix_for_scores(rows), &RefineConfig::default()).unwrap();
        assert_eq!(r.kept, vec![0, 1, 2, 3]);
        assert!(r.removed.is_empty());
        assert_eq!(r.rounds, 1);
    }

    #[test]
    fn two_parts_are_never_filtered() {
        let m = matrix_for_scores(vec![vec![5.0, 1.0], vec![1.0, 0.5]]);
        let cfg = RefineConfig { include_self_pairs: true, strictness: 0.0, ..Default::default() };
        let r = refine_matrix(&m, &cfg).unwrap();
        assert_eq!(r.kept, vec![0, 1]);
        assert_eq!(r.round_details[0].rescued, vec![1]);
    }

    #[test]
    fn floor_keeps_top_scores_with_low_index_ties() {
        // Scores via include_self on a diagonal-only matrix: S_i = diag_i / n.
        let diag = [4.0, 1.0, 1.0, 8.0, 1.0];
        let rows = (0..5).map(|i| (0..5).map(|j| if i == j { diag[i] } else { 0.0 }).collect()).collect();
        let cfg = RefineConfig { include_self_pairs: true, strictness: 0.0, min_kept: 3, ..Default::default() };
        let r = refine_matrix(&matrix_for_scores(rows), &cfg).unwrap();
        assert_eq!(r.kept, vec![0, 1, 3]);
        assert_eq!(r.removed, vec![2, 4]);
    }

    #[test]
    fn iterative_mode_records_every_round() {
        // Part 3 is far off; once it is gone, part 2 becomes the new outlier.
        let rows = vec![
            vec![0.0, 10.0, 8.0, 1.0],
            vec![10.0, 0.0, 8.0, 1.0],
            vec![8.0, 8.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0],
        ];
        let m = matrix_for_scores(rows);
        let single = refine_matrix(&m, &RefineConfig::default()).unwrap();
        assert_eq!(single.removed, vec![3]);
        assert_eq!(single.rounds, 1);

        let cfg = RefineConfig { iterative: true, ..Default::default() };
        let it = refine_matrix(&m, &cfg).unwrap();
        assert_eq!(it.removed, vec![2, 3]);
        assert_eq!(it.kept, vec![0, 1]);
        assert_eq!(it.rounds, 2);
        assert_eq!(it.round_details[1].active, vec![0, 1, 2]);
        assert_eq!(it.round_details[1].removed, vec![2]);
    }

    #[test]
    fn config_validation() {
        assert!(RefineConfig { strictness: -1.0, ..Default::default() }.validate().is_err());
        assert!(RefineConfig { strictness: f64::NAN, ..Default::default() }.validate().is_err());
        assert!(RefineConfig { min_kept: 1, ..Default::default() }.validate().is_err());
    }
}
