//! Histogram entropies and mutual information, in bits.
//!
//! MI is evaluated through the symmetric form `H(X) + H(Y) - H(X,Y)`. Every
//! entropy sums its cells in row-major order, one pair at a time, so results
//! are bit-identical whether or not pairs are scheduled in parallel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{self, BinnedImage, GrayImage, Histogram, JointHistogram};

/// Negative MI down to this value is treated as rounding noise and clamped.
pub const NEGATIVE_MI_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_BINS: usize = 64;
pub const DEFAULT_RESOLUTION: u32 = 256;

/// Preprocessing shared by every MI evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub bins: usize,
    /// Square side every image is resampled to. `None` compares images at
    /// their native size, which then must match.
    pub resolution: Option<u32>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { bins: DEFAULT_BINS, resolution: Some(DEFAULT_RESOLUTION) }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(raster::MIN_BINS..=raster::MAX_BINS).contains(&self.bins) {
            return Err(Error::InvalidArgument(format!(
                "bins must be in {}..={}, got {}",
                raster::MIN_BINS,
                raster::MAX_BINS,
                self.bins
            )));
        }
        if self.resolution == Some(0) {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        Ok(())
    }
}

fn entropy_of_cells<'a>(cells: impl IntoIterator<Item = &'a u64>, total: u64) -> f64 {
    let total = total as f64;
    let mut h = 0.0;
    for &c in cells {
        if c != 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Shannon entropy of a marginal histogram.
pub fn entropy(h: &Histogram) -> Result<f64> {
    if h.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    Ok(entropy_of_cells(h.counts(), h.total()))
}

/// `H(X,Y)` over all cells of the joint table.
pub fn joint_entropy(j: &JointHistogram) -> Result<f64> {
    if j.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    Ok(entropy_of_cells(j.counts(), j.total()))
}

/// Remaining uncertainty in the second (column) image once the first (row)
/// image is known: `H(X,Y) - H(Y)` with `Y` the row variable.
///
/// Not clamped; may come out a hair below zero when X is a function of Y.
pub fn conditional_entropy(j: &JointHistogram) -> Result<f64> {
    let hxy = joint_entropy(j)?;
    let hy = entropy(&j.row_marginal())?;
    Ok(hxy - hy)
}

pub fn mutual_information(j: &JointHistogram) -> Result<f64> {
    let hx = entropy(&j.row_marginal())?;
    let hy = entropy(&j.col_marginal())?;
    let hxy = joint_entropy(j)?;
    clamp_mi(hx + hy - hxy)
}

fn clamp_mi(mi: f64) -> Result<f64> {
    if mi >= 0.0 {
        Ok(mi)
    } else if mi >= -NEGATIVE_MI_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::Invariant(format!("mutual information came out negative: {mi:e}")))
    }
}

/// Resample (if configured) and quantize one image for MI evaluation.
pub fn prepare(img: &GrayImage, cfg: &AnalysisConfig) -> Result<BinnedImage> {
    cfg.validate()?;
    match cfg.resolution {
        Some(side) => raster::quantize(&raster::resize(img, side, side)?, cfg.bins),
        None => raster::quantize(img, cfg.bins),
    }
}

pub fn mi_between_images(a: &GrayImage, b: &GrayImage, cfg: &AnalysisConfig) -> Result<f64> {
    let a = prepare(a, cfg)?;
    let b = prepare(b, cfg)?;
    mutual_information(&raster::joint_histogram(&a, &b)?)
}

fn mi_binned(a: &BinnedImage, b: &BinnedImage) -> Result<f64> {
    mutual_information(&raster::joint_histogram(a, b)?)
}

/// Symmetric table of pairwise MI; the diagonal holds each part's entropy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiMatrix {
    size: usize,
    values: Vec<f64>,
}

impl MiMatrix {
    /// Builds from a row-major `size * size` table, checking symmetry.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::InvalidArgument("MI matrix must be square".into()));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        for i in 0..size {
            for j in 0..i {
                if values[i * size + j] != values[j * size + i] {
                    return Err(Error::InvalidArgument(format!("MI matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks_exact(self.size).map(<[f64]>::to_vec).collect()
    }

    /// Restriction to `indices`, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> MiMatrix {
        let size = indices.len();
        let mut values = Vec::with_capacity(size * size);
        for &i in indices {
            for &j in indices {
                values.push(self.get(i, j));
            }
        }
        MiMatrix { size, values }
    }
}

fn unordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn assemble(n: usize, diagonal: Vec<f64>, pairs: &[(usize, usize)], off: Vec<f64>) -> MiMatrix {
    let mut values = vec![0.0; n * n];
    for (i, h) in diagonal.into_iter().enumerate() {
        values[i * n + i] = h;
    }
    for (&(i, j), mi) in pairs.iter().zip(off) {
        values[i * n + j] = mi;
        values[j * n + i] = mi;
    }
    MiMatrix { size: n, values }
}

fn check_parts(len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 parts, got {len}")));
    }
    Ok(())
}

/// Pairwise MI over already-binned parts, one pair at a time on this thread.
pub fn mi_matrix_from_binned_sequential(parts: &[BinnedImage]) -> Result<MiMatrix> {
    check_parts(parts.len())?;
    let diagonal = parts
        .iter()
        .map(|p| entropy(&raster::histogram(p)?))
        .collect::<Result<Vec<_>>>()?;
    let pairs = unordered_pairs(parts.len());
    let off = pairs
        .iter()
        .map(|&(i, j)| mi_binned(&parts[i], &parts[j]))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(parts.len(), diagonal, &pairs, off))
}

/// Pairwise MI over already-binned parts, pairs distributed over the rayon pool.
#[cfg(feature = "parallel")]
pub fn mi_matrix_from_binned_parallel(parts: &[BinnedImage]) -> Result<MiMatrix> {
    use rayon::prelude::*;

    check_parts(parts.len())?;
    let diagonal = parts
        .par_iter()
        .map(|p| entropy(&raster::histogram(p)?))
        .collect::<Result<Vec<_>>>()?;
    let pairs = unordered_pairs(parts.len());
    let off = pairs
        .par_iter()
        .map(|&(i, j)| mi_binned(&parts[i], &parts[j]))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(parts.len(), diagonal, &pairs, off))
}

pub fn prepare_all(parts: &[GrayImage], cfg: &AnalysisConfig) -> Result<Vec<BinnedImage>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        parts.par_iter().map(|p| prepare(p, cfg)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        parts.iter().map(|p| prepare(p, cfg)).collect()
    }
}

/// Full pairwise MI matrix. Each unordered pair is evaluated once and mirrored.
///
/// Uses the rayon pool when the `parallel` feature is on; output is identical
/// either way.
pub fn pairwise_mi_matrix(parts: &[GrayImage], cfg: &AnalysisConfig) -> Result<MiMatrix> {
    check_parts(parts.len())?;
    let binned = prepare_all(parts, cfg)?;
    #[cfg(feature = "parallel")]
    {
        mi_matrix_from_binned_parallel(&binned)
    }
    #[cfg(not(feature = "parallel"))]
    {
        mi_matrix_from_binned_sequential(&binned)
    }
}

/// Single-threaded variant of [`pairwise_mi_matrix`].
pub fn pairwise_mi_matrix_sequential(parts: &[GrayImage], cfg: &AnalysisConfig) -> Result<MiMatrix> {
    check_parts(parts.len())?;
    let binned = parts.iter().map(|p| prepare(p, cfg)).collect::<Result<Vec<_>>>()?;
    mi_matrix_from_binned_sequential(&binned)
}
