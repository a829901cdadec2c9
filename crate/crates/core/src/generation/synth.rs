//! Procedural character sheets with known outlier cells.
//!
//! Every random draw comes from [`SplitMix64`], so a spec renders to the same
//! bytes on every platform.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Image;

/// SplitMix64 (Steele, Lea and Flood), the seeding generator used by
/// `java.util.SplittableRandom` and the xoshiro family.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        let span = (hi - lo + 1) as u64;
        lo + (self.next_u64() % span) as i64
    }
}

fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut g = SplitMix64::new(seed ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    g.next_u64();
    SplitMix64::new(g.next_u64() ^ index).next_u64()
}

const STREAM_OUTLIER: u64 = 1;
const STREAM_CELL: u64 = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSheetSpec {
    pub seed: u64,
    pub rows: u32,
    pub cols: u32,
    /// Row-major cell indices rendered from an unrelated pattern.
    pub outlier_positions: BTreeSet<usize>,
    /// Per-channel uniform noise in `[-a, a]` added to every cell, `a <= 128`.
    pub noise_amplitude: u8,
    /// Maximum per-cell translation of the base pattern, in pixels.
    pub jitter: u32,
    pub cell_width: u32,
    pub cell_height: u32,
}

impl SynthSheetSpec {
    pub fn new(seed: u64, rows: u32, cols: u32) -> Self {
        Self {
            seed,
            rows,
            cols,
            outlier_positions: BTreeSet::new(),
            noise_amplitude: 0,
            jitter: 0,
            cell_width: 128,
            cell_height: 128,
        }
    }

    pub fn cells(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument("synthetic sheet needs at least one row and column".into()));
        }
        if self.cell_width == 0 || self.cell_height == 0 {
            return Err(Error::InvalidArgument("cell size must be positive".into()));
        }
        if self.noise_amplitude > 128 {
            return Err(Error::InvalidArgument(format!(
                "noise amplitude must be <= 128, got {}",
                self.noise_amplitude
            )));
        }
        if let Some(&p) = self.outlier_positions.iter().find(|&&p| p >= self.cells()) {
            return Err(Error::InvalidArgument(format!("outlier cell {p} outside {} cells", self.cells())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthSheet {
    pub image: Image,
    /// Ground truth, row-major.
    pub is_outlier: Vec<bool>,
}

enum Shape {
    Disc { cx: f64, cy: f64, r: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Ring { cx: f64, cy: f64, r_in: f64, r_out: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disc { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Ellipse { cx, cy, rx, ry } => ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0,
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Ring { cx, cy, r_in, r_out } => {
                let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                d2 >= r_in * r_in && d2 <= r_out * r_out
            }
        }
    }
}

/// Gradient background plus a handful of flat-coloured shapes, in
/// coordinates normalised to the unit square.
struct Pattern {
    origin: [f64; 3],
    gradient: [[f64; 3]; 2],
    shapes: Vec<(Shape, [f64; 3])>,
}

impl Pattern {
    fn generate(seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let colour = |rng: &mut SplitMix64| [0; 3].map(|_: u8| rng.range_f64(0.0, 255.0));
        let origin = colour(&mut rng);
        let gradient = [
            [0; 3].map(|_: u8| rng.range_f64(-120.0, 120.0)),
            [0; 3].map(|_: u8| rng.range_f64(-120.0, 120.0)),
        ];
        let count = rng.range_i64(6, 10);
        let shapes = (0..count)
            .map(|_| {
                let cx = rng.range_f64(0.1, 0.9);
                let cy = rng.range_f64(0.1, 0.9);
                let shape = match rng.range_i64(0, 3) {
                    0 => Shape::Disc { cx, cy, r: rng.range_f64(0.05, 0.2) },
                    1 => Shape::Ellipse { cx, cy, rx: rng.range_f64(0.05, 0.25), ry: rng.range_f64(0.05, 0.25) },
                    2 => {
                        let (hw, hh) = (rng.range_f64(0.04, 0.2), rng.range_f64(0.04, 0.2));
                        Shape::Rect { x0: cx - hw, y0: cy - hh, x1: cx + hw, y1: cy + hh }
                    }
                    _ => {
                        let r_out = rng.range_f64(0.08, 0.22);
                        Shape::Ring { cx, cy, r_in: r_out * rng.range_f64(0.4, 0.8), r_out }
                    }
                };
                (shape, colour(&mut rng))
            })
            .collect();
        Self { origin, gradient, shapes }
    }

    fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        if let Some((_, c)) = self.shapes.iter().rev().find(|(s, _)| s.contains(u, v)) {
            return *c;
        }
        [0, 1, 2].map(|ch| self.origin[ch] + self.gradient[0][ch] * u + self.gradient[1][ch] * v)
    }
}

fn render_cell(
    pattern: &Pattern,
    rng: &mut SplitMix64,
    spec: &SynthSheetSpec,
    dx: i64,
    dy: i64,
    out: &mut [u8],
    out_stride: usize,
) {
    let (w, h) = (spec.cell_width as usize, spec.cell_height as usize);
    let amp = i64::from(spec.noise_amplitude);
    for y in 0..h {
        for x in 0..w {
            let u = (x as f64 + 0.5 - dx as f64) / w as f64;
            let v = (y as f64 + 0.5 - dy as f64) / h as f64;
            let c = pattern.sample(u, v);
            let px = &mut out[y * out_stride + 3 * x..][..3];
            for ch in 0..3 {
                let noise = if amp > 0 { rng.range_i64(-amp, amp) } else { 0 };
                px[ch] = (c[ch].round() as i64 + noise).clamp(0, 255) as u8;
            }
        }
    }
}

/// Renders a sheet and its ground-truth outlier flags.
///
/// Inlier cells show one shared base pattern, each shifted by up to `jitter`
/// pixels and overlaid with independent noise. Outlier cells each show their
/// own pattern from a derived seed, with the same noise treatment.
pub fn synth_sheet(spec: &SynthSheetSpec) -> Result<SynthSheet> {
    spec.validate()?;
    let base = Pattern::generate(spec.seed);
    let sheet_w = spec.cols as usize * spec.cell_width as usize;
    let sheet_h = spec.rows as usize * spec.cell_height as usize;
    let stride = 3 * sheet_w;
    let mut pixels = vec![0u8; stride * sheet_h];
    let jitter = i64::from(spec.jitter);

    let mut is_outlier = Vec::with_capacity(spec.cells());
    for cell in 0..spec.cells() {
        let outlier = spec.outlier_positions.contains(&cell);
        is_outlier.push(outlier);
        let mut rng = SplitMix64::new(derive_seed(spec.seed, STREAM_CELL, cell as u64));
        let alien;
        let pattern = if outlier {
            alien = Pattern::generate(derive_seed(spec.seed, STREAM_OUTLIER, cell as u64));
            &alien
        } else {
            &base
        };
        let (dx, dy) = if jitter > 0 {
            (rng.range_i64(-jitter, jitter), rng.range_i64(-jitter, jitter))
        } else {
            (0, 0)
        };
        let (row, col) = (cell / spec.cols as usize, cell % spec.cols as usize);
        let offset = row * spec.cell_height as usize * stride + col * spec.cell_width as usize * 3;
        render_cell(pattern, &mut rng, spec, dx, dy, &mut pixels[offset..], stride);
    }

    let image = Image::new(sheet_w as u32, sheet_h as u32, pixels, format!("synth:{}", spec.seed))?;
    Ok(SynthSheet { image, is_outlier })
}
