//! Raster loading and the preprocessing chain that feeds the MI estimator:
//! RGB decode, Rec. 601 luma, bilinear resize, uniform quantization and
//! marginal / joint histograms.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit RGB raster. Alpha is dropped on load.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    source_id: String,
}

impl Image {
    /// `pixels` holds row-major RGB triples, `3 * width * height` bytes.
    pub fn new(width: u32, height: u32, pixels: Vec<u8>, source_id: impl Into<String>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = 3 * width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} RGB bytes for {width}x{height}, got {}",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels, source_id: source_id.into() })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Copies the `w`x`h` window at (`x`, `y`). Caller guarantees bounds.
    pub(crate) fn crop_unchecked(&self, x: u32, y: u32, w: u32, h: u32, source_id: String) -> Image {
        let mut pixels = Vec::with_capacity(3 * w as usize * h as usize);
        let stride = 3 * self.width as usize;
        for row in y..y + h {
            let start = row as usize * stride + 3 * x as usize;
            pixels.extend_from_slice(&self.pixels[start..start + 3 * w as usize]);
        }
        Image { width: w, height: h, pixels, source_id }
    }

    /// Encodes as PNG bytes.
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let buf = image::RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("pixel buffer length checked at construction");
        let mut out = Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png).map_err(|e| Error::Encode {
            path: self.source_id.clone().into(),
            reason: e.to_string(),
        })?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes = self.to_png_bytes()?;
        std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}

/// Decodes an in-memory PNG or JPEG.
pub fn decode_image(bytes: &[u8], source_id: &str) -> Result<Image> {
    let decoded = image::load_from_memory(bytes).map_err(|e| Error::Decode {
        path: source_id.into(),
        reason: e.to_string(),
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    Image::new(w, h, rgb.into_raw(), source_id)
}

pub fn load_image(path: &Path) -> Result<Image> {
    if !path.exists() {
        return Err(Error::NotFound { path: path.to_path_buf() });
    }
    let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    decode_image(&bytes, &path.to_string_lossy())
}

/// Single-channel intensity raster with values in `[0, 255]`.
///
/// Intensities are kept as `f64` so that resampling does not round.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    intensities: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, intensities: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if intensities.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} intensities for {width}x{height}, got {}",
                width as usize * height as usize,
                intensities.len()
            )));
        }
        Ok(Self { width, height, intensities })
    }

    pub fn from_u8(width: u32, height: u32, values: &[u8]) -> Result<Self> {
        Self::new(width, height, values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.intensities[y * self.width as usize + x]
    }
}

/// Rec. 601 luma, rounded to the nearest integer level.
pub fn to_grayscale(img: &Image) -> GrayImage {
    let intensities = img
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            y.round().clamp(0.0, 255.0)
        })
        .collect();
    GrayImage { width: img.width, height: img.height, intensities }
}

/// Bilinear resampling with pixel-centre alignment and edge clamping.
pub fn resize(img: &GrayImage, width: u32, height: u32) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target must be positive, got {width}x{height}"
        )));
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }

    let axis = |dst: u32, src: u32| -> Vec<(usize, usize, f64)> {
        let scale = f64::from(src) / f64::from(dst);
        let last = (src - 1) as f64;
        (0..dst)
            .map(|d| {
                let s = ((f64::from(d) + 0.5) * scale - 0.5).clamp(0.0, last);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(src as usize - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = axis(width, img.width);
    let ys = axis(height, img.height);

    let mut out = Vec::with_capacity(width as usize * height as usize);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = img.at(x0, y0) + (img.at(x1, y0) - img.at(x0, y0)) * fx;
            let bottom = img.at(x0, y1) + (img.at(x1, y1) - img.at(x0, y1)) * fx;
            out.push(top + (bottom - top) * fy);
        }
    }
    Ok(GrayImage { width, height, intensities: out })
}

pub const MIN_BINS: usize = 2;
pub const MAX_BINS: usize = 256;

fn check_bins(bin_count: usize) -> Result<()> {
    if !(MIN_BINS..=MAX_BINS).contains(&bin_count) {
        return Err(Error::InvalidArgument(format!(
            "bin count must be in {MIN_BINS}..={MAX_BINS}, got {bin_count}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinnedImage {
    width: u32,
    height: u32,
    bins: Vec<u8>,
    bin_count: usize,
}

impl BinnedImage {
    pub fn new(width: u32, height: u32, bins: Vec<u8>, bin_count: usize) -> Result<Self> {
        check_bins(bin_count)?;
        if bins.len() != width as usize * height as usize {
            return Err(Error::InvalidArgument(format!(
                "expected {} bin indices for {width}x{height}, got {}",
                width as usize * height as usize,
                bins.len()
            )));
        }
        if let Some(&b) = bins.iter().find(|&&b| b as usize >= bin_count) {
            return Err(Error::InvalidArgument(format!("bin index {b} >= bin count {bin_count}")));
        }
        Ok(Self { width, height, bins, bin_count })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bins(&self) -> &[u8] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }
}

/// `floor(v * B / 256)`, clamped to `B - 1`.
pub fn quantize(img: &GrayImage, bin_count: usize) -> Result<BinnedImage> {
    check_bins(bin_count)?;
    let scale = bin_count as f64 / 256.0;
    let top = (bin_count - 1) as f64;
    let bins = img
        .intensities
        .iter()
        .map(|&v| (v * scale).floor().clamp(0.0, top) as u8)
        .collect();
    Ok(BinnedImage { width: img.width, height: img.height, bins, bin_count })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

pub fn histogram(img: &BinnedImage) -> Result<Histogram> {
    if img.bins.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let mut counts = vec![0u64; img.bin_count];
    for &b in &img.bins {
        counts[b as usize] += 1;
    }
    Ok(Histogram { counts, total: img.bins.len() as u64 })
}

/// Row index is the bin of the first image, column index the bin of the second.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointHistogram {
    bin_count: usize,
    counts: Vec<u64>,
    total: u64,
}

impl JointHistogram {
    /// Builds from a row-major `bin_count * bin_count` table.
    pub fn from_counts(bin_count: usize, counts: Vec<u64>) -> Result<Self> {
        if bin_count == 0 || counts.len() != bin_count * bin_count {
            return Err(Error::InvalidArgument(format!(
                "joint table must be {bin_count}x{bin_count}, got {} cells",
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(Self { bin_count, counts, total })
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    /// Row-major cells.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.bin_count + col]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Marginal of the first image (sum over columns).
    pub fn row_marginal(&self) -> Histogram {
        let counts = self
            .counts
            .chunks_exact(self.bin_count)
            .map(|row| row.iter().sum())
            .collect();
        Histogram { counts, total: self.total }
    }

    /// Marginal of the second image (sum over rows).
    pub fn col_marginal(&self) -> Histogram {
        let mut counts = vec![0u64; self.bin_count];
        for row in self.counts.chunks_exact(self.bin_count) {
            for (acc, &c) in counts.iter_mut().zip(row) {
                *acc += c;
            }
        }
        Histogram { counts, total: self.total }
    }
}

pub fn joint_histogram(a: &BinnedImage, b: &BinnedImage) -> Result<JointHistogram> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch {
            left_w: a.width,
            left_h: a.height,
            right_w: b.width,
            right_h: b.height,
        });
    }
    if a.bin_count != b.bin_count {
        return Err(Error::BinCountMismatch(a.bin_count, b.bin_count));
    }
    let n = a.bin_count;
    let mut counts = vec![0u64; n * n];
    for (&x, &y) in a.bins.iter().zip(&b.bins) {
        counts[x as usize * n + y as usize] += 1;
    }
    Ok(JointHistogram { bin_count: n, counts, total: a.bins.len() as u64 })
}
