//! Cutting a character sheet into candidate parts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl CropRect {
    pub fn rect(&self) -> Rect {
        Rect { x: self.x, y: self.y, w: self.w, h: self.h }
    }
}

/// How a sheet is cut: a regular grid, or hand-picked rectangles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CropSpec {
    Uniform { rows: u32, cols: u32 },
    Explicit { rects: Vec<CropRect> },
}

impl CropSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CropSpec::Uniform { rows, cols } => {
                if *rows == 0 || *cols == 0 {
                    return Err(Error::CropSpec(format!("rows and cols must be >= 1, got {rows}x{cols}")));
                }
            }
            CropSpec::Explicit { rects } => {
                if rects.is_empty() {
                    return Err(Error::CropSpec("explicit spec needs at least one rect".into()));
                }
                if let Some(i) = rects.iter().position(|r| r.w == 0 || r.h == 0) {
                    return Err(Error::CropSpec(format!("rect {i} has zero width or height")));
                }
            }
        }
        Ok(())
    }

    /// Number of parts this spec yields.
    pub fn part_count(&self) -> usize {
        match self {
            CropSpec::Uniform { rows, cols } => *rows as usize * *cols as usize,
            CropSpec::Explicit { rects } => rects.len(),
        }
    }
}

impl std::str::FromStr for CropSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec: CropSpec = serde_json::from_str(s).map_err(|e| Error::CropSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Reads and validates a crop-spec JSON file. Bounds are checked at slice time.
pub fn parse_crop_spec(path: &Path) -> Result<CropSpec> {
    if !path.exists() {
        return Err(Error::NotFound { path: path.to_path_buf() });
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    text.parse()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    pub image: Image,
    pub rect: Rect,
    pub label: Option<String>,
}

/// Ordered candidate parts cut from one source; indices are stable downstream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartSet {
    pub source_id: String,
    pub parts: Vec<Part>,
}

impl PartSet {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn images(&self) -> impl Iterator<Item = &Image> {
        self.parts.iter().map(|p| &p.image)
    }
}

/// Cell extents along one axis; the last cell absorbs the remainder.
fn cell_extents(length: u32, cells: u32) -> Vec<(u32, u32)> {
    let base = length / cells;
    (0..cells)
        .map(|i| {
            let start = i * base;
            let size = if i + 1 == cells { length - start } else { base };
            (start, size)
        })
        .collect()
}

fn part_id(source: &str, index: usize) -> String {
    format!("{source}#{index}")
}

pub fn slice_uniform(img: &Image, rows: u32, cols: u32) -> Result<PartSet> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!("grid must be at least 1x1, got {rows}x{cols}")));
    }
    if rows > img.height() || cols > img.width() {
        return Err(Error::InvalidArgument(format!(
            "{rows}x{cols} grid does not fit a {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let xs = cell_extents(img.width(), cols);
    let ys = cell_extents(img.height(), rows);
    let mut parts = Vec::with_capacity(xs.len() * ys.len());
    for &(y, h) in &ys {
        for &(x, w) in &xs {
            let index = parts.len();
            parts.push(Part {
                image: img.crop_unchecked(x, y, w, h, part_id(img.source_id(), index)),
                rect: Rect { x, y, w, h },
                label: None,
            });
        }
    }
    Ok(PartSet { source_id: img.source_id().to_string(), parts })
}

pub fn slice_crops(img: &Image, rects: &[CropRect]) -> Result<PartSet> {
    for (index, r) in rects.iter().enumerate() {
        let fits = r.w > 0
            && r.h > 0
            && u64::from(r.x) + u64::from(r.w) <= u64::from(img.width())
            && u64::from(r.y) + u64::from(r.h) <= u64::from(img.height());
        if !fits {
            return Err(Error::RectOutOfBounds {
                index,
                x: r.x,
                y: r.y,
                w: r.w,
                h: r.h,
                img_w: img.width(),
                img_h: img.height(),
            });
        }
    }
    let parts = rects
        .iter()
        .enumerate()
        .map(|(index, r)| Part {
            image: img.crop_unchecked(r.x, r.y, r.w, r.h, part_id(img.source_id(), index)),
            rect: r.rect(),
            label: r.label.clone(),
        })
        .collect();
    Ok(PartSet { source_id: img.source_id().to_string(), parts })
}

pub fn slice(img: &Image, spec: &CropSpec) -> Result<PartSet> {
    spec.validate()?;
    match spec {
        CropSpec::Uniform { rows, cols } => slice_uniform(img, *rows, *cols),
        CropSpec::Explicit { rects } => slice_crops(img, rects),
    }
}
