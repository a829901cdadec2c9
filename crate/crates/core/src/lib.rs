//! Refines a sheet of candidate character images into a consistent subset.
//!
//! Parts cut from a generated sheet are compared pairwise with
//! histogram-based mutual information; parts whose average MI falls more than
//! `k` standard deviations below the mean are discarded.
//!
//! With the default `parallel` feature the pairwise MI kernel runs on the
//! rayon pool. Results are bit-identical to the sequential build.

pub mod error;
pub mod eval;
pub mod generation;
pub mod grid;
pub mod mutual_info;
pub mod raster;
pub mod refine;

pub use error::{Error, Result};
pub use grid::{CropRect, CropSpec, Part, PartSet, Rect};
pub use mutual_info::{AnalysisConfig, MiMatrix};
pub use raster::{BinnedImage, GrayImage, Histogram, Image, JointHistogram};
pub use refine::{RefineConfig, RefineReport};
