//! JSON documents written by the CLI.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sheetrefine_core::{Rect, RefineReport};

pub const PARTS_INDEX: &str = "parts.json";
pub const REFINE_REPORT: &str = "refine_report.json";
pub const MANIFEST: &str = "manifest.json";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const KEPT_DIR: &str = "kept";

#[derive(Debug, Serialize, Deserialize)]
pub struct PartsIndex {
    pub source: String,
    pub parts: Vec<PartEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartEntry {
    pub index: usize,
    pub file: String,
    #[serde(flatten)]
    pub rect: Rect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Refine report plus the file name of every scored part.
#[derive(Debug, Serialize, Deserialize)]
pub struct RefineReportFile {
    pub parts: Vec<String>,
    #[serde(flatten)]
    pub report: RefineReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestImage {
    /// Relative to the manifest's directory.
    pub file: String,
    pub part_index: usize,
    pub score: f64,
}

/// Hand-off for an external personalization trainer: exactly the kept parts.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub character_prompt: String,
    pub style: String,
    pub images: Vec<ManifestImage>,
    pub refine_report_path: String,
    pub created_at: Option<String>,
    pub tool_version: String,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Tracks files written by a command so a failed run can remove them.
#[derive(Default)]
pub struct Written {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Written {
    pub fn file(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    pub fn dir(&mut self, path: PathBuf) {
        self.dirs.push(path);
    }

    pub fn rollback(self) {
        for f in self.files.iter().rev() {
            let _ = std::fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = std::fs::remove_dir(d);
        }
    }
}
