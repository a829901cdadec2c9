//! Candidate sheet acquisition: prompt assembly, the HTTP generation client
//! and a deterministic synthetic sheet generator.

mod client;
mod prompt;
mod synth;

pub use client::{request_grid, GenClient, GenRequest, ENDPOINT_ENV};
pub use prompt::{build_grid_prompt, GridPrompt, ALTERNATE_GRID_PHRASE, DEFAULT_GRID_PHRASE};
pub use synth::{synth_sheet, SplitMix64, SynthSheet, SynthSheetSpec};
