use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID_PHRASE: &str = "from multiple angles";
pub const ALTERNATE_GRID_PHRASE: &str = "from different perspectives";

/// A sheet prompt: `<character>, <grid phrase>, <style>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPrompt {
    pub character_description: String,
    pub style_description: String,
    pub grid_phrase: String,
    pub rendered: String,
}

/// Assembles the prompt; an empty style drops its separator.
/// `grid_phrase` falls back to [`DEFAULT_GRID_PHRASE`].
pub fn build_grid_prompt(character: &str, style: &str, grid_phrase: Option<&str>) -> Result<GridPrompt> {
    let character = character.trim();
    if character.is_empty() {
        return Err(Error::InvalidArgument("character description must not be empty".into()));
    }
    let style = style.trim();
    let grid_phrase = grid_phrase.map(str::trim).filter(|p| !p.is_empty()).unwrap_or(DEFAULT_GRID_PHRASE);

    let mut rendered = format!("{character}, {grid_phrase}");
    if !style.is_empty() {
        rendered.push_str(", ");
        rendered.push_str(style);
    }
    Ok(GridPrompt {
        character_description: character.to_string(),
        style_description: style.to_string(),
        grid_phrase: grid_phrase.to_string(),
        rendered,
    })
}
