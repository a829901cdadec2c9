//! Embedding-space consistency metrics: image-prompt similarity and identity
//! consistency, both as mean cosine similarities.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub id: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        Self { id: id.into(), values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn mean_of(mut values: Vec<f64>) -> f64 {
    let n = values.len() as f64;
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / n
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Embedding(format!(
            "dimension mismatch: {} ({}) vs {} ({})",
            a.id,
            a.dim(),
            b.id,
            b.dim()
        )));
    }
    if a.dim() == 0 {
        return Err(Error::Embedding(format!("{} is empty", a.id)));
    }
    let (na, nb) = (a.norm(), b.norm());
    for (v, n) in [(a, na), (b, nb)] {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Embedding(format!("{} has zero or non-finite norm", v.id)));
        }
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Mean cosine between each image embedding and the prompt's text embedding.
pub fn prompt_similarity(images: &[EmbeddingVector], text: &EmbeddingVector) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::Embedding("no image embeddings".into()));
    }
    let sims = images.iter().map(|img| cosine_similarity(img, text)).collect::<Result<Vec<_>>>()?;
    Ok(mean_of(sims))
}

/// Mean cosine over all unordered image pairs.
pub fn identity_consistency(images: &[EmbeddingVector]) -> Result<f64> {
    if images.len() < 2 {
        return Err(Error::Embedding(format!("need at least 2 image embeddings, got {}", images.len())));
    }
    let mut sims = Vec::with_capacity(images.len() * (images.len() - 1) / 2);
    for (i, a) in images.iter().enumerate() {
        for b in &images[i + 1..] {
            sims.push(cosine_similarity(a, b)?);
        }
    }
    Ok(mean_of(sims))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub prompt_similarity: f64,
    pub identity_consistency: f64,
    pub n_images: usize,
    pub n_pairs: usize,
}

pub fn evaluate(images: &[EmbeddingVector], text: &EmbeddingVector) -> Result<EvalReport> {
    Ok(EvalReport {
        prompt_similarity: prompt_similarity(images, text)?,
        identity_consistency: identity_consistency(images)?,
        n_images: images.len(),
        n_pairs: images.len() * (images.len() - 1) / 2,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbeddingFile {
    Many(Vec<EmbeddingVector>),
    One(EmbeddingVector),
}

/// Reads a JSON array of `{"id", "values"}` records. A bare single record is
/// also accepted.
pub fn load_embeddings(path: &Path) -> Result<Vec<EmbeddingVector>> {
    if !path.exists() {
        return Err(Error::NotFound { path: path.to_path_buf() });
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let parsed: EmbeddingFile = serde_json::from_str(&text)
        .map_err(|e| Error::Embedding(format!("{}: {e}", path.display())))?;
    Ok(match parsed {
        EmbeddingFile::Many(v) => v,
        EmbeddingFile::One(v) => vec![v],
    })
}
