use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::TransformError;
use crate::tabular::{CellValue, Column, VariableType};

const SAMPLE_LIMIT: usize = 20;
const SAMPLE_WEIGHT: f64 = 0.5;

/// Maps an attribute name and sample values to a fixed-length vector.
pub trait EmbeddingProvider {
    /// Stable identifier; embeddings from different providers never mix.
    fn id(&self) -> String;
    fn embed(&self, name: &str, samples: &[String]) -> Vec<f64>;
}

/// Hashed character-trigram counts. Each string is lowercased and padded as
/// `^text$`; every trigram is hashed with 64-bit FNV-1a modulo `dim`. Name
/// trigrams count 1, sample-value trigrams count 0.5, and the result is
/// L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrigramProvider {
    pub dim: usize,
}

impl Default for TrigramProvider {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl TrigramProvider {
    fn add(&self, v: &mut [f64], text: &str, weight: f64) {
        let chars: Vec<char> = format!("^{}$", text.to_lowercase()).chars().collect();
        for w in chars.windows(3) {
            let tri: String = w.iter().collect();
            v[(fnv1a(tri.as_bytes()) % self.dim as u64) as usize] += weight;
        }
    }
}

impl EmbeddingProvider for TrigramProvider {
    fn id(&self) -> String {
        format!("trigram-fnv1a-{}", self.dim)
    }

    fn embed(&self, name: &str, samples: &[String]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.add(&mut v, name, 1.0);
        for s in samples.iter().take(SAMPLE_LIMIT) {
            self.add(&mut v, s, SAMPLE_WEIGHT);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeEmbedding {
    pub name: String,
    pub provider: String,
    pub vector: Vec<f64>,
}

/// Embeds a column from its name and first distinct observed values.
pub fn embed_attribute(
    provider: &dyn EmbeddingProvider,
    c: &Column,
) -> Result<AttributeEmbedding, TransformError> {
    if c.name().trim().is_empty() {
        return Err(TransformError::EmptyName);
    }
    let mut seen = HashSet::new();
    let samples: Vec<String> = c
        .cells()
        .iter()
        .filter(|v| !v.is_missing())
        .map(CellValue::render)
        .filter(|s| seen.insert(s.clone()))
        .take(SAMPLE_LIMIT)
        .collect();
    Ok(AttributeEmbedding {
        name: c.name().to_string(),
        provider: provider.id(),
        vector: provider.embed(c.name(), &samples),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMetric {
    Cosine,
    Euclidean,
}

/// `1 − cos θ`; identical vectors are exactly 0 apart.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot / (na * nb)).max(0.0)
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    crate::stats::euclidean(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    pub metric: DistanceMetric,
    /// Largest distance at which steps are shared.
    pub threshold: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            metric: DistanceMetric::Cosine,
            threshold: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeInfo {
    pub vtype: VariableType,
    pub embedding: AttributeEmbedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    pub from: String,
    pub to: String,
    pub distance: f64,
}

/// Copies steps to attributes that have none from the nearest attribute of
/// the same type that has its own steps, when within the threshold. Only
/// explicitly assigned steps are copied, so results never chain. Ties go to
/// the earlier attribute in `attrs`.
pub fn propagate_steps<S: Clone>(
    attrs: &[AttributeInfo],
    steps: &mut BTreeMap<String, Vec<S>>,
    cfg: &PropagationConfig,
) -> Result<Vec<Propagation>, TransformError> {
    if let Some(first) = attrs.first() {
        if attrs.iter().any(|a| a.embedding.provider != first.embedding.provider) {
            return Err(TransformError::MixedProviders);
        }
    }
    let has_steps = |name: &str, s: &BTreeMap<String, Vec<S>>| s.get(name).is_some_and(|v| !v.is_empty());
    let sources: Vec<&AttributeInfo> = attrs
        .iter()
        .filter(|a| has_steps(&a.embedding.name, steps))
        .collect();
    let mut out = Vec::new();
    for target in attrs {
        if has_steps(&target.embedding.name, steps) {
            continue;
        }
        let mut best: Option<(f64, &AttributeInfo)> = None;
        for src in sources.iter().filter(|s| s.vtype == target.vtype) {
            let d = match cfg.metric {
                DistanceMetric::Cosine => cosine_distance(&src.embedding.vector, &target.embedding.vector),
                DistanceMetric::Euclidean => euclidean_distance(&src.embedding.vector, &target.embedding.vector),
            };
            if d <= cfg.threshold && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, src));
            }
        }
        if let Some((distance, src)) = best {
            let inherited = steps[&src.embedding.name].clone();
            steps.insert(target.embedding.name.clone(), inherited);
            out.push(Propagation {
                from: src.embedding.name.clone(),
                to: target.embedding.name.clone(),
                distance,
            });
        }
    }
    Ok(out)
}
