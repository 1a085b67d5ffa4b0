//! Diversity measures over the prompts tried in a session.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::origin_distance;
use crate::providers::{EmbeddingClient, ProviderError};
use crate::vector::cosine_similarity;

pub const HISTOGRAM_BUCKETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDigest {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub prompt_count: usize,
    pub pair_count: usize,
    /// Mean cosine similarity over unordered pairs; absent below two prompts.
    pub mean_pairwise_similarity: Option<f64>,
    pub pairwise: Option<PairDigest>,
    /// Counts of prompts per 0.1-wide bucket of distance from the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novelty_histogram: Option<[usize; HISTOGRAM_BUCKETS]>,
}

fn bucket(distance: f64) -> usize {
    ((distance * HISTOGRAM_BUCKETS as f64) as usize).min(HISTOGRAM_BUCKETS - 1)
}

/// Report over precomputed embeddings. `origin`, when given, fills the
/// novelty histogram.
pub fn diversity_from_embeddings(embeddings: &[Vec<f64>], origin: Option<&[f64]>) -> DiversityReport {
    let n = embeddings.len();
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let s = cosine_similarity(&embeddings[i], &embeddings[j]);
            sum += s;
            min = min.min(s);
            max = max.max(s);
            pairs += 1;
        }
    }
    let mean = (pairs > 0).then(|| sum / pairs as f64);
    let novelty_histogram = origin.map(|o| {
        let mut h = [0usize; HISTOGRAM_BUCKETS];
        for e in embeddings {
            h[bucket(origin_distance(e, o))] += 1;
        }
        h
    });
    DiversityReport {
        prompt_count: n,
        pair_count: pairs,
        mean_pairwise_similarity: mean,
        pairwise: mean.map(|mean| PairDigest { min, max, mean }),
        novelty_histogram,
    }
}

pub async fn diversity_report(
    prompts: &[String],
    origin: Option<&str>,
    embedder: &EmbeddingClient,
) -> Result<DiversityReport, ProviderError> {
    let mut texts = prompts.to_vec();
    if let Some(o) = origin {
        texts.push(o.to_string());
    }
    let mut vectors = embedder.embed_texts(&texts).await?;
    let origin_vec = origin.and_then(|_| vectors.pop());
    Ok(diversity_from_embeddings(&vectors, origin_vec.as_deref()))
}

impl DiversityReport {
    /// Aligned two-column table for terminals.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
        let mut rows = vec![
            ("prompts".to_string(), self.prompt_count.to_string()),
            ("pairs".to_string(), self.pair_count.to_string()),
            ("mean similarity".to_string(), fmt(self.mean_pairwise_similarity)),
            ("min similarity".to_string(), fmt(self.pairwise.map(|p| p.min))),
            ("max similarity".to_string(), fmt(self.pairwise.map(|p| p.max))),
        ];
        if let Some(h) = &self.novelty_histogram {
            for (i, count) in h.iter().enumerate() {
                rows.push((
                    format!("distance {:.1}-{:.1}", i as f64 / 10.0, (i + 1) as f64 / 10.0),
                    count.to_string(),
                ));
            }
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v:>8}");
        }
        out
    }
}
