use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HigError;
use crate::providers::{cosine_similarity, Embedding, VectorError};

/// Directed document-layer edge; `weight` is the cosine similarity of the
/// two document vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub target: usize,
    pub weight: f32,
}

/// Links every document to the `k` other documents most cosine-similar to
/// it (all others when `k >= M - 1`).
///
/// Neighbour lists are ordered by similarity descending; equal similarities
/// are broken by ascending corpus position. Edges are directed: `j` being
/// among `d`'s top `k` says nothing about `d` being among `j`'s. Negative
/// similarities are kept.
pub fn build_document_graph(vectors: &[Embedding], k: usize) -> Result<Vec<Vec<Edge>>, HigError> {
    let Some(first) = vectors.first() else {
        return Err(HigError::EmptyCorpus);
    };
    let dim = first.dim();
    for (position, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(HigError::Vector {
                position,
                source: VectorError::DimensionMismatch {
                    left: dim,
                    right: v.dim(),
                },
            });
        }
        if v.norm() == 0.0 {
            return Err(HigError::Vector {
                position,
                source: VectorError::ZeroVector,
            });
        }
    }
    if k == 0 {
        return Ok(vec![Vec::new(); vectors.len()]);
    }
    vectors
        .par_iter()
        .enumerate()
        .map(|(src, v)| {
            let mut scored = Vec::with_capacity(vectors.len().saturating_sub(1));
            for (j, other) in vectors.iter().enumerate() {
                if j == src {
                    continue;
                }
                let sim = cosine_similarity(v, other)
                    .map_err(|source| HigError::Vector { position: j, source })?;
                scored.push((j, sim));
            }
            let keep = k.min(scored.len());
            let by_rank = |a: &(usize, f64), b: &(usize, f64)| {
                b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
            };
            if keep < scored.len() {
                scored.select_nth_unstable_by(keep, by_rank);
                scored.truncate(keep);
            }
            scored.sort_by(by_rank);
            Ok(scored
                .into_iter()
                .map(|(target, sim)| Edge {
                    target,
                    weight: sim as f32,
                })
                .collect())
        })
        .collect()
}
