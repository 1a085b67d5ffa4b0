//! Synthetic candidate pools for tests and benchmarks that should not depend
//! on a chat or embedding provider.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::engine::{origin_distance, select_suggestions, splice, Candidate, EngineConfig, ExpansionRequest, SuggestionSet};
use crate::vector::normalize;

pub fn random_unit(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) {
            return v;
        }
    }
}

/// `n` candidates for `request` with random unit embeddings, measured
/// against a random origin embedding.
pub fn random_pool(request: &ExpansionRequest, n: usize, dim: usize, seed: u64) -> Vec<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = random_unit(dim, &mut rng);
    (0..n)
        .map(|i| {
            // Mix in the origin so distances spread over [0, 1].
            let w: f64 = rng.random_range(0.0..1.0);
            let noise = random_unit(dim, &mut rng);
            let mut embedding: Vec<f64> = origin.iter().zip(&noise).map(|(o, r)| w * o + (1.0 - w) * r).collect();
            if !normalize(&mut embedding) {
                embedding = noise;
            }
            let span_text = format!("variant {i}");
            Candidate {
                full_prompt: splice(&request.origin_prompt, &request.span, &span_text),
                origin_distance: origin_distance(&embedding, &origin),
                span_text,
                embedding,
            }
        })
        .collect()
}

/// A full suggestion set built from [`random_pool`].
pub fn random_suggestion_set(request: &ExpansionRequest, n: usize, dim: usize, seed: u64) -> SuggestionSet {
    let pool = random_pool(request, n, dim, seed);
    select_suggestions(request, &pool, &EngineConfig::default(), seed).expect("non-empty pool")
}
