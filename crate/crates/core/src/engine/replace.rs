//! Choosing a new suggestion after the user rejects one.

use super::types::Candidate;
use super::EngineError;
use crate::vector::cosine_distance;

/// Returns the eligible pool index maximizing
/// `dist(x, removed) + sum(dist(x, c) for c in current)`.
///
/// `removed`, every index in `current` and every index in `excluded` are
/// ineligible. Ties go to the lowest index.
pub fn select_replacement_by<T>(
    pool: &[T],
    removed: usize,
    current: &[usize],
    excluded: &[usize],
    dist: impl Fn(&T, &T) -> f64,
) -> Result<usize, EngineError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in pool.iter().enumerate() {
        if i == removed || current.contains(&i) || excluded.contains(&i) {
            continue;
        }
        let mut score = dist(x, &pool[removed]);
        for &c in current {
            score += dist(x, &pool[c]);
        }
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i).ok_or(EngineError::PoolExhausted)
}

/// [`select_replacement_by`] with cosine distance between embeddings.
pub fn select_replacement(
    pool: &[Candidate],
    removed: usize,
    current: &[usize],
    excluded: &[usize],
) -> Result<usize, EngineError> {
    select_replacement_by(pool, removed, current, excluded, |a, b| {
        cosine_distance(&a.embedding, &b.embedding)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs(a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    #[test]
    fn one_dimensional_toy() {
        // 0.1 -> 0.1+0.1+0.3 = 0.5; 0.5 -> 0.5+0.3+0.1 = 0.9; 0.9 -> 0.9+0.7+0.5 = 2.1
        let pool = [0.0, 0.2, 0.4, 0.1, 0.5, 0.9];
        let pick = select_replacement_by(&pool, 0, &[1, 2], &[], abs).unwrap();
        assert_eq!(pool[pick], 0.9);
    }

    #[test]
    fn single_eligible_wins_regardless_of_score() {
        let pool = [0.0, 0.9, 0.01];
        assert_eq!(select_replacement_by(&pool, 0, &[1], &[], abs).unwrap(), 2);
    }

    #[test]
    fn exhausted_pool() {
        let pool = [0.0, 0.5, 0.7];
        assert!(matches!(
            select_replacement_by(&pool, 0, &[1], &[2], abs),
            Err(EngineError::PoolExhausted)
        ));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let pool = [0.5, 0.0, 1.0, 0.0, 1.0];
        assert_eq!(select_replacement_by(&pool, 0, &[], &[], abs).unwrap(), 1);
    }

    #[test]
    fn cosine_variant_prefers_opposite_direction() {
        let mk = |v: [f64; 2]| Candidate {
            span_text: format!("{v:?}"),
            full_prompt: String::new(),
            embedding: v.to_vec(),
            origin_distance: 0.0,
        };
        let pool = vec![mk([1.0, 0.0]), mk([0.0, 1.0]), mk([-1.0, 0.0]), mk([0.6, 0.8])];
        assert_eq!(select_replacement(&pool, 0, &[], &[]).unwrap(), 2);
    }
}
