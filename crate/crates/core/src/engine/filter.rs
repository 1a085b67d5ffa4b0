//! Novelty-band filtering of the candidate pool.

use serde::{Deserialize, Serialize};

use super::types::{BandSpace, Candidate};
use super::EngineError;

/// Slack for float comparisons at band edges, so that e.g. `|0.3 - 0.5|`
/// counts as inside a band of half-width 0.2.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub halfwidth: f64,
    pub widen_step: f64,
    /// Widening stops once this many candidates survive.
    pub min_retained: usize,
    pub space: BandSpace,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            halfwidth: 0.2,
            widen_step: 0.1,
            min_retained: 4,
            space: BandSpace::Distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSelection {
    /// Indices of surviving pool members, in pool order.
    pub retained: Vec<usize>,
    pub halfwidth: f64,
    pub widened: bool,
}

/// Selects pool indices whose band coordinate lies within `novelty ± h`.
/// Starting from the configured half-width, `h` grows by `widen_step` until
/// enough candidates survive or the band covers all of `[0, 1]`.
pub fn select_band(
    origin_distances: &[f64],
    novelty: f64,
    config: &BandConfig,
) -> Result<BandSelection, EngineError> {
    if origin_distances.is_empty() {
        return Err(EngineError::EmptyPool);
    }
    let coords: Vec<f64> = origin_distances
        .iter()
        .map(|&d| config.space.coordinate(d))
        .collect();
    let mut step = 0u32;
    loop {
        let halfwidth = config.halfwidth + f64::from(step) * config.widen_step;
        let retained: Vec<usize> = coords
            .iter()
            .enumerate()
            .filter(|(_, &c)| (c - novelty).abs() <= halfwidth + EDGE_EPS)
            .map(|(i, _)| i)
            .collect();
        let covers_unit = novelty - halfwidth <= EDGE_EPS && novelty + halfwidth >= 1.0 - EDGE_EPS;
        if retained.len() >= config.min_retained || covers_unit || config.widen_step <= 0.0 {
            return Ok(BandSelection {
                retained,
                halfwidth,
                widened: step > 0,
            });
        }
        step += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub retained: Vec<Candidate>,
    pub halfwidth: f64,
    pub widened: bool,
}

pub fn novelty_filter(
    pool: &[Candidate],
    novelty: f64,
    config: &BandConfig,
) -> Result<FilterOutcome, EngineError> {
    let distances: Vec<f64> = pool.iter().map(|c| c.origin_distance).collect();
    let band = select_band(&distances, novelty, config)?;
    Ok(FilterOutcome {
        retained: band.retained.iter().map(|&i| pool[i].clone()).collect(),
        halfwidth: band.halfwidth,
        widened: band.widened,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIVE: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

    fn picked(distances: &[f64], novelty: f64) -> (Vec<f64>, f64) {
        let band = select_band(distances, novelty, &BandConfig::default()).unwrap();
        (band.retained.iter().map(|&i| distances[i]).collect(), band.halfwidth)
    }

    #[test]
    fn centred_band_membership() {
        let fixed = BandConfig { widen_step: 0.0, ..BandConfig::default() };
        let band = select_band(&FIVE, 0.5, &fixed).unwrap();
        assert_eq!(band.retained, vec![1, 2, 3]);
        assert!(!band.widened);
    }

    /// Three survive at +-0.2 and +-0.3, so the band keeps growing to +-0.4.
    #[test]
    fn centred_band_widens_below_four() {
        let (kept, h) = picked(&FIVE, 0.5);
        assert_eq!(kept, FIVE.to_vec());
        assert!((h - 0.4).abs() < 1e-12);
    }

    /// Hand trace at novelty 0: +-0.2 keeps {0.1}; +-0.3 and +-0.4 keep
    /// {0.1, 0.3}; +-0.5 and +-0.6 keep {0.1, 0.3, 0.5}; +-0.7 keeps four.
    #[test]
    fn widening_from_zero_novelty() {
        let (kept, h) = picked(&FIVE, 0.0);
        assert_eq!(kept, vec![0.1, 0.3, 0.5, 0.7]);
        assert!((h - 0.7).abs() < 1e-12);
    }

    /// Brute-force schedule: for each half-width 0.2 + 0.1k, count distances
    /// within reach of 1.0 and stop at the first count >= 4.
    #[test]
    fn widening_from_full_novelty_keeps_the_farthest() {
        let distances = [0.05, 0.12, 0.2, 0.33, 0.41, 0.47, 0.52, 0.58];
        let mut expected_h = None;
        for k in 0..20 {
            let h = 0.2 + 0.1 * k as f64;
            let n = distances.iter().filter(|&&d| (1.0 - d) <= h + 1e-9).count();
            if n >= 4 {
                expected_h = Some(h);
                break;
            }
        }
        let (kept, h) = picked(&distances, 1.0);
        assert!((h - expected_h.unwrap()).abs() < 1e-12);
        assert_eq!(kept, vec![0.41, 0.47, 0.52, 0.58]);
    }

    #[test]
    fn tiny_pool_stops_when_band_covers_unit_interval() {
        let band = select_band(&[0.5, 0.6], 0.0, &BandConfig::default()).unwrap();
        assert_eq!(band.retained, vec![0, 1]);
        assert!(band.halfwidth >= 1.0 - 1e-9);
    }

    #[test]
    fn empty_pool_is_an_error() {
        assert!(matches!(
            select_band(&[], 0.5, &BandConfig::default()),
            Err(EngineError::EmptyPool)
        ));
    }

    #[test]
    fn similarity_space_mirrors_distance_space() {
        let cfg = BandConfig {
            space: BandSpace::Similarity,
            ..BandConfig::default()
        };
        // Similarities are {0.9, 0.7, 0.5, 0.3, 0.1}; four survive at +-0.6.
        let band = select_band(&FIVE, 0.9, &cfg).unwrap();
        assert_eq!(band.retained, vec![0, 1, 2, 3]);
        assert!((band.halfwidth - 0.6).abs() < 1e-12);
    }
}
