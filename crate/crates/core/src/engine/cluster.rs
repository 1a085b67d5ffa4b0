//! K-means over unit-norm embeddings and representative selection.
//!
//! On the unit sphere squared Euclidean distance is `2 - 2cos`, so plain
//! Lloyd iterations cluster by cosine distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::Candidate;
use crate::vector::squared_euclidean;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_euclidean(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding: the first centre is uniform, later ones are drawn with
/// probability proportional to squared distance from the nearest centre.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.random_range(0..points.len())];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_euclidean(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            // Fewer distinct points than k: take the lowest unused index.
            (0..points.len()).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_euclidean(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centroids).0).collect()
}

/// Moves a point into every empty cluster: the point farthest from its own
/// centroid, taken only from clusters with more than one member.
fn fill_empty_clusters(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize]) -> bool {
    let k = centroids.len();
    let mut moved = false;
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return moved;
        };
        let mut donor: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if sizes[assignments[i]] < 2 {
                continue;
            }
            let d = squared_euclidean(p, &centroids[assignments[i]]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let Some((i, _)) = donor else {
            return moved;
        };
        assignments[i] = empty;
        moved = true;
    }
}

fn recompute_centroids(points: &[Vec<f64>], assignments: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (sum, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            sum.iter_mut().for_each(|s| *s /= n as f64);
        }
    }
    sums
}

/// Lloyd's algorithm with k-means++ seeding. Stops when assignments stop
/// changing or after `max_iters` updates. Requires `points.len() >= k > 0`.
pub fn kmeans(points: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> Clustering {
    assert!(k > 0 && points.len() >= k, "kmeans needs at least k points");
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments = assign(points, &centroids);
    fill_empty_clusters(points, &centroids, &mut assignments);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        centroids = recompute_centroids(points, &assignments, k, dim);
        let mut next = assign(points, &centroids);
        fill_empty_clusters(points, &centroids, &mut next);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    centroids = recompute_centroids(points, &assignments, k, dim);
    Clustering {
        assignments,
        centroids,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// One pool index per cluster, ordered by cluster id.
    pub representatives: Vec<usize>,
    pub assignments: Vec<usize>,
}

/// Picks `k` representatives from `embeddings`. Pools of at most `k` members
/// are returned whole; otherwise each representative is the cluster member
/// nearest its centroid, ties going to the lower index.
pub fn select_representatives(embeddings: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> Selection {
    if embeddings.len() <= k {
        let all: Vec<usize> = (0..embeddings.len()).collect();
        return Selection {
            representatives: all.clone(),
            assignments: all,
        };
    }
    let clustering = kmeans(embeddings, k, max_iters, seed);
    let mut best: Vec<Option<(usize, f64)>> = vec![None; k];
    for (i, (p, &c)) in embeddings.iter().zip(&clustering.assignments).enumerate() {
        let d = squared_euclidean(p, &clustering.centroids[c]);
        if best[c].is_none_or(|(_, bd)| d < bd) {
            best[c] = Some((i, d));
        }
    }
    Selection {
        representatives: best.into_iter().flatten().map(|(i, _)| i).collect(),
        assignments: clustering.assignments,
    }
}

pub fn cluster_candidates(retained: &[Candidate], k: usize, max_iters: usize, seed: u64) -> Selection {
    let embeddings: Vec<Vec<f64>> = retained.iter().map(|c| c.embedding.clone()).collect();
    select_representatives(&embeddings, k, max_iters, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![10.0, 10.0],
            vec![0.1, 0.0],
            vec![10.0, 0.0],
            vec![0.0, 10.0],
            vec![10.1, 10.0],
            vec![10.0, 0.1],
            vec![0.0, 10.1],
        ]
    }

    fn sse(points: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
        let centroids = recompute_centroids(points, assignment, k, points[0].len());
        points
            .iter()
            .zip(assignment)
            .map(|(p, &a)| squared_euclidean(p, &centroids[a]))
            .sum()
    }

    /// Exhaustive search over all 4^8 labelings with no empty cluster.
    fn brute_force_partition(points: &[Vec<f64>], k: usize) -> Vec<usize> {
        let n = points.len();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for code in 0..k.pow(n as u32) {
            let mut labels = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                labels.push(c % k);
                c /= k;
            }
            if (0..k).any(|cl| !labels.contains(&cl)) {
                continue;
            }
            let cost = sse(points, &labels, k);
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, labels));
            }
        }
        best.unwrap().1
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn four_pairs_match_brute_force_optimum() {
        let points = pairs();
        let optimum = brute_force_partition(&points, 4);
        for seed in 0..20 {
            let clustering = kmeans(&points, 4, 100, seed);
            assert!(same_partition(&clustering.assignments, &optimum), "seed {seed}");
            let sel = select_representatives(&points, 4, 100, seed);
            let mut groups: Vec<usize> = sel.representatives.iter().map(|&i| optimum[i]).collect();
            groups.sort_unstable();
            groups.dedup();
            assert_eq!(groups.len(), 4, "one representative per pair, seed {seed}");
        }
    }

    #[test]
    fn small_pool_returns_everything() {
        let sel = select_representatives(&pairs()[..4], 4, 100, 1);
        assert_eq!(sel.representatives, vec![0, 1, 2, 3]);
    }

    #[test]
    fn identical_points_still_fill_every_cluster() {
        let points = vec![vec![1.0, 0.0]; 6];
        let c = kmeans(&points, 4, 100, 3);
        let mut used = c.assignments.clone();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 4);
        let sel = select_representatives(&points, 4, 100, 3);
        let mut reps = sel.representatives.clone();
        reps.dedup();
        assert_eq!(reps.len(), 4);
    }

    #[test]
    fn deterministic_for_seed() {
        let points = pairs();
        assert_eq!(kmeans(&points, 4, 100, 42), kmeans(&points, 4, 100, 42));
    }
}
