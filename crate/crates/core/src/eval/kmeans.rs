//! Lloyd's algorithm with k-means++ seeding and deterministic restarts.
//!
//! Seeding indexes are canonicalized by sorted point order, so the outcome
//! is invariant under permutations of the input for a fixed seed.

use crate::error::{Error, Result};
use crate::num::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult<F> {
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<F>>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: F,
}

fn dist_sq<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// Runs `restarts` independent k-means++/Lloyd rounds from one seeded RNG
/// stream and keeps the lowest-inertia solution (first wins ties).
pub fn kmeans<F: Scalar>(
    points: &[Vec<F>],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KmeansResult<F>> {
    if k < 1 {
        return Err(Error::param("k must be at least 1"));
    }
    if k > points.len() {
        return Err(Error::param(format!(
            "k = {k} exceeds the {} points",
            points.len()
        )));
    }
    if restarts < 1 {
        return Err(Error::param("need at least one restart"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::param("points have mixed dimensions"));
    }

    // Canonical view: indexes sorted by point value, so RNG draws select the
    // same geometric points whatever the input order.
    let mut canonical: Vec<usize> = (0..points.len()).collect();
    canonical.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .find_map(|(x, y)| x.partial_cmp(y).filter(|o| o.is_ne()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let ordered: Vec<&Vec<F>> = canonical.iter().map(|&i| &points[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KmeansResult<F>> = None;
    for _ in 0..restarts {
        let run = run_once(&ordered, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart ran");

    // Map assignments back to input order.
    let mut assignments = vec![0usize; points.len()];
    for (pos, &orig) in canonical.iter().enumerate() {
        assignments[orig] = best.assignments[pos];
    }
    Ok(KmeansResult {
        assignments,
        centroids: best.centroids,
        inertia: best.inertia,
    })
}

fn run_once<F: Scalar>(points: &[&Vec<F>], k: usize, rng: &mut ChaCha8Rng) -> KmeansResult<F> {
    let n = points.len();
    let mut centroids: Vec<Vec<F>> = Vec::with_capacity(k);

    // k-means++: D^2-weighted selection.
    centroids.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<F> = points.iter().map(|p| dist_sq(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total = d2.iter().fold(F::zero(), |a, &b| a + b);
        let pick = if total > F::zero() {
            let u = F::from_f64_lossy(rng.gen::<f64>()) * total;
            let mut acc = F::zero();
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc = acc + w;
                if acc > u {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All mass on existing centroids; any point works.
            rng.gen_range(0..n)
        };
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            let d = dist_sq(p, centroids.last().expect("just pushed"));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    let mut assignments = vec![0usize; n];
    for iter in 0..300 {
        // Assignment step; ties go to the lowest centroid index.
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best_c = 0;
            let mut best_d = dist_sq(p, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = dist_sq(p, centroid);
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            if assignments[i] != best_c || iter == 0 {
                changed = changed || assignments[i] != best_c;
                assignments[i] = best_c;
            }
        }
        if iter > 0 && !changed {
            break;
        }

        // Update step.
        let dim = points[0].len();
        let mut sums = vec![vec![F::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assignments[i]] += 1;
            for (s, &v) in sums[assignments[i]].iter_mut().zip(p.iter()) {
                *s = *s + v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the farthest point of any
                // multi-member cluster (lowest index on ties).
                let mut far: Option<(usize, F)> = None;
                for (i, p) in points.iter().enumerate() {
                    if counts[assignments[i]] < 2 {
                        continue;
                    }
                    let d = dist_sq(p, &centroids[assignments[i]]);
                    if far.is_none_or(|(_, fd)| d > fd) {
                        far = Some((i, d));
                    }
                }
                if let Some((i, _)) = far {
                    counts[assignments[i]] -= 1;
                    for (s, &v) in sums[assignments[i]].iter_mut().zip(points[i].iter()) {
                        *s = *s - v;
                    }
                    assignments[i] = c;
                    counts[c] = 1;
                    sums[c] = points[i].clone();
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let count = F::from_count(counts[c]);
                for s in sums[c].iter_mut() {
                    *s = *s / count;
                }
                centroids[c] = sums[c].clone();
            }
        }
    }

    let inertia = points
        .iter()
        .zip(&assignments)
        .fold(F::zero(), |acc, (p, &c)| acc + dist_sq(p, &centroids[c]));
    KmeansResult {
        assignments,
        centroids,
        inertia,
    }
}
