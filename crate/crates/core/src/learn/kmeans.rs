//! Seeded k-means with k-means++ initialization and restarts, used to
//! initialize the hidden-state assignments.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<DVector<f64>>,
    /// Mean squared distance to the assigned center.
    pub distortion: f64,
}

/// Lowest-distortion run over `restarts` seeded k-means++ runs. Cluster
/// indices are canonicalized by sorting centers lexicographically, so the
/// labeling does not depend on sample order.
pub fn kmeans(points: &[DVector<f64>], k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::EmptyInput { context: "kmeans" });
    }
    if points.len() < k {
        return Err(Error::TooFewSamples {
            context: "kmeans",
            needed: k,
            actual: points.len(),
        });
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let run_seed = seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let run = kmeans_single(points, k, run_seed)?;
        if best.as_ref().is_none_or(|b| run.distortion < b.distortion) {
            best = Some(run);
        }
    }
    let mut result = best.expect("restarts >= 1");
    canonicalize(&mut result);
    Ok(result)
}

fn kmeans_single(points: &[DVector<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(points, k, &mut rng);
    let n = points.len();
    let mut assignments = vec![0usize; n];
    let mut last_distortion = f64::INFINITY;
    for _ in 0..200 {
        // assign
        let mut distortion = 0.0;
        for (j, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = (p - center).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assignments[j] = best;
            distortion += best_d;
        }
        distortion /= n as f64;

        // update
        let dim = points[0].len();
        let mut sums = vec![DVector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (j, p) in points.iter().enumerate() {
            sums[assignments[j]] += p;
            counts[assignments[j]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            }
        }
        fix_empty_clusters(points, &mut centers, &mut assignments, &mut counts)?;

        if (last_distortion - distortion).abs() <= 1e-12 * distortion.max(1e-300) {
            last_distortion = distortion;
            break;
        }
        last_distortion = distortion;
    }
    Ok(KMeansResult {
        assignments,
        centers,
        distortion: last_distortion,
    })
}

fn plus_plus_init(points: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let n = points.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());
    let mut dist2: Vec<f64> = points
        .iter()
        .map(|p| (p - &centers[0]).norm_squared())
        .collect();
    while centers.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (j, &d) in dist2.iter().enumerate() {
                u -= d;
                if u <= 0.0 {
                    pick = j;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[next].clone());
        for (j, p) in points.iter().enumerate() {
            let d = (p - centers.last().unwrap()).norm_squared();
            if d < dist2[j] {
                dist2[j] = d;
            }
        }
    }
    centers
}

/// Moves the farthest member of the largest cluster into each empty cluster.
fn fix_empty_clusters(
    points: &[DVector<f64>],
    centers: &mut [DVector<f64>],
    assignments: &mut [usize],
    counts: &mut [usize],
) -> Result<()> {
    loop {
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return Ok(());
        };
        let largest = counts
            .iter()
            .enumerate()
            .max_by_key(|&(_, &c)| c)
            .map(|(i, _)| i)
            .expect("non-empty cluster list");
        if counts[largest] <= 1 {
            let mut distinct: Vec<&DVector<f64>> = Vec::new();
            for p in points {
                if !distinct.iter().any(|q| *q == p) {
                    distinct.push(p);
                }
            }
            return Err(Error::EmptyCluster {
                k: centers.len(),
                distinct: distinct.len(),
            });
        }
        let farthest = points
            .iter()
            .enumerate()
            .filter(|(j, _)| assignments[*j] == largest)
            .max_by(|(_, a), (_, b)| {
                let da = (*a - &centers[largest]).norm_squared();
                let db = (*b - &centers[largest]).norm_squared();
                da.total_cmp(&db)
            })
            .map(|(j, _)| j)
            .expect("largest cluster has members");
        centers[empty] = points[farthest].clone();
        assignments[farthest] = empty;
        counts[largest] -= 1;
        counts[empty] += 1;
    }
}

/// Reorders clusters by lexicographic center comparison and remaps the
/// assignments accordingly.
fn canonicalize(result: &mut KMeansResult) {
    let k = result.centers.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ca = &result.centers[a];
        let cb = &result.centers[b];
        for i in 0..ca.len() {
            match ca[i].total_cmp(&cb[i]) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    let mut remap = vec![0usize; k];
    for (new_idx, &old_idx) in order.iter().enumerate() {
        remap[old_idx] = new_idx;
    }
    result.centers = order.iter().map(|&i| result.centers[i].clone()).collect();
    for a in result.assignments.iter_mut() {
        *a = remap[*a];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: (f64, f64), n: usize, spread: f64, seed: u64) -> Vec<DVector<f64>> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                DVector::from_vec(vec![
                    center.0 + rng.random_range(-spread..spread),
                    center.1 + rng.random_range(-spread..spread),
                ])
            })
            .collect()
    }

    #[test]
    fn recovers_separated_clusters() {
        let mut points = blob((0.0, 0.0), 40, 0.1, 1);
        points.extend(blob((10.0, 0.0), 40, 0.1, 2));
        points.extend(blob((0.0, 10.0), 40, 0.1, 3));
        let result = kmeans(&points, 3, 5, 42).unwrap();
        // Every blob maps to a single cluster.
        for chunk in result.assignments.chunks(40) {
            assert!(chunk.iter().all(|&a| a == chunk[0]));
        }
        assert!(result.distortion < 0.02);
    }

    #[test]
    fn k_equals_one_gives_sample_mean() {
        let points = blob((3.0, -2.0), 50, 0.5, 7);
        let result = kmeans(&points, 1, 3, 0).unwrap();
        let mut mean = DVector::zeros(2);
        for p in &points {
            mean += p;
        }
        mean /= points.len() as f64;
        assert!((&result.centers[0] - &mean).norm() < 1e-9);
    }

    #[test]
    fn duplicated_dataset_reaches_same_distortion() {
        let mut points = blob((0.0, 0.0), 30, 0.1, 1);
        points.extend(blob((8.0, 8.0), 30, 0.1, 2));
        let single = kmeans(&points, 2, 5, 11).unwrap();
        let mut doubled = points.clone();
        doubled.extend(points.iter().cloned());
        let double = kmeans(&doubled, 2, 5, 11).unwrap();
        assert!((single.distortion - double.distortion).abs() < 1e-9);
    }

    #[test]
    fn deterministic_per_seed() {
        let points = blob((0.0, 0.0), 60, 2.0, 5);
        let a = kmeans(&points, 4, 3, 9).unwrap();
        let b = kmeans(&points, 4, 3, 9).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn too_few_samples_is_rejected() {
        let points = blob((0.0, 0.0), 2, 0.1, 1);
        assert!(matches!(
            kmeans(&points, 3, 2, 0).unwrap_err(),
            Error::TooFewSamples { .. }
        ));
    }

    #[test]
    fn identical_points_cannot_fill_k_clusters() {
        let points = vec![DVector::from_vec(vec![1.0, 1.0]); 10];
        assert!(matches!(
            kmeans(&points, 2, 2, 0).unwrap_err(),
            Error::EmptyCluster { .. }
        ));
    }
}
