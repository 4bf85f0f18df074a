//! Small 2-D point clouds and a dense-grid minimizer for checking the
//! pre-image solver against brute force.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::kernel::{median_distance, KernelFunction, KernelModel, Retention};
use crate::preimage::PreImageProblem;

#[derive(Debug, Clone)]
pub struct ClusterInstance {
    pub points: Vec<Vec<f64>>,
    pub anchor: Vec<f64>,
}

/// One or two Gaussian blobs in the unit square, plus an anchor near a
/// training point.
pub fn cluster_instance(seed: u64, points_per_cluster: usize) -> ClusterInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clusters = rng.random_range(1..=2);
    let spread = Normal::new(0.0, 0.12).expect("valid std");
    let mut points = Vec::new();
    for _ in 0..clusters {
        let c = [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)];
        for _ in 0..points_per_cluster {
            points.push(vec![c[0] + spread.sample(&mut rng), c[1] + spread.sample(&mut rng)]);
        }
    }
    let base = &points[rng.random_range(0..points.len())];
    let jitter = Normal::new(0.0, 0.03).expect("valid std");
    let anchor = vec![base[0] + jitter.sample(&mut rng), base[1] + jitter.sample(&mut rng)];
    ClusterInstance { points, anchor }
}

/// rbf model at the median-distance width.
pub fn cluster_model(instance: &ClusterInstance, retention: Retention) -> Result<KernelModel<f64>> {
    let sigma = median_distance(&instance.points).expect("distinct points");
    KernelModel::fit(instance.points.clone(), KernelFunction::rbf(sigma)?, retention)
}

/// Axis-aligned box of `points`, widened by `margin` of its extent per side.
pub fn bounding_box(points: &[Vec<f64>], margin: f64) -> [(f64, f64); 2] {
    let mut b = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for p in points {
        for d in 0..2 {
            b[d].0 = b[d].0.min(p[d]);
            b[d].1 = b[d].1.max(p[d]);
        }
    }
    b.map(|(lo, hi)| {
        let w = hi - lo;
        (lo - margin * w, hi + margin * w)
    })
}

/// Brute-force minimizer of the pre-image distance over a `steps × steps`
/// lattice spanning `bounds` (endpoints included).
pub fn grid_argmin(problem: &PreImageProblem<'_, f64>, phi: f64, bounds: [(f64, f64); 2], steps: usize) -> Result<(Vec<f64>, f64)> {
    let at = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (steps - 1) as f64;
    let mut best = (vec![0.0, 0.0], f64::INFINITY);
    for a in 0..steps {
        for b in 0..steps {
            let x = [at(bounds[0], a), at(bounds[1], b)];
            let d = problem.distance(&x, phi)?;
            if d < best.1 {
                best = (x.to_vec(), d);
            }
        }
    }
    Ok(best)
}
