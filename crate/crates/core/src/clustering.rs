//! k-means on the raw features; its assignments are the targets of the
//! cluster-observability loss.

use rand::Rng;
use serde::Serialize;

use crate::data::{sq_dist, DataMatrix, RunSeed};
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_N_INIT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult {
    pub k: usize,
    pub assignments: Vec<usize>,
    /// k×d, row-major.
    pub centroids: Vec<f64>,
    pub dim: usize,
    pub inertia: f64,
    /// Inertia after every Lloyd assignment step of the winning restart.
    #[serde(skip)]
    pub inertia_trace: Vec<f64>,
}

impl ClusterResult {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    /// Recomputes the inertia from the assignments.
    pub fn recompute_inertia(&self, data: &DataMatrix) -> f64 {
        data.iter_rows()
            .zip(&self.assignments)
            .map(|(x, &c)| sq_dist(x, self.centroid(c)))
            .sum()
    }
}

/// Nearest centroid, ties resolved towards the lowest id.
fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn predict_cluster(result: &ClusterResult, point: &[f64]) -> Result<usize> {
    if point.len() != result.dim {
        return Err(Error::invalid(format!(
            "point has {} coordinates, centroids have {}",
            point.len(),
            result.dim
        )));
    }
    Ok(nearest(point, &result.centroids, result.dim).0)
}

fn kmeans_plus_plus<R: Rng>(data: &DataMatrix, k: usize, rng: &mut R) -> Vec<f64> {
    let n = data.rows();
    let d = data.cols();
    let mut centroids = Vec::with_capacity(k * d);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(data.row(first));
    let mut closest: Vec<f64> = data.iter_rows().map(|x| sq_dist(x, data.row(first))).collect();
    for _ in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in closest.iter().enumerate() {
                acc += w;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // all remaining mass sits on existing centroids
            rng.random_range(0..n)
        };
        let c = data.row(pick);
        centroids.extend_from_slice(c);
        for (cl, x) in closest.iter_mut().zip(data.iter_rows()) {
            *cl = cl.min(sq_dist(x, c));
        }
    }
    centroids
}

fn assign(data: &DataMatrix, centroids: &[f64]) -> Vec<(usize, f64)> {
    let d = data.cols();
    par::map_range(data.rows(), |i| nearest(data.row(i), centroids, d))
}

fn lloyd(data: &DataMatrix, k: usize, mut centroids: Vec<f64>, max_iters: usize) -> ClusterResult {
    let d = data.cols();
    let mut assignments: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut inertia;
    let mut iter = 0;
    loop {
        let nearest = assign(data, &centroids);
        let new_assign: Vec<usize> = nearest.iter().map(|&(c, _)| c).collect();
        inertia = nearest.iter().map(|&(_, dd)| dd).sum::<f64>();
        trace.push(inertia);
        let converged = new_assign == assignments;
        assignments = new_assign;
        if converged || iter >= max_iters {
            break;
        }
        iter += 1;

        // update step, fixed summation order
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (x, &c) in data.iter_rows().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut dists: Vec<f64> = nearest.iter().map(|&(_, dd)| dd).collect();
        for j in 0..k {
            if counts[j] > 0 {
                for t in 0..d {
                    centroids[j * d + t] = sums[j * d + t] / counts[j] as f64;
                }
            }
        }
        // repair empty clusters with the point farthest from its centroid
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let (far, _) = dists
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &dd)| if dd > best.1 { (i, dd) } else { best });
            let old = assignments[far];
            counts[old] -= 1;
            counts[j] = 1;
            assignments[far] = j;
            dists[far] = 0.0;
            centroids[j * d..(j + 1) * d].copy_from_slice(data.row(far));
            if counts[old] > 0 {
                let mut fresh = vec![0.0; d];
                for (x, &c) in data.iter_rows().zip(&assignments) {
                    if c == old {
                        fresh.iter_mut().zip(x).for_each(|(f, v)| *f += v);
                    }
                }
                for (t, f) in fresh.into_iter().enumerate() {
                    centroids[old * d + t] = f / counts[old] as f64;
                }
            }
        }
    }
    ClusterResult { k, assignments, centroids, dim: d, inertia, inertia_trace: trace }
}

/// Best of `n_init` k-means++-seeded Lloyd runs, by inertia.
pub fn kmeans_fit(data: &DataMatrix, k: usize, seed: RunSeed, max_iters: usize, n_init: usize) -> Result<ClusterResult> {
    let n = data.rows();
    if k < 1 || k > n {
        return Err(Error::invalid(format!("cluster count {k} must lie in [1, {n}]")));
    }
    let mut rng = seed.rng(RunSeed::KMEANS);
    let mut best: Option<ClusterResult> = None;
    for _ in 0..n_init.max(1) {
        let init = kmeans_plus_plus(data, k, &mut rng);
        let result = lloyd(data, k, init, max_iters);
        if best.as_ref().is_none_or(|b| result.inertia < b.inertia) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}
