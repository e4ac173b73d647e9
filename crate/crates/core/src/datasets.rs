//! Synthetic datasets for tests and benchmarks.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{DataMatrix, RunSeed};
use crate::error::{Error, Result};

/// Swiss roll plus its generating parameter for every point.
#[derive(Debug, Clone)]
pub struct SwissRoll {
    pub data: DataMatrix,
    pub t: Vec<f64>,
}

/// Classical Swiss roll: `t ~ U[1.5π, 4.5π]`, `h ~ U[0, 21]`, point
/// `(t cos t, h, t sin t)` plus isotropic Gaussian noise. Labels hold
/// `floor(t)` for coloring.
pub fn make_swiss_roll(n: usize, noise: f64, seed: RunSeed) -> Result<DataMatrix> {
    Ok(make_swiss_roll_with_t(n, noise, seed)?.data)
}

pub fn make_swiss_roll_with_t(n: usize, noise: f64, seed: RunSeed) -> Result<SwissRoll> {
    if n == 0 {
        return Err(Error::invalid("swiss roll needs at least one point"));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!("noise must be non-negative, got {noise}")));
    }
    let mut rng = seed.rng(RunSeed::DATASET);
    let mut values = Vec::with_capacity(3 * n);
    let mut ts = Vec::with_capacity(n);
    for _ in 0..n {
        let t = 1.5 * PI * (1.0 + 2.0 * rng.random::<f64>());
        let h = 21.0 * rng.random::<f64>();
        let mut p = [t * t.cos(), h, t * t.sin()];
        if noise > 0.0 {
            for c in &mut p {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c += noise * z;
            }
        }
        values.extend_from_slice(&p);
        ts.push(t);
    }
    let labels = ts.iter().map(|t| t.floor() as i64).collect();
    let data = DataMatrix::new(n, 3, values)?.with_labels(labels)?;
    Ok(SwissRoll { data, t: ts })
}

/// Isotropic Gaussian blobs. Points are split into contiguous runs, one per
/// center, with sizes differing by at most one; labels hold the center id.
pub fn make_blobs<C: AsRef<[f64]>>(n: usize, centers: &[C], std: f64, seed: RunSeed) -> Result<DataMatrix> {
    if centers.is_empty() {
        return Err(Error::invalid("at least one center is required"));
    }
    if n < centers.len() {
        return Err(Error::invalid(format!("{n} points cannot cover {} centers", centers.len())));
    }
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::invalid(format!("std must be non-negative, got {std}")));
    }
    let d = centers[0].as_ref().len();
    if d == 0 || centers.iter().any(|c| c.as_ref().len() != d) {
        return Err(Error::invalid("centers must share a nonzero dimension"));
    }
    let mut rng = seed.rng(RunSeed::DATASET);
    let c = centers.len();
    let (base, extra) = (n / c, n % c);
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (id, center) in centers.iter().enumerate() {
        let count = base + usize::from(id < extra);
        for _ in 0..count {
            for &mu in center.as_ref() {
                let z: f64 = StandardNormal.sample(&mut rng);
                values.push(mu + std * z);
            }
            labels.push(id as i64);
        }
    }
    DataMatrix::new(n, d, values)?.with_labels(labels)
}

/// `count` centers drawn uniformly from `[-box_half, box_half]^dim`.
pub fn random_centers(count: usize, dim: usize, box_half: f64, seed: RunSeed) -> Vec<Vec<f64>> {
    let mut rng = seed.derive(0xB10B).rng(RunSeed::DATASET);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-box_half..=box_half)).collect())
        .collect()
}
