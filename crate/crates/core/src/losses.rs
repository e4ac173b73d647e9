//! Correlation and cluster-observability objectives with analytic gradients.
//!
//! Distances are always Euclidean. For point `i` and reference `j`,
//! `dx[i][j] = |x_i - x_ref(j)|` and `dy[i][j] = |y_i - y_ref(j)|`; both are
//! stored as flat row-major N×K buffers. Self-distances (a point measured
//! against itself as a reference) stay in the loss.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{dist, DataMatrix, Embedding, RunSeed};
use crate::error::{Error, Result};
use crate::par;
use crate::softrank::{self, hard_ranks_unchecked};

/// Rows per partial sum when scattering gradients onto reference points.
/// Fixed so the summation order never depends on the thread count.
const SCATTER_CHUNK: usize = 64;

/// Sampled reference points and the precomputed input-space distances.
#[derive(Debug, Clone)]
pub struct ReferenceSet {
    pub indices: Vec<usize>,
    /// N×K input-space distances.
    pub dx: Vec<f64>,
    /// Row-wise hard ranks of `dx`.
    pub rx: Vec<f64>,
    n: usize,
}

impl ReferenceSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn dx_row(&self, i: usize) -> &[f64] {
        let k = self.k();
        &self.dx[i * k..(i + 1) * k]
    }

    pub fn rx_row(&self, i: usize) -> &[f64] {
        let k = self.k();
        &self.rx[i * k..(i + 1) * k]
    }

    /// Builds the set for explicitly chosen reference indices.
    pub fn from_indices(data: &DataMatrix, indices: Vec<usize>) -> Result<Self> {
        let n = data.rows();
        let k = indices.len();
        if k == 0 {
            return Err(Error::invalid("reference set is empty"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!("reference index {bad} out of range for {n} points")));
        }
        let rows: Vec<(Vec<f64>, Vec<f64>)> = par::map_range(n, |i| {
            let d: Vec<f64> = indices.iter().map(|&r| dist(data.row(i), data.row(r))).collect();
            let r = hard_ranks_unchecked(&d);
            (d, r)
        });
        let mut dx = Vec::with_capacity(n * k);
        let mut rx = Vec::with_capacity(n * k);
        for (d, r) in rows {
            dx.extend(d);
            rx.extend(r);
        }
        let first = dx[0];
        if dx.iter().all(|&v| v == first) {
            return Err(Error::DegenerateData("all reference distances are equal".into()));
        }
        Ok(Self { indices, dx, rx, n })
    }
}

/// Samples `k` distinct reference points uniformly and precomputes their
/// distances and ranks.
pub fn build_reference_set(data: &DataMatrix, k: usize, seed: RunSeed) -> Result<ReferenceSet> {
    let n = data.rows();
    if k < 1 || k > n {
        return Err(Error::invalid(format!("reference count {k} must lie in [1, {n}]")));
    }
    let mut rng = seed.rng(RunSeed::REFERENCES);
    let indices = index::sample(&mut rng, n, k).into_vec();
    ReferenceSet::from_indices(data, indices)
}

/// Value and gradient with respect to the flat `dy` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceLoss {
    pub value: f64,
    pub grad_dy: Vec<f64>,
    /// Set when a variance vanished and the loss was clamped to zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValueGrad {
    pub value: f64,
    /// N×m, row-major.
    pub grad_embedding: Vec<f64>,
    /// One k×(m+1) gradient per cluster task; empty for other losses.
    pub grad_heads: Vec<Vec<f64>>,
    pub degenerate: bool,
}

struct Moments {
    mean: f64,
    norm: f64,
}

fn moments(v: &[f64]) -> Moments {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let norm = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>().sqrt();
    Moments { mean, norm }
}

fn vanishes(m: &Moments, len: usize) -> bool {
    m.norm / (len as f64).sqrt() <= 1e-12 * m.mean.abs().max(1.0)
}

/// Pearson correlation of `a` and `b` and its gradient with respect to
/// `b`, or `None` when either side has (numerically) zero variance.
fn pearson_grad(a: &[f64], b: &[f64]) -> Option<(f64, Vec<f64>)> {
    let ma = moments(a);
    let mb = moments(b);
    if vanishes(&ma, a.len()) || vanishes(&mb, b.len()) {
        return None;
    }
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma.mean) * (y - mb.mean)).sum();
    let r = cov / (ma.norm * mb.norm);
    // d r / d b_k = (a_k - mean_a) / (|a| |b|) - r (b_k - mean_b) / |b|^2
    let grad = a
        .iter()
        .zip(b)
        .map(|(x, y)| ((x - ma.mean) / ma.norm - r * (y - mb.mean) / mb.norm) / mb.norm)
        .collect();
    Some((r, grad))
}

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("{what}: lengths {a} and {b} differ")));
    }
    Ok(())
}

/// Negative Pearson correlation between flat distance vectors.
pub fn pearson_loss(dx: &[f64], dy: &[f64]) -> Result<DistanceLoss> {
    check_len(dx.len(), dy.len(), "pearson_loss")?;
    if dx.len() < 2 {
        return Err(Error::invalid("pearson_loss needs at least two entries"));
    }
    if vanishes(&moments(dx), dx.len()) {
        return Err(Error::DegenerateData("input distances have zero variance".into()));
    }
    Ok(match pearson_grad(dx, dy) {
        Some((r, g)) => DistanceLoss { value: -r, grad_dy: g.into_iter().map(|v| -v).collect(), degenerate: false },
        None => DistanceLoss { value: 0.0, grad_dy: vec![0.0; dy.len()], degenerate: true },
    })
}

/// Negative correlation between the hard ranks `rx` and the row-wise soft
/// ranks of `dy` (rows of length `k`). Each `dy` row is divided by its mean
/// before ranking when that mean is positive.
pub fn spearman_loss(rx: &[f64], dy: &[f64], k: usize, epsilon: f64) -> Result<DistanceLoss> {
    check_len(rx.len(), dy.len(), "spearman_loss")?;
    if k == 0 || dy.is_empty() || !dy.len().is_multiple_of(k) {
        return Err(Error::invalid(format!("{} entries do not form rows of length {k}", dy.len())));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = dy.len() / k;
    let forward: Vec<(f64, Vec<f64>, softrank::Projection)> = par::map_range(n, |i| {
        let row = &dy[i * k..(i + 1) * k];
        let mean = row.iter().sum::<f64>() / k as f64;
        let scaled: Vec<f64> = if mean > 0.0 { row.iter().map(|v| v / mean).collect() } else { row.to_vec() };
        let proj = softrank::project(&scaled, epsilon);
        (mean, scaled, proj)
    });
    let ry: Vec<f64> = forward.iter().flat_map(|(_, _, p)| p.ranks.iter().copied()).collect();
    let Some((r, g_ry)) = pearson_grad(rx, &ry) else {
        return Ok(DistanceLoss { value: 0.0, grad_dy: vec![0.0; dy.len()], degenerate: true });
    };
    let mut grad_dy = vec![0.0; dy.len()];
    par::for_each_row_mut(&mut grad_dy, k, |i, out| {
        let (mean, scaled, proj) = &forward[i];
        let upstream: Vec<f64> = g_ry[i * k..(i + 1) * k].iter().map(|v| -v).collect();
        let g_s = proj.vjp(&upstream, epsilon);
        if *mean > 0.0 {
            // s_j = dy_j / mean(dy)
            let dot: f64 = g_s.iter().zip(scaled).map(|(g, s)| g * s).sum();
            let corr = dot / (*mean * k as f64);
            for (o, g) in out.iter_mut().zip(&g_s) {
                *o = g / mean - corr;
            }
        } else {
            out.copy_from_slice(&g_s);
        }
    });
    Ok(DistanceLoss { value: -r, grad_dy, degenerate: false })
}

/// Embedding-space distances from every point to every reference, N×K.
pub fn reference_distances(refs: &ReferenceSet, emb: &Embedding) -> Vec<f64> {
    let k = refs.k();
    let mut dy = vec![0.0; refs.n() * k];
    par::for_each_row_mut(&mut dy, k, |i, out| {
        for (o, &r) in out.iter_mut().zip(&refs.indices) {
            *o = dist(emb.row(i), emb.row(r));
        }
    });
    dy
}

/// Chain rule from `dL/d dy` to `dL/d y`. Zero distances contribute no
/// gradient.
pub fn backprop_distances(refs: &ReferenceSet, emb: &Embedding, dy: &[f64], grad_dy: &[f64]) -> Vec<f64> {
    let n = refs.n();
    let k = refs.k();
    let m = emb.cols();
    let chunks = n.div_ceil(SCATTER_CHUNK);
    // per chunk: own-row gradients plus partial sums for each reference
    let parts: Vec<(Vec<f64>, Vec<f64>)> = par::map_range(chunks, |c| {
        let lo = c * SCATTER_CHUNK;
        let hi = (lo + SCATTER_CHUNK).min(n);
        let mut own = vec![0.0; (hi - lo) * m];
        let mut to_refs = vec![0.0; k * m];
        for i in lo..hi {
            let yi = emb.row(i);
            for (j, &r) in refs.indices.iter().enumerate() {
                let d = dy[i * k + j];
                let g = grad_dy[i * k + j];
                if d <= 0.0 || g == 0.0 {
                    continue;
                }
                let yr = emb.row(r);
                for t in 0..m {
                    let step = g * (yi[t] - yr[t]) / d;
                    own[(i - lo) * m + t] += step;
                    to_refs[j * m + t] -= step;
                }
            }
        }
        (own, to_refs)
    });
    let mut grad = Vec::with_capacity(n * m);
    for (own, _) in &parts {
        grad.extend_from_slice(own);
    }
    for (_, to_refs) in &parts {
        for (j, &r) in refs.indices.iter().enumerate() {
            for t in 0..m {
                grad[r * m + t] += to_refs[j * m + t];
            }
        }
    }
    grad
}

/// Breakdown of the combined correlation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationLoss {
    pub pearson: f64,
    pub spearman: f64,
    pub total: LossValueGrad,
}

/// `0.5 * pearson + 0.5 * spearman` on the reference distances of `emb`,
/// with the gradient taken with respect to the embedding.
pub fn correlation_loss(refs: &ReferenceSet, emb: &Embedding, epsilon: f64) -> Result<LossValueGrad> {
    correlation_loss_parts(refs, emb, epsilon).map(|c| c.total)
}

pub fn correlation_loss_parts(refs: &ReferenceSet, emb: &Embedding, epsilon: f64) -> Result<CorrelationLoss> {
    if emb.rows() != refs.n() {
        return Err(Error::invalid(format!(
            "embedding has {} rows, reference set expects {}",
            emb.rows(),
            refs.n()
        )));
    }
    let dy = reference_distances(refs, emb);
    let p = pearson_loss(&refs.dx, &dy)?;
    let s = spearman_loss(&refs.rx, &dy, refs.k(), epsilon)?;
    let grad_dy: Vec<f64> = p.grad_dy.iter().zip(&s.grad_dy).map(|(a, b)| 0.5 * (a + b)).collect();
    let grad_embedding = backprop_distances(refs, emb, &dy, &grad_dy);
    Ok(CorrelationLoss {
        pearson: p.value,
        spearman: s.value,
        total: LossValueGrad {
            value: 0.5 * p.value + 0.5 * s.value,
            grad_embedding,
            grad_heads: Vec::new(),
            degenerate: p.degenerate || s.degenerate,
        },
    })
}

/// Linear classifier over embedding coordinates: `k` rows of `m` weights
/// followed by a bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierHead {
    pub classes: usize,
    pub in_dim: usize,
    pub weights: Vec<f64>,
}

impl ClassifierHead {
    pub fn zeros(classes: usize, in_dim: usize) -> Self {
        Self { classes, in_dim, weights: vec![0.0; classes * (in_dim + 1)] }
    }

    pub fn logits(&self, e: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim + 1)
            .map(|w| w[..self.in_dim].iter().zip(e).map(|(a, b)| a * b).sum::<f64>() + w[self.in_dim])
            .collect()
    }

    pub fn predict(&self, e: &[f64]) -> usize {
        let l = self.logits(e);
        (0..l.len()).fold(0, |best, c| if l[c] > l[best] { c } else { best })
    }
}

/// Mean over tasks of the mean softmax cross-entropy between each head's
/// predictions and its cluster assignments.
pub fn cluster_loss(tasks: &[(&[usize], &ClassifierHead)], emb: &Embedding) -> Result<LossValueGrad> {
    if tasks.is_empty() {
        return Err(Error::invalid("cluster_loss needs at least one task"));
    }
    let n = emb.rows();
    let m = emb.cols();
    let scale = 1.0 / (n as f64 * tasks.len() as f64);
    let mut value = 0.0;
    let mut grad_embedding = vec![0.0; n * m];
    let mut grad_heads = Vec::with_capacity(tasks.len());
    for (t, (targets, head)) in tasks.iter().enumerate() {
        if head.in_dim != m || head.weights.len() != head.classes * (m + 1) {
            return Err(Error::invalid(format!(
                "task {t}: head expects {} inputs, embedding has {m}",
                head.in_dim
            )));
        }
        check_len(targets.len(), n, "cluster targets")?;
        if let Some(&bad) = targets.iter().find(|&&c| c >= head.classes) {
            return Err(Error::invalid(format!("task {t}: target {bad} >= {} classes", head.classes)));
        }
        let rows: Vec<(f64, Vec<f64>)> = par::map_range(n, |i| {
            let logits = head.logits(emb.row(i));
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            let lse = max + sum.ln();
            let target = targets[i];
            let mut dlogits: Vec<f64> = logits.iter().map(|l| (l - lse).exp() * scale).collect();
            dlogits[target] -= scale;
            (lse - logits[target], dlogits)
        });
        let stride = m + 1;
        let mut gw = vec![0.0; head.weights.len()];
        let mut task_loss = 0.0;
        for (i, (loss, dl)) in rows.iter().enumerate() {
            task_loss += loss;
            let e = emb.row(i);
            for (c, &g) in dl.iter().enumerate() {
                let w = &head.weights[c * stride..(c + 1) * stride];
                for q in 0..m {
                    grad_embedding[i * m + q] += g * w[q];
                    gw[c * stride + q] += g * e[q];
                }
                gw[c * stride + m] += g;
            }
        }
        value += task_loss / n as f64;
        grad_heads.push(gw);
    }
    Ok(LossValueGrad { value: value / tasks.len() as f64, grad_embedding, grad_heads, degenerate: false })
}

/// `lambda` times the mean squared deviation of `emb` from `init`.
pub fn anchor_loss(emb: &Embedding, init: &Embedding, lambda: f64) -> Result<LossValueGrad> {
    if emb.rows() != init.rows() || emb.cols() != init.cols() {
        return Err(Error::invalid(format!(
            "embedding is {}x{}, anchor is {}x{}",
            emb.rows(),
            emb.cols(),
            init.rows(),
            init.cols()
        )));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    let count = emb.values().len() as f64;
    let mut value = 0.0;
    let grad_embedding = emb
        .values()
        .iter()
        .zip(init.values())
        .map(|(e, e0)| {
            let d = e - e0;
            value += d * d;
            2.0 * lambda * d / count
        })
        .collect();
    Ok(LossValueGrad { value: lambda * value / count, grad_embedding, grad_heads: Vec::new(), degenerate: false })
}
