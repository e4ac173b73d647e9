//! Embedding-quality metrics.
//!
//! Local metrics compare neighbourhood ranks between the input and the
//! embedding: trustworthiness, continuity and the two mean relative rank
//! errors. MRRE is reported as `1 - error`, so every local metric is
//! "higher is better" with 1 meaning all ranks preserved. Global metrics
//! are the Pearson and Spearman correlations of all pairwise distances.
//!
//! Ranks are 1-based; distance ties are broken by ascending index.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{dist, DataMatrix, Embedding, RunSeed};
use crate::error::{Error, Result};
use crate::par;
use crate::softrank::hard_ranks_unchecked;

pub const DEFAULT_METRIC_K: usize = 25;
pub const DEFAULT_MAX_PAIRS: usize = 2_000_000;

/// Neighbours of every point ordered by distance, with the inverse table.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    n: usize,
    /// N×(N-1): neighbours of i, nearest first.
    order: Vec<u32>,
    /// N×N: rank of j as a neighbour of i; the diagonal holds 0.
    rank: Vec<u32>,
}

impl RankTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.order[i * (self.n - 1)..(i + 1) * (self.n - 1)]
    }

    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.rank[i * self.n + j]
    }
}

/// Neighbours of `i` sorted by (distance, index) and their ranks.
fn rank_row(points: &DataMatrix, i: usize) -> (Vec<u32>, Vec<u32>) {
    let n = points.rows();
    let xi = points.row(i);
    let d: Vec<f64> = (0..n).map(|j| dist(xi, points.row(j))).collect();
    let mut order: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
    order.sort_unstable_by(|&a, &b| d[a as usize].total_cmp(&d[b as usize]).then(a.cmp(&b)));
    let mut rank = vec![0u32; n];
    for (r, &j) in order.iter().enumerate() {
        rank[j as usize] = r as u32 + 1;
    }
    (order, rank)
}

pub fn ranked_neighbors(points: &DataMatrix) -> Result<RankTable> {
    let n = points.rows();
    if n < 2 {
        return Err(Error::invalid("rank table needs at least two points"));
    }
    let rows = par::map_range(n, |i| rank_row(points, i));
    let mut order = Vec::with_capacity(n * (n - 1));
    let mut rank = Vec::with_capacity(n * n);
    for (o, r) in rows {
        order.extend(o);
        rank.extend(r);
    }
    Ok(RankTable { n, order, rank })
}

fn check_pair(x: &DataMatrix, y: &Embedding) -> Result<()> {
    if x.rows() != y.rows() {
        return Err(Error::invalid(format!(
            "input has {} rows, embedding has {}",
            x.rows(),
            y.rows()
        )));
    }
    Ok(())
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || 2 * k >= n {
        return Err(Error::invalid(format!("neighbourhood size {k} must satisfy 1 <= k < N/2 = {}", n as f64 / 2.0)));
    }
    Ok(())
}

/// Raw per-point sums for the four local metrics.
#[derive(Debug, Clone, Copy, Default)]
struct LocalSums {
    trust: f64,
    cont: f64,
    mrre_false: f64,
    mrre_missing: f64,
}

fn local_row(x: &DataMatrix, y: &Embedding, i: usize, k: usize) -> LocalSums {
    let (ox, rx) = rank_row(x, i);
    let (oy, ry) = rank_row(y, i);
    let mut s = LocalSums::default();
    for &j in &oy[..k] {
        let (a, b) = (rx[j as usize] as f64, ry[j as usize] as f64);
        if a > k as f64 {
            s.trust += a - k as f64;
        }
        s.mrre_false += (a - b).abs() / b;
    }
    for &j in &ox[..k] {
        let (a, b) = (rx[j as usize] as f64, ry[j as usize] as f64);
        if b > k as f64 {
            s.cont += b - k as f64;
        }
        s.mrre_missing += (b - a).abs() / a;
    }
    s
}

fn local_sums(x: &DataMatrix, y: &Embedding, k: usize) -> LocalSums {
    let rows = par::map_range(x.rows(), |i| local_row(x, y, i, k));
    rows.iter().fold(LocalSums::default(), |acc, r| LocalSums {
        trust: acc.trust + r.trust,
        cont: acc.cont + r.cont,
        mrre_false: acc.mrre_false + r.mrre_false,
        mrre_missing: acc.mrre_missing + r.mrre_missing,
    })
}

fn tc_norm(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0))
}

fn mrre_norm(n: usize, k: usize) -> f64 {
    let c: f64 = (1..=k).map(|l| (n as f64 - 2.0 * l as f64 + 1.0).abs() / l as f64).sum();
    n as f64 * c
}

/// Penalizes embedded neighbours that were not input-space neighbours.
pub fn trustworthiness(x: &DataMatrix, y: &Embedding, k: usize) -> Result<f64> {
    check_pair(x, y)?;
    check_k(x.rows(), k)?;
    Ok(1.0 - tc_norm(x.rows(), k) * local_sums(x, y, k).trust)
}

/// Penalizes input-space neighbours missing from the embedded neighbourhood.
pub fn continuity(x: &DataMatrix, y: &Embedding, k: usize) -> Result<f64> {
    check_pair(x, y)?;
    check_k(x.rows(), k)?;
    Ok(1.0 - tc_norm(x.rows(), k) * local_sums(x, y, k).cont)
}

/// `(1 - MRRE_false, 1 - MRRE_missing)`.
pub fn mrre(x: &DataMatrix, y: &Embedding, k: usize) -> Result<(f64, f64)> {
    check_pair(x, y)?;
    check_k(x.rows(), k)?;
    let s = local_sums(x, y, k);
    let c = mrre_norm(x.rows(), k);
    Ok((1.0 - s.mrre_false / c, 1.0 - s.mrre_missing / c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalCorrelation {
    pub pearson: f64,
    pub spearman: f64,
    pub pairs_used: usize,
    pub sampled: bool,
}

/// Maps a linear index over the pairs `i < j` (row-major) back to `(i, j)`.
fn decode_pair(n: usize, p: usize) -> (usize, usize) {
    // pairs before row i: i*(2n - i - 1)/2
    let before = |i: usize| i * (2 * n - i - 1) / 2;
    let (mut lo, mut hi) = (0usize, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if before(mid) <= p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, lo + 1 + (p - before(lo)))
}

fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x - ma, y - mb);
        sab += u * v;
        saa += u * u;
        sbb += v * v;
    }
    let flat = |ss: f64, m: f64| (ss / n).sqrt() <= 1e-12 * m.abs().max(1.0);
    (!flat(saa, ma) && !flat(sbb, mb)).then(|| sab / (saa.sqrt() * sbb.sqrt()))
}

/// Pearson and Spearman correlation of pairwise distances. Uses every pair
/// when there are at most `max_pairs`, otherwise a seeded uniform sample of
/// `max_pairs` distinct pairs.
pub fn global_correlation(x: &DataMatrix, y: &Embedding, max_pairs: usize, seed: RunSeed) -> Result<GlobalCorrelation> {
    check_pair(x, y)?;
    let n = x.rows();
    if n < 3 {
        return Err(Error::invalid("global correlation needs at least three points"));
    }
    if max_pairs < 2 {
        return Err(Error::invalid("max_pairs must be at least 2"));
    }
    let total = n * (n - 1) / 2;
    let sampled = total > max_pairs;
    let pairs: Vec<usize> = if sampled {
        let mut idx = index::sample(&mut seed.rng(RunSeed::PAIRS), total, max_pairs).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..total).collect()
    };
    let dists: Vec<(f64, f64)> = par::map_range(pairs.len(), |t| {
        let (i, j) = decode_pair(n, pairs[t]);
        (dist(x.row(i), x.row(j)), dist(y.row(i), y.row(j)))
    });
    let (dx, dy): (Vec<f64>, Vec<f64>) = dists.into_iter().unzip();
    let degenerate = || Error::DegenerateData("pairwise distances are constant".into());
    let pearson = correlation(&dx, &dy).ok_or_else(degenerate)?;
    let spearman = correlation(&hard_ranks_unchecked(&dx), &hard_ranks_unchecked(&dy)).ok_or_else(degenerate)?;
    Ok(GlobalCorrelation { pearson, spearman, pairs_used: pairs.len(), sampled })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub trustworthiness: f64,
    pub continuity: f64,
    pub mrre_false: f64,
    pub mrre_missing: f64,
    pub pearson_global: f64,
    pub spearman_global: f64,
    pub ls_avg: f64,
    pub gs_avg: f64,
    pub k_neighbors: usize,
    pub pairs_used: usize,
    pub pairs_sampled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k: usize,
    pub max_pairs: usize,
    pub seed: RunSeed,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { k: DEFAULT_METRIC_K, max_pairs: DEFAULT_MAX_PAIRS, seed: RunSeed(0) }
    }
}

/// All six metrics with default pair budget and seed.
pub fn evaluate(x: &DataMatrix, y: &Embedding, k: usize) -> Result<MetricReport> {
    evaluate_with(x, y, &EvalOptions { k, ..EvalOptions::default() })
}

pub fn evaluate_with(x: &DataMatrix, y: &Embedding, opts: &EvalOptions) -> Result<MetricReport> {
    check_pair(x, y)?;
    check_k(x.rows(), opts.k)?;
    let n = x.rows();
    let k = opts.k;
    let s = local_sums(x, y, k);
    let tc = tc_norm(n, k);
    let c = mrre_norm(n, k);
    let trustworthiness = 1.0 - tc * s.trust;
    let continuity = 1.0 - tc * s.cont;
    let mrre_false = 1.0 - s.mrre_false / c;
    let mrre_missing = 1.0 - s.mrre_missing / c;
    let g = global_correlation(x, y, opts.max_pairs, opts.seed)?;
    Ok(MetricReport {
        trustworthiness,
        continuity,
        mrre_false,
        mrre_missing,
        pearson_global: g.pearson,
        spearman_global: g.spearman,
        ls_avg: (trustworthiness + continuity + mrre_false + mrre_missing) / 4.0,
        gs_avg: (g.pearson + g.spearman) / 2.0,
        k_neighbors: k,
        pairs_used: g.pairs_used,
        pairs_sampled: g.sampled,
    })
}
