//! Hard ranks, isotonic regression and differentiable soft ranks.
//!
//! The soft rank of `v` is the Euclidean projection of `v / epsilon` onto
//! the permutahedron spanned by the permutations of `(1, ..., K)`. After
//! sorting the input ascending, the projection reduces to one isotonic
//! regression, solved exactly by pool-adjacent-violators.
//!
//! Ranks are ascending: the smallest value gets rank 1, the largest rank K.

use crate::error::{Error, Result};

/// Two adjacent PAV blocks whose means differ by at most this much are
/// pooled. Only affects which Jacobian is reported at exact ties.
pub const POOL_TOLERANCE: f64 = 1e-12;

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::Value(format!("non-finite entry {} at index {i}", v[i]))),
        None => Ok(()),
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must be positive and finite, got {epsilon}")))
    }
}

/// Indices that sort `v` ascending; equal values keep index order.
fn argsort(v: &[f64]) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = v.iter().copied().zip(0..).collect();
    keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Ascending ranks in `[1, K]`; tied entries share the average rank.
pub fn hard_ranks(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("cannot rank an empty vector"));
    }
    check_finite(v)?;
    Ok(hard_ranks_unchecked(v))
}

pub(crate) fn hard_ranks_unchecked(v: &[f64]) -> Vec<f64> {
    let order = argsort(v);
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// A run of pooled entries in the PAV solution.
#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    len: usize,
    sum: f64,
}

impl Block {
    fn mean(&self) -> f64 {
        self.sum / self.len as f64
    }
}

/// Pool-adjacent-violators for a non-decreasing fit.
fn pav_blocks(y: &[f64]) -> Vec<Block> {
    let mut blocks: Vec<Block> = Vec::with_capacity(y.len());
    for (i, &v) in y.iter().enumerate() {
        let mut cur = Block { start: i, len: 1, sum: v };
        while let Some(prev) = blocks.last() {
            if prev.mean() >= cur.mean() - POOL_TOLERANCE {
                cur = Block { start: prev.start, len: prev.len + cur.len, sum: prev.sum + cur.sum };
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push(cur);
    }
    blocks
}

fn expand(blocks: &[Block], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for b in blocks {
        out[b.start..b.start + b.len].fill(b.mean());
    }
    out
}

/// The non-decreasing sequence closest to `v` in least squares.
pub fn isotonic_regression(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("isotonic regression of an empty vector"));
    }
    check_finite(v)?;
    Ok(expand(&pav_blocks(v), v.len()))
}

/// Forward pass of the soft rank, kept around for the backward pass.
pub(crate) struct Projection {
    order: Vec<usize>,
    blocks: Vec<Block>,
    pub(crate) ranks: Vec<f64>,
}

impl Projection {
    /// `uᵀ J`. In sorted coordinates `J = (I - B) / epsilon`, where `B`
    /// averages inside each pooled block.
    pub(crate) fn vjp(&self, u: &[f64], epsilon: f64) -> Vec<f64> {
        let mut grad = vec![0.0; u.len()];
        for b in &self.blocks {
            let idx = &self.order[b.start..b.start + b.len];
            let mean = idx.iter().map(|&i| u[i]).sum::<f64>() / b.len as f64;
            for &i in idx {
                grad[i] = (u[i] - mean) / epsilon;
            }
        }
        grad
    }
}

pub(crate) fn project(v: &[f64], epsilon: f64) -> Projection {
    let k = v.len();
    let order = argsort(v);
    let z: Vec<f64> = order.iter().map(|&i| v[i] / epsilon).collect();
    // sorted z minus the sorted target ranks (1..K)
    let y: Vec<f64> = z.iter().enumerate().map(|(p, &zp)| zp - (p + 1) as f64).collect();
    let blocks = pav_blocks(&y);
    let mut ranks = vec![0.0; k];
    for b in &blocks {
        let m = b.mean();
        for p in b.start..b.start + b.len {
            ranks[order[p]] = z[p] - m;
        }
    }
    Projection { order, blocks, ranks }
}

/// Soft ranks of `v`: projection of `v / epsilon` onto the permutahedron.
///
/// Small `epsilon` recovers hard ranks on distinct inputs; large `epsilon`
/// pulls every entry towards `(K + 1) / 2`.
pub fn soft_rank(v: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    if v.is_empty() {
        return Err(Error::invalid("cannot rank an empty vector"));
    }
    check_finite(v)?;
    Ok(project(v, epsilon).ranks)
}

/// `upstreamᵀ · J` where `J` is the Jacobian of [`soft_rank`] at `v`.
///
/// Valid almost everywhere; at exact ties the pooled Jacobian is used.
pub fn soft_rank_vjp(v: &[f64], epsilon: f64, upstream: &[f64]) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    if v.is_empty() {
        return Err(Error::invalid("cannot rank an empty vector"));
    }
    if upstream.len() != v.len() {
        return Err(Error::invalid(format!(
            "upstream length {} != input length {}",
            upstream.len(),
            v.len()
        )));
    }
    check_finite(v)?;
    Ok(project(v, epsilon).vjp(upstream, epsilon))
}
