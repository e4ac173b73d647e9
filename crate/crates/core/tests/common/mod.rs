#![allow(dead_code)]

use pccdr::losses::{cluster_loss, ClassifierHead};
use pccdr::trainer::{Adam, AdamConfig};
use pccdr::DataMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DataMatrix {
    let values = (0..rows * cols)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect();
    DataMatrix::new(rows, cols, values).unwrap()
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn numeric_grad(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// True when a one-sided difference disagrees with the other side, i.e. a
/// kink of a piecewise-smooth `f` lies within `h` of `x` along some axis.
pub fn near_kink(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> bool {
    let f0 = f(x);
    let mut p = x.to_vec();
    (0..x.len()).any(|i| {
        p[i] = x[i] + h;
        let fwd = (f(&p) - f0) / h;
        p[i] = x[i] - h;
        let bwd = (f0 - f(&p)) / h;
        p[i] = x[i];
        (fwd - bwd).abs() > 1e-3 * fwd.abs().max(bwd.abs()).max(1e-3)
    })
}

/// `|a - b|_2 / max(|a|_2, |b|_2, 1e-6)`; the floor keeps rounding noise
/// of a vanishing gradient from counting as a relative error.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-6)
}

pub fn with_values(like: &DataMatrix, values: &[f64]) -> DataMatrix {
    DataMatrix::new(like.rows(), like.cols(), values.to_vec()).unwrap()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Plain two-pass Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va.sqrt() * vb.sqrt())
}

/// Average ranks by counting smaller and equal entries.
pub fn counting_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// `rho[i][j]`: 1 + the number of points closer to `i` than `j`, ties going
/// to the smaller index. The diagonal stays 0.
pub fn brute_ranks(p: &DataMatrix) -> Vec<Vec<usize>> {
    let n = p.rows();
    let d = |a: usize, b: usize| euclid(p.row(a), p.row(b));
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return 0;
                    }
                    1 + (0..n)
                        .filter(|&l| l != i && l != j)
                        .filter(|&l| d(i, l) < d(i, j) || (d(i, l) == d(i, j) && l < j))
                        .count()
                })
                .collect()
        })
        .collect()
}

pub fn brute_trust(rx: &[Vec<usize>], ry: &[Vec<usize>], k: usize) -> f64 {
    let n = rx.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j != i && ry[i][j] <= k && rx[i][j] > k {
                sum += (rx[i][j] - k) as f64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * sum
}

pub fn brute_mrre(rx: &[Vec<usize>], ry: &[Vec<usize>], k: usize) -> (f64, f64) {
    let n = rx.len();
    let (mut fals, mut miss) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let (a, b) = (rx[i][j] as f64, ry[i][j] as f64);
            if ry[i][j] <= k {
                fals += (a - b).abs() / b;
            }
            if rx[i][j] <= k {
                miss += (b - a).abs() / a;
            }
        }
    }
    let c: f64 = (1..=k).map(|l| (n as f64 - 2.0 * l as f64 + 1.0).abs() / l as f64).sum::<f64>() * n as f64;
    (1.0 - fals / c, 1.0 - miss / c)
}

pub fn brute_global(x: &DataMatrix, y: &DataMatrix) -> (f64, f64) {
    let n = x.rows();
    let mut dx = Vec::new();
    let mut dy = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            dx.push(euclid(x.row(i), x.row(j)));
            dy.push(euclid(y.row(i), y.row(j)));
        }
    }
    (pearson(&dx, &dy), pearson(&counting_ranks(&dx), &counting_ranks(&dy)))
}

pub fn brute_report(x: &DataMatrix, y: &DataMatrix, k: usize) -> [f64; 6] {
    let rx = brute_ranks(x);
    let ry = brute_ranks(y);
    let (mf, mm) = brute_mrre(&rx, &ry, k);
    let (p, s) = brute_global(x, y);
    [brute_trust(&rx, &ry, k), brute_trust(&ry, &rx, k), mf, mm, p, s]
}

/// Every ordered partition of `0..k` as a block label per element, labels
/// forming `0..p` for some `p`.
pub fn ordered_partitions(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = k.pow(k as u32);
    for code in 0..total {
        let labels: Vec<usize> = (0..k).map(|i| (code / k.pow(i as u32)) % k).collect();
        let used = labels.iter().max().unwrap() + 1;
        if (0..used).all(|b| labels.contains(&b)) {
            out.push(labels);
        }
    }
    out
}

/// Membership in the permutahedron of `(1..=k)`: every subset sum is at
/// least the sum of the `|S|` smallest ranks, with equality for the full set.
pub fn in_permutahedron(mu: &[f64], tol: f64) -> bool {
    let k = mu.len();
    for mask in 1u32..(1 << k) {
        let members: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let s: f64 = members.iter().map(|&i| mu[i]).sum();
        let c = members.len() as f64;
        let floor = c * (c + 1.0) / 2.0;
        if s < floor - tol {
            return false;
        }
        if members.len() == k && (s - floor).abs() > tol {
            return false;
        }
    }
    true
}

/// Projection of `z` onto the permutahedron by trying the affine hull of
/// every face and keeping the closest feasible candidate.
pub fn exhaustive_projection(z: &[f64]) -> Vec<f64> {
    let k = z.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for labels in ordered_partitions(k) {
        let blocks = labels.iter().max().unwrap() + 1;
        let mut candidate = vec![0.0; k];
        let mut next_rank = 1.0;
        for b in 0..blocks {
            let members: Vec<usize> = (0..k).filter(|&i| labels[i] == b).collect();
            let size = members.len() as f64;
            let rank_mean = next_rank + (size - 1.0) / 2.0;
            next_rank += size;
            let z_mean = members.iter().map(|&i| z[i]).sum::<f64>() / size;
            for &i in &members {
                candidate[i] = z[i] - z_mean + rank_mean;
            }
        }
        if !in_permutahedron(&candidate, 1e-10) {
            continue;
        }
        let d: f64 = candidate.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, candidate));
        }
    }
    best.unwrap().1
}

/// Softmax regression trained from zero by full-batch gradient descent;
/// returns its training accuracy.
pub fn linear_probe_accuracy(emb: &DataMatrix, targets: &[usize], classes: usize) -> f64 {
    let mut head = ClassifierHead::zeros(classes, emb.cols());
    let mut opt = Adam::new(head.weights.len(), 0.1, AdamConfig::default());
    for _ in 0..1000 {
        let g = cluster_loss(&[(targets, &head)], emb).unwrap().grad_heads.remove(0);
        opt.step(&mut head.weights, &g);
    }
    let hits = (0..emb.rows()).filter(|&i| head.predict(emb.row(i)) == targets[i]).count();
    hits as f64 / emb.rows() as f64
}
