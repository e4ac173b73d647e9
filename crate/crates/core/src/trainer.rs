//! Full-batch optimization of the embedding.
//!
//! `fit_pcc` starts from a small random normal embedding and minimizes
//! `cluster + beta * correlation`, training one linear head per k-means
//! task jointly with the coordinates. `refine_from_init` starts from an
//! existing embedding and minimizes `correlation + lambda * anchor`.

use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clustering::{self, kmeans_fit, ClusterResult};
use crate::data::{DataMatrix, Embedding, RunSeed};
use crate::error::{Error, Result};
use crate::losses::{anchor_loss, build_reference_set, cluster_loss, correlation_loss_parts, ClassifierHead, ReferenceSet};

pub const DEFAULT_CLUSTER_COUNTS: [usize; 5] = [4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias correction, one moment pair per parameter.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64, cfg: AdamConfig) -> Self {
        Self { cfg, lr, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        self.t += 1;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PccConfig {
    pub out_dim: usize,
    /// Reference count; capped at the number of points.
    pub k_refs: usize,
    pub beta: f64,
    /// Empty disables the cluster term.
    pub cluster_counts: Vec<usize>,
    pub epsilon: f64,
    pub iters: usize,
    pub learning_rate: f64,
    pub adam: AdamConfig,
    pub kmeans_max_iters: usize,
    pub kmeans_n_init: usize,
    pub seed: RunSeed,
}

impl Default for PccConfig {
    fn default() -> Self {
        Self {
            out_dim: 2,
            k_refs: 100,
            beta: 10.0,
            cluster_counts: DEFAULT_CLUSTER_COUNTS.to_vec(),
            epsilon: 1.0,
            iters: 500,
            learning_rate: 0.05,
            adam: AdamConfig::default(),
            kmeans_max_iters: clustering::DEFAULT_MAX_ITERS,
            kmeans_n_init: clustering::DEFAULT_N_INIT,
            seed: RunSeed(0),
        }
    }
}

impl PccConfig {
    pub fn validate(&self) -> Result<()> {
        if self.out_dim < 1 {
            return Err(Error::invalid("output dimension must be at least 1"));
        }
        if self.k_refs < 2 {
            return Err(Error::invalid("at least two reference points are required"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be non-negative, got {}", self.beta)));
        }
        if self.cluster_counts.contains(&0) {
            return Err(Error::invalid("cluster counts must be positive"));
        }
        check_common(self.iters, self.learning_rate, self.epsilon)
    }
}

fn check_common(iters: usize, lr: f64, epsilon: f64) -> Result<()> {
    if iters < 1 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub lambda: f64,
    /// Epochs; each runs `inner_steps` Adam steps.
    pub iters: usize,
    pub inner_steps: usize,
    pub k_refs: usize,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub adam: AdamConfig,
    pub seed: RunSeed,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            iters: 3,
            inner_steps: 100,
            k_refs: 100,
            epsilon: 1.0,
            learning_rate: 0.05,
            adam: AdamConfig::default(),
            seed: RunSeed(0),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.inner_steps < 1 {
            return Err(Error::invalid("inner steps must be at least 1"));
        }
        if self.k_refs < 2 {
            return Err(Error::invalid("at least two reference points are required"));
        }
        check_common(self.iters, self.learning_rate, self.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iter: usize,
    pub total: f64,
    pub corr: f64,
    pub cluster: f64,
    pub anchor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: serde_json::Value,
    pub loss_trace: Vec<LossRecord>,
    pub wall_ms: u64,
}

impl FitReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// I.i.d. `0.1 * N(0, 1)` coordinates.
pub fn init_random_normal(n: usize, m: usize, seed: RunSeed) -> Result<Embedding> {
    if n < 1 || m < 1 {
        return Err(Error::invalid(format!("cannot initialize a {n}x{m} embedding")));
    }
    let mut rng = seed.rng(RunSeed::INIT);
    let values = (0..n * m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.1 * z
        })
        .collect();
    DataMatrix::new(n, m, values)
}

fn non_finite(iteration: usize, what: &str) -> Error {
    Error::Numerical { iteration, message: format!("{what} is not finite") }
}

/// State shared by both optimization modes.
struct Problem<'a> {
    refs: ReferenceSet,
    tasks: Vec<(ClusterResult, ClassifierHead)>,
    anchor: Option<(&'a Embedding, f64)>,
    beta: f64,
    epsilon: f64,
}

struct Evaluated {
    record: LossRecord,
    grad_embedding: Vec<f64>,
    grad_heads: Vec<Vec<f64>>,
}

impl Problem<'_> {
    fn evaluate(&self, emb: &Embedding, iter: usize) -> Result<Evaluated> {
        let corr = correlation_loss_parts(&self.refs, emb, self.epsilon)?;
        let mut grad: Vec<f64> = corr.total.grad_embedding.iter().map(|g| self.beta * g).collect();
        let mut record = LossRecord { iter, total: self.beta * corr.total.value, corr: corr.total.value, cluster: 0.0, anchor: 0.0 };
        let mut grad_heads = Vec::new();
        if !self.tasks.is_empty() {
            let tasks: Vec<(&[usize], &ClassifierHead)> =
                self.tasks.iter().map(|(c, h)| (c.assignments.as_slice(), h)).collect();
            let cl = cluster_loss(&tasks, emb)?;
            record.cluster = cl.value;
            record.total += cl.value;
            grad.iter_mut().zip(&cl.grad_embedding).for_each(|(g, c)| *g += c);
            grad_heads = cl.grad_heads;
        }
        if let Some((init, lambda)) = self.anchor {
            let an = anchor_loss(emb, init, lambda)?;
            record.anchor = an.value;
            record.total += an.value;
            grad.iter_mut().zip(&an.grad_embedding).for_each(|(g, a)| *g += a);
        }
        if !record.total.is_finite() {
            return Err(non_finite(iter, "loss"));
        }
        if grad.iter().chain(grad_heads.iter().flatten()).any(|g| !g.is_finite()) {
            return Err(non_finite(iter, "gradient"));
        }
        Ok(Evaluated { record, grad_embedding: grad, grad_heads })
    }
}

/// Fits an embedding from scratch. Labels on `data` are ignored.
pub fn fit_pcc(data: &DataMatrix, config: &PccConfig) -> Result<(Embedding, FitReport)> {
    config.validate()?;
    let start = Instant::now();
    let n = data.rows();
    if n < 2 {
        return Err(Error::invalid("at least two points are required"));
    }
    if let Some(&k) = config.cluster_counts.iter().find(|&&k| k > n) {
        return Err(Error::invalid(format!("cluster count {k} exceeds the {n} points")));
    }
    let refs = build_reference_set(data, config.k_refs.min(n), config.seed)?;
    let mut tasks = Vec::with_capacity(config.cluster_counts.len());
    for (t, &k) in config.cluster_counts.iter().enumerate() {
        let result = kmeans_fit(data, k, config.seed.derive(t as u64 + 1), config.kmeans_max_iters, config.kmeans_n_init)?;
        tasks.push((result, ClassifierHead::zeros(k, config.out_dim)));
    }
    let mut emb = init_random_normal(n, config.out_dim, config.seed)?;
    let mut problem = Problem { refs, tasks, anchor: None, beta: config.beta, epsilon: config.epsilon };

    let mut emb_opt = Adam::new(emb.values().len(), config.learning_rate, config.adam);
    let mut head_opts: Vec<Adam> = problem
        .tasks
        .iter()
        .map(|(_, h)| Adam::new(h.weights.len(), config.learning_rate, config.adam))
        .collect();
    let mut trace = Vec::with_capacity(config.iters);
    for it in 0..config.iters {
        let ev = problem.evaluate(&emb, it)?;
        trace.push(ev.record);
        emb_opt.step(emb.values_mut(), &ev.grad_embedding);
        for ((opt, (_, head)), g) in head_opts.iter_mut().zip(problem.tasks.iter_mut()).zip(&ev.grad_heads) {
            opt.step(&mut head.weights, g);
        }
    }
    let report = FitReport {
        config: serde_json::to_value(config)?,
        loss_trace: trace,
        wall_ms: start.elapsed().as_millis() as u64,
    };
    Ok((emb, report))
}

/// Improves the global structure of `init` while a `lambda`-weighted
/// penalty keeps it close to where it started.
pub fn refine_from_init(data: &DataMatrix, init: &Embedding, config: &RefineConfig) -> Result<(Embedding, FitReport)> {
    config.validate()?;
    let start = Instant::now();
    let n = data.rows();
    if init.rows() != n {
        return Err(Error::invalid(format!("initial embedding has {} rows, data has {n}", init.rows())));
    }
    let refs = build_reference_set(data, config.k_refs.min(n), config.seed)?;
    let problem = Problem { refs, tasks: Vec::new(), anchor: Some((init, config.lambda)), beta: 1.0, epsilon: config.epsilon };
    let mut emb = init.clone();
    let mut opt = Adam::new(emb.values().len(), config.learning_rate, config.adam);
    let mut trace = Vec::with_capacity(config.iters);
    for epoch in 0..config.iters {
        let mut last = None;
        for step in 0..config.inner_steps {
            let ev = problem.evaluate(&emb, epoch * config.inner_steps + step)?;
            opt.step(emb.values_mut(), &ev.grad_embedding);
            last = Some(ev.record);
        }
        let mut record = last.expect("inner_steps >= 1");
        record.iter = epoch;
        trace.push(record);
    }
    let report = FitReport {
        config: serde_json::to_value(config)?,
        loss_trace: trace,
        wall_ms: start.elapsed().as_millis() as u64,
    };
    Ok((emb, report))
}
