//! Differentiable classifiers with per-example gradients, exact
//! Hessian-vector products and deterministic checkpointed training.
//!
//! Two architectures share one flat parameter vector:
//!
//! * `linear`: softmax regression. Layout `[W (C×D, row-major) | b (C)]`.
//! * `mlp:h`: one tanh hidden layer of width `h`. Layout
//!   `[W1 (h×D) | b1 (h) | W2 (C×h) | b2 (C)]`.
//!
//! The objective is mean cross-entropy plus `(λ/2)·‖weights‖²`; biases are
//! not regularized.

mod mlp;
mod store;
mod train;

pub use store::{load_checkpoints, load_params, save_checkpoints, save_params, CheckpointManifest};
pub use train::{train, Checkpoint, TrainConfig};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{featurize, tokenize, Corpus, FeatureVector};
use crate::error::{Error, Result};

const INIT_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Arch {
    Linear,
    Mlp { hidden: usize },
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arch::Linear => f.write_str("linear"),
            Arch::Mlp { hidden } => write!(f, "mlp:{hidden}"),
        }
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown architecture `{s}` (expected `linear` or `mlp:<width>`)"));
        match s.trim() {
            "linear" => Ok(Arch::Linear),
            other => {
                let width = other.strip_prefix("mlp:").ok_or_else(bad)?;
                match width.parse::<usize>() {
                    Ok(hidden) if hidden > 0 => Ok(Arch::Mlp { hidden }),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl From<Arch> for String {
    fn from(a: Arch) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Arch {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Shape and regularization of a model, everything except `θ` itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Arch,
    pub num_classes: usize,
    pub dim: usize,
    pub l2_reg: f64,
}

impl ModelSpec {
    pub fn new(arch: Arch, num_classes: usize, dim: usize, l2_reg: f64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "a classifier needs at least 2 classes, got {num_classes}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("feature dimension must be positive".into()));
        }
        if !(l2_reg >= 0.0 && l2_reg.is_finite()) {
            return Err(Error::InvalidArgument(format!("l2_reg must be a finite non-negative number, got {l2_reg}")));
        }
        Ok(ModelSpec {
            arch,
            num_classes,
            dim,
            l2_reg,
        })
    }

    pub fn param_count(&self) -> usize {
        let (c, d) = (self.num_classes, self.dim);
        match self.arch {
            Arch::Linear => c * (d + 1),
            Arch::Mlp { hidden: h } => h * d + h + c * h + c,
        }
    }

    /// Whether parameter `i` is a weight (regularized) rather than a bias.
    pub fn is_weight(&self, i: usize) -> bool {
        let (c, d) = (self.num_classes, self.dim);
        match self.arch {
            Arch::Linear => i < c * d,
            Arch::Mlp { hidden: h } => i < h * d || (i >= h * d + h && i < h * d + h + c * h),
        }
    }

    fn weight_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let (c, d) = (self.num_classes, self.dim);
        match self.arch {
            Arch::Linear => std::iter::once(0..c * d).collect(),
            Arch::Mlp { hidden: h } => vec![0..h * d, h * d + h..h * d + h + c * h],
        }
    }
}

/// A labeled feature vector, the unit every model operation consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub label: usize,
}

impl Example {
    pub fn new(features: FeatureVector, label: usize) -> Self {
        Example { features, label }
    }
}

/// Tokenizes and featurizes every sample of a corpus, keeping corpus order.
pub fn featurize_corpus(corpus: &Corpus, dim: usize) -> Vec<Example> {
    corpus
        .samples()
        .iter()
        .map(|s| Example::new(featurize(&tokenize(&s.source_text), dim), s.label))
        .collect()
}

fn relabel(examples: &[Example], corpus: &Corpus) -> Vec<Example> {
    assert_eq!(examples.len(), corpus.len());
    examples
        .iter()
        .zip(corpus.samples())
        .map(|(e, s)| Example::new(e.features.clone(), s.label))
        .collect()
}

/// Featurized examples paired with their sample ids, in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn from_corpus(corpus: &Corpus, dim: usize) -> Self {
        Dataset {
            ids: corpus.ids().map(str::to_string).collect(),
            examples: featurize_corpus(corpus, dim),
        }
    }

    /// Same features, labels taken from `corpus`, which must list the same
    /// ids in the same order.
    pub fn relabeled(&self, corpus: &Corpus) -> Result<Self> {
        if corpus.len() != self.len() || corpus.ids().zip(&self.ids).any(|(a, b)| a != b) {
            return Err(Error::InvalidArgument("corpus does not match the featurized dataset".into()));
        }
        Ok(Dataset {
            ids: self.ids.clone(),
            examples: relabel(&self.examples, corpus),
        })
    }

    /// Examples whose ids are present in `corpus`, labeled from it, in
    /// `corpus` order.
    pub fn select(&self, corpus: &Corpus) -> Result<Self> {
        let index: std::collections::HashMap<&str, usize> =
            self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut out = Dataset {
            ids: Vec::with_capacity(corpus.len()),
            examples: Vec::with_capacity(corpus.len()),
        };
        for s in corpus.samples() {
            let &i = index.get(s.id.as_str()).ok_or_else(|| Error::UnknownId(s.id.clone()))?;
            out.ids.push(s.id.clone());
            out.examples.push(Example::new(self.examples[i].features.clone(), s.label));
        }
        Ok(out)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Full parameter vector `θ` plus its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub theta: Vec<f64>,
}

/// Seeded initialization: weights uniform in (−0.05, 0.05), biases zero.
pub fn init_params(spec: &ModelSpec, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = (0..spec.param_count())
        .map(|i| {
            if spec.is_weight(i) {
                rng.gen_range(-INIT_RANGE..INIT_RANGE)
            } else {
                0.0
            }
        })
        .collect();
    ModelParams { spec: *spec, theta }
}

impl ModelParams {
    pub fn from_theta(spec: ModelSpec, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != spec.param_count() {
            return Err(Error::DimensionMismatch {
                expected: spec.param_count(),
                actual: theta.len(),
            });
        }
        if let Some(i) = theta.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("parameter {i} is not finite")));
        }
        Ok(ModelParams { spec, theta })
    }

    pub fn zeros(spec: ModelSpec) -> Self {
        ModelParams {
            spec,
            theta: vec![0.0; spec.param_count()],
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    fn check_features(&self, fv: &FeatureVector) {
        assert_eq!(
            fv.dim(),
            self.spec.dim,
            "feature vector dimension does not match the model"
        );
    }

    pub fn logits(&self, fv: &FeatureVector) -> Vec<f64> {
        self.check_features(fv);
        match self.spec.arch {
            Arch::Linear => {
                let (c, d) = (self.spec.num_classes, self.spec.dim);
                (0..c)
                    .map(|k| fv.dot_dense(&self.theta[k * d..(k + 1) * d]) + self.theta[c * d + k])
                    .collect()
            }
            Arch::Mlp { .. } => mlp::Forward::new(self, fv).logits,
        }
    }

    /// Class probabilities via a max-shifted softmax. Entries are floored at
    /// the smallest positive normal so they stay strictly positive.
    pub fn predict_proba(&self, fv: &FeatureVector) -> Vec<f64> {
        softmax(&self.logits(fv))
    }

    pub fn predict(&self, fv: &FeatureVector) -> usize {
        argmax(&self.logits(fv))
    }

    /// Cross-entropy `−ln p_y` of one example, without the regularizer.
    pub fn example_loss(&self, ex: &Example) -> f64 {
        let logits = self.logits(&ex.features);
        log_sum_exp(&logits) - logits[ex.label]
    }

    /// `(λ/2)·‖weights‖²`.
    pub fn regularizer(&self) -> f64 {
        let sq: f64 = self
            .spec
            .weight_ranges()
            .into_iter()
            .map(|r| self.theta[r].iter().map(|w| w * w).sum::<f64>())
            .sum();
        0.5 * self.spec.l2_reg * sq
    }

    /// Mean cross-entropy over `examples` plus the regularizer.
    pub fn loss(&self, examples: &[Example]) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::InvalidArgument("loss over an empty sample set".into()));
        }
        let ce: f64 = examples.iter().map(|e| self.example_loss(e)).sum();
        Ok(ce / examples.len() as f64 + self.regularizer())
    }

    pub fn accuracy(&self, examples: &[Example]) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        let correct = examples
            .iter()
            .filter(|e| self.predict(&e.features) == e.label)
            .count();
        correct as f64 / examples.len() as f64
    }

    /// Adds `scale · ∇ℓ(ex)` (cross-entropy only) into `out` and returns the
    /// example's cross-entropy.
    pub fn accumulate_data_grad(&self, ex: &Example, scale: f64, out: &mut [f64]) -> f64 {
        self.check_features(&ex.features);
        match self.spec.arch {
            Arch::Linear => {
                let (c, d) = (self.spec.num_classes, self.spec.dim);
                let logits = self.logits(&ex.features);
                let p = softmax(&logits);
                for k in 0..c {
                    let delta = scale * (p[k] - f64::from(u8::from(k == ex.label)));
                    for &(j, x) in ex.features.entries() {
                        out[k * d + j as usize] += delta * x;
                    }
                    out[c * d + k] += delta;
                }
                log_sum_exp(&logits) - logits[ex.label]
            }
            Arch::Mlp { .. } => mlp::accumulate_grad(self, ex, scale, out),
        }
    }

    /// Adds `scale · λ · w` on the weight coordinates of `out`.
    pub fn accumulate_reg_grad(&self, scale: f64, out: &mut [f64]) {
        let lambda = self.spec.l2_reg;
        if lambda == 0.0 {
            return;
        }
        for r in self.spec.weight_ranges() {
            for i in r {
                out[i] += scale * lambda * self.theta[i];
            }
        }
    }

    /// Per-example cross-entropy gradient, regularizer excluded.
    pub fn data_grad(&self, ex: &Example) -> Vec<f64> {
        let mut g = vec![0.0; self.len()];
        self.accumulate_data_grad(ex, 1.0, &mut g);
        g
    }

    /// Per-example gradient of `ℓ(ex) + (λ/2)‖w‖²`.
    pub fn grad(&self, ex: &Example) -> Vec<f64> {
        let mut g = self.data_grad(ex);
        self.accumulate_reg_grad(1.0, &mut g);
        g
    }

    /// Gradient of [`ModelParams::loss`] over `examples`.
    pub fn mean_grad(&self, examples: &[Example]) -> Result<Vec<f64>> {
        if examples.is_empty() {
            return Err(Error::InvalidArgument("gradient over an empty sample set".into()));
        }
        let mut g = vec![0.0; self.len()];
        let scale = 1.0 / examples.len() as f64;
        for e in examples {
            self.accumulate_data_grad(e, scale, &mut g);
        }
        self.accumulate_reg_grad(1.0, &mut g);
        Ok(g)
    }

    /// `⟨∇ℓ(ex), v⟩` for the cross-entropy part only, computed without
    /// materializing the gradient.
    pub fn data_grad_dot(&self, ex: &Example, v: &[f64]) -> f64 {
        self.check_features(&ex.features);
        match self.spec.arch {
            Arch::Linear => {
                let (c, d) = (self.spec.num_classes, self.spec.dim);
                let p = self.predict_proba(&ex.features);
                (0..c)
                    .map(|k| {
                        let delta = p[k] - f64::from(u8::from(k == ex.label));
                        delta * (ex.features.dot_dense(&v[k * d..(k + 1) * d]) + v[c * d + k])
                    })
                    .sum()
            }
            Arch::Mlp { .. } => mlp::grad_dot(self, ex, v),
        }
    }

    /// `⟨λ·w, v⟩`, the regularizer's contribution to any per-example
    /// gradient dot product.
    pub fn reg_grad_dot(&self, v: &[f64]) -> f64 {
        let lambda = self.spec.l2_reg;
        if lambda == 0.0 {
            return 0.0;
        }
        lambda
            * self
                .spec
                .weight_ranges()
                .into_iter()
                .map(|r| r.map(|i| self.theta[i] * v[i]).sum::<f64>())
                .sum::<f64>()
    }

    /// Adds `scale · ∇²ℓ(ex) · v` (cross-entropy only) into `out`.
    pub fn accumulate_data_hvp(&self, ex: &Example, v: &[f64], scale: f64, out: &mut [f64]) {
        self.check_features(&ex.features);
        match self.spec.arch {
            Arch::Linear => {
                let (c, d) = (self.spec.num_classes, self.spec.dim);
                let p = self.predict_proba(&ex.features);
                let u: Vec<f64> = (0..c)
                    .map(|k| ex.features.dot_dense(&v[k * d..(k + 1) * d]) + v[c * d + k])
                    .collect();
                let pu: f64 = p.iter().zip(&u).map(|(a, b)| a * b).sum();
                for k in 0..c {
                    let s = scale * p[k] * (u[k] - pu);
                    for &(j, x) in ex.features.entries() {
                        out[k * d + j as usize] += s * x;
                    }
                    out[c * d + k] += s;
                }
            }
            Arch::Mlp { .. } => mlp::accumulate_hvp(self, ex, v, scale, out),
        }
    }

    /// Exact `H·v` for the Hessian of [`ModelParams::loss`] over `examples`.
    /// Per-example terms are summed in slice order.
    pub fn hvp(&self, examples: &[Example], v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: v.len(),
            });
        }
        if examples.is_empty() {
            return Err(Error::InvalidArgument("Hessian over an empty sample set".into()));
        }
        let mut out = vec![0.0; self.len()];
        let scale = 1.0 / examples.len() as f64;
        for e in examples {
            self.accumulate_data_hvp(e, v, scale, &mut out);
        }
        let lambda = self.spec.l2_reg;
        if lambda != 0.0 {
            for r in self.spec.weight_ranges() {
                for i in r {
                    out[i] += lambda * v[i];
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter()
        .map(|e| (e / z).max(f64::MIN_POSITIVE))
        .collect()
}

/// First index of the maximum.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}
