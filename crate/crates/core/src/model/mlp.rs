//! One-hidden-layer tanh network: forward pass, backward pass, and the
//! exact Hessian-vector product by forward-mode differentiation of the
//! backward pass (Pearlmutter's R-operator).

use super::{softmax, Arch, Example, ModelParams};
use crate::corpus::FeatureVector;

/// Offsets of the four parameter blocks.
#[derive(Clone, Copy)]
struct Blocks {
    h: usize,
    c: usize,
    d: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl Blocks {
    fn of(params: &ModelParams) -> Self {
        let h = match params.spec.arch {
            Arch::Mlp { hidden } => hidden,
            Arch::Linear => unreachable!("mlp routine called on a linear model"),
        };
        let (c, d) = (params.spec.num_classes, params.spec.dim);
        Blocks {
            h,
            c,
            d,
            b1: h * d,
            w2: h * d + h,
            b2: h * d + h + c * h,
        }
    }

    /// `W x + b` for the first layer of parameter-shaped vector `p`.
    fn hidden_pre(&self, p: &[f64], x: &FeatureVector) -> Vec<f64> {
        (0..self.h)
            .map(|k| x.dot_dense(&p[k * self.d..(k + 1) * self.d]) + p[self.b1 + k])
            .collect()
    }

    /// `W z + b` for the output layer of parameter-shaped vector `p`.
    fn output_pre(&self, p: &[f64], z: &[f64]) -> Vec<f64> {
        (0..self.c)
            .map(|j| {
                let row = &p[self.w2 + j * self.h..self.w2 + (j + 1) * self.h];
                row.iter().zip(z).map(|(w, zk)| w * zk).sum::<f64>() + p[self.b2 + j]
            })
            .collect()
    }
}

pub(super) struct Forward {
    z: Vec<f64>,
    pub(super) logits: Vec<f64>,
}

impl Forward {
    pub(super) fn new(params: &ModelParams, x: &FeatureVector) -> Self {
        let b = Blocks::of(params);
        let z: Vec<f64> = b.hidden_pre(&params.theta, x).into_iter().map(f64::tanh).collect();
        let logits = b.output_pre(&params.theta, &z);
        Forward { z, logits }
    }
}

/// Output-layer error `p − e_y` and hidden-layer error `δa`.
fn backward(params: &ModelParams, b: &Blocks, fwd: &Forward, label: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = softmax(&fwd.logits);
    let delta_o: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(j, &pj)| pj - f64::from(u8::from(j == label)))
        .collect();
    let delta_z: Vec<f64> = (0..b.h)
        .map(|k| {
            (0..b.c)
                .map(|j| params.theta[b.w2 + j * b.h + k] * delta_o[j])
                .sum()
        })
        .collect();
    let delta_a = delta_z
        .iter()
        .zip(&fwd.z)
        .map(|(dz, z)| dz * (1.0 - z * z))
        .collect();
    (p, delta_o, delta_a)
}

pub(super) fn accumulate_grad(params: &ModelParams, ex: &Example, scale: f64, out: &mut [f64]) -> f64 {
    let b = Blocks::of(params);
    let fwd = Forward::new(params, &ex.features);
    let (_, delta_o, delta_a) = backward(params, &b, &fwd, ex.label);
    for j in 0..b.c {
        for k in 0..b.h {
            out[b.w2 + j * b.h + k] += scale * delta_o[j] * fwd.z[k];
        }
        out[b.b2 + j] += scale * delta_o[j];
    }
    for k in 0..b.h {
        let s = scale * delta_a[k];
        for &(i, x) in ex.features.entries() {
            out[k * b.d + i as usize] += s * x;
        }
        out[b.b1 + k] += s;
    }
    super::log_sum_exp(&fwd.logits) - fwd.logits[ex.label]
}

pub(super) fn grad_dot(params: &ModelParams, ex: &Example, v: &[f64]) -> f64 {
    let b = Blocks::of(params);
    let fwd = Forward::new(params, &ex.features);
    let (_, delta_o, delta_a) = backward(params, &b, &fwd, ex.label);
    let first: f64 = b
        .hidden_pre(v, &ex.features)
        .iter()
        .zip(&delta_a)
        .map(|(u, da)| u * da)
        .sum();
    let second: f64 = b
        .output_pre(v, &fwd.z)
        .iter()
        .zip(&delta_o)
        .map(|(u, d)| u * d)
        .sum();
    first + second
}

/// Adds `scale · ∇²ℓ · v` into `out`.
///
/// With `R(·)` the directional derivative along `v = (V1, c1, V2, c2)`:
///
/// ```text
/// R(a)  = V1 x + c1                 R(z)  = (1 − z²) ⊙ R(a)
/// R(o)  = V2 z + W2 R(z) + c2       R(δo) = (diag p − p pᵀ) R(o)
/// R(δz) = V2ᵀ δo + W2ᵀ R(δo)
/// R(δa) = (1 − z²) ⊙ R(δz) − 2 z ⊙ R(z) ⊙ δz
/// ```
///
/// and the Hessian-vector product is `R` of each gradient block.
pub(super) fn accumulate_hvp(params: &ModelParams, ex: &Example, v: &[f64], scale: f64, out: &mut [f64]) {
    let b = Blocks::of(params);
    let theta = &params.theta;
    let x = &ex.features;
    let fwd = Forward::new(params, x);
    let (p, delta_o, _) = backward(params, &b, &fwd, ex.label);
    let z = &fwd.z;

    let r_a = b.hidden_pre(v, x);
    let r_z: Vec<f64> = (0..b.h).map(|k| (1.0 - z[k] * z[k]) * r_a[k]).collect();
    let mut r_o = b.output_pre(v, z);
    for (j, ro) in r_o.iter_mut().enumerate() {
        *ro += (0..b.h)
            .map(|k| theta[b.w2 + j * b.h + k] * r_z[k])
            .sum::<f64>();
    }
    let p_ro: f64 = p.iter().zip(&r_o).map(|(a, c)| a * c).sum();
    let r_delta_o: Vec<f64> = (0..b.c).map(|j| p[j] * (r_o[j] - p_ro)).collect();

    let delta_z: Vec<f64> = (0..b.h)
        .map(|k| (0..b.c).map(|j| theta[b.w2 + j * b.h + k] * delta_o[j]).sum())
        .collect();
    let r_delta_z: Vec<f64> = (0..b.h)
        .map(|k| {
            (0..b.c)
                .map(|j| v[b.w2 + j * b.h + k] * delta_o[j] + theta[b.w2 + j * b.h + k] * r_delta_o[j])
                .sum()
        })
        .collect();
    let r_delta_a: Vec<f64> = (0..b.h)
        .map(|k| (1.0 - z[k] * z[k]) * r_delta_z[k] - 2.0 * z[k] * r_z[k] * delta_z[k])
        .collect();

    for j in 0..b.c {
        for k in 0..b.h {
            out[b.w2 + j * b.h + k] += scale * (r_delta_o[j] * z[k] + delta_o[j] * r_z[k]);
        }
        out[b.b2 + j] += scale * r_delta_o[j];
    }
    for k in 0..b.h {
        let s = scale * r_delta_a[k];
        for &(i, xi) in x.entries() {
            out[k * b.d + i as usize] += s * xi;
        }
        out[b.b1 + k] += s;
    }
}
