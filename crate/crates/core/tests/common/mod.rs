//! Oracles shared by the integration tests and the acceptance runner:
//! finite differences, a dense direct solver, and brute-force
//! leave-one-out retraining.

#![allow(dead_code, clippy::needless_range_loop)]

use codeclean::corpus::synth::{generate_splits, SynthConfig};
use codeclean::corpus::FeatureVector;
use codeclean::influence::{if_scores, inverse_hvp, loo_scores, FnOperator, SolverConfig, SolverMethod};
use codeclean::model::{init_params, train, Arch, Dataset, Example, ModelParams, ModelSpec, TrainConfig};
use codeclean::stats::spearman;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-300)
}

/// Random sparse-ish unit feature vectors with random labels.
pub fn random_examples(rng: &mut ChaCha8Rng, n: usize, c: usize, d: usize) -> Vec<Example> {
    (0..n)
        .map(|_| {
            let nnz = rng.gen_range(1..=d.min(6));
            let pairs: Vec<(usize, f64)> = (0..nnz).map(|_| (rng.gen_range(0..d), rng.gen_range(0.1..1.0))).collect();
            let fv = FeatureVector::from_pairs(d, pairs);
            let scale = 1.0 / fv.norm();
            let fv = FeatureVector::from_pairs(d, fv.entries().iter().map(|&(i, v)| (i as usize, v * scale)));
            Example::new(fv, rng.gen_range(0..c))
        })
        .collect()
}

/// A random model: small architecture, parameters well away from zero.
pub fn random_model(rng: &mut ChaCha8Rng, arch: Arch) -> ModelParams {
    let c = rng.gen_range(2..=5);
    let d = rng.gen_range(4..=24);
    let spec = ModelSpec::new(arch, c, d, rng.gen_range(0.0..0.1)).unwrap();
    let mut p = init_params(&spec, rng.gen());
    for t in p.theta.iter_mut() {
        *t = rng.gen_range(-1.0..1.0);
    }
    p
}

fn shifted(p: &ModelParams, v: &[f64], h: f64) -> ModelParams {
    let theta = p.theta.iter().zip(v).map(|(t, d)| t + h * d).collect();
    ModelParams::from_theta(p.spec, theta).unwrap()
}

/// Central differences of `ℓ(ex) + (λ/2)‖w‖²`, one coordinate at a time.
pub fn fd_grad(p: &ModelParams, ex: &Example, h: f64) -> Vec<f64> {
    let f = |q: &ModelParams| q.example_loss(ex) + q.regularizer();
    (0..p.len())
        .map(|i| {
            let mut e = vec![0.0; p.len()];
            e[i] = 1.0;
            (f(&shifted(p, &e, h)) - f(&shifted(p, &e, -h))) / (2.0 * h)
        })
        .collect()
}

/// `H v` as a central difference of the analytic mean gradient.
pub fn fd_hvp(p: &ModelParams, examples: &[Example], v: &[f64], h: f64) -> Vec<f64> {
    let plus = shifted(p, v, h).mean_grad(examples).unwrap();
    let minus = shifted(p, v, -h).mean_grad(examples).unwrap();
    plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// Worst gradient and HVP relative errors over `configs` random models of
/// one architecture.
pub fn derivative_errors(arch: Arch, configs: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_grad, mut worst_hvp) = (0.0f64, 0.0f64);
    for _ in 0..configs {
        let p = random_model(&mut rng, arch);
        let examples = random_examples(&mut rng, 5, p.spec.num_classes, p.spec.dim);
        worst_grad = worst_grad.max(rel_err(&p.grad(&examples[0]), &fd_grad(&p, &examples[0], 1e-5)));
        let v: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hv = p.hvp(&examples, &v).unwrap();
        worst_hvp = worst_hvp.max(rel_err(&hv, &fd_hvp(&p, &examples, &v, 1e-5)));
    }
    (worst_grad, worst_hvp)
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Materializes a linear map by applying it to every unit vector.
pub fn dense_from(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            apply(&e)
        })
        .collect();
    (0..dim).map(|i| (0..dim).map(|j| cols[j][i]).collect()).collect()
}

/// Random symmetric positive definite matrix `A Aᵀ / n + s I`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s: f64 = (0..n).map(|k| a[i][k] * a[j][k]).sum();
                    s / n as f64 + if i == j { shift } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

pub fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Worst CG and LiSSA relative errors against the dense solve of
/// `(H + dI) x = b` for random PD `H` of the given sizes.
pub fn solver_errors(sizes: &[usize], seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_cg, mut worst_lissa) = (0.0f64, 0.0f64);
    for &n in sizes {
        let h = random_spd(&mut rng, n, 0.05);
        let damping = 0.2;
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut damped = h.clone();
        for (i, row) in damped.iter_mut().enumerate() {
            row[i] += damping;
        }
        let exact = dense_solve(damped, b.clone());
        let op = FnOperator {
            dim: n,
            f: |v: &[f64]| matvec(&h, v),
        };
        let cg = SolverConfig {
            damping,
            tol: 1e-12,
            ..Default::default()
        };
        worst_cg = worst_cg.max(rel_err(&inverse_hvp(&op, &b, &cg).unwrap(), &exact));
        // Eigenvalues of H + dI stay below 2, so scale 2 makes the Neumann
        // recursion a contraction.
        let lissa = SolverConfig {
            method: SolverMethod::Lissa,
            lissa_depth: 2000,
            lissa_scale: 2.0,
            ..cg
        };
        worst_lissa = worst_lissa.max(rel_err(&inverse_hvp(&op, &b, &lissa).unwrap(), &exact));
    }
    (worst_cg, worst_lissa)
}

pub struct LooComparison {
    pub grad_norm: f64,
    pub spearman: f64,
}

/// Trains a 2-class linear model on a 40-sample synthetic corpus to
/// convergence and compares aggregated IF scores with leave-one-out
/// retraining over every training sample.
pub fn if_vs_loo(seed: u64) -> LooComparison {
    let synth = SynthConfig {
        num_classes: 2,
        overlap: 0.3,
        seed,
        ..Default::default()
    };
    let (train_c, val_c, _) = generate_splits(&synth, 20, 10, 1).unwrap();
    let dim = 64;
    let train_set = Dataset::from_corpus(&train_c, dim);
    let gold = Dataset::from_corpus(&val_c, dim).examples;
    let spec = ModelSpec::new(Arch::Linear, 2, dim, 0.05).unwrap();
    let cfg = TrainConfig {
        epochs: 3000,
        batch_size: train_set.len(),
        learning_rate: 1.0,
        checkpoint_every: 3000,
        seed,
    };
    let (model, _) = train(&train_set.examples, &spec, &cfg).unwrap();
    let grad_norm = norm(&model.mean_grad(&train_set.examples).unwrap());
    let solver = SolverConfig {
        damping: 0.0,
        tol: 1e-12,
        ..Default::default()
    };
    let s_if = if_scores(&model, &train_set.examples, &gold, &solver).unwrap();
    let loo = loo_scores(&train_set, &gold, &spec, &cfg).unwrap();
    LooComparison {
        grad_norm,
        spearman: spearman(&s_if, &loo),
    }
}

/// Runs `f` and returns its value with the elapsed seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

/// Path of the reference experiment config shipped with the crate.
pub fn desk_config() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk.conf")
}
