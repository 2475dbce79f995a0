//! Solve (H + dI) x = g for a trained model's Hessian with conjugate
//! gradient and with LiSSA, and compare the two.
//!
//! Run with `cargo run --example inverse_hvp`.

use codeclean::corpus::synth::{generate, SynthConfig};
use codeclean::corpus::Split;
use codeclean::influence::{inverse_hvp, HessianOperator, LinearOperator, SolverConfig, SolverMethod};
use codeclean::model::{train, Arch, Dataset, ModelSpec, TrainConfig};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate(
        &SynthConfig {
            num_classes: 3,
            per_class: 20,
            seed: 5,
            ..Default::default()
        },
        Split::Train,
    )?;
    let data = Dataset::from_corpus(&corpus, 256);
    let spec = ModelSpec::new(Arch::Linear, 3, 256, 1e-2)?;
    let cfg = TrainConfig {
        epochs: 20,
        learning_rate: 0.5,
        ..Default::default()
    };
    let (model, _) = train(&data.examples, &spec, &cfg)?;
    let op = HessianOperator {
        params: &model,
        examples: &data.examples,
    };
    let b = model.grad(&data.examples[0]);

    let cg = SolverConfig {
        damping: 0.01,
        ..Default::default()
    };
    let x_cg = inverse_hvp(&op, &b, &cg)?;
    let residual: Vec<f64> = op
        .apply(&x_cg)
        .iter()
        .zip(&x_cg)
        .zip(&b)
        .map(|((hx, x), b)| hx + cg.damping * x - b)
        .collect();
    println!("CG: |x| = {:.6}, relative residual {:.2e}", norm(&x_cg), norm(&residual) / norm(&b));

    let lissa = SolverConfig {
        method: SolverMethod::Lissa,
        damping: 0.01,
        lissa_depth: 3000,
        lissa_scale: 2.0,
        ..Default::default()
    };
    let x_l = inverse_hvp(&op, &b, &lissa)?;
    let diff: Vec<f64> = x_l.iter().zip(&x_cg).map(|(a, b)| a - b).collect();
    let rel = norm(&diff) / norm(&x_cg);
    println!("LiSSA: relative distance to CG {rel:.2e}");
    assert!(rel < 1e-2);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
