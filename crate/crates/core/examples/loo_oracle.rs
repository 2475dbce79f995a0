//! Compare Influence Function scores with brute-force leave-one-out
//! retraining on a small, fully converged problem.
//!
//! Run with `cargo run --example loo_oracle`.

use codeclean::corpus::synth::{generate_splits, SynthConfig};
use codeclean::influence::{if_scores, loo_scores, SolverConfig};
use codeclean::model::{train, Arch, Dataset, ModelSpec, TrainConfig};
use codeclean::stats::{pearson, spearman};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        num_classes: 2,
        overlap: 0.3,
        seed: 8,
        ..Default::default()
    };
    let (train_c, val_c, _) = generate_splits(&synth, 15, 5, 1)?;
    let dim = 64;
    let train_set = Dataset::from_corpus(&train_c, dim);
    let gold = Dataset::from_corpus(&val_c, dim).examples;

    // Full-batch gradient descent run long enough to sit at the optimum, so
    // the first-order approximation is meaningful.
    let spec = ModelSpec::new(Arch::Linear, 2, dim, 0.05)?;
    let cfg = TrainConfig {
        epochs: 3000,
        batch_size: train_set.len(),
        learning_rate: 1.0,
        checkpoint_every: 3000,
        seed: 0,
    };
    let (model, _) = train(&train_set.examples, &spec, &cfg)?;
    let grad = model.mean_grad(&train_set.examples)?;
    println!("gradient norm at the end of training: {:.2e}", grad.iter().map(|g| g * g).sum::<f64>().sqrt());

    let solver = SolverConfig {
        damping: 0.0,
        tol: 1e-12,
        ..Default::default()
    };
    let s_if = if_scores(&model, &train_set.examples, &gold, &solver)?;
    let loo = loo_scores(&train_set, &gold, &spec, &cfg)?;

    // IF sums over gold while the LOO delta uses the mean gold loss.
    let scale = (train_set.len() * gold.len()) as f64;
    for i in 0..5 {
        println!("{:12} IF/(n N) {:+.6}  LOO {:+.6}", train_set.ids[i], s_if[i] / scale, loo[i]);
    }
    let rho = spearman(&s_if, &loo);
    println!("Spearman {rho:.3}, Pearson {:.3}", pearson(&s_if, &loo));
    assert!(rho > 0.8);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
