//! The full synthetic-noise study at a small scale: inject noise, train,
//! score, flag the top k%, clean and retrain, and tabulate the results.
//!
//! Run with `cargo run --release --example noise_detection`.

use codeclean::corpus::synth::{generate_splits, SynthConfig};
use codeclean::pipeline::{run_experiment, CleanMode, DetectMethod, ExperimentConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        overlap: 0.1,
        seed: 4,
        ..Default::default()
    };
    let (train, val, test) = generate_splits(&synth, 60, 30, 30)?;

    let mut cfg = ExperimentConfig {
        dataset: "synthetic-small".into(),
        n_gold: 30,
        tau: 0.5,
        k_list: vec![5.0, 10.0],
        seeds: vec![0, 1],
        methods: vec![DetectMethod::If, DetectMethod::TracIn, DetectMethod::Random],
        clean_modes: vec![CleanMode::Correct, CleanMode::Remove],
        dim: 1 << 12,
        l2_reg: 1e-4,
        ..Default::default()
    };
    cfg.train.learning_rate = 1.0;
    cfg.train.checkpoint_every = 5;

    let run = run_experiment(&train, &val, &test, &cfg)?;
    print!("{}", run.report.render_tables());
    for r in &run.report.per_seed {
        assert!(r.error.is_none(), "seed {} failed: {:?}", r.seed, r.error);
    }
    let precision = |m: &str| run.report.cell(m, Some(10.0), "detect").and_then(|c| c.mean).unwrap();
    assert!(precision("if") > precision("random"));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
