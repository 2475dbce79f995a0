//! Train the linear and MLP models with seeded SGD, store the checkpoints
//! and read them back bit for bit.
//!
//! Run with `cargo run --example train_checkpoints`.

use codeclean::corpus::synth::{generate_splits, SynthConfig};
use codeclean::model::{load_checkpoints, save_checkpoints, train, Arch, Dataset, ModelSpec, TrainConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        overlap: 0.1,
        seed: 11,
        ..Default::default()
    };
    let (train_c, val_c, _) = generate_splits(&synth, 40, 20, 1)?;
    let dim = 1 << 12;
    let train_set = Dataset::from_corpus(&train_c, dim);
    let val = Dataset::from_corpus(&val_c, dim);

    let cfg = TrainConfig {
        epochs: 20,
        learning_rate: 1.0,
        checkpoint_every: 5,
        seed: 1,
        ..Default::default()
    };
    for arch in [Arch::Linear, Arch::Mlp { hidden: 8 }] {
        let spec = ModelSpec::new(arch, 4, dim, 1e-4)?;
        let (model, checkpoints) = train(&train_set.examples, &spec, &cfg)?;
        println!(
            "{arch:8} {} params, train acc {:.3}, val acc {:.3}, checkpoints at epochs {:?}",
            spec.param_count(),
            model.accuracy(&train_set.examples),
            model.accuracy(&val.examples),
            checkpoints.iter().map(|c| c.step).collect::<Vec<_>>()
        );

        let dir = std::env::temp_dir().join(format!("codeclean-ckpt-example-{}", arch.to_string().replace(':', "-")));
        save_checkpoints(&dir, &checkpoints)?;
        let back = load_checkpoints(&dir)?;
        assert_eq!(back.len(), checkpoints.len());
        assert_eq!(back.last().unwrap().params.theta, model.theta);

        // Same seed, same bytes.
        let (again, _) = train(&train_set.examples, &spec, &cfg)?;
        assert_eq!(again.theta, model.theta);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
