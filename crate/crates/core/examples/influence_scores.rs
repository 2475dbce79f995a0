//! Score every training sample against a gold set with Influence Functions
//! and TracIn, then check how many of the most suspicious samples are
//! actually mislabeled.
//!
//! Run with `cargo run --example influence_scores`.

use codeclean::corpus::inject_noise;
use codeclean::corpus::synth::{generate_splits, SynthConfig};
use codeclean::influence::{if_scores, rank_records, scores_to_csv, tracin_scores, ScoreMethod, SolverConfig};
use codeclean::model::{train, Arch, Dataset, ModelSpec, TrainConfig};
use codeclean::pipeline::{detect_noise, detection_metrics, select_gold};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        overlap: 0.1,
        seed: 21,
        ..Default::default()
    };
    let (train_c, val_c, _) = generate_splits(&synth, 50, 25, 1)?;
    let (noisy, truth) = inject_noise(&train_c, 10.0, 1)?;

    let dim = 1 << 12;
    let train_set = Dataset::from_corpus(&noisy, dim);
    let val = Dataset::from_corpus(&val_c, dim);
    let spec = ModelSpec::new(Arch::Linear, 4, dim, 1e-4)?;
    let cfg = TrainConfig {
        epochs: 30,
        learning_rate: 1.0,
        seed: 1,
        ..Default::default()
    };
    let (model, checkpoints) = train(&train_set.examples, &spec, &cfg)?;

    let gold = select_gold(&model, &val, 40, 0.5, 1)?;
    let gold_ex = gold.examples(&val)?;
    println!("{} training samples, {} mislabeled, {} gold", train_set.len(), truth.len(), gold.ids.len());

    let solver = SolverConfig::default();
    for (method, scores) in [
        (ScoreMethod::If, if_scores(&model, &train_set.examples, &gold_ex, &solver)?),
        (ScoreMethod::TracIn, tracin_scores(&train_set.examples, &gold_ex, &checkpoints)?),
    ] {
        let records = rank_records(method, train_set.ids.iter().cloned().zip(scores))?;
        let flagged = detect_noise(&records, 10.0)?;
        let precision = detection_metrics(&flagged, &truth)?;
        println!("{method:6} top 10%: {} flagged, precision {precision:.2}", flagged.len());
        for line in scores_to_csv(&records).lines().take(4) {
            println!("    {line}");
        }
        assert!(precision > 0.10, "{method} should beat the 10% base rate");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
