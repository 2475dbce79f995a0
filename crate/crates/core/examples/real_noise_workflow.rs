//! Working with a corpus whose noise is unknown: no injection, no
//! precision, only a ranked list of suspicious samples and the accuracy
//! effect of removing them.
//!
//! Run with `cargo run --release --example real_noise_workflow`.

use codeclean::corpus::synth::{generate_splits, SynthConfig};
use codeclean::corpus::inject_noise;
use codeclean::influence::{if_scores, rank_records, ScoreMethod, SolverConfig};
use codeclean::model::{train, Arch, Dataset, ModelSpec, TrainConfig};
use codeclean::pipeline::{clean_remove, detect_noise, run_experiment, select_gold, CleanMode, DetectMethod, ExperimentConfig, NoiseMode};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let synth = SynthConfig {
        overlap: 0.1,
        seed: 9,
        ..Default::default()
    };
    let (clean_train, val, test) = generate_splits(&synth, 50, 25, 25)?;
    // Stand-in for a scraped corpus: the labels are wrong somewhere, but
    // nothing downstream is allowed to know where.
    let (found, _) = inject_noise(&clean_train, 8.0, 42)?;
    let corpus = codeclean::corpus::parse_corpus(
        &found
            .to_jsonl()
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("original_label");
                v.to_string()
            })
            .collect::<Vec<_>>()
            .join("\n"),
        4,
        codeclean::corpus::Split::Train,
    )?;
    assert!(corpus.injected_noise_ids().is_empty());

    let dim = 1 << 12;
    let train_set = Dataset::from_corpus(&corpus, dim);
    let val_set = Dataset::from_corpus(&val, dim);
    let test_set = Dataset::from_corpus(&test, dim);
    let spec = ModelSpec::new(Arch::Linear, 4, dim, 1e-4)?;
    let tcfg = TrainConfig {
        epochs: 30,
        learning_rate: 1.0,
        ..Default::default()
    };
    let (model, _) = train(&train_set.examples, &spec, &tcfg)?;
    let gold = select_gold(&model, &val_set, 40, 0.5, 0)?;
    let scores = if_scores(&model, &train_set.examples, &gold.examples(&val_set)?, &SolverConfig::default())?;
    let records = rank_records(ScoreMethod::If, train_set.ids.iter().cloned().zip(scores))?;

    println!("most suspicious samples:");
    for r in records.iter().take(3) {
        let s = corpus.get(&r.train_id).unwrap();
        let first_line = s.source_text.lines().nth(3).unwrap_or("").trim();
        println!("  {} label {} score {:+.4}  {first_line}", r.train_id, s.label, r.score);
    }

    let flagged = detect_noise(&records, 5.0)?;
    let cleaned = clean_remove(&corpus, &flagged)?;
    let (retrained, _) = train(&train_set.select(&cleaned)?.examples, &spec, &tcfg)?;
    println!(
        "test accuracy {:.3} -> {:.3} after removing {} samples",
        model.accuracy(&test_set.examples),
        retrained.accuracy(&test_set.examples),
        flagged.len()
    );

    // The same study through the experiment runner: precision cells are
    // absent because there is no ground truth.
    let mut cfg = ExperimentConfig {
        dataset: "found".into(),
        noise_mode: NoiseMode::Real,
        n_gold: 40,
        tau: 0.5,
        k_list: vec![5.0],
        seeds: vec![0],
        methods: vec![DetectMethod::If],
        clean_modes: vec![CleanMode::Remove],
        dim,
        l2_reg: 1e-4,
        ..Default::default()
    };
    cfg.train.learning_rate = 1.0;
    let run = run_experiment(&corpus, &val, &test, &cfg)?;
    assert!(run.report.summary.cells.iter().all(|c| c.metric != "precision"));
    print!("{}", run.report.render_tables());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
