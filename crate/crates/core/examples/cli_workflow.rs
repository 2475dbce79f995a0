//! Drive the command line in-process: inject, train, score, clean and
//! retrain, each stage reading the previous stage's files.
//!
//! Run with `cargo run --example cli_workflow`. The same steps work with the
//! `codeclean` binary.

use codeclean::cli::run_from_args;
use codeclean::corpus::synth::{generate_splits, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("codeclean-cli-example");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir)?;
    let (train, val, test) = generate_splits(
        &SynthConfig {
            overlap: 0.1,
            seed: 2,
            ..Default::default()
        },
        40,
        20,
        20,
    )?;
    let path = |name: &str| dir.join(name).to_string_lossy().into_owned();
    train.save(path("train.jsonl"))?;
    val.save(path("val.jsonl"))?;
    test.save(path("test.jsonl"))?;
    std::fs::write(
        path("run.conf"),
        "# shared settings\ndim = 4096\nl2_reg = 1e-4\nlearning_rate = 1.0\nepochs = 20\nn_gold = 30\ntau = 0.5\n",
    )?;

    let out = path("out");
    let conf = path("run.conf");
    let run = |args: &[&str]| {
        let mut full = vec!["codeclean", "--quiet", "--config", &conf, "--out-dir", &out, "--seed", "1"];
        full.extend_from_slice(args);
        run_from_args(full)
    };
    let steps: Vec<Vec<String>> = vec![
        vec!["inject".into(), "--in".into(), path("train.jsonl"), "--p".into(), "10".into(), "--out".into(), path("noisy.jsonl")],
        vec!["train".into(), "--train".into(), path("noisy.jsonl"), "--val".into(), path("val.jsonl")],
        vec!["score".into(), "--method".into(), "both".into(), "--train".into(), path("noisy.jsonl"), "--val".into(), path("val.jsonl")],
        vec!["clean".into(), "--train".into(), path("noisy.jsonl"), "--scores".into(), format!("{out}/scores_if.csv"), "--k".into(), "10".into(), "--mode".into(), "correct".into(), "--out".into(), path("clean.jsonl")],
        vec!["retrain".into(), "--train".into(), path("clean.jsonl"), "--test".into(), path("test.jsonl")],
    ];
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        let code = run(&args);
        println!("codeclean {} -> exit {code}", step[0]);
        assert_eq!(code, 0);
    }

    // Validation problems exit with 2: binary_flip needs two classes.
    let code = run(&["clean", "--train", &path("noisy.jsonl"), "--scores", &format!("{out}/scores_if.csv"), "--k", "10", "--mode", "binary_flip"]);
    println!("binary_flip on 4 classes -> exit {code}");
    assert_eq!(code, 2);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
