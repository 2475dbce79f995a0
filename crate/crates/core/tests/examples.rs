//! Every runnable example doubles as a test.

#[path = "../examples/lex_and_featurize.rs"]
mod lex_and_featurize;
#[path = "../examples/inject_noise.rs"]
mod inject_noise;
#[path = "../examples/train_checkpoints.rs"]
mod train_checkpoints;
#[path = "../examples/inverse_hvp.rs"]
mod inverse_hvp;
#[path = "../examples/influence_scores.rs"]
mod influence_scores;
#[path = "../examples/loo_oracle.rs"]
mod loo_oracle;
#[path = "../examples/noise_detection.rs"]
mod noise_detection;
#[path = "../examples/real_noise_workflow.rs"]
mod real_noise_workflow;
#[path = "../examples/cli_workflow.rs"]
mod cli_workflow;

#[test]
fn example_lex_and_featurize() {
    lex_and_featurize::run_example().unwrap();
}

#[test]
fn example_inject_noise() {
    inject_noise::run_example().unwrap();
}

#[test]
fn example_train_checkpoints() {
    train_checkpoints::run_example().unwrap();
}

#[test]
fn example_inverse_hvp() {
    inverse_hvp::run_example().unwrap();
}

#[test]
fn example_influence_scores() {
    influence_scores::run_example().unwrap();
}

#[test]
fn example_loo_oracle() {
    loo_oracle::run_example().unwrap();
}

#[test]
fn example_noise_detection() {
    noise_detection::run_example().unwrap();
}

#[test]
fn example_real_noise_workflow() {
    real_noise_workflow::run_example().unwrap();
}

#[test]
fn example_cli_workflow() {
    cli_workflow::run_example().unwrap();
}
