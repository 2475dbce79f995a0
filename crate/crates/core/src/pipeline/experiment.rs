//! Multi-seed driver: inject noise, train, pick gold, score, detect, clean,
//! retrain, evaluate on the held-out test split.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    clean_correct, clean_remove, detect_noise, detection_metrics, random_baseline, select_gold, CorrectionMode,
    Report,
};
use crate::corpus::{inject_noise, Corpus, DEFAULT_DIM};
use crate::error::{Error, Result};
use crate::influence::{if_scores, rank_records, tracin_scores, InfluenceRecord, ScoreMethod, SolverConfig};
use crate::model::{train, Arch, Dataset, ModelParams, ModelSpec, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectMethod {
    If,
    TracIn,
    Random,
}

impl DetectMethod {
    pub fn score_method(self) -> Option<ScoreMethod> {
        match self {
            DetectMethod::If => Some(ScoreMethod::If),
            DetectMethod::TracIn => Some(ScoreMethod::TracIn),
            DetectMethod::Random => None,
        }
    }
}

impl fmt::Display for DetectMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectMethod::If => "if",
            DetectMethod::TracIn => "tracin",
            DetectMethod::Random => "random",
        })
    }
}

impl FromStr for DetectMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "if" => Ok(DetectMethod::If),
            "tracin" => Ok(DetectMethod::TracIn),
            "random" => Ok(DetectMethod::Random),
            other => Err(Error::InvalidArgument(format!("unknown detection method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CleanMode {
    Remove,
    Correct,
}

impl fmt::Display for CleanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CleanMode::Remove => "remove",
            CleanMode::Correct => "correct",
        })
    }
}

impl FromStr for CleanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "remove" => Ok(CleanMode::Remove),
            "correct" => Ok(CleanMode::Correct),
            other => Err(Error::InvalidArgument(format!("unknown clean mode `{other}`"))),
        }
    }
}

/// Whether label noise is injected (ground truth known) or the corpus is
/// taken as is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Synthetic,
    Real,
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "synthetic" => Ok(NoiseMode::Synthetic),
            "real" => Ok(NoiseMode::Real),
            other => Err(Error::InvalidArgument(format!("unknown noise mode `{other}`"))),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMode::Synthetic => "synthetic",
            NoiseMode::Real => "real",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: String,
    pub noise_mode: NoiseMode,
    /// Percentage of each class relabeled in synthetic mode.
    pub p: f64,
    /// Gold-set size.
    pub n_gold: usize,
    pub tau: f64,
    pub k_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<DetectMethod>,
    pub clean_modes: Vec<CleanMode>,
    pub correction: CorrectionMode,
    pub arch: Arch,
    pub dim: usize,
    pub l2_reg: f64,
    /// Training settings; `seed` is replaced by each experiment seed.
    pub train: TrainConfig,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "corpus".into(),
            noise_mode: NoiseMode::Synthetic,
            p: 10.0,
            n_gold: 500,
            tau: 0.9,
            k_list: vec![1.0, 3.0, 5.0, 10.0],
            seeds: vec![0, 1, 2],
            methods: vec![DetectMethod::If, DetectMethod::TracIn, DetectMethod::Random],
            clean_modes: vec![CleanMode::Correct, CleanMode::Remove],
            correction: CorrectionMode::GroundTruth,
            arch: Arch::Linear,
            dim: DEFAULT_DIM,
            l2_reg: 1e-3,
            train: TrainConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0..=100.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 100]", self.p));
        }
        if let Some(k) = self.k_list.iter().find(|&&k| !(k > 0.0 && k <= 100.0)) {
            return bad(format!("k = {k} outside (0, 100]"));
        }
        if self.k_list.is_empty() {
            return bad("k_list is empty".into());
        }
        if self.seeds.is_empty() {
            return bad("no seeds given".into());
        }
        if self.methods.is_empty() {
            return bad("no detection methods given".into());
        }
        if self.n_gold == 0 {
            return bad("n_gold must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau = {} outside [0, 1]", self.tau));
        }
        if !self.dim.is_power_of_two() {
            return bad(format!("feature dimension {} is not a power of two", self.dim));
        }
        self.train.validate()?;
        self.solver.validate()
    }

    pub fn model_spec(&self, num_classes: usize) -> Result<ModelSpec> {
        ModelSpec::new(self.arch, num_classes, self.dim, self.l2_reg)
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainOutcome {
    pub mode: CleanMode,
    pub train_size: usize,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KOutcome {
    pub k: f64,
    pub detected: usize,
    /// Present only when ground truth is known.
    pub precision: Option<f64>,
    pub retrain: Vec<RetrainOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: DetectMethod,
    pub per_k: Vec<KOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub noise_ids: Option<Vec<String>>,
    pub noisy_test_accuracy: f64,
    pub gold_ids: Vec<String>,
    pub methods: Vec<MethodOutcome>,
}

/// One seed's result; failures keep their diagnostic instead of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<SeedOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A finished experiment: the report plus the ranked scores behind it,
/// one list per seed and scoring method.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: Report,
    pub scores: Vec<(u64, Vec<InfluenceRecord>)>,
}

struct Splits<'a> {
    train: &'a Corpus,
    train_features: Dataset,
    val: Dataset,
    test: Dataset,
    spec: ModelSpec,
}

fn prepare<'a>(train: &'a Corpus, val: &Corpus, test: &Corpus, cfg: &ExperimentConfig) -> Result<Splits<'a>> {
    cfg.validate()?;
    for (name, c) in [("validation", val), ("test", test)] {
        if c.num_classes() != train.num_classes() {
            return Err(Error::InvalidArgument(format!(
                "{name} corpus has {} classes, train has {}",
                c.num_classes(),
                train.num_classes()
            )));
        }
    }
    let train_ids: std::collections::HashSet<&str> = train.ids().collect();
    if let Some(id) = val.ids().chain(test.ids()).find(|id| train_ids.contains(id)) {
        return Err(Error::InvalidArgument(format!("sample `{id}` appears in more than one split")));
    }
    Ok(Splits {
        train,
        train_features: Dataset::from_corpus(train, cfg.dim),
        val: Dataset::from_corpus(val, cfg.dim),
        test: Dataset::from_corpus(test, cfg.dim),
        spec: cfg.model_spec(train.num_classes())?,
    })
}

fn fit(data: &Dataset, spec: &ModelSpec, cfg: &TrainConfig) -> Result<(ModelParams, Vec<crate::model::Checkpoint>)> {
    train(&data.examples, spec, cfg)
}

/// Runs every stage for one seed. The test split is only read after each
/// model is trained.
fn seed_outcome(
    splits: &Splits<'_>,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(SeedOutcome, Vec<InfluenceRecord>)> {
    let (noisy, noise_ids) = match cfg.noise_mode {
        NoiseMode::Synthetic => {
            let (c, ids) = inject_noise(splits.train, cfg.p, seed)?;
            (c, Some(ids))
        }
        NoiseMode::Real => (splits.train.clone(), None),
    };
    let train_set = splits.train_features.relabeled(&noisy)?;
    let tcfg = cfg.train_config(seed);
    let (model, checkpoints) = fit(&train_set, &splits.spec, &tcfg)?;

    let gold = select_gold(&model, &splits.val, cfg.n_gold, cfg.tau, seed)?;
    let gold_examples = gold.examples(&splits.val)?;

    let mut all_records = Vec::new();
    let mut methods = Vec::new();
    for &method in &cfg.methods {
        let records = match method {
            DetectMethod::If => Some(if_scores(&model, &train_set.examples, &gold_examples, &cfg.solver)?),
            DetectMethod::TracIn => Some(tracin_scores(&train_set.examples, &gold_examples, &checkpoints)?),
            DetectMethod::Random => None,
        }
        .map(|scores| {
            rank_records(
                method.score_method().expect("scored method"),
                train_set.ids.iter().cloned().zip(scores),
            )
        })
        .transpose()?;

        let mut per_k = Vec::new();
        for &k in &cfg.k_list {
            let detected = match &records {
                Some(r) => detect_noise(r, k)?,
                None => random_baseline(&noisy, k, seed)?,
            };
            let precision = noise_ids
                .as_ref()
                .map(|truth| detection_metrics(&detected, truth))
                .transpose()?;
            let mut retrain = Vec::new();
            for &mode in &cfg.clean_modes {
                let cleaned = match mode {
                    CleanMode::Remove => clean_remove(&noisy, &detected)?,
                    CleanMode::Correct => clean_correct(&noisy, &detected, cfg.correction)?,
                };
                let data = splits.train_features.select(&cleaned)?;
                let (clean_model, _) = fit(&data, &splits.spec, &tcfg)?;
                retrain.push(RetrainOutcome {
                    mode,
                    train_size: data.len(),
                    test_accuracy: clean_model.accuracy(&splits.test.examples),
                });
            }
            per_k.push(KOutcome {
                k,
                detected: detected.len(),
                precision,
                retrain,
            });
        }
        methods.push(MethodOutcome { method, per_k });
        all_records.extend(records.unwrap_or_default());
    }

    Ok((
        SeedOutcome {
            noise_ids,
            noisy_test_accuracy: model.accuracy(&splits.test.examples),
            gold_ids: gold.ids,
            methods,
        },
        all_records,
    ))
}

fn seed_result(splits: &Splits<'_>, cfg: &ExperimentConfig, seed: u64) -> (SeedResult, Vec<InfluenceRecord>) {
    match seed_outcome(splits, cfg, seed) {
        Ok((outcome, records)) => (
            SeedResult {
                seed,
                outcome: Some(outcome),
                error: None,
            },
            records,
        ),
        Err(e) => (
            SeedResult {
                seed,
                outcome: None,
                error: Some(e.to_string()),
            },
            Vec::new(),
        ),
    }
}

/// Runs a single seed. Stage errors are captured in the result rather than
/// returned; only invalid configuration or inputs produce `Err`.
pub fn run_seed(
    train_corpus: &Corpus,
    val: &Corpus,
    test: &Corpus,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(SeedResult, Vec<InfluenceRecord>)> {
    let splits = prepare(train_corpus, val, test, cfg)?;
    Ok(seed_result(&splits, cfg, seed))
}

/// Runs all seeds (concurrently) and assembles the report in seed order.
pub fn run_experiment(train_corpus: &Corpus, val: &Corpus, test: &Corpus, cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let splits = prepare(train_corpus, val, test, cfg)?;
    let results: Vec<(SeedResult, Vec<InfluenceRecord>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| seed_result(&splits, cfg, seed))
        .collect();
    let (per_seed, scores): (Vec<_>, Vec<_>) = results
        .into_iter()
        .map(|(r, recs)| {
            let seed = r.seed;
            (r, (seed, recs))
        })
        .unzip();
    Ok(ExperimentRun {
        report: Report::assemble(cfg.clone(), per_seed),
        scores,
    })
}
