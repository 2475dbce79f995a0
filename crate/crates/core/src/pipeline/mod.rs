//! The detect-clean-retrain loop: gold-set selection, top-k detection,
//! removal or correction of flagged samples, precision against injected
//! ground truth, and the multi-seed experiment driver.

mod experiment;
mod report;

pub use experiment::{
    run_experiment, run_seed, CleanMode, DetectMethod, ExperimentConfig, ExperimentRun, KOutcome, MethodOutcome,
    NoiseMode, RetrainOutcome, SeedOutcome, SeedResult,
};
pub use report::{Cell, Report, SeedFile, Summary};

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::influence::InfluenceRecord;
use crate::model::{Dataset, Example, ModelParams};

const GOLD_STREAM: u64 = 4;
const RANDOM_BASELINE_STREAM: u64 = 5;

/// Trusted validation samples used as the influence anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldSet {
    pub ids: Vec<String>,
    pub n: usize,
    pub confidence_threshold: f64,
}

impl GoldSet {
    /// The gold examples, in gold order, looked up in `val`.
    pub fn examples(&self, val: &Dataset) -> Result<Vec<Example>> {
        let index: HashMap<&str, usize> = val.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        self.ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|&i| val.examples[i].clone())
                    .ok_or_else(|| Error::UnknownId(id.clone()))
            })
            .collect()
    }
}

/// Picks `n` validation samples uniformly among those the model predicts
/// correctly with top probability at least `tau`. The result lists ids in
/// validation order.
pub fn select_gold(model: &ModelParams, val: &Dataset, n: usize, tau: f64, seed: u64) -> Result<GoldSet> {
    if val.is_empty() {
        return Err(Error::InvalidArgument("empty validation set".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("gold set size must be positive".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("confidence threshold {tau} outside [0, 1]")));
    }
    let eligible: Vec<usize> = val
        .examples
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            let p = model.predict_proba(&e.features);
            let best = crate::model::argmax(&p);
            best == e.label && p[best] >= tau
        })
        .map(|(i, _)| i)
        .collect();
    if eligible.len() < n {
        return Err(Error::NotEnoughGold {
            eligible: eligible.len(),
            requested: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(GOLD_STREAM);
    let mut picks: Vec<usize> = index::sample(&mut rng, eligible.len(), n)
        .into_iter()
        .map(|j| eligible[j])
        .collect();
    picks.sort_unstable();
    Ok(GoldSet {
        ids: picks.into_iter().map(|i| val.ids[i].clone()).collect(),
        n,
        confidence_threshold: tau,
    })
}

/// `floor(k/100 · n)`, erroring when that is zero or `k ∉ (0, 100]`.
pub fn detection_count(k: f64, n: usize) -> Result<usize> {
    if !(k > 0.0 && k <= 100.0) {
        return Err(Error::InvalidArgument(format!("k = {k} outside (0, 100]")));
    }
    let count = ((k * n as f64 / 100.0 + 1e-9).floor() as usize).min(n);
    if count == 0 {
        return Err(Error::KTooSmall { k, n });
    }
    Ok(count)
}

/// Ids of the `floor(k/100 · n)` lowest-ranked records, in rank order.
pub fn detect_noise(records: &[InfluenceRecord], k: f64) -> Result<Vec<String>> {
    let count = detection_count(k, records.len())?;
    if records.iter().enumerate().any(|(i, r)| r.rank != i + 1) {
        return Err(Error::InvalidArgument("records are not in rank order".into()));
    }
    Ok(records[..count].iter().map(|r| r.train_id.clone()).collect())
}

fn id_set<'a>(corpus: &Corpus, ids: &'a [String]) -> Result<HashSet<&'a str>> {
    let known: HashSet<&str> = corpus.ids().collect();
    let mut set = HashSet::with_capacity(ids.len());
    for id in ids {
        if !known.contains(id.as_str()) {
            return Err(Error::UnknownId(id.clone()));
        }
        set.insert(id.as_str());
    }
    Ok(set)
}

/// The corpus without the listed samples, order preserved.
pub fn clean_remove(corpus: &Corpus, noise_ids: &[String]) -> Result<Corpus> {
    let drop = id_set(corpus, noise_ids)?;
    let kept = corpus
        .samples()
        .iter()
        .filter(|s| !drop.contains(s.id.as_str()))
        .cloned()
        .collect();
    Ok(corpus.with_samples(kept))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    /// Restore `original_label` where one exists; other detections are left
    /// as they are.
    GroundTruth,
    /// Flip a binary label, `0 ↔ 1`, for every listed sample.
    BinaryFlip,
}

impl std::str::FromStr for CorrectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ground_truth" | "correct" => Ok(CorrectionMode::GroundTruth),
            "binary_flip" => Ok(CorrectionMode::BinaryFlip),
            other => Err(Error::InvalidArgument(format!("unknown correction mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for CorrectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CorrectionMode::GroundTruth => "ground_truth",
            CorrectionMode::BinaryFlip => "binary_flip",
        })
    }
}

pub fn clean_correct(corpus: &Corpus, noise_ids: &[String], mode: CorrectionMode) -> Result<Corpus> {
    if mode == CorrectionMode::BinaryFlip && corpus.num_classes() != 2 {
        return Err(Error::InvalidArgument(format!(
            "binary_flip correction needs exactly 2 classes, corpus has {}",
            corpus.num_classes()
        )));
    }
    let targets = id_set(corpus, noise_ids)?;
    let mut out = corpus.clone();
    for s in out.samples_mut() {
        if !targets.contains(s.id.as_str()) {
            continue;
        }
        match mode {
            CorrectionMode::GroundTruth => {
                if let Some(orig) = s.original_label.take() {
                    s.label = orig;
                }
            }
            CorrectionMode::BinaryFlip => {
                s.label = 1 - s.label;
                if s.original_label == Some(s.label) {
                    s.original_label = None;
                }
            }
        }
    }
    Ok(out)
}

/// Fraction of detected ids that are ground-truth noise.
pub fn detection_metrics(detected: &[String], ground_truth: &[String]) -> Result<f64> {
    if detected.is_empty() {
        return Err(Error::InvalidArgument("no detected samples".into()));
    }
    let truth: HashSet<&str> = ground_truth.iter().map(String::as_str).collect();
    let hits = detected.iter().filter(|id| truth.contains(id.as_str())).count();
    Ok(hits as f64 / detected.len() as f64)
}

/// `floor(k/100 · n)` ids drawn uniformly without replacement, returned in
/// corpus order.
pub fn random_baseline(corpus: &Corpus, k: f64, seed: u64) -> Result<Vec<String>> {
    let n = corpus.len();
    let count = detection_count(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RANDOM_BASELINE_STREAM);
    let mut picks = index::sample(&mut rng, n, count).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| corpus.samples()[i].id.clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{FeatureVector, Sample, Split};
    use crate::influence::{rank_records, ScoreMethod};
    use crate::model::{ModelSpec, Arch};

    fn corpus(labels: &[usize], c: usize) -> Corpus {
        let samples = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Sample::new(format!("s{i:03}"), "x", l, Split::Train))
            .collect();
        Corpus::new(samples, c).unwrap()
    }

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn detect_takes_floor_prefix() {
        let r = rank_records(ScoreMethod::If, [("a", -5.0), ("c", -1.0), ("b", 0.0), ("d", 3.0)]).unwrap();
        assert_eq!(detect_noise(&r, 50.0).unwrap(), ids(&["a", "c"]));
        assert_eq!(detect_noise(&r, 100.0).unwrap(), ids(&["a", "c", "b", "d"]));
        assert!(matches!(detect_noise(&r, 10.0), Err(Error::KTooSmall { .. })));
        assert!(detect_noise(&r, 0.0).is_err());
        assert!(detect_noise(&r, 120.0).is_err());
    }

    #[test]
    fn detection_count_reference_settings() {
        assert_eq!(detection_count(1.0, 1200).unwrap(), 12);
        assert_eq!(detection_count(3.0, 1200).unwrap(), 36);
        assert_eq!(detection_count(5.0, 1200).unwrap(), 60);
        assert_eq!(detection_count(10.0, 1200).unwrap(), 120);
        assert_eq!(detection_count(10.0, 1000).unwrap(), 100);
        assert_eq!(detection_count(10.0, 15).unwrap(), 1);
    }

    #[test]
    fn remove() {
        let c = corpus(&[0; 100], 2);
        assert_eq!(clean_remove(&c, &[]).unwrap(), c);
        let ten: Vec<String> = (0..10).map(|i| format!("s{:03}", i * 10)).collect();
        let cleaned = clean_remove(&c, &ten).unwrap();
        assert_eq!(cleaned.len(), 90);
        assert_eq!(cleaned.samples()[0].id, "s001");
        let all_but_one: Vec<String> = c.ids().skip(1).map(String::from).collect();
        assert_eq!(clean_remove(&c, &all_but_one).unwrap().len(), 1);
        assert!(matches!(clean_remove(&c, &ids(&["zz"])), Err(Error::UnknownId(_))));
    }

    #[test]
    fn ground_truth_correction() {
        let mut c = corpus(&[2, 2, 1], 8);
        c.samples_mut()[0].original_label = Some(7);
        let fixed = clean_correct(&c, &ids(&["s000", "s001"]), CorrectionMode::GroundTruth).unwrap();
        assert_eq!(fixed.samples()[0].label, 7);
        assert_eq!(fixed.samples()[0].original_label, None);
        assert_eq!(fixed.samples()[1], c.samples()[1]);
        assert_eq!(fixed.samples()[2], c.samples()[2]);
    }

    #[test]
    fn binary_flip() {
        let c = corpus(&[0, 1, 0], 2);
        let f = clean_correct(&c, &ids(&["s000", "s001"]), CorrectionMode::BinaryFlip).unwrap();
        assert_eq!(f.labels(), vec![1, 0, 0]);
        let four = corpus(&[0, 1, 2, 3], 4);
        assert!(clean_correct(&four, &ids(&["s000"]), CorrectionMode::BinaryFlip).is_err());
    }

    #[test]
    fn precision() {
        assert_eq!(detection_metrics(&ids(&["a", "c"]), &ids(&["a"])).unwrap(), 0.5);
        assert_eq!(detection_metrics(&ids(&["a"]), &ids(&["a", "b"])).unwrap(), 1.0);
        assert!(detection_metrics(&[], &ids(&["a"])).is_err());
    }

    #[test]
    fn random_baseline_contract() {
        let c = corpus(&[0; 50], 2);
        let all = random_baseline(&c, 100.0, 3).unwrap();
        assert_eq!(all, c.ids().map(String::from).collect::<Vec<_>>());
        assert_eq!(random_baseline(&c, 10.0, 9).unwrap(), random_baseline(&c, 10.0, 9).unwrap());
        assert_eq!(random_baseline(&c, 10.0, 9).unwrap().len(), 5);
        assert!(random_baseline(&c, 1.0, 9).is_err());
    }

    fn val_set() -> Dataset {
        let examples: Vec<Example> = (0..10)
            .map(|i| Example::new(FeatureVector::from_pairs(4, [(i % 2, 1.0)]), i % 2))
            .collect();
        Dataset {
            ids: (0..10).map(|i| format!("v{i}")).collect(),
            examples,
        }
    }

    fn confident_model() -> ModelParams {
        let spec = ModelSpec::new(Arch::Linear, 2, 4, 0.0).unwrap();
        let mut m = ModelParams::zeros(spec);
        m.theta[0] = 50.0; // class 0 weight on feature 0
        m.theta[4 + 1] = 50.0; // class 1 weight on feature 1
        m
    }

    #[test]
    fn gold_selection() {
        let val = val_set();
        let g = select_gold(&confident_model(), &val, 5, 0.9, 1).unwrap();
        assert_eq!(g.ids.len(), 5);
        let unique: HashSet<&String> = g.ids.iter().collect();
        assert_eq!(unique.len(), 5);
        assert_eq!(g.examples(&val).unwrap().len(), 5);
        assert_eq!(g, select_gold(&confident_model(), &val, 5, 0.9, 1).unwrap());
    }

    #[test]
    fn gold_shortfall_reports_eligible_count() {
        let val = val_set();
        let mut weak = confident_model();
        weak.theta[0] = 1.0;
        weak.theta[5] = 1.0;
        assert!(matches!(
            select_gold(&weak, &val, 1, 1.0, 0),
            Err(Error::NotEnoughGold { eligible: 0, requested: 1 })
        ));
        assert!(matches!(
            select_gold(&confident_model(), &val, 11, 0.9, 0),
            Err(Error::NotEnoughGold { eligible: 10, requested: 11 })
        ));
    }
}
