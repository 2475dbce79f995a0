//! Brute-force leave-one-out influence: retrain without a sample and
//! measure the change in gold-set loss.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{train, Dataset, Example, ModelParams, ModelSpec, TrainConfig};

fn without(train_set: &[Example], skip: usize) -> Vec<Example> {
    train_set
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, e)| e.clone())
        .collect()
}

fn loo_delta(
    train_set: &[Example],
    target: usize,
    gold: &[Example],
    full: &ModelParams,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<f64> {
    let (reduced, _) = train(&without(train_set, target), spec, cfg)?;
    Ok(reduced.loss(gold)? - full.loss(gold)?)
}

fn check(train_set: &Dataset, gold: &[Example]) -> Result<()> {
    if train_set.len() < 2 {
        return Err(Error::InvalidArgument(
            "leave-one-out needs at least two training samples".into(),
        ));
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("empty gold set".into()));
    }
    Ok(())
}

/// `L(gold; θ₋ᵢ) − L(gold; θ)` for the sample `target_id`.
///
/// Both models start from the same seeded initialization. The reduced run
/// draws its shuffles over the reduced index set with the same seed.
pub fn loo_oracle(
    train_set: &Dataset,
    target_id: &str,
    gold: &[Example],
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<f64> {
    check(train_set, gold)?;
    let target = train_set
        .position(target_id)
        .ok_or_else(|| Error::UnknownId(target_id.to_string()))?;
    let (full, _) = train(&train_set.examples, spec, cfg)?;
    loo_delta(&train_set.examples, target, gold, &full, spec, cfg)
}

/// [`loo_oracle`] for every training sample, in dataset order. The full
/// model is trained once; the `n` reduced retrainings run in parallel.
pub fn loo_scores(train_set: &Dataset, gold: &[Example], spec: &ModelSpec, cfg: &TrainConfig) -> Result<Vec<f64>> {
    check(train_set, gold)?;
    let (full, _) = train(&train_set.examples, spec, cfg)?;
    (0..train_set.len())
        .into_par_iter()
        .map(|i| loo_delta(&train_set.examples, i, gold, &full, spec, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FeatureVector;
    use crate::model::Arch;

    fn toy() -> Dataset {
        let mut ex = Vec::new();
        for i in 0..12 {
            let label = i % 2;
            let fv = FeatureVector::from_pairs(4, [(label * 2, 0.8), (label * 2 + 1, 0.6)]);
            ex.push(Example::new(fv, label));
        }
        Dataset {
            ids: (0..12).map(|i| format!("s{i:02}")).collect(),
            examples: ex,
        }
    }

    fn spec() -> ModelSpec {
        ModelSpec::new(Arch::Linear, 2, 4, 0.01).unwrap()
    }

    #[test]
    fn zero_epochs_gives_zero() {
        let d = toy();
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        assert_eq!(loo_oracle(&d, "s03", &d.examples[..2], &spec(), &cfg).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let d = toy();
        let cfg = TrainConfig::default();
        assert!(matches!(loo_oracle(&d, "nope", &d.examples[..1], &spec(), &cfg), Err(Error::UnknownId(_))));
        assert!(loo_oracle(&d, "s00", &[], &spec(), &cfg).is_err());
        let single = Dataset { ids: vec!["a".into()], examples: vec![d.examples[0].clone()] };
        assert!(loo_oracle(&single, "a", &d.examples[..1], &spec(), &cfg).is_err());
    }

    #[test]
    fn batch_matches_single() {
        let d = toy();
        let cfg = TrainConfig { epochs: 5, batch_size: 4, ..Default::default() };
        let all = loo_scores(&d, &d.examples[..3], &spec(), &cfg).unwrap();
        assert_eq!(all[5], loo_oracle(&d, "s05", &d.examples[..3], &spec(), &cfg).unwrap());
    }
}
