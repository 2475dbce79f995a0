//! Influence Function and TracIn scores, pairwise and aggregated over a
//! gold set.

use rayon::prelude::*;

use super::solver::{inverse_hvp, HessianOperator, LinearOperator, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, Example, ModelParams};

/// Gold vectors solved concurrently per round. Scores still accumulate in
/// gold order.
const GOLD_CHUNK: usize = 16;

fn check_positive_definite(params: &ModelParams, solver: &SolverConfig) -> Result<()> {
    if params.spec.l2_reg + solver.damping > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(
            "l2_reg + damping must be positive for the damped Hessian to be invertible".into(),
        ))
    }
}

/// `(H + δI)⁻¹ ∇L(gold)` where `H` is the Hessian of the training objective
/// over `train` at `params`, and the gradient includes the regularizer.
pub fn precondition(
    params: &ModelParams,
    train: &[Example],
    gold: &Example,
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    check_positive_definite(params, solver)?;
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let op = HessianOperator {
        params,
        examples: train,
    };
    inverse_hvp(&op, &params.grad(gold), solver)
}

/// `⟨∇L(train_ex), v⟩` with the regularizer term included.
fn grad_dot(params: &ModelParams, ex: &Example, v: &[f64]) -> f64 {
    params.data_grad_dot(ex, v) + params.reg_grad_dot(v)
}

/// Influence Function score of one training example on one gold example:
/// `⟨∇L(gold), (H + δI)⁻¹ ∇L(train_ex)⟩`, evaluated through the symmetric
/// form `⟨(H + δI)⁻¹ ∇L(gold), ∇L(train_ex)⟩`.
pub fn if_score(
    params: &ModelParams,
    train: &[Example],
    train_ex: &Example,
    gold: &Example,
    solver: &SolverConfig,
) -> Result<f64> {
    check_positive_definite(params, solver)?;
    let op = HessianOperator {
        params,
        examples: train,
    };
    if_score_with_operator(&op, params, train_ex, gold, solver)
}

/// [`if_score`] against an arbitrary curvature operator in place of the
/// training-set Hessian.
pub fn if_score_with_operator(
    op: &dyn LinearOperator,
    params: &ModelParams,
    train_ex: &Example,
    gold: &Example,
    solver: &SolverConfig,
) -> Result<f64> {
    let v = inverse_hvp(op, &params.grad(gold), solver)?;
    Ok(grad_dot(params, train_ex, &v))
}

/// Aggregated IF score `Σ_j S_IF(train_i, gold_j)` for every training
/// example. The solver runs once per gold example.
pub fn if_scores(
    params: &ModelParams,
    train: &[Example],
    gold: &[Example],
    solver: &SolverConfig,
) -> Result<Vec<f64>> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument("empty gold set".into()));
    }
    check_positive_definite(params, solver)?;
    let mut totals = vec![0.0; train.len()];
    for chunk in gold.chunks(GOLD_CHUNK) {
        let solved: Vec<Vec<f64>> = chunk
            .par_iter()
            .map(|g| precondition(params, train, g, solver))
            .collect::<Result<_>>()?;
        totals.par_iter_mut().zip(train).for_each(|(total, ex)| {
            for v in &solved {
                *total += grad_dot(params, ex, v);
            }
        });
    }
    Ok(totals)
}

/// TracIn score `Σ_t η_t ⟨∇ℓ(train_ex; θ_t), ∇ℓ(gold; θ_t)⟩`. Gradients are
/// of the cross-entropy only.
pub fn tracin_score(train_ex: &Example, gold: &Example, checkpoints: &[Checkpoint]) -> Result<f64> {
    if checkpoints.is_empty() {
        return Err(Error::InvalidArgument("TracIn needs at least one checkpoint".into()));
    }
    Ok(checkpoints
        .iter()
        .map(|ck| ck.eta * ck.params.data_grad_dot(train_ex, &ck.params.data_grad(gold)))
        .sum())
}

/// Aggregated TracIn score over the gold set for every training example.
/// Each total is the gold-order sum of [`tracin_score`] values.
pub fn tracin_scores(train: &[Example], gold: &[Example], checkpoints: &[Checkpoint]) -> Result<Vec<f64>> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument("empty gold set".into()));
    }
    if checkpoints.is_empty() {
        return Err(Error::InvalidArgument("TracIn needs at least one checkpoint".into()));
    }
    let mut totals = vec![0.0; train.len()];
    for g in gold {
        let gold_grads: Vec<Vec<f64>> = checkpoints
            .par_iter()
            .map(|ck| ck.params.data_grad(g))
            .collect();
        totals.par_iter_mut().zip(train).for_each(|(total, ex)| {
            let pair: f64 = checkpoints
                .iter()
                .zip(&gold_grads)
                .map(|(ck, gg)| ck.eta * ck.params.data_grad_dot(ex, gg))
                .sum();
            *total += pair;
        });
    }
    Ok(totals)
}

/// Plain sum of per-gold scores, in the given order.
pub fn aggregate(pairwise: &[f64]) -> Result<f64> {
    if pairwise.is_empty() {
        return Err(Error::InvalidArgument("empty gold set".into()));
    }
    Ok(pairwise.iter().sum())
}
