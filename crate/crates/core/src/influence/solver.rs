//! Solvers for damped systems `(H + δI) x = b` given only `v ↦ H v`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Example, ModelParams};

/// A symmetric linear operator, typically a Hessian.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, v: &[f64]) -> Vec<f64>;

    /// Unbiased stochastic estimate of `apply(v)`. Defaults to the exact
    /// product.
    fn apply_sampled(&self, v: &[f64], _batch: usize, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.apply(v)
    }
}

/// Hessian of a model's training objective over a fixed example set.
pub struct HessianOperator<'a> {
    pub params: &'a ModelParams,
    pub examples: &'a [Example],
}

impl LinearOperator for HessianOperator<'_> {
    fn dim(&self) -> usize {
        self.params.len()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.params
            .hvp(self.examples, v)
            .expect("operator dimension checked by the solver")
    }

    fn apply_sampled(&self, v: &[f64], batch: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.examples.len();
        if batch == 0 || batch >= n {
            return self.apply(v);
        }
        let mut picks: Vec<usize> = index::sample(rng, n, batch).into_vec();
        picks.sort_unstable();
        let subset: Vec<Example> = picks.into_iter().map(|i| self.examples[i].clone()).collect();
        self.params
            .hvp(&subset, v)
            .expect("operator dimension checked by the solver")
    }
}

/// Any closure `v ↦ H v` of known dimension.
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (self.f)(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Cg,
    Lissa,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cg" => Ok(SolverMethod::Cg),
            "lissa" => Ok(SolverMethod::Lissa),
            other => Err(Error::InvalidArgument(format!("unknown solver `{other}`"))),
        }
    }
}

impl std::fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverMethod::Cg => "cg",
            SolverMethod::Lissa => "lissa",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub damping: f64,
    /// CG stops once `‖(H + δI)x − b‖ ≤ tol·‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
    /// Terms of the truncated Neumann series per LiSSA run.
    pub lissa_depth: usize,
    /// Independent LiSSA runs averaged together.
    pub lissa_samples: usize,
    /// LiSSA divides the operator by this; it must exceed half the largest
    /// eigenvalue of `H + δI` for the series to converge.
    pub lissa_scale: f64,
    /// Examples per stochastic Hessian estimate; 0 uses the full set.
    pub lissa_batch: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::Cg,
            damping: 0.01,
            tol: 1e-8,
            max_iter: 1000,
            lissa_depth: 5000,
            lissa_samples: 1,
            lissa_scale: 10.0,
            lissa_batch: 0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return bad("damping must be non-negative");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("solver tol must lie in (0, 1)");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if self.method == SolverMethod::Lissa
            && (self.lissa_depth == 0 || self.lissa_samples == 0 || self.lissa_scale.is_nan() || self.lissa_scale <= 0.0)
        {
            return bad("lissa_depth, lissa_samples and lissa_scale must be positive");
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn damped(op: &dyn LinearOperator, damping: f64, v: &[f64]) -> Vec<f64> {
    let mut out = op.apply(v);
    if damping != 0.0 {
        for (o, x) in out.iter_mut().zip(v) {
            *o += damping * x;
        }
    }
    out
}

/// Approximately solves `(H + damping·I) x = b`.
pub fn inverse_hvp(op: &dyn LinearOperator, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if b.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: b.len(),
        });
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("right-hand side is not finite".into()));
    }
    match cfg.method {
        SolverMethod::Cg => conjugate_gradient(op, b, cfg),
        SolverMethod::Lissa => lissa(op, b, cfg),
    }
}

fn conjugate_gradient(op: &dyn LinearOperator, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(x);
    }
    let target = cfg.tol * b_norm;
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);

    for iter in 0..cfg.max_iter {
        let ap = damped(op, cfg.damping, &p);
        let pap = dot(&p, &ap);
        // Non-positive curvature: the damped operator is not positive
        // definite along p.
        if pap.is_nan() || pap <= 0.0 {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: rr.sqrt(),
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= target {
            return Ok(x);
        }
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
    }

    let residual = norm(
        &damped(op, cfg.damping, &x)
            .iter()
            .zip(b)
            .map(|(ax, bi)| ax - bi)
            .collect::<Vec<_>>(),
    );
    if residual <= target {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Truncated Neumann series `A⁻¹b ≈ (1/s)·Σ_{t<T} (I − A/s)^t b`, computed
/// with the recursion `h ← b + (I − A/s) h`, averaged over independent runs.
fn lissa(op: &dyn LinearOperator, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    let n = b.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(6);
    let mut acc = vec![0.0; n];
    for _ in 0..cfg.lissa_samples {
        let mut h = b.to_vec();
        for _ in 0..cfg.lissa_depth {
            let hv = op.apply_sampled(&h, cfg.lissa_batch, &mut rng);
            for i in 0..n {
                h[i] = b[i] + h[i] - (hv[i] + cfg.damping * h[i]) / cfg.lissa_scale;
            }
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::NoConvergence {
                iterations: cfg.lissa_depth,
                residual: f64::INFINITY,
            });
        }
        for i in 0..n {
            acc[i] += h[i];
        }
    }
    let denom = cfg.lissa_scale * cfg.lissa_samples as f64;
    Ok(acc.into_iter().map(|x| x / denom).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_op(lambda: f64, dim: usize) -> FnOperator<impl Fn(&[f64]) -> Vec<f64>> {
        FnOperator {
            dim,
            f: move |v: &[f64]| v.iter().map(|x| lambda * x).collect(),
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let op = scalar_op(2.0, 5);
        for method in [SolverMethod::Cg, SolverMethod::Lissa] {
            let cfg = SolverConfig { method, ..Default::default() };
            assert_eq!(inverse_hvp(&op, &[0.0; 5], &cfg).unwrap(), vec![0.0; 5]);
        }
    }

    #[test]
    fn scalar_system() {
        let op = scalar_op(1e-3, 4);
        let b = [1.0, -2.0, 0.5, 3.0];
        let cfg = SolverConfig { damping: 0.01, ..Default::default() };
        let x = inverse_hvp(&op, &b, &cfg).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi / 0.011).abs() < 1e-9 * (bi / 0.011).abs());
        }
        let cfg = SolverConfig {
            method: SolverMethod::Lissa,
            damping: 0.01,
            lissa_scale: 0.02,
            lissa_depth: 2000,
            ..Default::default()
        };
        let x = inverse_hvp(&op, &b, &cfg).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi / 0.011).abs() < 1e-9 * (bi / 0.011).abs());
        }
    }

    #[test]
    fn non_convergence_reports_residual() {
        // Badly conditioned diagonal system with too few iterations.
        let op = FnOperator {
            dim: 50,
            f: |v: &[f64]| v.iter().enumerate().map(|(i, x)| (1.0 + i as f64).powi(3) * x).collect(),
        };
        let cfg = SolverConfig { damping: 0.0, tol: 1e-12, max_iter: 3, ..Default::default() };
        match inverse_hvp(&op, &[1.0; 50], &cfg) {
            Err(Error::NoConvergence { iterations: 3, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diverging_lissa_is_an_error() {
        let op = scalar_op(10.0, 3);
        let cfg = SolverConfig {
            method: SolverMethod::Lissa,
            lissa_scale: 1.0,
            lissa_depth: 2000,
            ..Default::default()
        };
        assert!(matches!(inverse_hvp(&op, &[1.0; 3], &cfg), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn dimension_and_config_checked() {
        let op = scalar_op(1.0, 3);
        assert!(inverse_hvp(&op, &[1.0; 2], &SolverConfig::default()).is_err());
        let cfg = SolverConfig { tol: 1.5, ..Default::default() };
        assert!(inverse_hvp(&op, &[1.0; 3], &cfg).is_err());
    }
}
