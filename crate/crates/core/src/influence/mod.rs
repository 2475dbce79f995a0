//! Training-data influence: Influence Functions through damped
//! inverse-Hessian-vector products, TracIn over checkpoints, and the
//! leave-one-out oracle both are checked against.
//!
//! Sign convention: the lowest aggregated score marks the most suspicious
//! training sample. Removing sample `i` changes the gold loss by roughly
//! `S_IF(i) / n`, so IF and leave-one-out scores correlate positively.

mod loo;
mod records;
mod scores;
pub mod solver;

pub use loo::{loo_oracle, loo_scores};
pub use records::{rank_records, scores_from_csv, scores_to_csv, InfluenceRecord, ScoreMethod};
pub use scores::{aggregate, if_score, if_score_with_operator, if_scores, precondition, tracin_score, tracin_scores};
pub use solver::{inverse_hvp, FnOperator, HessianOperator, LinearOperator, SolverConfig, SolverMethod};
