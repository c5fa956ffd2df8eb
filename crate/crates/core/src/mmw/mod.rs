//! Sketched matrix multiplicative weights.
//!
//! Feedback operators from the oracles are normalized to `0 <= Y <= Id`,
//! summed in sparse form, and exponentiated implicitly with a truncated
//! Taylor series applied to a fresh Gaussian sketch at every round.

mod accumulated;
mod engine;
mod feedback;
mod regret;
mod taylor;

pub use accumulated::FeedbackSum;
pub use engine::{mmw_solve, next_iterate, IterationRecord, MmwConfig, MmwOutcome, OracleVerdict, VerdictTag};
pub use feedback::{gershgorin_bound, normalize_feedback, scaled_identity, FeedbackMatrix, NormalizedFeedback};
pub use regret::{dense_iterates, eigenvalue_regret_check};
pub use taylor::{adaptive_degree, taylor_block, taylor_exp_apply, TaylorDegree};
