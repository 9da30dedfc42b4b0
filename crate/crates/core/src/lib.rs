//! Deterministic evaluator and metaheuristic optimizers for multi-task
//! computation offloading in an ultra-dense NOMA small-cell network, plus a
//! CSV experiment harness driving algorithm comparisons.

pub mod baselines;
pub mod evaluator;
pub mod harness;
pub mod oracle;
pub mod optimizer;
pub mod scenario;
