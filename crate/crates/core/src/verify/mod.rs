//! Replicated Monte Carlo experiments: moment identities, the decay of
//! `E[(W̃_t(f) - W̃_s(T_{t-s} f))²]`, kernel-functional limits and the
//! long-time expansion of `W̃_t(f)`.
//!
//! Every experiment runs one paired batch of replicates, so targets that
//! involve `Ŵ_∞` are read from the same trajectories as the estimates and
//! verdicts are deterministic given the plan and seed.

mod experiments;
mod plan;
mod probe;
mod report;

pub use experiments::{
    decoupling_test, estimate_winf, first_moment_test, kernel_limit_experiment, theorem_experiment, theorem_experiments, variance_target,
    variance_test, VarianceEstimate, WinfEstimate, MIN_SURVIVORS, MIN_VARIANCE_REPLICATES, SE_GATE,
};
pub use plan::{Conditioning, ExperimentPlan, PLAN_KEYS};
pub use probe::SmoothedFunction;
pub use report::{Check, EstimatorReport, ReportRow, TermRow, Verdict};
