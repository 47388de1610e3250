//! Branching α-stable particle system.
//!
//! At scale `n` every particle carries mass `1/n`, moves as an independent
//! α-stable motion and branches at rate `n`, leaving two offspring with
//! probability `1/2 + β/(2n)` and none otherwise. The mean offspring number
//! is `1 + β/n`, so total mass grows like `e^{βt}`.

mod config;
mod engine;
mod increment;
mod record;
mod state;

pub use config::{Engine, SimulationConfig, DEFAULT_MAX_PARTICLES};
pub use engine::{run, Observer, RunOutcome};
pub use increment::{fill_stable_increment, sample_positive_stable, sample_stable_increment};
pub use record::{
    simulate, simulate_replicates, summarize, trajectory_csv, RecordRow, Statistic, TimeSummary, TrajectoryRecord,
    TrajectorySummary,
};
pub use state::{
    empirical_characteristic, evaluate_functional, evaluate_functional_counted, evaluate_kernel_functional,
    KernelFunctional, ParticleState, StateCollector,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Seed of replicate `index`: SplitMix64 finalization of the base seed
/// combined with the index.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream of replicate `index`.
pub fn replicate_rng(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(base, index))
}

/// Runs `replicates` independent trajectories, each with a fresh observer,
/// in parallel. Results are returned in replicate order.
pub fn run_replicates<O, F>(config: &SimulationConfig, replicates: usize, make_observer: F) -> Vec<(O, RunOutcome)>
where
    O: Observer + Send,
    F: Fn(usize) -> O + Sync,
{
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(config.seed, i as u64);
            let mut observer = make_observer(i);
            let outcome = run(config, &mut rng, &mut observer);
            (observer, outcome)
        })
        .collect()
}
