//! Numerics and Monte Carlo machinery for supercritical α-stable
//! Dawson–Watanabe superprocesses.
//!
//! * [`kernel`]: the α-stable transition kernel `p_t`, its derivatives
//!   `∂^k p_t`, the expansion constants `ϑ^k_{d,α}`, the semigroup `T_t` and
//!   the truncated long-time expansion `L_t^N f`.
//! * [`measures`]: atomic initial measures and the whitelisted test-function
//!   family with analytic Fourier transforms and moments.
//! * [`sim`]: the branching particle system (mass `1/n`, branching rate `n`,
//!   binary offspring) whose high-density limit is the superprocess.
//! * [`verify`]: replicated experiments comparing simulated functionals with
//!   the moment identities and long-time expansions.
//! * [`config`]: the flat `section.key = value` configuration format.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod kernel;
pub mod measures;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};

/// Version string echoed into every output artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
