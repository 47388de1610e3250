use serde::Serialize;

use crate::config::ConfigMap;
use crate::error::{Error, Result};
use crate::measures::{parse_function, TestFunction};
use crate::sim::{Engine, SimulationConfig};

/// Which replicates enter a reported mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    #[default]
    All,
    /// Replicates alive at the horizon.
    SurvivorsOnly,
    Both,
}

impl Conditioning {
    pub fn includes_all(self) -> bool {
        matches!(self, Conditioning::All | Conditioning::Both)
    }

    pub fn includes_survivors(self) -> bool {
        matches!(self, Conditioning::SurvivorsOnly | Conditioning::Both)
    }
}

impl std::str::FromStr for Conditioning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Conditioning::All),
            "survivors_only" => Ok(Conditioning::SurvivorsOnly),
            "both" => Ok(Conditioning::Both),
            _ => Err(Error::Config(format!(
                "conditioning must be all, survivors_only or both, got '{s}'"
            ))),
        }
    }
}

impl std::fmt::Display for Conditioning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Conditioning::All => "all",
            Conditioning::SurvivorsOnly => "survivors_only",
            Conditioning::Both => "both",
        })
    }
}

/// A replicated experiment. The record times of `sim` are replaced by the
/// times each experiment needs; the horizon is where the `Ŵ_∞` proxy
/// `e^{-βT} W_T(1)` is read.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub sim: SimulationConfig,
    pub replicates: usize,
    pub t_grid: Vec<f64>,
    pub expansion_order: u32,
    pub test_function: TestFunction,
    /// `κ` in `ρ(t) = t^κ`.
    pub rho_exponent: f64,
    pub conditioning: Conditioning,
}

/// Keys understood by [`ExperimentPlan::from_config`] on top of the
/// simulation keys.
pub const PLAN_KEYS: &[&str] = &[
    "verify.replicates",
    "verify.t_grid",
    "verify.order",
    "verify.function",
    "verify.rho_exponent",
    "verify.conditioning",
];

impl ExperimentPlan {
    /// Plan with expansion order 0, `κ = 1/2` and no conditioning.
    pub fn new(sim: SimulationConfig, replicates: usize, t_grid: Vec<f64>, test_function: TestFunction) -> Self {
        Self {
            sim,
            replicates,
            t_grid,
            expansion_order: 0,
            test_function,
            rho_exponent: 0.5,
            conditioning: Conditioning::All,
        }
    }

    pub fn with_expansion_order(mut self, order: u32) -> Self {
        self.expansion_order = order;
        self
    }

    pub fn with_rho_exponent(mut self, kappa: f64) -> Self {
        self.rho_exponent = kappa;
        self
    }

    pub fn with_conditioning(mut self, conditioning: Conditioning) -> Self {
        self.conditioning = conditioning;
        self
    }

    /// `verify.t_grid` defaults to the simulation record times and
    /// `verify.function` to `one`.
    pub fn from_config(config: &ConfigMap) -> Result<Self> {
        let sim = SimulationConfig::from_config(config)?;
        let spec = config.get("verify.function").unwrap_or("one");
        let test_function = parse_function(spec, &sim.params, config.base_dir())
            .map_err(|e| Error::Config(format!("verify.function: {e}")))?;
        let t_grid = config
            .list("verify.t_grid")?
            .unwrap_or_else(|| sim.record_times.clone());
        Ok(
            Self::new(sim, config.require("verify.replicates")?, t_grid, test_function)
                .with_expansion_order(config.parsed_or("verify.order", 0)?)
                .with_rho_exponent(config.parsed_or("verify.rho_exponent", 0.5)?)
                .with_conditioning(config.parsed_or("verify.conditioning", Conditioning::All)?),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let config = |msg: String| Err(Error::Config(msg));
        if self.replicates < 2 {
            return config(format!("at least 2 replicates are needed, got {}", self.replicates));
        }
        if self.t_grid.is_empty() {
            return config("t_grid is empty".into());
        }
        let mut prev = 0.0;
        for &t in &self.t_grid {
            if !(t > prev && t <= self.sim.horizon) {
                return config(format!(
                    "t_grid must increase strictly within (0, {}], got {t} after {prev}",
                    self.sim.horizon
                ));
            }
            prev = t;
        }
        if !(self.rho_exponent > 0.0 && self.rho_exponent < 1.0) {
            return config(format!("rho_exponent must lie in (0, 1), got {}", self.rho_exponent));
        }
        if self.test_function.dim() != self.sim.params.dim() {
            return config(format!(
                "test function has dimension {}, motion has {}",
                self.test_function.dim(),
                self.sim.params.dim()
            ));
        }
        Ok(())
    }

    /// `ρ(t) = t^κ`.
    pub fn rho(&self, t: f64) -> f64 {
        t.powf(self.rho_exponent)
    }

    /// The simulation config recording at `spatial_times` (where positions
    /// are observed) and at the horizon. With the tree engine, positions are
    /// not carried past the last spatial time.
    pub(crate) fn configured(&self, spatial_times: &[f64]) -> Result<(SimulationConfig, Vec<f64>)> {
        let mut times = spatial_times.to_vec();
        times.push(self.sim.horizon);
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut sim = self.sim.clone().with_record_times(times.clone());
        if sim.engine == Engine::Tree {
            let last = spatial_times.iter().copied().fold(0.0, f64::max);
            sim = sim.with_spatial_horizon(Some(last));
        }
        sim.validate()?;
        Ok((sim, times))
    }

    /// `(key, value)` pairs of the full plan for output headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = self.sim.echo();
        let grid: Vec<String> = self.t_grid.iter().map(|t| t.to_string()).collect();
        out.extend([
            ("verify.replicates".to_string(), self.replicates.to_string()),
            ("verify.t_grid".to_string(), grid.join(" ")),
            ("verify.order".to_string(), self.expansion_order.to_string()),
            ("verify.function".to_string(), self.test_function.to_string()),
            ("verify.rho_exponent".to_string(), self.rho_exponent.to_string()),
            ("verify.conditioning".to_string(), self.conditioning.to_string()),
        ]);
        out
    }
}

/// Index of `t` in `times` (exact match, as produced by
/// [`ExperimentPlan::configured`]).
pub(crate) fn record_index(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .position(|&s| s == t)
        .expect("record time was inserted by the experiment")
}
