use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::StableParams;
use crate::measures::FiniteMeasure;

/// Default cap on the number of particles held in memory.
pub const DEFAULT_MAX_PARTICLES: u64 = 10_000_000;

/// How a trajectory is advanced between record times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Every branching event is simulated, one exponential clock per
    /// particle.
    #[default]
    Event,
    /// Each particle's surviving genealogy over a record interval is drawn
    /// in one step (the reconstructed tree of a linear birth-death process)
    /// and the motion is run along its edges. Same law as `Event` at the
    /// record times, at a cost proportional to the surviving population.
    Tree,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "event" => Ok(Engine::Event),
            "tree" => Ok(Engine::Tree),
            _ => Err(Error::Config(format!("engine must be 'event' or 'tree', got '{s}'"))),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Event => "event",
            Engine::Tree => "tree",
        })
    }
}

/// Branching particle system approximating the superprocess at scale `n`:
/// particles of mass `1/n` branch at rate `n` into two offspring with
/// probability `1/2 + β/(2n)` and die otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub params: StableParams,
    pub beta: f64,
    pub scale: u64,
    pub initial: FiniteMeasure,
    pub horizon: f64,
    pub record_times: Vec<f64>,
    pub seed: u64,
    pub max_particles: u64,
    pub engine: Engine,
    /// Record times beyond this carry the population count only, so the
    /// positions of very large populations are never materialized.
    pub spatial_horizon: Option<f64>,
}

impl SimulationConfig {
    /// Config recording only at the horizon, with seed 0, the event engine
    /// and the default particle cap.
    pub fn new(params: StableParams, beta: f64, scale: u64, initial: FiniteMeasure, horizon: f64) -> Self {
        Self {
            params,
            beta,
            scale,
            initial,
            horizon,
            record_times: vec![horizon],
            seed: 0,
            max_particles: DEFAULT_MAX_PARTICLES,
            engine: Engine::default(),
            spatial_horizon: None,
        }
    }

    pub fn with_record_times(mut self, times: Vec<f64>) -> Self {
        self.record_times = times;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_max_particles(mut self, cap: u64) -> Self {
        self.max_particles = cap;
        self
    }

    pub fn with_spatial_horizon(mut self, horizon: Option<f64>) -> Self {
        self.spatial_horizon = horizon;
        self
    }

    /// `round(n · m(1))`.
    pub fn initial_particles(&self) -> u64 {
        (self.scale as f64 * self.initial.total_mass()).round() as u64
    }

    /// `p₂ = 1/2 + β/(2n)`.
    pub fn offspring_probability(&self) -> f64 {
        0.5 + self.beta / (2.0 * self.scale as f64)
    }

    /// `1 + β/n`.
    pub fn mean_offspring(&self) -> f64 {
        2.0 * self.offspring_probability()
    }

    /// Particle mass `1/n`.
    pub fn particle_mass(&self) -> f64 {
        1.0 / self.scale as f64
    }

    /// Last time at which the engine holds particle positions or simulates
    /// individual particles.
    pub fn tracked_horizon(&self) -> f64 {
        match (self.engine, self.spatial_horizon) {
            (Engine::Tree, Some(h)) => {
                let last = self
                    .record_times
                    .iter()
                    .copied()
                    .filter(|&t| t <= h)
                    .fold(0.0, f64::max);
                last.min(self.horizon)
            }
            _ => self.horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let config = |msg: String| Err(Error::Config(msg));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return config(format!("beta must be finite and non-negative, got {}", self.beta));
        }
        if self.scale == 0 {
            return config("scale n must be positive".into());
        }
        if self.beta > self.scale as f64 {
            return config(format!(
                "beta/(2n) must not exceed 1/2 (beta = {}, n = {})",
                self.beta, self.scale
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return config(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.record_times.is_empty() {
            return config("at least one record time is needed".into());
        }
        let mut prev = 0.0;
        for &t in &self.record_times {
            if !(t > prev && t <= self.horizon) {
                return config(format!(
                    "record times must increase strictly within (0, {}], got {t} after {prev}",
                    self.horizon
                ));
            }
            prev = t;
        }
        if self.initial.dim() != self.params.dim() {
            return config(format!(
                "initial measure has dimension {}, motion has {}",
                self.initial.dim(),
                self.params.dim()
            ));
        }
        if self.initial_particles() == 0 {
            return config("n · m(1) rounds to zero initial particles".into());
        }
        if let Some(h) = self.spatial_horizon {
            if !(h >= 0.0) {
                return config(format!("spatial horizon must be non-negative, got {h}"));
            }
        }
        if self.max_particles == 0 {
            return config("max_particles must be positive".into());
        }
        let expected = self.scale as f64 * self.initial.total_mass() * (self.beta * self.tracked_horizon()).exp();
        if expected > self.max_particles as f64 / 10.0 {
            return Err(Error::Capacity(format!(
                "expected population n·m(1)·e^(βT) = {expected:.3e} exceeds max_particles/10 = {:.3e}",
                self.max_particles as f64 / 10.0
            )));
        }
        Ok(())
    }

    /// `(key, value)` pairs describing the config, in the flat config format.
    pub fn echo(&self) -> Vec<(String, String)> {
        let atoms = self
            .initial
            .atoms()
            .iter()
            .map(|a| {
                let loc: Vec<String> = a.location.iter().map(|v| v.to_string()).collect();
                format!("{} : {}", loc.join(" "), a.mass)
            })
            .collect::<Vec<_>>()
            .join("; ");
        let times: Vec<String> = self.record_times.iter().map(|t| t.to_string()).collect();
        let mut out = vec![
            ("model.alpha".to_string(), self.params.alpha().to_string()),
            ("model.dim".to_string(), self.params.dim().to_string()),
            ("model.beta".to_string(), self.beta.to_string()),
            ("sim.scale".to_string(), self.scale.to_string()),
            ("sim.initial".to_string(), atoms),
            ("sim.horizon".to_string(), self.horizon.to_string()),
            ("sim.record_times".to_string(), times.join(" ")),
            ("sim.seed".to_string(), self.seed.to_string()),
            ("sim.max_particles".to_string(), self.max_particles.to_string()),
            ("sim.engine".to_string(), self.engine.to_string()),
        ];
        if let Some(h) = self.spatial_horizon {
            out.push(("sim.spatial_horizon".to_string(), h.to_string()));
        }
        out
    }
}
