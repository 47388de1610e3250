use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::TestFunction;

use super::config::SimulationConfig;
use super::engine::{run, Observer};
use super::replicate_rng;

/// Functionals of one trajectory at one record time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordRow {
    pub t: f64,
    pub population: u64,
    /// `W_t(1)`
    pub w1: f64,
    /// `W̃_t(1) = e^{-βt} W_t(1)`
    pub wtilde1: f64,
    /// `W_t(f_j)`
    pub functionals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub replicate: usize,
    pub seed: u64,
    pub rows: Vec<RecordRow>,
    /// Exact extinction time for the event engine; first record time with
    /// an empty population for the tree engine.
    pub extinction_time: Option<f64>,
    /// The particle cap was exceeded and `rows` stops early.
    pub aborted: bool,
    /// Particle evaluations that fell off a tabulation grid and counted as 0.
    pub off_grid_evaluations: u64,
}

impl TrajectoryRecord {
    pub fn is_extinct(&self) -> bool {
        self.extinction_time.is_some()
    }
}

struct FunctionalObserver<'a> {
    config: &'a SimulationConfig,
    functionals: &'a [TestFunction],
    spatial: bool,
    sums: Vec<f64>,
    missed: u64,
    rows: Vec<RecordRow>,
}

impl FunctionalObserver<'_> {
    fn spatial_at(&self, record: usize) -> bool {
        self.spatial
            && self
                .config
                .spatial_horizon
                .is_none_or(|h| self.config.record_times[record] <= h)
    }
}

impl Observer for FunctionalObserver<'_> {
    fn needs_positions(&self, record: usize) -> bool {
        self.spatial_at(record)
    }

    fn visit(&mut self, _record: usize, x: &[f64]) {
        for (sum, f) in self.sums.iter_mut().zip(self.functionals) {
            if matches!(f, TestFunction::Constant { .. }) {
                continue;
            }
            match f.try_eval(x) {
                Some(v) => *sum += v,
                None => self.missed += 1,
            }
        }
    }

    fn record(&mut self, _record: usize, time: f64, population: u64) {
        let n = self.config.scale as f64;
        let w1 = population as f64 / n;
        let functionals = self
            .sums
            .iter_mut()
            .zip(self.functionals)
            .map(|(sum, f)| {
                let value = match f {
                    TestFunction::Constant { value, .. } => value * w1,
                    _ => *sum / n,
                };
                *sum = 0.0;
                value
            })
            .collect();
        self.rows.push(RecordRow {
            t: time,
            population,
            w1,
            wtilde1: (-self.config.beta * time).exp() * w1,
            functionals,
        });
    }
}

fn check_functionals(config: &SimulationConfig, functionals: &[TestFunction]) -> Result<()> {
    for f in functionals {
        if f.dim() != config.params.dim() {
            return Err(Error::Config(format!(
                "functional {f} has dimension {}, motion has {}",
                f.dim(),
                config.params.dim()
            )));
        }
    }
    let spatial = functionals.iter().any(|f| !matches!(f, TestFunction::Constant { .. }));
    if let (true, Some(h)) = (spatial, config.spatial_horizon) {
        if config.record_times.iter().any(|&t| t > h) {
            return Err(Error::Config(format!(
                "record times beyond the spatial horizon {h} carry counts only, so only constant functionals are allowed"
            )));
        }
    }
    Ok(())
}

fn simulate_one(config: &SimulationConfig, functionals: &[TestFunction], replicate: usize) -> TrajectoryRecord {
    let mut observer = FunctionalObserver {
        config,
        functionals,
        spatial: functionals.iter().any(|f| !matches!(f, TestFunction::Constant { .. })),
        sums: vec![0.0; functionals.len()],
        missed: 0,
        rows: Vec::with_capacity(config.record_times.len()),
    };
    let mut rng = replicate_rng(config.seed, replicate as u64);
    let outcome = run(config, &mut rng, &mut observer);
    TrajectoryRecord {
        replicate,
        seed: config.seed,
        rows: observer.rows,
        extinction_time: outcome.extinction_time,
        aborted: outcome.aborted_at.is_some(),
        off_grid_evaluations: observer.missed,
    }
}

/// One trajectory (replicate 0 of `config.seed`), recording `W_t(1)`,
/// `W̃_t(1)` and `W_t(f_j)` at every record time.
pub fn simulate(config: &SimulationConfig, functionals: &[TestFunction]) -> Result<TrajectoryRecord> {
    config.validate()?;
    check_functionals(config, functionals)?;
    Ok(simulate_one(config, functionals, 0))
}

/// `replicates` trajectories run in parallel and returned in replicate order.
pub fn simulate_replicates(
    config: &SimulationConfig,
    functionals: &[TestFunction],
    replicates: usize,
) -> Result<Vec<TrajectoryRecord>> {
    config.validate()?;
    check_functionals(config, functionals)?;
    Ok((0..replicates)
        .into_par_iter()
        .map(|i| simulate_one(config, functionals, i))
        .collect())
}

/// Rows `replicate,t,population,W1,Wtilde1,f_1,…,f_m,extinct_flag` under a
/// `#` header.
pub fn trajectory_csv(records: &[TrajectoryRecord], functional_count: usize, header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("replicate,t,population,W1,Wtilde1");
    for j in 1..=functional_count {
        let _ = write!(out, ",f_{j}");
    }
    out.push_str(",extinct_flag\n");
    for record in records {
        for row in &record.rows {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                record.replicate, row.t, row.population, row.w1, row.wtilde1
            );
            for v in &row.functionals {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", u8::from(row.population == 0));
        }
    }
    out
}

/// Sample mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Statistic {
    pub mean: f64,
    pub variance: f64,
    pub standard_error: f64,
    pub count: usize,
}

impl Statistic {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self {
                mean: 0.0,
                variance: 0.0,
                standard_error: 0.0,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let variance = if count > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            variance,
            standard_error: (variance / count as f64).sqrt(),
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSummary {
    pub t: f64,
    pub extinct_fraction: f64,
    pub w1: Statistic,
    pub wtilde1: Statistic,
    pub functionals: Vec<Statistic>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub replicates: usize,
    pub aborted: usize,
    pub times: Vec<TimeSummary>,
}

/// Cross-replicate statistics per record time over the complete
/// (non-aborted) trajectories.
pub fn summarize(records: &[TrajectoryRecord]) -> TrajectorySummary {
    let complete: Vec<&TrajectoryRecord> = records.iter().filter(|r| !r.aborted).collect();
    let rows = complete.first().map_or(0, |r| r.rows.len());
    let functionals = complete
        .first()
        .and_then(|r| r.rows.first())
        .map_or(0, |row| row.functionals.len());
    let times = (0..rows)
        .map(|i| {
            let column =
                |pick: &dyn Fn(&RecordRow) -> f64| complete.iter().map(|r| pick(&r.rows[i])).collect::<Vec<_>>();
            TimeSummary {
                t: complete[0].rows[i].t,
                extinct_fraction: complete.iter().filter(|r| r.rows[i].population == 0).count() as f64
                    / complete.len() as f64,
                w1: Statistic::of(&column(&|row| row.w1)),
                wtilde1: Statistic::of(&column(&|row| row.wtilde1)),
                functionals: (0..functionals)
                    .map(|j| Statistic::of(&column(&|row| row.functionals[j])))
                    .collect(),
            }
        })
        .collect();
    TrajectorySummary {
        replicates: records.len(),
        aborted: records.len() - complete.len(),
        times,
    }
}
