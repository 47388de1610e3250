//! Per-record functionals evaluated on every replicate.

use crate::error::{Error, Result};
use crate::kernel::{semigroup_apply, semigroup_at, semigroup_has_closed_form, GridFunction, GridSpec, StableParams};
use crate::measures::TestFunction;
use crate::sim::{run_replicates, KernelFunctional, Observer, SimulationConfig};

/// Points per axis of the table used for `T_s f` without a closed form.
const TABLE_POINTS: [usize; 3] = [2048, 256, 64];
/// Extra table half-width, in units of `s^{1/α}`, beyond the structure of `f`.
const TABLE_REACH: f64 = 40.0;

/// `x ↦ T_s f(x)` as evaluated on particles: the closed form when one
/// exists, a tabulation with cubic interpolation otherwise.
#[derive(Debug, Clone)]
pub struct SmoothedFunction {
    params: StableParams,
    f: TestFunction,
    s: f64,
    table: Option<GridFunction>,
}

impl SmoothedFunction {
    pub fn new(params: &StableParams, f: &TestFunction, s: f64) -> Result<Self> {
        let table = if semigroup_has_closed_form(params, f) {
            None
        } else {
            let points = TABLE_POINTS[params.dim() - 1];
            let reach = f.spread() + 10.0 + TABLE_REACH * s.powf(1.0 / params.alpha());
            let grid = GridSpec::new(std::f64::consts::PI * points as f64 / (2.0 * reach), points)?;
            Some(semigroup_apply(params, f, s, &grid)?)
        };
        Ok(Self {
            params: *params,
            f: f.clone(),
            s,
            table,
        })
    }

    pub fn accuracy_warning(&self) -> bool {
        self.table.as_ref().is_some_and(|t| t.accuracy_warning)
    }

    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        match &self.table {
            Some(table) => table.interpolate(x),
            None => semigroup_at(&self.params, &self.f, self.s, x).ok().map(|v| v.value),
        }
    }
}

/// A functional `g ↦ W_t(g)` read at one record time.
#[derive(Debug, Clone)]
pub enum Probe {
    Function(TestFunction),
    Kernel(KernelFunctional),
    Smoothed(SmoothedFunction),
}

impl Probe {
    /// The value of a constant function, which needs no positions.
    fn constant(&self) -> Option<f64> {
        match self {
            Probe::Function(TestFunction::Constant { value, .. }) => Some(*value),
            _ => None,
        }
    }

    fn eval(&self, x: &[f64]) -> Option<f64> {
        match self {
            Probe::Function(f) => f.try_eval(x),
            Probe::Kernel(k) => k.eval(x),
            Probe::Smoothed(s) => s.eval(x),
        }
    }
}

/// Everything one replicate contributed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `W_t(g)` per record and probe.
    pub values: Vec<Vec<f64>>,
    pub populations: Vec<u64>,
    /// Evaluations that fell off a table and counted as 0.
    pub missed: u64,
}

struct ProbeObserver<'a> {
    probes: &'a [Vec<Probe>],
    scale: f64,
    sums: Vec<f64>,
    sample: Sample,
}

impl Observer for ProbeObserver<'_> {
    fn needs_positions(&self, record: usize) -> bool {
        self.probes[record].iter().any(|p| p.constant().is_none())
    }

    fn visit(&mut self, record: usize, x: &[f64]) {
        for (sum, probe) in self.sums.iter_mut().zip(&self.probes[record]) {
            if probe.constant().is_some() {
                continue;
            }
            match probe.eval(x) {
                Some(v) => *sum += v,
                None => self.sample.missed += 1,
            }
        }
    }

    fn record(&mut self, record: usize, _time: f64, population: u64) {
        let values = self.probes[record]
            .iter()
            .zip(&self.sums)
            .map(|(probe, sum)| match probe.constant() {
                Some(c) => c * population as f64 / self.scale,
                None => sum / self.scale,
            })
            .collect();
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        self.sample.values.push(values);
        self.sample.populations.push(population);
        if let Some(next) = self.probes.get(record + 1) {
            self.sums.resize(next.len(), 0.0);
        }
    }
}

/// Runs the replicates of `config`, reading `probes[j]` at record `j`.
/// A replicate that exceeds the particle cap fails the whole batch.
pub(crate) fn run_probes(config: &SimulationConfig, replicates: usize, probes: &[Vec<Probe>]) -> Result<Vec<Sample>> {
    debug_assert_eq!(probes.len(), config.record_times.len());
    let results = run_replicates(config, replicates, |_| ProbeObserver {
        probes,
        scale: config.scale as f64,
        sums: vec![0.0; probes.first().map_or(0, Vec::len)],
        sample: Sample {
            values: Vec::with_capacity(probes.len()),
            populations: Vec::with_capacity(probes.len()),
            missed: 0,
        },
    });
    results
        .into_iter()
        .enumerate()
        .map(|(i, (observer, outcome))| match outcome.aborted_at {
            Some(record) => Err(Error::Capacity(format!(
                "replicate {i} exceeded max_particles = {} before t = {}",
                config.max_particles, config.record_times[record]
            ))),
            None => Ok(observer.sample),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothed_table_matches_direct_evaluation() {
        let params = StableParams::new(1.5, 1).unwrap();
        let f = TestFunction::standard_gaussian(1);
        let smoothed = SmoothedFunction::new(&params, &f, 1.0).unwrap();
        assert!(smoothed.table.is_some());
        for x in [0.0, 0.4, -2.3, 7.0] {
            let direct = semigroup_at(&params, &f, 1.0, &[x]).unwrap().value;
            assert!((smoothed.eval(&[x]).unwrap() - direct).abs() < 1e-6, "x = {x}");
        }
    }
}
