use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::kernel::{closed_form, GridSpec, KernelCache, KernelTable, MultiIndex, StableParams};
use crate::measures::TestFunction;

use super::engine::Observer;

/// Empirical measure `W_t = (1/n) Σ_i δ_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub time: f64,
    scale: u64,
    dim: usize,
    /// Flattened positions, `dim` coordinates per particle.
    positions: Vec<f64>,
}

impl ParticleState {
    pub fn new(time: f64, scale: u64, dim: usize, positions: Vec<f64>) -> Result<Self> {
        if scale == 0 || dim == 0 {
            return domain("scale and dimension must be positive");
        }
        if !positions.len().is_multiple_of(dim) {
            return domain("position buffer is not a whole number of points");
        }
        Ok(Self {
            time,
            scale,
            dim,
            positions,
        })
    }

    pub fn empty(time: f64, scale: u64, dim: usize) -> Self {
        Self {
            time,
            scale,
            dim,
            positions: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn population(&self) -> usize {
        self.positions.len() / self.dim
    }

    /// `1/n`
    pub fn mass(&self) -> f64 {
        1.0 / self.scale as f64
    }

    /// `W_t(1)`
    pub fn total_mass(&self) -> f64 {
        self.population() as f64 / self.scale as f64
    }

    pub fn positions(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim)
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.positions.extend_from_slice(x);
    }
}

/// `W_t(f) = Σ_i mass · f(x_i)`. Off-grid tabulated values count as 0.
pub fn evaluate_functional(state: &ParticleState, f: &TestFunction) -> f64 {
    evaluate_functional_counted(state, f).0
}

/// [`evaluate_functional`] plus the number of particles that fell off a
/// tabulation grid.
pub fn evaluate_functional_counted(state: &ParticleState, f: &TestFunction) -> (f64, u64) {
    let mut sum = 0.0;
    let mut missed = 0;
    for x in state.positions() {
        match f.try_eval(x) {
            Some(v) => sum += v,
            None => missed += 1,
        }
    }
    (sum / state.scale as f64, missed)
}

/// `W_t(e_θ) = Σ_i mass · e^{iθ·x_i}`.
pub fn empirical_characteristic(state: &ParticleState, theta: &[f64]) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for x in state.positions() {
        let phase: f64 = theta.iter().zip(x).map(|(t, xi)| t * xi).sum();
        sum += Complex64::from_polar(1.0, phase);
    }
    sum / state.scale as f64
}

/// Points per axis of the interpolation table used when `∂^k p_s` has no
/// closed form.
const TABLE_POINTS: [usize; 3] = [4096, 512, 96];
/// Table half-width in units of `s^{1/α}`.
const TABLE_REACH: f64 = 40.0;

/// `x ↦ ∂^k p_s(x)` as evaluated on particles: the closed form for
/// `α ∈ {1, 2}`, a cached table with cubic interpolation otherwise.
#[derive(Debug, Clone)]
pub struct KernelFunctional {
    params: StableParams,
    k: MultiIndex,
    s: f64,
    table: Option<Arc<KernelTable>>,
}

impl KernelFunctional {
    pub fn new(params: &StableParams, k: &MultiIndex, s: f64, cache: &KernelCache) -> Result<Self> {
        crate::kernel::check_time(s)?;
        k.check_dim(params.dim())?;
        let table = if closed_form::derivative(params, k, s, &vec![0.0; params.dim()]).is_some() {
            None
        } else {
            let points = TABLE_POINTS[params.dim() - 1];
            let spacing = 2.0 * TABLE_REACH * s.powf(1.0 / params.alpha()) / points as f64;
            let grid = GridSpec::new(std::f64::consts::PI / spacing, points)?;
            Some(cache.get_or_build(params, k, s, &grid)?)
        };
        Ok(Self {
            params: *params,
            k: k.clone(),
            s,
            table,
        })
    }

    /// `∂^k p_s(x)`, or `None` outside the table.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        match &self.table {
            Some(table) => table.interpolate(x),
            None => closed_form::derivative(&self.params, &self.k, self.s, x),
        }
    }
}

/// `W_t(∂^k p_s)` and the number of particles outside the kernel table
/// (whose contribution is taken as 0).
pub fn evaluate_kernel_functional(state: &ParticleState, kernel: &KernelFunctional) -> (f64, u64) {
    let mut sum = 0.0;
    let mut outside = 0;
    for x in state.positions() {
        match kernel.eval(x) {
            Some(v) => sum += v,
            None => outside += 1,
        }
    }
    (sum / state.scale as f64, outside)
}

/// Observer that keeps full [`ParticleState`] snapshots at every record.
#[derive(Debug, Clone)]
pub struct StateCollector {
    pub states: Vec<ParticleState>,
    pub populations: Vec<u64>,
    scale: u64,
    dim: usize,
}

impl StateCollector {
    pub fn new(records: usize, scale: u64, dim: usize) -> Self {
        Self {
            states: (0..records).map(|_| ParticleState::empty(0.0, scale, dim)).collect(),
            populations: Vec::with_capacity(records),
            scale,
            dim,
        }
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Observer for StateCollector {
    fn needs_positions(&self, _record: usize) -> bool {
        true
    }

    fn visit(&mut self, record: usize, x: &[f64]) {
        self.states[record].push(x);
    }

    fn record(&mut self, record: usize, time: f64, population: u64) {
        self.states[record].time = time;
        self.populations.push(population);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(points: &[f64], scale: u64) -> ParticleState {
        ParticleState::new(1.0, scale, 1, points.to_vec()).unwrap()
    }

    #[test]
    fn functional_examples() {
        let s = state(&[-1.0, 1.0], 2);
        assert_eq!(evaluate_functional(&s, &TestFunction::one(1)), 1.0);
        let square = TestFunction::Monomial(MultiIndex::new(vec![2]));
        assert_eq!(evaluate_functional(&s, &square), 1.0);
        assert_eq!(evaluate_functional(&ParticleState::empty(0.0, 3, 1), &square), 0.0);
        let z = empirical_characteristic(&s, &[0.7]);
        assert!(z.im.abs() < 1e-16);
        assert_eq!(
            empirical_characteristic(&state(&[0.0, 0.0, 0.0], 3), &[2.0]),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn kernel_functional_examples() {
        let cache = KernelCache::new();
        let params = StableParams::new(2.0, 1).unwrap();
        let origin = state(&[0.0], 1);
        let k2 = KernelFunctional::new(&params, &MultiIndex::new(vec![2]), 1.0, &cache).unwrap();
        let (v, outside) = evaluate_kernel_functional(&origin, &k2);
        assert!((v + 0.141_047_4).abs() < 1e-7);
        assert_eq!(outside, 0);
        let k1 = KernelFunctional::new(&params, &MultiIndex::new(vec![1]), 2.0, &cache).unwrap();
        let (odd, _) = evaluate_kernel_functional(&state(&[-0.3, 0.3, -2.0, 2.0], 4), &k1);
        assert!(odd.abs() < 1e-17);
        assert!(cache.is_empty());
    }

    #[test]
    fn tabulated_kernel_functional_counts_far_particles() {
        let cache = KernelCache::new();
        let params = StableParams::new(1.5, 1).unwrap();
        let k0 = KernelFunctional::new(&params, &MultiIndex::new(vec![0]), 1.0, &cache).unwrap();
        assert_eq!(cache.len(), 1);
        let exact = crate::kernel::density(&params, 1.0, &[0.37]).unwrap();
        assert!((k0.eval(&[0.37]).unwrap() - exact).abs() < 1e-6);
        let (_, outside) = evaluate_kernel_functional(&state(&[0.0, 1e4], 1), &k0);
        assert_eq!(outside, 1);
    }
}
