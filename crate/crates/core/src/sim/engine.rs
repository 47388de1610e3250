//! Trajectory engines. Both advance the population from one record time to
//! the next and report what they see to an [`Observer`].

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Geometric, Poisson};

use super::config::{Engine, SimulationConfig};
use super::increment::fill_stable_increment;

/// Receives the population at each record time.
///
/// For every record index the engine issues zero or more [`Observer::visit`]
/// calls (one per particle, only if [`Observer::needs_positions`] holds)
/// followed by exactly one [`Observer::record`].
pub trait Observer {
    fn needs_positions(&self, record: usize) -> bool;
    fn visit(&mut self, record: usize, x: &[f64]);
    fn record(&mut self, record: usize, time: f64, population: u64);
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOutcome {
    /// Exact extinction time (event engine) or first record time with an
    /// empty population (tree engine).
    pub extinction_time: Option<f64>,
    /// Set when the particle cap was exceeded; records from this index on
    /// were not produced.
    pub aborted_at: Option<usize>,
}

pub fn run<R: Rng + ?Sized, O: Observer + ?Sized>(
    config: &SimulationConfig,
    rng: &mut R,
    observer: &mut O,
) -> RunOutcome {
    match config.engine {
        Engine::Event => run_event(config, rng, observer),
        Engine::Tree => run_tree(config, rng, observer),
    }
}

fn last_spatial_record<O: Observer + ?Sized>(config: &SimulationConfig, observer: &O) -> Option<usize> {
    (0..config.record_times.len())
        .rev()
        .find(|&i| observer.needs_positions(i))
}

fn initial_positions<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Vec<f64> {
    let count = config.initial_particles() as usize;
    let mut positions = Vec::with_capacity(count * config.params.dim());
    for _ in 0..count {
        positions.extend_from_slice(config.initial.sample(rng));
    }
    positions
}

/// Gillespie simulation of every branching event. Positions are lazy: each
/// particle remembers when it was last placed and is moved by one exact
/// stable increment when it branches or is observed.
fn run_event<R: Rng + ?Sized, O: Observer + ?Sized>(
    config: &SimulationConfig,
    rng: &mut R,
    observer: &mut O,
) -> RunOutcome {
    let dim = config.params.dim();
    let rate_per_particle = config.scale as f64;
    let p2 = config.offspring_probability();
    let last_spatial = last_spatial_record(config, observer);
    let mut tracking = last_spatial.is_some();
    let mut positions = if tracking {
        initial_positions(config, rng)
    } else {
        Vec::new()
    };
    let mut anchors = vec![0.0f64; if tracking { positions.len() / dim } else { 0 }];
    let mut count = config.initial_particles();
    let mut outcome = RunOutcome::default();
    let mut step = [0.0f64; 3];
    let mut t = 0.0;

    for (idx, &record_time) in config.record_times.iter().enumerate() {
        while count > 0 {
            let wait: f64 = Exp1.sample(rng);
            let wait = wait / (rate_per_particle * count as f64);
            if t + wait >= record_time {
                // memoryless clocks: restart from the record time
                break;
            }
            t += wait;
            let i = rng.random_range(0..count) as usize;
            if rng.random::<f64>() < p2 {
                if tracking {
                    let slot = &mut positions[i * dim..(i + 1) * dim];
                    fill_stable_increment(&config.params, t - anchors[i], rng, &mut step[..dim]);
                    for (p, s) in slot.iter_mut().zip(&step[..dim]) {
                        *p += s;
                    }
                    anchors[i] = t;
                    positions.extend_from_within(i * dim..(i + 1) * dim);
                    anchors.push(t);
                }
                count += 1;
                if count > config.max_particles {
                    outcome.aborted_at = Some(idx);
                    return outcome;
                }
            } else {
                if tracking {
                    let last = count as usize - 1;
                    positions.copy_within(last * dim..(last + 1) * dim, i * dim);
                    positions.truncate(last * dim);
                    anchors.swap_remove(i);
                }
                count -= 1;
                if count == 0 {
                    outcome.extinction_time = Some(t);
                }
            }
        }
        t = record_time;
        if tracking && observer.needs_positions(idx) {
            for (i, anchor) in anchors.iter_mut().enumerate() {
                let slot = &mut positions[i * dim..(i + 1) * dim];
                fill_stable_increment(&config.params, record_time - *anchor, rng, &mut step[..dim]);
                for (p, s) in slot.iter_mut().zip(&step[..dim]) {
                    *p += s;
                }
                *anchor = record_time;
                observer.visit(idx, slot);
            }
        }
        observer.record(idx, record_time, count);
        if tracking && Some(idx) == last_spatial {
            tracking = false;
            positions = Vec::new();
            anchors = Vec::new();
        }
    }
    outcome
}

/// Linear birth-death process with birth rate `λ` and death rate `μ`,
/// `r = λ - μ`.
#[derive(Debug, Clone, Copy)]
struct BirthDeath {
    lambda: f64,
    r: f64,
}

impl BirthDeath {
    fn new(config: &SimulationConfig) -> Self {
        let n = config.scale as f64;
        Self {
            lambda: (n + config.beta) / 2.0,
            r: config.beta,
        }
    }

    /// `F(h) = 1 + (λ/r)(e^{rh} - 1)`, so that `P(H > h) = 1/F(h)` for the
    /// node depths of the reconstructed tree and `P(Z_h > 0) = e^{rh}/F(h)`.
    fn f(&self, h: f64) -> f64 {
        if self.r == 0.0 {
            1.0 + self.lambda * h
        } else {
            1.0 + self.lambda / self.r * (self.r * h).exp_m1()
        }
    }

    fn f_inverse(&self, value: f64) -> f64 {
        if self.r == 0.0 {
            (value - 1.0) / self.lambda
        } else {
            (self.r / self.lambda * (value - 1.0)).ln_1p() / self.r
        }
    }

    fn survival(&self, h: f64) -> f64 {
        if self.r == 0.0 {
            1.0 / (1.0 + self.lambda * h)
        } else {
            ((self.r * h).exp() / self.f(h)).min(1.0)
        }
    }
}

const NONE: usize = usize::MAX;

/// Scratch space for drawing one reconstructed tree.
#[derive(Default)]
struct TreeScratch {
    depths: Vec<f64>,
    left: Vec<usize>,
    right: Vec<usize>,
    stack: Vec<usize>,
    walk: Vec<(usize, [f64; 3])>,
}

impl TreeScratch {
    /// Draws the `k - 1` node depths of a reconstructed tree of age `span`
    /// and links them into their max-Cartesian tree. Returns the root.
    fn grow<R: Rng + ?Sized>(&mut self, bd: &BirthDeath, span: f64, k: usize, rng: &mut R) -> usize {
        let tail = 1.0 - 1.0 / bd.f(span);
        self.depths.clear();
        for _ in 0..k - 1 {
            let u = rng.random::<f64>();
            let h = bd.f_inverse(1.0 / (1.0 - u * tail));
            self.depths.push(h.min(span));
        }
        let m = self.depths.len();
        self.left.clear();
        self.left.resize(m, NONE);
        self.right.clear();
        self.right.resize(m, NONE);
        self.stack.clear();
        for j in 0..m {
            let mut last = NONE;
            while let Some(&top) = self.stack.last() {
                if self.depths[top] < self.depths[j] {
                    last = top;
                    self.stack.pop();
                } else {
                    break;
                }
            }
            self.left[j] = last;
            if let Some(&top) = self.stack.last() {
                self.right[top] = j;
            }
            self.stack.push(j);
        }
        self.stack[0]
    }
}

/// Positions at the end of a span of the surviving descendants of one
/// particle, given the tip count `k ≥ 1`.
#[allow(clippy::too_many_arguments)]
fn descend<R: Rng + ?Sized, F: FnMut(&[f64])>(
    config: &SimulationConfig,
    bd: &BirthDeath,
    scratch: &mut TreeScratch,
    start: &[f64],
    span: f64,
    k: usize,
    rng: &mut R,
    mut emit: F,
) {
    let dim = config.params.dim();
    let mut step = [0.0f64; 3];
    let mut origin = [0.0f64; 3];
    origin[..dim].copy_from_slice(start);
    if k == 1 {
        fill_stable_increment(&config.params, span, rng, &mut step[..dim]);
        for (o, s) in origin[..dim].iter_mut().zip(&step[..dim]) {
            *o += s;
        }
        emit(&origin[..dim]);
        return;
    }
    let root = scratch.grow(bd, span, k, rng);
    fill_stable_increment(&config.params, span - scratch.depths[root], rng, &mut step[..dim]);
    for (o, s) in origin[..dim].iter_mut().zip(&step[..dim]) {
        *o += s;
    }
    scratch.walk.clear();
    scratch.walk.push((root, origin));
    while let Some((node, at)) = scratch.walk.pop() {
        let depth = scratch.depths[node];
        for child in [scratch.left[node], scratch.right[node]] {
            let mut x = at;
            let len = if child == NONE {
                depth
            } else {
                depth - scratch.depths[child]
            };
            fill_stable_increment(&config.params, len, rng, &mut step[..dim]);
            for (p, s) in x[..dim].iter_mut().zip(&step[..dim]) {
                *p += s;
            }
            if child == NONE {
                emit(&x[..dim]);
            } else {
                scratch.walk.push((child, x));
            }
        }
    }
}

/// Total population after `span` started from `count` particles, without
/// positions: survivors are binomial and each survivor leaves a geometric
/// number of descendants on `{1, 2, …}`, whose sum is negative binomial.
fn advance_count<R: Rng + ?Sized>(bd: &BirthDeath, count: u64, span: f64, rng: &mut R) -> u64 {
    if count == 0 {
        return 0;
    }
    let survivors = Binomial::new(count, bd.survival(span))
        .expect("valid probability")
        .sample(rng);
    if survivors == 0 {
        return 0;
    }
    let q = 1.0 / bd.f(span);
    if q >= 1.0 {
        return survivors;
    }
    let rate = Gamma::new(survivors as f64, (1.0 - q) / q)
        .expect("valid gamma")
        .sample(rng);
    let extra = if rate > 0.0 {
        Poisson::new(rate).expect("valid poisson").sample(rng) as u64
    } else {
        0
    };
    survivors + extra
}

fn run_tree<R: Rng + ?Sized, O: Observer + ?Sized>(
    config: &SimulationConfig,
    rng: &mut R,
    observer: &mut O,
) -> RunOutcome {
    let dim = config.params.dim();
    let bd = BirthDeath::new(config);
    let last_spatial = last_spatial_record(config, observer);
    let mut positions = if last_spatial.is_some() {
        initial_positions(config, rng)
    } else {
        Vec::new()
    };
    let mut count = config.initial_particles();
    let mut scratch = TreeScratch::default();
    let mut outcome = RunOutcome::default();
    let mut prev = 0.0;

    for (idx, &record_time) in config.record_times.iter().enumerate() {
        let span = record_time - prev;
        prev = record_time;
        let spatial = last_spatial.is_some_and(|last| idx <= last);
        if spatial {
            let keep = last_spatial.is_some_and(|last| idx < last);
            let visit = observer.needs_positions(idx);
            let survival = bd.survival(span);
            let tips_law = Geometric::new(1.0 / bd.f(span)).expect("valid probability");
            let mut next = Vec::new();
            let mut total: u64 = 0;
            for start in positions.chunks_exact(dim) {
                if rng.random::<f64>() >= survival {
                    continue;
                }
                let k = 1 + tips_law.sample(rng);
                total += k;
                if total > config.max_particles {
                    outcome.aborted_at = Some(idx);
                    return outcome;
                }
                descend(config, &bd, &mut scratch, start, span, k as usize, rng, |x| {
                    if keep {
                        next.extend_from_slice(x);
                    }
                    if visit {
                        observer.visit(idx, x);
                    }
                });
            }
            positions = next;
            count = total;
        } else {
            count = advance_count(&bd, count, span, rng);
        }
        if count == 0 && outcome.extinction_time.is_none() {
            outcome.extinction_time = Some(record_time);
        }
        observer.record(idx, record_time, count);
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::StableParams;
    use crate::measures::FiniteMeasure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Collects population and `Σ x²` per record.
    struct Moments {
        spatial: bool,
        pops: Vec<u64>,
        square_sums: Vec<f64>,
    }

    impl Observer for Moments {
        fn needs_positions(&self, _record: usize) -> bool {
            self.spatial
        }
        fn visit(&mut self, record: usize, x: &[f64]) {
            self.square_sums[record] += x[0] * x[0];
        }
        fn record(&mut self, _record: usize, _time: f64, population: u64) {
            self.pops.push(population);
        }
    }

    fn config(engine: Engine) -> SimulationConfig {
        SimulationConfig::new(
            StableParams::new(2.0, 1).unwrap(),
            1.0,
            2,
            FiniteMeasure::dirac(1, 1.0).unwrap(),
            2.0,
        )
        .with_record_times(vec![1.0, 2.0])
        .with_engine(engine)
    }

    fn moments(engine: Engine, spatial: bool, reps: usize) -> (Vec<f64>, Vec<f64>) {
        let cfg = config(engine);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut pop = vec![0.0; 2];
        let mut sq = vec![0.0; 2];
        for _ in 0..reps {
            let mut obs = Moments {
                spatial,
                pops: vec![],
                square_sums: vec![0.0; 2],
            };
            run(&cfg, &mut rng, &mut obs);
            for i in 0..2 {
                pop[i] += obs.pops[i] as f64 / reps as f64;
                sq[i] += obs.square_sums[i] / reps as f64;
            }
        }
        (pop, sq)
    }

    #[test]
    fn engines_agree_with_first_moments() {
        // E Z_t = 2 e^t and E Σ x² = 2 e^t · 2t for Brownian motion with variance 2t
        let reps = 20_000;
        for engine in [Engine::Event, Engine::Tree] {
            let (pop, sq) = moments(engine, true, reps);
            for (i, t) in [1.0f64, 2.0].iter().enumerate() {
                let mean_pop = 2.0 * t.exp();
                assert!((pop[i] / mean_pop - 1.0).abs() < 0.03, "{engine} pop t={t}: {}", pop[i]);
                let mean_sq = mean_pop * 2.0 * t;
                assert!((sq[i] / mean_sq - 1.0).abs() < 0.05, "{engine} sq t={t}: {}", sq[i]);
            }
        }
        let (pop, _) = moments(Engine::Tree, false, reps);
        assert!(
            (pop[1] / (2.0 * 2f64.exp()) - 1.0).abs() < 0.03,
            "count-only: {}",
            pop[1]
        );
    }

    #[test]
    fn birth_death_formulas() {
        let bd = BirthDeath { lambda: 1.5, r: 1.0 };
        // survival r / (λ - μ e^{-rh}) with μ = 0.5
        let h = 0.7;
        assert!((bd.survival(h) - 1.0 / (1.5 - 0.5 * (-h).exp())).abs() < 1e-14);
        assert!((bd.f_inverse(bd.f(h)) - h).abs() < 1e-14);
        let critical = BirthDeath { lambda: 2.0, r: 0.0 };
        assert!((critical.survival(1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cartesian_tree_covers_all_tips() {
        let cfg = config(Engine::Tree);
        let bd = BirthDeath::new(&cfg);
        let mut scratch = TreeScratch::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in [1usize, 2, 3, 17, 200] {
            let mut tips = 0;
            descend(&cfg, &bd, &mut scratch, &[0.0], 1.5, k, &mut rng, |_| tips += 1);
            assert_eq!(tips, k);
        }
    }
}
