//! Adaptive Gauss–Kronrod (7/15) integration and Gauss–Legendre rules.
#![allow(clippy::excessive_precision)]

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// `∫ |f|`, used to judge relative accuracy of cancelling integrals.
    pub magnitude: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    /// Relative to `∫|f|`, not `|∫f|`, so oscillatory integrals that cancel
    /// to (nearly) zero still terminate.
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-300,
            rel: 1e-13,
            max_intervals: 4000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    magnitude: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut mag = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron += WGK[j] * (f1 + f2);
        mag += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
        magnitude: mag * half.abs(),
    }
}

/// Globally adaptive integration of `f` over `[a, b]`, starting from
/// `initial_panels` equal panels.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, initial_panels: usize, tol: Tolerance) -> Integral {
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels * 4);
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        heap.push(kronrod(&mut f, lo, hi));
    }
    let totals = |heap: &BinaryHeap<Segment>| {
        heap.iter().fold((0.0, 0.0, 0.0), |(v, e, m), s| {
            (v + s.value, e + s.error, m + s.magnitude)
        })
    };
    let (mut value, mut error, mut magnitude) = totals(&heap);
    let mut converged = false;
    while heap.len() < tol.max_intervals.max(panels) {
        if error <= tol.abs.max(tol.rel * magnitude) {
            converged = true;
            break;
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision
            heap.push(worst);
            break;
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        magnitude += left.magnitude + right.magnitude - worst.magnitude;
        heap.push(left);
        heap.push(right);
    }
    if !converged {
        // refresh running sums to remove accumulated cancellation noise
        let (v, e, m) = totals(&heap);
        value = v;
        error = e;
        magnitude = m;
        converged = error <= tol.abs.max(tol.rel * magnitude);
    }
    Integral {
        value,
        error,
        magnitude,
        converged,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached rule with at least `n` nodes (rounded up to a multiple of 16).
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let size = n.max(16).div_ceil(16) * 16;
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(size)
            .or_insert_with(|| Arc::new(GaussLegendre::new(size)))
            .clone()
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_for_degree_22() {
        let mut f = |x: f64| x.powi(22) + 3.0 * x.powi(7);
        let s = kronrod(&mut f, 0.0, 1.0);
        assert!((s.value - (1.0 / 23.0 + 3.0 / 8.0)).abs() < 1e-15);
        // Gauss part is exact to degree 13
        let mut g = |x: f64| x.powi(13) - x.powi(12);
        let s = kronrod(&mut g, -1.0, 1.0);
        assert!(s.error < 1e-15, "{}", s.error);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1, Tolerance::default());
        assert!(r.converged);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-13);
        let r = integrate(
            |x: f64| (-x).exp() * (3.0 * x).cos(),
            0.0,
            60.0,
            8,
            Tolerance::default(),
        );
        assert!((r.value - 0.1).abs() < 1e-13, "{}", r.value);
    }

    #[test]
    fn gauss_legendre_weights_and_exactness() {
        for n in [5, 16, 33, 128] {
            let gl = GaussLegendre::new(n);
            let sum: f64 = gl.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13);
            let deg = 2 * n - 2;
            let q: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            assert!((q - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
        assert_eq!(GaussLegendre::cached(20).nodes.len(), 32);
    }
}
