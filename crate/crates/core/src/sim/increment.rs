//! Exact increments of the isotropic α-stable motion.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::kernel::StableParams;

/// Positive `γ`-stable variable `S` with `E e^{-uS} = e^{-u^γ}`, `0 < γ < 1`
/// (Kanter's representation).
pub fn sample_positive_stable<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> f64 {
    let u = PI * rng.random::<f64>();
    let w: f64 = Exp1.sample(rng);
    let a = (gamma * u).sin() * ((1.0 - gamma) * u).sin().powf((1.0 - gamma) / gamma) / u.sin().powf(1.0 / gamma);
    a * w.powf(-(1.0 - gamma) / gamma)
}

/// Writes into `out` an increment over a span `dt`, i.e. a sample with
/// characteristic function `e^{-dt|θ|^α}`.
///
/// `α = 2` is Gaussian with variance `2 dt` per axis; otherwise
/// `√(2S)·Z` with `S` positive `α/2`-stable at scale `dt^{2/α}` and `Z`
/// standard normal.
pub fn fill_stable_increment<R: Rng + ?Sized>(params: &StableParams, dt: f64, rng: &mut R, out: &mut [f64]) {
    let sd = if params.is_gaussian() {
        (2.0 * dt).sqrt()
    } else {
        let gamma = params.alpha() / 2.0;
        (2.0 * dt.powf(1.0 / gamma) * sample_positive_stable(gamma, rng)).sqrt()
    };
    for slot in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *slot = sd * z;
    }
}

/// Increment over a span `dt` as a fresh vector.
pub fn sample_stable_increment<R: Rng + ?Sized>(params: &StableParams, dt: f64, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; params.dim()];
    fill_stable_increment(params, dt, rng, &mut out);
    out
}
