//! Closed-form kernels for `α = 2` (Gaussian, variance `2t` per axis) and
//! `α = 1` (multivariate Cauchy).
//!
//! Both are radial, `p_t(x) = g(|x|²)`, so every mixed partial follows from
//!
//! `∂^k g(|x|²) = Σ_{m ≤ k/2} Π_i k_i! / (m_i! (k_i − 2m_i)!) (2x_i)^{k_i − 2m_i} · g^{(|k|−|m|)}(|x|²)`
//!
//! with only the one-dimensional derivatives of `g` depending on the kernel.

use std::f64::consts::PI;

use super::params::{factorial, MultiIndex, StableParams};

/// Profile `g` of a radial kernel, through its derivatives `g^{(j)}(s)`.
trait RadialProfile {
    fn derivative(&self, order: u32, s: f64) -> f64;
}

struct GaussianProfile {
    t: f64,
    dim: usize,
}

impl RadialProfile for GaussianProfile {
    fn derivative(&self, order: u32, s: f64) -> f64 {
        let base = (4.0 * PI * self.t).powf(-(self.dim as f64) / 2.0) * (-s / (4.0 * self.t)).exp();
        base * (-1.0 / (4.0 * self.t)).powi(order as i32)
    }
}

struct CauchyProfile {
    t: f64,
    dim: usize,
}

impl RadialProfile for CauchyProfile {
    fn derivative(&self, order: u32, s: f64) -> f64 {
        let gamma = (self.dim as f64 + 1.0) / 2.0;
        let norm = libm::tgamma(gamma) / PI.powf(gamma);
        let mut falling = 1.0;
        for j in 0..order {
            falling *= -gamma - j as f64;
        }
        norm * self.t * falling * (self.t * self.t + s).powf(-gamma - order as f64)
    }
}

fn radial_derivative(profile: &dyn RadialProfile, k: &MultiIndex, x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum();
    let entries = k.entries();
    let total = k.order();
    let mut m = vec![0u32; entries.len()];
    let mut sum = 0.0;
    loop {
        let mut coef = 1.0;
        let mut m_total = 0;
        for ((&ki, &mi), &xi) in entries.iter().zip(&m).zip(x) {
            let rest = ki - 2 * mi;
            coef *= factorial(ki) / (factorial(mi) * factorial(rest)) * (2.0 * xi).powi(rest as i32);
            m_total += mi;
        }
        sum += coef * profile.derivative(total - m_total, s);
        // odometer over 0 <= m_i <= k_i / 2
        let mut axis = 0;
        loop {
            if axis == m.len() {
                return sum;
            }
            if m[axis] < entries[axis] / 2 {
                m[axis] += 1;
                break;
            }
            m[axis] = 0;
            axis += 1;
        }
    }
}

/// `∂^k p_t(x)` in closed form, or `None` when `α ∉ {1, 2}`.
pub fn derivative(params: &StableParams, k: &MultiIndex, t: f64, x: &[f64]) -> Option<f64> {
    let dim = params.dim();
    if params.is_gaussian() {
        Some(radial_derivative(&GaussianProfile { t, dim }, k, x))
    } else if params.is_cauchy() {
        Some(radial_derivative(&CauchyProfile { t, dim }, k, x))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_values() {
        let p = StableParams::new(2.0, 1).unwrap();
        let d0 = derivative(&p, &MultiIndex::new(vec![0]), 1.0, &[0.0]).unwrap();
        assert!((d0 - 0.282_094_791_773_878_14).abs() < 1e-15);
        let d2 = derivative(&p, &MultiIndex::new(vec![2]), 1.0, &[0.0]).unwrap();
        assert!((d2 + 0.141_047_395_886_939_07).abs() < 1e-15);
        // third derivative of e^{-x²/4}/sqrt(4π) at x: (3x/4 - x³/8) p
        let x = 0.7;
        let d3 = derivative(&p, &MultiIndex::new(vec![3]), 1.0, &[x]).unwrap();
        let p0 = (-x * x / 4.0_f64).exp() / (4.0 * PI).sqrt();
        assert!((d3 - (3.0 * x / 4.0 - x.powi(3) / 8.0) * p0).abs() < 1e-15);
    }

    #[test]
    fn cauchy_values() {
        let p = StableParams::new(1.0, 1).unwrap();
        assert!((derivative(&p, &MultiIndex::new(vec![0]), 1.0, &[0.0]).unwrap() - 1.0 / PI).abs() < 1e-15);
        let t = 2.0;
        let x = 1.5;
        let d1 = derivative(&p, &MultiIndex::new(vec![1]), t, &[x]).unwrap();
        let expect = -2.0 * t * x / (PI * (t * t + x * x).powi(2));
        assert!((d1 - expect).abs() < 1e-15);
        // d=2 Cauchy mixed derivative: ∂1∂2 c t (t²+r²)^{-3/2} = 3c t · 5 x1 x2 (t²+r²)^{-7/2}... via chain rule
        let p2 = StableParams::new(1.0, 2).unwrap();
        let (x1, x2) = (0.3, -0.8);
        let r2: f64 = t * t + x1 * x1 + x2 * x2;
        let c = 1.0 / (2.0 * PI);
        let expect = c * t * 15.0 * x1 * x2 * r2.powf(-3.5);
        let got = derivative(&p2, &MultiIndex::new(vec![1, 1]), t, &[x1, x2]).unwrap();
        assert!((got - expect).abs() < 1e-15, "{got} vs {expect}");
    }

    #[test]
    fn no_closed_form_for_other_alpha() {
        let p = StableParams::new(1.5, 1).unwrap();
        assert!(derivative(&p, &MultiIndex::new(vec![0]), 1.0, &[0.0]).is_none());
    }
}
