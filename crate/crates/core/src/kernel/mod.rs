//! Deterministic numerics for the isotropic α-stable semigroup.
//!
//! The transition kernel is
//! `p_t(x) = (2π)^{-d} ∫ e^{ix·θ} e^{-t|θ|^α} dθ`, with closed forms for
//! `α = 2` (Gaussian, variance `2t` per axis) and `α = 1` (Cauchy). Every
//! other `α` goes through [`inversion`].

pub mod closed_form;
pub mod expansion;
pub mod inversion;
pub mod params;
pub mod quadrature;
pub mod table;

use std::f64::consts::PI;

pub use expansion::{
    default_expansion_grid, expansion_approx, semigroup_apply, semigroup_at, semigroup_has_closed_form,
    ExpansionResult, ExpansionTerm, GridFunction,
};
pub use inversion::{KernelValue, KERNEL_TOLERANCE};
pub use params::{multiindex_enumerate, GridSpec, MultiIndex, StableParams};
pub use table::{KernelCache, KernelTable};

use crate::error::{domain, Result};
use inversion::Unit;
use quadrature::Tolerance;

/// How kernel values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMethod {
    /// Closed form when `α ∈ {1, 2}`, numerical inversion otherwise.
    #[default]
    Auto,
    /// Always numerical inversion (used to cross-check the closed forms).
    Quadrature,
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return domain(format!("time must be positive and finite, got {t}"));
    }
    Ok(())
}

pub(crate) fn check_point(params: &StableParams, x: &[f64]) -> Result<()> {
    if x.len() != params.dim() {
        return domain(format!("point has {} coordinates, expected {}", x.len(), params.dim()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return domain("point has non-finite coordinates");
    }
    Ok(())
}

/// `p_t(x)`.
pub fn density(params: &StableParams, t: f64, x: &[f64]) -> Result<f64> {
    Ok(density_derivative_with(params, &MultiIndex::zero(params.dim()), t, x, KernelMethod::Auto)?.value)
}

/// `∂^k p_t(x)`.
pub fn density_derivative(params: &StableParams, k: &MultiIndex, t: f64, x: &[f64]) -> Result<f64> {
    Ok(density_derivative_with(params, k, t, x, KernelMethod::Auto)?.value)
}

/// `∂^k p_t(x)` with the evaluation route and accuracy metadata exposed.
pub fn density_derivative_with(
    params: &StableParams,
    k: &MultiIndex,
    t: f64,
    x: &[f64],
    method: KernelMethod,
) -> Result<KernelValue> {
    check_time(t)?;
    check_point(params, x)?;
    k.check_dim(params.dim())?;
    if method == KernelMethod::Auto {
        if let Some(v) = closed_form::derivative(params, k, t, x) {
            return Ok(KernelValue::exact(v));
        }
    }
    Ok(inversion::invert(params, k, t, x, &Unit, Tolerance::default()))
}

/// `ϑ^k_{d,α} = (2π)^{-d} ∫ e^{-|θ|^α} θ^k dθ`.
///
/// Zero whenever some `k_i` is odd. Otherwise, in polar coordinates,
/// `∫_0^∞ e^{-ρ^α} ρ^{|k|+d-1} dρ = Γ((|k|+d)/α)/α` and
/// `∫_{S^{d-1}} u^k dσ = 2 Π Γ((k_i+1)/2) / Γ((|k|+d)/2)`.
pub fn theta_constant(params: &StableParams, k: &MultiIndex) -> Result<f64> {
    k.check_dim(params.dim())?;
    if k.has_odd_entry() {
        return Ok(0.0);
    }
    let d = params.dim() as f64;
    let order = k.order() as f64;
    let alpha = params.alpha();
    let radial = libm::tgamma((order + d) / alpha) / alpha;
    let sphere = 2.0
        * k.entries()
            .iter()
            .map(|&ki| libm::tgamma((ki as f64 + 1.0) / 2.0))
            .product::<f64>()
        / libm::tgamma((order + d) / 2.0);
    Ok((2.0 * PI).powf(-d) * radial * sphere)
}
