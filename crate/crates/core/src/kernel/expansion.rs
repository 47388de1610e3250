//! The semigroup `T_t f = p_t * f` and the truncated long-time expansion
//!
//! `L_t^N f = Σ_{|k|≤N} (-1)^{|k|} λ^k_d(f) ∂^k p_t`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::inversion::{self, KernelValue, Spectrum};
use super::params::{multiindex_enumerate, GridSpec, MultiIndex, StableParams};
use super::quadrature::Tolerance;
use super::{check_point, check_time, density_derivative_with, KernelMethod};
use crate::error::{domain, Result};
use crate::measures::{check_integrability, fourier_transform, moment_functional, TestFunction};

/// Values of a function at the nodes of a [`GridSpec`] tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub dim: usize,
    /// Row-major, last axis fastest (the order of [`GridSpec::nodes`]).
    pub values: Vec<f64>,
    /// Set when some node value carries a quadrature accuracy warning.
    pub accuracy_warning: bool,
}

impl GridFunction {
    pub fn tabulate<F>(grid: GridSpec, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<KernelValue> + Sync,
    {
        let evaluated = grid.nodes(dim).par_iter().map(|x| f(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            dim,
            accuracy_warning: evaluated.iter().any(|v| v.accuracy_warning),
            values: evaluated.into_iter().map(|v| v.value).collect(),
        })
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        self.grid.nodes(self.dim)
    }

    /// `sup_x |self(x) - other(x)|` over the shared grid.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Separable four-point cubic (Lagrange) interpolation; `None` when the
    /// stencil would leave the table.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let dim = self.dim;
        if x.len() != dim {
            return None;
        }
        let grid = &self.grid;
        let n = grid.points_per_axis();
        let h = grid.spacing();
        let mut base = [0usize; 3];
        let mut weights = [[0.0f64; 4]; 3];
        for axis in 0..dim {
            let u = x[axis] / h + (n / 2) as f64;
            if !(u >= 1.0 && u < (n - 2) as f64) {
                return None;
            }
            let i = u.floor();
            let s = u - i;
            base[axis] = i as usize - 1;
            weights[axis] = [
                -s * (s - 1.0) * (s - 2.0) / 6.0,
                (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
                -(s + 1.0) * s * (s - 2.0) / 2.0,
                (s + 1.0) * s * (s - 1.0) / 6.0,
            ];
        }
        let values = &self.values;
        let mut acc = 0.0;
        for stencil in 0..4usize.pow(dim as u32) {
            let mut w = 1.0;
            let mut flat = 0;
            let mut rest = stencil;
            for axis in 0..dim {
                let j = rest % 4;
                rest /= 4;
                w *= weights[axis][j];
                flat = flat * n + base[axis] + j;
            }
            acc += w * values[flat];
        }
        Some(acc)
    }

    /// Riemann sum `Σ values · cell volume`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume(self.dim)
    }
}

struct FourierOf<'a>(&'a TestFunction);

impl Spectrum for FourierOf<'_> {
    fn at(&self, theta: &[f64]) -> Complex64 {
        fourier_transform(self.0, theta).unwrap_or_default()
    }

    fn spread(&self) -> f64 {
        self.0.spread()
    }
}

/// `T_t f(x)`.
///
/// Constants are fixed points, Gaussian bumps and products of them have
/// closed forms when `α = 2`, and snapshots of the same motion satisfy
/// `T_t p_{t0} = p_{t+t0}`. Everything else is inverted numerically from
/// `f̂`.
pub fn semigroup_at(params: &StableParams, f: &TestFunction, t: f64, x: &[f64]) -> Result<KernelValue> {
    check_time(t)?;
    check_point(params, x)?;
    if f.dim() != params.dim() {
        return domain(format!(
            "test function has dimension {}, expected {}",
            f.dim(),
            params.dim()
        ));
    }
    match f {
        TestFunction::Constant { value, .. } => Ok(KernelValue::exact(*value)),
        TestFunction::Monomial(_) => domain(format!("{f} is unbounded; T_t f is not defined here")),
        TestFunction::Mixture(components) => {
            let mut total = KernelValue::exact(0.0);
            for (w, component) in components {
                let v = semigroup_at(params, component, t, x)?;
                total.value += w * v.value;
                total.error_estimate += w.abs() * v.error_estimate;
                total.accuracy_warning |= v.accuracy_warning;
            }
            Ok(total)
        }
        TestFunction::Gaussian(g) if params.is_gaussian() => {
            let spread = 1.0 + 4.0 * g.inverse_width * t;
            let r2: f64 = x.iter().zip(&g.center).map(|(a, c)| (a - c) * (a - c)).sum();
            Ok(KernelValue::exact(
                g.amplitude * spread.powf(-(x.len() as f64) / 2.0) * (-g.inverse_width * r2 / spread).exp(),
            ))
        }
        TestFunction::Product(factors) if params.is_gaussian() => {
            // the heat kernel factorizes over axes
            let axis = StableParams::new(2.0, 1)?;
            let mut total = KernelValue::exact(1.0);
            for (factor, xi) in factors.iter().zip(x) {
                let v = semigroup_at(&axis, factor, t, std::slice::from_ref(xi))?;
                total.error_estimate = total.error_estimate * v.value.abs() + v.error_estimate * total.value.abs();
                total.value *= v.value;
                total.accuracy_warning |= v.accuracy_warning;
            }
            Ok(total)
        }
        TestFunction::KernelSnapshot { params: own, t0 } if own == params => {
            density_derivative_with(params, &MultiIndex::zero(params.dim()), t + t0, x, KernelMethod::Auto)
        }
        _ => Ok(inversion::invert(
            params,
            &MultiIndex::zero(params.dim()),
            t,
            x,
            &FourierOf(f),
            Tolerance::default(),
        )),
    }
}

/// Whether [`semigroup_at`] answers from a closed form rather than a
/// numerical inversion.
pub fn semigroup_has_closed_form(params: &StableParams, f: &TestFunction) -> bool {
    match f {
        TestFunction::Constant { .. } => true,
        TestFunction::Mixture(components) => components.iter().all(|(_, c)| semigroup_has_closed_form(params, c)),
        TestFunction::Gaussian(_) => params.is_gaussian(),
        TestFunction::Product(factors) => {
            params.is_gaussian()
                && factors
                    .iter()
                    .all(|c| matches!(c, TestFunction::Gaussian(_) | TestFunction::Constant { .. }))
        }
        TestFunction::KernelSnapshot { params: own, .. } => {
            own == params && (params.is_gaussian() || params.is_cauchy())
        }
        TestFunction::Tabulated(_) | TestFunction::Monomial(_) => false,
    }
}

/// `T_t f` on the nodes of `grid`.
pub fn semigroup_apply(params: &StableParams, f: &TestFunction, t: f64, grid: &GridSpec) -> Result<GridFunction> {
    check_time(t)?;
    GridFunction::tabulate(*grid, params.dim(), |x| semigroup_at(params, f, t, x))
}

/// One term `(-1)^{|k|} λ^k_d(f) ∂^k p_t` of the expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerm {
    pub index: MultiIndex,
    /// `(-1)^{|k|} λ^k_d(f)`.
    pub coefficient: f64,
    /// `∂^k p_t` on the grid.
    pub kernel: GridFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResult {
    pub order: u32,
    pub t: f64,
    pub per_term: Vec<ExpansionTerm>,
    /// `L_t^N f` on the grid.
    pub approx: GridFunction,
    /// `T_t f` on the grid.
    pub exact: GridFunction,
    /// `t^{(N+d)/α} sup_x |T_t f(x) - L_t^N f(x)|`.
    pub scaled_sup_error: f64,
}

impl ExpansionResult {
    pub fn accuracy_warning(&self) -> bool {
        self.exact.accuracy_warning || self.per_term.iter().any(|term| term.kernel.accuracy_warning)
    }
}

/// Grid used when no explicit one is given: frequency radius four times the
/// `e^{-t L^α} = 1e-12` radius and 128 points per axis.
pub fn default_expansion_grid(params: &StableParams, t: f64) -> Result<GridSpec> {
    let points = match params.dim() {
        1 => 128,
        2 => 64,
        _ => 32,
    };
    GridSpec::for_kernel(params, t, points, 4.0)
}

/// `L_t^N f` together with its scaled distance to `T_t f` on `grid`.
pub fn expansion_approx(
    params: &StableParams,
    f: &TestFunction,
    t: f64,
    order: u32,
    grid: &GridSpec,
) -> Result<ExpansionResult> {
    check_time(t)?;
    if f.dim() != params.dim() {
        return domain(format!(
            "test function has dimension {}, expected {}",
            f.dim(),
            params.dim()
        ));
    }
    check_integrability(f, order).require(order)?;
    let dim = params.dim();
    let mut per_term = Vec::new();
    let mut approx = vec![0.0; grid.points_per_axis().pow(dim as u32)];
    for k in multiindex_enumerate(dim, order) {
        let sign = if k.is_even() { 1.0 } else { -1.0 };
        let coefficient = sign * moment_functional(f, &k)?;
        let kernel = GridFunction::tabulate(*grid, dim, |x| {
            density_derivative_with(params, &k, t, x, KernelMethod::Auto)
        })?;
        for (a, v) in approx.iter_mut().zip(&kernel.values) {
            *a += coefficient * v;
        }
        per_term.push(ExpansionTerm {
            index: k,
            coefficient,
            kernel,
        });
    }
    let approx = GridFunction {
        grid: *grid,
        dim,
        values: approx,
        accuracy_warning: per_term.iter().any(|term| term.kernel.accuracy_warning),
    };
    let exact = semigroup_apply(params, f, t, grid)?;
    let scaled_sup_error = t.powf((order as f64 + dim as f64) / params.alpha()) * exact.sup_distance(&approx);
    Ok(ExpansionResult {
        order,
        t,
        per_term,
        approx,
        exact,
        scaled_sup_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::density;
    use std::f64::consts::PI;

    fn p(alpha: f64, dim: usize) -> StableParams {
        StableParams::new(alpha, dim).unwrap()
    }

    #[test]
    fn gaussian_fast_path_matches_inversion() {
        let params = p(2.0, 1);
        let f = TestFunction::gaussian(vec![0.7], 1.5, 2.0).unwrap();
        for &(t, x) in &[(0.3, 0.1), (2.0, -1.5), (10.0, 4.0)] {
            let fast = semigroup_at(&params, &f, t, &[x]).unwrap().value;
            let slow = inversion::invert(
                &params,
                &MultiIndex::zero(1),
                t,
                &[x],
                &FourierOf(&f),
                Tolerance::default(),
            );
            assert!(
                (fast - slow.value).abs() < 1e-12,
                "t={t} x={x}: {fast} vs {}",
                slow.value
            );
        }
        // T_t e^{-y²}(0) = (1 + 4t)^{-1/2}
        let g = TestFunction::standard_gaussian(1);
        assert!((semigroup_at(&params, &g, 2.0, &[0.0]).unwrap().value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn snapshot_obeys_chapman_kolmogorov() {
        for params in [p(1.5, 1), p(0.8, 2)] {
            let f = TestFunction::snapshot(params, 1.0).unwrap();
            let x = vec![0.4; params.dim()];
            let direct = semigroup_at(&params, &f, 2.0, &x).unwrap().value;
            let through_spectrum = inversion::invert(
                &params,
                &MultiIndex::zero(params.dim()),
                2.0,
                &x,
                &FourierOf(&f),
                Tolerance::default(),
            );
            let target = density(&params, 3.0, &x).unwrap();
            assert_eq!(direct, target);
            assert!((through_spectrum.value - target).abs() < 1e-12 * target.max(1.0));
        }
    }

    #[test]
    fn n0_coefficient_is_total_mass() {
        let params = p(2.0, 1);
        let f = TestFunction::standard_gaussian(1);
        let grid = default_expansion_grid(&params, 5.0).unwrap();
        let r = expansion_approx(&params, &f, 5.0, 1, &grid).unwrap();
        assert_eq!(r.per_term.len(), 2);
        assert!((r.per_term[0].coefficient - PI.sqrt()).abs() < 1e-14);
        assert_eq!(r.per_term[1].coefficient, 0.0);
        let r0 = expansion_approx(&params, &f, 5.0, 0, &grid).unwrap();
        assert_eq!(r0.approx.values, r.approx.values);
    }

    #[test]
    fn expansion_rejects_divergent_moments() {
        let params = p(1.0, 1);
        let f = TestFunction::snapshot(params, 1.0).unwrap();
        let grid = default_expansion_grid(&params, 5.0).unwrap();
        let err = expansion_approx(&params, &f, 5.0, 2, &grid).unwrap_err();
        assert!(matches!(err, crate::Error::Integrability { order: 2, .. }));
        assert!(semigroup_at(&params, &TestFunction::Monomial(MultiIndex::new(vec![2])), 1.0, &[0.0]).is_err());
    }
}
