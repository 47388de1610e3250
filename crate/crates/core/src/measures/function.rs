use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::kernel::{self, MultiIndex, StableParams};

use super::tabulation::{Tabulation, Tail};

/// `amplitude · exp(-inverse_width · |x - center|²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBump {
    pub center: Vec<f64>,
    pub inverse_width: f64,
    pub amplitude: f64,
}

/// Test function `f` integrated against the particle measure.
///
/// Gaussian bumps, products and mixtures of whitelisted functions, kernel
/// snapshots and constants form the whitelist accepted by domain-sensitive
/// checks. Tabulated functions and monomials are accepted only as simulation
/// functionals.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Constant {
        dim: usize,
        value: f64,
    },
    Gaussian(GaussianBump),
    /// `Π_i f_i(x_i)` over one-dimensional factors.
    Product(Vec<TestFunction>),
    /// `Σ_j w_j f_j`.
    Mixture(Vec<(f64, TestFunction)>),
    /// `p_{t0}` for the given motion.
    KernelSnapshot {
        params: StableParams,
        t0: f64,
    },
    Tabulated(Tabulation),
    /// `x^k`; unbounded, so only usable pointwise.
    Monomial(MultiIndex),
}

/// Verdict of [`check_integrability`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Integrability {
    Integrable,
    Divergent(String),
    Indeterminate(String),
}

impl Integrability {
    pub fn is_integrable(&self) -> bool {
        matches!(self, Integrability::Integrable)
    }

    /// Converts anything but [`Integrability::Integrable`] into an error.
    pub fn require(self, order: u32) -> Result<()> {
        match self {
            Integrability::Integrable => Ok(()),
            Integrability::Divergent(reason) | Integrability::Indeterminate(reason) => {
                Err(Error::Integrability { order, reason })
            }
        }
    }
}

impl TestFunction {
    pub fn one(dim: usize) -> Self {
        TestFunction::Constant { dim, value: 1.0 }
    }

    pub fn gaussian(center: Vec<f64>, inverse_width: f64, amplitude: f64) -> Result<Self> {
        if center.is_empty() || center.len() > kernel::params::MAX_DIM {
            return domain(format!(
                "gaussian centre must have 1..=3 coordinates, got {}",
                center.len()
            ));
        }
        if !(inverse_width > 0.0 && inverse_width.is_finite()) {
            return domain(format!("inverse_width must be positive, got {inverse_width}"));
        }
        if !amplitude.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return domain("gaussian parameters must be finite");
        }
        Ok(TestFunction::Gaussian(GaussianBump {
            center,
            inverse_width,
            amplitude,
        }))
    }

    /// `e^{-|y|²}` in dimension `dim`.
    pub fn standard_gaussian(dim: usize) -> Self {
        TestFunction::Gaussian(GaussianBump {
            center: vec![0.0; dim],
            inverse_width: 1.0,
            amplitude: 1.0,
        })
    }

    pub fn product(factors: Vec<TestFunction>) -> Result<Self> {
        if factors.is_empty() || factors.len() > kernel::params::MAX_DIM {
            return domain("a product needs between 1 and 3 factors");
        }
        if factors.iter().any(|f| f.dim() != 1) {
            return domain("product factors must be one-dimensional");
        }
        Ok(TestFunction::Product(factors))
    }

    pub fn mixture(components: Vec<(f64, TestFunction)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return domain("a mixture needs at least one component");
        };
        let dim = first.dim();
        if components.iter().any(|(w, f)| f.dim() != dim || !w.is_finite()) {
            return domain("mixture components must share a dimension and have finite weights");
        }
        Ok(TestFunction::Mixture(components))
    }

    pub fn snapshot(params: StableParams, t0: f64) -> Result<Self> {
        kernel::check_time(t0)?;
        Ok(TestFunction::KernelSnapshot { params, t0 })
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Constant { dim, .. } => *dim,
            TestFunction::Gaussian(g) => g.center.len(),
            TestFunction::Product(factors) => factors.len(),
            TestFunction::Mixture(components) => components[0].1.dim(),
            TestFunction::KernelSnapshot { params, .. } => params.dim(),
            TestFunction::Tabulated(table) => table.dim(),
            TestFunction::Monomial(k) => k.dim(),
        }
    }

    /// `f(x)`, or `None` off a tabulation grid (or for a non-finite value).
    pub fn try_eval(&self, x: &[f64]) -> Option<f64> {
        let v = match self {
            TestFunction::Constant { value, .. } => *value,
            TestFunction::Gaussian(g) => {
                let r2: f64 = x.iter().zip(&g.center).map(|(a, c)| (a - c) * (a - c)).sum();
                g.amplitude * (-g.inverse_width * r2).exp()
            }
            TestFunction::Product(factors) => {
                let mut acc = 1.0;
                for (f, xi) in factors.iter().zip(x) {
                    acc *= f.try_eval(std::slice::from_ref(xi))?;
                }
                acc
            }
            TestFunction::Mixture(components) => {
                let mut acc = 0.0;
                for (w, f) in components {
                    acc += w * f.try_eval(x)?;
                }
                acc
            }
            TestFunction::KernelSnapshot { params, t0 } => kernel::density(params, *t0, x).ok()?,
            TestFunction::Tabulated(table) => table.interpolate(x)?,
            TestFunction::Monomial(k) => k.monomial(x),
        };
        v.is_finite().then_some(v)
    }

    /// `f(x)`, with off-grid tabulated values read as 0.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.try_eval(x).unwrap_or(0.0)
    }

    pub fn has_analytic_fourier(&self) -> bool {
        match self {
            TestFunction::Gaussian(_) | TestFunction::KernelSnapshot { .. } => true,
            TestFunction::Product(fs) => fs.iter().all(Self::has_analytic_fourier),
            TestFunction::Mixture(cs) => cs.iter().all(|(_, f)| f.has_analytic_fourier()),
            TestFunction::Constant { .. } | TestFunction::Tabulated(_) | TestFunction::Monomial(_) => false,
        }
    }

    pub fn has_analytic_moments(&self) -> bool {
        match self {
            TestFunction::Gaussian(_) | TestFunction::KernelSnapshot { .. } => true,
            TestFunction::Product(fs) => fs.iter().all(Self::has_analytic_moments),
            TestFunction::Mixture(cs) => cs.iter().all(|(_, f)| f.has_analytic_moments()),
            TestFunction::Constant { .. } | TestFunction::Tabulated(_) | TestFunction::Monomial(_) => false,
        }
    }

    /// Membership in the whitelist of functions known to lie in the weak
    /// domain of the generator.
    pub fn is_whitelisted(&self) -> bool {
        match self {
            TestFunction::Constant { .. } | TestFunction::Gaussian(_) | TestFunction::KernelSnapshot { .. } => true,
            TestFunction::Product(fs) => fs.iter().all(Self::is_whitelisted),
            TestFunction::Mixture(cs) => cs.iter().all(|(_, f)| f.is_whitelisted()),
            TestFunction::Tabulated(_) | TestFunction::Monomial(_) => false,
        }
    }

    /// Largest distance from the origin at which `f` has structure; drives
    /// the angular resolution of Fourier inversions against `f̂`.
    pub fn spread(&self) -> f64 {
        match self {
            TestFunction::Gaussian(g) => g.center.iter().map(|c| c * c).sum::<f64>().sqrt(),
            TestFunction::Product(fs) => fs.iter().map(|f| f.spread().powi(2)).sum::<f64>().sqrt(),
            TestFunction::Mixture(cs) => cs.iter().map(|(_, f)| f.spread()).fold(0.0, f64::max),
            TestFunction::Tabulated(table) => table.max_radius(),
            _ => 0.0,
        }
    }
}

impl fmt::Display for TestFunction {
    /// Renders the specification-string form accepted by [`super::parse_function`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
        match self {
            TestFunction::Constant { value, .. } => write!(f, "constant({value})"),
            TestFunction::Gaussian(g) => write!(
                f,
                "gaussian(amplitude={}, inverse_width={}, center={})",
                g.amplitude,
                g.inverse_width,
                join(&g.center)
            ),
            TestFunction::Product(fs) => {
                write!(f, "product(")?;
                for (i, factor) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{factor}")?;
                }
                write!(f, ")")
            }
            TestFunction::Mixture(cs) => {
                write!(f, "mixture(")?;
                for (i, (w, component)) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{w}*{component}")?;
                }
                write!(f, ")")
            }
            TestFunction::KernelSnapshot { t0, .. } => write!(f, "snapshot(t0={t0})"),
            TestFunction::Tabulated(table) => write!(f, "tabulated({} nodes)", table.len()),
            TestFunction::Monomial(k) => {
                let k: Vec<f64> = k.entries().iter().map(|&v| v as f64).collect();
                write!(f, "monomial(k={})", join(&k))
            }
        }
    }
}

/// `∫ e^{-a(y-c)²} y^j dy`, by expanding `y^j = Σ C(j,l) c^{j-l} (y-c)^l`.
fn gaussian_moment_1d(center: f64, a: f64, j: u32) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    for l in 0..=j {
        if l > 0 {
            binom *= (j - l + 1) as f64 / l as f64;
        }
        if l % 2 == 0 {
            let central = libm::tgamma((l as f64 + 1.0) / 2.0) / a.powf((l as f64 + 1.0) / 2.0);
            sum += binom * center.powi((j - l) as i32) * central;
        }
    }
    sum
}

/// The Gaussian `p_{t0}` for `α = 2`.
fn gaussian_snapshot(dim: usize, t0: f64) -> GaussianBump {
    GaussianBump {
        center: vec![0.0; dim],
        inverse_width: 1.0 / (4.0 * t0),
        amplitude: (4.0 * PI * t0).powf(-(dim as f64) / 2.0),
    }
}

fn check_dim(f: &TestFunction, dim: usize) -> Result<()> {
    if f.dim() != dim {
        return domain(format!("test function has dimension {}, expected {dim}", f.dim()));
    }
    Ok(())
}

/// `λ^k_d(f) = (1/k!) ∫ f(y) y^k dy`.
pub fn moment_functional(f: &TestFunction, k: &MultiIndex) -> Result<f64> {
    check_dim(f, k.dim())?;
    let order = k.order();
    match f {
        TestFunction::Gaussian(g) => {
            let raw: f64 = g
                .center
                .iter()
                .zip(k.entries())
                .map(|(&c, &kj)| gaussian_moment_1d(c, g.inverse_width, kj))
                .product();
            Ok(g.amplitude * raw / k.factorial())
        }
        TestFunction::Product(fs) => fs
            .iter()
            .zip(k.entries())
            .map(|(factor, &kj)| moment_functional(factor, &MultiIndex::new(vec![kj])))
            .product(),
        TestFunction::Mixture(cs) => cs
            .iter()
            .map(|(w, component)| Ok(w * moment_functional(component, k)?))
            .sum(),
        TestFunction::KernelSnapshot { params, t0 } => {
            if params.is_gaussian() {
                return moment_functional(&TestFunction::Gaussian(gaussian_snapshot(params.dim(), *t0)), k);
            }
            if order as f64 >= params.alpha() {
                return domain(format!(
                    "moment of order {order} of p_t diverges for alpha = {}",
                    params.alpha()
                ));
            }
            Ok(if order == 0 { 1.0 } else { 0.0 })
        }
        TestFunction::Tabulated(table) => Ok(table.trapezoid(|y| k.monomial(y)) / k.factorial()),
        TestFunction::Constant { value, .. } if *value == 0.0 => Ok(0.0),
        TestFunction::Constant { .. } | TestFunction::Monomial(_) => {
            domain(format!("moment of order {order} diverges for {f}"))
        }
    }
}

fn first_failure(mut verdicts: impl Iterator<Item = Integrability>) -> Integrability {
    verdicts
        .find(|v| !v.is_integrable())
        .unwrap_or(Integrability::Integrable)
}

/// Decides whether `∫|f(y)||y|^N dy < ∞` from the tail class of each kind.
pub fn check_integrability(f: &TestFunction, order: u32) -> Integrability {
    match f {
        TestFunction::Gaussian(_) => Integrability::Integrable,
        // |y|^N <= d^N Σ |y_i|^N, so every factor needs order N.
        TestFunction::Product(fs) => first_failure(fs.iter().map(|factor| check_integrability(factor, order))),
        TestFunction::Mixture(cs) => first_failure(
            cs.iter()
                .filter(|(w, _)| *w != 0.0)
                .map(|(_, component)| check_integrability(component, order)),
        ),
        TestFunction::KernelSnapshot { params, .. } => {
            // p_t(x) ~ |x|^{-d-α}: the integrand decays like |x|^{N-α-1} radially.
            if params.is_gaussian() || (order as f64) < params.alpha() {
                Integrability::Integrable
            } else {
                Integrability::Divergent(format!(
                    "p_t has tail |x|^(-d-{}) so the moment of order {order} diverges",
                    params.alpha()
                ))
            }
        }
        TestFunction::Tabulated(table) => match table.tail() {
            Tail::CompactSupport => Integrability::Integrable,
            Tail::Unknown => Integrability::Indeterminate("tabulated function with unknown tail".into()),
        },
        TestFunction::Constant { value, .. } if *value == 0.0 => Integrability::Integrable,
        TestFunction::Constant { .. } => Integrability::Divergent("a non-zero constant is not integrable".into()),
        TestFunction::Monomial(_) => Integrability::Divergent("monomials are not integrable".into()),
    }
}

/// `f̂(θ) = ∫ e^{-iθ·x} f(x) dx`.
pub fn fourier_transform(f: &TestFunction, theta: &[f64]) -> Result<Complex64> {
    check_dim(f, theta.len())?;
    match f {
        TestFunction::Gaussian(g) => {
            let a = g.inverse_width;
            let d = theta.len() as f64;
            let t2: f64 = theta.iter().map(|v| v * v).sum();
            let shift: f64 = theta.iter().zip(&g.center).map(|(t, c)| t * c).sum();
            let modulus = g.amplitude * (PI / a).powf(d / 2.0) * (-t2 / (4.0 * a)).exp();
            Ok(Complex64::from_polar(modulus, -shift))
        }
        TestFunction::Product(fs) => fs
            .iter()
            .zip(theta)
            .try_fold(Complex64::new(1.0, 0.0), |acc, (factor, t)| {
                Ok(acc * fourier_transform(factor, std::slice::from_ref(t))?)
            }),
        TestFunction::Mixture(cs) => cs.iter().try_fold(Complex64::new(0.0, 0.0), |acc, (w, component)| {
            Ok(acc + w * fourier_transform(component, theta)?)
        }),
        TestFunction::KernelSnapshot { params, t0 } => {
            let r: f64 = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(Complex64::new((-t0 * r.powf(params.alpha())).exp(), 0.0))
        }
        TestFunction::Tabulated(table) => Ok(table.fourier(theta)),
        TestFunction::Constant { .. } | TestFunction::Monomial(_) => {
            domain(format!("{f} has no Fourier transform as an integrable function"))
        }
    }
}

/// `winf · Σ_{|k|≤N, |k| even} (-1)^{|k|/2} t^{-(d+|k|)/α} ϑ^k_{d,α} λ^k_d(f)`.
pub fn theorem_prediction(f: &TestFunction, params: &StableParams, t: f64, order: u32, winf: f64) -> Result<f64> {
    Ok(winf * theorem_terms(f, params, t, order)?.iter().map(|(_, v)| v).sum::<f64>())
}

/// Per-multi-index terms of [`theorem_prediction`] with `winf = 1`.
pub fn theorem_terms(f: &TestFunction, params: &StableParams, t: f64, order: u32) -> Result<Vec<(MultiIndex, f64)>> {
    kernel::check_time(t)?;
    check_dim(f, params.dim())?;
    check_integrability(f, order).require(order)?;
    let mut terms = Vec::new();
    for k in kernel::multiindex_enumerate(params.dim(), order) {
        if k.order() % 2 == 1 {
            continue;
        }
        let sign = if (k.order() / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let theta = kernel::theta_constant(params, &k)?;
        let value = if theta == 0.0 {
            0.0
        } else {
            sign * params.scale_factor(t, k.order()) * theta * moment_functional(f, &k)?
        };
        terms.push((k, value));
    }
    Ok(terms)
}
