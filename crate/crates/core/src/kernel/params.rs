use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest spatial dimension supported by the gridded numerics.
pub const MAX_DIM: usize = 3;

/// Stability index and spatial dimension of the isotropic α-stable motion
/// with generator `-(-Δ)^{α/2}` on `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    dim: usize,
}

impl StableParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return domain(format!("alpha must lie in (0, 2], got {alpha}"));
        }
        if dim == 0 || dim > MAX_DIM {
            return domain(format!("dimension must lie in 1..={MAX_DIM}, got {dim}"));
        }
        Ok(Self { alpha, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Brownian case: `p_t` is Gaussian with variance `2t` per axis.
    pub fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }

    /// `α = 1`: `p_t` is the multivariate Cauchy density.
    pub fn is_cauchy(&self) -> bool {
        self.alpha == 1.0
    }

    /// `t^{-(d+|k|)/α}`, the factor relating `∂^k p_t` to `∂^k p_1`.
    pub fn scale_factor(&self, t: f64, order: u32) -> f64 {
        t.powf(-(self.dim as f64 + order as f64) / self.alpha)
    }
}

/// Multi-index `k = (k_1, …, k_d)` for derivatives `∂^k` and monomials `y^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k|`
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `k! = Π k_i!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    pub fn is_even(&self) -> bool {
        self.order().is_multiple_of(2)
    }

    /// True when some entry is odd, which makes every symmetric integral of
    /// `θ^k` vanish.
    pub fn has_odd_entry(&self) -> bool {
        self.0.iter().any(|k| k % 2 == 1)
    }

    /// `x^k`
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product()
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return domain(format!("multi-index {self} has {} entries, expected {dim}", self.dim()));
        }
        Ok(())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// All multi-indices of dimension `dim` with `|k| <= max_order`, graded by
/// `|k|` and lexicographically descending within each grade, so that
/// `(1,0)` precedes `(0,1)`.
pub fn multiindex_enumerate(dim: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for order in 0..=max_order {
        let mut current = vec![0u32; dim];
        compositions(order, 0, &mut current, &mut out);
    }
    out
}

fn compositions(remaining: u32, axis: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    let dim = current.len();
    if axis + 1 == dim {
        current[axis] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[axis] = k;
        compositions(remaining - k, axis + 1, current, out);
    }
    current[axis] = 0;
}

/// Frequency truncation radius and resolution of a tensor grid. The spatial
/// grid is the dual one: spacing `π / half_extent`, `points_per_axis` nodes
/// per axis centred on the origin (the origin is a node).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_extent: f64,
    points_per_axis: usize,
}

/// `e^{-t L^α}` at the frequency truncation radius chosen by [`GridSpec::for_kernel`].
pub const FREQUENCY_CUTOFF: f64 = 1e-12;

impl GridSpec {
    pub fn new(half_extent: f64, points_per_axis: usize) -> Result<Self> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return domain(format!("grid half_extent must be positive, got {half_extent}"));
        }
        if points_per_axis < 16 || !points_per_axis.is_multiple_of(2) {
            return domain(format!(
                "points_per_axis must be even and at least 16, got {points_per_axis}"
            ));
        }
        Ok(Self {
            half_extent,
            points_per_axis,
        })
    }

    /// Grid whose frequency radius satisfies `e^{-t L^α} = 1e-12`, refined
    /// spatially by `refine` (the frequency radius is multiplied by it).
    pub fn for_kernel(params: &StableParams, t: f64, points_per_axis: usize, refine: f64) -> Result<Self> {
        if !(t > 0.0) {
            return domain(format!("t must be positive, got {t}"));
        }
        let radius = (-FREQUENCY_CUTOFF.ln() / t).powf(1.0 / params.alpha());
        Self::new(radius * refine.max(1.0), points_per_axis)
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_extent
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        let half = (self.points_per_axis / 2) as f64;
        (0..self.points_per_axis).map(|j| (j as f64 - half) * h).collect()
    }

    /// Tensor-product nodes in row-major order (last axis fastest).
    pub fn nodes(&self, dim: usize) -> Vec<Vec<f64>> {
        let axis = self.axis();
        let n = axis.len();
        let total = n.pow(dim as u32);
        (0..total)
            .map(|mut flat| {
                let mut x = vec![0.0; dim];
                for slot in x.iter_mut().rev() {
                    *slot = axis[flat % n];
                    flat /= n;
                }
                x
            })
            .collect()
    }

    pub fn cell_volume(&self, dim: usize) -> f64 {
        self.spacing().powi(dim as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerate_small_cases() {
        let one = multiindex_enumerate(1, 2);
        assert_eq!(
            one,
            vec![
                MultiIndex::new(vec![0]),
                MultiIndex::new(vec![1]),
                MultiIndex::new(vec![2])
            ]
        );
        let two = multiindex_enumerate(2, 1);
        assert_eq!(
            two,
            vec![
                MultiIndex::new(vec![0, 0]),
                MultiIndex::new(vec![1, 0]),
                MultiIndex::new(vec![0, 1])
            ]
        );
        assert_eq!(multiindex_enumerate(2, 2).len(), 6);
    }

    #[test]
    fn enumerate_counts_match_stars_and_bars() {
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
        }
        for dim in 1..=3usize {
            for n in 0..=6u32 {
                let list = multiindex_enumerate(dim, n);
                assert_eq!(list.len() as u64, binom(dim as u64 + n as u64, dim as u64));
                assert!(list.windows(2).all(|w| w[0].order() <= w[1].order()));
            }
        }
    }

    #[test]
    fn multiindex_arithmetic() {
        let k = MultiIndex::new(vec![2, 3]);
        assert_eq!(k.order(), 5);
        assert_eq!(k.factorial(), 12.0);
        assert!(!k.is_even());
        assert!(k.has_odd_entry());
        assert_eq!(k.monomial(&[2.0, -1.0]), -4.0);
        assert_eq!(k.to_string(), "(2,3)");
    }

    #[test]
    fn params_validation() {
        assert!(StableParams::new(0.0, 1).is_err());
        assert!(StableParams::new(2.1, 1).is_err());
        assert!(StableParams::new(1.5, 0).is_err());
        assert!(StableParams::new(1.5, 4).is_err());
        assert!(StableParams::new(2.0, 3).unwrap().is_gaussian());
    }

    #[test]
    fn grid_validation_and_duality() {
        assert!(GridSpec::new(1.0, 15).is_err());
        assert!(GridSpec::new(1.0, 18).is_ok());
        assert!(GridSpec::new(-1.0, 32).is_err());
        let g = GridSpec::new(std::f64::consts::PI, 16).unwrap();
        assert_eq!(g.spacing(), 1.0);
        let axis = g.axis();
        assert_eq!(axis[8], 0.0);
        assert_eq!(axis[0], -8.0);
        assert_eq!(g.nodes(2).len(), 256);
        let p = StableParams::new(2.0, 1).unwrap();
        let k = GridSpec::for_kernel(&p, 1.0, 32, 1.0).unwrap();
        assert!((-(k.half_extent().powi(2))).exp() <= 1.0001e-12);
    }
}
