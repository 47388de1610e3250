//! Gridded kernel tables with separable cubic interpolation, and a shared
//! cache of them.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use super::expansion::GridFunction;
use super::params::{GridSpec, MultiIndex, StableParams};
use super::{check_time, density_derivative_with, KernelMethod};
use crate::error::Result;

/// `∂^k p_t` tabulated on the spatial grid of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    params: StableParams,
    t: f64,
    k: MultiIndex,
    table: GridFunction,
}

impl KernelTable {
    pub fn build(params: &StableParams, k: &MultiIndex, t: f64, grid: &GridSpec) -> Result<Self> {
        check_time(t)?;
        k.check_dim(params.dim())?;
        let table = GridFunction::tabulate(*grid, params.dim(), |x| {
            density_derivative_with(params, k, t, x, KernelMethod::Auto)
        })?;
        Ok(Self {
            params: *params,
            t,
            k: k.clone(),
            table,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.table.values
    }

    pub fn grid(&self) -> &GridSpec {
        &self.table.grid
    }

    pub fn accuracy_warning(&self) -> bool {
        self.table.accuracy_warning
    }

    /// Largest `|x_i|` at which [`Self::interpolate`] still answers.
    pub fn reach(&self) -> f64 {
        let g = self.grid();
        (g.points_per_axis() / 2 - 2) as f64 * g.spacing()
    }

    /// Separable four-point cubic (Lagrange) interpolation; `None` when the
    /// stencil would leave the table.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        self.table.interpolate(x)
    }

    /// CSV with `#` metadata lines, a header and one row per node.
    pub fn to_csv(&self, version: &str) -> String {
        let dim = self.params.dim();
        let grid = self.grid();
        let mut out = String::new();
        let _ = writeln!(out, "# alpha = {}", self.params.alpha());
        let _ = writeln!(out, "# dim = {dim}");
        let _ = writeln!(out, "# t = {}", self.t);
        let _ = writeln!(out, "# k = {}", self.k);
        let _ = writeln!(out, "# grid.half_extent = {}", grid.half_extent());
        let _ = writeln!(out, "# grid.points_per_axis = {}", grid.points_per_axis());
        let _ = writeln!(out, "# version = {version}");
        let header: Vec<String> = (1..=dim).map(|i| format!("x_{i}")).collect();
        let _ = writeln!(out, "{},value", header.join(","));
        for (x, v) in self.table.nodes().iter().zip(&self.table.values) {
            for xi in x {
                let _ = write!(out, "{xi:.12e},");
            }
            let _ = writeln!(out, "{v:.15e}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct TableKey {
    alpha: u64,
    dim: usize,
    t: u64,
    k: MultiIndex,
    half_extent: u64,
    points: usize,
}

impl TableKey {
    fn new(params: &StableParams, k: &MultiIndex, t: f64, grid: &GridSpec) -> Self {
        Self {
            alpha: params.alpha().to_bits(),
            dim: params.dim(),
            t: t.to_bits(),
            k: k.clone(),
            half_extent: grid.half_extent().to_bits(),
            points: grid.points_per_axis(),
        }
    }
}

/// Kernel tables shared across threads. Lookups take a read lock; a missing
/// table is built outside any lock and inserted once, so concurrent
/// builders of the same key agree on the stored table.
#[derive(Debug, Default)]
pub struct KernelCache {
    tables: RwLock<HashMap<TableKey, Arc<KernelTable>>>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(
        &self,
        params: &StableParams,
        k: &MultiIndex,
        t: f64,
        grid: &GridSpec,
    ) -> Result<Arc<KernelTable>> {
        let key = TableKey::new(params, k, t, grid);
        if let Some(table) = self.tables.read().expect("kernel cache poisoned").get(&key) {
            return Ok(table.clone());
        }
        let built = Arc::new(KernelTable::build(params, k, t, grid)?);
        let mut tables = self.tables.write().expect("kernel cache poisoned");
        Ok(tables.entry(key).or_insert(built).clone())
    }

    pub fn len(&self) -> usize {
        self.tables.read().expect("kernel cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::density_derivative;

    #[test]
    fn cubic_interpolation_tracks_closed_form() {
        let params = StableParams::new(2.0, 1).unwrap();
        let k = MultiIndex::new(vec![1]);
        let grid = GridSpec::for_kernel(&params, 1.0, 256, 4.0).unwrap();
        let table = KernelTable::build(&params, &k, 1.0, &grid).unwrap();
        for x in [-3.1, -0.37, 0.0, 0.5, 2.25] {
            let exact = density_derivative(&params, &k, 1.0, &[x]).unwrap();
            let approx = table.interpolate(&[x]).unwrap();
            assert!((approx - exact).abs() < 1e-5, "x={x}: {approx} vs {exact}");
        }
        assert!(table.interpolate(&[table.reach() + 1.0]).is_none());
    }

    #[test]
    fn interpolation_is_exact_at_nodes_in_two_dimensions() {
        let params = StableParams::new(1.0, 2).unwrap();
        let k = MultiIndex::zero(2);
        let grid = GridSpec::new(4.0, 32).unwrap();
        let table = KernelTable::build(&params, &k, 1.0, &grid).unwrap();
        let h = grid.spacing();
        let x = [3.0 * h, -2.0 * h];
        let exact = density_derivative(&params, &k, 1.0, &x).unwrap();
        assert!((table.interpolate(&x).unwrap() - exact).abs() < 1e-15);
    }

    #[test]
    fn cache_returns_the_same_table() {
        let cache = KernelCache::new();
        let params = StableParams::new(2.0, 1).unwrap();
        let grid = GridSpec::new(2.0, 32).unwrap();
        let a = cache.get_or_build(&params, &MultiIndex::zero(1), 1.0, &grid).unwrap();
        let b = cache.get_or_build(&params, &MultiIndex::zero(1), 1.0, &grid).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
        let csv = a.to_csv("test");
        assert!(csv.starts_with("# alpha = 2\n"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 33);
    }
}
