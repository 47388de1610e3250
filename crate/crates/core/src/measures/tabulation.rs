use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// What is known about a tabulated function beyond its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// The function vanishes outside the grid.
    CompactSupport,
    Unknown,
}

/// Values of a function on a regular tensor grid, multilinear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulation {
    origin: Vec<f64>,
    step: Vec<f64>,
    shape: Vec<usize>,
    /// Row-major, last axis fastest.
    values: Vec<f64>,
    tail: Tail,
}

impl Tabulation {
    pub fn new(origin: Vec<f64>, step: Vec<f64>, shape: Vec<usize>, values: Vec<f64>, tail: Tail) -> Result<Self> {
        let dim = origin.len();
        if dim == 0 || step.len() != dim || shape.len() != dim {
            return domain("tabulation origin, step and shape must share a non-zero dimension");
        }
        if shape.iter().any(|&n| n < 2) {
            return domain("each tabulation axis needs at least two nodes");
        }
        if step.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return domain("tabulation steps must be positive");
        }
        if values.len() != shape.iter().product::<usize>() {
            return domain("tabulation value count does not match its shape");
        }
        Ok(Self {
            origin,
            step,
            shape,
            values,
            tail,
        })
    }

    /// Parses CSV rows `x_1,…,x_d,value` on a regular grid, in any row order.
    /// Lines starting with `#` and a non-numeric header row are skipped.
    pub fn from_csv(text: &str, tail: Tail) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if rows.is_empty() => continue,
                Err(_) => return Err(Error::Config(format!("tabulation line {}: not numeric", lineno + 1))),
            }
        }
        let width = rows.first().map_or(0, Vec::len);
        if width < 2 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Config("tabulation rows must all read x_1,…,x_d,value".into()));
        }
        let dim = width - 1;
        let mut origin = Vec::with_capacity(dim);
        let mut step = Vec::with_capacity(dim);
        let mut shape = Vec::with_capacity(dim);
        for axis in 0..dim {
            let mut coords: Vec<f64> = rows.iter().map(|r| r[axis]).collect();
            coords.sort_by(f64::total_cmp);
            coords.dedup();
            if coords.len() < 2 {
                return Err(Error::Config(format!("tabulation axis {} has a single node", axis + 1)));
            }
            let h = (coords[coords.len() - 1] - coords[0]) / (coords.len() - 1) as f64;
            let regular = coords
                .iter()
                .enumerate()
                .all(|(j, &c)| (c - (coords[0] + j as f64 * h)).abs() <= 1e-9 * h.max(c.abs()));
            if !regular {
                return Err(Error::Config(format!(
                    "tabulation axis {} is not regularly spaced",
                    axis + 1
                )));
            }
            origin.push(coords[0]);
            step.push(h);
            shape.push(coords.len());
        }
        let total: usize = shape.iter().product();
        if total != rows.len() {
            return Err(Error::Config(format!(
                "tabulation has {} rows but its axes span {total} nodes",
                rows.len()
            )));
        }
        let mut values = vec![f64::NAN; total];
        for row in &rows {
            let mut flat = 0;
            for axis in 0..dim {
                let j = ((row[axis] - origin[axis]) / step[axis]).round() as usize;
                flat = flat * shape[axis] + j;
            }
            values[flat] = row[dim];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Config("tabulation has duplicate grid nodes".into()));
        }
        Self::new(origin, step, shape, values, tail)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    fn node(&self, mut flat: usize, x: &mut [f64]) {
        for axis in (0..self.dim()).rev() {
            let j = flat % self.shape[axis];
            flat /= self.shape[axis];
            x[axis] = self.origin[axis] + j as f64 * self.step[axis];
        }
    }

    /// Trapezoid weight of a node (product of 1/2 factors at axis ends).
    fn weight(&self, mut flat: usize) -> f64 {
        let mut w = 1.0;
        for axis in (0..self.dim()).rev() {
            let j = flat % self.shape[axis];
            flat /= self.shape[axis];
            if j == 0 || j + 1 == self.shape[axis] {
                w *= 0.5;
            }
        }
        w
    }

    /// Multilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let dim = self.dim();
        if x.len() != dim {
            return None;
        }
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..dim {
            let u = (x[axis] - self.origin[axis]) / self.step[axis];
            let last = (self.shape[axis] - 1) as f64;
            if !(u >= -1e-12 && u <= last + 1e-12) {
                return None;
            }
            let i = (u.floor().max(0.0) as usize).min(self.shape[axis] - 2);
            base[axis] = i;
            frac[axis] = (u - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut flat = 0;
            for axis in 0..dim {
                let up = (corner >> axis) & 1;
                w *= if up == 1 { frac[axis] } else { 1.0 - frac[axis] };
                flat = flat * self.shape[axis] + base[axis] + up;
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        Some(acc)
    }

    /// Trapezoid rule for `∫ f(y) g(y) dy` on the native grid.
    pub fn trapezoid<G: FnMut(&[f64]) -> f64>(&self, mut g: G) -> f64 {
        let mut x = vec![0.0; self.dim()];
        let cell: f64 = self.step.iter().product();
        let mut acc = 0.0;
        for (flat, &v) in self.values.iter().enumerate() {
            self.node(flat, &mut x);
            acc += self.weight(flat) * v * g(&x);
        }
        acc * cell
    }

    /// Trapezoid discretization of `∫ e^{-iθ·x} f(x) dx`.
    pub fn fourier(&self, theta: &[f64]) -> Complex64 {
        let mut x = vec![0.0; self.dim()];
        let cell: f64 = self.step.iter().product();
        let mut acc = Complex64::new(0.0, 0.0);
        for (flat, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            self.node(flat, &mut x);
            let phase: f64 = theta.iter().zip(&x).map(|(t, xi)| t * xi).sum();
            acc += self.weight(flat) * v * Complex64::from_polar(1.0, -phase);
        }
        acc * cell
    }

    /// Largest distance from the origin of a grid corner.
    pub fn max_radius(&self) -> f64 {
        (0..self.dim())
            .map(|axis| {
                let lo = self.origin[axis];
                let hi = lo + (self.shape[axis] - 1) as f64 * self.step[axis];
                lo.abs().max(hi.abs()).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator(points: usize) -> Tabulation {
        let h = 1.0 / (points - 1) as f64;
        let mut csv = String::from("# indicator of [0,1]\nx_1,value\n");
        for j in 0..points {
            csv.push_str(&format!("{},1\n", j as f64 * h));
        }
        Tabulation::from_csv(&csv, Tail::CompactSupport).unwrap()
    }

    #[test]
    fn csv_round_trip_and_interpolation() {
        let t = indicator(11);
        assert_eq!(t.dim(), 1);
        assert_eq!(t.len(), 11);
        assert_eq!(t.interpolate(&[0.55]), Some(1.0));
        assert_eq!(t.interpolate(&[1.2]), None);
        assert_eq!(t.interpolate(&[-0.01]), None);
        assert!((t.trapezoid(|_| 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_dimensional_grid_in_any_row_order() {
        let csv = "x_1,x_2,value\n1,0,2\n0,0,0\n0,1,1\n1,1,3\n";
        let t = Tabulation::from_csv(csv, Tail::Unknown).unwrap();
        // f = x_2 + 2 x_1 is bilinear, so interpolation is exact
        assert!((t.interpolate(&[0.25, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!(Tabulation::from_csv("x,value\n0,1\n1,1\n3,1\n", Tail::Unknown).is_err());
        assert!(Tabulation::from_csv("0,0,1\n1,1,1\n", Tail::Unknown).is_err());
    }

    #[test]
    fn discrete_transform_at_zero_is_the_integral() {
        let t = indicator(101);
        assert!((t.fourier(&[0.0]).re - 1.0).abs() < 1e-14);
        let z = t.fourier(&[2.0]);
        // ∫_0^1 e^{-2ix} dx = (1 - e^{-2i}) / (2i)
        let exact = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -2.0)) / Complex64::new(0.0, 2.0);
        assert!((z - exact).norm() < 1e-4);
    }
}
