use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Point mass of a [`FiniteMeasure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

/// Atomic initial measure `m = Σ mass_i δ_{location_i}`.
///
/// `moment_exponent` records the `a > 0` with `∫|x|^a m(dx) < ∞`. For finitely
/// many atoms every such moment is finite, so the value is metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasure {
    atoms: Vec<Atom>,
    total_mass: f64,
    moment_exponent: f64,
}

impl FiniteMeasure {
    pub fn new(atoms: Vec<Atom>, moment_exponent: f64) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return domain("a finite measure needs at least one atom");
        };
        let dim = first.location.len();
        if dim == 0 {
            return domain("atom locations must have at least one coordinate");
        }
        for atom in &atoms {
            if atom.location.len() != dim {
                return domain("atoms have inconsistent dimensions");
            }
            if !(atom.mass > 0.0 && atom.mass.is_finite()) {
                return domain(format!("atom mass must be positive, got {}", atom.mass));
            }
            if atom.location.iter().any(|v| !v.is_finite()) {
                return domain("atom location is not finite");
            }
        }
        if !(moment_exponent > 0.0) {
            return domain(format!("moment exponent must be positive, got {moment_exponent}"));
        }
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        Ok(Self {
            atoms,
            total_mass,
            moment_exponent,
        })
    }

    /// `mass · δ_0` in dimension `dim`.
    pub fn dirac(dim: usize, mass: f64) -> Result<Self> {
        Self::new(
            vec![Atom {
                location: vec![0.0; dim],
                mass,
            }],
            2.0,
        )
    }

    /// Parses `delta` / `delta(mass)` or a `;`-separated list of
    /// `x_1 … x_d : mass` atoms.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let spec = spec.trim();
        if spec == "delta" {
            return Self::dirac(dim, 1.0);
        }
        if let Some(inner) = spec.strip_prefix("delta(").and_then(|s| s.strip_suffix(')')) {
            let mass = inner
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad delta mass '{inner}'")))?;
            return Self::dirac(dim, mass);
        }
        let mut atoms = Vec::new();
        for part in spec.split(';').filter(|s| !s.trim().is_empty()) {
            let (loc, mass) = part
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("atom '{part}' must read 'x_1 … x_d : mass'")))?;
            let location = loc
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad coordinate '{v}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            if location.len() != dim {
                return Err(Error::Config(format!(
                    "atom '{part}' has {} coordinates, expected {dim}",
                    location.len()
                )));
            }
            let mass = mass
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad atom mass '{mass}'")))?;
            atoms.push(Atom { location, mass });
        }
        Self::new(atoms, 2.0)
    }

    pub fn with_moment_exponent(mut self, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return domain(format!("moment exponent must be positive, got {a}"));
        }
        self.moment_exponent = a;
        Ok(self)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].location.len()
    }

    /// `m(1)`
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn moment_exponent(&self) -> f64 {
        self.moment_exponent
    }

    /// `∫|x|^a m(dx)`
    pub fn absolute_moment(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                a.mass
                    * a.location
                        .iter()
                        .map(|v| v * v)
                        .sum::<f64>()
                        .sqrt()
                        .powf(self.moment_exponent)
            })
            .sum()
    }

    /// `m(g) = Σ mass_i g(location_i)`.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut g: F) -> f64 {
        self.atoms.iter().map(|a| a.mass * g(&a.location)).sum()
    }

    /// Draws an atom location from `m / m(1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[f64] {
        if self.atoms.len() == 1 {
            return &self.atoms[0].location;
        }
        let mut u = rng.random::<f64>() * self.total_mass;
        for atom in &self.atoms {
            if u < atom.mass {
                return &atom.location;
            }
            u -= atom.mass;
        }
        &self.atoms[self.atoms.len() - 1].location
    }
}
