//! Periodic piecewise-linear functions on a uniform grid of `[0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Smallest admissible grid.
pub const MIN_GRID: usize = 1 << 10;
pub const DEFAULT_GRID: usize = 1 << 14;

pub fn validate_grid_size(m: usize) -> Result<()> {
    if m < MIN_GRID || !m.is_power_of_two() {
        return Err(invalid(format!(
            "grid size must be a power of two ≥ {MIN_GRID}, got {m}"
        )));
    }
    Ok(())
}

/// Values at the nodes `i/m`, linearly interpolated with wraparound.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        GridFunction::new(values).map_err(serde::de::Error::custom)
    }
}

/// Location of a point relative to the grid: `x = (cell + frac)/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPosition {
    pub cell: usize,
    pub frac: f64,
}

impl GridPosition {
    pub fn locate(x: f64, m: usize) -> Self {
        let u = (x - x.floor()) * m as f64;
        let cell = u.floor();
        let frac = u - cell;
        let cell = cell as usize;
        if cell >= m {
            GridPosition { cell: 0, frac: 0.0 }
        } else {
            GridPosition { cell, frac }
        }
    }

    pub fn next(&self, m: usize) -> usize {
        if self.cell + 1 == m {
            0
        } else {
            self.cell + 1
        }
    }

    pub fn interpolate(&self, values: &[f64]) -> f64 {
        let a = values[self.cell];
        let b = values[self.next(values.len())];
        a + self.frac * (b - a)
    }
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        validate_grid_size(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid function has non-finite values"));
        }
        Ok(GridFunction { values })
    }

    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        GridFunction { values }
    }

    pub fn constant(m: usize, c: f64) -> Result<Self> {
        GridFunction::new(vec![c; m])
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        validate_grid_size(m)?;
        GridFunction::new((0..m).map(|i| f(node(i, m))).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        GridPosition::locate(x, self.len()).interpolate(&self.values)
    }

    /// `∫_0^1`, exact for the interpolant.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_values_unchecked(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn antiderivative(&self) -> Antiderivative<'_> {
        let m = self.len();
        let mut cumulative = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..m {
            acc += 0.5 * (self.values[i] + self.values[(i + 1) % m]) / m as f64;
            cumulative.push(acc);
        }
        Antiderivative {
            grid: self,
            cumulative,
        }
    }
}

pub fn node(i: usize, m: usize) -> f64 {
    i as f64 / m as f64
}

/// Exact integrals of a [`GridFunction`] over arbitrary lifted intervals.
#[derive(Debug, Clone)]
pub struct Antiderivative<'a> {
    grid: &'a GridFunction,
    cumulative: Vec<f64>,
}

impl Antiderivative<'_> {
    pub fn total(&self) -> f64 {
        self.cumulative[self.grid.len()]
    }

    /// `∫_0^x` for any real `x`, counting full turns.
    pub fn at(&self, x: f64) -> f64 {
        let turns = x.floor();
        let pos = GridPosition::locate(x, self.grid.len());
        let m = self.grid.len() as f64;
        let v = self.grid.values();
        let a = v[pos.cell];
        let b = v[pos.next(v.len())];
        let s = pos.frac;
        let within = (a * s + 0.5 * (b - a) * s * s) / m;
        turns * self.total() + self.cumulative[pos.cell] + within
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.at(b) - self.at(a)
    }

    /// The point `x ∈ [0, 1)` with `∫_0^x = u`, for a nonnegative grid and
    /// `u ∈ [0, total)`; the quadratic in each cell is inverted exactly.
    pub fn inverse(&self, u: f64) -> f64 {
        let m = self.grid.len();
        let k = self.cumulative.partition_point(|&c| c <= u).clamp(1, m) - 1;
        let v = self.grid.values();
        let a = v[k].max(0.0);
        let d = v[(k + 1) % m].max(0.0) - a;
        let r = ((u - self.cumulative[k]) * m as f64).max(0.0);
        let disc = (a * a + 2.0 * d * r).max(0.0);
        let denom = a + disc.sqrt();
        let s = if denom > 0.0 {
            (2.0 * r / denom).min(1.0)
        } else {
            0.0
        };
        let x = (k as f64 + s) / m as f64;
        if x >= 1.0 {
            0.0
        } else {
            x
        }
    }
}
