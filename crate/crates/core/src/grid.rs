//! Time × battery-energy grid and the fields that live on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretization of `[0, horizon] × [0, e_max]`.
///
/// Time index `x` runs over `0..=time_steps`, energy index `y` over
/// `0..=energy_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    horizon: f64,
    e_max: f64,
    time_steps: usize,
    energy_steps: usize,
    dt: f64,
    de: f64,
}

impl GridSpec {
    pub fn new(horizon: f64, e_max: f64, time_steps: usize, energy_steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::config(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(e_max > 0.0) || !e_max.is_finite() {
            return Err(Error::config(format!(
                "battery capacity must be positive, got {e_max}"
            )));
        }
        if time_steps < 2 || energy_steps < 2 {
            return Err(Error::config(format!(
                "grid needs at least 2 steps per axis, got {time_steps} x {energy_steps}"
            )));
        }
        Ok(Self {
            horizon,
            e_max,
            time_steps,
            energy_steps,
            dt: horizon / time_steps as f64,
            de: e_max / energy_steps as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// Number of time steps `X`; the grid has `X + 1` time points.
    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    /// Number of energy steps `Y`; the grid has `Y + 1` energy points.
    pub fn energy_steps(&self) -> usize {
        self.energy_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn de(&self) -> f64 {
        self.de
    }

    pub fn time_points(&self) -> usize {
        self.time_steps + 1
    }

    pub fn energy_points(&self) -> usize {
        self.energy_steps + 1
    }

    pub fn time(&self, x: usize) -> f64 {
        x as f64 * self.dt
    }

    pub fn energy(&self, y: usize) -> f64 {
        y as f64 * self.de
    }

    /// Nearest energy index for a battery level, clamped to the grid.
    pub fn nearest_energy_index(&self, e: f64) -> usize {
        let y = (e / self.de).round();
        if y <= 0.0 {
            0
        } else {
            (y as usize).min(self.energy_steps)
        }
    }

    /// Nearest time index, clamped to the grid.
    pub fn nearest_time_index(&self, t: f64) -> usize {
        let x = (t / self.dt).round();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.time_steps)
        }
    }

    /// Courant number of the transport stencil at drift speed `p_max`.
    pub fn courant(&self, p_max: f64) -> f64 {
        self.dt * p_max / self.de
    }

    /// Fails unless `dt * p_max / de <= 1`.
    pub fn validate_cfl(&self, p_max: f64) -> Result<CflReport> {
        let ratio = self.courant(p_max);
        if ratio <= 1.0 {
            return Ok(CflReport { ratio });
        }
        // ratio = T * p_max * Y / (X * e_max)
        let max_energy_steps =
            (self.e_max * self.time_steps as f64 / (self.horizon * p_max)).floor() as usize;
        let min_time_steps =
            (self.horizon * p_max * self.energy_steps as f64 / self.e_max).ceil() as usize;
        Err(Error::Cfl {
            ratio,
            max_energy_steps,
            min_time_steps,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    pub ratio: f64,
}

/// `V(X, y) = coeff_a * exp(coeff_b * y * de)`: the value of leftover
/// battery energy at the end of the period.
pub fn terminal_value(grid: &GridSpec, coeff_a: f64, coeff_b: f64) -> Vec<f64> {
    (0..grid.energy_points())
        .map(|y| coeff_a * (coeff_b * grid.energy(y)).exp())
        .collect()
}

/// Uniform probability mass over the energy points.
pub fn initial_mean_field(grid: &GridSpec) -> Vec<f64> {
    let n = grid.energy_points();
    vec![1.0 / n as f64; n]
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A real function sampled on the grid, stored row-major by time index.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::filled(grid, 0.0)
    }

    pub fn filled(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.time_points() * grid.energy_points()],
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for x in 0..grid.time_points() {
            for y in 0..grid.energy_points() {
                field.set(x, y, f(x, y));
            }
        }
        field
    }

    /// Builds a field from a flat row-major vector.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = grid.time_points() * grid.energy_points();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.grid.time_points() && y < self.grid.energy_points());
        x * self.grid.energy_points() + y
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let i = self.index(x, y);
        self.values[i] = value;
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.grid.energy_points();
        &self.values[x * n..(x + 1) * n]
    }

    pub fn row_mut(&mut self, x: usize) -> &mut [f64] {
        let n = self.grid.energy_points();
        &mut self.values[x * n..(x + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.energy_points())
    }

    /// Time series at a fixed energy index.
    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.grid.time_points())
            .map(|x| self.get(x, y))
            .collect()
    }

    /// Largest absolute pointwise difference.
    pub fn sup_distance(&self, other: &Field2D) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Bilinear interpolation at `(t, e)`, clamped to the domain.
    pub fn interpolate(&self, t: f64, e: f64) -> f64 {
        let g = &self.grid;
        let (x0, wx) = bracket(t / g.dt(), g.time_steps());
        let (y0, wy) = bracket(e / g.de(), g.energy_steps());
        let v00 = self.get(x0, y0);
        let v01 = self.get(x0, y0 + 1);
        let v10 = self.get(x0 + 1, y0);
        let v11 = self.get(x0 + 1, y0 + 1);
        (1.0 - wx) * ((1.0 - wy) * v00 + wy * v01) + wx * ((1.0 - wy) * v10 + wy * v11)
    }

    /// Checks the policy-role invariants: `0 <= p <= p_max` and `p(x, 0) = 0`.
    pub fn check_policy(&self, p_max: f64) -> Result<()> {
        for (x, row) in self.rows().enumerate() {
            if row[0] != 0.0 {
                return Err(Error::config(format!(
                    "policy transmits {} W with an empty battery at time index {x}",
                    row[0]
                )));
            }
            if let Some((y, &p)) = row
                .iter()
                .enumerate()
                .find(|(_, &p)| !(0.0..=p_max).contains(&p))
            {
                return Err(Error::config(format!(
                    "policy value {p} outside [0, {p_max}] at ({x}, {y})"
                )));
            }
        }
        Ok(())
    }

    /// Checks the mean-field invariants: non-negative rows of unit mass.
    pub fn check_mean_field(&self, mass_tolerance: f64) -> Result<()> {
        for (x, row) in self.rows().enumerate() {
            if let Some((y, &m)) = row.iter().enumerate().find(|(_, &m)| !(m >= 0.0)) {
                return Err(Error::SchemeFailure { x, y, value: m });
            }
            let mass = compensated_sum(row);
            if (mass - 1.0).abs() > mass_tolerance {
                return Err(Error::config(format!(
                    "mean-field row {x} has mass {mass}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

fn bracket(s: f64, steps: usize) -> (usize, f64) {
    if !(s > 0.0) {
        return (0, 0.0);
    }
    if s >= steps as f64 {
        return (steps - 1, 1.0);
    }
    let i = s.floor() as usize;
    (i, s - i as f64)
}
