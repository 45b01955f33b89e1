//! Nested Gauss-Legendre evaluation of the expected log-rate integral
//!
//! ```text
//! Φ(S, N) = ∫_{ω>0} ∫_{r>0} exp(-(e^ω - 1) · N · r^α / S) · f(r) dr dω
//! ```
//!
//! where `f(r) = 2πλ r exp(-λπr²)` is the nearest-BS distance density, `S`
//! the desired-signal power and `N` the noise-plus-interference power. This is
//! `E[ln(1 + S·h·r^-α / N)]` under unit-mean Rayleigh power fading.
//!
//! The radial integral is taken over `u = λπr²`, turning the density into
//! `exp(-u)`. The default scheme further integrates over `ln u` and over
//! `ln(e^ω - 1)`: in those coordinates the integrand is a smooth step along a
//! straight line, which Gauss-Legendre resolves at every SINR scale. Plain
//! Gauss-Legendre on `ω` and `u` is kept as an alternative scheme; it
//! converges slowly because the low-SINR integrand is concentrated near
//! `ω = 0` and the high-SINR one near `u = 0`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    /// Gauss-Legendre in `ln(e^ω - 1)` and `ln u`.
    #[default]
    LogGaussLegendre,
    /// Gauss-Legendre directly in `ω` and `u`.
    GaussLegendre,
}

/// Node counts and truncation of the nested quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub omega_nodes: usize,
    pub r_nodes: usize,
    /// Upper limit of the ω integral, in nats.
    pub omega_cutoff: f64,
    /// Upper limit of the radial integral in `u = λπr²` (probability that
    /// the nearest BS lies farther out is `exp(-u_cutoff)`).
    pub u_cutoff: f64,
    /// Lower limit of both logarithmic coordinates (log scheme only).
    pub log_floor: f64,
    pub scheme: QuadratureScheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            omega_nodes: 64,
            r_nodes: 64,
            omega_cutoff: 30.0,
            u_cutoff: 40.0,
            log_floor: -30.0,
            scheme: QuadratureScheme::LogGaussLegendre,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.omega_nodes < 8 || self.r_nodes < 8 {
            return Err(Error::config(format!(
                "quadrature needs at least 8 nodes per axis, got {} x {}",
                self.omega_nodes, self.r_nodes
            )));
        }
        if !(self.omega_cutoff > 0.0) || !(self.u_cutoff > 0.0) {
            return Err(Error::config("quadrature cutoffs must be positive"));
        }
        if self.scheme == QuadratureScheme::LogGaussLegendre
            && !(self.log_floor < self.u_cutoff.ln().min((self.omega_cutoff.exp_m1()).ln()))
        {
            return Err(Error::config(format!(
                "log floor {} must lie below both upper limits",
                self.log_floor
            )));
        }
        Ok(())
    }

    /// Doubles both node counts.
    pub fn refined(&self) -> Self {
        Self {
            omega_nodes: 2 * self.omega_nodes,
            r_nodes: 2 * self.r_nodes,
            ..*self
        }
    }
}

/// Terms `exp(-x)` with `x` above this are dropped.
const NEGLIGIBLE_EXPONENT: f64 = 50.0;

/// Range and resolution of the tabulated radial integral, in `ln c`.
const TABLE_LOG_MIN: f64 = -90.0;
const TABLE_LOG_MAX: f64 = 90.0;
const TABLE_INTERVALS: usize = 4096;

/// Precomputed nodes of the nested rule for one `(α, λ_BS)` pair.
///
/// The radial sum `g(c) = Σ_r w_r exp(-c·r^α)` depends on the SINR threshold
/// and the noise-to-signal ratio only through their product `c`, so it is
/// tabulated once on a uniform grid in `ln c` (values and slopes) and read
/// back by cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct RateKernel {
    /// SINR thresholds `e^ω - 1`, ascending, with their ω-weights.
    thresholds: Vec<f64>,
    threshold_weights: Vec<f64>,
    /// `r^α` at the radial nodes with the density-weighted radial weights.
    path_loss: Vec<f64>,
    radial_weights: Vec<f64>,
    /// `g` and `dg/d(ln c)` at `ln c = TABLE_LOG_MIN + k·step`.
    radial_table: Vec<(f64, f64)>,
    table_step: f64,
}

fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("node count checked by validate"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    pairs
}

impl RateKernel {
    pub fn new(spec: &QuadratureSpec, alpha: f64, lambda_bs: f64) -> Result<Self> {
        spec.validate()?;
        if !(alpha > 2.0) {
            return Err(Error::DivergentIntegral { alpha });
        }
        if !(lambda_bs > 0.0) || !lambda_bs.is_finite() {
            return Err(Error::config(format!(
                "nearest-BS distance needs a positive BS intensity, got {lambda_bs}"
            )));
        }
        let area = lambda_bs * std::f64::consts::PI;
        let half_alpha = 0.5 * alpha;

        let (thresholds, threshold_weights): (Vec<f64>, Vec<f64>) = match spec.scheme {
            QuadratureScheme::LogGaussLegendre => {
                gauss_legendre(
                    spec.omega_nodes,
                    spec.log_floor,
                    spec.omega_cutoff.exp_m1().ln(),
                )
                .into_iter()
                .map(|(t, w)| {
                    let z = t.exp();
                    // dω = dz / (1 + z) = z dt / (1 + z)
                    (z, w * z / (1.0 + z))
                })
                .unzip()
            }
            QuadratureScheme::GaussLegendre => {
                gauss_legendre(spec.omega_nodes, 0.0, spec.omega_cutoff)
                    .into_iter()
                    .map(|(omega, w)| (omega.exp_m1(), w))
                    .unzip()
            }
        };

        let radial: Vec<(f64, f64)> = match spec.scheme {
            QuadratureScheme::LogGaussLegendre => {
                gauss_legendre(spec.r_nodes, spec.log_floor, spec.u_cutoff.ln())
                    .into_iter()
                    .map(|(s, w)| {
                        let u = s.exp();
                        (u, w * u * (-u).exp())
                    })
                    .collect()
            }
            QuadratureScheme::GaussLegendre => gauss_legendre(spec.r_nodes, 0.0, spec.u_cutoff)
                .into_iter()
                .map(|(u, w)| (u, w * (-u).exp()))
                .collect(),
        };
        let (path_loss, radial_weights) = radial
            .into_iter()
            .map(|(u, w)| ((u / area).powf(half_alpha), w))
            .unzip();

        let mut kernel = Self {
            thresholds,
            threshold_weights,
            path_loss,
            radial_weights,
            radial_table: Vec::new(),
            table_step: (TABLE_LOG_MAX - TABLE_LOG_MIN) / TABLE_INTERVALS as f64,
        };
        kernel.radial_table = (0..=TABLE_INTERVALS)
            .map(|k| kernel.radial_sum(TABLE_LOG_MIN + k as f64 * kernel.table_step))
            .collect();
        Ok(kernel)
    }

    /// `g(c)` and `dg/d(ln c)` by direct summation over the radial nodes.
    fn radial_sum(&self, log_c: f64) -> (f64, f64) {
        let c = log_c.exp();
        let (mut g, mut slope) = (0.0, 0.0);
        for (&ra, &wr) in self.path_loss.iter().zip(&self.radial_weights) {
            let x = c * ra;
            if x > NEGLIGIBLE_EXPONENT {
                continue;
            }
            let term = wr * (-x).exp();
            g += term;
            slope -= term * x;
        }
        (g, slope)
    }

    fn radial_interpolated(&self, c: f64) -> f64 {
        let log_c = c.ln();
        let pos = (log_c - TABLE_LOG_MIN) / self.table_step;
        if !(pos >= 0.0 && pos < TABLE_INTERVALS as f64) {
            return self.radial_sum(log_c).0;
        }
        let k = pos as usize;
        let s = pos - k as f64;
        let (g0, d0) = self.radial_table[k];
        let (g1, d1) = self.radial_table[k + 1];
        let h = self.table_step;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * g0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * g1
            + (s3 - s2) * h * d1
    }

    /// `E[ln(1 + signal·h·r^-α / noise)]` for `signal > 0`, `noise > 0`.
    pub fn expected_rate(&self, signal: f64, noise: f64) -> f64 {
        debug_assert!(signal > 0.0 && noise > 0.0);
        let k = noise / signal;
        self.thresholds
            .iter()
            .zip(&self.threshold_weights)
            .map(|(&z, &wz)| wz * self.radial_interpolated(z * k))
            .sum()
    }

    /// Same rule as [`expected_rate`](Self::expected_rate), summed node by
    /// node without the tabulated radial integral.
    pub fn expected_rate_direct(&self, signal: f64, noise: f64) -> f64 {
        debug_assert!(signal > 0.0 && noise > 0.0);
        let k = noise / signal;
        let mut total = 0.0;
        for (&ra, &wr) in self.path_loss.iter().zip(&self.radial_weights) {
            let scale = k * ra;
            let mut inner = 0.0;
            for (&z, &wz) in self.thresholds.iter().zip(&self.threshold_weights) {
                let exponent = z * scale;
                if exponent > NEGLIGIBLE_EXPONENT {
                    break;
                }
                inner += wz * (-exponent).exp();
            }
            total += wr * inner;
        }
        total
    }
}
