use crate::error::{Error, Result};
use crate::grid::Field2D;

/// Transmit-power rule applied by every RRU.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    /// Bilinear lookup into an equilibrium policy `p(t, e)`.
    Equilibrium(Field2D),
    /// Constant power until the battery runs out.
    Fixed(f64),
}

impl PolicySource {
    pub fn validate(&self, p_max: f64) -> Result<()> {
        match self {
            Self::Equilibrium(field) => field.check_policy(p_max),
            Self::Fixed(p) if (0.0..=p_max).contains(p) => Ok(()),
            Self::Fixed(p) => Err(Error::config(format!(
                "fixed power {p} outside [0, {p_max}]"
            ))),
        }
    }

    /// Requested power at time `t` with `energy` left in the battery.
    pub fn power(&self, t: f64, energy: f64) -> f64 {
        if energy <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Equilibrium(field) => field.interpolate(t, energy).max(0.0),
            Self::Fixed(p) => *p,
        }
    }
}

/// Drains each battery by `p·dt` and returns the powers used. A battery
/// that would be overdrawn transmits `e/dt` and ends exactly empty.
pub fn step_batteries(batteries: &mut [f64], policy: &PolicySource, t: f64, dt: f64) -> Vec<f64> {
    let powers: Vec<f64> = batteries.iter().map(|&e| policy.power(t, e)).collect();
    powers
        .into_iter()
        .zip(batteries.iter_mut())
        .map(|(p, e)| {
            if p * dt >= *e {
                let used = *e / dt;
                *e = 0.0;
                used
            } else {
                *e -= p * dt;
                p
            }
        })
        .collect()
}
