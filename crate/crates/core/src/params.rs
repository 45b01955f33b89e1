//! Physical constants of the network model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which transmit power drives the desired uplink signal inside the
/// uplink spectral-efficiency integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UplinkSignal {
    /// The scheduled UE's transmit power `p_t_ue`.
    #[default]
    UeTransmit,
    /// The serving RRU's own transmit power. Kept for comparison runs.
    RruTransmit,
}

/// Network constants. Powers in watts, intensities per square metre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Static (circuit) power of a base station.
    pub p_static: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    pub lambda_bs: f64,
    /// UE intensity. Only the Monte Carlo simulator uses it.
    pub lambda_ue: f64,
    /// Noise power.
    pub n0: f64,
    pub p_t_ue: f64,
    pub p_ue_static: f64,
    /// Residual self-interference gain of the full-duplex radio.
    pub h_self: f64,
    /// Maximum RRU transmit power.
    pub p_max: f64,
    /// Weight of the uplink energy efficiency.
    pub beta: f64,
    #[serde(default)]
    pub uplink_signal: UplinkSignal,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self::table_defaults()
    }
}

impl NetworkParams {
    /// Reference deployment: 6 W static power, alpha = 3, 0.0005 BS/m²,
    /// 1e-8 W noise, 0.1 W UE power with 0.5 W UE static power,
    /// self-interference 4e-4, 1 W maximum RRU power, beta = 1.
    ///
    /// The UE intensity has no reference value; five UEs per BS is used.
    pub fn table_defaults() -> Self {
        let lambda_bs = 0.0005;
        Self {
            p_static: 6.0,
            alpha: 3.0,
            lambda_bs,
            lambda_ue: 5.0 * lambda_bs,
            n0: 1e-8,
            p_t_ue: 0.1,
            p_ue_static: 0.5,
            h_self: 0.0004,
            p_max: 1.0,
            beta: 1.0,
            uplink_signal: UplinkSignal::UeTransmit,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 2.0) || !self.alpha.is_finite() {
            return Err(Error::DivergentIntegral { alpha: self.alpha });
        }
        if !(self.p_static > 0.0) {
            return Err(Error::config(format!(
                "p_static must be positive, got {}",
                self.p_static
            )));
        }
        if !(self.p_max > 0.0) || !self.p_max.is_finite() {
            return Err(Error::config(format!(
                "p_max must be positive, got {}",
                self.p_max
            )));
        }
        let non_negative = [
            ("lambda_bs", self.lambda_bs),
            ("lambda_ue", self.lambda_ue),
            ("n0", self.n0),
            ("p_t_ue", self.p_t_ue),
            ("p_ue_static", self.p_ue_static),
            ("h_self", self.h_self),
            ("beta", self.beta),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::config(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Denominator of the per-UE uplink energy efficiency.
    pub fn uplink_power(&self) -> f64 {
        self.p_t_ue + self.p_ue_static
    }
}
