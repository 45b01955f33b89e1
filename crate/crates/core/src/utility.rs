//! Mean-field interference and the weighted energy-efficiency utility of a
//! single base station facing a population with a given battery distribution.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{NetworkParams, UplinkSignal};
use crate::quadrature::{QuadratureSpec, RateKernel};

/// `2πλ(1/2 + 1/(α-2))`: mean aggregate interference of a PPP of unit-power
/// transmitters under the bounded path loss `min(1, r^-α)` and unit-mean fading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceConstant(f64);

impl InterferenceConstant {
    pub fn new(lambda_bs: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 2.0) {
            return Err(Error::DivergentIntegral { alpha });
        }
        if !(lambda_bs >= 0.0) || !lambda_bs.is_finite() {
            return Err(Error::config(format!(
                "BS intensity must be non-negative, got {lambda_bs}"
            )));
        }
        Ok(Self(2.0 * PI * lambda_bs * (0.5 + 1.0 / (alpha - 2.0))))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Interference seen by a BS receiver and by a downlink UE when the rest of
/// the network transmits `expected_power` on average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanInterference {
    pub i_rru: f64,
    pub i_ue: f64,
    pub expected_power: f64,
}

impl MeanInterference {
    pub fn from_expected_power(constant: InterferenceConstant, expected_power: f64) -> Self {
        let i = constant.value() * expected_power;
        Self {
            i_rru: i,
            i_ue: i,
            expected_power,
        }
    }

    pub fn silent() -> Self {
        Self {
            i_rru: 0.0,
            i_ue: 0.0,
            expected_power: 0.0,
        }
    }
}

/// Population-average transmit power `Σ_y p(y)·m(y)` for a mass vector `m`.
pub fn expected_power(policy_row: &[f64], m_row: &[f64]) -> Result<f64> {
    if policy_row.len() != m_row.len() {
        return Err(Error::LengthMismatch {
            expected: m_row.len(),
            found: policy_row.len(),
        });
    }
    Ok(policy_row.iter().zip(m_row).map(|(p, m)| p * m).sum())
}

pub fn mean_interference(
    policy_row: &[f64],
    m_row: &[f64],
    constant: InterferenceConstant,
) -> Result<MeanInterference> {
    Ok(MeanInterference::from_expected_power(
        constant,
        expected_power(policy_row, m_row)?,
    ))
}

/// Expected downlink spectral efficiency (nats/s/Hz) of a BS transmitting
/// `p` against mean interference `i_ue`.
pub fn phi1(p: f64, i_ue: f64, params: &NetworkParams, quad: &QuadratureSpec) -> Result<f64> {
    let kernel = RateKernel::new(quad, params.alpha, params.lambda_bs)?;
    downlink_rate(&kernel, p, i_ue, params)
}

/// Expected uplink spectral efficiency at a BS transmitting `p` (which
/// leaks `p·h_self` into its own receiver) against mean interference `i_rru`.
pub fn phi2(p: f64, i_rru: f64, params: &NetworkParams, quad: &QuadratureSpec) -> Result<f64> {
    let kernel = RateKernel::new(quad, params.alpha, params.lambda_bs)?;
    uplink_rate(&kernel, p, i_rru, params)
}

fn check_power(p: f64) -> Result<()> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::config(format!(
            "transmit power must be finite and non-negative, got {p}"
        )));
    }
    Ok(())
}

fn downlink_rate(kernel: &RateKernel, p: f64, i_ue: f64, params: &NetworkParams) -> Result<f64> {
    check_power(p)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    let noise = i_ue + params.n0;
    if !(noise > 0.0) {
        return Err(Error::UnboundedRate);
    }
    Ok(kernel.expected_rate(p, noise))
}

fn uplink_rate(kernel: &RateKernel, p: f64, i_rru: f64, params: &NetworkParams) -> Result<f64> {
    check_power(p)?;
    let signal = match params.uplink_signal {
        UplinkSignal::UeTransmit => params.p_t_ue,
        UplinkSignal::RruTransmit => p,
    };
    if !(signal > 0.0) {
        return match params.uplink_signal {
            UplinkSignal::UeTransmit => Err(Error::ZeroSignal),
            UplinkSignal::RruTransmit => Ok(0.0),
        };
    }
    let noise = i_rru + params.n0 + p * params.h_self;
    if !(noise > 0.0) {
        return Err(Error::UnboundedRate);
    }
    Ok(kernel.expected_rate(signal, noise))
}

/// `Φ1/(p + p_static) + β·Φ2/(p_t_ue + p_ue_static)`.
pub fn weighted_utility(
    p: f64,
    interference: &MeanInterference,
    params: &NetworkParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let kernel = RateKernel::new(quad, params.alpha, params.lambda_bs)?;
    weighted_utility_with(&kernel, p, interference, params)
}

fn weighted_utility_with(
    kernel: &RateKernel,
    p: f64,
    interference: &MeanInterference,
    params: &NetworkParams,
) -> Result<f64> {
    let downlink = downlink_rate(kernel, p, interference.i_ue, params)? / (p + params.p_static);
    if params.beta == 0.0 {
        return Ok(downlink);
    }
    let uplink = uplink_rate(kernel, p, interference.i_rru, params)? / params.uplink_power();
    Ok(downlink + params.beta * uplink)
}

/// Utility sampled on `points + 1` evenly spaced powers over `[0, p_max]`
/// for one interference level.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    pub p_grid: Vec<f64>,
    pub u_values: Vec<f64>,
    pub interference: MeanInterference,
}

impl UtilityTable {
    pub fn step(&self) -> f64 {
        self.p_grid[1] - self.p_grid[0]
    }

    pub fn p_max(&self) -> f64 {
        *self.p_grid.last().expect("table is non-empty")
    }
}

pub fn power_grid(p_max: f64, points: usize) -> Vec<f64> {
    (0..=points)
        .map(|j| p_max * j as f64 / points as f64)
        .collect()
}

pub fn utility_table(
    interference: &MeanInterference,
    params: &NetworkParams,
    quad: &QuadratureSpec,
    points: usize,
) -> Result<UtilityTable> {
    let model = MeanFieldUtility::new(*params, *quad)?;
    model.table(interference, points)
}

/// The per-BS payoff the equilibrium solver maximizes. Implemented by the
/// mean-field utility; tests substitute doubles.
pub trait UtilityModel: Sync {
    fn p_max(&self) -> f64;

    /// Interference generated by a population transmitting `expected_power`.
    fn interference(&self, expected_power: f64) -> MeanInterference;

    fn utility(&self, p: f64, interference: &MeanInterference) -> f64;

    fn table(&self, interference: &MeanInterference, points: usize) -> Result<UtilityTable> {
        if points < 16 {
            return Err(Error::config(format!(
                "power scan needs at least 16 intervals, got {points}"
            )));
        }
        let p_grid = power_grid(self.p_max(), points);
        let u_values = p_grid
            .iter()
            .map(|&p| self.utility(p, interference))
            .collect();
        Ok(UtilityTable {
            p_grid,
            u_values,
            interference: *interference,
        })
    }
}

/// Weighted downlink + uplink energy efficiency with precomputed quadrature.
#[derive(Debug, Clone)]
pub struct MeanFieldUtility {
    params: NetworkParams,
    kernel: RateKernel,
    constant: InterferenceConstant,
}

impl MeanFieldUtility {
    /// Validates that the utility is finite for every power in `[0, p_max]`
    /// and every interference level, including a silent network.
    pub fn new(params: NetworkParams, quad: QuadratureSpec) -> Result<Self> {
        params.validate()?;
        if !(params.n0 > 0.0) {
            return Err(Error::UnboundedRate);
        }
        if params.uplink_signal == UplinkSignal::UeTransmit
            && params.beta > 0.0
            && !(params.p_t_ue > 0.0)
        {
            return Err(Error::ZeroSignal);
        }
        Ok(Self {
            kernel: RateKernel::new(&quad, params.alpha, params.lambda_bs)?,
            constant: InterferenceConstant::new(params.lambda_bs, params.alpha)?,
            params,
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn constant(&self) -> InterferenceConstant {
        self.constant
    }

    pub fn phi1(&self, p: f64, i_ue: f64) -> Result<f64> {
        downlink_rate(&self.kernel, p, i_ue, &self.params)
    }

    pub fn phi2(&self, p: f64, i_rru: f64) -> Result<f64> {
        uplink_rate(&self.kernel, p, i_rru, &self.params)
    }
}

impl UtilityModel for MeanFieldUtility {
    fn p_max(&self) -> f64 {
        self.params.p_max
    }

    fn interference(&self, expected_power: f64) -> MeanInterference {
        MeanInterference::from_expected_power(self.constant, expected_power)
    }

    fn utility(&self, p: f64, interference: &MeanInterference) -> f64 {
        weighted_utility_with(&self.kernel, p, interference, &self.params)
            .expect("inputs validated at construction")
    }
}
