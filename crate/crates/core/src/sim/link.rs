//! Link-level SINR and per-BS energy efficiency of one network snapshot.

use crate::params::{NetworkParams, UplinkSignal};

use super::network::{path_gain, NetworkRealization};

/// Downlink SINR at `ue`: serving power·fading·gain over the other BSs'
/// received power plus noise. `fading[k]` is the power fading of the link
/// from BS `k` to this UE.
pub fn downlink_sinr(
    net: &NetworkRealization,
    ue: usize,
    powers: &[f64],
    fading: &[f64],
    params: &NetworkParams,
) -> f64 {
    let serving = net.association[ue];
    if powers[serving] == 0.0 {
        return 0.0;
    }
    let mut interference = 0.0;
    for (k, (&p, &h)) in powers.iter().zip(fading).enumerate() {
        if k != serving && p > 0.0 {
            interference += p * h * path_gain(net.ue_distance(ue, k), params.alpha);
        }
    }
    let signal =
        powers[serving] * fading[serving] * path_gain(net.ue_distance(ue, serving), params.alpha);
    signal / (interference + params.n0)
}

/// Interference received by BS `bs` from the other transmitting BSs.
/// `fading[k]` is the fading of the link from BS `k` to `bs`.
pub fn cross_bs_interference(
    net: &NetworkRealization,
    bs: usize,
    powers: &[f64],
    fading: &[f64],
    params: &NetworkParams,
) -> f64 {
    let mut total = 0.0;
    for (k, (&p, &h)) in powers.iter().zip(fading).enumerate() {
        if k != bs && p > 0.0 {
            total += p * h * path_gain(net.bs_distance(bs, k), params.alpha);
        }
    }
    total
}

/// Uplink SINR at the serving BS of `ue`, whose own transmission leaks
/// `p·h_self` into its receiver. `ue_fading` is the UE-to-BS link fading.
pub fn uplink_sinr(
    net: &NetworkRealization,
    ue: usize,
    powers: &[f64],
    ue_fading: f64,
    bs_interference: f64,
    params: &NetworkParams,
) -> f64 {
    let serving = net.association[ue];
    let own = powers[serving];
    let tx = match params.uplink_signal {
        UplinkSignal::UeTransmit => params.p_t_ue,
        UplinkSignal::RruTransmit => own,
    };
    let signal = tx * ue_fading * path_gain(net.ue_distance(ue, serving), params.alpha);
    signal / (own * params.h_self + bs_interference + params.n0)
}

/// Energy efficiency of the links one BS serves in a step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BsLinkScore {
    pub dl_sum: f64,
    pub dl_count: usize,
    pub ul_sum: f64,
    pub ul_count: usize,
}

impl BsLinkScore {
    pub fn add_downlink(&mut self, sinr: f64, power: f64, params: &NetworkParams) {
        self.dl_sum += sinr.ln_1p() / (power + params.p_static);
        self.dl_count += 1;
    }

    /// A BS that cannot receive contributes a zero-rate sample.
    pub fn add_uplink(&mut self, sinr: Option<f64>, params: &NetworkParams) {
        if let Some(sinr) = sinr {
            self.ul_sum += sinr.ln_1p() / params.uplink_power();
        }
        self.ul_count += 1;
    }

    pub fn downlink_mean(&self) -> Option<f64> {
        (self.dl_count > 0).then(|| self.dl_sum / self.dl_count as f64)
    }

    pub fn uplink_mean(&self) -> Option<f64> {
        (self.ul_count > 0).then(|| self.ul_sum / self.ul_count as f64)
    }

    /// Weighted EE with the 0/0 → 0 convention for an idle direction.
    pub fn weighted(&self, beta: f64) -> f64 {
        self.downlink_mean().unwrap_or(0.0) + beta * self.uplink_mean().unwrap_or(0.0)
    }
}

/// `(Σ EE_DL)/N_DL + β (Σ EE_UL)/N_UL` from per-UE SINRs of one BS.
pub fn weighted_bs_ee(
    power: f64,
    dl_sinrs: &[f64],
    ul_sinrs: &[Option<f64>],
    params: &NetworkParams,
) -> f64 {
    let mut score = BsLinkScore::default();
    dl_sinrs
        .iter()
        .for_each(|&s| score.add_downlink(s, power, params));
    ul_sinrs.iter().for_each(|&s| score.add_uplink(s, params));
    score.weighted(params.beta)
}
