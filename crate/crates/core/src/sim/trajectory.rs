use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::params::NetworkParams;

use super::link::BsLinkScore;
use super::network::{path_gain, sample_network_with_rng, NetworkRealization, SimWindow};
use super::policy::{step_batteries, PolicySource};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub window: SimWindow,
    pub n_realizations: usize,
    /// Coverage SINR thresholds, linear scale.
    pub thresholds: Vec<f64>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            window: SimWindow::default(),
            n_realizations: 1000,
            thresholds: [-10.0, 0.0, 10.0].into_iter().map(db_to_linear).collect(),
            workers: None,
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.n_realizations == 0 {
            return Err(Error::config("n_realizations must be at least 1"));
        }
        if let Some(d) = self
            .thresholds
            .iter()
            .find(|d| !(**d > 0.0) || !d.is_finite())
        {
            return Err(Error::config(format!(
                "coverage threshold must be positive (linear), got {d}"
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(())
    }
}

/// Per-time-step averages over BSs and realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub times: Vec<f64>,
    /// Weighted EE averaged over scored BSs, idle directions counting 0.
    pub mean_ee: Vec<f64>,
    pub mean_ee_ci: Vec<f64>,
    /// Downlink and uplink parts of `mean_ee`: `mean_ee = dl + β ul`.
    pub mean_dl_ee: Vec<f64>,
    pub mean_ul_ee: Vec<f64>,
    /// Weighted EE with each direction averaged only over BSs serving it.
    pub served_ee: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// `coverage[i][x]`: downlink coverage at `thresholds[i]`.
    pub coverage: Vec<Vec<f64>>,
    pub coverage_ci: Vec<Vec<f64>>,
    pub mean_energy: Vec<f64>,
    /// Fraction of BSs with an empty battery.
    pub dead_fraction: Vec<f64>,
    /// `battery_histogram[x][y]`: BSs whose battery is nearest to grid level `y`.
    pub battery_histogram: Vec<Vec<u64>>,
    pub realizations: usize,
    /// Realizations dropped because no BS was drawn.
    pub discarded: usize,
    /// Largest `|e(0) - e(T) - Σ p dt|` over all BSs.
    pub max_energy_error: f64,
}

impl TrajectoryStats {
    /// Normalized battery histogram at time index `x`.
    pub fn battery_distribution(&self, x: usize) -> Vec<f64> {
        let row = &self.battery_histogram[x];
        let total: u64 = row.iter().sum();
        row.iter()
            .map(|&c| c as f64 / total.max(1) as f64)
            .collect()
    }
}

/// Coverage trajectory and confidence half-widths at threshold `delta`
/// (linear), if it was simulated.
pub fn coverage_probability(stats: &TrajectoryStats, delta: f64) -> Option<(&[f64], &[f64])> {
    stats
        .thresholds
        .iter()
        .position(|&d| (d - delta).abs() <= 1e-12 * delta)
        .map(|i| {
            (
                stats.coverage[i].as_slice(),
                stats.coverage_ci[i].as_slice(),
            )
        })
}

/// One realization's per-step averages. `None` where nothing was scored.
struct Trace {
    ee: Vec<Option<f64>>,
    dl_ee: Vec<Option<f64>>,
    ul_ee: Vec<Option<f64>>,
    served_ee: Vec<Option<f64>>,
    coverage: Vec<Vec<Option<f64>>>,
    energy_sum: Vec<f64>,
    dead: Vec<usize>,
    histogram: Vec<Vec<u64>>,
    bs_count: usize,
    energy_error: f64,
}

struct Gains {
    ue_bs: Vec<f64>,
    bs_bs: Vec<f64>,
    n_bs: usize,
}

impl Gains {
    fn new(net: &NetworkRealization, alpha: f64) -> Self {
        let n_bs = net.bs_count();
        let ue_bs = (0..net.ue_positions.len())
            .flat_map(|u| (0..n_bs).map(move |k| (u, k)))
            .map(|(u, k)| path_gain(net.ue_distance(u, k), alpha))
            .collect();
        let bs_bs = (0..n_bs)
            .flat_map(|a| (0..n_bs).map(move |b| (a, b)))
            .map(|(a, b)| path_gain(net.bs_distance(a, b), alpha))
            .collect();
        Self { ue_bs, bs_bs, n_bs }
    }

    fn ue(&self, u: usize) -> &[f64] {
        &self.ue_bs[u * self.n_bs..(u + 1) * self.n_bs]
    }

    fn bs(&self, k: usize) -> &[f64] {
        &self.bs_bs[k * self.n_bs..(k + 1) * self.n_bs]
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn run_realization(
    policy: &PolicySource,
    params: &NetworkParams,
    grid: &GridSpec,
    settings: &SimSettings,
    seed: u64,
) -> Option<Trace> {
    let (net, mut rng) = sample_network_with_rng(params, &settings.window, grid.e_max(), seed);
    let mut net = net?;
    let gains = Gains::new(&net, params.alpha);
    let n_bs = net.bs_count();
    let n_thr = settings.thresholds.len();
    let steps = grid.time_points();
    let dt = grid.dt();
    let initial = net.batteries.clone();
    let mut drained = vec![0.0; n_bs];

    let mut trace = Trace {
        ee: Vec::with_capacity(steps),
        dl_ee: Vec::with_capacity(steps),
        ul_ee: Vec::with_capacity(steps),
        served_ee: Vec::with_capacity(steps),
        coverage: vec![Vec::with_capacity(steps); n_thr],
        energy_sum: Vec::with_capacity(steps),
        dead: Vec::with_capacity(steps),
        histogram: Vec::with_capacity(steps),
        bs_count: n_bs,
        energy_error: 0.0,
    };

    for x in 0..steps {
        let t = grid.time(x);
        let mut bins = vec![0u64; grid.energy_points()];
        for &e in &net.batteries {
            bins[grid.nearest_energy_index(e)] += 1;
        }
        trace.histogram.push(bins);
        trace.energy_sum.push(net.batteries.iter().sum());
        let alive: Vec<bool> = net.batteries.iter().map(|&e| e > 0.0).collect();
        trace.dead.push(alive.iter().filter(|a| !**a).count());

        let powers = if x + 1 < steps {
            let used = step_batteries(&mut net.batteries, policy, t, dt);
            drained
                .iter_mut()
                .zip(&used)
                .for_each(|(d, p)| *d += p * dt);
            used
        } else {
            step_batteries(&mut net.batteries.clone(), policy, t, dt)
        };
        // silent BSs neither interfere nor need fading draws
        let active: Vec<usize> = (0..n_bs).filter(|&j| powers[j] > 0.0).collect();

        let mut scores = vec![BsLinkScore::default(); n_bs];
        let mut covered = vec![vec![0usize; n_thr]; n_bs];
        let mut bs_interference: Vec<Option<f64>> = vec![None; n_bs];
        for u in 0..net.ue_positions.len() {
            let k = net.association[u];
            if !net.scored[k] {
                continue;
            }
            if rng.random_bool(0.5) {
                let g = gains.ue(u);
                let sinr = if powers[k] == 0.0 {
                    0.0
                } else {
                    let mut signal = 0.0;
                    let mut interference = 0.0;
                    for &j in &active {
                        let received = powers[j] * rng.sample::<f64, _>(Exp1) * g[j];
                        if j == k {
                            signal = received;
                        } else {
                            interference += received;
                        }
                    }
                    signal / (interference + params.n0)
                };
                scores[k].add_downlink(sinr, powers[k], params);
                for (c, &delta) in covered[k].iter_mut().zip(&settings.thresholds) {
                    if sinr > delta {
                        *c += 1;
                    }
                }
            } else {
                let h_ue: f64 = rng.sample(Exp1);
                if !alive[k] {
                    scores[k].add_uplink(None, params);
                    continue;
                }
                let cross = *bs_interference[k].get_or_insert_with(|| {
                    let g = gains.bs(k);
                    let mut total = 0.0;
                    for &j in &active {
                        if j != k {
                            total += powers[j] * rng.sample::<f64, _>(Exp1) * g[j];
                        }
                    }
                    total
                });
                let tx = match params.uplink_signal {
                    crate::params::UplinkSignal::UeTransmit => params.p_t_ue,
                    crate::params::UplinkSignal::RruTransmit => powers[k],
                };
                let sinr =
                    tx * h_ue * gains.ue(u)[k] / (powers[k] * params.h_self + cross + params.n0);
                scores[k].add_uplink(Some(sinr), params);
            }
        }

        let scored: Vec<usize> = (0..n_bs).filter(|&k| net.scored[k]).collect();
        let ee: Vec<f64> = scored
            .iter()
            .map(|&k| scores[k].weighted(params.beta))
            .collect();
        trace.ee.push(mean(&ee));
        let dl_all: Vec<f64> = scored
            .iter()
            .map(|&k| scores[k].downlink_mean().unwrap_or(0.0))
            .collect();
        let ul_all: Vec<f64> = scored
            .iter()
            .map(|&k| scores[k].uplink_mean().unwrap_or(0.0))
            .collect();
        trace.dl_ee.push(mean(&dl_all));
        trace.ul_ee.push(mean(&ul_all));
        let dl: Vec<f64> = scored
            .iter()
            .filter_map(|&k| scores[k].downlink_mean())
            .collect();
        let ul: Vec<f64> = scored
            .iter()
            .filter_map(|&k| scores[k].uplink_mean())
            .collect();
        trace.served_ee.push(match (mean(&dl), mean(&ul)) {
            (None, None) => None,
            (d, u) => Some(d.unwrap_or(0.0) + params.beta * u.unwrap_or(0.0)),
        });
        for (i, series) in trace.coverage.iter_mut().enumerate() {
            let per_bs: Vec<f64> = scored
                .iter()
                .filter(|&&k| scores[k].dl_count > 0)
                .map(|&k| covered[k][i] as f64 / scores[k].dl_count as f64)
                .collect();
            series.push(mean(&per_bs));
        }
    }

    trace.energy_error = initial
        .iter()
        .zip(&net.batteries)
        .zip(&drained)
        .map(|((e0, e1), d)| (e0 - e1 - d).abs())
        .fold(0.0, f64::max);
    Some(trace)
}

/// Mean and 95% half-width over the realizations that scored the step.
fn summarize(samples: impl Iterator<Item = Option<f64>>) -> (f64, f64) {
    let values: Vec<f64> = samples.flatten().collect();
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (m, f64::NAN);
    }
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, Z95 * (var / n as f64).sqrt())
}

/// Runs `policy` over independent deployments seeded `seed`, `seed + 1`, ...
/// and averages per time step. Results do not depend on the worker count.
pub fn simulate_trajectory(
    policy: &PolicySource,
    params: &NetworkParams,
    grid: &GridSpec,
    settings: &SimSettings,
    seed: u64,
) -> Result<TrajectoryStats> {
    params.validate()?;
    settings.validate()?;
    policy.validate(params.p_max)?;

    let run = || {
        (0..settings.n_realizations)
            .into_par_iter()
            .map(|i| run_realization(policy, params, grid, settings, seed.wrapping_add(i as u64)))
            .collect::<Vec<_>>()
    };
    let traces = match settings.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    let discarded = traces.iter().filter(|t| t.is_none()).count();
    let traces: Vec<Trace> = traces.into_iter().flatten().collect();

    let steps = grid.time_points();
    let mut stats = TrajectoryStats {
        times: (0..steps).map(|x| grid.time(x)).collect(),
        mean_ee: Vec::with_capacity(steps),
        mean_ee_ci: Vec::with_capacity(steps),
        mean_dl_ee: Vec::with_capacity(steps),
        mean_ul_ee: Vec::with_capacity(steps),
        served_ee: Vec::with_capacity(steps),
        thresholds: settings.thresholds.clone(),
        coverage: vec![Vec::with_capacity(steps); settings.thresholds.len()],
        coverage_ci: vec![Vec::with_capacity(steps); settings.thresholds.len()],
        mean_energy: Vec::with_capacity(steps),
        dead_fraction: Vec::with_capacity(steps),
        battery_histogram: vec![vec![0; grid.energy_points()]; steps],
        realizations: traces.len(),
        discarded,
        max_energy_error: traces.iter().map(|t| t.energy_error).fold(0.0, f64::max),
    };
    let total_bs: usize = traces.iter().map(|t| t.bs_count).sum();
    for x in 0..steps {
        let (m, ci) = summarize(traces.iter().map(|t| t.ee[x]));
        stats.mean_ee.push(m);
        stats.mean_ee_ci.push(ci);
        stats
            .mean_dl_ee
            .push(summarize(traces.iter().map(|t| t.dl_ee[x])).0);
        stats
            .mean_ul_ee
            .push(summarize(traces.iter().map(|t| t.ul_ee[x])).0);
        stats
            .served_ee
            .push(summarize(traces.iter().map(|t| t.served_ee[x])).0);
        for i in 0..settings.thresholds.len() {
            let (m, ci) = summarize(traces.iter().map(|t| t.coverage[i][x]));
            stats.coverage[i].push(m);
            stats.coverage_ci[i].push(ci);
        }
        let energy: f64 = traces.iter().map(|t| t.energy_sum[x]).sum();
        let dead: usize = traces.iter().map(|t| t.dead[x]).sum();
        stats.mean_energy.push(energy / total_bs.max(1) as f64);
        stats
            .dead_fraction
            .push(dead as f64 / total_bs.max(1) as f64);
        for t in &traces {
            for (acc, c) in stats.battery_histogram[x].iter_mut().zip(&t.histogram[x]) {
                *acc += c;
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimSettings {
        SimSettings {
            window: SimWindow {
                half_width: 60.0,
                guard: 30.0,
            },
            n_realizations: 4,
            ..Default::default()
        }
    }

    #[test]
    fn rejects_zero_realizations() {
        let settings = SimSettings {
            n_realizations: 0,
            ..Default::default()
        };
        let grid = GridSpec::new(1.0, 2.0, 10, 10).unwrap();
        let r = simulate_trajectory(
            &PolicySource::Fixed(1.0),
            &NetworkParams::default(),
            &grid,
            &settings,
            1,
        );
        assert!(r.is_err());
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let grid = GridSpec::new(1.0, 2.0, 10, 10).unwrap();
        let params = NetworkParams::table_defaults();
        let one = SimSettings {
            workers: Some(1),
            ..small()
        };
        let three = SimSettings {
            workers: Some(3),
            ..small()
        };
        let a = simulate_trajectory(&PolicySource::Fixed(1.0), &params, &grid, &one, 9).unwrap();
        let b = simulate_trajectory(&PolicySource::Fixed(1.0), &params, &grid, &three, 9).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn energy_is_accounted() {
        let grid = GridSpec::new(1.0, 2.0, 20, 20).unwrap();
        let stats = simulate_trajectory(
            &PolicySource::Fixed(1.0),
            &NetworkParams::default(),
            &grid,
            &small(),
            2,
        )
        .unwrap();
        assert!(stats.max_energy_error <= 1e-12 * 2.0);
        assert!(stats
            .coverage
            .iter()
            .flatten()
            .all(|c| (0.0..=1.0).contains(c)));
    }

    #[test]
    fn silent_network_has_no_coverage() {
        let grid = GridSpec::new(1.0, 2.0, 10, 10).unwrap();
        let stats = simulate_trajectory(
            &PolicySource::Fixed(0.0),
            &NetworkParams::default(),
            &grid,
            &small(),
            2,
        )
        .unwrap();
        assert!(stats.coverage.iter().flatten().all(|&c| c == 0.0));
    }

    #[test]
    fn weighted_mean_splits_by_direction() {
        let grid = GridSpec::new(1.0, 2.0, 10, 10).unwrap();
        let params = NetworkParams::default().with_beta(0.7);
        let stats =
            simulate_trajectory(&PolicySource::Fixed(0.5), &params, &grid, &small(), 5).unwrap();
        for x in 0..stats.times.len() {
            let split = stats.mean_dl_ee[x] + 0.7 * stats.mean_ul_ee[x];
            assert!((stats.mean_ee[x] - split).abs() <= 1e-12 * split.abs().max(1.0));
        }
    }
}
