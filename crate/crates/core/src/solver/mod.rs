//! Equilibrium of the mean field game: alternate a backward HJB sweep (best
//! response of one BS to the population) with a forward FPK sweep (battery
//! distribution induced by that response) until the distribution is stable.

mod fpk;
mod hamiltonian;
mod hjb;

use serde::{Deserialize, Serialize};

pub use fpk::{fpk_forward_sweep, FpkSolution, NEGATIVE_MASS_FLOOR};
pub use hamiltonian::{maximize_hamiltonian, scan_hamiltonian, HamiltonianMax, REFINE_TOLERANCE};
pub use hjb::{hjb_backward_sweep, HjbSolution};

use crate::error::{Error, Result};
use crate::grid::{initial_mean_field, terminal_value, Field2D, GridSpec};
use crate::utility::{expected_power, UtilityModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sup-norm tolerance on successive mean fields.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Weight of the new mean field in the relaxed update, in `(0, 1]`.
    pub damping: f64,
    /// Number of intervals of the power scan over `[0, p_max]`.
    pub power_scan_points: usize,
    /// Power every charged RRU is assumed to transmit before the first sweep.
    /// `None` means `p_max`.
    pub initial_power: Option<f64>,
    /// Terminal value `coeff_a · exp(coeff_b · e)`.
    pub terminal_coeff_a: f64,
    pub terminal_coeff_b: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: 200,
            damping: 0.5,
            power_scan_points: 128,
            initial_power: None,
            terminal_coeff_a: 0.05,
            terminal_coeff_b: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations must be at least 1"));
        }
        if self.power_scan_points < 16 {
            return Err(Error::config(format!(
                "power scan needs at least 16 intervals, got {}",
                self.power_scan_points
            )));
        }
        if let Some(p) = self.initial_power {
            if !(p >= 0.0) {
                return Err(Error::config(format!(
                    "initial power must be non-negative, got {p}"
                )));
            }
        }
        if !self.terminal_coeff_a.is_finite() || !self.terminal_coeff_b.is_finite() {
            return Err(Error::config("terminal value coefficients must be finite"));
        }
        Ok(())
    }
}

/// Converged (or best-effort) equilibrium of the game.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub policy: Field2D,
    pub value: Field2D,
    /// Battery distribution induced by `policy`.
    pub mean_field: Field2D,
    /// Population-average power behind the interference of the final sweep.
    pub expected_power: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub max_step_drift: f64,
    pub total_renormalization: f64,
}

impl Equilibrium {
    /// Mean battery level at each time index.
    pub fn energy_centroid(&self) -> Vec<f64> {
        let grid = self.mean_field.grid();
        self.mean_field
            .rows()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(y, m)| grid.energy(y) * m)
                    .sum()
            })
            .collect()
    }
}

fn charged_policy(grid: GridSpec, power: f64) -> Field2D {
    Field2D::from_fn(grid, |_, y| if y == 0 { 0.0 } else { power })
}

/// Runs the alternating sweeps from a uniform battery distribution.
///
/// Non-convergence is not an error: the result carries `converged = false`
/// together with the residual history.
pub fn solve_emfg<M: UtilityModel>(
    grid: GridSpec,
    model: &M,
    config: &SolverConfig,
) -> Result<Equilibrium> {
    config.validate()?;
    grid.validate_cfl(model.p_max())?;
    let terminal = terminal_value(&grid, config.terminal_coeff_a, config.terminal_coeff_b);
    let m0 = initial_mean_field(&grid);

    let initial_power = config
        .initial_power
        .unwrap_or(model.p_max())
        .min(model.p_max());
    let mut interference_policy = charged_policy(grid, initial_power);
    let mut mean_field = Field2D::from_fn(grid, |_, y| m0[y]);
    let mut history = Vec::new();

    let mut last = None;
    for iteration in 1..=config.max_iterations {
        let hjb = hjb_backward_sweep(&mean_field, &interference_policy, &terminal, model, config)?;
        let fpk = fpk_forward_sweep(&hjb.policy, &m0)?;

        let mut power_shift = 0.0f64;
        for x in 0..grid.time_points() {
            let induced = expected_power(hjb.policy.row(x), fpk.mean_field.row(x))?;
            power_shift = power_shift.max((induced - hjb.expected_power[x]).abs());
        }
        let residual = fpk
            .mean_field
            .sup_distance(&mean_field)
            .max(power_shift / model.p_max());
        history.push(residual);

        let d = config.damping;
        let relaxed: Vec<f64> = fpk
            .mean_field
            .values()
            .iter()
            .zip(mean_field.values())
            .map(|(new, old)| d * new + (1.0 - d) * old)
            .collect();
        mean_field = Field2D::from_values(grid, relaxed)?;
        interference_policy = hjb.policy.clone();

        let converged = residual <= config.tolerance;
        last = Some((hjb, fpk, iteration, residual, converged));
        if converged {
            break;
        }
    }

    let (hjb, fpk, iterations, final_residual, converged) = last.expect("at least one iteration");
    Ok(Equilibrium {
        policy: hjb.policy,
        value: hjb.value,
        mean_field: fpk.mean_field,
        expected_power: hjb.expected_power,
        iterations,
        final_residual,
        converged,
        residual_history: history,
        max_step_drift: fpk.max_step_drift,
        total_renormalization: fpk.total_renormalization,
    })
}

/// `Ψ(t) = Σ_e m(t, e) · U(p(t, e))`, with one interference level for the
/// whole row taken from the row's own population-average power.
pub fn network_energy_efficiency<M: UtilityModel + ?Sized>(
    policy: &Field2D,
    mean_field: &Field2D,
    x: usize,
    model: &M,
) -> Result<f64> {
    let p = policy.row(x);
    let m = mean_field.row(x);
    let interference = model.interference(expected_power(p, m)?);
    Ok(p.iter()
        .zip(m)
        .filter(|(_, &mass)| mass != 0.0)
        .map(|(&power, &mass)| mass * model.utility(power, &interference))
        .sum())
}

/// `Ψ(t)` at every time index of an equilibrium.
pub fn psi_trajectory<M: UtilityModel + ?Sized>(eq: &Equilibrium, model: &M) -> Result<Vec<f64>> {
    (0..eq.policy.grid().time_points())
        .map(|x| network_energy_efficiency(&eq.policy, &eq.mean_field, x, model))
        .collect()
}

/// Battery trajectory of one RRU that starts with `e0` joules and follows
/// `policy`: `(t, e, p)` at every time index, with `p` truncated so the
/// battery is never overdrawn.
pub fn policy_trajectory(policy: &Field2D, e0: f64) -> Vec<(f64, f64, f64)> {
    let grid = policy.grid();
    let dt = grid.dt();
    let mut e = e0;
    (0..grid.time_points())
        .map(|x| {
            let t = grid.time(x);
            let p = if e > 0.0 {
                policy.interpolate(t, e).max(0.0).min(e / dt)
            } else {
                0.0
            };
            let point = (t, e, p);
            e = (e - p * dt).max(0.0);
            point
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::MeanInterference;

    struct ZeroUtility;

    impl UtilityModel for ZeroUtility {
        fn p_max(&self) -> f64 {
            1.0
        }
        fn interference(&self, expected_power: f64) -> MeanInterference {
            MeanInterference {
                i_rru: expected_power,
                i_ue: expected_power,
                expected_power,
            }
        }
        fn utility(&self, _: f64, _: &MeanInterference) -> f64 {
            0.0
        }
    }

    fn grid() -> GridSpec {
        GridSpec::new(1.0, 2.0, 20, 20).unwrap()
    }

    #[test]
    fn empty_game_sweep_is_trivial() {
        let g = grid();
        let m = Field2D::filled(g, 1.0 / 21.0);
        let terminal = vec![0.0; 21];
        let config = SolverConfig::default();
        let out = hjb_backward_sweep(
            &m,
            &charged_policy(g, 1.0),
            &terminal,
            &ZeroUtility,
            &config,
        )
        .unwrap();
        assert!(out.value.values().iter().all(|&v| v == 0.0));
        assert!(out.policy.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sweep_leaves_terminal_row_untouched() {
        let g = grid();
        let m = Field2D::filled(g, 1.0 / 21.0);
        let terminal = terminal_value(&g, 0.05, 1.0);
        let out = hjb_backward_sweep(
            &m,
            &charged_policy(g, 1.0),
            &terminal,
            &ZeroUtility,
            &SolverConfig::default(),
        )
        .unwrap();
        let last = out.value.row(20);
        assert!(last
            .iter()
            .zip(&terminal)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn empty_game_converges_immediately() {
        let eq = solve_emfg(grid(), &ZeroUtility, &SolverConfig::default()).unwrap();
        assert!(eq.converged);
        // the first pass settles the interference seeded by the initial power
        assert!(eq.iterations <= 2, "{} iterations", eq.iterations);
        assert!(eq.policy.values().iter().all(|&p| p == 0.0));
        let m0 = initial_mean_field(&grid());
        for row in eq.mean_field.rows() {
            assert!(row.iter().zip(&m0).all(|(a, b)| (a - b).abs() < 1e-15));
        }
        let psi = psi_trajectory(&eq, &ZeroUtility).unwrap();
        assert!(psi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn trajectory_follows_constant_power() {
        let g = grid();
        let traj = policy_trajectory(&Field2D::filled(g, 1.0), 0.5);
        assert_eq!(traj.len(), 21);
        assert!((traj[10].1 - 0.0).abs() < 1e-12);
        assert!((traj[5].1 - 0.25).abs() < 1e-12);
        assert!(traj[11..].iter().all(|&(_, e, p)| e == 0.0 && p == 0.0));
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            damping: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            power_scan_points: 8,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn point_mass_psi_is_single_utility() {
        struct Linear;
        impl UtilityModel for Linear {
            fn p_max(&self) -> f64 {
                1.0
            }
            fn interference(&self, ep: f64) -> MeanInterference {
                MeanInterference {
                    i_rru: ep,
                    i_ue: ep,
                    expected_power: ep,
                }
            }
            fn utility(&self, p: f64, i: &MeanInterference) -> f64 {
                2.0 * p - i.i_ue
            }
        }
        let g = grid();
        let policy = Field2D::from_fn(g, |_, y| y as f64 / 20.0);
        let mean_field = Field2D::from_fn(g, |_, y| if y == 7 { 1.0 } else { 0.0 });
        let psi = network_energy_efficiency(&policy, &mean_field, 3, &Linear).unwrap();
        let p = 7.0 / 20.0;
        assert!((psi - (2.0 * p - p)).abs() < 1e-15);
    }
}
