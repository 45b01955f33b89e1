//! Solve, simulate, compare and figure runs, each producing CSV tables.

use std::path::Path;

use log::info;
use wpmfg_core::sim::{simulate_trajectory, PolicySource, TrajectoryStats};
use wpmfg_core::{policy_trajectory, psi_trajectory, solve_emfg, Equilibrium, Field2D, GridSpec};

use crate::bundle::Table;
use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Battery level below which mass counts as low energy, as a fraction of `E_max`.
pub const LOW_ENERGY_FRACTION: f64 = 0.6;

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub equilibrium: Equilibrium,
    /// `Ψ(t)` of the equilibrium under the mean-field utility.
    pub psi: Vec<f64>,
}

pub fn solve(config: &ExperimentConfig) -> Result<SolveRun, CliError> {
    info!(
        "solving equilibrium: beta = {}, grid {}x{}",
        config.network.beta,
        config.grid.time_steps(),
        config.grid.energy_steps()
    );
    let model = config.model()?;
    let equilibrium = solve_emfg(config.grid, &model, &config.solver)?;
    info!(
        "{} after {} iterations, residual {:.3e}",
        if equilibrium.converged {
            "converged"
        } else {
            "not converged"
        },
        equilibrium.iterations,
        equilibrium.final_residual
    );
    let psi = psi_trajectory(&equilibrium, &model)?;
    Ok(SolveRun { equilibrium, psi })
}

pub fn solve_tables(run: &SolveRun) -> Vec<Table> {
    let eq = &run.equilibrium;
    let mut convergence = Table::new("convergence.csv", &["iteration", "residual"]);
    for (i, r) in eq.residual_history.iter().enumerate() {
        convergence.push(vec![(i + 1) as f64, *r]);
    }
    let mut psi = Table::new("psi.csv", &["t", "psi"]);
    let grid = eq.policy.grid();
    for (x, v) in run.psi.iter().enumerate() {
        psi.push(vec![grid.time(x), *v]);
    }
    vec![
        Table::from_field("policy.csv", &eq.policy),
        Table::from_field("value.csv", &eq.value),
        Table::from_field("mean_field.csv", &eq.mean_field),
        convergence,
        psi,
    ]
}

pub fn simulate(
    config: &ExperimentConfig,
    policy: &PolicySource,
) -> Result<TrajectoryStats, CliError> {
    info!(
        "simulating {} realizations ({})",
        config.simulation.realizations,
        match policy {
            PolicySource::Equilibrium(_) => "equilibrium policy".to_string(),
            PolicySource::Fixed(p) => format!("fixed {p} W"),
        }
    );
    Ok(simulate_trajectory(
        policy,
        &config.network,
        &config.grid,
        &config.simulation.settings(),
        config.seed,
    )?)
}

pub fn simulation_tables(config: &ExperimentConfig, stats: &TrajectoryStats) -> Vec<Table> {
    let mut summary = Table::new(
        "simulation.csv",
        &[
            "t",
            "mean_ee",
            "mean_ee_ci",
            "served_ee",
            "mean_energy",
            "dead_fraction",
        ],
    );
    for x in 0..stats.times.len() {
        summary.push(vec![
            stats.times[x],
            stats.mean_ee[x],
            stats.mean_ee_ci[x],
            stats.served_ee[x],
            stats.mean_energy[x],
            stats.dead_fraction[x],
        ]);
    }
    let mut coverage = Table::new(
        "coverage.csv",
        &["t", "delta_db", "coverage", "ci_halfwidth"],
    );
    for x in 0..stats.times.len() {
        for (i, db) in config.simulation.thresholds_db.iter().enumerate() {
            coverage.push(vec![
                stats.times[x],
                *db,
                stats.coverage[i][x],
                stats.coverage_ci[i][x],
            ]);
        }
    }
    vec![summary, coverage]
}

/// Reads a long-format `(t, e, value)` policy written by `solve` and checks
/// that it lies on `grid`.
pub fn read_policy_csv(path: &Path, grid: &GridSpec) -> Result<Field2D, CliError> {
    let csv_error = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut values = Vec::with_capacity(grid.time_points() * grid.energy_points());
    for (i, record) in reader.deserialize::<(f64, f64, f64)>().enumerate() {
        let (t, e, p) = record.map_err(csv_error)?;
        let (x, y) = (i / grid.energy_points(), i % grid.energy_points());
        if x >= grid.time_points()
            || (t - grid.time(x)).abs() > 1e-9
            || (e - grid.energy(y)).abs() > 1e-9
        {
            return Err(CliError::Config(format!(
                "{}: row {} at (t = {t}, e = {e}) does not match the configured grid",
                path.display(),
                i + 2
            )));
        }
        values.push(p);
    }
    Ok(Field2D::from_values(*grid, values)?)
}

/// `fixed:<watts>` or a path to a policy CSV.
pub fn parse_policy_arg(arg: &str, config: &ExperimentConfig) -> Result<PolicySource, CliError> {
    let policy = match arg.strip_prefix("fixed:") {
        Some(w) => PolicySource::Fixed(
            w.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("invalid fixed power '{w}'")))?,
        ),
        None => PolicySource::Equilibrium(read_policy_csv(Path::new(arg), &config.grid)?),
    };
    policy.validate(config.network.p_max)?;
    Ok(policy)
}

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub solve: SolveRun,
    pub emfg: TrajectoryStats,
    pub fixed: TrajectoryStats,
}

/// Solves, then simulates the equilibrium and the fixed-power baseline on
/// the same deployments.
pub fn compare(config: &ExperimentConfig) -> Result<CompareRun, CliError> {
    let solve = solve(config)?;
    let emfg = simulate(
        config,
        &PolicySource::Equilibrium(solve.equilibrium.policy.clone()),
    )?;
    let fixed = simulate(config, &PolicySource::Fixed(config.simulation.fixed_power))?;
    Ok(CompareRun { solve, emfg, fixed })
}

pub fn psi_compare_table(name: &str, runs: &[(f64, &CompareRun)]) -> Table {
    let mut table = Table::new(
        name,
        &["beta", "t", "psi_emfg_model", "ee_emfg_sim", "ee_fixed_sim"],
    );
    for (beta, run) in runs {
        for (x, t) in run.emfg.times.iter().enumerate() {
            table.push(vec![
                *beta,
                *t,
                run.solve.psi[x],
                run.emfg.mean_ee[x],
                run.fixed.mean_ee[x],
            ]);
        }
    }
    table
}

pub fn coverage_compare_table(name: &str, config: &ExperimentConfig, run: &CompareRun) -> Table {
    let mut table = Table::new(
        name,
        &[
            "t",
            "delta_db",
            "theta_emfg",
            "theta_fixed",
            "ci_halfwidth_emfg",
            "ci_halfwidth_fixed",
        ],
    );
    for (x, t) in run.emfg.times.iter().enumerate() {
        for (i, db) in config.simulation.thresholds_db.iter().enumerate() {
            table.push(vec![
                *t,
                *db,
                run.emfg.coverage[i][x],
                run.fixed.coverage[i][x],
                run.emfg.coverage_ci[i][x],
                run.fixed.coverage_ci[i][x],
            ]);
        }
    }
    table
}

pub fn compare_tables(config: &ExperimentConfig, run: &CompareRun) -> Vec<Table> {
    let mut tables = solve_tables(&run.solve);
    tables.push(psi_compare_table(
        "psi_compare.csv",
        &[(config.network.beta, run)],
    ));
    tables.push(coverage_compare_table("coverage_compare.csv", config, run));
    tables
}

/// Time indices nearest to `0`, `T/2` and `T`.
pub fn slice_indices(grid: &GridSpec) -> [usize; 3] {
    [
        0,
        grid.nearest_time_index(0.5 * grid.horizon()),
        grid.time_steps(),
    ]
}

fn slices_table(name: &str, field: &Field2D, header: &[&'static str]) -> Table {
    let grid = field.grid();
    let xs = slice_indices(grid);
    let mut table = Table::new(name, header);
    for y in 0..grid.energy_points() {
        table.push(vec![
            grid.energy(y),
            field.get(xs[0], y),
            field.get(xs[1], y),
            field.get(xs[2], y),
        ]);
    }
    table
}

/// Energy centroid and mass at or below the low-energy level, per time index.
pub fn mean_field_summary(mean_field: &Field2D) -> Vec<(f64, f64, f64)> {
    let grid = mean_field.grid();
    let low = LOW_ENERGY_FRACTION * grid.e_max();
    (0..grid.time_points())
        .map(|x| {
            let row = mean_field.row(x);
            let centroid = row
                .iter()
                .enumerate()
                .map(|(y, m)| grid.energy(y) * m)
                .sum();
            let low_mass = row
                .iter()
                .enumerate()
                .filter(|(y, _)| grid.energy(*y) <= low + 1e-9)
                .map(|(_, m)| m)
                .sum();
            (grid.time(x), centroid, low_mass)
        })
        .collect()
}

/// Tables of one figure and the first solve that did not converge, if any.
#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub tables: Vec<Table>,
    pub not_converged: Option<(usize, f64)>,
}

/// `(iterations, residual)` of an unconverged equilibrium.
pub fn convergence_failure(eq: &Equilibrium) -> Option<(usize, f64)> {
    (!eq.converged).then_some((eq.iterations, eq.final_residual))
}

pub fn figure(id: u8, config: &ExperimentConfig) -> Result<FigureOutput, CliError> {
    match id {
        3 => {
            let run = solve(config)?;
            let p = &run.equilibrium.policy;
            Ok(FigureOutput {
                tables: vec![
                    Table::from_field("fig3_policy.csv", p),
                    slices_table("fig3_slices.csv", p, &["e", "p_t0", "p_t_half", "p_t_end"]),
                ],
                not_converged: convergence_failure(&run.equilibrium),
            })
        }
        4 => {
            let mut initial = Table::new("fig4_initial_power.csv", &["beta", "e", "p"]);
            let mut trajectories =
                Table::new("fig4_trajectories.csv", &["beta", "e0", "t", "e", "p"]);
            let mut not_converged = None;
            for &beta in &config.figure.betas {
                let run = solve(&config.with_beta(beta))?;
                not_converged = not_converged.or(convergence_failure(&run.equilibrium));
                let policy = &run.equilibrium.policy;
                let grid = policy.grid();
                for y in 0..grid.energy_points() {
                    initial.push(vec![beta, grid.energy(y), policy.get(0, y)]);
                }
                for e0 in [0.5 * grid.e_max(), grid.e_max()] {
                    for (t, e, p) in policy_trajectory(policy, e0) {
                        trajectories.push(vec![beta, e0, t, e, p]);
                    }
                }
            }
            Ok(FigureOutput {
                tables: vec![initial, trajectories],
                not_converged,
            })
        }
        5 => {
            let run = solve(config)?;
            Ok(FigureOutput {
                tables: vec![Table::from_field(
                    "fig5_mean_field.csv",
                    &run.equilibrium.mean_field,
                )],
                not_converged: convergence_failure(&run.equilibrium),
            })
        }
        6 => {
            let run = solve(config)?;
            let m = &run.equilibrium.mean_field;
            let mut summary = Table::new("fig6_summary.csv", &["t", "centroid", "low_energy_mass"]);
            for (t, c, low) in mean_field_summary(m) {
                summary.push(vec![t, c, low]);
            }
            Ok(FigureOutput {
                tables: vec![
                    slices_table("fig6_slices.csv", m, &["e", "m_t0", "m_t_half", "m_t_end"]),
                    summary,
                ],
                not_converged: convergence_failure(&run.equilibrium),
            })
        }
        7 => {
            let mut runs = Vec::new();
            for &beta in &config.figure.psi_betas {
                runs.push((beta, compare(&config.with_beta(beta))?));
            }
            let not_converged = runs
                .iter()
                .find_map(|(_, r)| convergence_failure(&r.solve.equilibrium));
            let refs: Vec<(f64, &CompareRun)> = runs.iter().map(|(b, r)| (*b, r)).collect();
            Ok(FigureOutput {
                tables: vec![psi_compare_table("fig7_psi.csv", &refs)],
                not_converged,
            })
        }
        8 => {
            let run = compare(config)?;
            Ok(FigureOutput {
                tables: vec![coverage_compare_table("fig8_coverage.csv", config, &run)],
                not_converged: convergence_failure(&run.solve.equilibrium),
            })
        }
        other => Err(CliError::Config(format!(
            "unknown figure id {other}; expected 3 to 8"
        ))),
    }
}
