//! Sectioned TOML experiment configuration. Every key is optional; missing
//! keys take the reference deployment values and are logged.

use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};
use wpmfg_core::sim::{db_to_linear, SimSettings, SimWindow};
use wpmfg_core::{
    GridSpec, MeanFieldUtility, NetworkParams, QuadratureScheme, QuadratureSpec, SolverConfig,
    UplinkSignal,
};

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    network: Option<RawNetwork>,
    grid: Option<RawGrid>,
    solver: Option<RawSolver>,
    quadrature: Option<RawQuadrature>,
    simulation: Option<RawSimulation>,
    figure: Option<RawFigure>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    p_static: Option<f64>,
    alpha: Option<f64>,
    lambda_bs: Option<f64>,
    lambda_ue: Option<f64>,
    n0: Option<f64>,
    p_t_ue: Option<f64>,
    p_ue_static: Option<f64>,
    h_self: Option<f64>,
    p_max: Option<f64>,
    beta: Option<f64>,
    uplink_signal: Option<UplinkSignal>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    horizon: Option<f64>,
    e_max: Option<f64>,
    time_steps: Option<usize>,
    energy_steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    damping: Option<f64>,
    power_scan_points: Option<usize>,
    initial_power: Option<f64>,
    terminal_coeff_a: Option<f64>,
    terminal_coeff_b: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuadrature {
    omega_nodes: Option<usize>,
    r_nodes: Option<usize>,
    omega_cutoff: Option<f64>,
    u_cutoff: Option<f64>,
    log_floor: Option<f64>,
    scheme: Option<QuadratureScheme>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    half_width: Option<f64>,
    guard: Option<f64>,
    realizations: Option<usize>,
    thresholds_db: Option<Vec<f64>>,
    workers: Option<usize>,
    fixed_power: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFigure {
    betas: Option<Vec<f64>>,
    psi_betas: Option<Vec<f64>>,
}

/// Monte Carlo settings as written in the config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub window: SimWindow,
    pub realizations: usize,
    pub thresholds_db: Vec<f64>,
    pub workers: Option<usize>,
    /// Power of the fixed-power baseline.
    pub fixed_power: f64,
}

impl SimulationConfig {
    pub fn settings(&self) -> SimSettings {
        SimSettings {
            window: self.window,
            n_realizations: self.realizations,
            thresholds: self
                .thresholds_db
                .iter()
                .copied()
                .map(db_to_linear)
                .collect(),
            workers: self.workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureConfig {
    /// Uplink weights compared in the policy figure.
    pub betas: Vec<f64>,
    /// Uplink weights of the energy-efficiency comparison.
    pub psi_betas: Vec<f64>,
}

/// Fully resolved and validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub network: NetworkParams,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub quadrature: QuadratureSpec,
    pub simulation: SimulationConfig,
    pub figure: FigureConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

fn pick<T: std::fmt::Debug>(value: Option<T>, default: T, key: &str) -> T {
    value.unwrap_or_else(|| {
        info!("using default {key} = {default:?}");
        default
    })
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
        CliError::Config(format!("line {line}: {}", e.message()))
    })?;
    let config = resolve(raw)?;
    config.validate()?;
    Ok(config)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, CliError> {
    let d = NetworkParams::table_defaults();
    let n = raw.network.unwrap_or_default();
    let network = NetworkParams {
        p_static: pick(n.p_static, d.p_static, "network.p_static"),
        alpha: pick(n.alpha, d.alpha, "network.alpha"),
        lambda_bs: pick(n.lambda_bs, d.lambda_bs, "network.lambda_bs"),
        lambda_ue: pick(
            n.lambda_ue,
            5.0 * n.lambda_bs.unwrap_or(d.lambda_bs),
            "network.lambda_ue",
        ),
        n0: pick(n.n0, d.n0, "network.n0"),
        p_t_ue: pick(n.p_t_ue, d.p_t_ue, "network.p_t_ue"),
        p_ue_static: pick(n.p_ue_static, d.p_ue_static, "network.p_ue_static"),
        h_self: pick(n.h_self, d.h_self, "network.h_self"),
        p_max: pick(n.p_max, d.p_max, "network.p_max"),
        beta: pick(n.beta, d.beta, "network.beta"),
        uplink_signal: pick(n.uplink_signal, d.uplink_signal, "network.uplink_signal"),
    };

    let g = raw.grid.unwrap_or_default();
    let grid = GridSpec::new(
        pick(g.horizon, 1.0, "grid.horizon"),
        pick(g.e_max, 2.0, "grid.e_max"),
        pick(g.time_steps, 100, "grid.time_steps"),
        pick(g.energy_steps, 100, "grid.energy_steps"),
    )?;

    let ds = SolverConfig::default();
    let s = raw.solver.unwrap_or_default();
    let solver = SolverConfig {
        tolerance: pick(s.tolerance, ds.tolerance, "solver.tolerance"),
        max_iterations: pick(s.max_iterations, ds.max_iterations, "solver.max_iterations"),
        damping: pick(s.damping, ds.damping, "solver.damping"),
        power_scan_points: pick(
            s.power_scan_points,
            ds.power_scan_points,
            "solver.power_scan_points",
        ),
        initial_power: Some(pick(s.initial_power, network.p_max, "solver.initial_power")),
        terminal_coeff_a: pick(
            s.terminal_coeff_a,
            ds.terminal_coeff_a,
            "solver.terminal_coeff_a",
        ),
        terminal_coeff_b: pick(
            s.terminal_coeff_b,
            ds.terminal_coeff_b,
            "solver.terminal_coeff_b",
        ),
    };

    let dq = QuadratureSpec::default();
    let q = raw.quadrature.unwrap_or_default();
    let quadrature = QuadratureSpec {
        omega_nodes: pick(q.omega_nodes, dq.omega_nodes, "quadrature.omega_nodes"),
        r_nodes: pick(q.r_nodes, dq.r_nodes, "quadrature.r_nodes"),
        omega_cutoff: pick(q.omega_cutoff, dq.omega_cutoff, "quadrature.omega_cutoff"),
        u_cutoff: pick(q.u_cutoff, dq.u_cutoff, "quadrature.u_cutoff"),
        log_floor: pick(q.log_floor, dq.log_floor, "quadrature.log_floor"),
        scheme: pick(q.scheme, dq.scheme, "quadrature.scheme"),
    };

    let dw = SimWindow::default();
    let m = raw.simulation.unwrap_or_default();
    let simulation = SimulationConfig {
        window: SimWindow {
            half_width: pick(m.half_width, dw.half_width, "simulation.half_width"),
            guard: pick(m.guard, dw.guard, "simulation.guard"),
        },
        realizations: pick(m.realizations, 1000, "simulation.realizations"),
        thresholds_db: pick(
            m.thresholds_db,
            vec![-10.0, 0.0, 10.0],
            "simulation.thresholds_db",
        ),
        workers: m.workers,
        fixed_power: pick(m.fixed_power, network.p_max, "simulation.fixed_power"),
    };

    let f = raw.figure.unwrap_or_default();
    let figure = FigureConfig {
        betas: pick(f.betas, vec![0.5, 1.0, 1.5], "figure.betas"),
        psi_betas: pick(f.psi_betas, vec![0.5, 1.0], "figure.psi_betas"),
    };

    Ok(ExperimentConfig {
        seed: pick(raw.seed, 1, "seed"),
        network,
        grid,
        solver,
        quadrature,
        simulation,
        figure,
    })
}

impl ExperimentConfig {
    /// Checks every precondition of the solver and the simulator.
    pub fn validate(&self) -> Result<(), CliError> {
        self.network.validate()?;
        self.quadrature.validate()?;
        self.solver.validate()?;
        self.grid.validate_cfl(self.network.p_max)?;
        self.simulation.settings().validate()?;
        if !(0.0..=self.network.p_max).contains(&self.simulation.fixed_power) {
            return Err(CliError::Config(format!(
                "simulation.fixed_power {} outside [0, p_max = {}]",
                self.simulation.fixed_power, self.network.p_max
            )));
        }
        if let Some(b) = self
            .figure
            .betas
            .iter()
            .chain(&self.figure.psi_betas)
            .find(|b| !(**b >= 0.0))
        {
            return Err(CliError::Config(format!(
                "figure beta must be non-negative, got {b}"
            )));
        }
        MeanFieldUtility::new(self.network, self.quadrature)?;
        Ok(())
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        let mut c = self.clone();
        c.network.beta = beta;
        c
    }

    pub fn model(&self) -> Result<MeanFieldUtility, CliError> {
        Ok(MeanFieldUtility::new(self.network, self.quadrature)?)
    }
}
