//! Transmit-power control for energy-constrained full-duplex cellular
//! networks as a mean field game.
//!
//! [`solve_emfg`] computes the equilibrium policy `p(t, e)` and battery
//! distribution `m(t, e)` on a time-energy grid; [`sim`] checks a policy
//! against a Poisson network drawn at random.

pub mod error;
pub mod grid;
pub mod params;
pub mod quadrature;
pub mod sim;
pub mod solver;
pub mod utility;

pub use error::{Error, Result};
pub use grid::{initial_mean_field, terminal_value, CflReport, Field2D, GridSpec};
pub use params::{NetworkParams, UplinkSignal};
pub use quadrature::{QuadratureScheme, QuadratureSpec, RateKernel};
pub use sim::{simulate_trajectory, PolicySource, SimSettings, SimWindow, TrajectoryStats};
pub use solver::{
    network_energy_efficiency, policy_trajectory, psi_trajectory, solve_emfg, Equilibrium,
    SolverConfig,
};
pub use utility::{
    InterferenceConstant, MeanFieldUtility, MeanInterference, UtilityModel, UtilityTable,
};
