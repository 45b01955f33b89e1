//! Monte Carlo network simulator: Poisson deployments, battery dynamics
//! under a power policy, link SINRs, energy efficiency and coverage.

mod link;
mod network;
mod policy;
mod trajectory;

pub use link::{cross_bs_interference, downlink_sinr, uplink_sinr, weighted_bs_ee, BsLinkScore};
pub use network::{
    distance, nearest, path_gain, sample_network, sample_network_with_rng, NetworkRealization,
    Point, SimWindow,
};
pub use policy::{step_batteries, PolicySource};
pub use trajectory::{
    coverage_probability, db_to_linear, simulate_trajectory, SimSettings, TrajectoryStats,
};
