use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::NetworkParams;

pub type Point = [f64; 2];

/// Square scoring window `[-L, L]²` inside a larger sampling square
/// `[-(L + guard), L + guard]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimWindow {
    pub half_width: f64,
    pub guard: f64,
}

impl Default for SimWindow {
    fn default() -> Self {
        Self {
            half_width: 200.0,
            guard: 100.0,
        }
    }
}

impl SimWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::config(format!(
                "window half-width must be positive, got {}",
                self.half_width
            )));
        }
        if !(self.guard >= 0.0) || !self.guard.is_finite() {
            return Err(Error::config(format!(
                "guard band must be non-negative, got {}",
                self.guard
            )));
        }
        Ok(())
    }

    pub fn outer_half_width(&self) -> f64 {
        self.half_width + self.guard
    }

    pub fn inner_area(&self) -> f64 {
        (2.0 * self.half_width).powi(2)
    }

    pub fn outer_area(&self) -> f64 {
        (2.0 * self.outer_half_width()).powi(2)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0].abs() <= self.half_width && p[1].abs() <= self.half_width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    /// BSs over the sampling square, guard band included.
    pub bs_positions: Vec<Point>,
    /// UEs inside the scoring window.
    pub ue_positions: Vec<Point>,
    /// Serving BS of each UE.
    pub association: Vec<usize>,
    /// Whether each BS lies inside the scoring window.
    pub scored: Vec<bool>,
    /// Residual battery energy per BS, joules.
    pub batteries: Vec<f64>,
    pub rng_seed: u64,
}

impl NetworkRealization {
    pub fn bs_count(&self) -> usize {
        self.bs_positions.len()
    }

    /// Distance between a UE and a BS.
    pub fn ue_distance(&self, ue: usize, bs: usize) -> f64 {
        distance(self.ue_positions[ue], self.bs_positions[bs])
    }

    pub fn bs_distance(&self, a: usize, b: usize) -> f64 {
        distance(self.bs_positions[a], self.bs_positions[b])
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Bounded path loss `min(1, r^-α)`.
pub fn path_gain(distance: f64, alpha: f64) -> f64 {
    if distance <= 1.0 {
        1.0
    } else {
        distance.powf(-alpha)
    }
}

/// Nearest BS by Euclidean distance; ties go to the lower index.
pub fn nearest(bs_positions: &[Point], p: Point) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &b) in bs_positions.iter().enumerate() {
        let d2 = (p[0] - b[0]).powi(2) + (p[1] - b[1]).powi(2);
        if best.is_none_or(|(_, bd)| d2 < bd) {
            best = Some((k, d2));
        }
    }
    best.map(|(k, _)| k)
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as usize
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> Vec<Point> {
    (0..n)
        .map(|_| {
            [
                rng.random_range(-half_width..=half_width),
                rng.random_range(-half_width..=half_width),
            ]
        })
        .collect()
}

/// Draws one deployment and returns it together with the generator state,
/// which the caller keeps using for fading and traffic draws.
///
/// Returns `None` when no BS falls in the sampling square.
pub fn sample_network_with_rng(
    params: &NetworkParams,
    window: &SimWindow,
    e_max: f64,
    rng_seed: u64,
) -> (Option<NetworkRealization>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n_bs = poisson_count(&mut rng, params.lambda_bs * window.outer_area());
    let n_ue = poisson_count(&mut rng, params.lambda_ue * window.inner_area());
    let bs_positions = uniform_points(&mut rng, n_bs, window.outer_half_width());
    let ue_positions = uniform_points(&mut rng, n_ue, window.half_width);
    if bs_positions.is_empty() {
        return (None, rng);
    }
    let batteries = (0..n_bs).map(|_| rng.random_range(0.0..=e_max)).collect();
    let association = ue_positions
        .iter()
        .map(|&u| nearest(&bs_positions, u).expect("at least one BS"))
        .collect();
    let scored = bs_positions.iter().map(|&b| window.contains(b)).collect();
    let realization = NetworkRealization {
        bs_positions,
        ue_positions,
        association,
        scored,
        batteries,
        rng_seed,
    };
    (Some(realization), rng)
}

/// Poisson BS and UE deployments with batteries uniform on `[0, e_max]`.
pub fn sample_network(
    params: &NetworkParams,
    window: &SimWindow,
    e_max: f64,
    rng_seed: u64,
) -> Option<NetworkRealization> {
    sample_network_with_rng(params, window, e_max, rng_seed).0
}
