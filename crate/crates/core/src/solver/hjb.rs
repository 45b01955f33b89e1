use rayon::prelude::*;

use super::hamiltonian::maximize_hamiltonian;
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::Field2D;
use crate::utility::{expected_power, UtilityModel};

#[derive(Debug, Clone)]
pub struct HjbSolution {
    pub value: Field2D,
    pub policy: Field2D,
    /// Population-average power behind the interference used at each time index.
    pub expected_power: Vec<f64>,
}

/// Backward sweep `V(x-1, y) = V(x, y) + dt · max_p [U(p) - p (V(x, y) - V(x, y-1)) / de]`.
///
/// The interference at time index `x` is the one generated by a population
/// distributed as `m(x, ·)` playing `interference_policy(x, ·)`. An empty
/// battery cannot transmit, so `p(x, 0) = 0`.
pub fn hjb_backward_sweep<M: UtilityModel>(
    m: &Field2D,
    interference_policy: &Field2D,
    terminal: &[f64],
    model: &M,
    config: &SolverConfig,
) -> Result<HjbSolution> {
    let grid = *m.grid();
    let ny = grid.energy_points();
    if terminal.len() != ny {
        return Err(Error::LengthMismatch {
            expected: ny,
            found: terminal.len(),
        });
    }
    let (dt, de) = (grid.dt(), grid.de());
    let last = grid.time_steps();

    let mut value = Field2D::zeros(grid);
    let mut policy = Field2D::zeros(grid);
    let mut powers = vec![0.0; grid.time_points()];
    value.row_mut(last).copy_from_slice(terminal);

    for x in (0..=last).rev() {
        let ep = expected_power(interference_policy.row(x), m.row(x))?;
        powers[x] = ep;
        let table = model.table(&model.interference(ep), config.power_scan_points)?;

        let v = value.row(x);
        let maxima: Vec<(f64, f64)> = (0..ny)
            .into_par_iter()
            .map(|y| {
                if y == 0 {
                    (0.0, table.u_values[0])
                } else {
                    let marginal = (v[y] - v[y - 1]) / de;
                    let best = maximize_hamiltonian(&table, marginal, model);
                    (best.power, best.value)
                }
            })
            .collect();

        for (y, &(p, _)) in maxima.iter().enumerate() {
            policy.set(x, y, p);
        }
        if x > 0 {
            let next: Vec<f64> = v
                .iter()
                .zip(&maxima)
                .map(|(&vy, &(_, h))| vy + dt * h)
                .collect();
            if let Some((y, &bad)) = next.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NumericFailure {
                    x: x - 1,
                    y,
                    value: bad,
                });
            }
            value.row_mut(x - 1).copy_from_slice(&next);
        }
    }

    Ok(HjbSolution {
        value,
        policy,
        expected_power: powers,
    })
}
