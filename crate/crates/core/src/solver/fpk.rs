use crate::error::{Error, Result};
use crate::grid::{compensated_sum, Field2D};

/// Negative mass above this magnitude means the stencil is broken.
pub const NEGATIVE_MASS_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone)]
pub struct FpkSolution {
    pub mean_field: Field2D,
    /// Largest `|Σ_y m(x, y) - 1|` over all steps, before renormalization.
    pub max_step_drift: f64,
    /// Sum over steps of the mass removed or added by renormalization.
    pub total_renormalization: f64,
}

/// Forward Lax-Friedrichs transport of the battery distribution under the
/// drift `de/dt = -p(t, e)`:
///
/// ```text
/// m(x+1, y) = ½[m(x, y-1) + m(x, y+1)] + dt/(2 de) [p m (x, y+1) - p m (x, y-1)]
/// ```
///
/// written in flux form with zero flux through `e = 0` and `e = E_max`, so
/// probability never leaves the battery range.
pub fn fpk_forward_sweep(policy: &Field2D, m0: &[f64]) -> Result<FpkSolution> {
    let grid = *policy.grid();
    let ny = grid.energy_points();
    if m0.len() != ny {
        return Err(Error::LengthMismatch {
            expected: ny,
            found: m0.len(),
        });
    }
    let courant = grid.dt() / grid.de();
    let p_peak = policy.values().iter().copied().fold(0.0, f64::max);
    grid.validate_cfl(p_peak)?;

    let mut mean_field = Field2D::zeros(grid);
    mean_field.row_mut(0).copy_from_slice(m0);
    let mut max_step_drift = 0.0f64;
    let mut total_renormalization = 0.0;
    // interface fluxes F_{y+1/2}, y = -1..=Y; the outer two stay zero
    let mut flux = vec![0.0; ny + 1];

    for x in 0..grid.time_steps() {
        let p = policy.row(x);
        let m = mean_field.row(x);
        let before = compensated_sum(m);
        for y in 0..ny - 1 {
            // Lax-Friedrichs numerical flux of F = -p m
            let f_left = -p[y] * m[y];
            let f_right = -p[y + 1] * m[y + 1];
            flux[y + 1] = 0.5 * (f_left + f_right) - 0.5 / courant * (m[y + 1] - m[y]);
        }
        let mut next: Vec<f64> = (0..ny)
            .map(|y| m[y] - courant * (flux[y + 1] - flux[y]))
            .collect();

        for (y, v) in next.iter_mut().enumerate() {
            if *v < NEGATIVE_MASS_FLOOR {
                return Err(Error::SchemeFailure {
                    x: x + 1,
                    y,
                    value: *v,
                });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mass = compensated_sum(&next);
        max_step_drift = max_step_drift.max((mass - before).abs());
        if mass != 1.0 && mass > 0.0 {
            total_renormalization += (mass - 1.0).abs();
            next.iter_mut().for_each(|v| *v /= mass);
        }
        mean_field.row_mut(x + 1).copy_from_slice(&next);
    }

    Ok(FpkSolution {
        mean_field,
        max_step_drift,
        total_renormalization,
    })
}
