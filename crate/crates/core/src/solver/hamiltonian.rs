//! Pointwise maximization of `U(p) - p·∂V/∂e` over `p ∈ [0, p_max]`.

use crate::utility::{UtilityModel, UtilityTable};

/// Golden-section refinement stops once the bracket is this fraction of `p_max`.
pub const REFINE_TOLERANCE: f64 = 2e-5;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMax {
    pub power: f64,
    pub value: f64,
}

/// Best scan point; ties go to the smaller power.
pub fn scan_hamiltonian(table: &UtilityTable, marginal_value: f64) -> (usize, HamiltonianMax) {
    let mut best = 0;
    let mut best_value = table.u_values[0];
    for (j, (&p, &u)) in table.p_grid.iter().zip(&table.u_values).enumerate().skip(1) {
        let h = u - p * marginal_value;
        if h > best_value {
            best = j;
            best_value = h;
        }
    }
    (
        best,
        HamiltonianMax {
            power: table.p_grid[best],
            value: best_value,
        },
    )
}

/// Scan the table, then refine with one golden-section pass on the
/// interval between the neighbours of the best scan point.
pub fn maximize_hamiltonian<M: UtilityModel + ?Sized>(
    table: &UtilityTable,
    marginal_value: f64,
    model: &M,
) -> HamiltonianMax {
    let (j, scanned) = scan_hamiltonian(table, marginal_value);
    if !marginal_value.is_finite() {
        return scanned;
    }
    let last = table.p_grid.len() - 1;
    let lo = table.p_grid[j.saturating_sub(1)];
    let hi = table.p_grid[(j + 1).min(last)];
    let h = |p: f64| model.utility(p, &table.interference) - p * marginal_value;
    let refined = golden_section_max(h, lo, hi, REFINE_TOLERANCE * table.p_max());
    if refined.value > scanned.value {
        refined
    } else {
        scanned
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> HamiltonianMax {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        // keep the lower sub-interval on ties
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        HamiltonianMax {
            power: c,
            value: fc,
        }
    } else {
        HamiltonianMax {
            power: d,
            value: fd,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::{MeanInterference, UtilityModel};

    /// Concave test utility with its peak at `peak`.
    struct Parabola {
        peak: f64,
    }

    impl UtilityModel for Parabola {
        fn p_max(&self) -> f64 {
            1.0
        }
        fn interference(&self, _: f64) -> MeanInterference {
            MeanInterference::silent()
        }
        fn utility(&self, p: f64, _: &MeanInterference) -> f64 {
            1.0 - (p - self.peak).powi(2)
        }
    }

    #[test]
    fn infinite_energy_price_stops_transmission() {
        let model = Parabola { peak: 0.7 };
        let table = model.table(&MeanInterference::silent(), 128).unwrap();
        let best = maximize_hamiltonian(&table, f64::INFINITY, &model);
        assert_eq!(best.power, 0.0);
        let best = maximize_hamiltonian(&table, 1e9, &model);
        assert_eq!(best.power, 0.0);
    }

    #[test]
    fn free_energy_finds_unconstrained_peak() {
        let model = Parabola { peak: 0.4321 };
        let table = model.table(&MeanInterference::silent(), 128).unwrap();
        let best = maximize_hamiltonian(&table, 0.0, &model);
        assert!((best.power - 0.4321).abs() < 1e-5, "{best:?}");
    }

    #[test]
    fn linear_price_shifts_peak() {
        // 1 - (p - 0.6)^2 - 0.4 p peaks at 0.4
        let model = Parabola { peak: 0.6 };
        let table = model.table(&MeanInterference::silent(), 16).unwrap();
        let best = maximize_hamiltonian(&table, 0.4, &model);
        assert!((best.power - 0.4).abs() < 1e-5, "{best:?}");
    }

    #[test]
    fn flat_utility_breaks_ties_low() {
        struct Flat;
        impl UtilityModel for Flat {
            fn p_max(&self) -> f64 {
                1.0
            }
            fn interference(&self, _: f64) -> MeanInterference {
                MeanInterference::silent()
            }
            fn utility(&self, _: f64, _: &MeanInterference) -> f64 {
                0.0
            }
        }
        let table = Flat.table(&MeanInterference::silent(), 32).unwrap();
        assert_eq!(maximize_hamiltonian(&table, 0.0, &Flat).power, 0.0);
    }
}
