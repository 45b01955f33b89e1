use proptest::prelude::*;
use wpmfg_core::grid::compensated_sum;
use wpmfg_core::sim::{path_gain, step_batteries, PolicySource};
use wpmfg_core::solver::{fpk_forward_sweep, maximize_hamiltonian, scan_hamiltonian};
use wpmfg_core::{
    Field2D, GridSpec, MeanFieldUtility, NetworkParams, QuadratureSpec, UtilityModel,
};

fn model() -> &'static MeanFieldUtility {
    use std::sync::OnceLock;
    static MODEL: OnceLock<MeanFieldUtility> = OnceLock::new();
    MODEL.get_or_init(|| {
        MeanFieldUtility::new(NetworkParams::table_defaults(), QuadratureSpec::default()).unwrap()
    })
}

fn policy_field(grid: GridSpec, values: &[f64]) -> Field2D {
    let ny = grid.energy_points();
    Field2D::from_fn(grid, |x, y| {
        if y == 0 {
            0.0
        } else {
            values[(x * ny + y) % values.len()]
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transport_conserves_mass_and_sign(
        values in prop::collection::vec(0.0f64..=1.0, 1..200),
        weights in prop::collection::vec(0.0f64..1.0, 21),
    ) {
        let grid = GridSpec::new(1.0, 2.0, 40, 20).unwrap();
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-3);
        let m0: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let out = fpk_forward_sweep(&policy_field(grid, &values), &m0).unwrap();
        prop_assert!(out.max_step_drift <= 1e-6);
        for row in out.mean_field.rows() {
            prop_assert!(row.iter().all(|&m| m >= 0.0));
            prop_assert!((compensated_sum(row) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn transport_never_raises_mean_energy(values in prop::collection::vec(0.0f64..=1.0, 1..200)) {
        let grid = GridSpec::new(1.0, 2.0, 50, 50).unwrap();
        let m0 = wpmfg_core::initial_mean_field(&grid);
        let out = fpk_forward_sweep(&policy_field(grid, &values), &m0).unwrap();
        let centroid: Vec<f64> = out
            .mean_field
            .rows()
            .map(|r| r.iter().enumerate().map(|(y, m)| grid.energy(y) * m).sum())
            .collect();
        prop_assert!(centroid.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn battery_steps_account_for_energy(
        batteries in prop::collection::vec(0.0f64..=2.0, 1..50),
        power in 0.0f64..=1.0,
        steps in 1usize..200,
    ) {
        let mut e = batteries.clone();
        let mut used = vec![0.0; e.len()];
        for x in 0..steps {
            let p = step_batteries(&mut e, &PolicySource::Fixed(power), x as f64 * 0.01, 0.01);
            used.iter_mut().zip(&p).for_each(|(u, p)| *u += p * 0.01);
            prop_assert!(p.iter().all(|&p| (0.0..=power).contains(&p)));
        }
        for ((e0, e1), u) in batteries.iter().zip(&e).zip(&used) {
            prop_assert!(*e1 >= 0.0);
            prop_assert!((e0 - e1 - u).abs() <= 1e-12 * 2.0);
        }
    }

    #[test]
    fn interpolation_hits_nodes_and_stays_in_range(
        values in prop::collection::vec(-5.0f64..5.0, 1..100),
        x in 0usize..=10,
        y in 0usize..=8,
        t in -0.5f64..1.5,
        e in -0.5f64..2.5,
    ) {
        let grid = GridSpec::new(1.0, 2.0, 10, 8).unwrap();
        let field = Field2D::from_fn(grid, |i, j| values[(i * 9 + j) % values.len()]);
        prop_assert!((field.interpolate(grid.time(x), grid.energy(y)) - field.get(x, y)).abs() <= 1e-12 * 5.0);
        let v = field.interpolate(t, e);
        let lo = field.values().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = field.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn path_gain_is_bounded(r in 0.0f64..1e4, alpha in 2.01f64..6.0) {
        let g = path_gain(r, alpha);
        prop_assert!(g > 0.0 && g <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_never_loses_to_scan(ep in 0.0f64..=1.0, marginal in 0.0f64..2.0) {
        let m = model();
        let table = m.table(&m.interference(ep), 128).unwrap();
        let (_, scanned) = scan_hamiltonian(&table, marginal);
        let refined = maximize_hamiltonian(&table, marginal, m);
        prop_assert!(refined.value >= scanned.value);
        prop_assert!((0.0..=1.0).contains(&refined.power));
    }

    #[test]
    fn rates_are_monotone(p in 0.01f64..0.5, ep in 0.0f64..0.5) {
        let m = model();
        let i = m.interference(ep);
        let louder = m.interference(ep + 0.3);
        prop_assert_eq!(i.i_rru.to_bits(), i.i_ue.to_bits());
        prop_assert!(m.phi1(2.0 * p, i.i_ue).unwrap() > m.phi1(p, i.i_ue).unwrap());
        prop_assert!(m.phi1(p, louder.i_ue).unwrap() < m.phi1(p, i.i_ue).unwrap());
        prop_assert!(m.phi2(2.0 * p, i.i_rru).unwrap() < m.phi2(p, i.i_rru).unwrap());
        prop_assert!(m.phi2(p, louder.i_rru).unwrap() < m.phi2(p, i.i_rru).unwrap());
        prop_assert!(m.phi1(p, i.i_ue).unwrap() >= 0.0);
    }
}
