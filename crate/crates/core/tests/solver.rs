use wpmfg_core::grid::compensated_sum;
use wpmfg_core::solver::hjb_backward_sweep;
use wpmfg_core::{
    psi_trajectory, solve_emfg, terminal_value, Equilibrium, Field2D, GridSpec, MeanFieldUtility,
    MeanInterference, NetworkParams, QuadratureSpec, SolverConfig, UplinkSignal, UtilityModel,
};

struct ZeroUtility;

impl UtilityModel for ZeroUtility {
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
    fn utility(&self, _: f64, _: &MeanInterference) -> f64 {
        0.0
    }
}

fn grid() -> GridSpec {
    GridSpec::new(1.0, 2.0, 100, 100).unwrap()
}

fn check_invariants(eq: &Equilibrium, config: &SolverConfig) {
    eq.policy.check_policy(1.0).unwrap();
    eq.mean_field.check_mean_field(1e-6).unwrap();
    if eq.converged {
        assert!(eq.final_residual <= config.tolerance);
    }
    assert!(eq.max_step_drift <= 1e-6);
    assert!(eq.total_renormalization <= 1e-4);
    let c = eq.energy_centroid();
    assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn empty_game_has_zero_value_and_psi() {
    let config = SolverConfig {
        terminal_coeff_a: 0.0,
        ..Default::default()
    };
    let eq = solve_emfg(grid(), &ZeroUtility, &config).unwrap();
    assert!(eq.converged);
    assert!(eq.value.values().iter().all(|&v| v == 0.0));
    assert!(eq.policy.values().iter().all(|&p| p == 0.0));
    assert!(psi_trajectory(&eq, &ZeroUtility)
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    check_invariants(&eq, &config);
}

fn assert_self_consistent(model: &MeanFieldUtility) {
    let config = SolverConfig::default();
    let eq = solve_emfg(grid(), model, &config).unwrap();
    assert!(eq.converged, "residuals {:?}", eq.residual_history);
    check_invariants(&eq, &config);
    let terminal = terminal_value(&grid(), config.terminal_coeff_a, config.terminal_coeff_b);
    let again = hjb_backward_sweep(&eq.mean_field, &eq.policy, &terminal, model, &config).unwrap();
    let step = model.p_max() / config.power_scan_points as f64;
    let gap = again.policy.sup_distance(&eq.policy);
    assert!(gap <= step, "best response moved by {gap}");
}

#[test]
fn equilibrium_is_a_best_response_to_itself() {
    let model =
        MeanFieldUtility::new(NetworkParams::table_defaults(), QuadratureSpec::default()).unwrap();
    assert_self_consistent(&model);
}

#[test]
fn transmitting_equilibrium_is_a_best_response_to_itself() {
    let params = NetworkParams {
        uplink_signal: UplinkSignal::RruTransmit,
        ..NetworkParams::table_defaults()
    };
    let model = MeanFieldUtility::new(params, QuadratureSpec::default()).unwrap();
    assert_self_consistent(&model);
}

#[test]
fn terminal_price_caps_last_step_power() {
    // a positive energy price can only lower the chosen power
    let model = MeanFieldUtility::new(
        NetworkParams {
            uplink_signal: UplinkSignal::RruTransmit,
            ..NetworkParams::table_defaults()
        },
        QuadratureSpec::default(),
    )
    .unwrap();
    let g = grid();
    let m = Field2D::from_fn(g, |_, _| 1.0 / 101.0);
    let interference_policy = Field2D::from_fn(g, |_, y| if y == 0 { 0.0 } else { 1.0 });
    let config = SolverConfig::default();
    let priced = terminal_value(&g, 0.05, 1.0);
    let free = vec![0.0; 101];
    let a = hjb_backward_sweep(&m, &interference_policy, &priced, &model, &config).unwrap();
    let b = hjb_backward_sweep(&m, &interference_policy, &free, &model, &config).unwrap();
    for y in 1..=100 {
        assert!(a.policy.get(100, y) <= b.policy.get(100, y) + 1e-12);
    }
    assert!((compensated_sum(m.row(0)) - 1.0).abs() < 1e-12);
}
