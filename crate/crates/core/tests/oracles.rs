//! Hand-derived values, frozen. Each is small enough to re-derive by hand
//! from the weight formula and the transition law.

use approx::assert_relative_eq;
use urnlab::checks::{bridge_target, check_var_at_tau, cross_check_var_at_tau, Tolerances};
use urnlab::oracle::exact_at_tau_blue;
use urnlab::urn::{conditional_drift, drift_residual, sequence_probability, Color};
use urnlab::walk::WalkState;
use urnlab::weights::odd_even_asymptote;
use urnlab::*;

fn specific(alpha: f64) -> WeightFunction {
    WeightFunction::specific(alpha).unwrap()
}

#[test]
fn weight_values() {
    let wf = WeightFunction::perturbed(2.0, 0.5).unwrap();
    assert_relative_eq!(wf.weight(10), 1.0 / 110.0, max_relative = 1e-15);
    let wf = WeightFunction::perturbed(3.0, 0.0).unwrap();
    assert_relative_eq!(wf.log_weight(1_000_000), -18.0 * 10f64.ln(), max_relative = 1e-14);
    // 1/w(n) = n + 1 for the specific family at alpha = 1
    let wf = specific(1.0);
    for n in 0..20 {
        assert_relative_eq!(wf.inv_weight(n), n as f64 + 1.0, max_relative = 1e-15);
    }
}

#[test]
fn series_values() {
    assert_relative_eq!(odd_even_series(&specific(1.0), 2), 2.0, max_relative = 1e-15);
    let ratio = odd_even_series(&specific(1.0), 1_000_000) / odd_even_asymptote(1.0, 1_000_000);
    assert!((ratio - 1.0).abs() < 0.01);
}

#[test]
fn first_step_probabilities() {
    let plus = UrnSpec::new(Side::Plus, specific(1.0));
    assert_relative_eq!(
        step_prob_red(&plus, UrnState::new(0, 0)),
        2.0 / 3.0,
        max_relative = 1e-15
    );
    let zero = UrnSpec::new(Side::Zero, specific(1.0));
    assert_relative_eq!(
        step_prob_red(&zero, UrnState::new(1, 0)),
        3.0 / 4.0,
        max_relative = 1e-15
    );
    assert_relative_eq!(
        sequence_probability(&plus, &[Color::Red]),
        2.0 / 3.0,
        max_relative = 1e-15
    );
}

#[test]
fn two_draw_zero_urn() {
    let zero = UrnSpec::new(Side::Zero, specific(1.0));
    let d = exact_after_n(&zero, 2).unwrap();
    let p0: f64 = d.discrepancy_pmf().iter().filter(|(x, _)| *x == 0).map(|p| p.1).sum();
    assert_relative_eq!(p0, 0.75, max_relative = 1e-15);
}

#[test]
fn drift_at_balanced_plus_state() {
    // b = w(11) = 1/12, r = w(10) = 1/11: drift (1/11 - 1/12)/(1/11 + 1/12) = 1/23
    let plus = UrnSpec::new(Side::Plus, specific(1.0));
    let s = UrnState::new(5, 5);
    assert_relative_eq!(conditional_drift(&plus, s), 1.0 / 23.0, max_relative = 1e-14);
    assert_relative_eq!(drift_residual(&plus, s).unwrap(), 1.0 / 23.0, max_relative = 1e-14);
}

#[test]
fn walk_step_after_two_crossings() {
    // l(X) = 2 and l(X-1) = 0: w(2)/(w(2) + w(0)) = (1/3)/(1/3 + 1)
    let mut w = WalkState::new();
    w.apply(1);
    w.apply(-1);
    assert_eq!((w.position, w.local_time(0), w.local_time(-1)), (0, 2, 0));
    assert_relative_eq!(w.prob_right(&specific(1.0)), 0.25, max_relative = 1e-15);
}

#[test]
fn first_visit_right_of_origin() {
    // X = 1 reached for the first time: l(1) = 0, l(0) = 1
    let mut w = WalkState::new();
    w.apply(1);
    let wf = specific(1.0);
    let expected = wf.weight(0) / (wf.weight(1) + wf.weight(0));
    assert_relative_eq!(w.prob_right(&wf), expected, max_relative = 1e-15);
}

#[test]
fn bridge_factors() {
    assert_relative_eq!(bridge_target(1.0, 1, 1, 2), 7.0 / 3.0, max_relative = 1e-15);
    assert_relative_eq!(bridge_target(0.5, 1, 1, 2), 1.5, max_relative = 1e-15);
}

#[test]
fn limit_targets() {
    assert_relative_eq!(Side::Plus.mean_at_tau_limit(1.0), 1.0 / 6.0, max_relative = 1e-15);
    assert_relative_eq!(Side::Minus.mean_at_tau_limit(1.0), -5.0 / 6.0, max_relative = 1e-15);
    assert_relative_eq!(Side::Zero.mean_at_tau_limit(1.0), -1.0 / 3.0, max_relative = 1e-15);
    assert_relative_eq!(Side::Zero.mean_at_tau_limit(2.0), -0.4, max_relative = 1e-15);
}

#[test]
fn srw_tau_law() {
    // constant weights: reds before the n-th blue are NegBin(n, 1/2), so
    // E[D] = 0 and Var(D) = 2n
    let spec = UrnSpec::new(Side::Zero, WeightFunction::constant());
    let d = exact_at_tau_blue(&spec, 50, 1e-14).unwrap();
    assert!(d.mean_discrepancy().abs() < 1e-10);
    assert_relative_eq!(d.variance_discrepancy(), 100.0, max_relative = 1e-10);
    assert!(d.truncation_bound() <= 1e-14);
}

#[test]
fn tau_variance_tracks_limit_and_mc() {
    let spec = UrnSpec::new(Side::Plus, specific(1.0));
    let tol = Tolerances::default();
    let mc = MonteCarlo::new(11, 1);
    let exact = check_var_at_tau(&spec, 2048, 1, &mc, &tol).unwrap();
    assert_eq!(exact.method, Method::ExactDp);
    assert!((exact.observed - 1.0 / 3.0).abs() < 0.02);
    let cross = cross_check_var_at_tau(&spec, 2048, 10_000, &mc, &tol).unwrap();
    assert!(cross.pass, "{cross:?}");
}

#[test]
fn tau_variance_falls_back_to_mc_above_the_cap() {
    let spec = UrnSpec::new(Side::Zero, WeightFunction::constant());
    let mc = MonteCarlo::new(12, 1);
    let v = check_var_at_tau(&spec, 20_000, 2000, &mc, &Tolerances::default()).unwrap();
    assert_eq!(v.method, Method::MonteCarlo);
    assert_eq!(v.target_value, 1.0);
    assert!(v.pass, "{v:?}");
}

#[test]
fn srw_endpoint_variance() {
    let spec = UrnSpec::new(Side::Zero, WeightFunction::constant());
    let mc = MonteCarlo::new(3, 1);
    let d = urnlab::checks::sample_discrepancies(&spec, &[100], 1_000_000, &mc, "srw");
    let s = streaming_moments(d.column(100).unwrap().into_iter().map(|x| x as f64)).unwrap();
    assert!((s.variance - 100.0).abs() <= 3.0 * s.stderr_variance, "{s:?}");
}
