//! Neumann runs through the even extension.

use std::f64::consts::PI;

use sdflow::flow::{FlowParams, Integrator};
use sdflow::neumann::{check_neumann, even_extend, restrict, run_neumann, NeumannField};

#[test]
fn adaptive_run_tracks_the_plain_periodic_run() {
    let ext = NeumannField::extended_grid(PI, 1.5, 32, 32).unwrap();
    let rho0 = NeumannField::from_fn(&ext, |x, t| 0.05 * x.cos() * (1.0 + t.cos()) + 0.02 * (2.0 * x).cos());
    let p = FlowParams { t_end: 3.0, ..FlowParams::default() };
    let out = run_neumann(&rho0, p.clone()).unwrap();
    let plain = Integrator::new(&ext, p).unwrap().run(&even_extend(&rho0)).unwrap();
    let plain_half = restrict(&plain.final_state.rho).unwrap();
    assert_eq!(out.outcome.event, plain.event);
    assert!(out.final_half.max_abs_diff(&plain_half) <= 1e-6);
    assert!(out.max_asymmetry <= 1e-8);
    assert!(out.max_boundary_ratio <= 1e-6, "{}", out.max_boundary_ratio);
    let check = check_neumann(&out.final_half);
    assert!(check.max() <= 1e-6 * out.final_half.sup_norm().max(1e-3));
}

#[test]
fn thin_cylinder_grows_at_the_linear_rate() {
    let (r, a) = (0.8, PI);
    let ext = NeumannField::extended_grid(a, r, 16, 16).unwrap();
    let amp = 1e-4;
    let rho0 = NeumannField::from_fn(&ext, |x, _| amp * x.cos());
    let dt = 1e-3;
    let p = FlowParams { t_end: 2.0, dt0: dt, dt_max: dt, adaptive: false, ..FlowParams::default() };
    let out = run_neumann(&rho0, p).unwrap();
    let rate = (out.final_half.sup_norm() / amp).ln() / 2.0;
    // cos x on [0, pi]: q = 1, so lambda = 1/r^2 - 1
    let lambda = 1.0 / (r * r) - 1.0;
    assert!((rate - lambda).abs() <= 0.01 * lambda, "rate {rate} vs {lambda}");
}

#[test]
fn sin_modes_are_not_neumann_states() {
    let ext = NeumannField::extended_grid(PI, 1.0, 16, 8).unwrap();
    let f = NeumannField::from_fn(&ext, |x, _| 0.1 * (0.5 * x).sin());
    let check = check_neumann(&f);
    assert!(check.d1_0 > 1e-3);
}
