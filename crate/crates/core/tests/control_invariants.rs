mod common;

use chainpend::control::{
    block_weights, closed_loop_spectrum, controllability, feedback_force, lqr_design,
    reduced_subsystem, GainSet, RANK_RELATIVE,
};
use chainpend::equilibria::{chart_state, enumerate_equilibria, linearize, EquilibriumSpec};
use chainpend::model::build_inertia;
use chainpend::numerics::{Mat, E3};
use common::{reference_params, StateSampler, PARTIALLY_FOLDED};

fn design_abscissa(signs: &[i8], blocks: [f64; 4]) -> f64 {
    let params = reference_params();
    let spec = EquilibriumSpec::new(signs.to_vec()).unwrap();
    let lin = linearize(&params, &build_inertia(&params), &spec).unwrap();
    let q = block_weights(5, blocks[0], blocks[1], blocks[2], blocks[3]);
    let design = lqr_design(&lin, &q, &Mat::identity(2)).unwrap();
    closed_loop_spectrum(&lin, &design.gains)
        .unwrap()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn hanging_design_regression() {
    let re = design_abscissa(&[1; 5], [8.0, 1.0, 8.0, 1.0]);
    assert!(re < -0.05);
    assert!((re - -1.0778).abs() < 5e-4, "{re}");
}

#[test]
fn partially_folded_design_regression() {
    let re = design_abscissa(&PARTIALLY_FOLDED, [1.0, 8.0, 1.0, 8.0]);
    assert!(re < -0.05);
    assert!((re - -0.7714).abs() < 5e-4, "{re}");
}

#[test]
fn feedback_matches_linear_law_to_second_order() {
    let mut sampler = StateSampler::new(5);
    let k = Mat::from_row_major(2, 24, (0..48).map(|_| sampler.symmetric(10.0)).collect());
    let gains = GainSet::unstack(&k).unwrap();
    let z: Vec<f64> = (0..24).map(|_| sampler.symmetric(1.0)).collect();
    for signs in [[1i8; 5], PARTIALLY_FOLDED] {
        let spec = EquilibriumSpec::new(signs.to_vec())
            .unwrap()
            .with_cart_position([0.4, -0.2]);
        let mismatch = |eps: f64| {
            let scaled: Vec<f64> = z.iter().map(|v| v * eps).collect();
            let u = feedback_force(&gains, &spec, &chart_state(&spec, &scaled).unwrap());
            let linear = k.mul_vec(&scaled);
            ((u[0] + linear[0]).powi(2) + (u[1] + linear[1]).powi(2)).sqrt()
        };
        let (coarse, fine) = (mismatch(1e-2), mismatch(5e-3));
        assert!(coarse / fine > 3.5, "{coarse:.3e} / {fine:.3e}");
    }
}

#[test]
fn link_stiffness_is_invertible_everywhere() {
    let params = reference_params();
    let inertia = build_inertia(&params);
    for spec in enumerate_equilibria(5).unwrap() {
        let lin = linearize(&params, &inertia, &spec).unwrap();
        let cert = controllability(&lin, RANK_RELATIVE).unwrap();
        assert!(cert.g_qq_invertible, "{spec}");
        let sub = reduced_subsystem(&lin);
        assert_eq!(sub.g_qq.rows(), 10);
    }
}

#[test]
fn feedback_vanishes_at_target() {
    let mut sampler = StateSampler::new(6);
    let k = Mat::from_row_major(2, 24, (0..48).map(|_| sampler.symmetric(10.0)).collect());
    let gains = GainSet::unstack(&k).unwrap();
    let spec = EquilibriumSpec::new(PARTIALLY_FOLDED.to_vec())
        .unwrap()
        .with_cart_position([1.0, 2.0]);
    let at_rest = chart_state(&spec, &[0.0; 24]).unwrap();
    assert_eq!(feedback_force(&gains, &spec, &at_rest), [0.0, 0.0]);
    assert_eq!(at_rest.q[3], E3);
}
