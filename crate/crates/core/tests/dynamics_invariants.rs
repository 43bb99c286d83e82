mod common;

use chainpend::dynamics::{accelerations, simulate, vector_field, Schedule, Uncontrolled};
use chainpend::equilibria::{enumerate_equilibria, equilibrium_state, linearize, EquilibriumSpec};
use chainpend::model::{build_inertia, energies, ChainParams, State};
use chainpend::numerics::{solve_linear, Mat, Vec3, E3};
use common::{reference_params, StateSampler};

fn random_params(sampler: &mut StateSampler, n: usize) -> ChainParams {
    let mut draw = |lo: f64| lo + sampler.symmetric(1.0).abs();
    let masses = (0..n).map(|_| draw(0.05)).collect();
    let lengths = (0..n).map(|_| draw(0.05)).collect();
    ChainParams::new(draw(0.1), masses, lengths, 9.81).unwrap()
}

fn schedule(duration: f64, dt: f64) -> Schedule {
    Schedule {
        duration,
        dt,
        sample_every: 1,
    }
}

#[test]
fn every_equilibrium_is_stationary_for_small_chains() {
    let mut sampler = StateSampler::new(1);
    for n in 1..=5 {
        let params = random_params(&mut sampler, n);
        let inertia = build_inertia(&params);
        for spec in enumerate_equilibria(n).unwrap() {
            let spec = spec.with_cart_position([sampler.symmetric(3.0), sampler.symmetric(3.0)]);
            let f = vector_field(&params, &inertia, &equilibrium_state(&spec), [0.0; 2]).unwrap();
            assert!(f.max_abs() < 1e-12, "n={n} {spec}: {}", f.max_abs());
        }
    }
}

#[test]
fn energy_is_conserved_for_gentle_motion() {
    let mut sampler = StateSampler::new(2);
    for n in [1, 2, 3, 5] {
        let params = random_params(&mut sampler, n);
        let initial = sampler.state(n, 0.5);
        let traj = simulate(
            &params,
            &initial,
            &Uncontrolled,
            &schedule(2.0, 1e-3),
            &EquilibriumSpec::hanging(n),
        )
        .unwrap();
        let e0 = traj.samples[0].energies.total;
        let scale = e0.abs().max(traj.samples[0].energies.kinetic).max(1e-3);
        let drift = traj
            .samples
            .iter()
            .map(|s| (s.energies.total - e0).abs())
            .fold(0.0, f64::max);
        assert!(
            drift / scale < 1e-6,
            "n={n}: drift {drift:.3e} of {scale:.3e}"
        );
    }
}

#[test]
fn power_input_matches_energy_change() {
    let params = reference_params();
    let initial = equilibrium_state(&EquilibriumSpec::hanging(5));
    let force = [0.3, -0.2];
    let traj = simulate(
        &params,
        &initial,
        &|_t: f64, _s: &State| force,
        &schedule(1.0, 1e-4),
        &EquilibriumSpec::hanging(5),
    )
    .unwrap();
    let mut work = 0.0;
    for w in traj.samples.windows(2) {
        let power = |s: &State| force[0] * s.xdot[0] + force[1] * s.xdot[1];
        work += 0.5 * (power(&w[0].state) + power(&w[1].state)) * (w[1].t - w[0].t);
    }
    let gained = traj.last().unwrap().energies.total - traj.samples[0].energies.total;
    assert!(
        (gained - work).abs() < 1e-6 * work.abs().max(1e-3),
        "{gained} vs {work}"
    );
}

#[test]
fn planar_motion_stays_planar() {
    let params = reference_params();
    let tilt = |a: f64| Vec3::new(a.sin(), 0.0, a.cos());
    let initial = State {
        x: [0.0, 0.3],
        xdot: [0.4, 0.0],
        q: vec![tilt(0.3), tilt(2.0), tilt(-1.0), -E3, tilt(0.7)],
        omega: vec![
            Vec3::new(0.0, 1.5, 0.0),
            Vec3::ZERO,
            Vec3::new(0.0, -2.0, 0.0),
            Vec3::ZERO,
            Vec3::ZERO,
        ],
    };
    let traj = simulate(
        &params,
        &initial,
        &Uncontrolled,
        &schedule(3.0, 1e-3),
        &EquilibriumSpec::hanging(5),
    )
    .unwrap();
    for s in &traj.samples {
        assert_eq!(s.state.x[1], 0.3);
        assert_eq!(s.state.xdot[1], 0.0);
        assert!(s.state.q.iter().all(|q| q.y.abs() < 1e-12));
        assert!(s
            .state
            .omega
            .iter()
            .all(|w| w.x.abs() < 1e-12 && w.z.abs() < 1e-12));
    }
}

#[test]
fn single_link_small_oscillation_period() {
    let (m, m1, l, g) = (0.5, 0.1, 0.1, 9.81);
    let params = ChainParams::new(m, vec![m1], vec![l], g).unwrap();
    let a: f64 = 1f64.to_radians();
    let initial = State {
        x: [0.0; 2],
        xdot: [0.0; 2],
        q: vec![Vec3::new(a.sin(), 0.0, a.cos())],
        omega: vec![Vec3::ZERO],
    };
    let traj = simulate(
        &params,
        &initial,
        &Uncontrolled,
        &schedule(2.0, 1e-4),
        &EquilibriumSpec::hanging(1),
    )
    .unwrap();
    let crossings: Vec<f64> = traj
        .samples
        .windows(2)
        .filter(|w| w[0].state.q[0].x > 0.0 && w[1].state.q[0].x <= 0.0)
        .map(|w| {
            let (x0, x1) = (w[0].state.q[0].x, w[1].state.q[0].x);
            w[0].t + (w[1].t - w[0].t) * x0 / (x0 - x1)
        })
        .collect();
    let measured = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    let expected = 2.0 * std::f64::consts::PI / (g * (m + m1) / (m * l)).sqrt();
    assert!(crossings.len() >= 3);
    assert!(
        (measured - expected).abs() < 5e-3 * expected,
        "{measured} vs {expected}"
    );
}

#[test]
fn hanging_chain_stays_near_rest() {
    let params = reference_params();
    let spec = EquilibriumSpec::hanging(5);
    let mut initial = equilibrium_state(&spec);
    initial.q[2] = Vec3::new(0.05f64.sin(), 0.0, 0.05f64.cos());
    initial.omega[4] = Vec3::new(0.0, 0.2, 0.0);
    let traj = simulate(
        &params,
        &initial,
        &Uncontrolled,
        &Schedule {
            duration: 30.0,
            dt: 1e-3,
            sample_every: 10,
        },
        &spec,
    )
    .unwrap();
    let e0 = traj.samples[0].energies.total;
    for s in &traj.samples {
        assert!(s.e_q < 0.5, "t={} e_q={}", s.t, s.e_q);
        assert!((s.energies.total - e0).abs() < 1e-8);
    }
}

#[test]
fn forced_response_at_rest_is_linear_in_force() {
    let params = reference_params();
    let inertia = build_inertia(&params);
    for spec in enumerate_equilibria(5).unwrap() {
        let lin = linearize(&params, &inertia, &spec).unwrap();
        let gain = solve_linear(&lin.m, &lin.b).unwrap();
        let u = [0.7, -1.3];
        let acc = accelerations(&params, &inertia, &equilibrium_state(&spec), u).unwrap();
        let predicted = gain.mul_vec(&u);
        let mut got = acc.xddot.to_vec();
        for w in &acc.omegadot {
            got.extend([w.x, w.y]);
            assert!(w.z.abs() < 1e-12);
        }
        let err = got
            .iter()
            .zip(&predicted)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = Mat::column(&predicted).max_abs();
        assert!(err <= 1e-12 * scale, "{spec}: {err:.3e}");
    }
}

#[test]
fn energies_helper_agrees_with_samples() {
    let params = reference_params();
    let initial = StateSampler::new(9).state(5, 1.0);
    let traj = simulate(
        &params,
        &initial,
        &Uncontrolled,
        &schedule(0.01, 1e-3),
        &EquilibriumSpec::hanging(5),
    )
    .unwrap();
    for s in &traj.samples {
        assert_eq!(energies(&params, &s.state).unwrap().total, s.energies.total);
    }
}
