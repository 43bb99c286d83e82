//! Equations of motion in angular-velocity form and their integration.
//!
//! Unknowns are the cart acceleration `ẍ ∈ ℝ²` and the link angular
//! accelerations `ω̇ᵢ ∈ ℝ³`, stacked into a `(3n + 2)` linear system:
//!
//! ```text
//! ⎡ M₀₀I₂     −M₀₁q̂₁     ⋯  −M₀ₙq̂ₙ  ⎤ ⎡ ẍ  ⎤   ⎡ Σⱼ M₀ⱼ‖ωⱼ‖²qⱼ + u             ⎤
//! ⎢ q̂₁M₁₀     M₁₁I₃      ⋯  −M₁ₙq̂₁q̂ₙ⎥ ⎢ ω̇₁ ⎥ = ⎢ Σⱼ M₁ⱼ‖ωⱼ‖²q̂₁qⱼ + W₁ q̂₁e₃    ⎥
//! ⎢   ⋮                  ⋱           ⎥ ⎢ ⋮  ⎥   ⎢   ⋮                          ⎥
//! ⎣ q̂ₙMₙ₀   −Mₙ₁q̂ₙq̂₁    ⋯  MₙₙI₃    ⎦ ⎣ ω̇ₙ ⎦   ⎣ Σⱼ Mₙⱼ‖ωⱼ‖²q̂ₙqⱼ + Wₙ q̂ₙe₃    ⎦
//! ```
//!
//! with `Wᵢ = Σ_{a≥i} m_a g lᵢ`, closed by the kinematics `q̇ᵢ = ωᵢ × qᵢ`.
//! The `j = i` terms on the right vanish because `q̂ᵢqᵢ = 0`; they are summed
//! anyway so the code follows the displayed equation.

use serde::Serialize;

use crate::equilibria::{compute_errors, EquilibriumSpec};
use crate::error::{Error, Result};
use crate::model::{
    energies_with, project_state, validate_state, ChainParams, Energies, InertiaModel, State,
};
use crate::numerics::{hat, solve_linear, Mat, Vec3, E3};

/// Left-hand matrix and right-hand side of the angular-velocity form.
#[derive(Clone, Debug)]
pub struct SystemMatrices {
    pub a: Mat,
    pub b: Vec<f64>,
}

/// Cart and link accelerations.
#[derive(Clone, Debug, PartialEq)]
pub struct Accelerations {
    pub xddot: [f64; 2],
    pub omegadot: Vec<Vec3>,
}

/// Time derivative of a [`State`] in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub xdot: [f64; 2],
    pub xddot: [f64; 2],
    pub qdot: Vec<Vec3>,
    pub omegadot: Vec<Vec3>,
}

impl Derivative {
    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        let cart = self
            .xdot
            .iter()
            .chain(&self.xddot)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        self.qdot
            .iter()
            .chain(&self.omegadot)
            .flat_map(|v| v.to_array())
            .fold(cart, |m, v| m.max(v.abs()))
    }
}

fn cart_link_block(inertia: &InertiaModel, j: usize, qhat: &Mat) -> Mat {
    &inertia.m0i[j] * qhat
}

pub fn assemble_system(
    params: &ChainParams,
    inertia: &InertiaModel,
    state: &State,
    u: [f64; 2],
) -> Result<SystemMatrices> {
    let n = params.n();
    state.check_links(n)?;
    if inertia.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "inertia model has {} links, parameters have {n}",
            inertia.n()
        )));
    }
    let dim = 3 * n + 2;
    let mut a = Mat::zeros(dim, dim);
    let mut b = vec![0.0; dim];
    let link = |i: usize| 2 + 3 * i;

    let qhat: Vec<Mat> = state.q.iter().map(|&q| hat(q)).collect();
    let w2: Vec<f64> = state.omega.iter().map(|w| w.norm_squared()).collect();

    // Cart rows.
    a[(0, 0)] = inertia.m00;
    a[(1, 1)] = inertia.m00;
    b[0] = u[0];
    b[1] = u[1];
    for j in 0..n {
        a.set_block(
            0,
            link(j),
            &cart_link_block(inertia, j, &qhat[j]).scale(-1.0),
        );
        let c = inertia.cart_coupling[j] * w2[j];
        b[0] += c * state.q[j].x;
        b[1] += c * state.q[j].y;
    }

    // Link rows.
    for i in 0..n {
        let r = link(i);
        a.set_block(r, 0, &(&qhat[i] * &inertia.m0i[i].transpose()));
        for j in 0..n {
            if i == j {
                a.set_block(r, r, &Mat::identity(3).scale(inertia.m(i, i)));
            } else {
                a.set_block(r, link(j), &(&qhat[i] * &qhat[j]).scale(-inertia.m(i, j)));
            }
        }
        let mut rhs = state.q[i].cross(E3) * inertia.gravity_moment[i];
        for j in 0..n {
            rhs += state.q[i].cross(state.q[j]) * (inertia.m(i, j) * w2[j]);
        }
        b[r] = rhs.x;
        b[r + 1] = rhs.y;
        b[r + 2] = rhs.z;
    }
    Ok(SystemMatrices { a, b })
}

/// Solves the assembled system for `ẍ` and `ω̇ᵢ`; each `ω̇ᵢ` is projected
/// onto the tangent plane at `qᵢ`.
pub fn accelerations(
    params: &ChainParams,
    inertia: &InertiaModel,
    state: &State,
    u: [f64; 2],
) -> Result<Accelerations> {
    let sys = assemble_system(params, inertia, state, u)?;
    let sol = solve_linear(&sys.a, &Mat::column(&sys.b))?.into_vec();
    let omegadot = state
        .q
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let r = 2 + 3 * i;
            let wd = Vec3::new(sol[r], sol[r + 1], sol[r + 2]);
            wd - q * (q.dot(wd) / q.norm_squared())
        })
        .collect();
    Ok(Accelerations {
        xddot: [sol[0], sol[1]],
        omegadot,
    })
}

pub fn vector_field(
    params: &ChainParams,
    inertia: &InertiaModel,
    state: &State,
    u: [f64; 2],
) -> Result<Derivative> {
    let acc = accelerations(params, inertia, state, u)?;
    Ok(Derivative {
        xdot: state.xdot,
        xddot: acc.xddot,
        qdot: (0..state.n()).map(|i| state.qdot(i)).collect(),
        omegadot: acc.omegadot,
    })
}

/// A horizontal force law `u(t, state)` (N).
pub trait Controller {
    fn force(&self, t: f64, state: &State) -> [f64; 2];
}

impl<F> Controller for F
where
    F: Fn(f64, &State) -> [f64; 2],
{
    fn force(&self, t: f64, state: &State) -> [f64; 2] {
        self(t, state)
    }
}

/// `u ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Uncontrolled;

impl Controller for Uncontrolled {
    fn force(&self, _t: f64, _state: &State) -> [f64; 2] {
        [0.0; 2]
    }
}

fn displaced(state: &State, d: &Derivative, h: f64) -> State {
    State {
        x: [state.x[0] + h * d.xdot[0], state.x[1] + h * d.xdot[1]],
        xdot: [
            state.xdot[0] + h * d.xddot[0],
            state.xdot[1] + h * d.xddot[1],
        ],
        q: state
            .q
            .iter()
            .zip(&d.qdot)
            .map(|(&q, &v)| q + v * h)
            .collect(),
        omega: state
            .omega
            .iter()
            .zip(&d.omegadot)
            .map(|(&w, &v)| w + v * h)
            .collect(),
    }
}

/// One classical Runge–Kutta step on `(x, ẋ, qᵢ, ωᵢ)` followed by
/// [`project_state`]. The controller is sampled at every stage.
pub fn step_rk4<C: Controller + ?Sized>(
    params: &ChainParams,
    inertia: &InertiaModel,
    state: &State,
    controller: &C,
    t: f64,
    dt: f64,
) -> Result<State> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let field = |t: f64, s: &State| vector_field(params, inertia, s, controller.force(t, s));
    let k1 = field(t, state)?;
    let k2 = field(t + 0.5 * dt, &displaced(state, &k1, 0.5 * dt))?;
    let k3 = field(t + 0.5 * dt, &displaced(state, &k2, 0.5 * dt))?;
    let k4 = field(t + dt, &displaced(state, &k3, dt))?;

    let h = dt / 6.0;
    let combine = |a: f64, b: f64, c: f64, d: f64| h * (a + 2.0 * b + 2.0 * c + d);
    let combine3 = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| (a + b * 2.0 + c * 2.0 + d) * h;
    let next = State {
        x: [
            state.x[0] + combine(k1.xdot[0], k2.xdot[0], k3.xdot[0], k4.xdot[0]),
            state.x[1] + combine(k1.xdot[1], k2.xdot[1], k3.xdot[1], k4.xdot[1]),
        ],
        xdot: [
            state.xdot[0] + combine(k1.xddot[0], k2.xddot[0], k3.xddot[0], k4.xddot[0]),
            state.xdot[1] + combine(k1.xddot[1], k2.xddot[1], k3.xddot[1], k4.xddot[1]),
        ],
        q: (0..state.n())
            .map(|i| state.q[i] + combine3(k1.qdot[i], k2.qdot[i], k3.qdot[i], k4.qdot[i]))
            .collect(),
        omega: (0..state.n())
            .map(|i| {
                state.omega[i]
                    + combine3(
                        k1.omegadot[i],
                        k2.omegadot[i],
                        k3.omegadot[i],
                        k4.omegadot[i],
                    )
            })
            .collect(),
    };
    project_state(&next)
}

/// Duration, step and sampling stride of a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Schedule {
    /// s
    pub duration: f64,
    /// s
    pub dt: f64,
    /// Record every `sample_every`-th step (plus the first and last).
    pub sample_every: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            duration: 10.0,
            dt: 1e-3,
            sample_every: 10,
        }
    }
}

impl Schedule {
    pub fn steps(&self) -> usize {
        ((self.duration / self.dt).round() as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument(
                "sample_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded instant of a simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    pub u: [f64; 2],
    pub energies: Energies,
    /// `Σ‖qᵢ − sᵢe₃‖` against the reference equilibrium.
    pub e_q: f64,
    /// `Σ‖ωᵢ‖`.
    pub e_omega: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub n: usize,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Tolerance on the sphere constraints of an initial state.
pub const INITIAL_STATE_TOL: f64 = 1e-9;

/// Integrates from `initial` and records samples on the given schedule.
///
/// `reference` only feeds the recorded error metrics.
pub fn simulate<C: Controller + ?Sized>(
    params: &ChainParams,
    initial: &State,
    controller: &C,
    schedule: &Schedule,
    reference: &EquilibriumSpec,
) -> Result<Trajectory> {
    schedule.validate()?;
    let n = params.n();
    initial.check_links(n)?;
    if reference.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "reference equilibrium has {} links, model has {n}",
            reference.n()
        )));
    }
    if let Some(v) = validate_state(initial, INITIAL_STATE_TOL).first() {
        return Err(Error::InvalidArgument(format!(
            "initial state violates {:?} on link {} by {:e}",
            v.kind,
            v.link + 1,
            v.magnitude
        )));
    }
    let inertia = crate::model::build_inertia(params);
    let steps = schedule.steps();
    let record = |k: usize, state: &State| {
        let t = k as f64 * schedule.dt;
        let errors = compute_errors(state, reference);
        Sample {
            t,
            u: controller.force(t, state),
            energies: energies_with(params, &inertia, state),
            e_q: errors.e_q,
            e_omega: errors.e_omega,
            state: state.clone(),
        }
    };

    let mut state = project_state(initial)?;
    let mut samples = Vec::with_capacity(steps / schedule.sample_every + 2);
    samples.push(record(0, &state));
    for k in 1..=steps {
        let t = (k - 1) as f64 * schedule.dt;
        state = step_rk4(params, &inertia, &state, controller, t, schedule.dt)?;
        if k % schedule.sample_every == 0 || k == steps {
            samples.push(record(k, &state));
        }
    }
    Ok(Trajectory { n, samples })
}
