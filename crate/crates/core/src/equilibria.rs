//! Vertical equilibria, their linearization, and the pencil spectrum.
//!
//! An equilibrium is a sign tuple `s ∈ {−1, +1}ⁿ` with `qᵢ = sᵢe₃` and the
//! cart at rest. Near it the state is charted by
//!
//! ```text
//! x = x* + δx,   qᵢ = exp(ξ̂ᵢ)(sᵢe₃),   ωᵢ = C δωᵢ (tangent-projected)
//! ```
//!
//! with `ξᵢ = C (Cᵀξᵢ)` horizontal. The linear state is
//! `𝐱 = (δx, Cᵀξ₁, …, Cᵀξₙ) ∈ ℝ^{2n+2}` and obeys `𝐌𝐱̈ + 𝐆𝐱 = 𝐁u`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChainParams, InertiaModel, State};
use crate::numerics::{spd_pencil_eigs, Mat, Vec3, E3};

pub const MAX_ENUMERATED_LINKS: usize = 20;

/// Relative size below which a pencil eigenvalue counts as a zero mode.
pub const ZERO_MODE_RELATIVE: f64 = 1e-9;

/// Sign tuple and cart location of a vertical equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumSpec {
    signs: Vec<i8>,
    cart_position: [f64; 2],
}

impl EquilibriumSpec {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidEquilibrium("sign tuple is empty".into()));
        }
        if let Some((i, s)) = signs.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::InvalidEquilibrium(format!(
                "sign of link {} must be +1 or -1, got {s}",
                i + 1
            )));
        }
        Ok(Self {
            signs,
            cart_position: [0.0; 2],
        })
    }

    pub fn hanging(n: usize) -> Self {
        Self::new(vec![1; n.max(1)]).expect("valid signs")
    }

    pub fn inverted(n: usize) -> Self {
        Self::new(vec![-1; n.max(1)]).expect("valid signs")
    }

    pub fn with_cart_position(mut self, x: [f64; 2]) -> Self {
        self.cart_position = x;
        self
    }

    pub fn cart_position(&self) -> [f64; 2] {
        self.cart_position
    }

    pub fn n(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `sᵢ` as a float (0-based `i`).
    pub fn sign(&self, i: usize) -> f64 {
        f64::from(self.signs[i])
    }

    /// Equilibrium direction `sᵢe₃` of link `i`.
    pub fn direction(&self, i: usize) -> Vec3 {
        E3 * self.sign(i)
    }

    /// `−s`, same cart position.
    pub fn negated(&self) -> Self {
        Self {
            signs: self.signs.iter().map(|s| -s).collect(),
            cart_position: self.cart_position,
        }
    }
}

impl fmt::Display for EquilibriumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.signs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// All `2ⁿ` sign tuples in lexicographic order, `+1` before `−1`.
pub fn enumerate_equilibria(n: usize) -> Result<Vec<EquilibriumSpec>> {
    if n == 0 || n > MAX_ENUMERATED_LINKS {
        return Err(Error::InvalidArgument(format!(
            "can enumerate equilibria for 1..={MAX_ENUMERATED_LINKS} links, got {n}"
        )));
    }
    Ok((0..1usize << n)
        .map(|code| {
            let signs = (0..n)
                .map(|i| if code >> (n - 1 - i) & 1 == 0 { 1 } else { -1 })
                .collect();
            EquilibriumSpec::new(signs).expect("generated signs are valid")
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    /// Every link along gravity.
    Hanging,
    /// Every link against gravity.
    Inverted,
    /// Adjacent links alternate.
    Folded,
    Other,
}

pub fn classify(spec: &EquilibriumSpec) -> EquilibriumKind {
    let s = spec.signs();
    if s.iter().all(|&v| v == 1) {
        EquilibriumKind::Hanging
    } else if s.iter().all(|&v| v == -1) {
        EquilibriumKind::Inverted
    } else if s.windows(2).all(|w| w[0] == -w[1]) {
        EquilibriumKind::Folded
    } else {
        EquilibriumKind::Other
    }
}

pub fn equilibrium_state(spec: &EquilibriumSpec) -> State {
    let n = spec.n();
    State {
        x: spec.cart_position(),
        xdot: [0.0; 2],
        q: (0..n).map(|i| spec.direction(i)).collect(),
        omega: vec![Vec3::ZERO; n],
    }
}

/// Direction and rate errors `e_q = Σ‖qᵢ − sᵢe₃‖`, `e_ω = Σ‖ωᵢ‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackingErrors {
    pub e_q: f64,
    pub e_omega: f64,
}

/// Panics if `state` and `spec` disagree on the link count.
pub fn compute_errors(state: &State, spec: &EquilibriumSpec) -> TrackingErrors {
    assert_eq!(
        state.n(),
        spec.n(),
        "state and equilibrium link counts differ"
    );
    TrackingErrors {
        e_q: state
            .q
            .iter()
            .enumerate()
            .map(|(i, &q)| (q - spec.direction(i)).norm())
            .sum(),
        e_omega: state.omega.iter().map(|w| w.norm()).sum(),
    }
}

/// Second-order linear model `𝐌𝐱̈ + 𝐆𝐱 = 𝐁u` about an equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearModel {
    pub m: Mat,
    pub g: Mat,
    pub b: Mat,
}

impl LinearModel {
    pub fn n(&self) -> usize {
        (self.m.rows() - 2) / 2
    }

    /// `2n + 2`.
    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn m_xx(&self) -> Mat {
        self.m.block(0, 0, 2, 2)
    }

    pub fn m_xq(&self) -> Mat {
        self.m.block(0, 2, 2, self.dim() - 2)
    }

    pub fn m_qx(&self) -> Mat {
        self.m.block(2, 0, self.dim() - 2, 2)
    }

    pub fn m_qq(&self) -> Mat {
        self.m.block(2, 2, self.dim() - 2, self.dim() - 2)
    }

    pub fn g_qq(&self) -> Mat {
        self.g.block(2, 2, self.dim() - 2, self.dim() - 2)
    }
}

/// `Cᵀ ê₃ C`, a quarter turn in the horizontal plane.
fn quarter_turn() -> Mat {
    Mat::from_rows(&[[0.0, -1.0], [1.0, 0.0]])
}

pub fn linearize(
    params: &ChainParams,
    inertia: &InertiaModel,
    spec: &EquilibriumSpec,
) -> Result<LinearModel> {
    let n = params.n();
    if spec.n() != n || inertia.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "equilibrium has {} links, parameters {n}, inertia model {}",
            spec.n(),
            inertia.n()
        )));
    }
    let dim = 2 * n + 2;
    let i2 = Mat::identity(2);
    let turn = quarter_turn();
    let mut m = Mat::zeros(dim, dim);
    let mut g = Mat::zeros(dim, dim);

    m.set_block(0, 0, &i2.scale(inertia.m00));
    for i in 0..n {
        let si = spec.sign(i);
        // −sᵢ M₀ᵢ ê₃ C = −sᵢ (Σ_{a≥i} m_a lᵢ) Cᵀê₃C
        let m_xq = turn.scale(-si * inertia.cart_coupling[i]);
        m.set_block(0, 2 + 2 * i, &m_xq);
        m.set_block(2 + 2 * i, 0, &m_xq.transpose());
        for j in 0..n {
            let coupling = if i == j {
                inertia.m(i, i)
            } else {
                si * spec.sign(j) * inertia.m(i, j)
            };
            m.set_block(2 + 2 * i, 2 + 2 * j, &i2.scale(coupling));
        }
        g.set_block(
            2 + 2 * i,
            2 + 2 * i,
            &i2.scale(si * inertia.gravity_moment[i]),
        );
    }
    let mut b = Mat::zeros(dim, 2);
    b.set_block(0, 0, &i2);
    Ok(LinearModel { m, g, b })
}

/// Nonlinear state at chart coordinates `z = (𝐱, 𝐱̇)` of length `4n + 4`.
pub fn chart_state(spec: &EquilibriumSpec, z: &[f64]) -> Result<State> {
    let n = spec.n();
    if z.len() != 4 * n + 4 {
        return Err(Error::DimensionMismatch(format!(
            "chart coordinates for {n} links need {} entries, got {}",
            4 * n + 4,
            z.len()
        )));
    }
    let rates = 2 * n + 2;
    let x0 = spec.cart_position();
    let mut q = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    for i in 0..n {
        let xi = Vec3::new(z[2 + 2 * i], z[3 + 2 * i], 0.0);
        let angle = xi.norm();
        let qi = if angle > 0.0 {
            spec.direction(i).rotated(xi / angle, angle)
        } else {
            spec.direction(i)
        };
        let w = Vec3::new(z[rates + 2 + 2 * i], z[rates + 3 + 2 * i], 0.0);
        q.push(qi);
        omega.push(w - qi * qi.dot(w));
    }
    Ok(State {
        x: [x0[0] + z[0], x0[1] + z[1]],
        xdot: [z[rates], z[rates + 1]],
        q,
        omega,
    })
}

/// Inverse of [`chart_state`] on its domain (links within a half turn of
/// the equilibrium, tangent angular velocities).
pub fn chart_coordinates(spec: &EquilibriumSpec, state: &State) -> Result<Vec<f64>> {
    let n = spec.n();
    state.check_links(n)?;
    let rates = 2 * n + 2;
    let x0 = spec.cart_position();
    let mut z = vec![0.0; 4 * n + 4];
    z[0] = state.x[0] - x0[0];
    z[1] = state.x[1] - x0[1];
    z[rates] = state.xdot[0];
    z[rates + 1] = state.xdot[1];
    for i in 0..n {
        let base = spec.direction(i);
        let axis = base.cross(state.q[i]);
        let sin = axis.norm();
        let xi = if sin > 0.0 {
            axis * (sin.atan2(base.dot(state.q[i])) / sin)
        } else {
            Vec3::ZERO
        };
        z[2 + 2 * i] = xi.x;
        z[3 + 2 * i] = xi.y;
        z[rates + 2 + 2 * i] = state.omega[i].x;
        z[rates + 3 + 2 * i] = state.omega[i].y;
    }
    Ok(z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralClass {
    /// No positive `λ²`: oscillatory spectrum plus the cart zero modes.
    HangingStable,
    /// At least one positive `λ²`, i.e. a real pair `±λ`.
    Saddle,
    ZeroModesOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    /// Roots of `det(λ²𝐌 + 𝐆) = 0`, ascending.
    pub lambda_squared: Vec<f64>,
    pub classification: SpectralClass,
    pub zero_mode_count: usize,
}

pub fn pencil_spectrum(model: &LinearModel) -> Result<SpectralReport> {
    pencil_spectrum_with(model, ZERO_MODE_RELATIVE)
}

pub fn pencil_spectrum_with(model: &LinearModel, zero_relative: f64) -> Result<SpectralReport> {
    // 𝐆v = μ𝐌v with λ² = −μ
    let eig = spd_pencil_eigs(&model.g, &model.m)?;
    let mut lambda_squared: Vec<f64> = eig.values.iter().map(|mu| -mu).collect();
    lambda_squared.sort_by(f64::total_cmp);
    let scale = lambda_squared.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_tol = zero_relative * scale;
    let is_zero = |v: f64| v.abs() <= zero_tol;
    let zero_mode_count = lambda_squared.iter().filter(|&&v| is_zero(v)).count();
    let classification = if zero_mode_count == lambda_squared.len() {
        SpectralClass::ZeroModesOnly
    } else if lambda_squared.iter().any(|&v| v > zero_tol) {
        SpectralClass::Saddle
    } else {
        SpectralClass::HangingStable
    };
    Ok(SpectralReport {
        lambda_squared,
        classification,
        zero_mode_count,
    })
}
