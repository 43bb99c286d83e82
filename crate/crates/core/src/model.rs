//! Physical parameters, inertia constants, energies and state constraints.
//!
//! Each link is a massless rod of length `lᵢ` carrying a point mass `mᵢ` at
//! its outboard end; link `i` hangs from the end of link `i − 1` (or from the
//! cart for `i = 1`). The direction `qᵢ` is a unit vector and `e₃` points
//! along gravity, so `qᵢ = e₃` is a link hanging straight down.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{Mat, Vec3, E3};

pub const DEFAULT_GRAVITY: f64 = 9.81;

/// Masses, lengths and gravity of a cart carrying `n` links.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainParams {
    cart_mass: f64,
    link_masses: Vec<f64>,
    link_lengths: Vec<f64>,
    gravity: f64,
}

impl ChainParams {
    pub fn new(
        cart_mass: f64,
        link_masses: Vec<f64>,
        link_lengths: Vec<f64>,
        gravity: f64,
    ) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if link_masses.is_empty() {
            return Err(Error::InvalidParams("at least one link is required".into()));
        }
        if link_masses.len() != link_lengths.len() {
            return Err(Error::InvalidParams(format!(
                "{} link masses but {} link lengths",
                link_masses.len(),
                link_lengths.len()
            )));
        }
        if !positive(cart_mass) {
            return Err(Error::InvalidParams(format!(
                "cart mass must be positive, got {cart_mass}"
            )));
        }
        if let Some((i, m)) = link_masses.iter().enumerate().find(|(_, &m)| !positive(m)) {
            return Err(Error::InvalidParams(format!(
                "mass of link {} must be positive, got {m}",
                i + 1
            )));
        }
        if let Some((i, l)) = link_lengths.iter().enumerate().find(|(_, &l)| !positive(l)) {
            return Err(Error::InvalidParams(format!(
                "length of link {} must be positive, got {l}",
                i + 1
            )));
        }
        if !positive(gravity) {
            return Err(Error::InvalidParams(format!(
                "gravity must be positive, got {gravity}"
            )));
        }
        Ok(Self {
            cart_mass,
            link_masses,
            link_lengths,
            gravity,
        })
    }

    /// `n` identical links under standard gravity.
    pub fn uniform(n: usize, cart_mass: f64, link_mass: f64, link_length: f64) -> Result<Self> {
        Self::new(
            cart_mass,
            vec![link_mass; n],
            vec![link_length; n],
            DEFAULT_GRAVITY,
        )
    }

    /// Five links of 0.1 kg and 0.1 m on a 0.5 kg cart.
    pub fn five_link_reference() -> Self {
        Self::uniform(5, 0.5, 0.1, 0.1).expect("reference parameters are valid")
    }

    pub fn n(&self) -> usize {
        self.link_masses.len()
    }

    pub fn cart_mass(&self) -> f64 {
        self.cart_mass
    }

    pub fn link_masses(&self) -> &[f64] {
        &self.link_masses
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    /// `Σ_{a=i}^n m_a` (0-based `i`): the mass carried by link `i`.
    pub fn outboard_mass(&self, i: usize) -> f64 {
        self.link_masses[i..].iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.cart_mass + self.link_masses.iter().sum::<f64>()
    }

    /// `Σ_{a=i}^n m_a g lᵢ`, the gravity moment acting on link `i`.
    pub fn gravity_moment(&self, i: usize) -> f64 {
        self.outboard_mass(i) * self.gravity * self.link_lengths[i]
    }
}

/// Cart position and velocity plus a direction and angular velocity per link.
///
/// The link rates are stored only as angular velocities; `q̇ᵢ = ωᵢ × qᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct State {
    pub x: [f64; 2],
    pub xdot: [f64; 2],
    pub q: Vec<Vec3>,
    pub omega: Vec<Vec3>,
}

impl State {
    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// `q̇ᵢ = ωᵢ × qᵢ`.
    pub fn qdot(&self, i: usize) -> Vec3 {
        self.omega[i].cross(self.q[i])
    }

    pub(crate) fn check_links(&self, n: usize) -> Result<()> {
        if self.q.len() != n || self.omega.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "state has {} directions and {} angular velocities, model has {n} links",
                self.q.len(),
                self.omega.len()
            )));
        }
        Ok(())
    }
}

/// Inertia constants of the kinetic energy
/// `T = ½M₀₀‖ẋ‖² + ẋ·Σ M₀ᵢq̇ᵢ + ½ΣΣ Mᵢⱼ q̇ᵢ·q̇ⱼ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InertiaModel {
    /// `m + Σ mᵢ`.
    pub m00: f64,
    /// `M₀ᵢ = Cᵀ Σ_{a=i}^n m_a lᵢ`, each 2×3.
    pub m0i: Vec<Mat>,
    /// `Mᵢⱼ = (Σ_{a=max(i,j)}^n m_a) lᵢ lⱼ`, n×n symmetric.
    pub mij: Mat,
    /// The scalar in front of `Cᵀ` in `M₀ᵢ`.
    pub cart_coupling: Vec<f64>,
    /// `Σ_{a=i}^n m_a g lᵢ`.
    pub gravity_moment: Vec<f64>,
}

impl InertiaModel {
    pub fn n(&self) -> usize {
        self.cart_coupling.len()
    }

    pub fn m(&self, i: usize, j: usize) -> f64 {
        self.mij[(i, j)]
    }
}

pub fn build_inertia(params: &ChainParams) -> InertiaModel {
    let n = params.n();
    let l = params.link_lengths();
    let cart_coupling: Vec<f64> = (0..n).map(|i| params.outboard_mass(i) * l[i]).collect();
    let m0i = cart_coupling
        .iter()
        .map(|&c| Mat::from_rows(&[[c, 0.0, 0.0], [0.0, c, 0.0]]))
        .collect();
    let mut mij = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = params.outboard_mass(j) * l[i] * l[j];
            mij[(i, j)] = v;
            mij[(j, i)] = v;
        }
    }
    InertiaModel {
        m00: params.total_mass(),
        m0i,
        mij,
        cart_coupling,
        gravity_moment: (0..n).map(|i| params.gravity_moment(i)).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Energies {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

/// Kinetic, potential and total energy (J).
pub fn energies(params: &ChainParams, state: &State) -> Result<Energies> {
    state.check_links(params.n())?;
    let inertia = build_inertia(params);
    Ok(energies_with(params, &inertia, state))
}

/// [`energies`] with a precomputed inertia model; dimensions are assumed
/// consistent.
pub fn energies_with(params: &ChainParams, inertia: &InertiaModel, state: &State) -> Energies {
    let n = params.n();
    let qdot: Vec<Vec3> = (0..n).map(|i| state.qdot(i)).collect();
    let xd = state.xdot;

    let mut kinetic = 0.5 * inertia.m00 * (xd[0] * xd[0] + xd[1] * xd[1]);
    for (i, qd) in qdot.iter().enumerate() {
        kinetic += inertia.cart_coupling[i] * (xd[0] * qd.x + xd[1] * qd.y);
        for (j, qdj) in qdot.iter().enumerate() {
            kinetic += 0.5 * inertia.mij[(i, j)] * qd.dot(*qdj);
        }
    }
    let potential = -(0..n)
        .map(|i| inertia.gravity_moment[i] * E3.dot(state.q[i]))
        .sum::<f64>();
    Energies {
        kinetic,
        potential,
        total: kinetic + potential,
    }
}

/// Positions `xᵢ = Cx + Σ_{a≤i} l_a q_a` of the link masses.
pub fn mass_positions(params: &ChainParams, state: &State) -> Result<Vec<Vec3>> {
    state.check_links(params.n())?;
    let mut p = Vec3::from_horizontal(state.x);
    Ok(state
        .q
        .iter()
        .zip(params.link_lengths())
        .map(|(&q, &l)| {
            p += q * l;
            p
        })
        .collect())
}

/// Renormalizes every `qᵢ` and removes the radial part of every `ωᵢ`.
pub fn project_state(state: &State) -> Result<State> {
    if state.q.len() != state.omega.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} directions but {} angular velocities",
            state.q.len(),
            state.omega.len()
        )));
    }
    let mut out = state.clone();
    for (i, (q, w)) in out.q.iter_mut().zip(out.omega.iter_mut()).enumerate() {
        let norm = q.norm();
        if !(norm >= 0.5) || !norm.is_finite() {
            return Err(Error::DegenerateDirection { link: i, norm });
        }
        *q = *q / norm;
        *w = *w - *q * q.dot(*w);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `|‖qᵢ‖ − 1|` too large.
    UnitNorm,
    /// `|qᵢ·ωᵢ|` too large.
    Tangency,
    /// Direction and angular-velocity counts differ.
    LinkCount,
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintViolation {
    /// 0-based link index.
    pub link: usize,
    pub kind: ConstraintKind,
    pub magnitude: f64,
}

/// Every sphere-constraint violation above `tol`; empty when valid.
pub fn validate_state(state: &State, tol: f64) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    if state.q.len() != state.omega.len() {
        out.push(ConstraintViolation {
            link: state.q.len().min(state.omega.len()),
            kind: ConstraintKind::LinkCount,
            magnitude: (state.q.len() as f64 - state.omega.len() as f64).abs(),
        });
    }
    let finite_cart = state.x.iter().chain(&state.xdot).all(|v| v.is_finite());
    for (i, (q, w)) in state.q.iter().zip(&state.omega).enumerate() {
        if !q.is_finite() || !w.is_finite() || (i == 0 && !finite_cart) {
            out.push(ConstraintViolation {
                link: i,
                kind: ConstraintKind::NonFinite,
                magnitude: f64::INFINITY,
            });
            continue;
        }
        let norm_err = (q.norm() - 1.0).abs();
        if norm_err > tol {
            out.push(ConstraintViolation {
                link: i,
                kind: ConstraintKind::UnitNorm,
                magnitude: norm_err,
            });
        }
        let tangency = q.dot(*w).abs();
        if tangency > tol {
            out.push(ConstraintViolation {
                link: i,
                kind: ConstraintKind::Tangency,
                magnitude: tangency,
            });
        }
    }
    out
}
