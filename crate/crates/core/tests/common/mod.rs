//! Independent oracles and reference scenarios shared by the integration tests.
#![allow(dead_code)]

use chainpend::model::{ChainParams, State};
use chainpend::numerics::{Vec3, E3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn reference_params() -> ChainParams {
    ChainParams::new(0.5, vec![0.1; 5], vec![0.1; 5], 9.81).unwrap()
}

fn deg(d: f64) -> f64 {
    d.to_radians()
}

/// Folded chain with the last link tilted 1° toward `e₁`.
pub fn folded_release() -> State {
    let mut q: Vec<Vec3> = (1..=4).map(|i| if i % 2 == 0 { E3 } else { -E3 }).collect();
    q.push(Vec3::new(deg(1.0).sin(), 0.0, -deg(1.0).cos()));
    State {
        x: [0.2, 0.1],
        xdot: [0.0, -0.1],
        q,
        omega: vec![Vec3::ZERO; 5],
    }
}

pub const FOLDED: [i8; 5] = [-1, 1, -1, 1, -1];
pub const PARTIALLY_FOLDED: [i8; 5] = [-1, -1, -1, 1, 1];

/// Initial state near the partially folded equilibrium.
pub fn partially_folded_release() -> State {
    let (s4, c4) = deg(4.0).sin_cos();
    let (s5, c5) = deg(5.0).sin_cos();
    let (s6, c6) = deg(6.0).sin_cos();
    let (s35, c35) = deg(35.0).sin_cos();
    State {
        x: [0.2, 0.1],
        xdot: [0.0, -0.1],
        q: vec![
            Vec3::new(-s6, 0.0, -c6),
            Vec3::new(0.0, -s4, -c4),
            Vec3::new(0.0, -s4, -c4),
            Vec3::new(s5 * c4, -s5 * s4, c5),
            Vec3::new(-s35, 0.0, c35),
        ],
        omega: vec![Vec3::ZERO; 5],
    }
}

/// Kinetic energy summed over the cart and the point masses, with mass
/// velocities `Cẋ + Σ_{a≤i} l_a (ω_a × q_a)` differentiated by hand.
pub fn point_mass_kinetic(params: &ChainParams, s: &State) -> f64 {
    let cart = Vec3::new(s.xdot[0], s.xdot[1], 0.0);
    let mut v = cart;
    let mut t = 0.5 * params.cart_mass() * cart.norm_squared();
    for i in 0..params.n() {
        v += s.omega[i].cross(s.q[i]) * params.link_lengths()[i];
        t += 0.5 * params.link_masses()[i] * v.norm_squared();
    }
    t
}

/// Gravitational potential summed over point masses at heights `−e₃·xᵢ`.
pub fn point_mass_potential(params: &ChainParams, s: &State) -> f64 {
    let mut depth = 0.0;
    let mut v = 0.0;
    for i in 0..params.n() {
        depth += params.link_lengths()[i] * s.q[i].z;
        v -= params.link_masses()[i] * params.gravity() * depth;
    }
    v
}

/// Residual of the direction-form equations of motion
///
/// ```text
/// M₀₀ẍ + Σⱼ M₀ⱼ q̈ⱼ = u
/// −q̂ᵢ² Mᵢ₀ ẍ + Mᵢᵢ q̈ᵢ − Σ_{j≠i} Mᵢⱼ q̂ᵢ² q̈ⱼ = −‖q̇ᵢ‖² Mᵢᵢ qᵢ − Wᵢ q̂ᵢ² e₃
/// ```
///
/// built from first principles (`M₀ᵢ = Cᵀ Σ_{a≥i} m_a lᵢ`,
/// `Mᵢⱼ = Σ_{a≥max(i,j)} m_a lᵢlⱼ`, `Wᵢ = Σ_{a≥i} m_a g lᵢ`). Returns the
/// largest residual over the largest individual term.
pub fn direction_form_residual(
    params: &ChainParams,
    s: &State,
    u: [f64; 2],
    xddot: [f64; 2],
    qddot: &[Vec3],
) -> f64 {
    let n = params.n();
    let m = params.link_masses();
    let l = params.link_lengths();
    let tail = |i: usize| m[i..].iter().sum::<f64>();
    let mij = |i: usize, j: usize| tail(i.max(j)) * l[i] * l[j];
    let hat2 = |q: Vec3, v: Vec3| q.cross(q.cross(v));
    let cart_acc = Vec3::new(xddot[0], xddot[1], 0.0);
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;

    let mut cart = cart_acc * (params.cart_mass() + m.iter().sum::<f64>());
    scale = scale.max(cart.norm());
    for j in 0..n {
        let term = qddot[j] * (tail(j) * l[j]);
        scale = scale.max(Vec3::new(term.x, term.y, 0.0).norm());
        cart += Vec3::new(term.x, term.y, 0.0);
    }
    worst = worst.max((cart - Vec3::new(u[0], u[1], 0.0)).norm());

    for i in 0..n {
        let q = s.q[i];
        let qdot = s.omega[i].cross(q);
        let terms = [
            -hat2(q, cart_acc * (tail(i) * l[i])),
            qddot[i] * mij(i, i),
            q * (qdot.norm_squared() * mij(i, i)),
            hat2(q, E3) * (tail(i) * params.gravity() * l[i]),
        ];
        let mut row = terms.iter().fold(Vec3::ZERO, |a, &t| a + t);
        for t in &terms {
            scale = scale.max(t.norm());
        }
        for j in (0..n).filter(|&j| j != i) {
            let t = -hat2(q, qddot[j]) * mij(i, j);
            scale = scale.max(t.norm());
            row += t;
        }
        worst = worst.max(row.norm());
    }
    worst / scale.max(f64::MIN_POSITIVE)
}

/// Seeded random valid states.
pub struct StateSampler(pub StdRng);

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        Self(StdRng::seed_from_u64(seed))
    }

    pub fn symmetric(&mut self, scale: f64) -> f64 {
        self.0.gen_range(-scale..=scale)
    }

    pub fn unit(&mut self) -> Vec3 {
        loop {
            let v = Vec3::new(
                self.symmetric(1.0),
                self.symmetric(1.0),
                self.symmetric(1.0),
            );
            let r = v.norm();
            if r > 0.1 && r <= 1.0 {
                return v / r;
            }
        }
    }

    pub fn tangent(&mut self, q: Vec3, scale: f64) -> Vec3 {
        let w = Vec3::new(
            self.symmetric(scale),
            self.symmetric(scale),
            self.symmetric(scale),
        );
        w - q * q.dot(w)
    }

    pub fn state(&mut self, n: usize, rate: f64) -> State {
        let q: Vec<Vec3> = (0..n).map(|_| self.unit()).collect();
        let omega = q.iter().map(|&qi| self.tangent(qi, rate)).collect();
        State {
            x: [self.symmetric(1.0), self.symmetric(1.0)],
            xdot: [self.symmetric(rate), self.symmetric(rate)],
            q,
            omega,
        }
    }
}
