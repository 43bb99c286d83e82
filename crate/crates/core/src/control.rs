//! Controllability of the linearized chain and geometric LQR feedback.
//!
//! Gains act on the nonlinear state through
//!
//! ```text
//! u = −K_x (x − x*) − K_ẋ ẋ − Σᵢ [ K_qᵢ Cᵀ(sᵢe₃ × qᵢ) + K_ωᵢ Cᵀωᵢ ]
//! ```
//!
//! which reduces to `u = −K [𝐱; 𝐱̇]` in the linear chart, since
//! `sᵢe₃ × exp(ξ̂ᵢ)(sᵢe₃) = ξᵢ + O(‖ξᵢ‖²)` for horizontal `ξᵢ`.

use serde::Serialize;

use crate::dynamics::Controller;
use crate::equilibria::{EquilibriumSpec, LinearModel};
use crate::error::{Error, Result};
use crate::model::State;
use crate::numerics::{
    care_residual, eigs_real, rank_tol, singular_values, solve_care_with, solve_linear,
    spd_pencil_eigs, svd, tol, CareOptions, Complex64, Mat, E3,
};

/// Default relative rank threshold of the controllability test.
pub const RANK_RELATIVE: f64 = tol::RANK_RELATIVE;

/// Relative gap below which pencil eigenvalues are treated as one root.
pub const CLUSTER_RELATIVE: f64 = 1e-8;

/// Blocks of the link subsystem `M_qq ẍ_q + G_qq x_q = M_qx 𝐮`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedSubsystem {
    pub m_qq: Mat,
    pub g_qq: Mat,
    pub m_qx: Mat,
}

pub fn reduced_subsystem(model: &LinearModel) -> ReducedSubsystem {
    ReducedSubsystem {
        m_qq: model.m_qq(),
        g_qq: model.g_qq(),
        m_qx: model.m_qx(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankResult {
    pub lambda_squared: f64,
    pub rank: usize,
    /// Smallest retained singular value over the largest.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControllabilityCertificate {
    pub controllable: bool,
    /// Distinct roots `λ²` of `det(λ²M_qq + G_qq) = 0`.
    pub tested_eigenvalues: Vec<f64>,
    /// Left eigenvector of the full pencil with `𝐁ᵀv = 0`, if any.
    pub failing_eigenvector: Option<Vec<f64>>,
    pub rank_results: Vec<RankResult>,
    /// Minimum of the per-root margins.
    pub margin: f64,
    pub g_qq_invertible: bool,
}

/// Groups ascending values whose neighbours differ by at most
/// `CLUSTER_RELATIVE · max(|v|max, 1)`. Returns index ranges.
fn clusters(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let gap = CLUSTER_RELATIVE * scale;
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > gap {
            out.push(start..k);
            start = k;
        }
    }
    out
}

fn cluster_mean(values: &[f64], r: &std::ops::Range<usize>) -> f64 {
    values[r.clone()].iter().sum::<f64>() / r.len() as f64
}

/// PBH test in two independent forms that must agree.
///
/// The reduced route checks `rank[λ²M_qq + G_qq, M_qx] = 2n` at every root
/// of the link pencil. The full route looks for a combination `v` of
/// pencil eigenvectors `(G − μM)v = 0` sharing one root with `𝐁ᵀv = 0`.
pub fn controllability(
    model: &LinearModel,
    rank_relative: f64,
) -> Result<ControllabilityCertificate> {
    let reduced = reduced_subsystem(model);
    let links = 2 * model.n();

    let g_qq_invertible = rank_tol(&reduced.g_qq, rank_relative) == links;
    let pencil = spd_pencil_eigs(&reduced.g_qq, &reduced.m_qq)?;
    let mut rank_results = Vec::new();
    let mut tested_eigenvalues = Vec::new();
    for r in clusters(&pencil.values) {
        let mu = cluster_mean(&pencil.values, &r);
        let lambda_squared = -mu;
        let stiffness = &reduced.m_qq.scale(lambda_squared) + &reduced.g_qq;
        let composite = stiffness.hstack(&reduced.m_qx);
        let sv = singular_values(&composite);
        let rank = rank_tol(&composite, rank_relative);
        let margin = if sv[0] > 0.0 {
            sv[links - 1] / sv[0]
        } else {
            0.0
        };
        tested_eigenvalues.push(lambda_squared);
        rank_results.push(RankResult {
            lambda_squared,
            rank,
            margin,
        });
    }
    let rank_test = rank_results.iter().all(|r| r.rank == links);

    let failing_eigenvector = orthogonal_left_eigenvector(model, rank_relative)?;
    let eigenvector_test = failing_eigenvector.is_none();
    if rank_test != eigenvector_test {
        return Err(Error::RouteDisagreement {
            rank_test,
            eigenvector_test,
        });
    }
    let margin = rank_results
        .iter()
        .map(|r| r.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(ControllabilityCertificate {
        controllable: rank_test,
        tested_eigenvalues,
        failing_eigenvector,
        rank_results,
        margin,
        g_qq_invertible,
    })
}

fn orthogonal_left_eigenvector(
    model: &LinearModel,
    rank_relative: f64,
) -> Result<Option<Vec<f64>>> {
    let pencil = spd_pencil_eigs(&model.g, &model.m)?;
    let dim = model.dim();
    let bt = model.b.transpose();
    let b_scale = model.b.max_abs().max(f64::MIN_POSITIVE);
    for r in clusters(&pencil.values) {
        let k = r.len();
        let v = pencil.vectors.block(0, r.start, dim, k);
        let projected = &bt * &v;
        // Eigenvectors are M-normalized, so measure Bᵀv against ‖B‖ rather
        // than against its own largest singular value.
        let dec = svd(&projected);
        let floor = rank_relative * b_scale * v.max_abs().max(f64::MIN_POSITIVE);
        let rank = dec.singular_values.iter().filter(|&&s| s > floor).count();
        if rank < k {
            let c: Vec<f64> = (0..k).map(|j| dec.v[(j, k - 1)]).collect();
            let w = v.mul_vec(&c);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            return Ok(Some(w.iter().map(|x| x / norm).collect()));
        }
    }
    Ok(None)
}

/// `ż = A z + B u` with `z = (𝐱, 𝐱̇)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstOrderModel {
    pub a: Mat,
    pub b: Mat,
}

pub fn first_order_form(model: &LinearModel) -> Result<FirstOrderModel> {
    let d = model.dim();
    let minv_g = solve_linear(&model.m, &model.g)?;
    let minv_b = solve_linear(&model.m, &model.b)?;
    let mut a = Mat::zeros(2 * d, 2 * d);
    a.set_block(0, d, &Mat::identity(d));
    a.set_block(d, 0, &minv_g.scale(-1.0));
    let mut b = Mat::zeros(2 * d, 2);
    b.set_block(d, 0, &minv_b);
    Ok(FirstOrderModel { a, b })
}

/// Gains of the geometric feedback law, each 2×2.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainSet {
    pub k_x: Mat,
    pub k_xdot: Mat,
    pub k_q: Vec<Mat>,
    pub k_omega: Vec<Mat>,
}

impl GainSet {
    pub fn zeros(n: usize) -> Self {
        Self {
            k_x: Mat::zeros(2, 2),
            k_xdot: Mat::zeros(2, 2),
            k_q: vec![Mat::zeros(2, 2); n],
            k_omega: vec![Mat::zeros(2, 2); n],
        }
    }

    pub fn n(&self) -> usize {
        self.k_q.len()
    }

    /// `K = [K_x, K_q₁, …, K_qₙ, K_ẋ, K_ω₁, …, K_ωₙ]`, 2 × (4n + 4).
    pub fn stack(&self) -> Mat {
        let n = self.n();
        let d = 2 * n + 2;
        let mut k = Mat::zeros(2, 2 * d);
        k.set_block(0, 0, &self.k_x);
        k.set_block(0, d, &self.k_xdot);
        for i in 0..n {
            k.set_block(0, 2 + 2 * i, &self.k_q[i]);
            k.set_block(0, d + 2 + 2 * i, &self.k_omega[i]);
        }
        k
    }

    pub fn unstack(k: &Mat) -> Result<Self> {
        if k.rows() != 2 || k.cols() < 8 || !k.cols().is_multiple_of(4) {
            return Err(Error::DimensionMismatch(format!(
                "gain matrix must be 2 x (4n + 4) with n >= 1, got {} x {}",
                k.rows(),
                k.cols()
            )));
        }
        let d = k.cols() / 2;
        let n = (d - 2) / 2;
        Ok(Self {
            k_x: k.block(0, 0, 2, 2),
            k_xdot: k.block(0, d, 2, 2),
            k_q: (0..n).map(|i| k.block(0, 2 + 2 * i, 2, 2)).collect(),
            k_omega: (0..n).map(|i| k.block(0, d + 2 + 2 * i, 2, 2)).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.stack().is_finite()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LqrDesign {
    pub gains: GainSet,
    pub p: Mat,
    pub k: Mat,
    pub newton_steps: usize,
    /// `‖AᵀP + PA − PBR⁻¹BᵀP + Q‖_max / ‖Q‖_max`.
    pub relative_residual: f64,
}

/// Diagonal weight with one value per block of `(δx, ξ, ẋ, ω)`.
pub fn block_weights(n: usize, cart: f64, links: f64, cart_rate: f64, link_rates: f64) -> Mat {
    let d = 2 * n + 2;
    let diag: Vec<f64> = (0..2 * d)
        .map(|k| match (k < d, k % d < 2) {
            (true, true) => cart,
            (true, false) => links,
            (false, true) => cart_rate,
            (false, false) => link_rates,
        })
        .collect();
    Mat::from_diag(&diag)
}

pub fn lqr_design(model: &LinearModel, q: &Mat, r: &Mat) -> Result<LqrDesign> {
    lqr_design_with(model, q, r, &CareOptions::default())
}

pub fn lqr_design_with(
    model: &LinearModel,
    q: &Mat,
    r: &Mat,
    opts: &CareOptions,
) -> Result<LqrDesign> {
    let sys = first_order_form(model)?;
    let d = sys.a.rows();
    if q.rows() != d || q.cols() != d || r.rows() != 2 || r.cols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "LQR weights must be {d}x{d} and 2x2, got {}x{} and {}x{}",
            q.rows(),
            q.cols(),
            r.rows(),
            r.cols()
        )));
    }
    let sol = solve_care_with(&sys.a, &sys.b, q, r, opts)?;
    let residual = care_residual(&sys.a, &sys.b, q, r, &sol.p)?;
    Ok(LqrDesign {
        gains: GainSet::unstack(&sol.gain)?,
        relative_residual: residual.max_abs() / q.max_abs().max(f64::MIN_POSITIVE),
        p: sol.p,
        k: sol.gain,
        newton_steps: sol.newton_steps,
    })
}

pub fn lqr_gains(model: &LinearModel, q: &Mat, r: &Mat) -> Result<GainSet> {
    Ok(lqr_design(model, q, r)?.gains)
}

fn apply2(k: &Mat, v: [f64; 2]) -> [f64; 2] {
    [
        k[(0, 0)] * v[0] + k[(0, 1)] * v[1],
        k[(1, 0)] * v[0] + k[(1, 1)] * v[1],
    ]
}

/// Horizontal force of the geometric feedback law (N).
///
/// Panics if `gains`, `spec` and `state` disagree on the link count.
pub fn feedback_force(gains: &GainSet, spec: &EquilibriumSpec, state: &State) -> [f64; 2] {
    let n = spec.n();
    assert!(
        gains.n() == n && state.n() == n,
        "gains, equilibrium and state must share the link count"
    );
    let x0 = spec.cart_position();
    let mut terms = vec![
        apply2(&gains.k_x, [state.x[0] - x0[0], state.x[1] - x0[1]]),
        apply2(&gains.k_xdot, state.xdot),
    ];
    for i in 0..n {
        let tilt = (E3 * spec.sign(i)).cross(state.q[i]);
        terms.push(apply2(&gains.k_q[i], tilt.horizontal()));
        terms.push(apply2(&gains.k_omega[i], state.omega[i].horizontal()));
    }
    let sum = terms
        .iter()
        .fold([0.0; 2], |acc, t| [acc[0] + t[0], acc[1] + t[1]]);
    [-sum[0], -sum[1]]
}

/// Eigenvalues of `A − BK` for the stacked gains.
pub fn closed_loop_spectrum(model: &LinearModel, gains: &GainSet) -> Result<Vec<Complex64>> {
    if gains.n() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "gains are for {} links, model has {}",
            gains.n(),
            model.n()
        )));
    }
    let sys = first_order_form(model)?;
    let closed = &sys.a - &(&sys.b * &gains.stack());
    Ok(eigs_real(&closed)?)
}

/// [`feedback_force`] as a [`Controller`].
#[derive(Clone, Debug)]
pub struct FeedbackController {
    pub gains: GainSet,
    pub target: EquilibriumSpec,
}

impl Controller for FeedbackController {
    fn force(&self, _t: f64, state: &State) -> [f64; 2] {
        feedback_force(&self.gains, &self.target, state)
    }
}
