//! Continuous algebraic Riccati equation
//!
//! ```text
//! AᵀP + PA − P B R⁻¹ Bᵀ P + Q = 0
//! ```
//!
//! solved by Newton–Kleinman: each step is a Lyapunov equation for the
//! current closed loop, and the iteration needs a stabilizing gain to start.
//! The seed comes from a continuation over shifted problems `A − sI`,
//! starting where `A − sI` is already stable.

use super::{
    require_finite, require_square, solve_linear, spectral_abscissa, tol, Lu, Mat, NumericsError,
    Result,
};

#[derive(Clone, Debug)]
pub struct CareOptions {
    pub max_newton: usize,
    /// Stop once `‖P_{k+1} − P_k‖_max ≤ step_relative · ‖P_{k+1}‖_max`.
    pub step_relative: f64,
    /// Shifts tried when building the stabilizing seed.
    pub seed_attempts: usize,
}

impl Default for CareOptions {
    fn default() -> Self {
        Self {
            max_newton: tol::CARE_MAX_NEWTON,
            step_relative: tol::CARE_STEP_RELATIVE,
            seed_attempts: 64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CareSolution {
    /// Symmetric stabilizing solution.
    pub p: Mat,
    /// Optimal gain `K = R⁻¹ Bᵀ P`.
    pub gain: Mat,
    pub newton_steps: usize,
}

pub fn solve_care(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Mat> {
    Ok(solve_care_with(a, b, q, r, &CareOptions::default())?.p)
}

pub fn solve_care_with(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    opts: &CareOptions,
) -> Result<CareSolution> {
    check_shapes(a, b, q, r)?;
    let seed = stabilizing_seed(a, b, r, opts)?;
    newton_kleinman(a, b, q, r, seed, opts.max_newton, opts.step_relative)
}

/// Newton–Kleinman iteration from a gain `k` that stabilizes `A − BK`.
fn newton_kleinman(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    mut k: Mat,
    max_newton: usize,
    step_relative: f64,
) -> Result<CareSolution> {
    let r_lu = Lu::factor(r)?;
    let mut p_prev: Option<Mat> = None;
    let mut last_change = f64::INFINITY;
    for step in 1..=max_newton {
        let p = lyapunov_for_gain(a, b, q, r, &k)?;
        k = r_lu.solve(&(&b.transpose() * &p))?;
        if let Some(prev) = &p_prev {
            let change = (&p - prev).max_abs();
            let scale = p.max_abs().max(f64::MIN_POSITIVE);
            // Quadratic convergence ends either below the requested step or
            // at a roundoff floor where the change stops shrinking.
            let stalled = change >= 0.5 * last_change && change <= 1e-9 * scale;
            if change <= step_relative * scale || stalled {
                return Ok(CareSolution {
                    p,
                    gain: k,
                    newton_steps: step,
                });
            }
            last_change = change;
        }
        p_prev = Some(p);
    }
    Err(NumericsError::NoConvergence {
        routine: "solve_care",
        iterations: max_newton,
    })
}

/// One Newton–Kleinman update starting from `p`.
pub fn newton_kleinman_step(a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<Mat> {
    check_shapes(a, b, q, r)?;
    let k = solve_linear(r, &(&b.transpose() * p))?;
    lyapunov_for_gain(a, b, q, r, &k)
}

/// `AᵀP + PA − P B R⁻¹ Bᵀ P + Q`.
pub fn care_residual(a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<Mat> {
    check_shapes(a, b, q, r)?;
    let rinv_bt_p = solve_linear(r, &(&b.transpose() * p))?;
    let quad = &(p * b) * &rinv_bt_p;
    let lin = &(&a.transpose() * p) + &(p * a);
    Ok(&(&lin - &quad) + q)
}

/// Solves `FᵀX + XF + C = 0` by Kronecker vectorization.
///
/// With row-major `vec`, `vec(FᵀX) = (Fᵀ ⊗ I) vec(X)` and
/// `vec(XF) = (I ⊗ Fᵀ) vec(X)`.
pub fn solve_lyapunov(f: &Mat, c: &Mat) -> Result<Mat> {
    require_square(f, "Lyapunov F")?;
    let n = f.rows();
    if c.rows() != n || c.cols() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "Lyapunov C must be {n}x{n}, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    let nn = n * n;
    let mut kron = Mat::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                // (Fᵀ ⊗ I): X[k][j] · F[k][i]
                kron[(row, k * n + j)] += f[(k, i)];
                // (I ⊗ Fᵀ): X[i][k] · F[k][j]
                kron[(row, i * n + k)] += f[(k, j)];
            }
        }
    }
    let rhs: Vec<f64> = c.as_slice().iter().map(|v| -v).collect();
    let x = Lu::factor(&kron)?.solve_vec(&rhs);
    Ok(Mat::from_row_major(n, n, x).symmetrized())
}

/// Cost-to-go of gain `k`: `(A−BK)ᵀP + P(A−BK) + Q + KᵀRK = 0`.
fn lyapunov_for_gain(a: &Mat, b: &Mat, q: &Mat, r: &Mat, k: &Mat) -> Result<Mat> {
    let closed = a - &(b * k);
    let c = q + &(&(&k.transpose() * r) * k);
    solve_lyapunov(&closed, &c.symmetrized())
}

/// Stabilizing initial gain by a shift continuation.
///
/// `A − sI` is stable with zero gain once `s` exceeds the spectral abscissa
/// of `A`. The regulator of the shifted pair `(A − sI, B)` (unit state
/// weight) leaves `A − BK` with abscissa `s − γ`, where `γ` is the
/// closed-loop margin of the shifted problem, so `s` is lowered by most of
/// `γ` and the previous gain seeds the next shifted problem. The loop ends
/// once `A − BK` itself is stable.
fn stabilizing_seed(a: &Mat, b: &Mat, r: &Mat, opts: &CareOptions) -> Result<Mat> {
    let n = a.rows();
    let m = b.cols();
    let scale = a.max_abs().max(1.0);
    let abscissa = spectral_abscissa(a)?;
    if abscissa < -SEED_MARGIN * scale {
        return Ok(Mat::zeros(m, n));
    }
    let q = Mat::identity(n);
    let mut shift = abscissa + 1e-2 * scale;
    let mut k = Mat::zeros(m, n);
    for _ in 0..opts.seed_attempts {
        let shifted = a - &Mat::identity(n).scale(shift);
        let sol = match newton_kleinman(&shifted, b, &q, r, k.clone(), opts.max_newton, 1e-8) {
            Ok(sol) => sol,
            Err(NumericsError::Singular { .. }) => return Err(NumericsError::NoStabilizingSeed),
            Err(e) => return Err(e),
        };
        k = sol.gain;
        let reached = spectral_abscissa(&(a - &(b * &k)))?;
        if reached < -SEED_MARGIN * scale {
            return Ok(k);
        }
        let margin = shift - reached;
        if !(margin > SEED_MARGIN * scale) {
            break;
        }
        shift -= 0.9 * margin;
    }
    Err(NumericsError::NoStabilizingSeed)
}

/// Relative stability margin demanded of a seed, and the smallest shift
/// progress the continuation accepts.
const SEED_MARGIN: f64 = 1e-8;

fn check_shapes(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<()> {
    require_square(a, "CARE A")?;
    require_square(q, "CARE Q")?;
    require_square(r, "CARE R")?;
    for m in [a, b, q, r] {
        require_finite(m)?;
    }
    let n = a.rows();
    if b.rows() != n || q.rows() != n || r.rows() != b.cols() {
        return Err(NumericsError::DimensionMismatch(format!(
            "CARE shapes: A {n}x{n}, B {}x{}, Q {}x{}, R {}x{}",
            b.rows(),
            b.cols(),
            q.rows(),
            q.cols(),
            r.rows(),
            r.cols()
        )));
    }
    Ok(())
}
