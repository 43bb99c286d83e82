//! Small dense linear algebra for systems of a few dozen states.
//!
//! Everything here is unblocked and allocation-happy on purpose: the largest
//! matrix in the crate is the `4n + 4` first-order model (24×24 for five
//! links), and the Kronecker-vectorized Lyapunov solve inside the Riccati
//! iteration (576×576). Thresholds live in [`tol`] and every routine that
//! uses one has a `_with` variant taking it explicitly.

mod care;
mod eig;
mod lu;
mod mat;
mod skew;
mod svd;
mod symmetric;
mod vec3;

pub use care::{
    care_residual, newton_kleinman_step, solve_care, solve_care_with, solve_lyapunov, CareOptions,
    CareSolution,
};
pub use eig::{eigs_real, eigs_real_with, spectral_abscissa};
pub use lu::{inverse, solve_linear, solve_linear_with, Lu};
pub use mat::Mat;
pub use skew::{hat, vee, vee_with};
pub use svd::{rank_tol, singular_values, svd, Svd};
pub use symmetric::{
    cholesky, spd_pencil_eigs, spd_pencil_eigs_with, symmetric_eigen, PencilEigen,
};
pub use vec3::{Vec3, E1, E2, E3};

pub use num_complex::Complex64;

/// Default thresholds used across the numerics layer.
pub mod tol {
    /// `vee` rejects inputs with `‖A + Aᵀ‖_max` above this.
    pub const SKEW: f64 = 1e-12;
    /// LU pivots below this fraction of `‖A‖_max` count as singular.
    pub const PIVOT_RELATIVE: f64 = 1e-13;
    /// Symmetry required of pencil inputs.
    pub const SYMMETRY: f64 = 1e-9;
    /// Default relative rank threshold.
    pub const RANK_RELATIVE: f64 = 1e-9;
    /// QR sweeps allowed per matrix dimension in `eigs_real`.
    pub const QR_SWEEPS_PER_DIM: usize = 100;
    /// Newton steps allowed in the Riccati solver.
    pub const CARE_MAX_NEWTON: usize = 200;
    /// Relative change in `P` at which the Newton iteration stops.
    pub const CARE_STEP_RELATIVE: f64 = 1e-13;
    /// Sweeps allowed in the Jacobi eigen/SVD iterations.
    pub const JACOBI_MAX_SWEEPS: usize = 100;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("matrix is not skew-symmetric (max |A + A^T| = {asymmetry:e})")]
    NotSkew { asymmetry: f64 },
    #[error("matrix is singular to working precision (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("matrix is not symmetric (max |A - A^T| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },
    #[error("no stabilizing initial gain found for the Riccati iteration")]
    NoStabilizingSeed,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("input contains non-finite entries")]
    NonFinite,
}

pub type Result<T, E = NumericsError> = std::result::Result<T, E>;

pub(crate) fn require_square(a: &Mat, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(NumericsError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            a.rows(),
            a.cols()
        )))
    }
}

pub(crate) fn require_finite(a: &Mat) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(NumericsError::NonFinite)
    }
}
