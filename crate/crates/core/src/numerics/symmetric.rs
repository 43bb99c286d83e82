use super::{require_finite, require_square, tol, Mat, NumericsError, Result};

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    require_square(a, "Cholesky input")?;
    require_finite(a)?;
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(NumericsError::NotSpd);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn symmetric_eigen(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    require_square(a, "symmetric eigen input")?;
    require_finite(a)?;
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut v = Mat::identity(n);
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    let mut converged = false;
    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // One last check after the final sweep.
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() > 1e-12 * scale {
            return Err(NumericsError::NoConvergence {
                routine: "symmetric_eigen",
                iterations: tol::JACOBI_MAX_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[(a, a)].total_cmp(&m[(b, b)]));
    let values = order.iter().map(|&k| m[(k, k)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok((values, vectors))
}

/// Solutions of the symmetric-definite pencil `G v = μ M v`.
#[derive(Clone, Debug)]
pub struct PencilEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: Mat,
}

impl PencilEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.col(k)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn spd_pencil_eigs(g: &Mat, m: &Mat) -> Result<PencilEigen> {
    spd_pencil_eigs_with(g, m, tol::SYMMETRY)
}

/// Reduces `G v = μ M v` to a standard symmetric problem through the
/// Cholesky factor of `M`, so every `μ` comes out real.
pub fn spd_pencil_eigs_with(g: &Mat, m: &Mat, symmetry_tol: f64) -> Result<PencilEigen> {
    require_square(g, "pencil G")?;
    require_square(m, "pencil M")?;
    if g.rows() != m.rows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "pencil G is {0}x{0}, M is {1}x{1}",
            g.rows(),
            m.rows()
        )));
    }
    for x in [g, m] {
        let asymmetry = x.asymmetry().unwrap_or(0.0);
        if asymmetry > symmetry_tol * x.max_abs().max(1.0) {
            return Err(NumericsError::NotSymmetric { asymmetry });
        }
    }
    let n = g.rows();
    let l = cholesky(&m.symmetrized())?;
    let g = g.symmetrized();

    // C = L⁻¹ G L⁻ᵀ, two triangular solves.
    let x = forward_substitute(&l, &g);
    let c = forward_substitute(&l, &x.transpose()).symmetrized();
    let (values, y) = symmetric_eigen(&c)?;

    // v = L⁻ᵀ y
    let mut vectors = Mat::zeros(n, n);
    for k in 0..n {
        for i in (0..n).rev() {
            let mut s = y[(i, k)];
            for j in (i + 1)..n {
                s -= l[(j, i)] * vectors[(j, k)];
            }
            vectors[(i, k)] = s / l[(i, i)];
        }
    }
    Ok(PencilEigen { values, vectors })
}

/// Solves `L X = B` for lower-triangular `L`.
fn forward_substitute(l: &Mat, b: &Mat) -> Mat {
    let n = l.rows();
    let mut x = Mat::zeros(n, b.cols());
    for k in 0..b.cols() {
        for i in 0..n {
            let mut s = b[(i, k)];
            for j in 0..i {
                s -= l[(i, j)] * x[(j, k)];
            }
            x[(i, k)] = s / l[(i, i)];
        }
    }
    x
}
