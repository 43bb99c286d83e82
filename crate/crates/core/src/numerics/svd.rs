use super::{tol, Mat};

/// Thin singular value decomposition `A = U diag(σ) Vᵀ`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// Descending; one per column of the (row-padded) input.
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns; a column is zero where `σ = 0`.
    pub u: Mat,
    /// Right singular vectors as columns.
    pub v: Mat,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Inputs with fewer rows than columns are padded with zero rows, so the
/// result always carries one singular value and one right singular vector
/// per column. That is what null-space extraction needs.
pub fn svd(a: &Mat) -> Svd {
    let (m, n) = (a.rows().max(a.cols()), a.cols());
    let mut w = Mat::zeros(m, n);
    w.set_block(0, 0, a);
    let mut v = Mat::identity(n);

    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let mut u = Mat::zeros(m, n);
    let mut v_sorted = Mat::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        singular_values.push(sigma);
        for i in 0..n {
            v_sorted[(i, dst)] = v[(i, src)];
        }
        if sigma > 0.0 {
            for i in 0..m {
                u[(i, dst)] = w[(i, src)] / sigma;
            }
        }
    }
    Svd {
        singular_values,
        u,
        v: v_sorted,
    }
}

/// Descending singular values; `min(rows, cols)` of them.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    let mut s = if a.rows() >= a.cols() {
        svd(a).singular_values
    } else {
        svd(&a.transpose()).singular_values
    };
    s.truncate(a.rows().min(a.cols()));
    s
}

/// Number of singular values exceeding `tol · σ_max`.
pub fn rank_tol(a: &Mat, tol: f64) -> usize {
    let s = singular_values(a);
    let Some(&largest) = s.first() else {
        return 0;
    };
    if largest == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * largest).count()
}
