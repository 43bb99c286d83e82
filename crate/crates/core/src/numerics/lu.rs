use super::{require_finite, require_square, tol, Mat, NumericsError, Result};

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    // L below the diagonal (unit diagonal implied), U on and above.
    factors: Mat,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Mat) -> Result<Self> {
        Self::factor_with(a, tol::PIVOT_RELATIVE)
    }

    /// Fails with `Singular` when a pivot falls below `pivot_rel · ‖A‖_max`.
    pub fn factor_with(a: &Mat, pivot_rel: f64) -> Result<Self> {
        require_square(a, "LU input")?;
        require_finite(a)?;
        let n = a.rows();
        let threshold = pivot_rel * a.max_abs();
        let mut f = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, f[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pivot <= threshold || pivot == 0.0 {
                return Err(NumericsError::Singular { column: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    let tmp = f[(k, j)];
                    f[(k, j)] = f[(p, j)];
                    f[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let d = f[(k, k)];
            for i in (k + 1)..n {
                let l = f[(i, k)] / d;
                f[(i, k)] = l;
                if l != 0.0 {
                    for j in (k + 1)..n {
                        f[(i, j)] -= l * f[(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            factors: f,
            perm,
        })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let f = &self.factors;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..self.n {
            let mut s = y[i];
            for j in 0..i {
                s -= f[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for j in (i + 1)..self.n {
                s -= f[(i, j)] * y[j];
            }
            y[i] = s / f[(i, i)];
        }
        y
    }

    pub fn solve(&self, b: &Mat) -> Result<Mat> {
        if b.rows() != self.n {
            return Err(NumericsError::DimensionMismatch(format!(
                "rhs has {} rows, system has {}",
                b.rows(),
                self.n
            )));
        }
        let mut x = Mat::zeros(self.n, b.cols());
        for j in 0..b.cols() {
            let col = self.solve_vec(&b.col(j));
            for (i, v) in col.into_iter().enumerate() {
                x[(i, j)] = v;
            }
        }
        Ok(x)
    }
}

/// Solves `A X = B` by partial-pivoting LU.
pub fn solve_linear(a: &Mat, b: &Mat) -> Result<Mat> {
    Lu::factor(a)?.solve(b)
}

pub fn solve_linear_with(a: &Mat, b: &Mat, pivot_rel: f64) -> Result<Mat> {
    Lu::factor_with(a, pivot_rel)?.solve(b)
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    Lu::factor(a)?.solve(&Mat::identity(a.rows()))
}
