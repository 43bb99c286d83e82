use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use super::Vec3;

/// Small dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn column(values: &[f64]) -> Self {
        Self::from_row_major(values.len(), 1, values.to_vec())
    }

    pub fn from_vec3_column(v: Vec3) -> Self {
        Self::column(&v.to_array())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Largest absolute entry (`‖·‖_max`); zero for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `‖A − Aᵀ‖_max`; `None` for a non-square matrix.
    pub fn asymmetry(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Mat {
        let t = self.transpose();
        (self + &t).scale(0.5)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Treats a 3×3 matrix as a linear map on `Vec3`.
    pub fn apply3(&self, v: Vec3) -> Vec3 {
        assert!(
            self.rows == 3 && self.cols == 3,
            "apply3 needs a 3x3 matrix"
        );
        let r = self.mul_vec(&v.to_array());
        Vec3::new(r[0], r[1], r[2])
    }

    /// Copy of the `rows × cols` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat {
        assert!(
            r0 + rows <= self.rows && c0 + cols <= self.cols,
            "block out of range"
        );
        let mut b = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                b[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        b
    }

    /// Writes `src` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Mat) {
        assert!(
            r0 + src.rows <= self.rows && c0 + src.cols <= self.cols,
            "set_block out of range"
        );
        for i in 0..src.rows {
            for j in 0..src.cols {
                self[(r0 + i, c0 + j)] = src[(i, j)];
            }
        }
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut m = Mat::zeros(self.rows, self.cols + other.cols);
        m.set_block(0, 0, self);
        m.set_block(0, self.cols, other);
        m
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        let mut m = Mat::zeros(self.rows + other.rows, self.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, 0, other);
        m
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Mat {
    type Output = Mat;

    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }
}

impl Add for &Mat {
    type Output = Mat;

    fn add(self, rhs: &Mat) -> Mat {
        assert!(
            self.rows == rhs.rows && self.cols == rhs.cols,
            "add shape mismatch"
        );
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Mat {
    type Output = Mat;

    fn sub(self, rhs: &Mat) -> Mat {
        assert!(
            self.rows == rhs.rows && self.cols == rhs.cols,
            "sub shape mismatch"
        );
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &Mat {
    type Output = Mat;

    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for v in self.row(i) {
                write!(f, "{v:>13.6e} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Serialized as an array of rows.
impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose() {
        let a = Mat::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let b = &a * &a.transpose();
        assert_eq!(b, Mat::from_rows(&[[14.0, 32.0], [32.0, 77.0]]));
    }

    #[test]
    fn blocks_round_trip() {
        let mut m = Mat::zeros(4, 4);
        let b = Mat::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        m.set_block(1, 2, &b);
        assert_eq!(m.block(1, 2, 2, 2), b);
        assert_eq!(m[(0, 0)], 0.0);
    }
}
