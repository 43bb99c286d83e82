use super::{tol, Mat, NumericsError, Result, Vec3};

/// The hat map: `hat(v) · w = v × w`.
pub fn hat(v: Vec3) -> Mat {
    Mat::from_rows(&[[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
}

/// Inverse of [`hat`], with the default skew tolerance.
pub fn vee(a: &Mat) -> Result<Vec3> {
    vee_with(a, tol::SKEW)
}

pub fn vee_with(a: &Mat, skew_tol: f64) -> Result<Vec3> {
    if a.rows() != 3 || a.cols() != 3 {
        return Err(NumericsError::DimensionMismatch(format!(
            "vee needs a 3x3 matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut asymmetry = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            asymmetry = asymmetry.max((a[(i, j)] + a[(j, i)]).abs());
        }
    }
    if asymmetry > skew_tol {
        return Err(NumericsError::NotSkew { asymmetry });
    }
    Ok(Vec3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)]))
}
