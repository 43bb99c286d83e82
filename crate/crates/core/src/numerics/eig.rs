use super::{require_finite, require_square, tol, Complex64, Mat, NumericsError, Result};

/// Eigenvalues of a general real matrix.
///
/// Balancing, Householder reduction to upper Hessenberg form, then the
/// Francis double-shift QR iteration. Conjugate pairs come out adjacent
/// (positive imaginary part first); the overall order is otherwise the
/// deflation order, not sorted.
pub fn eigs_real(a: &Mat) -> Result<Vec<Complex64>> {
    eigs_real_with(a, tol::QR_SWEEPS_PER_DIM)
}

pub fn eigs_real_with(a: &Mat, sweeps_per_dim: usize) -> Result<Vec<Complex64>> {
    require_square(a, "eigs_real input")?;
    require_finite(a)?;
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based working copy keeps the QR sweep close to its classic form.
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            h[i + 1][j + 1] = a[(i, j)];
        }
    }
    balance(&mut h, n);
    hessenberg(&mut h, n);
    hqr(&mut h, n, sweeps_per_dim * n)
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(a: &Mat) -> Result<f64> {
    Ok(eigs_real(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn balance(a: &mut [Vec<f64>], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

/// Householder similarity reduction to upper Hessenberg form.
fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    for k in 1..n.saturating_sub(1) {
        // Annihilate a[k+2..=n][k].
        let norm: f64 = ((k + 1)..=n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k + 1][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = ((k + 1)..=n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A ← H A, rows k+1..=n
        for j in 1..=n {
            let dot: f64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt * a[k + 1 + t][j])
                .sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vt) in v.iter().enumerate() {
                a[k + 1 + t][j] -= f * vt;
            }
        }
        // A ← A H, columns k+1..=n
        for i in 1..=n {
            let dot: f64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt * a[i][k + 1 + t])
                .sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vt) in v.iter().enumerate() {
                a[i][k + 1 + t] -= f * vt;
            }
        }
        a[k + 1][k] = alpha;
        for i in (k + 2)..=n {
            a[i][k] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Shifted QR on an upper Hessenberg matrix (destroys `a`).
fn hqr(a: &mut [Vec<f64>], n: usize, max_total: usize) -> Result<Vec<Complex64>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let mut total = 0usize;
    let no_convergence = || NumericsError::NoConvergence {
        routine: "eigs_real",
        iterations: max_total,
    };

    while nn >= 1 {
        let mut its = 0;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                // One root found.
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                // Two roots found.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = z;
                    wi[nn] = -z;
                }
                nn = nn.saturating_sub(2);
                break;
            }

            if its == 30 || total >= max_total {
                return Err(no_convergence());
            }
            if its == 10 || its == 20 {
                // Exceptional shift.
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            // Form shift and look for two consecutive small subdiagonals.
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                r = x - z;
                let s = y - z;
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }

            // Double QR step on rows l..nn and columns m..nn.
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }

    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}
