//! Small dense linear-algebra kernels used by the restricted fits.
//!
//! The systems solved here are tiny (at most a few dozen columns), so
//! hand-rolled Householder QR and Cholesky routines are sufficient and keep
//! the crate free of external BLAS/LAPACK requirements.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Least squares `min ||A x - b||` via Householder QR, for `A` with
/// `rows >= cols` stored column-major as `cols` slices of length `rows`.
///
/// Returns `None` when `A` is rank deficient (a diagonal entry of `R`
/// collapses relative to the largest one).
pub fn qr_least_squares(cols: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let n = cols.len();
    if n == 0 {
        return Some(Vec::new());
    }
    assert!(cols.iter().all(|c| c.len() == m));
    if m < n {
        return None;
    }

    // Column-major working copy of A, and of b.
    let mut a: Vec<Vec<f64>> = cols.to_vec();
    let mut rhs = b.to_vec();

    let mut r_diag = vec![0.0; n];
    for k in 0..n {
        // Householder vector for column k, rows k..m.
        let alpha = {
            let col = &a[k][k..];
            let nrm = norm2(col);
            if a[k][k] >= 0.0 {
                -nrm
            } else {
                nrm
            }
        };
        if alpha == 0.0 {
            r_diag[k] = 0.0;
            continue;
        }
        // v = x - alpha e1, normalized so v[0] = 1.
        let v0 = a[k][k] - alpha;
        let mut v = vec![1.0; m - k];
        for i in 1..(m - k) {
            v[i] = a[k][k + i] / v0;
        }
        let vtv = dot(&v, &v);
        let beta = -2.0 / vtv;

        // Apply H = I + beta v v' to remaining columns and to rhs.
        for col in a.iter_mut().skip(k) {
            let w = beta * v.iter().zip(&col[k..]).map(|(vi, ci)| vi * ci).sum::<f64>();
            for (i, vi) in v.iter().enumerate() {
                col[k + i] += w * vi;
            }
        }
        let w = beta * v.iter().zip(&rhs[k..]).map(|(vi, ci)| vi * ci).sum::<f64>();
        for (i, vi) in v.iter().enumerate() {
            rhs[k + i] += w * vi;
        }
        r_diag[k] = a[k][k];
    }

    let max_diag = r_diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    if max_diag == 0.0 {
        return None;
    }
    if r_diag.iter().any(|d| d.abs() <= 1e-12 * max_diag) {
        return None;
    }

    // Back substitution on R x = Q'b.
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in (k + 1)..n {
            s -= a[j][k] * x[j];
        }
        x[k] = s / r_diag[k];
    }
    Some(x)
}

/// Solve the symmetric positive-definite system `M x = b` in place via
/// Cholesky. `m` is row-major `n x n`. Returns `None` when a pivot collapses.
pub fn cholesky_solve(m: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(m.len(), n * n);
    assert_eq!(b.len(), n);
    if n == 0 {
        return Some(Vec::new());
    }
    let mut l = m.to_vec();
    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(l[i * n + i].abs()));
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 1e-12 * max_diag.max(1e-300) {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    // Forward then backward substitution.
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[i * n + k] * y[k];
            y[i] -= t;
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[k * n + i] * y[k];
            y[i] -= t;
        }
        y[i] /= l[i * n + i];
    }
    Some(y)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator); 0.0 for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
