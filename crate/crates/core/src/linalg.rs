//! Dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const EIGEN_MAX_ITERS: usize = 10_000;

/// Symmetric eigendecomposition with ascending eigenvalues.
///
/// Each eigenvector is flipped so that its first component with magnitude
/// above `1e-8` is positive, which makes the basis reproducible across calls.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge"))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-8) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    Ok((values, vectors))
}

/// Moore–Penrose pseudo-inverse together with the spectrum summary it was built from.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    /// Ratio of the largest to the smallest singular value over `min(rows, cols)`
    /// values; `inf` when the matrix is rank deficient.
    pub cond: f64,
    pub sigma_max: f64,
}

/// SVD pseudo-inverse with cutoff `max(rows, cols) * eps * sigma_max`.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> Result<PseudoInverse> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(PseudoInverse { matrix: DMatrix::zeros(cols, rows), rank: 0, cond: f64::INFINITY, sigma_max: 0.0 });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("pseudo-inverse of a matrix with non-finite entries"));
    }
    let svd = nalgebra::linalg::SVD::try_new(m.clone(), true, true, f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or_else(|| Error::numerical("SVD did not converge"))?;
    let sv = &svd.singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * sigma_max;

    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut pinv = DMatrix::zeros(cols, rows);
    let mut rank = 0;
    for (k, &s) in sv.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            // pinv += v_k * u_k^T / s
            pinv.ger(1.0 / s, &v_t.row(k).transpose(), &u.column(k), 1.0);
        }
    }
    let cond = if sigma_min > 0.0 { sigma_max / sigma_min } else { f64::INFINITY };
    Ok(PseudoInverse { matrix: pinv, rank, cond, sigma_max })
}

/// Upper bound on the spectral radius of a symmetric entrywise-nonnegative matrix.
///
/// Runs power iteration on `Q + I` from the all-ones vector and returns the
/// Collatz–Wielandt bound `max_i (Qx)_i / x_i`, which is always `>= lambda_max`
/// and tightens as the iterate approaches the Perron vector.
pub fn perron_upper_bound(q: &DMatrix<f64>, iters: usize) -> f64 {
    let n = q.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_element(n, 1.0);
    let mut best = f64::INFINITY;
    for _ in 0..iters.max(1) {
        let qx = q * &x;
        let bound = qx.iter().zip(x.iter()).map(|(a, b)| a / b).fold(f64::NEG_INFINITY, f64::max);
        best = best.min(bound);
        let mut next = qx + &x;
        let norm = next.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        next /= norm;
        // keep the iterate strictly positive so the ratio stays defined
        for v in next.iter_mut() {
            if *v < 1e-300 {
                *v = 1e-300;
            }
        }
        x = next;
    }
    // the ratio converges from above but can round one ulp below the radius
    best.max(0.0) * (1.0 + 64.0 * f64::EPSILON)
}

/// Estimate of the largest eigenvalue of the PSD matrix `m^T m` by power iteration.
pub fn gram_lambda_max(m: &DMatrix<f64>, iters: usize) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    x /= x.norm();
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        let y = m.tr_mul(&(m * &x));
        let norm = y.norm();
        if norm == 0.0 || !norm.is_finite() {
            return lambda;
        }
        lambda = x.dot(&y);
        x = y / norm;
    }
    // the last Rayleigh quotient can lag the norm ratio slightly
    let y = m.tr_mul(&(m * &x));
    lambda.max(y.norm())
}

/// Orthonormal basis of the column span of `a`, dropping directions below the SVD cutoff.
pub fn orthonormal_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    let svd = nalgebra::linalg::SVD::try_new(a.clone(), true, false, f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or_else(|| Error::numerical("SVD did not converge"))?;
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * sigma_max;
    let u = svd.u.as_ref().expect("u requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > cutoff && svd.singular_values[k] > 0.0)
        .collect();
    Ok(DMatrix::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])]))
}

/// Largest principal angle (radians) between `span(target)` and its best
/// approximation inside `span(container)`.
///
/// Zero means `span(target)` is contained in `span(container)`.
pub fn containment_angle(target: &DMatrix<f64>, container: &DMatrix<f64>) -> Result<f64> {
    let qt = orthonormal_basis(target)?;
    let qc = orthonormal_basis(container)?;
    if qt.ncols() == 0 {
        return Ok(0.0);
    }
    if qc.ncols() == 0 {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let cross = qc.tr_mul(&qt);
    let sv = cross.singular_values();
    // a target direction orthogonal to everything contributes a zero cosine
    let min_cos = if qt.ncols() > qc.ncols() { 0.0 } else { sv.iter().cloned().fold(f64::INFINITY, f64::min) };
    Ok(min_cos.clamp(-1.0, 1.0).acos())
}

/// `tr(M^{-1})` for a symmetric PSD matrix, or `+inf` when it is numerically singular.
pub fn trace_inverse_psd(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let (values, _) = symmetric_eigen_sorted(m)?;
    let max = values[n - 1];
    let min = values[0];
    if max <= 0.0 || min <= n as f64 * f64::EPSILON * max {
        return Ok(f64::INFINITY);
    }
    Ok(values.iter().map(|v| 1.0 / v).sum())
}
