//! Least-squares bandlimited reconstruction and its holdout error
//! operator. The normal-equation inverse from the closed-form expression
//! is realized as an SVD pseudo-inverse with a relative singular-value
//! cutoff, so ill-conditioned fold submatrices stay finite and are
//! reported through the condition number instead of blowing up.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::VertexSet;
use crate::spectral::SpectralBasis;

/// Relative singular-value cutoff for the pseudo-inverse.
pub const DEFAULT_SV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    /// Estimated values on the unknown set, ordered like the set.
    pub estimate: Vec<f64>,
    pub bandwidth: usize,
    /// Ratio of extreme singular values of U_SR (inf when rank deficient
    /// to machine zero).
    pub condition_number: f64,
    pub rank_deficient: bool,
    /// Fitted in-band coefficients.
    pub coefficients: Vec<f64>,
}

/// Pseudo-inverse diagnostics shared by reconstruction and the error
/// operator.
pub(crate) struct Pinv {
    pub pinv: DMatrix<f64>,
    pub condition_number: f64,
    pub rank_deficient: bool,
}

/// One-sided Jacobi SVD of a tall-or-square matrix (nrows >= ncols).
/// Returns (U, sigma, V) with A = U diag(sigma) V^T, singular values in
/// descending order, U with orthonormal columns for nonzero sigma and
/// zero columns otherwise, V square orthogonal.
///
/// nalgebra's golub-kahan SVD can leave factorization residuals around
/// 1e-7 on benign eigenvector submatrices, which breaks the exact-recovery
/// guarantee; Jacobi converges to machine precision for our modest sizes.
pub(crate) fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    debug_assert!(a.nrows() >= a.ncols());
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::identity(n, n);
    let tol = f64::EPSILON;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let wp = w.column(p);
                let wq = w.column(q);
                let alpha = wp.dot(&wp);
                let beta = wq.dot(&wq);
                let gamma = wp.dot(&wq);
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..w.nrows() {
                    let wip = w[(i, p)];
                    let wiq = w[(i, q)];
                    w[(i, p)] = c * wip - s * wiq;
                    w[(i, q)] = s * wip + c * wiq;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut u = DMatrix::zeros(w.nrows(), n);
    let mut v_sorted = DMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (slot, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        if norms[j] > 0.0 {
            u.set_column(slot, &(w.column(j) / norms[j]));
        }
        v_sorted.set_column(slot, &v.column(j));
    }
    (u, sigma, v_sorted)
}

pub(crate) fn pinv_with_cutoff(m: &DMatrix<f64>, rel_cutoff: f64) -> Result<Pinv> {
    // pinv(A^T) = pinv(A)^T, so always decompose the tall orientation
    let transposed = m.nrows() < m.ncols();
    let tall = if transposed { m.transpose() } else { m.clone() };
    let (u, sigma, v) = jacobi_svd(&tall);
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Err(Error::Numerical(
            "matrix is numerically rank zero; nothing to invert".into(),
        ));
    }
    let cutoff = rel_cutoff * sigma_max;
    let sigma_min = sigma.last().copied().unwrap_or(0.0);
    let rank_deficient = sigma.iter().any(|&s| s < cutoff);
    let condition_number = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };

    // pinv(tall) = V diag(1/sigma) U^T
    let mut scaled_ut = u.transpose();
    for (i, &s) in sigma.iter().enumerate() {
        let inv = if s >= cutoff { 1.0 / s } else { 0.0 };
        scaled_ut.row_mut(i).scale_mut(inv);
    }
    let pinv_tall = v * scaled_ut;
    Ok(Pinv {
        pinv: if transposed { pinv_tall.transpose() } else { pinv_tall },
        condition_number,
        rank_deficient,
    })
}

fn check_bandwidth(train_size: usize, r: usize, n: usize) -> Result<()> {
    if r < 1 || r >= n {
        return Err(Error::Infeasible(format!("bandwidth {r} outside [1, {n})")));
    }
    if r >= train_size {
        return Err(Error::Infeasible(format!(
            "bandwidth {r} requires more than {train_size} known vertices"
        )));
    }
    Ok(())
}

/// Least-squares reconstruction of the unknown values: fit in-band
/// coefficients to x_S by minimum-norm least squares on U_SR, then
/// extrapolate through U_{S^c R}.
pub fn reconstruct_ls(
    basis: &SpectralBasis,
    known: &VertexSet,
    known_values: &[f64],
    r: usize,
) -> Result<ReconstructionResult> {
    reconstruct_ls_with_cutoff(basis, known, known_values, r, DEFAULT_SV_CUTOFF)
}

pub fn reconstruct_ls_with_cutoff(
    basis: &SpectralBasis,
    known: &VertexSet,
    known_values: &[f64],
    r: usize,
    sv_cutoff: f64,
) -> Result<ReconstructionResult> {
    let n = basis.dimension();
    known.validate(n)?;
    check_bandwidth(known.len(), r, n)?;
    if known_values.len() != known.len() {
        return Err(Error::DimensionMismatch {
            expected: known.len(),
            got: known_values.len(),
        });
    }

    let band = VertexSet::range(r);
    let u_sr = basis.submatrix(known, &band)?;
    let p = pinv_with_cutoff(&u_sr, sv_cutoff)?;
    let coeffs = &p.pinv * DVector::from_column_slice(known_values);

    let unknown = known.complement(n);
    let estimate = if unknown.is_empty() {
        Vec::new()
    } else {
        let u_cr = basis.submatrix(&unknown, &band)?;
        (u_cr * &coeffs).iter().copied().collect()
    };

    Ok(ReconstructionResult {
        estimate,
        bandwidth: r,
        condition_number: p.condition_number,
        rank_deficient: p.rank_deficient,
        coefficients: coeffs.iter().copied().collect(),
    })
}

/// The holdout error operator M mapping out-of-band coefficients to the
/// reconstruction residual on the holdout set:
/// M = U_{H,R^c} - U_{H,R} pinv(U_{T,R}) U_{T,R^c}.
pub fn error_operator(
    basis: &SpectralBasis,
    train: &VertexSet,
    holdout: &VertexSet,
    r: usize,
) -> Result<DMatrix<f64>> {
    error_operator_with_cutoff(basis, train, holdout, r, DEFAULT_SV_CUTOFF)
}

pub fn error_operator_with_cutoff(
    basis: &SpectralBasis,
    train: &VertexSet,
    holdout: &VertexSet,
    r: usize,
    sv_cutoff: f64,
) -> Result<DMatrix<f64>> {
    let n = basis.dimension();
    train.validate(n)?;
    holdout.validate(n)?;
    check_bandwidth(train.len(), r, n)?;

    let band = VertexSet::range(r);
    let out_band = band.complement(n);
    if holdout.is_empty() {
        return Ok(DMatrix::zeros(0, n - r));
    }

    let u_hr = basis.submatrix(holdout, &band)?;
    let u_hrc = basis.submatrix(holdout, &out_band)?;
    let u_tr = basis.submatrix(train, &band)?;
    let u_trc = basis.submatrix(train, &out_band)?;
    let p = pinv_with_cutoff(&u_tr, sv_cutoff)?;
    Ok(u_hrc - u_hr * (&p.pinv * u_trc))
}
