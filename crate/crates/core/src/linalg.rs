//! Dense linear-algebra helpers shared by the samplers and estimators.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericDegeneracy("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Smallest real part over the spectrum.
pub fn min_real_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min))
}

pub fn ensure_stable(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidInput("expected a nonempty square matrix".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let min_real = min_real_eigenvalue(a)?;
    if min_real <= 0.0 {
        return Err(Error::UnstableMatrix { min_real });
    }
    Ok(min_real)
}

/// Spectral norm.
pub fn op_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Solves `A·C + C·Aᵀ = I` through the Kronecker form
/// `(I⊗A + A⊗I)·vec(C) = vec(I)` with one step of iterative refinement.
pub fn lyapunov_unit(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_column_slice(eye.as_slice());
    let lu = k.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NumericDegeneracy("singular Lyapunov operator".into()))?;
    let r = &rhs - &k * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    let mut c = DMatrix::from_column_slice(d, d, x.as_slice());
    symmetrize(&mut c);
    Ok(c)
}

/// Returns `(e^{−A·dt}, ∫₀^dt e^{−sA} e^{−sAᵀ} ds)` from one block exponential.
pub fn ou_transition(a: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = a.nrows();
    let mut block = DMatrix::<f64>::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(&(-a * dt));
    block
        .view_mut((0, d), (d, d))
        .copy_from(&(DMatrix::<f64>::identity(d, d) * dt));
    block.view_mut((d, d), (d, d)).copy_from(&(a.transpose() * dt));
    let e = block.exp();
    let f = e.view((0, 0), (d, d)).into_owned();
    let g = e.view((0, d), (d, d)).into_owned();
    let mut sigma = &g * f.transpose();
    symmetrize(&mut sigma);
    (f, sigma)
}

/// A factor `L` with `L·Lᵀ = S` for symmetric PSD `S`. Falls back to an
/// eigen-decomposition with clamped eigenvalues when Cholesky fails, and errors
/// when an eigenvalue falls below `-neg_tol`.
pub fn psd_factor(s: &DMatrix<f64>, neg_tol: f64) -> Result<DMatrix<f64>> {
    if let Some(ch) = s.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = s.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -neg_tol {
        return Err(Error::NumericDegeneracy(format!(
            "covariance is indefinite (eigenvalue {min:e})"
        )));
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

pub fn sym_eigen_range(s: &DMatrix<f64>) -> (f64, f64) {
    let ev = s.clone().symmetric_eigen().eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let c = lyapunov_unit(&a).unwrap();
        assert!((c[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((c[(1, 1)] - 0.25).abs() < 1e-15);
        assert!(c[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn transition_scalar() {
        let a = DMatrix::from_element(1, 1, 0.7);
        let (f, s) = ou_transition(&a, 0.3);
        assert!((f[(0, 0)] - (-0.21_f64).exp()).abs() < 1e-15);
        let expect = (1.0 - (-2.0 * 0.7 * 0.3_f64).exp()) / 1.4;
        assert!((s[(0, 0)] - expect).abs() < 1e-15);
    }

    #[test]
    fn psd_factor_rank_deficient() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let l = psd_factor(&s, 1e-10).unwrap();
        assert!((&l * l.transpose() - &s).abs().max() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(psd_factor(&bad, 1e-10).is_err());
    }
}
