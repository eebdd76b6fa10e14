use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Par, Side};

use crate::error::{Error, Result};

/// Largest dimension accepted by the dense eigen probes.
pub const DENSE_EIG_LIMIT: usize = 5000;

fn check(a: &Mat<f64>, what: &'static str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what}: matrix is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() > DENSE_EIG_LIMIT {
        return Err(Error::SizeGuard {
            what,
            dim: a.nrows(),
            limit: DENSE_EIG_LIMIT,
        });
    }
    Ok(())
}

/// All eigenvalues of a real square matrix, unordered.
pub fn eig_general(a: &Mat<f64>) -> Result<Vec<c64>> {
    check(a, "dense_eig_general")?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues()
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn eig_sym(a: &Mat<f64>) -> Result<Vec<f64>> {
    check(a, "dense_eig_sym")?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky_lower(b: &Mat<f64>) -> Result<Mat<f64>> {
    let llt = b.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    Ok(llt.L().to_owned())
}

/// L⁻¹ X for lower triangular L.
pub fn lower_solve(l: &Mat<f64>, x: &Mat<f64>) -> Mat<f64> {
    let mut y = x.clone();
    solve_lower_triangular_in_place(l.as_ref(), y.as_mut(), Par::Seq);
    y
}

/// Real spectrum of A x = λ B x, ascending, for symmetric A and SPD B.
pub fn eig_sym_generalized(a: &Mat<f64>, b: &Mat<f64>) -> Result<Vec<f64>> {
    check(a, "dense_eig_sym_generalized")?;
    check(b, "dense_eig_sym_generalized")?;
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "generalized eigenproblem with sizes {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let l = cholesky_lower(b)?;
    // C = L⁻¹ A L⁻ᵀ, formed with two triangular solves
    let x = lower_solve(&l, a);
    let c = lower_solve(&l, &x.transpose().to_owned());
    eig_sym(&symmetrize(&c))
}

pub fn symmetrize(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn inverse(a: &Mat<f64>) -> Mat<f64> {
    let n = a.nrows();
    a.partial_piv_lu().solve(Mat::<f64>::identity(n, n))
}
