use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::{Mat, Side};

use super::sparse::CsrMatrix;
use super::umfpack::{self, UmfpackLu, UmfpackSymbolic};
use crate::error::{Error, Result};

/// Relative forward error above which a freshly computed factorization is
/// treated as numerically singular.
const SINGULAR_PROBE_TOL: f64 = 1e-4;

/// Sparse direct factorization with a fill-reducing ordering. General
/// matrices use UMFPACK when the system library can be loaded and the
/// pure-Rust supernodal LU otherwise.
pub enum Factorization {
    Lu(Lu<usize, f64>),
    Umfpack(UmfpackLu),
    Cholesky(Llt<usize, f64>),
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Lu(_) => write!(f, "Factorization::Lu"),
            Self::Umfpack(_) => write!(f, "Factorization::Umfpack"),
            Self::Cholesky(_) => write!(f, "Factorization::Cholesky"),
        }
    }
}

/// Symbolic LU analysis kept across numeric refactorizations of matrices that
/// share one sparsity pattern (successive Picard steps).
pub struct SymbolicCache {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    symbolic: CachedSymbolic,
}

enum CachedSymbolic {
    Faer(SymbolicLu<usize>),
    Umfpack(UmfpackSymbolic),
}

fn check_square(a: &CsrMatrix) -> Result<()> {
    if a.rows != a.cols {
        return Err(Error::Dimension(format!(
            "factorize: matrix is {}x{}",
            a.rows, a.cols
        )));
    }
    Ok(())
}

fn lu_error(e: LuError) -> Error {
    match e {
        LuError::SymbolicSingular { index } => Error::Singular { index },
        LuError::Generic(g) => Error::Configuration(format!("sparse LU failed: {g:?}")),
    }
}

impl Factorization {
    pub fn lu(a: &CsrMatrix) -> Result<Self> {
        Self::lu_cached(a, &mut None)
    }

    /// LU with the pure-Rust backend regardless of UMFPACK availability.
    pub fn lu_faer(a: &CsrMatrix) -> Result<Self> {
        Self::lu_with(a, &mut None, false)
    }

    /// LU reusing the symbolic analysis in `cache` when the pattern matches.
    pub fn lu_cached(a: &CsrMatrix, cache: &mut Option<SymbolicCache>) -> Result<Self> {
        Self::lu_with(a, cache, umfpack::available())
    }

    fn lu_with(a: &CsrMatrix, cache: &mut Option<SymbolicCache>, use_umfpack: bool) -> Result<Self> {
        check_square(a)?;
        if a.rows == 0 {
            return Err(Error::Dimension("factorize: empty matrix".into()));
        }
        let reuse = cache
            .as_ref()
            .is_some_and(|c| c.row_offsets == a.row_offsets && c.col_indices == a.col_indices);
        if !reuse {
            let symbolic = if use_umfpack {
                CachedSymbolic::Umfpack(umfpack::symbolic(a.rows, &a.row_offsets, &a.col_indices, &a.values)?)
            } else {
                CachedSymbolic::Faer(SymbolicLu::try_new(a.to_faer().symbolic()).map_err(|e| {
                    Error::Configuration(format!("symbolic LU failed: {e:?}"))
                })?)
            };
            *cache = Some(SymbolicCache {
                row_offsets: a.row_offsets.clone(),
                col_indices: a.col_indices.clone(),
                symbolic,
            });
        }
        let f = match &cache.as_ref().expect("set above").symbolic {
            CachedSymbolic::Umfpack(sym) => {
                Self::Umfpack(umfpack::numeric(sym, a.rows, &a.row_offsets, &a.col_indices, &a.values)?)
            }
            CachedSymbolic::Faer(sym) => {
                let mat = a.to_faer();
                Self::Lu(Lu::try_new_with_symbolic(sym.clone(), mat.as_ref()).map_err(lu_error)?)
            }
        };
        f.probe(a)?;
        Ok(f)
    }

    /// Cholesky of a symmetric positive definite matrix (lower triangle read).
    pub fn cholesky(a: &CsrMatrix) -> Result<Self> {
        check_square(a)?;
        if a.rows == 0 {
            return Err(Error::Dimension("factorize: empty matrix".into()));
        }
        let mat = a.to_faer();
        let llt = mat.sp_cholesky(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
        let f = Self::Cholesky(llt);
        f.probe(a).map_err(|_| Error::NotPositiveDefinite)?;
        Ok(f)
    }

    /// The sparse LU does not stop on tiny pivots, so singularity is detected
    /// from the forward error on a manufactured solution.
    fn probe(&self, a: &CsrMatrix) -> Result<()> {
        let n = a.rows;
        let x_true: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_749_895).fract())
            .collect();
        let b = a.spmv(&x_true)?;
        let x = self.solve(&b);
        let mut worst = 0.0f64;
        let mut index = 0;
        for i in 0..n {
            let e = (x[i] - x_true[i]).abs();
            if !e.is_finite() {
                return Err(Error::Singular { index: i });
            }
            if e > worst {
                worst = e;
                index = i;
            }
        }
        if worst > SINGULAR_PROBE_TOL {
            return Err(Error::Singular { index });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Lu(f) => faer::linalg::solvers::ShapeCore::nrows(f),
            Self::Umfpack(f) => f.dim(),
            Self::Cholesky(f) => faer::linalg::solvers::ShapeCore::nrows(f),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        if let Self::Umfpack(f) = self {
            let y = f.solve(x);
            x.copy_from_slice(&y);
            return;
        }
        let n = x.len();
        let mut m = faer::MatMut::from_column_major_slice_mut(x, n, 1);
        match self {
            Self::Lu(f) => f.solve_in_place(m.as_mut()),
            Self::Cholesky(f) => f.solve_in_place(m.as_mut()),
            Self::Umfpack(_) => unreachable!(),
        }
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        if let Self::Umfpack(f) = self {
            return f.solve_transpose(b);
        }
        let mut x = b.to_vec();
        let n = x.len();
        let m = faer::MatMut::from_column_major_slice_mut(&mut x, n, 1);
        match self {
            Self::Lu(f) => f.solve_transpose_in_place(m),
            Self::Cholesky(f) => f.solve_in_place(m),
            Self::Umfpack(_) => unreachable!(),
        }
        x
    }

    /// Solves for every column of a dense right-hand side.
    pub fn solve_mat(&self, b: &Mat<f64>) -> Mat<f64> {
        let mut x = b.clone();
        match self {
            Self::Lu(f) => f.solve_in_place(x.as_mut()),
            Self::Cholesky(f) => f.solve_in_place(x.as_mut()),
            Self::Umfpack(f) => {
                for j in 0..b.ncols() {
                    let col: Vec<f64> = (0..b.nrows()).map(|i| b[(i, j)]).collect();
                    let y = f.solve(&col);
                    for (i, v) in y.into_iter().enumerate() {
                        x[(i, j)] = v;
                    }
                }
            }
        }
        x
    }
}
