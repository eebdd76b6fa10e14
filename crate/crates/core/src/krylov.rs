//! Full right-preconditioned GMRES and block upper-triangular preconditioners
//! for the saddle-point system [[A_γ, Bᵀ], [B, −C]].

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, CsrMatrix, Factorization, SymbolicCache};

/// Largest n+m for which the ideal preconditioner forms S densely.
pub const IDEAL_LIMIT: usize = 5000;

/// Optional PCD companions: pressure Laplacian and F_p = (ν+γ)A_p + N_p.
#[derive(Clone, Debug)]
pub struct PcdOperators {
    pub a_p: CsrMatrix,
    pub f_p: CsrMatrix,
}

#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub a_gamma: CsrMatrix,
    pub b: CsrMatrix,
    pub bt: CsrMatrix,
    pub c: CsrMatrix,
    /// pressure mass matrix, used by Ŝ and PCD
    pub mass: CsrMatrix,
    pub rhs: Vec<f64>,
    pub nu: f64,
    pub gamma: f64,
    /// pressure determined up to constants
    pub enclosed: bool,
    pub pcd: Option<PcdOperators>,
}

impl BlockSystem {
    pub fn new(
        a_gamma: CsrMatrix,
        b: CsrMatrix,
        c: CsrMatrix,
        mass: CsrMatrix,
        rhs: Vec<f64>,
        nu: f64,
        gamma: f64,
        enclosed: bool,
    ) -> Result<Self> {
        if !(nu > 0.0) || !(gamma >= 0.0) {
            return Err(Error::Parameter(format!("need nu > 0 and gamma >= 0, got nu={nu}, gamma={gamma}")));
        }
        let (n, m) = (a_gamma.rows, b.rows);
        if a_gamma.cols != n || b.cols != n || c.rows != m || c.cols != m || mass.rows != m || rhs.len() != n + m {
            return Err(Error::Dimension(format!(
                "inconsistent block sizes: A {}x{}, B {}x{}, C {}x{}, rhs {}",
                a_gamma.rows,
                a_gamma.cols,
                b.rows,
                b.cols,
                c.rows,
                c.cols,
                rhs.len()
            )));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("right-hand side is not finite".into()));
        }
        let bt = b.transpose();
        Ok(Self {
            a_gamma,
            b,
            bt,
            c,
            mass,
            rhs,
            nu,
            gamma,
            enclosed,
            pcd: None,
        })
    }

    pub fn n(&self) -> usize {
        self.a_gamma.rows
    }

    pub fn m(&self) -> usize {
        self.b.rows
    }

    pub fn dim(&self) -> usize {
        self.n() + self.m()
    }

    /// 𝒦 [v; q] = [A_γ v + Bᵀ q; B v − C q]
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let (v, q) = x.split_at(n);
        let mut y = vec![0.0; self.dim()];
        {
            let (yu, yp) = y.split_at_mut(n);
            self.a_gamma.spmv_into(v, yu).expect("conforming");
            self.bt.spmv_add(1.0, q, yu).expect("conforming");
            self.b.spmv_into(v, yp).expect("conforming");
            self.c.spmv_add(-1.0, q, yp).expect("conforming");
        }
        y
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let kx = self.apply(x);
        self.rhs.iter().zip(&kx).map(|(b, k)| b - k).collect()
    }

    /// Ŝ = (ν+γ)⁻¹ M + C
    pub fn schur_approximation(&self) -> CsrMatrix {
        self.mass
            .add(1.0 / (self.nu + self.gamma), &self.c, 1.0)
            .expect("pressure blocks conform")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PreconditionerKind {
    IdealTriangular,
    ALTriangular,
    ModifiedPCD,
    Unpreconditioned,
}

impl PreconditionerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::IdealTriangular => "ideal",
            Self::ALTriangular => "al",
            Self::ModifiedPCD => "pcd",
            Self::Unpreconditioned => "none",
        }
    }
}

impl FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(Self::IdealTriangular),
            "al" => Ok(Self::ALTriangular),
            "pcd" => Ok(Self::ModifiedPCD),
            "none" => Ok(Self::Unpreconditioned),
            _ => Err(Error::Parameter(format!(
                "unknown preconditioner '{s}' (expected al, pcd, ideal or none)"
            ))),
        }
    }
}

impl std::fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Subtracts the arithmetic mean.
pub fn project_mean_zero(q: &mut [f64]) {
    if q.is_empty() {
        return;
    }
    let mean = q.iter().sum::<f64>() / q.len() as f64;
    q.iter_mut().for_each(|v| *v -= mean);
}

enum SchurSolver {
    Ideal(PartialPivLu<f64>),
    Approximate(Factorization),
    Pcd {
        a_p: Factorization,
        f_p: CsrMatrix,
        mass: Factorization,
    },
}

/// A factorized block preconditioner ready for repeated application.
pub struct Preconditioner {
    pub kind: PreconditionerKind,
    n: usize,
    m: usize,
    enclosed: bool,
    a_fact: Option<Factorization>,
    schur: Option<SchurSolver>,
}

/// Pinned copy of a matrix for enclosed domains: row and column `last` set to e_last.
fn pinned(a: &CsrMatrix, enclosed: bool) -> CsrMatrix {
    if enclosed && a.rows > 0 {
        a.pin(a.rows - 1)
    } else {
        a.clone()
    }
}

/// Dense S = B A⁻¹ Bᵀ + C.
pub fn dense_schur(system: &BlockSystem, a_fact: &Factorization) -> Mat<f64> {
    let (n, m) = (system.n(), system.m());
    let bt = system.bt.to_dense();
    let x = if n == 0 { Mat::zeros(0, m) } else { a_fact.solve_mat(&bt) };
    let mut s = system.c.to_dense();
    for i in 0..m {
        let (cols, vals) = system.b.row(i);
        for j in 0..m {
            let mut acc = 0.0;
            for (&k, &bv) in cols.iter().zip(vals) {
                acc += bv * x[(k, j)];
            }
            s[(i, j)] += acc;
        }
    }
    s
}

impl Preconditioner {
    pub fn new(system: &BlockSystem, kind: PreconditionerKind) -> Result<Self> {
        Self::with_cache(system, kind, &mut None)
    }

    /// Builds the factorizations; `cache` carries the symbolic LU of A_γ
    /// across systems with the same pattern.
    pub fn with_cache(
        system: &BlockSystem,
        kind: PreconditionerKind,
        cache: &mut Option<SymbolicCache>,
    ) -> Result<Self> {
        let (n, m) = (system.n(), system.m());
        let enclosed = system.enclosed;
        let mut out = Self {
            kind,
            n,
            m,
            enclosed,
            a_fact: None,
            schur: None,
        };
        if kind == PreconditionerKind::Unpreconditioned {
            return Ok(out);
        }
        if kind == PreconditionerKind::IdealTriangular && n + m > IDEAL_LIMIT {
            return Err(Error::SizeGuard {
                what: "ideal preconditioner",
                dim: n + m,
                limit: IDEAL_LIMIT,
            });
        }
        let a_fact = if n > 0 {
            Some(Factorization::lu_cached(&system.a_gamma, cache)?)
        } else {
            None
        };
        out.schur = Some(match kind {
            PreconditionerKind::IdealTriangular => {
                let s = match &a_fact {
                    Some(f) => dense_schur(system, f),
                    None => system.c.to_dense(),
                };
                let s = if enclosed && m > 0 {
                    let mut p = s.clone();
                    for k in 0..m {
                        p[(m - 1, k)] = 0.0;
                        p[(k, m - 1)] = 0.0;
                    }
                    p[(m - 1, m - 1)] = 1.0;
                    p
                } else {
                    s
                };
                SchurSolver::Ideal(s.partial_piv_lu())
            }
            PreconditionerKind::ALTriangular => {
                SchurSolver::Approximate(Factorization::cholesky(&system.schur_approximation())?)
            }
            PreconditionerKind::ModifiedPCD => {
                let pcd = system.pcd.as_ref().ok_or_else(|| {
                    Error::Configuration("PCD preconditioner requested without PCD operators".into())
                })?;
                SchurSolver::Pcd {
                    a_p: Factorization::cholesky(&pinned(&pcd.a_p, enclosed))?,
                    f_p: pcd.f_p.clone(),
                    mass: Factorization::cholesky(&system.mass)?,
                }
            }
            PreconditionerKind::Unpreconditioned => unreachable!(),
        });
        out.a_fact = a_fact;
        Ok(out)
    }

    /// Action of the Schur approximation inverse on a pressure vector.
    pub fn apply_schur_inverse(&self, r: &[f64]) -> Vec<f64> {
        let mut r = r.to_vec();
        if self.enclosed {
            project_mean_zero(&mut r);
        }
        let mut z = match &self.schur {
            None => r,
            Some(SchurSolver::Approximate(f)) => f.solve(&r),
            Some(SchurSolver::Ideal(lu)) => {
                if self.enclosed && self.m > 0 {
                    r[self.m - 1] = 0.0;
                }
                let rhs = Mat::from_fn(self.m, 1, |i, _| r[i]);
                let x = lu.solve(&rhs);
                (0..self.m).map(|i| x[(i, 0)]).collect()
            }
            Some(SchurSolver::Pcd { a_p, f_p, mass }) => {
                if self.enclosed && self.m > 0 {
                    r[self.m - 1] = 0.0;
                }
                let y = a_p.solve(&r);
                let t = f_p.spmv(&y).expect("pressure operator");
                mass.solve(&t)
            }
        };
        if self.enclosed {
            project_mean_zero(&mut z);
        }
        z
    }

    /// z = 𝒫⁻¹ r by back-substitution: q = −Ŝ⁻¹ r_p, v = A_γ⁻¹ (r_u − Bᵀ q).
    pub fn apply(&self, system: &BlockSystem, r: &[f64]) -> Vec<f64> {
        if self.kind == PreconditionerKind::Unpreconditioned {
            return r.to_vec();
        }
        let n = self.n;
        let (ru, rp) = r.split_at(n);
        let q: Vec<f64> = self.apply_schur_inverse(rp).iter().map(|v| -v).collect();
        let mut t = ru.to_vec();
        system.bt.spmv_add(-1.0, &q, &mut t).expect("conforming");
        let v = match &self.a_fact {
            Some(f) => f.solve(&t),
            None => t,
        };
        let mut z = v;
        z.extend_from_slice(&q);
        z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovConfig {
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Recompute b − 𝒦x_k at every step (one extra preconditioner solve each).
    pub track_true_residual: bool,
    pub deadline: Option<Instant>,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-5,
            max_iters: 400,
            track_true_residual: false,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// GMRES residual estimates, starting with ‖r_0‖ (in the solver inner product).
    pub residual_history: Vec<f64>,
    /// Euclidean ‖b − 𝒦x_k‖ per step when tracked.
    pub true_residual_history: Option<Vec<f64>>,
    pub converged: bool,
    /// Euclidean ‖b − 𝒦x‖ recomputed at exit.
    pub final_true_residual: f64,
    pub initial_residual: f64,
}

impl KrylovResult {
    /// |‖b − 𝒦x‖ − estimate| / ‖r_0‖ at exit (Euclidean runs only).
    pub fn estimate_gap(&self) -> f64 {
        let est = *self.residual_history.last().unwrap_or(&0.0);
        if self.initial_residual == 0.0 {
            return self.final_true_residual;
        }
        (self.final_true_residual - est).abs() / self.initial_residual
    }
}

/// Inner product for the Arnoldi process: ⟨a, b⟩ = aᵀ W b.
pub trait InnerProduct {
    /// W v, or `None` for the Euclidean product.
    fn weight(&self, v: &[f64]) -> Option<Vec<f64>>;
}

pub struct Euclidean;

impl InnerProduct for Euclidean {
    fn weight(&self, _v: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Weighted inner product given by a closure applying W.
pub struct Weighted<F: Fn(&[f64]) -> Vec<f64>>(pub F);

impl<F: Fn(&[f64]) -> Vec<f64>> InnerProduct for Weighted<F> {
    fn weight(&self, v: &[f64]) -> Option<Vec<f64>> {
        Some((self.0)(v))
    }
}

const REORTH_TRIGGER: f64 = 1e-8;
const BREAKDOWN_TOL: f64 = 1e-14;

pub fn gmres(system: &BlockSystem, precond: &Preconditioner, config: &KrylovConfig) -> Result<KrylovResult> {
    gmres_with(system, precond, config, &Euclidean)
}

/// Full GMRES, right preconditioned, zero initial guess. The stopping test
/// ‖r_k‖ ≤ rel_tol ‖r_0‖ is applied to the residual in the chosen inner
/// product (Euclidean by default, where it equals the true residual).
pub fn gmres_with(
    system: &BlockSystem,
    precond: &Preconditioner,
    config: &KrylovConfig,
    ip: &dyn InnerProduct,
) -> Result<KrylovResult> {
    let dim = system.dim();
    let b = &system.rhs;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("right-hand side is not finite".into()));
    }
    let weighted = ip.weight(b).is_some();
    let ipdot = |a: &[f64], wb: &Option<Vec<f64>>, bb: &[f64]| -> f64 {
        match wb {
            Some(w) => dot(a, w),
            None => dot(a, bb),
        }
    };
    let wb = ip.weight(b);
    let beta = ipdot(b, &wb, b).max(0.0).sqrt();
    let euclid_b = norm2(b);
    let mut history = vec![beta];
    let mut true_hist = config.track_true_residual.then(|| vec![euclid_b]);
    let finish = |x: Vec<f64>, iterations: usize, history: Vec<f64>, true_hist: Option<Vec<f64>>, converged: bool| {
        let final_true = norm2(&system.residual(&x));
        KrylovResult {
            solution: x,
            iterations,
            residual_history: history,
            true_residual_history: true_hist,
            converged,
            final_true_residual: final_true,
            initial_residual: beta,
        }
    };
    if beta == 0.0 {
        return Ok(finish(vec![0.0; dim], 0, history, true_hist, true));
    }
    let target = config.rel_tol * beta;

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut wbasis: Vec<Vec<f64>> = Vec::new();
    let mut v0: Vec<f64> = b.iter().map(|v| v / beta).collect();
    if weighted {
        wbasis.push(wb.expect("weighted").iter().map(|v| v / beta).collect());
    }
    basis.push(std::mem::take(&mut v0));
    // Hessenberg columns, Givens rotations and the rotated rhs
    let mut hcols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];

    let solution_from = |k: usize, hcols: &Vec<Vec<f64>>, g: &Vec<f64>, basis: &Vec<Vec<f64>>| -> Vec<f64> {
        // back substitution on the k×k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in (i + 1)..k {
                s -= hcols[j][i] * y[j];
            }
            y[i] = s / hcols[i][i];
        }
        let mut u = vec![0.0; dim];
        for (j, yj) in y.iter().enumerate() {
            crate::linalg::axpy(*yj, &basis[j], &mut u);
        }
        precond.apply(system, &u)
    };

    let mut k = 0;
    while k < config.max_iters {
        if let Some(d) = config.deadline {
            if Instant::now() > d {
                return Err(Error::Timeout);
            }
        }
        let z = precond.apply(system, &basis[k]);
        let mut w = system.apply(&z);
        let mut h = vec![0.0; k + 2];
        let w_before = ipdot(&w, &ip.weight(&w), &w).max(0.0).sqrt();
        for pass in 0..2 {
            for j in 0..=k {
                let hij = if weighted { dot(&w, &wbasis[j]) } else { dot(&w, &basis[j]) };
                crate::linalg::axpy(-hij, &basis[j], &mut w);
                h[j] += hij;
            }
            let ww = ip.weight(&w);
            let w_after = ipdot(&w, &ww, &w).max(0.0).sqrt();
            h[k + 1] = w_after;
            let loss = f64::EPSILON * w_before / w_after.max(f64::MIN_POSITIVE);
            if pass == 1 || loss <= REORTH_TRIGGER || w_after == 0.0 {
                break;
            }
        }
        let subdiag = h[k + 1];
        // apply previous rotations, then a new one
        for i in 0..k {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let r = h[k].hypot(h[k + 1]);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (h[k] / r, h[k + 1] / r) };
        cs.push(c);
        sn.push(s);
        h[k] = r;
        h[k + 1] = 0.0;
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        hcols.push(h);
        k += 1;
        let est = g[k].abs();
        history.push(est);

        let breakdown = subdiag < BREAKDOWN_TOL * w_before.max(f64::MIN_POSITIVE);
        if let Some(th) = true_hist.as_mut() {
            let x = solution_from(k, &hcols, &g, &basis);
            th.push(norm2(&system.residual(&x)));
        }
        if est <= target {
            let x = solution_from(k, &hcols, &g, &basis);
            return Ok(finish(x, k, history, true_hist, true));
        }
        if breakdown {
            return Err(Error::Breakdown {
                iteration: k,
                ratio: est / beta,
            });
        }
        let mut vnext = std::mem::take(&mut w);
        vnext.iter_mut().for_each(|v| *v /= subdiag);
        if weighted {
            let wv = ip.weight(&vnext).expect("weighted");
            wbasis.push(wv);
        }
        basis.push(vnext);
    }
    let x = if k == 0 { vec![0.0; dim] } else { solution_from(k, &hcols, &g, &basis) };
    Ok(finish(x, k, history, true_hist, false))
}

/// Residual history as CSV: iter, true_residual, preconditioned_residual.
/// The true residual column is filled where it was computed (every step when
/// tracked, otherwise only at exit).
pub fn write_residual_csv<W: Write>(result: &KrylovResult, echo: &[String], out: &mut W) -> Result<()> {
    for line in echo {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "iter,true_residual,preconditioned_residual")?;
    let last = result.residual_history.len().saturating_sub(1);
    for (i, est) in result.residual_history.iter().enumerate() {
        let t = match &result.true_residual_history {
            Some(th) => format!("{:.16e}", th[i]),
            None if i == last => format!("{:.16e}", result.final_true_residual),
            None if i == 0 => format!("{:.16e}", result.initial_residual),
            None => String::new(),
        };
        writeln!(out, "{i},{t},{est:.16e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_system(n: usize, m: usize, rhs: Vec<f64>) -> BlockSystem {
        BlockSystem::new(
            CsrMatrix::identity(n),
            CsrMatrix::zeros(m, n),
            CsrMatrix::from_diagonal(&vec![-1.0; m]),
            CsrMatrix::identity(m),
            rhs,
            1.0,
            0.0,
            false,
        )
        .unwrap()
    }

    #[test]
    fn identity_blocks_converge_in_one_step() {
        let sys = identity_system(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let p = Preconditioner::new(&sys, PreconditionerKind::Unpreconditioned).unwrap();
        let r = gmres(&sys, &p, &KrylovConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.final_true_residual < 1e-12);
    }

    #[test]
    fn zero_rhs() {
        let sys = identity_system(2, 1, vec![0.0; 3]);
        let p = Preconditioner::new(&sys, PreconditionerKind::Unpreconditioned).unwrap();
        let r = gmres(&sys, &p, &KrylovConfig::default()).unwrap();
        assert!(r.converged && r.iterations == 0);
    }

    fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize) -> BlockSystem {
        let mut ta = Vec::new();
        for i in 0..n {
            ta.push((i, i, 4.0 + rng.random::<f64>()));
            if i + 1 < n {
                ta.push((i, i + 1, rng.random_range(-1.0..1.0)));
                ta.push((i + 1, i, rng.random_range(-1.0..1.0)));
            }
        }
        let mut tb = Vec::new();
        for i in 0..m {
            for j in 0..n {
                if rng.random::<f64>() < 0.3 {
                    tb.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let c = CsrMatrix::from_diagonal(&vec![0.1; m]);
        let mass = CsrMatrix::from_diagonal(&(0..m).map(|_| 1.0 + rng.random::<f64>()).collect::<Vec<_>>());
        let rhs = (0..n + m).map(|_| rng.random_range(-1.0..1.0)).collect();
        BlockSystem::new(
            CsrMatrix::from_triplets(n, n, &ta).unwrap(),
            CsrMatrix::from_triplets(m, n, &tb).unwrap(),
            c,
            mass,
            rhs,
            0.1,
            0.1,
            false,
        )
        .unwrap()
    }

    #[test]
    fn preconditioner_inverts_block_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = random_system(&mut rng, 12, 5);
        let p = Preconditioner::new(&sys, PreconditionerKind::ALTriangular).unwrap();
        let v: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        // r = 𝒫̂ [v; q] = [A v + Bᵀ q; −Ŝ q]
        let mut ru = sys.a_gamma.spmv(&v).unwrap();
        sys.bt.spmv_add(1.0, &q, &mut ru).unwrap();
        let rp: Vec<f64> = sys.schur_approximation().spmv(&q).unwrap().iter().map(|x| -x).collect();
        ru.extend(rp);
        let z = p.apply(&sys, &ru);
        for (a, b) in z.iter().zip(v.iter().chain(&q)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn al_with_zero_coupling_scales_mass() {
        let n = 4;
        let m = 3;
        let mass = CsrMatrix::from_diagonal(&[1.0, 2.0, 4.0]);
        let sys = BlockSystem::new(
            CsrMatrix::identity(n),
            CsrMatrix::zeros(m, n),
            CsrMatrix::zeros(m, m),
            mass,
            vec![0.0; n + m],
            0.3,
            0.2,
            false,
        )
        .unwrap();
        let p = Preconditioner::new(&sys, PreconditionerKind::ALTriangular).unwrap();
        let r = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let z = p.apply(&sys, &r);
        let expect = [-0.5, -0.25, -0.125];
        for i in 0..3 {
            assert!((z[n + i] - expect[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn ideal_preconditioner_two_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sys = random_system(&mut rng, 20, 8);
        let p = Preconditioner::new(&sys, PreconditionerKind::IdealTriangular).unwrap();
        let r = gmres(&sys, &p, &KrylovConfig { rel_tol: 1e-10, ..Default::default() }).unwrap();
        assert!(r.converged && r.iterations <= 2, "{}", r.iterations);
    }

    #[test]
    fn history_monotone_and_estimate_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sys = random_system(&mut rng, 40, 15);
        let p = Preconditioner::new(&sys, PreconditionerKind::Unpreconditioned).unwrap();
        let cfg = KrylovConfig {
            rel_tol: 1e-10,
            track_true_residual: true,
            ..Default::default()
        };
        let r = gmres(&sys, &p, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(r.estimate_gap() < 1e-8);
        let th = r.true_residual_history.as_ref().unwrap();
        for (t, e) in th.iter().zip(&r.residual_history) {
            assert!((t - e).abs() <= 1e-8 * r.initial_residual);
        }
        let mut buf = Vec::new();
        write_residual_csv(&r, &["test".into()], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("iter,true_residual,preconditioned_residual"));
    }

    #[test]
    fn iteration_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sys = random_system(&mut rng, 40, 15);
        let p = Preconditioner::new(&sys, PreconditionerKind::Unpreconditioned).unwrap();
        let r = gmres(&sys, &p, &KrylovConfig { rel_tol: 1e-14, max_iters: 3, ..Default::default() }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert!(r.residual_history.len() < 3 + 2);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("al".parse::<PreconditionerKind>().unwrap(), PreconditionerKind::ALTriangular);
        assert!("bogus".parse::<PreconditionerKind>().is_err());
    }
}
