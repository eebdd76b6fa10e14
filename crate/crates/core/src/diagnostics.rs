//! Dense spectral and field-of-values probes for small Oseen systems, plus the
//! benchmark statistics taken from converged solutions: centerline profiles,
//! streamfunction and step reattachment points.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{AdvectionField, ScalarBlocks};
use crate::error::{Error, Result};
use crate::fe::{inverse_map, ElementOrder, ReferenceElement};
use crate::krylov::{
    dense_schur, gmres, gmres_with, project_mean_zero, BlockSystem, KrylovConfig, Preconditioner,
    PreconditionerKind, Weighted,
};
use crate::linalg::dense::{cholesky_lower, inverse, lower_solve, symmetrize};
use crate::linalg::{dot, eig_general, eig_sym_generalized, Factorization, DENSE_EIG_LIMIT};
use crate::mesh::{BoundaryTag, Geometry, MeshTopology};
use crate::picard::{BenchmarkProblem, Discretization};

/// Largest n+m for the dense field-of-values probe.
pub const FOV_LIMIT: usize = 5000;

/// Orthonormal basis Q of the complement of one vector w, stored as the
/// Householder reflector H = I − 2uuᵀ with H w ∥ e₀; Q is H without its
/// first column.
#[derive(Clone, Debug)]
pub struct Householder {
    u: Vec<f64>,
}

impl Householder {
    pub fn new(w: &[f64]) -> Result<Self> {
        let norm = dot(w, w).sqrt();
        if w.is_empty() || !(norm > 0.0) {
            return Err(Error::Parameter("Householder vector must be nonzero".into()));
        }
        let mut u: Vec<f64> = w.iter().map(|v| v / norm).collect();
        u[0] += if u[0] >= 0.0 { 1.0 } else { -1.0 };
        let un = dot(&u, &u).sqrt();
        u.iter_mut().for_each(|v| *v /= un);
        Ok(Self { u })
    }

    /// Dimension of the complement, one less than the ambient space.
    pub fn dim(&self) -> usize {
        self.u.len() - 1
    }

    fn reflect(&self, x: &mut [f64]) {
        let s = 2.0 * dot(&self.u, x);
        x.iter_mut().zip(&self.u).for_each(|(v, u)| *v -= s * u);
    }

    /// Qᵀ x
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.reflect(&mut y);
        y.remove(0);
        y
    }

    /// Q y
    pub fn expand(&self, y: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(y.len() + 1);
        x.push(0.0);
        x.extend_from_slice(y);
        self.reflect(&mut x);
        x
    }

    /// Qᵀ A Q
    pub fn congruence(&self, a: &Mat<f64>) -> Mat<f64> {
        let n = self.u.len();
        let u = &self.u;
        // B = H A, then H A H
        let mut b = a.clone();
        for j in 0..n {
            let s: f64 = 2.0 * (0..n).map(|i| u[i] * b[(i, j)]).sum::<f64>();
            for i in 0..n {
                b[(i, j)] -= s * u[i];
            }
        }
        for i in 0..n {
            let s: f64 = 2.0 * (0..n).map(|j| b[(i, j)] * u[j]).sum::<f64>();
            for j in 0..n {
                b[(i, j)] -= s * u[j];
            }
        }
        Mat::from_fn(n - 1, n - 1, |i, j| b[(i + 1, j + 1)])
    }
}

/// Advection used to build a probe system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeAdvection {
    Zero,
    /// Velocity of the first Picard step (the grad-div Stokes solution).
    FirstPicard,
}

impl ProbeAdvection {
    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::FirstPicard => "first-picard",
        }
    }
}

impl std::str::FromStr for ProbeAdvection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "first-picard" | "picard" => Ok(Self::FirstPicard),
            _ => Err(Error::Parse(format!("unknown probe advection '{s}'"))),
        }
    }
}

/// A cavity Oseen system used by the dense probes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeConfig {
    pub nu: f64,
    pub gamma: f64,
    pub h: f64,
    pub order: ElementOrder,
    pub advection: ProbeAdvection,
}

impl ProbeConfig {
    pub fn echo(&self) -> Vec<String> {
        vec![
            "problem=cavity".to_string(),
            format!("nu={}", self.nu),
            format!("gamma={}", self.gamma),
            format!("h={}", self.h),
            format!("order={}", self.order.degree()),
            format!("advection={}", self.advection.name()),
        ]
    }
}

/// Builds the cavity Oseen system for a probe configuration.
pub fn probe_system(cfg: &ProbeConfig) -> Result<BlockSystem> {
    let problem = BenchmarkProblem::cavity_with_viscosity(cfg.nu);
    let disc = Discretization::new(&problem, cfg.h, cfg.order)?;
    let zero = AdvectionField::zero(disc.dofmap.n_full_velocity());
    let stokes = disc.system(cfg.nu, cfg.gamma, &zero, false)?;
    match cfg.advection {
        ProbeAdvection::Zero => Ok(stokes),
        ProbeAdvection::FirstPicard => {
            let pre = Preconditioner::new(&stokes, PreconditionerKind::ALTriangular)?;
            let inner = KrylovConfig {
                rel_tol: 1e-12,
                max_iters: 1000,
                ..KrylovConfig::default()
            };
            let res = gmres(&stokes, &pre, &inner)?;
            let (u, _) = disc.split(&res.solution);
            disc.system(cfg.nu, cfg.gamma, &AdvectionField::new(u)?, false)
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub eigenvalues: Vec<c64>,
    pub min_real: f64,
    pub max_modulus: f64,
    pub nu: f64,
    pub gamma: f64,
    pub h: Option<f64>,
    pub order: Option<ElementOrder>,
}

impl SpectralReport {
    /// Both bounds on the preconditioned Schur complement spectrum.
    pub fn bounds_hold(&self) -> bool {
        self.min_real > 0.0 && self.max_modulus <= 1.0 + 1e-8
    }
}

/// Dense S and Ŝ restricted to the pressures with 1ᵀMp = 0 (enclosed flow)
/// or left whole (open boundary).
fn restricted_schur_pair(system: &BlockSystem) -> Result<(Mat<f64>, Mat<f64>)> {
    let m = system.m();
    if m > DENSE_EIG_LIMIT {
        return Err(Error::SizeGuard {
            what: "dense Schur complement",
            dim: m,
            limit: DENSE_EIG_LIMIT,
        });
    }
    let s = if system.n() > 0 {
        dense_schur(system, &Factorization::lu(&system.a_gamma)?)
    } else {
        system.c.to_dense()
    };
    let shat = system.schur_approximation().to_dense();
    if !system.enclosed {
        return Ok((s, shat));
    }
    let m1 = system.mass.spmv(&vec![1.0; m])?;
    let hh = Householder::new(&m1)?;
    Ok((hh.congruence(&s), hh.congruence(&shat)))
}

/// Spectrum of S p = λ Ŝ p with S = B A_γ⁻¹ Bᵀ + C and Ŝ = (ν+γ)⁻¹M + C.
/// For enclosed flow the constant pressure (λ = 0) is removed by working on
/// {1ᵀMp = 0}, which holds every other eigenvector.
pub fn schur_spectrum(system: &BlockSystem) -> Result<SpectralReport> {
    let (s, shat) = restricted_schur_pair(system)?;
    let l = cholesky_lower(&shat)?;
    let x = lower_solve(&l, &s);
    let c = lower_solve(&l, &x.transpose().to_owned()).transpose().to_owned();
    let eigenvalues = eig_general(&c)?;
    let min_real = eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max_modulus = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(SpectralReport {
        eigenvalues,
        min_real,
        max_modulus,
        nu: system.nu,
        gamma: system.gamma,
        h: None,
        order: None,
    })
}

pub fn probe_eigs(cfg: &ProbeConfig) -> Result<SpectralReport> {
    let mut rep = schur_spectrum(&probe_system(cfg)?)?;
    rep.h = Some(cfg.h);
    rep.order = Some(cfg.order);
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FovReport {
    /// μ(𝒦𝒫̂⁻¹)
    pub mu_kp: f64,
    /// μ(𝒫̂𝒦⁻¹)
    pub mu_pk: f64,
    /// (1 − μ_KP μ_PK)^{1/2}, the per-step GMRES residual envelope
    pub envelope_rate: f64,
    pub nu: f64,
    pub gamma: f64,
}

impl FovReport {
    pub fn bounds_hold(&self) -> bool {
        self.mu_pk >= 0.5 - 1e-8 && self.mu_kp * self.mu_pk <= 1.0 + 1e-10
    }
}

/// inf ⟨ℬz,z⟩_W / ⟨z,z⟩_W for a dense ℬ and SPD W.
pub fn field_of_values_min(b: &Mat<f64>, w: &Mat<f64>) -> Result<f64> {
    let wb = w * b;
    let ev = eig_sym_generalized(&symmetrize(&wb), &symmetrize(w))?;
    ev.first()
        .copied()
        .ok_or_else(|| Error::Eigen("empty field-of-values problem".into()))
}

/// Field-of-values minima of 𝒦𝒫̂⁻¹ and 𝒫̂𝒦⁻¹ in the ℳ⁻¹ inner product,
/// ℳ = diag(A_s, Ŝ) with A_s the symmetric part of A_γ. Enclosed flow works
/// on X = ℝⁿ × {1ᵀq = 0}, which 𝒦 and 𝒫̂⁻¹ both preserve.
pub fn fov_mu(system: &BlockSystem) -> Result<FovReport> {
    let (n, m) = (system.n(), system.m());
    let dim = n + m;
    if dim > FOV_LIMIT {
        return Err(Error::SizeGuard {
            what: "field-of-values probe",
            dim,
            limit: FOV_LIMIT,
        });
    }
    let pre = Preconditioner::new(system, PreconditionerKind::ALTriangular)?;
    let mut kp = Mat::<f64>::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for j in 0..dim {
        e[j] = 1.0;
        let col = system.apply(&pre.apply(system, &e));
        e[j] = 0.0;
        for (i, v) in col.iter().enumerate() {
            kp[(i, j)] = *v;
        }
    }
    let a = system.a_gamma.to_dense();
    let a_s = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let a_s_inv = symmetrize(&inverse(&a_s));
    let shat_inv = symmetrize(&inverse(&system.schur_approximation().to_dense()));
    let mut w = Mat::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = a_s_inv[(i, j)];
        }
    }
    for i in 0..m {
        for j in 0..m {
            w[(n + i, n + j)] = shat_inv[(i, j)];
        }
    }
    let (kp, w) = if system.enclosed && m > 0 {
        let mut ones = vec![0.0; dim];
        ones[n..].iter_mut().for_each(|v| *v = 1.0);
        let hh = Householder::new(&ones)?;
        (hh.congruence(&kp), hh.congruence(&w))
    } else {
        (kp, w)
    };
    let mu_kp = field_of_values_min(&kp, &w)?;
    let mu_pk = field_of_values_min(&inverse(&kp), &w)?;
    Ok(FovReport {
        mu_kp,
        mu_pk,
        envelope_rate: (1.0 - mu_kp * mu_pk).max(0.0).sqrt(),
        nu: system.nu,
        gamma: system.gamma,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeReport {
    /// ‖r_k‖/‖r_0‖ in the ℳ⁻¹ norm
    pub ratios: Vec<f64>,
    pub bounds: Vec<f64>,
    /// max_k (ratio_k − bound_k)
    pub max_excess: f64,
    pub pass: bool,
}

/// Runs AL-preconditioned GMRES in the ℳ⁻¹ inner product and compares each
/// residual ratio with envelope_rateᵏ.
pub fn envelope_check(system: &BlockSystem, fov: &FovReport, config: &KrylovConfig) -> Result<EnvelopeReport> {
    let n = system.n();
    let mut sys = system.clone();
    if sys.enclosed {
        project_mean_zero(&mut sys.rhs[n..]);
    }
    let a_s = sys.a_gamma.add(0.5, &sys.a_gamma.transpose(), 0.5)?;
    let a_s = Factorization::cholesky(&a_s)?;
    let shat = Factorization::cholesky(&sys.schur_approximation())?;
    let ip = Weighted(|v: &[f64]| {
        let mut w = a_s.solve(&v[..n]);
        w.extend(shat.solve(&v[n..]));
        w
    });
    let pre = Preconditioner::new(&sys, PreconditionerKind::ALTriangular)?;
    let res = gmres_with(&sys, &pre, config, &ip)?;
    let r0 = res.residual_history[0];
    let ratios: Vec<f64> = if r0 > 0.0 {
        res.residual_history.iter().map(|r| r / r0).collect()
    } else {
        vec![0.0; res.residual_history.len()]
    };
    let bounds: Vec<f64> = (0..ratios.len()).map(|k| fov.envelope_rate.powi(k as i32)).collect();
    let max_excess = ratios
        .iter()
        .zip(&bounds)
        .map(|(r, b)| r - b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EnvelopeReport {
        pass: max_excess <= 1e-8,
        ratios,
        bounds,
        max_excess,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma42Report {
    pub trials: usize,
    pub violations: usize,
    /// max over trials of ⟨Ŝ⁻¹q,q⟩ − ⟨S⁻¹q,q⟩
    pub max_excess: f64,
    /// max over trials of ν(ν+γ)⟨Ŝ⁻¹q,q⟩ / ⟨Ŝ⁻¹SŜ⁻¹q,q⟩
    pub observed_constant: f64,
}

impl Lemma42Report {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

/// Compares ⟨Ŝ⁻¹q,q⟩ with ⟨S⁻¹q,q⟩ for random unit q, on the pressures
/// modulo constants for enclosed flow.
pub fn lemma42_check(system: &BlockSystem, trials: usize, seed: u64) -> Result<Lemma42Report> {
    let (s, shat) = restricted_schur_pair(system)?;
    let k = s.nrows();
    let s_lu = s.partial_piv_lu();
    let shat_inv = symmetrize(&inverse(&shat));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = system.nu * (system.nu + system.gamma);
    let mut rep = Lemma42Report {
        trials,
        violations: 0,
        max_excess: f64::NEG_INFINITY,
        observed_constant: 0.0,
    };
    use faer::linalg::solvers::Solve;
    for _ in 0..trials {
        let mut q: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let qn = dot(&q, &q).sqrt();
        if qn > 0.0 {
            q.iter_mut().for_each(|v| *v /= qn);
        }
        let qm = Mat::from_fn(k, 1, |i, _| q[i]);
        let p_hat = &shat_inv * &qm;
        let p = s_lu.solve(&qm);
        let lhs: f64 = (0..k).map(|i| p_hat[(i, 0)] * q[i]).sum();
        let rhs: f64 = (0..k).map(|i| p[(i, 0)] * q[i]).sum();
        if lhs > rhs + 1e-10 {
            rep.violations += 1;
        }
        rep.max_excess = rep.max_excess.max(lhs - rhs);
        let sp = &s * &p_hat;
        let denom: f64 = (0..k).map(|i| sp[(i, 0)] * p_hat[(i, 0)]).sum();
        if denom > 0.0 {
            rep.observed_constant = rep.observed_constant.max(scale * lhs / denom);
        }
    }
    if trials == 0 {
        rep.max_excess = 0.0;
    }
    Ok(rep)
}

/// Velocity at a point by finite element interpolation; `None` outside the mesh.
pub fn evaluate_velocity(mesh: &MeshTopology, velocity: &[f64], x: [f64; 2]) -> Option<[f64; 2]> {
    let e = mesh.locate(x)?;
    let xi = inverse_map(&mesh.corners(e), x)?;
    let phi = ReferenceElement::new(mesh.order).shape_values(xi);
    let nv = mesh.node_count();
    let mut u = [0.0; 2];
    for (a, &node) in mesh.elements[e].iter().enumerate() {
        u[0] += phi[a] * velocity[node];
        u[1] += phi[a] * velocity[nv + node];
    }
    Some(u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CenterlineProfiles {
    /// u₁ along x = 0, indexed by y
    pub vertical_u1: Profile,
    /// u₂ along y = 0, indexed by x
    pub horizontal_u2: Profile,
}

pub const PROFILE_SAMPLES: usize = 129;

/// u₁ on the vertical and u₂ on the horizontal centerline of the cavity,
/// 129 uniformly spaced samples each.
pub fn centerline_profiles(mesh: &MeshTopology, velocity: &[f64]) -> Result<CenterlineProfiles> {
    if mesh.geometry != Geometry::Cavity {
        return Err(Error::Configuration("centerline profiles need the cavity".into()));
    }
    let coords: Vec<f64> = (0..PROFILE_SAMPLES)
        .map(|k| -1.0 + 2.0 * k as f64 / (PROFILE_SAMPLES - 1) as f64)
        .collect();
    let sample = |x: [f64; 2], c: usize| {
        evaluate_velocity(mesh, velocity, x)
            .map(|u| u[c])
            .ok_or_else(|| Error::Parameter(format!("point {x:?} outside the mesh")))
    };
    let vertical = coords.iter().map(|&y| sample([0.0, y], 0)).collect::<Result<Vec<_>>>()?;
    let horizontal = coords.iter().map(|&x| sample([x, 0.0], 1)).collect::<Result<Vec<_>>>()?;
    Ok(CenterlineProfiles {
        vertical_u1: Profile {
            coords: coords.clone(),
            values: vertical,
        },
        horizontal_u2: Profile {
            coords,
            values: horizontal,
        },
    })
}

/// Reference centerline data for the unit cavity at Re = 1000 (Ghia, Ghia and
/// Shin 1982), as (coordinate in [0,1], value).
pub const GHIA_RE1000_U1: [(f64, f64); 17] = [
    (1.0000, 1.00000),
    (0.9766, 0.65928),
    (0.9688, 0.57492),
    (0.9609, 0.51117),
    (0.9531, 0.46604),
    (0.8516, 0.33304),
    (0.7344, 0.18719),
    (0.6172, 0.05702),
    (0.5000, -0.06080),
    (0.4531, -0.10648),
    (0.2813, -0.27805),
    (0.1719, -0.38289),
    (0.1016, -0.29730),
    (0.0703, -0.22220),
    (0.0625, -0.20196),
    (0.0547, -0.18109),
    (0.0000, 0.00000),
];

pub const GHIA_RE1000_U2: [(f64, f64); 17] = [
    (1.0000, 0.00000),
    (0.9688, -0.21388),
    (0.9609, -0.27669),
    (0.9531, -0.33714),
    (0.9453, -0.39188),
    (0.9063, -0.51550),
    (0.8594, -0.42665),
    (0.8047, -0.31966),
    (0.5000, 0.02526),
    (0.2344, 0.32235),
    (0.2266, 0.33075),
    (0.1563, 0.37095),
    (0.0938, 0.32627),
    (0.0781, 0.30353),
    (0.0703, 0.29012),
    (0.0625, 0.27485),
    (0.0000, 0.00000),
];

/// Per-ordinate comparison with a reference table on [-1,1]².
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileComparison {
    /// (coordinate, computed, reference)
    pub points: Vec<(f64, f64, f64)>,
    pub max_deviation: f64,
}

/// Evaluates u₁(0, y) (or u₂(x, 0)) at the reference ordinates, mapped from
/// the unit square by s ↦ 2s − 1.
pub fn compare_centerline(
    mesh: &MeshTopology,
    velocity: &[f64],
    reference: &[(f64, f64)],
    component: usize,
) -> Result<ProfileComparison> {
    if mesh.geometry != Geometry::Cavity || component > 1 {
        return Err(Error::Configuration("reference profiles need the cavity".into()));
    }
    let mut points = Vec::with_capacity(reference.len());
    let mut max_deviation: f64 = 0.0;
    for &(s, r) in reference {
        let c = 2.0 * s - 1.0;
        let x = if component == 0 { [0.0, c] } else { [c, 0.0] };
        let u = evaluate_velocity(mesh, velocity, x)
            .ok_or_else(|| Error::Parameter(format!("point {x:?} outside the mesh")))?[component];
        max_deviation = max_deviation.max((u - r).abs());
        points.push((c, u, r));
    }
    Ok(ProfileComparison { points, max_deviation })
}

/// L²-projected vorticity ω = ∂u₂/∂x − ∂u₁/∂y.
pub fn vorticity(mesh: &MeshTopology, scalar: &ScalarBlocks, velocity: &[f64]) -> Result<Vec<f64>> {
    let nv = mesh.node_count();
    if velocity.len() != 2 * nv {
        return Err(Error::Dimension(format!(
            "velocity has length {}, expected {}",
            velocity.len(),
            2 * nv
        )));
    }
    let (u1, u2) = velocity.split_at(nv);
    // bx, by hold −(φ_i, ∂φ_j/∂x) and −(φ_i, ∂φ_j/∂y)
    let mut rhs = scalar.by.spmv(u1)?;
    scalar.bx.spmv_add(-1.0, u2, &mut rhs)?;
    Factorization::cholesky(&scalar.mass)?.solve_checked(&rhs)
}

/// Streamfunction with u = (∂ψ/∂y, −∂ψ/∂x): −Δψ = ω with ψ = 0 on the cavity
/// boundary; on the step ψ follows the boundary flux (0 on the lower walls,
/// 2/3 on the upper wall, the integrated inflow profile at the inlet) and the
/// outflow is natural.
pub fn streamfunction(mesh: &MeshTopology, scalar: &ScalarBlocks, velocity: &[f64]) -> Result<Vec<f64>> {
    let nv = mesh.node_count();
    let omega = vorticity(mesh, scalar, velocity)?;
    let rhs = scalar.mass.spmv(&omega)?;
    let mut psi = vec![0.0; nv];
    let mut fixed = vec![false; nv];
    let top = 2.0 / 3.0;
    for tag in [BoundaryTag::Wall, BoundaryTag::Lid, BoundaryTag::Inflow] {
        for i in mesh.tagged_nodes(tag) {
            let [x, y] = mesh.nodes[i];
            fixed[i] = true;
            psi[i] = match mesh.geometry {
                Geometry::Cavity => 0.0,
                Geometry::Step { .. } if tag == BoundaryTag::Inflow || x <= -1.0 + 1e-12 => {
                    let y = y.clamp(0.0, 1.0);
                    2.0 * y * y - 4.0 * y * y * y / 3.0
                }
                Geometry::Step { .. } if y >= 1.0 - 1e-12 => top,
                Geometry::Step { .. } => 0.0,
            };
        }
    }
    let free: Vec<usize> = (0..nv).filter(|&i| !fixed[i]).collect();
    if free.is_empty() {
        return Ok(psi);
    }
    let bound: Vec<usize> = (0..nv).filter(|&i| fixed[i]).collect();
    let k_ff = scalar.stiffness.submatrix(&free, &free);
    let k_fb = scalar.stiffness.submatrix(&free, &bound);
    let psi_b: Vec<f64> = bound.iter().map(|&i| psi[i]).collect();
    let mut b: Vec<f64> = free.iter().map(|&i| rhs[i]).collect();
    k_fb.spmv_add(-1.0, &psi_b, &mut b)?;
    let psi_f = Factorization::cholesky(&k_ff)?.solve_checked(&b)?;
    for (k, &i) in free.iter().enumerate() {
        psi[i] = psi_f[k];
    }
    Ok(psi)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStatistics {
    /// reattachment of the lower recirculation
    pub r1: Option<f64>,
    /// separation on the upper wall
    pub r2: Option<f64>,
    /// reattachment on the upper wall
    pub r3: Option<f64>,
}

/// Sorted (x, u₁) along the node line a distance δ from a horizontal wall.
fn wall_line(mesh: &MeshTopology, velocity: &[f64], y: f64, x_min: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = mesh
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, p)| (p[1] - y).abs() < 1e-9 && p[0] > x_min + 1e-9)
        .map(|(i, p)| (p[0], velocity[i]))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

/// Longest run of negative wall shear: (start crossing, end crossing).
fn longest_reversal(line: &[(f64, f64)]) -> Option<(Option<f64>, Option<f64>)> {
    let pts: Vec<(f64, f64)> = line.iter().copied().filter(|p| p.1 != 0.0).collect();
    let crossing = |a: (f64, f64), b: (f64, f64)| a.0 - a.1 * (b.0 - a.0) / (b.1 - a.1);
    let mut best: Option<(Option<f64>, Option<f64>, f64)> = None;
    let mut k = 0;
    while k < pts.len() {
        if pts[k].1 >= 0.0 {
            k += 1;
            continue;
        }
        let start = (k > 0).then(|| crossing(pts[k - 1], pts[k]));
        let first = pts[k].0;
        while k < pts.len() && pts[k].1 < 0.0 {
            k += 1;
        }
        let end = (k < pts.len()).then(|| crossing(pts[k - 1], pts[k]));
        let len = pts[k - 1].0 - first;
        if best.as_ref().is_none_or(|b| len > b.2) {
            best = Some((start, end, len));
        }
    }
    best.map(|(s, e, _)| (s, e))
}

/// Separation and reattachment points from the sign of the wall shear,
/// measured on the first interior node line (distance h for Q1, h/2 for Q2).
pub fn reattachment_points(mesh: &MeshTopology, velocity: &[f64]) -> Result<StepStatistics> {
    if !matches!(mesh.geometry, Geometry::Step { .. }) {
        return Err(Error::Configuration("reattachment points need the step".into()));
    }
    if velocity.len() != 2 * mesh.node_count() {
        return Err(Error::Dimension("velocity does not match the mesh".into()));
    }
    let delta = mesh.element_size_h / mesh.order.degree() as f64;
    let mut stats = StepStatistics::default();
    let bottom = wall_line(mesh, velocity, -1.0 + delta, 0.0);
    if let Some((_, end)) = longest_reversal(&bottom) {
        stats.r1 = end;
    }
    let top = wall_line(mesh, velocity, 1.0 - delta, -1.0);
    if let Some((start, end)) = longest_reversal(&top) {
        stats.r2 = start;
        stats.r3 = end;
    }
    Ok(stats)
}

/// Sparse solve followed by a finiteness check.
trait SolveChecked {
    fn solve_checked(&self, b: &[f64]) -> Result<Vec<f64>>;
}

impl SolveChecked for Factorization {
    fn solve_checked(&self, b: &[f64]) -> Result<Vec<f64>> {
        let x = self.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular { index: 0 })
        }
    }
}
