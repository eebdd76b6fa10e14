//! Benchmark problems, block-system construction and the Picard driver.

use std::time::Instant;

use crate::assembly::{
    apply_dirichlet, assemble_convection, assemble_scalar_blocks, block_diag2, build_dofmap, lift_vector,
    pcd_boundary, restrict_velocity, AdvectionField, DirichletLift, DofMap, OseenOperators, ScalarBlocks,
};
use crate::error::{Error, Result};
use crate::fe::ElementOrder;
use crate::krylov::{gmres, BlockSystem, KrylovConfig, PcdOperators, Preconditioner, PreconditionerKind};
use crate::linalg::{norm2, CsrMatrix, SymbolicCache};
use crate::mesh::{build_cavity_mesh, build_step_mesh, BoundaryTag, MeshTopology};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BenchmarkProblem {
    /// Lid-driven cavity on [-1,1]², ν = 2/Re.
    DrivenCavity { re: f64 },
    /// Backward-facing step on (−1,L)×(−1,1) minus the lower-left unit square, ν = 4/(3Re).
    BackwardStep { re: f64, length: f64 },
}

impl BenchmarkProblem {
    pub fn re(&self) -> f64 {
        match *self {
            Self::DrivenCavity { re } | Self::BackwardStep { re, .. } => re,
        }
    }

    pub fn viscosity(&self) -> f64 {
        match *self {
            Self::DrivenCavity { re } => 2.0 / re,
            Self::BackwardStep { re, .. } => 4.0 / (3.0 * re),
        }
    }

    /// Cavity with the Reynolds number matching a viscosity.
    pub fn cavity_with_viscosity(nu: f64) -> Self {
        Self::DrivenCavity { re: 2.0 / nu }
    }

    pub fn validate(&self) -> Result<()> {
        let re = self.re();
        if !(re.is_finite() && re > 0.0) {
            return Err(Error::Parameter(format!("Re must be positive, got {re}")));
        }
        if let Self::BackwardStep { length, .. } = *self {
            if !(length.is_finite() && length > 0.0) {
                return Err(Error::Parameter(format!("step length must be positive, got {length}")));
            }
        }
        Ok(())
    }

    /// Step lengths other than 5 and 24 are allowed but not part of the benchmark set.
    pub fn is_standard(&self) -> bool {
        match *self {
            Self::DrivenCavity { .. } => true,
            Self::BackwardStep { length, .. } => length == 5.0 || length == 24.0,
        }
    }

    pub fn build_mesh(&self, h: f64, order: ElementOrder) -> Result<MeshTopology> {
        self.validate()?;
        match *self {
            Self::DrivenCavity { .. } => build_cavity_mesh(h, order),
            Self::BackwardStep { length, .. } => build_step_mesh(length, h, order),
        }
    }

    /// Velocity prescribed on a tagged boundary point; `None` for natural outflow.
    pub fn dirichlet_value(&self, tag: BoundaryTag, x: [f64; 2]) -> Result<Option<[f64; 2]>> {
        match (self, tag) {
            (Self::DrivenCavity { .. }, BoundaryTag::Lid) => Ok(Some([1.0, 0.0])),
            (_, BoundaryTag::Wall) => Ok(Some([0.0, 0.0])),
            (Self::BackwardStep { .. }, BoundaryTag::Inflow) => Ok(Some([4.0 * x[1] * (1.0 - x[1]), 0.0])),
            (Self::BackwardStep { .. }, BoundaryTag::Outflow) => Ok(None),
            _ => Err(Error::Configuration(format!(
                "boundary tag {tag:?} is not defined for {}",
                self.name()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::DrivenCavity { .. } => "cavity",
            Self::BackwardStep { .. } => "step",
        }
    }
}

/// Mesh, constraints and every advection-independent operator, assembled once.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: MeshTopology,
    pub dofmap: DofMap,
    pub scalar: ScalarBlocks,
    d_free: CsrMatrix,
    g_free: CsrMatrix,
    b_free: CsrMatrix,
    lift_d: Vec<f64>,
    lift_g: Vec<f64>,
    lift_b: Vec<f64>,
    a_p_bc: CsrMatrix,
}

impl Discretization {
    pub fn new(problem: &BenchmarkProblem, h: f64, order: ElementOrder) -> Result<Self> {
        let mesh = problem.build_mesh(h, order)?;
        let dofmap = build_dofmap(&mesh, problem)?;
        Ok(Self::from_parts(mesh, dofmap))
    }

    pub fn from_parts(mesh: MeshTopology, dofmap: DofMap) -> Self {
        let scalar = assemble_scalar_blocks(&mesh);
        let d = scalar.vector_laplacian();
        let g = scalar.grad_div();
        let b = scalar.divergence();
        let all_p: Vec<usize> = (0..dofmap.n_pressure).collect();
        let bg = b.spmv(&dofmap.boundary_values).expect("velocity layout");
        let zero_conv = CsrMatrix::zeros(dofmap.n_pressure, dofmap.n_pressure);
        let (a_p_bc, _) = pcd_boundary(&scalar.stiffness, &zero_conv, &dofmap);
        Self {
            d_free: restrict_velocity(&d, &dofmap),
            g_free: restrict_velocity(&g, &dofmap),
            b_free: b.submatrix(&all_p, &dofmap.free),
            lift_d: lift_vector(&d, &dofmap),
            lift_g: lift_vector(&g, &dofmap),
            lift_b: bg.iter().map(|v| -v).collect(),
            a_p_bc,
            mesh,
            dofmap,
            scalar,
        }
    }

    pub fn n(&self) -> usize {
        self.dofmap.n_free()
    }

    pub fn m(&self) -> usize {
        self.dofmap.n_pressure
    }

    /// Unconstrained operator set for an advection field.
    pub fn operators(&self, a: &AdvectionField) -> Result<OseenOperators> {
        let conv = assemble_convection(&self.mesh, a)?;
        Ok(OseenOperators {
            d: self.scalar.vector_laplacian(),
            n: block_diag2(&conv),
            g: self.scalar.grad_div(),
            b: self.scalar.divergence(),
            m: self.scalar.mass.clone(),
            c_raw: self.scalar.stabilization.clone(),
            a_p: self.scalar.stiffness.clone(),
            n_p: conv,
        })
    }

    /// Oseen block system for (ν, γ, a); f = 0.
    pub fn system(&self, nu: f64, gamma: f64, a: &AdvectionField, with_pcd: bool) -> Result<BlockSystem> {
        if !(nu > 0.0) || !(gamma >= 0.0) {
            return Err(Error::Parameter(format!("need nu > 0 and gamma >= 0, got nu={nu}, gamma={gamma}")));
        }
        let conv = assemble_convection(&self.mesh, a)?;
        let n_full = block_diag2(&conv);
        let n_free = restrict_velocity(&n_full, &self.dofmap);
        let lift_n = lift_vector(&n_full, &self.dofmap);
        let lift = DirichletLift {
            f: vec![0.0; self.n()],
            d: self.lift_d.clone(),
            n: lift_n,
            g: self.lift_g.clone(),
            b: self.lift_b.clone(),
        };
        let mut sys = build_block_system(
            &self.d_free,
            &n_free,
            &self.g_free,
            &self.b_free,
            &self.scalar.mass,
            &self.scalar.stabilization,
            &lift,
            nu,
            gamma,
            self.dofmap.enclosed,
        )?;
        if with_pcd {
            let (_, n_p) = pcd_boundary(&self.scalar.stiffness, &conv, &self.dofmap);
            let f_p = self.a_p_bc.add(nu + gamma, &n_p, 1.0)?;
            sys.pcd = Some(PcdOperators {
                a_p: self.a_p_bc.clone(),
                f_p,
            });
        }
        Ok(sys)
    }

    /// Full-layout velocity and pressure from a block solution vector.
    pub fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        (self.dofmap.expand(&x[..n]), x[n..].to_vec())
    }

    /// Shifts the pressure part of x to zero mean, ∫p = 0.
    pub fn normalize_pressure(&self, x: &mut [f64]) {
        if !self.dofmap.enclosed {
            return;
        }
        let n = self.n();
        let p = &mut x[n..];
        let one = vec![1.0; p.len()];
        let m1 = self.scalar.mass.spmv(&one).expect("pressure layout");
        let area: f64 = m1.iter().sum();
        let mean = crate::linalg::dot(&m1, p) / area;
        p.iter_mut().for_each(|v| *v -= mean);
    }
}

/// 𝒦 with A_γ = νD + N + γG, C = C_raw/(ν+γ), and rhs carrying the lifted
/// boundary data. All velocity blocks are already restricted to free dofs.
pub fn build_block_system(
    d: &CsrMatrix,
    n: &CsrMatrix,
    g: &CsrMatrix,
    b: &CsrMatrix,
    mass: &CsrMatrix,
    c_raw: &CsrMatrix,
    lift: &DirichletLift,
    nu: f64,
    gamma: f64,
    enclosed: bool,
) -> Result<BlockSystem> {
    if !(nu > 0.0) || !(gamma >= 0.0) {
        return Err(Error::Parameter(format!("need nu > 0 and gamma >= 0, got nu={nu}, gamma={gamma}")));
    }
    let mut a = d.add(nu, n, 1.0)?;
    if gamma != 0.0 {
        a = a.add(1.0, g, gamma)?;
    }
    let c = c_raw.scale(1.0 / (nu + gamma));
    let mut rhs = lift.momentum(nu, gamma);
    rhs.extend_from_slice(&lift.b);
    BlockSystem::new(a, b.clone(), c, mass.clone(), rhs, nu, gamma, enclosed)
}

/// Block system straight from unconstrained operators (eliminates the
/// Dirichlet dofs first).
pub fn block_system_from_operators(
    ops: &OseenOperators,
    dofmap: &DofMap,
    nu: f64,
    gamma: f64,
) -> Result<BlockSystem> {
    let f = vec![0.0; dofmap.n_full_velocity()];
    let (red, lift) = apply_dirichlet(ops, dofmap, &f)?;
    build_block_system(&red.d, &red.n, &red.g, &red.b, &red.m, &red.c_raw, &lift, nu, gamma, dofmap.enclosed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardConfig {
    pub nonlinear_rel_tol: f64,
    pub max_picard: usize,
    pub inner: KrylovConfig,
    pub gamma: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            nonlinear_rel_tol: 1e-5,
            max_picard: 100,
            inner: KrylovConfig::default(),
            gamma: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    /// Number of Oseen solves performed.
    pub picard_iterations: usize,
    pub gmres_iterations_per_step: Vec<usize>,
    pub gmres_converged_per_step: Vec<bool>,
    pub average_gmres: f64,
    pub converged: bool,
    /// ‖s_k‖ for k = 0..=picard_iterations (last entry may be missing on failure).
    pub nonlinear_residuals: Vec<f64>,
}

impl IterationReport {
    pub fn rounded_average(&self) -> usize {
        self.average_gmres.round() as usize
    }

    /// Table cell "P(G)", or "−" when Picard did not converge.
    pub fn table_entry(&self) -> String {
        if self.converged {
            format!("{}({})", self.picard_iterations, self.rounded_average())
        } else {
            "−".to_string()
        }
    }
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub discretization: Discretization,
    /// Full-layout velocity including boundary data.
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub report: IterationReport,
    pub nu: f64,
    pub gamma: f64,
}

pub fn picard_solve(
    problem: &BenchmarkProblem,
    h: f64,
    order: ElementOrder,
    kind: PreconditionerKind,
    config: &PicardConfig,
) -> Result<PicardOutcome> {
    let disc = Discretization::new(problem, h, order)?;
    picard_iterate(disc, problem.viscosity(), kind, config)
}

/// Picard iteration in correction form: with x_0 = 0 (zero velocity),
/// s_k = b(u_k) − 𝒦(u_k) x_k; stop when ‖s_k‖ ≤ tol ‖s_0‖, otherwise solve
/// 𝒦(u_k) δ = s_k by GMRES from a zero guess and set x_{k+1} = x_k + δ.
///
/// The residual is that of the system with the Dirichlet rows kept as
/// identity equations u_c = g. The zero starting velocity violates them, so
/// s_0 also contains the boundary mismatch ‖g‖; every later iterate carries
/// the boundary data exactly and those rows vanish.
pub fn picard_iterate(
    disc: Discretization,
    nu: f64,
    kind: PreconditionerKind,
    config: &PicardConfig,
) -> Result<PicardOutcome> {
    let gamma = config.gamma;
    let dim = disc.n() + disc.m();
    let mut x = vec![0.0; dim];
    let mut advection = AdvectionField::zero(disc.dofmap.n_full_velocity());
    let mut report = IterationReport {
        picard_iterations: 0,
        gmres_iterations_per_step: Vec::new(),
        gmres_converged_per_step: Vec::new(),
        average_gmres: 0.0,
        converged: false,
        nonlinear_residuals: Vec::new(),
    };
    let mut cache: Option<SymbolicCache> = None;
    let with_pcd = kind == PreconditionerKind::ModifiedPCD;
    let boundary_mismatch = disc
        .dofmap
        .constrained
        .iter()
        .map(|&i| disc.dofmap.boundary_values[i].powi(2))
        .sum::<f64>();
    loop {
        if let Some(d) = config.inner.deadline {
            if Instant::now() > d {
                return Err(Error::Timeout);
            }
        }
        let mut system = disc.system(nu, gamma, &advection, with_pcd)?;
        let s = system.residual(&x);
        let mut s_norm = norm2(&s);
        if report.picard_iterations == 0 {
            s_norm = (s_norm * s_norm + boundary_mismatch).sqrt();
        }
        report.nonlinear_residuals.push(s_norm);
        if !s_norm.is_finite() {
            break;
        }
        let s0 = report.nonlinear_residuals[0];
        if s_norm <= config.nonlinear_rel_tol * s0 {
            report.converged = true;
            break;
        }
        if report.picard_iterations >= config.max_picard {
            break;
        }
        system.rhs = s;
        let pre = Preconditioner::with_cache(&system, kind, &mut cache)?;
        let res = gmres(&system, &pre, &config.inner)?;
        report.picard_iterations += 1;
        report.gmres_iterations_per_step.push(res.iterations);
        report.gmres_converged_per_step.push(res.converged);
        crate::linalg::axpy(1.0, &res.solution, &mut x);
        disc.normalize_pressure(&mut x);
        let (u, _) = disc.split(&x);
        advection = AdvectionField::new(u).unwrap_or_else(|_| {
            AdvectionField { values: vec![f64::NAN; disc.dofmap.n_full_velocity()] }
        });
        if advection.values.iter().any(|v| !v.is_finite()) {
            report.nonlinear_residuals.push(f64::NAN);
            break;
        }
    }
    let steps = report.gmres_iterations_per_step.len();
    report.average_gmres = if steps == 0 {
        0.0
    } else {
        report.gmres_iterations_per_step.iter().sum::<usize>() as f64 / steps as f64
    };
    let (velocity, pressure) = disc.split(&x);
    Ok(PicardOutcome {
        discretization: disc,
        velocity,
        pressure,
        report,
        nu,
        gamma,
    })
}
