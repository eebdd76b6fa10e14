//! Global operators of the equal-order Oseen discretization.
//!
//! Every block is built from scalar nodal matrices on one shared sparsity
//! pattern (nodes coupled through an element). Velocity dofs are blocked by
//! component: index = component * n_velocity + node.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fe::{MappedPoint, Tabulation};
use crate::linalg::CsrMatrix;
use crate::mesh::{BoundaryTag, MeshTopology};
use crate::picard::BenchmarkProblem;

#[derive(Clone, Debug)]
pub struct DofMap {
    pub n_velocity: usize,
    pub n_pressure: usize,
    /// Prescribed velocity per constrained node.
    pub dirichlet_nodes: BTreeMap<usize, [f64; 2]>,
    /// Free global velocity indices, increasing.
    pub free: Vec<usize>,
    /// Constrained global velocity indices, increasing.
    pub constrained: Vec<usize>,
    /// Full-length velocity vector holding the boundary data (zero elsewhere).
    pub boundary_values: Vec<f64>,
    /// True when the pressure is only determined up to a constant.
    pub enclosed: bool,
    /// Pressure nodes on the inflow boundary (PCD Dirichlet rows).
    pub inflow_pressure_nodes: Vec<usize>,
    free_index: Vec<usize>,
}

impl DofMap {
    pub fn n_full_velocity(&self) -> usize {
        2 * self.n_velocity
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Position of a global velocity dof among the free dofs.
    pub fn free_position(&self, global: usize) -> Option<usize> {
        let k = self.free_index[global];
        (k != usize::MAX).then_some(k)
    }

    /// Full velocity vector from free values plus the boundary data.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut u = self.boundary_values.clone();
        for (k, &g) in self.free.iter().enumerate() {
            u[g] = free_values[k];
        }
        u
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&g| full[g]).collect()
    }

    /// Same constraint sets with homogeneous boundary data.
    pub fn homogeneous(&self) -> Self {
        let mut d = self.clone();
        d.boundary_values.iter_mut().for_each(|v| *v = 0.0);
        d.dirichlet_nodes.values_mut().for_each(|v| *v = [0.0, 0.0]);
        d
    }
}

fn tag_priority(tag: BoundaryTag) -> u8 {
    match tag {
        BoundaryTag::Wall => 3,
        BoundaryTag::Inflow => 2,
        BoundaryTag::Lid => 1,
        BoundaryTag::Outflow => 0,
    }
}

pub fn build_dofmap(mesh: &MeshTopology, problem: &BenchmarkProblem) -> Result<DofMap> {
    let nv = mesh.node_count();
    let mut node_tag: Vec<Option<BoundaryTag>> = vec![None; nv];
    for e in &mesh.boundary_edges {
        problem.dirichlet_value(e.tag, [0.0, 0.0])?;
        for n in e.nodes.into_iter().chain(e.mid) {
            let better = match node_tag[n] {
                None => true,
                Some(t) => tag_priority(e.tag) > tag_priority(t),
            };
            if better {
                node_tag[n] = Some(e.tag);
            }
        }
    }
    let mut dirichlet_nodes = BTreeMap::new();
    for (n, t) in node_tag.iter().enumerate() {
        if let Some(t) = t {
            if let Some(v) = problem.dirichlet_value(*t, mesh.nodes[n])? {
                dirichlet_nodes.insert(n, v);
            }
        }
    }
    let mut boundary_values = vec![0.0; 2 * nv];
    let mut free_index = vec![usize::MAX; 2 * nv];
    let mut free = Vec::new();
    let mut constrained = Vec::new();
    for c in 0..2 {
        for n in 0..nv {
            let g = c * nv + n;
            match dirichlet_nodes.get(&n) {
                Some(v) => {
                    boundary_values[g] = v[c];
                    constrained.push(g);
                }
                None => {
                    free_index[g] = free.len();
                    free.push(g);
                }
            }
        }
    }
    let inflow_pressure_nodes = mesh.tagged_nodes(BoundaryTag::Inflow);
    let enclosed = !mesh.boundary_edges.iter().any(|e| e.tag == BoundaryTag::Outflow);
    Ok(DofMap {
        n_velocity: nv,
        n_pressure: nv,
        dirichlet_nodes,
        free,
        constrained,
        boundary_values,
        enclosed,
        inflow_pressure_nodes,
        free_index,
    })
}

/// Discrete advection field in the full velocity layout (boundary data included).
#[derive(Clone, Debug, PartialEq)]
pub struct AdvectionField {
    pub values: Vec<f64>,
}

impl AdvectionField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("advection field has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    pub fn zero(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    /// Nodal interpolant of a velocity function.
    pub fn interpolate(mesh: &MeshTopology, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let nv = mesh.node_count();
        let mut values = vec![0.0; 2 * nv];
        for (n, &x) in mesh.nodes.iter().enumerate() {
            let v = f(x);
            values[n] = v[0];
            values[nv + n] = v[1];
        }
        Self { values }
    }
}

/// Sparse blocks over the unconstrained velocity space.
#[derive(Clone, Debug)]
pub struct OseenOperators {
    /// vector Laplacian (ν-free)
    pub d: CsrMatrix,
    /// convection (a·∇ψ_j, ψ_i)
    pub n: CsrMatrix,
    /// grad-div (div ψ_i, div ψ_j)
    pub g: CsrMatrix,
    /// B_ij = −(φ_i, div ψ_j), m×n
    pub b: CsrMatrix,
    /// pressure mass
    pub m: CsrMatrix,
    /// local projection stabilization s(φ_i, φ_j), unscaled
    pub c_raw: CsrMatrix,
    /// pure Neumann pressure Laplacian
    pub a_p: CsrMatrix,
    /// pressure convection (a·∇φ_j, φ_i)
    pub n_p: CsrMatrix,
}

/// Scalar nodal matrices that do not depend on the advection field.
#[derive(Clone, Debug)]
pub struct ScalarBlocks {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub stabilization: CsrMatrix,
    pub gxx: CsrMatrix,
    pub gxy: CsrMatrix,
    pub gyy: CsrMatrix,
    /// −(φ_i, ∂x φ_j)
    pub bx: CsrMatrix,
    /// −(φ_i, ∂y φ_j)
    pub by: CsrMatrix,
}

/// Node-to-node coupling pattern with direct scatter into CSR values.
struct Pattern {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl Pattern {
    fn new(mesh: &MeshTopology) -> Self {
        let n = mesh.node_count();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for el in &mesh.elements {
            for &a in el {
                adj[a].extend_from_slice(el);
            }
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for row in adj.iter_mut() {
            row.sort_unstable();
            row.dedup();
            col_indices.extend_from_slice(row);
            row_offsets.push(col_indices.len());
        }
        Self {
            n,
            row_offsets,
            col_indices,
        }
    }

    fn position(&self, i: usize, j: usize) -> usize {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        s + self.col_indices[s..e]
            .binary_search(&j)
            .expect("entry inside the element pattern")
    }

    fn scatter(&self, values: &mut [f64], el: &[usize], local: &[f64]) {
        let npe = el.len();
        for (a, &i) in el.iter().enumerate() {
            for (b, &j) in el.iter().enumerate() {
                values[self.position(i, j)] += local[a * npe + b];
            }
        }
    }

    fn matrix(&self, values: Vec<f64>) -> CsrMatrix {
        CsrMatrix {
            rows: self.n,
            cols: self.n,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values,
        }
    }
}

fn mapped_element(mesh: &MeshTopology, tab: &Tabulation, e: usize) -> Vec<MappedPoint> {
    tab.map(&mesh.corners(e))
}

/// Local matrix of s(p,q) = (p − πp, q − πq) with π the L² projection onto
/// P_{k−1} on the element: M_T − R G⁻¹ Rᵀ.
fn local_stabilization(tab: &Tabulation, pts: &[MappedPoint], centroid: [f64; 2], degree: usize) -> Vec<f64> {
    let npe = tab.element.node_count;
    let np = if degree == 1 { 1 } else { 3 };
    let basis = |x: [f64; 2]| -> [f64; 3] { [1.0, x[0] - centroid[0], x[1] - centroid[1]] };
    let mut mass = vec![0.0; npe * npe];
    let mut r = vec![0.0; npe * np];
    let mut g = vec![0.0; np * np];
    for (q, p) in pts.iter().enumerate() {
        let phi = &tab.values[q];
        let psi = basis(p.x);
        for a in 0..npe {
            for b in 0..npe {
                mass[a * npe + b] += p.weight * phi[a] * phi[b];
            }
            for al in 0..np {
                r[a * np + al] += p.weight * phi[a] * psi[al];
            }
        }
        for al in 0..np {
            for be in 0..np {
                g[al * np + be] += p.weight * psi[al] * psi[be];
            }
        }
    }
    // X = G⁻¹ Rᵀ column by column (np ≤ 3, G SPD)
    let ginv = small_spd_inverse(&g, np);
    for a in 0..npe {
        for b in 0..npe {
            let mut s = 0.0;
            for al in 0..np {
                for be in 0..np {
                    s += r[a * np + al] * ginv[al * np + be] * r[b * np + be];
                }
            }
            mass[a * npe + b] -= s;
        }
    }
    mass
}

fn small_spd_inverse(g: &[f64], n: usize) -> Vec<f64> {
    // Gauss-Jordan; G is a tiny Gram matrix of a linearly independent basis
    let mut a = g.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for c in 0..n {
        let p = a[c * n + c];
        for j in 0..n {
            a[c * n + j] /= p;
            inv[c * n + j] /= p;
        }
        for r in 0..n {
            if r != c {
                let f = a[r * n + c];
                for j in 0..n {
                    a[r * n + j] -= f * a[c * n + j];
                    inv[r * n + j] -= f * inv[c * n + j];
                }
            }
        }
    }
    inv
}

fn element_centroid(mesh: &MeshTopology, e: usize) -> [f64; 2] {
    let c = mesh.corners(e);
    [
        0.25 * (c[0][0] + c[1][0] + c[2][0] + c[3][0]),
        0.25 * (c[0][1] + c[1][1] + c[2][1] + c[3][1]),
    ]
}

pub fn assemble_scalar_blocks(mesh: &MeshTopology) -> ScalarBlocks {
    let tab = Tabulation::new(mesh.order);
    let pat = Pattern::new(mesh);
    let nnz = pat.col_indices.len();
    let npe = tab.element.node_count;
    let degree = mesh.order.degree();
    let mut acc: Vec<Vec<f64>> = vec![vec![0.0; nnz]; 8];
    let mut local: Vec<Vec<f64>> = vec![vec![0.0; npe * npe]; 7];
    for (e, el) in mesh.elements.iter().enumerate() {
        let pts = mapped_element(mesh, &tab, e);
        local.iter_mut().for_each(|l| l.iter_mut().for_each(|v| *v = 0.0));
        for (q, p) in pts.iter().enumerate() {
            let phi = &tab.values[q];
            let w = p.weight;
            for a in 0..npe {
                let ga = p.grads[a];
                for b in 0..npe {
                    let gb = p.grads[b];
                    let k = a * npe + b;
                    local[0][k] += w * (ga[0] * gb[0] + ga[1] * gb[1]);
                    local[1][k] += w * phi[a] * phi[b];
                    local[2][k] += w * ga[0] * gb[0];
                    local[3][k] += w * ga[0] * gb[1];
                    local[4][k] += w * ga[1] * gb[1];
                    local[5][k] -= w * phi[a] * gb[0];
                    local[6][k] -= w * phi[a] * gb[1];
                }
            }
        }
        let stab = local_stabilization(&tab, &pts, element_centroid(mesh, e), degree);
        pat.scatter(&mut acc[0], el, &local[0]);
        pat.scatter(&mut acc[1], el, &local[1]);
        pat.scatter(&mut acc[2], el, &stab);
        for (slot, l) in (3..8).zip(2..7) {
            pat.scatter(&mut acc[slot], el, &local[l]);
        }
    }
    let mut it = acc.into_iter().map(|v| pat.matrix(v));
    let mut next = || it.next().expect("eight blocks");
    ScalarBlocks {
        stiffness: next(),
        mass: next(),
        stabilization: next(),
        gxx: next(),
        gxy: next(),
        gyy: next(),
        bx: next(),
        by: next(),
    }
}

/// Scalar convection matrix (a·∇φ_j, φ_i) for a full-layout advection field.
pub fn assemble_convection(mesh: &MeshTopology, a: &AdvectionField) -> Result<CsrMatrix> {
    let nv = mesh.node_count();
    if a.values.len() != 2 * nv {
        return Err(Error::Parameter(format!(
            "advection field has length {}, expected {}",
            a.values.len(),
            2 * nv
        )));
    }
    let tab = Tabulation::new(mesh.order);
    let pat = Pattern::new(mesh);
    let npe = tab.element.node_count;
    let mut acc = vec![0.0; pat.col_indices.len()];
    let mut local = vec![0.0; npe * npe];
    for (e, el) in mesh.elements.iter().enumerate() {
        let pts = mapped_element(mesh, &tab, e);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, p) in pts.iter().enumerate() {
            let phi = &tab.values[q];
            let mut aq = [0.0; 2];
            for (b, &n) in el.iter().enumerate() {
                aq[0] += phi[b] * a.values[n];
                aq[1] += phi[b] * a.values[nv + n];
            }
            for a_ in 0..npe {
                for b in 0..npe {
                    let g = p.grads[b];
                    local[a_ * npe + b] += p.weight * phi[a_] * (aq[0] * g[0] + aq[1] * g[1]);
                }
            }
        }
        pat.scatter(&mut acc, el, &local);
    }
    Ok(pat.matrix(acc))
}

pub fn block_diag2(k: &CsrMatrix) -> CsrMatrix {
    CsrMatrix::block(&[vec![Some(k), None], vec![None, Some(k)]]).expect("square blocks")
}

impl ScalarBlocks {
    pub fn vector_laplacian(&self) -> CsrMatrix {
        block_diag2(&self.stiffness)
    }

    pub fn grad_div(&self) -> CsrMatrix {
        let gyx = self.gxy.transpose();
        CsrMatrix::block(&[
            vec![Some(&self.gxx), Some(&self.gxy)],
            vec![Some(&gyx), Some(&self.gyy)],
        ])
        .expect("conforming blocks")
    }

    pub fn divergence(&self) -> CsrMatrix {
        CsrMatrix::block(&[vec![Some(&self.bx), Some(&self.by)]]).expect("conforming blocks")
    }
}

pub fn assemble_operators(mesh: &MeshTopology, dofmap: &DofMap, a: &AdvectionField) -> Result<OseenOperators> {
    if dofmap.n_velocity != mesh.node_count() {
        return Err(Error::Parameter("dof map does not match the mesh".into()));
    }
    let s = assemble_scalar_blocks(mesh);
    let conv = assemble_convection(mesh, a)?;
    Ok(OseenOperators {
        d: s.vector_laplacian(),
        n: block_diag2(&conv),
        g: s.grad_div(),
        b: s.divergence(),
        m: s.mass.clone(),
        c_raw: s.stabilization.clone(),
        a_p: s.stiffness.clone(),
        n_p: conv,
    })
}

/// Applies the PCD boundary treatment: enclosed domains keep the pure
/// Neumann operators; otherwise inflow pressure nodes become Dirichlet rows
/// (unit diagonal in A_p, zero row and column in N_p).
pub fn pcd_boundary(a_p: &CsrMatrix, n_p: &CsrMatrix, dofmap: &DofMap) -> (CsrMatrix, CsrMatrix) {
    if dofmap.enclosed || dofmap.inflow_pressure_nodes.is_empty() {
        return (a_p.clone(), n_p.clone());
    }
    let mut is_dir = vec![false; a_p.rows];
    for &i in &dofmap.inflow_pressure_nodes {
        is_dir[i] = true;
    }
    let fix = |m: &CsrMatrix, diag: f64| -> CsrMatrix {
        let mut out = m.clone();
        for i in 0..out.rows {
            for k in out.row_offsets[i]..out.row_offsets[i + 1] {
                let j = out.col_indices[k];
                if is_dir[i] || is_dir[j] {
                    out.values[k] = if i == j { diag } else { 0.0 };
                }
            }
        }
        out
    };
    (fix(a_p, 1.0), fix(n_p, 0.0))
}

/// Returns (A_p, F_p) with F_p = (ν+γ) A_p + N_p after the boundary treatment.
pub fn assemble_pcd_operators(
    mesh: &MeshTopology,
    dofmap: &DofMap,
    a: &AdvectionField,
    nu: f64,
    gamma: f64,
) -> Result<(CsrMatrix, CsrMatrix)> {
    let s = assemble_scalar_blocks(mesh);
    let conv = assemble_convection(mesh, a)?;
    let (a_p, n_p) = pcd_boundary(&s.stiffness, &conv, dofmap);
    let f_p = a_p.add(nu + gamma, &n_p, 1.0)?;
    Ok((a_p, f_p))
}

/// Boundary-data contributions moved to the right-hand side, kept per
/// operator so that one elimination serves every (ν, γ).
#[derive(Clone, Debug)]
pub struct DirichletLift {
    /// f restricted to free dofs
    pub f: Vec<f64>,
    /// −D_fc g
    pub d: Vec<f64>,
    /// −N_fc g
    pub n: Vec<f64>,
    /// −G_fc g
    pub g: Vec<f64>,
    /// −B_c g (continuity)
    pub b: Vec<f64>,
}

impl DirichletLift {
    pub fn momentum(&self, nu: f64, gamma: f64) -> Vec<f64> {
        (0..self.f.len())
            .map(|i| self.f[i] + nu * self.d[i] + self.n[i] + gamma * self.g[i])
            .collect()
    }
}

/// −A_fc g for a velocity-space operator.
pub fn lift_vector(a: &CsrMatrix, dofmap: &DofMap) -> Vec<f64> {
    let y = a.spmv(&dofmap.boundary_values).expect("velocity operator");
    dofmap.free.iter().map(|&i| -y[i]).collect()
}

pub fn restrict_velocity(a: &CsrMatrix, dofmap: &DofMap) -> CsrMatrix {
    a.submatrix(&dofmap.free, &dofmap.free)
}

/// Eliminates constrained velocity dofs symmetrically from all velocity
/// blocks; pressure blocks are unchanged.
pub fn apply_dirichlet(ops: &OseenOperators, dofmap: &DofMap, f: &[f64]) -> Result<(OseenOperators, DirichletLift)> {
    let n = dofmap.n_full_velocity();
    if f.len() != n {
        return Err(Error::Parameter(format!("load vector has length {}, expected {n}", f.len())));
    }
    let all_p: Vec<usize> = (0..dofmap.n_pressure).collect();
    let bg = ops.b.spmv(&dofmap.boundary_values)?;
    let lift = DirichletLift {
        f: dofmap.restrict(f),
        d: lift_vector(&ops.d, dofmap),
        n: lift_vector(&ops.n, dofmap),
        g: lift_vector(&ops.g, dofmap),
        b: bg.iter().map(|v| -v).collect(),
    };
    let reduced = OseenOperators {
        d: restrict_velocity(&ops.d, dofmap),
        n: restrict_velocity(&ops.n, dofmap),
        g: restrict_velocity(&ops.g, dofmap),
        b: ops.b.submatrix(&all_p, &dofmap.free),
        m: ops.m.clone(),
        c_raw: ops.c_raw.clone(),
        a_p: ops.a_p.clone(),
        n_p: ops.n_p.clone(),
    };
    Ok((reduced, lift))
}

/// ‖div u_h‖²_{L²} by direct quadrature of a full-layout velocity vector.
pub fn divergence_norm_sq(mesh: &MeshTopology, u: &[f64]) -> f64 {
    let tab = Tabulation::new(mesh.order);
    let nv = mesh.node_count();
    let mut total = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        for p in mapped_element(mesh, &tab, e) {
            let mut div = 0.0;
            for (b, &n) in el.iter().enumerate() {
                div += p.grads[b][0] * u[n] + p.grads[b][1] * u[nv + n];
            }
            total += p.weight * div * div;
        }
    }
    total
}

/// ∫ div u_h over the domain.
pub fn divergence_integral(mesh: &MeshTopology, u: &[f64]) -> f64 {
    let tab = Tabulation::new(mesh.order);
    let nv = mesh.node_count();
    let mut total = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        for p in mapped_element(mesh, &tab, e) {
            for (b, &n) in el.iter().enumerate() {
                total += p.weight * (p.grads[b][0] * u[n] + p.grads[b][1] * u[nv + n]);
            }
        }
    }
    total
}
