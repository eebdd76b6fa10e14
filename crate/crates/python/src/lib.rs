//! Python bindings: meshes, Picard solves and the dense probes.

use oseen_core::diagnostics::{
    centerline_profiles, fov_mu, lemma42_check, probe_eigs, probe_system, reattachment_points, ProbeAdvection,
    ProbeConfig,
};
use oseen_core::fe::ElementOrder;
use oseen_core::krylov::PreconditionerKind;
use oseen_core::mesh::{build_cavity_mesh, build_step_mesh, MeshTopology};
use oseen_core::picard::{picard_solve, BenchmarkProblem, PicardConfig, PicardOutcome};
use pyo3::exceptions::{PyRuntimeError, PyTimeoutError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: oseen_core::Error) -> PyErr {
    use oseen_core::Error as E;
    match e {
        E::Parameter(_) | E::Configuration(_) | E::Parse(_) | E::SizeGuard { .. } => PyValueError::new_err(e.to_string()),
        E::Timeout => PyTimeoutError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn order(k: u32) -> PyResult<ElementOrder> {
    ElementOrder::from_degree(k).map_err(py_err)
}

/// Structured quadrilateral mesh.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    inner: MeshTopology,
}

#[pymethods]
impl PyMesh {
    #[getter]
    fn nodes(&self) -> Vec<(f64, f64)> {
        self.inner.nodes.iter().map(|x| (x[0], x[1])).collect()
    }

    #[getter]
    fn elements(&self) -> Vec<Vec<usize>> {
        self.inner.elements.clone()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order.degree()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.element_size_h
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn element_count(&self) -> usize {
        self.inner.element_count()
    }

    fn area(&self) -> f64 {
        self.inner.total_area()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(Q{}, h={}, {} nodes, {} elements)",
            self.order(),
            self.h(),
            self.node_count(),
            self.element_count()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (h, order=1))]
fn cavity_mesh(h: f64, order: u32) -> PyResult<PyMesh> {
    let inner = build_cavity_mesh(h, self::order(order)?).map_err(py_err)?;
    Ok(PyMesh { inner })
}

#[pyfunction]
#[pyo3(signature = (length, h, order=1))]
fn step_mesh(length: f64, h: f64, order: u32) -> PyResult<PyMesh> {
    let inner = build_step_mesh(length, h, self::order(order)?).map_err(py_err)?;
    Ok(PyMesh { inner })
}

/// Result of a Picard solve.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    inner: PicardOutcome,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn mesh(&self) -> PyMesh {
        PyMesh {
            inner: self.inner.discretization.mesh.clone(),
        }
    }

    /// Nodal velocity as (u1, u2) pairs.
    #[getter]
    fn velocity(&self) -> Vec<(f64, f64)> {
        let nv = self.inner.discretization.mesh.node_count();
        (0..nv)
            .map(|i| (self.inner.velocity[i], self.inner.velocity[nv + i]))
            .collect()
    }

    #[getter]
    fn pressure(&self) -> Vec<f64> {
        self.inner.pressure.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.report.converged
    }

    #[getter]
    fn picard_iterations(&self) -> usize {
        self.inner.report.picard_iterations
    }

    #[getter]
    fn gmres_iterations(&self) -> Vec<usize> {
        self.inner.report.gmres_iterations_per_step.clone()
    }

    #[getter]
    fn average_gmres(&self) -> f64 {
        self.inner.report.average_gmres
    }

    #[getter]
    fn nonlinear_residuals(&self) -> Vec<f64> {
        self.inner.report.nonlinear_residuals.clone()
    }

    /// "P(G)" or "−".
    fn table_entry(&self) -> String {
        self.inner.report.table_entry()
    }

    /// Vertical-centerline u1 and horizontal-centerline u2 as (coords, values).
    fn centerline(&self) -> PyResult<((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>))> {
        let p = centerline_profiles(&self.inner.discretization.mesh, &self.inner.velocity).map_err(py_err)?;
        Ok((
            (p.vertical_u1.coords, p.vertical_u1.values),
            (p.horizontal_u2.coords, p.horizontal_u2.values),
        ))
    }

    /// Reattachment abscissae (r1, r2, r3) of a step flow; None where absent.
    fn reattachment(&self) -> PyResult<(Option<f64>, Option<f64>, Option<f64>)> {
        let s = reattachment_points(&self.inner.discretization.mesh, &self.inner.velocity).map_err(py_err)?;
        Ok((s.r1, s.r2, s.r3))
    }
}

fn solve(py: Python<'_>, problem: BenchmarkProblem, h: f64, order: u32, gamma: f64, preconditioner: &str) -> PyResult<PySolution> {
    let kind: PreconditionerKind = preconditioner.parse().map_err(py_err)?;
    let order = self::order(order)?;
    let cfg = PicardConfig {
        gamma,
        ..PicardConfig::default()
    };
    let inner = py
        .detach(|| picard_solve(&problem, h, order, kind, &cfg))
        .map_err(py_err)?;
    Ok(PySolution { inner })
}

#[pyfunction]
#[pyo3(signature = (re, h, order=1, gamma=0.1, preconditioner="al"))]
fn solve_cavity(py: Python<'_>, re: f64, h: f64, order: u32, gamma: f64, preconditioner: &str) -> PyResult<PySolution> {
    solve(py, BenchmarkProblem::DrivenCavity { re }, h, order, gamma, preconditioner)
}

#[pyfunction]
#[pyo3(signature = (re, length, h, order=1, gamma=0.1, preconditioner="al"))]
fn solve_step(
    py: Python<'_>,
    re: f64,
    length: f64,
    h: f64,
    order: u32,
    gamma: f64,
    preconditioner: &str,
) -> PyResult<PySolution> {
    solve(py, BenchmarkProblem::BackwardStep { re, length }, h, order, gamma, preconditioner)
}

fn probe_config(nu: f64, gamma: f64, h: f64, order: u32, advection: &str) -> PyResult<ProbeConfig> {
    Ok(ProbeConfig {
        nu,
        gamma,
        h,
        order: self::order(order)?,
        advection: advection.parse::<ProbeAdvection>().map_err(py_err)?,
    })
}

/// Eigenvalues of Ŝ⁻¹S on mean-zero pressures, with min Re λ and max |λ|.
#[pyfunction]
#[pyo3(signature = (nu, gamma, h, order=1, advection="zero"))]
fn schur_eigenvalues(
    py: Python<'_>,
    nu: f64,
    gamma: f64,
    h: f64,
    order: u32,
    advection: &str,
) -> PyResult<(Vec<(f64, f64)>, f64, f64)> {
    let cfg = probe_config(nu, gamma, h, order, advection)?;
    let rep = py.detach(|| probe_eigs(&cfg)).map_err(py_err)?;
    let ev = rep.eigenvalues.iter().map(|z| (z.re, z.im)).collect();
    Ok((ev, rep.min_real, rep.max_modulus))
}

/// (mu_KP, mu_PK) field-of-values minima of the preconditioned system.
#[pyfunction]
#[pyo3(signature = (nu, gamma, h, order=1, advection="zero"))]
fn field_of_values(py: Python<'_>, nu: f64, gamma: f64, h: f64, order: u32, advection: &str) -> PyResult<(f64, f64)> {
    let cfg = probe_config(nu, gamma, h, order, advection)?;
    let rep = py
        .detach(|| probe_system(&cfg).and_then(|s| fov_mu(&s)))
        .map_err(py_err)?;
    Ok((rep.mu_kp, rep.mu_pk))
}

/// (violations, max excess) of ⟨Ŝ⁻¹q,q⟩ ≤ ⟨S⁻¹q,q⟩ over random q.
#[pyfunction]
#[pyo3(signature = (nu, gamma, h, order=1, trials=100, seed=0))]
fn schur_dominance(py: Python<'_>, nu: f64, gamma: f64, h: f64, order: u32, trials: usize, seed: u64) -> PyResult<(usize, f64)> {
    let cfg = probe_config(nu, gamma, h, order, "zero")?;
    let rep = py
        .detach(|| probe_system(&cfg).and_then(|s| lemma42_check(&s, trials, seed)))
        .map_err(py_err)?;
    Ok((rep.violations, rep.max_excess))
}

#[pymodule]
fn oseen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(cavity_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(step_mesh, m)?)?;
    m.add_function(wrap_pyfunction!(solve_cavity, m)?)?;
    m.add_function(wrap_pyfunction!(solve_step, m)?)?;
    m.add_function(wrap_pyfunction!(schur_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(field_of_values, m)?)?;
    m.add_function(wrap_pyfunction!(schur_dominance, m)?)?;
    Ok(())
}
