//! Independent dense-loop assembly shared by the oracle tests and the
//! acceptance suite.

use nalgebra::{DMatrix, DVector};
use oseen_core::assembly::{assemble_convection, assemble_scalar_blocks, AdvectionField};
use oseen_core::fe::ElementOrder;
use oseen_core::linalg::CsrMatrix;
use oseen_core::mesh::{build_cavity_mesh, MeshTopology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gauss(n: usize) -> Vec<(f64, f64)> {
    match n {
        2 => {
            let a = 1.0 / 3f64.sqrt();
            vec![(-a, 1.0), (a, 1.0)]
        }
        3 => {
            let a = (0.6f64).sqrt();
            vec![(-a, 5.0 / 9.0), (0.0, 8.0 / 9.0), (a, 5.0 / 9.0)]
        }
        _ => unreachable!(),
    }
}

/// Values and reference derivatives at (s, t) in the library's local order:
/// corners counterclockwise from (-1,-1), then bottom, right, top, left
/// midpoints and the center.
fn shape(order: ElementOrder, s: f64, t: f64) -> Vec<(f64, f64, f64)> {
    match order {
        ElementOrder::Q1 => {
            let c = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
            c.iter()
                .map(|&(a, b)| {
                    (
                        0.25 * (1.0 + a * s) * (1.0 + b * t),
                        0.25 * a * (1.0 + b * t),
                        0.25 * b * (1.0 + a * s),
                    )
                })
                .collect()
        }
        ElementOrder::Q2 => {
            // 1D quadratics attached to -1, 0, 1
            let l = |x: f64, k: i32| match k {
                -1 => (x * (x - 1.0) / 2.0, x - 0.5),
                0 => (1.0 - x * x, -2.0 * x),
                _ => (x * (x + 1.0) / 2.0, x + 0.5),
            };
            let nodes = [(-1, -1), (1, -1), (1, 1), (-1, 1), (0, -1), (1, 0), (0, 1), (-1, 0), (0, 0)];
            nodes
                .iter()
                .map(|&(a, b)| {
                    let (fs, ds) = l(s, a);
                    let (ft, dt) = l(t, b);
                    (fs * ft, ds * ft, fs * dt)
                })
                .collect()
        }
    }
}

pub struct Dense {
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
    stab: DMatrix<f64>,
    dxdx: DMatrix<f64>,
    dxdy: DMatrix<f64>,
    dydy: DMatrix<f64>,
    bx: DMatrix<f64>,
    by: DMatrix<f64>,
    conv: DMatrix<f64>,
}

pub fn oracle(mesh: &MeshTopology, adv: &[f64]) -> Dense {
    let n = mesh.node_count();
    let z = || DMatrix::<f64>::zeros(n, n);
    let mut d = Dense {
        stiffness: z(),
        mass: z(),
        stab: z(),
        dxdx: z(),
        dxdy: z(),
        dydy: z(),
        bx: z(),
        by: z(),
        conv: z(),
    };
    let order = mesh.order;
    let rule = gauss(order.quadrature_points());
    for el in &mesh.elements {
        let x: Vec<[f64; 2]> = (0..4).map(|k| mesh.nodes[el[k]]).collect();
        let cx = (x[0][0] + x[1][0] + x[2][0] + x[3][0]) / 4.0;
        let cy = (x[0][1] + x[1][1] + x[2][1] + x[3][1]) / 4.0;
        let npe = el.len();
        // local polynomial space for the projection: P0 or P1
        let np = if order == ElementOrder::Q1 { 1 } else { 3 };
        let mut loc_mass = DMatrix::<f64>::zeros(npe, npe);
        let mut rows: Vec<(Vec<f64>, [f64; 3], f64)> = Vec::new();
        for &(s, ws) in &rule {
            for &(t, wt) in &rule {
                let q1 = shape(ElementOrder::Q1, s, t);
                let mut j = [[0.0; 2]; 2];
                let mut pos = [0.0; 2];
                for k in 0..4 {
                    for c in 0..2 {
                        pos[c] += q1[k].0 * x[k][c];
                        j[c][0] += q1[k].1 * x[k][c];
                        j[c][1] += q1[k].2 * x[k][c];
                    }
                }
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                assert!(det > 0.0);
                let w = ws * wt * det;
                let sh = shape(order, s, t);
                // physical gradients: J⁻ᵀ ∇_ref
                let g: Vec<[f64; 2]> = sh
                    .iter()
                    .map(|&(_, ds, dt)| {
                        [(j[1][1] * ds - j[1][0] * dt) / det, (-j[0][1] * ds + j[0][0] * dt) / det]
                    })
                    .collect();
                let mut a = [0.0; 2];
                for k in 0..npe {
                    a[0] += sh[k].0 * adv[el[k]];
                    a[1] += sh[k].0 * adv[n + el[k]];
                }
                for p in 0..npe {
                    for q in 0..npe {
                        let (i, jj) = (el[p], el[q]);
                        let (fp, fq) = (sh[p].0, sh[q].0);
                        d.stiffness[(i, jj)] += w * (g[p][0] * g[q][0] + g[p][1] * g[q][1]);
                        d.mass[(i, jj)] += w * fp * fq;
                        loc_mass[(p, q)] += w * fp * fq;
                        d.dxdx[(i, jj)] += w * g[p][0] * g[q][0];
                        d.dxdy[(i, jj)] += w * g[p][0] * g[q][1];
                        d.dydy[(i, jj)] += w * g[p][1] * g[q][1];
                        d.bx[(i, jj)] -= w * fp * g[q][0];
                        d.by[(i, jj)] -= w * fp * g[q][1];
                        d.conv[(i, jj)] += w * fp * (a[0] * g[q][0] + a[1] * g[q][1]);
                    }
                }
                rows.push((sh.iter().map(|v| v.0).collect(), [1.0, pos[0] - cx, pos[1] - cy], w));
            }
        }
        // orthonormalize the local polynomial basis by Gram-Schmidt in the
        // quadrature inner product, then subtract Σ r_k r_kᵀ from the mass
        let nq = rows.len();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for k in 0..np {
            let mut v: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
            for b in &basis {
                let c: f64 = (0..nq).map(|i| rows[i].2 * v[i] * b[i]).sum();
                for i in 0..nq {
                    v[i] -= c * b[i];
                }
            }
            let nrm = (0..nq).map(|i| rows[i].2 * v[i] * v[i]).sum::<f64>().sqrt();
            basis.push(v.iter().map(|x| x / nrm).collect());
        }
        let mut local = loc_mass.clone();
        for b in &basis {
            let r: DVector<f64> = DVector::from_fn(npe, |p, _| (0..nq).map(|i| rows[i].2 * rows[i].0[p] * b[i]).sum::<f64>());
            local -= &r * r.transpose();
        }
        for p in 0..npe {
            for q in 0..npe {
                d.stab[(el[p], el[q])] += local[(p, q)];
            }
        }
    }
    d
}

pub fn perturbed(h: f64, order: ElementOrder, seed: u64) -> MeshTopology {
    let mut mesh = build_cavity_mesh(h, order).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boundary: std::collections::HashSet<usize> = mesh.boundary_nodes().into_iter().collect();
    let mut is_vertex = vec![false; mesh.node_count()];
    for el in &mesh.elements {
        for &v in &el[..4] {
            is_vertex[v] = true;
        }
    }
    for v in 0..mesh.node_count() {
        if is_vertex[v] && !boundary.contains(&v) {
            mesh.nodes[v][0] += rng.random_range(-0.2..0.2) * h;
            mesh.nodes[v][1] += rng.random_range(-0.2..0.2) * h;
        }
    }
    if order == ElementOrder::Q2 {
        // keep higher-order nodes at the bilinear images
        for e in 0..mesh.element_count() {
            let c = mesh.corners(e);
            let el = mesh.elements[e].clone();
            let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            mesh.nodes[el[4]] = mid(c[0], c[1]);
            mesh.nodes[el[5]] = mid(c[1], c[2]);
            mesh.nodes[el[6]] = mid(c[2], c[3]);
            mesh.nodes[el[7]] = mid(c[3], c[0]);
            mesh.nodes[el[8]] = mid(mid(c[0], c[2]), mid(c[1], c[3]));
        }
    }
    mesh
}

pub fn max_diff(a: &CsrMatrix, b: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.rows {
        for j in 0..a.cols {
            worst = worst.max((a.get(i, j) - b[(i, j)]).abs());
        }
    }
    worst
}

/// Largest entrywise difference per block between the library and the oracle.
pub fn block_differences(h: f64, order: ElementOrder, seed: u64) -> Vec<(&'static str, f64)> {
    let mesh = perturbed(h, order, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let adv: Vec<f64> = (0..2 * mesh.node_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lib = assemble_scalar_blocks(&mesh);
    let conv = assemble_convection(&mesh, &AdvectionField::new(adv.clone()).unwrap()).unwrap();
    let o = oracle(&mesh, &adv);
    vec![
        ("stiffness", max_diff(&lib.stiffness, &o.stiffness)),
        ("mass", max_diff(&lib.mass, &o.mass)),
        ("stabilization", max_diff(&lib.stabilization, &o.stab)),
        ("gxx", max_diff(&lib.gxx, &o.dxdx)),
        ("gxy", max_diff(&lib.gxy, &o.dxdy)),
        ("gyy", max_diff(&lib.gyy, &o.dydy)),
        ("bx", max_diff(&lib.bx, &o.bx)),
        ("by", max_diff(&lib.by, &o.by)),
        ("convection", max_diff(&conv, &o.conv)),
    ]
}
