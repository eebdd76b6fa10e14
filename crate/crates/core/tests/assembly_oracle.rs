//! Element matrices recomputed by a plain dense loop with independently
//! written shape functions, quadrature and projection, on randomly
//! perturbed meshes.

mod common;

use common::{block_differences, perturbed};
use oseen_core::assembly::assemble_scalar_blocks;
use oseen_core::fe::ElementOrder;

const TOL: f64 = 1e-12;

fn check(h: f64, order: ElementOrder, seed: u64) {
    for (name, d) in block_differences(h, order, seed) {
        assert!(d < TOL, "{name} differs by {d:e} (h={h}, {order}, seed {seed})");
    }
}

#[test]
fn q1_two_by_two() {
    for seed in 0..3 {
        check(1.0, ElementOrder::Q1, seed);
    }
}

#[test]
fn q1_three_by_three() {
    for seed in 0..3 {
        check(2.0 / 3.0, ElementOrder::Q1, seed);
    }
}

#[test]
fn q2_two_by_two() {
    for seed in 0..3 {
        check(1.0, ElementOrder::Q2, seed);
    }
}

#[test]
fn q2_three_by_three() {
    for seed in 0..3 {
        check(2.0 / 3.0, ElementOrder::Q2, seed);
    }
}

#[test]
fn stabilization_kills_local_polynomials() {
    // s(p, ·) vanishes for p in P_{k-1}; globally continuous constants (Q1)
    // and linears (Q2) are such fields
    for order in [ElementOrder::Q1, ElementOrder::Q2] {
        let mesh = perturbed(2.0 / 3.0, order, 7);
        let c = assemble_scalar_blocks(&mesh).stabilization;
        let field: Vec<f64> = match order {
            ElementOrder::Q1 => vec![1.0; mesh.node_count()],
            ElementOrder::Q2 => mesh.nodes.iter().map(|x| 0.3 + x[0] - 2.0 * x[1]).collect(),
        };
        let r = c.spmv(&field).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{order}");
    }
}
