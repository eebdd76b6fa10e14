use oseen_core::assembly::{assemble_scalar_blocks, AdvectionField};
use oseen_core::cli::{h_label, parse_h};
use oseen_core::diagnostics::Householder;
use oseen_core::fe::ElementOrder;
use oseen_core::krylov::project_mean_zero;
use oseen_core::linalg::{dot, norm2, CsrMatrix};
use oseen_core::mesh::{build_cavity_mesh, build_step_mesh, validate_mesh};
use oseen_core::picard::{BenchmarkProblem, Discretization};
use proptest::prelude::*;

fn order_strategy() -> impl Strategy<Value = ElementOrder> {
    prop_oneof![Just(ElementOrder::Q1), Just(ElementOrder::Q2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn meshes_validate_and_cover_area(k in 1usize..6, order in order_strategy(), length in 1usize..6) {
        let h = 1.0 / k as f64;
        let c = build_cavity_mesh(h, order).unwrap();
        prop_assert!(validate_mesh(&c).all_pass());
        prop_assert!((c.total_area() - 4.0).abs() < 1e-12);
        let s = build_step_mesh(length as f64, h, order).unwrap();
        prop_assert!(validate_mesh(&s).all_pass());
        prop_assert!((s.total_area() - (2.0 * (length as f64 + 1.0) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn scalar_blocks_reproduce_constants(k in 1usize..5, order in order_strategy()) {
        let mesh = build_cavity_mesh(1.0 / k as f64, order).unwrap();
        let s = assemble_scalar_blocks(&mesh);
        let one = vec![1.0; mesh.node_count()];
        let area: f64 = s.mass.spmv(&one).unwrap().iter().sum();
        prop_assert!((area - 4.0).abs() < 1e-12);
        prop_assert!(s.stiffness.spmv(&one).unwrap().iter().all(|v| v.abs() < 1e-12));
        prop_assert!(s.bx.spmv(&one).unwrap().iter().all(|v| v.abs() < 1e-12));
        prop_assert!(s.stabilization.spmv(&one).unwrap().iter().all(|v| v.abs() < 1e-12));
        // ∫∂x x = area
        let x: Vec<f64> = mesh.nodes.iter().map(|p| p[0]).collect();
        let bx: f64 = s.bx.spmv(&x).unwrap().iter().sum();
        prop_assert!((bx + 4.0).abs() < 1e-12);
    }

    #[test]
    fn householder_basis_is_orthonormal(w in proptest::collection::vec(-1.0f64..1.0, 2..12), y0 in proptest::collection::vec(-1.0f64..1.0, 11)) {
        prop_assume!(norm2(&w) > 1e-3);
        let h = Householder::new(&w).unwrap();
        let d = h.dim();
        prop_assert_eq!(d, w.len() - 1);
        let y = &y0[..d];
        let x = h.expand(y);
        prop_assert!(dot(&x, &w).abs() < 1e-12);
        prop_assert!((norm2(&x) - norm2(y)).abs() < 1e-12);
        let back = h.restrict(&x);
        for (a, b) in back.iter().zip(y) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_zero_projection_is_idempotent(v in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
        let mut p = v.clone();
        project_mean_zero(&mut p);
        prop_assert!(p.iter().sum::<f64>().abs() < 1e-10);
        let mut q = p.clone();
        project_mean_zero(&mut q);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csr_transpose_and_add(t in proptest::collection::vec((0usize..8, 0usize..6, -5.0f64..5.0), 0..40),
                             x in proptest::collection::vec(-1.0f64..1.0, 8)) {
        let a = CsrMatrix::from_triplets(8, 6, &t).unwrap();
        let at = a.transpose();
        let y = at.spmv(&x).unwrap();
        let y2 = a.spmv_transpose(&x).unwrap();
        for (p, q) in y.iter().zip(&y2) {
            prop_assert!((p - q).abs() < 1e-12);
        }
        prop_assert!(at.transpose().add(1.0, &a, -1.0).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn mesh_size_labels_round_trip(k in 1u64..256) {
        let h = 1.0 / k as f64;
        prop_assert_eq!(parse_h(&h_label(h)).unwrap(), h);
    }

    #[test]
    fn solenoidal_advection_adds_nothing_to_energy(k in 1usize..4, order in order_strategy(), nu in 0.01f64..1.0, gamma in 0.0f64..1.0, seed in 0u64..1000) {
        // each component depends only on the other coordinate, so the nodal
        // interpolant is exactly divergence free and N is skew on H¹₀
        let disc = Discretization::new(&BenchmarkProblem::DrivenCavity { re: 1.0 }, 1.0 / k as f64, order).unwrap();
        let s = seed as f64;
        let a = AdvectionField::interpolate(&disc.mesh, |x| [(s + x[1]).sin(), (s - x[0]).cos()]);
        let sys = disc.system(nu, gamma, &a, false).unwrap();
        let stokes = disc.system(nu, gamma, &AdvectionField::zero(a.values.len()), false).unwrap();
        let u: Vec<f64> = (0..sys.n()).map(|i| ((i as f64 + s) * 0.37).sin()).collect();
        let e = dot(&sys.a_gamma.spmv(&u).unwrap(), &u);
        let e0 = dot(&stokes.a_gamma.spmv(&u).unwrap(), &u);
        prop_assert!(e0 > 0.0);
        prop_assert!((e - e0).abs() < 1e-12 * (1.0 + e0));
    }
}
