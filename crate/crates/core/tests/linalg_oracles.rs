//! Sparse factorizations and dense eigensolvers checked against nalgebra.

use faer::Mat;
use nalgebra::DMatrix;
use oseen_core::linalg::{eig_general, eig_sym_generalized, umfpack, CsrMatrix, Factorization};
use oseen_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sparse(rng: &mut ChaCha8Rng, n: usize) -> (CsrMatrix, DMatrix<f64>) {
    let mut t = Vec::new();
    for i in 0..n {
        // diagonally dominant rows keep the systems well conditioned
        t.push((i, i, 4.0 + rng.random::<f64>()));
        for _ in 0..3 {
            let j = rng.random_range(0..n);
            if j != i {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
    let mut d = DMatrix::zeros(n, n);
    for &(i, j, v) in &t {
        d[(i, j)] += v;
    }
    (a, d)
}

fn to_faer(d: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)])
}

#[test]
fn two_hundred_random_systems_both_backends() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..200 {
        let n = rng.random_range(1..60);
        let (a, d) = random_sparse(&mut rng, n);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lu = d.clone().lu();
        let x_ref = lu.solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        let xt_ref = d.transpose().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        let mut backends = vec![Factorization::lu_faer(&a).unwrap()];
        if umfpack::available() {
            let f = Factorization::lu(&a).unwrap();
            assert!(matches!(f, Factorization::Umfpack(_)));
            backends.push(f);
        }
        for f in &backends {
            let x = f.solve(&b);
            let xt = f.solve_transpose(&b);
            for i in 0..n {
                assert!((x[i] - x_ref[i]).abs() < 1e-10 * (1.0 + x_ref[i].abs()), "trial {trial} {f:?}");
                assert!((xt[i] - xt_ref[i]).abs() < 1e-10 * (1.0 + xt_ref[i].abs()), "trial {trial} {f:?}");
            }
        }
    }
}

#[test]
fn singular_matrix_reported() {
    // two identical rows
    let t = [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 1.0), (1, 1, 2.0), (2, 2, 1.0)];
    let a = CsrMatrix::from_triplets(3, 3, &t).unwrap();
    assert!(matches!(Factorization::lu_faer(&a), Err(Error::Singular { .. })));
    assert!(matches!(Factorization::lu(&a), Err(Error::Singular { .. })));
}

#[test]
fn cholesky_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(2..40);
        let (_, d) = random_sparse(&mut rng, n);
        let spd = &d * d.transpose() + DMatrix::identity(n, n);
        let a = CsrMatrix::from_dense(&to_faer(&spd));
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Factorization::cholesky(&a).unwrap().solve(&b);
        let x_ref = spd.cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b));
        for i in 0..n {
            assert!((x[i] - x_ref[i]).abs() < 1e-10 * (1.0 + x_ref[i].abs()));
        }
    }
    let indefinite = CsrMatrix::from_diagonal(&[1.0, -1.0]);
    assert!(matches!(Factorization::cholesky(&indefinite), Err(Error::NotPositiveDefinite)));
}

#[test]
fn generalized_symmetric_spectrum_matches_rayleigh_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let n = rng.random_range(2..30);
        let x = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &x + x.transpose();
        let b = &y * y.transpose() + DMatrix::identity(n, n) * 0.5;
        let ev = eig_sym_generalized(&to_faer(&a), &to_faer(&b)).unwrap();
        // each λ makes A − λB singular, and the extreme values are the
        // extrema of the Rayleigh quotient xᵀAx / xᵀBx
        let l = b.clone().cholesky().unwrap().l();
        let li = l.clone().try_inverse().unwrap();
        let c = &li * &a * li.transpose();
        let mut reference: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (p, q) in ev.iter().zip(&reference) {
            assert!((p - q).abs() < 1e-9 * (1.0 + q.abs()), "{p} vs {q}");
            let shifted = &a - &b * *p;
            let smin = shifted.singular_values().min();
            assert!(smin < 1e-8 * (1.0 + a.norm() + b.norm() * p.abs()));
        }
        for _ in 0..50 {
            let v = nalgebra::DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let rq = (v.transpose() * &a * &v)[0] / (v.transpose() * &b * &v)[0];
            assert!(rq >= ev[0] - 1e-10 && rq <= ev[n - 1] + 1e-10);
        }
    }
}

#[test]
fn general_spectrum_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let n = rng.random_range(2..25);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut ours: Vec<(f64, f64)> = eig_general(&to_faer(&a)).unwrap().iter().map(|z| (z.re, z.im)).collect();
        let mut theirs: Vec<(f64, f64)> = a.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
        let key = |z: &(f64, f64)| (z.0 * 1e6).round() as i64 * 1_000_000_000 + (z.1 * 1e6).round() as i64;
        ours.sort_by_key(key);
        theirs.sort_by_key(key);
        for (p, q) in ours.iter().zip(&theirs) {
            assert!((p.0 - q.0).abs() < 1e-8 && (p.1 - q.1).abs() < 1e-8, "{p:?} vs {q:?}");
        }
    }
}
