//! Structural checks of the operator module: the recursive filter form must
//! agree with its materialized Toeplitz matrix, and the adjoint must satisfy
//! the inner-product identity.

mod common;

use common::rng;
use msc::operators::{GramMatrix, LinearOperator};
use nalgebra::DVector;
use rand::Rng;

fn random_signal(rng: &mut rand_chacha::ChaCha20Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0))
}

#[test]
fn arma_matvec_equals_dense_toeplitz() {
    let mut rng = rng(0x09e7_0001);
    for n in [1, 2, 17, 120, 200] {
        let op = LinearOperator::arma(vec![1.0, 0.8], vec![1.0, -1.047, 0.81], n).unwrap();
        let dense = op.to_dense().unwrap();
        for _ in 0..5 {
            let x = random_signal(&mut rng, n);
            let via_filter = op.matvec(&x).unwrap();
            let via_dense = &dense * &x;
            let err = (&via_filter - &via_dense).norm();
            assert!(
                err <= 1e-10 * via_dense.norm().max(1.0),
                "n={n}: filter vs dense error {err}"
            );

            let y = random_signal(&mut rng, n);
            let adj_filter = op.adjoint_matvec(&y).unwrap();
            let adj_dense = dense.transpose() * &y;
            let errt = (&adj_filter - &adj_dense).norm();
            assert!(
                errt <= 1e-10 * adj_dense.norm().max(1.0),
                "n={n}: adjoint filter vs dense error {errt}"
            );
        }
    }
}

#[test]
fn adjoint_inner_product_identity() {
    let mut rng = rng(0x09e7_0002);
    for n in [3, 50, 300] {
        let op = LinearOperator::arma(vec![1.0, 0.8], vec![1.0, -1.047, 0.81], n).unwrap();
        for _ in 0..10 {
            let x = random_signal(&mut rng, n);
            let y = random_signal(&mut rng, n);
            let lhs = op.matvec(&x).unwrap().dot(&y);
            let rhs = x.dot(&op.adjoint_matvec(&y).unwrap());
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "n={n}: <Hx,y>={lhs} vs <x,H^T y>={rhs}"
            );
        }
    }
}

#[test]
fn subcolumns_and_gram_consistency() {
    let mut rng = rng(0x09e7_0003);
    let n = 60;
    let op = LinearOperator::arma(vec![1.0, 0.8], vec![1.0, -1.047, 0.81], n).unwrap();
    let idx = vec![0, 3, 7, 20, 41, 59];
    let sub = op.subcolumns(&idx).unwrap();

    // Columns of the restriction match the parent operator's columns.
    for (k, &j) in idx.iter().enumerate() {
        let want = op.column(j).unwrap();
        let got = sub.column(k).unwrap();
        assert!((got - want).norm() < 1e-14);
    }

    // Gram equals the brute-force column inner products.
    let g = GramMatrix::from_operator(&sub).unwrap();
    for (ki, &i) in idx.iter().enumerate() {
        for (kj, &j) in idx.iter().enumerate() {
            let want = op.column(i).unwrap().dot(&op.column(j).unwrap());
            assert!((g.matrix()[(ki, kj)] - want).abs() < 1e-10);
        }
    }

    // Column norms agree with the Gram diagonal.
    let norms = sub.column_norms();
    for k in 0..idx.len() {
        assert!((norms[k] * norms[k] - g.matrix()[(k, k)]).abs() < 1e-10);
    }

    let _ = rng.gen::<u64>();
}

#[test]
fn min_eigenvalue_certificate_on_random_grams() {
    let mut rng = rng(0x09e7_0004);
    for _ in 0..20 {
        let k = rng.gen_range(1..12);
        let m = nalgebra::DMatrix::from_fn(k + 2, k, |_, _| rng.gen_range(-1.0..1.0));
        let g = GramMatrix::from_operator(&LinearOperator::Dense(m)).unwrap();
        let alpha = g.min_eigenvalue().unwrap();
        // Gram matrices are PSD up to roundoff.
        assert!(alpha > -1e-10 * g.spectral_norm().max(1.0));
        // alpha is a lower bound on the Rayleigh quotient.
        for _ in 0..5 {
            let v = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
            let q = v.dot(&(g.matrix() * &v)) / v.dot(&v);
            assert!(q >= alpha - 1e-9 * g.spectral_norm().max(1.0));
        }
    }
}
