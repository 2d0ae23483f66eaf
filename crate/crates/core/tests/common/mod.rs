#![allow(dead_code)]

use convexset::{ConstrainedZonotope, Ellipsoid, Polytope};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn random_vector(rng: &mut impl Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| uniform(rng, -scale, scale))
}

pub fn random_direction(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    loop {
        let v = random_vector(rng, n, 1.0);
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| uniform(rng, -1.0, 1.0))
}

/// Invertible with condition number kept moderate.
pub fn random_invertible(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::<f64>::identity(n, n) + random_matrix(rng, n, n) * 0.6;
        let sv = m.clone().svd(false, false).singular_values;
        if sv.min() > 0.2 {
            return m;
        }
    }
}

/// Hull of `n + 1 ..= n + 6` random points around a random center.
pub fn random_polytope(rng: &mut impl Rng, n: usize) -> Polytope {
    let c = random_vector(rng, n, 0.5);
    loop {
        let m = rng.random_range(n + 1..=n + 6);
        let pts = DMatrix::from_fn(m, n, |_, j| uniform(rng, -1.0, 1.0) + c[j]);
        let p = Polytope::from_vertices(pts).unwrap();
        if p.is_full_dimensional().unwrap() && p.volume().unwrap() > 0.05 {
            return p.reduce().unwrap();
        }
    }
}

pub fn random_zonotope(rng: &mut impl Rng, n: usize) -> ConstrainedZonotope {
    let k = rng.random_range(n..=n + 2);
    let g = random_matrix(rng, n, k) * 0.6;
    ConstrainedZonotope::zonotope(g, random_vector(rng, n, 0.5)).unwrap()
}

/// Random zonotope cut by one halfspace through a point near its center.
pub fn random_cz(rng: &mut impl Rng, n: usize) -> ConstrainedZonotope {
    loop {
        let z = random_zonotope(rng, n);
        let a = random_direction(rng, n);
        let b = a.dot(z.center()) + uniform(rng, -0.1, 0.3);
        let cut = z
            .intersect_halfspaces(&DMatrix::from_row_slice(1, n, a.as_slice()), &DVector::from_element(1, b))
            .unwrap();
        if !cut.is_empty() {
            return cut;
        }
    }
}

pub fn random_ellipsoid(rng: &mut impl Rng, n: usize) -> Ellipsoid {
    let g = random_invertible(rng, n) * 0.7;
    Ellipsoid::from_generator(g, random_vector(rng, n, 0.5)).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Fixed-seed proptest configuration so suites are reproducible.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Default::default()
    }
}
