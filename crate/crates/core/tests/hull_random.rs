use convexset::hull::convex_hull;
use convexset::solver::{solve_lp, LpProblem, LpStatus};
use convexset::Tolerance;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Point i is extreme iff it is not a convex combination of the others.
fn is_extreme(p: &DMatrix<f64>, i: usize) -> bool {
    let (m, n) = p.shape();
    let others: Vec<usize> = (0..m)
        .filter(|&j| j != i && (p.row(j) - p.row(i)).amax() > 1e-12)
        .collect();
    let k = others.len();
    let mut a = DMatrix::zeros(n + 1, k);
    let mut b = DVector::zeros(n + 1);
    for (c, &j) in others.iter().enumerate() {
        for r in 0..n {
            a[(r, c)] = p[(j, r)];
        }
        a[(n, c)] = 1.0;
    }
    for r in 0..n {
        b[r] = p[(i, r)];
    }
    b[n] = 1.0;
    let lp = LpProblem::new(DVector::zeros(k)).equalities(&a, &b).nonnegative();
    solve_lp(&lp, &Tolerance::default()).unwrap().status == LpStatus::Infeasible
}

#[test]
fn vertices_match_lp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..60 {
        let dim = 2 + trial % 4;
        let m = rng.random_range(dim + 2..40);
        let on_sphere = trial % 3 == 0;
        let p = DMatrix::from_fn(m, dim, |_, _| rng.random_range(-1.0..1.0));
        let p = if on_sphere {
            let mut q = p.clone();
            for mut row in q.row_iter_mut() {
                let nrm = row.norm();
                row /= nrm;
            }
            q
        } else {
            p
        };
        let h = convex_hull(&p).unwrap();
        let oracle: Vec<usize> = (0..m).filter(|&i| is_extreme(&p, i)).collect();
        assert_eq!(h.vertices, oracle, "trial {trial}");
        for f in &h.facets {
            for i in 0..m {
                assert!(f.normal.dot(&p.row(i).transpose()) <= f.offset + 1e-9);
            }
        }
    }
}

#[test]
fn integer_lattice_boxes() {
    // zonotope-like clouds with many coplanar and collinear points
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..40 {
        let dim = 2 + trial % 3;
        let m = 30;
        let p = DMatrix::from_fn(m, dim, |_, _| rng.random_range(-2..=2) as f64);
        let h = convex_hull(&p).unwrap();
        let oracle: Vec<usize> = (0..m)
            .filter(|&i| (0..i).all(|j| (p.row(j) - p.row(i)).amax() > 0.0))
            .filter(|&i| is_extreme(&p, i))
            .collect();
        assert_eq!(h.vertices, oracle, "trial {trial}");
    }
}
