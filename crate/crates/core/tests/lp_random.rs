use convexset::solver::{solve_lp, LpProblem, LpStatus};
use convexset::Tolerance;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

/// Feasible and bounded: rows through a known point, half of them tight, plus a box.
fn random_problem(rng: &mut ChaCha8Rng) -> (LpProblem, DMatrix<f64>, DVector<f64>) {
    let n = rng.random_range(1..7);
    let m = rng.random_range(0..12);
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
    let mut a = random_matrix(rng, m, n);
    let mut b = &a * &x0;
    for i in 0..m {
        if rng.random_bool(0.5) {
            b[i] += rng.random_range(0.0..1.0);
        }
    }
    let cap = DMatrix::identity(n, n);
    a = DMatrix::from_fn(m + n, n, |i, j| if i < m { a[(i, j)] } else { cap[(i - m, j)] });
    b = DVector::from_fn(m + n, |i, _| if i < m { b[i] } else { 3.0 });
    let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let p = LpProblem::new(c).inequalities(&a, &b).nonnegative();
    (p, a, b)
}

#[test]
fn optimal_points_are_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tol = Tolerance::default();
    for _ in 0..1000 {
        let (p, _, _) = random_problem(&mut rng);
        let r = solve_lp(&p, &tol).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!(p.max_violation(&r.x) <= tol.feas, "{}", p.max_violation(&r.x));
    }
}

#[test]
fn strong_duality_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tol = Tolerance::default();
    for _ in 0..1000 {
        let (p, a, b) = random_problem(&mut rng);
        let primal = solve_lp(&p, &tol).unwrap();
        // dual: min bᵀy s.t. -Aᵀy ≤ c, y ≥ 0
        let dual = LpProblem::new(b.clone())
            .inequalities(&(-a.transpose()), &p.cost)
            .nonnegative();
        let d = solve_lp(&dual, &tol).unwrap();
        assert_eq!(d.status, LpStatus::Optimal);
        assert!(
            (primal.objective + d.objective).abs() < 1e-6,
            "{} vs {}",
            primal.objective,
            -d.objective
        );
    }
}

#[test]
fn equality_constrained_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tol = Tolerance::default();
    for _ in 0..1000 {
        let n = rng.random_range(2..8);
        let me = rng.random_range(1..n);
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut ae = random_matrix(&mut rng, me, n);
        if rng.random_bool(0.3) {
            // duplicate a row to exercise redundancy handling
            let r0 = ae.row(0).into_owned();
            ae.set_row(me - 1, &(r0 * 2.0));
        }
        let be = &ae * &x0;
        let c = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let p = LpProblem::new(c)
            .equalities(&ae, &be)
            .bounds(DVector::from_element(n, -1.0), DVector::from_element(n, 1.0));
        let r = solve_lp(&p, &tol).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!(p.max_violation(&r.x) <= tol.feas);
        assert!(r.objective <= p.cost.dot(&x0) + 1e-9);
    }
}
