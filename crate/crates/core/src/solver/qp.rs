//! Convex quadratic programs by a primal active-set method.
//!
//! Minimizes `½ xᵀQx + qᵀx` over the same constraint blocks as
//! [`LpProblem`]. A feasible start comes from an LP phase 1. `Q` is
//! regularized by `1e-12·I` so that PSD-but-singular terms still give a
//! nonsingular KKT system on the working set.

use nalgebra::{DMatrix, DVector};

use super::lp::{solve_lp, LpProblem, LpStatus};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::tolerance::Tolerance;

pub type QpStatus = LpStatus;

const REGULARIZATION: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub q_mat: DMatrix<f64>,
    pub q_vec: DVector<f64>,
    pub constraints: LpProblem,
}

impl QpProblem {
    /// Unconstrained problem; add constraints through [`QpProblem::constraints`].
    pub fn new(q_mat: DMatrix<f64>, q_vec: DVector<f64>) -> Self {
        let n = q_vec.len();
        QpProblem {
            q_mat,
            q_vec,
            constraints: LpProblem::new(DVector::zeros(n)),
        }
    }

    pub fn with_constraints(mut self, constraints: LpProblem) -> Self {
        self.constraints = constraints;
        self
    }

    /// `min ‖x − v‖²` without constraints.
    pub fn projection(v: &DVector<f64>) -> Self {
        let n = v.len();
        QpProblem::new(DMatrix::identity(n, n) * 2.0, v * -2.0)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) + self.q_vec.dot(x)
    }
}

#[derive(Debug, Clone)]
pub struct QpResult {
    pub status: QpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl QpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_qp(p: &QpProblem, tol: &Tolerance) -> Result<QpResult> {
    let n = p.q_vec.len();
    check_dim(n, p.q_mat.nrows())?;
    check_dim(n, p.q_mat.ncols())?;
    check_dim(n, p.constraints.num_vars())?;
    let scale = p.q_mat.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if (&p.q_mat - p.q_mat.transpose()).amax() > tol.rank * scale {
        return Err(Error::NotPsd);
    }
    if n > 0 && linalg::min_eigenvalue(&p.q_mat) < -tol.rank * scale {
        return Err(Error::NotPsd);
    }

    // feasible start
    let phase1 = solve_lp(&p.constraints.clone(), tol)?;
    match phase1.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(failed(LpStatus::Infeasible, n, phase1.iterations)),
        LpStatus::IterationLimit => {
            return Ok(failed(LpStatus::IterationLimit, n, phase1.iterations))
        }
        LpStatus::Unbounded => unreachable!("zero-cost LP cannot be unbounded"),
    }
    let mut x = phase1.x;

    // all inequality-type rows, bounds included
    let c = &p.constraints;
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..c.a_ub.nrows() {
        rows.push((c.a_ub.row(i).transpose(), c.b_ub[i]));
    }
    for j in 0..n {
        if c.upper[j].is_finite() {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            rows.push((e, c.upper[j]));
        }
        if c.lower[j].is_finite() {
            let mut e = DVector::zeros(n);
            e[j] = -1.0;
            rows.push((e, -c.lower[j]));
        }
    }
    let eq_keep = linalg::independent_rows(&c.a_eq, tol.rank);
    let eq_rows: Vec<DVector<f64>> = eq_keep.iter().map(|&i| c.a_eq.row(i).transpose()).collect();

    let q_reg = &p.q_mat + DMatrix::identity(n, n) * REGULARIZATION;
    let mut working: Vec<usize> = Vec::new();
    {
        let mut basis: Vec<DVector<f64>> = eq_rows.clone();
        for (i, (a, b)) in rows.iter().enumerate() {
            let norm = a.norm().max(1.0);
            if (a.dot(&x) - b).abs() <= tol.feas * norm && is_independent(&basis, a, tol.rank) {
                basis.push(a.clone());
                working.push(i);
            }
        }
    }

    let mut iterations = 0;
    loop {
        if iterations >= tol.iter_max {
            return Ok(failed(LpStatus::IterationLimit, n, iterations));
        }
        iterations += 1;
        let grad = &p.q_mat * &x + &p.q_vec;
        let active: Vec<&DVector<f64>> = eq_rows
            .iter()
            .chain(working.iter().map(|&i| &rows[i].0))
            .collect();
        let (step, mult) = kkt_step(&q_reg, &grad, &active);
        let step_scale = x.amax().max(1.0);
        if step.amax() <= 1e-11 * step_scale {
            // multipliers of the working inequalities
            let offset = eq_rows.len();
            let mut worst = None;
            let mut worst_val = -tol.opt.max(1e-10) * grad.amax().max(1.0);
            for (k, _) in working.iter().enumerate() {
                let lam = mult[offset + k];
                if lam < worst_val {
                    worst_val = lam;
                    worst = Some(k);
                }
            }
            match worst {
                None => break,
                Some(k) => {
                    working.remove(k);
                    continue;
                }
            }
        }
        // ratio test over rows outside the working set
        let mut alpha = 1.0;
        let mut blocking = None;
        for (i, (a, b)) in rows.iter().enumerate() {
            if working.contains(&i) {
                continue;
            }
            let ap = a.dot(&step);
            if ap <= 1e-14 * a.norm() * step.norm() {
                continue;
            }
            let slack = (b - a.dot(&x)).max(0.0);
            let ratio = slack / ap;
            if ratio < alpha {
                alpha = ratio;
                blocking = Some(i);
            }
        }
        x.axpy(alpha, &step, 1.0);
        if x.amax() > 1e12 {
            return Ok(failed(LpStatus::Unbounded, n, iterations));
        }
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    let objective = p.objective(&x);
    Ok(QpResult {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations,
    })
}

fn failed(status: LpStatus, n: usize, iterations: usize) -> QpResult {
    QpResult {
        status,
        x: DVector::zeros(n),
        objective: f64::NAN,
        iterations,
    }
}

fn is_independent(basis: &[DVector<f64>], a: &DVector<f64>, rel_tol: f64) -> bool {
    if basis.is_empty() {
        return a.norm() > 0.0;
    }
    let m = linalg::matrix_from_rows(basis, a.len());
    let mut ext = m.clone().insert_row(basis.len(), 0.0);
    ext.set_row(basis.len(), &a.transpose());
    linalg::rank(&ext, rel_tol.max(1e-9)) > linalg::rank(&m, rel_tol.max(1e-9))
}

/// Solves `[Q Aᵀ; A 0][p; λ] = [−g; 0]`.
fn kkt_step(q: &DMatrix<f64>, grad: &DVector<f64>, active: &[&DVector<f64>]) -> (DVector<f64>, DVector<f64>) {
    let n = grad.len();
    let k = active.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(q);
    for (r, a) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = a[j];
            kkt[(j, n + r)] = a[j];
        }
    }
    let mut rhs = DVector::zeros(n + k);
    for j in 0..n {
        rhs[j] = -grad[j];
    }
    let sol = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()) && (&kkt * s - &rhs).amax() < 1e-8 * rhs.amax().max(1.0))
        .unwrap_or_else(|| linalg::least_squares(&kkt, &rhs, 1e-13));
    let step = sol.rows(0, n).into_owned();
    let mult = sol.rows(n, k).into_owned();
    (step, mult)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn unconstrained_projection_is_identity() {
        let v = dvector![0.3, -2.0, 5.0];
        let r = solve_qp(&QpProblem::projection(&v), &Tolerance::default()).unwrap();
        assert!(r.is_optimal());
        assert!((r.x - v).amax() < 1e-9);
    }

    #[test]
    fn simplex_projection() {
        let v = dvector![1.0, 1.0, 1.0];
        let cons = LpProblem::new(DVector::zeros(3))
            .equalities(&dmatrix![1.0, 1.0, 1.0], &dvector![1.0])
            .nonnegative();
        let p = QpProblem::projection(&v).with_constraints(cons);
        let r = solve_qp(&p, &Tolerance::default()).unwrap();
        assert!(r.is_optimal());
        for i in 0..3 {
            assert!((r.x[i] - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pinned_equality() {
        let cons = LpProblem::new(dvector![0.0]).equalities(&dmatrix![1.0], &dvector![5.0]);
        let p = QpProblem::new(dmatrix![2.0], dvector![0.0]).with_constraints(cons);
        let r = solve_qp(&p, &Tolerance::default()).unwrap();
        assert!((r.x[0] - 5.0).abs() < 1e-12);
        assert!((r.objective - 25.0).abs() < 1e-9);
    }

    #[test]
    fn indefinite_rejected() {
        let p = QpProblem::new(dmatrix![1.0, 0.0; 0.0, -1.0], dvector![0.0, 0.0]);
        assert_eq!(solve_qp(&p, &Tolerance::default()).unwrap_err(), Error::NotPsd);
    }

    #[test]
    fn infeasible_reported() {
        let cons = LpProblem::new(dvector![0.0])
            .bounds(dvector![0.0], dvector![1.0])
            .equalities(&dmatrix![1.0], &dvector![2.0]);
        let p = QpProblem::new(dmatrix![2.0], dvector![0.0]).with_constraints(cons);
        assert_eq!(solve_qp(&p, &Tolerance::default()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn box_projection_with_singular_hessian() {
        // min (x0 - 2)² over the box, x1 absent from the objective
        let cons = LpProblem::new(dvector![0.0, 0.0])
            .bounds(dvector![-1.0, -1.0], dvector![1.0, 1.0]);
        let p = QpProblem::new(dmatrix![2.0, 0.0; 0.0, 0.0], dvector![-4.0, 0.0]).with_constraints(cons);
        let r = solve_qp(&p, &Tolerance::default()).unwrap();
        assert!(r.is_optimal());
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!(r.x[1].abs() <= 1.0 + 1e-9);
    }
}
