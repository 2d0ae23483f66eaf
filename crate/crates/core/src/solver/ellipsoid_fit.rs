//! Extremal ellipsoids: minimum-volume enclosing (points) and maximum-volume
//! inscribed (halfspaces).

use nalgebra::{DMatrix, DVector};

use super::lp::{solve_lp, LpProblem, LpStatus};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tolerance::Tolerance;

/// Minimum-volume enclosing ellipsoid `{x : (x−c)ᵀQ(x−c) ≤ 1}` of the rows of
/// `points`, by Khachiyan's algorithm with Todd–Yildirim away steps.
///
/// The returned `Q` is rescaled so that every input point satisfies the
/// quadratic form ≤ 1.
pub fn mvee_of_points(points: &DMatrix<f64>, eps: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (m, n) = points.shape();
    if n == 0 || m < n + 1 {
        return Err(Error::DegenerateInput);
    }
    if linalg::affine_hull(points, 1e-10).dim() < n {
        return Err(Error::DegenerateInput);
    }
    let d = (n + 1) as f64;
    let lifted: Vec<DVector<f64>> = (0..m)
        .map(|i| {
            let mut q = DVector::zeros(n + 1);
            q.rows_mut(0, n).copy_from(&points.row(i).transpose());
            q[n] = 1.0;
            q
        })
        .collect();
    let mut u = vec![1.0 / m as f64; m];
    let max_iter = 100_000;
    for _ in 0..max_iter {
        let mut x = DMatrix::zeros(n + 1, n + 1);
        for (ui, q) in u.iter().zip(&lifted) {
            x.ger(*ui, q, q, 1.0);
        }
        let Some(chol) = x.cholesky() else {
            return Err(Error::DegenerateInput);
        };
        let mvals: Vec<f64> = lifted.iter().map(|q| q.dot(&chol.solve(q))).collect();
        let (j, mj) = argmax(&mvals);
        let (k, mk) = mvals
            .iter()
            .enumerate()
            .filter(|(i, _)| u[*i] > 0.0)
            .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        if mj <= (1.0 + eps) * d && mk >= (1.0 - eps) * d {
            break;
        }
        if mj - d >= d - mk {
            let step = (mj - d) / (d * (mj - 1.0));
            for v in u.iter_mut() {
                *v *= 1.0 - step;
            }
            u[j] += step;
        } else {
            let step = ((d - mk) / (d * (mk - 1.0))).min(u[k] / (1.0 - u[k]));
            for v in u.iter_mut() {
                *v *= 1.0 + step;
            }
            u[k] -= step;
            u[k] = u[k].max(0.0);
        }
    }
    let mut c = DVector::zeros(n);
    let mut second = DMatrix::zeros(n, n);
    for i in 0..m {
        let p = points.row(i).transpose();
        c.axpy(u[i], &p, 1.0);
        second.ger(u[i], &p, &p, 1.0);
    }
    second.ger(-1.0, &c, &c, 1.0);
    let inv = second.try_inverse().ok_or(Error::DegenerateInput)?;
    let mut q = inv / n as f64;
    q = (&q + q.transpose()) * 0.5;
    let worst = (0..m)
        .map(|i| {
            let e = points.row(i).transpose() - &c;
            e.dot(&(&q * &e))
        })
        .fold(0.0f64, f64::max);
    if worst > 1.0 {
        q /= worst;
    }
    Ok((q, c))
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if *x > acc.1 { (i, *x) } else { acc })
}

/// Center and radius of the largest Euclidean ball in `{Ax ≤ b}`.
pub fn chebyshev_ball(a: &DMatrix<f64>, b: &DVector<f64>, tol: &Tolerance) -> Result<(DVector<f64>, f64)> {
    let (m, n) = a.shape();
    let mut ext = DMatrix::zeros(m, n + 1);
    ext.view_mut((0, 0), (m, n)).copy_from(a);
    for i in 0..m {
        ext[(i, n)] = a.row(i).norm();
    }
    let mut cost = DVector::zeros(n + 1);
    cost[n] = -1.0;
    let mut lower = DVector::from_element(n + 1, f64::NEG_INFINITY);
    lower[n] = 0.0;
    let upper = DVector::from_element(n + 1, f64::INFINITY);
    let p = LpProblem::new(cost).inequalities(&ext, b).bounds(lower, upper);
    let r = solve_lp(&p, tol)?;
    match r.status {
        LpStatus::Optimal => Ok((r.x.rows(0, n).into_owned(), r.x[n])),
        LpStatus::Infeasible => Err(Error::EmptySet),
        LpStatus::Unbounded => Err(Error::UnboundedPolytope),
        LpStatus::IterationLimit => Err(Error::IterationLimit),
    }
}

/// Symmetric basis matrices spanning the space of `n × n` symmetric matrices.
fn sym_basis(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push((i, j));
        }
    }
    out
}

fn sym_from_vech(y: &[f64], n: usize, basis: &[(usize, usize)]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n);
    for (k, &(i, j)) in basis.iter().enumerate() {
        b[(i, j)] = y[k];
        b[(j, i)] = y[k];
    }
    b
}

struct MvieState<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    n: usize,
    basis: Vec<(usize, usize)>,
}

impl MvieState<'_> {
    fn nvars(&self) -> usize {
        self.basis.len() + self.n
    }

    /// Barrier value, or `None` outside the domain.
    fn value(&self, z: &DVector<f64>, t: f64) -> Option<f64> {
        let nb = self.basis.len();
        let bm = sym_from_vech(&z.as_slice()[..nb], self.n, &self.basis);
        let chol = bm.clone().cholesky()?;
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let d = z.rows(nb, self.n);
        let mut f = -t * logdet;
        for i in 0..self.a.nrows() {
            let ai = self.a.row(i).transpose();
            let g = self.b[i] - ai.dot(&d) - (&bm * &ai).norm();
            if g <= 0.0 {
                return None;
            }
            f -= g.ln();
        }
        Some(f)
    }

    fn grad_hess(&self, z: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let nb = self.basis.len();
        let k = self.nvars();
        let bm = sym_from_vech(&z.as_slice()[..nb], n, &self.basis);
        let binv = bm.clone().try_inverse().expect("B positive definite inside the domain");
        let d = z.rows(nb, n).into_owned();
        let mut grad = DVector::zeros(k);
        let mut hess = DMatrix::zeros(k, k);
        // -t log det B
        for (p, &(i, j)) in self.basis.iter().enumerate() {
            let tr = if i == j { binv[(i, i)] } else { 2.0 * binv[(i, j)] };
            grad[p] -= t * tr;
            for (q, &(r, s)) in self.basis.iter().enumerate().skip(p) {
                // tr(B⁻¹ E_p B⁻¹ E_q)
                let h = trace_pair(&binv, (i, j), (r, s));
                hess[(p, q)] += t * h;
                if q != p {
                    hess[(q, p)] += t * h;
                }
            }
        }
        // barrier terms
        for row in 0..self.a.nrows() {
            let ai = self.a.row(row).transpose();
            let w = &bm * &ai;
            let h = w.norm();
            let g = self.b[row] - ai.dot(&d) - h;
            // u_p = E_p a
            let u: Vec<DVector<f64>> = self
                .basis
                .iter()
                .map(|&(i, j)| {
                    let mut v = DVector::zeros(n);
                    if i == j {
                        v[i] = ai[i];
                    } else {
                        v[i] = ai[j];
                        v[j] = ai[i];
                    }
                    v
                })
                .collect();
            let mut dg = DVector::zeros(k);
            for p in 0..nb {
                dg[p] = -w.dot(&u[p]) / h;
            }
            for j in 0..n {
                dg[nb + j] = -ai[j];
            }
            grad.axpy(-1.0 / g, &dg, 1.0);
            hess.ger(1.0 / (g * g), &dg, &dg, 1.0);
            for p in 0..nb {
                for q in p..nb {
                    let wp = w.dot(&u[p]);
                    let wq = w.dot(&u[q]);
                    let d2h = u[p].dot(&u[q]) / h - wp * wq / (h * h * h);
                    let v = d2h / g;
                    hess[(p, q)] += v;
                    if q != p {
                        hess[(q, p)] += v;
                    }
                }
            }
        }
        (grad, hess)
    }
}

fn trace_pair(binv: &DMatrix<f64>, (i, j): (usize, usize), (r, s): (usize, usize)) -> f64 {
    // E_(i,j) = e_i e_jᵀ + e_j e_iᵀ (single term when i == j)
    let left: Vec<(usize, usize)> = if i == j { vec![(i, i)] } else { vec![(i, j), (j, i)] };
    let right: Vec<(usize, usize)> = if r == s { vec![(r, r)] } else { vec![(r, s), (s, r)] };
    let mut acc = 0.0;
    // tr(B⁻¹ e_a e_bᵀ B⁻¹ e_c e_dᵀ) = binv[d,a] * binv[b,c]
    for &(a, b) in &left {
        for &(c, d) in &right {
            acc += binv[(d, a)] * binv[(b, c)];
        }
    }
    acc
}

/// Maximum-volume inscribed ellipsoid `{B u + d : ‖u‖ ≤ 1}` of `{Ax ≤ b}`.
///
/// Damped Newton on `−t·log det B − Σ log(bᵢ − aᵢᵀd − ‖B aᵢ‖)` for an
/// increasing sequence of `t`, started from the Chebyshev ball.
pub fn mvie_of_halfspaces(a: &DMatrix<f64>, b: &DVector<f64>, tol: &Tolerance) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (m, n) = a.shape();
    crate::error::check_dim(m, b.len())?;
    let (center, radius) = match chebyshev_ball(a, b, tol) {
        Ok(v) => v,
        Err(Error::EmptySet) => return Err(Error::EmptyInterior),
        Err(e) => return Err(e),
    };
    if radius <= tol.feas {
        return Err(Error::EmptyInterior);
    }
    // keep only rows with nonzero normals
    let keep: Vec<usize> = (0..m).filter(|&i| a.row(i).norm() > 0.0).collect();
    let a = a.select_rows(&keep);
    let b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| b[i]));
    let state = MvieState {
        a: &a,
        b: &b,
        n,
        basis: sym_basis(n),
    };
    let nb = state.basis.len();
    let mut z = DVector::zeros(state.nvars());
    for (p, &(i, j)) in state.basis.iter().enumerate() {
        if i == j {
            z[p] = 0.5 * radius;
        }
    }
    z.rows_mut(nb, n).copy_from(&center);

    let mut t = 1.0;
    let mut iterations = 0;
    let rows = a.nrows().max(1) as f64;
    loop {
        // centering
        for _ in 0..100 {
            iterations += 1;
            if iterations > tol.iter_max {
                return Err(Error::IterationLimit);
            }
            let (grad, hess) = state.grad_hess(&z, t);
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess.lu().solve(&(-&grad)).ok_or(Error::Solver("singular barrier Hessian".into()))?,
            };
            let decrement = -grad.dot(&step);
            if decrement / 2.0 <= 1e-12 {
                break;
            }
            let f0 = state.value(&z, t).expect("iterate inside the domain");
            let mut alpha = 1.0;
            let mut accepted = false;
            let mut stalled = false;
            for _ in 0..60 {
                let trial = &z + &step * alpha;
                if let Some(f) = state.value(&trial, t) {
                    if f <= f0 - 0.25 * alpha * decrement {
                        stalled = f0 - f <= 1e-15 * f0.abs().max(1.0);
                        z = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted || stalled {
                break;
            }
        }
        if rows / t < tol.opt {
            break;
        }
        t *= 20.0;
    }
    let bm = sym_from_vech(&z.as_slice()[..nb], n, &state.basis);
    let d = z.rows(nb, n).into_owned();
    Ok((bm, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn pentagon_h() -> (DMatrix<f64>, DVector<f64>) {
        (
            dmatrix![-1.0, 0.0; 0.0, 1.0; 1.0, 0.0; 0.0, -1.0; -1.0, -1.0],
            dvector![1.0, 1.0, 1.0, 1.0, 0.5],
        )
    }

    #[test]
    fn mvee_of_cross_is_unit_disk() {
        let pts = dmatrix![1.0, 0.0; -1.0, 0.0; 0.0, 1.0; 0.0, -1.0];
        let (q, c) = mvee_of_points(&pts, 1e-9).unwrap();
        assert!((q - DMatrix::<f64>::identity(2, 2)).amax() < 1e-6);
        assert!(c.amax() < 1e-9);
    }

    #[test]
    fn mvee_of_square_corners() {
        let pts = dmatrix![1.0, 1.0; -1.0, 1.0; 1.0, -1.0; -1.0, -1.0];
        let (q, c) = mvee_of_points(&pts, 1e-9).unwrap();
        assert!((q - DMatrix::<f64>::identity(2, 2) * 0.5).amax() < 1e-6);
        assert!(c.amax() < 1e-9);
    }

    #[test]
    fn mvee_contains_simplex() {
        let pts = dmatrix![0.0, 0.0; 1.0, 0.0; 0.0, 1.0];
        let (q, c) = mvee_of_points(&pts, 1e-7).unwrap();
        for i in 0..3 {
            let e = pts.row(i).transpose() - &c;
            assert!(e.dot(&(&q * &e)) <= 1.0 + 1e-7);
        }
    }

    #[test]
    fn mvee_rejects_flat_points() {
        let pts = dmatrix![0.0, 0.0; 1.0, 1.0; 2.0, 2.0];
        assert_eq!(mvee_of_points(&pts, 1e-7).unwrap_err(), Error::DegenerateInput);
    }

    #[test]
    fn mvie_of_box_is_unit_ball() {
        let a = dmatrix![1.0, 0.0; -1.0, 0.0; 0.0, 1.0; 0.0, -1.0];
        let b = dvector![1.0, 1.0, 1.0, 1.0];
        let (bm, d) = mvie_of_halfspaces(&a, &b, &Tolerance::default()).unwrap();
        assert!((bm - DMatrix::<f64>::identity(2, 2)).amax() < 1e-6);
        assert!(d.amax() < 1e-6);
    }

    #[test]
    fn mvie_of_pentagon_area() {
        let (a, b) = pentagon_h();
        let (bm, d) = mvie_of_halfspaces(&a, &b, &Tolerance::default()).unwrap();
        let area = std::f64::consts::PI * bm.determinant();
        assert!((area - 1.89).abs() < 0.005, "{area}");
        for i in 0..5 {
            let ai = a.row(i).transpose();
            assert!((&bm * &ai).norm() + ai.dot(&d) <= b[i]);
        }
    }

    #[test]
    fn pentagon_chebyshev() {
        let (a, b) = pentagon_h();
        let (_, r) = chebyshev_ball(&a, &b, &Tolerance::default()).unwrap();
        assert!((r - 2.5 / (2.0 + 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn mvie_flat_set_has_empty_interior() {
        let a = dmatrix![1.0, 0.0; -1.0, 0.0; 0.0, 1.0; 0.0, -1.0];
        let b = dvector![0.0, 0.0, 1.0, 1.0];
        assert_eq!(
            mvie_of_halfspaces(&a, &b, &Tolerance::default()).unwrap_err(),
            Error::EmptyInterior
        );
    }
}
