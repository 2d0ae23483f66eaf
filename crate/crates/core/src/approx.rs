//! Direction sets and polytopic inner/outer approximations.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::matrix_from_rows;
use crate::polytope::{HRep, Polytope};
use crate::set::Support;
use crate::solver::{solve_lp, LpProblem, LpStatus};
use crate::tolerance::Tolerance;

/// Default number of orthant points per sign pattern.
pub const DEFAULT_D: usize = 20;

/// Default iteration budget for the spreading procedure.
pub const DEFAULT_ITERS: usize = 60;

/// Unit vectors stored as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    dirs: DMatrix<f64>,
}

impl DirectionSet {
    /// Normalizes every row; zero rows are rejected.
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        let mut dirs = rows;
        for mut r in dirs.row_iter_mut() {
            let norm = r.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::ZeroDirection);
            }
            r /= norm;
        }
        Ok(DirectionSet { dirs })
    }

    /// `{±e_i}`.
    pub fn axes(n: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut e = DVector::zeros(n);
                e[i] = s;
                rows.push(e);
            }
        }
        DirectionSet {
            dirs: matrix_from_rows(&rows, n),
        }
    }

    /// `2n + 2ⁿ·D` well-separated directions.
    pub fn spread(n: usize, d: usize) -> Self {
        spread_points(n, d, DEFAULT_ITERS)
    }

    pub fn dim(&self) -> usize {
        self.dirs.ncols()
    }

    pub fn len(&self) -> usize {
        self.dirs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.nrows() == 0
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.dirs
    }

    pub fn direction(&self, i: usize) -> DVector<f64> {
        self.dirs.row(i).transpose()
    }

    /// Smallest pairwise Euclidean distance.
    pub fn min_separation(&self) -> f64 {
        min_pairwise(&(0..self.len()).map(|i| self.direction(i)).collect::<Vec<_>>())
    }
}

fn min_pairwise(pts: &[DVector<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.min((&pts[i] - &pts[j]).norm());
        }
    }
    best
}

/// Separation objective of the orthant points: pairwise distances,
/// distances to the axes and twice the smallest coordinate.
fn spread_radius(pts: &[DVector<f64>]) -> f64 {
    let n = pts.first().map_or(0, |p| p.len());
    let mut r = min_pairwise(pts);
    for p in pts {
        for j in 0..n {
            let mut q = p.clone();
            q[j] -= 1.0;
            r = r.min(q.norm());
        }
        r = r.min(2.0 * p.min());
    }
    r
}

/// Deterministic initial layout: interior lattice points of the simplex
/// patch, evenly subsampled and pushed to the sphere.
fn initial_layout(n: usize, d: usize) -> Vec<DVector<f64>> {
    fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 1..=total.saturating_sub(parts - 1) {
            prefix.push(first);
            compositions(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut m = n;
    let lattice = loop {
        let mut out = Vec::new();
        compositions(m, n, &mut Vec::new(), &mut out);
        if out.len() >= d {
            break out;
        }
        m += 1;
    };
    (0..d)
        .map(|k| {
            let idx = if d == 1 { lattice.len() / 2 } else { k * (lattice.len() - 1) / (d - 1) };
            let v = DVector::from_iterator(n, lattice[idx].iter().map(|&c| c as f64));
            let norm = v.norm();
            v / norm
        })
        .collect()
}

/// One linearized subproblem around `pts`; returns the unnormalized iterate.
fn ccp_step(pts: &[DVector<f64>], trust: f64, tol: &Tolerance) -> Option<Vec<DVector<f64>>> {
    let d = pts.len();
    let n = pts[0].len();
    let nv = d * n + 1;
    let r_col = d * n;
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    // every row reads  coeffᵀ z ≤ rhs
    let unit = |v: DVector<f64>| {
        let norm = v.norm();
        if norm > 1e-12 {
            v / norm
        } else {
            v
        }
    };
    for i in 0..d {
        for j in i + 1..d {
            let g = unit(&pts[i] - &pts[j]);
            let mut row = DVector::zeros(nv);
            for k in 0..n {
                row[i * n + k] = -g[k];
                row[j * n + k] = g[k];
            }
            row[r_col] = 1.0;
            rows.push(row);
            rhs.push(0.0);
        }
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            let g = unit(&pts[i] - &e);
            let mut row = DVector::zeros(nv);
            for k in 0..n {
                row[i * n + k] = -g[k];
            }
            row[r_col] = 1.0;
            rows.push(row);
            rhs.push(-g[j]);
        }
        for k in 0..n {
            let mut row = DVector::zeros(nv);
            row[i * n + k] = -2.0;
            row[r_col] = 1.0;
            rows.push(row);
            rhs.push(0.0);
        }
        let u = unit(pts[i].clone());
        let mut lo = DVector::zeros(nv);
        let mut hi = DVector::zeros(nv);
        for k in 0..n {
            lo[i * n + k] = -u[k];
            hi[i * n + k] = u[k];
        }
        rows.push(lo);
        rhs.push(-0.8);
        rows.push(hi);
        rhs.push(1.0);
    }
    let a = matrix_from_rows(&rows, nv);
    let b = DVector::from_vec(rhs);
    let mut lower = DVector::zeros(nv);
    let mut upper = DVector::from_element(nv, 1.0);
    for i in 0..d {
        for k in 0..n {
            lower[i * n + k] = (pts[i][k] - trust).max(0.0);
            upper[i * n + k] = (pts[i][k] + trust).min(1.0);
        }
    }
    lower[r_col] = 0.0;
    upper[r_col] = 2.0;
    let mut cost = DVector::zeros(nv);
    cost[r_col] = -1.0;
    let lp = LpProblem::new(cost).inequalities(&a, &b).bounds(lower, upper);
    let res = solve_lp(&lp, tol).ok()?;
    if res.status != LpStatus::Optimal {
        return None;
    }
    Some((0..d).map(|i| res.x.rows(i * n, n).into_owned()).collect())
}

/// Well-separated unit directions: `{±e_i}` followed by `D` orthant points
/// reflected through all `2ⁿ` sign patterns. Deterministic.
pub fn spread_points(n: usize, d: usize, iters: usize) -> DirectionSet {
    let mut out = DirectionSet::axes(n);
    if n == 0 || d == 0 {
        return out;
    }
    let mut pts = initial_layout(n, d);
    if n > 1 {
        let tol = Tolerance::default();
        let mut best = spread_radius(&pts);
        let mut trust = 0.1;
        for _ in 0..iters {
            let Some(next) = ccp_step(&pts, trust, &tol) else {
                break;
            };
            let next: Vec<DVector<f64>> = next
                .into_iter()
                .map(|p| {
                    let norm = p.norm();
                    p / norm
                })
                .collect();
            let r = spread_radius(&next);
            if r > best + 1e-6 {
                best = r;
                pts = next;
            } else if r > best {
                pts = next;
                break;
            } else {
                trust *= 0.5;
                if trust < 1e-4 {
                    break;
                }
            }
        }
    }
    let mut rows: Vec<DVector<f64>> = (0..out.len()).map(|i| out.direction(i)).collect();
    for pattern in 0..(1usize << n) {
        for p in &pts {
            let mut q = p.clone();
            for k in 0..n {
                if pattern >> k & 1 == 1 {
                    q[k] = -q[k];
                }
            }
            rows.push(q);
        }
    }
    out.dirs = matrix_from_rows(&rows, n);
    out
}

/// `{x : dᵀx ≤ h_X(d)}` over the direction set.
pub fn outer_polytope(x: &dyn Support, dirs: &DirectionSet) -> Result<Polytope> {
    check_dim(x.dim(), dirs.dim())?;
    if x.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut b = DVector::zeros(dirs.len());
    for i in 0..dirs.len() {
        b[i] = x.support_value(&dirs.direction(i))?;
    }
    Polytope::from_h(HRep::new(dirs.as_matrix().clone(), b))
}

/// Hull of the support vectors along the direction set.
pub fn inner_polytope(x: &dyn Support, dirs: &DirectionSet) -> Result<Polytope> {
    check_dim(x.dim(), dirs.dim())?;
    if x.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut pts = Vec::with_capacity(dirs.len());
    for i in 0..dirs.len() {
        pts.push(x.support(&dirs.direction(i))?.1);
    }
    Polytope::from_vertices(matrix_from_rows(&pts, x.dim()))?.reduce()
}
