//! Dense bounded-variable primal simplex.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    cᵀx
//! subject to  A_ub x ≤ b_ub,  A_eq x = b_eq,  l ≤ x ≤ u
//! ```
//!
//! where bounds may be infinite. Inequality rows receive a nonnegative slack
//! and every row is equilibrated by its largest coefficient. Phase 1 uses one
//! explicit artificial per row whose slack cannot start basic; artificial
//! columns are never stored because they never re-enter the basis. Pricing is
//! Dantzig's rule, switching to Bland's rule for the rest of a phase once a run
//! of degenerate pivots is detected. The ratio test is Harris' two-pass test.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::tolerance::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub cost: DVector<f64>,
    pub a_ub: DMatrix<f64>,
    pub b_ub: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl LpProblem {
    /// Problem with the given cost, free variables and no constraints.
    pub fn new(cost: DVector<f64>) -> Self {
        let n = cost.len();
        LpProblem {
            cost,
            a_ub: DMatrix::zeros(0, n),
            b_ub: DVector::zeros(0),
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// Appends rows `a x ≤ b`.
    pub fn inequalities(mut self, a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        self.a_ub = stack_rows(&self.a_ub, a);
        self.b_ub = crate::linalg::vcat(&self.b_ub, b);
        self
    }

    /// Appends rows `a x = b`.
    pub fn equalities(mut self, a: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        self.a_eq = stack_rows(&self.a_eq, a);
        self.b_eq = crate::linalg::vcat(&self.b_eq, b);
        self
    }

    pub fn bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn nonnegative(mut self) -> Self {
        self.lower.fill(0.0);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        check_dim(n, self.a_ub.ncols())?;
        check_dim(n, self.a_eq.ncols())?;
        check_dim(self.a_ub.nrows(), self.b_ub.len())?;
        check_dim(self.a_eq.nrows(), self.b_eq.len())?;
        check_dim(n, self.lower.len())?;
        check_dim(n, self.upper.len())?;
        let finite = |m: &DMatrix<f64>| m.iter().all(|x| x.is_finite());
        if !finite(&self.a_ub)
            || !finite(&self.a_eq)
            || !self.b_ub.iter().chain(self.b_eq.iter()).all(|x| x.is_finite())
            || !self.cost.iter().all(|x| x.is_finite())
        {
            return Err(Error::InvalidInput("LP data must be finite".into()));
        }
        if self
            .lower
            .iter()
            .zip(self.upper.iter())
            .any(|(l, u)| l.is_nan() || u.is_nan() || l > u)
        {
            return Err(Error::InvalidInput("LP bounds must satisfy l ≤ u".into()));
        }
        Ok(())
    }

    /// Largest violation of the constraints of this problem at `x`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        if self.a_ub.nrows() > 0 {
            let r = &self.a_ub * x - &self.b_ub;
            worst = r.iter().fold(worst, |acc, v| acc.max(*v));
        }
        if self.a_eq.nrows() > 0 {
            let r = &self.a_eq * x - &self.b_eq;
            worst = r.iter().fold(worst, |acc, v| acc.max(v.abs()));
        }
        for j in 0..x.len() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }
}

// Mismatched widths are kept as-is so that validation reports them.
fn stack_rows(top: &DMatrix<f64>, rows: &DMatrix<f64>) -> DMatrix<f64> {
    if top.ncols() != rows.ncols() {
        rows.clone()
    } else {
        crate::linalg::vstack(top, rows)
    }
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, n: usize, iterations: usize) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        LpResult {
            status,
            x: DVector::zeros(n),
            objective,
            iterations,
        }
    }
}

/// Solves `p` with the dense bounded simplex.
pub fn solve_lp(p: &LpProblem, tol: &Tolerance) -> Result<LpResult> {
    p.validate()?;
    let n = p.num_vars();
    let mut simplex = match Simplex::build(p, tol) {
        Some(s) => s,
        None => return Ok(LpResult::without_point(LpStatus::Infeasible, n, 0)),
    };
    let status = simplex.run();
    if status != LpStatus::Optimal {
        return Ok(LpResult::without_point(status, n, simplex.iterations));
    }
    let mut x = simplex.structural_values(n);
    if p.max_violation(&x) > tol.feas {
        if let Some(refined) = simplex.refine(p) {
            if p.max_violation(&refined) < p.max_violation(&x) {
                x = refined;
            }
        }
    }
    let objective = p.cost.dot(&x);
    Ok(LpResult {
        status,
        x,
        objective,
        iterations: simplex.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    FreeZero,
}

const ARTIFICIAL: usize = usize::MAX;
const DEGENERATE_RUN: usize = 50;

struct Simplex {
    m: usize,
    nv: usize,
    /// Row-major `m × nv` tableau `B⁻¹A`.
    t: Vec<f64>,
    /// Values of the basic variable of each row.
    xb: Vec<f64>,
    /// Basic variable of each row, or `ARTIFICIAL`.
    basis: Vec<usize>,
    /// Sign of the artificial column of each row.
    art_sign: Vec<f64>,
    basic_row: Vec<usize>,
    state: Vec<VarState>,
    /// Values of the nonbasic variables.
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    /// Row scale factors applied to the original rows.
    row_scale: Vec<f64>,
    n_ub: usize,
    tol: Tolerance,
    iterations: usize,
    art_hi: f64,
}

impl Simplex {
    /// Builds the phase-1 tableau. Returns `None` when a zero row proves
    /// infeasibility.
    fn build(p: &LpProblem, tol: &Tolerance) -> Option<Self> {
        let n = p.num_vars();
        let n_ub_all = p.a_ub.nrows();
        // Drop all-zero rows after checking their consistency.
        let mut ub_rows = Vec::new();
        for i in 0..n_ub_all {
            let scale = p.a_ub.row(i).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if scale == 0.0 {
                if p.b_ub[i] < -tol.feas {
                    return None;
                }
            } else {
                ub_rows.push((i, scale));
            }
        }
        let mut eq_rows = Vec::new();
        for i in 0..p.a_eq.nrows() {
            let scale = p.a_eq.row(i).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if scale == 0.0 {
                if p.b_eq[i].abs() > tol.feas {
                    return None;
                }
            } else {
                eq_rows.push((i, scale));
            }
        }
        let n_ub = ub_rows.len();
        let m = n_ub + eq_rows.len();
        let nv = n + n_ub;

        let mut lo = Vec::with_capacity(nv);
        let mut hi = Vec::with_capacity(nv);
        for j in 0..n {
            lo.push(p.lower[j]);
            hi.push(p.upper[j]);
        }
        for _ in 0..n_ub {
            lo.push(0.0);
            hi.push(f64::INFINITY);
        }
        let mut x = vec![0.0; nv];
        let mut state = vec![VarState::FreeZero; nv];
        for j in 0..nv {
            if lo[j].is_finite() {
                x[j] = lo[j];
                state[j] = VarState::AtLower;
            } else if hi[j].is_finite() {
                x[j] = hi[j];
                state[j] = VarState::AtUpper;
            }
        }

        let mut t = vec![0.0; m * nv];
        let mut rhs = vec![0.0; m];
        let mut row_scale = vec![1.0; m];
        for (r, &(i, scale)) in ub_rows.iter().enumerate() {
            let row = &mut t[r * nv..(r + 1) * nv];
            for j in 0..n {
                row[j] = p.a_ub[(i, j)] / scale;
            }
            row[n + r] = 1.0;
            rhs[r] = p.b_ub[i] / scale;
            row_scale[r] = scale;
        }
        for (k, &(i, scale)) in eq_rows.iter().enumerate() {
            let r = n_ub + k;
            let row = &mut t[r * nv..(r + 1) * nv];
            for j in 0..n {
                row[j] = p.a_eq[(i, j)] / scale;
            }
            rhs[r] = p.b_eq[i] / scale;
            row_scale[r] = scale;
        }

        let mut basis = vec![ARTIFICIAL; m];
        let mut art_sign = vec![1.0; m];
        let mut xb = vec![0.0; m];
        let mut basic_row = vec![usize::MAX; nv];
        for r in 0..m {
            let row = &t[r * nv..(r + 1) * nv];
            let mut resid = rhs[r];
            for j in 0..n {
                if row[j] != 0.0 && x[j] != 0.0 {
                    resid -= row[j] * x[j];
                }
            }
            if r < n_ub && resid >= 0.0 {
                basis[r] = n + r;
                state[n + r] = VarState::Basic;
                basic_row[n + r] = r;
                xb[r] = resid;
            } else {
                let sign = if resid >= 0.0 { 1.0 } else { -1.0 };
                art_sign[r] = sign;
                xb[r] = resid.abs();
                if sign < 0.0 {
                    for v in &mut t[r * nv..(r + 1) * nv] {
                        *v = -*v;
                    }
                }
            }
        }

        let mut cost = vec![0.0; nv];
        for j in 0..n {
            cost[j] = p.cost[j];
        }
        Some(Simplex {
            m,
            nv,
            t,
            xb,
            basis,
            art_sign,
            basic_row,
            state,
            x,
            lo,
            hi,
            cost,
            d: vec![0.0; nv],
            row_scale,
            n_ub,
            tol: *tol,
            iterations: 0,
            art_hi: f64::INFINITY,
        })
    }

    fn bounds_of(&self, var: usize) -> (f64, f64) {
        if var == ARTIFICIAL {
            (0.0, self.art_hi)
        } else {
            (self.lo[var], self.hi[var])
        }
    }

    fn compute_reduced_costs(&mut self, phase_one: bool) {
        let nv = self.nv;
        let mut d = if phase_one {
            vec![0.0; nv]
        } else {
            self.cost.clone()
        };
        for r in 0..self.m {
            let cb = match (phase_one, self.basis[r]) {
                (true, ARTIFICIAL) => 1.0,
                (true, _) => 0.0,
                (false, ARTIFICIAL) => 0.0,
                (false, v) => self.cost[v],
            };
            if cb != 0.0 {
                let row = &self.t[r * nv..(r + 1) * nv];
                for (dj, tj) in d.iter_mut().zip(row) {
                    *dj -= cb * tj;
                }
            }
        }
        for j in 0..nv {
            if self.state[j] == VarState::Basic {
                d[j] = 0.0;
            }
        }
        self.d = d;
    }

    fn run(&mut self) -> LpStatus {
        let needs_phase_one = self.basis.contains(&ARTIFICIAL);
        if needs_phase_one {
            self.art_hi = f64::INFINITY;
            self.compute_reduced_costs(true);
            match self.iterate(true) {
                LpStatus::Optimal => {}
                LpStatus::Unbounded => return LpStatus::Infeasible,
                other => return other,
            }
            let infeas: f64 = (0..self.m)
                .filter(|&r| self.basis[r] == ARTIFICIAL)
                .map(|r| self.xb[r])
                .sum();
            let rhs_scale = self.xb.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if infeas > self.tol.feas * rhs_scale.sqrt() {
                return LpStatus::Infeasible;
            }
            self.art_hi = 0.0;
            self.drive_out_artificials();
        }
        self.compute_reduced_costs(false);
        self.iterate(false)
    }

    /// Pivots remaining zero-valued artificials out of the basis where a
    /// nonzero tableau entry allows it.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] != ARTIFICIAL {
                continue;
            }
            let nv = self.nv;
            let mut best = None;
            let mut best_abs = 1e-9;
            for j in 0..nv {
                if self.state[j] == VarState::Basic {
                    continue;
                }
                let a = self.t[r * nv + j].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                // zero-step pivot: entering variable keeps its value
                let value = self.x[j];
                self.pivot(r, j);
                self.xb[r] = value;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nv = self.nv;
        let piv = self.t[r * nv + j];
        {
            let row = &mut self.t[r * nv..(r + 1) * nv];
            let inv = 1.0 / piv;
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[j] = 1.0;
        }
        let prow: Vec<f64> = self.t[r * nv..(r + 1) * nv].to_vec();
        let nz: Vec<usize> = (0..nv).filter(|&k| prow[k] != 0.0).collect();
        let sparse = nz.len() * 2 < nv;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nv + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * nv..(i + 1) * nv];
            if sparse {
                for &k in &nz {
                    row[k] -= f * prow[k];
                }
            } else {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &k in &nz {
                self.d[k] -= f * prow[k];
            }
        }
        self.d[j] = 0.0;

        let leaving = self.basis[r];
        if leaving != ARTIFICIAL {
            self.basic_row[leaving] = usize::MAX;
        }
        self.basis[r] = j;
        self.basic_row[j] = r;
        self.state[j] = VarState::Basic;
    }

    fn iterate(&mut self, phase_one: bool) -> LpStatus {
        let nv = self.nv;
        let cost_scale = if phase_one {
            1.0
        } else {
            self.cost.iter().fold(1.0f64, |a, c| a.max(c.abs()))
        };
        let d_tol = self.tol.opt * cost_scale;
        let piv_tol = 1e-9;
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.tol.iter_max {
                return LpStatus::IterationLimit;
            }
            // pricing
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..nv {
                let dir = match self.state[j] {
                    VarState::Basic => continue,
                    VarState::AtLower => {
                        if self.d[j] < -d_tol && self.hi[j] > self.lo[j] {
                            1.0
                        } else {
                            continue;
                        }
                    }
                    VarState::AtUpper => {
                        if self.d[j] > d_tol && self.hi[j] > self.lo[j] {
                            -1.0
                        } else {
                            continue;
                        }
                    }
                    VarState::FreeZero => {
                        if self.d[j] < -d_tol {
                            1.0
                        } else if self.d[j] > d_tol {
                            -1.0
                        } else {
                            continue;
                        }
                    }
                };
                let score = self.d[j].abs();
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if score > best {
                    best = score;
                    enter = Some((j, dir));
                }
            }
            let Some((j, dir)) = enter else {
                return LpStatus::Optimal;
            };

            // Harris ratio test
            let feas = self.tol.feas.min(1e-9);
            let mut theta_relaxed = f64::INFINITY;
            for i in 0..self.m {
                let alpha = self.t[i * nv + j];
                if alpha.abs() <= piv_tol {
                    continue;
                }
                let delta = dir * alpha;
                let (lb, ub) = self.bounds_of(self.basis[i]);
                let bound = if delta > 0.0 {
                    if !lb.is_finite() {
                        continue;
                    }
                    (self.xb[i] - lb + feas) / delta
                } else {
                    if !ub.is_finite() {
                        continue;
                    }
                    (ub - self.xb[i] + feas) / (-delta)
                };
                theta_relaxed = theta_relaxed.min(bound);
            }
            let flip = self.hi[j] - self.lo[j];
            let mut leave: Option<usize> = None;
            let mut leave_theta = f64::INFINITY;
            let mut leave_key = 0.0f64;
            for i in 0..self.m {
                let alpha = self.t[i * nv + j];
                if alpha.abs() <= piv_tol {
                    continue;
                }
                let delta = dir * alpha;
                let (lb, ub) = self.bounds_of(self.basis[i]);
                let ratio = if delta > 0.0 {
                    if !lb.is_finite() {
                        continue;
                    }
                    ((self.xb[i] - lb) / delta).max(0.0)
                } else {
                    if !ub.is_finite() {
                        continue;
                    }
                    ((ub - self.xb[i]) / (-delta)).max(0.0)
                };
                if ratio > theta_relaxed {
                    continue;
                }
                let better = if bland {
                    let var = self.basis[i];
                    match leave {
                        None => true,
                        Some(prev) => {
                            ratio < leave_theta - 1e-12
                                || (ratio <= leave_theta + 1e-12 && var < self.basis[prev])
                        }
                    }
                } else {
                    alpha.abs() > leave_key
                };
                if better {
                    leave = Some(i);
                    leave_theta = ratio;
                    leave_key = alpha.abs();
                }
            }

            if leave.is_none() && !flip.is_finite() {
                return LpStatus::Unbounded;
            }
            self.iterations += 1;
            let use_flip = flip.is_finite() && (leave.is_none() || flip <= leave_theta);
            let theta = if use_flip { flip } else { leave_theta };
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            if theta != 0.0 {
                let step = theta * dir;
                for i in 0..self.m {
                    let alpha = self.t[i * nv + j];
                    if alpha != 0.0 {
                        self.xb[i] -= step * alpha;
                    }
                }
            }
            if use_flip {
                if dir > 0.0 {
                    self.x[j] = self.hi[j];
                    self.state[j] = VarState::AtUpper;
                } else {
                    self.x[j] = self.lo[j];
                    self.state[j] = VarState::AtLower;
                }
                continue;
            }
            let r = leave.expect("leaving row");
            let entering_value = self.x[j] + theta * dir;
            let leaving = self.basis[r];
            let delta = dir * self.t[r * nv + j];
            if leaving != ARTIFICIAL {
                if delta > 0.0 {
                    self.x[leaving] = self.lo[leaving];
                    self.state[leaving] = VarState::AtLower;
                } else {
                    self.x[leaving] = self.hi[leaving];
                    self.state[leaving] = VarState::AtUpper;
                }
            }
            self.pivot(r, j);
            self.xb[r] = entering_value;
        }
    }

    fn structural_values(&self, n: usize) -> DVector<f64> {
        DVector::from_iterator(
            n,
            (0..n).map(|j| match self.state[j] {
                VarState::Basic => self.xb[self.basic_row[j]],
                _ => self.x[j],
            }),
        )
    }

    /// Recomputes the basic values from the original data with a fresh
    /// factorization of the final basis.
    fn refine(&self, p: &LpProblem) -> Option<DVector<f64>> {
        let n = p.num_vars();
        let m = self.m;
        // rebuild the scaled original rows in the same order as the tableau
        let mut a = DMatrix::zeros(m, self.nv);
        let mut rhs = DVector::zeros(m);
        let mut r = 0;
        for i in 0..p.a_ub.nrows() {
            let scale = p.a_ub.row(i).iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if scale == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(r, j)] = p.a_ub[(i, j)] / scale;
            }
            a[(r, n + r)] = 1.0;
            rhs[r] = p.b_ub[i] / scale;
            r += 1;
        }
        debug_assert_eq!(r, self.n_ub);
        for i in 0..p.a_eq.nrows() {
            let scale = p.a_eq.row(i).iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if scale == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(r, j)] = p.a_eq[(i, j)] / scale;
            }
            rhs[r] = p.b_eq[i] / scale;
            r += 1;
        }
        let mut bmat = DMatrix::zeros(m, m);
        let mut resid = rhs.clone();
        for j in 0..self.nv {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                resid.axpy(-self.x[j], &a.column(j), 1.0);
            }
        }
        for row in 0..m {
            match self.basis[row] {
                ARTIFICIAL => bmat[(row, row)] = self.art_sign[row],
                v => bmat.set_column(row, &a.column(v)),
            }
        }
        let xb = bmat.lu().solve(&resid)?;
        let mut x = self.structural_values(n);
        for row in 0..m {
            let v = self.basis[row];
            if v != ARTIFICIAL && v < n {
                x[v] = xb[row];
            }
        }
        let _ = &self.row_scale;
        Some(x)
    }
}
