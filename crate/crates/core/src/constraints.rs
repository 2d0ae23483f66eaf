//! Solver-ready membership constraints and a small `minimize` front end.
//!
//! [`ConstraintData`] describes `x ∈ X` over the variables `z = [x; aux]`
//! with linear rows, box bounds and second-order cones
//! `‖F z + g‖₂ ≤ hᵀz + k`. Cones are handled by cutting planes on top of
//! the LP/QP solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{hstack, vcat, vstack};
use crate::set::{ConvexSet, Support};
use crate::solver::{solve_lp, solve_qp, LpProblem, LpStatus, QpProblem};
use crate::tolerance::Tolerance;

/// Cutting-plane rounds allowed per cone before giving up.
const MAX_CUT_ROUNDS: usize = 400;

/// `‖F z + g‖₂ ≤ hᵀz + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocCone {
    pub f: DMatrix<f64>,
    pub g: DVector<f64>,
    pub h: DVector<f64>,
    pub k: f64,
}

impl SocCone {
    fn violation(&self, z: &DVector<f64>) -> f64 {
        (&self.f * z + &self.g).norm() - self.h.dot(z) - self.k
    }

    /// Supporting cut `(Fᵀu − h)ᵀ z ≤ k − uᵀg` for unit `u`.
    fn cut(&self, u: &DVector<f64>) -> (DVector<f64>, f64) {
        (self.f.tr_mul(u) - &self.h, self.k - u.dot(&self.g))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintData {
    /// Number of primary variables `x`.
    pub n: usize,
    /// Number of auxiliary variables appended after `x`.
    pub aux: usize,
    pub a_ub: DMatrix<f64>,
    pub b_ub: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub cones: Vec<SocCone>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `cᵀx`.
    Linear(DVector<f64>),
    /// `½ xᵀQx + qᵀx`.
    Quadratic { q_mat: DMatrix<f64>, q_vec: DVector<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub aux: DVector<f64>,
    pub objective: f64,
}

impl MinimizeResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl ConstraintData {
    /// No constraints on `n` free variables.
    pub fn free(n: usize) -> Self {
        ConstraintData {
            n,
            aux: 0,
            a_ub: DMatrix::zeros(0, n),
            b_ub: DVector::zeros(0),
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
            cones: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n + self.aux
    }

    /// Constraints expressing `x ∈ X`.
    pub fn for_set(set: &ConvexSet) -> Result<Self> {
        match set {
            ConvexSet::Polytope(p) => {
                let n = p.dim();
                if p.is_empty() {
                    let mut cd = ConstraintData::free(n);
                    cd.a_ub = DMatrix::zeros(1, n);
                    cd.b_ub = DVector::from_element(1, -1.0);
                    return Ok(cd);
                }
                if p.has_hrep() || !p.has_vrep() {
                    let h = p.hrep()?;
                    let mut cd = ConstraintData::free(n);
                    cd.a_ub = h.a.clone();
                    cd.b_ub = h.b.clone();
                    cd.a_eq = h.ae.clone();
                    cd.b_eq = h.be.clone();
                    return Ok(cd);
                }
                // x = Vᵀθ, θ ≥ 0, 1ᵀθ = 1
                let v = p.vertices()?;
                let k = v.nrows();
                let mut cd = ConstraintData::free(n);
                cd.aux = k;
                let mut a_eq = DMatrix::zeros(n + 1, n + k);
                a_eq.view_mut((0, 0), (n, n)).fill_with_identity();
                a_eq.view_mut((0, n), (n, k)).copy_from(&(-v.transpose()));
                a_eq.view_mut((n, n), (1, k)).fill(1.0);
                let mut b_eq = DVector::zeros(n + 1);
                b_eq[n] = 1.0;
                cd.a_ub = DMatrix::zeros(0, n + k);
                cd.a_eq = a_eq;
                cd.b_eq = b_eq;
                cd.lower = vcat(&cd.lower, &DVector::zeros(k));
                cd.upper = vcat(&cd.upper, &DVector::from_element(k, f64::INFINITY));
                Ok(cd)
            }
            ConvexSet::CZonotope(z) => {
                // x − Gξ = c, A_e ξ = b_e, ‖ξ‖∞ ≤ 1
                let n = z.dim();
                let k = z.latent_dim();
                let mut cd = ConstraintData::free(n);
                cd.aux = k;
                cd.a_ub = DMatrix::zeros(0, n + k);
                cd.a_eq = vstack(
                    &hstack(&DMatrix::identity(n, n), &(-z.generators())),
                    &hstack(&DMatrix::zeros(z.n_equalities(), n), z.ae()),
                );
                cd.b_eq = vcat(z.center(), z.be());
                cd.lower = vcat(&cd.lower, &DVector::from_element(k, -1.0));
                cd.upper = vcat(&cd.upper, &DVector::from_element(k, 1.0));
                Ok(cd)
            }
            ConvexSet::Ellipsoid(e) => {
                // ‖G⁻¹(x − c)‖ ≤ 1
                let n = e.dim();
                let ginv = e
                    .generator()
                    .clone()
                    .try_inverse()
                    .ok_or(Error::SingularGenerator)?;
                let mut cd = ConstraintData::free(n);
                cd.cones.push(SocCone {
                    g: -(&ginv * e.center()),
                    f: ginv,
                    h: DVector::zeros(n),
                    k: 1.0,
                });
                Ok(cd)
            }
        }
    }

    /// Constraints on `[u; aux]` expressing `M u + d ∈ X`.
    pub fn affine_preimage(&self, m: &DMatrix<f64>, d: &DVector<f64>) -> Result<Self> {
        check_dim(self.n, m.nrows())?;
        check_dim(self.n, d.len())?;
        let k = m.ncols();
        let n = self.n;
        let aux = self.aux;
        let sub = |a: &DMatrix<f64>| -> (DMatrix<f64>, DVector<f64>) {
            let ay = a.columns(0, n).into_owned();
            let aa = a.columns(n, aux).into_owned();
            (hstack(&(&ay * m), &aa), &ay * d)
        };
        let (a_ub, shift_ub) = sub(&self.a_ub);
        let (a_eq, shift_eq) = sub(&self.a_eq);
        let mut a_ub = a_ub;
        let mut b_ub = &self.b_ub - shift_ub;
        // bounds on x become rows
        for i in 0..n {
            for (bound, sign) in [(self.upper[i], 1.0), (self.lower[i], -1.0)] {
                if bound.is_finite() {
                    let mut row = DMatrix::zeros(1, k + aux);
                    for j in 0..k {
                        row[(0, j)] = sign * m[(i, j)];
                    }
                    a_ub = vstack(&a_ub, &row);
                    b_ub = vcat(&b_ub, &DVector::from_element(1, sign * (bound - d[i])));
                }
            }
        }
        let cones = self
            .cones
            .iter()
            .map(|c| {
                let fy = c.f.columns(0, n).into_owned();
                let fa = c.f.columns(n, aux).into_owned();
                let hy = c.h.rows(0, n).into_owned();
                let ha = c.h.rows(n, aux).into_owned();
                SocCone {
                    f: hstack(&(&fy * m), &fa),
                    g: &c.g + &fy * d,
                    h: vcat(&m.tr_mul(&hy), &ha),
                    k: c.k + hy.dot(d),
                }
            })
            .collect();
        Ok(ConstraintData {
            n: k,
            aux,
            a_ub,
            b_ub,
            a_eq,
            b_eq: &self.b_eq - shift_eq,
            lower: vcat(&DVector::from_element(k, f64::NEG_INFINITY), &self.lower.rows(n, aux).into_owned()),
            upper: vcat(&DVector::from_element(k, f64::INFINITY), &self.upper.rows(n, aux).into_owned()),
            cones,
        })
    }

    /// Conjunction over shared primary variables; auxiliaries stay separate.
    pub fn and(&self, other: &ConstraintData) -> Result<Self> {
        check_dim(self.n, other.n)?;
        let n = self.n;
        let (a1, a2) = (self.aux, other.aux);
        let widen_self = |m: &DMatrix<f64>| hstack(m, &DMatrix::zeros(m.nrows(), a2));
        let widen_other = |m: &DMatrix<f64>| {
            let x = m.columns(0, n).into_owned();
            let a = m.columns(n, a2).into_owned();
            hstack(&hstack(&x, &DMatrix::zeros(m.nrows(), a1)), &a)
        };
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for i in 0..n {
            lower[i] = lower[i].max(other.lower[i]);
            upper[i] = upper[i].min(other.upper[i]);
        }
        let mut cones: Vec<SocCone> = self
            .cones
            .iter()
            .map(|c| SocCone {
                f: widen_self(&c.f),
                g: c.g.clone(),
                h: vcat(&c.h, &DVector::zeros(a2)),
                k: c.k,
            })
            .collect();
        for c in &other.cones {
            let hx = c.h.rows(0, n).into_owned();
            let ha = c.h.rows(n, a2).into_owned();
            cones.push(SocCone {
                f: widen_other(&c.f),
                g: c.g.clone(),
                h: vcat(&vcat(&hx, &DVector::zeros(a1)), &ha),
                k: c.k,
            });
        }
        Ok(ConstraintData {
            n,
            aux: a1 + a2,
            a_ub: vstack(&widen_self(&self.a_ub), &widen_other(&other.a_ub)),
            b_ub: vcat(&self.b_ub, &other.b_ub),
            a_eq: vstack(&widen_self(&self.a_eq), &widen_other(&other.a_eq)),
            b_eq: vcat(&self.b_eq, &other.b_eq),
            lower: vcat(&lower, &other.lower.rows(n, a2).into_owned()),
            upper: vcat(&upper, &other.upper.rows(n, a2).into_owned()),
            cones,
        })
    }

    fn linear_part(&self, cost: DVector<f64>, cuts: &[(DVector<f64>, f64)]) -> LpProblem {
        let nv = self.num_vars();
        let mut a = self.a_ub.clone();
        let mut b = self.b_ub.clone();
        if !cuts.is_empty() {
            let mut ca = DMatrix::zeros(cuts.len(), nv);
            let mut cb = DVector::zeros(cuts.len());
            for (i, (row, rhs)) in cuts.iter().enumerate() {
                ca.set_row(i, &row.transpose());
                cb[i] = *rhs;
            }
            a = vstack(&a, &ca);
            b = vcat(&b, &cb);
        }
        LpProblem::new(cost)
            .inequalities(&a, &b)
            .equalities(&self.a_eq, &self.b_eq)
            .bounds(self.lower.clone(), self.upper.clone())
    }

    /// Minimizes over `x` (auxiliaries have zero cost).
    pub fn minimize(&self, objective: &Objective, tol: &Tolerance) -> Result<MinimizeResult> {
        let nv = self.num_vars();
        let pad = |v: &DVector<f64>| vcat(v, &DVector::zeros(self.aux));
        // initial cuts along the cone's own axes keep the relaxation bounded
        let mut cuts: Vec<(DVector<f64>, f64)> = Vec::new();
        for c in &self.cones {
            for i in 0..c.f.nrows() {
                for s in [1.0, -1.0] {
                    let mut u = DVector::zeros(c.f.nrows());
                    u[i] = s;
                    cuts.push(c.cut(&u));
                }
            }
        }
        let rounds = if self.cones.is_empty() { 1 } else { MAX_CUT_ROUNDS * self.cones.len() };
        for _ in 0..rounds {
            let (status, z, obj) = match objective {
                Objective::Linear(c) => {
                    check_dim(self.n, c.len())?;
                    let r = solve_lp(&self.linear_part(pad(c), &cuts), tol)?;
                    (r.status, r.x, r.objective)
                }
                Objective::Quadratic { q_mat, q_vec } => {
                    check_dim(self.n, q_vec.len())?;
                    check_dim(self.n, q_mat.nrows())?;
                    let mut q = DMatrix::zeros(nv, nv);
                    q.view_mut((0, 0), (self.n, self.n)).copy_from(q_mat);
                    let qp = QpProblem::new(q, pad(q_vec)).with_constraints(self.linear_part(DVector::zeros(nv), &cuts));
                    let r = solve_qp(&qp, tol)?;
                    (r.status, r.x, r.objective)
                }
            };
            if status != LpStatus::Optimal {
                return Ok(self.result(status, DVector::zeros(nv), f64::NAN));
            }
            let mut violated = false;
            for c in &self.cones {
                let viol = c.violation(&z);
                let scale = c.k.abs().max(c.g.norm()).max(1.0);
                if viol > tol.feas * scale {
                    let r = &c.f * &z + &c.g;
                    let u = &r / r.norm();
                    cuts.push(c.cut(&u));
                    violated = true;
                }
            }
            if !violated {
                return Ok(self.result(status, z, obj));
            }
        }
        Err(Error::IterationLimit)
    }

    fn result(&self, status: LpStatus, z: DVector<f64>, objective: f64) -> MinimizeResult {
        MinimizeResult {
            status,
            x: z.rows(0, self.n).into_owned(),
            aux: z.rows(self.n, self.aux).into_owned(),
            objective,
        }
    }

    /// True if some point satisfies every constraint.
    pub fn is_feasible(&self, tol: &Tolerance) -> Result<bool> {
        Ok(self.minimize(&Objective::Linear(DVector::zeros(self.n)), tol)?.is_optimal())
    }
}

/// Minimizes `objective` over `x ∈ set`.
pub fn minimize(set: &ConvexSet, objective: &Objective, tol: &Tolerance) -> Result<MinimizeResult> {
    ConstraintData::for_set(set)?.minimize(objective, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ConstrainedZonotope, Ellipsoid, Polytope};
    use nalgebra::{dmatrix, dvector};

    fn sets() -> Vec<ConvexSet> {
        vec![
            Polytope::rect(&dvector![-1.0, -1.0], &dvector![1.0, 1.0]).unwrap().into(),
            Polytope::from_vertices(dmatrix![-1.0, 0.5; -1.0, 1.0; 1.0, 1.0; 1.0, -1.0; 0.5, -1.0])
                .unwrap()
                .into(),
            ConstrainedZonotope::rect(&dvector![-1.0, 0.0], &dvector![2.0, 1.0]).unwrap().into(),
            Ellipsoid::new(dmatrix![1.0, 0.0; 0.0, 4.0], dvector![2.0, -1.0]).unwrap().into(),
        ]
    }

    #[test]
    fn linear_minimize_matches_support() {
        let tol = Tolerance::default();
        for set in sets() {
            for v in [dvector![1.0, 0.0], dvector![0.3, -0.7], dvector![-1.0, 2.0]] {
                let r = minimize(&set, &Objective::Linear(-&v), &tol).unwrap();
                assert!(r.is_optimal());
                let h = set.support_value(&v).unwrap();
                assert!((-r.objective - h).abs() < 1e-6 * h.abs().max(1.0), "{} {v}", set.class_name());
            }
        }
    }

    #[test]
    fn quadratic_projection() {
        let set: ConvexSet = Ellipsoid::ball(dvector![0.0, 0.0], 1.0).unwrap().into();
        let obj = Objective::Quadratic {
            q_mat: DMatrix::identity(2, 2) * 2.0,
            q_vec: dvector![-6.0, 0.0],
        };
        let r = minimize(&set, &obj, &Tolerance::default()).unwrap();
        assert!((r.x - dvector![1.0, 0.0]).amax() < 1e-6);
    }

    #[test]
    fn preimage_and_conjunction() {
        let tol = Tolerance::default();
        let square: ConvexSet = Polytope::rect(&dvector![-1.0, -1.0], &dvector![1.0, 1.0]).unwrap().into();
        // 2u + (1, 0) ∈ square  ⇔  u ∈ [−1, 0] × [−½, ½]
        let cd = ConstraintData::for_set(&square)
            .unwrap()
            .affine_preimage(&(DMatrix::identity(2, 2) * 2.0), &dvector![1.0, 0.0])
            .unwrap();
        let r = cd.minimize(&Objective::Linear(dvector![-1.0, -1.0]), &tol).unwrap();
        assert!((r.x - dvector![0.0, 0.5]).amax() < 1e-9);
        let z: ConvexSet = ConstrainedZonotope::rect(&dvector![-0.2, -0.2], &dvector![0.2, 0.2]).unwrap().into();
        let both = cd.and(&ConstraintData::for_set(&z).unwrap()).unwrap();
        assert_eq!(both.aux, 2);
        let r = both.minimize(&Objective::Linear(dvector![-1.0, -1.0]), &tol).unwrap();
        assert!((r.x - dvector![0.0, 0.2]).amax() < 1e-9);
        let far: ConvexSet = ConstrainedZonotope::rect(&dvector![5.0, 5.0], &dvector![6.0, 6.0]).unwrap().into();
        assert!(!cd.and(&ConstraintData::for_set(&far).unwrap()).unwrap().is_feasible(&tol).unwrap());
    }

    #[test]
    fn vertex_form_uses_auxiliaries() {
        let p = Polytope::from_vertices(dmatrix![0.0, 0.0; 1.0, 0.0; 0.0, 1.0]).unwrap();
        let cd = ConstraintData::for_set(&p.into()).unwrap();
        assert_eq!(cd.aux, 3);
        let r = cd
            .minimize(&Objective::Linear(dvector![-1.0, -1.0]), &Tolerance::default())
            .unwrap();
        assert!((r.objective + 1.0).abs() < 1e-9);
    }
}
