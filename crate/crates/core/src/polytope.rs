//! Bounded polytopes in vertex and/or halfspace representation.
//!
//! A [`Polytope`] carries at least one representation; the other is
//! enumerated on demand and cached. Halfspace to vertex enumeration runs the
//! hull engine on the polar dual around the Chebyshev center.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::ellipsoid::Ellipsoid;
use crate::error::{check_dim, Error, Result};
use crate::hull::convex_hull;
use crate::linalg::{self, block_diag, hstack, vcat, vstack};
use crate::set::{Centering, CenteringKind, Norm, Support};
use crate::solver::{self, solve_lp, solve_qp, LpProblem, LpStatus, QpProblem};
use crate::tolerance::Tolerance;

/// Volume is computed exactly up to this dimension.
pub const VOLUME_DIM_CAP: usize = 6;

/// Ambient dimension limit of [`Polytope::from_support`].
pub const SUPPORT_HULL_MAX_DIM: usize = 4;

/// Point budget of [`Polytope::from_support`].
pub const SUPPORT_HULL_MAX_POINTS: usize = 5000;

/// `{x : A x ≤ b, A_e x = b_e}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HRep {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub ae: DMatrix<f64>,
    pub be: DVector<f64>,
}

impl HRep {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        let n = a.ncols();
        HRep {
            a,
            b,
            ae: DMatrix::zeros(0, n),
            be: DVector::zeros(0),
        }
    }

    pub fn with_equalities(mut self, ae: DMatrix<f64>, be: DVector<f64>) -> Self {
        self.ae = ae;
        self.be = be;
        self
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn validate(&self) -> Result<()> {
        let n = self.a.ncols();
        check_dim(n, self.ae.ncols())?;
        check_dim(self.a.nrows(), self.b.len())?;
        check_dim(self.ae.nrows(), self.be.len())?;
        let finite = self
            .a
            .iter()
            .chain(self.b.iter())
            .chain(self.ae.iter())
            .chain(self.be.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("halfspace data must be finite".into()));
        }
        Ok(())
    }

    fn stack(&self, other: &HRep) -> HRep {
        HRep {
            a: vstack(&self.a, &other.a),
            b: vcat(&self.b, &other.b),
            ae: vstack(&self.ae, &other.ae),
            be: vcat(&self.be, &other.be),
        }
    }

    /// LP over this feasible set with the given cost.
    pub(crate) fn lp(&self, cost: DVector<f64>) -> LpProblem {
        LpProblem::new(cost)
            .inequalities(&self.a, &self.b)
            .equalities(&self.ae, &self.be)
    }

    /// Row `{x : 0ᵀx ≤ −1}` marking an empty set.
    fn infeasible(n: usize) -> HRep {
        HRep::new(DMatrix::zeros(1, n), DVector::from_element(1, -1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteriorKind {
    Chebyshev,
    Centroid,
}

#[derive(Debug, Clone)]
pub struct Polytope {
    n: usize,
    v: OnceLock<DMatrix<f64>>,
    h: OnceLock<HRep>,
    empty: bool,
    tol: Tolerance,
}

fn lp_value(r: &solver::LpResult) -> Result<f64> {
    match r.status {
        LpStatus::Optimal => Ok(r.objective),
        LpStatus::Infeasible => Err(Error::EmptySet),
        LpStatus::Unbounded => Err(Error::UnboundedPolytope),
        LpStatus::IterationLimit => Err(Error::IterationLimit),
    }
}

pub(crate) fn kept_dims(n: usize, dims: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; n];
    for &d in dims {
        if d >= n {
            return Err(Error::BadDims(format!("dimension {d} out of range for R^{n}")));
        }
        if seen[d] {
            return Err(Error::BadDims(format!("dimension {d} repeated")));
        }
        seen[d] = true;
    }
    Ok((0..n).filter(|&i| !seen[i]).collect())
}

pub(crate) fn selection_matrix(n: usize, keep: &[usize]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(keep.len(), n);
    for (r, &k) in keep.iter().enumerate() {
        m[(r, k)] = 1.0;
    }
    m
}

/// Rows `x_d = value_d`.
pub(crate) fn axis_equalities(n: usize, dims: &[usize], values: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if dims.len() != values.len() {
        return Err(Error::BadDims("dims and values differ in length".into()));
    }
    kept_dims(n, dims)?;
    let ae = selection_matrix(n, dims);
    Ok((ae, DVector::from_column_slice(values)))
}

impl Polytope {
    fn raw(n: usize, tol: Tolerance) -> Self {
        Polytope {
            n,
            v: OnceLock::new(),
            h: OnceLock::new(),
            empty: false,
            tol,
        }
    }

    /// Convex hull of the rows of `v`.
    pub fn from_vertices(v: DMatrix<f64>) -> Result<Self> {
        let n = v.ncols();
        if n == 0 {
            return Err(Error::InvalidInput("polytope dimension must be positive".into()));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("vertices must be finite".into()));
        }
        let mut p = Polytope::raw(n, Tolerance::default());
        p.empty = v.nrows() == 0;
        let _ = p.v.set(v);
        Ok(p)
    }

    /// Exact vertex description of a polytopic set known only through its
    /// support function. Support vectors are collected until every facet and
    /// every affine-hull normal of their hull is certified by a support query.
    /// Limited to [`SUPPORT_HULL_MAX_DIM`] and [`SUPPORT_HULL_MAX_POINTS`].
    pub fn from_support(set: &dyn Support) -> Result<Self> {
        let n = set.dim();
        if n > SUPPORT_HULL_MAX_DIM {
            return Err(Error::DimensionCap {
                dim: n,
                cap: SUPPORT_HULL_MAX_DIM,
            });
        }
        if set.is_empty() {
            return Ok(Polytope::empty(n));
        }
        let tol = Tolerance::default();
        let mut pts: Vec<DVector<f64>> = Vec::new();
        let push = |pts: &mut Vec<DVector<f64>>, x: DVector<f64>| -> bool {
            let scale = 1.0 + linalg::inf_norm(&x);
            if pts.iter().any(|p| (p - &x).amax() <= 1e-9 * scale) {
                false
            } else {
                pts.push(x);
                true
            }
        };
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut e = DVector::zeros(n);
                e[i] = s;
                let x = set.support(&e)?.1;
                push(&mut pts, x);
            }
        }
        let mut certified: Vec<(DVector<f64>, f64)> = Vec::new();
        loop {
            let hull = convex_hull(&linalg::matrix_from_rows(&pts, n))?;
            let mut queries: Vec<(DVector<f64>, f64)> =
                hull.facets.iter().map(|f| (f.normal.clone(), f.offset)).collect();
            for k in 0..hull.eq_a.nrows() {
                let a = hull.eq_a.row(k).transpose();
                let norm = a.norm();
                let (a, b) = (a / norm, hull.eq_b[k] / norm);
                queries.push((-&a, -b));
                queries.push((a, b));
            }
            let mut grew = false;
            for (d, offset) in queries {
                if certified
                    .iter()
                    .any(|(c, o)| (c - &d).amax() <= 1e-12 && (o - offset).abs() <= 1e-12 * (1.0 + offset.abs()))
                {
                    continue;
                }
                let (h, x) = set.support(&d)?;
                if h > offset + tol.feas * (1.0 + offset.abs()) && push(&mut pts, x) {
                    grew = true;
                } else {
                    certified.push((d, offset));
                }
            }
            if !grew {
                let verts: Vec<DVector<f64>> = hull.vertices.iter().map(|&i| pts[i].clone()).collect();
                let mut p = Polytope::from_vertices(linalg::matrix_from_rows(&verts, n))?;
                p.tol = tol;
                return Ok(p);
            }
            if pts.len() > SUPPORT_HULL_MAX_POINTS {
                return Err(Error::IterationLimit);
            }
        }
    }

    /// `{x : A x ≤ b}`.
    pub fn from_hrep(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        Polytope::from_h(HRep::new(a, b))
    }

    /// `{x : A x ≤ b, A_e x = b_e}`.
    pub fn from_hrep_eq(a: DMatrix<f64>, b: DVector<f64>, ae: DMatrix<f64>, be: DVector<f64>) -> Result<Self> {
        Polytope::from_h(HRep::new(a, b).with_equalities(ae, be))
    }

    /// Validates boundedness with `2n` support LPs; empty sets are flagged.
    pub fn from_h(h: HRep) -> Result<Self> {
        Polytope::from_h_tol(h, Tolerance::default())
    }

    fn from_h_tol(h: HRep, tol: Tolerance) -> Result<Self> {
        h.validate()?;
        let n = h.dim();
        if n == 0 {
            return Err(Error::InvalidInput("polytope dimension must be positive".into()));
        }
        let mut p = Polytope::raw(n, tol);
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut c = DVector::zeros(n);
                c[i] = -s;
                let r = solve_lp(&h.lp(c), &tol)?;
                match r.status {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => {
                        p.empty = true;
                        let _ = p.h.set(h);
                        return Ok(p);
                    }
                    LpStatus::Unbounded => return Err(Error::UnboundedPolytope),
                    LpStatus::IterationLimit => return Err(Error::IterationLimit),
                }
            }
        }
        let _ = p.h.set(h);
        Ok(p)
    }

    /// Halfspace polytope known to be bounded; only emptiness is checked.
    pub(crate) fn from_h_bounded(h: HRep, tol: Tolerance) -> Result<Self> {
        let n = h.dim();
        let mut p = Polytope::raw(n, tol);
        let r = solve_lp(&h.lp(DVector::zeros(n)), &tol)?;
        p.empty = match r.status {
            LpStatus::Optimal => false,
            LpStatus::Infeasible => true,
            LpStatus::Unbounded => false,
            LpStatus::IterationLimit => return Err(Error::IterationLimit),
        };
        let _ = p.h.set(h);
        Ok(p)
    }

    /// Axis-aligned box `l ≤ x ≤ u`.
    pub fn rect(l: &DVector<f64>, u: &DVector<f64>) -> Result<Self> {
        check_dim(l.len(), u.len())?;
        let n = l.len();
        if n == 0 || l.iter().zip(u.iter()).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidInput("rect requires finite l ≤ u".into()));
        }
        let id = DMatrix::<f64>::identity(n, n);
        let a = vstack(&id, &(-&id));
        let b = vcat(u, &(-l));
        let mut p = Polytope::raw(n, Tolerance::default());
        let _ = p.h.set(HRep::new(a, b));
        p.empty = false;
        Ok(p)
    }

    /// Box with center `c` and half-widths `h ≥ 0`.
    pub fn rect_center(c: &DVector<f64>, h: &DVector<f64>) -> Result<Self> {
        check_dim(c.len(), h.len())?;
        if h.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidInput("half-widths must be nonnegative".into()));
        }
        Polytope::rect(&(c - h), &(c + h))
    }

    pub fn empty(n: usize) -> Self {
        let mut p = Polytope::raw(n, Tolerance::default());
        p.empty = true;
        let _ = p.v.set(DMatrix::zeros(0, n));
        let _ = p.h.set(HRep::infeasible(n));
        p
    }

    pub fn singleton(x: &DVector<f64>) -> Result<Self> {
        Polytope::from_vertices(DMatrix::from_row_slice(1, x.len(), x.as_slice()))
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }

    fn derived(&self, mut p: Polytope) -> Polytope {
        p.tol = self.tol;
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn has_vrep(&self) -> bool {
        self.v.get().is_some()
    }

    pub fn has_hrep(&self) -> bool {
        self.h.get().is_some()
    }

    /// Vertices as rows, enumerated on first use.
    pub fn vertices(&self) -> Result<&DMatrix<f64>> {
        if let Some(v) = self.v.get() {
            return Ok(v);
        }
        let h = self.h.get().expect("one representation is always present");
        let v = if self.empty {
            DMatrix::zeros(0, self.n)
        } else {
            enumerate_vertices(h, &self.tol, 0)?.unwrap_or_else(|| DMatrix::zeros(0, self.n))
        };
        let _ = self.v.set(v);
        Ok(self.v.get().expect("just set"))
    }

    /// Halfspace representation, enumerated on first use.
    pub fn hrep(&self) -> Result<&HRep> {
        if let Some(h) = self.h.get() {
            return Ok(h);
        }
        let v = self.v.get().expect("one representation is always present");
        let h = if self.empty {
            HRep::infeasible(self.n)
        } else {
            hrep_from_points(v)?
        };
        let _ = self.h.set(h);
        Ok(self.h.get().expect("just set"))
    }

    pub fn n_vertices(&self) -> Result<usize> {
        Ok(self.vertices()?.nrows())
    }

    /// Copy with the vertex representation filled in.
    pub fn to_vrep(&self) -> Result<Polytope> {
        self.vertices()?;
        Ok(self.clone())
    }

    /// Copy with the halfspace representation filled in.
    pub fn to_hrep(&self) -> Result<Polytope> {
        self.hrep()?;
        Ok(self.clone())
    }

    /// Copy holding only the vertex representation.
    pub fn only_vrep(&self) -> Result<Polytope> {
        let mut p = Polytope::from_vertices(self.vertices()?.clone())?;
        p.tol = self.tol;
        Ok(p)
    }

    /// Copy holding only the halfspace representation.
    pub fn only_hrep(&self) -> Result<Polytope> {
        let mut p = Polytope::raw(self.n, self.tol);
        p.empty = self.empty;
        let _ = p.h.set(self.hrep()?.clone());
        Ok(p)
    }

    /// Removes redundant vertices and redundant inequality rows.
    pub fn reduce(&self) -> Result<Polytope> {
        if self.empty {
            return Ok(self.derived(Polytope::empty(self.n)));
        }
        let p = Polytope::raw(self.n, self.tol);
        if let Some(v) = self.v.get() {
            let hull = convex_hull(v)?;
            let _ = p.v.set(v.select_rows(&hull.vertices));
        }
        if let Some(h) = self.h.get() {
            let _ = p.h.set(remove_redundant_rows(h, &self.tol)?);
        }
        Ok(p)
    }

    /// True when the affine hull is the whole space.
    pub fn is_full_dimensional(&self) -> Result<bool> {
        if self.empty {
            return Ok(false);
        }
        Ok(convex_hull(self.vertices()?)?.dim == self.n)
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool> {
        check_dim(self.n, x.len())?;
        if self.empty {
            return Ok(false);
        }
        if let Some(h) = self.h.get() {
            let feas = self.tol.feas;
            for i in 0..h.a.nrows() {
                let row = h.a.row(i);
                if row.dot(&x.transpose()) - h.b[i] > feas * row.norm().max(1.0) {
                    return Ok(false);
                }
            }
            for i in 0..h.ae.nrows() {
                let row = h.ae.row(i);
                if (row.dot(&x.transpose()) - h.be[i]).abs() > feas * row.norm().max(1.0) {
                    return Ok(false);
                }
            }
            return Ok(true);
        }
        let v = self.vertices()?;
        let k = v.nrows();
        let mut aeq = DMatrix::zeros(self.n + 1, k);
        aeq.view_mut((0, 0), (self.n, k)).copy_from(&v.transpose());
        aeq.row_mut(self.n).fill(1.0);
        let mut beq = DVector::zeros(self.n + 1);
        beq.rows_mut(0, self.n).copy_from(x);
        beq[self.n] = 1.0;
        let lp = LpProblem::new(DVector::zeros(k)).equalities(&aeq, &beq).nonnegative();
        Ok(solve_lp(&lp, &self.tol)?.status == LpStatus::Optimal)
    }

    /// Closest point of the polytope to `v` in the given norm.
    pub fn project_point(&self, v: &DVector<f64>, norm: Norm) -> Result<(DVector<f64>, f64)> {
        check_dim(self.n, v.len())?;
        if self.empty {
            return Err(Error::EmptySet);
        }
        if self.contains_point(v)? {
            return Ok((v.clone(), 0.0));
        }
        let h = self.hrep()?;
        let n = self.n;
        let x = match norm {
            Norm::Two => {
                let qp = QpProblem::projection(v).with_constraints(h.lp(DVector::zeros(n)));
                let r = solve_qp(&qp, &self.tol)?;
                match r.status {
                    LpStatus::Optimal => r.x,
                    LpStatus::Infeasible => return Err(Error::EmptySet),
                    _ => return Err(Error::IterationLimit),
                }
            }
            Norm::One | Norm::Inf => {
                let r = solve_lp(&norm_epigraph_lp(h, v, norm), &self.tol)?;
                lp_value(&r)?;
                r.x.rows(0, n).into_owned()
            }
        };
        let d = norm.of(&(&x - v));
        Ok((x, d))
    }

    /// `{M x + v : x ∈ P}`.
    pub fn affine_map(&self, m: &DMatrix<f64>, v: Option<&DVector<f64>>) -> Result<Polytope> {
        check_dim(self.n, m.ncols())?;
        let rows = m.nrows();
        if let Some(v) = v {
            check_dim(rows, v.len())?;
        }
        if rows == 0 {
            return Err(Error::InvalidInput("map must have at least one row".into()));
        }
        if self.empty {
            return Ok(self.derived(Polytope::empty(rows)));
        }
        let mut img = self.vertices()? * m.transpose();
        if let Some(v) = v {
            for mut row in img.row_iter_mut() {
                row += v.transpose();
            }
        }
        let hull = convex_hull(&img)?;
        let mut p = Polytope::from_vertices(img.select_rows(&hull.vertices))?;
        p.tol = self.tol;
        Ok(p)
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Polytope> {
        check_dim(self.n, v.len())?;
        if self.empty {
            return Ok(self.clone());
        }
        let p = Polytope::raw(self.n, self.tol);
        if let Some(verts) = self.v.get() {
            let mut w = verts.clone();
            for mut row in w.row_iter_mut() {
                row += v.transpose();
            }
            let _ = p.v.set(w);
        }
        if let Some(h) = self.h.get() {
            let _ = p.h.set(HRep {
                a: h.a.clone(),
                b: &h.b + &h.a * v,
                ae: h.ae.clone(),
                be: &h.be + &h.ae * v,
            });
        }
        Ok(p)
    }

    pub fn negate(&self) -> Result<Polytope> {
        self.affine_map(&(-DMatrix::<f64>::identity(self.n, self.n)), None)
    }

    /// `{x : M x ∈ P}` for invertible square `M`.
    pub fn inverse_affine_map(&self, m: &DMatrix<f64>) -> Result<Polytope> {
        check_dim(self.n, m.nrows())?;
        check_dim(self.n, m.ncols())?;
        if linalg::rank(m, self.tol.rank) < self.n {
            return Err(Error::SingularMatrix);
        }
        if self.empty {
            return Ok(self.derived(Polytope::empty(self.n)));
        }
        let h = self.hrep()?;
        let p = Polytope::raw(self.n, self.tol);
        let _ = p.h.set(HRep {
            a: &h.a * m,
            b: h.b.clone(),
            ae: &h.ae * m,
            be: h.be.clone(),
        });
        Ok(p)
    }

    fn intersect_h(&self, extra: &HRep) -> Result<Polytope> {
        extra.validate()?;
        check_dim(self.n, extra.dim())?;
        if self.empty {
            return Ok(self.derived(Polytope::empty(self.n)));
        }
        let joined = self.hrep()?.stack(extra);
        let p = Polytope::from_h_bounded(joined, self.tol)?;
        if p.empty {
            return Ok(p);
        }
        p.reduce()
    }

    pub fn intersect(&self, other: &Polytope) -> Result<Polytope> {
        check_dim(self.n, other.n)?;
        if other.empty {
            return Ok(self.derived(Polytope::empty(self.n)));
        }
        self.intersect_h(other.hrep()?)
    }

    pub fn intersect_halfspaces(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Polytope> {
        self.intersect_h(&HRep::new(a.clone(), b.clone()))
    }

    pub fn intersect_affine(&self, ae: &DMatrix<f64>, be: &DVector<f64>) -> Result<Polytope> {
        let n = ae.ncols();
        self.intersect_h(&HRep::new(DMatrix::zeros(0, n), DVector::zeros(0)).with_equalities(ae.clone(), be.clone()))
    }

    /// Intersection with a possibly unbounded polyhedron.
    pub fn intersect_polyhedron(&self, h: &HRep) -> Result<Polytope> {
        self.intersect_h(h)
    }

    /// `{x ∈ P : R x ∈ W}`.
    pub fn intersect_inverse_affine(&self, r: &DMatrix<f64>, w: &Polytope) -> Result<Polytope> {
        check_dim(self.n, r.ncols())?;
        check_dim(w.n, r.nrows())?;
        if w.empty {
            return Ok(self.derived(Polytope::empty(self.n)));
        }
        let hw = w.hrep()?;
        self.intersect_h(&HRep {
            a: &hw.a * r,
            b: hw.b.clone(),
            ae: &hw.ae * r,
            be: hw.be.clone(),
        })
    }

    pub fn minkowski_sum(&self, other: &Polytope) -> Result<Polytope> {
        check_dim(self.n, other.n)?;
        if self.empty || other.empty {
            return Ok(self.derived(Polytope::empty(self.n)));
        }
        let va = self.vertices()?;
        let vb = other.vertices()?;
        let mut sums = DMatrix::zeros(va.nrows() * vb.nrows(), self.n);
        for i in 0..va.nrows() {
            for j in 0..vb.nrows() {
                sums.set_row(i * vb.nrows() + j, &(va.row(i) + vb.row(j)));
            }
        }
        let hull = convex_hull(&sums)?;
        let mut p = Polytope::from_vertices(sums.select_rows(&hull.vertices))?;
        p.tol = self.tol;
        Ok(p)
    }

    /// `{x : x + s ∈ P for all s ∈ S}` by support-function tightening.
    pub fn pontryagin_difference(&self, s: &dyn Support) -> Result<Polytope> {
        check_dim(self.n, s.dim())?;
        if s.is_empty() {
            return Err(Error::EmptySet);
        }
        if self.empty {
            return Ok(self.derived(Polytope::empty(self.n)));
        }
        let h = self.hrep()?;
        let mut b = h.b.clone();
        for i in 0..h.a.nrows() {
            b[i] -= s.support_value(&h.a.row(i).transpose())?;
        }
        let mut be = h.be.clone();
        let mut flat_ok = true;
        for i in 0..h.ae.nrows() {
            let row = h.ae.row(i).transpose();
            let hi = s.support_value(&row)?;
            let lo = -s.support_value(&(-&row))?;
            if hi - lo > self.tol.feas * row.norm().max(1.0) {
                flat_ok = false;
            }
            be[i] -= hi;
        }
        if !flat_ok {
            return Ok(self.derived(Polytope::empty(self.n)));
        }
        let p = Polytope::from_h_bounded(
            HRep {
                a: h.a.clone(),
                b,
                ae: h.ae.clone(),
                be,
            },
            self.tol,
        )?;
        Ok(p)
    }

    /// `other ⊆ self`, decided by support values on every row.
    pub fn contains_set(&self, other: &dyn Support) -> Result<bool> {
        check_dim(self.n, other.dim())?;
        if other.is_empty() {
            return Ok(true);
        }
        if self.empty {
            return Ok(false);
        }
        let h = self.hrep()?;
        let feas = self.tol.feas;
        for i in 0..h.a.nrows() {
            let row = h.a.row(i).transpose();
            if other.support_value(&row)? > h.b[i] + feas * row.norm().max(1.0) {
                return Ok(false);
            }
        }
        for i in 0..h.ae.nrows() {
            let row = h.ae.row(i).transpose();
            let slack = feas * row.norm().max(1.0);
            if other.support_value(&row)? > h.be[i] + slack || other.support_value(&(-&row))? > -h.be[i] + slack {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Mutual containment.
    pub fn set_eq(&self, other: &Polytope) -> Result<bool> {
        Ok(self.contains_set(other)? && other.contains_set(self)?)
    }

    pub fn centering(&self, kind: CenteringKind) -> Result<Centering> {
        if self.empty {
            return Err(Error::EmptySet);
        }
        match kind {
            CenteringKind::Chebyshev => {
                let h = self.hrep()?;
                if h.ae.nrows() > 0 {
                    return Err(Error::EmptyInterior);
                }
                let (center, radius) = solver::chebyshev_ball(&h.a, &h.b, &self.tol)?;
                if radius <= self.tol.feas {
                    return Err(Error::EmptyInterior);
                }
                Ok(Centering::Chebyshev { center, radius })
            }
            CenteringKind::InscribedEllipsoid => {
                let h = self.hrep()?;
                if h.ae.nrows() > 0 {
                    return Err(Error::EmptyInterior);
                }
                let (bm, d) = solver::mvie_of_halfspaces(&h.a, &h.b, &self.tol)?;
                let e = Ellipsoid::from_generator(bm, d).map_err(|_| Error::EmptyInterior)?;
                Ok(Centering::InscribedEllipsoid(e.with_tolerance(self.tol)))
            }
            CenteringKind::CircumscribedEllipsoid => {
                let (q, c) = solver::mvee_of_points(self.vertices()?, 1e-9)?;
                Ok(Centering::CircumscribedEllipsoid(Ellipsoid::new(q, c)?.with_tolerance(self.tol)))
            }
            CenteringKind::CircumscribedRect => {
                let (lower, upper) = self.interval_hull()?;
                Ok(Centering::CircumscribedRect { lower, upper })
            }
        }
    }

    /// Smallest axis-aligned box containing the polytope.
    pub fn interval_hull(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        interval_hull_of(self)
    }

    pub fn interior_point(&self, kind: InteriorKind) -> Result<DVector<f64>> {
        if self.empty {
            return Err(Error::EmptySet);
        }
        match kind {
            InteriorKind::Centroid => {
                let v = self.vertices()?;
                Ok(v.row_mean().transpose())
            }
            InteriorKind::Chebyshev => relative_chebyshev(self.hrep()?, &self.tol)?
                .map(|(x, _)| x)
                .ok_or(Error::EmptySet),
        }
    }

    /// Exact volume by recursive facet fans.
    pub fn volume(&self) -> Result<f64> {
        if self.empty {
            return Ok(0.0);
        }
        if self.n > VOLUME_DIM_CAP {
            return Err(Error::DimensionCap {
                dim: self.n,
                cap: VOLUME_DIM_CAP,
            });
        }
        let v = self.vertices()?;
        if convex_hull(v)?.dim < self.n {
            return Err(Error::EmptyInterior);
        }
        fan_volume(v)
    }

    /// Orthogonal projection removing the coordinates in `dims`.
    pub fn project_away(&self, dims: &[usize]) -> Result<Polytope> {
        let keep = kept_dims(self.n, dims)?;
        if keep.is_empty() {
            return Err(Error::BadDims("cannot remove every dimension".into()));
        }
        if dims.is_empty() {
            return Ok(self.clone());
        }
        self.affine_map(&selection_matrix(self.n, &keep), None)
    }

    /// `{x ∈ P : x_d = value_d}` in the original ambient space.
    pub fn slice_at(&self, dims: &[usize], values: &[f64]) -> Result<Polytope> {
        let (ae, be) = axis_equalities(self.n, dims, values)?;
        self.intersect_affine(&ae, &be)
    }

    /// `P × … × P` (`m` factors).
    pub fn cartesian_power(&self, m: usize) -> Result<Polytope> {
        if m == 0 {
            return Err(Error::InvalidInput("power must be at least 1".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        if self.empty {
            return Ok(self.derived(Polytope::empty(self.n * m)));
        }
        let h = self.hrep()?;
        let mut out = h.clone();
        for _ in 1..m {
            out = HRep {
                a: block_diag(&out.a, &h.a),
                b: vcat(&out.b, &h.b),
                ae: block_diag(&out.ae, &h.ae),
                be: vcat(&out.be, &h.be),
            };
        }
        let p = Polytope::raw(self.n * m, self.tol);
        let _ = p.h.set(out);
        Ok(p)
    }
}

impl Support for Polytope {
    fn dim(&self) -> usize {
        self.n
    }

    fn is_empty(&self) -> bool {
        self.empty
    }

    fn support(&self, v: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        check_dim(self.n, v.len())?;
        if self.empty {
            return Err(Error::EmptySet);
        }
        if let Some(verts) = self.v.get() {
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for i in 0..verts.nrows() {
                let val = verts.row(i).dot(&v.transpose());
                if val > best_val {
                    best_val = val;
                    best = i;
                }
            }
            return Ok((best_val, verts.row(best).transpose()));
        }
        let h = self.h.get().expect("one representation is always present");
        let r = solve_lp(&h.lp(-v), &self.tol)?;
        let value = -lp_value(&r)?;
        Ok((value, r.x))
    }
}

pub(crate) fn interval_hull_of(s: &dyn Support) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = s.dim();
    let mut lo = DVector::zeros(n);
    let mut hi = DVector::zeros(n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        hi[i] = s.support_value(&e)?;
        lo[i] = -s.support_value(&(-e))?;
    }
    Ok((lo, hi))
}

/// LP over `(x, t)` minimizing the 1- or ∞-norm of `x − v`.
fn norm_epigraph_lp(h: &HRep, v: &DVector<f64>, norm: Norm) -> LpProblem {
    let n = v.len();
    let k = if norm == Norm::One { n } else { 1 };
    let mut cost = DVector::zeros(n + k);
    for j in 0..k {
        cost[n + j] = 1.0;
    }
    // x − v ≤ t and v − x ≤ t
    let mut a = DMatrix::zeros(2 * n, n + k);
    let mut b = DVector::zeros(2 * n);
    for i in 0..n {
        let tcol = if norm == Norm::One { n + i } else { n };
        a[(i, i)] = 1.0;
        a[(i, tcol)] = -1.0;
        b[i] = v[i];
        a[(n + i, i)] = -1.0;
        a[(n + i, tcol)] = -1.0;
        b[n + i] = -v[i];
    }
    let pad = |m: &DMatrix<f64>| hstack(m, &DMatrix::zeros(m.nrows(), k));
    LpProblem::new(cost)
        .inequalities(&a, &b)
        .inequalities(&pad(&h.a), &h.b)
        .equalities(&pad(&h.ae), &h.be)
}

/// Drops redundant inequality rows (one LP per row) and dependent equality rows.
pub(crate) fn remove_redundant_rows(h: &HRep, tol: &Tolerance) -> Result<HRep> {
    let n = h.dim();
    // equalities: keep an independent subset of [A_e | b_e]
    let aug = hstack(&h.ae, &DMatrix::from_column_slice(h.be.len(), 1, h.be.as_slice()));
    let eq_keep = linalg::independent_rows(&aug, tol.rank);
    let ae = h.ae.select_rows(&eq_keep);
    let be = DVector::from_iterator(eq_keep.len(), eq_keep.iter().map(|&i| h.be[i]));

    // zero rows and exact duplicates after normalization
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..h.a.nrows() {
        let a = h.a.row(i).transpose();
        let norm = a.norm();
        if norm <= 1e-14 {
            continue;
        }
        let (a, b) = (a / norm, h.b[i] / norm);
        if let Some(existing) = rows.iter_mut().find(|(r, _)| (r - &a).amax() <= 1e-12) {
            existing.1 = existing.1.min(b);
            continue;
        }
        rows.push((a, b));
    }
    let mut keep = vec![true; rows.len()];
    for i in 0..rows.len() {
        let others: Vec<usize> = (0..rows.len()).filter(|&j| j != i && keep[j]).collect();
        let mut a = DMatrix::zeros(others.len() + 1, n);
        let mut b = DVector::zeros(others.len() + 1);
        for (r, &j) in others.iter().enumerate() {
            a.set_row(r, &rows[j].0.transpose());
            b[r] = rows[j].1;
        }
        a.set_row(others.len(), &rows[i].0.transpose());
        b[others.len()] = rows[i].1 + 1.0;
        let lp = LpProblem::new(-&rows[i].0).inequalities(&a, &b).equalities(&ae, &be);
        let r = solve_lp(&lp, tol)?;
        if r.status == LpStatus::Optimal && -r.objective <= rows[i].1 + 1e-9 * rows[i].1.abs().max(1.0) {
            keep[i] = false;
        }
    }
    let kept: Vec<usize> = (0..rows.len()).filter(|&i| keep[i]).collect();
    let mut a = DMatrix::zeros(kept.len(), n);
    let mut b = DVector::zeros(kept.len());
    for (r, &i) in kept.iter().enumerate() {
        a.set_row(r, &rows[i].0.transpose());
        b[r] = rows[i].1;
    }
    Ok(HRep { a, b, ae, be })
}

/// Irredundant halfspace description of the hull of the rows of `v`.
pub(crate) fn hrep_from_points(v: &DMatrix<f64>) -> Result<HRep> {
    let hull = convex_hull(v)?;
    let k = hull.facets.len();
    let n = v.ncols();
    let mut a = DMatrix::zeros(k, n);
    let mut b = DVector::zeros(k);
    for (i, f) in hull.facets.iter().enumerate() {
        a.set_row(i, &f.normal.transpose());
        b[i] = f.offset;
    }
    Ok(HRep {
        a,
        b,
        ae: hull.eq_a,
        be: hull.eq_b,
    })
}

/// Equality reduction `x = x_p + Z y`; `None` if the equalities are
/// inconsistent.
fn equality_reduction(h: &HRep, tol: &Tolerance) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let n = h.dim();
    if h.ae.nrows() == 0 {
        return Some((DVector::zeros(n), DMatrix::identity(n, n)));
    }
    let xp = linalg::least_squares(&h.ae, &h.be, tol.rank);
    let resid = (&h.ae * &xp - &h.be).amax();
    if resid > tol.feas * h.be.amax().max(1.0) {
        return None;
    }
    Some((xp, linalg::null_space(&h.ae, tol.rank)))
}

/// Chebyshev center relative to the affine hull given by the equalities;
/// `None` if empty.
pub(crate) fn relative_chebyshev(h: &HRep, tol: &Tolerance) -> Result<Option<(DVector<f64>, f64)>> {
    let Some((xp, z)) = equality_reduction(h, tol) else {
        return Ok(None);
    };
    let k = z.ncols();
    let br = &h.b - &h.a * &xp;
    if k == 0 {
        let ok = (0..br.len()).all(|i| br[i] >= -tol.feas * h.a.row(i).norm().max(1.0));
        return Ok(ok.then_some((xp, 0.0)));
    }
    let ar = &h.a * &z;
    match solver::chebyshev_ball(&ar, &br, tol) {
        Ok((y, r)) => Ok(Some((&xp + &z * y, r))),
        Err(Error::EmptySet) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Vertex enumeration by polar duality; `None` when the set is empty.
fn enumerate_vertices(h: &HRep, tol: &Tolerance, depth: usize) -> Result<Option<DMatrix<f64>>> {
    let n = h.dim();
    let Some((xp, z)) = equality_reduction(h, tol) else {
        return Ok(None);
    };
    let k = z.ncols();
    let br = &h.b - &h.a * &xp;
    if k == 0 {
        let ok = (0..br.len()).all(|i| br[i] >= -tol.feas * h.a.row(i).norm().max(1.0));
        return Ok(ok.then(|| DMatrix::from_row_slice(1, n, xp.as_slice())));
    }
    let ar = &h.a * &z;
    // rows vanishing on the affine hull only need consistency
    let mut rows = Vec::new();
    for i in 0..ar.nrows() {
        let norm = ar.row(i).norm();
        if norm <= 1e-12 * h.a.row(i).norm().max(1.0) {
            if br[i] < -tol.feas * h.a.row(i).norm().max(1.0) {
                return Ok(None);
            }
        } else {
            rows.push(i);
        }
    }
    if rows.is_empty() {
        return Err(Error::UnboundedPolytope);
    }
    let ar = ar.select_rows(&rows);
    let br = DVector::from_iterator(rows.len(), rows.iter().map(|&i| br[i]));
    let (y0, radius) = match solver::chebyshev_ball(&ar, &br, tol) {
        Ok(v) => v,
        Err(Error::EmptySet) => return Ok(None),
        Err(e) => return Err(e),
    };
    let scale = br.amax().max(y0.amax()).max(1.0);
    if radius <= 1e-9 * scale {
        // implicit equalities: rows that no feasible point satisfies strictly
        if depth > n {
            return Err(Error::Solver("implicit equality detection did not settle".into()));
        }
        let mut implicit = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let lp = LpProblem::new(ar.row(r).transpose())
                .inequalities(&ar, &br);
            let res = solve_lp(&lp, tol)?;
            match res.status {
                LpStatus::Optimal => {
                    let slack = br[r] - res.objective;
                    if slack <= 1e-9 * scale {
                        implicit.push(i);
                    }
                }
                LpStatus::Infeasible => return Ok(None),
                _ => {}
            }
        }
        if implicit.is_empty() {
            return Err(Error::Solver("flat polytope without implicit equalities".into()));
        }
        let ineq: Vec<usize> = (0..h.a.nrows()).filter(|i| !implicit.contains(i)).collect();
        let next = HRep {
            a: h.a.select_rows(&ineq),
            b: DVector::from_iterator(ineq.len(), ineq.iter().map(|&i| h.b[i])),
            ae: vstack(&h.ae, &h.a.select_rows(&implicit)),
            be: vcat(&h.be, &DVector::from_iterator(implicit.len(), implicit.iter().map(|&i| h.b[i]))),
        };
        return enumerate_vertices(&next, tol, depth + 1);
    }

    let m = rows.len();
    let mut polar = DMatrix::zeros(m, k);
    for r in 0..m {
        let slack = br[r] - ar.row(r).dot(&y0.transpose());
        polar.set_row(r, &(ar.row(r) / slack));
    }
    let ys: Vec<(DVector<f64>, Vec<usize>)> = if k == 1 {
        let (mut lo, mut hi) = (None::<usize>, None::<usize>);
        for r in 0..m {
            let p = polar[(r, 0)];
            if p > 0.0 && hi.is_none_or(|j| p > polar[(j, 0)]) {
                hi = Some(r);
            }
            if p < 0.0 && lo.is_none_or(|j| p < polar[(j, 0)]) {
                lo = Some(r);
            }
        }
        let (Some(lo), Some(hi)) = (lo, hi) else {
            return Err(Error::UnboundedPolytope);
        };
        let tight = |target: f64| -> Vec<usize> {
            (0..m)
                .filter(|&r| (polar[(r, 0)] - target).abs() <= 1e-12 * target.abs().max(1.0))
                .collect()
        };
        vec![
            (DVector::from_element(1, 1.0 / polar[(hi, 0)] + y0[0]), tight(polar[(hi, 0)])),
            (DVector::from_element(1, 1.0 / polar[(lo, 0)] + y0[0]), tight(polar[(lo, 0)])),
        ]
    } else {
        let hull = convex_hull(&polar)?;
        if hull.dim < k {
            return Err(Error::UnboundedPolytope);
        }
        let pscale = polar.amax().max(1.0);
        let mut out = Vec::with_capacity(hull.facets.len());
        for f in &hull.facets {
            if f.offset <= 1e-12 * pscale {
                return Err(Error::UnboundedPolytope);
            }
            out.push((&f.normal / f.offset + &y0, f.points.clone()));
        }
        out
    };
    let mut verts: Vec<DVector<f64>> = Vec::with_capacity(ys.len());
    for (y, active) in ys {
        let mut x = &xp + &z * y;
        // polish on the active rows
        let act: Vec<usize> = active.iter().map(|&r| rows[r]).collect();
        let aa = vstack(&h.a.select_rows(&act), &h.ae);
        let bb = vcat(&DVector::from_iterator(act.len(), act.iter().map(|&i| h.b[i])), &h.be);
        if linalg::rank(&aa, 1e-10) == n {
            let polished = linalg::least_squares(&aa, &bb, 1e-13);
            let err = |p: &DVector<f64>| (&aa * p - &bb).amax();
            if err(&polished) <= err(&x) && (&polished - &x).amax() <= 1e-6 * scale {
                x = polished;
            }
        }
        let dup = verts.iter().any(|w| (w - &x).amax() <= 1e-10 * scale);
        if !dup {
            verts.push(x);
        }
    }
    Ok(Some(linalg::matrix_from_rows(&verts, n)))
}

/// Volume of the hull of the rows of `v`, assumed full-dimensional.
fn fan_volume(v: &DMatrix<f64>) -> Result<f64> {
    let d = v.ncols();
    if d == 1 {
        let lo = v.column(0).min();
        let hi = v.column(0).max();
        return Ok(hi - lo);
    }
    let hull = convex_hull(v)?;
    if hull.dim < d {
        return Ok(0.0);
    }
    let verts = v.select_rows(&hull.vertices);
    let center = verts.row_mean().transpose();
    let mut total = 0.0;
    for f in &hull.facets {
        let height = f.offset - f.normal.dot(&center);
        let pts = v.select_rows(&f.points);
        let aff = linalg::affine_hull(&pts, 1e-10);
        if aff.dim() + 1 < d {
            continue;
        }
        // facet coordinates in a (d−1)-dimensional orthonormal frame
        let basis = if aff.dim() == d - 1 {
            aff.basis.clone()
        } else {
            linalg::null_space(&DMatrix::from_row_slice(1, d, f.normal.as_slice()), 1e-12)
        };
        let mut local = DMatrix::zeros(pts.nrows(), d - 1);
        for i in 0..pts.nrows() {
            let y = basis.tr_mul(&(pts.row(i).transpose() - &aff.origin));
            local.set_row(i, &y.transpose());
        }
        total += height * fan_volume(&local)? / d as f64;
    }
    Ok(total)
}
