//! Constrained zonotopes `{Gξ + c : ‖ξ‖∞ ≤ 1, A_e ξ = b_e}`.
//!
//! Equality constraints act on the latent variable ξ. Most operations are
//! closed form; support, containment and projection solve small programs
//! over the latent box.
//!
//! Set containment `Y ⊆ Z` for two constrained zonotopes is a bilinear
//! program in general (a scaled copy of the latent slice of `Y` must map
//! into that of `Z`). It is decided here by converting `Y` to a polytope
//! and checking its vertices, which is exact for the latent sizes allowed
//! by [`LATENT_CAP`].

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::approx::{inner_polytope, outer_polytope, DirectionSet, DEFAULT_D};
use crate::ellipsoid::Ellipsoid;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, block_diag, hstack, vcat, vstack};
use crate::polytope::{axis_equalities, interval_hull_of, kept_dims, selection_matrix, HRep, Polytope};
use crate::set::{Centering, CenteringKind, ConvexSet, Norm, Support};
use crate::solver::{solve_lp, solve_qp, LpProblem, LpStatus, QpProblem};
use crate::tolerance::Tolerance;

/// Largest latent dimension accepted by [`ConstrainedZonotope::to_polytope`].
pub const LATENT_CAP: usize = 12;

/// Exact subtraction is used when the subtrahend has at most this many
/// generators...
pub const EXACT_MAX_GENERATORS: usize = 4;
/// ...and the resulting latent dimension stays within this budget.
pub const EXACT_MAX_LATENT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffStrategy {
    ExactRecursive,
    ScaledInner,
}

impl DiffStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiffStrategy::ExactRecursive => "exact_recursive",
            DiffStrategy::ScaledInner => "scaled_inner",
        }
    }
}

impl fmt::Display for DiffStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedZonotope {
    g: DMatrix<f64>,
    c: DVector<f64>,
    ae: DMatrix<f64>,
    be: DVector<f64>,
    empty: OnceLock<bool>,
    tol: Tolerance,
}

fn box_bounds(n: usize) -> (DVector<f64>, DVector<f64>) {
    (DVector::from_element(n, -1.0), DVector::from_element(n, 1.0))
}

impl ConstrainedZonotope {
    pub fn new(g: DMatrix<f64>, c: DVector<f64>, ae: DMatrix<f64>, be: DVector<f64>) -> Result<Self> {
        check_dim(g.nrows(), c.len())?;
        check_dim(g.ncols(), ae.ncols())?;
        check_dim(ae.nrows(), be.len())?;
        if g.nrows() == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let finite = g.iter().chain(c.iter()).chain(ae.iter()).chain(be.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("constrained zonotope data must be finite".into()));
        }
        Ok(ConstrainedZonotope {
            g,
            c,
            ae,
            be,
            empty: OnceLock::new(),
            tol: Tolerance::default(),
        })
    }

    /// Zonotope `{Gξ + c : ‖ξ‖∞ ≤ 1}`.
    pub fn zonotope(g: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let nl = g.ncols();
        ConstrainedZonotope::new(g, c, DMatrix::zeros(0, nl), DVector::zeros(0))
    }

    pub fn rect(l: &DVector<f64>, u: &DVector<f64>) -> Result<Self> {
        check_dim(l.len(), u.len())?;
        if l.iter().zip(u.iter()).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidInput("rect requires l ≤ u".into()));
        }
        ConstrainedZonotope::zonotope(DMatrix::from_diagonal(&((u - l) * 0.5)), (u + l) * 0.5)
    }

    pub fn rect_center(c: &DVector<f64>, h: &DVector<f64>) -> Result<Self> {
        check_dim(c.len(), h.len())?;
        ConstrainedZonotope::rect(&(c - h), &(c + h))
    }

    pub fn singleton(x: &DVector<f64>) -> Result<Self> {
        ConstrainedZonotope::zonotope(DMatrix::zeros(x.len(), 0), x.clone())
    }

    pub fn empty(n: usize) -> Self {
        let z = ConstrainedZonotope {
            g: DMatrix::zeros(n, 0),
            c: DVector::zeros(n),
            ae: DMatrix::zeros(1, 0),
            be: DVector::from_element(1, 1.0),
            empty: OnceLock::new(),
            tol: Tolerance::default(),
        };
        let _ = z.empty.set(true);
        z
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }

    fn same_tol(&self, mut z: ConstrainedZonotope) -> ConstrainedZonotope {
        z.tol = self.tol;
        z
    }

    fn build(&self, g: DMatrix<f64>, c: DVector<f64>, ae: DMatrix<f64>, be: DVector<f64>) -> ConstrainedZonotope {
        ConstrainedZonotope {
            g,
            c,
            ae,
            be,
            empty: OnceLock::new(),
            tol: self.tol,
        }
    }

    fn empty_like(&self, n: usize) -> ConstrainedZonotope {
        self.same_tol(ConstrainedZonotope::empty(n))
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn n_equalities(&self) -> usize {
        self.ae.nrows()
    }

    pub fn is_zonotope(&self) -> bool {
        self.ae.nrows() == 0
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn ae(&self) -> &DMatrix<f64> {
        &self.ae
    }

    pub fn be(&self) -> &DVector<f64> {
        &self.be
    }

    /// True when the latent slice is empty.
    pub fn is_empty(&self) -> bool {
        *self.empty.get_or_init(|| self.compute_empty())
    }

    fn compute_empty(&self) -> bool {
        let nl = self.latent_dim();
        if self.ae.nrows() == 0 {
            return false;
        }
        if nl == 0 {
            return self.be.amax() > self.tol.feas;
        }
        match solve_lp(&self.latent_lp(DVector::zeros(nl)), &self.tol) {
            Ok(r) => r.status == LpStatus::Infeasible,
            Err(_) => false,
        }
    }

    fn latent_lp(&self, cost: DVector<f64>) -> LpProblem {
        let (lo, hi) = box_bounds(self.latent_dim());
        LpProblem::new(cost).equalities(&self.ae, &self.be).bounds(lo, hi)
    }

    /// Drops latent columns that touch nothing and dependent equality rows.
    fn tidy(mut self) -> ConstrainedZonotope {
        let nl = self.latent_dim();
        let scale = self.g.amax().max(self.ae.amax()).max(1.0);
        let keep: Vec<usize> = (0..nl)
            .filter(|&j| self.g.column(j).amax() > 1e-14 * scale || self.ae.column(j).amax() > 1e-14 * scale)
            .collect();
        if keep.len() < nl {
            self.g = self.g.select_columns(&keep);
            self.ae = self.ae.select_columns(&keep);
        }
        if self.ae.nrows() > 0 {
            let aug = hstack(&self.ae, &DMatrix::from_column_slice(self.be.len(), 1, self.be.as_slice()));
            let rows = linalg::independent_rows(&aug, self.tol.rank);
            if rows.len() < self.ae.nrows() {
                self.ae = self.ae.select_rows(&rows);
                self.be = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.be[i]));
            }
        }
        self.empty = OnceLock::new();
        self
    }

    /// Lifted construction: interval-hull box plus one bounded slack per
    /// inequality row.
    pub fn from_polytope(p: &Polytope) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptySet);
        }
        let n = p.dim();
        let h = p.hrep()?;
        let (lo, hi) = p.interval_hull()?;
        let half = (&hi - &lo) * 0.5;
        let mid = (&hi + &lo) * 0.5;
        let m = h.a.nrows();
        let me = h.ae.nrows();
        let nl = n + m;
        let mut g = DMatrix::zeros(n, nl);
        for i in 0..n {
            g[(i, i)] = half[i];
        }
        let mut ae = DMatrix::zeros(m + me, nl);
        let mut be = DVector::zeros(m + me);
        // A(mid + diag(half) ξ_x) + s/2 (1 + ξ_σ) = b
        for i in 0..m {
            let row = h.a.row(i);
            let s_max = (h.b[i] + p.support_value(&(-row.transpose()))?).max(0.0);
            for j in 0..n {
                ae[(i, j)] = row[j] * half[j];
            }
            ae[(i, n + i)] = 0.5 * s_max;
            be[i] = h.b[i] - row.dot(&mid.transpose()) - 0.5 * s_max;
        }
        for i in 0..me {
            let row = h.ae.row(i);
            for j in 0..n {
                ae[(m + i, j)] = row[j] * half[j];
            }
            be[m + i] = h.be[i] - row.dot(&mid.transpose());
        }
        let mut z = ConstrainedZonotope::new(g, mid, ae, be)?;
        z.tol = *p.tolerance();
        let _ = z.empty.set(false);
        Ok(z)
    }

    /// Exact conversion by enumerating the latent polytope.
    pub fn to_polytope(&self) -> Result<Polytope> {
        let nl = self.latent_dim();
        if nl > LATENT_CAP {
            return Err(Error::LatentDimCap {
                latent: nl,
                cap: LATENT_CAP,
            });
        }
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        let n = self.dim();
        let latent_pts = if nl == 0 {
            DMatrix::zeros(1, 0)
        } else if self.ae.nrows() == 0 {
            let mut pts = DMatrix::zeros(1 << nl, nl);
            for k in 0..(1usize << nl) {
                for j in 0..nl {
                    pts[(k, j)] = if k >> j & 1 == 1 { 1.0 } else { -1.0 };
                }
            }
            pts
        } else {
            let id = DMatrix::<f64>::identity(nl, nl);
            let h = HRep::new(vstack(&id, &(-&id)), DVector::from_element(2 * nl, 1.0))
                .with_equalities(self.ae.clone(), self.be.clone());
            let latent = Polytope::from_h_bounded(h, self.tol)?;
            if latent.is_empty() {
                return Err(Error::EmptySet);
            }
            latent.vertices()?.clone()
        };
        let mut pts = DMatrix::zeros(latent_pts.nrows(), n);
        for k in 0..latent_pts.nrows() {
            let x = &self.g * latent_pts.row(k).transpose() + &self.c;
            pts.set_row(k, &x.transpose());
        }
        Ok(Polytope::from_vertices(pts)?.reduce()?.with_tolerance(self.tol))
    }

    /// [`Self::to_polytope`] within the latent cap, otherwise
    /// [`Polytope::from_support`] in low ambient dimension.
    pub fn vertex_polytope(&self) -> Result<Polytope> {
        match self.to_polytope() {
            Err(Error::LatentDimCap { latent, cap }) => {
                if self.dim() > crate::polytope::SUPPORT_HULL_MAX_DIM {
                    return Err(Error::LatentDimCap { latent, cap });
                }
                Ok(Polytope::from_support(self)?.with_tolerance(self.tol))
            }
            other => other,
        }
    }

    /// `(MG, Mc + v, A_e, b_e)`.
    pub fn affine_map(&self, m: &DMatrix<f64>, v: Option<&DVector<f64>>) -> Result<Self> {
        check_dim(self.dim(), m.ncols())?;
        if let Some(v) = v {
            check_dim(m.nrows(), v.len())?;
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("map must have at least one row".into()));
        }
        let mut c = m * &self.c;
        if let Some(v) = v {
            c += v;
        }
        let z = self.build(m * &self.g, c, self.ae.clone(), self.be.clone());
        if let Some(e) = self.empty.get() {
            let _ = z.empty.set(*e);
        }
        Ok(z)
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), v.len())?;
        let mut z = self.clone();
        z.c += v;
        Ok(z)
    }

    pub fn negate(&self) -> Result<Self> {
        let mut z = self.clone();
        z.g = -z.g;
        z.c = -z.c;
        Ok(z)
    }

    /// `{x : M x ∈ Z}` for invertible `M`.
    pub fn inverse_affine_map(&self, m: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim();
        check_dim(n, m.nrows())?;
        check_dim(n, m.ncols())?;
        let lu = m.clone().lu();
        if linalg::rank(m, self.tol.rank) < n {
            return Err(Error::SingularMatrix);
        }
        let g = lu.solve(&self.g).ok_or(Error::SingularMatrix)?;
        let c = lu.solve(&self.c).ok_or(Error::SingularMatrix)?;
        let z = self.build(g, c, self.ae.clone(), self.be.clone());
        if let Some(e) = self.empty.get() {
            let _ = z.empty.set(*e);
        }
        Ok(z)
    }

    pub fn minkowski_sum_cz(&self, other: &ConstrainedZonotope) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        if self.is_empty() || other.is_empty() {
            return Ok(self.empty_like(self.dim()));
        }
        let z = self.build(
            hstack(&self.g, &other.g),
            &self.c + &other.c,
            block_diag(&self.ae, &other.ae),
            vcat(&self.be, &other.be),
        );
        let _ = z.empty.set(false);
        Ok(z)
    }

    /// Polytope operands are lifted first.
    pub fn minkowski_sum(&self, other: &ConvexSet) -> Result<Self> {
        match other {
            ConvexSet::CZonotope(z) => self.minkowski_sum_cz(z),
            ConvexSet::Polytope(p) => {
                check_dim(self.dim(), p.dim())?;
                if p.is_empty() {
                    return Ok(self.empty_like(self.dim()));
                }
                self.minkowski_sum_cz(&ConstrainedZonotope::from_polytope(p)?)
            }
            ConvexSet::Ellipsoid(_) => Err(Error::UnsupportedOperandPair(
                "constrained zonotope ⊕ ellipsoid".into(),
            )),
        }
    }

    /// `{x ∈ Z : R x ∈ W}` with coupling rows `R G ξ₁ − G_W ξ₂ = c_W − R c`.
    pub fn intersect_cz_with_map(&self, r: &DMatrix<f64>, w: &ConstrainedZonotope) -> Result<Self> {
        check_dim(self.dim(), r.ncols())?;
        check_dim(w.dim(), r.nrows())?;
        if self.is_empty() || w.is_empty() {
            return Ok(self.empty_like(self.dim()));
        }
        let n1 = self.latent_dim();
        let g = hstack(&self.g, &DMatrix::zeros(self.dim(), w.latent_dim()));
        let coupling = hstack(&(r * &self.g), &(-&w.g));
        let ae = vstack(&block_diag(&self.ae, &w.ae), &coupling);
        let be = vcat(&vcat(&self.be, &w.be), &(&w.c - r * &self.c));
        debug_assert_eq!(ae.ncols(), n1 + w.latent_dim());
        Ok(self.build(g, self.c.clone(), ae, be).tidy())
    }

    pub fn intersect_cz(&self, other: &ConstrainedZonotope) -> Result<Self> {
        let n = self.dim();
        self.intersect_cz_with_map(&DMatrix::identity(n, n), other)
    }

    /// Each non-redundant row adds one bounded slack.
    pub fn intersect_halfspaces(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), a.ncols())?;
        check_dim(a.nrows(), b.len())?;
        if self.is_empty() {
            return Ok(self.clone());
        }
        let mut z = self.clone();
        for i in 0..a.nrows() {
            let row = a.row(i).transpose();
            let scale = row.norm().max(b[i].abs()).max(1.0);
            let slack_tol = self.tol.feas * scale;
            let gt = self.g.tr_mul(&row);
            let base = row.dot(&self.c);
            // box bound ignores the equalities, so it over-estimates the support
            if base + gt.iter().map(|v| v.abs()).sum::<f64>() <= b[i] + slack_tol {
                continue;
            }
            let hi = z.support_value(&row)?;
            if hi <= b[i] + slack_tol {
                continue;
            }
            let lo = -z.support_value(&(-&row))?;
            if lo > b[i] + slack_tol {
                return Ok(self.empty_like(self.dim()));
            }
            let width = (b[i] - lo).max(0.0);
            let nl = z.latent_dim();
            let gz = hstack(&z.g, &DMatrix::zeros(z.dim(), 1));
            let mut new_row = DMatrix::zeros(1, nl + 1);
            let grow = z.g.tr_mul(&row);
            for j in 0..nl {
                new_row[(0, j)] = grow[j];
            }
            new_row[(0, nl)] = 0.5 * width;
            let ae = vstack(&hstack(&z.ae, &DMatrix::zeros(z.ae.nrows(), 1)), &new_row);
            let be = vcat(&z.be, &DVector::from_element(1, b[i] - row.dot(&z.c) - 0.5 * width));
            z = z.build(gz, z.c.clone(), ae, be);
            let _ = z.empty.set(false);
        }
        Ok(z)
    }

    /// Intersection with `{x : A_e x = b_e}`.
    pub fn intersect_affine(&self, ae: &DMatrix<f64>, be: &DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), ae.ncols())?;
        check_dim(ae.nrows(), be.len())?;
        if self.is_empty() {
            return Ok(self.clone());
        }
        let rows = ae * &self.g;
        let rhs = be - ae * &self.c;
        Ok(self
            .build(self.g.clone(), self.c.clone(), vstack(&self.ae, &rows), vcat(&self.be, &rhs))
            .tidy())
    }

    /// Intersection with a possibly unbounded polyhedron.
    pub fn intersect_polyhedron(&self, h: &HRep) -> Result<Self> {
        self.intersect_affine(&h.ae, &h.be)?.intersect_halfspaces(&h.a, &h.b)
    }

    pub fn intersect_polytope(&self, p: &Polytope) -> Result<Self> {
        check_dim(self.dim(), p.dim())?;
        if p.is_empty() {
            return Ok(self.empty_like(self.dim()));
        }
        self.intersect_polyhedron(p.hrep()?)
    }

    pub fn intersect(&self, other: &ConvexSet) -> Result<Self> {
        match other {
            ConvexSet::CZonotope(z) => self.intersect_cz(z),
            ConvexSet::Polytope(p) => self.intersect_polytope(p),
            ConvexSet::Ellipsoid(_) => Err(Error::UnsupportedOperandPair(
                "constrained zonotope ∩ ellipsoid".into(),
            )),
        }
    }

    /// `{x ∈ Z : R x ∈ W}`.
    pub fn intersect_inverse_affine(&self, r: &DMatrix<f64>, w: &ConvexSet) -> Result<Self> {
        match w {
            ConvexSet::CZonotope(wz) => self.intersect_cz_with_map(r, wz),
            ConvexSet::Polytope(p) => {
                check_dim(self.dim(), r.ncols())?;
                check_dim(p.dim(), r.nrows())?;
                if p.is_empty() {
                    return Ok(self.empty_like(self.dim()));
                }
                let h = p.hrep()?;
                self.intersect_polyhedron(&HRep {
                    a: &h.a * r,
                    b: h.b.clone(),
                    ae: &h.ae * r,
                    be: h.be.clone(),
                })
            }
            ConvexSet::Ellipsoid(_) => Err(Error::UnsupportedOperandPair(
                "constrained zonotope ∩ ellipsoid".into(),
            )),
        }
    }

    /// Center and generators of a zonotope containing `s`; the flag tells
    /// whether exact subtraction may use it (zonotopes, and ellipsoids through
    /// their interval hull).
    fn subtrahend_zonotope(&self, s: &ConvexSet) -> Result<(DVector<f64>, DMatrix<f64>, bool)> {
        check_dim(self.dim(), s.dim())?;
        match s {
            ConvexSet::CZonotope(z) if z.is_zonotope() => Ok((z.c.clone(), z.g.clone(), true)),
            ConvexSet::CZonotope(z) => {
                let (lo, hi) = interval_hull_of(z)?;
                Ok(((&lo + &hi) * 0.5, DMatrix::from_diagonal(&((&hi - &lo) * 0.5)), false))
            }
            ConvexSet::Ellipsoid(e) => {
                let g = e.generator();
                let half = DVector::from_iterator(g.nrows(), g.row_iter().map(|r| r.norm()));
                Ok((e.center().clone(), DMatrix::from_diagonal(&half), true))
            }
            ConvexSet::Polytope(_) => Err(Error::UnsupportedSubtrahend(
                "a polytope subtrahend is not supported for constrained zonotopes".into(),
            )),
        }
    }

    /// Strategy chosen when none is given.
    pub fn default_strategy(&self, s: &ConvexSet) -> Result<DiffStrategy> {
        let (_, g, exact) = self.subtrahend_zonotope(s)?;
        let k = nonzero_columns(&g).len();
        let grown = self.latent_dim().checked_shl(k as u32).unwrap_or(usize::MAX);
        let fits = exact && k <= EXACT_MAX_GENERATORS && grown <= EXACT_MAX_LATENT && k < usize::BITS as usize;
        Ok(if fits {
            DiffStrategy::ExactRecursive
        } else {
            DiffStrategy::ScaledInner
        })
    }

    /// Difference with the default strategy; returns the strategy used.
    pub fn pontryagin_difference_auto(&self, s: &ConvexSet) -> Result<(Self, DiffStrategy)> {
        let strategy = self.default_strategy(s)?;
        Ok((self.pontryagin_difference(s, strategy)?, strategy))
    }

    /// `{x : x + S ⊆ Z}` (exact) or a size-preserving inner approximation.
    pub fn pontryagin_difference(&self, s: &ConvexSet, strategy: DiffStrategy) -> Result<Self> {
        let (cs, gs, exact) = self.subtrahend_zonotope(s)?;
        if s.is_empty() {
            return Err(Error::EmptySet);
        }
        if self.is_empty() {
            return Ok(self.clone());
        }
        let x = self.translate(&(-&cs))?;
        match strategy {
            DiffStrategy::ExactRecursive => {
                if !exact {
                    return Err(Error::UnsupportedSubtrahend(
                        "exact subtraction needs a zonotope subtrahend".into(),
                    ));
                }
                let mut x = x;
                for j in nonzero_columns(&gs) {
                    let g = gs.column(j).into_owned();
                    x = x.translate(&g)?.intersect_cz(&x.translate(&(-&g))?)?;
                    if x.is_empty() {
                        return Ok(self.empty_like(self.dim()));
                    }
                }
                Ok(x)
            }
            DiffStrategy::ScaledInner => x.scaled_inner(&gs),
        }
    }

    /// `k + (1 − ρ)(X − k)` with ρ the largest gauge of the interval-hull
    /// corners of the centered subtrahend.
    fn scaled_inner(&self, gs: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim();
        let half = DVector::from_iterator(n, gs.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()));
        let active: Vec<usize> = (0..n).filter(|&i| half[i] > 0.0).collect();
        if active.is_empty() {
            return Ok(self.clone());
        }
        let k = self.interior_point()?;
        let nl = self.latent_dim();
        let rhs = &k - &self.c;
        let mut rho: f64 = 0.0;
        for pattern in 0..(1usize << active.len()) {
            let mut w = DVector::zeros(n);
            for (bit, &i) in active.iter().enumerate() {
                w[i] = if pattern >> bit & 1 == 1 { half[i] } else { -half[i] };
            }
            // max s  s.t.  k + s·w ∈ X
            let mut cost = DVector::zeros(nl + 1);
            cost[nl] = -1.0;
            let eq_top = hstack(&self.g, &DMatrix::from_column_slice(n, 1, (-&w).as_slice()));
            let eq_bot = hstack(&self.ae, &DMatrix::zeros(self.ae.nrows(), 1));
            let mut lo = DVector::from_element(nl + 1, -1.0);
            let mut hi = DVector::from_element(nl + 1, 1.0);
            lo[nl] = 0.0;
            hi[nl] = f64::INFINITY;
            let lp = LpProblem::new(cost)
                .equalities(&eq_top, &rhs)
                .equalities(&eq_bot, &self.be)
                .bounds(lo, hi);
            let r = solve_lp(&lp, &self.tol)?;
            match r.status {
                LpStatus::Optimal => {
                    let s = -r.objective;
                    if s <= 1.0 {
                        return Ok(self.empty_like(n));
                    }
                    rho = rho.max(1.0 / s);
                }
                LpStatus::Unbounded => {}
                LpStatus::Infeasible => return Ok(self.empty_like(n)),
                LpStatus::IterationLimit => return Err(Error::IterationLimit),
            }
        }
        if rho >= 1.0 {
            return Ok(self.empty_like(n));
        }
        let scale = 1.0 - rho;
        let z = self.build(&self.g * scale, &k + (&self.c - &k) * scale, self.ae.clone(), self.be.clone());
        let _ = z.empty.set(false);
        Ok(z)
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        if self.is_empty() {
            return Ok(false);
        }
        let nl = self.latent_dim();
        let d = x - &self.c;
        if nl == 0 {
            return Ok(d.amax() <= self.tol.feas * x.amax().max(1.0));
        }
        let lp = self.latent_lp(DVector::zeros(nl)).equalities(&self.g, &d);
        Ok(solve_lp(&lp, &self.tol)?.status == LpStatus::Optimal)
    }

    pub fn project_point(&self, v: &DVector<f64>, norm: Norm) -> Result<(DVector<f64>, f64)> {
        check_dim(self.dim(), v.len())?;
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        if self.contains_point(v)? {
            return Ok((v.clone(), 0.0));
        }
        let n = self.dim();
        let nl = self.latent_dim();
        if nl == 0 {
            return Ok((self.c.clone(), norm.of(&(&self.c - v))));
        }
        let xi = match norm {
            Norm::Two => {
                let q = self.g.tr_mul(&self.g) * 2.0;
                let lin = self.g.tr_mul(&(&self.c - v)) * 2.0;
                let qp = QpProblem::new(q, lin).with_constraints(self.latent_lp(DVector::zeros(nl)));
                let r = solve_qp(&qp, &self.tol)?;
                if r.status != LpStatus::Optimal {
                    return Err(Error::IterationLimit);
                }
                r.x
            }
            Norm::One | Norm::Inf => {
                let k = if norm == Norm::One { n } else { 1 };
                let mut cost = DVector::zeros(nl + k);
                for j in 0..k {
                    cost[nl + j] = 1.0;
                }
                let mut a = DMatrix::zeros(2 * n, nl + k);
                let mut b = DVector::zeros(2 * n);
                for i in 0..n {
                    let t = if norm == Norm::One { nl + i } else { nl };
                    for j in 0..nl {
                        a[(i, j)] = self.g[(i, j)];
                        a[(n + i, j)] = -self.g[(i, j)];
                    }
                    a[(i, t)] = -1.0;
                    a[(n + i, t)] = -1.0;
                    b[i] = v[i] - self.c[i];
                    b[n + i] = self.c[i] - v[i];
                }
                let mut lo = DVector::from_element(nl + k, -1.0);
                let mut hi = DVector::from_element(nl + k, 1.0);
                for j in 0..k {
                    lo[nl + j] = 0.0;
                    hi[nl + j] = f64::INFINITY;
                }
                let lp = LpProblem::new(cost)
                    .inequalities(&a, &b)
                    .equalities(&hstack(&self.ae, &DMatrix::zeros(self.ae.nrows(), k)), &self.be)
                    .bounds(lo, hi);
                let r = solve_lp(&lp, &self.tol)?;
                if r.status != LpStatus::Optimal {
                    return Err(Error::IterationLimit);
                }
                r.x.rows(0, nl).into_owned()
            }
        };
        let x = &self.g * xi + &self.c;
        let d = norm.of(&(&x - v));
        Ok((x, d))
    }

    /// `other ⊆ self`, decided on the vertices of `other`.
    pub fn contains_set(&self, other: &ConvexSet) -> Result<bool> {
        check_dim(self.dim(), other.dim())?;
        if other.is_empty() {
            return Ok(true);
        }
        if self.is_empty() {
            return Ok(false);
        }
        let verts = match other {
            ConvexSet::Polytope(p) => p.vertices()?.clone(),
            ConvexSet::CZonotope(z) => z.vertex_polytope()?.vertices()?.clone(),
            ConvexSet::Ellipsoid(_) => {
                return Err(Error::UnsupportedOperandPair(
                    "ellipsoid in constrained zonotope".into(),
                ))
            }
        };
        for i in 0..verts.nrows() {
            if !self.contains_point(&verts.row(i).transpose())? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn set_eq(&self, other: &ConvexSet) -> Result<bool> {
        let me = ConvexSet::CZonotope(self.clone());
        Ok(self.contains_set(other)? && other.contains_set(&me)?)
    }

    /// Image of the most central latent point: `max u` s.t.
    /// `A_e η = u b_e`, `‖η‖∞ ≤ 1`, then `ξ = η / u`.
    pub fn interior_point(&self) -> Result<DVector<f64>> {
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        let nl = self.latent_dim();
        if self.ae.nrows() == 0 || nl == 0 {
            return Ok(self.c.clone());
        }
        let mut cost = DVector::zeros(nl + 1);
        cost[nl] = -1.0;
        let mut lo = DVector::from_element(nl + 1, -1.0);
        let mut hi = DVector::from_element(nl + 1, 1.0);
        lo[nl] = 0.0;
        hi[nl] = f64::INFINITY;
        let eq = hstack(&self.ae, &DMatrix::from_column_slice(self.be.len(), 1, (-&self.be).as_slice()));
        let lp = LpProblem::new(cost)
            .equalities(&eq, &DVector::zeros(self.be.len()))
            .bounds(lo, hi);
        let r = solve_lp(&lp, &self.tol)?;
        let xi = match r.status {
            LpStatus::Unbounded => DVector::zeros(nl),
            LpStatus::Optimal => {
                let u = r.x[nl];
                if u < 1.0 - 1e-7 {
                    return Err(Error::EmptySet);
                }
                r.x.rows(0, nl) / u
            }
            LpStatus::Infeasible => return Err(Error::EmptySet),
            LpStatus::IterationLimit => return Err(Error::IterationLimit),
        };
        Ok(&self.g * xi + &self.c)
    }

    /// Bounding box exactly; Chebyshev ball and inscribed ellipsoid from the
    /// default inner polytope, hence inscribed but suboptimal.
    pub fn centering(&self, kind: CenteringKind) -> Result<Centering> {
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        let n = self.dim();
        match kind {
            CenteringKind::CircumscribedRect => {
                let (lower, upper) = interval_hull_of(self)?;
                Ok(Centering::CircumscribedRect { lower, upper })
            }
            CenteringKind::CircumscribedEllipsoid => {
                let outer = outer_polytope(self, &DirectionSet::spread(n, DEFAULT_D))?;
                outer.centering(kind)
            }
            CenteringKind::Chebyshev | CenteringKind::InscribedEllipsoid => {
                let inner = inner_polytope(self, &DirectionSet::spread(n, DEFAULT_D))?;
                if !inner.is_full_dimensional()? {
                    return Err(Error::EmptyInterior);
                }
                let out = inner.centering(kind)?;
                if let Centering::Chebyshev { center, radius } = &out {
                    for i in 0..n {
                        for s in [1.0, -1.0] {
                            let mut p = center.clone();
                            p[i] += s * radius;
                            if !self.contains_point(&p)? {
                                return Err(Error::Solver("inscribed ball failed its membership check".into()));
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Row-selection map keeping the complement of `dims`.
    pub fn project_away(&self, dims: &[usize]) -> Result<Self> {
        let keep = kept_dims(self.dim(), dims)?;
        if keep.is_empty() {
            return Err(Error::BadDims("cannot remove every dimension".into()));
        }
        self.affine_map(&selection_matrix(self.dim(), &keep), None)
    }

    pub fn slice_at(&self, dims: &[usize], values: &[f64]) -> Result<Self> {
        let (ae, be) = axis_equalities(self.dim(), dims, values)?;
        self.intersect_affine(&ae, &be)
    }

    pub fn cartesian_power(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("power must be at least 1".into()));
        }
        if self.is_empty() {
            return Ok(self.empty_like(self.dim() * m));
        }
        let mut g = self.g.clone();
        let mut c = self.c.clone();
        let mut ae = self.ae.clone();
        let mut be = self.be.clone();
        for _ in 1..m {
            g = block_diag(&g, &self.g);
            c = vcat(&c, &self.c);
            ae = block_diag(&ae, &self.ae);
            be = vcat(&be, &self.be);
        }
        let z = self.build(g, c, ae, be);
        let _ = z.empty.set(false);
        Ok(z)
    }

    /// Grid estimate of the area: the fraction of `grid_n × grid_n` cell
    /// centers of the bounding box that lie in the set, times the box area.
    /// Each grid row is resolved with two LPs since its slice is an interval.
    pub fn volume_2d(&self, grid_n: usize) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::BadDimension {
                expected: 2,
                found: self.dim(),
            });
        }
        if grid_n == 0 {
            return Err(Error::InvalidInput("grid must have at least one cell".into()));
        }
        if self.is_empty() {
            return Ok(0.0);
        }
        let (lo, hi) = interval_hull_of(self)?;
        let (wx, wy) = (hi[0] - lo[0], hi[1] - lo[1]);
        if wx <= 0.0 || wy <= 0.0 {
            return Ok(0.0);
        }
        let nl = self.latent_dim();
        let (hx, hy) = (wx / grid_n as f64, wy / grid_n as f64);
        let slack = self.tol.feas * wx.max(1.0);
        let mut count = 0usize;
        for j in 0..grid_n {
            let y = lo[1] + (j as f64 + 0.5) * hy;
            let Some((xmin, xmax)) = self.row_interval(y, nl)? else {
                continue;
            };
            for i in 0..grid_n {
                let x = lo[0] + (i as f64 + 0.5) * hx;
                if x >= xmin - slack && x <= xmax + slack {
                    count += 1;
                }
            }
        }
        Ok(count as f64 / (grid_n * grid_n) as f64 * wx * wy)
    }

    fn row_interval(&self, y: f64, nl: usize) -> Result<Option<(f64, f64)>> {
        if nl == 0 {
            let hit = (self.c[1] - y).abs() <= self.tol.feas;
            return Ok(hit.then_some((self.c[0], self.c[0])));
        }
        let gy = self.g.rows(1, 1).into_owned();
        let rhs = DVector::from_element(1, y - self.c[1]);
        let gx = self.g.row(0).transpose();
        let mut ends = [0.0; 2];
        for (k, s) in [1.0, -1.0].into_iter().enumerate() {
            let lp = self.latent_lp(&gx * s).equalities(&gy, &rhs);
            let r = solve_lp(&lp, &self.tol)?;
            match r.status {
                LpStatus::Optimal => ends[k] = s * r.objective + self.c[0],
                LpStatus::Infeasible => return Ok(None),
                _ => return Err(Error::IterationLimit),
            }
        }
        Ok(Some((ends[0], ends[1])))
    }
}

fn nonzero_columns(g: &DMatrix<f64>) -> Vec<usize> {
    (0..g.ncols()).filter(|&j| g.column(j).amax() > 0.0).collect()
}

impl Support for ConstrainedZonotope {
    fn dim(&self) -> usize {
        self.g.nrows()
    }

    fn is_empty(&self) -> bool {
        ConstrainedZonotope::is_empty(self)
    }

    fn support(&self, v: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        check_dim(self.dim(), v.len())?;
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        let nl = self.latent_dim();
        if nl == 0 {
            return Ok((v.dot(&self.c), self.c.clone()));
        }
        let gt = self.g.tr_mul(v);
        let r = solve_lp(&self.latent_lp(-&gt), &self.tol)?;
        match r.status {
            LpStatus::Optimal => {
                let x = &self.g * &r.x + &self.c;
                Ok((v.dot(&self.c) - r.objective, x))
            }
            LpStatus::Infeasible => Err(Error::EmptySet),
            LpStatus::Unbounded => Err(Error::Solver("support LP over a box reported unbounded".into())),
            LpStatus::IterationLimit => Err(Error::IterationLimit),
        }
    }
}

impl From<&Ellipsoid> for ConstrainedZonotope {
    /// Interval-hull zonotope `c ± row norms of G`.
    fn from(e: &Ellipsoid) -> Self {
        let g = e.generator();
        let half = DVector::from_iterator(g.nrows(), g.row_iter().map(|r| r.norm()));
        let mut z = ConstrainedZonotope::zonotope(DMatrix::from_diagonal(&half), e.center().clone())
            .expect("ellipsoid data are consistent");
        z.tol = *e.tolerance();
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn square() -> ConstrainedZonotope {
        ConstrainedZonotope::rect(&dvector![-1.0, -1.0], &dvector![1.0, 1.0]).unwrap()
    }

    fn pentagon() -> Polytope {
        Polytope::from_vertices(dmatrix![-1.0, 0.5; -1.0, 1.0; 1.0, 1.0; 1.0, -1.0; 0.5, -1.0]).unwrap()
    }

    fn cz(z: &ConstrainedZonotope) -> ConvexSet {
        ConvexSet::CZonotope(z.clone())
    }

    #[test]
    fn construction() {
        let s = square();
        assert!(s.is_zonotope());
        assert_eq!(s.latent_dim(), 2);
        let p = ConstrainedZonotope::singleton(&dvector![1.0, 2.0]).unwrap();
        assert!(p.contains_point(&dvector![1.0, 2.0]).unwrap());
        assert!(!p.contains_point(&dvector![1.0, 2.1]).unwrap());
        let e = ConstrainedZonotope::new(dmatrix![1.0; 0.0], dvector![0.0, 0.0], dmatrix![0.0], dvector![1.0]).unwrap();
        assert!(e.is_empty());
        assert!(matches!(
            ConstrainedZonotope::new(dmatrix![1.0; 0.0], dvector![0.0], dmatrix![0.0], dvector![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lifting_counts() {
        let c1 = ConstrainedZonotope::from_polytope(&pentagon()).unwrap();
        assert_eq!(c1.latent_dim(), 7);
        assert_eq!(c1.n_equalities(), 5);
        assert!(c1.set_eq(&ConvexSet::Polytope(pentagon())).unwrap());
        assert!(c1.to_polytope().unwrap().set_eq(&pentagon()).unwrap());
    }

    #[test]
    fn conversion() {
        let box_h = Polytope::rect(&dvector![-1.0, -1.0], &dvector![1.0, 1.0]).unwrap();
        let lifted = ConstrainedZonotope::from_polytope(&box_h).unwrap();
        assert!(lifted.set_eq(&cz(&square())).unwrap());
        let rot = ConstrainedZonotope::zonotope(dmatrix![1.0, 1.0; 1.0, -1.0], dvector![0.0, 0.0]).unwrap();
        let p = rot.to_polytope().unwrap();
        assert_eq!(p.n_vertices().unwrap(), 4);
        assert!((p.volume().unwrap() - 8.0).abs() < 1e-9);
        let big = ConstrainedZonotope::zonotope(DMatrix::identity(2, 13), dvector![0.0, 0.0]).unwrap();
        assert!(matches!(big.to_polytope(), Err(Error::LatentDimCap { .. })));
    }

    #[test]
    fn maps_and_sums() {
        let seg = square().affine_map(&dmatrix![1.0, 0.0], None).unwrap();
        assert!((seg.support_value(&dvector![1.0]).unwrap() - 1.0).abs() < 1e-12);
        let sum = square().minkowski_sum_cz(&square()).unwrap();
        let two = ConstrainedZonotope::rect(&dvector![-2.0, -2.0], &dvector![2.0, 2.0]).unwrap();
        assert!(sum.set_eq(&cz(&two)).unwrap());
        let shifted = square().minkowski_sum_cz(&ConstrainedZonotope::singleton(&dvector![1.0, 0.0]).unwrap()).unwrap();
        assert!(shifted.contains_point(&dvector![2.0, 1.0]).unwrap());
        assert!(!shifted.contains_point(&dvector![-1.5, 0.0]).unwrap());
        let inv = square().inverse_affine_map(&(DMatrix::identity(2, 2) * 2.0)).unwrap();
        assert!((inv.support_value(&dvector![1.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn intersections() {
        let c1a = square().intersect_halfspaces(&dmatrix![-1.0, -1.0], &dvector![0.5]).unwrap();
        assert_eq!(c1a.latent_dim(), 3);
        assert!(c1a.set_eq(&ConvexSet::Polytope(pentagon())).unwrap());
        let twice = square().intersect_cz(&square()).unwrap();
        assert!(twice.set_eq(&cz(&square())).unwrap());
        let slice = square().slice_at(&[0], &[0.0]).unwrap();
        assert!(slice.contains_point(&dvector![0.0, 0.9]).unwrap());
        assert!(!slice.contains_point(&dvector![0.1, 0.0]).unwrap());
        let gone = square().intersect_halfspaces(&dmatrix![1.0, 0.0], &dvector![-2.0]).unwrap();
        assert!(gone.is_empty());
    }

    #[test]
    fn differences() {
        let seg = ConstrainedZonotope::zonotope(dmatrix![0.4; 0.0], dvector![0.0, 0.0]).unwrap();
        let exact = square().pontryagin_difference(&cz(&seg), DiffStrategy::ExactRecursive).unwrap();
        let expect = ConstrainedZonotope::rect(&dvector![-0.6, -1.0], &dvector![0.6, 1.0]).unwrap();
        assert!(exact.set_eq(&cz(&expect)).unwrap());
        let inner = square().pontryagin_difference(&cz(&seg), DiffStrategy::ScaledInner).unwrap();
        let small = ConstrainedZonotope::rect(&dvector![-0.6, -0.6], &dvector![0.6, 0.6]).unwrap();
        assert!(inner.set_eq(&cz(&small)).unwrap());
        let point = ConstrainedZonotope::singleton(&dvector![0.0, 0.0]).unwrap();
        for strategy in [DiffStrategy::ExactRecursive, DiffStrategy::ScaledInner] {
            let d = square().pontryagin_difference(&cz(&point), strategy).unwrap();
            assert!(d.set_eq(&cz(&square())).unwrap());
        }
        let p = ConvexSet::Polytope(pentagon());
        assert!(matches!(
            square().pontryagin_difference(&p, DiffStrategy::ScaledInner),
            Err(Error::UnsupportedSubtrahend(_))
        ));
        assert_eq!(square().default_strategy(&cz(&seg)).unwrap(), DiffStrategy::ExactRecursive);
    }

    #[test]
    fn queries() {
        let s = square();
        assert!((s.support_value(&dvector![3.0, 4.0]).unwrap() - 7.0).abs() < 1e-12);
        assert!(s.contains_point(&dvector![0.0, 0.0]).unwrap());
        let (x, d) = s.project_point(&dvector![2.0, 0.0], Norm::Two).unwrap();
        assert!((x - dvector![1.0, 0.0]).amax() < 1e-8);
        assert!((d - 1.0).abs() < 1e-8);
        let (_, d) = s.project_point(&dvector![2.0, 3.0], Norm::One).unwrap();
        assert!((d - 3.0).abs() < 1e-8);
        let (_, d) = s.project_point(&dvector![2.0, 3.0], Norm::Inf).unwrap();
        assert!((d - 2.0).abs() < 1e-8);
        assert!(s.interior_point().unwrap().amax() < 1e-12);
        let c1 = ConstrainedZonotope::from_polytope(&pentagon()).unwrap();
        assert!(c1.contains_point(&c1.interior_point().unwrap()).unwrap());
    }

    #[test]
    fn containment() {
        let half = ConstrainedZonotope::rect(&dvector![-0.5, -0.5], &dvector![0.5, 0.5]).unwrap();
        assert!(square().contains_set(&cz(&half)).unwrap());
        assert!(!half.contains_set(&cz(&square())).unwrap());
    }

    #[test]
    fn centering_and_volume() {
        let r = ConstrainedZonotope::rect(&dvector![0.0, 0.0], &dvector![2.0, 1.0]).unwrap();
        match r.centering(CenteringKind::Chebyshev).unwrap() {
            Centering::Chebyshev { radius, .. } => assert!((radius - 0.5).abs() < 1e-6),
            _ => unreachable!(),
        }
        let c1 = ConstrainedZonotope::from_polytope(&pentagon()).unwrap();
        match c1.centering(CenteringKind::Chebyshev).unwrap() {
            Centering::Chebyshev { radius, .. } => assert!((0.6..=0.73224).contains(&radius)),
            _ => unreachable!(),
        }
        match c1.centering(CenteringKind::CircumscribedRect).unwrap() {
            Centering::CircumscribedRect { lower, upper } => {
                assert!((lower + dvector![1.0, 1.0]).amax() < 1e-9);
                assert!((upper - dvector![1.0, 1.0]).amax() < 1e-9);
            }
            _ => unreachable!(),
        }
        assert!((square().volume_2d(200).unwrap() - 4.0).abs() < 0.1);
        assert!((c1.volume_2d(200).unwrap() - 2.875).abs() < 0.1);
        assert_eq!(ConstrainedZonotope::empty(2).volume_2d(50).unwrap(), 0.0);
    }

    #[test]
    fn projections_and_powers() {
        let cube = ConstrainedZonotope::rect(&DVector::from_element(3, -1.0), &DVector::from_element(3, 1.0)).unwrap();
        let flat = cube.project_away(&[2]).unwrap();
        assert!(flat.set_eq(&cz(&square())).unwrap());
        let seg = ConstrainedZonotope::rect(&dvector![-1.0], &dvector![1.0]).unwrap();
        assert!(seg.cartesian_power(2).unwrap().set_eq(&cz(&square())).unwrap());
    }
}
