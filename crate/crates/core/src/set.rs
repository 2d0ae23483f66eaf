//! Traits and enums shared by the three set classes.

use nalgebra::DVector;

use crate::czonotope::ConstrainedZonotope;
use crate::ellipsoid::Ellipsoid;
use crate::error::{Error, Result};
use crate::polytope::Polytope;

/// Sets with a computable support function.
pub trait Support {
    fn dim(&self) -> usize;

    fn is_empty(&self) -> bool;

    /// Maximum of `vᵀx` over the set and a maximizer.
    fn support(&self, v: &DVector<f64>) -> Result<(f64, DVector<f64>)>;

    /// Support value only. Defined for `v = 0` on every nonempty set.
    fn support_value(&self, v: &DVector<f64>) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        if v.iter().all(|x| *x == 0.0) {
            return Ok(0.0);
        }
        Ok(self.support(v)?.0)
    }
}

/// Norm used by point projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    One,
    Two,
    Inf,
}

impl Norm {
    pub fn of(&self, v: &DVector<f64>) -> f64 {
        match self {
            Norm::One => v.iter().map(|x| x.abs()).sum(),
            Norm::Two => v.norm(),
            Norm::Inf => v.amax(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenteringKind {
    Chebyshev,
    InscribedEllipsoid,
    CircumscribedEllipsoid,
    CircumscribedRect,
}

/// Result of a centering computation.
#[derive(Debug, Clone)]
pub enum Centering {
    Chebyshev { center: DVector<f64>, radius: f64 },
    InscribedEllipsoid(Ellipsoid),
    CircumscribedEllipsoid(Ellipsoid),
    CircumscribedRect { lower: DVector<f64>, upper: DVector<f64> },
}

impl Centering {
    pub fn kind(&self) -> CenteringKind {
        match self {
            Centering::Chebyshev { .. } => CenteringKind::Chebyshev,
            Centering::InscribedEllipsoid(_) => CenteringKind::InscribedEllipsoid,
            Centering::CircumscribedEllipsoid(_) => CenteringKind::CircumscribedEllipsoid,
            Centering::CircumscribedRect { .. } => CenteringKind::CircumscribedRect,
        }
    }

    pub fn center(&self) -> DVector<f64> {
        match self {
            Centering::Chebyshev { center, .. } => center.clone(),
            Centering::InscribedEllipsoid(e) | Centering::CircumscribedEllipsoid(e) => e.center().clone(),
            Centering::CircumscribedRect { lower, upper } => (lower + upper) * 0.5,
        }
    }
}

/// Any of the three set classes.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    Polytope(Polytope),
    CZonotope(ConstrainedZonotope),
    Ellipsoid(Ellipsoid),
}

impl ConvexSet {
    pub fn class_name(&self) -> &'static str {
        match self {
            ConvexSet::Polytope(_) => "polytope",
            ConvexSet::CZonotope(_) => "czonotope",
            ConvexSet::Ellipsoid(_) => "ellipsoid",
        }
    }

    pub fn as_support(&self) -> &dyn Support {
        match self {
            ConvexSet::Polytope(p) => p,
            ConvexSet::CZonotope(z) => z,
            ConvexSet::Ellipsoid(e) => e,
        }
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool> {
        match self {
            ConvexSet::Polytope(p) => p.contains_point(x),
            ConvexSet::CZonotope(z) => z.contains_point(x),
            ConvexSet::Ellipsoid(e) => e.contains_point(x),
        }
    }

    /// `other ⊆ self`.
    pub fn contains_set(&self, other: &ConvexSet) -> Result<bool> {
        match self {
            ConvexSet::Polytope(p) => p.contains_set(other.as_support()),
            ConvexSet::CZonotope(z) => z.contains_set(other),
            ConvexSet::Ellipsoid(e) => e.contains_set(other),
        }
    }

    /// Mutual containment.
    pub fn set_eq(&self, other: &ConvexSet) -> Result<bool> {
        Ok(self.contains_set(other)? && other.contains_set(self)?)
    }

    pub fn project_point(&self, v: &DVector<f64>, norm: Norm) -> Result<(DVector<f64>, f64)> {
        match self {
            ConvexSet::Polytope(p) => p.project_point(v, norm),
            ConvexSet::CZonotope(z) => z.project_point(v, norm),
            ConvexSet::Ellipsoid(e) => {
                if norm != Norm::Two {
                    return Err(Error::InvalidInput("ellipsoid projection supports the 2-norm only".into()));
                }
                e.project_point(v)
            }
        }
    }
}

impl Support for ConvexSet {
    fn dim(&self) -> usize {
        self.as_support().dim()
    }

    fn is_empty(&self) -> bool {
        self.as_support().is_empty()
    }

    fn support(&self, v: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        self.as_support().support(v)
    }

    fn support_value(&self, v: &DVector<f64>) -> Result<f64> {
        self.as_support().support_value(v)
    }
}

impl From<Polytope> for ConvexSet {
    fn from(p: Polytope) -> Self {
        ConvexSet::Polytope(p)
    }
}

impl From<ConstrainedZonotope> for ConvexSet {
    fn from(z: ConstrainedZonotope) -> Self {
        ConvexSet::CZonotope(z)
    }
}

impl From<Ellipsoid> for ConvexSet {
    fn from(e: Ellipsoid) -> Self {
        ConvexSet::Ellipsoid(e)
    }
}
