//! Full-dimensional ellipsoids `{x : (x−c)ᵀQ(x−c) ≤ 1} = {G u + c : ‖u‖ ≤ 1}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::set::{Centering, CenteringKind, ConvexSet, Support};
use crate::solver::psd_linesearch;
use crate::tolerance::Tolerance;

#[derive(Debug, Clone)]
pub struct Ellipsoid {
    c: DVector<f64>,
    q: DMatrix<f64>,
    g: DMatrix<f64>,
    tol: Tolerance,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl Ellipsoid {
    /// Ellipsoid from its shape matrix `Q` and center.
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let n = c.len();
        check_dim(n, q.nrows())?;
        check_dim(n, q.ncols())?;
        if n == 0 || !q.iter().chain(c.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("shape and center must be finite and nonempty".into()));
        }
        let scale = q.amax().max(1e-300);
        if (&q - q.transpose()).amax() > 1e-10 * scale {
            return Err(Error::NotPositiveDefinite);
        }
        let q = symmetrize(&q);
        let (values, vectors) = linalg::sym_eigen(&q);
        if values[0] <= 1e-12 * values[n - 1].abs().max(1e-300) || q.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        let inv_roots = DVector::from_iterator(n, values.iter().map(|v| 1.0 / v.sqrt()));
        let g = &vectors * DMatrix::from_diagonal(&inv_roots) * vectors.transpose();
        Ok(Ellipsoid {
            c,
            q,
            g,
            tol: Tolerance::default(),
        })
    }

    /// Ellipsoid `{G u + c : ‖u‖ ≤ 1}` for square nonsingular `G`.
    pub fn from_generator(g: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let n = c.len();
        check_dim(n, g.nrows())?;
        check_dim(n, g.ncols())?;
        if n == 0 || !g.iter().chain(c.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("generator and center must be finite and nonempty".into()));
        }
        if linalg::rank(&g, 1e-12) < n {
            return Err(Error::SingularGenerator);
        }
        let ggt = &g * g.transpose();
        let q = ggt.try_inverse().ok_or(Error::SingularGenerator)?;
        Ok(Ellipsoid {
            c,
            q: symmetrize(&q),
            g,
            tol: Tolerance::default(),
        })
    }

    /// Euclidean ball of radius `r`.
    pub fn ball(c: DVector<f64>, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let n = c.len();
        Ellipsoid::from_generator(DMatrix::identity(n, n) * r, c)
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// `M E + v` for `M` with full row rank.
    pub fn affine_map(&self, m: &DMatrix<f64>, v: Option<&DVector<f64>>) -> Result<Ellipsoid> {
        check_dim(self.dim(), m.ncols())?;
        let rows = m.nrows();
        if let Some(v) = v {
            check_dim(rows, v.len())?;
        }
        if rows == 0 || linalg::rank(m, 1e-12) < rows {
            return Err(Error::RankDeficient);
        }
        let mg = m * &self.g;
        let g = linalg::sym_sqrt(&(&mg * mg.transpose()));
        let mut c = m * &self.c;
        if let Some(v) = v {
            c += v;
        }
        Ok(Ellipsoid::from_generator(g, c)
            .map_err(|_| Error::RankDeficient)?
            .with_tolerance(self.tol))
    }

    /// `{x : M x ∈ E}` for invertible square `M`.
    pub fn inverse_affine_map(&self, m: &DMatrix<f64>) -> Result<Ellipsoid> {
        let n = self.dim();
        check_dim(n, m.nrows())?;
        check_dim(n, m.ncols())?;
        if linalg::rank(m, self.tol.rank) < n {
            return Err(Error::SingularMatrix);
        }
        let minv = m.clone().try_inverse().ok_or(Error::SingularMatrix)?;
        let q = m.transpose() * &self.q * m;
        Ok(Ellipsoid::new(symmetrize(&q), &minv * &self.c)?.with_tolerance(self.tol))
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Ellipsoid> {
        check_dim(self.dim(), v.len())?;
        let mut out = self.clone();
        out.c += v;
        Ok(out)
    }

    /// Drops the coordinates in `dims`.
    pub fn project_away(&self, dims: &[usize]) -> Result<Ellipsoid> {
        let keep = crate::polytope::kept_dims(self.dim(), dims)?;
        if keep.is_empty() {
            return Err(Error::BadDims("cannot remove every dimension".into()));
        }
        let m = crate::polytope::selection_matrix(self.dim(), &keep);
        self.affine_map(&m, None)
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        let e = x - &self.c;
        Ok(e.dot(&(&self.q * &e)) <= 1.0 + self.tol.feas)
    }

    /// Euclidean projection of `v` onto the ellipsoid and its distance.
    pub fn project_point(&self, v: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        check_dim(self.dim(), v.len())?;
        let e = v - &self.c;
        if e.dot(&(&self.q * &e)) <= 1.0 {
            return Ok((v.clone(), 0.0));
        }
        let (q, u) = linalg::sym_eigen(&self.q);
        let w = u.tr_mul(&e);
        // φ(λ) = Σ q_i w_i² / (1 + λ q_i)² − 1 is decreasing in λ ≥ 0
        let phi = |lam: f64| -> (f64, f64) {
            let mut val = -1.0;
            let mut der = 0.0;
            for i in 0..w.len() {
                let den = 1.0 + lam * q[i];
                val += q[i] * w[i] * w[i] / (den * den);
                der -= 2.0 * q[i] * q[i] * w[i] * w[i] / (den * den * den);
            }
            (val, der)
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        while phi(hi).0 > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        let mut lam = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (val, der) = phi(lam);
            if val > 0.0 {
                lo = lam;
            } else {
                hi = lam;
            }
            let newton = if der < 0.0 { lam - val / der } else { f64::NAN };
            lam = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (hi - lo) <= 1e-12 * hi.max(1.0) || val.abs() <= 1e-15 {
                break;
            }
        }
        let z = DVector::from_iterator(w.len(), (0..w.len()).map(|i| w[i] / (1.0 + lam * q[i])));
        let x = &self.c + &u * z;
        let d = (&x - v).norm();
        Ok((x, d))
    }

    /// `other ⊆ self`.
    pub fn contains_set(&self, other: &ConvexSet) -> Result<bool> {
        check_dim(self.dim(), other.dim())?;
        match other {
            ConvexSet::Ellipsoid(y) => Ok(self.contains_ellipsoid(y)),
            ConvexSet::Polytope(p) => self.contains_vertices(p.vertices()?),
            ConvexSet::CZonotope(z) => {
                if z.is_empty() {
                    return Ok(true);
                }
                self.contains_vertices(z.to_polytope()?.vertices()?)
            }
        }
    }

    fn contains_vertices(&self, v: &DMatrix<f64>) -> Result<bool> {
        for i in 0..v.nrows() {
            if !self.contains_point(&v.row(i).transpose())? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// S-procedure: `Y ⊆ E` iff `λ P_Y − P_E ⪰ 0` for some `λ ≥ 0`.
    fn contains_ellipsoid(&self, y: &Ellipsoid) -> bool {
        let pe = self.lifted_form();
        let py = y.lifted_form();
        let scale = pe.amax().max(py.amax()).max(1.0);
        psd_linesearch(&(-pe), &py, (0.0, 1e6), self.tol.feas * scale).is_some()
    }

    /// `[x;1]ᵀ P [x;1] = (x−c)ᵀQ(x−c) − 1`.
    fn lifted_form(&self) -> DMatrix<f64> {
        let n = self.dim();
        let qc = &self.q * &self.c;
        let mut p = DMatrix::zeros(n + 1, n + 1);
        p.view_mut((0, 0), (n, n)).copy_from(&self.q);
        for i in 0..n {
            p[(i, n)] = -qc[i];
            p[(n, i)] = -qc[i];
        }
        p[(n, n)] = self.c.dot(&qc) - 1.0;
        p
    }

    pub fn centering(&self, kind: CenteringKind) -> Centering {
        match kind {
            CenteringKind::Chebyshev => {
                let (values, _) = linalg::sym_eigen(&self.q);
                Centering::Chebyshev {
                    center: self.c.clone(),
                    radius: 1.0 / values[values.len() - 1].sqrt(),
                }
            }
            CenteringKind::InscribedEllipsoid => Centering::InscribedEllipsoid(self.clone()),
            CenteringKind::CircumscribedEllipsoid => Centering::CircumscribedEllipsoid(self.clone()),
            CenteringKind::CircumscribedRect => {
                let h = DVector::from_iterator(self.dim(), self.g.row_iter().map(|r| r.norm()));
                Centering::CircumscribedRect {
                    lower: &self.c - &h,
                    upper: &self.c + &h,
                }
            }
        }
    }

    pub fn volume(&self) -> f64 {
        linalg::unit_ball_volume(self.dim()) * self.g.determinant().abs()
    }

    pub fn interior_point(&self) -> DVector<f64> {
        self.c.clone()
    }
}

impl Support for Ellipsoid {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn is_empty(&self) -> bool {
        false
    }

    fn support(&self, v: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        check_dim(self.dim(), v.len())?;
        let gtv = self.g.tr_mul(v);
        let norm = gtv.norm();
        if norm == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let x = &self.c + &self.g * gtv / norm;
        Ok((self.c.dot(v) + norm, x))
    }

    fn support_value(&self, v: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        Ok(self.c.dot(v) + self.g.tr_mul(v).norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn e1() -> Ellipsoid {
        Ellipsoid::new(dmatrix![1.0, 0.0; 0.0, 4.0], dvector![2.0, -1.0]).unwrap()
    }

    #[test]
    fn equal_to_itself() {
        let e = Ellipsoid::new(dmatrix![0.6, 0.1; 0.1, 0.9], dvector![0.0, 0.0]).unwrap();
        let set: ConvexSet = e.clone().into();
        assert!(set.set_eq(&set).unwrap());
        let shrunk: ConvexSet = e.affine_map(&(DMatrix::identity(2, 2) * 0.999), None).unwrap().into();
        assert!(set.contains_set(&shrunk).unwrap());
        assert!(!shrunk.contains_set(&set).unwrap());
    }

    #[test]
    fn construction() {
        let e = Ellipsoid::ball(dvector![0.0, 0.0], 1.0).unwrap();
        assert!((e.shape() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        assert_eq!(
            Ellipsoid::new(dmatrix![1.0, 0.0; 0.0, 0.0], dvector![0.0, 0.0]).unwrap_err(),
            Error::NotPositiveDefinite
        );
        assert_eq!(
            Ellipsoid::from_generator(dmatrix![1.0, 1.0; 1.0, 1.0], dvector![0.0, 0.0]).unwrap_err(),
            Error::SingularGenerator
        );
        let g = e1().generator().clone();
        assert!((g - dmatrix![1.0, 0.0; 0.0, 0.5]).amax() < 1e-12);
    }

    #[test]
    fn support_closed_form() {
        let (h, x) = e1().support(&dvector![1.0, 0.0]).unwrap();
        assert!((h - 3.0).abs() < 1e-12);
        assert!((x - dvector![3.0, -1.0]).amax() < 1e-12);
        let ball = Ellipsoid::ball(dvector![0.0, 0.0], 1.0).unwrap();
        let v = dvector![0.6, 0.8];
        let (h, x) = ball.support(&v).unwrap();
        assert!((h - 1.0).abs() < 1e-12 && (x - v).amax() < 1e-12);
        assert_eq!(ball.support(&dvector![0.0, 0.0]).unwrap_err(), Error::ZeroDirection);
        assert_eq!(ball.support_value(&dvector![0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn affine_images() {
        let ball = Ellipsoid::ball(dvector![0.0, 0.0], 1.0).unwrap();
        let m = dmatrix![1.0, 0.0; 0.0, 2.0];
        let img = ball.affine_map(&m, None).unwrap();
        assert!((img.generator() - &m).amax() < 1e-12);
        assert_eq!(
            ball.affine_map(&dmatrix![1.0, 1.0; 2.0, 2.0], None).unwrap_err(),
            Error::RankDeficient
        );
        let line = ball.affine_map(&dmatrix![1.0, 0.0], None).unwrap();
        assert_eq!(line.dim(), 1);
    }

    #[test]
    fn projection() {
        let ball = Ellipsoid::ball(dvector![0.0, 0.0], 1.0).unwrap();
        let (x, d) = ball.project_point(&dvector![3.0, 0.0]).unwrap();
        assert!((x - dvector![1.0, 0.0]).amax() < 1e-10);
        assert!((d - 2.0).abs() < 1e-10);
        let (x, d) = ball.project_point(&dvector![0.1, 0.2]).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(x, dvector![0.1, 0.2]);
        // projection onto E1 is a stationary point of the distance
        let (x, _) = e1().project_point(&dvector![5.0, 3.0]).unwrap();
        let e = &x - e1().center();
        let grad = e1().shape() * &e;
        let diff = dvector![5.0, 3.0] - &x;
        assert!((grad[0] * diff[1] - grad[1] * diff[0]).abs() < 1e-9);
    }

    #[test]
    fn containment_of_balls() {
        let small = Ellipsoid::ball(dvector![0.0, 0.0], 1.0).unwrap();
        let big = Ellipsoid::ball(dvector![0.0, 0.0], 2.0).unwrap();
        let shifted = Ellipsoid::ball(dvector![1.5, 0.0], 1.0).unwrap();
        assert!(big.contains_set(&small.clone().into()).unwrap());
        assert!(!big.contains_set(&shifted.into()).unwrap());
        assert!(!small.contains_set(&big.into()).unwrap());
    }

    #[test]
    fn centering_and_volume() {
        assert!((e1().volume() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        match e1().centering(CenteringKind::CircumscribedRect) {
            Centering::CircumscribedRect { lower, upper } => {
                assert!((lower - dvector![1.0, -1.5]).amax() < 1e-12);
                assert!((upper - dvector![3.0, -0.5]).amax() < 1e-12);
            }
            _ => unreachable!(),
        }
        match Ellipsoid::ball(dvector![0.0, 0.0], 1.0).unwrap().centering(CenteringKind::Chebyshev) {
            Centering::Chebyshev { radius, .. } => assert!((radius - 1.0).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn inverse_map() {
        let ball = Ellipsoid::ball(dvector![1.0, 0.0], 1.0).unwrap();
        let m = DMatrix::<f64>::identity(2, 2) * 2.0;
        let pre = ball.inverse_affine_map(&m).unwrap();
        assert!((pre.center() - dvector![0.5, 0.0]).amax() < 1e-12);
        assert!((pre.volume() - std::f64::consts::PI / 4.0).abs() < 1e-12);
        assert_eq!(
            ball.inverse_affine_map(&DMatrix::zeros(2, 2)).unwrap_err(),
            Error::SingularMatrix
        );
    }
}
