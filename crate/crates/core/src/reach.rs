//! Robust controllable sets and forward trajectory sets for
//! `x⁺ = A x + B u + F w`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::ConstraintData;
use crate::czonotope::{ConstrainedZonotope, DiffStrategy};
use crate::ellipsoid::Ellipsoid;
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::polytope::{interval_hull_of, Polytope};
use crate::set::{ConvexSet, Support};
use crate::tolerance::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    Polytope,
    CZonotope,
}

impl Repr {
    pub fn as_str(&self) -> &'static str {
        match self {
            Repr::Polytope => "polytope",
            Repr::CZonotope => "czonotope",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RcProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub u: ConvexSet,
    pub w: ConvexSet,
    pub s: ConvexSet,
    pub t: ConvexSet,
    pub horizon: usize,
}

/// `K_0, …, K_N` plus the subtraction strategy used at each step
/// (`None` on the polytope path and for skipped steps).
#[derive(Debug, Clone)]
pub struct RcResult {
    pub repr: Repr,
    pub sets: Vec<ConvexSet>,
    pub strategies: Vec<Option<DiffStrategy>>,
}

impl RcResult {
    pub fn k0(&self) -> &ConvexSet {
        &self.sets[0]
    }
}

/// Support function of `M X`.
struct Mapped<'a> {
    set: &'a dyn Support,
    m: &'a DMatrix<f64>,
}

impl Support for Mapped<'_> {
    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    fn support(&self, v: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let (val, x) = self.set.support(&self.m.tr_mul(v))?;
        Ok((val, self.m * x))
    }

    fn support_value(&self, v: &DVector<f64>) -> Result<f64> {
        self.set.support_value(&self.m.tr_mul(v))
    }
}

impl RcProblem {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        check_dim(n, self.a.ncols())?;
        check_dim(n, self.b.nrows())?;
        check_dim(n, self.f.nrows())?;
        check_dim(self.b.ncols(), self.u.dim())?;
        check_dim(self.f.ncols(), self.w.dim())?;
        check_dim(n, self.s.dim())?;
        check_dim(n, self.t.dim())?;
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        if linalg::rank(&self.a, 1e-12) < n {
            return Err(Error::SingularA);
        }
        Ok(())
    }

    /// Double integrator with step 0.1, `U = [−1, 1]`, `W = 0.4·U`,
    /// `S = [−1, 1]×[−0.5, 0.5]`, `T = [−0.25, 0.25]×[−0.1, 0.1]`, `N = 30`.
    pub fn double_integrator() -> Self {
        let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
        let rect = |l: &[f64], u: &[f64]| -> ConvexSet {
            Polytope::rect(&DVector::from_column_slice(l), &DVector::from_column_slice(u))
                .expect("valid box")
                .into()
        };
        RcProblem {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            f: b.clone(),
            b,
            u: rect(&[-1.0], &[1.0]),
            w: rect(&[-0.4], &[0.4]),
            s: rect(&[-1.0, -0.5], &[1.0, 0.5]),
            t: rect(&[-0.25, -0.1], &[0.25, 0.1]),
            horizon: 30,
        }
    }

    /// Planar relative-orbit dynamics (positions in km, velocities in m/s)
    /// with 30 s zero-order hold, `U = [−0.2, 0.2]²` N, an ellipsoidal
    /// disturbance, a line-of-sight safe cone and a box target, `N = 50`.
    /// Orbit rate and spacecraft mass are illustrative.
    pub fn hcw_synthetic() -> Self {
        let (a, b) = hcw_discrete(0.0011, 500.0, 30.0);
        let w = Ellipsoid::from_generator(
            DMatrix::from_diagonal(&DVector::from_column_slice(&[1e-5, 1e-5, 1e-4, 1e-4])),
            DVector::zeros(4),
        )
        .expect("nonsingular generator");
        // |x₁| ≤ −x₂ ≤ 1, |x₃| ≤ 0.05, |x₄| ≤ 0.05
        let s_a = DMatrix::from_row_slice(
            7,
            4,
            &[
                1.0, 1.0, 0.0, 0.0, //
                -1.0, 1.0, 0.0, 0.0, //
                0.0, -1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, -1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 0.0, -1.0,
            ],
        );
        let s_b = DVector::from_column_slice(&[0.0, 0.0, 1.0, 0.05, 0.05, 0.05, 0.05]);
        let s = Polytope::from_hrep(s_a, s_b).expect("bounded cone section");
        let t = Polytope::rect(
            &DVector::from_column_slice(&[-0.2, -0.2, -0.1, -0.1]),
            &DVector::from_column_slice(&[0.2, 0.0, 0.1, 0.1]),
        )
        .expect("valid box");
        let u = Polytope::rect(&DVector::from_element(2, -0.2), &DVector::from_element(2, 0.2)).expect("valid box");
        RcProblem {
            a,
            b,
            f: DMatrix::identity(4, 4),
            u: u.into(),
            w: w.into(),
            s: s.into(),
            t: t.into(),
            horizon: 50,
        }
    }
}

/// Zero-order-hold discretization of the in-plane relative dynamics with
/// state `[x km, y km, vx m/s, vy m/s]` and thrust input in newtons.
pub fn hcw_discrete(mean_motion: f64, mass: f64, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let w = mean_motion;
    let mut ac = DMatrix::zeros(4, 4);
    ac[(0, 2)] = 1e-3;
    ac[(1, 3)] = 1e-3;
    ac[(2, 0)] = 3.0 * w * w * 1e3;
    ac[(2, 3)] = 2.0 * w;
    ac[(3, 2)] = -2.0 * w;
    let mut bc = DMatrix::zeros(4, 2);
    bc[(2, 0)] = 1.0 / mass;
    bc[(3, 1)] = 1.0 / mass;
    zoh(&ac, &bc, dt)
}

/// `(e^{A dt}, ∫₀^dt e^{A s} ds B)` through the augmented exponential.
pub fn zoh(ac: &DMatrix<f64>, bc: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = ac.nrows();
    let m = bc.ncols();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(ac * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(bc * dt));
    let e = aug.exp();
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
}

fn as_polytope(set: &ConvexSet) -> Result<Polytope> {
    match set {
        ConvexSet::Polytope(p) => Ok(p.clone()),
        ConvexSet::CZonotope(z) => z.to_polytope(),
        ConvexSet::Ellipsoid(_) => Err(Error::UnsupportedOperandPair(
            "ellipsoidal input, safe or target sets need a polytopic approximation first".into(),
        )),
    }
}

/// Interval-hull zonotope intersected with the remaining halfspaces; boxes
/// stay pure zonotopes.
pub fn polytope_to_cz(p: &Polytope) -> Result<ConstrainedZonotope> {
    if p.is_empty() {
        return Ok(ConstrainedZonotope::empty(p.dim()).with_tolerance(*p.tolerance()));
    }
    let (lo, hi) = p.interval_hull()?;
    let bbox = ConstrainedZonotope::rect(&lo, &hi)?.with_tolerance(*p.tolerance());
    bbox.intersect_polytope(p)
}

fn as_cz(set: &ConvexSet) -> Result<ConstrainedZonotope> {
    match set {
        ConvexSet::Polytope(p) => polytope_to_cz(p),
        ConvexSet::CZonotope(z) => Ok(z.clone()),
        ConvexSet::Ellipsoid(_) => Err(Error::UnsupportedOperandPair(
            "ellipsoidal input, safe or target sets need a polytopic approximation first".into(),
        )),
    }
}

/// Backward recursion `K_N = T`, `K_t = S ∩ A⁻¹((K_{t+1} ⊖ FW) ⊕ (−B)U)`.
///
/// `strategy` forces the CZ subtraction strategy; `None` picks it per step.
pub fn rc_set(p: &RcProblem, repr: Repr, strategy: Option<DiffStrategy>) -> Result<RcResult> {
    p.validate()?;
    let n = p.state_dim();
    let horizon = p.horizon;
    let neg_b = -&p.b;
    let mut strategies = vec![None; horizon];
    let sets = match repr {
        Repr::Polytope => {
            let s = as_polytope(&p.s)?;
            let fw = Mapped {
                set: p.w.as_support(),
                m: &p.f,
            };
            let bu = as_polytope(&p.u)?.affine_map(&neg_b, None)?;
            let mut ks = vec![Polytope::empty(n); horizon + 1];
            ks[horizon] = as_polytope(&p.t)?;
            for t in (0..horizon).rev() {
                let next = &ks[t + 1];
                if next.is_empty() {
                    break;
                }
                let shrunk = next.pontryagin_difference(&fw)?;
                let k = if shrunk.is_empty() {
                    Polytope::empty(n)
                } else {
                    s.intersect(&shrunk.minkowski_sum(&bu)?.inverse_affine_map(&p.a)?)?
                };
                ks[t] = k;
            }
            ks.into_iter().map(ConvexSet::Polytope).collect::<Vec<_>>()
        }
        Repr::CZonotope => {
            let fw = cz_disturbance(p)?;
            let bu = as_cz(&p.u)?.affine_map(&neg_b, None)?;
            let mut ks = vec![ConstrainedZonotope::empty(n); horizon + 1];
            ks[horizon] = as_cz(&p.t)?;
            for t in (0..horizon).rev() {
                let next = &ks[t + 1];
                if next.is_empty() {
                    break;
                }
                let chosen = match strategy {
                    Some(s) => s,
                    None => next.default_strategy(&fw)?,
                };
                strategies[t] = Some(chosen);
                let shrunk = next.pontryagin_difference(&fw, chosen)?;
                let k = if shrunk.is_empty() {
                    ConstrainedZonotope::empty(n)
                } else {
                    shrunk
                        .minkowski_sum_cz(&bu)?
                        .inverse_affine_map(&p.a)?
                        .intersect(&p.s)?
                };
                ks[t] = k;
            }
            ks.into_iter().map(ConvexSet::CZonotope).collect::<Vec<_>>()
        }
    };
    Ok(RcResult { repr, sets, strategies })
}

/// `F W` as a zonotope or ellipsoid for the CZ path.
fn cz_disturbance(p: &RcProblem) -> Result<ConvexSet> {
    let n = p.state_dim();
    match &p.w {
        ConvexSet::Ellipsoid(e) if p.f.nrows() == p.f.ncols() && linalg::rank(&p.f, 1e-12) == n => {
            Ok(e.affine_map(&p.f, None)?.into())
        }
        ConvexSet::Ellipsoid(e) => Ok(ConstrainedZonotope::from(e).affine_map(&p.f, None)?.into()),
        other => {
            let z = as_cz(other)?;
            if !z.is_zonotope() {
                return Err(Error::UnsupportedSubtrahend(
                    "the disturbance set must be a zonotope or an ellipsoid".into(),
                ));
            }
            Ok(z.affine_map(&p.f, None)?.into())
        }
    }
}

/// Outcome of [`verify_one_step`].
#[derive(Debug, Clone, Default)]
pub struct OneStepReport {
    pub samples: usize,
    pub violations: Vec<DVector<f64>>,
}

impl OneStepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Corners of the interval hull of `set`.
fn box_corners(set: &dyn Support) -> Result<Vec<DVector<f64>>> {
    let (lo, hi) = interval_hull_of(set)?;
    let n = lo.len();
    let free: Vec<usize> = (0..n).filter(|&i| hi[i] > lo[i]).collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for pattern in 0..(1usize << free.len()) {
        let mut w = lo.clone();
        for (bit, &i) in free.iter().enumerate() {
            if pattern >> bit & 1 == 1 {
                w[i] = hi[i];
            }
        }
        out.push(w);
    }
    Ok(out)
}

/// Sample points of `k`: support vectors along random directions, and
/// points between them and an interior point.
pub fn sample_points(k: &ConvexSet, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    let n = k.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = match k {
        ConvexSet::Polytope(p) => p.interior_point(crate::polytope::InteriorKind::Chebyshev)?,
        ConvexSet::CZonotope(z) => z.interior_point()?,
        ConvexSet::Ellipsoid(e) => e.interior_point(),
    };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let v = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let (_, b) = k.support(&v)?;
        if i % 2 == 0 {
            out.push(b);
        } else {
            let lam: f64 = rng.random();
            out.push(&inner + (b - &inner) * lam);
        }
    }
    Ok(out)
}

/// For sampled `x ∈ K_t`, checks `x ∈ S` and that one input `u ∈ U` sends
/// `A x + B u + F w` into `K_next` for every corner `w` of the interval hull
/// of `W`.
pub fn verify_one_step(
    k_t: &ConvexSet,
    k_next: &ConvexSet,
    p: &RcProblem,
    n_samples: usize,
    seed: u64,
) -> Result<OneStepReport> {
    let tol = Tolerance::default();
    let mut report = OneStepReport::default();
    if k_t.is_empty() {
        return Ok(report);
    }
    if k_next.is_empty() {
        report.samples = 1;
        report.violations.push(sample_points(k_t, 1, seed)?.remove(0));
        return Ok(report);
    }
    let corners = box_corners(&Mapped {
        set: p.w.as_support(),
        m: &DMatrix::identity(p.w.dim(), p.w.dim()),
    })?;
    let u_cd = ConstraintData::for_set(&p.u)?;
    let next_cd = ConstraintData::for_set(k_next)?;
    for x in sample_points(k_t, n_samples, seed)? {
        let ax = &p.a * &x;
        let mut cd = u_cd.clone();
        for w in &corners {
            let d = &ax + &p.f * w;
            cd = cd.and(&next_cd.affine_preimage(&p.b, &d)?)?;
        }
        report.samples += 1;
        if !p.s.contains_point(&x)? || !cd.is_feasible(&tol)? {
            report.violations.push(x);
        }
    }
    Ok(report)
}

/// Scales `k` by `factor` about its interior point.
pub fn inflate(k: &ConvexSet, factor: f64) -> Result<ConvexSet> {
    let n = k.dim();
    let m = DMatrix::<f64>::identity(n, n) * factor;
    Ok(match k {
        ConvexSet::Polytope(p) => {
            let c = p.interior_point(crate::polytope::InteriorKind::Chebyshev)?;
            p.affine_map(&m, Some(&(&c * (1.0 - factor))))?.into()
        }
        ConvexSet::CZonotope(z) => {
            let c = z.interior_point()?;
            z.affine_map(&m, Some(&(&c * (1.0 - factor))))?.into()
        }
        ConvexSet::Ellipsoid(e) => {
            let c = e.center().clone();
            e.affine_map(&m, Some(&(&c * (1.0 - factor))))?.into()
        }
    })
}

#[derive(Debug, Clone)]
pub struct TrajProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub x0: DVector<f64>,
    pub horizon: usize,
    pub u: ConvexSet,
    /// Zero-based state coordinates holding the position.
    pub position_dims: Vec<usize>,
    /// `(time index in 1..=N, position)`.
    pub waypoints: Vec<(usize, DVector<f64>)>,
}

impl TrajProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        check_dim(n, self.a.ncols())?;
        check_dim(n, self.b.nrows())?;
        check_dim(n, self.x0.len())?;
        check_dim(self.b.ncols(), self.u.dim())?;
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        crate::polytope::kept_dims(n, &self.position_dims)?;
        for (t, z) in &self.waypoints {
            if *t == 0 || *t > self.horizon {
                return Err(Error::InvalidInput(format!("waypoint index {t} outside 1..={}", self.horizon)));
            }
            check_dim(self.position_dims.len(), z.len())?;
        }
        Ok(())
    }

    /// Planar double integrator with state `[px, py, vx, vy]`.
    pub fn planar_double_integrator(
        dt: f64,
        x0: DVector<f64>,
        horizon: usize,
        u: ConvexSet,
        waypoints: Vec<(usize, DVector<f64>)>,
    ) -> Self {
        let mut a = DMatrix::identity(4, 4);
        a[(0, 2)] = dt;
        a[(1, 3)] = dt;
        let mut b = DMatrix::zeros(4, 2);
        b[(0, 0)] = 0.5 * dt * dt;
        b[(1, 1)] = 0.5 * dt * dt;
        b[(2, 0)] = dt;
        b[(3, 1)] = dt;
        TrajProblem {
            a,
            b,
            x0,
            horizon,
            u,
            position_dims: vec![0, 1],
            waypoints,
        }
    }

    /// Example with step 0.5, `N = 10`, `U = [−1, 1]²`, `x₀ = 0` and
    /// waypoints at steps 2, 4, 6 and 9 taken from a nominal input sequence.
    pub fn example() -> Self {
        let u: ConvexSet = Polytope::rect(&DVector::from_element(2, -1.0), &DVector::from_element(2, 1.0))
            .expect("valid box")
            .into();
        let mut p = TrajProblem::planar_double_integrator(0.5, DVector::zeros(4), 10, u, Vec::new());
        let nominal = |t: usize| -> DVector<f64> {
            let s = t as f64;
            DVector::from_column_slice(&[0.3 * (0.6 * s).cos(), 0.25 * (0.4 * s).sin()])
        };
        let xs = p.simulate(&(0..10).map(nominal).collect::<Vec<_>>());
        p.waypoints = [2usize, 4, 6, 9]
            .iter()
            .map(|&t| (t, DVector::from_column_slice(&[xs[t][0], xs[t][1]])))
            .collect();
        p
    }

    /// States `x_0, …, x_N` under the given inputs.
    pub fn simulate(&self, inputs: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut xs = vec![self.x0.clone()];
        for u in inputs {
            let x = &self.a * xs.last().expect("nonempty") + &self.b * u;
            xs.push(x);
        }
        xs
    }

    /// `(M, v)` with `[x_1; …; x_N] = M [u_0; …; u_{N−1}] + v`.
    pub fn stacked_dynamics(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.a.nrows();
        let m = self.b.ncols();
        let big_n = self.horizon;
        let mut powers = vec![DMatrix::<f64>::identity(n, n)];
        for _ in 0..big_n {
            let next = &self.a * powers.last().expect("nonempty");
            powers.push(next);
        }
        let mut mm = DMatrix::zeros(n * big_n, m * big_n);
        let mut v = DVector::zeros(n * big_n);
        for t in 1..=big_n {
            v.rows_mut((t - 1) * n, n).copy_from(&(&powers[t] * &self.x0));
            for s in 0..t {
                let blk = &powers[t - 1 - s] * &self.b;
                mm.view_mut(((t - 1) * n, s * m), (n, m)).copy_from(&blk);
            }
        }
        (mm, v)
    }
}

/// Admissible trajectory set: `U^N` mapped through the stacked dynamics and
/// sliced at the waypoints.
pub fn forward_trajectory_set(p: &TrajProblem) -> Result<ConstrainedZonotope> {
    p.validate()?;
    let n = p.a.nrows();
    let u = as_cz(&p.u)?;
    let (m, v) = p.stacked_dynamics();
    let reach = u.cartesian_power(p.horizon)?.affine_map(&m, Some(&v))?;
    let mut dims = Vec::new();
    let mut values = Vec::new();
    for (t, z) in &p.waypoints {
        for (k, &d) in p.position_dims.iter().enumerate() {
            dims.push((t - 1) * n + d);
            values.push(z[k]);
        }
    }
    if dims.is_empty() {
        return Ok(reach);
    }
    let sliced = reach.slice_at(&dims, &values)?;
    if sliced.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(sliced)
}

/// Splits a stacked trajectory into `x_1, …, x_N`.
pub fn unstack(x: &DVector<f64>, n: usize) -> Vec<DVector<f64>> {
    (0..x.len() / n).map(|t| x.rows(t * n, n).into_owned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn rect(l: &[f64], u: &[f64]) -> ConvexSet {
        Polytope::rect(&DVector::from_column_slice(l), &DVector::from_column_slice(u))
            .unwrap()
            .into()
    }

    fn toy() -> RcProblem {
        let id = DMatrix::identity(2, 2);
        RcProblem {
            a: id.clone(),
            b: id.clone(),
            f: id,
            u: rect(&[-0.5, -0.5], &[0.5, 0.5]),
            w: rect(&[-0.2, -0.2], &[0.2, 0.2]),
            s: rect(&[-1.0, -1.0], &[1.0, 1.0]),
            t: rect(&[-1.0, -1.0], &[1.0, 1.0]),
            horizon: 1,
        }
    }

    #[test]
    fn one_step_box() {
        let p = toy();
        for repr in [Repr::Polytope, Repr::CZonotope] {
            let r = rc_set(&p, repr, None).unwrap();
            assert!(r.k0().set_eq(&p.s).unwrap(), "{}", repr.as_str());
        }
        let r = rc_set(&p, Repr::Polytope, None).unwrap();
        assert!(verify_one_step(&r.sets[0], &r.sets[1], &p, 40, 1).unwrap().passed());
        let big = inflate(&r.sets[0], 1.1).unwrap();
        assert!(!verify_one_step(&big, &r.sets[1], &p, 40, 1).unwrap().passed());

        // S no longer binding: K_0 = [−1.3, 1.3]²
        let mut p = p;
        p.s = rect(&[-2.0, -2.0], &[2.0, 2.0]);
        let r = rc_set(&p, Repr::Polytope, None).unwrap();
        assert!(r.k0().set_eq(&rect(&[-1.3, -1.3], &[1.3, 1.3])).unwrap());
        let big = inflate(&r.sets[0], 1.1).unwrap();
        assert!(!verify_one_step(&big, &r.sets[1], &p, 40, 1).unwrap().passed());
    }

    #[test]
    fn collapsed_recursion() {
        let mut p = toy();
        p.u = rect(&[0.0, 0.0], &[0.0, 0.0]);
        p.w = rect(&[0.0, 0.0], &[0.0, 0.0]);
        p.t = rect(&[-0.5, -2.0], &[0.5, 2.0]);
        let expect = rect(&[-0.5, -1.0], &[0.5, 1.0]);
        for repr in [Repr::Polytope, Repr::CZonotope] {
            assert!(rc_set(&p, repr, None).unwrap().k0().set_eq(&expect).unwrap());
        }
    }

    #[test]
    fn singular_dynamics() {
        let mut p = toy();
        p.a = dmatrix![1.0, 0.0; 0.0, 0.0];
        assert_eq!(rc_set(&p, Repr::Polytope, None).unwrap_err(), Error::SingularA);
    }

    #[test]
    fn hcw_matrices() {
        let (a, b) = hcw_discrete(0.0011, 500.0, 30.0);
        assert!((a[(0, 2)] - 0.03).abs() < 1e-4);
        assert!((b[(2, 0)] - 0.06).abs() < 1e-4);
        assert!(a.determinant().abs() > 0.5);
    }

    #[test]
    fn trajectory_sets() {
        let u0 = ConstrainedZonotope::singleton(&dvector![0.0, 0.0]).unwrap().into();
        let p = TrajProblem::planar_double_integrator(0.5, dvector![1.0, 0.0, 0.5, 0.0], 3, u0, vec![]);
        let d = forward_trajectory_set(&p).unwrap();
        let xs = p.simulate(&[dvector![0.0, 0.0], dvector![0.0, 0.0], dvector![0.0, 0.0]]);
        let stacked = DVector::from_iterator(12, xs[1..].iter().flat_map(|x| x.iter().copied().collect::<Vec<_>>()));
        assert!(d.contains_point(&stacked).unwrap());
        assert!((d.support_value(&DVector::from_element(12, 1.0)).unwrap() - stacked.sum()).abs() < 1e-9);

        let ex = TrajProblem::example();
        let d = forward_trajectory_set(&ex).unwrap();
        assert!(!d.is_empty());
    }

    #[test]
    fn trivial_trajectory_and_audit() {
        let p = TrajProblem {
            a: DMatrix::identity(2, 2),
            b: DMatrix::identity(2, 2),
            x0: DVector::zeros(2),
            horizon: 1,
            u: rect(&[-1.0, -1.0], &[1.0, 1.0]),
            position_dims: vec![0, 1],
            waypoints: vec![],
        };
        let d: ConvexSet = forward_trajectory_set(&p).unwrap().into();
        assert!(d.set_eq(&p.u).unwrap());
        let mut bad = p.clone();
        bad.waypoints = vec![(1, dvector![3.0, 0.0])];
        assert_eq!(forward_trajectory_set(&bad).unwrap_err(), Error::EmptySet);

        let mut q = toy();
        q.w = rect(&[0.0, 0.0], &[0.0, 0.0]);
        q.t = rect(&[-2.0, -2.0], &[2.0, 2.0]);
        let k = rect(&[-1.0, -1.0], &[1.0, 1.0]);
        assert!(verify_one_step(&k, &q.t, &q, 30, 3).unwrap().passed());
    }

    #[test]
    fn larger_inputs_never_shrink() {
        let mut p = RcProblem::double_integrator();
        p.horizon = 5;
        let mut wide = p.clone();
        wide.u = rect(&[-1.2], &[1.2]);
        for repr in [Repr::Polytope, Repr::CZonotope] {
            let k = rc_set(&p, repr, None).unwrap();
            let kw = rc_set(&wide, repr, None).unwrap();
            assert!(kw.k0().contains_set(k.k0()).unwrap());
        }
    }
}
