mod common;

use common::*;
use convexset::approx::{inner_polytope, outer_polytope, DirectionSet};
use convexset::set::Support;
use convexset::{ConvexSet, Ellipsoid, Polytope};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn boundary(e: &Ellipsoid, k: usize) -> Vec<DVector<f64>> {
    (0..k)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / k as f64;
            e.center() + e.generator() * DVector::from_column_slice(&[t.cos(), t.sin()])
        })
        .collect()
}

/// Largest quadratic-form value of `inner`'s boundary under `outer`.
fn worst_form(outer: &Ellipsoid, inner: &Ellipsoid, k: usize) -> f64 {
    boundary(inner, k)
        .iter()
        .map(|x| {
            let d = x - outer.center();
            d.dot(&(outer.shape() * &d))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn support_exceeds_center_value(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 2) as usize;
        let e = random_ellipsoid(&mut rng, n);
        for _ in 0..10 {
            let v = random_direction(&mut rng, n);
            prop_assert!(e.support_value(&v).unwrap() > e.center().dot(&v));
        }
    }

    #[test]
    fn containment_matches_sampling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_ellipsoid(&mut rng, 2);
        let b = random_ellipsoid(&mut rng, 2);
        let b = b.affine_map(&(DMatrix::identity(2, 2) * 0.6), None).unwrap();
        let dense = worst_form(&a, &b, 20_000);
        prop_assume!((dense - 1.0).abs() > 1e-3);
        let sampled = worst_form(&a, &b, 500) <= 1.0 + 1e-9;
        prop_assert_eq!(a.contains_set(&ConvexSet::from(b)).unwrap(), sampled);
    }

    #[test]
    fn volume_scales_with_determinant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 2) as usize;
        let e = random_ellipsoid(&mut rng, n);
        let m = random_invertible(&mut rng, n);
        let lhs = e.affine_map(&m, None).unwrap().volume();
        prop_assert!(close(lhs, m.determinant().abs() * e.volume(), 1e-10));
    }

    #[test]
    fn approximations_sandwich_the_set(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 2) as usize;
        let x: ConvexSet = match seed % 3 {
            0 => random_polytope(&mut rng, n).into(),
            1 => random_cz(&mut rng, n).into(),
            _ => random_ellipsoid(&mut rng, n).into(),
        };
        let dirs = DirectionSet::spread(n, 4);
        let inner = inner_polytope(x.as_support(), &dirs).unwrap();
        let outer = outer_polytope(x.as_support(), &dirs).unwrap();
        for _ in 0..100 {
            let v = random_direction(&mut rng, n);
            let h = x.support_value(&v).unwrap();
            prop_assert!(inner.support_value(&v).unwrap() <= h + 1e-8);
            prop_assert!(outer.support_value(&v).unwrap() >= h - 1e-8);
        }
    }
}

/// For `P ⊆ Q`, the largest distance from a vertex of `Q` to `P`.
fn hausdorff(inner: &Polytope, outer: &Polytope) -> f64 {
    let v = outer.vertices().unwrap();
    (0..v.nrows())
        .map(|i| inner.project_point(&v.row(i).transpose(), convexset::Norm::Two).unwrap().1)
        .fold(0.0, f64::max)
}

#[test]
fn gap_shrinks_with_more_directions() {
    for n in [2usize, 3] {
        let ball = Ellipsoid::ball(DVector::zeros(n), 1.0).unwrap();
        let mut last = f64::INFINITY;
        for d in [0usize, 1, 5, 20] {
            let dirs = DirectionSet::spread(n, d);
            let gap = hausdorff(&inner_polytope(&ball, &dirs).unwrap(), &outer_polytope(&ball, &dirs).unwrap());
            assert!(gap < last, "n = {n}, D = {d}: {gap} not below {last}");
            last = gap;
        }
    }
}

#[test]
fn rect_with_axes_is_exact() {
    let r = convexset::ConstrainedZonotope::rect(&DVector::from_element(3, -1.0), &DVector::from_element(3, 2.0)).unwrap();
    let o = outer_polytope(&r, &DirectionSet::axes(3)).unwrap();
    let p = Polytope::rect(&DVector::from_element(3, -1.0), &DVector::from_element(3, 2.0)).unwrap();
    assert!(o.set_eq(&p).unwrap());
}
