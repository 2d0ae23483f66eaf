mod common;

use common::*;
use convexset::reach::sample_points;
use convexset::{ConstrainedZonotope, ConvexSet, DiffStrategy, Polytope};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_zonotope(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ConstrainedZonotope {
    let z = random_zonotope(rng, n);
    z.affine_map(&(DMatrix::identity(n, n) * scale), None).unwrap()
}

fn corners(z: &ConstrainedZonotope) -> Vec<nalgebra::DVector<f64>> {
    let p = z.to_polytope().unwrap();
    let (lo, hi) = p.interval_hull().unwrap();
    let n = lo.len();
    (0..1usize << n)
        .map(|k| nalgebra::DVector::from_fn(n, |i, _| if k >> i & 1 == 1 { hi[i] } else { lo[i] }))
        .collect()
}

fn vertices(z: &ConstrainedZonotope) -> Vec<nalgebra::DVector<f64>> {
    let v = z.to_polytope().unwrap().vertices().unwrap().clone();
    (0..v.nrows()).map(|i| v.row(i).transpose()).collect()
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn lifting_round_trip(seed in any::<u64>(), three in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = if three { 3 } else { 2 };
        let p = random_polytope(&mut rng, n);
        let z = ConstrainedZonotope::from_polytope(&p).unwrap();
        prop_assert_eq!(z.latent_dim(), n + p.hrep().unwrap().a.nrows());
        prop_assert!(z.vertex_polytope().unwrap().set_eq(&p).unwrap());
    }

    #[test]
    fn closed_forms_match_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_cz(&mut rng, 2);
        let y = random_cz(&mut rng, 2);
        let (px, py) = (x.to_polytope().unwrap(), y.to_polytope().unwrap());
        let m = random_matrix(&mut rng, 2, 2);
        let pairs: Vec<(ConvexSet, Polytope)> = vec![
            (x.affine_map(&m, None).unwrap().into(), px.affine_map(&m, None).unwrap()),
            (x.minkowski_sum_cz(&y).unwrap().into(), px.minkowski_sum(&py).unwrap()),
        ];
        for (ours, oracle) in pairs {
            prop_assert!(ours.set_eq(&oracle.into()).unwrap());
        }
        // generalized intersection {x ∈ X : R x ∈ Y}
        let r = random_invertible(&mut rng, 2);
        let gi = x.intersect_cz_with_map(&r, &y).unwrap();
        let oracle = px.intersect_inverse_affine(&r, &py).unwrap();
        prop_assert_eq!(gi.is_empty(), oracle.is_empty());
        if !oracle.is_empty() {
            prop_assert!(ConvexSet::from(gi).set_eq(&oracle.into()).unwrap());
        }
    }

    #[test]
    fn differences_are_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_cz(&mut rng, 2);
        let s = small_zonotope(&mut rng, 2, 0.2);
        let half = random_vector(&mut rng, 2, 0.15).abs();
        let b = ConstrainedZonotope::rect_center(&random_vector(&mut rng, 2, 0.1), &half).unwrap();
        // box subtrahend: interval-hull corners; general zonotope: its own vertices
        let cases = [(b.clone(), corners(&b)), (s.clone(), vertices(&s))];
        for (sub, ws) in cases {
            for strategy in [DiffStrategy::ExactRecursive, DiffStrategy::ScaledInner] {
                let d = z.pontryagin_difference(&sub.clone().into(), strategy).unwrap();
                if d.is_empty() {
                    continue;
                }
                for x in sample_points(&d.into(), 100, seed).unwrap() {
                    for w in &ws {
                        prop_assert!(z.contains_point(&(&x + w)).unwrap(), "{}", strategy);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_matches_tightening_and_bounds_scaled(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polytope(&mut rng, 2);
        let s = small_zonotope(&mut rng, 2, 0.15);
        let z = ConstrainedZonotope::from_polytope(&p).unwrap();
        let exact = z.pontryagin_difference(&s.clone().into(), DiffStrategy::ExactRecursive).unwrap();
        let scaled = z.pontryagin_difference(&s.clone().into(), DiffStrategy::ScaledInner).unwrap();
        let tightened = p.pontryagin_difference(&s).unwrap();
        prop_assert_eq!(exact.is_empty(), tightened.is_empty());
        if tightened.is_empty() {
            prop_assert!(scaled.is_empty());
            return Ok(());
        }
        let exact: ConvexSet = exact.into();
        prop_assert!(exact.set_eq(&tightened.into()).unwrap());
        if !scaled.is_empty() {
            prop_assert!(exact.contains_set(&scaled.into()).unwrap());
        }
    }
}
