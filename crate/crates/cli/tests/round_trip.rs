use convexset::{ConstrainedZonotope, ConvexSet, Ellipsoid, Polytope};
use convexset_cli::document::{SetBody, SetDocument};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Floats with awkward decimal expansions across many binades.
fn nasty(rng: &mut ChaCha8Rng) -> f64 {
    let mant: f64 = rng.random_range(-1.0..1.0);
    mant * 10f64.powi(rng.random_range(-30..30))
}

fn bits(doc: &SetDocument) -> Vec<u64> {
    let rows = |r: &Option<Vec<Vec<f64>>>| r.iter().flatten().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    let vec = |v: &Option<Vec<f64>>| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
    match &doc.body {
        SetBody::Polytope { v, a, b, ae, be, .. } => [rows(v), rows(a), vec(b), rows(ae), vec(be)].concat(),
        SetBody::Czonotope { g, c, ae, be } => [
            rows(&Some(g.clone())),
            vec(&Some(c.clone())),
            rows(&Some(ae.clone())),
            vec(&Some(be.clone())),
        ]
        .concat(),
        SetBody::Ellipsoid { q, g, c } => [rows(q), rows(g), vec(&Some(c.clone()))].concat(),
    }
}

fn check(set: ConvexSet) {
    let doc = SetDocument::from_set(&set).unwrap().named("x");
    let back = SetDocument::from_json(&doc.to_json()).unwrap();
    assert_eq!(bits(&back), bits(&doc));
    assert_eq!(back, doc);
    // and once more through the set itself
    let again = SetDocument::from_set(&back.to_set().unwrap()).unwrap().named("x");
    assert_eq!(bits(&again), bits(&doc));
}

#[test]
fn all_three_types_round_trip_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let n = rng.random_range(1..4);
        let m = rng.random_range(n + 1..n + 6);
        let pts = DMatrix::from_fn(m, n, |_, _| nasty(&mut rng));
        check(Polytope::from_vertices(pts).unwrap().into());
        let k = rng.random_range(1..6);
        let g = DMatrix::from_fn(n, k, |_, _| nasty(&mut rng));
        let c = DVector::from_fn(n, |_, _| nasty(&mut rng));
        let ae = DMatrix::from_fn(1, k, |_, _| nasty(&mut rng));
        check(ConstrainedZonotope::new(g, c.clone(), ae, DVector::zeros(1)).unwrap().into());
        let l = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + rng.random::<f64>() } else { 0.3 * rng.random::<f64>() });
        check(Ellipsoid::new(&l * l.transpose(), c).unwrap().into());
    }
}

#[test]
fn hrep_polytopes_keep_their_inequalities() {
    let p = Polytope::rect(&DVector::from_element(2, -0.1), &DVector::from_element(2, 0.7)).unwrap();
    let doc = SetDocument::from_set(&p.into()).unwrap();
    let SetBody::Polytope { v: None, a: Some(a), .. } = &doc.body else { panic!("{doc:?}") };
    assert_eq!(a.len(), 4);
    check(doc.to_set().unwrap());
}
