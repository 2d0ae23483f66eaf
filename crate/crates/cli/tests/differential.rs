//! Expressions against the same operations called directly.

use std::collections::BTreeMap;

use convexset::set::Support;
use convexset::{ConstrainedZonotope, ConvexSet, Ellipsoid, Polytope, Tolerance};
use convexset_cli::document::{Binding, EnvDocument, SetDocument};
use convexset_cli::document::rows_of;
use convexset_cli::expr::{eval_str, Env, Value};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Debug)]
enum Class {
    P,
    Z,
    E,
}

/// A generated expression: its text, binding strength and direct value.
struct Node {
    text: String,
    prec: u8,
    class: Class,
    value: ConvexSet,
}

const ADD: u8 = 2;
const MUL: u8 = 3;
const UNARY: u8 = 4;
const POW: u8 = 5;
const ATOM: u8 = 6;

fn wrap(n: &Node, at_least: u8) -> String {
    if n.prec >= at_least {
        n.text.clone()
    } else {
        format!("({})", n.text)
    }
}

struct World {
    env: Env,
    sets: BTreeMap<&'static str, (Class, ConvexSet)>,
    maps: Vec<(&'static str, DMatrix<f64>)>,
    shifts: Vec<(&'static str, DVector<f64>)>,
}

fn rotation(t: f64, s: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[t.cos() * s, -t.sin() * s, t.sin() * s, t.cos() * s])
}

/// Sets containing a disc of radius 0.8 about the origin, plus small
/// subtrahends; bound through the JSON environment path.
fn world(rng: &mut ChaCha8Rng) -> World {
    let mut docs = BTreeMap::new();
    let ring = |rng: &mut ChaCha8Rng, k: usize| {
        let phase: f64 = rng.random_range(0.0..1.0);
        DMatrix::from_fn(k, 2, |i, j| {
            let t = std::f64::consts::TAU * (i as f64 + phase) / k as f64;
            let r = 1.2 + 0.3 * ((i * 7 + 3) % 5) as f64 / 5.0;
            if j == 0 { r * t.cos() } else { r * t.sin() }
        })
    };
    let p0 = Polytope::from_vertices(ring(rng, 5)).unwrap();
    let p1 = Polytope::from_vertices(ring(rng, 7)).unwrap();
    let z0 = ConstrainedZonotope::from_polytope(&Polytope::from_vertices(ring(rng, 4)).unwrap()).unwrap();
    let z1 = ConstrainedZonotope::zonotope(
        DMatrix::from_row_slice(2, 3, &[1.0, 0.3, 0.2, 0.1, 1.0, -0.4]),
        DVector::zeros(2),
    )
    .unwrap();
    let e0 = Ellipsoid::new(DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.1, 0.9]), DVector::zeros(2)).unwrap();
    let s0 = ConstrainedZonotope::zonotope(DMatrix::from_row_slice(2, 2, &[0.08, 0.02, -0.03, 0.07]), DVector::zeros(2)).unwrap();
    let f0 = Ellipsoid::ball(DVector::zeros(2), 0.1).unwrap();
    let sets: Vec<(&'static str, ConvexSet)> = vec![
        ("P0", p0.into()),
        ("P1", p1.into()),
        ("Z0", z0.into()),
        ("Z1", z1.into()),
        ("E0", e0.into()),
        ("S0", s0.into()),
        ("F0", f0.into()),
    ];
    for (name, s) in &sets {
        docs.insert(name.to_string(), Binding::Set(SetDocument::from_set(s).unwrap()));
    }
    let maps = vec![("M0", rotation(rng.random_range(-1.0..1.0), 1.0)), ("M1", rotation(0.3, 0.9))];
    let shifts = vec![
        ("v0", DVector::from_column_slice(&[0.1, -0.05])),
        ("v1", DVector::from_column_slice(&[-0.07, 0.02])),
    ];
    for (name, m) in &maps {
        docs.insert(name.to_string(), Binding::Matrix(rows_of(m)));
    }
    for (name, v) in &shifts {
        docs.insert(name.to_string(), Binding::Vector(v.iter().copied().collect()));
    }
    let text = serde_json::to_string(&EnvDocument { format_version: 1, bindings: docs.clone() }).unwrap();
    let env = Env::from_document(&EnvDocument::from_json(&text).unwrap(), &Tolerance::default()).unwrap();
    // direct operands come from the same documents
    let mut direct = BTreeMap::new();
    for (name, s) in sets {
        let Binding::Set(d) = &docs[name] else { unreachable!() };
        let class = match s {
            ConvexSet::Polytope(_) => Class::P,
            ConvexSet::CZonotope(_) => Class::Z,
            ConvexSet::Ellipsoid(_) => Class::E,
        };
        direct.insert(name, (class, d.to_set().unwrap()));
    }
    World { env, sets: direct, maps, shifts }
}

fn leaf(w: &World, name: &'static str) -> Node {
    let (class, value) = w.sets[name].clone();
    Node { text: name.into(), prec: ATOM, class, value }
}

fn translate(s: &ConvexSet, v: &DVector<f64>) -> ConvexSet {
    match s {
        ConvexSet::Polytope(p) => p.translate(v).unwrap().into(),
        ConvexSet::CZonotope(z) => z.translate(v).unwrap().into(),
        ConvexSet::Ellipsoid(e) => e.translate(v).unwrap().into(),
    }
}

fn gen(w: &World, rng: &mut ChaCha8Rng, depth: usize) -> Node {
    const BASE: [&str; 5] = ["P0", "P1", "Z0", "Z1", "E0"];
    if depth == 0 || rng.random_bool(0.2) {
        return leaf(w, BASE[rng.random_range(0..BASE.len())]);
    }
    let x = gen(w, rng, depth - 1);
    match rng.random_range(0..7) {
        0 => {
            let (name, m) = &w.maps[rng.random_range(0..w.maps.len())];
            let value = match &x.value {
                ConvexSet::Polytope(p) => p.affine_map(m, None).unwrap().into(),
                ConvexSet::CZonotope(z) => z.affine_map(m, None).unwrap().into(),
                ConvexSet::Ellipsoid(e) => e.affine_map(m, None).unwrap().into(),
            };
            let op = if rng.random_bool(0.5) { "@" } else { "*" };
            Node { text: format!("{name} {op} {}", wrap(&x, UNARY)), prec: MUL, class: x.class, value }
        }
        1 => {
            let (name, m) = &w.maps[rng.random_range(0..w.maps.len())];
            let value = match &x.value {
                ConvexSet::Polytope(p) => p.inverse_affine_map(m).unwrap().into(),
                ConvexSet::CZonotope(z) => z.inverse_affine_map(m).unwrap().into(),
                ConvexSet::Ellipsoid(e) => e.inverse_affine_map(m).unwrap().into(),
            };
            Node { text: format!("{} @ {name}", wrap(&x, MUL)), prec: MUL, class: x.class, value }
        }
        2 => {
            let (name, v) = &w.shifts[rng.random_range(0..w.shifts.len())];
            let minus = rng.random_bool(0.5);
            let value = translate(&x.value, &if minus { -v } else { v.clone() });
            let op = if minus { "-" } else { "+" };
            Node { text: format!("{} {op} {name}", wrap(&x, ADD)), prec: ADD, class: x.class, value }
        }
        3 if x.class != Class::E => {
            let y = gen(w, rng, depth - 1);
            if y.class == Class::E {
                return x;
            }
            let (class, value) = match (&x.value, &y.value) {
                (ConvexSet::Polytope(a), ConvexSet::Polytope(b)) => (Class::P, a.minkowski_sum(b).unwrap().into()),
                (ConvexSet::CZonotope(a), b) => (Class::Z, a.minkowski_sum(b).unwrap().into()),
                (ConvexSet::Polytope(a), ConvexSet::CZonotope(b)) => {
                    (Class::Z, ConstrainedZonotope::from_polytope(a).unwrap().minkowski_sum_cz(b).unwrap().into())
                }
                _ => unreachable!(),
            };
            Node { text: format!("{} + {}", wrap(&x, ADD), wrap(&y, MUL)), prec: ADD, class, value }
        }
        4 if x.class != Class::E => {
            let sub = if rng.random_bool(0.5) { "S0" } else { "F0" };
            let s = &w.sets[sub].1;
            let value = match &x.value {
                ConvexSet::Polytope(p) => p.pontryagin_difference(s.as_support()).unwrap().into(),
                ConvexSet::CZonotope(z) => z.pontryagin_difference_auto(s).unwrap().0.into(),
                _ => unreachable!(),
            };
            Node { text: format!("{} - {sub}", wrap(&x, ADD)), prec: ADD, class: x.class, value }
        }
        5 if x.class != Class::E => {
            let y = gen(w, rng, depth - 1);
            if y.class == Class::E {
                return x;
            }
            let (class, value) = match (&x.value, &y.value) {
                (ConvexSet::Polytope(a), ConvexSet::Polytope(b)) => (Class::P, a.intersect(b).unwrap().into()),
                (ConvexSet::CZonotope(a), b) => (Class::Z, a.intersect(b).unwrap().into()),
                (ConvexSet::Polytope(a), ConvexSet::CZonotope(b)) => {
                    (Class::Z, ConstrainedZonotope::from_polytope(a).unwrap().intersect_cz(b).unwrap().into())
                }
                _ => unreachable!(),
            };
            Node { text: format!("intersect({}, {})", x.text, y.text), prec: ATOM, class, value }
        }
        _ => {
            let m = -DMatrix::<f64>::identity(2, 2);
            let value = match &x.value {
                ConvexSet::Polytope(p) => p.affine_map(&m, None).unwrap().into(),
                ConvexSet::CZonotope(z) => z.affine_map(&m, None).unwrap().into(),
                ConvexSet::Ellipsoid(e) => e.affine_map(&m, None).unwrap().into(),
            };
            Node { text: format!("-{}", wrap(&x, UNARY)), prec: UNARY, class: x.class, value }
        }
    }
}

#[test]
fn fifty_random_trees_match_direct_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ff);
    let w = world(&mut rng);
    let mut kinds = BTreeMap::new();
    for case in 0..50 {
        let mut node = gen(&w, &mut rng, 3);
        let roll = rng.random_range(0..10);
        if roll == 0 && node.class == Class::P {
            let ConvexSet::Polytope(p) = &node.value else { unreachable!() };
            node = Node {
                text: format!("{} ** 2", wrap(&node, ATOM)),
                prec: POW,
                class: Class::P,
                value: p.cartesian_power(2).unwrap().into(),
            };
        }
        let got = eval_str(&node.text, &w.env).unwrap_or_else(|e| panic!("case {case}: {}: {e}", node.text));
        let Value::Set(s) = got else { panic!("case {case}: {} gave {}", node.text, got.kind()) };
        assert_eq!(s.class_name(), node.value.class_name(), "case {case}: {}", node.text);
        assert_eq!(s.is_empty(), node.value.is_empty());
        assert!(s.set_eq(&node.value).unwrap(), "case {case}: {}", node.text);
        if roll == 1 {
            // the same pair through a comparison
            let text = format!("{} == ({})", wrap(&node, ADD), node.text);
            assert!(matches!(eval_str(&text, &w.env).unwrap(), Value::Bool(true)), "{text}");
            let lhs = leaf(&w, "P0");
            let text = format!("P0 <= {}", wrap(&node, ADD));
            let want = node.value.contains_set(&lhs.value).unwrap();
            assert!(matches!(eval_str(&text, &w.env).unwrap(), Value::Bool(b) if b == want), "{text}");
        }
        *kinds.entry(s.class_name()).or_insert(0) += 1;
    }
    assert_eq!(kinds.len(), 3, "{kinds:?}");
}
