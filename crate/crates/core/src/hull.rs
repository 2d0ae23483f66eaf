//! Convex hulls of point clouds in any small dimension.
//!
//! Points are first reduced to their affine hull. Full-dimensional clouds are
//! processed by quickhull on simplicial facets; coplanar simplicial facets are
//! merged afterwards by refitting each facet to all points tight on it. When
//! the combinatorial pass trips on near-degenerate input the cloud is joggled
//! deterministically and the pass retried, while normals, offsets and vertex
//! tests always use the original coordinates.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, AffineHull};

/// Facet `normalᵀx ≤ offset` with unit normal.
#[derive(Debug, Clone)]
pub struct Facet {
    pub normal: DVector<f64>,
    pub offset: f64,
    /// Indices of input points lying on the facet.
    pub points: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Hull {
    /// Dimension of the affine hull of the input.
    pub dim: usize,
    /// Indices of the input points that are vertices, increasing.
    pub vertices: Vec<usize>,
    /// Facets in ambient coordinates.
    pub facets: Vec<Facet>,
    /// Rows `A_e x = b_e` describing the affine hull (empty when full-dimensional).
    pub eq_a: DMatrix<f64>,
    pub eq_b: DVector<f64>,
}

/// Convex hull of the rows of `points`.
pub fn convex_hull(points: &DMatrix<f64>) -> Result<Hull> {
    let (m, n) = points.shape();
    if m == 0 {
        return Err(Error::EmptySet);
    }
    let scale = points.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let aff = linalg::affine_hull(points, 1e-10);
    let r = aff.dim();
    let eq_a = aff.complement.transpose();
    let eq_b = &eq_a * &aff.origin;
    let local: Vec<Vec<f64>> = (0..m)
        .map(|i| aff.to_local(&points.row(i).transpose()).as_slice().to_vec())
        .collect();

    let (vertices, local_facets) = match r {
        0 => (vec![0], Vec::new()),
        1 => hull_1d(&local),
        _ => hull_nd(&local, r, scale)?,
    };
    let facets = local_facets
        .into_iter()
        .map(|(nl, h, pts)| to_ambient(&aff, &nl, h, pts))
        .collect();
    let _ = n;
    Ok(Hull {
        dim: r,
        vertices,
        facets,
        eq_a,
        eq_b,
    })
}

fn to_ambient(aff: &AffineHull, nl: &[f64], h: f64, points: Vec<usize>) -> Facet {
    let nl = DVector::from_column_slice(nl);
    let normal = &aff.basis * nl;
    let offset = h + normal.dot(&aff.origin);
    Facet {
        normal,
        offset,
        points,
    }
}

type LocalFacet = (Vec<f64>, f64, Vec<usize>);

fn hull_1d(local: &[Vec<f64>]) -> (Vec<usize>, Vec<LocalFacet>) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, p) in local.iter().enumerate() {
        if p[0] < local[lo][0] {
            lo = i;
        }
        if p[0] > local[hi][0] {
            hi = i;
        }
    }
    let (a, b) = (local[lo][0], local[hi][0]);
    let tight = 1e-10 * a.abs().max(b.abs()).max(b - a);
    let on = |v: f64| -> Vec<usize> {
        (0..local.len())
            .filter(|&i| (local[i][0] - v).abs() <= tight)
            .collect()
    };
    let mut vertices = vec![lo, hi];
    vertices.sort_unstable();
    vertices.dedup();
    let facets = vec![(vec![-1.0], -a, on(a)), (vec![1.0], b, on(b))];
    (vertices, facets)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Unit normal of the hyperplane through `pts`, or `None` if they do not span
/// one. Sign is arbitrary.
fn hyperplane_normal(pts: &[&[f64]], r: usize) -> Option<Vec<f64>> {
    let k = pts.len() - 1;
    let mut d = DMatrix::zeros(k, r);
    for i in 0..k {
        for j in 0..r {
            d[(i, j)] = pts[i + 1][j] - pts[0][j];
        }
    }
    let (values, v) = linalg::svd_full_right(&d);
    let top = values.first().copied().unwrap_or(0.0);
    if top <= 0.0 || values.len() < r || values[r - 2] <= 1e-12 * top {
        return None;
    }
    // the last right singular vector spans the normal direction
    let normal: Vec<f64> = v.column(r - 1).iter().copied().collect();
    Some(normal)
}

struct QFacet {
    verts: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    neighbors: Vec<usize>,
    outside: Vec<usize>,
    alive: bool,
}

fn hull_nd(local: &[Vec<f64>], r: usize, scale: f64) -> Result<(Vec<usize>, Vec<LocalFacet>)> {
    let mut last_err = Error::Solver("hull construction failed".into());
    for (attempt, joggle) in [0.0, 1e-10, 1e-9, 1e-8, 1e-7].into_iter().enumerate() {
        let work: Vec<Vec<f64>> = if joggle == 0.0 {
            local.to_vec()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(attempt as u64);
            local
                .iter()
                .map(|p| p.iter().map(|x| x + joggle * scale * rng.random_range(-1.0..1.0)).collect())
                .collect()
        };
        match quickhull(&work, r, scale) {
            Ok(facets) => {
                if let Some(out) = finalize(local, r, scale, &facets) {
                    return Ok(out);
                }
                last_err = Error::Solver("hull facets do not close".into());
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Combinatorial quickhull pass. Returns the vertex sets of the simplicial
/// facets.
fn quickhull(pts: &[Vec<f64>], r: usize, scale: f64) -> Result<Vec<Vec<usize>>> {
    let eps = 1e-10 * scale;
    let fail = |msg: &str| Error::Solver(format!("quickhull: {msg}"));

    // initial simplex: greedy farthest points from the growing affine span
    let centroid: Vec<f64> = (0..r)
        .map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / pts.len() as f64)
        .collect();
    let mut simplex = Vec::with_capacity(r + 1);
    let first = (0..pts.len())
        .max_by(|&a, &b| {
            let da = dot(&sub(&pts[a], &centroid), &sub(&pts[a], &centroid));
            let db = dot(&sub(&pts[b], &centroid), &sub(&pts[b], &centroid));
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .ok_or_else(|| fail("no points"))?;
    simplex.push(first);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while simplex.len() < r + 1 {
        let origin = &pts[simplex[0]];
        let mut best = None;
        let mut best_d = 0.0;
        for (i, p) in pts.iter().enumerate() {
            let mut d = sub(p, origin);
            for q in &basis {
                let c = dot(&d, q);
                for (x, y) in d.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
            let dist = dot(&d, &d).sqrt();
            if dist > best_d {
                best_d = dist;
                best = Some((i, d));
            }
        }
        let (i, mut d) = best.ok_or_else(|| fail("degenerate simplex"))?;
        if best_d <= eps {
            return Err(fail("degenerate simplex"));
        }
        // reorthogonalize
        for q in &basis {
            let c = dot(&d, q);
            for (x, y) in d.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
        let norm = dot(&d, &d).sqrt();
        basis.push(d.iter().map(|x| x / norm).collect());
        simplex.push(i);
    }
    let interior: Vec<f64> = (0..r)
        .map(|j| simplex.iter().map(|&i| pts[i][j]).sum::<f64>() / (r + 1) as f64)
        .collect();

    let make = |verts: Vec<usize>| -> Result<QFacet> {
        let refs: Vec<&[f64]> = verts.iter().map(|&i| pts[i].as_slice()).collect();
        let mut normal = hyperplane_normal(&refs, r).ok_or_else(|| fail("flat facet"))?;
        let mut offset = dot(&normal, &pts[verts[0]]);
        let side = dot(&normal, &interior) - offset;
        if side.abs() <= eps {
            return Err(fail("interior point on facet plane"));
        }
        if side > 0.0 {
            normal.iter_mut().for_each(|x| *x = -*x);
            offset = -offset;
        }
        Ok(QFacet {
            verts,
            normal,
            offset,
            neighbors: Vec::new(),
            outside: Vec::new(),
            alive: true,
        })
    };

    let mut facets: Vec<QFacet> = Vec::new();
    for skip in 0..=r {
        let verts: Vec<usize> = simplex
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != skip)
            .map(|(_, &v)| v)
            .collect();
        let mut f = make(verts)?;
        // neighbor opposite verts[k] is the facet skipping that vertex
        f.neighbors = (0..=r).filter(|&k| k != skip).collect();
        facets.push(f);
    }
    let in_simplex: Vec<bool> = {
        let mut v = vec![false; pts.len()];
        for &i in &simplex {
            v[i] = true;
        }
        v
    };
    for (i, p) in pts.iter().enumerate() {
        if in_simplex[i] {
            continue;
        }
        for f in facets.iter_mut() {
            if dot(&f.normal, p) - f.offset > eps {
                f.outside.push(i);
                break;
            }
        }
    }

    let max_rounds = 50 * pts.len() + 1000;
    let mut rounds = 0;
    loop {
        rounds += 1;
        if rounds > max_rounds {
            return Err(fail("no progress"));
        }
        let Some(start) = facets.iter().position(|f| f.alive && !f.outside.is_empty()) else {
            break;
        };
        let eye = {
            let f = &facets[start];
            *f.outside
                .iter()
                .max_by(|&&a, &&b| {
                    let da = dot(&f.normal, &pts[a]);
                    let db = dot(&f.normal, &pts[b]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("nonempty outside set")
        };
        let ep = &pts[eye];
        // visible region
        let mut visible = vec![start];
        let mut is_visible: HashMap<usize, bool> = HashMap::new();
        is_visible.insert(start, true);
        let mut queue = VecDeque::from([start]);
        while let Some(fi) = queue.pop_front() {
            for &nb in &facets[fi].neighbors {
                if is_visible.contains_key(&nb) {
                    continue;
                }
                let f = &facets[nb];
                let vis = dot(&f.normal, ep) - f.offset > eps;
                is_visible.insert(nb, vis);
                if vis {
                    visible.push(nb);
                    queue.push_back(nb);
                }
            }
        }
        // horizon ridges: (visible facet, index k) with invisible neighbor
        let mut new_ids = Vec::new();
        let mut ridge_map: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for &fi in &visible {
            for k in 0..r {
                let nb = facets[fi].neighbors[k];
                if is_visible[&nb] {
                    continue;
                }
                let mut verts: Vec<usize> = facets[fi]
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &v)| v)
                    .collect();
                verts.push(eye);
                let mut nf = make(verts)?;
                nf.neighbors = vec![usize::MAX; r];
                // opposite the eye lies the old neighbor
                nf.neighbors[r - 1] = nb;
                let id = facets.len();
                let slot = facets[nb]
                    .neighbors
                    .iter()
                    .position(|&x| x == fi)
                    .ok_or_else(|| fail("neighbor link mismatch"))?;
                facets[nb].neighbors[slot] = id;
                for j in 0..r - 1 {
                    let mut key: Vec<usize> = nf
                        .verts
                        .iter()
                        .enumerate()
                        .filter(|&(q, _)| q != j)
                        .map(|(_, &v)| v)
                        .collect();
                    key.sort_unstable();
                    match ridge_map.remove(&key) {
                        Some((other, oj)) => {
                            nf.neighbors[j] = other;
                            facets[other].neighbors[oj] = id;
                        }
                        None => {
                            ridge_map.insert(key, (id, j));
                        }
                    }
                }
                facets.push(nf);
                new_ids.push(id);
            }
        }
        if !ridge_map.is_empty() {
            return Err(fail("unmatched ridges"));
        }
        // reassign outside points
        let mut orphans = Vec::new();
        for &fi in &visible {
            facets[fi].alive = false;
            orphans.append(&mut facets[fi].outside);
        }
        for p in orphans {
            if p == eye {
                continue;
            }
            for &id in &new_ids {
                let f = &facets[id];
                if dot(&f.normal, &pts[p]) - f.offset > eps {
                    facets[id].outside.push(p);
                    break;
                }
            }
        }
    }
    Ok(facets.into_iter().filter(|f| f.alive).map(|f| f.verts).collect())
}

/// Refits facets on the original coordinates, merges coplanar pieces and
/// classifies vertices.
fn finalize(
    pts: &[Vec<f64>],
    r: usize,
    scale: f64,
    simplicial: &[Vec<usize>],
) -> Option<(Vec<usize>, Vec<LocalFacet>)> {
    let tight = 1e-9 * scale;
    let m = pts.len();
    let centroid: Vec<f64> = (0..r)
        .map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / m as f64)
        .collect();
    let mut seen: HashMap<Vec<usize>, ()> = HashMap::new();
    let mut out: Vec<LocalFacet> = Vec::new();
    for verts in simplicial {
        let refs: Vec<&[f64]> = verts.iter().map(|&i| pts[i].as_slice()).collect();
        let Some(mut normal) = hyperplane_normal(&refs, r) else {
            continue;
        };
        if dot(&normal, &centroid) > dot(&normal, &pts[verts[0]]) {
            normal.iter_mut().for_each(|x| *x = -*x);
        }
        let mut offset = pts.iter().map(|p| dot(&normal, p)).fold(f64::NEG_INFINITY, f64::max);
        let mut on: Vec<usize> = (0..m).filter(|&i| dot(&normal, &pts[i]) >= offset - tight).collect();
        // refit to all tight points
        if on.len() > r {
            let refs: Vec<&[f64]> = on.iter().map(|&i| pts[i].as_slice()).collect();
            if let Some(refit) = fit_plane(&refs, r) {
                let refit = if dot(&refit, &normal) < 0.0 {
                    refit.iter().map(|x| -x).collect()
                } else {
                    refit
                };
                normal = refit;
                offset = pts.iter().map(|p| dot(&normal, p)).fold(f64::NEG_INFINITY, f64::max);
                on = (0..m).filter(|&i| dot(&normal, &pts[i]) >= offset - tight).collect();
            }
        }
        // tight points must span the hyperplane
        let on_refs: Vec<&[f64]> = on.iter().map(|&i| pts[i].as_slice()).collect();
        if affine_rank(&on_refs, r, scale) != r - 1 {
            continue;
        }
        if dot(&normal, &centroid) >= offset - tight {
            continue;
        }
        if seen.insert(on.clone(), ()).is_none() {
            out.push((normal, offset, on));
        }
    }
    if out.len() < r + 1 {
        return None;
    }
    // vertices: tight facet normals span R^r; duplicates keep the first index
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (k, (_, _, on)) in out.iter().enumerate() {
        for &i in on {
            incident[i].push(k);
        }
    }
    let mut vertices = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..m {
        if incident[i].len() < r {
            continue;
        }
        let mut nm = DMatrix::zeros(incident[i].len(), r);
        for (row, &k) in incident[i].iter().enumerate() {
            for j in 0..r {
                nm[(row, j)] = out[k].0[j];
            }
        }
        if linalg::rank(&nm, 1e-9) < r {
            continue;
        }
        if kept
            .iter()
            .any(|&k| pts[k].iter().zip(&pts[i]).all(|(a, b)| (a - b).abs() <= tight))
        {
            continue;
        }
        kept.push(i);
        vertices.push(i);
    }
    // every facet needs at least r vertices
    if out.iter().any(|(_, _, on)| on.iter().filter(|i| vertices.binary_search(i).is_ok()).count() < r) {
        return None;
    }
    Some((vertices, out))
}

fn fit_plane(pts: &[&[f64]], r: usize) -> Option<Vec<f64>> {
    let k = pts.len();
    let mean: Vec<f64> = (0..r).map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / k as f64).collect();
    let mut d = DMatrix::zeros(k, r);
    for i in 0..k {
        for j in 0..r {
            d[(i, j)] = pts[i][j] - mean[j];
        }
    }
    let (values, v) = linalg::svd_full_right(&d);
    if values.len() < r || values[r - 2] <= 1e-12 * values[0].max(1e-300) {
        return None;
    }
    Some(v.column(r - 1).iter().copied().collect())
}

fn affine_rank(pts: &[&[f64]], r: usize, scale: f64) -> usize {
    if pts.len() <= 1 {
        return 0;
    }
    let mut d = DMatrix::zeros(pts.len(), r);
    for i in 0..pts.len() {
        for j in 0..r {
            d[(i, j)] = pts[i][j];
        }
    }
    let _ = scale;
    linalg::affine_hull(&d, 1e-9).dim()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn square_with_interior_and_duplicate() {
        let p = dmatrix![
            0.0, 0.0;
            1.0, 0.0;
            1.0, 1.0;
            0.0, 1.0;
            0.5, 0.5;
            1.0, 1.0;
            0.5, 0.0
        ];
        let h = convex_hull(&p).unwrap();
        assert_eq!(h.dim, 2);
        assert_eq!(h.vertices, vec![0, 1, 2, 3]);
        assert_eq!(h.facets.len(), 4);
    }

    #[test]
    fn cube_facets_merge() {
        let mut rows = Vec::new();
        for i in 0..8 {
            rows.extend([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        let p = DMatrix::from_row_slice(8, 3, &rows);
        let h = convex_hull(&p).unwrap();
        assert_eq!(h.vertices.len(), 8);
        assert_eq!(h.facets.len(), 6);
        for f in &h.facets {
            assert_eq!(f.points.len(), 4);
        }
    }

    #[test]
    fn segment_in_plane() {
        let p = dmatrix![0.0, 0.0; 1.0, 1.0; 0.5, 0.5];
        let h = convex_hull(&p).unwrap();
        assert_eq!(h.dim, 1);
        assert_eq!(h.vertices, vec![0, 1]);
        assert_eq!(h.eq_a.nrows(), 1);
        assert_eq!(h.facets.len(), 2);
    }

    #[test]
    fn single_point() {
        let p = dmatrix![2.0, 3.0; 2.0, 3.0];
        let h = convex_hull(&p).unwrap();
        assert_eq!(h.dim, 0);
        assert_eq!(h.vertices, vec![0]);
        assert_eq!(h.eq_a.nrows(), 2);
    }

    #[test]
    fn random_cloud_contains_all_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in 2..=4 {
            let p = DMatrix::from_fn(60, dim, |_, _| rng.random_range(-1.0..1.0));
            let h = convex_hull(&p).unwrap();
            for f in &h.facets {
                for i in 0..60 {
                    assert!(f.normal.dot(&p.row(i).transpose()) <= f.offset + 1e-9);
                }
            }
        }
    }

    #[test]
    fn hypercube_with_many_coplanar_points() {
        // grid points on the boundary of the cube stress the coplanar path
        let mut rows = Vec::new();
        let vals = [-1.0, -0.5, 0.0, 0.5, 1.0];
        for &x in &vals {
            for &y in &vals {
                for &z in &vals {
                    rows.extend([x, y, z]);
                }
            }
        }
        let p = DMatrix::from_row_slice(125, 3, &rows);
        let h = convex_hull(&p).unwrap();
        assert_eq!(h.vertices.len(), 8);
        assert_eq!(h.facets.len(), 6);
    }
}
