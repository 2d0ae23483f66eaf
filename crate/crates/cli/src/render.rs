//! SVG output for planar sets and triangle meshes for sets in R^3.
//!
//! Constrained zonotopes and ellipsoids are drawn through polytopic
//! approximations built from spread directions.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use convexset::approx::{inner_polytope, outer_polytope, DirectionSet};
use convexset::hull::convex_hull;
use convexset::set::Support;
use convexset::{ConvexSet, Error, Polytope};
use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::document::FORMAT_VERSION;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approximation {
    /// Outer instead of inner approximations.
    pub outer: bool,
    /// Spread-direction parameter `D`.
    pub directions: usize,
}

impl Default for Approximation {
    fn default() -> Self {
        Approximation {
            outer: false,
            directions: convexset::approx::DEFAULT_D,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub fill: String,
    pub stroke: String,
    pub opacity: f64,
    pub markers: bool,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            fill: "#4c72b0".into(),
            stroke: "#1f2d4d".into(),
            opacity: 0.4,
            markers: false,
        }
    }
}

/// Polytope used for drawing.
pub fn drawable(set: &ConvexSet, approx: &Approximation) -> convexset::Result<Polytope> {
    match set {
        ConvexSet::Polytope(p) => Ok(p.clone()),
        other => {
            let dirs = DirectionSet::spread(other.dim(), approx.directions);
            if approx.outer {
                outer_polytope(other.as_support(), &dirs)
            } else {
                inner_polytope(other.as_support(), &dirs)
            }
        }
    }
}

/// Vertices of a planar polytope, counterclockwise from the one with the
/// smallest angle about the vertex mean.
pub fn ccw_vertices(p: &Polytope) -> convexset::Result<Vec<[f64; 2]>> {
    if p.dim() != 2 {
        return Err(Error::BadDimension { expected: 2, found: p.dim() });
    }
    if p.is_empty() {
        return Ok(Vec::new());
    }
    let v = p.vertices()?;
    let m = v.nrows() as f64;
    let (cx, cy) = (v.column(0).sum() / m, v.column(1).sum() / m);
    let mut pts: Vec<[f64; 2]> = (0..v.nrows()).map(|i| [v[(i, 0)], v[(i, 1)]]).collect();
    let angle = |q: &[f64; 2]| (q[1] - cy).atan2(q[0] - cx);
    pts.sort_by(|a, b| angle(a).total_cmp(&angle(b)).then(a[0].total_cmp(&b[0])).then(a[1].total_cmp(&b[1])));
    Ok(pts)
}

/// Fixed-precision decimal without a negative zero.
fn num(x: f64) -> String {
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// SVG document. Path coordinates are the set's own coordinates; a group
/// transform flips the vertical axis.
pub fn render_2d(items: &[(ConvexSet, Style)], approx: &Approximation) -> convexset::Result<String> {
    let mut polys = Vec::with_capacity(items.len());
    for (set, style) in items {
        if set.dim() != 2 {
            return Err(Error::BadDimension { expected: 2, found: set.dim() });
        }
        polys.push((ccw_vertices(&drawable(set, approx)?)?, style));
    }
    let all = polys.iter().flat_map(|(p, _)| p.iter());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for q in all {
        for k in 0..2 {
            lo[k] = lo[k].min(q[k]);
            hi[k] = hi[k].max(q[k]);
        }
    }
    if lo[0] > hi[0] {
        (lo, hi) = ([-1.0; 2], [1.0; 2]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let pad = 0.05 * span;
    let (x0, y0) = (lo[0] - pad, lo[1] - pad);
    let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
    let stroke_w = span / 200.0;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="480" height="{}">"#,
        num(x0),
        num(-(y0 + h)),
        num(w),
        num(h),
        (480.0 * h / w).round() as i64
    )
    .unwrap();
    writeln!(out, r#"<g transform="scale(1,-1)">"#).unwrap();
    for (pts, style) in &polys {
        if pts.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, q) in pts.iter().enumerate() {
            let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, num(q[0]), num(q[1]));
        }
        d.push_str(" Z");
        writeln!(
            out,
            r#"<path d="{d}" fill="{}" fill-opacity="{}" stroke="{}" stroke-width="{}"/>"#,
            style.fill,
            num(style.opacity),
            style.stroke,
            num(stroke_w)
        )
        .unwrap();
        if style.markers {
            for q in pts {
                writeln!(
                    out,
                    r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
                    num(q[0]),
                    num(q[1]),
                    num(2.0 * stroke_w),
                    style.stroke
                )
                .unwrap();
            }
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

/// Path points of every `<path>` in an SVG produced by [`render_2d`].
pub fn svg_path_points(svg: &str) -> Vec<Vec<[f64; 2]>> {
    svg.split("<path d=\"")
        .skip(1)
        .map(|rest| {
            let d = &rest[..rest.find('"').unwrap_or(rest.len())];
            d.split(['M', 'L', 'Z'])
                .filter_map(|chunk| {
                    let mut it = chunk.split_whitespace().map(|t| t.parse::<f64>());
                    match (it.next(), it.next()) {
                        (Some(Ok(x)), Some(Ok(y))) => Some([x, y]),
                        _ => None,
                    }
                })
                .collect()
        })
        .collect()
}

/// Triangulated boundary of a full-dimensional set in R^3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub format_version: u32,
    pub vertices: Vec<[f64; 3]>,
    /// Counterclockwise when seen from outside.
    pub triangles: Vec<[usize; 3]>,
    /// Outward unit normal per triangle.
    pub normals: Vec<[f64; 3]>,
}

impl Mesh {
    pub fn n_edges(&self) -> usize {
        let mut edges = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.n_edges() as i64 + self.triangles.len() as i64
    }
}

pub fn export_mesh_3d(set: &ConvexSet, approx: &Approximation) -> convexset::Result<Mesh> {
    if set.dim() != 3 {
        return Err(Error::BadDimension { expected: 3, found: set.dim() });
    }
    let p = drawable(set, approx)?;
    if p.is_empty() {
        return Err(Error::EmptySet);
    }
    let v: DMatrix<f64> = p.vertices()?.clone();
    let hull = convex_hull(&v)?;
    if hull.dim != 3 {
        return Err(Error::DegenerateInput);
    }
    let mut index = vec![usize::MAX; v.nrows()];
    let mut vertices = Vec::with_capacity(hull.vertices.len());
    for (k, &i) in hull.vertices.iter().enumerate() {
        index[i] = k;
        vertices.push([v[(i, 0)], v[(i, 1)], v[(i, 2)]]);
    }
    let at = |i: usize| Vector3::new(v[(i, 0)], v[(i, 1)], v[(i, 2)]);
    let mut triangles = Vec::new();
    let mut normals = Vec::new();
    for f in &hull.facets {
        let nrm = Vector3::new(f.normal[0], f.normal[1], f.normal[2]);
        let pts: Vec<usize> = f.points.iter().copied().filter(|&i| index[i] != usize::MAX).collect();
        if pts.len() < 3 {
            continue;
        }
        let c = pts.iter().map(|&i| at(i)).sum::<Vector3<f64>>() / pts.len() as f64;
        let u = (at(pts[0]) - c).normalize();
        let w = nrm.cross(&u);
        let mut ring: Vec<(f64, usize)> = pts
            .iter()
            .map(|&i| {
                let d = at(i) - c;
                (d.dot(&w).atan2(d.dot(&u)), i)
            })
            .collect();
        ring.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for k in 1..ring.len() - 1 {
            let (a, b, cc) = (ring[0].1, ring[k].1, ring[k + 1].1);
            let mut tri = [index[a], index[b], index[cc]];
            if (at(b) - at(a)).cross(&(at(cc) - at(a))).dot(&nrm) < 0.0 {
                tri.swap(1, 2);
            }
            triangles.push(tri);
            normals.push([nrm[0], nrm[1], nrm[2]]);
        }
    }
    Ok(Mesh {
        format_version: FORMAT_VERSION,
        vertices,
        triangles,
        normals,
    })
}

/// Quadratic form `(x − c)ᵀQ(x − c)` used by membership checks on plots.
pub fn quadratic_form(q: &DMatrix<f64>, c: &DVector<f64>, x: &[f64]) -> f64 {
    let d = DVector::from_column_slice(x) - c;
    d.dot(&(q * &d))
}
