//! JSON exchange format for sets, expression environments and problems.
//!
//! Matrices are arrays of rows. Floats are written in shortest round-trip
//! form, so `parse(emit(doc)) == doc` holds bit for bit.

use std::collections::BTreeMap;

use convexset::reach::{RcProblem, TrajProblem};
use convexset::{ConstrainedZonotope, ConvexSet, Ellipsoid, Polytope};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

pub type Rows = Vec<Vec<f64>>;

fn version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDocument {
    #[serde(default = "version")]
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub body: SetBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SetBody {
    Polytope {
        dim: usize,
        #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
        v: Option<Rows>,
        #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
        a: Option<Rows>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
        #[serde(rename = "Ae", default, skip_serializing_if = "Option::is_none")]
        ae: Option<Rows>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        be: Option<Vec<f64>>,
    },
    Czonotope {
        #[serde(rename = "G")]
        g: Rows,
        c: Vec<f64>,
        #[serde(rename = "Ae", default)]
        ae: Rows,
        #[serde(default)]
        be: Vec<f64>,
    },
    Ellipsoid {
        #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
        q: Option<Rows>,
        #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
        g: Option<Rows>,
        c: Vec<f64>,
    },
}

pub fn rows_of(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>, what: &str) -> Result<(), CliError> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what}: entries must be finite")))
    }
}

/// Rectangular matrix with `cols` columns; an empty array is `0 × cols`.
pub fn matrix(rows: &Rows, cols: usize, what: &str) -> Result<DMatrix<f64>, CliError> {
    for r in rows {
        if r.len() != cols {
            return Err(invalid(format!("{what}: expected rows of length {cols}, found {}", r.len())));
        }
        check_finite(r, what)?;
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Matrix whose width is read from its first row.
pub fn matrix_auto(rows: &Rows, what: &str) -> Result<DMatrix<f64>, CliError> {
    let cols = rows.first().map_or(0, |r| r.len());
    matrix(rows, cols, what)
}

pub fn vector(v: &[f64], len: usize, what: &str) -> Result<DVector<f64>, CliError> {
    if v.len() != len {
        return Err(invalid(format!("{what}: expected length {len}, found {}", v.len())));
    }
    check_finite(v, what)?;
    Ok(DVector::from_column_slice(v))
}

impl SetDocument {
    pub fn new(body: SetBody) -> Self {
        SetDocument {
            format_version: FORMAT_VERSION,
            name: None,
            body,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: SetDocument = serde_json::from_str(text)?;
        doc.check_version()?;
        Ok(doc)
    }

    fn check_version(&self) -> Result<(), CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(invalid(format!("unsupported format_version {}", self.format_version)));
        }
        Ok(())
    }

    /// Encodes the representations a set currently holds.
    pub fn from_set(set: &ConvexSet) -> Result<Self, CliError> {
        let body = match set {
            ConvexSet::Polytope(p) => {
                let mut v = None;
                let (mut a, mut b, mut ae, mut be) = (None, None, None, None);
                if p.is_empty() && !p.has_hrep() {
                    v = Some(Vec::new());
                }
                if p.has_vrep() {
                    v = Some(rows_of(p.vertices()?));
                }
                if p.has_hrep() {
                    let h = p.hrep()?;
                    a = Some(rows_of(&h.a));
                    b = Some(h.b.iter().copied().collect());
                    if h.ae.nrows() > 0 {
                        ae = Some(rows_of(&h.ae));
                        be = Some(h.be.iter().copied().collect());
                    }
                }
                SetBody::Polytope {
                    dim: p.dim(),
                    v,
                    a,
                    b,
                    ae,
                    be,
                }
            }
            ConvexSet::CZonotope(z) => SetBody::Czonotope {
                g: rows_of(z.generators()),
                c: z.center().iter().copied().collect(),
                ae: rows_of(z.ae()),
                be: z.be().iter().copied().collect(),
            },
            ConvexSet::Ellipsoid(e) => SetBody::Ellipsoid {
                q: Some(rows_of(e.shape())),
                g: None,
                c: e.center().iter().copied().collect(),
            },
        };
        Ok(SetDocument::new(body))
    }

    pub fn to_set(&self) -> Result<ConvexSet, CliError> {
        self.check_version()?;
        Ok(match &self.body {
            SetBody::Polytope { dim, v, a, b, ae, be } => {
                let n = *dim;
                if let Some(v) = v {
                    let vm = matrix(v, n, "V")?;
                    if vm.nrows() == 0 {
                        Polytope::empty(n).into()
                    } else {
                        Polytope::from_vertices(vm)?.into()
                    }
                } else {
                    let a = matrix(a.as_ref().ok_or_else(|| invalid("polytope needs V or A, b"))?, n, "A")?;
                    let b = vector(b.as_deref().unwrap_or(&[]), a.nrows(), "b")?;
                    let ae = matrix(ae.as_ref().unwrap_or(&Vec::new()), n, "Ae")?;
                    let be = vector(be.as_deref().unwrap_or(&[]), ae.nrows(), "be")?;
                    Polytope::from_hrep_eq(a, b, ae, be)?.into()
                }
            }
            SetBody::Czonotope { g, c, ae, be } => {
                let n = c.len();
                let latent = g.first().map_or(0, |r| r.len());
                let gm = matrix(g, latent, "G")?;
                if gm.nrows() != n {
                    return Err(invalid(format!("G has {} rows for a center of length {n}", gm.nrows())));
                }
                let aem = matrix(ae, latent, "Ae")?;
                ConstrainedZonotope::new(gm, vector(c, n, "c")?, aem.clone(), vector(be, aem.nrows(), "be")?)?.into()
            }
            SetBody::Ellipsoid { q, g, c } => {
                let n = c.len();
                let cv = vector(c, n, "c")?;
                match (q, g) {
                    (Some(q), _) => Ellipsoid::new(matrix(q, n, "Q")?, cv)?.into(),
                    (None, Some(g)) => Ellipsoid::from_generator(matrix(g, n, "G")?, cv)?.into(),
                    (None, None) => return Err(invalid("ellipsoid needs Q or G")),
                }
            }
        })
    }
}

/// Value bound in an expression environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Binding {
    Set(SetDocument),
    Number(f64),
    Vector(Vec<f64>),
    Matrix(Rows),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvDocument {
    #[serde(default = "version")]
    pub format_version: u32,
    pub bindings: BTreeMap<String, Binding>,
}

impl EnvDocument {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: EnvDocument = serde_json::from_str(text)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(invalid(format!("unsupported format_version {}", doc.format_version)));
        }
        Ok(doc)
    }
}

/// Either a named built-in example or explicit data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcProblemDocument {
    #[serde(default = "version")]
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Rows>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<SetDocument>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<SetDocument>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<SetDocument>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<SetDocument>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

fn required<'a, T>(x: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
    x.as_ref().ok_or_else(|| invalid(format!("problem field {what} missing")))
}

impl RcProblemDocument {
    pub fn to_problem(&self) -> Result<RcProblem, CliError> {
        if let Some(name) = &self.example {
            let mut p = match name.as_str() {
                "double_integrator" => RcProblem::double_integrator(),
                "hcw" | "hcw_synthetic" => RcProblem::hcw_synthetic(),
                other => return Err(invalid(format!("unknown example {other:?}"))),
            };
            if let Some(n) = self.horizon {
                p.horizon = n;
            }
            return Ok(p);
        }
        let a = matrix_auto(required(&self.a, "A")?, "A")?;
        let b = matrix_auto(required(&self.b, "B")?, "B")?;
        let f = matrix_auto(required(&self.f, "F")?, "F")?;
        Ok(RcProblem {
            a,
            b,
            f,
            u: required(&self.u, "U")?.to_set()?,
            w: required(&self.w, "W")?.to_set()?,
            s: required(&self.s, "S")?.to_set()?,
            t: required(&self.t, "T")?.to_set()?,
            horizon: *required(&self.horizon, "N")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: usize,
    pub position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajProblemDocument {
    #[serde(default = "version")]
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<SetDocument>,
    #[serde(default)]
    pub position_dims: Vec<usize>,
    #[serde(default)]
    pub waypoints: Vec<Waypoint>,
}

impl TrajProblemDocument {
    pub fn to_problem(&self) -> Result<TrajProblem, CliError> {
        if let Some(name) = &self.example {
            return match name.as_str() {
                "planar_double_integrator" => Ok(TrajProblem::example()),
                other => Err(invalid(format!("unknown example {other:?}"))),
            };
        }
        let a = matrix_auto(required(&self.a, "A")?, "A")?;
        let b = matrix_auto(required(&self.b, "B")?, "B")?;
        let x0 = required(&self.x0, "x0")?;
        let waypoints = self
            .waypoints
            .iter()
            .map(|w| Ok((w.t, vector(&w.position, self.position_dims.len(), "waypoint position")?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(TrajProblem {
            x0: vector(x0, a.nrows(), "x0")?,
            a,
            b,
            horizon: *required(&self.horizon, "N")?,
            u: required(&self.u, "U")?.to_set()?,
            position_dims: self.position_dims.clone(),
            waypoints,
        })
    }
}

/// Output of `rcset`: the sets `K_0 … K_N` plus per-step strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcResultDocument {
    pub format_version: u32,
    pub repr: String,
    pub strategies: Vec<Option<String>>,
    pub sets: Vec<SetDocument>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn polytope_round_trip() {
        let p = Polytope::from_vertices(dmatrix![-1.0, 0.5; -1.0, 1.0; 1.0, 1.0; 1.0, -1.0; 0.5, -1.0]).unwrap();
        let doc = SetDocument::from_set(&p.clone().into()).unwrap().named("P1");
        let text = doc.to_json();
        assert!(text.contains("\"type\": \"polytope\""));
        let back = SetDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert!(back.to_set().unwrap().set_eq(&p.into()).unwrap());
    }

    #[test]
    fn awkward_floats_survive() {
        let x = [0.1 + 0.2, 1e-300, -0.0, 1.0 / 3.0, f64::MAX, 5e-324];
        let z = ConstrainedZonotope::zonotope(DMatrix::from_row_slice(1, 6, &x), dvector![0.1]).unwrap();
        let doc = SetDocument::from_set(&z.into()).unwrap();
        let back = SetDocument::from_json(&doc.to_json()).unwrap();
        let SetBody::Czonotope { g, .. } = back.body else { panic!() };
        for (a, b) in g[0].iter().zip(x) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_ragged_and_bad_versions() {
        let ragged = r#"{"type":"czonotope","format_version":1,"G":[[1,0],[1]],"c":[0,0]}"#;
        assert!(SetDocument::from_json(ragged).unwrap().to_set().is_err());
        let v2 = r#"{"type":"ellipsoid","format_version":2,"Q":[[1]],"c":[0]}"#;
        assert!(SetDocument::from_json(v2).is_err());
        let flat = r#"{"type":"ellipsoid","format_version":1,"Q":[[1,0],[0,0]],"c":[0,0]}"#;
        assert!(SetDocument::from_json(flat).unwrap().to_set().is_err());
    }

    #[test]
    fn environment_bindings() {
        let text = r#"{"format_version":1,"bindings":{
            "M":[[1,0],[0,2]], "v":[1,0], "k":3,
            "X":{"type":"polytope","dim":1,"V":[[0],[1]]}}}"#;
        let env = EnvDocument::from_json(text).unwrap();
        assert!(matches!(env.bindings["M"], Binding::Matrix(_)));
        assert!(matches!(env.bindings["v"], Binding::Vector(_)));
        assert!(matches!(env.bindings["k"], Binding::Number(_)));
        assert!(matches!(env.bindings["X"], Binding::Set(_)));
    }
}
