//! Subcommands of the `convexset` binary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use convexset::approx::{spread_points, DirectionSet, DEFAULT_ITERS};
use convexset::reach::{forward_trajectory_set, rc_set, verify_one_step, RcProblem, Repr};
use convexset::set::Support;
use convexset::{
    CenteringKind, ConstrainedZonotope, ConvexSet, DiffStrategy, Ellipsoid, Norm, Polytope, Tolerance,
};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use serde::Serialize;

use crate::document::{
    rows_of, EnvDocument, RcProblemDocument, RcResultDocument, SetDocument, TrajProblemDocument, FORMAT_VERSION,
};
use crate::expr::{self, with_tolerance, Env, Value};
use crate::render::{export_mesh_3d, render_2d, Approximation, Style};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "convexset", version, about = "Polytopes, constrained zonotopes and ellipsoids from the command line")]
pub struct Cli {
    /// Feasibility tolerance used by every solver call.
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_feas: Option<f64>,
    /// Iteration cap for iterative solvers.
    #[arg(long, global = true, value_name = "N")]
    pub iter_max: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Vrep,
    Hrep,
    Czonotope,
    Polytope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReprArg {
    Polytope,
    Czonotope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    ExactRecursive,
    ScaledInner,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Describe the representation of a set.
    Info { file: PathBuf },
    /// Change representation.
    Convert {
        file: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a set expression.
    Op {
        #[arg(long)]
        expr: String,
        /// Environment document binding names to sets, matrices, vectors and numbers.
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Backward robust controllable sets `K_0 … K_N`.
    Rcset {
        problem: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "polytope")]
        repr: ReprArg,
        /// Force a subtraction strategy on the constrained-zonotope path.
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Forward trajectory set sliced at waypoints.
    Trajset {
        problem: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Draw sets: `.svg` for sets in R^2, `.mesh` (JSON) for sets in R^3.
    Plot {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Outer instead of inner approximations for non-polytopes.
        #[arg(long)]
        outer: bool,
        #[arg(long, default_value_t = convexset::approx::DEFAULT_D)]
        directions: usize,
        /// Mark vertices.
        #[arg(long)]
        markers: bool,
    },
    /// Well-separated unit directions in R^N.
    SpreadPoints {
        n: usize,
        d: usize,
        #[arg(long, default_value_t = DEFAULT_ITERS)]
        iters: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Built-in scenario touching every module.
    Diag,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn tolerance(cli: &Cli) -> Result<Tolerance, CliError> {
    let mut tol = Tolerance::default();
    if let Some(f) = cli.tol_feas {
        tol = tol.with_feas(f);
    }
    if let Some(n) = cli.iter_max {
        tol = tol.with_iter_max(n);
    }
    tol.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(tol)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_set(path: &Path, tol: &Tolerance) -> Result<(ConvexSet, Option<String>), CliError> {
    let doc = SetDocument::from_json(&read(path)?)?;
    Ok((with_tolerance(doc.to_set()?, tol), doc.name))
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text)?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn json<T: Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(x).expect("output serializes")
}

/// Representation summary in the style of the library's printed descriptions.
pub fn describe(set: &ConvexSet, name: Option<&str>) -> Result<String, CliError> {
    let lead = |article: &str, what: String| match name {
        Some(n) => format!("{n} is {article} {what}"),
        None => what,
    };
    Ok(match set {
        ConvexSet::Polytope(p) => {
            let reps = match (p.has_hrep(), p.has_vrep()) {
                (true, true) => "in H-Rep and V-Rep",
                (true, false) => "in only H-Rep",
                (false, true) => "in only V-Rep",
                (false, false) => "with no representation",
            };
            let mut s = lead("a", format!("Polytope in R^{} {reps}", p.dim()));
            if p.is_empty() {
                s.push_str(" (empty)");
            }
            if p.has_hrep() {
                let h = p.hrep()?;
                let eq = match h.ae.nrows() {
                    0 => "no equality constraints".to_string(),
                    1 => "1 equality constraint".to_string(),
                    k => format!("{k} equality constraints"),
                };
                s += &format!("\n\tIn H-rep: {} inequalities and {eq}", h.a.nrows());
            }
            if p.has_vrep() {
                s += &format!("\n\tIn V-rep: {} vertices", p.vertices()?.nrows());
            }
            s
        }
        ConvexSet::CZonotope(z) => {
            let mut s = lead("a", format!("Constrained Zonotope in R^{}", z.dim()));
            if z.is_zonotope() {
                s += &format!("\n\tthat is a zonotope with latent dimension {}", z.latent_dim());
            } else {
                s += &format!(
                    "\n\twith latent dimension {} and {} equality constraints",
                    z.latent_dim(),
                    z.n_equalities()
                );
            }
            s
        }
        ConvexSet::Ellipsoid(e) => lead("an", format!("Ellipsoid in R^{}", e.dim())),
    })
}

fn convert(set: &ConvexSet, to: Target) -> Result<ConvexSet, CliError> {
    let unsupported = |what: &str| {
        CliError::Compute(convexset::Error::UnsupportedOperandPair(format!(
            "cannot convert {} to {what}",
            set.class_name()
        )))
    };
    let polytope = || -> Result<Polytope, CliError> {
        match set {
            ConvexSet::Polytope(p) => Ok(p.clone()),
            ConvexSet::CZonotope(z) => Ok(z.vertex_polytope()?),
            ConvexSet::Ellipsoid(_) => Err(unsupported("a polytope")),
        }
    };
    Ok(match to {
        Target::Polytope => polytope()?.into(),
        Target::Vrep => polytope()?.only_vrep()?.into(),
        Target::Hrep => polytope()?.only_hrep()?.into(),
        Target::Czonotope => match set {
            ConvexSet::Polytope(p) => ConstrainedZonotope::from_polytope(p)?.into(),
            ConvexSet::CZonotope(z) => z.clone().into(),
            ConvexSet::Ellipsoid(_) => return Err(unsupported("a constrained zonotope")),
        },
    })
}

fn value_json(v: &Value) -> Result<String, CliError> {
    Ok(match v {
        Value::Set(s) => SetDocument::from_set(s)?.to_json(),
        Value::Matrix(m) => json(&rows_of(m)),
        Value::Vector(x) => json(&x.iter().copied().collect::<Vec<_>>()),
        Value::Number(x) => json(x),
        Value::Bool(b) => json(b),
    })
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let tol = tolerance(cli)?;
    match &cli.command {
        Command::Info { file } => {
            let (set, name) = load_set(file, &tol)?;
            writeln!(out, "{}", describe(&set, name.as_deref())?)?;
        }
        Command::Convert { file, to, output } => {
            let (set, name) = load_set(file, &tol)?;
            let mut doc = SetDocument::from_set(&convert(&set, *to)?)?;
            doc.name = name;
            emit(&doc.to_json(), output.as_deref(), out)?;
        }
        Command::Op { expr, env, output } => {
            let env = match env {
                Some(p) => Env::from_document(&EnvDocument::from_json(&read(p)?)?, &tol)?,
                None => Env::new(),
            };
            let v = expr::eval_str(expr, &env)?;
            emit(&value_json(&v)?, output.as_deref(), out)?;
        }
        Command::Rcset {
            problem,
            output,
            repr,
            strategy,
        } => {
            let doc: RcProblemDocument = serde_json::from_str(&read(problem)?)?;
            let mut p = doc.to_problem()?;
            for s in [&mut p.u, &mut p.w, &mut p.s, &mut p.t] {
                *s = with_tolerance(s.clone(), &tol);
            }
            let repr = match repr {
                ReprArg::Polytope => Repr::Polytope,
                ReprArg::Czonotope => Repr::CZonotope,
            };
            let strategy = strategy.map(|s| match s {
                StrategyArg::ExactRecursive => DiffStrategy::ExactRecursive,
                StrategyArg::ScaledInner => DiffStrategy::ScaledInner,
            });
            let started = Instant::now();
            let r = rc_set(&p, repr, strategy)?;
            let result = RcResultDocument {
                format_version: FORMAT_VERSION,
                repr: repr.as_str().into(),
                strategies: r.strategies.iter().map(|s| s.map(|s| s.as_str().to_string())).collect(),
                sets: r.sets.iter().map(SetDocument::from_set).collect::<Result<_, _>>()?,
            };
            fs::write(output, json(&result))?;
            let k0 = r.k0();
            writeln!(
                out,
                "K_0 ({} steps, {:.2} s): {}",
                p.horizon,
                started.elapsed().as_secs_f64(),
                if k0.is_empty() { "empty".to_string() } else { describe(k0, None)?.replace('\n', " ") }
            )?;
        }
        Command::Trajset { problem, output } => {
            let doc: TrajProblemDocument = serde_json::from_str(&read(problem)?)?;
            let mut p = doc.to_problem()?;
            p.u = with_tolerance(p.u, &tol);
            let set = forward_trajectory_set(&p)?;
            let mut doc = SetDocument::from_set(&set.clone().into())?;
            doc.name = Some("trajectories".into());
            fs::write(output, doc.to_json())?;
            writeln!(out, "{}", describe(&set.into(), None)?.replace('\n', " "))?;
        }
        Command::Plot {
            files,
            output,
            outer,
            directions,
            markers,
        } => {
            let approx = Approximation {
                outer: *outer,
                directions: *directions,
            };
            let ext = output.extension().and_then(|e| e.to_str()).unwrap_or("");
            let sets = files
                .iter()
                .map(|f| Ok(load_set(f, &tol)?.0))
                .collect::<Result<Vec<_>, CliError>>()?;
            match ext {
                "svg" => {
                    let items: Vec<(ConvexSet, Style)> = sets
                        .into_iter()
                        .enumerate()
                        .map(|(i, s)| {
                            let style = Style {
                                fill: PALETTE[i % PALETTE.len()].into(),
                                markers: *markers,
                                ..Style::default()
                            };
                            (s, style)
                        })
                        .collect();
                    fs::write(output, render_2d(&items, &approx)?)?;
                }
                "mesh" => {
                    if sets.len() != 1 {
                        return Err(CliError::Usage("a mesh holds exactly one set".into()));
                    }
                    fs::write(output, json(&export_mesh_3d(&sets[0], &approx)?))?;
                }
                _ => return Err(CliError::Usage("output must end in .svg or .mesh".into())),
            }
        }
        Command::SpreadPoints { n, d, iters, output } => {
            if *n == 0 {
                return Err(CliError::Usage("N must be at least 1".into()));
            }
            let dirs = spread_points(*n, *d, *iters);
            let doc = SpreadDocument {
                format_version: FORMAT_VERSION,
                n: *n,
                d: *d,
                count: dirs.len(),
                min_separation: dirs.min_separation(),
                directions: rows_of(dirs.as_matrix()),
            };
            emit(&json(&doc), output.as_deref(), out)?;
        }
        Command::Diag => return diag(out),
    }
    Ok(0)
}

const PALETTE: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];

#[derive(Serialize)]
struct SpreadDocument {
    format_version: u32,
    n: usize,
    #[serde(rename = "D")]
    d: usize,
    count: usize,
    min_separation: f64,
    directions: Vec<Vec<f64>>,
}

type Check = (&'static str, &'static str, fn() -> Result<String, String>);

fn ok_if(cond: bool, detail: String) -> Result<String, String> {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn pentagon() -> Polytope {
    Polytope::from_vertices(dmatrix![-1.0, 0.5; -1.0, 1.0; 1.0, 1.0; 1.0, -1.0; 0.5, -1.0]).unwrap()
}

fn simplex() -> Result<Polytope, String> {
    Polytope::from_hrep_eq(-DMatrix::identity(3, 3), DVector::zeros(3), DMatrix::from_element(1, 3, 1.0), dvector![1.0])
        .map_err(err)
}

const CHECKS: [Check; 9] = [
    ("solver-core", "projection onto the simplex", || {
        let (x, d) = simplex()?.project_point(&dvector![1.0, 1.0, 1.0], Norm::Two).map_err(err)?;
        let ok = (x - DVector::from_element(3, 1.0 / 3.0)).amax() < 1e-8 && (d - 2.0 / 3f64.sqrt()).abs() < 1e-8;
        ok_if(ok, format!("distance {d:.6}"))
    }),
    ("polytope", "simplex vertex enumeration", || {
        let v = simplex()?.vertices().map_err(err)?.clone();
        let mut rows: Vec<Vec<f64>> = rows_of(&v);
        rows.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let ok = rows.len() == 3 && (0..3).all(|i| (0..3).all(|j| (rows[i][j] - f64::from(i == j)).abs() < 1e-12));
        ok_if(ok, format!("{} vertices", rows.len()))
    }),
    ("polytope", "pentagon Chebyshev radius", || {
        match pentagon().centering(CenteringKind::Chebyshev).map_err(err)? {
            convexset::Centering::Chebyshev { radius, .. } => ok_if((radius - 0.73223).abs() < 1e-4, format!("{radius:.5}")),
            _ => Err("wrong centering kind".into()),
        }
    }),
    ("czonotope", "lifting and equality", || {
        let p = pentagon();
        let c = ConstrainedZonotope::from_polytope(&p).map_err(err)?;
        let eq = ConvexSet::from(c.clone()).set_eq(&p.into()).map_err(err)?;
        ok_if(
            c.latent_dim() == 7 && c.n_equalities() == 5 && eq,
            format!("latent {} / {} equalities", c.latent_dim(), c.n_equalities()),
        )
    }),
    ("ellipsoid", "volume and membership", || {
        let e = Ellipsoid::new(dmatrix![1.0, 0.0; 0.0, 4.0], dvector![2.0, -1.0]).map_err(err)?;
        let vol = e.volume();
        let inside = e.contains_point(&dvector![2.0, -0.6]).map_err(err)?;
        let outside = e.contains_point(&dvector![2.0, -0.4]).map_err(err)?;
        let ok = (vol - std::f64::consts::FRAC_PI_2).abs() < 1e-9 && inside && !outside;
        ok_if(ok, format!("volume {vol:.6}"))
    }),
    ("approximation", "spread directions", || {
        let d = spread_points(3, 20, DEFAULT_ITERS);
        ok_if(d.len() == 166 && d.min_separation() > 0.15, format!("{} directions", d.len()))
    }),
    ("approximation", "inner and outer bounds", || {
        let b = Ellipsoid::ball(DVector::zeros(2), 1.0).map_err(err)?;
        let dirs = DirectionSet::spread(2, 8);
        let inner = convexset::approx::inner_polytope(&b, &dirs).map_err(err)?;
        let outer = convexset::approx::outer_polytope(&b, &dirs).map_err(err)?;
        let (vi, vo) = (inner.volume().map_err(err)?, outer.volume().map_err(err)?);
        ok_if(vi < std::f64::consts::PI && std::f64::consts::PI < vo, format!("{vi:.4} < pi < {vo:.4}"))
    }),
    ("reach", "double-integrator RC set", || {
        let mut p = RcProblem::double_integrator();
        p.horizon = 5;
        let r = rc_set(&p, Repr::Polytope, None).map_err(err)?;
        let k0 = r.k0();
        let inside = !k0.is_empty() && p.s.contains_set(k0).map_err(err)?;
        let audit = verify_one_step(&r.sets[0], &r.sets[1], &p, 50, 7).map_err(err)?;
        ok_if(inside && audit.passed(), format!("{} violations", audit.violations.len()))
    }),
    ("cli-io", "round trip, expression, plot", || {
        let p = pentagon();
        let doc = SetDocument::from_set(&p.clone().into()).map_err(err)?;
        let back = SetDocument::from_json(&doc.to_json()).map_err(err)?;
        let mut env = Env::new();
        env.insert("P1", p.clone());
        env.insert("C1", ConstrainedZonotope::from_polytope(&p).map_err(err)?);
        let eq = matches!(expr::eval_str("C1 == P1", &env).map_err(err)?, Value::Bool(true));
        let svg = render_2d(&[(p.into(), Style::default())], &Approximation::default()).map_err(err)?;
        ok_if(back == doc && eq && svg.contains("<path"), "ok".into())
    }),
];

/// Runs the built-in checks and prints a table; exit code 2 on any failure.
pub fn diag(out: &mut dyn Write) -> Result<i32, CliError> {
    writeln!(out, "{:<14} {:<30} {:<6} {:>9}  detail", "module", "check", "result", "time")?;
    let mut failures = 0;
    for (module, name, check) in CHECKS {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let ms = started.elapsed().as_secs_f64() * 1e3;
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        writeln!(out, "{module:<14} {name:<30} {tag:<6} {ms:>7.1}ms  {detail}")?;
    }
    writeln!(out, "{} of {} checks passed", CHECKS.len() - failures, CHECKS.len())?;
    Ok(if failures == 0 { 0 } else { 2 })
}
