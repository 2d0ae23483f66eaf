//! Set-expression language.
//!
//! ```text
//! expr    := add (("<=" | ">=" | "==" | "in") add)*
//! add     := mul (("+" | "-") mul)*
//! mul     := unary (("@" | "*") unary)*
//! unary   := "-" unary | power
//! power   := primary ("**" primary)*
//! primary := NUMBER | NAME | "[" numbers "]" | "(" expr ")"
//!          | "intersect(" expr "," expr ")" | "support(" expr "," expr ")"
//!          | "project(" expr "," expr "," ("1" | "2" | "inf") ")"
//! ```
//!
//! `M @ X` maps a set forward and `X @ M` pulls it back. A vector operand of
//! `+`/`-` translates. `X <= Y` and `X in Y` mean `X ⊆ Y`; `v in X` is
//! point membership.

use std::collections::BTreeMap;
use std::fmt;

use convexset::set::Support;
use convexset::{ConstrainedZonotope, ConvexSet, Ellipsoid, Error, Norm, Polytope, Tolerance};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::document::{matrix_auto, Binding, EnvDocument};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("unbound name {0:?}")]
    UnboundName(String),
    #[error(transparent)]
    Compute(#[from] Error),
}

impl ExprError {
    pub fn is_computation(&self) -> bool {
        matches!(self, ExprError::Compute(_))
    }
}

type Res<T> = std::result::Result<T, ExprError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Pow,
    At,
    Mul,
    Add,
    Sub,
    Le,
    Ge,
    Eq,
    In,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Pow => "**",
            BinOp::At => "@",
            BinOp::Mul => "*",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::In => "in",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Name(String),
    Vector(Vec<f64>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Intersect(Box<Expr>, Box<Expr>),
    Support(Box<Expr>, Box<Expr>),
    Project(Box<Expr>, Box<Expr>, Norm),
}

fn norm_name(p: Norm) -> &'static str {
    match p {
        Norm::One => "1",
        Norm::Two => "2",
        Norm::Inf => "inf",
    }
}

/// Fully parenthesized form.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(x) => write!(f, "{x}"),
            Expr::Name(s) => f.write_str(s),
            Expr::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Intersect(a, b) => write!(f, "intersect({a}, {b})"),
            Expr::Support(a, b) => write!(f, "support({a}, {b})"),
            Expr::Project(a, b, p) => write!(f, "project({a}, {b}, {})", norm_name(*p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Op(BinOp),
    End,
}

fn lex(text: &str) -> Res<Vec<(Tok, usize)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |pos: usize, msg: String| ExprError::Syntax { pos, msg };
    while i < chars.len() {
        let (pos, ch) = chars[i];
        let next = chars.get(i + 1).map(|c| c.1);
        let two = |tok| (tok, 2);
        let (tok, width) = match (ch, next) {
            (c, _) if c.is_whitespace() => {
                i += 1;
                continue;
            }
            ('*', Some('*')) => two(Tok::Op(BinOp::Pow)),
            ('<', Some('=')) => two(Tok::Op(BinOp::Le)),
            ('>', Some('=')) => two(Tok::Op(BinOp::Ge)),
            ('=', Some('=')) => two(Tok::Op(BinOp::Eq)),
            ('*', _) => (Tok::Op(BinOp::Mul), 1),
            ('@', _) => (Tok::Op(BinOp::At), 1),
            ('+', _) => (Tok::Op(BinOp::Add), 1),
            ('-', _) => (Tok::Op(BinOp::Sub), 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            (c, _) if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() {
                    let c = chars[j].1;
                    let exp_sign = (c == '+' || c == '-') && j > i && matches!(chars[j - 1].1, 'e' | 'E');
                    if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let end = chars.get(j).map_or(text.len(), |c| c.0);
                let lit = &text[pos..end];
                let x: f64 = lit.parse().map_err(|_| syntax(pos, format!("bad number {lit:?}")))?;
                out.push((Tok::Num(x), pos));
                i = j;
                continue;
            }
            (c, _) if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                    j += 1;
                }
                let end = chars.get(j).map_or(text.len(), |c| c.0);
                let word = &text[pos..end];
                out.push((if word == "in" { Tok::Op(BinOp::In) } else { Tok::Ident(word.to_string()) }, pos));
                i = j;
                continue;
            }
            (c, _) => return Err(syntax(pos, format!("unexpected character {c:?}"))),
        };
        out.push((tok, pos));
        i += width;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Res<T> {
        Err(ExprError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Res<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn tier(&mut self, ops: &[BinOp], next: fn(&mut Parser) -> Res<Expr>) -> Res<Expr> {
        let mut lhs = next(self)?;
        while let Tok::Op(op) = *self.peek() {
            if !ops.contains(&op) {
                break;
            }
            self.bump();
            let rhs = next(self)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Res<Expr> {
        self.tier(&[BinOp::Le, BinOp::Ge, BinOp::Eq, BinOp::In], Parser::additive)
    }

    fn additive(&mut self) -> Res<Expr> {
        self.tier(&[BinOp::Add, BinOp::Sub], Parser::multiplicative)
    }

    fn multiplicative(&mut self) -> Res<Expr> {
        self.tier(&[BinOp::At, BinOp::Mul], Parser::unary)
    }

    fn unary(&mut self) -> Res<Expr> {
        if *self.peek() == Tok::Op(BinOp::Sub) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.tier(&[BinOp::Pow], Parser::primary)
    }

    fn signed_number(&mut self) -> Res<f64> {
        let neg = *self.peek() == Tok::Op(BinOp::Sub);
        if neg {
            self.bump();
        }
        let at = self.at;
        match self.bump() {
            Tok::Num(x) => Ok(if neg { -x } else { x }),
            _ => {
                self.at = at;
                self.fail("expected a number")
            }
        }
    }

    fn primary(&mut self) -> Res<Expr> {
        let start = self.at;
        match self.bump() {
            Tok::Num(x) => Ok(Expr::Number(x)),
            Tok::LParen => {
                let e = self.comparison()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::LBracket => {
                let mut v = Vec::new();
                if *self.peek() != Tok::RBracket {
                    v.push(self.signed_number()?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        v.push(self.signed_number()?);
                    }
                }
                self.expect(Tok::RBracket, "']'")?;
                if v.is_empty() {
                    self.at = start;
                    return self.fail("empty vector literal");
                }
                Ok(Expr::Vector(v))
            }
            Tok::Ident(name) if *self.peek() == Tok::LParen => self.call(&name, start),
            Tok::Ident(name) => Ok(Expr::Name(name)),
            Tok::End => self.fail("unexpected end of input"),
            _ => {
                self.at = start;
                self.fail("expected an operand")
            }
        }
    }

    fn call(&mut self, name: &str, start: usize) -> Res<Expr> {
        self.bump();
        let a = Box::new(self.comparison()?);
        self.expect(Tok::Comma, "','")?;
        let b = Box::new(self.comparison()?);
        let e = match name {
            "intersect" => Expr::Intersect(a, b),
            "support" => Expr::Support(a, b),
            "project" => {
                self.expect(Tok::Comma, "','")?;
                let at = self.at;
                let p = match self.bump() {
                    Tok::Num(1.0) => Norm::One,
                    Tok::Num(2.0) => Norm::Two,
                    Tok::Ident(s) if s == "inf" => Norm::Inf,
                    _ => {
                        self.at = at;
                        return self.fail("norm must be 1, 2 or inf");
                    }
                };
                Expr::Project(a, b, p)
            }
            _ => {
                self.at = start;
                return self.fail(format!("unknown function {name:?}"));
            }
        };
        self.expect(Tok::RParen, "')'")?;
        Ok(e)
    }
}

pub fn parse(text: &str) -> Res<Expr> {
    if text.trim().is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let e = p.comparison()?;
    if *p.peek() != Tok::End {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}

#[derive(Debug, Clone)]
pub enum Value {
    Set(ConvexSet),
    Matrix(DMatrix<f64>),
    Vector(DVector<f64>),
    Number(f64),
    Bool(bool),
}

impl Value {
    pub fn kind(&self) -> String {
        Kind::of(self).to_string()
    }
}

/// Static type of a subexpression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Polytope,
    CZonotope,
    Ellipsoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Set(Class, usize),
    Matrix(usize, usize),
    Vector(usize),
    Number,
    Bool,
}

impl Kind {
    fn of(v: &Value) -> Kind {
        match v {
            Value::Set(s) => Kind::Set(
                match s {
                    ConvexSet::Polytope(_) => Class::Polytope,
                    ConvexSet::CZonotope(_) => Class::CZonotope,
                    ConvexSet::Ellipsoid(_) => Class::Ellipsoid,
                },
                s.dim(),
            ),
            Value::Matrix(m) => Kind::Matrix(m.nrows(), m.ncols()),
            Value::Vector(v) => Kind::Vector(v.len()),
            Value::Number(_) => Kind::Number,
            Value::Bool(_) => Kind::Bool,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Set(c, n) => {
                let name = match c {
                    Class::Polytope => "polytope",
                    Class::CZonotope => "czonotope",
                    Class::Ellipsoid => "ellipsoid",
                };
                write!(f, "{name} in R^{n}")
            }
            Kind::Matrix(r, c) => write!(f, "{r}x{c} matrix"),
            Kind::Vector(n) => write!(f, "vector in R^{n}"),
            Kind::Number => f.write_str("number"),
            Kind::Bool => f.write_str("bool"),
        }
    }
}

fn same(expected: usize, found: usize) -> Res<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found }.into())
    }
}

fn unsupported(what: String) -> ExprError {
    Error::UnsupportedOperandPair(what).into()
}

fn bad_operands(op: &str, a: Kind, b: Kind) -> ExprError {
    ExprError::Type(format!("`{op}` is not defined for {a} and {b}"))
}

/// Result class of a binary set operation, or an error for unsupported pairs.
fn set_pair(op: BinOp, a: Class, b: Class) -> Res<Class> {
    use Class::*;
    let name = |c: Class| match c {
        Polytope => "polytope",
        CZonotope => "constrained zonotope",
        Ellipsoid => "ellipsoid",
    };
    match (op, a, b) {
        (BinOp::Add, Polytope, Polytope) | (BinOp::Sub, Polytope, _) => Ok(Polytope),
        (BinOp::Add, CZonotope, Polytope | CZonotope) | (BinOp::Add, Polytope, CZonotope) => Ok(CZonotope),
        (BinOp::Sub, CZonotope, CZonotope | Ellipsoid) => Ok(CZonotope),
        (BinOp::Sub, CZonotope, Polytope) => Err(Error::UnsupportedSubtrahend(
            "a polytope subtrahend is not supported for constrained zonotopes".into(),
        )
        .into()),
        (BinOp::Sub, Ellipsoid, _) => Err(unsupported(format!("ellipsoid ⊖ {}", name(b)))),
        (BinOp::Add, _, _) => Err(unsupported(format!("{} ⊕ {}", name(a), name(b)))),
        (_, Polytope, Polytope) => Ok(Polytope),
        (_, CZonotope, Polytope | CZonotope) | (_, Polytope, CZonotope) => Ok(CZonotope),
        _ => Err(unsupported(format!("{} ∩ {}", name(a), name(b)))),
    }
}

/// Type and dimension check.
fn check(e: &Expr, env: &Env) -> Res<Kind> {
    Ok(match e {
        Expr::Number(_) => Kind::Number,
        Expr::Vector(v) => Kind::Vector(v.len()),
        Expr::Name(n) => Kind::of(env.get(n)?),
        Expr::Neg(x) => match check(x, env)? {
            k @ (Kind::Set(..) | Kind::Vector(_) | Kind::Number | Kind::Matrix(..)) => k,
            k => return Err(ExprError::Type(format!("cannot negate a {k}"))),
        },
        Expr::Binary(op, a, b) => {
            let (ka, kb) = (check(a, env)?, check(b, env)?);
            binary_kind(*op, ka, kb)?
        }
        Expr::Intersect(a, b) => match (check(a, env)?, check(b, env)?) {
            (Kind::Set(ca, na), Kind::Set(cb, nb)) => {
                same(na, nb)?;
                Kind::Set(set_pair(BinOp::Eq, ca, cb)?, na)
            }
            (ka, kb) => return Err(bad_operands("intersect", ka, kb)),
        },
        Expr::Support(a, b) => match (check(a, env)?, check(b, env)?) {
            (Kind::Set(_, n), Kind::Vector(m)) => {
                same(n, m)?;
                Kind::Number
            }
            (ka, kb) => return Err(bad_operands("support", ka, kb)),
        },
        Expr::Project(a, b, p) => match (check(a, env)?, check(b, env)?) {
            (Kind::Set(c, n), Kind::Vector(m)) => {
                same(n, m)?;
                if c == Class::Ellipsoid && *p != Norm::Two {
                    return Err(unsupported("ellipsoid projection needs the 2-norm".into()));
                }
                Kind::Vector(n)
            }
            (ka, kb) => return Err(bad_operands("project", ka, kb)),
        },
    })
}

fn binary_kind(op: BinOp, a: Kind, b: Kind) -> Res<Kind> {
    use Kind::*;
    let s = op.symbol();
    Ok(match (op, a, b) {
        (BinOp::Pow, Set(c, n), Number) => {
            if c == Class::Ellipsoid {
                return Err(unsupported("Cartesian power of an ellipsoid".into()));
            }
            // the exponent's value is checked at evaluation
            Set(c, n)
        }
        (BinOp::At | BinOp::Mul, Matrix(r, k), Set(c, n)) => {
            same(k, n)?;
            Set(c, r)
        }
        (BinOp::At | BinOp::Mul, Set(c, n), Matrix(r, k)) => {
            same(n, r)?;
            same(n, k)?;
            Set(c, n)
        }
        (BinOp::Mul, Number, Set(c, n)) | (BinOp::Mul, Set(c, n), Number) => Set(c, n),
        (BinOp::At | BinOp::Mul, Matrix(r, k), Vector(n)) => {
            same(k, n)?;
            Vector(r)
        }
        (BinOp::At | BinOp::Mul, Matrix(r, k), Matrix(p, q)) => {
            same(k, p)?;
            Matrix(r, q)
        }
        (BinOp::Mul, Number, Vector(n)) | (BinOp::Mul, Vector(n), Number) => Vector(n),
        (BinOp::Mul, Number, Number) => Number,
        (BinOp::Add | BinOp::Sub, Set(c, n), Vector(m)) => {
            same(n, m)?;
            Set(c, n)
        }
        (BinOp::Add, Vector(m), Set(c, n)) => {
            same(n, m)?;
            Set(c, n)
        }
        (BinOp::Add | BinOp::Sub, Set(ca, na), Set(cb, nb)) => {
            same(na, nb)?;
            Set(set_pair(op, ca, cb)?, na)
        }
        (BinOp::Add | BinOp::Sub, Vector(n), Vector(m)) => {
            same(n, m)?;
            Vector(n)
        }
        (BinOp::Add | BinOp::Sub, Number, Number) => Number,
        (BinOp::Le | BinOp::Ge | BinOp::Eq | BinOp::In, Set(_, n), Set(_, m)) => {
            same(n, m)?;
            Bool
        }
        (BinOp::In, Vector(n), Set(_, m)) => {
            same(m, n)?;
            Bool
        }
        _ => return Err(bad_operands(s, a, b)),
    })
}

/// Named values available to expressions.
#[derive(Debug, Clone, Default)]
pub struct Env {
    values: BTreeMap<String, Value>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, v: impl Into<Value>) {
        self.values.insert(name.into(), v.into());
    }

    pub fn get(&self, name: &str) -> Res<&Value> {
        self.values.get(name).ok_or_else(|| ExprError::UnboundName(name.to_string()))
    }

    pub fn from_document(doc: &EnvDocument, tol: &Tolerance) -> Result<Self, CliError> {
        let mut env = Env::new();
        for (name, b) in &doc.bindings {
            let v = match b {
                Binding::Set(d) => Value::Set(with_tolerance(d.to_set()?, tol)),
                Binding::Number(x) => Value::Number(*x),
                Binding::Vector(v) => Value::Vector(crate::document::vector(v, v.len(), name)?),
                Binding::Matrix(m) => Value::Matrix(matrix_auto(m, name)?),
            };
            env.insert(name.clone(), v);
        }
        Ok(env)
    }
}

impl From<ConvexSet> for Value {
    fn from(s: ConvexSet) -> Self {
        Value::Set(s)
    }
}

impl From<Polytope> for Value {
    fn from(s: Polytope) -> Self {
        Value::Set(s.into())
    }
}

impl From<ConstrainedZonotope> for Value {
    fn from(s: ConstrainedZonotope) -> Self {
        Value::Set(s.into())
    }
}

impl From<Ellipsoid> for Value {
    fn from(s: Ellipsoid) -> Self {
        Value::Set(s.into())
    }
}

impl From<DMatrix<f64>> for Value {
    fn from(m: DMatrix<f64>) -> Self {
        Value::Matrix(m)
    }
}

impl From<DVector<f64>> for Value {
    fn from(v: DVector<f64>) -> Self {
        Value::Vector(v)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Number(x)
    }
}

pub fn with_tolerance(s: ConvexSet, tol: &Tolerance) -> ConvexSet {
    match s {
        ConvexSet::Polytope(p) => p.with_tolerance(*tol).into(),
        ConvexSet::CZonotope(z) => z.with_tolerance(*tol).into(),
        ConvexSet::Ellipsoid(e) => e.with_tolerance(*tol).into(),
    }
}

/// Type-checks the whole tree, then evaluates it.
pub fn eval(e: &Expr, env: &Env) -> Res<Value> {
    check(e, env)?;
    eval_checked(e, env)
}

pub fn eval_str(text: &str, env: &Env) -> Res<Value> {
    eval(&parse(text)?, env)
}

fn map_set(m: &DMatrix<f64>, s: &ConvexSet) -> Res<ConvexSet> {
    Ok(match s {
        ConvexSet::Polytope(p) => p.affine_map(m, None)?.into(),
        ConvexSet::CZonotope(z) => z.affine_map(m, None)?.into(),
        ConvexSet::Ellipsoid(e) => e.affine_map(m, None)?.into(),
    })
}

fn pull_back(s: &ConvexSet, m: &DMatrix<f64>) -> Res<ConvexSet> {
    Ok(match s {
        ConvexSet::Polytope(p) => p.inverse_affine_map(m)?.into(),
        ConvexSet::CZonotope(z) => z.inverse_affine_map(m)?.into(),
        ConvexSet::Ellipsoid(e) => e.inverse_affine_map(m)?.into(),
    })
}

fn translate(s: &ConvexSet, v: &DVector<f64>) -> Res<ConvexSet> {
    Ok(match s {
        ConvexSet::Polytope(p) => p.translate(v)?.into(),
        ConvexSet::CZonotope(z) => z.translate(v)?.into(),
        ConvexSet::Ellipsoid(e) => e.translate(v)?.into(),
    })
}

fn scale(s: &ConvexSet, k: f64) -> Res<ConvexSet> {
    map_set(&(DMatrix::identity(s.dim(), s.dim()) * k), s)
}

fn lift(p: &Polytope) -> Res<ConstrainedZonotope> {
    Ok(ConstrainedZonotope::from_polytope(p)?)
}

fn minkowski(a: &ConvexSet, b: &ConvexSet) -> Res<ConvexSet> {
    Ok(match (a, b) {
        (ConvexSet::Polytope(p), ConvexSet::Polytope(q)) => p.minkowski_sum(q)?.into(),
        (ConvexSet::CZonotope(z), other) => z.minkowski_sum(other)?.into(),
        (ConvexSet::Polytope(p), ConvexSet::CZonotope(z)) => lift(p)?.minkowski_sum_cz(z)?.into(),
        _ => unreachable!("rejected by the type check"),
    })
}

fn pontryagin(a: &ConvexSet, b: &ConvexSet) -> Res<ConvexSet> {
    Ok(match a {
        ConvexSet::Polytope(p) => p.pontryagin_difference(b.as_support())?.into(),
        ConvexSet::CZonotope(z) => z.pontryagin_difference_auto(b)?.0.into(),
        ConvexSet::Ellipsoid(_) => unreachable!("rejected by the type check"),
    })
}

fn intersect(a: &ConvexSet, b: &ConvexSet) -> Res<ConvexSet> {
    Ok(match (a, b) {
        (ConvexSet::Polytope(p), ConvexSet::Polytope(q)) => p.intersect(q)?.into(),
        (ConvexSet::CZonotope(z), other) => z.intersect(other)?.into(),
        (ConvexSet::Polytope(p), ConvexSet::CZonotope(z)) => lift(p)?.intersect_cz(z)?.into(),
        _ => unreachable!("rejected by the type check"),
    })
}

fn power(s: &ConvexSet, k: f64) -> Res<ConvexSet> {
    if k.fract() != 0.0 || k < 1.0 || k > 64.0 {
        return Err(ExprError::Type(format!("exponent must be an integer in 1..=64, got {k}")));
    }
    let k = k as usize;
    Ok(match s {
        ConvexSet::Polytope(p) => p.cartesian_power(k)?.into(),
        ConvexSet::CZonotope(z) => z.cartesian_power(k)?.into(),
        ConvexSet::Ellipsoid(_) => unreachable!("rejected by the type check"),
    })
}

fn eval_checked(e: &Expr, env: &Env) -> Res<Value> {
    use Value::*;
    Ok(match e {
        Expr::Number(x) => Number(*x),
        Expr::Vector(v) => Vector(DVector::from_column_slice(v)),
        Expr::Name(n) => env.get(n)?.clone(),
        Expr::Neg(x) => match eval_checked(x, env)? {
            Set(s) => Set(scale(&s, -1.0)?),
            Vector(v) => Vector(-v),
            Number(x) => Number(-x),
            Matrix(m) => Matrix(-m),
            Bool(_) => unreachable!(),
        },
        Expr::Binary(op, a, b) => {
            let (va, vb) = (eval_checked(a, env)?, eval_checked(b, env)?);
            binary(*op, va, vb)?
        }
        Expr::Intersect(a, b) => match (eval_checked(a, env)?, eval_checked(b, env)?) {
            (Set(x), Set(y)) => Set(intersect(&x, &y)?),
            _ => unreachable!(),
        },
        Expr::Support(a, b) => match (eval_checked(a, env)?, eval_checked(b, env)?) {
            (Set(x), Vector(v)) => Number(x.support_value(&v)?),
            _ => unreachable!(),
        },
        Expr::Project(a, b, p) => match (eval_checked(a, env)?, eval_checked(b, env)?) {
            (Set(x), Vector(v)) => Vector(x.project_point(&v, *p)?.0),
            _ => unreachable!(),
        },
    })
}

fn binary(op: BinOp, a: Value, b: Value) -> Res<Value> {
    use Value::*;
    Ok(match (op, a, b) {
        (BinOp::Pow, Set(s), Number(k)) => Set(power(&s, k)?),
        (BinOp::At | BinOp::Mul, Matrix(m), Set(s)) => Set(map_set(&m, &s)?),
        (BinOp::At | BinOp::Mul, Set(s), Matrix(m)) => Set(pull_back(&s, &m)?),
        (BinOp::Mul, Number(k), Set(s)) | (BinOp::Mul, Set(s), Number(k)) => Set(scale(&s, k)?),
        (BinOp::At | BinOp::Mul, Matrix(m), Vector(v)) => Vector(m * v),
        (BinOp::At | BinOp::Mul, Matrix(m), Matrix(n)) => Matrix(m * n),
        (BinOp::Mul, Number(k), Vector(v)) | (BinOp::Mul, Vector(v), Number(k)) => Vector(v * k),
        (BinOp::Mul, Number(x), Number(y)) => Number(x * y),
        (BinOp::Add, Set(s), Vector(v)) | (BinOp::Add, Vector(v), Set(s)) => Set(translate(&s, &v)?),
        (BinOp::Sub, Set(s), Vector(v)) => Set(translate(&s, &(-v))?),
        (BinOp::Add, Set(x), Set(y)) => Set(minkowski(&x, &y)?),
        (BinOp::Sub, Set(x), Set(y)) => Set(pontryagin(&x, &y)?),
        (BinOp::Add, Vector(x), Vector(y)) => Vector(x + y),
        (BinOp::Sub, Vector(x), Vector(y)) => Vector(x - y),
        (BinOp::Add, Number(x), Number(y)) => Number(x + y),
        (BinOp::Sub, Number(x), Number(y)) => Number(x - y),
        (BinOp::Le | BinOp::In, Set(x), Set(y)) => Bool(y.contains_set(&x)?),
        (BinOp::Ge, Set(x), Set(y)) => Bool(x.contains_set(&y)?),
        (BinOp::Eq, Set(x), Set(y)) => Bool(x.set_eq(&y)?),
        (BinOp::In, Vector(v), Set(s)) => Bool(s.contains_point(&v)?),
        (op, a, b) => return Err(bad_operands(op.symbol(), Kind::of(&a), Kind::of(&b))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn tree(s: &str) -> String {
        parse(s).unwrap().to_string()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(tree("M @ X + Y"), "((M @ X) + Y)");
        assert_eq!(tree("X - Y - Z"), "((X - Y) - Z)");
        assert_eq!(tree("-X ** 2"), "(-(X ** 2))");
        assert_eq!(tree("A * B @ X"), "((A * B) @ X)");
        assert_eq!(tree("X + Y <= Z in W"), "(((X + Y) <= Z) in W)");
        assert_eq!(tree("[1, -2.5e-1] in P"), "([1, -0.25] in P)");
        assert_eq!(tree("project(X, [0,1], inf)"), "project(X, [0, 1], inf)");
        assert_eq!(tree("M@(X+Y)"), "(M @ (X + Y))");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let pos = |s: &str| match parse(s) {
            Err(ExprError::Syntax { pos, .. }) => pos,
            other => panic!("{s:?}: {other:?}"),
        };
        assert_eq!(pos("X + "), 4);
        assert_eq!(pos("X $ Y"), 2);
        assert_eq!(pos("(X + Y"), 6);
        assert_eq!(pos("frob(X, Y)"), 0);
        assert_eq!(pos("project(X, v, 3)"), 14);
        assert_eq!(pos(""), 0);
        assert_eq!(pos("X Y"), 2);
        assert_eq!(pos("[1, "), 4);
        assert_eq!(pos("project(X, v, "), 14);
    }

    fn env() -> Env {
        let mut env = Env::new();
        let sq = Polytope::rect(&dvector![-1.0, -1.0], &dvector![1.0, 1.0]).unwrap();
        env.insert("X", sq.clone());
        env.insert("Z", ConstrainedZonotope::from_polytope(&sq).unwrap());
        env.insert("E", Ellipsoid::ball(dvector![0.0, 0.0], 1.0).unwrap());
        env.insert("P2", Polytope::from_vertices(DMatrix::identity(3, 3)).unwrap());
        env.insert("M", dmatrix![1.0, 0.0; 0.0, 2.0]);
        env.insert("v", dvector![1.0, 0.0]);
        env
    }

    #[test]
    fn translation_and_membership() {
        let env = env();
        let Value::Set(s) = eval_str("X + v", &env).unwrap() else { panic!() };
        let want: ConvexSet = Polytope::rect(&dvector![0.0, -1.0], &dvector![2.0, 1.0]).unwrap().into();
        assert!(s.set_eq(&want).unwrap());
        assert!(matches!(eval_str("[1,1,1] in P2", &env).unwrap(), Value::Bool(false)));
        assert!(matches!(eval_str("[0.2,0.3,0.5] in P2", &env).unwrap(), Value::Bool(true)));
        assert!(matches!(eval_str("Z == X", &env).unwrap(), Value::Bool(true)));
        assert!(matches!(eval_str("E <= X", &env).unwrap(), Value::Bool(true)));
        assert!(matches!(eval_str("X in E", &env).unwrap(), Value::Bool(false)));
        assert!(matches!(eval_str("X >= M @ X", &env).unwrap(), Value::Bool(false)));
        let Value::Number(h) = eval_str("support(M @ X, [0, 1])", &env).unwrap() else { panic!() };
        assert!((h - 2.0).abs() < 1e-9);
    }

    #[test]
    fn operator_dispatch() {
        let env = env();
        let kind = |s: &str| eval_str(s, &env).unwrap().kind();
        assert_eq!(kind("X - 0.5 * X"), "polytope in R^2");
        assert_eq!(kind("Z + X"), "czonotope in R^2");
        assert_eq!(kind("X + Z"), "czonotope in R^2");
        assert_eq!(kind("Z - E"), "czonotope in R^2");
        assert_eq!(kind("X ** 2"), "polytope in R^4");
        assert_eq!(kind("E @ M"), "ellipsoid in R^2");
        assert_eq!(kind("intersect(X, Z + v)"), "czonotope in R^2");
        assert_eq!(kind("project(X, [3, 0], 2)"), "vector in R^2");
    }

    #[test]
    fn errors_before_evaluation() {
        let env = env();
        let err = |s: &str| eval_str(s, &env).unwrap_err();
        assert_eq!(err("E + E"), ExprError::Compute(Error::UnsupportedOperandPair("ellipsoid ⊕ ellipsoid".into())));
        assert!(matches!(err("X + P2"), ExprError::Compute(Error::DimensionMismatch { expected: 2, found: 3 })));
        assert!(matches!(err("v + X + Q"), ExprError::UnboundName(n) if n == "Q"));
        assert!(matches!(err("v <= X"), ExprError::Type(m) if m.contains("vector in R^2") && m.contains("polytope")));
        assert!(matches!(err("X ** 1.5"), ExprError::Type(_)));
        assert!(matches!(err("project(E, v, 1)"), ExprError::Compute(Error::UnsupportedOperandPair(_))));
    }
}
