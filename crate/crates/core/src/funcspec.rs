//! Rational expressions over named complex variables: parsing, evaluation,
//! grid sampling and per-variable degree detection.
//!
//! Grammar (whitespace is ignored between tokens):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'* base ('^' uint)?
//! base   := number | ident | '(' expr ')'
//! number := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits] ['i']
//! ```
//!
//! Multiplication is always explicit, and `^` binds tighter than unary
//! minus, so `-x^2` is `-(x^2)`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decouple::{GridSpec, SampleTensor};
use crate::error::{Error, Result};
use crate::evaluator::Evaluator;
use crate::lagrange::NodeSet;
use crate::loewner::{estimate_degree, LoewnerSystem, DEFAULT_RANK_TOL};
use crate::numkit::{c64, real};

/// Default Loewner size for degree detection.
pub const DEFAULT_PROBE_BUDGET: usize = 6;

/// Default seed for the frozen values and probe nodes.
pub const DEFAULT_SEED: u64 = 0x5eed_1e55;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    /// Index into the variable list.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    /// Evaluates at `point`, which holds one value per variable.
    pub fn eval(&self, point: &[Complex64], variables: &[String]) -> Result<Complex64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => point[*i],
            Expr::Neg(a) => -a.eval(point, variables)?,
            Expr::Add(a, b) => a.eval(point, variables)? + b.eval(point, variables)?,
            Expr::Sub(a, b) => a.eval(point, variables)? - b.eval(point, variables)?,
            Expr::Mul(a, b) => a.eval(point, variables)? * b.eval(point, variables)?,
            Expr::Div(a, b) => {
                let num = a.eval(point, variables)?;
                let den = b.eval(point, variables)?;
                if den == real(0.0) {
                    return Err(Error::EvalPole {
                        expr: Printer { expr: b, variables }.to_string(),
                        index: None,
                    });
                }
                num / den
            }
            Expr::Pow(a, n) => a.eval(point, variables)?.powu(*n),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.re != 0.0 && c.im != 0.0 => 1,
            Expr::Const(c) if c.re < 0.0 || c.im < 0.0 => 3,
            Expr::Const(_) | Expr::Var(_) => 5,
        }
    }
}

struct Printer<'a> {
    expr: &'a Expr,
    variables: &'a [String],
}

impl Printer<'_> {
    fn child<'b>(&'b self, expr: &'b Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = Printer {
            expr,
            variables: self.variables,
        };
        if expr.precedence() < min {
            write!(f, "({p})")
        } else {
            write!(f, "{p}")
        }
    }
}

fn write_number(x: f64, suffix: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if x < 0.0 {
        write!(f, "-")?;
    }
    write!(f, "{:?}{suffix}", x.abs())
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expr::Const(c) => {
                if c.im == 0.0 {
                    write_number(c.re, "", f)
                } else if c.re == 0.0 {
                    write_number(c.im, "i", f)
                } else {
                    write_number(c.re, "", f)?;
                    write!(f, "{}", if c.im < 0.0 { " - " } else { " + " })?;
                    write!(f, "{:?}i", c.im.abs())
                }
            }
            Expr::Var(i) => write!(f, "{}", self.variables[*i]),
            Expr::Neg(a) => {
                write!(f, "-")?;
                self.child(a, 3, f)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                self.child(a, 1, f)?;
                write!(
                    f,
                    "{}",
                    if matches!(self.expr, Expr::Add(..)) {
                        " + "
                    } else {
                        " - "
                    }
                )?;
                self.child(b, 2, f)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                self.child(a, 2, f)?;
                write!(
                    f,
                    "{}",
                    if matches!(self.expr, Expr::Mul(..)) {
                        "*"
                    } else {
                        "/"
                    }
                )?;
                self.child(b, 3, f)
            }
            Expr::Pow(a, n) => {
                self.child(a, 5, f)?;
                write!(f, "^{n}")
            }
        }
    }
}

/// A parsed expression together with its ordered variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    expr: Expr,
    variables: Vec<String>,
}

impl Function {
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn evaluate(&self, point: &[Complex64]) -> Result<Complex64> {
        if point.len() != self.variables.len() {
            return Err(Error::Shape(format!(
                "point has {} coordinates for {} variables",
                point.len(),
                self.variables.len()
            )));
        }
        self.expr.eval(point, &self.variables)
    }
}

impl Evaluator for Function {
    fn eval(&self, point: &[Complex64]) -> Result<Complex64> {
        self.evaluate(point)
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Printer {
            expr: &self.expr,
            variables: &self.variables,
        }
        .fmt(f)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    variables: &'a [String],
}

impl<'a> Parser<'a> {
    fn syntax<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let mut negations = 0;
        while self.eat('-') {
            negations += 1;
        }
        let mut e = self.base()?;
        if self.eat('^') {
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return self.syntax(start, "expected a nonnegative integer exponent");
            }
            let n: u32 = match digits.parse() {
                Ok(n) => n,
                Err(_) => return self.syntax(start, "exponent too large"),
            };
            e = Expr::Pow(Box::new(e), n);
        }
        for _ in 0..negations {
            e = Expr::Neg(Box::new(e));
        }
        Ok(e)
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        let len = self.src[start..]
            .bytes()
            .take_while(u8::is_ascii_digit)
            .count();
        self.pos += len;
        &self.src[start..start + len]
    }

    fn base(&mut self) -> Result<Expr> {
        let start = match self.peek() {
            None => return self.syntax(self.src.len(), "unexpected end of input"),
            Some(_) => self.pos,
        };
        let c = self.src[start..].chars().next().unwrap_or(' ');
        if self.eat('(') {
            let e = self.expr()?;
            if !self.eat(')') {
                return self.syntax(self.pos, "expected ')'");
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_alphabetic() || c == '_' {
            let len = self.src[start..]
                .char_indices()
                .find(|&(_, ch)| !(ch.is_alphanumeric() || ch == '_'))
                .map_or(self.src.len() - start, |(i, _)| i);
            let name = &self.src[start..start + len];
            self.pos += len;
            return match self.variables.iter().position(|v| v == name) {
                Some(i) => Ok(Expr::Var(i)),
                None => Err(Error::UnknownVariable(name.to_string())),
            };
        }
        self.syntax(start, format!("unexpected character '{c}'"))
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let int = self.digits().len();
        let mut frac = 0;
        if self.src[self.pos..].starts_with('.') {
            self.pos += 1;
            frac = self.digits().len();
        }
        if int + frac == 0 {
            return self.syntax(start, "malformed number");
        }
        let rest = &self.src[self.pos..];
        if rest.starts_with(['e', 'E']) {
            let sign = usize::from(rest[1..].starts_with(['+', '-']));
            let exp = rest[1 + sign..]
                .bytes()
                .take_while(u8::is_ascii_digit)
                .count();
            if exp == 0 {
                return self.syntax(self.pos, "malformed exponent");
            }
            self.pos += 1 + sign + exp;
        }
        let text = &self.src[start..self.pos];
        let value: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) => return self.syntax(start, "malformed number"),
        };
        let imaginary = self.src[self.pos..].starts_with('i')
            && !self.src[self.pos + 1..]
                .chars()
                .next()
                .is_some_and(|ch| ch.is_alphanumeric() || ch == '_');
        if imaginary {
            self.pos += 1;
        }
        if self.src[self.pos..]
            .chars()
            .next()
            .is_some_and(|ch| ch.is_alphanumeric() || ch == '_' || ch == '.')
        {
            return self.syntax(self.pos, "implicit multiplication is not allowed; use '*'");
        }
        Ok(Expr::Const(if imaginary {
            c64(0.0, value)
        } else {
            real(value)
        }))
    }
}

/// Parses `source` over the ordered variable list.
pub fn parse<S: AsRef<str>>(source: &str, variables: &[S]) -> Result<Function> {
    let variables: Vec<String> = variables.iter().map(|v| v.as_ref().to_string()).collect();
    let mut parser = Parser {
        src: source,
        pos: 0,
        variables: &variables,
    };
    let expr = parser.expr()?;
    if parser.peek().is_some() {
        let c = parser.src[parser.pos..].chars().next().unwrap_or(' ');
        return parser.syntax(parser.pos, format!("unexpected character '{c}'"));
    }
    Ok(Function { expr, variables })
}

/// Evaluates a variable-free expression such as `1/3` or `2.5i`.
pub fn parse_constant(source: &str) -> Result<Complex64> {
    parse::<&str>(source, &[])?.evaluate(&[])
}

/// Samples `f` on every grid point; a pole reports its multi-index.
pub fn sample_grid(f: &Function, grid: &GridSpec) -> Result<SampleTensor> {
    if f.arity() != grid.ndim() {
        return Err(Error::Shape(format!(
            "expression has {} variables, grid has {}",
            f.arity(),
            grid.ndim()
        )));
    }
    let values = grid
        .shape()
        .indices()
        .map(|index| {
            f.evaluate(&grid.point(&index)).map_err(|e| match e {
                Error::EvalPole { expr, .. } => Error::EvalPole {
                    expr,
                    index: Some(index.clone()),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SampleTensor::new(grid.shape().clone(), values)
}

/// Settings for [`detect_degrees_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    /// Loewner size `κ = ρ` of each probe.
    pub budget: usize,
    /// Relative singular-value threshold.
    pub tol: f64,
    pub seed: u64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            budget: DEFAULT_PROBE_BUDGET,
            tol: DEFAULT_RANK_TOL,
            seed: DEFAULT_SEED,
        }
    }
}

/// Per-variable degree (`max(deg n, deg d)` along that variable) with the
/// default budget, tolerance and seed.
pub fn detect_degrees(f: &Function) -> Result<Vec<usize>> {
    detect_degrees_with(f, DetectOptions::default())
}

/// Jittered points, one per cell of `[-2, 2]` cut into `2·budget` cells;
/// even cells go right, odd cells go left, so the sets never meet.
fn probe_nodes(rng: &mut ChaCha8Rng, budget: usize) -> Result<(NodeSet, NodeSet)> {
    let cells = 2 * budget;
    let width = 4.0 / cells as f64;
    let mut right = Vec::with_capacity(budget);
    let mut left = Vec::with_capacity(budget);
    for c in 0..cells {
        let x = -2.0 + width * (c as f64 + rng.gen_range(0.2..0.8));
        if c % 2 == 0 {
            right.push(x);
        } else {
            left.push(x);
        }
    }
    Ok((NodeSet::from_reals(&left)?, NodeSet::from_reals(&right)?))
}

pub fn detect_degrees_with(f: &Function, options: DetectOptions) -> Result<Vec<usize>> {
    let n = f.arity();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut degrees = Vec::with_capacity(n);
    for l in 0..n {
        let mut degree = 0;
        for _pass in 0..2 {
            let frozen: Vec<Complex64> = (0..n).map(|_| real(rng.gen_range(0.3..1.7))).collect();
            let (left, right) = probe_nodes(&mut rng, options.budget)?;
            let slice = |s: Complex64| {
                let mut point = frozen.clone();
                point[l] = s;
                f.evaluate(&point)
            };
            let sys = LoewnerSystem::from_function(left, right, slice)?;
            let rank = estimate_degree(&sys, options.tol).rank;
            if rank >= options.budget {
                return Err(Error::BudgetTooSmall {
                    variable: f.variables()[l].clone(),
                    budget: options.budget,
                });
            }
            degree = degree.max(rank);
        }
        degrees.push(degree);
    }
    Ok(degrees)
}
