//! Arithmetic expressions in the variables `x1..x4`.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'pi' | 'e' | variable | func '(' args ')' | '(' expr ')' | '|' expr '|'
//! ```
//!
//! Variables are `x1`, ..., `x4`; a bare `x` means `x1`. Functions are `abs`, `sin`,
//! `cos`, `exp`, `sqrt`, `ln` (one argument) and `min`, `max` (two arguments). The
//! exponent of `^` must evaluate to a constant. Error positions are 1-based character
//! columns.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Maximal nesting depth of a parsed expression.
pub const MAX_DEPTH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Ln,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Zero-based axis index.
    Var(usize),
    Const(f64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(axis: usize) -> Self {
        Expr::Var(axis)
    }

    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Parses `text`, requiring every variable index to be below `dim`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let mut parser = Parser { chars: text.chars().collect(), pos: 0, dim };
        let expr = parser.expr()?;
        parser.skip_ws();
        if parser.pos < parser.chars.len() {
            return Err(parser.error(format!("unexpected `{}`", parser.chars[parser.pos])));
        }
        if expr.depth() > MAX_DEPTH {
            return Err(Error::Expression {
                position: 1,
                message: format!("expression nesting exceeds depth {MAX_DEPTH}"),
            });
        }
        Ok(expr)
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Const(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Largest variable index used plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Var(i) => i + 1,
            Expr::Const(_) => 0,
            Expr::Unary(_, a) => a.arity(),
            Expr::Binary(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.arity() == 0
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Const(c) => *c,
            Expr::Unary(op, a) => {
                let v = a.eval(x);
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Abs => v.abs(),
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Exp => v.exp(),
                    UnaryOp::Sqrt => v.sqrt(),
                    UnaryOp::Ln => v.ln(),
                }
            }
            Expr::Binary(op, a, b) => {
                let (u, v) = (a.eval(x), b.eval(x));
                match op {
                    BinaryOp::Add => u + v,
                    BinaryOp::Sub => u - v,
                    BinaryOp::Mul => u * v,
                    BinaryOp::Div => u / v,
                    BinaryOp::Pow => pow(u, v),
                    BinaryOp::Min => u.min(v),
                    BinaryOp::Max => u.max(v),
                }
            }
        }
    }

    /// Samples the expression at the cell centres of `grid`.
    pub fn sample(&self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }

    /// Symbolic partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Result<Expr> {
        use BinaryOp::*;
        use UnaryOp::*;
        Ok(match self {
            Expr::Var(i) => Expr::Const(if *i == axis { 1.0 } else { 0.0 }),
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Unary(op, a) => {
                let da = a.derivative(axis)?;
                let a = (**a).clone();
                match op {
                    Neg => neg(da),
                    Sin => mul(Expr::unary(Cos, a), da),
                    Cos => neg(mul(Expr::unary(Sin, a), da)),
                    Exp => mul(Expr::unary(Exp, a), da),
                    Sqrt => div(da, mul(Expr::Const(2.0), Expr::unary(Sqrt, a))),
                    Ln => div(da, a),
                    Abs => {
                        return Err(Error::Unsupported(
                            "abs is not differentiable symbolically; use finite-difference mode".into(),
                        ))
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let (u, v) = ((**a).clone(), (**b).clone());
                match op {
                    Add => add(a.derivative(axis)?, b.derivative(axis)?),
                    Sub => sub(a.derivative(axis)?, b.derivative(axis)?),
                    Mul => add(mul(a.derivative(axis)?, v), mul(u, b.derivative(axis)?)),
                    Div => div(
                        sub(mul(a.derivative(axis)?, v.clone()), mul(u, b.derivative(axis)?)),
                        Expr::binary(Pow, v, Expr::Const(2.0)),
                    ),
                    Pow => {
                        let c = match v {
                            Expr::Const(c) => c,
                            _ => {
                                return Err(Error::Unsupported(
                                    "power with a non-constant exponent".into(),
                                ))
                            }
                        };
                        if c == 0.0 {
                            Expr::Const(0.0)
                        } else {
                            mul(
                                mul(Expr::Const(c), power(u, c - 1.0)),
                                a.derivative(axis)?,
                            )
                        }
                    }
                    Min | Max => {
                        return Err(Error::Unsupported(
                            "min/max are not differentiable symbolically; use finite-difference mode"
                                .into(),
                        ))
                    }
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 3,
            Expr::Binary(BinaryOp::Pow, _, _) => 4,
            _ => 5,
        }
    }
}

/// `u^v` with the convention that integral exponents of negative bases stay real.
fn pow(u: f64, v: f64) -> f64 {
    if v == v.trunc() && v.abs() < 64.0 {
        u.powi(v as i32)
    } else {
        u.powf(v)
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::unary(UnaryOp::Neg, other),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(x), _) if *x == 0.0 => b,
        (_, Expr::Const(y)) if *y == 0.0 => a,
        _ => Expr::binary(BinaryOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), _) if *x == 0.0 => neg(b),
        _ => Expr::binary(BinaryOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(x), _) | (_, Expr::Const(x)) if *x == 0.0 => Expr::Const(0.0),
        (Expr::Const(x), _) if *x == 1.0 => b,
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::binary(BinaryOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::binary(BinaryOp::Div, a, b),
    }
}

fn power(u: Expr, c: f64) -> Expr {
    if c == 0.0 {
        Expr::Const(1.0)
    } else if c == 1.0 {
        u
    } else {
        Expr::binary(BinaryOp::Pow, u, Expr::Const(c))
    }
}

fn format_number(c: f64) -> String {
    let s = format!("{c:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool| {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Const(c) => write!(f, "{}", format_number(*c)),
            Expr::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                let parens = a.precedence() < 4 || matches!(**a, Expr::Const(_));
                wrap(f, a, parens)
            }
            Expr::Unary(op, a) => {
                let name = match op {
                    UnaryOp::Abs => "abs",
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Ln => "ln",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            Expr::Binary(op @ (BinaryOp::Min | BinaryOp::Max), a, b) => {
                let name = if *op == BinaryOp::Min { "min" } else { "max" };
                write!(f, "{name}({a}, {b})")
            }
            Expr::Binary(op, a, b) => {
                let (symbol, prec) = match op {
                    BinaryOp::Add => (" + ", 1),
                    BinaryOp::Sub => (" - ", 1),
                    BinaryOp::Mul => ("*", 2),
                    BinaryOp::Div => ("/", 2),
                    BinaryOp::Pow => ("^", 4),
                    _ => unreachable!(),
                };
                if *op == BinaryOp::Pow {
                    wrap(f, a, a.precedence() <= 4)?;
                    write!(f, "^")?;
                    wrap(f, b, b.precedence() < 5)
                } else {
                    // A leading negative constant must not fold into a signed literal.
                    let left_parens = a.precedence() < prec
                        || (prec == 1 && matches!(**a, Expr::Const(c) if c.is_sign_negative()));
                    wrap(f, a, left_parens)?;
                    write!(f, "{symbol}")?;
                    wrap(f, b, b.precedence() <= prec)
                }
            }
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn error(&self, message: String) -> Error {
        Error::Expression { position: self.pos + 1, message }
    }

    fn error_at(&self, position: usize, message: String) -> Error {
        Error::Expression { position: position + 1, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            match self.chars.get(self.pos) {
                Some(found) => Err(self.error(format!("expected `{c}` but found `{found}`"))),
                None => Err(self.error(format!("expected `{c}` but reached the end"))),
            }
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinaryOp::Add,
                Some('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinaryOp::Mul,
                Some('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some('-') {
            self.pos += 1;
            let start = self.pos;
            let digit_follows = matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.');
            if digit_follows {
                // `-<number>` is a signed literal unless a power follows it.
                let value = self.number()?;
                if self.peek() != Some('^') {
                    return Ok(Expr::Const(-value));
                }
                self.pos = start;
            }
            let arg = self.unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, arg));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let exponent = self.unary()?;
            if !exponent.is_constant() {
                return Err(self.error_at(start, "exponent of `^` must be constant".into()));
            }
            let value = exponent.eval(&[]);
            if !value.is_finite() {
                return Err(self.error_at(start, "exponent of `^` is not finite".into()));
            }
            return Ok(Expr::binary(BinaryOp::Pow, base, Expr::Const(value)));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.') {
            self.pos += 1;
        }
        if self.pos < self.chars.len() && (self.chars[self.pos] == 'e' || self.chars[self.pos] == 'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.chars.len() && (self.chars[self.pos] == '+' || self.chars[self.pos] == '-') {
                self.pos += 1;
            }
            if self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map_err(|_| self.error_at(start, format!("malformed number `{text}`")))
    }

    fn atom(&mut self) -> Result<Expr> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.error("unexpected end of expression".into())),
        };
        if c.is_ascii_digit() || c == '.' {
            return Ok(Expr::Const(self.number()?));
        }
        if c == '(' {
            self.pos += 1;
            let inner = self.expr()?;
            self.expect(')')?;
            return Ok(inner);
        }
        if c == '|' {
            self.pos += 1;
            let inner = self.expr()?;
            self.expect('|')?;
            return Ok(Expr::unary(UnaryOp::Abs, inner));
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let name: String = self.chars[start..self.pos].iter().collect();
            return self.identifier(&name, start);
        }
        Err(self.error(format!("unexpected `{c}`")))
    }

    fn identifier(&mut self, name: &str, start: usize) -> Result<Expr> {
        let unary = match name {
            "abs" => Some(UnaryOp::Abs),
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "exp" => Some(UnaryOp::Exp),
            "sqrt" => Some(UnaryOp::Sqrt),
            "ln" | "log" => Some(UnaryOp::Ln),
            _ => None,
        };
        if let Some(op) = unary {
            self.expect('(')?;
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(Expr::unary(op, arg));
        }
        if name == "min" || name == "max" {
            self.expect('(')?;
            let a = self.expr()?;
            self.expect(',')?;
            let b = self.expr()?;
            self.expect(')')?;
            let op = if name == "min" { BinaryOp::Min } else { BinaryOp::Max };
            return Ok(Expr::binary(op, a, b));
        }
        match name {
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "e" => return Ok(Expr::Const(std::f64::consts::E)),
            "x" => return self.variable(0, start),
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if let Ok(k) = digits.parse::<usize>() {
                if k == 0 {
                    return Err(self.error_at(start, "axis indices start at x1".into()));
                }
                return self.variable(k - 1, start);
            }
        }
        Err(self.error_at(start, format!("unknown identifier `{name}`")))
    }

    fn variable(&self, axis: usize, start: usize) -> Result<Expr> {
        if axis >= self.dim {
            return Err(self.error_at(start, "axis index out of range".into()));
        }
        Ok(Expr::Var(axis))
    }
}
