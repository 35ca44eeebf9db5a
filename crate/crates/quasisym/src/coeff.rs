//! Expression language for time-dependent coefficients.
//!
//! The grammar is deliberately tiny: the single variable `t`, real literals,
//! `+ - * /`, integer powers `^`, unary minus, the functions `sin`, `cos`,
//! `exp`, `abs`, `max`, `min`, and the piecewise form
//! `piece([b1, b2, ...], [e1, e2, ...])` whose branches are left-closed at
//! their boundaries. A hand-rolled recursive-descent parser keeps byte-exact
//! error offsets; evaluation is exact recursive interpretation.

use std::fmt::Write as _;
use thiserror::Error;

/// Parsed coefficient expression; cheap to clone and evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientExpr {
    Num(f64),
    Time,
    Neg(Box<CoefficientExpr>),
    Add(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Sub(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Mul(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Div(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Pow(Box<CoefficientExpr>, i32),
    Sin(Box<CoefficientExpr>),
    Cos(Box<CoefficientExpr>),
    Exp(Box<CoefficientExpr>),
    Abs(Box<CoefficientExpr>),
    Max(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Min(Box<CoefficientExpr>, Box<CoefficientExpr>),
    /// Branch boundaries (strictly increasing) and the branch expressions;
    /// branch `i` covers `[b_{i-1}, b_i)`, so exactly one more expression
    /// than boundaries.
    Piece(Vec<f64>, Vec<CoefficientExpr>),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error evaluating `{context}` at t = {t}")]
    Domain { context: &'static str, t: f64 },
    #[error("finite-difference stencil leaves the domain [{lo}, {hi}] at t = {t}")]
    StencilOutOfDomain { t: f64, lo: f64, hi: f64 },
}

/// Parse a coefficient expression from source text.
pub fn parse(src: &str) -> Result<CoefficientExpr, ParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::Syntax {
            offset: p.pos,
            expected: "end of input or an operator".into(),
        });
    }
    Ok(e)
}

/// Evaluate at time `t`; piecewise branches are selected by `t` itself.
pub fn eval(e: &CoefficientExpr, t: f64) -> Result<f64, EvalError> {
    eval_pinned(e, t, t)
}

/// Evaluate at time `t` while selecting every piecewise branch as if the time
/// were `branch_t`. Integrators use this to keep all stage evaluations of a
/// step on the branch of the step's own smooth interval.
pub fn eval_pinned(e: &CoefficientExpr, t: f64, branch_t: f64) -> Result<f64, EvalError> {
    use CoefficientExpr::*;
    let finite = |v: f64, context: &'static str, t: f64| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain { context, t })
        }
    };
    match e {
        Num(v) => Ok(*v),
        Time => Ok(t),
        Neg(a) => Ok(-eval_pinned(a, t, branch_t)?),
        Add(a, b) => finite(
            eval_pinned(a, t, branch_t)? + eval_pinned(b, t, branch_t)?,
            "addition",
            t,
        ),
        Sub(a, b) => finite(
            eval_pinned(a, t, branch_t)? - eval_pinned(b, t, branch_t)?,
            "subtraction",
            t,
        ),
        Mul(a, b) => finite(
            eval_pinned(a, t, branch_t)? * eval_pinned(b, t, branch_t)?,
            "multiplication",
            t,
        ),
        Div(a, b) => {
            let d = eval_pinned(b, t, branch_t)?;
            if d == 0.0 {
                return Err(EvalError::Domain {
                    context: "division by zero",
                    t,
                });
            }
            finite(eval_pinned(a, t, branch_t)? / d, "division", t)
        }
        Pow(a, k) => {
            let base = eval_pinned(a, t, branch_t)?;
            if base == 0.0 && *k < 0 {
                return Err(EvalError::Domain {
                    context: "zero raised to a negative power",
                    t,
                });
            }
            finite(base.powi(*k), "power", t)
        }
        Sin(a) => Ok(eval_pinned(a, t, branch_t)?.sin()),
        Cos(a) => Ok(eval_pinned(a, t, branch_t)?.cos()),
        Exp(a) => finite(eval_pinned(a, t, branch_t)?.exp(), "exp overflow", t),
        Abs(a) => Ok(eval_pinned(a, t, branch_t)?.abs()),
        Max(a, b) => Ok(eval_pinned(a, t, branch_t)?.max(eval_pinned(b, t, branch_t)?)),
        Min(a, b) => Ok(eval_pinned(a, t, branch_t)?.min(eval_pinned(b, t, branch_t)?)),
        Piece(bounds, exprs) => {
            let idx = bounds.partition_point(|b| *b <= branch_t);
            eval_pinned(&exprs[idx], t, branch_t)
        }
    }
}

/// All interior jump points (piecewise boundaries) of the expression, sorted
/// and deduplicated.
pub fn jump_points(e: &CoefficientExpr) -> Vec<f64> {
    let mut out = Vec::new();
    collect_jumps(e, &mut out);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn collect_jumps(e: &CoefficientExpr, out: &mut Vec<f64>) {
    use CoefficientExpr::*;
    match e {
        Num(_) | Time => {}
        Neg(a) | Pow(a, _) | Sin(a) | Cos(a) | Exp(a) | Abs(a) => collect_jumps(a, out),
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Max(a, b) | Min(a, b) => {
            collect_jumps(a, out);
            collect_jumps(b, out);
        }
        Piece(bounds, exprs) => {
            out.extend_from_slice(bounds);
            for x in exprs {
                collect_jumps(x, out);
            }
        }
    }
}

/// Render the expression back to parseable source. Fully parenthesised; float
/// literals use the shortest round-trip-exact form, so
/// `eval(parse(print(e)), t) == eval(e, t)` bit for bit.
pub fn print(e: &CoefficientExpr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_expr(e: &CoefficientExpr, out: &mut String) {
    use CoefficientExpr::*;
    match e {
        Num(v) => write_num(*v, out),
        Time => out.push('t'),
        Neg(a) => {
            out.push_str("(-");
            write_expr(a, out);
            out.push(')');
        }
        Add(a, b) => write_binary(a, "+", b, out),
        Sub(a, b) => write_binary(a, "-", b, out),
        Mul(a, b) => write_binary(a, "*", b, out),
        Div(a, b) => write_binary(a, "/", b, out),
        Pow(a, k) => {
            out.push('(');
            write_expr(a, out);
            let _ = write!(out, "^{k}");
            out.push(')');
        }
        Sin(a) => write_call("sin", &[a], out),
        Cos(a) => write_call("cos", &[a], out),
        Exp(a) => write_call("exp", &[a], out),
        Abs(a) => write_call("abs", &[a], out),
        Max(a, b) => write_call("max", &[a, b], out),
        Min(a, b) => write_call("min", &[a, b], out),
        Piece(bounds, exprs) => {
            out.push_str("piece([");
            for (i, b) in bounds.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                // boundary positions take a bare sign, not a parenthesised
                // expression, so bypass the literal wrapper here
                let _ = write!(out, "{b}");
            }
            out.push_str("], [");
            for (i, x) in exprs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(x, out);
            }
            out.push_str("])");
        }
    }
}

fn write_binary(a: &CoefficientExpr, op: &str, b: &CoefficientExpr, out: &mut String) {
    out.push('(');
    write_expr(a, out);
    out.push_str(op);
    write_expr(b, out);
    out.push(')');
}

fn write_call(name: &str, args: &[&CoefficientExpr], out: &mut String) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(a, out);
    }
    out.push(')');
}

fn write_num(v: f64, out: &mut String) {
    if v < 0.0 {
        let _ = write!(out, "({v})");
    } else {
        let _ = write!(out, "{v}");
    }
}

/// Central finite difference of `order` 1 or 2 with one Richardson
/// extrapolation step; one-sided stencils of matching accuracy at the edges of
/// `domain`. Step `h` must let the chosen stencil fit inside the domain.
pub fn derivative_fd(
    e: &CoefficientExpr,
    t: f64,
    order: u32,
    h: f64,
    domain: (f64, f64),
) -> Result<f64, EvalError> {
    assert!(order == 1 || order == 2, "derivative order must be 1 or 2");
    assert!(h > 0.0, "step must be positive");
    let (lo, hi) = domain;
    let f = |x: f64| eval(e, x);
    let central_ok = t - h >= lo && t + h <= hi;
    let fwd_ok = t + 3.0 * h <= hi;
    let bwd_ok = t - 3.0 * h >= lo;
    if !central_ok && !fwd_ok && !bwd_ok {
        return Err(EvalError::StencilOutOfDomain { t, lo, hi });
    }
    let d = |step: f64| -> Result<f64, EvalError> {
        Ok(match (order, central_ok, fwd_ok) {
            (1, true, _) => (f(t + step)? - f(t - step)?) / (2.0 * step),
            (1, false, true) => {
                (-3.0 * f(t)? + 4.0 * f(t + step)? - f(t + 2.0 * step)?) / (2.0 * step)
            }
            (1, false, false) => {
                (3.0 * f(t)? - 4.0 * f(t - step)? + f(t - 2.0 * step)?) / (2.0 * step)
            }
            (2, true, _) => (f(t + step)? - 2.0 * f(t)? + f(t - step)?) / (step * step),
            (2, false, true) => {
                (2.0 * f(t)? - 5.0 * f(t + step)? + 4.0 * f(t + 2.0 * step)?
                    - f(t + 3.0 * step)?)
                    / (step * step)
            }
            (2, false, false) => {
                (2.0 * f(t)? - 5.0 * f(t - step)? + 4.0 * f(t - 2.0 * step)?
                    - f(t - 3.0 * step)?)
                    / (step * step)
            }
            _ => unreachable!(),
        })
    };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn accept(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8, what: &str) -> Result<(), ParseError> {
        if self.accept(c) {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.pos,
                expected: what.into(),
            })
        }
    }

    fn expr(&mut self) -> Result<CoefficientExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.accept(b'+') {
                lhs = CoefficientExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.accept(b'-') {
                lhs = CoefficientExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<CoefficientExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.accept(b'*') {
                lhs = CoefficientExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.accept(b'/') {
                lhs = CoefficientExpr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<CoefficientExpr, ParseError> {
        if self.accept(b'-') {
            Ok(CoefficientExpr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<CoefficientExpr, ParseError> {
        let mut base = self.primary()?;
        while self.accept(b'^') {
            let k = self.int_literal()?;
            base = CoefficientExpr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn int_literal(&mut self) -> Result<i32, ParseError> {
        let start = self.pos;
        let neg = self.accept(b'-');
        let digits_start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(ParseError::Syntax {
                offset: start,
                expected: "an integer exponent".into(),
            });
        }
        let text = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
        let v: i32 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: "an exponent within i32 range".into(),
        })?;
        self.skip_ws();
        Ok(if neg { -v } else { v })
    }

    fn primary(&mut self) -> Result<CoefficientExpr, ParseError> {
        let offset = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                self.expect(b')', "a closing `)`")?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident();
                self.skip_ws();
                match name {
                    "t" => Ok(CoefficientExpr::Time),
                    "sin" => Ok(CoefficientExpr::Sin(Box::new(self.paren_arg()?))),
                    "cos" => Ok(CoefficientExpr::Cos(Box::new(self.paren_arg()?))),
                    "exp" => Ok(CoefficientExpr::Exp(Box::new(self.paren_arg()?))),
                    "abs" => Ok(CoefficientExpr::Abs(Box::new(self.paren_arg()?))),
                    "max" => {
                        let (a, b) = self.paren_args2()?;
                        Ok(CoefficientExpr::Max(Box::new(a), Box::new(b)))
                    }
                    "min" => {
                        let (a, b) = self.paren_args2()?;
                        Ok(CoefficientExpr::Min(Box::new(a), Box::new(b)))
                    }
                    "piece" => self.piece(offset),
                    other => Err(ParseError::UnknownIdentifier {
                        offset,
                        name: other.into(),
                    }),
                }
            }
            _ => Err(ParseError::Syntax {
                offset,
                expected: "a number, `t`, a function call, or `(`".into(),
            }),
        }
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn paren_arg(&mut self) -> Result<CoefficientExpr, ParseError> {
        self.expect(b'(', "a `(` opening the argument")?;
        let e = self.expr()?;
        self.expect(b')', "a closing `)`")?;
        Ok(e)
    }

    fn paren_args2(&mut self) -> Result<(CoefficientExpr, CoefficientExpr), ParseError> {
        self.expect(b'(', "a `(` opening the arguments")?;
        let a = self.expr()?;
        self.expect(b',', "a `,` between the two arguments")?;
        let b = self.expr()?;
        self.expect(b')', "a closing `)`")?;
        Ok((a, b))
    }

    fn piece(&mut self, offset: usize) -> Result<CoefficientExpr, ParseError> {
        self.expect(b'(', "a `(` opening the piece arguments")?;
        self.expect(b'[', "a `[` opening the boundary list")?;
        let mut bounds = Vec::new();
        if self.peek() != Some(b']') {
            loop {
                let neg = self.accept(b'-');
                let n = self.number()?;
                let CoefficientExpr::Num(v) = n else { unreachable!() };
                bounds.push(if neg { -v } else { v });
                if !self.accept(b',') {
                    break;
                }
            }
        }
        self.expect(b']', "a closing `]` after the boundaries")?;
        self.expect(b',', "a `,` between boundary and branch lists")?;
        self.expect(b'[', "a `[` opening the branch list")?;
        let mut exprs = Vec::new();
        loop {
            exprs.push(self.expr()?);
            if !self.accept(b',') {
                break;
            }
        }
        self.expect(b']', "a closing `]` after the branches")?;
        self.expect(b')', "a closing `)`")?;
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ParseError::Syntax {
                offset,
                expected: "strictly increasing piece boundaries".into(),
            });
        }
        if exprs.len() != bounds.len() + 1 {
            return Err(ParseError::Syntax {
                offset,
                expected: "one more branch than boundaries".into(),
            });
        }
        Ok(CoefficientExpr::Piece(bounds, exprs))
    }

    fn number(&mut self) -> Result<CoefficientExpr, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.pos == start {
            return Err(ParseError::Syntax {
                offset: start,
                expected: "a numeric literal".into(),
            });
        }
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            self.pos += 1;
            if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == digits {
                return Err(ParseError::Syntax {
                    offset: self.pos,
                    expected: "digits in the exponent".into(),
                });
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: "a parseable numeric literal".into(),
        })?;
        self.skip_ws();
        Ok(CoefficientExpr::Num(v))
    }
}
