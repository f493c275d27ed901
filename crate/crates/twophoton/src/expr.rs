//! Expression trees over a fixed symbol set, with exact first derivatives.
//!
//! Hamiltonians and bracket operands are arbitrary smooth functions of the
//! generator symbols. They are parsed from infix text (precedence
//! `^` > unary `-` > `*` `/` > `+` `-`, `^` right-associative) and evaluated
//! in forward mode: every node propagates a value together with its partial
//! derivatives with respect to all context symbols, so gradients carry no
//! truncation error. Only first derivatives are produced; the bracket engine
//! never needs more.

use std::collections::HashMap;
use std::fmt;

use crate::{Error, Result};

/// Upper bound on symbols per context; contexts here are 6 generators plus a
/// handful of subalgebra Casimir names.
pub const MAX_SYMBOLS: usize = 16;

/// Ordered set of admissible symbol names. The order fixes the meaning of
/// binding slices and gradient components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolContext {
    names: Vec<String>,
}

impl SymbolContext {
    /// Build a context from unique names. Panics on duplicates or overflow;
    /// contexts are constructed from fixed tables, never from user input.
    pub fn new(names: &[&str]) -> Self {
        assert!(names.len() <= MAX_SYMBOLS, "too many symbols in context");
        let mut seen = Vec::new();
        for n in names {
            assert!(!seen.contains(n), "duplicate symbol `{n}` in context");
            seen.push(n);
        }
        SymbolContext {
            names: names.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Whitelisted unary functions. The list is closed so the domain-error
/// surface stays auditable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Parsed expression tree. Symbols are stored as indices into the
/// `SymbolContext` the tree was parsed against.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Symbol(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Value plus partial derivatives, propagated through every node.
#[derive(Clone, Copy)]
struct Dual {
    v: f64,
    g: [f64; MAX_SYMBOLS],
}

impl Dual {
    fn constant(v: f64) -> Dual {
        Dual {
            v,
            g: [0.0; MAX_SYMBOLS],
        }
    }
}

// constructor names mirror the node kinds; they build trees, they are not
// the arithmetic operator traits
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    /// Symbol node by name; the caller's context defines the index.
    pub fn symbol(ctx: &SymbolContext, name: &str) -> Result<Expr> {
        ctx.index_of(name)
            .map(Expr::Symbol)
            .ok_or_else(|| Error::UnknownSymbol {
                name: name.to_string(),
                pos: 0,
            })
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::Pow(Box::new(a), Box::new(b))
    }

    /// Negation, folding bare constants so printed forms re-parse to the
    /// identical tree.
    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// True if the symbol with this context index occurs in the tree.
    pub fn uses_symbol(&self, index: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Symbol(i) => *i == index,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_symbol(index),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.uses_symbol(index) || b.uses_symbol(index),
        }
    }

    /// True if any division in the tree has a denominator involving the
    /// given symbol. Drives the singularity guard in the integrator.
    pub fn divides_by_symbol(&self, index: usize) -> bool {
        match self {
            Expr::Const(_) | Expr::Symbol(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.divides_by_symbol(index),
            Expr::Div(a, b) => {
                b.uses_symbol(index) || a.divides_by_symbol(index) || b.divides_by_symbol(index)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Pow(a, b) => {
                a.divides_by_symbol(index) || b.divides_by_symbol(index)
            }
        }
    }

    /// Rebuild the tree over a different context. Symbols found in `map` are
    /// replaced by the mapped expression (already over `dst`); all others are
    /// re-resolved by name in `dst`.
    pub fn substitute(
        &self,
        src: &SymbolContext,
        dst: &SymbolContext,
        map: &HashMap<&str, Expr>,
    ) -> Result<Expr> {
        Ok(match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Symbol(i) => {
                let name = src.name(*i);
                if let Some(replacement) = map.get(name) {
                    replacement.clone()
                } else {
                    Expr::Symbol(dst.index_of(name).ok_or_else(|| Error::UnknownSymbol {
                        name: name.to_string(),
                        pos: 0,
                    })?)
                }
            }
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(src, dst, map)?)),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(src, dst, map)?)),
            Expr::Add(a, b) => {
                Expr::add(a.substitute(src, dst, map)?, b.substitute(src, dst, map)?)
            }
            Expr::Sub(a, b) => {
                Expr::sub(a.substitute(src, dst, map)?, b.substitute(src, dst, map)?)
            }
            Expr::Mul(a, b) => {
                Expr::mul(a.substitute(src, dst, map)?, b.substitute(src, dst, map)?)
            }
            Expr::Div(a, b) => {
                Expr::div(a.substitute(src, dst, map)?, b.substitute(src, dst, map)?)
            }
            Expr::Pow(a, b) => {
                Expr::pow(a.substitute(src, dst, map)?, b.substitute(src, dst, map)?)
            }
        })
    }

    /// Evaluate the value only.
    pub fn eval(&self, ctx: &SymbolContext, values: &[f64]) -> Result<f64> {
        debug_assert_eq!(values.len(), ctx.len());
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Symbol(i) => values[*i],
            Expr::Neg(a) => -a.eval(ctx, values)?,
            Expr::Add(a, b) => a.eval(ctx, values)? + b.eval(ctx, values)?,
            Expr::Sub(a, b) => a.eval(ctx, values)? - b.eval(ctx, values)?,
            Expr::Mul(a, b) => a.eval(ctx, values)? * b.eval(ctx, values)?,
            Expr::Div(a, b) => {
                let den = b.eval(ctx, values)?;
                if den == 0.0 {
                    return Err(self.domain_err(ctx, "division by zero"));
                }
                a.eval(ctx, values)? / den
            }
            Expr::Pow(a, b) => {
                let base = a.eval(ctx, values)?;
                let exp = b.eval(ctx, values)?;
                self.checked_pow(ctx, base, exp)?
            }
            Expr::Call(f, a) => {
                let x = a.eval(ctx, values)?;
                self.checked_call(ctx, *f, x)?
            }
        };
        if !v.is_finite() {
            return Err(self.domain_err(ctx, "non-finite value"));
        }
        Ok(v)
    }

    /// Evaluate value and the full gradient with respect to the context
    /// symbols (forward mode, exact).
    pub fn eval_with_gradient(
        &self,
        ctx: &SymbolContext,
        values: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let d = self.eval_dual(ctx, values)?;
        Ok((d.v, d.g[..ctx.len()].to_vec()))
    }

    fn eval_dual(&self, ctx: &SymbolContext, values: &[f64]) -> Result<Dual> {
        debug_assert_eq!(values.len(), ctx.len());
        let k = ctx.len();
        let d = match self {
            Expr::Const(c) => Dual::constant(*c),
            Expr::Symbol(i) => {
                let mut d = Dual::constant(values[*i]);
                d.g[*i] = 1.0;
                d
            }
            Expr::Neg(a) => {
                let mut d = a.eval_dual(ctx, values)?;
                d.v = -d.v;
                for gi in &mut d.g[..k] {
                    *gi = -*gi;
                }
                d
            }
            Expr::Add(a, b) => {
                let da = a.eval_dual(ctx, values)?;
                let db = b.eval_dual(ctx, values)?;
                let mut d = Dual::constant(da.v + db.v);
                for i in 0..k {
                    d.g[i] = da.g[i] + db.g[i];
                }
                d
            }
            Expr::Sub(a, b) => {
                let da = a.eval_dual(ctx, values)?;
                let db = b.eval_dual(ctx, values)?;
                let mut d = Dual::constant(da.v - db.v);
                for i in 0..k {
                    d.g[i] = da.g[i] - db.g[i];
                }
                d
            }
            Expr::Mul(a, b) => {
                let da = a.eval_dual(ctx, values)?;
                let db = b.eval_dual(ctx, values)?;
                let mut d = Dual::constant(da.v * db.v);
                for i in 0..k {
                    d.g[i] = da.g[i] * db.v + da.v * db.g[i];
                }
                d
            }
            Expr::Div(a, b) => {
                let da = a.eval_dual(ctx, values)?;
                let db = b.eval_dual(ctx, values)?;
                if db.v == 0.0 {
                    return Err(self.domain_err(ctx, "division by zero"));
                }
                let mut d = Dual::constant(da.v / db.v);
                let inv2 = 1.0 / (db.v * db.v);
                for i in 0..k {
                    d.g[i] = (da.g[i] * db.v - da.v * db.g[i]) * inv2;
                }
                d
            }
            Expr::Pow(a, b) => {
                let da = a.eval_dual(ctx, values)?;
                let db = b.eval_dual(ctx, values)?;
                self.pow_dual(ctx, k, da, db)?
            }
            Expr::Call(f, a) => {
                let da = a.eval_dual(ctx, values)?;
                let (v, slope) = match f {
                    Func::Sin => (da.v.sin(), da.v.cos()),
                    Func::Cos => (da.v.cos(), -da.v.sin()),
                    Func::Exp => {
                        let e = da.v.exp();
                        (e, e)
                    }
                    Func::Log => {
                        if da.v <= 0.0 {
                            return Err(self.domain_err(ctx, "log of non-positive argument"));
                        }
                        (da.v.ln(), 1.0 / da.v)
                    }
                    Func::Sqrt => {
                        if da.v < 0.0 {
                            return Err(self.domain_err(ctx, "sqrt of negative argument"));
                        }
                        let r = da.v.sqrt();
                        if da.v == 0.0 {
                            // derivative blows up at 0 only if the argument varies
                            if da.g[..k].iter().any(|&gi| gi != 0.0) {
                                return Err(self.domain_err(ctx, "sqrt derivative at zero"));
                            }
                            (r, 0.0)
                        } else {
                            (r, 0.5 / r)
                        }
                    }
                    Func::Abs => (da.v.abs(), da.v.signum() * f64::from(da.v != 0.0)),
                };
                let mut d = Dual::constant(v);
                for i in 0..k {
                    d.g[i] = slope * da.g[i];
                }
                d
            }
        };
        if !d.v.is_finite() || d.g[..k].iter().any(|gi| !gi.is_finite()) {
            return Err(self.domain_err(ctx, "non-finite value or derivative"));
        }
        Ok(d)
    }

    fn pow_dual(&self, ctx: &SymbolContext, k: usize, da: Dual, db: Dual) -> Result<Dual> {
        let exp_constant = db.g[..k].iter().all(|&gi| gi == 0.0);
        if exp_constant {
            let n = db.v;
            let v = self.checked_pow(ctx, da.v, n)?;
            // d(a^n) = n a^(n-1) da; a^(n-1) needs the same domain care
            let slope = if n == 0.0 {
                0.0
            } else if da.v == 0.0 {
                if n == 1.0 {
                    1.0
                } else if n > 1.0 {
                    0.0
                } else {
                    return Err(self.domain_err(ctx, "derivative of x^n at x = 0 with n < 1"));
                }
            } else {
                n * self.checked_pow(ctx, da.v, n - 1.0)?
            };
            let mut d = Dual::constant(v);
            for i in 0..k {
                d.g[i] = slope * da.g[i];
            }
            Ok(d)
        } else {
            // variable exponent: a^b = exp(b ln a), requires a > 0
            if da.v <= 0.0 {
                return Err(self.domain_err(ctx, "non-positive base with variable exponent"));
            }
            let ln_a = da.v.ln();
            let v = (db.v * ln_a).exp();
            let mut d = Dual::constant(v);
            for i in 0..k {
                d.g[i] = v * (db.g[i] * ln_a + db.v * da.g[i] / da.v);
            }
            Ok(d)
        }
    }

    fn checked_pow(&self, ctx: &SymbolContext, base: f64, exp: f64) -> Result<f64> {
        if base > 0.0 {
            Ok(base.powf(exp))
        } else if base == 0.0 {
            if exp > 0.0 {
                Ok(0.0)
            } else if exp == 0.0 {
                Ok(1.0)
            } else {
                Err(self.domain_err(ctx, "zero base with negative exponent"))
            }
        } else if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
            Ok(base.powi(exp as i32))
        } else {
            Err(self.domain_err(ctx, "negative base with non-integer exponent"))
        }
    }

    fn checked_call(&self, ctx: &SymbolContext, f: Func, x: f64) -> Result<f64> {
        match f {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Exp => Ok(x.exp()),
            Func::Log => {
                if x <= 0.0 {
                    Err(self.domain_err(ctx, "log of non-positive argument"))
                } else {
                    Ok(x.ln())
                }
            }
            Func::Sqrt => {
                if x < 0.0 {
                    Err(self.domain_err(ctx, "sqrt of negative argument"))
                } else {
                    Ok(x.sqrt())
                }
            }
            Func::Abs => Ok(x.abs()),
        }
    }

    fn domain_err(&self, ctx: &SymbolContext, message: &str) -> Error {
        Error::Domain {
            subexpr: self.print(ctx),
            message: message.to_string(),
        }
    }

    /// Canonical printed form; re-parsing it yields an identical tree.
    pub fn print(&self, ctx: &SymbolContext) -> String {
        let mut out = String::new();
        self.print_into(ctx, &mut out);
        out
    }

    // Precedence levels: Add/Sub 1, Mul/Div 2, Neg 3, Pow 4, atoms 5.
    // Negative constants print with a leading minus, so they bind like Neg.
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if *c < 0.0 => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Symbol(_) | Expr::Call(..) => 5,
        }
    }

    fn print_into(&self, ctx: &SymbolContext, out: &mut String) {
        use fmt::Write;
        match self {
            Expr::Const(c) => {
                write!(out, "{c}").unwrap();
            }
            Expr::Symbol(i) => out.push_str(ctx.name(*i)),
            Expr::Neg(a) => {
                out.push('-');
                self.print_child(ctx, a, 3, out);
            }
            Expr::Add(a, b) => {
                self.print_child(ctx, a, 1, out);
                out.push_str(" + ");
                self.print_child(ctx, b, 2, out);
            }
            Expr::Sub(a, b) => {
                self.print_child(ctx, a, 1, out);
                out.push_str(" - ");
                self.print_child(ctx, b, 2, out);
            }
            Expr::Mul(a, b) => {
                self.print_child(ctx, a, 2, out);
                out.push_str(" * ");
                self.print_child(ctx, b, 3, out);
            }
            Expr::Div(a, b) => {
                self.print_child(ctx, a, 2, out);
                out.push_str(" / ");
                self.print_child(ctx, b, 3, out);
            }
            Expr::Pow(a, b) => {
                self.print_child(ctx, a, 5, out);
                out.push_str(" ^ ");
                self.print_child(ctx, b, 3, out);
            }
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.print_into(ctx, out);
                out.push(')');
            }
        }
    }

    fn print_child(&self, ctx: &SymbolContext, child: &Expr, min_prec: u8, out: &mut String) {
        if child.prec() < min_prec {
            out.push('(');
            child.print_into(ctx, out);
            out.push(')');
        } else {
            child.print_into(ctx, out);
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    text: &'a str,
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            text,
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn next_token(&mut self) -> Result<(Token, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Token::End, start));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => return self.lex_number(start),
            c if c.is_ascii_alphabetic() || c == b'_' => return self.lex_ident(start),
            _ => {
                let offender = self.text[start..].chars().next().unwrap();
                return Err(Error::Syntax {
                    pos: start,
                    message: format!("unexpected character `{offender}`"),
                });
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn lex_number(&mut self, start: usize) -> Result<(Token, usize)> {
        let mut end = self.pos;
        while end < self.src.len() && (self.src[end].is_ascii_digit() || self.src[end] == b'.') {
            end += 1;
        }
        // optional exponent
        if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
            let mut e = end + 1;
            if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                e += 1;
            }
            if e < self.src.len() && self.src[e].is_ascii_digit() {
                end = e;
                while end < self.src.len() && self.src[end].is_ascii_digit() {
                    end += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..end]).unwrap();
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            pos: start,
            message: format!("invalid numeric literal `{text}`"),
        })?;
        if !value.is_finite() {
            return Err(Error::Syntax {
                pos: start,
                message: format!("numeric literal `{text}` out of range"),
            });
        }
        self.pos = end;
        Ok((Token::Number(value), start))
    }

    fn lex_ident(&mut self, start: usize) -> Result<(Token, usize)> {
        let mut end = self.pos;
        while end < self.src.len()
            && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
        {
            end += 1;
        }
        let text = std::str::from_utf8(&self.src[start..end])
            .unwrap()
            .to_string();
        self.pos = end;
        Ok((Token::Ident(text), start))
    }
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    ctx: &'a SymbolContext,
}

/// Parse infix text against a symbol context.
pub fn parse(text: &str, ctx: &SymbolContext) -> Result<Expr> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    loop {
        let (tok, pos) = lexer.next_token()?;
        let end = tok == Token::End;
        tokens.push((tok, pos));
        if end {
            break;
        }
    }
    if tokens.len() == 1 {
        return Err(Error::Syntax {
            pos: 0,
            message: "empty expression".to_string(),
        });
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        ctx,
    };
    let expr = parser.parse_sum()?;
    let (tok, pos) = parser.peek();
    if *tok != Token::End {
        return Err(Error::Syntax {
            pos,
            message: format!("unexpected trailing input `{tok:?}`"),
        });
    }
    Ok(expr)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> (&Token, usize) {
        let (tok, pos) = &self.tokens[self.cursor];
        (tok, *pos)
    }

    fn bump(&mut self) -> (Token, usize) {
        let entry = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        entry
    }

    fn parse_sum(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek().0 {
                Token::Plus => {
                    self.bump();
                    lhs = Expr::add(lhs, self.parse_term()?);
                }
                Token::Minus => {
                    self.bump();
                    lhs = Expr::sub(lhs, self.parse_term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek().0 {
                Token::Star => {
                    self.bump();
                    lhs = Expr::mul(lhs, self.parse_unary()?);
                }
                Token::Slash => {
                    self.bump();
                    lhs = Expr::div(lhs, self.parse_unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if *self.peek().0 == Token::Minus {
            self.bump();
            return Ok(Expr::neg(self.parse_unary()?));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_atom()?;
        if *self.peek().0 == Token::Caret {
            self.bump();
            // right-associative: recurse through unary so `2^-3` works
            let exp = self.parse_unary()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        let (tok, pos) = self.bump();
        match tok {
            Token::Number(v) => Ok(Expr::Const(v)),
            Token::Ident(name) => {
                if *self.peek().0 == Token::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| Error::Syntax {
                        pos,
                        message: format!("unknown function `{name}`"),
                    })?;
                    self.bump(); // (
                    let arg = self.parse_sum()?;
                    let (close, close_pos) = self.bump();
                    if close != Token::RParen {
                        return Err(Error::Syntax {
                            pos: close_pos,
                            message: "expected `)`".to_string(),
                        });
                    }
                    Ok(Expr::call(func, arg))
                } else {
                    self.ctx
                        .index_of(&name)
                        .map(Expr::Symbol)
                        .ok_or(Error::UnknownSymbol { name, pos })
                }
            }
            Token::LParen => {
                let inner = self.parse_sum()?;
                let (close, close_pos) = self.bump();
                if close != Token::RParen {
                    return Err(Error::Syntax {
                        pos: close_pos,
                        message: "expected `)`".to_string(),
                    });
                }
                Ok(inner)
            }
            Token::End => Err(Error::Syntax {
                pos,
                message: "unexpected end of input".to_string(),
            }),
            other => Err(Error::Syntax {
                pos,
                message: format!("unexpected token `{other:?}`"),
            }),
        }
    }
}
