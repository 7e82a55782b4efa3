//! Closed-form expressions over named variables, with exact partial
//! derivatives.
//!
//! The operator set is deliberately small: arithmetic, `sin`, `cos`, `tan`,
//! `atan`, `tanh`, `exp`, `sqrt`, powers, and region-wise branching through
//! `ifpos(g, a, b)` (evaluates `a` where `g > 0`, `b` elsewhere).
//! Differentiation of `ifpos` differentiates each branch and ignores the
//! interface; the branch functions are expected to match to first order on
//! the seam, which is how the gallery surfaces are glued.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Tan(Arc<Expr>),
    Atan(Arc<Expr>),
    Tanh(Arc<Expr>),
    Exp(Arc<Expr>),
    Sqrt(Arc<Expr>),
    Ln(Arc<Expr>),
    /// ifpos(cond, a, b): a where cond > 0, b elsewhere.
    IfPos(Arc<Expr>, Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => vars[*i],
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Neg(a) => -a.eval(vars),
            Expr::Pow(a, b) => a.eval(vars).powf(b.eval(vars)),
            Expr::Sin(a) => a.eval(vars).sin(),
            Expr::Cos(a) => a.eval(vars).cos(),
            Expr::Tan(a) => a.eval(vars).tan(),
            Expr::Atan(a) => a.eval(vars).atan(),
            Expr::Tanh(a) => a.eval(vars).tanh(),
            Expr::Exp(a) => a.eval(vars).exp(),
            Expr::Sqrt(a) => a.eval(vars).sqrt(),
            Expr::Ln(a) => a.eval(vars).ln(),
            Expr::IfPos(c, a, b) => {
                if c.eval(vars) > 0.0 {
                    a.eval(vars)
                } else {
                    b.eval(vars)
                }
            }
        }
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        use Expr::*;
        let d = |e: &Arc<Expr>| Arc::new(e.diff(var));
        match self {
            Const(_) => Const(0.0),
            Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
            Add(a, b) => Add(d(a), d(b)),
            Sub(a, b) => Sub(d(a), d(b)),
            Mul(a, b) => Add(
                Arc::new(Mul(d(a), b.clone())),
                Arc::new(Mul(a.clone(), d(b))),
            ),
            Div(a, b) => Div(
                Arc::new(Sub(
                    Arc::new(Mul(d(a), b.clone())),
                    Arc::new(Mul(a.clone(), d(b))),
                )),
                Arc::new(Mul(b.clone(), b.clone())),
            ),
            Neg(a) => Neg(d(a)),
            // d(a^b) = a^b * (b' ln a + b a'/a); for constant b this folds to
            // the power rule after simplification at eval time.
            Pow(a, b) => {
                if let Const(k) = **b {
                    Mul(
                        Arc::new(Mul(
                            Arc::new(Const(k)),
                            Arc::new(Pow(a.clone(), Arc::new(Const(k - 1.0)))),
                        )),
                        d(a),
                    )
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    Mul(
                        Arc::new(Pow(a.clone(), b.clone())),
                        Arc::new(Add(
                            Arc::new(Mul(d(b), Arc::new(Ln(a.clone())))),
                            Arc::new(Mul(b.clone(), Arc::new(Div(d(a), a.clone())))),
                        )),
                    )
                }
            }
            Sin(a) => Mul(Arc::new(Cos(a.clone())), d(a)),
            Cos(a) => Neg(Arc::new(Mul(Arc::new(Sin(a.clone())), d(a)))),
            Tan(a) => {
                // sec^2 = 1 + tan^2
                let t = Arc::new(Tan(a.clone()));
                Mul(
                    Arc::new(Add(Arc::new(Const(1.0)), Arc::new(Mul(t.clone(), t)))),
                    d(a),
                )
            }
            Atan(a) => Div(
                d(a),
                Arc::new(Add(
                    Arc::new(Const(1.0)),
                    Arc::new(Mul(a.clone(), a.clone())),
                )),
            ),
            Tanh(a) => {
                let t = Arc::new(Tanh(a.clone()));
                Mul(
                    Arc::new(Sub(Arc::new(Const(1.0)), Arc::new(Mul(t.clone(), t)))),
                    d(a),
                )
            }
            Exp(a) => Mul(Arc::new(Exp(a.clone())), d(a)),
            Sqrt(a) => Div(
                d(a),
                Arc::new(Mul(Arc::new(Const(2.0)), Arc::new(Sqrt(a.clone())))),
            ),
            Ln(a) => Div(d(a), a.clone()),
            IfPos(c, a, b) => IfPos(c.clone(), d(a), d(b)),
        }
    }
}

/// Parse `src` against the given variable names (e.g. `["x", "y"]`).
pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        vars,
    };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::ConfigInvalid(format!(
            "trailing input in expression `{src}`"
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::ConfigInvalid(format!("bad number `{s}`")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            other => {
                return Err(Error::ConfigInvalid(format!(
                    "unexpected character `{other}` in expression"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.bump() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(Error::ConfigInvalid(format!(
                "expected {t:?}, got {got:?}"
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Arc::new(lhs), Arc::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Arc::new(lhs), Arc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Arc::new(lhs), Arc::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Arc::new(lhs), Arc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(Expr::Neg(Arc::new(self.factor()?)))
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Pow(Arc::new(base), Arc::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while let Some(Tok::Comma) = self.peek() {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    self.call(&name, args)
                } else {
                    match name.as_str() {
                        "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                        "e" => Ok(Expr::Const(std::f64::consts::E)),
                        _ => {
                            if let Some(i) = self.vars.iter().position(|v| *v == name) {
                                Ok(Expr::Var(i))
                            } else {
                                Err(Error::ConfigInvalid(format!(
                                    "unknown identifier `{name}` (variables: {:?})",
                                    self.vars
                                )))
                            }
                        }
                    }
                }
            }
            t => Err(Error::ConfigInvalid(format!("unexpected token {t:?}"))),
        }
    }

    fn call(&mut self, name: &str, mut args: Vec<Expr>) -> Result<Expr> {
        let one = |args: &mut Vec<Expr>| Arc::new(args.remove(0));
        match (name, args.len()) {
            ("sin", 1) => Ok(Expr::Sin(one(&mut args))),
            ("cos", 1) => Ok(Expr::Cos(one(&mut args))),
            ("tan", 1) => Ok(Expr::Tan(one(&mut args))),
            ("atan", 1) => Ok(Expr::Atan(one(&mut args))),
            ("tanh", 1) => Ok(Expr::Tanh(one(&mut args))),
            ("exp", 1) => Ok(Expr::Exp(one(&mut args))),
            ("sqrt", 1) => Ok(Expr::Sqrt(one(&mut args))),
            ("ifpos", 3) => {
                let c = Arc::new(args.remove(0));
                let a = Arc::new(args.remove(0));
                let b = Arc::new(args.remove(0));
                Ok(Expr::IfPos(c, a, b))
            }
            _ => Err(Error::ConfigInvalid(format!(
                "unknown function `{name}` with {} argument(s)",
                args.len()
            ))),
        }
    }
}
