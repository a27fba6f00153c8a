//! A small arithmetic language for right-hand sides `f(t, x, y)`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?          right-associative
//! unary  := '-' unary | atom
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Note that `-x^2` parses as `(-x)^2`. Variables are `t`, `x1..xn`,
//! `y1..ym`, `normx`, `normy`; functions are `sin cos exp sqrt abs`. There is
//! no builtin for pi.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected {}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative number {0}")]
    NegativeSqrt(f64),
    #[error("non-finite value")]
    NonFinite,
    #[error("variable {0} is not provided")]
    MissingVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    /// `x_{k+1}`
    X(usize),
    /// `y_{k+1}`
    Y(usize),
    NormX,
    NormY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    const NAMES: [(&'static str, Func); 5] = [
        ("sin", Func::Sin),
        ("cos", Func::Cos),
        ("exp", Func::Exp),
        ("sqrt", Func::Sqrt),
        ("abs", Func::Abs),
    ];

    fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, f)| *f == self).map(|(n, _)| *n).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident(usize, usize),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

fn err<T>(offset: usize, expected: &[&str]) -> Result<T, ParseError> {
    Err(ParseError { offset, expected: expected.iter().map(|s| s.to_string()).collect() })
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut p = Parser { src, pos: 0, tok: Tok::End, tok_start: 0 };
        p.advance()?;
        Ok(p)
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        self.tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' | b'.' => self.number()?,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(start, self.pos)
            }
            _ => return err(self.pos, &["number", "identifier", "'('", "'-'"]),
        };
        Ok(())
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let digits = |pos: &mut usize| {
            let s = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - s
        };
        let mut n = digits(&mut self.pos);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            n += digits(&mut self.pos);
        }
        if n == 0 {
            return err(start, &["digit"]);
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if digits(&mut self.pos) == 0 {
                // `2e` is a number followed by an identifier, which the grammar rejects later
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(Tok::Num).or_else(|_| err(start, &["number"]))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.advance()?;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.advance()?;
            let rhs = self.factor()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if let Tok::Op('^') = self.tok {
            self.advance()?;
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Tok::Op('-') = self.tok {
            self.advance()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.advance()?;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(s, e) => {
                let name = &self.src[s..e];
                if let Some((_, f)) = Func::NAMES.iter().find(|(n, _)| *n == name) {
                    self.advance()?;
                    if self.tok != Tok::LParen {
                        return err(self.tok_start, &["'('"]);
                    }
                    self.advance()?;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(*f, Box::new(arg)));
                }
                let var = parse_var(name).ok_or_else(|| ParseError {
                    offset: s,
                    expected: ["t", "x<k>", "y<k>", "normx", "normy", "function name"]
                        .iter()
                        .map(|x| x.to_string())
                        .collect(),
                })?;
                self.advance()?;
                Ok(Expr::Var(var))
            }
            _ => err(self.tok_start, &["number", "identifier", "'('", "'-'"]),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::RParen {
            return err(self.tok_start, &["')'", "operator"]);
        }
        self.advance()
    }
}

fn parse_var(name: &str) -> Option<Var> {
    match name {
        "t" => Some(Var::T),
        "normx" => Some(Var::NormX),
        "normy" => Some(Var::NormY),
        _ => {
            let (head, digits) = name.split_at(1);
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
                return None;
            }
            let k: usize = digits.parse().ok()?;
            match head {
                "x" => Some(Var::X(k - 1)),
                "y" => Some(Var::Y(k - 1)),
                _ => None,
            }
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    if p.tok == Tok::End {
        return err(p.tok_start, &["expression"]);
    }
    let e = p.expr()?;
    if p.tok != Tok::End {
        return err(p.tok_start, &["operator", "end of input"]);
    }
    Ok(e)
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse_expression(text)
    }

    pub fn evaluate(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(var) => match *var {
                Var::T => t,
                Var::X(k) => *x.get(k).ok_or_else(|| EvalError::MissingVariable(format!("x{}", k + 1)))?,
                Var::Y(k) => *y.get(k).ok_or_else(|| EvalError::MissingVariable(format!("y{}", k + 1)))?,
                Var::NormX => crate::geometry::norm(x),
                Var::NormY => crate::geometry::norm(y),
            },
            Expr::Neg(e) => -e.evaluate(t, x, y)?,
            Expr::Call(f, e) => {
                let a = e.evaluate(t, x, y)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::NegativeSqrt(a));
                        }
                        a.sqrt()
                    }
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.evaluate(t, x, y)?;
                let b = r.evaluate(t, x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
        };
        finite(v)
    }

    /// Smallest `(n, m)` that covers every `x_k` and `y_k` in the tree.
    pub fn required_dims(&self) -> (usize, usize) {
        match self {
            Expr::Const(_) => (0, 0),
            Expr::Var(Var::X(k)) => (k + 1, 0),
            Expr::Var(Var::Y(k)) => (0, k + 1),
            Expr::Var(_) => (0, 0),
            Expr::Neg(e) | Expr::Call(_, e) => e.required_dims(),
            Expr::Binary(_, l, r) => {
                let (a, b) = l.required_dims();
                let (c, d) = r.required_dims();
                (a.max(c), b.max(d))
            }
        }
    }

    /// Whether the tree refers to any `y` variable.
    pub fn uses_y(&self) -> bool {
        match self {
            Expr::Var(Var::Y(_)) | Expr::Var(Var::NormY) => true,
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses_y(),
            Expr::Binary(_, l, r) => l.uses_y() || r.uses_y(),
        }
    }
}

/// Fully parenthesized rendering that parses back to an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::X(k)) => write!(f, "x{}", k + 1),
            Expr::Var(Var::Y(k)) => write!(f, "y{}", k + 1),
            Expr::Var(Var::NormX) => f.write_str("normx"),
            Expr::Var(Var::NormY) => f.write_str("normy"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}
