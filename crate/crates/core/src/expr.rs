//! Coordinate expressions for target curvature fields.
//!
//! A small arithmetic language over the embedding coordinates `x`, `y`,
//! `z`: the four binary operators with the usual precedence, unary minus,
//! the functions `exp`, `sin`, `cos`, `sqrt`, `abs`, `tanh`, and a power
//! operator whose exponent must be a numeric literal tower (`2`, `-3`,
//! `2^3`), folded to a constant at parse time. Parse errors carry the
//! byte offset of the offending token.
//!
//! [`Expr`] prints back in canonical form with minimal parentheses;
//! parsing the printout reproduces the same printout, which keeps
//! expressions stable through config round-trips.

use std::fmt;
use thiserror::Error;

/// Parse failure, pointing at the byte where the input stops making sense.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

/// Evaluation failure at a concrete point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("square root of negative value {operand}")]
    SqrtOfNegative { operand: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression value is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var(Axis),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a literal exponent, folded at parse time.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Evaluates at a point of the embedding.
    pub fn eval(&self, x: f64, y: f64, z: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Number(v) => *v,
            Expr::Var(Axis::X) => x,
            Expr::Var(Axis::Y) => y,
            Expr::Var(Axis::Z) => z,
            Expr::Neg(e) => -e.eval(x, y, z)?,
            Expr::Add(a, b) => a.eval(x, y, z)? + b.eval(x, y, z)?,
            Expr::Sub(a, b) => a.eval(x, y, z)? - b.eval(x, y, z)?,
            Expr::Mul(a, b) => a.eval(x, y, z)? * b.eval(x, y, z)?,
            Expr::Div(a, b) => {
                let den = b.eval(x, y, z)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval(x, y, z)? / den
            }
            Expr::Pow(base, e) => base.eval(x, y, z)?.powf(*e),
            Expr::Call(func, arg) => {
                let v = arg.eval(x, y, z)?;
                match func {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::SqrtOfNegative { operand: v });
                        }
                        v.sqrt()
                    }
                    Func::Abs => v.abs(),
                    Func::Tanh => v.tanh(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Number(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            Expr::Number(v) => write!(f, "{v}")?,
            Expr::Var(Axis::X) => write!(f, "x")?,
            Expr::Var(Axis::Y) => write!(f, "y")?,
            Expr::Var(Axis::Z) => write!(f, "z")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_with(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.fmt_with(f, 1)?;
                write!(f, "+")?;
                b.fmt_with(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_with(f, 1)?;
                write!(f, "-")?;
                b.fmt_with(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_with(f, 2)?;
                write!(f, "*")?;
                b.fmt_with(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_with(f, 2)?;
                write!(f, "/")?;
                b.fmt_with(f, 3)?;
            }
            Expr::Pow(base, e) => {
                base.fmt_with(f, 5)?;
                write!(f, "^{e}")?;
            }
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_with(f, 0)?;
                write!(f, ")")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, 0)
    }
}

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
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                tokens.push((Token::Plus, i));
                i += 1;
            }
            '-' => {
                tokens.push((Token::Minus, i));
                i += 1;
            }
            '*' => {
                tokens.push((Token::Star, i));
                i += 1;
            }
            '/' => {
                tokens.push((Token::Slash, i));
                i += 1;
            }
            '^' => {
                tokens.push((Token::Caret, i));
                i += 1;
            }
            '(' => {
                tokens.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                tokens.push((Token::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    message: format!("invalid numeric literal `{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        message: format!("numeric literal `{text}` is out of range"),
                    });
                }
                tokens.push((Token::Number(value), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((Token::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let other = src[i..].chars().next().expect("offset is a char boundary");
                return Err(ParseError {
                    offset: i,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&token) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let exponent = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), exponent));
        }
        Ok(base)
    }

    /// Literal exponent tower: `-` binds loosest, `^` associates right,
    /// so `-2^2` is -4 and `2^3^2` is 512.
    fn exponent(&mut self) -> Result<f64, ParseError> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return Ok(-self.exponent()?);
        }
        match self.advance() {
            Some(Token::Number(v)) => {
                if self.peek() == Some(&Token::Caret) {
                    self.pos += 1;
                    let tail = self.exponent()?;
                    Ok(v.powf(tail))
                } else {
                    Ok(v)
                }
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                self.fail("exponent must be a numeric literal (e.g. 2, -3, 2^3)")
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.advance() {
            Some(Token::Number(v)) => Ok(Expr::Number(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "closing `)`")?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::Var(Axis::X)),
                "y" => Ok(Expr::Var(Axis::Y)),
                "z" => Ok(Expr::Var(Axis::Z)),
                _ => {
                    let func = match name.as_str() {
                        "exp" => Func::Exp,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "tanh" => Func::Tanh,
                        _ => {
                            return Err(ParseError {
                                offset,
                                message: format!("unknown identifier `{name}`"),
                            });
                        }
                    };
                    self.expect(Token::LParen, &format!("`(` after `{name}`"))?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "closing `)`")?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
            },
            Some(_) | None => Err(ParseError {
                offset,
                message: "expected a number, variable, function, or `(`".into(),
            }),
        }
    }
}

/// Parses an expression over `x`, `y`, `z`.
pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0, end: src.len() };
    let expr = parser.expr()?;
    if parser.peek().is_some() {
        return parser.fail("unexpected trailing input");
    }
    Ok(expr)
}
