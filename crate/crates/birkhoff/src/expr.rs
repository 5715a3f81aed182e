//! Tiny arithmetic expressions over one variable `x`.
//!
//! Config files give numbers as expressions (`log(2)`, `1/3`, `3/4 - 0.1`)
//! and general map branches carry forward/derivative formulas. The grammar is
//! `+ - * / ^` with parentheses, unary minus, the constants `pi` and `e`, and
//! the functions `log` (natural), `ln`, `log2`, `exp`, `sqrt`, `abs`, `sin`,
//! `cos`. `^` is right associative.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Log2,
    Exp,
    Sqrt,
    Abs,
    Sin,
    Cos,
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Neg(a) => -a.eval(x),
            Expr::Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Log => v.ln(),
                    Func::Log2 => v.log2(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
        }
    }

    /// True when the expression never reads `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub position: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.message, self.position)
    }
}

impl std::error::Error for ParseError {}

pub fn parse(input: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(input)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(ParseError {
            message: format!("trailing input {:?}", p.tokens[p.pos].0),
            position: p.tokens[p.pos].1,
        });
    }
    Ok(e)
}

/// Parse and immediately evaluate a constant expression.
pub fn parse_number(input: &str) -> Result<f64, ParseError> {
    let e = parse(input)?;
    if !e.is_constant() {
        return Err(ParseError {
            message: "expected a constant expression, found `x`".into(),
            position: 0,
        });
    }
    Ok(e.eval(f64::NAN))
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
}

fn tokenize(input: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => { out.push((Tok::Plus, i)); i += 1 }
            '-' => { out.push((Tok::Minus, i)); i += 1 }
            '*' => { out.push((Tok::Star, i)); i += 1 }
            '/' => { out.push((Tok::Slash, i)); i += 1 }
            '^' => { out.push((Tok::Caret, i)); i += 1 }
            '(' => { out.push((Tok::LParen, i)); i += 1 }
            ')' => { out.push((Tok::RParen, i)); i += 1 }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let text = &input[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError {
                    message: format!("bad number {text:?}"),
                    position: start,
                })?;
                out.push((Tok::Num(v), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(input[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError {
                    message: format!("unexpected character {c:?}"),
                    position: i,
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|(_, p)| *p)
            .unwrap_or(0)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            // right associative, and `-` binds looser than `^` on the right
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let position = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(ParseError { message: "expected `)`".into(), position }),
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::Var),
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                "e" => Ok(Expr::Const(std::f64::consts::E)),
                _ => {
                    let f = match name.as_str() {
                        "log" | "ln" => Func::Log,
                        "log2" => Func::Log2,
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        _ => {
                            return Err(ParseError {
                                message: format!("unknown name {name:?}"),
                                position,
                            })
                        }
                    };
                    match self.bump() {
                        Some(Tok::LParen) => {
                            let arg = self.expr()?;
                            match self.bump() {
                                Some(Tok::RParen) => Ok(Expr::Call(f, Box::new(arg))),
                                _ => Err(ParseError {
                                    message: "expected `)` after argument".into(),
                                    position,
                                }),
                            }
                        }
                        _ => Err(ParseError {
                            message: format!("{name} needs an argument list"),
                            position,
                        }),
                    }
                }
            },
            _ => Err(ParseError { message: "expected an expression".into(), position }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        assert_eq!(parse_number("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_number("log(2)").unwrap(), 2f64.ln());
        assert_eq!(parse_number("2^-2").unwrap(), 0.25);
        assert_eq!(parse_number("2^3^2").unwrap(), 512.0); // right assoc
        assert_eq!(parse_number("-(1+2)*3").unwrap(), -9.0);
        assert_eq!(parse_number("1e-3 + 1").unwrap(), 1.001);
        assert!((parse_number("pi").unwrap() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn variable() {
        let e = parse("x + x^(1+0.5)").unwrap();
        assert!(!e.is_constant());
        let x = 0.25f64;
        assert!((e.eval(x) - (x + x.powf(1.5))).abs() < 1e-15);
    }

    #[test]
    fn log_derivative_shape() {
        let e = parse("log(abs(1 + 1.5*x^0.5))").unwrap();
        assert!((e.eval(0.0) - 0.0).abs() < 1e-15);
        assert!((e.eval(1.0) - 2.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("1 +").is_err());
        assert!(parse("foo(2)").is_err());
        assert!(parse("(1").is_err());
        assert!(parse("1 2").is_err());
        assert!(parse_number("x + 1").is_err());
    }
}
