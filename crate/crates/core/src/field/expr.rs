//! Expression language for scalar fields.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := primary ('^' exponent)*
//! exponent := ['-' | '+'] INTEGER | '(' ['-' | '+'] INTEGER ')'
//! primary  := NUMBER | 'x1' | 'x2' | 'x3' | FUNC '(' expr ')' | '(' expr ')'
//! FUNC     := 'sin' | 'cos' | 'exp' | 'sqrt'
//! ```

use std::fmt;

use super::jet::Jet;
use crate::error::{Error, Result};
use crate::geom::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate index 0..3.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end: text.len(),
        };
        let expr = parser.expr()?;
        match parser.peek() {
            None => Ok(expr),
            Some((offset, tok)) => Err(Error::Syntax {
                offset,
                message: format!("unexpected {tok}"),
            }),
        }
    }

    /// Evaluates value, gradient and Hessian at `p`.
    pub fn eval_jet(&self, p: Point3) -> Result<Jet> {
        let out = self.walk(p)?;
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::Domain { op: "overflow", at: p })
        }
    }

    fn walk(&self, p: Point3) -> Result<Jet> {
        Ok(match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::Var(i) => Jet::variable(*i, p[*i]),
            Expr::Neg(a) => -a.walk(p)?,
            Expr::Add(a, b) => a.walk(p)? + b.walk(p)?,
            Expr::Sub(a, b) => a.walk(p)? - b.walk(p)?,
            Expr::Mul(a, b) => a.walk(p)? * b.walk(p)?,
            Expr::Div(a, b) => {
                let num = a.walk(p)?;
                let den = b.walk(p)?;
                if den.value == 0.0 {
                    return Err(Error::Domain { op: "division", at: p });
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.walk(p)?;
                if *n < 0 && base.value == 0.0 {
                    return Err(Error::Domain { op: "power", at: p });
                }
                base.powi(*n)
            }
            Expr::Call(f, a) => {
                let arg = a.walk(p)?;
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Exp => {
                        let e = arg.exp();
                        if !e.value.is_finite() {
                            return Err(Error::Domain { op: "exp", at: p });
                        }
                        e
                    }
                    // sqrt is not twice differentiable at 0
                    Func::Sqrt => {
                        if arg.value <= 0.0 {
                            return Err(Error::Domain { op: "sqrt", at: p });
                        }
                        arg.sqrt()
                    }
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 3)
            }
            Expr::Add(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " + ")?;
                wrap(f, b, 2)
            }
            Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " - ")?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "*")?;
                wrap(f, b, 3)
            }
            Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "/")?;
                wrap(f, b, 3)
            }
            Expr::Pow(a, n) => {
                wrap(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64, bool),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Number(n, _) => write!(f, "number {n}"),
            Token::Ident(s) => write!(f, "identifier `{s}`"),
            Token::Op(c) => write!(f, "`{c}`"),
            Token::LParen => write!(f, "`(`"),
            Token::RParen => write!(f, "`)`"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '+' | '-' | '*' | '/' | '^' => {
                out.push((start, Token::Op(c)));
                i += 1;
            }
            '(' => {
                out.push((start, Token::LParen));
                i += 1;
            }
            ')' => {
                out.push((start, Token::RParen));
                i += 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let mut integral = true;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    integral = false;
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
                        integral = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("bad number `{lit}`"),
                })?;
                out.push((start, Token::Number(value, integral)));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(usize, Token)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<(usize, &Token)> {
        self.tokens.get(self.pos).map(|(o, t)| (*o, t))
    }

    fn next(&mut self) -> Option<(usize, &Token)> {
        let t = self.tokens.get(self.pos).map(|(o, t)| (*o, t));
        self.pos += 1;
        t
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some((_, Token::Op(c))) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn error_here(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.peek().map_or(self.end, |(o, _)| o),
            message: message.to_string(),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some((_, Token::RParen)) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here("expected `)`")),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Expr::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.primary()?;
        while self.eat_op(&['^']).is_some() {
            let n = self.exponent()?;
            base = Expr::Pow(Box::new(base), n);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        let parens = matches!(self.peek(), Some((_, Token::LParen)));
        if parens {
            self.pos += 1;
        }
        let sign = match self.eat_op(&['-', '+']) {
            Some('-') => -1.0,
            _ => 1.0,
        };
        let n = match self.peek() {
            Some((_, Token::Number(v, true))) if *v <= f64::from(i32::MAX) => sign * *v,
            _ => return Err(self.error_here("exponent must be an integer literal")),
        };
        self.pos += 1;
        if parens {
            self.expect_rparen()?;
        }
        Ok(n as i32)
    }

    fn primary(&mut self) -> Result<Expr> {
        let end = self.end;
        let Some((offset, tok)) = self.next() else {
            return Err(Error::Syntax {
                offset: end,
                message: "unexpected end of input".into(),
            });
        };
        match tok.clone() {
            Token::Number(v, _) => Ok(Expr::Const(v)),
            Token::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Token::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    match self.next() {
                        Some((_, Token::LParen)) => {}
                        _ => {
                            return Err(Error::Syntax {
                                offset,
                                message: format!("expected `(` after `{name}`"),
                            })
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "x1" => Ok(Expr::Var(0)),
                    "x2" => Ok(Expr::Var(1)),
                    "x3" => Ok(Expr::Var(2)),
                    _ => Err(Error::UnknownIdentifier(name)),
                }
            }
            other => Err(Error::Syntax {
                offset,
                message: format!("unexpected {other}"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 - 2 - 3").unwrap();
        assert_eq!(e.eval_jet(Point3::ZERO).unwrap().value, -4.0);
        let e = Expr::parse("-x1^2").unwrap();
        assert_eq!(e.eval_jet(Point3::new(3.0, 0.0, 0.0)).unwrap().value, -9.0);
        let e = Expr::parse("2*3^2/6").unwrap();
        assert_eq!(e.eval_jet(Point3::ZERO).unwrap().value, 3.0);
        let e = Expr::parse("x1^(-2)").unwrap();
        assert_eq!(e.eval_jet(Point3::new(2.0, 0.0, 0.0)).unwrap().value, 0.25);
    }

    #[test]
    fn syntax_errors() {
        for bad in ["(", "x1 +", "x1 x2", "sin x1", "x1^2.5", "x1^x2", "3 $ 4", ")", ""] {
            assert!(
                matches!(Expr::parse(bad), Err(Error::Syntax { .. })),
                "{bad:?} should be a syntax error"
            );
        }
    }

    #[test]
    fn unknown_identifiers() {
        assert_eq!(Expr::parse("x4+1"), Err(Error::UnknownIdentifier("x4".into())));
        assert_eq!(Expr::parse("tan(x1)"), Err(Error::UnknownIdentifier("tan".into())));
    }

    #[test]
    fn domain_errors() {
        let p = Point3::new(-1.0, 0.0, 0.0);
        for (text, op) in [("sqrt(x1)", "sqrt"), ("1/(x1+1)", "division"), ("(x1+1)^(-1)", "power")] {
            let e = Expr::parse(text).unwrap();
            match e.eval_jet(p) {
                Err(Error::Domain { op: got, .. }) => assert_eq!(got, op),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for text in [
            "x1*x2 + x3^2",
            "-(x1 - x2) - -x3",
            "sin(cos(x1))/(2 + x2)^3",
            "exp(-x1^2)*(-1.5)",
            "x1^(-2) - (x2 - x3)",
            "sqrt(1 + x1^2)",
        ] {
            let e = Expr::parse(text).unwrap();
            let back = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, back, "{text} -> {e}");
        }
    }
}
