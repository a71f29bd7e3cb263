//! Closed-form space-time data functions `g(x, y, t)`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?        right associative
//! exponent:= '-' exponent | power
//! primary := number | 'x' | 'y' | 't' | 'pi' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `-2^2` is `-(2^2)` and `2^3^2` is `2^(3^2)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
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
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
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

/// Abstract syntax tree of a data expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let mut parser = Parser { src: text.as_bytes(), pos: 0 };
        let expr = parser.expr()?;
        parser.skip_ws();
        if parser.pos < parser.src.len() {
            return Err(parser.unexpected());
        }
        Ok(expr)
    }

    pub fn constant(value: f64) -> Expr {
        Expr::Num(value)
    }

    /// Evaluates at `(x, y, t)`. Division by zero is the only failure.
    pub fn evaluate(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Var(Var::T) => t,
            Expr::Neg(e) => -e.evaluate(x, y, t)?,
            Expr::Call(f, e) => f.apply(e.evaluate(x, y, t)?),
            Expr::Binary(op, a, b) => {
                let l = a.evaluate(x, y, t)?;
                let r = b.evaluate(x, y, t)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(Error::Evaluation(format!(
                                "division by zero in `{self}` at (x={x}, y={y}, t={t})"
                            )));
                        }
                        l / r
                    }
                    BinOp::Pow => l.powf(r),
                }
            }
        })
    }

    /// True when the expression is the literal zero (lets callers skip work).
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// True when the expression does not mention `t`.
    pub fn is_time_independent(&self) -> bool {
        match self {
            Expr::Var(Var::T) => false,
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_time_independent(),
            Expr::Binary(_, a, b) => a.is_time_independent() && b.is_time_independent(),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr> {
        Expr::parse(s)
    }
}

/// Fully parenthesised; parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn unexpected(&self) -> Error {
        let message = match self.src.get(self.pos) {
            Some(&c) => format!("unexpected character `{}`", c as char),
            None => "unexpected end of input".to_string(),
        };
        Error::Syntax { offset: self.pos, message }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.exponent()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        self.power()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.unexpected()),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.unexpected());
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all, e.g. "2exp"
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse::<f64>().map(Expr::Num).map_err(|e| Error::Syntax {
            offset: start,
            message: format!("malformed number: {e}"),
        })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        match name {
            "x" => return Ok(Expr::Var(Var::X)),
            "y" => return Ok(Expr::Var(Var::Y)),
            "t" => return Ok(Expr::Var(Var::T)),
            "pi" => return Ok(Expr::Pi),
            _ => {}
        }
        match Func::from_name(name) {
            Some(func) => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            None => Err(Error::UnknownIdentifier {
                offset: start,
                name: name.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(s: &str, x: f64, y: f64, t: f64) -> f64 {
        Expr::parse(s).unwrap().evaluate(x, y, t).unwrap()
    }

    #[test]
    fn separable_sine_product() {
        let v = eval("sin(pi*x)*sin(pi*y)*exp(-t)", 0.5, 0.5, 0.0);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn syntax_error_offset() {
        match Expr::parse("x*+y") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval("2^3^2", 0.0, 0.0, 0.0), 512.0);
        assert_eq!(eval("-2^2", 0.0, 0.0, 0.0), -4.0);
        assert_eq!(eval("2^-1", 0.0, 0.0, 0.0), 0.5);
    }

    #[test]
    fn simple_values() {
        assert_eq!(eval("0", 3.0, 4.0, 5.0), 0.0);
        assert_eq!(eval("x+y+t", 1.0, 2.0, 3.0), 6.0);
        let v = eval("exp(-t)*(1+2*pi^2)", 0.0, 0.0, 0.0);
        assert!((v - 20.739208802178716).abs() < 1e-12);
        assert_eq!(eval(" 1 - 2 - 3 ", 0.0, 0.0, 0.0), -4.0);
        assert_eq!(eval("8/4/2", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(eval("1.5e2*x", 2.0, 0.0, 0.0), 300.0);
    }

    #[test]
    fn unknown_identifier() {
        match Expr::parse("sin(z)") {
            Err(Error::UnknownIdentifier { offset, name }) => {
                assert_eq!(offset, 4);
                assert_eq!(name, "z");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_and_unbalanced() {
        assert!(matches!(Expr::parse("x)"), Err(Error::Syntax { offset: 1, .. })));
        assert!(matches!(Expr::parse("(x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(Expr::parse(""), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(Expr::parse("sin x"), Err(Error::Syntax { offset: 4, .. })));
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = Expr::parse("1/(x-1)").unwrap();
        assert!(matches!(e.evaluate(1.0, 0.0, 0.0), Err(Error::Evaluation(_))));
        assert_eq!(e.evaluate(2.0, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn time_dependence() {
        assert!(Expr::parse("sin(pi*x)*y").unwrap().is_time_independent());
        assert!(!Expr::parse("x*exp(-t)").unwrap().is_time_independent());
    }

    #[test]
    fn print_round_trip() {
        let corpus = [
            "sin(pi*x)*sin(pi*y)*exp(-t)",
            "2^3^2",
            "-x^2 - -y",
            "exp(-t)*(1+2*pi^2)",
            "abs(x-0.5)/sqrt(1e-3 + y)",
            "cos(2*pi*t) - 4/3*x*y + 0.1",
            "((x))",
        ];
        for s in corpus {
            let e = Expr::parse(s).unwrap();
            let printed = e.to_string();
            assert_eq!(Expr::parse(&printed).unwrap(), e, "{s} -> {printed}");
        }
    }
}
