//! Payoff expressions: parser, evaluator and interval bounds.
//!
//! Grammar:
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ('^' atom)?
//! atom   := number | ident | '(' expr ')' | func '(' expr (',' expr)* ')' | '-' atom
//! ```
//! Identifiers are `k1..kn` (actions) and `x1..xn` (signals); functions are
//! `min`, `max`, `abs`, `exp`, `log`, `sqrt`. Note that `-a^b` parses as
//! `(-a)^b` under this grammar.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    /// Action of player `i` (zero-based).
    K(usize),
    /// Signal of player `i` (zero-based).
    X(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
    Exp,
    Log,
    Sqrt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "min" => Func::Min,
            "max" => Func::Max,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::K(i)) => write!(f, "k{}", i + 1),
            Expr::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    column: usize,
}

fn tokenize(src: &str, line: usize, col0: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                line,
                column,
                message: format!("malformed number `{text}`"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                column,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                column,
            });
            i += 1;
        } else {
            return Err(Error::Syntax {
                line,
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        column: col0 + chars.len(),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    players: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn column(&self) -> usize {
        self.toks[self.pos].column
    }

    fn error(&self, message: impl Into<String>) -> Error {
        // A missing operand is reported at the operator that needed it.
        let column = if matches!(self.peek(), Tok::End) && self.pos > 0 {
            self.toks[self.pos - 1].column
        } else {
            self.column()
        };
        Error::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.atom()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let column = self.column();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Sym('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.atom()?)))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    self.expect('(')?;
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    let ok = match func {
                        Func::Min | Func::Max => args.len() >= 2,
                        _ => args.len() == 1,
                    };
                    if !ok {
                        return Err(Error::Syntax {
                            line: self.line,
                            column,
                            message: format!("wrong number of arguments to `{name}`"),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                self.variable(&name).ok_or(Error::UnknownIdentifier {
                    name,
                    line: self.line,
                    column,
                })
            }
            Tok::End => Err(self.error("unexpected end of expression")),
            Tok::Sym(c) => Err(self.error(format!("unexpected `{c}`"))),
        }
    }

    fn variable(&self, name: &str) -> Option<Expr> {
        let (kind, digits) = name.split_at(1);
        let idx: usize = digits.parse().ok()?;
        if idx == 0 || idx > self.players || digits.starts_with('0') {
            return None;
        }
        match kind {
            "k" => Some(Expr::Var(Var::K(idx - 1))),
            "x" => Some(Expr::Var(Var::X(idx - 1))),
            _ => None,
        }
    }
}

/// Parses `src` for a game with `players` players. `line` and `column`
/// locate the expression in its source file for error reporting (column is
/// one-based).
pub fn parse_expr_at(src: &str, players: usize, line: usize, column: usize) -> Result<Expr> {
    let toks = tokenize(src, line, column)?;
    let mut p = Parser {
        toks,
        pos: 0,
        players,
        line,
    };
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::End) {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

pub fn parse_expr(src: &str, players: usize) -> Result<Expr> {
    parse_expr_at(src, players, 1, 1)
}

/// Closed interval used for conservative range evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn mul(self, o: Self) -> Self {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Self::new(
            c.iter().copied().fold(f64::INFINITY, f64::min),
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::point(1.0);
        }
        let a = self.lo.powi(n);
        let b = self.hi.powi(n);
        if n % 2 == 0 && self.lo < 0.0 && self.hi > 0.0 {
            Self::new(0.0, a.max(b))
        } else {
            Self::new(a.min(b), a.max(b))
        }
    }
}

impl Expr {
    pub fn eval(&self, k: &[f64], x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::K(i)) => k[*i],
            Expr::Var(Var::X(i)) => x[*i],
            Expr::Neg(e) => -e.eval(k, x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(k, x), b.eval(k, x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(func, args) => {
                let mut vals = args.iter().map(|a| a.eval(k, x));
                match func {
                    Func::Min => vals.fold(f64::INFINITY, f64::min),
                    Func::Max => vals.fold(f64::NEG_INFINITY, f64::max),
                    Func::Abs => vals.next().unwrap().abs(),
                    Func::Exp => vals.next().unwrap().exp(),
                    Func::Log => vals.next().unwrap().ln(),
                    Func::Sqrt => vals.next().unwrap().sqrt(),
                }
            }
        }
    }

    /// Conservative range over a box of variable ranges. Fails with a domain
    /// error if `log`, `sqrt`, division or a power could leave its domain.
    pub fn range(&self, k: &[Interval], x: &[Interval]) -> Result<Interval> {
        Ok(match self {
            Expr::Num(v) => Interval::point(*v),
            Expr::Var(Var::K(i)) => k[*i],
            Expr::Var(Var::X(i)) => x[*i],
            Expr::Neg(e) => {
                let r = e.range(k, x)?;
                Interval::new(-r.hi, -r.lo)
            }
            Expr::Bin(op, a, b) => {
                let ra = a.range(k, x)?;
                let rb = b.range(k, x)?;
                match op {
                    BinOp::Add => Interval::new(ra.lo + rb.lo, ra.hi + rb.hi),
                    BinOp::Sub => Interval::new(ra.lo - rb.hi, ra.hi - rb.lo),
                    BinOp::Mul => ra.mul(rb),
                    BinOp::Div => {
                        if rb.lo <= 0.0 && rb.hi >= 0.0 {
                            return Err(Error::Domain(format!("divisor of `{self}` may vanish")));
                        }
                        ra.mul(Interval::new(1.0 / rb.hi, 1.0 / rb.lo))
                    }
                    BinOp::Pow => match **b {
                        Expr::Num(n) if n.fract() == 0.0 && n.abs() <= 64.0 => {
                            if n < 0.0 && ra.lo <= 0.0 && ra.hi >= 0.0 {
                                return Err(Error::Domain(format!("base of `{self}` may vanish")));
                            }
                            ra.powi(n as i32)
                        }
                        _ => {
                            if ra.lo < 0.0 || (ra.lo == 0.0 && rb.lo <= 0.0) {
                                return Err(Error::Domain(format!(
                                    "non-integer power `{self}` needs a positive base"
                                )));
                            }
                            let c = [
                                pow(ra.lo, rb.lo),
                                pow(ra.lo, rb.hi),
                                pow(ra.hi, rb.lo),
                                pow(ra.hi, rb.hi),
                            ];
                            Interval::new(
                                c.iter().copied().fold(f64::INFINITY, f64::min),
                                c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                            )
                        }
                    },
                }
            }
            Expr::Call(func, args) => {
                let rs = args.iter().map(|a| a.range(k, x)).collect::<Result<Vec<_>>>()?;
                match func {
                    Func::Min => Interval::new(
                        rs.iter().map(|r| r.lo).fold(f64::INFINITY, f64::min),
                        rs.iter().map(|r| r.hi).fold(f64::INFINITY, f64::min),
                    ),
                    Func::Max => Interval::new(
                        rs.iter().map(|r| r.lo).fold(f64::NEG_INFINITY, f64::max),
                        rs.iter().map(|r| r.hi).fold(f64::NEG_INFINITY, f64::max),
                    ),
                    Func::Abs => {
                        let r = rs[0];
                        if r.lo >= 0.0 {
                            r
                        } else if r.hi <= 0.0 {
                            Interval::new(-r.hi, -r.lo)
                        } else {
                            Interval::new(0.0, r.hi.max(-r.lo))
                        }
                    }
                    Func::Exp => Interval::new(rs[0].lo.exp(), rs[0].hi.exp()),
                    Func::Log => {
                        if rs[0].lo <= 0.0 {
                            return Err(Error::Domain(format!("argument of `{self}` may be nonpositive")));
                        }
                        Interval::new(rs[0].lo.ln(), rs[0].hi.ln())
                    }
                    Func::Sqrt => {
                        if rs[0].lo < 0.0 {
                            return Err(Error::Domain(format!("argument of `{self}` may be negative")));
                        }
                        Interval::new(rs[0].lo.sqrt(), rs[0].hi.sqrt())
                    }
                }
            }
        })
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 - 2 - 3 * 4 / 2", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0], &[0.0, 0.0]), -7.0);
        let e = parse_expr("2 * 3 ^ 2", 1).unwrap();
        assert_eq!(e.eval(&[0.0], &[0.0]), 18.0);
    }

    #[test]
    fn variables_and_functions() {
        let e = parse_expr("k1*k2 + max(x1, x2, 0.5) - abs(-k1) + sqrt(4) + log(exp(1))", 2).unwrap();
        let v = e.eval(&[0.5, 0.5], &[0.1, 0.7]);
        assert!((v - (0.25 + 0.7 - 0.5 + 2.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn unary_minus_binds_to_atom() {
        let e = parse_expr("-2^2", 1).unwrap();
        assert_eq!(e.eval(&[0.0], &[0.0]), 4.0);
        let e = parse_expr("-(2^2)", 1).unwrap();
        assert_eq!(e.eval(&[0.0], &[0.0]), -4.0);
    }

    #[test]
    fn dangling_operator_is_located() {
        match parse_expr_at("k1 +", 2, 7, 6) {
            Err(Error::Syntax { line, column, .. }) => {
                assert_eq!(line, 7);
                assert_eq!(column, 9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifiers() {
        assert!(matches!(parse_expr("k3", 2), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse_expr("y1", 2), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse_expr("k0", 2), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse_expr("abs(1, 2)", 2), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("2^3^2", 2), Err(Error::Syntax { .. })));
    }

    #[test]
    fn interval_range_flags_domain_problems() {
        let unit = [Interval::new(0.0, 1.0); 2];
        assert!(parse_expr("log(x1)", 2).unwrap().range(&unit, &unit).is_err());
        assert!(parse_expr("sqrt(x1 - 0.5)", 2).unwrap().range(&unit, &unit).is_err());
        assert!(parse_expr("1 / k1", 2).unwrap().range(&unit, &unit).is_err());
        let r = parse_expr("log(1 + x1) * k2", 2).unwrap().range(&unit, &unit).unwrap();
        assert!(r.lo <= 0.0 && r.hi >= 2f64.ln());
        let r = parse_expr("(k1 - 0.5)^2", 2).unwrap().range(&unit, &unit).unwrap();
        assert_eq!((r.lo, r.hi), (0.0, 0.25));
    }
}
