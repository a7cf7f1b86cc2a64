//! Scalar field expressions.
//!
//! Coefficients, potentials and sources are given as closed-form scalar
//! fields over ℝᵈ in a small expression language:
//!
//! * variables `x1 … xd` (Cartesian coordinates), `r = |x|`, and
//!   `w1 … wd` (direction components `ω_k = x_k/|x|`);
//! * operators `+ - * / ^` with the usual precedence, `^` binding
//!   tightest and associating to the right, unary minus below `^`
//!   (so `-x1^2` is `-(x1^2)`);
//! * functions `sin`, `cos`, `exp`, `sqrt`, `abs`, `log` (natural log).
//!
//! Evaluation is exact about its domain: `w_k` or `1/r` at the origin,
//! `sqrt` of a negative number, `log` of a non-positive number, or any
//! non-finite intermediate raise [`Error::Domain`] instead of silently
//! producing NaN.

use crate::error::{Error, Result};
use std::fmt;

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Built-in single-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Log => "log",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "log" => Func::Log,
            _ => return None,
        })
    }
}

/// Variables. Component indices are 1-based as written (`x1`, `w2`, …).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Cartesian coordinate `x_k`.
    X(usize),
    /// Euclidean radius `|x|`.
    R,
    /// Direction component `ω_k = x_k / |x|`.
    W(usize),
}

/// Abstract syntax tree of an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(f64),
    Var(Var),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
}

/// A parsed scalar field over ℝᵈ.
///
/// The original source text is retained for configuration echoing; the
/// canonical form produced by [`FieldExpr::pretty`] re-parses to an
/// identical AST.
#[derive(Debug, Clone)]
pub struct FieldExpr {
    src: String,
    ast: Ast,
    /// Highest coordinate/direction component referenced (0 if none).
    max_axis: usize,
}

impl PartialEq for FieldExpr {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl FieldExpr {
    /// Parse an expression from text.
    pub fn parse(src: &str) -> Result<FieldExpr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let ast = p.parse_expr()?;
        if p.pos != p.tokens.len() {
            let t = &p.tokens[p.pos];
            return Err(p.err_at(t.offset, format!("unexpected `{}`", t.text(src))));
        }
        let mut max_axis = 0;
        walk(&ast, &mut |a| {
            if let Ast::Var(Var::X(k) | Var::W(k)) = a {
                max_axis = max_axis.max(*k);
            }
        });
        Ok(FieldExpr { src: src.trim().to_string(), ast, max_axis })
    }

    /// The constant expression with the given value.
    pub fn constant(v: f64) -> FieldExpr {
        FieldExpr { src: format!("{v:?}"), ast: Ast::Num(v), max_axis: 0 }
    }

    /// The zero field.
    pub fn zero() -> FieldExpr {
        FieldExpr::constant(0.0)
    }

    /// Original source text.
    pub fn source(&self) -> &str {
        &self.src
    }

    /// Root of the syntax tree.
    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    /// Highest coordinate component the expression references.
    pub fn max_axis(&self) -> usize {
        self.max_axis
    }

    /// `Some(c)` when the expression is a plain numeric literal.
    pub fn as_constant(&self) -> Option<f64> {
        match self.ast {
            Ast::Num(v) => Some(v),
            Ast::Neg(ref inner) => match **inner {
                Ast::Num(v) => Some(-v),
                _ => None,
            },
            _ => None,
        }
    }

    /// Evaluate at a point `x ∈ ℝᵈ` (`d = x.len()`).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if self.max_axis > x.len() {
            return Err(Error::Domain(format!(
                "expression references x{} but the point has dimension {}",
                self.max_axis,
                x.len()
            )));
        }
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let v = eval_ast(&self.ast, x, r)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("expression `{}` is not finite at {x:?}", self.src)))
        }
    }

    /// Canonical fully parenthesized form. Re-parsing it yields an AST
    /// equal to this one.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        pretty_ast(&self.ast, &mut s);
        s
    }
}

fn walk(ast: &Ast, f: &mut impl FnMut(&Ast)) {
    f(ast);
    match ast {
        Ast::Num(_) | Ast::Var(_) => {}
        Ast::Neg(a) | Ast::Call(_, a) => walk(a, f),
        Ast::Bin(_, a, b) => {
            walk(a, f);
            walk(b, f);
        }
    }
}

fn eval_ast(ast: &Ast, x: &[f64], r: f64) -> Result<f64> {
    Ok(match ast {
        Ast::Num(v) => *v,
        Ast::Var(Var::R) => r,
        Ast::Var(Var::X(k)) => x[*k - 1],
        Ast::Var(Var::W(k)) => {
            if r == 0.0 {
                return Err(Error::Domain("direction ω is undefined at the origin".into()));
            }
            x[*k - 1] / r
        }
        Ast::Neg(a) => -eval_ast(a, x, r)?,
        Ast::Bin(op, a, b) => {
            let a = eval_ast(a, x, r)?;
            let b = eval_ast(b, x, r)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        Ast::Call(f, a) => {
            let a = eval_ast(a, x, r)?;
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(Error::Domain(format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
                Func::Log => {
                    if a <= 0.0 {
                        return Err(Error::Domain(format!("log of non-positive value {a}")));
                    }
                    a.ln()
                }
            }
        }
    })
}

fn pretty_ast(ast: &Ast, out: &mut String) {
    match ast {
        Ast::Num(v) => out.push_str(&format!("{v:?}")),
        Ast::Var(Var::R) => out.push('r'),
        Ast::Var(Var::X(k)) => out.push_str(&format!("x{k}")),
        Ast::Var(Var::W(k)) => out.push_str(&format!("w{k}")),
        Ast::Neg(a) => {
            out.push_str("(-");
            pretty_ast(a, out);
            out.push(')');
        }
        Ast::Bin(op, a, b) => {
            out.push('(');
            pretty_ast(a, out);
            out.push_str(match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
                BinOp::Pow => " ^ ",
            });
            pretty_ast(b, out);
            out.push(')');
        }
        Ast::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            pretty_ast(a, out);
            out.push(')');
        }
    }
}

// ---------------------------------------------------------------------
// Tokenizer / parser
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident, // text recovered from the source by offset/len
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone, Copy)]
struct Token {
    tok: Tok,
    offset: usize,
    len: usize,
}

impl Token {
    fn text<'s>(&self, src: &'s str) -> &'s str {
        &src[self.offset..self.offset + self.len]
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, ch) in src.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn parse_err(src: &str, offset: usize, msg: String) -> Error {
    let (line, col) = line_col(src, offset);
    Error::Parse { line, col, msg }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '^' => Tok::Caret,
                    '(' => Tok::LParen,
                    _ => Tok::RParen,
                };
                toks.push(Token { tok, offset: i, len: 1 });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // exponent part: e/E [+-] digits
                if i < bytes.len()
                    && matches!(bytes[i] as char, 'e' | 'E')
                    && i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_digit()
                        || (matches!(bytes[i + 1] as char, '+' | '-')
                            && i + 2 < bytes.len()
                            && bytes[i + 2].is_ascii_digit()))
                {
                    i += 2;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| parse_err(src, start, format!("malformed number `{text}`")))?;
                toks.push(Token { tok: Tok::Num(v), offset: start, len: i - start });
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                toks.push(Token { tok: Tok::Ident, offset: start, len: i - start });
            }
            _ => return Err(parse_err(src, i, format!("unexpected character `{c}`"))),
        }
    }
    Ok(toks)
}

struct Parser<'s> {
    tokens: Vec<Token>,
    pos: usize,
    src: &'s str,
}

impl<'s> Parser<'s> {
    fn err_at(&self, offset: usize, msg: String) -> Error {
        parse_err(self.src, offset, msg)
    }

    fn peek(&self) -> Option<Tok> {
        self.tokens.get(self.pos).map(|t| t.tok)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn end_offset(&self) -> usize {
        self.src.len()
    }

    fn parse_expr(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_term()?;
        while let Some(tok) = self.peek() {
            let op = match tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_unary()?;
        while let Some(tok) = self.peek() {
            let op = match tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Ast> {
        if self.peek() == Some(Tok::Minus) {
            self.bump();
            return Ok(Ast::Neg(Box::new(self.parse_unary()?)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Ast> {
        let base = self.parse_atom()?;
        if self.peek() == Some(Tok::Caret) {
            self.bump();
            // right-associative; the exponent may carry a unary minus
            let exp = self.parse_unary()?;
            return Ok(Ast::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Ast> {
        let Some(tok) = self.peek() else {
            return Err(self.err_at(self.end_offset(), "unexpected end of expression".into()));
        };
        match tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Ast::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.parse_expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident => {
                let t = self.bump();
                let name = t.text(self.src);
                if let Some(f) = Func::from_name(name) {
                    if self.peek() != Some(Tok::LParen) {
                        return Err(self.err_at(
                            t.offset,
                            format!("function `{name}` must be followed by `(`"),
                        ));
                    }
                    self.bump();
                    let arg = self.parse_expr()?;
                    self.expect_rparen()?;
                    return Ok(Ast::Call(f, Box::new(arg)));
                }
                if let Some(var) = parse_var(name) {
                    return Ok(Ast::Var(var));
                }
                Err(self.err_at(t.offset, format!("unknown identifier `{name}`")))
            }
            _ => {
                let t = self.tokens[self.pos];
                Err(self.err_at(t.offset, format!("unexpected `{}`", t.text(self.src))))
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek() == Some(Tok::RParen) {
            self.bump();
            Ok(())
        } else {
            let off = self.tokens.get(self.pos).map_or(self.end_offset(), |t| t.offset);
            Err(self.err_at(off, "expected `)`".into()))
        }
    }
}

fn parse_var(name: &str) -> Option<Var> {
    if name == "r" {
        return Some(Var::R);
    }
    let (head, digits) = name.split_at(1);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    if !(1..=3).contains(&k) {
        return None;
    }
    match head {
        "x" => Some(Var::X(k)),
        "w" => Some(Var::W(k)),
        _ => None,
    }
}

/// Central finite difference of an expression along coordinate `axis`
/// (0-based). The default step is `1e-5·(1 + |x|)`.
pub fn differentiate_field(
    expr: &FieldExpr,
    x: &[f64],
    axis: usize,
    step: Option<f64>,
) -> Result<f64> {
    if axis >= x.len() {
        return Err(Error::Domain(format!(
            "axis {axis} out of range for dimension {}",
            x.len()
        )));
    }
    let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let h = step.unwrap_or(1e-5 * (1.0 + r));
    if !(h > 0.0) {
        return Err(Error::Domain("differentiation step must be positive".into()));
    }
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[axis] += h;
    xm[axis] -= h;
    Ok((expr.eval(&xp)? - expr.eval(&xm)?) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64]) -> f64 {
        FieldExpr::parse(src).unwrap().eval(x).unwrap()
    }

    #[test]
    fn literal_example() {
        // "1 + 2*3/4 - 0.5^2" with standard precedence
        assert_eq!(ev("1 + 2*3/4 - 0.5^2", &[0.0, 0.0]), 1.0 + 1.5 - 0.25);
    }

    #[test]
    fn variables_and_direction() {
        let x = [3.0, 4.0];
        assert_eq!(ev("r", &x), 5.0);
        assert_eq!(ev("w1", &x), 0.6);
        assert_eq!(ev("x2 - r*w2", &x), 0.0);
    }

    #[test]
    fn precedence_unary_minus_vs_pow() {
        assert_eq!(ev("-2^2", &[0.0]), -4.0);
        assert_eq!(ev("2^-2", &[0.0]), 0.25);
        assert_eq!(ev("2^3^2", &[0.0]), 512.0); // right-assoc
    }

    #[test]
    fn domain_errors() {
        let e = FieldExpr::parse("1/r").unwrap();
        assert!(matches!(e.eval(&[0.0, 0.0]), Err(Error::Domain(_))));
        let e = FieldExpr::parse("w1").unwrap();
        assert!(matches!(e.eval(&[0.0, 0.0, 0.0]), Err(Error::Domain(_))));
        let e = FieldExpr::parse("sqrt(x1)").unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(Error::Domain(_))));
        let e = FieldExpr::parse("log(x1)").unwrap();
        assert!(matches!(e.eval(&[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn parse_error_position() {
        match FieldExpr::parse("1 + $") {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!((line, col), (1, 5));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(FieldExpr::parse("sin(x1").is_err());
        assert!(FieldExpr::parse("x4").is_err());
        assert!(FieldExpr::parse("foo(1)").is_err());
    }

    #[test]
    fn pretty_round_trip() {
        let e = FieldExpr::parse("-x1/(2*r) + sin(x2)^2 * exp(-r^2/4)").unwrap();
        let p = FieldExpr::parse(&e.pretty()).unwrap();
        assert_eq!(e.ast(), p.ast());
    }

    #[test]
    fn scientific_notation() {
        assert_eq!(ev("1e-3 + 2.5E2", &[0.0]), 0.001 + 250.0);
    }
}
