//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := number | number "i" | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`. The Unicode
//! minus sign `−` is accepted wherever `-` is.

use super::ast::{Expr, Func};
use super::ParseError;

/// Coordinate naming for a chart.
#[derive(Clone, Debug, Default)]
pub struct Names {
    coords: Vec<String>,
}

impl Names {
    /// `u1..u9`, plus `x, y, z` for the first three coordinates.
    pub fn standard() -> Self {
        Names { coords: Vec::new() }
    }

    /// Named coordinates; `u1..u9` remain available as positional aliases.
    pub fn chart<S: AsRef<str>>(coords: &[S]) -> Self {
        Names { coords: coords.iter().map(|s| s.as_ref().to_string()).collect() }
    }

    pub fn resolve(&self, id: &str) -> Option<usize> {
        if let Some(i) = self.coords.iter().position(|c| c == id) {
            return Some(i);
        }
        if let Some(d) = id.strip_prefix('u') {
            if d.len() == 1 {
                if let Some(k) = d.chars().next().and_then(|c| c.to_digit(10)) {
                    if k >= 1 {
                        return Some(k as usize - 1);
                    }
                }
            }
        }
        if self.coords.is_empty() {
            return match id {
                "x" => Some(0),
                "y" => Some(1),
                "z" => Some(2),
                _ => None,
            };
        }
        None
    }

    pub fn name(&self, i: usize) -> String {
        self.coords.get(i).cloned().unwrap_or_else(|| format!("u{}", i + 1))
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_with(src, &Names::standard())
}

pub fn parse_with(src: &str, names: &Names) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, names };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(p.err(format!("unexpected {}", t.describe()))),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Imag(x) => format!("number {x}i"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| ParseError { line: l0, col: c0, msg: format!("malformed number `{text}`") })?;
            let imag = i < chars.len() && chars[i] == 'i' && !chars.get(i + 1).is_some_and(|d| d.is_alphanumeric() || *d == '_');
            if imag {
                i += 1;
                Tok::Imag(v)
            } else {
                Tok::Num(v)
            }
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '*' | '/' | '^' | '(' | ')' | ',' | '-' => Tok::Op(c),
                '\u{2212}' => Tok::Op('-'),
                '\u{00b7}' | '\u{00d7}' => Tok::Op('*'),
                _ => return Err(ParseError { line: l0, col: c0, msg: format!("unexpected character `{c}`") }),
            }
        };
        col += i - start;
        out.push(Spanned { tok, line: l0, col: c0 });
    }
    out.push(Spanned { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    names: &'a Names,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: String) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { line: s.line, col: s.col, msg }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`, found {}", self.peek().describe())))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = lhs + self.term()?;
            } else if self.eat('-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat('*') {
                lhs = lhs * self.factor()?;
            } else if self.eat('/') {
                lhs = lhs / self.factor()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(-self.factor()?);
        }
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.pos;
        match self.bump() {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::Imag(x) => Ok(Expr::Imag(x)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(id) => {
                if *self.peek() == Tok::Op('(') {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    self.call(&id, args, at)
                } else if let Some(k) = self.names.resolve(&id) {
                    Ok(Expr::Var(k))
                } else {
                    Ok(Expr::Param(id))
                }
            }
            t => {
                self.pos = at;
                Err(self.err(format!("unexpected {}", t.describe())))
            }
        }
    }

    fn call(&self, id: &str, mut args: Vec<Expr>, at: usize) -> Result<Expr, ParseError> {
        let span = &self.toks[at];
        let fail = |msg: String| ParseError { line: span.line, col: span.col, msg };
        let want = if id == "pow" { 2 } else { 1 };
        if id != "pow" && Func::from_name(id).is_none() {
            return Err(fail(format!("unknown function `{id}`")));
        }
        if args.len() != want {
            return Err(fail(format!("`{id}` takes {want} argument(s), got {}", args.len())));
        }
        if id == "pow" {
            let e = args.pop().unwrap();
            let b = args.pop().unwrap();
            return Ok(Expr::Pow(Box::new(b), Box::new(e)));
        }
        Ok(Expr::Call(Func::from_name(id).unwrap(), Box::new(args.pop().unwrap())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn grammar_derivation() {
        let e = parse("2/(u1-u2)^2").unwrap();
        let want = Expr::Div(b(Expr::Num(2.0)), b(Expr::Pow(b(Expr::Sub(b(Expr::Var(0)), b(Expr::Var(1)))), b(Expr::Num(2.0)))));
        assert_eq!(e, want);
    }

    #[test]
    fn power_is_right_associative_and_binds_tighter_than_minus() {
        assert_eq!(parse("a^b^c").unwrap(), parse("a^(b^c)").unwrap());
        assert_eq!(parse("-x^2").unwrap(), parse("-(x^2)").unwrap());
        assert_eq!(parse("x^-2").unwrap(), parse("x^(-2)").unwrap());
        assert_eq!(parse("pow(x, 3)").unwrap(), parse("x^3").unwrap());
    }

    #[test]
    fn unicode_minus_and_imaginary_literal() {
        assert_eq!(parse("x − 2i").unwrap(), Expr::Var(0) - Expr::Imag(2.0));
        assert_eq!(parse("1.5e-3").unwrap(), Expr::Num(1.5e-3));
    }

    #[test]
    fn identifiers_resolve_against_chart() {
        let n = Names::chart(&["t1", "t2"]);
        assert_eq!(parse_with("t2", &n).unwrap(), Expr::Var(1));
        assert_eq!(parse_with("x", &n).unwrap(), Expr::param("x"));
        assert_eq!(parse_with("u2", &n).unwrap(), Expr::Var(1));
        assert_eq!(parse("u10").unwrap(), Expr::param("u10"));
    }

    #[test]
    fn errors_carry_position() {
        let e = parse("1 +\n  foo(2)").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert!(e.msg.contains("unknown function"));
        let e = parse("(1 + 2").unwrap_err();
        assert!(e.msg.contains("expected `)`"));
        assert!(parse("1 $ 2").is_err());
        assert!(parse("sqrt(1, 2)").is_err());
        assert!(parse("").is_err());
    }
}
