//! Precedence-minimal printer; `parse(print(e)) == e` for parsed trees.

use std::fmt;

use super::ast::Expr;
use super::parse::Names;

const SUM: u8 = 1;
const PROD: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => SUM,
        Expr::Mul(..) | Expr::Div(..) => PROD,
        Expr::Neg(_) => NEG,
        Expr::Pow(..) => POW,
        Expr::Num(x) | Expr::Imag(x) if x.is_sign_negative() => NEG,
        _ => ATOM,
    }
}

impl Expr {
    pub fn to_source(&self, names: &Names) -> String {
        let mut s = String::new();
        write_expr(&mut s, self, names);
        s
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_source(&Names::chart::<&str>(&[])))
    }
}

fn wrap(out: &mut String, e: &Expr, min: u8, names: &Names) {
    if prec(e) < min {
        out.push('(');
        write_expr(out, e, names);
        out.push(')');
    } else {
        write_expr(out, e, names);
    }
}

fn write_expr(out: &mut String, e: &Expr, names: &Names) {
    match e {
        Expr::Num(x) => out.push_str(&format!("{x}")),
        Expr::Imag(x) => out.push_str(&format!("{x}i")),
        Expr::Var(i) => out.push_str(&names.name(*i)),
        Expr::Param(p) => out.push_str(p),
        Expr::Neg(a) => {
            out.push('-');
            wrap(out, a, NEG, names);
        }
        Expr::Add(a, b) => {
            wrap(out, a, SUM, names);
            out.push_str(" + ");
            wrap(out, b, PROD, names);
        }
        Expr::Sub(a, b) => {
            wrap(out, a, SUM, names);
            out.push_str(" - ");
            wrap(out, b, PROD, names);
        }
        Expr::Mul(a, b) => {
            wrap(out, a, PROD, names);
            out.push('*');
            wrap(out, b, NEG, names);
        }
        Expr::Div(a, b) => {
            wrap(out, a, PROD, names);
            out.push('/');
            wrap(out, b, NEG, names);
        }
        Expr::Pow(a, b) => {
            wrap(out, a, ATOM, names);
            out.push('^');
            wrap(out, b, NEG, names);
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(out, a, names);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse;
    use super::*;

    #[test]
    fn minimal_parentheses() {
        for s in ["2/(u1 - u2)^2", "u1 - (u2 - u3)", "-u1^2", "(-u1)^2", "u1^u2^u3", "(u1^u2)^u3", "u1*-u2", "a/(b*c)", "sqrt(-1)"] {
            assert_eq!(parse(s).unwrap().to_string(), s);
        }
        assert_eq!(parse("((u1))*(u2+u3)").unwrap().to_string(), "u1*(u2 + u3)");
    }

    #[test]
    fn chart_names_are_printed() {
        let n = Names::chart(&["x", "y"]);
        let e = crate::exprjet::parse_with("2/(x-y)^2", &n).unwrap();
        assert_eq!(e.to_source(&n), "2/(x - y)^2");
    }
}
