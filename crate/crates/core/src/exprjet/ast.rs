use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Ln,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "sqrt" => Some(Func::Sqrt),
            "ln" => Some(Func::Ln),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

/// Scalar expression over chart coordinates (0-based `Var`) and named
/// parameters. `pow(a, b)` and `a^b` both parse to [`Expr::Pow`].
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Purely imaginary literal, written `2i`.
    Imag(f64),
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Num(x)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn param(s: &str) -> Expr {
        Expr::Param(s.to_string())
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(x) if *x == 0.0)
    }

    /// Highest coordinate index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        let mut m = None;
        self.walk(&mut |e| {
            if let Expr::Var(i) = e {
                m = Some(m.map_or(*i, |k: usize| k.max(*i)));
            }
        });
        m
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Param(p) = e {
                s.insert(p.clone());
            }
        });
        s
    }

    fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Call(_, a) => a.walk(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }

    /// Replace parameters by other expressions (used to inline `defs`).
    pub fn substitute(&self, lookup: &impl Fn(&str) -> Option<Expr>) -> Expr {
        let b = |e: &Expr| Box::new(e.substitute(lookup));
        match self {
            Expr::Param(p) => lookup(p).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(b(a)),
            Expr::Call(g, a) => Expr::Call(*g, b(a)),
            Expr::Add(x, y) => Expr::Add(b(x), b(y)),
            Expr::Sub(x, y) => Expr::Sub(b(x), b(y)),
            Expr::Mul(x, y) => Expr::Mul(b(x), b(y)),
            Expr::Div(x, y) => Expr::Div(b(x), b(y)),
            Expr::Pow(x, y) => Expr::Pow(b(x), b(y)),
            _ => self.clone(),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $v:ident) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr::$v(Box::new(self), Box::new(o))
            }
        }
    };
}
binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}
