//! Flat coordinate charts and vector potentials.

use serde::{Deserialize, Serialize};

use crate::connection::ConnKind;
use crate::error::{Error, Result};
use crate::exprjet::{eval, parse_with, Expr, Jet2, Names};
use crate::linalg;
use crate::manifold::{Manifold, PointFields};
use crate::report::{Check, Report};
use crate::{Jet64, C64};

/// Flat coordinates `t(x)` of a spec together with what is printed in them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatChart {
    pub coords: Vec<String>,
    /// `t^i` as functions of the chart coordinates.
    pub map: Vec<String>,
    /// Unit and Euler fields in the flat chart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<String>>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub euler: Option<Vec<String>>,
    /// Vector potential `F^i(t)` with `c^i_{jk} = ∂_j∂_kF^i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<String>>,
}

fn v(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

impl FlatChart {
    /// `t¹ = 4/(x − y)`, `t² = (x + y)/2` with `F = (t¹t², (t²)²/2 + ⅔(t¹)⁻²)`.
    pub fn lobachevsky() -> Self {
        FlatChart {
            coords: v(&["t1", "t2"]),
            map: v(&["4/(x - y)", "(x + y)/2"]),
            e: Some(v(&["0", "1"])),
            euler: None,
            potential: Some(v(&["t1*t2", "t2^2/2 + 2/3*t1^(-2)"])),
        }
    }

    /// The `(u, v)` chart of Appendix case `k`.
    pub fn appendix(k: usize) -> Self {
        let (map, euler, potential) = match k {
            1 => (
                ["x - b/a*y", "y^(a + 1)/(a + 1)"],
                ["u", "(a + 1)*v"],
                [
                    "(a^2*(a - 1)*u^2 + b^2*(a + 1)^(2/(a + 1))*v^(2/(a + 1)))/(2*(a - 1)*a^2)",
                    "(a*(a + 2)*u*v + 2*b*(a + 1)^((a + 2)/(a + 1))*v^((a + 2)/(a + 1)))/((a + 2)*a)",
                ],
            ),
            2 => (["x + 1/2*b*y", "-1/y"], ["u", "-v"], ["1/2*u^2 - 1/24*b^2/v^2", "u*v + b*ln(v)"]),
            3 => (["x + b*y", "ln(y)"], ["u", "1"], ["1/2*u^2 - 1/4*b^2*exp(2*v)", "u*v - 2*b*exp(v)"]),
            4 => (
                ["x + b*y*ln(y)", "y"],
                ["u + b*v", "v"],
                ["1/2*u^2 - 1/2*b^2*v^2*ln(v)^2 + 1/2*b^2*v^2*ln(v) - 3/4*b^2*v^2", "-b*v^2*ln(v) + 1/2*b*v^2 + u*v"],
            ),
            5 => (["x - b*y", "y^2/2"], ["u", "2*v"], ["1/2*u^2 - 1/2*b^2*v*ln(v) + 1/2*b^2*v", "4/3*b*sqrt(2)*v^(3/2) + u*v"]),
            _ => panic!("Appendix cases are numbered 1..5"),
        };
        FlatChart { coords: v(&["u", "v"]), map: v(&map), e: Some(v(&["1", "0"])), euler: Some(v(&euler)), potential: Some(v(&potential)) }
    }
}

/// Connection whose flat coordinates a chart claims to be: the explicit one
/// when the manifold carries it, the natural one otherwise.
pub fn chart_connection(m: &Manifold) -> ConnKind {
    if m.spec.connection.is_some() {
        ConnKind::Explicit
    } else {
        ConnKind::Natural
    }
}

struct Compiled {
    map: Vec<Expr>,
    names: Names,
}

fn compile_map(m: &Manifold, chart: &FlatChart) -> Result<Compiled> {
    if chart.map.len() != m.n() || chart.coords.len() != m.n() {
        return Err(Error::Spec(format!("flat chart of {} has the wrong dimension", m.name())));
    }
    let map = chart.map.iter().enumerate().map(|(i, s)| m.parse_expr(&format!("chart.map[{i}]"), s)).collect::<Result<_>>()?;
    Ok(Compiled { map, names: Names::chart(&chart.coords) })
}

fn flat_exprs(c: &Compiled, field: &str, src: &[String]) -> Result<Vec<Expr>> {
    src.iter().enumerate().map(|(i, s)| parse_with(s, &c.names).map_err(|err| Error::Parse { field: format!("chart.{field}[{i}]"), err })).collect()
}

/// The coordinate change at a point: values `t`, Jacobian `J^i_a = ∂t^i/∂x^a`,
/// its inverse `K`, and the second derivatives `∂_a∂_b t^i`.
struct ChartAt {
    t: Vec<C64>,
    j: Vec<Vec<C64>>,
    k: Vec<Vec<C64>>,
    hess: Vec<Vec<Vec<C64>>>,
}

fn chart_at(m: &Manifold, c: &Compiled, u: &[C64]) -> Result<ChartAt> {
    let vars = Jet2::point(u);
    let jets: Vec<Jet64> = c.map.iter().map(|e| eval(e, &vars, &m.params)).collect::<std::result::Result<_, _>>()?;
    let j: Vec<Vec<C64>> = jets.iter().map(|x| x.gradient()).collect();
    let k = linalg::invert(&j).map_err(|_| Error::JacobianSingular)?;
    Ok(ChartAt { t: jets.iter().map(|x| x.val).collect(), j, k, hess: jets.iter().map(|x| x.hessian()).collect() })
}

/// Push a `(1,2)` tensor `T^a_{bc}` to the flat chart.
fn push_12(ch: &ChartAt, n: usize, t: impl Fn(usize, usize, usize) -> C64) -> Vec<C64> {
    let zero = C64::new(0.0, 0.0);
    let mut out = vec![zero; n * n * n];
    for i in 0..n {
        for jj in 0..n {
            for kk in 0..n {
                let mut s = zero;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            s += ch.j[i][a] * t(a, b, c) * ch.k[b][jj] * ch.k[c][kk];
                        }
                    }
                }
                out[(i * n + jj) * n + kk] = s;
            }
        }
    }
    out
}

fn push_vector(ch: &ChartAt, x: &[C64]) -> Vec<C64> {
    ch.j.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Christoffel symbols of the chart connection in the flat chart:
/// `J^i_aΓ^a_{bc}K^b_jK^c_k − ∂_b∂_c t^i K^b_jK^c_k`.
fn pushed_connection(pf: &PointFields, kind: ConnKind, ch: &ChartAt) -> Result<(Vec<C64>, f64)> {
    let n = pf.n;
    let gamma = kind.build(pf)?.values();
    let first = push_12(ch, n, |a, b, c| gamma[[a, b, c]]);
    let second = push_12(ch, n, |a, b, c| {
        // J K = 1, so ∂_b∂_c t^i is the push of K^i_a ∂_b∂_c t^a
        (0..n).map(|l| ch.k[a][l] * ch.hess[l][b][c]).sum()
    });
    let scale = first.iter().chain(&second).map(|z| z.norm()).fold(0.0, f64::max);
    Ok((first.iter().zip(&second).map(|(a, b)| a - b).collect(), scale))
}

/// The chart connection vanishes in the flat coordinates.
pub fn verify_flat_coordinates(m: &Manifold, chart: &FlatChart, points: &[Vec<C64>], tol: f64) -> Report {
    let kind = chart_connection(m);
    let mut chk = Check::new("flat coordinates", tol);
    chk.meta("connection", kind.label());
    match compile_map(m, chart) {
        Ok(c) => {
            for u in points {
                chk.absorb(m.fields(u).and_then(|pf| {
                    let ch = chart_at(m, &c, u)?;
                    let (g, scale) = pushed_connection(&pf, kind, &ch)?;
                    Ok((g.iter().map(|z| z.norm()).fold(0.0, f64::max), scale))
                }));
            }
        }
        Err(e) => chk.fail_with(&e),
    }
    chk.finish()
}

/// In the flat chart the pushed-forward product equals the Hessians of the
/// potential, and the unit and Euler fields equal the printed ones.
/// Per-part maxima are kept in the meta.
pub fn verify_vector_potential(m: &Manifold, chart: &FlatChart, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("vector potential", tol);
    let prepared = compile_map(m, chart).and_then(|c| {
        let pot = chart.potential.as_deref().ok_or_else(|| Error::MissingCompanionData(format!("{}: vector potential", m.name())))?;
        let pot = flat_exprs(&c, "potential", pot)?;
        let e = chart.e.as_deref().map(|x| flat_exprs(&c, "e", x)).transpose()?;
        let euler = chart.euler.as_deref().map(|x| flat_exprs(&c, "E", x)).transpose()?;
        Ok((c, pot, e, euler))
    });
    let (c, pot, e, euler) = match prepared {
        Ok(p) => p,
        Err(err) => {
            chk.fail_with(&err);
            return chk.finish();
        }
    };
    let n = m.n();
    let mut parts = [0.0f64; 3];
    for u in points {
        let r = (|| -> Result<(f64, f64)> {
            let pf = m.fields(u)?;
            let ch = chart_at(m, &c, u)?;
            let cv = pf.c_values();
            let pushed = push_12(&ch, n, |a, b, cc| cv[[a, b, cc]]);
            let tvars = Jet2::point(&ch.t);
            let mut hess = Vec::with_capacity(n * n * n);
            for f in &pot {
                let h = eval(f, &tvars, &m.params)?.hessian();
                hess.extend(h.into_iter().flatten());
            }
            let (d0, s0) = crate::report::discrepancy(&pushed, &hess);
            let mut worst = d0 / (1.0 + s0);
            parts[0] = parts[0].max(worst);
            let fields = [(&e, pf.e_values(), 1), (&euler, pf.euler().map(|x| x.iter().map(|j| j.val).collect()).unwrap_or_default(), 2)];
            for (printed, here, slot) in fields {
                let Some(printed) = printed else { continue };
                if here.is_empty() {
                    return Err(Error::Missing("Euler field"));
                }
                let want: Vec<C64> = printed.iter().map(|x| crate::exprjet::eval_value(x, &ch.t, &m.params)).collect::<std::result::Result<_, _>>()?;
                let (d, s) = crate::report::discrepancy(&push_vector(&ch, &here), &want);
                let r = d / (1.0 + s);
                parts[slot] = parts[slot].max(r);
                worst = worst.max(r);
            }
            Ok((worst, 0.0))
        })();
        chk.absorb(r);
    }
    chk.meta("product_vs_hessian", parts[0]);
    chk.meta("unit", parts[1]);
    chk.meta("euler", parts[2]);
    chk.finish()
}
