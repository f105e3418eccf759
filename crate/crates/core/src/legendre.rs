//! Legendre transformations by invertible fields `X̄` satisfying the
//! symmetry condition `c^i_{jl}∇_kX̄^l = c^i_{kl}∇_jX̄^l`:
//! `∇̄_Y Z = X̄^{-1}∘∇_Y(X̄∘Z)` and, for flat `X̄`, `ḡ(Y, Z) = g(X̄∘Y, X̄∘Z)`.

use std::collections::BTreeMap;

use crate::connection::{natural_connection, ConnKind, ConnectionAt, Provenance};
use crate::error::{Error, Result};
use crate::exprjet::{eval, Dual, Expr, Jet2, Params};
use crate::linalg;
use crate::manifold::{
    check_killing_unit, check_metric_invariance, fit_homogeneity_exponent, over_points, FieldSource, Manifold, ManifoldSpec, PointFields, ProductSpec,
};
use crate::ode::{self, Tolerances};
use crate::report::{discrepancy, Check, Expect, Report};
use crate::rotation::rotation_data;
use crate::scalar::Scalar;
use crate::tensor::{Down, Tensor, Up};
use crate::{Dual64, Jet64, C64};

/// Tolerance on `∇X̄ = 0` enforced before a metric is transformed.
pub const FLATNESS_TOL: f64 = 1e-8;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// A vector field evaluated as second-order jets.
pub trait VectorField {
    fn label(&self) -> String;
    fn at(&self, u: &[C64]) -> Result<Vec<Jet64>>;
}

/// A field given by DSL strings in the chart of a manifold.
#[derive(Clone, Debug)]
pub struct ExprField {
    pub name: String,
    pub source: Vec<String>,
    x: Vec<Expr>,
    params: Params<f64>,
}

impl ExprField {
    pub fn compile(m: &Manifold, name: &str, comps: &[impl AsRef<str>]) -> Result<Self> {
        if comps.len() != m.n() {
            return Err(Error::Spec(format!("field {name} has {} components, chart has {}", comps.len(), m.n())));
        }
        let x = comps.iter().enumerate().map(|(i, c)| m.parse_expr(&format!("{name}[{i}]"), c.as_ref())).collect::<Result<_>>()?;
        Ok(ExprField { name: name.to_string(), source: comps.iter().map(|c| c.as_ref().to_string()).collect(), x, params: m.params.clone() })
    }
}

impl VectorField for ExprField {
    fn label(&self) -> String {
        self.name.clone()
    }

    fn at(&self, u: &[C64]) -> Result<Vec<Jet64>> {
        let vars = Jet2::point(u);
        self.x.iter().map(|e| eval(e, &vars, &self.params).map_err(Error::from)).collect()
    }
}

/// The operator `X∘` with derivatives up to second order: `M^i_j = c^i_{jl}X^l`.
fn mult_jets(pf: &PointFields, x: &[Jet64]) -> Result<Vec<Vec<Jet64>>> {
    let c2 = pf.c2.as_ref().ok_or(Error::Missing("second-order product jets"))?;
    let n = pf.n;
    Ok((0..n).map(|i| (0..n).map(|j| (0..n).fold(Jet64::constant(zero(), n), |s, l| s + c2[[i, j, l]] * x[l])).collect()).collect())
}

fn not_invertible(m: &[Vec<C64>]) -> Error {
    Error::NotInvertible(linalg::det(m).norm())
}

/// `Y` with `X∘Y = e`, as jets.
pub fn product_inverse(pf: &PointFields, x: &[Jet64]) -> Result<Vec<Jet64>> {
    let m = mult_jets(pf, x)?;
    let inv = linalg::invert(&m).map_err(|_| not_invertible(&vals2(&m)))?;
    let n = pf.n;
    Ok((0..n).map(|i| (0..n).fold(Jet64::constant(zero(), n), |s, k| s + inv[i][k] * pf.e[k])).collect())
}

fn vals2(m: &[Vec<Jet64>]) -> Vec<Vec<C64>> {
    m.iter().map(|r| r.iter().map(|x| x.val).collect()).collect()
}

/// The componentwise-in-the-product inverse `X̄^{-1}` as a field.
pub struct InverseField<'a> {
    pub base: &'a dyn FieldSource,
    pub field: &'a dyn VectorField,
}

impl VectorField for InverseField<'_> {
    fn label(&self) -> String {
        format!("{}^-1", self.field.label())
    }

    fn at(&self, u: &[C64]) -> Result<Vec<Jet64>> {
        product_inverse(&self.base.fields_at(u)?, &self.field.at(u)?)
    }
}

/// Residual of the symmetry condition and of `∇X = 0` at one point.
fn sym_and_flat(pf: &PointFields, conn: &ConnectionAt, x: &[Jet64]) -> ((f64, f64), (f64, f64)) {
    let n = pf.n;
    let cov = conn.covariant_vector(x).values();
    let c = pf.c_values();
    let mut s: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let d: C64 = (0..n).map(|l| c[[i, j, l]] * cov[[l, k]] - c[[i, k, l]] * cov[[l, j]]).sum();
                s = s.max(d.norm());
            }
        }
    }
    let g = conn.values().max_abs();
    let scale = x.iter().map(|j| j.grad.iter().map(|d| d.norm()).fold(j.val.norm() * g, f64::max)).fold(0.0, f64::max);
    ((s, c.max_abs() * scale), (cov.max_abs(), scale))
}

/// Symmetry condition for `X̄` plus invertibility of `X̄∘` (with `X̄∘X̄^{-1} = e`).
pub fn check_legendre_field(src: &dyn FieldSource, kind: ConnKind, field: &dyn VectorField, points: &[Vec<C64>], tol: f64) -> Report {
    let mut r = over_points("Legendre field", tol, src, points, |pf| {
        let conn = kind.build(pf)?;
        let x = field.at(&pf.u)?;
        let ((s, ss), _) = sym_and_flat(pf, &conn, &x);
        let y = product_inverse(pf, &x)?;
        let xv: Vec<C64> = x.iter().map(|j| j.val).collect();
        let yv: Vec<C64> = y.iter().map(|j| j.val).collect();
        let xy: Vec<C64> = pf.mult_matrix(&xv).iter().map(|row| row.iter().zip(&yv).map(|(a, b)| a * b).sum()).collect();
        let (du, su) = discrepancy(&xy, &pf.e_values());
        Ok((s.max(du), ss.max(su)))
    });
    r.meta.insert("field".into(), field.label().into());
    r
}

/// `∇X̄ = 0` for the connection `kind`.
pub fn check_flat_field(src: &dyn FieldSource, kind: ConnKind, field: &dyn VectorField, points: &[Vec<C64>], tol: f64) -> Report {
    let mut r = over_points("field is flat", tol, src, points, |pf| {
        let conn = kind.build(pf)?;
        Ok(sym_and_flat(pf, &conn, &field.at(&pf.u)?).1)
    });
    r.meta.insert("field".into(), field.label().into());
    r
}

/// `Γ̄^i_{jb} = (X̄∘)^{-1}{}^i_a (∂_j(X̄∘)^a_b + Γ^a_{js}(X̄∘)^s_b)`, with derivatives.
pub fn transform_connection(pf: &PointFields, conn: &ConnectionAt, x: &[Jet64]) -> Result<ConnectionAt> {
    let n = pf.n;
    let m = mult_jets(pf, x)?;
    let md: Vec<Vec<Dual64>> = m.iter().map(|r| r.iter().map(Dual::from_jet).collect()).collect();
    let inv = linalg::invert(&md).map_err(|_| not_invertible(&vals2(&m)))?;
    let gamma = Tensor::from_fn(n, &[Up, Down, Down], |x| {
        let (i, j, b) = (x[0], x[1], x[2]);
        (0..n).fold(Dual::constant(zero(), n), |acc, a| {
            let inner = (0..n).fold(Dual::partial_of(&m[a][b], j), |s, t| s + conn.gamma[[a, j, t]] * md[t][b]);
            acc + inv[i][a] * inner
        })
    });
    Ok(ConnectionAt { gamma, provenance: Provenance::LegendreTransformed })
}

/// The canonical-coordinate formulas `Γ̄^i_{ji} = Γ^i_{ji} + ∂_j ln X̄^i`,
/// `Γ̄^i_{ij} = Γ̄^i_{ji}`, `Γ̄^i_{jj} = −Γ̄^i_{ij}` (`i ≠ j`), zero otherwise.
pub fn transform_connection_canonical(conn: &ConnectionAt, x: &[Jet64]) -> Result<Tensor<C64>> {
    let n = conn.n();
    let mut out = Tensor::zeros(n, &[Up, Down, Down], 0);
    for i in 0..n {
        if x[i].val.norm() == 0.0 {
            return Err(Error::NotInvertible(0.0));
        }
        for j in 0..n {
            let v = conn.at(i, j, i) + x[i].grad[j] / x[i].val;
            out[[i, j, i]] = v;
            out[[i, i, j]] = v;
            if i != j {
                out[[i, j, j]] = -v;
            }
        }
    }
    Ok(out)
}

/// `ḡ_{jk} = g_{ab}(X̄∘)^a_j(X̄∘)^b_k`.
pub fn transform_metric(pf: &PointFields, x: &[Jet64]) -> Result<Tensor<Jet64>> {
    let n = pf.n;
    let g = pf.metric()?;
    let m = mult_jets(pf, x)?;
    Ok(Tensor::from_fn(n, &[Down, Down], |jk| {
        let mut s = Jet64::constant(zero(), n);
        for a in 0..n {
            for b in 0..n {
                s = s + g[[a, b]] * m[a][jk[0]] * m[b][jk[1]];
            }
        }
        s
    }))
}

/// The structure `(∘, e, E, ḡ)` with the transformed connection stored as
/// the explicit connection and Lamé coefficients `H̄_i = H_iX̄^i` in
/// canonical coordinates.
pub struct LegendreTransformed<'a> {
    pub base: &'a dyn FieldSource,
    pub field: &'a dyn VectorField,
}

impl<'a> LegendreTransformed<'a> {
    /// Refuses fields that are not flat for the natural connection at `points`.
    pub fn new(base: &'a dyn FieldSource, field: &'a dyn VectorField, points: &[Vec<C64>]) -> Result<Self> {
        let r = check_flat_field(base, ConnKind::Natural, field, points, FLATNESS_TOL);
        if let Some(e) = &r.error {
            return Err(Error::HypothesisViolated(format!("{} could not be evaluated: {e}", field.label())));
        }
        if !r.pass {
            return Err(Error::HypothesisViolated(format!("∇{} ≠ 0 (residual {:e})", field.label(), r.max_residual)));
        }
        Ok(LegendreTransformed { base, field })
    }
}

impl FieldSource for LegendreTransformed<'_> {
    fn label(&self) -> String {
        format!("{} by {}", self.base.label(), self.field.label())
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn fields_at(&self, u: &[C64]) -> Result<PointFields> {
        let mut pf = self.base.fields_at(u)?;
        let x = self.field.at(u)?;
        let conn = transform_connection(&pf, &natural_connection(&pf)?, &x)?;
        let canonical = pf.c_values().data().iter().enumerate().all(|(k, v)| {
            let n = pf.n;
            let (i, j, l) = (k / (n * n), (k / n) % n, k % n);
            let want = if i == j && j == l { 1.0 } else { 0.0 };
            (v - C64::new(want, 0.0)).norm() == 0.0
        });
        pf.lame = match (&pf.lame, canonical) {
            (Some(h), true) => Some(h.iter().zip(&x).map(|(h, x)| *h * *x).collect()),
            _ => None,
        };
        pf.g = Some(transform_metric(&pf, &x)?);
        pf.g2 = None;
        pf.conn = Some(conn.gamma);
        Ok(pf)
    }
}

/// Invariance and Killing unit of `ḡ`, and agreement of its natural
/// connection with `∇̄`, after enforcing `∇X̄ = 0`.
pub fn check_transform_metric(base: &dyn FieldSource, field: &dyn VectorField, points: &[Vec<C64>], tol: f64) -> Vec<Report> {
    let t = match LegendreTransformed::new(base, field, points) {
        Ok(t) => t,
        Err(e) => return vec![Report::errored("Legendre transform", tol, &e)],
    };
    let agree = over_points("natural connection of the new metric", tol, &t, points, |pf| {
        let a = natural_connection(pf)?.values();
        let b = ConnKind::Explicit.build(pf)?.values();
        Ok(discrepancy(a.data(), b.data()))
    });
    vec![check_metric_invariance(&t, points, tol), check_killing_unit(&t, points, tol), agree]
}

/// `R̄(Y, Z)W = X̄^{-1}∘R(Y, Z)(X̄∘W)`, torsion and product compatibility of `∇̄`.
pub fn check_transformed_connection(src: &dyn FieldSource, kind: ConnKind, field: &dyn VectorField, points: &[Vec<C64>], tol: f64) -> Vec<Report> {
    let names = ["transformed connection torsion", "transformed connection compatibility", "transformed curvature identity"];
    let mut checks: Vec<Check> = names.iter().map(|n| Check::new(n, tol)).collect();
    for u in points {
        let r = (|| -> Result<[(f64, f64); 3]> {
            let pf = src.fields_at(u)?;
            let conn = kind.build(&pf)?;
            let x = field.at(u)?;
            let bar = transform_connection(&pf, &conn, &x)?;
            let n = pf.n;
            let gs = bar.values().max_abs();
            let nc = crate::connection::nabla_c(&pf, &bar);
            let mut compat: f64 = 0.0;
            for k in 0..n {
                for i in 0..n {
                    for l in 0..n {
                        for j in 0..n {
                            compat = compat.max((nc[[k, i, l, j]] - nc[[l, i, k, j]]).norm());
                        }
                    }
                }
            }
            let r = crate::connection::riemann(&conn);
            let rb = crate::connection::riemann(&bar);
            let m = vals2(&mult_jets(&pf, &x)?);
            let mi = linalg::invert(&m).map_err(|_| not_invertible(&m))?;
            let mut curv: f64 = 0.0;
            for h in 0..n {
                for i in 0..n {
                    for k in 0..n {
                        for j in 0..n {
                            let mut v = zero();
                            for a in 0..n {
                                for b in 0..n {
                                    v += mi[h][a] * r[[a, b, k, j]] * m[b][i];
                                }
                            }
                            curv = curv.max((rb[[h, i, k, j]] - v).norm());
                        }
                    }
                }
            }
            Ok([(bar.torsion(), gs), (compat, nc.max_abs().max(gs * pf.c.values().max_abs())), (curv, bar.curvature_scale().max(conn.curvature_scale()))])
        })();
        match r {
            Ok(rs) => {
                for (c, (d, s)) in checks.iter_mut().zip(rs) {
                    c.record(d, s);
                }
            }
            Err(e) => checks.iter_mut().for_each(|c| c.fail_with(&e)),
        }
    }
    checks.into_iter().map(Check::finish).collect()
}

/// Intrinsic and canonical-coordinate transformed connections agree.
pub fn check_canonical_transform(src: &dyn FieldSource, kind: ConnKind, field: &dyn VectorField, points: &[Vec<C64>], tol: f64) -> Report {
    over_points("canonical Legendre formulas", tol, src, points, |pf| {
        let conn = kind.build(pf)?;
        let x = field.at(&pf.u)?;
        let a = transform_connection(pf, &conn, &x)?.values();
        let b = transform_connection_canonical(&conn, &x)?;
        Ok(discrepancy(a.data(), b.data()))
    })
}

/// `β̄_ij = β_ij` after the transform.
pub fn check_combescure(base: &dyn FieldSource, transformed: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    over_points("Combescure equivalence", tol, base, points, |pf| {
        let a = rotation_data(pf)?;
        let b = rotation_data(&transformed.fields_at(&pf.u)?)?;
        let fa: Vec<C64> = a.beta.iter().flatten().map(|x| x.val).collect();
        let fb: Vec<C64> = b.beta.iter().flatten().map(|x| x.val).collect();
        Ok(discrepancy(&fa, &fb))
    })
}

/// Least-squares `s` with `a ≈ s·b` over all metric components, and the
/// normalized residual of that fit.
pub fn fit_one_constant(a: &dyn FieldSource, b: &dyn FieldSource, points: &[Vec<C64>]) -> Result<(C64, f64)> {
    let mut pairs = Vec::new();
    for u in points {
        let ga = a.fields_at(u)?.metric()?.map(|j| j.val);
        let gb = b.fields_at(u)?.metric()?.map(|j| j.val);
        pairs.push((ga, gb));
    }
    let (mut num, mut den) = (zero(), 0.0);
    for (ga, gb) in &pairs {
        for (x, y) in ga.data().iter().zip(gb.data()) {
            num += y.conj() * x;
            den += y.norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(Error::AllEntriesZero);
    }
    let s = num / den;
    let mut worst: f64 = 0.0;
    for (ga, gb) in &pairs {
        let scaled: Vec<C64> = gb.data().iter().map(|y| y * s).collect();
        let (d, sc) = discrepancy(ga.data(), &scaled);
        worst = worst.max(d / (1.0 + sc));
    }
    Ok((s, worst))
}

/// Metric of `a` equals the metric of `b` up to one fitted constant.
pub fn check_metric_match(a: &dyn FieldSource, b: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    let name = format!("{} matches {} up to a constant", a.label(), b.label());
    match fit_one_constant(a, b, points) {
        Ok((s, r)) => {
            let mut chk = Check::new(&name, tol);
            chk.record(r, 0.0);
            chk.meta("constant", vec![s.re, s.im]);
            chk.finish()
        }
        Err(e) => Report::errored(&name, tol, &e),
    }
}

/// `ℒ_E X̄ = d̄X̄` with fitted `d̄`, and `D̄ = D + 2d̄ + 2` for the fitted
/// exponents of `g` and `ḡ`.
pub fn check_homogeneous_legendre(base: &dyn FieldSource, field: &dyn VectorField, points: &[Vec<C64>], tol: f64) -> Report {
    let name = "homogeneous Legendre field";
    let lie = |u: &[C64]| -> Result<(Vec<C64>, Vec<C64>)> {
        let pf = base.fields_at(u)?;
        let e = pf.euler()?;
        let x = field.at(u)?;
        let n = pf.n;
        let l = (0..n).map(|i| (0..n).map(|k| e[k].val * x[i].grad[k] - x[k].val * e[i].grad[k]).sum()).collect();
        Ok((x.iter().map(|j| j.val).collect(), l))
    };
    let mut data = Vec::new();
    for u in points {
        match lie(u) {
            Ok(v) => data.push(v),
            Err(e) => return Report::errored(name, tol, &e),
        }
    }
    let (mut num, mut den) = (zero(), 0.0);
    for (x, l) in &data {
        for (a, b) in x.iter().zip(l) {
            num += a.conj() * b;
            den += a.norm_sqr();
        }
    }
    if den == 0.0 {
        return Report::errored(name, tol, &Error::AllEntriesZero);
    }
    let dbar = num / den;
    let mut chk = Check::new(name, tol);
    for (x, l) in &data {
        let fit: Vec<C64> = x.iter().map(|a| a * dbar).collect();
        chk.compare(l, &fit);
    }
    let exps = LegendreTransformed::new(base, field, points).and_then(|t| Ok((fit_homogeneity_exponent(base, points)?, fit_homogeneity_exponent(&t, points)?)));
    match exps {
        Ok((d, dt)) => {
            let want = d + dbar * 2.0 + 2.0;
            chk.record((dt - want).norm(), want.norm());
            chk.meta("D", vec![d.re, d.im]);
            chk.meta("D_bar", vec![dt.re, dt.im]);
        }
        Err(e) => chk.fail_with(&e),
    }
    chk.meta("d_bar", vec![dbar.re, dbar.im]);
    chk.finish()
}

/// `∇X̄ = 0` integrated along a polyline: `dX̄^i/dt = −Γ^i_{js}(u(t))u̇^jX̄^s`.
/// Returns the field at every vertex of `path`.
pub fn flat_field_ode(src: &dyn FieldSource, kind: ConnKind, x0: &[C64], path: &[Vec<C64>], tol: Tolerances) -> Result<Vec<Vec<C64>>> {
    let n = src.dim();
    let mut out = vec![x0.to_vec()];
    for w in path.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let du: Vec<C64> = (0..n).map(|j| b[j] - a[j]).collect();
        let rhs = |t: f64, x: &[C64]| -> std::result::Result<Vec<C64>, String> {
            let u: Vec<C64> = (0..n).map(|j| a[j] + du[j] * t).collect();
            let pf = src.fields_at(&u).map_err(|e| e.to_string())?;
            let conn = kind.build(&pf).map_err(|e| e.to_string())?;
            Ok((0..n)
                .map(|i| {
                    let mut v = zero();
                    for j in 0..n {
                        for s in 0..n {
                            v -= conn.at(i, j, s) * du[j] * x[s];
                        }
                    }
                    v
                })
                .collect())
        };
        let x = ode::dopri5(rhs, 0.0, out.last().expect("seeded"), 1.0, tol, &[], |_, _| {})?;
        out.push(x);
    }
    Ok(out)
}

/// Rectangle `u0 → u0 + h e_a → u0 + h e_a + h e_b → u0 + h e_b → u0`.
pub fn rectangle(u0: &[C64], axes: (usize, usize), side: f64) -> Vec<Vec<C64>> {
    let step = |u: &[C64], k: usize, s: f64| -> Vec<C64> {
        let mut v = u.to_vec();
        v[k] += s;
        v
    };
    let p1 = step(u0, axes.0, side);
    let p2 = step(&p1, axes.1, side);
    let p3 = step(u0, axes.1, side);
    vec![u0.to_vec(), p1, p2, p3, u0.to_vec()]
}

/// Closure of [`flat_field_ode`] around a loop; when `exact` is given the
/// field at each vertex is also compared with it.
pub fn check_flat_field_loop(src: &dyn FieldSource, kind: ConnKind, x0: &[C64], path: &[Vec<C64>], exact: Option<&dyn VectorField>, tol: f64) -> Report {
    let mut chk = Check::new("flat field transport", tol);
    match flat_field_ode(src, kind, x0, path, Tolerances { rtol: 1e-11, atol: 1e-13, ..Tolerances::default() }) {
        Ok(xs) => {
            let closed = path.first() == path.last();
            if closed {
                chk.compare(xs.last().expect("nonempty"), x0);
            }
            chk.meta("closed", closed);
            if let Some(f) = exact {
                for (u, x) in path.iter().zip(&xs) {
                    match f.at(u) {
                        Ok(j) => chk.compare(x, &j.iter().map(|j| j.val).collect::<Vec<_>>()),
                        Err(e) => chk.fail_with(&e),
                    }
                }
            }
        }
        Err(e) => chk.fail_with(&e),
    }
    chk.finish()
}

/// Numerical rank of the matrix with the fields as columns.
pub fn check_field_span(fields: &[&dyn VectorField], points: &[Vec<C64>], expected: usize) -> Report {
    let mut chk = Check::new("rank of the flat fields", 0.0);
    let mut ranks = Vec::new();
    for u in points {
        let cols: Result<Vec<Vec<Jet64>>> = fields.iter().map(|f| f.at(u)).collect();
        match cols {
            Ok(cols) => {
                let m: Vec<Vec<C64>> = (0..u.len()).map(|i| cols.iter().map(|c| c[i].val).collect()).collect();
                let r = linalg::numerical_rank(&m, 1e-8);
                ranks.push(r);
                chk.record((r as f64 - expected as f64).abs(), 0.0);
            }
            Err(e) => chk.fail_with(&e),
        }
    }
    chk.meta("ranks", ranks);
    chk.meta("expected", expected);
    chk.finish()
}

/// Whether `X̄^{-1}` is flat for `∇̄`. Reported, not required.
pub fn check_inverse_flat(base: &dyn FieldSource, field: &dyn VectorField, points: &[Vec<C64>], tol: f64) -> Report {
    let inv = InverseField { base, field };
    let r = over_points("inverse field is flat for the transformed connection", tol, base, points, |pf| {
        let x = field.at(&pf.u)?;
        let bar = transform_connection(pf, &natural_connection(pf)?, &x)?;
        let y = inv.at(&pf.u)?;
        let cov = bar.covariant_vector(&y).values();
        Ok((cov.max_abs(), bar.values().max_abs() * y.iter().map(|j| j.val.norm()).fold(0.0, f64::max)))
    });
    r.expecting(Expect::Info)
}

/// Spec of the transformed structure: `ḡ_{jk} = Σ g_{ab}(X∘)^a_j(X∘)^b_k`
/// written out as strings, `H̄_i = H_iX^i` for canonical charts. Explicit
/// connections and second metrics are dropped.
pub fn transformed_spec(spec: &ManifoldSpec, field: &ExprField) -> Result<ManifoldSpec> {
    let n = spec.n;
    let g = spec.g.as_ref().ok_or(Error::Missing("metric"))?;
    let x = &field.source;
    let coeff = |a: usize, j: usize, l: usize| -> Option<String> {
        match &spec.product {
            ProductSpec::Canonical => (a == j && j == l).then(|| "1".to_string()),
            ProductSpec::ShiftedCanonical => (a == j + l).then(|| "1".to_string()),
            ProductSpec::Explicit(t) => {
                let s = t[a][j][l].trim();
                (s != "0").then(|| s.to_string())
            }
        }
    };
    // (X∘)^a_j as a string, or None when identically zero
    let mult = |a: usize, j: usize| -> Option<String> {
        let terms: Vec<String> =
            (0..n).filter_map(|l| coeff(a, j, l).map(|c| if c == "1" { format!("({})", x[l]) } else { format!("({c})*({})", x[l]) })).collect();
        (!terms.is_empty()).then(|| format!("({})", terms.join(" + ")))
    };
    let mut gbar = vec![vec!["0".to_string(); n]; n];
    for j in 0..n {
        for k in 0..n {
            let mut terms = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if g[a][b].trim() == "0" {
                        continue;
                    }
                    if let (Some(p), Some(q)) = (mult(a, j), mult(b, k)) {
                        terms.push(format!("({})*{p}*{q}", g[a][b]));
                    }
                }
            }
            if !terms.is_empty() {
                gbar[j][k] = terms.join(" + ");
            }
        }
    }
    let mut out = spec.clone();
    out.name = format!("{}-by-{}", spec.name, field.name);
    out.g = Some(gbar);
    out.g2 = None;
    out.connection = None;
    out.lame = match (&spec.lame, &spec.product) {
        (Some(h), ProductSpec::Canonical) => Some(h.iter().zip(x).map(|(h, x)| format!("({h})*({x})")).collect()),
        _ => None,
    };
    out.expected = Default::default();
    Ok(out)
}

/// Gauss series `₂F₁(a, b; c; w)` over any scalar, for `|w| < 1`.
pub fn hyp2f1<S: Scalar<R = f64>>(a: f64, b: f64, c: f64, w: S) -> S {
    let dim = w.dim();
    let mut term = S::unit(dim);
    let mut sum = S::unit(dim);
    for k in 0..20_000 {
        let k = k as f64;
        let f = (a + k) * (b + k) / ((c + k) * (k + 1.0));
        term = (term * w).mulc(C64::new(f, 0.0));
        sum = sum + term;
        if term.value().norm() < 1e-17 * sum.value().norm().max(1e-300) && k > 3.0 {
            break;
        }
    }
    sum
}

/// Ferrers function `P^1_ν(x) = −√(1−x²)·ν(ν+1)/2·₂F₁(1−ν, ν+2; 2; (1−x)/2)`.
pub fn ferrers_p1<S: Scalar<R = f64>>(nu: f64, x: S) -> Result<S> {
    let dim = x.dim();
    let one = S::unit(dim);
    let w = (one - x).mulc(C64::new(0.5, 0.0));
    let root = (one - x * x).sqrt()?;
    Ok((root * hyp2f1(1.0 - nu, nu + 2.0, 2.0, w)).mulc(C64::new(-nu * (nu + 1.0) / 2.0, 0.0)))
}

/// The field built from `P^1_{∓1/2}` of `(2u¹ − u³ − u²)/(u² − u³)` that is
/// flat for `Γ^i_{ij} = 1/(2(u^j − u^i))`.
pub struct PencilLegendreField;

impl VectorField for PencilLegendreField {
    fn label(&self) -> String {
        "X2-legendre-P".into()
    }

    fn at(&self, u: &[C64]) -> Result<Vec<Jet64>> {
        if u.len() != 3 {
            return Err(Error::Spec("the Legendre-function field lives in dimension 3".into()));
        }
        let v = Jet2::point(u);
        let x = (v[0].mulc(C64::new(2.0, 0.0)) - v[2] - v[1]).try_div(&(v[1] - v[2]))?;
        let root = ((v[0] - v[1]) * (v[0] - v[2]) * (v[1] - v[2])).sqrt()?;
        let pm = ferrers_p1(-0.5, x)?;
        let pp = ferrers_p1(0.5, x)?;
        let half = C64::new(-0.5, 0.0);
        Ok(vec![pm.try_div(&root)?, (pm + pp).mulc(half).try_div(&root)?, (pm - pp).mulc(half).try_div(&root)?])
    }
}

/// Named fields available for a spec: `e`, `E`, and the known flat fields
/// of the catalog families.
pub fn named_field(m: &Manifold, name: &str, extra: &BTreeMap<String, Vec<String>>) -> Result<ExprField> {
    if let Some(c) = extra.get(name) {
        return ExprField::compile(m, name, c);
    }
    match name {
        "e" => ExprField::compile(m, name, &m.spec.e),
        "E" => ExprField::compile(m, name, m.spec.euler.as_ref().ok_or(Error::Missing("Euler field"))?),
        _ => Err(Error::MissingCompanionData(format!("{}: field {name}", m.name()))),
    }
}
