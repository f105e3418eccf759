//! Flat pencils of contravariant metrics and the product they induce.
//!
//! In a pencil spec, `g` is the covariant form of `η` (the first metric,
//! `g₁`) and `g2` the covariant form of `g` (the second metric, `g₂`); the
//! pencil is `g₂^{ij} − λg₁^{ij}`. Contravariant Christoffel symbols are
//! `Γ^{ij}_k = −g^{is}Γ^j_{sk}`, and Lie derivatives of metrics are taken
//! on the contravariant forms.

use std::collections::BTreeMap;

use serde_json::json;

use crate::connection::{counit_of, levi_civita_of, riemann, ConnectionAt};
use crate::error::{Error, Result};
use crate::exprjet::{Dual, Jet2};
use crate::linalg;
use crate::manifold::{FieldSource, Manifold, ManifoldSpec, PointFields, ProductSpec, Region};
use crate::report::{Check, Report};
use crate::scalar::Scalar;
use crate::tensor::{lie_derivative, Down, Tensor, Up};
use crate::{Dual64, Jet64, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Pencil parameters sampled by default; one of them is non-real.
pub const DEFAULT_LAMBDAS: [C64; 5] = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 1.0)];

/// Condition number above which `R` counts as degenerate.
pub const R_CONDITION_LIMIT: f64 = 1e8;

fn jet_matrix(t: &Tensor<Jet64>) -> Vec<Vec<Jet64>> {
    let n = t.n();
    (0..n).map(|i| (0..n).map(|j| t[[i, j]]).collect()).collect()
}

fn up_tensor<S: Scalar>(m: &[Vec<S>]) -> Tensor<S> {
    Tensor::from_fn(m.len(), &[Up, Up], |i| m[i[0]][i[1]])
}

fn dual_of(m: &[Vec<Jet64>]) -> Vec<Vec<Dual64>> {
    m.iter().map(|r| r.iter().map(Dual::from_jet).collect()).collect()
}

/// Both metrics of a pencil at a point, in both variances, with their
/// Levi-Civita connections and the derived operators.
#[derive(Clone, Debug)]
pub struct PencilAt {
    pub n: usize,
    pub u: Vec<C64>,
    /// Covariant `η_{ij}` and `g_{ij}` as order-2 jets.
    pub eta: Tensor<Jet64>,
    pub g: Tensor<Jet64>,
    /// Contravariant `η^{ij}` and `g^{ij}` as order-2 jets.
    pub eta_inv: Vec<Vec<Jet64>>,
    pub g_inv: Vec<Vec<Jet64>>,
    pub gamma1: ConnectionAt,
    pub gamma2: ConnectionAt,
    pub e: Vec<Jet64>,
    /// `E^i = g^{il}η_{lj}e^j`.
    pub euler: Vec<Jet64>,
    /// `L^s_h = g^{sm}η_{mh}`.
    pub l: Vec<Vec<Dual64>>,
    /// `d` fitted at this point from `ℒ_E g^{-1} = (d − 1)g^{-1}`.
    pub d: C64,
}

impl PencilAt {
    pub fn new(pf: &PointFields) -> Result<Self> {
        let n = pf.n;
        let eta = pf.metric()?.clone();
        let g = pf.second_metric()?.clone();
        let eta_inv = linalg::invert(&jet_matrix(&eta))?;
        let g_inv = linalg::invert(&jet_matrix(&g))?;
        let gamma1 = levi_civita_of(&eta)?;
        let gamma2 = levi_civita_of(&g)?;
        let zero = Jet2::constant(c(0.0), n);
        let euler: Vec<Jet64> = (0..n)
            .map(|i| {
                let mut s = zero;
                for l in 0..n {
                    for j in 0..n {
                        s = s + g_inv[i][l] * eta[[l, j]] * pf.e[j];
                    }
                }
                s
            })
            .collect();
        let gi = dual_of(&g_inv);
        let l = (0..n).map(|s| (0..n).map(|h| (0..n).fold(Dual::constant(c(0.0), n), |a, m| a + gi[s][m] * Dual::from_jet(&eta[[m, h]]))).collect()).collect();
        let ed: Vec<Dual64> = euler.iter().map(Dual::from_jet).collect();
        let gt = up_tensor(&gi);
        let lg = lie_derivative(&gt, &ed);
        let gv = gt.values();
        let num: C64 = gv.data().iter().zip(lg.data()).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = gv.data().iter().map(|a| a.norm_sqr()).sum();
        let d = num / den + 1.0;
        Ok(PencilAt { n, u: pf.u.clone(), eta, g, eta_inv, g_inv, gamma1, gamma2, e: pf.e.clone(), euler, l, d })
    }

    fn euler_dual(&self) -> Vec<Dual64> {
        self.euler.iter().map(Dual::from_jet).collect()
    }

    /// `Γ^{(1)k}_{st} − Γ^{(2)k}_{st}` with derivatives.
    fn gamma_diff(&self, k: usize, s: usize, t: usize) -> Dual64 {
        self.gamma1.gamma[[k, s, t]] - self.gamma2.gamma[[k, s, t]]
    }

    /// `Δ^{jk}_m = L^s_m η^{jt}(Γ^{(1)k}_{st} − Γ^{(2)k}_{st})`, slots `(j, k, m)`.
    pub fn delta(&self) -> Tensor<Dual64> {
        let n = self.n;
        let ei = dual_of(&self.eta_inv);
        Tensor::from_fn(n, &[Up, Up, Down], |x| {
            let (j, k, m) = (x[0], x[1], x[2]);
            let mut a = Dual::constant(c(0.0), n);
            for s in 0..n {
                for t in 0..n {
                    a = a + self.l[s][m] * ei[j][t] * self.gamma_diff(k, s, t);
                }
            }
            a
        })
    }

    /// `R^i_j = (Γ^{(1)i}_{jl} − Γ^{(2)i}_{jl})E^l`, slots `(i, j)`.
    pub fn r(&self) -> Tensor<Dual64> {
        let n = self.n;
        let ed = self.euler_dual();
        Tensor::from_fn(n, &[Up, Down], |x| (0..n).fold(Dual::constant(c(0.0), n), |a, l| a + self.gamma_diff(x[0], x[1], l) * ed[l]))
    }

    /// `R^i_j = ½(d − 1)δ^i_j + ∇_{(1)j}E^i + ½g^{is}dθ_{sj}`, `θ = η(e, ·)`.
    pub fn r_alt(&self) -> Tensor<C64> {
        let n = self.n;
        let ne = self.gamma1.covariant_vector(&self.euler).values();
        let (_, dth) = counit_of(&self.eta, &self.e);
        Tensor::from_fn(n, &[Up, Down], |x| {
            let (i, j) = (x[0], x[1]);
            let mut v = ne[[i, j]];
            if i == j {
                v += (self.d - 1.0) * 0.5;
            }
            for s in 0..n {
                v += self.g_inv[i][s].val * dth[[s, j]].val * 0.5;
            }
            v
        })
    }

    /// Theorem route: `c^j_{hk} = L^s_h(Γ^{(1)l}_{sk} − Γ^{(2)l}_{sk})(R^{−1})^j_l`,
    /// together with the alternative `Δ^{ml}_hη_{mk}(R^{−1})^j_l`.
    pub fn product_from_r(&self) -> Result<(Tensor<Dual64>, Tensor<C64>)> {
        let n = self.n;
        let r = self.r();
        let rm: Vec<Vec<Dual64>> = (0..n).map(|i| (0..n).map(|j| r[[i, j]]).collect()).collect();
        let sv = linalg::singular_values(&rm.iter().map(|row| row.iter().map(|x| x.val).collect()).collect::<Vec<_>>());
        let cond = sv[0] / sv[n - 1];
        if !(cond <= R_CONDITION_LIMIT) {
            return Err(Error::HypothesisViolated(format!("R is degenerate (condition number {cond:e})")));
        }
        let ri = linalg::invert(&rm)?;
        let c1 = Tensor::from_fn(n, &[Up, Down, Down], |x| {
            let (j, h, k) = (x[0], x[1], x[2]);
            let mut a = Dual::constant(c(0.0), n);
            for s in 0..n {
                for l in 0..n {
                    a = a + self.l[s][h] * self.gamma_diff(l, s, k) * ri[j][l];
                }
            }
            a
        });
        let delta = self.delta().values();
        let c2 = Tensor::from_fn(n, &[Up, Down, Down], |x| {
            let (j, h, k) = (x[0], x[1], x[2]);
            let mut a = c(0.0);
            for m in 0..n {
                for l in 0..n {
                    a += delta[[m, l, h]] * self.eta[[m, k]].val * ri[j][l].val;
                }
            }
            a
        });
        Ok((c1, c2))
    }

    /// Semisimple route, needing no inverse of `R`: with `L = E∘` and unit
    /// `e`, the vectors `e, Le, …, L^{n−1}e` form a basis `K` when `L` has
    /// simple spectrum, and `L^ae ∘ L^be = L^{a+b}e`. Hence
    /// `c^j_{hk} = Σ_{a,b} (L^{a+b}e)^j (K^{−1})^a_h (K^{−1})^b_k`, which is
    /// `δ^i_jδ^i_k` in the eigencoordinates of `L`.
    pub fn product_semisimple(&self) -> Result<Tensor<Dual64>> {
        let n = self.n;
        let lv: Vec<Vec<C64>> = self.l.iter().map(|r| r.iter().map(|x| x.val).collect()).collect();
        let ev = linalg::eigenvalues(&lv);
        let scale = ev.iter().map(|x| x.norm()).fold(1.0, f64::max);
        for i in 0..n {
            for j in 0..i {
                if (ev[i] - ev[j]).norm() <= 1e-8 * scale {
                    return Err(Error::HypothesisViolated("L has a repeated eigenvalue".into()));
                }
            }
        }
        let zero = Dual::constant(c(0.0), n);
        let mut powers: Vec<Vec<Dual64>> = vec![self.e.iter().map(Dual::from_jet).collect()];
        for _ in 1..(2 * n - 1) {
            let prev = powers.last().expect("nonempty");
            let next = (0..n).map(|j| (0..n).fold(zero, |a, k| a + self.l[j][k] * prev[k])).collect();
            powers.push(next);
        }
        let k: Vec<Vec<Dual64>> = (0..n).map(|j| (0..n).map(|a| powers[a][j]).collect()).collect();
        let ki = linalg::invert(&k)?;
        Ok(Tensor::from_fn(n, &[Up, Down, Down], |x| {
            let (j, h, kk) = (x[0], x[1], x[2]);
            let mut s = zero;
            for a in 0..n {
                for b in 0..n {
                    s = s + powers[a + b][j] * ki[a][h] * ki[b][kk];
                }
            }
            s
        }))
    }

    /// The theorem route when `R` is invertible, otherwise the semisimple
    /// route. The flag tells which one ran.
    pub fn product(&self) -> Result<(Tensor<Dual64>, Option<Tensor<C64>>, ProductRoute)> {
        match self.product_from_r() {
            Ok((c1, c2)) => Ok((c1, Some(c2), ProductRoute::InverseR)),
            Err(Error::HypothesisViolated(_)) => Ok((self.product_semisimple()?, None, ProductRoute::Semisimple)),
            Err(e) => Err(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductRoute {
    InverseR,
    Semisimple,
}

impl ProductRoute {
    pub fn label(self) -> &'static str {
        match self {
            ProductRoute::InverseR => "inverse-R",
            ProductRoute::Semisimple => "semisimple",
        }
    }
}

fn pencil_points(src: &dyn FieldSource, points: &[Vec<C64>]) -> (Vec<PencilAt>, Option<Error>) {
    let mut out = Vec::new();
    let mut err = None;
    for u in points {
        match src.fields_at(u).and_then(|pf| PencilAt::new(&pf)) {
            Ok(p) => out.push(p),
            Err(e) => {
                err.get_or_insert(e);
            }
        }
    }
    (out, err)
}

/// Contravariant Christoffels `Γ^{ij}_k = −g^{is}Γ^j_{sk}`.
fn contravariant_christoffel(ginv: &[Vec<C64>], conn: &ConnectionAt) -> Tensor<C64> {
    let n = conn.n();
    Tensor::from_fn(n, &[Up, Up, Down], |x| -(0..n).map(|s| ginv[x[0]][s] * conn.at(x[1], s, x[2])).sum::<C64>())
}

/// Flatness of `g₂ − λg₁` and linearity of its contravariant Christoffels,
/// one residual per (point, λ).
pub fn check_flat_pencil(src: &dyn FieldSource, points: &[Vec<C64>], lambdas: &[C64], tol: f64) -> Report {
    let mut chk = Check::new("flat pencil", tol);
    let mut curv: f64 = 0.0;
    let mut lin: f64 = 0.0;
    let mut singular = Vec::new();
    for u in points {
        let p = match src.fields_at(u).and_then(|pf| PencilAt::new(&pf)) {
            Ok(p) => p,
            Err(e) => {
                chk.fail_with(&e);
                continue;
            }
        };
        let n = p.n;
        let val = |m: &[Vec<Jet64>]| -> Vec<Vec<C64>> { m.iter().map(|r| r.iter().map(|x| x.val).collect()).collect() };
        let c1 = contravariant_christoffel(&val(&p.eta_inv), &p.gamma1);
        let c2 = contravariant_christoffel(&val(&p.g_inv), &p.gamma2);
        for &lam in lambdas {
            let contra: Vec<Vec<Jet64>> = (0..n).map(|i| (0..n).map(|j| p.g_inv[i][j] - p.eta_inv[i][j].mulc(lam)).collect()).collect();
            let built = linalg::invert(&contra).map_err(Error::from).and_then(|cov| levi_civita_of(&Tensor::from_fn(n, &[Down, Down], |x| cov[x[0]][x[1]])));
            let conn = match built {
                Ok(cn) => cn,
                Err(e) => {
                    singular.push(json!([lam.re, lam.im]));
                    chk.fail_with(&e);
                    continue;
                }
            };
            let rc = riemann(&conn).max_abs() / (1.0 + conn.curvature_scale());
            let cl = contravariant_christoffel(&val(&contra), &conn);
            let want = c2.sub(&c1.scale(lam));
            let (d, s) = crate::report::discrepancy(cl.data(), want.data());
            let lr = d / (1.0 + s);
            curv = curv.max(rc);
            lin = lin.max(lr);
            chk.record(rc.max(lr), 0.0);
        }
    }
    chk.meta("curvature", curv);
    chk.meta("linearity", lin);
    chk.meta("lambdas", lambdas.iter().map(|l| json!([l.re, l.im])).collect::<Vec<_>>());
    if !singular.is_empty() {
        chk.meta("singular_lambdas", singular);
    }
    chk.finish()
}

/// `ℒ_e g₂ = g₁` and `ℒ_e g₁ = 0` on contravariant metrics.
pub fn check_exactness(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("pencil exactness", tol);
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for u in points {
        let res = src.fields_at(u).and_then(|pf| PencilAt::new(&pf)).map(|p| {
            let e: Vec<Dual64> = p.e.iter().map(Dual::from_jet).collect();
            let gt = up_tensor(&dual_of(&p.g_inv));
            let et = up_tensor(&dual_of(&p.eta_inv));
            let (d1, s1) = crate::report::discrepancy(lie_derivative(&gt, &e).data(), et.values().data());
            let le = lie_derivative(&et, &e);
            let s2 = et.values().max_abs() + gt.values().max_abs();
            (d1 / (1.0 + s1), le.max_abs() / (1.0 + s2))
        });
        match res {
            Ok((a, b)) => {
                r1 = r1.max(a);
                r2 = r2.max(b);
                chk.record(a.max(b), 0.0);
            }
            Err(e) => chk.fail_with(&e),
        }
    }
    chk.meta("L_e_g2_minus_g1", r1);
    chk.meta("L_e_g1", r2);
    chk.finish()
}

/// Fit `d` from `ℒ_E g₂ = (d − 1)g₂` by least squares over all points, then
/// check both that relation and `ℒ_E g₁ = (d − 2)g₁`.
pub fn check_pencil_homogeneity(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("pencil homogeneity", tol);
    let (ps, err) = pencil_points(src, points);
    if let Some(e) = err {
        chk.fail_with(&e);
    }
    let mut lies = Vec::new();
    let (mut num, mut den) = (c(0.0), 0.0);
    for p in &ps {
        let ed = p.euler_dual();
        let gt = up_tensor(&dual_of(&p.g_inv));
        let et = up_tensor(&dual_of(&p.eta_inv));
        let lg = lie_derivative(&gt, &ed);
        let le = lie_derivative(&et, &ed);
        let gv = gt.values();
        num += gv.data().iter().zip(lg.data()).map(|(a, b)| a.conj() * b).sum::<C64>();
        den += gv.data().iter().map(|a| a.norm_sqr()).sum::<f64>();
        lies.push((gv, lg, et.values(), le));
    }
    let d = num / den + 1.0;
    let (mut r2, mut r1) = (0.0f64, 0.0f64);
    for (gv, lg, ev, le) in &lies {
        let (a, sa) = crate::report::discrepancy(lg.data(), gv.scale(d - 1.0).data());
        let (b, sb) = crate::report::discrepancy(le.data(), ev.scale(d - 2.0).data());
        let (a, b) = (a / (1.0 + sa), b / (1.0 + sb));
        r2 = r2.max(a);
        r1 = r1.max(b);
        chk.record(a.max(b), 0.0);
    }
    chk.meta("d", json!([d.re, d.im]));
    chk.meta("g2_relation", r2);
    chk.meta("g1_relation", r1);
    chk.finish()
}

/// The pencil exponent `d` fitted over `points`.
pub fn fit_pencil_d(src: &dyn FieldSource, points: &[Vec<C64>]) -> Result<C64> {
    let r = check_pencil_homogeneity(src, points, f64::INFINITY);
    if let Some(e) = r.error {
        return Err(Error::HypothesisViolated(e));
    }
    let v = &r.meta["d"];
    Ok(C64::new(v[0].as_f64().unwrap_or(f64::NAN), v[1].as_f64().unwrap_or(f64::NAN)))
}

/// The four identities of `Δ`, with `ℒ_EΔ = (d − 1)Δ` using the per-point
/// fitted `d`.
pub fn check_delta_identities(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("delta identities", tol);
    let mut fam = [0.0f64; 4];
    for u in points {
        let res = src.fields_at(u).and_then(|pf| PencilAt::new(&pf)).map(|p| delta_identities_at(&p));
        match res {
            Ok(r) => {
                for (f, x) in fam.iter_mut().zip(r) {
                    *f = f.max(x);
                }
                chk.record(r.iter().copied().fold(0.0, f64::max), 0.0);
            }
            Err(e) => chk.fail_with(&e),
        }
    }
    for (k, f) in fam.iter().enumerate() {
        chk.meta(&format!("identity_{}", k + 1), *f);
    }
    chk.finish()
}

/// Normalized residuals of the four `Δ` identities at one point.
pub fn delta_identities_at(p: &PencilAt) -> [f64; 4] {
    let n = p.n;
    let dl = p.delta();
    let dv = dl.values();
    let scale = dv.max_abs();
    let mut r = [0.0f64; 4];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (mut a1, mut b1, mut a2, mut b2) = (c(0.0), c(0.0), c(0.0), c(0.0));
                for s in 0..n {
                    a1 += p.eta_inv[i][s].val * dv[[j, k, s]];
                    b1 += p.eta_inv[j][s].val * dv[[i, k, s]];
                    a2 += p.g_inv[i][s].val * dv[[j, k, s]];
                    b2 += p.g_inv[j][s].val * dv[[i, k, s]];
                }
                let s1 = p.eta_inv.iter().flatten().map(|x| x.val.norm()).fold(0.0, f64::max);
                let s2 = p.g_inv.iter().flatten().map(|x| x.val.norm()).fold(0.0, f64::max);
                r[0] = r[0].max((a1 - b1).norm() / (1.0 + s1 * scale));
                r[1] = r[1].max((a2 - b2).norm() / (1.0 + s2 * scale));
                for l in 0..n {
                    let (mut a3, mut b3) = (c(0.0), c(0.0));
                    for s in 0..n {
                        a3 += dv[[i, j, s]] * dv[[s, k, l]];
                        b3 += dv[[i, k, s]] * dv[[s, j, l]];
                    }
                    r[2] = r[2].max((a3 - b3).norm() / (1.0 + scale * scale));
                }
            }
        }
    }
    let ld = lie_derivative(&dl, &p.euler_dual());
    let want = dv.scale(p.d - 1.0);
    let (d, s) = crate::report::discrepancy(ld.data(), want.data());
    r[3] = d / (1.0 + s);
    r
}

/// Both formulas for `R` agree; meta records the diagonal.
pub fn check_r_operator(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("R operator formulas agree", tol);
    let mut diag = Vec::new();
    for u in points {
        let res = src.fields_at(u).and_then(|pf| PencilAt::new(&pf)).map(|p| {
            let r = p.r().values();
            diag = (0..p.n).map(|i| json!([r[[i, i]].re, r[[i, i]].im])).collect();
            crate::report::discrepancy(r.data(), p.r_alt().data())
        });
        chk.absorb(res);
    }
    chk.meta("diagonal", diag);
    chk.finish()
}

/// Diagonal of `R` against a constant.
pub fn check_r_diagonal(src: &dyn FieldSource, points: &[Vec<C64>], value: f64, tol: f64) -> Report {
    let mut chk = Check::new("R diagonal", tol);
    for u in points {
        chk.absorb(src.fields_at(u).and_then(|pf| PencilAt::new(&pf)).map(|p| {
            let r = p.r().values();
            ((0..p.n).map(|i| (r[[i, i]] - value).norm()).fold(0.0, f64::max), 0.0)
        }));
    }
    chk.finish()
}

fn diag_f(p: &PencilAt) -> Vec<Jet64> {
    (0..p.n).map(|i| p.eta_inv[i][i]).collect()
}

/// Closed forms of `Δ` and `R` for a semisimple pencil `η^{ij} = f^iδ^{ij}`,
/// `g^{ij} = f^iu^iδ^{ij}`, compared with the assembled tensors.
pub fn check_semisimple_closed_forms(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("semisimple closed forms of delta and R", tol);
    for u in points {
        chk.absorb(src.fields_at(u).and_then(|pf| PencilAt::new(&pf)).map(|p| {
            let n = p.n;
            let f = diag_f(&p);
            let dv = p.delta().values();
            let rv = p.r().values();
            let (mut got, mut want) = (Vec::new(), Vec::new());
            for j in 0..n {
                for k in 0..n {
                    for i in 0..n {
                        got.push(dv[[j, k, i]]);
                        want.push(if i != j {
                            c(0.0)
                        } else if k == j {
                            f[j].val * 0.5
                        } else {
                            (p.u[j] - p.u[k]) * 0.5 * f[k].val * f[j].grad[k] / f[j].val
                        });
                    }
                    got.push(rv[[k, j]]);
                    want.push(if k == j { c(0.5) } else { (p.u[j] - p.u[k]) * 0.5 * f[k].val * f[j].grad[k] / (f[j].val * f[j].val) });
                }
            }
            crate::report::discrepancy(&got, &want)
        }));
    }
    chk.finish()
}

/// Eigenvalues of `L` against the coordinates.
pub fn check_l_eigenvalues(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("eigenvalues of L are the coordinates", tol);
    for u in points {
        chk.absorb(src.fields_at(u).and_then(|pf| PencilAt::new(&pf)).map(|p| {
            let l: Vec<Vec<C64>> = p.l.iter().map(|r| r.iter().map(|x| x.val).collect()).collect();
            let ev = linalg::eigenvalues(&l);
            let mut us = p.u.clone();
            us.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
            crate::report::discrepancy(&ev, &us)
        }));
    }
    chk.finish()
}

/// The structure `(∘, η, e, E)` rebuilt from a pencil.
pub struct PencilProduct<'a> {
    pub base: &'a dyn FieldSource,
}

impl FieldSource for PencilProduct<'_> {
    fn label(&self) -> String {
        format!("{} (product from pencil)", self.base.label())
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn fields_at(&self, u: &[C64]) -> Result<PointFields> {
        let pf = self.base.fields_at(u)?;
        let p = PencilAt::new(&pf)?;
        let (c1, _, _) = p.product()?;
        Ok(PointFields {
            n: p.n,
            u: u.to_vec(),
            c: c1,
            c2: None,
            e: p.e.clone(),
            euler: Some(p.euler.clone()),
            g: Some(p.eta.clone()),
            g2: None,
            conn: None,
            lame: None,
        })
    }
}

/// Reconstruction diagnostics: the two product formulas agree (when `R` is
/// invertible), `c^j_{hk}E^h = L^j_k`, and (for semisimple pencils) `c = δδ`.
/// Meta records which route built the product.
pub fn check_product_from_pencil(src: &dyn FieldSource, points: &[Vec<C64>], semisimple: bool, tol: f64) -> Report {
    let mut chk = Check::new("product from pencil", tol);
    let mut fam = [0.0f64; 3];
    let mut routes = std::collections::BTreeSet::new();
    for u in points {
        let res = src.fields_at(u).and_then(|pf| PencilAt::new(&pf)).and_then(|p| {
            let n = p.n;
            let (c1, c2, route) = p.product()?;
            routes.insert(route.label());
            let cv = c1.values();
            let mut r = [0.0; 3];
            if let Some(c2) = c2 {
                let (d, s) = crate::report::discrepancy(cv.data(), c2.data());
                r[0] = d / (1.0 + s);
            }
            let mut ce = Vec::new();
            let mut l = Vec::new();
            for j in 0..n {
                for k in 0..n {
                    ce.push((0..n).map(|h| cv[[j, h, k]] * p.euler[h].val).sum::<C64>());
                    l.push(p.l[j][k].val);
                }
            }
            let (d, s) = crate::report::discrepancy(&ce, &l);
            r[1] = d / (1.0 + s);
            if semisimple {
                let dd = Tensor::from_fn(n, &[Up, Down, Down], |x| c(if x[0] == x[1] && x[1] == x[2] { 1.0 } else { 0.0 }));
                r[2] = crate::report::discrepancy(cv.data(), dd.data()).0;
            }
            Ok(r)
        });
        match res {
            Ok(r) => {
                for (f, x) in fam.iter_mut().zip(r) {
                    *f = f.max(x);
                }
                chk.record(r.iter().copied().fold(0.0, f64::max), 0.0);
            }
            Err(e) => chk.fail_with(&e),
        }
    }
    chk.meta("route", routes.into_iter().collect::<Vec<_>>());
    chk.meta("formulas_agree", fam[0]);
    chk.meta("euler_multiplication_is_L", fam[1]);
    if semisimple {
        chk.meta("canonical", fam[2]);
    }
    chk.finish()
}

/// Diagonal semisimple pencil `η^{ij} = f^iδ^{ij}`, `g^{ij} = f^iu^iδ^{ij}`,
/// with `e = Σ∂_i`, `E = Σu^i∂_i` and the canonical product.
pub fn semisimple_pencil_from_f(name: &str, f: &[String]) -> ManifoldSpec {
    let n = f.len();
    let coords: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
    let diag = |entry: &dyn Fn(usize) -> String| -> Vec<Vec<String>> {
        (0..n).map(|i| (0..n).map(|j| if i == j { entry(i) } else { "0".into() }).collect()).collect()
    };
    ManifoldSpec {
        name: name.to_string(),
        n,
        coords: coords.clone(),
        defs: BTreeMap::new(),
        product: ProductSpec::Canonical,
        e: vec!["1".into(); n],
        euler: Some(coords.clone()),
        g: Some(diag(&|i| format!("1/({})", f[i]))),
        g2: Some(diag(&|i| format!("1/(({})*{})", f[i], coords[i]))),
        connection: None,
        lame: None,
        params: BTreeMap::new(),
        region: Region { bounds: vec![[0.3, 3.0]; n], min_separation: Some(0.15), constraints: Vec::new() },
        expected: Default::default(),
    }
}

/// Convenience: compile [`semisimple_pencil_from_f`].
pub fn semisimple_pencil(name: &str, f: &[String]) -> Result<Manifold> {
    Manifold::compile(&semisimple_pencil_from_f(name, f))
}
