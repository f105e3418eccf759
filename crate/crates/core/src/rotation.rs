//! Lamé and rotation coefficients of diagonal metrics in canonical
//! coordinates, and the first-order systems they satisfy.
//!
//! Conventions: `H_i = √g_ii` on the principal branch, `β_ij = ∂_jH_i/H_j`
//! for `i ≠ j`, `V_ij = (u^j − u^i)β_ij`, and in canonical coordinates
//! `e = Σ∂_i`, `E = Σu^i∂_i`. Changing the branch of one `H_i` flips the
//! sign of row and column `i` of `β`; every per-point identity below is
//! invariant under that, so only the loop integration needs a fixed branch.

use serde_json::json;

use crate::error::{Error, Result};
use crate::exprjet::Dual;
use crate::linalg;
use crate::manifold::{FieldSource, Manifold, PointFields};
use crate::ode;
use crate::report::{Check, Report};
use crate::scalar::Scalar;
use crate::{Dual64, Jet64, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Rotation data at one point.
#[derive(Clone, Debug)]
pub struct RotationData {
    pub n: usize,
    pub u: Vec<C64>,
    /// Lamé coefficients with first derivatives, when known.
    pub h: Option<Vec<Dual64>>,
    /// `β_ij` with first derivatives; the diagonal is zero and unused.
    pub beta: Vec<Vec<Dual64>>,
}

impl RotationData {
    /// From Lamé coefficients given as order-2 jets.
    pub fn from_lame(u: &[C64], h: &[Jet64]) -> Result<Self> {
        let n = u.len();
        if let Some(i) = h.iter().position(|x| x.val.norm() == 0.0) {
            return Err(Error::ZeroLame(i + 1));
        }
        let hd: Vec<Dual64> = h.iter().map(Dual::from_jet).collect();
        let mut beta = vec![vec![Dual::constant(c(0.0), n); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    beta[i][j] = Dual::partial_of(&h[i], j).try_div(&hd[j])?;
                }
            }
        }
        Ok(RotationData { n, u: u.to_vec(), h: Some(hd), beta })
    }

    pub fn from_beta(u: &[C64], beta: Vec<Vec<Dual64>>) -> Self {
        RotationData { n: u.len(), u: u.to_vec(), h: None, beta }
    }

    pub fn b(&self, i: usize, j: usize) -> C64 {
        if i == j {
            c(0.0)
        } else {
            self.beta[i][j].val
        }
    }

    /// `(Δβ)_ij = β_ij − β_ji`.
    pub fn delta(&self, i: usize, j: usize) -> C64 {
        self.b(i, j) - self.b(j, i)
    }

    pub fn v(&self) -> Vec<Vec<C64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| (self.u[j] - self.u[i]) * self.b(i, j)).collect()).collect()
    }

    fn beta_scale(&self) -> f64 {
        let mut s: f64 = 0.0;
        for row in &self.beta {
            for b in row {
                s = s.max(b.val.norm()).max((0..self.n).map(|k| b.d(k).norm()).fold(0.0, f64::max));
            }
        }
        s.max(s * s)
    }

    fn u_scale(&self) -> f64 {
        self.u.iter().map(|x| x.norm()).fold(1.0, f64::max)
    }
}

/// Rotation data from the Lamé field of a spec if it has one, otherwise
/// from the diagonal metric.
pub fn rotation_data(pf: &PointFields) -> Result<RotationData> {
    let n = pf.n;
    let cv = pf.c_values();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let want = if i == j && j == k { 1.0 } else { 0.0 };
                if (cv[[i, j, k]] - c(want)).norm() > 1e-12 {
                    return Err(Error::HypothesisViolated("product is not canonical".into()));
                }
            }
        }
    }
    if let Some(h) = &pf.lame {
        return RotationData::from_lame(&pf.u, h);
    }
    let g = pf.metric()?;
    let scale = g.data().iter().map(|x| x.val.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::AllEntriesZero);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && g[[i, j]].magnitude() > 1e-12 * scale {
                return Err(Error::NonDiagonalMetric);
            }
        }
    }
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        if g[[i, i]].val.norm() == 0.0 {
            return Err(Error::ZeroLame(i + 1));
        }
        h.push(g[[i, i]].sqrt()?);
    }
    RotationData::from_lame(&pf.u, &h)
}

/// Anything that yields rotation data at a point of a canonical chart.
pub trait BetaSource {
    fn label(&self) -> String;
    fn dim(&self) -> usize;
    fn rotation_at(&self, u: &[C64]) -> Result<RotationData>;
}

impl BetaSource for Manifold {
    fn label(&self) -> String {
        self.spec.name.clone()
    }

    fn dim(&self) -> usize {
        self.n()
    }

    fn rotation_at(&self, u: &[C64]) -> Result<RotationData> {
        rotation_data(&self.fields_at(u)?)
    }
}

/// Rotation data of any field source with a canonical product.
pub struct FromFields<'a>(pub &'a dyn FieldSource);

impl BetaSource for FromFields<'_> {
    fn label(&self) -> String {
        self.0.label()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rotation_at(&self, u: &[C64]) -> Result<RotationData> {
        rotation_data(&self.0.fields_at(u)?)
    }
}

fn off_diagonal(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
}

/// Normalized maxima of the ED1, ED2 and ED3 residuals at one point.
pub fn darboux_at(rd: &RotationData) -> [f64; 3] {
    let n = rd.n;
    let mut r = [0.0f64; 3];
    for (i, j) in off_diagonal(n) {
        let b = &rd.beta[i][j];
        for k in 0..n {
            if k != i && k != j {
                r[0] = r[0].max((b.d(k) - rd.b(i, k) * rd.b(k, j)).norm());
            }
        }
        r[1] = r[1].max((0..n).map(|k| b.d(k)).sum::<C64>().norm());
        r[2] = r[2].max(((0..n).map(|k| rd.u[k] * b.d(k)).sum::<C64>() + b.val).norm());
    }
    let s = rd.beta_scale();
    [r[0] / (1.0 + s), r[1] / (1.0 + s), r[2] / (1.0 + s * rd.u_scale())]
}

/// ED1–ED3: `∂_kβ_ij = β_ikβ_kj`, `e(β_ij) = 0`, `E(β_ij) = −β_ij`.
pub fn check_darboux_system(src: &dyn BetaSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("darboux system ED1-ED3", tol);
    let mut fam = [0.0f64; 3];
    for u in points {
        match src.rotation_at(u) {
            Ok(rd) => {
                let r = darboux_at(&rd);
                for (f, x) in fam.iter_mut().zip(r) {
                    *f = f.max(x);
                }
                chk.record(r.iter().copied().fold(0.0, f64::max), 0.0);
            }
            Err(e) => chk.fail_with(&e),
        }
    }
    chk.meta("ED1", fam[0]);
    chk.meta("ED2", fam[1]);
    chk.meta("ED3", fam[2]);
    chk.finish()
}

/// The reduction identity implied by ED2 and ED3:
/// `∂_jβ_ij = (Σ_{k≠i,j}(u^i − u^k)∂_kβ_ij − β_ij)/(u^j − u^i)`.
pub fn check_reduction_identity(src: &dyn BetaSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("ED2+ED3 reduction identity", tol);
    for u in points {
        chk.absorb(src.rotation_at(u).map(|rd| {
            let n = rd.n;
            let mut d: f64 = 0.0;
            for (i, j) in off_diagonal(n) {
                let b = &rd.beta[i][j];
                let s: C64 = (0..n).filter(|&k| k != i && k != j).map(|k| (rd.u[i] - rd.u[k]) * b.d(k)).sum();
                d = d.max((b.d(j) - (s - b.val) / (rd.u[j] - rd.u[i])).norm());
            }
            (d, rd.beta_scale() * rd.u_scale())
        }));
    }
    chk.finish()
}

/// ED4: `∂_iβ_ji + ∂_jβ_ij + Σ_{k≠i,j} β_ikβ_jk = 0`.
pub fn check_flatness_constraint(src: &dyn BetaSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("flatness constraint ED4", tol);
    for u in points {
        chk.absorb(src.rotation_at(u).map(|rd| {
            let n = rd.n;
            let mut d: f64 = 0.0;
            for (i, j) in off_diagonal(n) {
                let s: C64 = (0..n).filter(|&k| k != i && k != j).map(|k| rd.b(i, k) * rd.b(j, k)).sum();
                d = d.max((rd.beta[j][i].d(i) + rd.beta[i][j].d(j) + s).norm());
            }
            (d, rd.beta_scale())
        }));
    }
    chk.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algebraic {
    /// Flatness of `g` after eliminating derivatives with ED2, ED3.
    Ed4bis,
    /// Flatness of the second metric of an exact homogeneous pencil.
    Ed5b,
}

/// Residual of ED4bis or ED5b for the pair `(i, j)` and the size of its terms.
pub fn algebraic_at(rd: &RotationData, which: Algebraic, i: usize, j: usize) -> (C64, f64) {
    let u = &rd.u;
    let mut lhs = c(0.0);
    let mut s: f64 = 0.0;
    for k in (0..rd.n).filter(|&k| k != i && k != j) {
        let (a, b) = match which {
            Algebraic::Ed4bis => ((u[j] - u[k]) * rd.delta(i, k) * rd.b(j, k), (u[k] - u[i]) * rd.delta(j, k) * rd.b(i, k)),
            Algebraic::Ed5b => (u[i] * (u[j] - u[k]) * rd.delta(i, k) * rd.b(j, k), -u[j] * (u[i] - u[k]) * rd.delta(j, k) * rd.b(i, k)),
        };
        lhs += a + b;
        s = s.max(a.norm()).max(b.norm());
    }
    let rhs = match which {
        Algebraic::Ed4bis => rd.delta(i, j),
        Algebraic::Ed5b => (u[i] + u[j]) * rd.delta(i, j) * 0.5,
    };
    (lhs - rhs, s.max(rhs.norm()))
}

pub fn check_algebraic_constraints(src: &dyn BetaSource, points: &[Vec<C64>], which: Algebraic, tol: f64) -> Report {
    let name = match which {
        Algebraic::Ed4bis => "algebraic constraint ED4bis",
        Algebraic::Ed5b => "algebraic constraint ED5b",
    };
    let mut chk = Check::new(name, tol);
    for u in points {
        chk.absorb(src.rotation_at(u).map(|rd| {
            off_diagonal(rd.n).fold((0.0, 0.0), |(d, s), (i, j)| {
                let (r, t) = algebraic_at(&rd, which, i, j);
                (f64::max(d, r.norm()), f64::max(s, t))
            })
        }));
    }
    chk.finish()
}

/// `β_ijβ_jkβ_ki = β_jiβ_ikβ_kj` for distinct `i, j, k`.
pub fn check_potentiality(src: &dyn BetaSource, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = Check::new("potentiality", tol);
    for u in points {
        chk.absorb(src.rotation_at(u).map(|rd| {
            let n = rd.n;
            let (mut d, mut s) = (0.0f64, 0.0f64);
            for (i, j) in off_diagonal(n) {
                for k in (0..n).filter(|&k| k != i && k != j) {
                    let a = rd.b(i, j) * rd.b(j, k) * rd.b(k, i);
                    let b = rd.b(j, i) * rd.b(i, k) * rd.b(k, j);
                    d = d.max((a - b).norm());
                    s = s.max(a.norm()).max(b.norm());
                }
            }
            (d, s)
        }));
    }
    chk.finish()
}

/// Choose signs `s_i` (with `s_1 = +1`) minimizing the ED5 residual
/// `∂_jH_i − s_is_jβ_ijH_j`. Returns the signs and the residual.
pub fn fit_signs(rd: &RotationData, h: &[Dual64]) -> (Vec<i8>, f64) {
    let n = rd.n;
    let mut best = (vec![1i8; n], f64::INFINITY);
    for mask in 0..(1u32 << (n - 1)) {
        let s: Vec<i8> = (0..n).map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1 } else { 1 }).collect();
        let r = off_diagonal(n).map(|(i, j)| (h[i].d(j) - rd.b(i, j) * h[j].val * f64::from(s[i] * s[j])).norm()).fold(0.0, f64::max);
        if r < best.1 {
            best = (s, r);
        }
    }
    best
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// ED5–ED7: `∂_jH_i = β_ijH_j`, `e(H_i) = 0`, `E(H_i) = dH_i`.
///
/// `beta` supplies the rotation coefficients and `lame` the Lamé
/// coefficients; they may come from unrelated formulas, so ED5 is checked
/// after a per-point sign fit, recorded in the meta. Without `d`, it is the
/// median of `E(H_i)/H_i` over all `i` and points.
pub fn check_lame_system(beta: &dyn BetaSource, lame: &dyn BetaSource, points: &[Vec<C64>], d: Option<f64>, tol: f64) -> Report {
    let mut chk = Check::new("lame system ED5-ED7", tol);
    let mut data = Vec::new();
    for u in points {
        let pair = beta.rotation_at(u).and_then(|rd| {
            let h = lame.rotation_at(u)?.h.ok_or(Error::Missing("Lamé coefficients"))?;
            Ok((rd, h))
        });
        match pair {
            Ok(p) => data.push(p),
            Err(e) => chk.fail_with(&e),
        }
    }
    let euler = |rd: &RotationData, h: &Dual64| h.along(&rd.u);
    let fitted =
        d.unwrap_or_else(|| median(data.iter().flat_map(|(rd, h)| h.iter().filter(|x| x.val.norm() > 1e-8).map(move |x| (euler(rd, x) / x.val).re)).collect()));
    let mut fam = [0.0f64; 3];
    let mut signs = Vec::new();
    for (rd, h) in &data {
        let hs = h.iter().map(|x| x.val.norm().max((0..rd.n).map(|k| x.d(k).norm()).fold(0.0, f64::max))).fold(0.0, f64::max);
        let scale = hs * (1.0 + rd.beta_scale()) * rd.u_scale();
        let (s, ed5) = fit_signs(rd, h);
        signs.push(json!(s));
        let ed6 = h.iter().map(|x| (0..rd.n).map(|k| x.d(k)).sum::<C64>().norm()).fold(0.0, f64::max);
        let ed7 = h.iter().map(|x| (euler(rd, x) - x.val * fitted).norm()).fold(0.0, f64::max);
        let r = [ed5, ed6, ed7].map(|x| x / (1.0 + scale));
        for (f, x) in fam.iter_mut().zip(r) {
            *f = f.max(x);
        }
        chk.record(r.iter().copied().fold(0.0, f64::max), 0.0);
    }
    chk.meta("d", fitted);
    chk.meta("d_fitted", d.is_none());
    chk.meta("ED5", fam[0]);
    chk.meta("ED6", fam[1]);
    chk.meta("ED7", fam[2]);
    chk.meta("signs", signs);
    chk.finish()
}

/// The matrix `V`, its sorted eigenvalues and, when Lamé coefficients are
/// present, the exponent `d` read off from `E(H_i)/H_i`.
#[derive(Clone, Debug)]
pub struct VSpectrum {
    pub v: Vec<Vec<C64>>,
    pub eigenvalues: Vec<C64>,
    pub d: Option<C64>,
}

pub fn v_matrix(rd: &RotationData) -> VSpectrum {
    let v = rd.v();
    let eigenvalues = linalg::eigenvalues(&v);
    let d = rd.h.as_ref().and_then(|h| {
        let k = (0..rd.n).max_by(|&a, &b| h[a].val.norm().partial_cmp(&h[b].val.norm()).unwrap())?;
        Some(h[k].along(&rd.u) / h[k].val)
    });
    VSpectrum { v, eigenvalues, d }
}

/// Compare the spectrum of `V` with the expected eigenvalues, sorted.
pub fn check_v_eigenvalues(src: &dyn BetaSource, points: &[Vec<C64>], expected: &[f64], tol: f64) -> Report {
    let mut want: Vec<f64> = expected.to_vec();
    want.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let want: Vec<C64> = want.into_iter().map(c).collect();
    let mut chk = Check::new("V eigenvalues", tol);
    let mut last = Vec::new();
    for u in points {
        match src.rotation_at(u) {
            Ok(rd) => {
                let sp = v_matrix(&rd);
                if sp.eigenvalues.len() != want.len() {
                    chk.fail_with(&Error::Spec(format!("{} eigenvalues expected, V has {}", want.len(), sp.eigenvalues.len())));
                    continue;
                }
                let d = sp.eigenvalues.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                chk.record(d, 0.0);
                last = sp.eigenvalues;
            }
            Err(e) => chk.fail_with(&e),
        }
    }
    chk.meta("eigenvalues", last.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>());
    chk.meta("expected", expected.to_vec());
    chk.finish()
}

/// Rectangle used for the integrability loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopPlan {
    pub side: f64,
    pub steps_per_side: usize,
    pub axes: (usize, usize),
}

impl Default for LoopPlan {
    fn default() -> Self {
        LoopPlan { side: 0.2, steps_per_side: 200, axes: (0, 1) }
    }
}

#[derive(Clone, Debug)]
pub struct LameLoop {
    /// Initial data after projection onto the `d`-eigenspace of `V`.
    pub h0: Vec<C64>,
    pub h_end: Vec<C64>,
    /// Corners visited, with `H` at each.
    pub corners: Vec<(Vec<C64>, Vec<C64>)>,
    /// `|H_end − H_0| / (1 + |H_0|)`.
    pub closure: f64,
    /// Largest `|E(H) − dH|/(1 + |H|)` over the corners.
    pub euler_residual: f64,
    pub eigenspace_dim: usize,
}

/// Derivative of `H` along the coordinate `a`: `∂_aH_i = β_iaH_a` for
/// `i ≠ a`, and `∂_aH_a = −Σ_{k≠a} β_akH_k` from `e(H_a) = 0`.
fn lame_rhs(rd: &RotationData, a: usize, h: &[C64]) -> Vec<C64> {
    (0..rd.n).map(|i| if i == a { -(0..rd.n).filter(|&k| k != a).map(|k| rd.b(a, k) * h[k]).sum::<C64>() } else { rd.b(i, a) * h[a] }).collect()
}

/// `E(H)_i = Σ_k u^k∂_kH_i = (VH)_i` once ED5 and ED6 hold.
fn euler_of(rd: &RotationData, h: &[C64]) -> Vec<C64> {
    let v = rd.v();
    (0..rd.n).map(|i| (0..rd.n).map(|k| v[i][k] * h[k]).sum()).collect()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrate ED5 with RK4 around an axis-aligned rectangle starting at `u0`.
///
/// `H0` is first projected onto the kernel of `V − d` at `u0` (left as is if
/// `d` is not an eigenvalue, in which case `E(H) − dH` does not vanish).
pub fn integrate_lame(src: &dyn BetaSource, d: C64, u0: &[C64], h0: &[C64], plan: LoopPlan) -> Result<LameLoop> {
    let n = src.dim();
    let rd0 = src.rotation_at(u0)?;
    let mut shifted = rd0.v();
    for (i, row) in shifted.iter_mut().enumerate() {
        row[i] -= d;
    }
    let kernel = linalg::null_space(&shifted, 1e-9);
    let start: Vec<C64> = if kernel.is_empty() {
        h0.to_vec()
    } else {
        let mut p = vec![c(0.0); n];
        for k in &kernel {
            let coef: C64 = k.iter().zip(h0).map(|(a, b)| a.conj() * b).sum();
            for (pi, ki) in p.iter_mut().zip(k) {
                *pi += coef * ki;
            }
        }
        p
    };
    let (a, b) = plan.axes;
    let legs = [(a, plan.side), (b, plan.side), (a, -plan.side), (b, -plan.side)];
    let mut u = u0.to_vec();
    let mut h = start.clone();
    let mut corners = vec![(u.clone(), h.clone())];
    let mut euler_res: f64 = 0.0;
    let mut ed7 = |rd: &RotationData, h: &[C64]| {
        let eh = euler_of(rd, h);
        let r = eh.iter().zip(h).map(|(x, y)| (x - y * d).norm()).fold(0.0, f64::max) / (1.0 + norm(h));
        euler_res = euler_res.max(r);
    };
    ed7(&rd0, &h);
    for (axis, len) in legs {
        let base = u.clone();
        let rhs = |t: f64, y: &[C64]| -> std::result::Result<Vec<C64>, String> {
            let mut p = base.clone();
            p[axis] += t;
            let rd = src.rotation_at(&p).map_err(|e| e.to_string())?;
            Ok(lame_rhs(&rd, axis, y))
        };
        h = ode::rk4(rhs, 0.0, &h, len, plan.steps_per_side)?;
        u[axis] += len;
        ed7(&src.rotation_at(&u)?, &h);
        corners.push((u.clone(), h.clone()));
    }
    let diff: Vec<C64> = h.iter().zip(&start).map(|(x, y)| x - y).collect();
    Ok(LameLoop { closure: norm(&diff) / (1.0 + norm(&start)), h0: start, h_end: h, corners, euler_residual: euler_res, eigenspace_dim: kernel.len() })
}

/// Loop closure and `E(H) = dH` at the corners, as a report.
pub fn check_lame_loop(src: &dyn BetaSource, d: C64, u0: &[C64], h0: &[C64], plan: LoopPlan, tol: f64) -> Report {
    let mut chk = Check::new("lame loop integrability", tol);
    match integrate_lame(src, d, u0, h0, plan) {
        Ok(lp) => {
            chk.record(lp.closure, 0.0);
            chk.record(lp.euler_residual, 0.0);
            chk.meta("closure", lp.closure);
            chk.meta("euler_residual", lp.euler_residual);
            chk.meta("eigenspace_dim", lp.eigenspace_dim as u64);
        }
        Err(e) => chk.fail_with(&e),
    }
    chk.meta("d", json!([d.re, d.im]));
    chk.finish()
}
