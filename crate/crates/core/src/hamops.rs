//! Flat normal bundles: the quadratic expansion of curvature through
//! vector fields `X_(α)`, the Gauss-Peterson-Mainardi-Codazzi equations for
//! the Weingarten affinors `W_(α) = X_(α)∘`, and the nonlocal Hamiltonian
//! operator built from them, emitted as data.

use serde::{Deserialize, Serialize};

use crate::connection::{levi_civita, natural_connection, raised_riemann, riemann};
use crate::error::{Error, Result};
use crate::exprjet::{eval, Dual, Expr, Jet2, Params};
use crate::linalg;
use crate::manifold::{FieldSource, Manifold, PointFields};
use crate::report::{Check, Report};
use crate::{Dual64, Jet64, C64};

/// One vector field of the expansion with its sign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFieldSpec {
    pub epsilon: f64,
    /// Components `X^i` as DSL strings in the chart of the manifold.
    pub x: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct NormalBundle {
    pub eps: Vec<f64>,
    x: Vec<Vec<Expr>>,
    params: Params<f64>,
}

impl NormalBundle {
    pub fn compile(m: &Manifold, fields: &[NormalFieldSpec]) -> Result<Self> {
        let mut eps = Vec::with_capacity(fields.len());
        let mut x = Vec::with_capacity(fields.len());
        for (a, f) in fields.iter().enumerate() {
            if f.epsilon != 1.0 && f.epsilon != -1.0 {
                return Err(Error::Spec(format!("ε_{} = {} is not ±1", a + 1, f.epsilon)));
            }
            if f.x.len() != m.n() {
                return Err(Error::Spec(format!("X_({}) has {} components, chart has {}", a + 1, f.x.len(), m.n())));
            }
            eps.push(f.epsilon);
            x.push(f.x.iter().enumerate().map(|(i, c)| m.parse_expr(&format!("X{}[{i}]", a + 1), c)).collect::<Result<_>>()?);
        }
        Ok(NormalBundle { eps, x, params: m.params.clone() })
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// The fields `X_(α)` at `u`, as second-order jets.
    pub fn fields_at(&self, u: &[C64]) -> Result<Vec<Vec<Jet64>>> {
        let vars = Jet2::point(u);
        self.x.iter().map(|xs| xs.iter().map(|e| eval(e, &vars, &self.params).map_err(Error::from)).collect()).collect()
    }
}

/// `(W_(α))^i_j = c^i_{jl} X^l_(α)` with first derivatives.
pub fn weingarten(pf: &PointFields, x: &[Jet64]) -> Vec<Vec<Dual64>> {
    let n = pf.n;
    let xd: Vec<Dual64> = x.iter().map(Dual::from_jet).collect();
    (0..n).map(|i| (0..n).map(|j| (0..n).fold(Dual::constant(C64::new(0.0, 0.0), n), |s, l| s + pf.c[[i, j, l]] * xd[l])).collect()).collect()
}

fn vals(m: &[Vec<Dual64>]) -> Vec<Vec<C64>> {
    m.iter().map(|r| r.iter().map(|x| x.val).collect()).collect()
}

fn max_abs(m: &[Vec<C64>]) -> f64 {
    m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Every residual of the flat-normal-bundle structure at one point, as
/// `(max |Δ|, scale)` pairs.
#[derive(Clone, Debug)]
pub struct NormalBundleAt {
    pub qexp: (f64, f64),
    /// Symmetry condition per field.
    pub sym: Vec<(f64, f64)>,
    /// `∇X_(α)` for the natural connection, per field.
    pub flat: Vec<(f64, f64)>,
    pub gmc: [(f64, f64); 4],
}

pub fn normal_bundle_at(m: &Manifold, nb: &NormalBundle, u: &[C64]) -> Result<NormalBundleAt> {
    let pf = m.fields_at(u)?;
    let n = pf.n;
    let xs = nb.fields_at(u)?;
    let lc = levi_civita(&pf)?;
    let ginv = linalg::invert(&pf.metric()?.map(|j| j.val).to_matrix()?)?;
    let rr = raised_riemann(&riemann(&lc), &ginv);
    let c = pf.c_values();
    let xv: Vec<Vec<C64>> = xs.iter().map(|x| x.iter().map(|j| j.val).collect()).collect();
    let ws: Vec<Vec<Vec<Dual64>>> = xs.iter().map(|x| weingarten(&pf, x)).collect();
    let wv: Vec<Vec<Vec<C64>>> = ws.iter().map(|w| vals(w)).collect();

    let (mut q, mut g0) = (0.0f64, 0.0f64);
    let mut qscale = rr.max_abs();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for h in 0..n {
                    let mut rhs = C64::new(0.0, 0.0);
                    let mut gauss = C64::new(0.0, 0.0);
                    for (a, &eps) in nb.eps.iter().enumerate() {
                        let x = &xv[a];
                        for l in 0..n {
                            for mm in 0..n {
                                rhs += (c[[j, k, l]] * c[[i, h, mm]] - c[[i, k, l]] * c[[j, h, mm]]) * x[l] * x[mm] * eps;
                            }
                        }
                        let w = &wv[a];
                        gauss += (w[j][k] * w[i][h] - w[i][k] * w[j][h]) * eps;
                    }
                    let r = rr[[i, j, k, h]];
                    q = q.max((r - rhs).norm());
                    g0 = g0.max((r - gauss).norm());
                    qscale = qscale.max(rhs.norm()).max(gauss.norm());
                }
            }
        }
    }

    let nat = natural_connection(&pf)?;
    let gscale = nat.values().max_abs();
    let mut sym = Vec::with_capacity(nb.len());
    let mut flat = Vec::with_capacity(nb.len());
    for x in &xs {
        let cov = nat.covariant_vector(x).values();
        let xs_scale = x.iter().map(|j| j.grad.iter().map(|d| d.norm()).fold(j.val.norm() * gscale, f64::max)).fold(0.0, f64::max);
        flat.push((cov.max_abs(), xs_scale));
        let mut s: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let d: C64 = (0..n).map(|l| c[[i, j, l]] * cov[[l, k]] - c[[i, k, l]] * cov[[l, j]]).sum();
                    s = s.max(d.norm());
                }
            }
        }
        sym.push((s, c.max_abs() * xs_scale));
    }

    let wmax = wv.iter().map(|w| max_abs(w)).fold(0.0, f64::max);
    let mut g1: f64 = 0.0;
    for a in 0..wv.len() {
        for b in 0..a {
            let ab = linalg::matmul(&wv[a], &wv[b]);
            let ba = linalg::matmul(&wv[b], &wv[a]);
            for i in 0..n {
                for j in 0..n {
                    g1 = g1.max((ab[i][j] - ba[i][j]).norm());
                }
            }
        }
    }
    let g = pf.metric()?.map(|j| j.val);
    let mut g2: f64 = 0.0;
    let mut g3: f64 = 0.0;
    let mut dscale: f64 = 0.0;
    for (w, wd) in wv.iter().zip(&ws) {
        for i in 0..n {
            for j in 0..n {
                let lw: C64 = (0..n).map(|k| g[[i, k]] * w[k][j] - g[[j, k]] * w[k][i]).sum();
                g2 = g2.max(lw.norm());
                for k in 0..n {
                    // ∇̃_k W^i_j − ∇̃_j W^i_k; the Γ̃^s_{kj} terms cancel by symmetry
                    let mut d = wd[i][j].grad[k] - wd[i][k].grad[j];
                    for s in 0..n {
                        d += lc.at(i, k, s) * w[s][j] - lc.at(i, j, s) * w[s][k];
                    }
                    g3 = g3.max(d.norm());
                    dscale = dscale.max(wd[i][j].grad[k].norm());
                }
            }
        }
    }
    let lscale = lc.values().max_abs() * wmax;
    Ok(NormalBundleAt { qexp: (q, qscale), sym, flat, gmc: [(g0, qscale), (g1, wmax * wmax), (g2, g.max_abs() * wmax), (g3, dscale.max(lscale))] })
}

fn per_point(m: &Manifold, nb: &NormalBundle, points: &[Vec<C64>], mut take: impl FnMut(&NormalBundleAt, &mut [Check]), checks: &mut [Check]) {
    for u in points {
        match normal_bundle_at(m, nb, u) {
            Ok(at) => take(&at, checks),
            Err(e) => checks.iter_mut().for_each(|c| c.fail_with(&e)),
        }
    }
}

pub fn check_quadratic_expansion(m: &Manifold, nb: &NormalBundle, points: &[Vec<C64>], tol: f64) -> Report {
    let mut chk = [Check::new("quadratic expansion of curvature", tol)];
    per_point(m, nb, points, |at, c| c[0].record(at.qexp.0, at.qexp.1), &mut chk);
    let [c] = chk;
    let mut r = c.finish();
    r.meta.insert("N".into(), nb.len().into());
    r
}

fn per_field(name: &str, m: &Manifold, nb: &NormalBundle, points: &[Vec<C64>], tol: f64, pick: fn(&NormalBundleAt) -> &[(f64, f64)]) -> Report {
    let mut all = [Check::new(name, tol)];
    let mut worst = vec![0.0f64; nb.len()];
    per_point(
        m,
        nb,
        points,
        |at, c| {
            let rs = pick(at);
            let d = rs.iter().map(|r| r.0).fold(0.0, f64::max);
            let s = rs.iter().map(|r| r.1).fold(0.0, f64::max);
            for (w, r) in worst.iter_mut().zip(rs) {
                *w = w.max(r.0 / (1.0 + r.1));
            }
            c[0].record(d, s);
        },
        &mut all,
    );
    let [c] = all;
    c.finish().with_meta("per_field", worst)
}

/// `c^i_{jl}∇_kX^l = c^i_{kl}∇_jX^l` for the natural connection, per field.
pub fn check_sym_condition(m: &Manifold, nb: &NormalBundle, points: &[Vec<C64>], tol: f64) -> Report {
    per_field("symmetry condition on the normal fields", m, nb, points, tol, |at| &at.sym)
}

/// `∇X_(α) = 0` for the natural connection.
pub fn check_flat_fields(m: &Manifold, nb: &NormalBundle, points: &[Vec<C64>], tol: f64) -> Report {
    per_field("normal fields are flat", m, nb, points, tol, |at| &at.flat)
}

pub const GMC_NAMES: [&str; 4] =
    ["GMC0 Gauss equation", "GMC1 Weingarten operators commute", "GMC2 Weingarten operators are self-adjoint", "GMC3 Codazzi equation"];

pub fn check_gmc(m: &Manifold, nb: &NormalBundle, points: &[Vec<C64>], tol: f64) -> Vec<Report> {
    let mut checks: Vec<Check> = GMC_NAMES.iter().map(|n| Check::new(n, tol)).collect();
    per_point(
        m,
        nb,
        points,
        |at, c| {
            for (ch, (d, s)) in c.iter_mut().zip(at.gmc) {
                ch.record(d, s);
            }
        },
        &mut checks,
    );
    checks.into_iter().map(Check::finish).collect()
}

/// Rank of the matrix whose columns are the `X_(α)`, against `expected`.
pub fn check_field_rank(nb: &NormalBundle, points: &[Vec<C64>], expected: usize, rtol: f64) -> Report {
    let mut chk = Check::new("rank of the normal fields", 0.0);
    let mut ranks = Vec::with_capacity(points.len());
    for u in points {
        match nb.fields_at(u) {
            Ok(xs) => {
                let n = u.len();
                let cols: Vec<Vec<C64>> = (0..n).map(|i| xs.iter().map(|x| x[i].val).collect()).collect();
                let r = linalg::numerical_rank(&cols, rtol);
                ranks.push(r);
                chk.record((r as f64 - expected as f64).abs(), 0.0);
            }
            Err(e) => chk.fail_with(&e),
        }
    }
    chk.meta("expected", expected);
    chk.meta("ranks", ranks);
    chk.finish()
}

/// `X^i_(α) = ∂_i(1/(√c_α ∏_{l≠α}(u^l − u^α)))`, written out, with `ε_α = −1`.
/// Components use the positional names `u1..un` and the parameters `c1..cn`.
pub fn lauricella_normal_fields(n: usize) -> Vec<NormalFieldSpec> {
    let u = |i: usize| format!("u{}", i + 1);
    (0..n)
        .map(|a| {
            let prod: Vec<String> = (0..n).filter(|&l| l != a).map(|l| format!("({} - {})", u(l), u(a))).collect();
            let phi = format!("1/(sqrt(c{})*{})", a + 1, prod.join("*"));
            let x = (0..n)
                .map(|i| {
                    if i == a {
                        let sum: Vec<String> = (0..n).filter(|&l| l != a).map(|l| format!("1/({} - {})", u(l), u(a))).collect();
                        format!("{phi}*({})", sum.join(" + "))
                    } else {
                        format!("-{phi}/({} - {})", u(i), u(a))
                    }
                })
                .collect();
            NormalFieldSpec { epsilon: -1.0, x }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub epsilon: f64,
    #[serde(rename = "W_matrix")]
    pub w_matrix: Vec<Vec<C64>>,
}

/// `P^{ij} = g^{ij} d/dx − g^{is}Γ^j_{sk}u^k_x + Σ_α ε_α W^i_k u^k_x (d/dx)^{-1} W^j_h u^h_x`
/// evaluated at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDescription {
    pub point: Vec<C64>,
    /// `g^{ij}`.
    pub metric_term: Vec<Vec<C64>>,
    /// `christoffel_term[i][j][k]`: coefficient of `u^k_x` in `−g^{is}Γ^j_{sk}u^k_x`.
    pub christoffel_term: Vec<Vec<Vec<C64>>>,
    pub tails: Vec<Tail>,
}

impl OperatorDescription {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("operator description serializes")
    }
}

/// Tolerance for the pointwise GMC precondition of [`emit_operator`].
pub const GMC_TOL: f64 = 1e-8;

pub fn emit_operator(m: &Manifold, nb: &NormalBundle, u: &[C64]) -> Result<OperatorDescription> {
    let at = normal_bundle_at(m, nb, u)?;
    let worst = at.gmc.iter().map(|(d, s)| d / (1.0 + s)).fold(0.0, f64::max);
    if worst.is_nan() || worst > GMC_TOL {
        return Err(Error::GmcFailed(worst));
    }
    let pf = m.fields_at(u)?;
    let n = pf.n;
    let lc = levi_civita(&pf)?;
    let ginv = linalg::invert(&pf.metric()?.map(|j| j.val).to_matrix()?)?;
    let christoffel_term =
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| -(0..n).map(|s| ginv[i][s] * lc.at(j, s, k)).sum::<C64>()).collect()).collect()).collect();
    let xs = nb.fields_at(u)?;
    let tails = xs.iter().zip(&nb.eps).map(|(x, &epsilon)| Tail { epsilon, w_matrix: vals(&weingarten(&pf, x)) }).collect();
    Ok(OperatorDescription { point: u.to_vec(), metric_term: ginv, christoffel_term, tails })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::connection::{check_dual_structure, check_flatness, ConnKind};
    use crate::manifold::{sample_points, SamplePlan};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn pts(m: &Manifold, k: usize) -> Vec<Vec<C64>> {
        sample_points(m, SamplePlan::new(11, k)).unwrap()
    }

    fn lob() -> (Manifold, NormalBundle) {
        let m = Manifold::compile(&catalog::lobachevsky()).unwrap();
        let nb = NormalBundle::compile(&m, &[NormalFieldSpec { epsilon: -1.0, x: vec!["1".into(), "1".into()] }]).unwrap();
        (m, nb)
    }

    fn lauricella(n: usize) -> (Manifold, NormalBundle) {
        let m = Manifold::compile(&catalog::lauricella(n)).unwrap();
        let nb = NormalBundle::compile(&m, &lauricella_normal_fields(n)).unwrap();
        (m, nb)
    }

    #[test]
    fn lobachevsky_expansion_with_unit() {
        let (m, nb) = lob();
        let p = pts(&m, 10);
        assert!(check_quadratic_expansion(&m, &nb, &p, 1e-9).pass);
        assert!(check_sym_condition(&m, &nb, &p, 1e-10).pass);
        let g = check_gmc(&m, &nb, &p, 1e-10);
        assert!(g.iter().all(|r| r.pass), "{:?}", g.iter().map(Report::line).collect::<Vec<_>>());
        // GMC1 and GMC2 vanish identically for W = Id
        assert_eq!(g[1].max_residual, 0.0);
        assert_eq!(g[2].max_residual, 0.0);
        let flipped = NormalBundle::compile(&m, &[NormalFieldSpec { epsilon: 1.0, x: vec!["1".into(), "1".into()] }]).unwrap();
        assert!(!check_quadratic_expansion(&m, &flipped, &p, 1e-9).pass);
        assert!(!check_gmc(&m, &flipped, &p, 1e-9)[0].pass);
    }

    #[test]
    fn empty_bundle_on_flat_metric() {
        let mut s = catalog::lobachevsky();
        s.g = Some(vec![vec!["1".into(), "0".into()], vec!["0".into(), "1".into()]]);
        let m = Manifold::compile(&s).unwrap();
        let nb = NormalBundle::compile(&m, &[]).unwrap();
        let p = pts(&m, 4);
        assert!(check_quadratic_expansion(&m, &nb, &p, 1e-12).pass);
        let op = emit_operator(&m, &nb, &p[0]).unwrap();
        assert!(op.tails.is_empty());
    }

    #[test]
    fn epsilon_must_be_a_sign() {
        let (m, _) = lob();
        let e = NormalBundle::compile(&m, &[NormalFieldSpec { epsilon: 0.5, x: vec!["1".into(), "1".into()] }]);
        assert!(matches!(e, Err(Error::Spec(_))));
    }

    #[test]
    fn lobachevsky_operator_matches_display() {
        let (m, nb) = lob();
        for u in pts(&m, 6) {
            let op = emit_operator(&m, &nb, &u).unwrap();
            let h = (u[0] - u[1]) * 0.5;
            let q = (u[0] - u[1]) * (u[0] - u[1]) * 0.5;
            let close = |a: C64, b: C64| (a - b).norm() < 1e-10 * (1.0 + b.norm());
            assert!(close(op.metric_term[0][0], q) && close(op.metric_term[1][1], q));
            assert!(close(op.metric_term[0][1], c(0.0)) && close(op.metric_term[1][0], c(0.0)));
            // rows of the displayed matrix as coefficients of (u¹_x, u²_x)
            let want = [[[h, -h], [h, h]], [[-h, -h], [h, -h]]];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!(close(op.christoffel_term[i][j][k], want[i][j][k]), "{i}{j}{k}");
                    }
                }
            }
            assert_eq!(op.tails.len(), 1);
            assert_eq!(op.tails[0].epsilon, -1.0);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(op.tails[0].w_matrix[i][j], c((i == j) as u8 as f64)));
                }
            }
            let v: serde_json::Value = serde_json::from_str(&op.to_json()).unwrap();
            assert!(v.get("metric_term").is_some() && v["tails"][0].get("W_matrix").is_some());
        }
    }

    #[test]
    fn operator_refuses_when_gmc_fails() {
        let (m, _) = lob();
        let bad = NormalBundle::compile(&m, &[NormalFieldSpec { epsilon: 1.0, x: vec!["1".into(), "1".into()] }]).unwrap();
        assert!(matches!(emit_operator(&m, &bad, &[c(2.0), c(0.0)]), Err(Error::GmcFailed(_))));
    }

    #[test]
    fn lauricella_expansion_and_gmc() {
        let (m, nb) = lauricella(3);
        let p = pts(&m, 12);
        let q = check_quadratic_expansion(&m, &nb, &p, 1e-8);
        assert!(q.pass, "{}", q.line());
        assert!(check_flat_fields(&m, &nb, &p, 1e-8).pass);
        assert!(check_sym_condition(&m, &nb, &p, 1e-8).pass);
        for r in check_gmc(&m, &nb, &p, 1e-8) {
            assert!(r.pass, "{}", r.line());
        }
        assert!(check_field_rank(&nb, &p, 2, 1e-8).pass);
        let op = emit_operator(&m, &nb, &p[0]).unwrap();
        assert_eq!(op.tails.len(), 3);
        assert!(op.tails.iter().all(|t| t.epsilon == -1.0));
    }

    #[test]
    fn lauricella_is_curved_with_flat_natural_connection() {
        let (m, _) = lauricella(3);
        let p = pts(&m, 8);
        assert!(!check_flatness("levi-civita", &m, &p, 1e-8, |pf| ConnKind::LeviCivita.build(pf)).pass);
        assert!(check_flatness("natural", &m, &p, 1e-8, |pf| ConnKind::Natural.build(pf)).pass);
        // the natural connection is the printed Lauricella connection
        for u in &p {
            let pf = m.fields_at(u).unwrap();
            let a = ConnKind::Natural.build(&pf).unwrap().values();
            let b = ConnKind::Explicit.build(&pf).unwrap().values();
            assert!(crate::report::discrepancy(a.data(), b.data()).0 < 1e-9);
        }
        for r in check_dual_structure(&m, &p, 1e-8, |pf| ConnKind::Explicit.build(pf)) {
            assert!(r.pass, "{}", r.line());
        }
    }

    #[test]
    fn lauricella_rank_in_two_dimensions() {
        let (m, nb) = lauricella(2);
        assert!(check_field_rank(&nb, &pts(&m, 5), 1, 1e-8).pass);
        assert!(check_quadratic_expansion(&m, &nb, &pts(&m, 5), 1e-8).pass);
    }

    #[test]
    fn lauricella_fields_match_a_finite_difference_gradient() {
        let (_, nb) = lauricella(3);
        let u = [c(0.2), c(1.1), c(2.7)];
        let phi = |u: &[f64], a: usize| {
            let p: f64 = (0..3).filter(|&l| l != a).map(|l| u[l] - u[a]).product();
            1.0 / p
        };
        let xs = nb.fields_at(&u).unwrap();
        let h = 1e-6;
        for a in 0..3 {
            for i in 0..3 {
                let mut up = [0.2, 1.1, 2.7];
                let mut dn = up;
                up[i] += h;
                dn[i] -= h;
                let fd = (phi(&up, a) - phi(&dn, a)) / (2.0 * h);
                assert!((xs[a][i].val - c(fd)).norm() < 1e-6, "{a}{i}");
            }
        }
    }

    #[test]
    fn random_field_breaks_symmetry() {
        let (m, _) = lauricella(3);
        let nb = NormalBundle::compile(&m, &[NormalFieldSpec { epsilon: -1.0, x: vec!["u2^2".into(), "u1*u3".into(), "exp(u1)".into()] }]).unwrap();
        assert!(!check_sym_condition(&m, &nb, &pts(&m, 5), 1e-8).pass);
    }
}
