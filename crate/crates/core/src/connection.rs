//! Connections at a point and the connection-level identities.
//!
//! Christoffel symbols are carried as [`Dual`] jets, so `Γ` and `∂_m Γ`
//! come out of one pass over the order-2 jets of `g`, `e` and `c`; no
//! numerical differentiation enters the main path. Curvature follows
//! `R^h_{ikj} = ∂_kΓ^h_{ij} − ∂_jΓ^h_{ik} + Γ^h_{ks}Γ^s_{ij} − Γ^h_{js}Γ^s_{ik}`,
//! which gives `R^{12}_{12} = +1` on the Lobachevsky plane.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exprjet::Dual;
use crate::linalg;
use crate::manifold::{over_points, FieldSource, PointFields};
use crate::report::{max_norm, Check, Report};
use crate::scalar::Scalar;
use crate::tensor::{Down, Tensor, Up};
use crate::{Dual64, Jet64, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LeviCivita,
    Natural,
    Dual,
    LegendreTransformed,
    Explicit,
}

#[derive(Clone, Debug)]
pub struct ConnectionAt {
    /// `Γ^i_{jk}` with first derivatives.
    pub gamma: Tensor<Dual64>,
    pub provenance: Provenance,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl ConnectionAt {
    pub fn n(&self) -> usize {
        self.gamma.n()
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> C64 {
        self.gamma[[i, j, k]].val
    }

    /// `∂_m Γ^i_{jk}`.
    pub fn d(&self, m: usize, i: usize, j: usize, k: usize) -> C64 {
        self.gamma[[i, j, k]].grad[m]
    }

    pub fn values(&self) -> Tensor<C64> {
        self.gamma.values()
    }

    pub fn torsion(&self) -> f64 {
        let n = self.n();
        let mut t: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..j {
                    t = t.max((self.at(i, j, k) - self.at(i, k, j)).norm());
                }
            }
        }
        t
    }

    /// `max(|Γ|², |∂Γ|)`, the natural size of curvature components.
    pub fn curvature_scale(&self) -> f64 {
        let g = self.values().max_abs();
        let n = self.n();
        let d = (0..n).map(|m| self.gamma.partial(m).max_abs()).fold(0.0, f64::max);
        d.max(g * g)
    }

    /// `(∇_k X)^i = ∂_k X^i + Γ^i_{ks} X^s`, slots `(i, k)`, with derivatives.
    pub fn covariant_vector(&self, x: &[Jet64]) -> Tensor<Dual64> {
        let n = self.n();
        Tensor::from_fn(n, &[Up, Down], |ik| {
            let (i, k) = (ik[0], ik[1]);
            (0..n).fold(Dual::partial_of(&x[i], k), |s, m| s + self.gamma[[i, k, m]] * Dual::from_jet(&x[m]))
        })
    }
}

/// Christoffel symbols of the metric `g`.
pub fn levi_civita_of(g: &Tensor<Jet64>) -> Result<ConnectionAt> {
    let n = g.n();
    let gd: Vec<Vec<Dual64>> = (0..n).map(|i| (0..n).map(|j| Dual::from_jet(&g[[i, j]])).collect()).collect();
    let gi = linalg::invert(&gd)?;
    let dg = |k: usize, i: usize, j: usize| Dual::partial_of(&g[[i, j]], k);
    let half = C64::new(0.5, 0.0);
    let gamma = Tensor::from_fn(n, &[Up, Down, Down], |ikm| {
        let (i, k, m) = (ikm[0], ikm[1], ikm[2]);
        let s = (0..n).fold(Dual::constant(zero(), n), |s, q| s + gi[i][q] * (dg(k, q, m) + dg(m, q, k) - dg(q, k, m)));
        s.mulc(half)
    });
    Ok(ConnectionAt { gamma, provenance: Provenance::LeviCivita })
}

pub fn levi_civita(pf: &PointFields) -> Result<ConnectionAt> {
    levi_civita_of(pf.metric()?)
}

/// Inverse metric with first derivatives.
pub fn inverse_metric(g: &Tensor<Jet64>) -> Result<Vec<Vec<Dual64>>> {
    let n = g.n();
    let gd: Vec<Vec<Dual64>> = (0..n).map(|i| (0..n).map(|j| Dual::from_jet(&g[[i, j]])).collect()).collect();
    Ok(linalg::invert(&gd)?)
}

/// Counit `θ_i = g_{il} e^l` (as jets) and `dθ_{qf} = ∂_qθ_f − ∂_fθ_q`.
pub fn counit_and_dtheta(pf: &PointFields) -> Result<(Vec<Jet64>, Tensor<Dual64>)> {
    let g = pf.metric()?;
    Ok(counit_of(g, &pf.e))
}

pub fn counit_of(g: &Tensor<Jet64>, e: &[Jet64]) -> (Vec<Jet64>, Tensor<Dual64>) {
    let n = g.n();
    let theta: Vec<Jet64> = (0..n).map(|i| (0..n).fold(Jet64::constant(zero(), n), |s, l| s + g[[i, l]] * e[l])).collect();
    let dtheta = Tensor::from_fn(n, &[Down, Down], |qf| Dual::partial_of(&theta[qf[1]], qf[0]) - Dual::partial_of(&theta[qf[0]], qf[1]));
    (theta, dtheta)
}

/// `Γ^i_{kl} = Γ̃^i_{kl} − ½ g^{if} c^q_{kl} dθ_{qf}`.
pub fn natural_connection(pf: &PointFields) -> Result<ConnectionAt> {
    let g = pf.metric()?;
    let n = pf.n;
    let lc = levi_civita_of(g)?;
    let gi = inverse_metric(g)?;
    let (_, dth) = counit_of(g, &pf.e);
    let half = C64::new(-0.5, 0.0);
    let gamma = Tensor::from_fn(n, &[Up, Down, Down], |ikl| {
        let (i, k, l) = (ikl[0], ikl[1], ikl[2]);
        let mut b = Dual::constant(zero(), n);
        for f in 0..n {
            for q in 0..n {
                b = b + gi[i][f] * pf.c[[q, k, l]] * dth[[q, f]];
            }
        }
        lc.gamma[[i, k, l]] + b.mulc(half)
    });
    Ok(ConnectionAt { gamma, provenance: Provenance::Natural })
}

/// Explicitly given Christoffel symbols.
pub fn explicit_connection(pf: &PointFields) -> Result<ConnectionAt> {
    let gamma = pf.conn.clone().ok_or(crate::error::Error::Missing("explicit connection"))?;
    Ok(ConnectionAt { gamma, provenance: Provenance::Explicit })
}

/// Which connection a check should build from the point fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnKind {
    LeviCivita,
    Natural,
    Explicit,
}

impl ConnKind {
    pub fn build(self, pf: &PointFields) -> Result<ConnectionAt> {
        match self {
            ConnKind::LeviCivita => levi_civita(pf),
            ConnKind::Natural => natural_connection(pf),
            ConnKind::Explicit => explicit_connection(pf),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ConnKind::LeviCivita => "Levi-Civita",
            ConnKind::Natural => "natural",
            ConnKind::Explicit => "explicit",
        }
    }
}

/// `R^h_{ikj}` with slots `(h, i, k, j)`.
pub fn riemann(conn: &ConnectionAt) -> Tensor<C64> {
    let n = conn.n();
    Tensor::from_fn(n, &[Up, Down, Down, Down], |x| {
        let (h, i, k, j) = (x[0], x[1], x[2], x[3]);
        let mut r = conn.d(k, h, i, j) - conn.d(j, h, i, k);
        for s in 0..n {
            r += conn.at(h, k, s) * conn.at(s, i, j) - conn.at(h, j, s) * conn.at(s, i, k);
        }
        r
    })
}

/// `R^{ij}_{kh} = g^{is} R^j_{skh}`.
pub fn raised_riemann(r: &Tensor<C64>, ginv: &[Vec<C64>]) -> Tensor<C64> {
    let n = r.n();
    Tensor::from_fn(n, &[Up, Up, Down, Down], |x| {
        let (i, j, k, h) = (x[0], x[1], x[2], x[3]);
        (0..n).map(|s| ginv[i][s] * r[[j, s, k, h]]).sum()
    })
}

pub fn check_flatness(name: &str, src: &dyn FieldSource, points: &[Vec<C64>], tol: f64, conn: impl Fn(&PointFields) -> Result<ConnectionAt>) -> Report {
    over_points(name, tol, src, points, |pf| {
        let c = conn(pf)?;
        Ok((riemann(&c).max_abs(), c.curvature_scale()))
    })
}

pub fn check_torsion(name: &str, src: &dyn FieldSource, points: &[Vec<C64>], tol: f64, conn: impl Fn(&PointFields) -> Result<ConnectionAt>) -> Report {
    over_points(name, tol, src, points, |pf| {
        let c = conn(pf)?;
        Ok((c.torsion(), c.values().max_abs()))
    })
}

/// `∇_k g_{ij} − ½c^s_{ki}dθ_{sj} − ½c^s_{kj}dθ_{si}` for given Christoffel values.
pub fn nablafromg_residual(pf: &PointFields, gamma: &Tensor<C64>) -> Result<(f64, f64)> {
    let g = pf.metric()?;
    let n = pf.n;
    let (_, dth) = counit_of(g, &pf.e);
    let c = pf.c_values();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut lhs = g[[i, j]].grad[k];
                let mut rhs = zero();
                for s in 0..n {
                    lhs -= gamma[[s, k, i]] * g[[s, j]].val + gamma[[s, k, j]] * g[[i, s]].val;
                    rhs += (c[[s, k, i]] * dth[[s, j]].val + c[[s, k, j]] * dth[[s, i]].val) * 0.5;
                }
                worst = worst.max((lhs - rhs).norm());
                scale = scale.max(g[[i, j]].grad[k].norm()).max(rhs.norm());
            }
        }
    }
    Ok((worst, scale.max(gamma.max_abs() * g.map(|x| x.val).max_abs())))
}

pub fn check_nablafromg(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64, conn: impl Fn(&PointFields) -> Result<ConnectionAt>) -> Report {
    over_points("metric derivative from dθ", tol, src, points, |pf| nablafromg_residual(pf, &conn(pf)?.values()))
}

/// `∂_k e^i + Γ^i_{ks} e^s`.
pub fn check_nabla_e(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64, conn: impl Fn(&PointFields) -> Result<ConnectionAt>) -> Report {
    over_points("unit is flat", tol, src, points, |pf| {
        let c = conn(pf)?;
        let ne = c.covariant_vector(&pf.e).values();
        Ok((ne.max_abs(), c.values().max_abs() * max_norm(&pf.e_values())))
    })
}

/// `∇_k c^i_{lj} = ∂_k c^i_{lj} + Γ^i_{ks}c^s_{lj} − Γ^s_{kl}c^i_{sj} − Γ^s_{kj}c^i_{ls}`, slots `(k, i, l, j)`.
pub fn nabla_c(pf: &PointFields, conn: &ConnectionAt) -> Tensor<C64> {
    let n = pf.n;
    let c = &pf.c;
    Tensor::from_fn(n, &[Down, Up, Down, Down], |x| {
        let (k, i, l, j) = (x[0], x[1], x[2], x[3]);
        let mut v = c[[i, l, j]].grad[k];
        for s in 0..n {
            v += conn.at(i, k, s) * c[[s, l, j]].val - conn.at(s, k, l) * c[[i, s, j]].val - conn.at(s, k, j) * c[[i, l, s]].val;
        }
        v
    })
}

pub fn check_compat_product(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64, conn: impl Fn(&PointFields) -> Result<ConnectionAt>) -> Report {
    over_points("product compatibility", tol, src, points, |pf| {
        let cn = conn(pf)?;
        let nc = nabla_c(pf, &cn);
        let n = pf.n;
        let mut d: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for l in 0..n {
                    for j in 0..n {
                        d = d.max((nc[[k, i, l, j]] - nc[[l, i, k, j]]).norm());
                    }
                }
            }
        }
        Ok((d, nc.max_abs().max(cn.values().max_abs() * pf.c.values().max_abs())))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CyclicVariant {
    Primal,
    Bis,
}

/// `S^h_{xyzw} = c^i_{xw}R^h_{iyz} + c^i_{zw}R^h_{ixy} + c^i_{yw}R^h_{izx}`, the
/// component form of `R(Y,Z)(X∘W) + R(X,Y)(Z∘W) + R(Z,X)(Y∘W)`.
pub fn cyclic_sum(r: &Tensor<C64>, c: &Tensor<C64>) -> Tensor<C64> {
    let n = r.n();
    Tensor::from_fn(n, &[Up, Down, Down, Down, Down], |a| {
        let (h, x, y, z, w) = (a[0], a[1], a[2], a[3], a[4]);
        (0..n).map(|i| c[[i, x, w]] * r[[h, i, y, z]] + c[[i, z, w]] * r[[h, i, x, y]] + c[[i, y, w]] * r[[h, i, z, x]]).sum()
    })
}

/// `Z∘R(W,Y)X + W∘R(Y,Z)X + Y∘R(Z,W)X` in components,
/// `c^a_{zh}R^h_{xwy} + c^a_{wh}R^h_{xyz} + c^a_{yh}R^h_{xzw}`.
pub fn cyclic_sum_bis(r: &Tensor<C64>, c: &Tensor<C64>) -> Tensor<C64> {
    let n = r.n();
    Tensor::from_fn(n, &[Up, Down, Down, Down, Down], |a| {
        let (p, x, y, z, w) = (a[0], a[1], a[2], a[3], a[4]);
        (0..n).map(|h| c[[p, z, h]] * r[[h, x, w, y]] + c[[p, w, h]] * r[[h, x, y, z]] + c[[p, y, h]] * r[[h, x, z, w]]).sum()
    })
}

pub fn check_curvature_product_condition(
    src: &dyn FieldSource,
    points: &[Vec<C64>],
    tol: f64,
    variant: CyclicVariant,
    conn: impl Fn(&PointFields) -> Result<ConnectionAt>,
) -> Report {
    let name = match variant {
        CyclicVariant::Primal => "curvature-product condition",
        CyclicVariant::Bis => "curvature-product condition (bis)",
    };
    over_points(name, tol, src, points, |pf| {
        let cn = conn(pf)?;
        let r = riemann(&cn);
        let c = pf.c_values();
        let s = match variant {
            CyclicVariant::Primal => cyclic_sum(&r, &c),
            CyclicVariant::Bis => cyclic_sum_bis(&r, &c),
        };
        Ok((s.max_abs(), r.max_abs() * c.max_abs()))
    })
}

/// The cyclic sum is the same for the natural and the Levi-Civita curvature.
pub fn check_r_tr_identity(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    over_points("natural vs Levi-Civita cyclic sums", tol, src, points, |pf| {
        let c = pf.c_values();
        let rn = riemann(&natural_connection(pf)?);
        let rl = riemann(&levi_civita(pf)?);
        let a = cyclic_sum(&rn, &c);
        let b = cyclic_sum(&rl, &c);
        Ok((a.sub(&b).max_abs(), (rn.max_abs().max(rl.max_abs())) * c.max_abs()))
    })
}

/// `∂_k∂_jE^i + Γ^i_{jl}∂_kE^l + Γ^i_{km}∂_jE^m − Γ^m_{kj}∂_mE^i + E(Γ^i_{kj})`.
pub fn nabla_nabla_e(pf: &PointFields, conn: &ConnectionAt) -> Result<Tensor<C64>> {
    let e = pf.euler()?;
    let n = pf.n;
    Ok(Tensor::from_fn(n, &[Up, Down, Down], |x| {
        let (i, k, j) = (x[0], x[1], x[2]);
        let mut v = e[i].hess[k][j];
        for l in 0..n {
            v += conn.at(i, j, l) * e[l].grad[k] + conn.at(i, k, l) * e[l].grad[j] - conn.at(l, k, j) * e[i].grad[l];
            v += e[l].val * conn.d(l, i, k, j);
        }
        v
    }))
}

pub fn check_nabla_nabla_e(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64, conn: impl Fn(&PointFields) -> Result<ConnectionAt>) -> Report {
    over_points("Euler field has vanishing second covariant derivative", tol, src, points, |pf| {
        let c = conn(pf)?;
        let v = nabla_nabla_e(pf, &c)?;
        let e = pf.euler()?;
        let es = e.iter().map(|j| j.val.norm().max(j.grad.iter().map(|x| x.norm()).fold(0.0, f64::max))).fold(0.0, f64::max);
        Ok((v.max_abs(), es * c.curvature_scale().max(c.values().max_abs())))
    })
}

/// The second flat structure `(∗, ∇*, E)` of a bi-flat manifold.
#[derive(Clone, Debug)]
pub struct DualStructure {
    /// `c*^i_{jk} = ((E∘)^{-1})^i_a c^a_{jk}`.
    pub c_star: Tensor<Dual64>,
    pub conn: ConnectionAt,
}

/// `X∗Y = (E∘)^{-1} X∘Y` and `Γ*^k_{ij} = Γ^k_{ij} − c*^l_{ji} ∇_l E^k`.
pub fn dual_structure(pf: &PointFields, conn: &ConnectionAt) -> Result<DualStructure> {
    let n = pf.n;
    let e = pf.euler()?;
    let ed: Vec<Dual64> = e.iter().map(Dual::from_jet).collect();
    let m: Vec<Vec<Dual64>> = (0..n).map(|i| (0..n).map(|k| (0..n).fold(Dual::constant(zero(), n), |s, l| s + pf.c[[i, k, l]] * ed[l])).collect()).collect();
    let mi = linalg::invert(&m)?;
    let c_star = Tensor::from_fn(n, &[Up, Down, Down], |x| (0..n).fold(Dual::constant(zero(), n), |s, a| s + mi[x[0]][a] * pf.c[[a, x[1], x[2]]]));
    let ne = conn.covariant_vector(e);
    let gamma = Tensor::from_fn(n, &[Up, Down, Down], |x| {
        let (k, i, j) = (x[0], x[1], x[2]);
        (0..n).fold(conn.gamma[[k, i, j]], |s, l| s - c_star[[l, j, i]] * ne[[k, l]])
    });
    Ok(DualStructure { c_star, conn: ConnectionAt { gamma, provenance: Provenance::Dual } })
}

/// Residuals of the dual structure at one point: `∗` is commutative,
/// associative with unit `E`; `∇*` is torsionless and flat; and the reverse
/// formula `Γ^k_{ij} = Γ*^k_{ij} − c^l_{ji} ∇*_l e^k` holds.
pub fn dual_structure_residuals(pf: &PointFields, conn: &ConnectionAt) -> Result<Vec<(&'static str, f64, f64)>> {
    let n = pf.n;
    let ds = dual_structure(pf, conn)?;
    let cs = ds.c_star.values();
    let ev: Vec<C64> = pf.euler()?.iter().map(|j| j.val).collect();
    let mut alg: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                alg = alg.max((cs[[i, j, k]] - cs[[i, k, j]]).norm());
                let unit: C64 = (0..n).map(|l| cs[[i, l, k]] * ev[l]).sum::<C64>() - C64::new((i == k) as u8 as f64, 0.0);
                alg = alg.max(unit.norm());
                for l in 0..n {
                    let a: C64 = (0..n).map(|s| cs[[s, j, k]] * cs[[i, s, l]] - cs[[s, j, l]] * cs[[i, s, k]]).sum();
                    alg = alg.max(a.norm());
                }
            }
        }
    }
    let ne_star = ds.conn.covariant_vector(&pf.e).values();
    let c = pf.c_values();
    let mut rev: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let back: C64 = ds.conn.at(k, i, j) - (0..n).map(|l| c[[l, j, i]] * ne_star[[k, l]]).sum::<C64>();
                rev = rev.max((back - conn.at(k, i, j)).norm());
            }
        }
    }
    let gs = ds.conn.values().max_abs();
    Ok(vec![
        ("dual product axioms", alg, cs.max_abs().max(max_norm(&ev))),
        ("dual connection torsion", ds.conn.torsion(), gs),
        ("dual connection flatness", riemann(&ds.conn).max_abs(), ds.conn.curvature_scale()),
        ("dual reverse formula", rev, gs.max(conn.values().max_abs())),
    ])
}

pub fn check_dual_structure(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64, conn: impl Fn(&PointFields) -> Result<ConnectionAt>) -> Vec<Report> {
    let names = ["dual product axioms", "dual connection torsion", "dual connection flatness", "dual reverse formula"];
    let mut checks: Vec<Check> = names.iter().map(|n| Check::new(n, tol)).collect();
    for u in points {
        match src.fields_at(u).and_then(|pf| dual_structure_residuals(&pf, &conn(&pf)?)) {
            Ok(rs) => {
                for (c, (_, d, s)) in checks.iter_mut().zip(rs) {
                    c.record(d, s);
                }
            }
            Err(e) => checks.iter_mut().for_each(|c| c.fail_with(&e)),
        }
    }
    checks.into_iter().map(Check::finish).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{sample_points, Manifold, ManifoldSpec, SamplePlan};

    fn lob() -> Manifold {
        let s = r#"{"name":"lob","n":2,"coords":["x","y"],"product":"canonical","e":["1","1"],
            "g":[["2/(x - y)^2","0"],["0","2/(x - y)^2"]],
            "region":{"bounds":[[0.5,4.0],[-2.0,2.0]],"constraints":[{"expr":"x - y","kind":"positive","min":0.1}]}}"#;
        Manifold::compile(&ManifoldSpec::from_json(s).unwrap()).unwrap()
    }

    #[test]
    fn lobachevsky_curvature_golden() {
        let m = lob();
        for u in sample_points(&m, SamplePlan::new(5, 10)).unwrap() {
            let pf = m.fields(&u).unwrap();
            let lc = levi_civita(&pf).unwrap();
            let gi = inverse_metric(pf.metric().unwrap()).unwrap();
            let giv: Vec<Vec<C64>> = gi.iter().map(|r| r.iter().map(|d| d.val).collect()).collect();
            let rr = raised_riemann(&riemann(&lc), &giv);
            assert!((rr[[0, 1, 0, 1]] - C64::new(1.0, 0.0)).norm() < 1e-8);
            let r = riemann(&lc);
            for h in 0..2 {
                for i in 0..2 {
                    for k in 0..2 {
                        for j in 0..2 {
                            assert!((r[[h, i, k, j]] + r[[h, i, j, k]]).norm() < 1e-12);
                        }
                    }
                }
            }
            let nat = natural_connection(&pf).unwrap();
            assert!(riemann(&nat).max_abs() < 1e-8 * (1.0 + nat.curvature_scale()));
        }
    }

    #[test]
    fn euclidean_is_flat() {
        let s = r#"{"name":"flat","n":2,"coords":["x","y"],"product":"canonical","e":["1","1"],
            "g":[["1","0"],["0","1"]],"region":{"bounds":[[0,1],[0,1]]}}"#;
        let m = Manifold::compile(&ManifoldSpec::from_json(s).unwrap()).unwrap();
        let pf = m.fields(&[C64::new(0.3, 0.0), C64::new(0.2, 0.0)]).unwrap();
        let lc = levi_civita(&pf).unwrap();
        assert_eq!(lc.values().max_abs(), 0.0);
        assert_eq!(riemann(&lc).max_abs(), 0.0);
        let (_, dth) = counit_and_dtheta(&pf).unwrap();
        assert_eq!(dth.values().max_abs(), 0.0);
        assert_eq!(natural_connection(&pf).unwrap().values().max_abs(), 0.0);
    }

    #[test]
    fn natural_connection_theorem_on_lobachevsky() {
        let m = lob();
        let pts = sample_points(&m, SamplePlan::new(9, 20)).unwrap();
        let nat = |pf: &PointFields| natural_connection(pf);
        assert!(check_nablafromg(&m, &pts, 1e-9, nat).pass);
        assert!(check_nabla_e(&m, &pts, 1e-9, nat).pass);
        assert!(check_compat_product(&m, &pts, 1e-9, nat).pass);
        assert!(check_flatness("flat", &m, &pts, 1e-8, nat).pass);
        assert!(!check_compat_product(&m, &pts, 1e-9, |pf: &PointFields| levi_civita(pf)).pass);
        assert!(!check_flatness("lc", &m, &pts, 1e-8, |pf: &PointFields| levi_civita(pf)).pass);
        let lcp = |pf: &PointFields| levi_civita(pf);
        assert!(check_curvature_product_condition(&m, &pts, 1e-8, CyclicVariant::Primal, lcp).pass);
        assert!(check_curvature_product_condition(&m, &pts, 1e-8, CyclicVariant::Bis, lcp).pass);
        assert!(check_r_tr_identity(&m, &pts, 1e-8).pass);
    }

    #[test]
    fn diagonal_metric_christoffel_matches_log_derivative() {
        let m = lob();
        let u = [C64::new(2.0, 0.0), C64::new(0.5, 0.0)];
        let pf = m.fields(&u).unwrap();
        let lc = levi_civita(&pf).unwrap();
        let g00 = pf.metric().unwrap()[[0, 0]];
        // ∂_1 ln √g_00
        let want = g00.grad[1] / (g00.val * 2.0);
        assert!((lc.at(0, 0, 1) - want).norm() < 1e-10);
    }
}
