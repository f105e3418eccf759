use crate::error::{Error, Result};
use crate::exprjet::Dual;
use crate::report::{max_norm, Check, Report};
use crate::tensor::{lie_derivative, Tensor};
use crate::{Dual64, C64};

use super::{FieldSource, PointFields};

/// Default tolerance of the structural checks.
pub const TOL: f64 = 1e-8;

/// Run a per-point residual `(max |Δ|, scale)` over all points.
pub fn over_points(name: &str, tol: f64, src: &dyn FieldSource, points: &[Vec<C64>], f: impl Fn(&PointFields) -> Result<(f64, f64)>) -> Report {
    let mut chk = Check::new(name, tol);
    for u in points {
        chk.absorb(src.fields_at(u).and_then(|pf| f(&pf)));
    }
    chk.finish()
}

/// Commutativity, associativity and unit residuals at one point.
pub fn product_axioms_at(pf: &PointFields) -> (f64, f64) {
    let n = pf.n;
    let c = pf.c_values();
    let e = pf.e_values();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                d = d.max((c[[i, j, k]] - c[[i, k, j]]).norm());
                let mut unit = -C64::new(if i == k { 1.0 } else { 0.0 }, 0.0);
                for l in 0..n {
                    unit += c[[i, l, k]] * e[l];
                    let mut assoc = C64::new(0.0, 0.0);
                    for s in 0..n {
                        assoc += c[[s, j, k]] * c[[i, s, l]] - c[[s, j, l]] * c[[i, s, k]];
                    }
                    d = d.max(assoc.norm());
                }
                d = d.max(unit.norm());
            }
        }
    }
    (d, c.max_abs().max(max_norm(&e)))
}

pub fn check_product_axioms(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    over_points("product axioms", tol, src, points, |pf| Ok(product_axioms_at(pf)))
}

/// Hertling-Manin integrability in coordinates:
/// `c^q_{jl}∂_q c^p_{sk} − c^q_{sk}∂_q c^p_{jl} = c^p_{jq}∂_l c^q_{sk} − c^p_{qk}∂_s c^q_{jl}
///  + c^p_{lq}∂_j c^q_{sk} − c^p_{qs}∂_k c^q_{jl}`.
pub fn hertling_manin_at(c: &Tensor<Dual64>) -> (f64, f64) {
    let n = c.n();
    let v = |i: usize, j: usize, k: usize| c[[i, j, k]].val;
    let d = |m: usize, i: usize, j: usize, k: usize| c[[i, j, k]].grad[m];
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in 0..n {
        for s in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let mut lhs = C64::new(0.0, 0.0);
                        let mut rhs = C64::new(0.0, 0.0);
                        for q in 0..n {
                            lhs += v(q, j, l) * d(q, p, s, k) - v(q, s, k) * d(q, p, j, l);
                            rhs += v(p, j, q) * d(l, q, s, k) - v(p, q, k) * d(s, q, j, l) + v(p, l, q) * d(j, q, s, k) - v(p, q, s) * d(k, q, j, l);
                        }
                        worst = worst.max((lhs - rhs).norm());
                        scale = scale.max(lhs.norm()).max(rhs.norm());
                    }
                }
            }
        }
    }
    (worst, scale)
}

pub fn check_hertling_manin(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    over_points("Hertling-Manin condition", tol, src, points, |pf| Ok(hertling_manin_at(&pf.c)))
}

/// `g_{iq}c^q_{lp} − g_{lq}c^q_{ip}` together with the symmetry of `g`.
pub fn metric_invariance_at(g: &Tensor<C64>, c: &Tensor<C64>) -> (f64, f64) {
    let n = g.n();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for l in 0..n {
            d = d.max((g[[i, l]] - g[[l, i]]).norm());
            for p in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for q in 0..n {
                    s += g[[i, q]] * c[[q, l, p]] - g[[l, q]] * c[[q, i, p]];
                }
                d = d.max(s.norm());
            }
        }
    }
    (d, g.max_abs() * c.max_abs().max(1.0))
}

pub fn check_metric_invariance(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    over_points("metric invariance", tol, src, points, |pf| Ok(metric_invariance_at(&pf.metric()?.map(|j| j.val), &pf.c_values())))
}

pub fn metric_dual(pf: &PointFields) -> Result<Tensor<Dual64>> {
    Ok(pf.metric()?.map(|j| Dual::from_jet(&j)))
}

pub fn check_killing_unit(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64) -> Report {
    over_points("Killing unit", tol, src, points, |pf| {
        let g = metric_dual(pf)?;
        let l = lie_derivative(&g, &pf.e_dual());
        Ok((l.max_abs(), g.values().max_abs()))
    })
}

/// Least-squares `D` with `ℒ_E g ≈ D g` over all entries and points.
pub fn fit_homogeneity_exponent(src: &dyn FieldSource, points: &[Vec<C64>]) -> Result<C64> {
    let mut num = C64::new(0.0, 0.0);
    let mut den = 0.0;
    for u in points {
        let pf = src.fields_at(u)?;
        let g = metric_dual(&pf)?;
        let l = lie_derivative(&g, &pf.euler_dual()?);
        let gv = g.values();
        if gv.max_abs() == 0.0 {
            return Err(Error::AllEntriesZero);
        }
        for (a, b) in gv.data().iter().zip(l.data()) {
            num += a.conj() * b;
            den += a.norm_sqr();
        }
    }
    Ok(num / den)
}

/// `ℒ_E g = D g` with fitted `D`, and `ℒ_E ∘ = ∘`. A declared `D` is
/// compared against the fit.
pub fn check_homogeneity(src: &dyn FieldSource, points: &[Vec<C64>], tol: f64, declared: Option<f64>) -> Report {
    let fit = match fit_homogeneity_exponent(src, points) {
        Ok(d) => d,
        Err(e) => return Report::errored("homogeneity", tol, &e),
    };
    let mismatch = declared.map_or(0.0, |d| (fit - C64::new(d, 0.0)).norm());
    let mut r = over_points("homogeneity", tol, src, points, |pf| {
        let g = metric_dual(pf)?;
        let e = pf.euler_dual()?;
        let lg = lie_derivative(&g, &e);
        let lc = lie_derivative(&pf.c, &e);
        let gv = g.values();
        let cv = pf.c_values();
        let dg = lg.sub(&gv.scale(fit)).max_abs();
        let dc = lc.sub(&cv).max_abs();
        Ok((dg.max(dc).max(mismatch), gv.max_abs().max(cv.max_abs())))
    });
    r = r.with_meta("D", fit.re);
    if fit.im != 0.0 {
        r = r.with_meta("D_im", fit.im);
    }
    if let Some(d) = declared {
        r = r.with_meta("D_declared", d);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::super::{sample_points, Manifold, ManifoldSpec, SamplePlan};
    use super::*;

    fn lob() -> Manifold {
        Manifold::compile(&ManifoldSpec::from_json(super::super::tests::lobachevsky_json()).unwrap()).unwrap()
    }

    #[test]
    fn lobachevsky_axioms_are_exact() {
        let m = lob();
        let pts = sample_points(&m, SamplePlan::new(3, 10)).unwrap();
        let r = check_product_axioms(&m, &pts, TOL);
        assert!(r.pass && r.max_residual == 0.0);
        let r = check_hertling_manin(&m, &pts, TOL);
        assert!(r.pass && r.max_residual == 0.0);
        let r = check_metric_invariance(&m, &pts, TOL);
        assert!(r.pass && r.max_residual == 0.0);
        assert!(check_killing_unit(&m, &pts, 1e-10).pass);
    }

    #[test]
    fn corrupted_product_breaks_hertling_manin() {
        let mut s = m_spec();
        let mut t = vec![vec![vec!["0".to_string(); 2]; 2]; 2];
        t[0][0][0] = "1".into();
        t[1][1][1] = "1".into();
        t[0][1][1] = "x".into();
        s.product = super::super::ProductSpec::Explicit(t);
        let m = Manifold::compile(&s).unwrap();
        let pts = sample_points(&m, SamplePlan::new(3, 10)).unwrap();
        let r = check_hertling_manin(&m, &pts, TOL);
        assert!(!r.pass && r.max_residual > 1e-3, "{}", r.max_residual);
    }

    fn m_spec() -> ManifoldSpec {
        ManifoldSpec::from_json(super::super::tests::lobachevsky_json()).unwrap()
    }

    #[test]
    fn killing_negative_control() {
        let mut s = m_spec();
        s.g.as_mut().unwrap()[0][0] = "2/(x - y)^2 + x".into();
        let m = Manifold::compile(&s).unwrap();
        let pts = sample_points(&m, SamplePlan::new(3, 10)).unwrap();
        assert!(!check_killing_unit(&m, &pts, 1e-10).pass);
    }

    #[test]
    fn homogeneity_exponent_scales_with_euler() {
        let mut s = m_spec();
        s.euler = Some(vec!["x".into(), "y".into()]);
        s.g = Some(vec![vec!["(x - y)^2".into(), "0".into()], vec!["0".into(), "(x - y)^2".into()]]);
        let m = Manifold::compile(&s).unwrap();
        let pts = sample_points(&m, SamplePlan::new(3, 10)).unwrap();
        let r = check_homogeneity(&m, &pts, TOL, Some(4.0));
        assert!(r.pass, "{:?}", r);
        s.euler = Some(vec!["2*x".into(), "2*y".into()]);
        let m2 = Manifold::compile(&s).unwrap();
        let d2 = fit_homogeneity_exponent(&m2, &pts).unwrap();
        assert!((d2.re - 8.0).abs() < 1e-12);
        assert!(!check_homogeneity(&m2, &pts, TOL, None).pass);
    }
}
