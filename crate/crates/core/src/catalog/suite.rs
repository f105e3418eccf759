use std::collections::BTreeMap;

use super::charts::{verify_flat_coordinates, verify_vector_potential};
use super::entry::{entry, CatalogEntry, Flag};
use crate::connection::{self as conn, ConnKind, CyclicVariant};
use crate::error::{Error, Result};
use crate::hamops::{self, NormalBundle, NormalFieldSpec};
use crate::legendre::{self, ExprField, LegendreTransformed};
use crate::linalg;
use crate::manifold::{self as mf, sample_points, Manifold, ProductSpec, SamplePlan};
use crate::pencil::{self, PencilProduct, DEFAULT_LAMBDAS};
use crate::report::{discrepancy, Bundle, Check, Expect, Report};
use crate::rotation::{self, BetaSource};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
    pub params: BTreeMap<String, f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 42, points: 20, tol: mf::TOL, params: BTreeMap::new() }
    }
}

fn natural(pf: &mf::PointFields) -> Result<conn::ConnectionAt> {
    ConnKind::Natural.build(pf)
}

fn explicit(pf: &mf::PointFields) -> Result<conn::ConnectionAt> {
    ConnKind::Explicit.build(pf)
}

fn tagged(r: Report, prefix: &str) -> Report {
    Report { name: format!("{prefix}: {}", r.name), ..r }
}

/// `I₁` and `I₂` from the characteristic polynomial `μ³ + I₁μ − I₂` of `V`.
pub fn check_expected_integrals(src: &dyn BetaSource, points: &[Vec<C64>], i1: f64, i2: f64, tol: f64) -> Report {
    let mut chk = Check::new("integrals I1, I2 from V", tol);
    let mut last = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for u in points {
        match src.rotation_at(u) {
            Ok(rd) => {
                let v = rd.v();
                // charpoly returns monic coefficients, highest degree first
                let p = linalg::charpoly(&v);
                let (a, b) = (p[2], -p[3]);
                chk.record((a - i1).norm().max((b - i2).norm()), 0.0);
                last = (a, b);
            }
            Err(e) => chk.fail_with(&e),
        }
    }
    chk.meta("I1", vec![last.0.re, last.0.im]);
    chk.meta("I2", vec![last.1.re, last.1.im]);
    chk.meta("expected", vec![i1, i2]);
    chk.finish()
}

/// The catalog value of `D` holds at the default parameters only; with
/// overrides the exponent is fitted without a declared value.
fn declared_d(e: &CatalogEntry, m: &Manifold) -> Option<f64> {
    if m.spec.params == e.spec.params {
        m.spec.expected.big_d
    } else {
        None
    }
}

fn points_for(m: &Manifold, o: &SuiteOptions) -> Result<Vec<Vec<C64>>> {
    sample_points(m, SamplePlan::new(o.seed, o.points))
}

/// Every check implied by the flags of `e`, plus its documented controls.
pub fn run_suite(e: &CatalogEntry, o: &SuiteOptions) -> Bundle {
    let mut b = Bundle::new(&e.spec.name, o.seed, o.points, BTreeMap::new());
    let m = match Manifold::compile_with(&e.spec, &o.params) {
        Ok(m) => m,
        Err(err) => {
            b.reports.push(Report::errored("compile spec", o.tol, &err));
            return b;
        }
    };
    b.params = m.spec.params.clone();
    let p = match points_for(&m, o) {
        Ok(p) => p,
        Err(err) => {
            b.reports.push(Report::errored("sample points", o.tol, &err));
            return b;
        }
    };
    let tol = o.tol;
    let r = &mut b.reports;
    r.push(mf::check_product_axioms(&m, &p, tol));
    r.push(mf::check_hertling_manin(&m, &p, tol));
    if m.has_metric() {
        r.push(mf::check_metric_invariance(&m, &p, tol));
    }
    if e.has(Flag::Killing) {
        r.push(mf::check_killing_unit(&m, &p, tol));
    }
    if e.has(Flag::RiemannianFManifold) {
        r.extend(riemannian_f(&m, &p, tol));
    }
    if e.has(Flag::FlatStructure) {
        r.extend(flat_structure(&m, &p, tol));
    }
    if e.has(Flag::Homogeneous) {
        r.push(mf::check_homogeneity(&m, &p, tol, declared_d(e, &m)));
    }
    if e.has(Flag::Semisimple) && m.has_metric() {
        r.extend(semisimple(&m, &p, tol));
    }
    if e.has(Flag::Pencil) {
        r.extend(pencil_suite(&m, &p, tol));
    }
    if e.has(Flag::FlatNormalBundle) {
        r.extend(normal_bundle(&m, &e.normal_fields, &p, tol));
    }
    if let Some(chart) = &e.flat_chart {
        r.push(verify_flat_coordinates(&m, chart, &p, tol));
        if chart.potential.is_some() {
            r.push(verify_vector_potential(&m, chart, &p, tol));
        }
    }
    r.extend(legendre_suite(e, &m, &p, o));
    b
}

/// Checks that can be run on their own with [`run_checks`].
pub const CHECK_IDS: [&str; 22] = [
    "product-axioms",
    "hertling-manin",
    "metric-invariance",
    "killing",
    "natural-torsion",
    "natural-flat",
    "nabla-e",
    "compat",
    "nablafromg",
    "cyclic-condition",
    "levi-civita-flat",
    "explicit-flat",
    "explicit-is-natural",
    "homogeneity",
    "darboux",
    "flatness-constraint",
    "lame",
    "v-eigenvalues",
    "flat-pencil",
    "pencil-exactness",
    "flat-coordinates",
    "vector-potential",
];

fn one_check(id: &str, e: &CatalogEntry, m: &Manifold, p: &[Vec<C64>], tol: f64) -> Result<Report> {
    let ex = &m.spec.expected;
    let lc = |pf: &mf::PointFields| conn::levi_civita(pf);
    let chart = || e.flat_chart.as_ref().ok_or_else(|| Error::MissingCompanionData(format!("{}: flat chart", m.name())));
    Ok(match id {
        "product-axioms" => mf::check_product_axioms(m, p, tol),
        "hertling-manin" => mf::check_hertling_manin(m, p, tol),
        "metric-invariance" => mf::check_metric_invariance(m, p, tol),
        "killing" => mf::check_killing_unit(m, p, tol),
        "natural-torsion" => conn::check_torsion("natural connection torsion", m, p, tol, natural),
        "natural-flat" => conn::check_flatness("natural connection is flat", m, p, tol, natural),
        "nabla-e" => conn::check_nabla_e(m, p, tol, natural),
        "compat" => conn::check_compat_product(m, p, tol, natural),
        "nablafromg" => conn::check_nablafromg(m, p, tol, natural),
        "cyclic-condition" => conn::check_curvature_product_condition(m, p, tol, CyclicVariant::Primal, lc),
        "levi-civita-flat" => conn::check_flatness("Levi-Civita connection is flat", m, p, tol, lc),
        "explicit-flat" => conn::check_flatness("explicit connection is flat", m, p, tol, explicit),
        "explicit-is-natural" => mf::over_points("explicit connection is the natural one", tol, m, p, |pf| {
            Ok(discrepancy(natural(pf)?.values().data(), explicit(pf)?.values().data()))
        }),
        "homogeneity" => mf::check_homogeneity(m, p, tol, declared_d(e, m)),
        "darboux" => rotation::check_darboux_system(m, p, tol),
        "flatness-constraint" => rotation::check_flatness_constraint(m, p, tol),
        "lame" => rotation::check_lame_system(m, m, p, ex.d, tol),
        "v-eigenvalues" => rotation::check_v_eigenvalues(m, p, ex.eigenvalues.as_deref().ok_or(Error::Missing("expected eigenvalues"))?, tol),
        "flat-pencil" => pencil::check_flat_pencil(m, p, &DEFAULT_LAMBDAS, tol),
        "pencil-exactness" => pencil::check_exactness(m, p, tol),
        "flat-coordinates" => verify_flat_coordinates(m, chart()?, p, tol),
        "vector-potential" => verify_vector_potential(m, chart()?, p, tol),
        _ => return Err(Error::Spec(format!("unknown check `{id}`; known: {}", CHECK_IDS.join(", ")))),
    })
}

/// Only the named checks, each expected to pass. Spec, sampling and
/// unknown-check errors come back as `Err`.
pub fn run_checks(e: &CatalogEntry, ids: &[String], o: &SuiteOptions) -> Result<Bundle> {
    let m = Manifold::compile_with(&e.spec, &o.params)?;
    let p = points_for(&m, o)?;
    let mut b = Bundle::new(&e.spec.name, o.seed, o.points, m.spec.params.clone());
    for id in ids {
        b.reports.push(one_check(id, e, &m, &p, o.tol)?);
    }
    Ok(b)
}

fn riemannian_f(m: &Manifold, p: &[Vec<C64>], tol: f64) -> Vec<Report> {
    let mut out = vec![
        conn::check_torsion("natural connection torsion", m, p, tol, natural),
        conn::check_nabla_e(m, p, tol, natural),
        conn::check_compat_product(m, p, tol, natural),
        conn::check_flatness("natural connection is flat", m, p, tol, natural),
        conn::check_nablafromg(m, p, tol, natural),
        conn::check_curvature_product_condition(m, p, tol, CyclicVariant::Primal, conn::levi_civita),
    ];
    let lc = conn::check_flatness("Levi-Civita connection is flat", m, p, tol, conn::levi_civita);
    // a curved metric is the point of most entries; report without claiming
    out.push(if lc.pass { lc } else { lc.expecting(Expect::Info) });
    out
}

fn flat_structure(m: &Manifold, p: &[Vec<C64>], tol: f64) -> Vec<Report> {
    let mut out = vec![
        tagged(conn::check_torsion("torsion", m, p, tol, explicit), "explicit"),
        tagged(conn::check_flatness("flat", m, p, tol, explicit), "explicit"),
        tagged(conn::check_nabla_e(m, p, tol, explicit), "explicit"),
        tagged(conn::check_compat_product(m, p, tol, explicit), "explicit"),
    ];
    if m.has_metric() {
        out.push(mf::over_points("explicit connection is the natural one", tol, m, p, |pf| {
            let a = natural(pf)?.values();
            let b = explicit(pf)?.values();
            Ok(discrepancy(a.data(), b.data()))
        }));
    }
    out
}

fn semisimple(m: &Manifold, p: &[Vec<C64>], tol: f64) -> Vec<Report> {
    let mut out = vec![rotation::check_darboux_system(m, p, tol)];
    let ed4 = rotation::check_flatness_constraint(m, p, tol);
    out.push(if ed4.pass { ed4 } else { ed4.expecting(Expect::Info) });
    let ex = &m.spec.expected;
    if m.spec.lame.is_some() {
        out.push(rotation::check_lame_system(m, m, p, ex.d, tol));
    }
    if let Some(ev) = &ex.eigenvalues {
        out.push(rotation::check_v_eigenvalues(m, p, ev, tol));
    }
    if let (Some(i1), Some(i2)) = (ex.i1, ex.i2) {
        out.push(check_expected_integrals(m, p, i1, i2, 1e-10));
    }
    out
}

fn pencil_suite(m: &Manifold, p: &[Vec<C64>], tol: f64) -> Vec<Report> {
    let mut out = vec![
        pencil::check_flat_pencil(m, p, &DEFAULT_LAMBDAS, tol),
        pencil::check_exactness(m, p, tol),
        pencil::check_pencil_homogeneity(m, p, tol),
        pencil::check_delta_identities(m, p, tol),
        pencil::check_r_operator(m, p, tol),
        pencil::check_product_from_pencil(m, p, m.is_canonical(), tol),
    ];
    if let Some(d) = m.spec.expected.pencil_d {
        let mut chk = Check::new("pencil exponent d", tol);
        match pencil::fit_pencil_d(m, p) {
            Ok(f) => {
                chk.record((f - d).norm(), d.abs());
                chk.meta("fitted", vec![f.re, f.im]);
            }
            Err(e) => chk.fail_with(&e),
        }
        out.push(chk.finish());
    }
    let rebuilt = PencilProduct { base: m };
    for r in [
        mf::check_product_axioms(&rebuilt, p, tol),
        mf::check_metric_invariance(&rebuilt, p, tol),
        mf::check_killing_unit(&rebuilt, p, tol),
        mf::check_homogeneity(&rebuilt, p, tol, None),
        conn::check_flatness("natural connection is flat", &rebuilt, p, tol, natural),
        conn::check_nablafromg(&rebuilt, p, tol, natural),
    ] {
        out.push(tagged(r, "rebuilt"));
    }
    out
}

fn normal_bundle(m: &Manifold, fields: &[NormalFieldSpec], p: &[Vec<C64>], tol: f64) -> Vec<Report> {
    let nb = match NormalBundle::compile(m, fields) {
        Ok(nb) => nb,
        Err(e) => return vec![Report::errored("normal bundle", tol, &e)],
    };
    let mut out =
        vec![hamops::check_quadratic_expansion(m, &nb, p, tol), hamops::check_sym_condition(m, &nb, p, tol), hamops::check_flat_fields(m, &nb, p, tol)];
    out.extend(hamops::check_gmc(m, &nb, p, tol));
    let mut emit = Check::new("operator emission", tol);
    for u in p {
        emit.absorb(hamops::emit_operator(m, &nb, u).map(|_| (0.0, 0.0)));
    }
    out.push(emit.finish());
    if nb.len() > 1 {
        out.push(hamops::check_field_rank(&nb, p, m.n() - 1, 1e-9));
    }
    if m.spec.connection.is_some() && m.is_canonical() {
        out.extend(conn::check_dual_structure(m, p, tol, natural));
    }
    out
}

fn legendre_suite(e: &CatalogEntry, m: &Manifold, p: &[Vec<C64>], o: &SuiteOptions) -> Vec<Report> {
    let mut out = Vec::new();
    let tol = o.tol;
    for (name, comps) in &e.legendre_fields {
        let f = match ExprField::compile(m, name, comps) {
            Ok(f) => f,
            Err(err) => {
                out.push(Report::errored(&format!("field {name}"), tol, &err));
                continue;
            }
        };
        let flat = legendre::check_flat_field(m, ConnKind::Natural, &f, p, tol);
        let broken = e.broken_fields.contains(name);
        out.push(tagged(flat, name).expecting(if broken { Expect::Fail } else { Expect::Pass }));
        if broken {
            continue;
        }
        out.push(tagged(legendre::check_legendre_field(m, ConnKind::Natural, &f, p, tol), name));
        out.extend(legendre::check_transform_metric(m, &f, p, tol).into_iter().map(|r| tagged(r, name)));
        if let Some(target) = e.legendre_targets.get(name) {
            out.push(match_target(m, &f, target, p, o));
            if e.has(Flag::Semisimple) {
                if let Ok(t) = LegendreTransformed::new(m, &f, p) {
                    out.push(tagged(legendre::check_combescure(m, &t, p, tol), name));
                }
            }
        }
        if e.has(Flag::Homogeneous) {
            out.push(tagged(legendre::check_homogeneous_legendre(m, &f, p, tol), name));
        }
    }
    for name in &e.function_fields {
        let r = match name.as_str() {
            "X2-legendre-P" => legendre::check_flat_field(m, ConnKind::Natural, &legendre::PencilLegendreField, p, tol),
            _ => Report::errored("field", tol, &Error::MissingCompanionData(format!("{}: field {name}", e.spec.name))),
        };
        out.push(tagged(r, name));
    }
    out
}

/// Transforms by `f` match the metric of catalog entry `target` up to one
/// constant; residual tolerance `1e-7`.
pub fn match_target(m: &Manifold, f: &ExprField, target: &str, p: &[Vec<C64>], o: &SuiteOptions) -> Report {
    let name = format!("{} by {} matches {target}", m.name(), f.name);
    let res = (|| -> Result<Report> {
        let t = LegendreTransformed::new(m, f, p)?;
        let spec = entry(target)?.spec;
        let mut params = o.params.clone();
        params.retain(|k, _| spec.params.contains_key(k));
        let other = Manifold::compile_with(&spec, &params)?;
        let r = legendre::check_metric_match(&t, &other, p, 1e-7);
        Ok(Report { name: name.clone(), ..r })
    })();
    res.unwrap_or_else(|err| Report::errored(&name, 1e-7, &err))
}

fn control(r: Report, name: &str) -> Report {
    Report { name: format!("control: {name}"), ..r }.expecting(Expect::Fail)
}

fn lob() -> (Manifold, Vec<Vec<C64>>) {
    let m = Manifold::compile(&super::lobachevsky()).expect("catalog spec compiles");
    let p = sample_points(&m, SamplePlan::new(7, 10)).expect("region is nonempty");
    (m, p)
}

fn compiled(s: &mf::ManifoldSpec, seed: u64, k: usize) -> Result<(Manifold, Vec<Vec<C64>>)> {
    let m = Manifold::compile(s)?;
    let p = sample_points(&m, SamplePlan::new(seed, k))?;
    Ok((m, p))
}

/// The documented corruptions, each run through the check it targets. Every
/// report expects failure.
pub fn negative_controls(tol: f64) -> Vec<Report> {
    let mut out = Vec::new();
    let (lm, lp) = lob();

    // product with c¹₂₂ += x
    let mut s = super::lobachevsky();
    let mut t = vec![vec![vec!["0".to_string(); 2]; 2]; 2];
    t[0][0][0] = "1".into();
    t[1][1][1] = "1".into();
    t[0][1][1] = "x".into();
    s.product = ProductSpec::Explicit(t);
    out.push(run(&s, "corrupted product", |m, p| mf::check_hertling_manin(m, p, tol)));

    let mut s = super::lobachevsky();
    s.g.as_mut().unwrap()[0][0] = "2/(x - y)^2 + x".into();
    out.push(run(&s, "metric plus diag(x, 0)", |m, p| mf::check_killing_unit(m, p, tol)));

    out.push(control(conn::check_flatness("Levi-Civita connection is flat", &lm, &lp, tol, conn::levi_civita), "Lobachevsky Levi-Civita"));

    // Γ with an extra Γ¹₁₁ = 1 no longer keeps e flat
    let mut s = super::lobachevsky();
    let mut g = vec![vec![vec!["0".to_string(); 2]; 2]; 2];
    g[0][0][0] = "1".into();
    s.connection = Some(g);
    out.push(run(&s, "corrupted connection", |m, p| conn::check_nabla_e(m, p, tol, explicit)));

    // a generic diagonal metric in dimension 3 against the canonical product
    let mut s = super::lauricella(3);
    s.connection = None;
    s.g = Some(super::diag(&["exp(u1*u2)".into(), "1 + u3^2".into(), "1 + u1^2*u2".into()]));
    out.push(run(&s, "random curvature", |m, p| conn::check_curvature_product_condition(m, p, tol, CyclicVariant::Primal, conn::levi_civita)));

    // β of a non-homogeneous metric: ED3 fails
    let mut s = super::q0(-1);
    s.lame = None;
    s.g = Some(super::diag(&["(1/D)^2*exp(u1 + u2 + u3)".into(), "(1/((a + b)*D))^2".into(), "(a/(s*(a + b)*D))^2".into()]));
    out.push(run(&s, "non-homogeneous metric", |m, p| rotation::check_darboux_system(m, p, tol)));

    let mut s = pencil::semisimple_pencil_from_f("unrelated", &["1".to_string(), "1".to_string()]);
    s.g = Some(vec![vec!["1".into(), "0".into()], vec!["0".into(), "1".into()]]);
    s.g2 = Some(vec![vec!["1 + 4*u1^2".into(), "2*u1".into()], vec!["2*u1".into(), "1".into()]]);
    out.push(run(&s, "unrelated flat metrics", |m, p| pencil::check_flat_pencil(m, p, &DEFAULT_LAMBDAS, tol)));

    let mut s = super::af_pencil(3);
    for (i, row) in s.g2.as_mut().unwrap().iter_mut().enumerate() {
        row[i] = format!("({})*(1 + u{}^2)", row[i], i + 1);
    }
    out.push(run(&s, "non-homogeneous pencil", |m, p| pencil::check_pencil_homogeneity(m, p, tol)));

    let mut s = super::af_pencil(3);
    for (i, row) in s.g2.as_mut().unwrap().iter_mut().enumerate() {
        row[i] = format!("2*({})", row[i]);
    }
    out.push(run(&s, "second metric doubled", |m, p| pencil::check_exactness(m, p, tol)));

    // ε flipped in the Lobachevsky expansion
    let flipped = [NormalFieldSpec { epsilon: 1.0, x: vec!["1".into(), "1".into()] }];
    out.push(control(
        NormalBundle::compile(&lm, &flipped).map(|nb| hamops::check_gmc(&lm, &nb, &lp, tol).remove(0)).unwrap_or_else(|e| Report::errored("GMC0", tol, &e)),
        "flipped sign",
    ));

    let res = (|| -> Result<Vec<Report>> {
        let (m, p) = compiled(&super::q0(-1), 11, 10)?;
        let printed = ExprField::compile(&m, "X3-printed", &super::q0_flat_field("X3-printed").unwrap())?;
        let x2 = ExprField::compile(&m, "X2", &super::q0_flat_field("X2").unwrap())?;
        // e + X2 is flat, but e and X2 scale with different exponents
        let x2s = super::q0_flat_field("X2").unwrap();
        let mixed: Vec<String> = x2s.iter().map(|x| format!("1 + {x}")).collect();
        let mixed = ExprField::compile(&m, "e+X2", &mixed)?;
        Ok(vec![
            control(legendre::check_flat_field(&m, ConnKind::Natural, &printed, &p, tol), "X3 as printed"),
            control(match_target(&m, &x2, "q0-d-minus1", &p, &SuiteOptions::default()), "X2 aimed at q0-d-minus1"),
            control(legendre::check_homogeneous_legendre(&m, &mixed, &p, tol), "non-homogeneous field"),
        ])
    })();
    match res {
        Ok(rs) => out.extend(rs),
        Err(e) => out.push(control(Report::errored("q0 controls", tol, &e), "q0 family")),
    }

    out.push(control(pencil_printed_residual(tol), "quoted exact-pencil F"));
    out
}

fn run(s: &mf::ManifoldSpec, name: &str, f: impl Fn(&Manifold, &[Vec<C64>]) -> Report) -> Report {
    match compiled(s, 7, 10) {
        Ok((m, p)) => control(f(&m, &p), name),
        Err(e) => control(Report::errored(name, 0.0, &e), name),
    }
}

/// The quoted closed form of the exact-pencil `F_ij` against the ODE.
fn pencil_printed_residual(tol: f64) -> Report {
    use crate::ode3d::{rhs_oracle_residual, ClosedForm};
    let mut chk = Check::new("ODE right-hand side of closed form", tol);
    for k in 0..10 {
        let z = -0.5 - 0.3 * k as f64;
        chk.absorb(rhs_oracle_residual(&ClosedForm::PencilPrinted, z, 1e-5));
    }
    chk.finish()
}
