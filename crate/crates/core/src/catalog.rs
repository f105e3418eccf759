//! Built-in examples, transcribed into [`ManifoldSpec`]s, with their
//! flat charts, potentials and check suites.

mod charts;
mod entry;
mod suite;

pub use charts::{verify_flat_coordinates, verify_vector_potential, FlatChart};
pub use entry::{entry, names, CatalogEntry, Flag};
pub use suite::{match_target, negative_controls, run_checks, run_suite, SuiteOptions, CHECK_IDS};

use std::collections::BTreeMap;

use crate::manifold::{Constraint, ConstraintKind, ManifoldSpec, ProductSpec, Region};

fn s(x: &str) -> String {
    x.to_string()
}

fn diag(entries: &[String]) -> Vec<Vec<String>> {
    let n = entries.len();
    (0..n).map(|i| (0..n).map(|j| if i == j { entries[i].clone() } else { s("0") }).collect()).collect()
}

fn coords(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

fn blank(name: &str, coords: Vec<String>, product: ProductSpec) -> ManifoldSpec {
    let n = coords.len();
    ManifoldSpec {
        name: s(name),
        n,
        coords,
        defs: BTreeMap::new(),
        product,
        e: vec![s("1"); n],
        euler: None,
        g: None,
        g2: None,
        connection: None,
        lame: None,
        params: BTreeMap::new(),
        region: Region::default(),
        expected: Default::default(),
    }
}

/// The hyperbolic half-plane `g = 2/(x−y)²(dx² + dy²)` in canonical coordinates.
pub fn lobachevsky() -> ManifoldSpec {
    let mut m = blank("lobachevsky", vec![s("x"), s("y")], ProductSpec::Canonical);
    m.g = Some(diag(&[s("2/(x - y)^2"), s("2/(x - y)^2")]));
    m.region = Region {
        bounds: vec![[0.5, 4.0], [-2.0, 2.0]],
        min_separation: None,
        constraints: vec![Constraint { expr: s("x - y"), kind: ConstraintKind::Positive, min: 0.1 }],
    };
    m
}

/// Lauricella structure with all `ε_i = −1`: `g_ii = c_i ∏_{l≠i}(u^l − u^i)²`,
/// together with the explicit Lauricella connection and `E = Σ u^k∂_k`.
pub fn lauricella(n: usize) -> ManifoldSpec {
    let u = coords(n);
    let mut m = blank(&format!("lauricella-eps-minus1-n{n}"), u.clone(), ProductSpec::Canonical);
    let metric: Vec<String> = (0..n)
        .map(|i| {
            let p: Vec<String> = (0..n).filter(|&l| l != i).map(|l| format!("({} - {})^2", u[l], u[i])).collect();
            format!("c{}*{}", i + 1, p.join("*"))
        })
        .collect();
    m.g = Some(diag(&metric));
    m.euler = Some(u.clone());
    // Γ^i_{ij} = ε_j/(u^i − u^j) with ε_j = −1
    let conn = canonical_connection(n, &|i, j| format!("(-1)/({} - {})", u[i], u[j]));
    m.connection = Some(conn);
    m.params = (1..=n).map(|i| (format!("c{i}"), 1.0)).collect();
    m.region = Region { bounds: vec![[0.0, 4.0]; n], min_separation: Some(0.3), constraints: Vec::new() };
    m
}

fn q0_base(name: &str) -> ManifoldSpec {
    let mut m = blank(name, coords(3), ProductSpec::Canonical);
    m.defs.insert(s("s"), s("sqrt(-b^2 - 1)"));
    m.defs.insert(s("D"), s("(a + b)*u1 - a*u3 - b*u2"));
    m.euler = Some(coords(3));
    m.params = [(s("a"), 1.0), (s("b"), 1.0)].into_iter().collect();
    m.region = Region {
        bounds: vec![[0.0, 3.0]; 3],
        min_separation: Some(0.2),
        constraints: vec![Constraint { expr: s("D"), kind: ConstraintKind::Nonzero, min: 0.2 }],
    };
    m
}

/// Lamé triples of the potential (`q = 0`) family for `d = −1, 0, 1`.
pub fn q0_lame(d: i32) -> [&'static str; 3] {
    match d {
        -1 => ["1/D", "-1/((a + b)*D)", "-a/(s*(a + b)*D)"],
        0 => ["(u2 - u3)/D", "(u3 - u1)/(D*b)", "(u1 - u2)/(D*s)"],
        1 => [
            "-((a + b)*u1^2 - 2*(a*u3 + b*u2)*u1 + a*u3^2 + b*u2^2)/D",
            "-((a + b)*u1^2 - 2*u2*(a + b)*u1 + (2*u2*u3 - u3^2)*a + b*u2^2)/(D*(a + b))",
            "-((a + b)*u1^2 - 2*u3*(a + b)*u1 + a*u3^2 - b*u2*(u2 - 2*u3))*a/(s*D*(a + b))",
        ],
        _ => panic!("the q = 0 family has d ∈ {{-1, 0, 1}}"),
    }
}

/// Diagonal metric `g_ii = H_i²` of the `q = 0` family with the given `d`.
pub fn q0(d: i32) -> ManifoldSpec {
    let name = match d {
        -1 => "q0-d-minus1",
        0 => "q0-d0",
        _ => "q0-d1",
    };
    let mut m = q0_base(name);
    let h = q0_lame(d);
    m.g = Some(diag(&h.iter().map(|x| format!("({x})^2")).collect::<Vec<_>>()));
    m.lame = Some(h.iter().map(|x| s(x)).collect());
    m.expected.d = Some(d as f64);
    m.expected.big_d = Some(2.0 * d as f64 + 2.0);
    m.expected.i1 = Some(-1.0);
    m.expected.i2 = Some(0.0);
    m.expected.eigenvalues = Some(vec![-1.0, 0.0, 1.0]);
    m
}

/// Flat vector fields of the natural connection of [`q0`]`(-1)`.
pub fn q0_flat_field(which: &str) -> Option<[&'static str; 3]> {
    Some(match which {
        "e" => ["1", "1", "1"],
        "X2" => ["u2 - u3", "(a + b)/b*(u1 - u3)", "(a + b)/a*(u2 - u1)"],
        "X3" => [
            "-(a + b)*u1^2 + 2*(a*u3 + b*u2)*u1 - a*u3^2 - b*u2^2",
            "(a + b)*u1^2 - 2*(a + b)*u1*u2 + a*u3*(2*u2 - u3) + b*u2^2",
            "(a + b)*u1^2 - 2*u3*(a + b)*u1 + a*u3^2 - b*u2*(u2 - 2*u3)",
        ],
        // the first component as displayed, with the sign of the middle term flipped
        "X3-printed" => [
            "-(a + b)*u1^2 - 2*(a*u3 + b*u2)*u1 - a*u3^2 - b*u2^2",
            "(a + b)*u1^2 - 2*(a + b)*u1*u2 + a*u3*(2*u2 - u3) + b*u2^2",
            "(a + b)*u1^2 - 2*u3*(a + b)*u1 + a*u3^2 - b*u2*(u2 - 2*u3)",
        ],
        _ => return None,
    })
}

/// Christoffel symbols of the natural connection of [`q0`]`(-1)` as
/// displayed, completed by `Γ^i_{jj} = −Γ^i_{ij}`, `Γ^i_{ii} = −Σ_{j≠i} Γ^i_{ij}`.
pub fn q0_connection() -> Vec<Vec<Vec<String>>> {
    let den = "(a*u1 - a*u3 + b*u1 - b*u2)";
    let mixed = |i: usize, j: usize| -> String {
        let num = match (i.min(j), i.max(j), i < j) {
            (0, 1, true) => "b",
            (0, 1, false) => "-(a + b)",
            (0, 2, true) => "a",
            (0, 2, false) => "-(a + b)",
            (1, 2, true) => "a",
            (1, 2, false) => "b",
            _ => unreachable!(),
        };
        format!("({num})/{den}")
    };
    canonical_connection(3, &mixed)
}

/// Fills a connection in canonical coordinates from `Γ^i_{ij}` (`i ≠ j`)
/// using `Γ^i_{jj} = −Γ^i_{ij}`, `Γ^i_{ii} = −Σ_{j≠i} Γ^i_{ij}`, and zero
/// for three distinct indices.
pub fn canonical_connection(n: usize, mixed: &dyn Fn(usize, usize) -> String) -> Vec<Vec<Vec<String>>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            if i == j && j == k {
                                let t: Vec<String> = (0..n).filter(|&l| l != i).map(|l| mixed(i, l)).collect();
                                format!("-({})", t.join(" + "))
                            } else if i == j {
                                mixed(i, k)
                            } else if i == k {
                                mixed(i, j)
                            } else if j == k {
                                format!("-{}", mixed(i, j))
                            } else {
                                s("0")
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// The pencil `g₁_ii = ∏_{k≠i}(u^k − u^i)`, `g₂_ii = g₁_ii/u^i` in canonical coordinates.
pub fn af_pencil(n: usize) -> ManifoldSpec {
    let f: Vec<String> = (1..=n)
        .map(|i| {
            let p: Vec<String> = (1..=n).filter(|&k| k != i).map(|k| format!("(u{k} - u{i})")).collect();
            format!("1/({})", p.join("*"))
        })
        .collect();
    let mut m = crate::pencil::semisimple_pencil_from_f(&format!("af-pencil-n{n}"), &f);
    m.expected.pencil_d = Some(1.0 - n as f64);
    m
}

/// The three-dimensional exact pencil with its `d = 1` Lamé triple and
/// the flat structure `Γ^i_{ij} = 1/(2(u^j − u^i))`.
pub fn pencil63() -> ManifoldSpec {
    let mut m = af_pencil(3);
    m.name = s("pencil-63");
    m.lame = Some(vec![s("sqrt(u3 - u1)*sqrt(u2 - u1)"), s("-sqrt(u1 - u2)*sqrt(u3 - u2)"), s("sqrt(u2 - u3)*sqrt(u1 - u3)")]);
    m.connection = Some(canonical_connection(3, &|i, j| format!("1/(2*(u{} - u{}))", j + 1, i + 1)));
    m.expected.d = Some(1.0);
    m.expected.i1 = Some(0.75);
    m.expected.i2 = Some(0.25);
    m.expected.eigenvalues = Some(vec![-0.5, -0.5, 1.0]);
    m
}

fn zeros(n: usize) -> Vec<Vec<Vec<String>>> {
    vec![vec![vec![s("0"); n]; n]; n]
}

fn polys(m: &mut ManifoldSpec) {
    m.defs.insert(s("Fy"), s("f0 + f1*y + f2*y^2"));
    m.defs.insert(s("dFy"), s("f1 + 2*f2*y"));
    m.defs.insert(s("Gy"), s("g0 + g1*y + g2*y^2"));
    for k in ["f0", "f1", "f2", "g0", "g1", "g2"] {
        m.params.insert(s(k), 0.0);
    }
}

/// Flat structure in David-Hertling coordinates `(x, y)`: `c^k_{ij} = δ^k_{i+j−1}`,
/// `e = ∂_x`, `E = x∂_x + y∂_y`, `Γ¹₂₂ = b/y`, `Γ²₂₂ = a/y`. No metric.
pub fn dh2(name: &str, a: f64, b: f64) -> ManifoldSpec {
    let mut m = blank(name, vec![s("x"), s("y")], ProductSpec::ShiftedCanonical);
    m.e = vec![s("1"), s("0")];
    m.euler = Some(vec![s("x"), s("y")]);
    let mut conn = zeros(2);
    conn[0][1][1] = s("b/y");
    conn[1][1][1] = s("a/y");
    m.connection = Some(conn);
    m.params = [(s("a"), a), (s("b"), b)].into_iter().collect();
    m.region = Region { bounds: vec![[-2.0, 2.0], [0.5, 3.0]], min_separation: None, constraints: Vec::new() };
    m
}

/// [`dh2`] with `b = 0` and its metric `[[f(y), cy^a], [cy^a, 0]]`, `f` quadratic.
pub fn nonss2d() -> ManifoldSpec {
    let mut m = dh2("nonss2d", 1.0, 0.0);
    m.params.insert(s("c"), 1.0);
    polys(&mut m);
    m.g = Some(vec![vec![s("Fy"), s("c*y^a")], vec![s("c*y^a"), s("0")]]);
    m.expected.big_d = Some(3.0);
    m
}

/// The three-dimensional non-semisimple family with its invariant metrics;
/// `F`, `G` are quadratic polynomials with coefficients `f0..f2`, `g0..g2`.
pub fn nonss3d() -> ManifoldSpec {
    let mut m = blank("nonss3d", vec![s("x"), s("y"), s("z")], ProductSpec::ShiftedCanonical);
    m.e = vec![s("1"), s("0"), s("0")];
    m.euler = Some(vec![s("x"), s("y"), s("z")]);
    let mut conn = zeros(3);
    conn[2][1][2] = s("a/y");
    conn[2][2][1] = s("a/y");
    conn[2][1][1] = s("((a*b + 2*b)*y - 2*a*z)/(a + 2)/y^2");
    conn[1][1][1] = s("a*(a + 1)/(a + 2)/y");
    m.connection = Some(conn);
    m.params = [(s("a"), 1.0), (s("b"), 1.0), (s("c"), 1.0)].into_iter().collect();
    polys(&mut m);
    m.defs.insert(s("p0"), s("4/3*(a^2 - 3)/(a + 2)"));
    m.defs.insert(s("p1"), s("1/3*(4*a^2 + 3*a - 6)/(a + 2)"));
    m.defs.insert(s("p2"), s("2/3*(2*a + 3)*a/(a + 2)"));
    let g11 = "2*dFy*y*z + Gy*y + 2/9*(a^2*(a^2 + 3*a + 3)/(a + 2)^2)*c*y^p0*z^2 - 2*(b*c*y^p1 + (a^2 - 2)/(a + 2)*Fy)*z";
    let g12 = "2/3*(a*(a + 3)/(a + 2))*c*y^p1*z + y*Fy";
    let g13 = "c*y^p2";
    m.g = Some(vec![vec![s(g11), s(g12), s(g13)], vec![s(g12), s(g13), s("0")], vec![s(g13), s("0"), s("0")]]);
    m.region = Region { bounds: vec![[-2.0, 2.0], [0.5, 3.0], [-2.0, 2.0]], min_separation: None, constraints: Vec::new() };
    // ℒ_E g = (p2 + 2)g when F = G = 0; at a = 1, p2 = 10/9
    m.expected.big_d = Some(28.0 / 9.0);
    m
}

/// Parameter `a` of the Appendix cases I..V (case I is generic).
pub const APPENDIX_A: [f64; 5] = [3.0, -2.0, -1.0, 0.0, 1.0];

/// The flat structure [`dh2`] at the `a` of Appendix case `k` (1-based), `b = 1`.
pub fn appendix_case(k: usize) -> ManifoldSpec {
    assert!((1..=5).contains(&k), "Appendix cases are numbered 1..5");
    let mut m = dh2(&format!("appendix-case-{k}"), APPENDIX_A[k - 1], 1.0);
    if k == 2 {
        // v = −1/y and ln v need y < 0
        m.region.bounds[1] = [-3.0, -0.5];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::ConnKind;
    use crate::manifold::{sample_points, Manifold, SamplePlan};
    use crate::report::discrepancy;
    use crate::rotation::{check_lame_system, check_v_eigenvalues};
    use crate::C64;

    fn compile(s: &ManifoldSpec) -> Manifold {
        Manifold::compile(s).unwrap()
    }

    fn pts(m: &Manifold, k: usize) -> Vec<Vec<C64>> {
        sample_points(m, SamplePlan::new(5, k)).unwrap()
    }

    fn natural_matches_explicit(m: &Manifold, tol: f64) {
        for u in pts(m, 8) {
            let pf = m.fields(&u).unwrap();
            let a = ConnKind::Natural.build(&pf).unwrap().values();
            let b = ConnKind::Explicit.build(&pf).unwrap().values();
            let (d, s) = discrepancy(a.data(), b.data());
            assert!(d / (1.0 + s) < tol, "{} at {u:?}: {d}", m.name());
        }
    }

    #[test]
    fn q0_displayed_connection_is_natural() {
        let mut s = q0(-1);
        s.connection = Some(q0_connection());
        natural_matches_explicit(&compile(&s), 1e-10);
    }

    #[test]
    fn pencil63_connection_is_natural() {
        natural_matches_explicit(&compile(&pencil63()), 1e-10);
    }

    #[test]
    fn q0_lame_triples() {
        for d in [-1, 0, 1] {
            let m = compile(&q0(d));
            let p = pts(&m, 10);
            let r = check_lame_system(&m, &m, &p, Some(d as f64), 1e-8);
            assert!(r.pass, "{}", r.line());
            let v = check_v_eigenvalues(&m, &p, &[-1.0, 0.0, 1.0], 1e-8);
            assert!(v.pass, "{}", v.line());
        }
    }

    #[test]
    fn pencil63_lame_triple() {
        let m = compile(&pencil63());
        let p = pts(&m, 10);
        let r = check_lame_system(&m, &m, &p, Some(1.0), 1e-8);
        assert!(r.pass, "{}", r.line());
    }

    #[test]
    fn unknown_entry_is_an_error() {
        assert_eq!(entry("hyperbolic").unwrap_err(), crate::error::Error::UnknownEntry("hyperbolic".into()));
        assert!(entry("appendix-case-6").is_err());
        for n in names() {
            assert_eq!(entry(n).unwrap().spec.name, *n);
        }
    }

    #[test]
    fn nonss3d_metric_at_reference_point() {
        let m = compile(&nonss3d());
        let u = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let g = m.fields(&u).unwrap().g.unwrap();
        // a = 1, b = 1, c = 1, F = G = 0: g11 = (2/9)(7/9)z² − 2z, g12 = (8/9)z, g13 = 1
        assert!((g[[0, 0]].val.re - (14.0 / 81.0 - 2.0)).abs() < 1e-14);
        assert!((g[[0, 1]].val.re - 8.0 / 9.0).abs() < 1e-14);
        assert!((g[[0, 2]].val.re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lobachevsky_chart_and_potential() {
        let m = compile(&lobachevsky());
        let p = pts(&m, 10);
        let chart = FlatChart::lobachevsky();
        assert!(verify_flat_coordinates(&m, &chart, &p, 1e-8).pass);
        let r = verify_vector_potential(&m, &chart, &p, 1e-10);
        assert!(r.pass, "{}", r.line());
        // the canonical chart itself is not flat for the natural connection
        let ident = FlatChart { coords: vec![s("p"), s("q")], map: vec![s("x"), s("y")], e: None, euler: None, potential: None };
        assert!(!verify_flat_coordinates(&m, &ident, &p, 1e-8).pass);
        let r = verify_vector_potential(&m, &ident, &p, 1e-8);
        assert!(r.error.unwrap().contains("no companion data"));
    }

    #[test]
    fn identity_chart_on_flat_spec() {
        let m = compile(&appendix_case(1));
        let mut s2 = appendix_case(1);
        s2.connection = Some(zeros(2));
        let flat = compile(&s2);
        let ident = FlatChart { coords: vec![s("p"), s("q")], map: vec![s("x"), s("y")], e: None, euler: None, potential: None };
        let p = pts(&m, 5);
        let r = verify_flat_coordinates(&flat, &ident, &p, 1e-12);
        assert!(r.pass && r.max_residual == 0.0);
        assert!(!verify_flat_coordinates(&m, &ident, &p, 1e-8).pass);
    }

    #[test]
    fn singular_chart_is_reported() {
        let m = compile(&lobachevsky());
        let bad = FlatChart { coords: vec![s("p"), s("q")], map: vec![s("x + y"), s("2*x + 2*y")], e: None, euler: None, potential: None };
        let r = verify_flat_coordinates(&m, &bad, &pts(&m, 2), 1e-8);
        assert!(r.error.unwrap().contains("Jacobian"));
    }

    #[test]
    fn appendix_cases_verify() {
        for k in 1..=5 {
            let m = compile(&appendix_case(k));
            let p = pts(&m, 20);
            let chart = FlatChart::appendix(k);
            let f = verify_flat_coordinates(&m, &chart, &p, 1e-8);
            let v = verify_vector_potential(&m, &chart, &p, 1e-8);
            assert!(f.pass && v.pass, "case {k}: {} / {}", f.line(), v.line());
        }
    }

    #[test]
    fn case_three_euler_field_is_checked() {
        let m = compile(&appendix_case(3));
        let mut chart = FlatChart::appendix(3);
        chart.euler = Some(vec![s("u"), s("v")]);
        let r = verify_vector_potential(&m, &chart, &pts(&m, 5), 1e-8);
        assert!(!r.pass);
        assert!(r.meta["euler"].as_f64().unwrap() > 0.1);
        assert!(r.meta["product_vs_hessian"].as_f64().unwrap() < 1e-12);
    }

    #[test]
    fn suites_match_their_flags() {
        let o = SuiteOptions { points: 8, ..Default::default() };
        for n in ["lobachevsky", "lauricella-eps-minus1-n3", "nonss2d", "appendix-case-2"] {
            let b = run_suite(&entry(n).unwrap(), &o);
            assert!(b.all_as_expected(), "{n}:\n{}", b.to_markdown());
        }
        let b = run_suite(&entry("lauricella-eps-minus1-n3").unwrap(), &o);
        let ed4 = b.reports.iter().find(|r| r.name.contains("ED4")).unwrap();
        assert!(!ed4.pass);
    }

    #[test]
    fn at_least_six_rfk_entries() {
        assert!(names().iter().filter(|n| entry(n).unwrap().is_rfk()).count() >= 6);
    }

    #[test]
    fn controls_all_fail() {
        let rs = negative_controls(1e-8);
        assert!(rs.len() >= 10);
        for r in rs {
            assert!(!r.pass && r.as_expected(), "{}", r.line());
        }
    }

    #[test]
    fn entry_round_trips_through_json() {
        let e = entry("q0-d-minus1").unwrap();
        let back: CatalogEntry = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(back, e);
    }
}
