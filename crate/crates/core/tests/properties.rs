//! Randomized invariants of the jet arithmetic, the tensor layer and the
//! geometric checks.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;

use fmanifold::catalog::{self, entry, run_checks, run_suite, Flag, SuiteOptions};
use fmanifold::connection::{self as conn, ConnKind};
use fmanifold::exprjet::fd::finite_diff_oracle;
use fmanifold::exprjet::{eval, eval_jet, parse, Dual, Jet2, Params};
use fmanifold::hamops::{self, normal_bundle_at, NormalBundle, NormalFieldSpec};
use fmanifold::legendre::{check_combescure, ExprField, LegendreTransformed};
use fmanifold::manifold::{hertling_manin_at, sample_points, Manifold, SamplePlan};
use fmanifold::ode3d::{integral_drift_rate, rhs, OdeState3};
use fmanifold::report::discrepancy;
use fmanifold::scalar::csqrt;
use fmanifold::tensor::{lie_derivative, Down, Tensor, Up, Variance};
use fmanifold::{Dual64, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn compile(name: &str) -> Manifold {
    Manifold::compile(&entry(name).unwrap().spec).unwrap()
}

fn points(m: &Manifold, seed: u64, k: usize) -> Vec<Vec<C64>> {
    sample_points(m, SamplePlan::new(seed, k)).unwrap()
}

fn cx(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_dual(rng: &mut ChaCha8Rng, n: usize) -> Dual64 {
    let mut d = Dual::constant(cx(rng), n);
    for k in 0..n {
        d.grad[k] = cx(rng);
    }
    d
}

fn random_tensor(rng: &mut ChaCha8Rng, n: usize, sig: &[Variance]) -> Tensor<C64> {
    Tensor::from_fn(n, sig, |_| cx(rng))
}

fn complex() -> impl Strategy<Value = C64> {
    (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn rfk_entries() -> Vec<catalog::CatalogEntry> {
    catalog::names().iter().map(|n| entry(n).unwrap()).filter(|e| e.is_rfk()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn principal_sqrt_squares_back(z in complex()) {
        let r = csqrt(z);
        prop_assert!((r * r - z).norm() <= 1e-12 * (1.0 + z.norm()));
        prop_assert!(r.re >= 0.0);
    }

    #[test]
    fn polynomial_jets_are_exact(
        coef in prop::collection::vec(-3.0..3.0f64, 10),
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
    ) {
        // Σ c_{ij} x^i y^j over i + j ≤ 3
        let mono: Vec<(i32, i32)> = (0..4).flat_map(|i| (0..4 - i).map(move |j| (i, j))).collect();
        let src = mono.iter().zip(&coef).map(|((i, j), c)| format!("({c})*x^{i}*y^{j}")).collect::<Vec<_>>().join(" + ");
        let e = parse(&src).unwrap();
        let jet = eval_jet(&e, &[C64::new(x, 0.0), C64::new(y, 0.0)], &Params::new()).unwrap();
        let pw = |b: f64, k: i32| if k < 0 { 0.0 } else { b.powi(k) };
        let (mut v, mut gx, mut gy, mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (&(i, j), c) in mono.iter().zip(&coef) {
            let (fi, fj) = (i as f64, j as f64);
            v += c * pw(x, i) * pw(y, j);
            gx += c * fi * pw(x, i - 1) * pw(y, j);
            gy += c * fj * pw(x, i) * pw(y, j - 1);
            hxx += c * fi * (fi - 1.0) * pw(x, i - 2) * pw(y, j);
            hxy += c * fi * fj * pw(x, i - 1) * pw(y, j - 1);
            hyy += c * fj * (fj - 1.0) * pw(x, i) * pw(y, j - 2);
        }
        let h = jet.hessian();
        let got = [jet.val, jet.grad[0], jet.grad[1], h[0][0], h[0][1], h[1][0], h[1][1]];
        let want = [v, gx, gy, hxx, hxy, hxy, hyy];
        for (g, w) in got.iter().zip(want) {
            prop_assert!((g - w).norm() <= 1e-12 * (1.0 + w.abs()), "{g} vs {w} in {src}");
        }
    }

    #[test]
    fn contraction_is_bilinear(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = random_tensor(&mut rng, n, &[Up, Down]);
        let a2 = random_tensor(&mut rng, n, &[Up, Down]);
        let b1 = random_tensor(&mut rng, n, &[Up, Down, Down]);
        let b2 = random_tensor(&mut rng, n, &[Up, Down, Down]);
        let (s, t) = (cx(&mut rng), cx(&mut rng));
        let lhs = a1.scale(s).add(&a2.scale(t)).contract(1, &b1, 0).unwrap();
        let rhs = a1.contract(1, &b1, 0).unwrap().scale(s).add(&a2.contract(1, &b1, 0).unwrap().scale(t));
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
        let lhs = a1.contract(1, &b1.scale(s).add(&b2.scale(t)), 0).unwrap();
        let rhs = a1.contract(1, &b1, 0).unwrap().scale(s).add(&a1.contract(1, &b2, 0).unwrap().scale(t));
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
    }

    #[test]
    fn lie_derivative_obeys_leibniz(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Tensor<Dual64> = Tensor::from_fn(n, &[Down, Down], |_| random_dual(&mut rng, n));
        let y: Tensor<Dual64> = Tensor::from_fn(n, &[Up], |_| random_dual(&mut rng, n));
        let x: Vec<Dual64> = (0..n).map(|_| random_dual(&mut rng, n)).collect();
        // ℒ_X(g(Y, ·)) = (ℒ_X g)(Y, ·) + g(ℒ_X Y, ·)
        let lhs = lie_derivative(&g.contract(0, &y, 0).unwrap(), &x);
        let lg = lie_derivative(&g, &x);
        let ly = lie_derivative(&y, &x);
        let rhs = lg.contract(0, &y.values(), 0).unwrap().add(&g.values().contract(0, &ly, 0).unwrap());
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
    }

    #[test]
    fn hertling_manin_residual_ignores_coordinate_order(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c: Tensor<Dual64> = Tensor::zeros(n, &[Up, Down, Down], n);
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let d = random_dual(&mut rng, n);
                    c.set(&[i, j, k], d);
                    c.set(&[i, k, j], d);
                }
            }
        }
        let mut sigma: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            sigma.swap(i, rng.gen_range(0..=i));
        }
        let permuted = Tensor::from_fn(n, &[Up, Down, Down], |x| {
            let d = c.get(&[sigma[x[0]], sigma[x[1]], sigma[x[2]]]);
            let mut p = Dual::constant(d.val, n);
            for m in 0..n {
                p.grad[m] = d.grad[sigma[m]];
            }
            p
        });
        let (a, sa) = hertling_manin_at(&c);
        let (b, sb) = hertling_manin_at(&permuted);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        prop_assert!((sa - sb).abs() <= 1e-12 * (1.0 + sa));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn jets_match_finite_differences(seed in any::<u64>()) {
        for name in catalog::names() {
            let m = compile(name);
            for u in points(&m, seed, 5) {
                let vars = Jet2::point(&u);
                for (label, e) in m.expressions() {
                    let jet = eval(e, &vars, &m.params).unwrap();
                    // one Richardson step removes the O(h²) truncation near the poles
                    let (g1, h1) = finite_diff_oracle(e, &u, &m.params, 2e-4).unwrap();
                    let (g2, h2) = finite_diff_oracle(e, &u, &m.params, 1e-4).unwrap();
                    let rich = |a: C64, b: C64| (b * 4.0 - a) / 3.0;
                    let g: Vec<C64> = g1.iter().zip(&g2).map(|(a, b)| rich(*a, *b)).collect();
                    let fh: Vec<C64> = h1.iter().flatten().zip(h2.iter().flatten()).map(|(a, b)| rich(*a, *b)).collect();
                    let (dg, sg) = discrepancy(&jet.gradient(), &g);
                    let jh: Vec<C64> = jet.hessian().into_iter().flatten().collect();
                    let (dh, sh) = discrepancy(&jh, &fh);
                    prop_assert!(dg <= 1e-6 * (1.0 + sg), "{name} {label}: gradient off by {dg:e}");
                    prop_assert!(dh <= 1e-4 * (1.0 + sh), "{name} {label}: Hessian off by {dh:e}");
                }
            }
        }
    }

    #[test]
    fn metric_times_inverse_is_identity(seed in any::<u64>()) {
        for name in catalog::names() {
            let m = compile(name);
            if !m.has_metric() {
                continue;
            }
            for u in points(&m, seed, 5) {
                let pf = m.fields(&u).unwrap();
                let g = pf.metric().unwrap();
                let gi = conn::inverse_metric(g).unwrap();
                let n = m.n();
                for i in 0..n {
                    for j in 0..n {
                        let s: C64 = (0..n).map(|k| g[[i, k]].val * gi[k][j].val).sum();
                        let want = if i == j { 1.0 } else { 0.0 };
                        prop_assert!((s - want).norm() <= 1e-10, "{name}: (g g⁻¹)[{i}][{j}] = {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn perturbed_connection_breaks_metric_derivative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for e in rfk_entries() {
            let m = Manifold::compile(&e.spec).unwrap();
            let n = m.n();
            for u in points(&m, seed, 3) {
                let pf = m.fields(&u).unwrap();
                let gamma = ConnKind::Natural.build(&pf).unwrap().values();
                let mut delta: Tensor<C64> = Tensor::zeros(n, &[Up, Down, Down], 0);
                for i in 0..n {
                    for j in 0..n {
                        for k in j..n {
                            let v = C64::new(rng.gen_range(-1.0..1.0), 0.0);
                            delta.set(&[i, j, k], v);
                            delta.set(&[i, k, j], v);
                        }
                    }
                }
                let norm = delta.data().iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                let delta = delta.scale(C64::new(1e-3 / norm, 0.0));
                let (base, _) = conn::nablafromg_residual(&pf, &gamma).unwrap();
                let (bent, _) = conn::nablafromg_residual(&pf, &gamma.add(&delta)).unwrap();
                prop_assert!(base <= 1e-8, "{}: unperturbed residual {base:e}", e.spec.name);
                // the residual is linear in g; measure it for the metric rescaled to unit size
                let gmax = pf.metric().unwrap().data().iter().map(|x| x.val.norm()).fold(0.0, f64::max);
                prop_assert!(bent / gmax >= 1e-4, "{}: perturbed residual only {:e}", e.spec.name, bent / gmax);
            }
        }
    }

    #[test]
    fn euler_field_is_affine_on_homogeneous_entries(seed in any::<u64>()) {
        for name in catalog::names() {
            let e = entry(name).unwrap();
            if !e.has(Flag::Homogeneous) || !e.is_rfk() {
                continue;
            }
            let m = Manifold::compile(&e.spec).unwrap();
            let p = points(&m, seed, 5);
            let r = conn::check_nabla_nabla_e(&m, &p, 1e-8, |pf| ConnKind::Natural.build(pf));
            prop_assert!(r.pass, "{name}: {}", r.line());
        }
    }

    #[test]
    fn weingarten_operators_are_self_adjoint_for_any_field(seed in any::<u64>(), eps in prop::sample::select(vec![-1.0, 1.0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for name in ["lobachevsky", "lauricella-eps-minus1-n3"] {
            let m = compile(name);
            let coords = m.spec.coords.clone();
            let x: Vec<String> = coords.iter().map(|c| format!("({:.6}) + ({:.6})*{c}", rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let nb = NormalBundle::compile(&m, &[NormalFieldSpec { epsilon: eps, x }]).unwrap();
            let p = points(&m, seed, 4);
            let gmc = hamops::check_gmc(&m, &nb, &p, 1e-12);
            let gmc2 = gmc.iter().find(|r| r.name.starts_with("GMC2")).unwrap();
            prop_assert!(gmc2.pass, "{name}: {}", gmc2.line());
            // the expanded curvature residual is the Gauss-equation residual
            for u in &p {
                let at = normal_bundle_at(&m, &nb, u).unwrap();
                let (q, g0) = (at.qexp.0, at.gmc[0].0);
                prop_assert!((q - g0).abs() <= 1e-12 * (1.0 + q.max(g0)), "{name}: {q:e} vs {g0:e}");
            }
        }
    }

    #[test]
    fn legendre_by_flat_combination_keeps_rotation_coefficients(
        alpha in 0.5..2.0f64,
        beta in -1.0..1.0f64,
        gamma in -0.3..0.3f64,
        seed in any::<u64>(),
    ) {
        let e = entry("q0-d-minus1").unwrap();
        let m = Manifold::compile(&e.spec).unwrap();
        let lf = &e.legendre_fields;
        let comps: Vec<String> = (0..3)
            .map(|i| format!("({alpha}) + ({beta})*({}) + ({gamma})*({})", lf["X2"][i], lf["X3"][i]))
            .collect();
        let x = ExprField::compile(&m, "X", &comps).unwrap();
        let p = points(&m, seed, 5);
        let t = LegendreTransformed::new(&m, &x, &p).unwrap();
        let r = check_combescure(&m, &t, &p, 1e-8);
        prop_assume!(r.error.is_none());
        prop_assert!(r.pass, "{}", r.line());
    }

    #[test]
    fn integrals_have_zero_derivative_along_the_flow(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5 {
            let z = if rng.gen_bool(0.5) { rng.gen_range(-3.0..-0.3) } else { rng.gen_range(1.3..4.0) };
            let f: [C64; 6] = std::array::from_fn(|_| C64::new(rng.gen_range(-1.5..1.5), 0.0));
            let s = OdeState3::new(z, f);
            let rate = integral_drift_rate(&s).unwrap();
            let speed = rhs(s.z, &s.f).unwrap().iter().map(|x| x.norm()).fold(0.0, f64::max);
            for r in rate {
                prop_assert!(r.norm() <= 1e-9 * (1.0 + speed), "dI/dz = {r} at z = {z}");
            }
        }
    }

    #[test]
    fn reports_are_deterministic_for_any_seed(seed in any::<u64>()) {
        let opts = SuiteOptions { seed, points: 4, tol: 1e-8, params: BTreeMap::new() };
        let e = entry("nonss2d").unwrap();
        prop_assert_eq!(run_suite(&e, &opts).to_json(), run_suite(&e, &opts).to_json());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    #[test]
    fn nonss3d_family_for_random_parameters(
        a in prop_oneof![-1.8..1.8f64, 2.2..4.0f64],
        b in prop_oneof![-2.0..-0.2f64, 0.2..2.0f64],
        c in prop_oneof![-2.0..-0.2f64, 0.2..2.0f64],
        fg in prop::collection::vec(-1.0..1.0f64, 6),
        seed in any::<u64>(),
    ) {
        let mut params: BTreeMap<String, f64> = [("a", a), ("b", b), ("c", c)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        for (k, v) in ["f0", "f1", "f2", "g0", "g1", "g2"].iter().zip(&fg) {
            params.insert(k.to_string(), *v);
        }
        let opts = SuiteOptions { seed, points: 8, tol: 1e-8, params };
        let ids: Vec<String> = ["product-axioms", "metric-invariance", "killing", "natural-flat", "explicit-is-natural", "nablafromg"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let bundle = run_checks(&entry("nonss3d").unwrap(), &ids, &opts).unwrap();
        for r in &bundle.reports {
            prop_assert!(r.pass, "a = {a}, b = {b}, c = {c}: {}", r.line());
        }
    }
}
