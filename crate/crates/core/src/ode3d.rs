//! The three-dimensional reduction of the rotation-coefficient system.
//!
//! With `z = (u³ − u¹)/(u² − u¹)` the rotation coefficients are
//! `β_12 = F_12(z)/(u² − u¹)`, `β_13 = F_13(z)/(u³ − u¹)`,
//! `β_23 = F_23(z)/(u³ − u²)` (and likewise for the transposes), and the
//! Darboux system becomes six ODEs in `z`. Components are always stored in
//! the order `F12, F21, F13, F31, F23, F32`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exprjet::Dual;
use crate::linalg;
use crate::ode::{self, Tolerances};
use crate::report::{Check, Report};
use crate::rotation::{BetaSource, RotationData};
use crate::scalar::Scalar;
use crate::{Dual64, C64};

pub const F_NAMES: [&str; 6] = ["F12", "F21", "F13", "F31", "F23", "F32"];
const F12: usize = 0;
const F21: usize = 1;
const F13: usize = 2;
const F31: usize = 3;
const F23: usize = 4;
const F32: usize = 5;

/// Keep this far from the singular points `z = 0, 1` when integrating.
pub const SINGULAR_MARGIN: f64 = 1e-3;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OdeState3 {
    pub z: C64,
    pub f: [C64; 6],
}

impl OdeState3 {
    pub fn new(z: f64, f: [C64; 6]) -> Self {
        OdeState3 { z: c(z), f }
    }

    pub fn get(&self, name: &str) -> Option<C64> {
        F_NAMES.iter().position(|&n| n == name).map(|k| self.f[k])
    }
}

fn check_regular<S: Scalar<R = f64>>(z: &S) -> Result<()> {
    let v = z.value();
    if v.norm() == 0.0 || (v - c(1.0)).norm() == 0.0 {
        return Err(Error::SingularPoint(v.re));
    }
    Ok(())
}

/// Right-hand sides `dF/dz`.
pub fn rhs<S: Scalar<R = f64>>(z: S, f: &[S; 6]) -> Result<[S; 6]> {
    check_regular(&z)?;
    let one = S::unit(z.dim());
    let zm1 = z - one;
    let zz = z * zm1;
    Ok([
        (f[F13] * f[F32]).try_div(&zz)?,
        (f[F23] * f[F31]).try_div(&zz)?,
        -(f[F12] * f[F23]).try_div(&zm1)?,
        -(f[F32] * f[F21]).try_div(&zm1)?,
        (f[F21] * f[F13]).try_div(&z)?,
        (f[F31] * f[F12]).try_div(&z)?,
    ])
}

/// The matrix `V` in terms of `F`.
pub fn v_of_f<S: Scalar>(f: &[S; 6]) -> [[S; 3]; 3] {
    let zero = S::zeroed(f[0].dim());
    [[zero, f[F12], f[F13]], [-f[F21], zero, f[F23]], [-f[F31], -f[F32], zero]]
}

/// The matrix `W` of the ED4bis constraints.
pub fn w_matrix<S: Scalar>(z: S, f: &[S; 6]) -> [[S; 3]; 3] {
    let one = S::unit(z.dim());
    let zm1 = z - one;
    let zz = z * zm1;
    [[zz, zm1 * f[F23], -(z * f[F13])], [zz * f[F31], -(zm1 * f[F21]), z], [zz * f[F32], -zm1, -(z * f[F12])]]
}

fn delta_f<S: Scalar>(f: &[S; 6]) -> [S; 3] {
    [f[F12] - f[F21], f[F13] - f[F31], f[F23] - f[F32]]
}

/// `I₁…I₈`. `I₆…I₈` use the reduced matrix form of the ED5b constraints.
pub fn integrals<S: Scalar<R = f64>>(z: S, f: &[S; 6]) -> Result<[S; 8]> {
    check_regular(&z)?;
    let one = S::unit(z.dim());
    let half = S::from_real(0.5, z.dim());
    let zm1 = z - one;
    let zero = S::zeroed(z.dim());
    let i1 = f[F12] * f[F21] + f[F13] * f[F31] + f[F23] * f[F32];
    let i2 = f[F13] * f[F32] * f[F21] - f[F23] * f[F31] * f[F12];
    let w = w_matrix(z, f);
    let d = delta_f(f);
    let row = |m: &[S; 3]| m[0] * d[0] + m[1] * d[1] + m[2] * d[2];
    let q = [[-half, zero, f[F13].try_div(&zm1)?], [zero, (f[F21] * zm1).try_div(&z)?, -half], [f[F32] * z, -half, zero]];
    Ok([i1, i2, row(&w[0]), row(&w[1]), row(&w[2]), row(&q[0]), row(&q[1]), row(&q[2])])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Integrals {
    pub i: [C64; 8],
    pub det_w: C64,
    /// `z²(z − 1)²(I₁ − I₂ + 1)`.
    pub det_w_factored: C64,
}

impl Integrals {
    pub fn det_w_gap(&self) -> f64 {
        (self.det_w - self.det_w_factored).norm()
    }
}

pub fn evaluate_integrals(s: &OdeState3) -> Result<Integrals> {
    let i = integrals(s.z, &s.f)?;
    let w = w_matrix(s.z, &s.f);
    let det_w = linalg::det(&w.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    let zz = s.z * (s.z - 1.0);
    Ok(Integrals { i, det_w, det_w_factored: zz * zz * (i[0] - i[1] + 1.0) })
}

/// `z(u) = (u³ − u¹)/(u² − u¹)` for the first three coordinates.
pub fn z_of(u: &[C64]) -> Result<C64> {
    if u.len() != 3 {
        return Err(Error::Spec(format!("the reduction needs n = 3, got {}", u.len())));
    }
    for i in 0..3 {
        for j in 0..i {
            if (u[i] - u[j]).norm() == 0.0 {
                return Err(Error::CoordinateCollision(j + 1, i + 1));
            }
        }
    }
    Ok((u[2] - u[0]) / (u[1] - u[0]))
}

fn assemble<S: Scalar>(u: [S; 3], f: &[S; 6]) -> Result<Vec<Vec<S>>> {
    let zero = S::zeroed(u[0].dim());
    let mut b = vec![vec![zero; 3]; 3];
    let d21 = u[1] - u[0];
    let d31 = u[2] - u[0];
    let d32 = u[2] - u[1];
    b[0][1] = f[F12].try_div(&d21)?;
    b[1][0] = f[F21].try_div(&d21)?;
    b[0][2] = f[F13].try_div(&d31)?;
    b[2][0] = f[F31].try_div(&d31)?;
    b[1][2] = f[F23].try_div(&d32)?;
    b[2][1] = f[F32].try_div(&d32)?;
    Ok(b)
}

/// `β` at `u` from the values `F(z)`, where `z` must equal `z(u)`.
pub fn beta_from_f(state: &OdeState3, u: &[C64]) -> Result<Vec<Vec<C64>>> {
    let z = z_of(u)?;
    if (z - state.z).norm() > 1e-12 * (1.0 + z.norm()) {
        return Err(Error::Spec(format!("point has z = {z}, state has z = {}", state.z)));
    }
    assemble([u[0], u[1], u[2]], &state.f)
}

fn param_singular(what: &str) -> Error {
    Error::ParameterSingular(what.to_string())
}

/// The `q = 0` family: `F21 = −1/(az + b)`, `F31 = −az/((az + b)s)` with
/// `s = √(−b² − 1)`, and the four companions.
pub fn q0_family<S: Scalar<R = f64>>(z: S, a: f64, b: f64) -> Result<[S; 6]> {
    let n = z.dim();
    let k = |x: f64| S::from_real(x, n);
    let s = C64::new(-b * b - 1.0, 0.0).sqrt();
    if s.norm() == 0.0 {
        return Err(param_singular("b² + 1 = 0"));
    }
    let sc = S::constant(s, n);
    let den = z.mulc(c(a)) + k(b);
    if den.value().norm() < 1e-14 {
        return Err(param_singular("az + b = 0"));
    }
    let one = k(1.0);
    let inv = one.try_div(&den)?;
    Ok([
        inv.mulc(c(b * (a + b))),
        -inv,
        (z * sc * inv).mulc(c(a + b)),
        -(z * inv).mulc(c(a) / s),
        -((z - one) * sc * inv),
        -((z - one) * inv).mulc(c(a * b) / s),
    ])
}

/// Exact-pencil family on the principal branches of `√(z − 1)` and `√(−z)`.
///
/// This is the solution of `I₃ = … = I₈ = 0` that satisfies the ODEs; it
/// differs from the commonly quoted form in the sign of `F21` and in `F13`
/// being `−½/√(z − 1)` rather than `−½√(z − 1)`.
pub fn pencil_family<S: Scalar<R = f64>>(z: S) -> Result<[S; 6]> {
    let n = z.dim();
    let half = C64::new(0.5, 0.0);
    let p = (z - S::unit(n)).sqrt()?;
    let m = (-z).sqrt()?;
    Ok([
        m.try_div(&p)?.mulc(half),
        -p.try_div(&m)?.mulc(half),
        -S::unit(n).try_div(&p)?.mulc(half),
        p.mulc(half),
        -S::unit(n).try_div(&m)?.mulc(half),
        m.mulc(half),
    ])
}

/// The quoted form of the exact-pencil family, kept as a negative control:
/// it fails the ODEs.
pub fn pencil_family_printed<S: Scalar<R = f64>>(z: S) -> Result<[S; 6]> {
    let n = z.dim();
    let half = C64::new(0.5, 0.0);
    let p = (z - S::unit(n)).sqrt()?;
    let m = (-z).sqrt()?;
    Ok([m.try_div(&p)?.mulc(half), p.try_div(&m)?.mulc(half), -p.mulc(half), p.mulc(half), -S::unit(n).try_div(&m)?.mulc(half), m.mulc(half)])
}

pub fn closed_form_q0(z: f64, a: f64, b: f64) -> Result<OdeState3> {
    check_regular(&c(z))?;
    Ok(OdeState3::new(z, q0_family(c(z), a, b)?))
}

pub fn closed_form_pencil(z: f64) -> Result<OdeState3> {
    check_regular(&c(z))?;
    Ok(OdeState3::new(z, pencil_family(c(z))?))
}

/// A closed-form solution family, usable wherever rotation data is needed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosedForm {
    Q0 { a: f64, b: f64 },
    Pencil,
    PencilPrinted,
}

impl ClosedForm {
    pub fn eval<S: Scalar<R = f64>>(&self, z: S) -> Result<[S; 6]> {
        match *self {
            ClosedForm::Q0 { a, b } => q0_family(z, a, b),
            ClosedForm::Pencil => pencil_family(z),
            ClosedForm::PencilPrinted => pencil_family_printed(z),
        }
    }

    pub fn state(&self, z: f64) -> Result<OdeState3> {
        check_regular(&c(z))?;
        Ok(OdeState3::new(z, self.eval(c(z))?))
    }
}

impl BetaSource for ClosedForm {
    fn label(&self) -> String {
        match self {
            ClosedForm::Q0 { a, b } => format!("q0 family (a={a}, b={b})"),
            ClosedForm::Pencil => "exact pencil family".into(),
            ClosedForm::PencilPrinted => "exact pencil family (quoted form)".into(),
        }
    }

    fn dim(&self) -> usize {
        3
    }

    fn rotation_at(&self, u: &[C64]) -> Result<RotationData> {
        z_of(u)?;
        let ud: [Dual64; 3] = std::array::from_fn(|k| Dual::var(u[k], k, 3));
        let z = (ud[2] - ud[0]).try_div(&(ud[1] - ud[0]))?;
        check_regular(&z)?;
        let f = self.eval(z)?;
        Ok(RotationData::from_beta(u, assemble(ud, &f)?))
    }
}

/// Max over components of `|dF/dz (central difference) − rhs|`, with scale.
pub fn rhs_oracle_residual(family: &ClosedForm, z: f64, step: f64) -> Result<(f64, f64)> {
    let s = family.state(z)?;
    let plus = family.eval(c(z + step))?;
    let minus = family.eval(c(z - step))?;
    let r = rhs(s.z, &s.f)?;
    let mut d: f64 = 0.0;
    let mut sc: f64 = 0.0;
    for k in 0..6 {
        let fd = (plus[k] - minus[k]) / (2.0 * step);
        d = d.max((fd - r[k]).norm());
        sc = sc.max(r[k].norm());
    }
    Ok((d, sc))
}

/// `dI/dz` along the flow, from jets in `z` with `dF/dz = rhs`.
pub fn integral_drift_rate(s: &OdeState3) -> Result<[C64; 2]> {
    let r = rhs(s.z, &s.f)?;
    let z = Dual::var(s.z, 0, 1);
    let f: [Dual64; 6] = std::array::from_fn(|k| {
        let mut d = Dual::constant(s.f[k], 1);
        d.grad[0] = r[k];
        d
    });
    let i = integrals(z, &f)?;
    Ok([i[0].d(0), i[1].d(0)])
}

/// Jacobian of `(I₁, …, I₅)` with respect to the six `F`, at fixed `z`,
/// with its numerical rank (singular values above `1e−8·σ_max`).
pub fn jacobian_rank(s: &OdeState3) -> Result<(usize, Vec<f64>)> {
    let f: [Dual64; 6] = std::array::from_fn(|k| Dual::var(s.f[k], k, 6));
    let i = integrals(Dual::constant(s.z, 6), &f)?;
    let jac: Vec<Vec<C64>> = (0..5).map(|r| (0..6).map(|k| i[r].d(k)).collect()).collect();
    let sv = linalg::singular_values(&jac);
    Ok((linalg::numerical_rank(&jac, 1e-8), sv))
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRow {
    pub z: f64,
    pub f: [C64; 6],
    pub i: [C64; 8],
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub end: OdeState3,
    /// Largest `|I₁(z) − I₁(z₀)|` and `|I₂(z) − I₂(z₀)|` over accepted steps.
    pub drift: [f64; 2],
    /// Largest `max(|I₃|, |I₄|, |I₅|)` over accepted steps.
    pub constraint_max: f64,
    pub initial: [C64; 8],
}

fn segment_is_safe(z0: f64, z1: f64) -> bool {
    let (lo, hi) = if z0 <= z1 { (z0, z1) } else { (z1, z0) };
    [0.0, 1.0].iter().all(|&p| p < lo - SINGULAR_MARGIN || p > hi + SINGULAR_MARGIN)
}

/// Adaptive integration from `state0` (real `z`) to `z_target`; rows are
/// emitted at the `outputs` abscissae inside the span and at both ends.
pub fn integrate(state0: &OdeState3, z_target: f64, tol: Tolerances, outputs: &[f64]) -> Result<Trajectory> {
    let z0 = state0.z.re;
    if state0.z.im != 0.0 {
        return Err(Error::Spec("integration runs along real z".into()));
    }
    if !segment_is_safe(z0, z_target) {
        return Err(Error::SingularApproach { from: z0, to: z_target });
    }
    let initial = integrals(state0.z, &state0.f)?;
    let mut drift = [0.0f64; 2];
    let mut cmax: f64 = 0.0;
    let mut rows = Vec::new();
    let wanted = |t: f64| t == z0 || t == z_target || outputs.contains(&t);
    let observe = |t: f64, y: &[C64]| {
        let f: [C64; 6] = std::array::from_fn(|k| y[k]);
        if let Ok(i) = integrals(c(t), &f) {
            drift[0] = drift[0].max((i[0] - initial[0]).norm());
            drift[1] = drift[1].max((i[1] - initial[1]).norm());
            cmax = cmax.max(i[2].norm()).max(i[3].norm()).max(i[4].norm());
            if wanted(t) {
                rows.push(TrajectoryRow { z: t, f, i });
            }
        }
    };
    let f = |t: f64, y: &[C64]| -> std::result::Result<Vec<C64>, String> {
        let s: [C64; 6] = std::array::from_fn(|k| y[k]);
        rhs(c(t), &s).map(|r| r.to_vec()).map_err(|e| e.to_string())
    };
    let y = ode::dopri5(f, z0, &state0.f, z_target, tol, outputs, observe)?;
    let end = OdeState3::new(z_target, std::array::from_fn(|k| y[k]));
    Ok(Trajectory { rows, end, drift, constraint_max: cmax, initial })
}

/// Conservation of `I₁, I₂` along a trajectory: drift within
/// `10·rtol·(1 + |I|)`.
pub fn conservation_report(t: &Trajectory, rtol: f64) -> Report {
    let mut chk = Check::new("first-integral conservation", 1.0);
    for k in 0..2 {
        let bound = 10.0 * rtol * (1.0 + t.initial[k].norm());
        chk.record(t.drift[k] / bound, 0.0);
    }
    chk.meta("drift_I1", t.drift[0]);
    chk.meta("drift_I2", t.drift[1]);
    chk.finish()
}

/// Coefficients `(a, b, c)` of `a(x)y'' + b(x)y' + c(x)y = 0` for the general
/// Legendre equation.
pub fn legendre_coefficients(nu: f64, mu: f64) -> impl Fn(f64) -> [C64; 3] {
    move |x| {
        let w = 1.0 - x * x;
        [c(w), c(-2.0 * x), c(nu * (nu + 1.0) - mu * mu / w)]
    }
}

/// Integrate a second-order linear ODE from `x0` to `x1`. The path must keep
/// `SINGULAR_MARGIN` away from every point in `singular`.
pub fn solve_linear_ode2(coeff: &dyn Fn(f64) -> [C64; 3], singular: &[f64], x0: f64, y0: C64, dy0: C64, x1: f64, tol: Tolerances) -> Result<(C64, C64)> {
    let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    if singular.iter().any(|&p| p >= lo - SINGULAR_MARGIN && p <= hi + SINGULAR_MARGIN) {
        return Err(Error::SingularApproach { from: x0, to: x1 });
    }
    let f = |x: f64, y: &[C64]| -> std::result::Result<Vec<C64>, String> {
        let [a, b, cc] = coeff(x);
        if a.norm() == 0.0 {
            return Err(format!("leading coefficient vanishes at {x}"));
        }
        Ok(vec![y[1], -(b * y[1] + cc * y[0]) / a])
    };
    let y = ode::dopri5(f, x0, &[y0, dy0], x1, tol, &[], |_, _| {})?;
    Ok((y[0], y[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::{self, Algebraic};

    fn pts3() -> Vec<Vec<C64>> {
        [[0.0, 1.0, 3.0], [0.3, 1.7, -1.2], [-0.5, 2.0, 0.7], [1.1, -0.4, 2.9]].iter().map(|p| p.iter().map(|&x| c(x)).collect()).collect()
    }

    #[test]
    fn zero_state_has_zero_rhs_and_beta() {
        let s = OdeState3::new(2.0, [c(0.0); 6]);
        assert!(rhs(s.z, &s.f).unwrap().iter().all(|x| x.norm() == 0.0));
        let u = [c(0.0), c(1.0), c(2.0)];
        assert!(beta_from_f(&s, &u).unwrap().iter().flatten().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn q0_value_at_two() {
        let s = closed_form_q0(2.0, 1.0, 1.0).unwrap();
        assert!((s.get("F21").unwrap() - c(-1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn pencil_value_at_minus_one() {
        let s = closed_form_pencil(-1.0).unwrap();
        let want = C64::new(0.0, 0.5 * 2f64.sqrt());
        assert!((s.get("F31").unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn closed_forms_solve_the_odes() {
        for fam in [ClosedForm::Pencil, ClosedForm::Q0 { a: 1.0, b: 1.0 }, ClosedForm::Q0 { a: 1.0, b: 2.0 }] {
            for z in [-3.0, -1.5, 0.4, 2.0, 5.0] {
                let (d, s) = rhs_oracle_residual(&fam, z, 1e-6).unwrap();
                assert!(d / (1.0 + s) < 1e-8, "{fam:?} z={z}: {d}");
            }
        }
        let (d, _) = rhs_oracle_residual(&ClosedForm::PencilPrinted, -1.0, 1e-6).unwrap();
        assert!(d > 1e-3);
    }

    #[test]
    fn q0_integrals() {
        let s = closed_form_q0(2.0, 1.0, 1.0).unwrap();
        let i = evaluate_integrals(&s).unwrap().i;
        assert!((i[0] + 1.0).norm() < 1e-10);
        for k in 1..5 {
            assert!(i[k].norm() < 1e-10, "I{} = {}", k + 1, i[k]);
        }
    }

    #[test]
    fn pencil_integrals_and_spectrum() {
        let s = closed_form_pencil(-1.0).unwrap();
        let i = evaluate_integrals(&s).unwrap().i;
        // det(V + λ) = λ³ + I₁λ + I₂ with spectrum {1, −½, −½} forces these
        assert!((i[0] + 0.75).norm() < 1e-12);
        assert!((i[1] - 0.25).norm() < 1e-12);
        for k in 2..8 {
            assert!(i[k].norm() < 1e-12, "I{} = {}", k + 1, i[k]);
        }
        let v = v_of_f(&s.f).map(|r| r.to_vec()).to_vec();
        let ev = linalg::eigenvalues(&v);
        // eigenvalues of V are minus the roots of λ³ + I₁λ + I₂
        for (a, b) in ev.iter().zip([-0.5, -0.5, 1.0]) {
            assert!((a - c(b)).norm() < 1e-8, "{ev:?}");
        }
    }

    #[test]
    fn det_w_factorization() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let z = rng.gen_range(-3.0..3.0);
            let f = std::array::from_fn(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
            let r = evaluate_integrals(&OdeState3::new(z, f)).unwrap();
            assert!(r.det_w_gap() < 1e-9 * (1.0 + r.det_w.norm()));
        }
    }

    #[test]
    fn integrals_are_conserved_analytically() {
        let s = OdeState3::new(-0.7, [c(0.3), c(-1.2), C64::new(0.5, 0.2), c(0.9), c(-0.4), c(1.3)]);
        let r = integral_drift_rate(&s).unwrap();
        assert!(r[0].norm() < 1e-12 && r[1].norm() < 1e-12);
    }

    #[test]
    fn pencil_trajectory_matches_closed_form() {
        let s0 = closed_form_pencil(-1.0).unwrap();
        let t = integrate(&s0, -3.0, Tolerances::default(), &[]).unwrap();
        let want = closed_form_pencil(-3.0).unwrap();
        for k in 0..6 {
            assert!((t.end.f[k] - want.f[k]).norm() < 1e-7);
        }
        assert!(conservation_report(&t, 1e-10).pass);
    }

    #[test]
    fn q0_trajectory_matches_closed_form() {
        let s0 = closed_form_q0(2.0, 1.0, 2.0).unwrap();
        let t = integrate(&s0, 5.0, Tolerances::default(), &[3.0, 4.0]).unwrap();
        let want = closed_form_q0(5.0, 1.0, 2.0).unwrap();
        for k in 0..6 {
            assert!((t.end.f[k] - want.f[k]).norm() < 1e-7);
        }
        assert_eq!(t.rows.len(), 4);
    }

    #[test]
    fn crossing_a_singular_point_is_rejected() {
        let s0 = closed_form_pencil(-1.0).unwrap();
        assert!(matches!(integrate(&s0, 0.5, Tolerances::default(), &[]), Err(Error::SingularApproach { .. })));
        assert!(matches!(rhs(c(1.0), &s0.f), Err(Error::SingularPoint(_))));
    }

    #[test]
    fn beta_scales_inversely() {
        let s = closed_form_q0(2.0, 1.0, 1.0).unwrap();
        let u = [c(0.0), c(1.0), c(2.0)];
        let b1 = beta_from_f(&s, &u).unwrap();
        let b3 = beta_from_f(&s, &u.map(|x| x * 3.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((b1[i][j] / 3.0 - b3[i][j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn families_satisfy_the_darboux_system() {
        let pts = pts3();
        for fam in [ClosedForm::Pencil, ClosedForm::Q0 { a: 1.0, b: 1.0 }] {
            let r = rotation::check_darboux_system(&fam, &pts, 1e-8);
            assert!(r.pass, "{}", r.line());
            assert!(rotation::check_reduction_identity(&fam, &pts, 1e-8).pass);
            assert!(rotation::check_flatness_constraint(&fam, &pts, 1e-8).pass);
            assert!(rotation::check_algebraic_constraints(&fam, &pts, Algebraic::Ed4bis, 1e-8).pass);
        }
        assert!(rotation::check_algebraic_constraints(&ClosedForm::Pencil, &pts, Algebraic::Ed5b, 1e-8).pass);
        assert!(rotation::check_potentiality(&ClosedForm::Q0 { a: 1.0, b: 1.0 }, &pts, 1e-8).pass);
        assert!(!rotation::check_potentiality(&ClosedForm::Pencil, &pts, 1e-8).pass);
        assert!(rotation::check_v_eigenvalues(&ClosedForm::Q0 { a: 1.0, b: 1.0 }, &pts, &[1.0, 0.0, -1.0], 1e-8).pass);
        assert!(rotation::check_v_eigenvalues(&ClosedForm::Pencil, &pts, &[1.0, -0.5, -0.5], 1e-8).pass);
    }

    #[test]
    fn jacobian_rank_on_the_q0_set() {
        let (r, _) = jacobian_rank(&closed_form_q0(2.0, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(r, 4);
    }

    #[test]
    fn legendre_polynomials() {
        let tol = Tolerances::default();
        let p1 = legendre_coefficients(1.0, 0.0);
        let (y, _) = solve_linear_ode2(&p1, &[-1.0, 1.0], 0.2, c(0.2), c(1.0), 0.8, tol).unwrap();
        assert!((y - c(0.8)).norm() < 1e-9);
        let p2 = legendre_coefficients(2.0, 0.0);
        let p = |x: f64| (3.0 * x * x - 1.0) / 2.0;
        let (y, _) = solve_linear_ode2(&p2, &[-1.0, 1.0], -0.5, c(p(-0.5)), c(-1.5), 0.7, tol).unwrap();
        assert!((y - c(p(0.7))).norm() < 1e-8);
    }

    #[test]
    fn legendre_wronskian_follows_abel() {
        let tol = Tolerances::default();
        let co = legendre_coefficients(-0.5, 1.0);
        let x0 = -0.3;
        let w0 = 1.0 * (1.0 - x0 * x0);
        for x1 in [0.0, 0.4, 0.8] {
            let (y1, d1) = solve_linear_ode2(&co, &[-1.0, 1.0], x0, c(1.0), c(0.0), x1, tol).unwrap();
            let (y2, d2) = solve_linear_ode2(&co, &[-1.0, 1.0], x0, c(0.0), c(1.0), x1, tol).unwrap();
            let w = (y1 * d2 - y2 * d1) * (1.0 - x1 * x1);
            assert!((w - c(w0)).norm() < 1e-7);
        }
    }
}
