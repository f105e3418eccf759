//! Explicit Runge-Kutta integrators over complex state vectors with a real
//! independent variable: adaptive Dormand-Prince 5(4) and classical RK4.

use crate::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("right-hand side failed at t = {t}: {msg}")]
    Rhs { t: f64, msg: String },
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-10, atol: 1e-12, max_steps: 200_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &[C64], h: f64, terms: &[(f64, &[C64])]) -> Vec<C64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += ki * (h * c);
        }
    }
    out
}

/// Adaptive Dormand-Prince integration from `t0` to `t1`.
///
/// Steps are clipped so that every `outputs` abscissa (inside the span) is
/// hit exactly; `observe(t, y)` runs at the start and after every accepted
/// step. Returns the final state.
pub fn dopri5<F, O>(mut f: F, t0: f64, y0: &[C64], t1: f64, tol: Tolerances, outputs: &[f64], mut observe: O) -> Result<Vec<C64>, OdeError>
where
    F: FnMut(f64, &[C64]) -> Result<Vec<C64>, String>,
    O: FnMut(f64, &[C64]),
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut stops: Vec<f64> = outputs.iter().copied().filter(|&t| (t - t0) * dir > 0.0 && (t1 - t) * dir > 0.0).collect();
    stops.sort_by(|a, b| ((a - t0) * dir).partial_cmp(&((b - t0) * dir)).unwrap());
    stops.push(t1);
    let mut call = |t: f64, y: &[C64]| f(t, y).map_err(|msg| OdeError::Rhs { t, msg });

    let mut t = t0;
    let mut y = y0.to_vec();
    observe(t, &y);
    if span == 0.0 {
        return Ok(y);
    }
    let mut k1 = call(t, &y)?;
    let mut h = dir * (span * 1e-3).clamp(1e-8, 1e-2);
    let mut next_stop = 0;
    let mut steps = 0;
    while next_stop < stops.len() {
        let target = stops[next_stop];
        let mut hit = false;
        if (t + h - target) * dir >= 0.0 {
            h = target - t;
            hit = true;
        }
        if h.abs() < 1e-14 * (1.0 + t.abs()) {
            return Err(OdeError::StepSizeUnderflow { t });
        }
        steps += 1;
        if steps > tol.max_steps {
            return Err(OdeError::TooManySteps { t });
        }
        let k2 = call(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = call(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = call(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = call(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = call(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        let yn = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = call(t + h, &yn)?;
        let mut err2 = 0.0;
        for i in 0..y.len() {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = tol.atol + tol.rtol * y[i].norm().max(yn[i].norm());
            err2 += (e.norm() / sc).powi(2);
        }
        let err = (err2 / y.len().max(1) as f64).sqrt();
        if err <= 1.0 {
            t = if hit { target } else { t + h };
            y = yn;
            k1 = k7;
            observe(t, &y);
            if hit {
                next_stop += 1;
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if !hit || err > 1.0 {
            continue;
        }
        h = h.abs().max(1e-8 * span).min(span) * dir;
    }
    Ok(y)
}

/// Fixed-step classical Runge-Kutta from `t0` to `t1` in `steps` steps.
pub fn rk4<F>(mut f: F, t0: f64, y0: &[C64], t1: f64, steps: usize) -> Result<Vec<C64>, OdeError>
where
    F: FnMut(f64, &[C64]) -> Result<Vec<C64>, String>,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.to_vec();
    let mut call = |t: f64, y: &[C64]| f(t, y).map_err(|msg| OdeError::Rhs { t, msg });
    for s in 0..steps {
        let t = t0 + h * s as f64;
        let k1 = call(t, &y)?;
        let k2 = call(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k1)]))?;
        let k3 = call(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k2)]))?;
        let k4 = call(t + h, &axpy(&y, h, &[(1.0, &k3)]))?;
        y = axpy(&y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn exponential_growth_is_accurate() {
        let y = dopri5(|_, y| Ok(vec![y[0]]), 0.0, &[Complex::new(1.0, 0.0)], 2.0, Tolerances::default(), &[], |_, _| {}).unwrap();
        assert!((y[0].re - 2f64.exp()).abs() < 1e-9 * 2f64.exp());
    }

    #[test]
    fn rotation_conserves_modulus_and_hits_outputs() {
        let i = Complex::new(0.0, 1.0);
        let mut seen = Vec::new();
        let y = dopri5(|_, y| Ok(vec![i * y[0]]), 0.0, &[Complex::new(1.0, 0.0)], -3.0, Tolerances::default(), &[-1.0, -2.0], |t, _| seen.push(t)).unwrap();
        assert!((y[0] - (-3.0 * i).exp()).norm() < 1e-9);
        assert!(seen.contains(&-1.0) && seen.contains(&-2.0) && seen.contains(&-3.0));
    }

    #[test]
    fn rk4_polynomial_exact() {
        let y = rk4(|t, _| Ok(vec![Complex::new(3.0 * t * t, 0.0)]), 0.0, &[Complex::new(0.0, 0.0)], 1.0, 10).unwrap();
        assert!((y[0].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rhs_failure_is_reported() {
        let r = dopri5(
            |t, _| if t > 0.5 { Err("pole".into()) } else { Ok(vec![Complex::new(1.0, 0.0)]) },
            0.0,
            &[Complex::new(0.0, 0.0)],
            1.0,
            Tolerances::default(),
            &[],
            |_, _| {},
        );
        assert!(matches!(r, Err(OdeError::Rhs { .. })));
    }
}
