//! Small dense linear algebra: Gauss-Jordan inversion over any
//! [`Scalar`], characteristic polynomials and their roots, and singular
//! values through nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::{Float, One, ToPrimitive, Zero};

use crate::scalar::{Cx, Real, Scalar};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("singular matrix (|det| = {det:e}, scale {scale:e})")]
pub struct SingularMatrix {
    pub det: f64,
    pub scale: f64,
}

/// Relative determinant threshold used by [`invert`].
pub const SINGULAR_RTOL: f64 = 1e-12;

pub fn identity<S: Scalar>(n: usize, dim: usize) -> Vec<Vec<S>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { S::unit(dim) } else { S::zeroed(dim) }).collect()).collect()
}

fn max_entry<S: Scalar>(m: &[Vec<S>]) -> S::R {
    m.iter().flatten().fold(S::R::zero(), |a, x| a.max(x.value().norm()))
}

/// Inverse with partial pivoting on the value part. Rejects matrices with
/// `|det| ≤ 1e-12·max|m_ij|^n`.
pub fn invert<S: Scalar>(m: &[Vec<S>]) -> Result<Vec<Vec<S>>, SingularMatrix> {
    let n = m.len();
    let dim = m.first().and_then(|r| r.first()).map_or(0, |x| x.dim());
    let scale = max_entry(m).powi(n as i32);
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut inv = identity::<S>(n, dim);
    let mut det = Complex::<S::R>::one();
    let report = |det: Cx<S::R>| SingularMatrix { det: det.norm().to_f64().unwrap_or(0.0), scale: scale.to_f64().unwrap_or(0.0) };
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].value().norm().partial_cmp(&a[j][col].value().norm()).unwrap()).unwrap();
        if a[piv][col].value().norm() == S::R::zero() {
            return Err(report(Complex::zero()));
        }
        if piv != col {
            a.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det = det * p.value();
        let pinv = p.recip().map_err(|_| report(Complex::zero()))?;
        for k in 0..n {
            a[col][k] = a[col][k] * pinv;
            inv[col][k] = inv[col][k] * pinv;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for k in 0..n {
                    a[r][k] = a[r][k] - f * a[col][k];
                    inv[r][k] = inv[r][k] - f * inv[col][k];
                }
            }
        }
    }
    if det.norm() <= S::R::lit(SINGULAR_RTOL) * scale {
        return Err(report(det));
    }
    Ok(inv)
}

pub fn det<R: Real>(m: &[Vec<Cx<R>>]) -> Cx<R> {
    let n = m.len();
    let mut a = m.to_vec();
    let mut d = Complex::<R>::one();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap()).unwrap();
        if a[piv][col].is_zero() {
            return Complex::zero();
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        d = d * a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] = a[r][k] - f * a[col][k];
            }
        }
    }
    d
}

pub fn matmul<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Vec<Vec<S>> {
    let dim = a[0][0].dim();
    (0..a.len()).map(|i| (0..b[0].len()).map(|j| (0..b.len()).fold(S::zeroed(dim), |s, k| s + a[i][k] * b[k][j])).collect()).collect()
}

/// Coefficients `[1, p1, …, pn]` of `det(λ − M) = λⁿ + p1 λⁿ⁻¹ + … + pn`
/// by the Faddeev–LeVerrier recursion.
pub fn charpoly(m: &[Vec<C64>]) -> Vec<C64> {
    let n = m.len();
    let mut coeffs = vec![C64::one()];
    let mut mk = vec![vec![C64::zero(); n]; n];
    for k in 1..=n {
        mk = matmul(m, &mk);
        let prev = coeffs[k - 1];
        for (i, row) in mk.iter_mut().enumerate() {
            row[i] += prev;
        }
        let am = matmul(m, &mk);
        let tr: C64 = (0..n).map(|i| am[i][i]).sum();
        coeffs.push(-tr / k as f64);
    }
    coeffs
}

fn horner(c: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::zero();
    let mut dp = C64::zero();
    for &a in c {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// All roots of a monic polynomial (Durand–Kerner, then Newton polishing).
pub fn poly_roots(c: &[C64]) -> Vec<C64> {
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let radius = 1.0 + c.iter().skip(1).map(|a| a.norm()).fold(0.0, f64::max);
    let seed = Complex::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let (p, _) = horner(c, z[i]);
            let mut den = C64::one();
            for j in 0..n {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                z[i] += Complex::new(1e-9, 1e-9);
                continue;
            }
            let step = p / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(c, *r);
            if dp.norm() < 1e-12 {
                break;
            }
            let nr = *r - p / dp;
            if horner(c, nr).0.norm() < p.norm() {
                *r = nr;
            }
        }
    }
    z
}

/// Eigenvalues through the characteristic polynomial, sorted by real then
/// imaginary part. Roots closer than `1e-6·(1+|λ|)` are treated as one
/// multiple root and replaced by their mean.
pub fn eigenvalues(m: &[Vec<C64>]) -> Vec<C64> {
    let mut r = poly_roots(&charpoly(m));
    let key = |a: &C64, b: &C64| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap());
    r.sort_by(key);
    let mut out = Vec::with_capacity(r.len());
    let mut used = vec![false; r.len()];
    for i in 0..r.len() {
        if used[i] {
            continue;
        }
        let cluster: Vec<usize> = (i..r.len()).filter(|&j| !used[j] && (r[j] - r[i]).norm() <= 1e-6 * (1.0 + r[i].norm())).collect();
        let mean = cluster.iter().map(|&j| r[j]).sum::<C64>() / cluster.len() as f64;
        for &j in &cluster {
            used[j] = true;
            out.push(mean);
        }
    }
    out.sort_by(key);
    out
}

/// Singular values, largest first.
pub fn singular_values(m: &[Vec<C64>]) -> Vec<f64> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let a = DMatrix::from_fn(rows, cols, |i, j| m[i][j]);
    let mut s: Vec<f64> = a.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Orthonormal basis of the approximate kernel of a square matrix: right
/// singular vectors whose singular value is at most `atol·(1 + σ_max)`.
pub fn null_space(m: &[Vec<C64>], atol: f64) -> Vec<Vec<C64>> {
    let n = m.len();
    let a = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    (0..n).filter(|&k| svd.singular_values[k] <= atol * (1.0 + top)).map(|k| (0..n).map(|j| vt[(k, j)].conj()).collect()).collect()
}

/// Number of singular values above `rtol·σ_max`.
pub fn numerical_rank(m: &[Vec<C64>], rtol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rtol * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        Complex::new(x, 0.0)
    }

    fn mat(rows: &[&[f64]]) -> Vec<Vec<C64>> {
        rows.iter().map(|r| r.iter().map(|&x| c(x)).collect()).collect()
    }

    #[test]
    fn diagonal_inverse() {
        let inv = invert(&mat(&[&[2.0, 0.0], &[0.0, -3.0]])).unwrap();
        assert_eq!(inv, mat(&[&[0.5, 0.0], &[0.0, -1.0 / 3.0]]));
        assert_eq!(invert(&identity::<C64>(3, 0)).unwrap(), identity::<C64>(3, 0));
    }

    #[test]
    fn singular_is_rejected() {
        let e = invert(&mat(&[&[1.0, 2.0], &[2.0, 4.0]])).unwrap_err();
        assert!(e.det < 1e-12);
    }

    #[test]
    fn charpoly_of_companion() {
        // roots 1, 2, 3
        let m = mat(&[&[6.0, -11.0, 6.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let p = charpoly(&m);
        for (a, b) in p.iter().zip([1.0, -6.0, 11.0, -6.0]) {
            assert!((a - c(b)).norm() < 1e-12);
        }
        let ev = eigenvalues(&m);
        for (a, b) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - c(b)).norm() < 1e-10);
        }
    }

    #[test]
    fn repeated_roots_cluster() {
        let m = mat(&[&[1.0, 0.0, 0.0], &[0.0, -0.5, 1.0], &[0.0, 0.0, -0.5]]);
        let ev = eigenvalues(&m);
        assert!((ev[0] - c(-0.5)).norm() < 1e-8 && (ev[1] - c(-0.5)).norm() < 1e-8);
        assert!((ev[2] - c(1.0)).norm() < 1e-12);
        assert_eq!(eigenvalues(&mat(&[&[5.0]])), vec![c(5.0)]);
    }

    #[test]
    fn rank_of_outer_product() {
        let m = mat(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[0.0, 1.0, 1.0]]);
        assert_eq!(numerical_rank(&m, 1e-8), 2);
    }
}
