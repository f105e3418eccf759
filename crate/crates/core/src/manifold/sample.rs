use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exprjet::eval_value;
use crate::C64;

use super::{ConstraintKind, Manifold};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplePlan {
    pub seed: u64,
    pub count: usize,
}

impl SamplePlan {
    pub fn new(seed: u64, count: usize) -> Self {
        SamplePlan { seed, count }
    }
}

const MAX_ATTEMPTS: usize = 100_000;
const DEFAULT_BOX: [f64; 2] = [-2.0, 2.0];

impl Manifold {
    /// Whether a point lies in the declared admissible region.
    pub fn admissible(&self, u: &[C64]) -> bool {
        let r = &self.spec.region;
        if let Some(d) = r.min_separation {
            for i in 0..u.len() {
                for j in 0..i {
                    if (u[i] - u[j]).norm() < d {
                        return false;
                    }
                }
            }
        }
        self.constraints.iter().all(|(e, kind, min)| match eval_value(e, u, &self.params) {
            Ok(v) => match kind {
                ConstraintKind::Positive => v.re >= *min && v.re > 0.0,
                ConstraintKind::Nonzero => v.norm() >= *min && v.norm() > 0.0,
            },
            Err(_) => false,
        })
    }
}

/// Uniform rejection sampling in the region box; deterministic in the seed.
pub fn sample_points(m: &Manifold, plan: SamplePlan) -> Result<Vec<Vec<C64>>> {
    let n = m.n();
    let bounds: Vec<[f64; 2]> = if m.spec.region.bounds.is_empty() { vec![DEFAULT_BOX; n] } else { m.spec.region.bounds.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = Vec::with_capacity(plan.count);
    let mut attempts = 0;
    while out.len() < plan.count {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::RegionEmpty(MAX_ATTEMPTS));
        }
        let u: Vec<C64> = bounds.iter().map(|b| C64::new(rng.gen_range(b[0]..b[1]), 0.0)).collect();
        if m.admissible(&u) {
            out.push(u);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::ManifoldSpec;
    use super::*;

    fn lob() -> Manifold {
        Manifold::compile(&ManifoldSpec::from_json(super::super::tests::lobachevsky_json()).unwrap()).unwrap()
    }

    #[test]
    fn points_respect_constraints_and_seed() {
        let m = lob();
        let a = sample_points(&m, SamplePlan::new(42, 5)).unwrap();
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|p| (p[0] - p[1]).re >= 0.1));
        assert_eq!(a, sample_points(&m, SamplePlan::new(42, 5)).unwrap());
        assert_ne!(a, sample_points(&m, SamplePlan::new(43, 5)).unwrap());
    }

    #[test]
    fn separation_is_enforced() {
        let mut s = ManifoldSpec::from_json(super::super::tests::lobachevsky_json()).unwrap();
        s.n = 3;
        s.coords = vec!["u1".into(), "u2".into(), "u3".into()];
        s.e = vec!["1".into(); 3];
        s.g = None;
        s.region.bounds = vec![[-1.0, 1.0]; 3];
        s.region.constraints.clear();
        s.region.min_separation = Some(0.1);
        let m = Manifold::compile(&s).unwrap();
        for p in sample_points(&m, SamplePlan::new(7, 50)).unwrap() {
            for i in 0..3 {
                for j in 0..i {
                    assert!((p[i] - p[j]).norm() >= 0.1);
                }
            }
        }
    }

    #[test]
    fn empty_region_is_reported() {
        let mut s = ManifoldSpec::from_json(super::super::tests::lobachevsky_json()).unwrap();
        s.region.constraints[0].min = 100.0;
        let m = Manifold::compile(&s).unwrap();
        assert_eq!(sample_points(&m, SamplePlan::new(1, 1)), Err(Error::RegionEmpty(100_000)));
    }
}
