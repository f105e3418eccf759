use crate::error::{Error, Result};
use crate::exprjet::{eval, Dual, Expr, Jet2};
use crate::tensor::{Down, Tensor, Up};
use crate::{Dual64, Jet64, C64};

use super::{Manifold, Product};

/// Every structure field at one point, with derivatives.
///
/// The product only needs first derivatives downstream, except for the
/// metric-level Legendre transform, which uses `c2` when available.
#[derive(Clone, Debug)]
pub struct PointFields {
    pub n: usize,
    pub u: Vec<C64>,
    pub c: Tensor<Dual64>,
    pub c2: Option<Tensor<Jet64>>,
    pub e: Vec<Jet64>,
    pub euler: Option<Vec<Jet64>>,
    pub g: Option<Tensor<Jet64>>,
    pub g2: Option<Tensor<Jet64>>,
    pub conn: Option<Tensor<Dual64>>,
    pub lame: Option<Vec<Jet64>>,
}

impl PointFields {
    pub fn metric(&self) -> Result<&Tensor<Jet64>> {
        self.g.as_ref().ok_or(Error::Missing("metric"))
    }

    pub fn second_metric(&self) -> Result<&Tensor<Jet64>> {
        self.g2.as_ref().ok_or(Error::Missing("second metric"))
    }

    pub fn euler(&self) -> Result<&[Jet64]> {
        self.euler.as_deref().ok_or(Error::Missing("Euler field"))
    }

    pub fn c_values(&self) -> Tensor<C64> {
        self.c.values()
    }

    pub fn e_values(&self) -> Vec<C64> {
        self.e.iter().map(|j| j.val).collect()
    }

    pub fn e_dual(&self) -> Vec<Dual64> {
        self.e.iter().map(Dual::from_jet).collect()
    }

    pub fn euler_dual(&self) -> Result<Vec<Dual64>> {
        Ok(self.euler()?.iter().map(Dual::from_jet).collect())
    }

    /// `X∘` as the matrix `(X∘)^i_k = c^i_{kl} X^l`.
    pub fn mult_matrix(&self, x: &[C64]) -> Vec<Vec<C64>> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|k| (0..n).map(|l| self.c[[i, k, l]].val * x[l]).sum()).collect()).collect()
    }
}

/// Anything that can produce [`PointFields`]: compiled specs, and the
/// structures rebuilt from pencils or Legendre transforms.
pub trait FieldSource {
    fn label(&self) -> String;
    fn dim(&self) -> usize;
    fn fields_at(&self, u: &[C64]) -> Result<PointFields>;
}

pub(crate) fn product_constant(n: usize, shifted: bool) -> Tensor<Jet64> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    Tensor::from_fn(n, &[Up, Down, Down], |i| {
        let hit = if shifted { i[0] == i[1] + i[2] } else { i[0] == i[1] && i[1] == i[2] };
        Jet2::constant(if hit { one } else { zero }, n)
    })
}

impl Manifold {
    fn jets(&self, es: &[Expr], vars: &[Jet64]) -> Result<Vec<Jet64>> {
        es.iter().map(|e| eval(e, vars, &self.params).map_err(Error::from)).collect()
    }

    pub fn fields(&self, u: &[C64]) -> Result<PointFields> {
        let n = self.n();
        if u.len() != n {
            return Err(Error::Spec(format!("point has {} coordinates, chart has {n}", u.len())));
        }
        let vars = Jet2::point(u);
        let c2 = match &self.product {
            Product::Canonical => product_constant(n, false),
            Product::Shifted => product_constant(n, true),
            Product::Explicit(es) => {
                let v = self.jets(es, &vars)?;
                Tensor::from_fn(n, &[Up, Down, Down], |i| v[(i[0] * n + i[1]) * n + i[2]])
            }
        };
        let matrix = |es: &Option<Vec<Expr>>| -> Result<Option<Tensor<Jet64>>> {
            es.as_ref()
                .map(|es| {
                    let v = self.jets(es, &vars)?;
                    Ok(Tensor::from_fn(n, &[Down, Down], |i| v[i[0] * n + i[1]]))
                })
                .transpose()
        };
        let conn = self
            .connection
            .as_ref()
            .map(|es| -> Result<Tensor<Dual64>> {
                let v = self.jets(es, &vars)?;
                Ok(Tensor::from_fn(n, &[Up, Down, Down], |i| Dual::from_jet(&v[(i[0] * n + i[1]) * n + i[2]])))
            })
            .transpose()?;
        Ok(PointFields {
            n,
            u: u.to_vec(),
            c: c2.map(|j| Dual::from_jet(&j)),
            c2: Some(c2),
            e: self.jets(&self.e, &vars)?,
            euler: self.euler.as_ref().map(|es| self.jets(es, &vars)).transpose()?,
            g: matrix(&self.g)?,
            g2: matrix(&self.g2)?,
            conn,
            lame: self.lame.as_ref().map(|es| self.jets(es, &vars)).transpose()?,
        })
    }
}

impl FieldSource for Manifold {
    fn label(&self) -> String {
        self.spec.name.clone()
    }

    fn dim(&self) -> usize {
        self.n()
    }

    fn fields_at(&self, u: &[C64]) -> Result<PointFields> {
        self.fields(u)
    }
}
