//! Chart-level manifold descriptions: the JSON [`ManifoldSpec`], its
//! compiled form [`Manifold`], point sampling and the product/metric axiom
//! checks.

mod checks;
mod fields;
mod sample;

pub use checks::*;
pub use fields::{FieldSource, PointFields};
pub use sample::{sample_points, SamplePlan};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprjet::{parse_with, Expr, Names, Params, MAX_DIM};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductSpec {
    /// `c^i_{jk} = δ^i_j δ^i_k`.
    Canonical,
    /// `c^k_{ij} = 1` iff `k = i + j` (0-based), i.e. truncated polynomial
    /// multiplication with unit `∂_1`.
    ShiftedCanonical,
    /// Full table `c[i][j][k] = c^i_{jk}`.
    Explicit(Vec<Vec<Vec<String>>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    /// `Re(expr) ≥ min`.
    Positive,
    /// `|expr| ≥ min`.
    Nonzero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub expr: String,
    pub kind: ConstraintKind,
    #[serde(default)]
    pub min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Region {
    /// Sampling box `[lo, hi]` per coordinate.
    pub bounds: Vec<[f64; 2]>,
    /// Minimal pairwise coordinate separation, for canonical charts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Expected {
    /// Eigenvalue `d` of `E(H) = dH` for the Lamé coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Exponent of `ℒ_E g₂^{-1} = (d − 1)g₂^{-1}` for a pencil.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pencil_d: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub big_d: Option<f64>,
    #[serde(rename = "I1", default, skip_serializing_if = "Option::is_none")]
    pub i1: Option<f64>,
    #[serde(rename = "I2", default, skip_serializing_if = "Option::is_none")]
    pub i2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
}

/// Serialized chart description. Every field value is a DSL string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub name: String,
    pub n: usize,
    pub coords: Vec<String>,
    /// Named subexpressions, inlined wherever their name appears.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub defs: BTreeMap<String, String>,
    pub product: ProductSpec,
    pub e: Vec<String>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub euler: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<Vec<Vec<String>>>,
    /// Explicit Christoffel symbols `connection[i][j][k] = Γ^i_{jk}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<Vec<Vec<Vec<String>>>>,
    /// Lamé coefficients of a diagonal metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lame: Option<Vec<String>>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub region: Region,
    #[serde(default)]
    pub expected: Expected,
}

impl ManifoldSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Product {
    Canonical,
    Shifted,
    Explicit(Vec<Expr>),
}

/// A validated spec with parsed expressions and bound parameters.
#[derive(Clone, Debug)]
pub struct Manifold {
    pub spec: ManifoldSpec,
    pub params: Params<f64>,
    pub(crate) names: Names,
    pub(crate) product: Product,
    pub(crate) e: Vec<Expr>,
    pub(crate) euler: Option<Vec<Expr>>,
    pub(crate) g: Option<Vec<Expr>>,
    pub(crate) g2: Option<Vec<Expr>>,
    pub(crate) connection: Option<Vec<Expr>>,
    pub(crate) lame: Option<Vec<Expr>>,
    pub(crate) constraints: Vec<(Expr, ConstraintKind, f64)>,
}

struct Compiler<'a> {
    n: usize,
    names: Names,
    defs: BTreeMap<String, Expr>,
    params: &'a Params<f64>,
}

impl Compiler<'_> {
    fn expr(&self, field: &str, src: &str) -> Result<Expr> {
        let e = parse_with(src, &self.names).map_err(|err| Error::Parse { field: field.to_string(), err })?;
        let e = inline(&e, &self.defs, 0)?;
        if let Some(k) = e.max_var() {
            if k >= self.n {
                return Err(Error::Spec(format!("{field}: coordinate index {} exceeds n = {}", k + 1, self.n)));
            }
        }
        for p in e.params() {
            if !self.params.contains_key(&p) {
                return Err(Error::Spec(format!("{field}: unbound parameter `{p}`")));
            }
        }
        Ok(e)
    }

    fn vector(&self, field: &str, v: &[String]) -> Result<Vec<Expr>> {
        if v.len() != self.n {
            return Err(Error::Spec(format!("{field}: expected {} components, got {}", self.n, v.len())));
        }
        v.iter().enumerate().map(|(i, s)| self.expr(&format!("{field}[{i}]"), s)).collect()
    }

    fn matrix(&self, field: &str, m: &[Vec<String>]) -> Result<Vec<Expr>> {
        if m.len() != self.n || m.iter().any(|r| r.len() != self.n) {
            return Err(Error::Spec(format!("{field}: expected a {0}x{0} table", self.n)));
        }
        let mut out = Vec::with_capacity(self.n * self.n);
        for (i, row) in m.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                out.push(self.expr(&format!("{field}[{i}][{j}]"), s)?);
            }
        }
        Ok(out)
    }

    fn cube(&self, field: &str, t: &[Vec<Vec<String>>]) -> Result<Vec<Expr>> {
        if t.len() != self.n {
            return Err(Error::Spec(format!("{field}: expected {} slices", self.n)));
        }
        let mut out = Vec::new();
        for (i, m) in t.iter().enumerate() {
            out.extend(self.matrix(&format!("{field}[{i}]"), m)?);
        }
        Ok(out)
    }
}

fn inline(e: &Expr, defs: &BTreeMap<String, Expr>, depth: usize) -> Result<Expr> {
    if depth > 32 {
        return Err(Error::Spec("defs are cyclic".into()));
    }
    if !e.params().iter().any(|p| defs.contains_key(p)) {
        return Ok(e.clone());
    }
    inline(&e.substitute(&|p| defs.get(p).cloned()), defs, depth + 1)
}

impl Manifold {
    pub fn compile(spec: &ManifoldSpec) -> Result<Self> {
        Self::compile_with(spec, &BTreeMap::new())
    }

    /// Compile with parameter overrides (`--param k=v`).
    pub fn compile_with(spec: &ManifoldSpec, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let n = spec.n;
        if n == 0 || n > MAX_DIM {
            return Err(Error::Spec(format!("dimension {n} outside 1..={MAX_DIM}")));
        }
        if spec.coords.len() != n {
            return Err(Error::Spec(format!("{} coordinate names for n = {n}", spec.coords.len())));
        }
        let mut spec = spec.clone();
        for (k, v) in overrides {
            if !spec.params.contains_key(k) {
                return Err(Error::Spec(format!("unknown parameter `{k}`")));
            }
            spec.params.insert(k.clone(), *v);
        }
        let params: Params<f64> = spec.params.iter().map(|(k, v)| (k.clone(), C64::new(*v, 0.0))).collect();
        let names = Names::chart(&spec.coords);
        let mut defs = BTreeMap::new();
        for (k, src) in &spec.defs {
            let e = parse_with(src, &names).map_err(|err| Error::Parse { field: format!("defs.{k}"), err })?;
            defs.insert(k.clone(), e);
        }
        let cx = Compiler { n, names: names.clone(), defs, params: &params };
        let product = match &spec.product {
            ProductSpec::Canonical => Product::Canonical,
            ProductSpec::ShiftedCanonical => Product::Shifted,
            ProductSpec::Explicit(t) => Product::Explicit(cx.cube("product", t)?),
        };
        let e = cx.vector("e", &spec.e)?;
        let euler = spec.euler.as_ref().map(|v| cx.vector("E", v)).transpose()?;
        let g = spec.g.as_ref().map(|m| cx.matrix("g", m)).transpose()?;
        let g2 = spec.g2.as_ref().map(|m| cx.matrix("g2", m)).transpose()?;
        let connection = spec.connection.as_ref().map(|t| cx.cube("connection", t)).transpose()?;
        let lame = spec.lame.as_ref().map(|v| cx.vector("lame", v)).transpose()?;
        let mut constraints = Vec::new();
        for (i, c) in spec.region.constraints.iter().enumerate() {
            constraints.push((cx.expr(&format!("region.constraints[{i}]"), &c.expr)?, c.kind, c.min));
        }
        if !spec.region.bounds.is_empty() && spec.region.bounds.len() != n {
            return Err(Error::Spec(format!("region: {} bounds for n = {n}", spec.region.bounds.len())));
        }
        if spec.region.bounds.iter().any(|b| !(b[0] < b[1])) {
            return Err(Error::Spec("region: empty bound interval".into()));
        }
        Ok(Manifold { spec, params, names, product, e, euler, g, g2, connection, lame, constraints })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::compile(&ManifoldSpec::from_json(s)?)
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn names(&self) -> &Names {
        &self.names
    }

    pub fn has_metric(&self) -> bool {
        self.g.is_some()
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self.product, Product::Canonical)
    }

    /// Every compiled expression, labelled by field and flat index.
    pub fn expressions(&self) -> Vec<(String, &Expr)> {
        let explicit = match &self.product {
            Product::Explicit(c) => Some(c),
            _ => None,
        };
        let fields = [
            ("product", explicit),
            ("e", Some(&self.e)),
            ("E", self.euler.as_ref()),
            ("g", self.g.as_ref()),
            ("g2", self.g2.as_ref()),
            ("connection", self.connection.as_ref()),
            ("lame", self.lame.as_ref()),
        ];
        fields
            .into_iter()
            .filter_map(|(label, v)| v.map(|v| (label, v)))
            .flat_map(|(label, v)| v.iter().enumerate().map(move |(k, e)| (format!("{label}[{k}]"), e)))
            .collect()
    }

    /// Parse an auxiliary expression in this chart, with defs inlined and
    /// parameters checked.
    pub fn parse_expr(&self, field: &str, src: &str) -> Result<Expr> {
        let mut defs = BTreeMap::new();
        for (k, s) in &self.spec.defs {
            defs.insert(k.clone(), parse_with(s, &self.names).map_err(|err| Error::Parse { field: format!("defs.{k}"), err })?);
        }
        Compiler { n: self.n(), names: self.names.clone(), defs, params: &self.params }.expr(field, src)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn lobachevsky_json() -> &'static str {
        r#"{
  "name": "lobachevsky",
  "n": 2,
  "coords": ["x", "y"],
  "product": "canonical",
  "e": ["1", "1"],
  "g": [["2/(x - y)^2", "0"], ["0", "2/(x - y)^2"]],
  "params": {},
  "region": {"bounds": [[0.5, 4.0], [-2.0, 2.0]], "constraints": [{"expr": "x - y", "kind": "positive", "min": 0.1}]},
  "expected": {}
}"#
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = ManifoldSpec::from_json(lobachevsky_json()).unwrap();
        let once = s.to_json();
        let twice = ManifoldSpec::from_json(&once).unwrap().to_json();
        assert_eq!(once, twice);
        let m = Manifold::compile(&s).unwrap();
        assert!(m.is_canonical());
    }

    #[test]
    fn explicit_product_serializes_tagged() {
        let mut s = ManifoldSpec::from_json(lobachevsky_json()).unwrap();
        s.product = ProductSpec::Explicit(vec![vec![vec!["1".into(), "0".into()]; 2]; 2]);
        assert!(s.to_json().contains("\"explicit\""));
        assert_eq!(ManifoldSpec::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn validation_errors() {
        let mut s = ManifoldSpec::from_json(lobachevsky_json()).unwrap();
        s.e = vec!["1".into()];
        assert!(matches!(Manifold::compile(&s), Err(Error::Spec(_))));
        let mut s = ManifoldSpec::from_json(lobachevsky_json()).unwrap();
        s.e = vec!["k".into(), "1".into()];
        assert!(matches!(Manifold::compile(&s), Err(Error::Spec(m)) if m.contains("unbound")));
        let mut s = ManifoldSpec::from_json(lobachevsky_json()).unwrap();
        s.e = vec!["u3".into(), "1".into()];
        assert!(Manifold::compile(&s).is_err());
        let mut s = ManifoldSpec::from_json(lobachevsky_json()).unwrap();
        s.e = vec!["(1".into(), "1".into()];
        assert!(matches!(Manifold::compile(&s), Err(Error::Parse { .. })));
        assert!(matches!(Manifold::from_json("{ not json"), Err(Error::Json(_))));
    }

    #[test]
    fn defs_are_inlined() {
        let mut s = ManifoldSpec::from_json(lobachevsky_json()).unwrap();
        s.defs.insert("w".into(), "2/(x - y)^2".into());
        s.g = Some(vec![vec!["w".into(), "0".into()], vec!["0".into(), "w".into()]]);
        let m = Manifold::compile(&s).unwrap();
        assert!(m.g.as_ref().unwrap()[0].params().is_empty());
    }
}
