use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::charts::FlatChart;
use super::*;
use crate::error::{Error, Result};
use crate::hamops::{lauricella_normal_fields, NormalFieldSpec};

/// What an entry claims; each flag selects a family of checks in [`super::run_suite`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    RiemannianFManifold,
    Killing,
    Homogeneous,
    Semisimple,
    Pencil,
    FlatNormalBundle,
    /// Carries explicit Christoffel symbols of a flat structure.
    FlatStructure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub spec: ManifoldSpec,
    pub flags: BTreeSet<Flag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_chart: Option<FlatChart>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub normal_fields: Vec<NormalFieldSpec>,
    /// Named vector fields in the chart of the entry, flat for the natural
    /// connection unless listed in `broken_fields`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub legendre_fields: BTreeMap<String, Vec<String>>,
    /// Field name → catalog entry its Legendre transform should reproduce.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub legendre_targets: BTreeMap<String, String>,
    /// Fields kept as documented corruptions; they must fail flatness.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub broken_fields: Vec<String>,
    /// Flat fields built from special functions, by name.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub function_fields: Vec<String>,
}

impl CatalogEntry {
    fn new(spec: ManifoldSpec, flags: &[Flag]) -> Self {
        CatalogEntry {
            spec,
            flags: flags.iter().copied().collect(),
            flat_chart: None,
            normal_fields: Vec::new(),
            legendre_fields: BTreeMap::new(),
            legendre_targets: BTreeMap::new(),
            broken_fields: Vec::new(),
            function_fields: Vec::new(),
        }
    }

    /// An entry for a spec from outside the catalog. A metric claims a
    /// Riemannian F-manifold with Killing unit, a second metric a pencil,
    /// explicit Christoffel symbols a flat structure.
    pub fn from_spec(spec: ManifoldSpec) -> Self {
        use Flag::*;
        let mut flags = Vec::new();
        if spec.g.is_some() {
            flags.extend([RiemannianFManifold, Killing]);
            if spec.euler.is_some() {
                flags.push(Homogeneous);
            }
            if spec.product == ProductSpec::Canonical {
                flags.push(Semisimple);
            }
        }
        if spec.g2.is_some() {
            flags.push(Pencil);
        }
        if spec.connection.is_some() {
            flags.push(FlatStructure);
        }
        CatalogEntry::new(spec, &flags)
    }

    pub fn has(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }

    /// Riemannian F-manifold with Killing unit.
    pub fn is_rfk(&self) -> bool {
        self.has(Flag::RiemannianFManifold) && self.has(Flag::Killing)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("entry serializes")
    }
}

const NAMES: [&str; 15] = [
    "lobachevsky",
    "nonss2d",
    "nonss3d",
    "lauricella-eps-minus1-n3",
    "q0-d-minus1",
    "q0-d0",
    "q0-d1",
    "af-pencil-n3",
    "af-pencil-n4",
    "pencil-63",
    "appendix-case-1",
    "appendix-case-2",
    "appendix-case-3",
    "appendix-case-4",
    "appendix-case-5",
];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

pub fn entry(name: &str) -> Result<CatalogEntry> {
    use Flag::*;
    let e = match name {
        "lobachevsky" => {
            let mut e = CatalogEntry::new(lobachevsky(), &[RiemannianFManifold, Killing, Semisimple, FlatNormalBundle]);
            e.flat_chart = Some(FlatChart::lobachevsky());
            e.normal_fields = vec![NormalFieldSpec { epsilon: -1.0, x: vec![s("1"), s("1")] }];
            e
        }
        "nonss2d" => CatalogEntry::new(nonss2d(), &[RiemannianFManifold, Killing, Homogeneous, FlatStructure]),
        "nonss3d" => CatalogEntry::new(nonss3d(), &[RiemannianFManifold, Killing, Homogeneous, FlatStructure]),
        "lauricella-eps-minus1-n3" => {
            let mut e = CatalogEntry::new(lauricella(3), &[RiemannianFManifold, Killing, Homogeneous, Semisimple, FlatNormalBundle, FlatStructure]);
            e.spec.expected.big_d = Some(6.0);
            e.normal_fields = lauricella_normal_fields(3);
            e
        }
        "q0-d-minus1" | "q0-d0" | "q0-d1" => {
            let d = match name {
                "q0-d-minus1" => -1,
                "q0-d0" => 0,
                _ => 1,
            };
            let mut e = CatalogEntry::new(q0(d), &[RiemannianFManifold, Killing, Homogeneous, Semisimple]);
            if d == -1 {
                e.spec.connection = Some(q0_connection());
                e.flags.insert(FlatStructure);
                for f in ["X2", "X3", "X3-printed"] {
                    e.legendre_fields.insert(s(f), q0_flat_field(f).unwrap().iter().map(|x| s(x)).collect());
                }
                e.legendre_targets.insert(s("X2"), s("q0-d0"));
                e.legendre_targets.insert(s("X3"), s("q0-d1"));
                e.broken_fields.push(s("X3-printed"));
            }
            e
        }
        "af-pencil-n3" | "af-pencil-n4" => {
            let n = if name.ends_with('3') { 3 } else { 4 };
            let mut e = CatalogEntry::new(af_pencil(n), &[RiemannianFManifold, Killing, Homogeneous, Semisimple, Pencil]);
            e.spec.expected.big_d = Some(n as f64 + 1.0);
            e
        }
        "pencil-63" => {
            let mut e = CatalogEntry::new(pencil63(), &[RiemannianFManifold, Killing, Homogeneous, Semisimple, Pencil, FlatStructure]);
            e.spec.expected.big_d = Some(4.0);
            e.function_fields.push(s("X2-legendre-P"));
            e
        }
        _ => {
            let k = name.strip_prefix("appendix-case-").and_then(|k| k.parse::<usize>().ok()).filter(|k| (1..=5).contains(k));
            let Some(k) = k else {
                return Err(Error::UnknownEntry(name.to_string()));
            };
            let mut e = CatalogEntry::new(appendix_case(k), &[FlatStructure]);
            e.flat_chart = Some(FlatChart::appendix(k));
            e
        }
    };
    Ok(e)
}
