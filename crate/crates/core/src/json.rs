//! JSON interchange for structures, sign maps and circle points.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circle::{eval_relation, format_rational, parse_rational, CircleWitness, CirclePoint, LocalOrderConfig};
use crate::error::{FraisseError, Result};
use crate::hyper::SignMap;
use crate::structure::{Elem, FiniteStructure, Signature};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationJson {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionJson {
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureJson {
    pub relations: Vec<RelationJson>,
    #[serde(default)]
    pub functions: Vec<FunctionJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureJson {
    pub signature: SignatureJson,
    pub universe: Vec<Elem>,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<Vec<Elem>>>,
    #[serde(default)]
    pub functions: BTreeMap<String, BTreeMap<String, Elem>>,
}

impl StructureJson {
    pub fn of(s: &FiniteStructure) -> Self {
        let sig = s.signature();
        StructureJson {
            signature: SignatureJson {
                relations: sig.relations().iter().map(|r| RelationJson { name: r.name.clone(), arity: r.arity }).collect(),
                functions: sig.functions().iter().map(|f| FunctionJson { name: f.clone() }).collect(),
            },
            universe: s.elems(),
            relations: sig.relations().iter().enumerate().map(|(i, r)| (r.name.clone(), s.tuples(i))).collect(),
            functions: sig
                .functions()
                .iter()
                .enumerate()
                .map(|(i, f)| (f.clone(), s.fn_map(i).iter().map(|(x, y)| (x.to_string(), *y)).collect()))
                .collect(),
        }
    }

    pub fn to_structure(&self) -> Result<FiniteStructure> {
        let sig = Signature::new(
            self.signature.relations.iter().map(|r| (r.name.clone(), r.arity)).collect(),
            self.signature.functions.iter().map(|f| f.name.clone()).collect(),
        )?;
        let mut s = FiniteStructure::on(sig.clone(), self.universe.iter().copied());
        if s.len() != self.universe.len() {
            return Err(FraisseError::Parse("repeated universe element".into()));
        }
        for (name, tuples) in &self.relations {
            let r = sig.rel(name).ok_or_else(|| FraisseError::UnknownSymbol(name.clone()))?;
            for t in tuples {
                s.add_tuple(r, t)?;
            }
        }
        for (name, map) in &self.functions {
            let f = sig.func(name).ok_or_else(|| FraisseError::UnknownSymbol(name.clone()))?;
            for (x, &y) in map {
                let x: Elem = x.parse().map_err(|_| FraisseError::Parse(format!("bad element key `{x}`")))?;
                s.set_fn(f, x, y)?;
            }
        }
        s.validate()?;
        Ok(s)
    }
}

pub fn structure_to_string(s: &FiniteStructure) -> String {
    serde_json::to_string_pretty(&StructureJson::of(s)).expect("structure JSON is always serialisable")
}

pub fn structure_from_str(text: &str) -> Result<FiniteStructure> {
    let j: StructureJson = serde_json::from_str(text).map_err(|e| FraisseError::Parse(e.to_string()))?;
    j.to_structure()
}

/// `{"kind":"circle_point","q":"n/d","k":..,"n":..}`; `kind` may be omitted on input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CirclePointJson {
    #[serde(default = "circle_kind")]
    pub kind: String,
    pub q: String,
    pub k: u32,
    pub n: u32,
}

fn circle_kind() -> String {
    "circle_point".into()
}

impl CirclePointJson {
    pub fn of(p: &CirclePoint) -> Self {
        CirclePointJson { kind: circle_kind(), q: format_rational(&p.q), k: p.k, n: p.n }
    }

    pub fn to_point(&self) -> Result<CirclePoint> {
        if self.kind != "circle_point" {
            return Err(FraisseError::Parse(format!("expected kind circle_point, got {}", self.kind)));
        }
        CirclePoint::new(parse_rational(&self.q)?, self.k, self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalOrderJson {
    #[serde(default = "local_order_kind")]
    pub kind: String,
    pub n: u32,
    pub points: Vec<CirclePointJson>,
}

fn local_order_kind() -> String {
    "local_order".into()
}

impl LocalOrderJson {
    pub fn of(c: &LocalOrderConfig) -> Self {
        LocalOrderJson { kind: local_order_kind(), n: c.n, points: c.points.iter().map(CirclePointJson::of).collect() }
    }

    pub fn to_config(&self) -> Result<LocalOrderConfig> {
        if self.kind != "local_order" {
            return Err(FraisseError::Parse(format!("expected kind local_order, got {}", self.kind)));
        }
        LocalOrderConfig::new(self.n, self.points.iter().map(|p| p.to_point()).collect::<Result<_>>()?)
    }
}

/// `{"kind":"sign_map","arity":..,"values":[[tuple, sign]]}` on ascending tuples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignMapJson {
    pub kind: String,
    pub arity: usize,
    pub values: Vec<(Vec<Elem>, i8)>,
}

impl SignMapJson {
    pub fn of(m: &SignMap) -> Self {
        SignMapJson { kind: "sign_map".into(), arity: m.arity, values: m.values.iter().map(|(t, &v)| (t.clone(), v)).collect() }
    }

    pub fn to_map(&self) -> Result<SignMap> {
        if self.kind != "sign_map" {
            return Err(FraisseError::Parse(format!("expected kind sign_map, got {}", self.kind)));
        }
        let mut m = SignMap::new(self.arity);
        for (t, v) in &self.values {
            if t.len() != self.arity || v.abs() != 1 {
                return Err(FraisseError::Parse(format!("bad sign entry {t:?} ↦ {v}")));
            }
            m.set(t, *v)?;
        }
        Ok(m)
    }
}

/// A no-dense-conjugacy witness: the two partial automorphisms with their
/// domains as points and as structures, and one obstruction per sector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleWitnessJson {
    pub kind: String,
    pub n: u32,
    pub q: String,
    pub a: LocalOrderJson,
    pub f_a: BTreeMap<String, Elem>,
    pub a_structure: StructureJson,
    pub b: LocalOrderJson,
    pub f_b: BTreeMap<String, Elem>,
    pub obstructions: Vec<StructureJson>,
}

fn map_json(m: &BTreeMap<Elem, Elem>) -> BTreeMap<String, Elem> {
    m.iter().map(|(x, y)| (x.to_string(), *y)).collect()
}

pub fn map_from_json(m: &BTreeMap<String, Elem>) -> Result<BTreeMap<Elem, Elem>> {
    m.iter()
        .map(|(x, &y)| Ok((x.parse().map_err(|_| FraisseError::Parse(format!("bad element key `{x}`")))?, y)))
        .collect()
}

impl CircleWitnessJson {
    pub fn of(w: &CircleWitness) -> Self {
        CircleWitnessJson {
            kind: "circle_witness".into(),
            n: w.n,
            q: format_rational(&w.q),
            a: LocalOrderJson::of(&w.a),
            f_a: map_json(&w.f_a),
            a_structure: StructureJson::of(&eval_relation(&w.a)),
            b: LocalOrderJson::of(&w.b),
            f_b: map_json(&w.f_b),
            obstructions: w.obstructions.iter().map(StructureJson::of).collect(),
        }
    }
}
