//! JSON documents for structure equations.
//!
//! ```json
//! {"name": "N3", "n": 3, "terms": [
//!   {"k": 3, "type": "pm", "i": 1, "j": 1, "re": 1, "im": 0}]}
//! ```
//!
//! Each term adds (re + √−1 im)·ψ_i∧ψ_j to dφ_k, with ψ = φ, φ̄ according to
//! `type`. Indices are 1-based and repeated keys are summed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::StructureEquations;
use crate::tensor::{cx, MAX_DIM, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Pp,
    Pm,
    Mm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub k: i64,
    #[serde(rename = "type")]
    pub kind: TermKind,
    pub i: i64,
    pub j: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    pub name: String,
    pub n: i64,
    pub terms: Vec<TermRecord>,
}

impl InputDocument {
    pub fn from_structure(s: &StructureEquations) -> Self {
        let n = s.n();
        let mut terms = Vec::new();
        let mut push = |kind, k: usize, i: usize, j: usize, z: crate::tensor::Cx| {
            if z != ZERO {
                terms.push(TermRecord { k: k as i64 + 1, kind, i: i as i64 + 1, j: j as i64 + 1, re: z.re, im: z.im });
            }
        };
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if i < j {
                        push(TermKind::Pp, k, i, j, s.e(k, i, j));
                        push(TermKind::Mm, k, i, j, s.g(k, i, j));
                    }
                    push(TermKind::Pm, k, i, j, s.f(k, i, j));
                }
            }
        }
        terms.sort_by_key(|t| (t.k, t.kind, t.i, t.j));
        InputDocument { name: s.name().to_string(), n: n as i64, terms }
    }

    pub fn to_structure(&self) -> Result<StructureEquations> {
        if !(2..=MAX_DIM as i64).contains(&self.n) {
            return Err(Error::Schema(format!("n = {} outside 2..={MAX_DIM}", self.n)));
        }
        let n = self.n as usize;
        let mut sums: BTreeMap<(TermKind, usize, usize, usize), (f64, f64)> = BTreeMap::new();
        for (p, t) in self.terms.iter().enumerate() {
            for (field, v) in [("k", t.k), ("i", t.i), ("j", t.j)] {
                if !(1..=self.n).contains(&v) {
                    return Err(Error::Schema(format!("terms[{p}].{field} = {v} outside 1..={}", self.n)));
                }
            }
            if t.kind != TermKind::Pm && t.i >= t.j {
                return Err(Error::Schema(format!(
                    "terms[{p}]: {:?} term needs i < j, got i = {}, j = {}",
                    t.kind, t.i, t.j
                )));
            }
            if !(t.re.is_finite() && t.im.is_finite()) {
                return Err(Error::Schema(format!("terms[{p}]: coefficient is not finite")));
            }
            let e = sums.entry((t.kind, t.k as usize - 1, t.i as usize - 1, t.j as usize - 1)).or_insert((0.0, 0.0));
            e.0 += t.re;
            e.1 += t.im;
        }
        let mut b = StructureEquations::builder(n);
        for ((kind, k, i, j), (re, im)) in sums {
            let z = cx(re, im);
            b = match kind {
                TermKind::Pp => b.pp(k, i, j, z)?,
                TermKind::Pm => b.pm(k, i, j, z)?,
                TermKind::Mm => b.mm(k, i, j, z)?,
            };
        }
        b.build(&self.name)
    }
}

/// Parses a JSON document; syntax errors carry line and column.
pub fn parse(bytes: &[u8]) -> Result<StructureEquations> {
    parse_document(bytes)?.to_structure()
}

pub fn parse_document(bytes: &[u8]) -> Result<InputDocument> {
    serde_json::from_slice(bytes).map_err(|e| {
        if e.is_data() {
            Error::Schema(format!("{e}"))
        } else {
            Error::Parse { line: e.line(), column: e.column(), msg: e.to_string() }
        }
    })
}

/// Canonical JSON: terms sorted by (k, type, i, j), floats in shortest round-trip form.
pub fn emit(s: &StructureEquations) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&InputDocument::from_structure(s)).expect("documents always serialize");
    out.push(b'\n');
    out
}
