//! Bundled reference data: polynomials, Ising models, an embedding, folding instances
//! and hardware graphs. Polynomial fixtures are kept as text exactly as transcribed;
//! `psvkma` carries a list of corrections applied when loaded in sanitized form.

use serde::Serialize;

use crate::chimera::GraphSpec;
use crate::embedding::{EmbeddedIsing, Embedding};
use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::lattice::Instance;
use crate::poly::MultilinearPolynomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Polynomial,
    Ising,
    EmbeddedIsing,
    Embedding,
    Instance,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Sanitized,
    Verbatim,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureInfo {
    pub name: &'static str,
    pub kind: FixtureKind,
    pub description: &'static str,
    /// `(verbatim, replacement)` text substitutions for the sanitized form.
    pub sanitizations: &'static [(&'static str, &'static str)],
    #[serde(skip)]
    text: &'static str,
}

#[derive(Debug, Clone)]
pub enum Fixture {
    Polynomial(MultilinearPolynomial),
    Ising(IsingModel),
    EmbeddedIsing(EmbeddedIsing),
    Embedding(Embedding),
    Instance(Instance),
    Graph(GraphSpec),
}

const PSVKMA_FIXES: &[(&str, &str)] = &[
    ("33q1q4q5q7q7", "33q1q4q5q6q7"),
    ("37q2q4q6q6q7", "37q2q4q5q6q7"),
    ("99q5q2q4q5q6q7", "99q1q2q4q5q6q7"),
    ("33q3q1q5q6q7", "33q3q4q5q6q7"),
    ("62q1q4q4q5q6q7", "62q1q3q4q5q6q7"),
];

macro_rules! fixture {
    ($name:literal, $kind:ident, $file:literal, $desc:literal) => {
        fixture!($name, $kind, $file, $desc, &[])
    };
    ($name:literal, $kind:ident, $file:literal, $desc:literal, $fixes:expr) => {
        FixtureInfo {
            name: $name,
            kind: FixtureKind::$kind,
            description: $desc,
            sanitizations: $fixes,
            text: include_str!(concat!("../fixtures/", $file)),
        }
    };
}

static FIXTURES: &[FixtureInfo] = &[
    fixture!(
        "psvkma",
        Polynomial,
        "psvkma.txt",
        "PSVKMA in vacuo, 7 free turn bits, fitted contact energies",
        PSVKMA_FIXES
    ),
    fixture!(
        "exp1",
        Polynomial,
        "exp1.txt",
        "6-variable PSVKMA subproblem used for the first hardware run"
    ),
    fixture!(
        "exp2",
        Polynomial,
        "exp2.txt",
        "PSVKMA with q1 = 0, 6 variables"
    ),
    fixture!(
        "exp3",
        Polynomial,
        "exp3.txt",
        "3-variable PSVKMA subproblem, quadratized with one ancilla"
    ),
    fixture!(
        "exp4",
        Polynomial,
        "exp4.txt",
        "8-variable PSVKMA subproblem containing exp2 and exp3 as restrictions"
    ),
    fixture!(
        "hpph",
        Polynomial,
        "hpph.txt",
        "HPPH in vacuo, 3 free turn bits"
    ),
    fixture!(
        "exp6",
        Polynomial,
        "exp6.txt",
        "HPPH with the chaperone potential, 4 free turn bits"
    ),
    fixture!(
        "exp6_vacuo",
        Polynomial,
        "exp6_vacuo.txt",
        "HPPH without the chaperone on the 01 prefix, 4 free turn bits"
    ),
    fixture!(
        "exp3_ising",
        Ising,
        "exp3_ising.json",
        "Normalized 4-spin Ising form of exp3 after one collapse with delta 9"
    ),
    fixture!(
        "exp6_ising",
        Ising,
        "exp6_ising.json",
        "Normalized 6-spin Ising form of exp6 after two collapses"
    ),
    fixture!(
        "exp6_embedded",
        EmbeddedIsing,
        "exp6_embedded.json",
        "exp6_ising placed on one 8-qubit cell with two 2-qubit chains"
    ),
    fixture!(
        "exp6_embedding",
        Embedding,
        "exp6_embedding.json",
        "Chains and coupler assignment producing exp6_embedded"
    ),
    fixture!(
        "exp3_embedding",
        Embedding,
        "exp3_embedding.json",
        "5-qubit placement of exp3_ising on one cell, q4 as a 2-qubit chain"
    ),
    fixture!(
        "hpph_instance",
        Instance,
        "hpph_instance.json",
        "HPPH on the square lattice, HP contacts"
    ),
    fixture!(
        "hpph_chaperone_instance",
        Instance,
        "hpph_chaperone_instance.json",
        "HPPH with three forbidden sites, penalty 4 per occupying residue"
    ),
    fixture!(
        "psvkma_instance",
        Instance,
        "psvkma_instance.json",
        "PSVKMA with four attractive contact energies fitted to the psvkma polynomial"
    ),
    fixture!(
        "chimera_1x1",
        Graph,
        "chimera_1x1.json",
        "One K4,4 unit cell"
    ),
    fixture!(
        "chimera_4x4",
        Graph,
        "chimera_4x4.json",
        "Full 4x4 grid of K4,4 cells, 128 qubits"
    ),
    fixture!(
        "chimera_4x4_masked",
        Graph,
        "chimera_4x4_masked.json",
        "4x4 grid with an illustrative mask of 13 qubits, 115 usable"
    ),
];

/// Names accepted in addition to the canonical ones.
const ALIASES: &[(&str, &str)] = &[("exp5", "hpph")];

pub fn list() -> &'static [FixtureInfo] {
    FIXTURES
}

pub fn info(name: &str) -> Result<&'static FixtureInfo> {
    let name = ALIASES
        .iter()
        .find(|(a, _)| *a == name)
        .map(|(_, n)| *n)
        .unwrap_or(name);
    FIXTURES
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFixture(name.to_string()))
}

impl FixtureInfo {
    pub fn text(&self, variant: Variant) -> String {
        let mut s = self.text.trim_end().to_string();
        if variant == Variant::Sanitized {
            for (from, to) in self.sanitizations {
                s = s.replace(from, to);
            }
        }
        s
    }
}

pub fn load_fixture(name: &str) -> Result<Fixture> {
    load_fixture_variant(name, Variant::Sanitized)
}

pub fn load_fixture_variant(name: &str, variant: Variant) -> Result<Fixture> {
    let f = info(name)?;
    let text = f.text(variant);
    Ok(match f.kind {
        FixtureKind::Polynomial => Fixture::Polynomial(MultilinearPolynomial::parse(&text)?),
        FixtureKind::Ising => Fixture::Ising(serde_json::from_str(&text)?),
        FixtureKind::EmbeddedIsing => Fixture::EmbeddedIsing(serde_json::from_str(&text)?),
        FixtureKind::Embedding => Fixture::Embedding(serde_json::from_str(&text)?),
        FixtureKind::Instance => Fixture::Instance(serde_json::from_str(&text)?),
        FixtureKind::Graph => Fixture::Graph(serde_json::from_str(&text)?),
    })
}

fn wrong_kind(name: &str, want: &str) -> Error {
    Error::validation(format!("fixture '{name}' is not {want}"))
}

pub fn polynomial(name: &str) -> Result<MultilinearPolynomial> {
    match load_fixture(name)? {
        Fixture::Polynomial(p) => Ok(p),
        _ => Err(wrong_kind(name, "a polynomial")),
    }
}

pub fn ising(name: &str) -> Result<IsingModel> {
    match load_fixture(name)? {
        Fixture::Ising(m) => Ok(m),
        Fixture::EmbeddedIsing(e) => Ok(e.model),
        _ => Err(wrong_kind(name, "an Ising model")),
    }
}

pub fn embedded(name: &str) -> Result<EmbeddedIsing> {
    match load_fixture(name)? {
        Fixture::EmbeddedIsing(e) => Ok(e),
        _ => Err(wrong_kind(name, "an embedded Ising model")),
    }
}

pub fn embedding(name: &str) -> Result<Embedding> {
    match load_fixture(name)? {
        Fixture::Embedding(e) => Ok(e),
        _ => Err(wrong_kind(name, "an embedding")),
    }
}

pub fn instance(name: &str) -> Result<Instance> {
    match load_fixture(name)? {
        Fixture::Instance(i) => Ok(i),
        _ => Err(wrong_kind(name, "an instance")),
    }
}

pub fn graph(name: &str) -> Result<GraphSpec> {
    match load_fixture(name)? {
        Fixture::Graph(g) => Ok(g),
        _ => Err(wrong_kind(name, "a graph")),
    }
}
