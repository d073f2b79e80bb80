//! End-to-end run: compile, fix, quadratize, convert to spins, embed, solve. Every
//! intermediate artifact is written under the output directory and listed in the
//! manifest.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chimera::GraphSpec;
use crate::embedding::{
    apply_embedding, embed, unembed, verify_embedding, EmbedOptions, EmbeddedIsing, Embedding,
    EmbeddingReport, FieldDistribution, GammaRule, UnembedPolicy, VERIFY_MAX_QUBITS,
};
use crate::error::{Error, Result};
use crate::fixtures::{self, Fixture, Variant};
use crate::io::{self, ArtifactWriter};
use crate::ising::{mask_from_spins, to_ising, IsingModel};
use crate::lattice::{assignment_bits, decode_turns, Instance, TurnLayout};
use crate::poly::{fix_variables, MultilinearPolynomial, MAX_EXHAUSTIVE_ARITY};
use crate::quadratize::{quadratize, CollapseSpec, Quadratization, QuadratizationPlan};
use crate::rational::{parse_rational, Exact, Rational};
use crate::solvers::{exhaustive_ground_states, simulated_anneal, SaSchedule, SampleSet};

/// Variable bindings `q1=0,q3=1`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(pub Vec<(usize, bool)>);

impl FromStr for Bindings {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for item in s.split([',', ';']).map(str::trim).filter(|t| !t.is_empty()) {
            let bad = || Error::validation(format!("binding '{item}' is not of the form q3=1"));
            let (var, val) = item.split_once('=').ok_or_else(bad)?;
            let var = var.trim();
            let idx: usize = var
                .strip_prefix('q')
                .unwrap_or(var)
                .parse()
                .map_err(|_| bad())?;
            let val = match val.trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            out.push((idx, val));
        }
        Ok(Bindings(out))
    }
}

impl std::fmt::Display for Bindings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(v, b)| format!("q{v}={}", *b as u8)).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for Bindings {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bindings {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `q1q2=6,q3q4=4`; a collapse without `=delta` gets the automatic weight.
pub fn parse_plan(s: &str) -> Result<QuadratizationPlan> {
    let mut collapses = Vec::new();
    for item in s.split([',', ';']).map(str::trim).filter(|t| !t.is_empty()) {
        let bad = || Error::validation(format!("collapse '{item}' is not of the form q1q2=6"));
        let (pair, delta) = match item.split_once('=') {
            Some((p, d)) => (p.trim(), Some(parse_rational(d)?)),
            None => (item, None),
        };
        let idx: Vec<usize> = pair
            .split('q')
            .filter(|t| !t.is_empty())
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [i, j] = idx[..] else {
            return Err(bad());
        };
        collapses.push(CollapseSpec::new(i, j, delta));
    }
    Ok(QuadratizationPlan { collapses })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Full,
    /// Independent subproblems, each with its own fixed variables.
    Fixings { subproblems: Vec<Bindings> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolverChoice {
    Exhaustive,
    Sa {
        reads: usize,
        sweeps: usize,
        beta_min: f64,
        beta_max: f64,
    },
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Exhaustive
    }
}

fn default_graph() -> GraphSpec {
    GraphSpec {
        m: 4,
        n: 4,
        k: 4,
        masked: Vec::new(),
    }
}

fn default_gamma() -> GammaRule {
    GammaRule::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Instance or polynomial file, or `fixture:NAME`.
    pub input: String,
    #[serde(default)]
    pub scheme: Scheme,
    /// Applied to every subproblem; the greedy plan when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<QuadratizationPlan>,
    #[serde(default = "default_graph")]
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<Embedding>,
    #[serde(default = "default_gamma")]
    pub gamma: GammaRule,
    #[serde(default)]
    pub field_distribution: FieldDistribution,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "io::default_out_dir")]
    pub out_dir: PathBuf,
    /// Use fixtures exactly as transcribed instead of the sanitized form.
    #[serde(default)]
    pub verbatim_fixtures: bool,
}

impl PipelineConfig {
    pub fn new(input: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input: input.into(),
            scheme: Scheme::Full,
            plan: None,
            graph: default_graph(),
            hint: None,
            gamma: GammaRule::Auto,
            field_distribution: FieldDistribution::Root,
            solver: SolverChoice::Exhaustive,
            seed: 0,
            out_dir: out_dir.into(),
            verbatim_fixtures: false,
        }
    }

    fn variant(&self) -> Variant {
        if self.verbatim_fixtures {
            Variant::Verbatim
        } else {
            Variant::Sanitized
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub assignment: String,
    pub turns: String,
    pub points: String,
    pub self_avoiding: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubproblemReport {
    pub bindings: Bindings,
    pub directory: String,
    pub arity: usize,
    pub ancillas: usize,
    pub deltas: Vec<Exact>,
    pub logical_spins: usize,
    pub physical_qubits: usize,
    pub embedding_valid: Option<bool>,
    pub solver: String,
    /// Lowest energy found, in the units of the full polynomial.
    pub energy: Option<Exact>,
    /// Full-space assignments (`q1 q2 ...`) reaching `energy`.
    pub assignments: Vec<String>,
    pub chain_breaks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub input: String,
    pub arity: usize,
    pub subproblems: Vec<SubproblemReport>,
    pub best_energy: Option<Exact>,
    pub best_assignments: Vec<String>,
    /// Present when the input was a folding instance.
    pub folds: Vec<FoldSummary>,
    /// Relative to the output directory in the written report.
    pub manifest: PathBuf,
}

enum Source {
    Instance(Box<Instance>),
    Polynomial(MultilinearPolynomial),
}

fn load_source(spec: &str, variant: Variant) -> Result<Source> {
    if let Some(name) = io::fixture_name(spec) {
        return match fixtures::load_fixture_variant(name, variant)? {
            Fixture::Instance(i) => Ok(Source::Instance(Box::new(i))),
            Fixture::Polynomial(p) => Ok(Source::Polynomial(p)),
            _ => Err(Error::validation(format!(
                "fixture '{name}' is neither an instance nor a polynomial"
            ))),
        };
    }
    let text = io::read_text(Path::new(spec))?;
    let value: Option<serde_json::Value> = serde_json::from_str(&text).ok();
    match value {
        Some(v) if v.get("sequence").is_some() => serde_json::from_value(v)
            .map(|i| Source::Instance(Box::new(i)))
            .map_err(|e| Error::validation(format!("{spec}: {e}"))),
        Some(v) => serde_json::from_value(v)
            .map(Source::Polynomial)
            .map_err(|e| Error::validation(format!("{spec}: {e}"))),
        None => MultilinearPolynomial::parse(&text).map(Source::Polynomial),
    }
}

/// Full-space mask from a subproblem mask: survivors of the fixing, in order, carry
/// the subproblem's bits.
fn lift_mask(sub_mask: u64, bindings: &Bindings, arity: usize) -> u64 {
    let mut full = 0u64;
    let mut k = 0;
    for v in 1..=arity {
        match bindings.0.iter().find(|(b, _)| *b == v) {
            Some((_, true)) => full |= 1 << (v - 1),
            Some((_, false)) => {}
            None => {
                full |= (sub_mask >> k & 1) << (v - 1);
                k += 1;
            }
        }
    }
    full
}

struct Solved {
    energy: Rational,
    masks: Vec<u64>,
    chain_breaks: usize,
    solver: String,
}

fn solve_physical(
    cfg: &PipelineConfig,
    phys: &EmbeddedIsing,
    emb: &Embedding,
    logical: &IsingModel,
    q: &Quadratization,
    w: &mut ArtifactWriter,
    dir: &str,
) -> Result<Solved> {
    let file = format!("{dir}samples.json");
    let samples: SampleSet = match &cfg.solver {
        SolverChoice::Exhaustive => exhaustive_ground_states(&phys.model),
        SolverChoice::Sa {
            reads,
            sweeps,
            beta_min,
            beta_max,
        } => SaSchedule::geometric(*beta_min, *beta_max, *sweeps)
            .and_then(|s| simulated_anneal(&phys.model, &s, cfg.seed, *reads)),
    }
    .map_err(|e| e.in_stage("solve", &file))?;
    w.write_json("solve", &file, &samples)?;

    let mut best: Option<Rational> = None;
    let mut masks = Vec::new();
    let mut chain_breaks = 0;
    for s in &samples.samples {
        let u = unembed(
            &phys.sample_map(&s.spins),
            emb,
            logical.n(),
            UnembedPolicy::MajorityVote,
        )
        .map_err(|e| e.in_stage("unembed", &file))?;
        chain_breaks += u.chain_breaks * s.count;
        let spins = u.spins.expect("majority vote keeps every sample");
        let e = logical.binary_energy(&spins);
        let mask = mask_from_spins(&spins) & ((1u64 << q.original_arity) - 1);
        match best {
            Some(b) if e > b => continue,
            Some(b) if e == b => {}
            _ => {
                best = Some(e);
                masks.clear();
            }
        }
        if !masks.contains(&mask) {
            masks.push(mask);
        }
    }
    masks.sort_unstable();
    Ok(Solved {
        energy: best.ok_or_else(|| Error::validation("solver returned no samples").in_stage("solve", &file))?,
        masks,
        chain_breaks,
        solver: samples.meta.method,
    })
}

fn run_subproblem(
    cfg: &PipelineConfig,
    full: &MultilinearPolynomial,
    bindings: &Bindings,
    dir: &str,
    w: &mut ArtifactWriter,
) -> Result<SubproblemReport> {
    let arity = full.arity();
    let fixed_file = format!("{dir}fixed.json");
    let fixed = fix_variables(full, &bindings.0, true).map_err(|e| e.in_stage("fix", &fixed_file))?;
    w.write_json("fix", &fixed_file, &fixed)?;
    let mut report = SubproblemReport {
        bindings: bindings.clone(),
        directory: dir.trim_end_matches('/').to_string(),
        arity: fixed.arity(),
        ancillas: 0,
        deltas: Vec::new(),
        logical_spins: 0,
        physical_qubits: 0,
        embedding_valid: None,
        solver: "constant".into(),
        energy: None,
        assignments: Vec::new(),
        chain_breaks: 0,
    };
    if fixed.arity() == 0 {
        report.energy = Some(Exact(fixed.constant_term()));
        report.assignments = vec![assignment_bits(lift_mask(0, bindings, arity), arity)];
        return Ok(report);
    }

    let qfile = format!("{dir}quadratized.json");
    let q = quadratize(&fixed, cfg.plan.as_ref()).map_err(|e| e.in_stage("quadratize", &qfile))?;
    w.write_json("quadratize", &qfile, &q)?;
    report.ancillas = q.collapses.len();
    report.deltas = q.collapses.iter().map(|c| c.delta).collect();

    let ifile = format!("{dir}ising.json");
    let ising = to_ising(&q.polynomial).map_err(|e| e.in_stage("ising", &qfile))?;
    w.write_json("ising", &ifile, &ising)?;
    report.logical_spins = ising.n();

    let efile = format!("{dir}embedding.json");
    let g = cfg.graph.build().map_err(|e| e.in_stage("embed", "graph"))?;
    let opts = EmbedOptions {
        seed: cfg.seed,
        gamma: cfg.gamma,
        ..Default::default()
    };
    let emb = embed(&ising, &g, cfg.hint.as_ref(), &opts).map_err(|e| e.in_stage("embed", &ifile))?;
    w.write_json("embed", &efile, &emb)?;
    let pfile = format!("{dir}embedded.json");
    let phys = apply_embedding(&ising, &emb, &g, cfg.field_distribution)
        .map_err(|e| e.in_stage("apply-embedding", &efile))?;
    w.write_json("apply-embedding", &pfile, &phys)?;
    report.physical_qubits = phys.qubits.len();
    if phys.qubits.len() <= VERIFY_MAX_QUBITS {
        let v: EmbeddingReport = verify_embedding(&ising, &emb, &g);
        w.write_json("verify-embedding", &format!("{dir}verify.json"), &v)?;
        report.embedding_valid = Some(v.is_valid());
    }

    if matches!(cfg.solver, SolverChoice::Exhaustive) && phys.qubits.len() > MAX_EXHAUSTIVE_ARITY {
        return Err(Error::Capacity {
            what: "physical qubits for exhaustive search",
            actual: phys.qubits.len(),
            limit: MAX_EXHAUSTIVE_ARITY,
        }
        .in_stage("solve", pfile));
    }
    let solved = solve_physical(cfg, &phys, &emb, &ising, &q, w, dir)?;
    report.solver = solved.solver;
    report.energy = Some(Exact(solved.energy));
    report.chain_breaks = solved.chain_breaks;
    report.assignments = solved
        .masks
        .iter()
        .map(|&m| assignment_bits(lift_mask(m, bindings, arity), arity))
        .collect();
    Ok(report)
}

fn fold_summary(layout: &TurnLayout, bits: &str) -> Result<FoldSummary> {
    let (mask, _) = crate::lattice::parse_assignment(bits)?;
    let turns = layout.turns(mask);
    let fold = decode_turns(&turns);
    Ok(FoldSummary {
        assignment: bits.to_string(),
        turns: turns.to_string(),
        points: fold.format_points(),
        self_avoiding: fold.is_self_avoiding(),
    })
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    let variant = cfg.variant();
    let mut w = ArtifactWriter::new(
        &cfg.out_dir,
        Some(cfg.seed),
        if cfg.verbatim_fixtures { "verbatim" } else { "sanitized" },
    )?;
    // The output location is not part of the run's identity.
    let recorded = PipelineConfig {
        out_dir: PathBuf::from("."),
        ..cfg.clone()
    };
    w.write_json("config", "config.json", &recorded)?;
    let source = load_source(&cfg.input, variant).map_err(|e| e.in_stage("compile", &cfg.input))?;
    let (poly, layout) = match &source {
        Source::Instance(inst) => {
            w.write_json("compile", "instance.json", inst.as_ref())?;
            let p = inst.polynomial().map_err(|e| e.in_stage("compile", &cfg.input))?;
            (p, Some(inst.layout()?))
        }
        Source::Polynomial(p) => (p.clone(), None),
    };
    w.write_json("compile", "polynomial.json", &poly)?;

    let subproblems: Vec<(Bindings, String)> = match &cfg.scheme {
        Scheme::Full => vec![(Bindings::default(), String::new())],
        Scheme::Fixings { subproblems } => {
            if subproblems.is_empty() {
                return Err(Error::validation("fixing scheme has no subproblems"));
            }
            subproblems
                .iter()
                .enumerate()
                .map(|(k, b)| (b.clone(), format!("sub{k}/")))
                .collect()
        }
    };
    let mut reports = Vec::with_capacity(subproblems.len());
    for (b, dir) in &subproblems {
        reports.push(run_subproblem(cfg, &poly, b, dir, &mut w)?);
    }

    let best_energy = reports.iter().filter_map(|r| r.energy).min();
    let mut best_assignments: Vec<String> = reports
        .iter()
        .filter(|r| r.energy.is_some() && r.energy == best_energy)
        .flat_map(|r| r.assignments.iter().cloned())
        .collect();
    best_assignments.sort();
    best_assignments.dedup();
    let folds = match &layout {
        Some(l) => best_assignments
            .iter()
            .map(|a| fold_summary(l, a))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let mut report = RunReport {
        input: cfg.input.clone(),
        arity: poly.arity(),
        subproblems: reports,
        best_energy,
        best_assignments,
        folds,
        manifest: PathBuf::from("manifest.json"),
    };
    w.write_json("report", "report.json", &report)?;
    let (path, _) = w.finish()?;
    report.manifest = path;
    Ok(report)
}
