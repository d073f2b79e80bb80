use std::path::Path;

use foldq::embedding::{EmbeddedIsing, GammaRule};
use foldq::error::Error;
use foldq::fixtures;
use foldq::io::{read_json, Manifest};
use foldq::ising::IsingModel;
use foldq::lattice::assignment_bits;
use foldq::pipeline::{parse_plan, run_pipeline, Bindings, PipelineConfig, Scheme, SolverChoice};
use foldq::quadratize::Quadratization;
use foldq::rational::int;

fn minimizers(name: &str) -> (foldq::Rational, Vec<String>) {
    let p = fixtures::polynomial(name).unwrap();
    let min = p.min_value().unwrap();
    let masks = (0..1u64 << p.arity())
        .filter(|&m| p.evaluate(m) == min)
        .map(|m| assignment_bits(m, p.arity()))
        .collect();
    (min, masks)
}

fn exp6_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::new("fixture:hpph_chaperone_instance", out);
    cfg.plan = Some(parse_plan("q1q2=6, q3q4=4").unwrap());
    cfg.graph = fixtures::graph("chimera_1x1").unwrap();
    cfg.hint = Some(fixtures::embedding("exp6_embedding").unwrap());
    cfg.gamma = "1".parse().unwrap();
    cfg
}

#[test]
fn chaperone_instance_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&exp6_config(dir.path())).unwrap();

    let poly: foldq::poly::MultilinearPolynomial = read_json(&dir.path().join("polynomial.json")).unwrap();
    assert_eq!(poly, fixtures::polynomial("exp6").unwrap());
    let ising: IsingModel = read_json(&dir.path().join("ising.json")).unwrap();
    assert_eq!(ising, fixtures::ising("exp6_ising").unwrap());
    let phys: EmbeddedIsing = read_json(&dir.path().join("embedded.json")).unwrap();
    let expected = fixtures::embedded("exp6_embedded").unwrap();
    assert_eq!(phys.qubits, expected.qubits);
    assert_eq!(phys.model, expected.model);

    let (min, masks) = minimizers("exp6");
    assert_eq!(report.best_energy.unwrap().0, min);
    assert_eq!(report.best_assignments, masks);
    assert_eq!(report.folds.len(), masks.len());
    assert!(report.folds.iter().all(|f| f.self_avoiding));
    assert_eq!(report.subproblems[0].embedding_valid, Some(true));
    assert_eq!(report.subproblems[0].physical_qubits, 8);
}

#[test]
fn single_collapse_with_automatic_delta() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::new("fixture:exp3", dir.path());
    cfg.plan = Some(parse_plan("q2q3").unwrap());
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.subproblems[0].deltas[0].0, int(9));
    let q: Quadratization = read_json(&dir.path().join("quadratized.json")).unwrap();
    assert_eq!(q.collapses[0].ancilla, 4);
    let ising: IsingModel = read_json(&dir.path().join("ising.json")).unwrap();
    assert_eq!(ising, fixtures::ising("exp3_ising").unwrap());
    let (min, masks) = minimizers("exp3");
    assert_eq!(report.best_energy.unwrap().0, min);
    assert_eq!(report.best_assignments, masks);
}

#[test]
fn two_residue_instance_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("hp.json");
    std::fs::write(&inst, r#"{"sequence": "HP", "model": "HP"}"#).unwrap();
    let report = run_pipeline(&PipelineConfig::new(inst.to_str().unwrap(), dir.path().join("out"))).unwrap();
    assert_eq!(report.arity, 0);
    assert_eq!(report.best_energy.unwrap().0, int(0));
    assert_eq!(report.folds.len(), 1);
    assert_eq!(report.folds[0].turns, "01");
    assert_eq!(report.folds[0].points, "(0,0) (1,0)");
}

#[test]
fn divide_and_conquer_covers_the_full_space() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::new("fixture:psvkma", dir.path());
    cfg.scheme = Scheme::Fixings {
        subproblems: vec!["q1=0".parse().unwrap(), "q1=1".parse().unwrap()],
    };
    cfg.solver = SolverChoice::Sa {
        reads: 200,
        sweeps: 1000,
        beta_min: 0.1,
        beta_max: 10.0,
    };
    cfg.seed = 7;
    cfg.graph = foldq::chimera::GraphSpec { m: 8, n: 8, k: 4, masked: vec![] };
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.subproblems.len(), 2);
    assert_eq!(report.subproblems[0].arity, 6);
    let (min, masks) = minimizers("psvkma");
    assert_eq!(report.best_energy.unwrap().0, min);
    assert_eq!(report.best_assignments, masks);
    for s in &report.subproblems {
        let tag = if s.bindings == "q1=0".parse::<Bindings>().unwrap() { '0' } else { '1' };
        assert!(s.assignments.iter().all(|a| a.starts_with(tag)));
    }
}

#[test]
fn manifest_tracks_inputs_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, seed: u64| {
        let mut cfg = exp6_config(&dir.path().join(sub));
        cfg.seed = seed;
        cfg.solver = SolverChoice::Sa {
            reads: 50,
            sweeps: 200,
            beta_min: 0.1,
            beta_max: 10.0,
        };
        run_pipeline(&cfg).unwrap();
        let m: Manifest = read_json(&dir.path().join(sub).join("manifest.json")).unwrap();
        m
    };
    let a = run("a", 1);
    let b = run("b", 1);
    assert_eq!(a.entries, b.entries);
    let c = run("c", 2);
    assert!(a.entries.iter().zip(&c.entries).all(|(x, y)| x.chain != y.chain));
    let files: Vec<&str> = a.entries.iter().map(|e| e.file.as_str()).collect();
    for f in ["instance.json", "polynomial.json", "fixed.json", "quadratized.json", "ising.json",
        "embedding.json", "embedded.json", "samples.json", "report.json"] {
        assert!(files.contains(&f), "{f} missing");
    }
}

#[test]
fn stage_errors_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::new("fixture:exp3", dir.path());
    cfg.plan = Some(parse_plan("q1q2=1").unwrap());
    let err = run_pipeline(&cfg).unwrap_err();
    match &err {
        Error::Stage { stage, artifact, source } => {
            assert_eq!(*stage, "quadratize");
            assert_eq!(artifact, "quadratized.json");
            assert!(matches!(**source, Error::Penalty(_)));
        }
        e => panic!("unexpected {e}"),
    }
    assert_eq!(err.exit_code(), 2);

    let mut cfg = PipelineConfig::new("fixture:exp6", dir.path().join("small"));
    cfg.graph = foldq::chimera::GraphSpec { m: 1, n: 1, k: 1, masked: vec![] };
    cfg.gamma = GammaRule::Auto;
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "embed", .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
}
