//! Acceptance suite: one PASS/FAIL line per criterion with its runtime and limit.
//! Run with `cargo test -p foldq --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use foldq::chimera::HardwareGraph;
use foldq::dynamics::schedule::uniform_grid;
use foldq::dynamics::spectrum::levels_at;
use foldq::dynamics::*;
use foldq::embedding::{
    apply_embedding, auto_gamma, embed, logical_mask, EmbedOptions, EmbeddedIsing, Embedding, FieldDistribution,
    TermOrigin,
};
use foldq::fixtures;
use foldq::ising::{mask_from_spins, spins_from_mask, to_ising, IsingModel};
use foldq::poly::{fix_variables, MultilinearPolynomial};
use foldq::quadratize::{quadratize, CollapseSpec, Quadratization, QuadratizationPlan};
use foldq::rational::{int, rat};
use foldq::solvers::{exhaustive_ground_states, simulated_anneal, SaSchedule};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn poly(s: &str) -> MultilinearPolynomial {
    MultilinearPolynomial::parse(s).unwrap()
}

fn plan(collapses: &[(usize, usize, Option<i64>)]) -> QuadratizationPlan {
    QuadratizationPlan {
        collapses: collapses
            .iter()
            .map(|&(i, j, d)| CollapseSpec::new(i, j, d.map(int)))
            .collect(),
    }
}

fn ground_masks(m: &IsingModel) -> BTreeSet<u64> {
    exhaustive_ground_states(m)
        .unwrap()
        .samples
        .iter()
        .map(|s| mask_from_spins(&s.spins))
        .collect()
}

fn chimera_1x1() -> HardwareGraph {
    fixtures::graph("chimera_1x1").unwrap().build().unwrap()
}

fn exp6_physical() -> IsingModel {
    fixtures::embedded("exp6_embedded").unwrap().model
}

/// exp3 on five qubits of one cell with the chain strength from the exhaustive search.
fn exp3_physical() -> (IsingModel, Embedding, EmbeddedIsing) {
    let ising = fixtures::ising("exp3_ising").unwrap();
    let mut emb = fixtures::embedding("exp3_embedding").unwrap();
    let g = chimera_1x1();
    let gamma = auto_gamma(&ising, &emb, &g).unwrap();
    for v in emb.gamma.values_mut() {
        *v = gamma;
    }
    let phys = apply_embedding(&ising, &emb, &g, FieldDistribution::Root).unwrap();
    (ising, emb, phys)
}

fn c1_experiment6_chain() -> Check {
    let p = fixtures::polynomial("exp6").map_err(fail)?;
    let q = quadratize(&p, Some(&plan(&[(1, 2, Some(6)), (3, 4, Some(4))]))).map_err(fail)?;
    let printed = poly(
        "4 - 3q1 + 4q2 + 6q1q2 - q3 + q1q3 - 2q2q3 + 4q4 - 2q1q4 - 8q2q4 + 4q3q4 + 14q5 \
         - 12q1q5 - 12q2q5 + 5q4q5 + 10q6 + 5q2q6 - 8q3q6 - 8q4q6 - q5q6",
    );
    ensure!(q.polynomial == printed, "quadratic differs: {}", q.polynomial);
    let ising = to_ising(&q.polynomial).map_err(fail)?;
    ensure!(ising.scale() == rat(13, 4), "scale {}", ising.scale());
    ensure!(ising == fixtures::ising("exp6_ising").map_err(fail)?, "normalized Ising differs");
    let g = chimera_1x1();
    let emb = fixtures::embedding("exp6_embedding").map_err(fail)?;
    ensure!(emb.gamma.values().all(|g| *g == int(1)), "hint gamma is not 1");
    let phys = apply_embedding(&ising, &emb, &g, FieldDistribution::Root).map_err(fail)?;
    let want = fixtures::embedded("exp6_embedded").map_err(fail)?;
    ensure!(phys.qubits == want.qubits && phys.model == want.model, "embedded Hamiltonian differs");
    let chain_couplers: Vec<_> = phys
        .provenance
        .iter()
        .filter_map(|t| match t {
            TermOrigin::Chain { p, q, .. } => Some(phys.coupler(*p, *q)),
            _ => None,
        })
        .collect();
    ensure!(
        !chain_couplers.is_empty() && chain_couplers.iter().all(|c| *c == int(-1)),
        "chain couplers {chain_couplers:?}"
    );
    Ok(format!(
        "{} quadratic terms, scale 13/4, {} qubits, {} chain couplers at -1",
        q.polynomial.num_terms(),
        phys.qubits.len(),
        chain_couplers.len()
    ))
}

fn c2_experiment3_chain() -> Check {
    let p = fixtures::polynomial("exp3").map_err(fail)?;
    let q = quadratize(&p, Some(&plan(&[(2, 3, None)]))).map_err(fail)?;
    let delta = q.collapses[0].delta.0;
    ensure!(delta == int(9), "delta {delta}");
    let ising = to_ising(&q.polynomial).map_err(fail)?;
    let want = fixtures::ising("exp3_ising").map_err(fail)?;
    ensure!(ising == want, "Ising differs");
    let coefficients = ising.h().iter().filter(|h| **h != int(0)).count() + ising.couplings().len();
    ensure!(coefficients == 9, "{coefficients} nonzero spin coefficients");
    Ok(format!("delta {delta}, {coefficients} spin coefficients equal"))
}

fn c3_divide_and_conquer() -> Check {
    let exp4 = fixtures::polynomial("exp4").map_err(fail)?;
    let recipes: [(&[(usize, bool)], &str); 2] =
        [(&[(1, false)], "exp2"), (&[(1, true), (2, false), (4, false)], "exp3")];
    for (bind, name) in recipes {
        let got = fix_variables(&exp4, bind, true).map_err(fail)?;
        ensure!(got == fixtures::polynomial(name).map_err(fail)?, "exp4 {bind:?} is not {name}");
    }
    let psv = fixtures::polynomial("psvkma").map_err(fail)?;
    ensure!(fix_variables(&psv, &[(1, false)], true).map_err(fail)? == exp4, "psvkma q1=0 is not exp4");
    Ok("exp4 -> exp2, exp4 -> exp3, psvkma -> exp4".into())
}

fn c4_oracle_agreement() -> Check {
    let inst = fixtures::instance("hpph_instance").map_err(fail)?;
    let printed = fixtures::polynomial("hpph").map_err(fail)?;
    let rows = inst.landscape().map_err(fail)?;
    ensure!(rows.len() == 1 << printed.arity(), "{} rows", rows.len());
    let mut valid = 0;
    for r in &rows {
        let pv = printed.evaluate(r.assignment);
        if r.valid {
            valid += 1;
            ensure!(r.energy == pv, "{}: oracle {} vs printed {pv}", r.assignment_bits(), r.energy);
        } else {
            ensure!(r.energy > int(0) && pv > int(0), "{}: {} / {pv} not positive", r.assignment_bits(), r.energy);
        }
    }
    let ground: Vec<_> = rows.iter().filter(|r| r.valid && r.energy == int(-1)).collect();
    let min = rows.iter().map(|r| r.energy).min().unwrap();
    ensure!(min == int(-1) && ground.len() == 1, "minimum {min}, {} folds at -1", ground.len());
    Ok(format!(
        "{valid} self-avoiding assignments agree, one ground fold {} at E = -1",
        ground[0].assignment_bits()
    ))
}

fn c5_penalty_spectrum() -> Check {
    let mut lines = Vec::new();
    for name in ["exp1", "exp2", "exp3", "exp4", "exp5", "exp6"] {
        let p = fixtures::polynomial(name).map_err(fail)?;
        let q: Quadratization = if name == "exp6" {
            quadratize(&p, Some(&plan(&[(1, 2, Some(6)), (3, 4, Some(4))])))
        } else {
            quadratize(&p, None)
        }
        .map_err(fail)?;
        let mut violations = 0;
        for m in 0..1u64 << q.polynomial.arity() {
            let e = q.polynomial.evaluate(m);
            if q.is_consistent(m) {
                ensure!(e == p.evaluate(m & ((1 << p.arity()) - 1)), "{name}: consistent {m:b} changed");
            } else {
                violations += 1;
                ensure!(e > int(0), "{name}: violation {m:b} at {e}");
            }
        }
        lines.push(format!("{name} {violations}"));
    }
    // Chain-broken states of the embedded models.
    let (_, emb3, phys3) = exp3_physical();
    let emb6 = fixtures::embedding("exp6_embedding").map_err(fail)?;
    let phys6 = fixtures::embedded("exp6_embedded").map_err(fail)?;
    for (name, emb, phys) in [("exp3", &emb3, &phys3), ("exp6", &emb6, &phys6)] {
        let n = emb.chains.len();
        let nq = phys.qubits.len();
        let mut broken = 0;
        for m in 0..1u64 << nq {
            let s = spins_from_mask(m, nq);
            if logical_mask(&s, emb, phys, n).is_none() {
                broken += 1;
                let e = phys.model.binary_energy(&s);
                ensure!(e > int(0), "{name} embedded: broken state {m:b} at {e}");
            }
        }
        lines.push(format!("{name} embedded {broken} broken"));
    }
    Ok(format!("violations above zero: {}", lines.join(", ")))
}

fn minimizers_preserved(logical: &IsingModel, emb: &Embedding, phys: &EmbeddedIsing) -> Result<(), String> {
    let want = ground_masks(logical);
    let mut got = BTreeSet::new();
    for s in exhaustive_ground_states(&phys.model).map_err(fail)?.samples {
        let m = logical_mask(&s.spins, emb, phys, logical.n()).ok_or("broken chain in an embedded ground state")?;
        got.insert(m);
    }
    ensure!(got == want, "embedded minimizers {got:?}, logical {want:?}");
    Ok(())
}

fn c6_embedding_spectrum() -> Check {
    let mut checked = Vec::new();
    let (ising3, emb3, phys3) = exp3_physical();
    minimizers_preserved(&ising3, &emb3, &phys3).map_err(|e| format!("exp3 hinted: {e}"))?;
    checked.push(format!("exp3 hinted ({})", phys3.qubits.len()));
    let ising6 = fixtures::ising("exp6_ising").map_err(fail)?;
    let emb6 = fixtures::embedding("exp6_embedding").map_err(fail)?;
    let phys6 = fixtures::embedded("exp6_embedded").map_err(fail)?;
    minimizers_preserved(&ising6, &emb6, &phys6).map_err(|e| format!("exp6 hinted: {e}"))?;
    checked.push(format!("exp6 hinted ({})", phys6.qubits.len()));

    // Heuristic embeddings of every fixture on a 4x4 Chimera graph.
    let g = fixtures::graph("chimera_4x4").map_err(fail)?.build().map_err(fail)?;
    for name in ["exp1", "exp2", "exp3", "exp4", "exp5", "exp6"] {
        let p = fixtures::polynomial(name).map_err(fail)?;
        let ising = to_ising(&quadratize(&p, None).map_err(fail)?.polynomial).map_err(fail)?;
        let emb = embed(&ising, &g, None, &EmbedOptions::default()).map_err(fail)?;
        if emb.num_qubits() > 12 {
            continue;
        }
        let phys = apply_embedding(&ising, &emb, &g, FieldDistribution::Root).map_err(fail)?;
        minimizers_preserved(&ising, &emb, &phys).map_err(|e| format!("{name}: {e}"))?;
        checked.push(format!("{name} ({})", emb.num_qubits()));
    }
    Ok(format!("minimizers preserved: {}", checked.join(", ")))
}

fn c7_closed_limits() -> Check {
    let (_, _, phys) = exp3_physical();
    let m = phys.model;
    ensure!(m.n() == 5, "{} qubits", m.n());
    let ground: Vec<u64> = ground_masks(&m).into_iter().collect();
    let s = AnnealSchedule::linear(5.0, 5.0, 0.05).map_err(fail)?;
    let slow = evolve_closed(&m, &s, &ClosedOptions::default()).map_err(fail)?;
    let p = slow.probability_of(&ground);
    ensure!(p > 0.99, "adiabatic ground probability {p}");
    let fast = evolve_closed(&m, &s.with_t_run(1e-7).map_err(fail)?, &ClosedOptions::default()).map_err(fail)?;
    let uniform = 1.0 / 32.0;
    let dev = fast
        .final_probabilities
        .iter()
        .fold(0.0f64, |d, p| d.max((p - uniform).abs()));
    ensure!(dev < 0.01, "sudden deviation {dev}");
    Ok(format!("P0 {p:.6} at t_run 0.05 us, sudden max deviation {dev:.2e}"))
}

fn c8_open_properties() -> Check {
    let m6 = exp6_physical();
    let op = AnnealOperator::new(&m6).map_err(fail)?;
    let lin = AnnealSchedule::linear(5.0, 5.0, 1.0).map_err(fail)?;
    let rep = instantaneous_spectrum(&m6, &lin, 2, &uniform_grid(41)).map_err(fail)?;

    // Stationary state of the rate equation at frozen tau.
    let bath = BathParams {
        t_mk: units::ghz_to_mk(1.1),
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for tau in [0.2, rep.tau_star, 0.95] {
        let (e, v) = eigh_lowest(&op.dense(lin.a(tau), lin.b(tau)), 24);
        let p = stationary_distribution(&rate_matrix(&op, &e, &v, &bath, tau));
        let g = gibbs_distribution(&e, bath.t_mk);
        for (x, y) in p.iter().zip(&g) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure!(worst < 1e-6, "stationary vs Gibbs {worst:e}");

    // Decoupled bath against closed evolution.
    let (_, _, phys3) = exp3_physical();
    let m3 = phys3.model;
    let s = AnnealSchedule::linear(5.0, 5.0, 0.003).map_err(fail)?;
    let grid = uniform_grid(21);
    let closed = evolve_closed(
        &m3,
        &s,
        &ClosedOptions {
            levels: 32,
            output: grid.clone(),
            ..Default::default()
        },
    )
    .map_err(fail)?;
    let open = evolve_open(
        &m3,
        &s,
        &BathParams::decoupled(),
        &OpenOptions {
            levels: 32,
            output: grid,
            tol: 1e-9,
            ..Default::default()
        },
    )
    .map_err(fail)?;
    let mut eta0 = 0.0f64;
    for row in 1..closed.tau.len() {
        let a = closed.cluster_populations(row, 1e-7);
        let b = open.cluster_populations(row, 1e-7);
        ensure!(a.len() == b.len(), "level clusters differ at row {row}");
        for (x, y) in a.iter().zip(&b) {
            eta0 = eta0.max((x - y).abs());
        }
    }
    ensure!(eta0 < 1e-6, "eta = 0 deviation {eta0:e}");

    // Thermal dip near the gap minimum and partial recovery.
    let bath = BathParams {
        t_mk: units::ghz_to_mk(rep.min_gap),
        ..Default::default()
    };
    let r = evolve_open(&m6, &lin, &bath, &OpenOptions::default()).map_err(fail)?;
    let p0 = r.ground_population();
    let (dip_at, dip) = p0
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, p)| (r.tau[i], *p))
        .unwrap();
    let last = *p0.last().unwrap();
    ensure!(dip < last && last < 1.0, "dip {dip}, final {last}");
    ensure!((dip_at - rep.tau_star).abs() < 0.2, "dip at {dip_at}, gap minimum at {}", rep.tau_star);
    let e = levels_at(&op, &lin, rep.tau_star, 2);
    Ok(format!(
        "Gibbs {worst:.1e}, eta=0 {eta0:.1e}, dip {dip:.4} at tau {dip_at:.2} (gap {:.4} GHz at {:.3}), final {last:.4}",
        e[1] - e[0],
        rep.tau_star
    ))
}

fn c9_sa_success() -> Check {
    let m = exp6_physical();
    let ground = exhaustive_ground_states(&m).map_err(fail)?;
    let e0 = ground.samples[0].energy.0;
    let reads = 1000;
    let set = simulated_anneal(&m, &SaSchedule::default(), 0, reads).map_err(fail)?;
    let hits: usize = set.samples.iter().filter(|s| s.energy.0 == e0).map(|s| s.count).sum();
    let frac = hits as f64 / reads as f64;
    ensure!(frac >= 0.99, "{hits}/{reads} reads at the ground state");
    Ok(format!("{hits}/{reads} reads at E = {e0}"))
}

fn c10_landscape_count() -> Check {
    let rows = fixtures::instance("psvkma_instance").map_err(fail)?.landscape().map_err(fail)?;
    let valid = rows.iter().filter(|r| r.valid).count();
    let stated = 40;
    let verdict = if valid == stated { "agrees with" } else { "differs from" };
    Ok(format!(
        "{} assignments, {valid} self-avoiding; {verdict} the stated count of {stated}",
        rows.len()
    ))
}

#[test]
fn acceptance() {
    let criteria: [(u32, &str, u64, fn() -> Check); 10] = [
        (1, "experiment-6 bit-exact chain", 1, c1_experiment6_chain),
        (2, "experiment-3 chain", 1, c2_experiment3_chain),
        (3, "divide-and-conquer consistency", 1, c3_divide_and_conquer),
        (4, "oracle/fixture agreement", 1, c4_oracle_agreement),
        (5, "quadratization spectrum", 5, c5_penalty_spectrum),
        (6, "embedding spectrum preservation", 10, c6_embedding_spectrum),
        (7, "closed-system limits", 30, c7_closed_limits),
        (8, "open-system properties", 300, c8_open_properties),
        (9, "SA vs enumeration", 30, c9_sa_success),
        (10, "landscape count", 1, c10_landscape_count),
    ];
    let mut failed = Vec::new();
    for (n, name, limit_s, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let limit = Duration::from_secs(limit_s);
        let (ok, detail) = match result {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the time limit")),
            Err(e) => (false, e),
        };
        println!(
            "criterion {n:>2} {}: {name}: {detail} [{:.3} s, limit {limit_s} s]",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
        if !ok {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
