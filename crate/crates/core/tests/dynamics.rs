use foldq::chimera::HardwareGraph;
use foldq::dynamics::schedule::uniform_grid;
use foldq::dynamics::spectrum::levels_at;
use foldq::dynamics::*;
use foldq::embedding::{apply_embedding, auto_gamma, FieldDistribution};
use foldq::fixtures;
use foldq::ising::{mask_from_spins, IsingModel};
use foldq::solvers::exhaustive_ground_states;

fn exp6_physical() -> IsingModel {
    fixtures::embedded("exp6_embedded").unwrap().model
}

/// exp3 placed on five qubits of one cell, chain strength from the exhaustive search.
fn exp3_physical() -> IsingModel {
    let ising = fixtures::ising("exp3_ising").unwrap();
    let mut emb = fixtures::embedding("exp3_embedding").unwrap();
    let g: HardwareGraph = fixtures::graph("chimera_1x1").unwrap().build().unwrap();
    let gamma = auto_gamma(&ising, &emb, &g).unwrap();
    for v in emb.gamma.values_mut() {
        *v = gamma;
    }
    apply_embedding(&ising, &emb, &g, FieldDistribution::Root).unwrap().model
}

fn ground_masks(m: &IsingModel) -> Vec<u64> {
    exhaustive_ground_states(m)
        .unwrap()
        .samples
        .iter()
        .map(|s| mask_from_spins(&s.spins))
        .collect()
}

fn classical_levels(m: &IsingModel) -> Vec<f64> {
    let op = AnnealOperator::new(m).unwrap();
    let mut e = op.problem_diagonal().to_vec();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn hamiltonian_is_real_symmetric_mid_schedule() {
    let s = AnnealSchedule::linear(5.0, 5.0, 1.0).unwrap();
    let h = build_hamiltonian(&exp6_physical(), s.a(0.5), s.b(0.5)).unwrap();
    assert_eq!(h.nrows(), 256);
    assert_eq!(h, h.transpose());
}

#[test]
fn spectrum_endpoints() {
    let m = exp6_physical();
    let s = AnnealSchedule::linear(5.0, 5.0, 1.0).unwrap();
    let rep = instantaneous_spectrum(&m, &s, 8, &[0.0, 1.0]).unwrap();
    assert!((rep.rows[0].first_gap() - 2.0 * s.a(0.0)).abs() < 1e-9);
    let classical = classical_levels(&m);
    for (k, e) in rep.rows[1].energies.iter().enumerate() {
        assert!((e - s.b(1.0) * classical[k]).abs() < 1e-9, "level {k}");
    }
    let ground = exhaustive_ground_states(&m).unwrap();
    let e0: f64 = foldq::rational::to_f64(&ground.lowest().unwrap().energy.0);
    assert!((rep.rows[1].energies[0] - s.b(1.0) * e0).abs() < 1e-9);
}

#[test]
fn single_interior_gap_minimum_stable_under_rescaling() {
    let m = exp6_physical();
    let s = AnnealSchedule::linear(5.0, 5.0, 1.0).unwrap();
    let grid = uniform_grid(51);
    let rep = instantaneous_spectrum(&m, &s, 2, &grid).unwrap();
    let gaps: Vec<f64> = rep.rows.iter().map(|r| r.first_gap()).collect();
    let minima = (1..gaps.len() - 1)
        .filter(|&i| gaps[i] < gaps[i - 1] && gaps[i] < gaps[i + 1])
        .count();
    assert_eq!(minima, 1);
    assert!(rep.tau_star > 0.05 && rep.tau_star < 0.95);
    assert!(rep.min_gap < gaps[0] && rep.min_gap < gaps[gaps.len() - 1]);

    let scaled = instantaneous_spectrum(&m, &s.rescaled(3.0).unwrap(), 2, &grid).unwrap();
    assert!((scaled.tau_star - rep.tau_star).abs() < 1e-6);
    assert!((scaled.min_gap - 3.0 * rep.min_gap).abs() < 1e-8);
}

#[test]
fn closed_adiabatic_and_sudden_limits() {
    let m = exp3_physical();
    assert_eq!(m.n(), 5);
    let ground = ground_masks(&m);
    let s = AnnealSchedule::linear(5.0, 5.0, 0.05).unwrap();
    let slow = evolve_closed(&m, &s, &ClosedOptions::default()).unwrap();
    assert!(slow.probability_of(&ground) > 0.99);
    assert!(slow.meta.max_norm_error < 1e-8);

    let fast = evolve_closed(&m, &s.with_t_run(1e-7).unwrap(), &ClosedOptions::default()).unwrap();
    let uniform = 1.0 / 32.0;
    let dev = fast
        .final_probabilities
        .iter()
        .fold(0.0f64, |d, p| d.max((p - uniform).abs()));
    assert!(dev < 0.01, "{dev}");
    let total: f64 = fast.final_probabilities.iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn rate_matrix_stationary_state_is_gibbs() {
    let m = exp6_physical();
    let op = AnnealOperator::new(&m).unwrap();
    let s = AnnealSchedule::linear(5.0, 5.0, 1.0).unwrap();
    let bath = BathParams {
        t_mk: units::ghz_to_mk(1.1),
        ..Default::default()
    };
    for tau in [0.2, 0.78, 0.95] {
        let (e, v) = eigh_lowest(&op.dense(s.a(tau), s.b(tau)), 24);
        let gen = rate_matrix(&op, &e, &v, &bath, tau);
        for a in 0..24 {
            let col: f64 = (0..24).map(|b| gen[(b, a)]).sum();
            assert!(col.abs() < 1e-6 * gen[(a, a)].abs().max(1.0));
        }
        let p = stationary_distribution(&gen);
        let g = gibbs_distribution(&e, bath.t_mk);
        for (x, y) in p.iter().zip(&g) {
            assert!((x - y).abs() < 1e-6, "tau {tau}: {x} vs {y}");
        }
    }
}

#[test]
fn frozen_schedule_relaxes_to_gibbs() {
    let m = exp6_physical();
    let lin = AnnealSchedule::linear(5.0, 5.0, 1.0).unwrap();
    let tau_f = 0.78;
    let (a, b) = (lin.a(tau_f), lin.b(tau_f));
    // Ramp to the frozen point, hold, then finish.
    let s = AnnealSchedule::new(
        vec![0.0, 0.01, 0.99, 1.0],
        vec![5.0, a, a, 0.0],
        vec![0.0, b, b, 5.0],
        20.0,
    )
    .unwrap();
    let bath = BathParams {
        t_mk: units::ghz_to_mk(1.1),
        ..Default::default()
    };
    let opts = OpenOptions {
        output: vec![0.0, 0.5, 0.99, 1.0],
        ..Default::default()
    };
    let r = evolve_open(&m, &s, &bath, &opts).unwrap();
    let op = AnnealOperator::new(&m).unwrap();
    let e = levels_at(&op, &s, 0.5, opts.levels);
    let g = gibbs_distribution(&e, bath.t_mk);
    for row in [1, 2] {
        for (k, (x, y)) in r.populations[row].iter().zip(&g).enumerate() {
            assert!((x - y).abs() < 1e-6, "row {row} level {k}: {x} vs {y}");
        }
    }
    assert!(r.meta.max_norm_error < 1e-9);
    assert_eq!(r.meta.negative_populations, 0);
}

#[test]
fn decoupled_bath_matches_closed_evolution() {
    let m = exp3_physical();
    let s = AnnealSchedule::linear(5.0, 5.0, 0.003).unwrap();
    let grid = uniform_grid(21);
    let closed = evolve_closed(
        &m,
        &s,
        &ClosedOptions {
            levels: 32,
            output: grid.clone(),
            ..Default::default()
        },
    )
    .unwrap();
    let open = evolve_open(
        &m,
        &s,
        &BathParams::decoupled(),
        &OpenOptions {
            levels: 32,
            output: grid,
            tol: 1e-9,
            ..Default::default()
        },
    )
    .unwrap();
    // Degenerate levels have no preferred basis, so compare summed clusters.
    for row in 1..closed.tau.len() {
        let a = closed.cluster_populations(row, 1e-7);
        let b = open.cluster_populations(row, 1e-7);
        assert_eq!(a.len(), b.len(), "row {row}");
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6, "row {row}: {x} vs {y}");
        }
    }
    for (x, y) in closed.final_probabilities.iter().zip(&open.final_probabilities) {
        assert!((x - y).abs() < 1e-6);
    }
    // Something nontrivial happened: the anneal is far from adiabatic.
    assert!(closed.ground_population().last().unwrap() < &0.99);
}

#[test]
fn thermal_dip_and_partial_recovery() {
    let m = exp6_physical();
    let s = AnnealSchedule::linear(5.0, 5.0, 1.0).unwrap();
    let rep = instantaneous_spectrum(&m, &s, 2, &uniform_grid(41)).unwrap();
    let bath = BathParams {
        t_mk: units::ghz_to_mk(rep.min_gap),
        ..Default::default()
    };
    let r = evolve_open(&m, &s, &bath, &OpenOptions::default()).unwrap();
    let p0 = r.ground_population();
    let (dip_at, dip) = p0
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, p)| (r.tau[i], *p))
        .unwrap();
    let last = *p0.last().unwrap();
    assert!(dip < last && last < 1.0, "dip {dip} final {last}");
    assert!((dip_at - rep.tau_star).abs() < 0.2, "dip at {dip_at}, gap minimum at {}", rep.tau_star);
    assert!(r.meta.max_norm_error < 1e-9);
}
