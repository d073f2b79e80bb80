use std::collections::BTreeSet;

use proptest::prelude::*;

use foldq::chimera::build_chimera;
use foldq::dynamics::schedule::AnnealSchedule;
use foldq::dynamics::spectrum::levels_at;
use foldq::dynamics::{eigh_lowest, gibbs_distribution, rate_matrix, stationary_distribution, AnnealOperator, BathParams};
use foldq::embedding::{apply_embedding, embed, embed_sample, logical_mask, EmbedOptions, FieldDistribution, GammaRule};
use foldq::fixtures;
use foldq::ising::{mask_from_spins, spins_from_mask, to_ising, IsingModel};
use foldq::lattice::{
    decode_turns, encode_fold, fold_energy, AminoSequence, ExternalPotential, Fold, InteractionModel, TurnString,
};
use foldq::poly::{interpolate_polynomial, Monomial, MultilinearPolynomial};
use foldq::quadratize::{check_quadratization, quadratize};
use foldq::rational::{int, rat, to_f64};
use foldq::solvers::{exhaustive_ground_states, simulated_anneal, SaSchedule};
use foldq::Rational;

fn turn_string(max_bonds: usize) -> impl Strategy<Value = TurnString> {
    prop::collection::vec(any::<bool>(), 0..2 * max_bonds).prop_map(|mut rest| {
        if rest.len() % 2 == 1 {
            rest.pop();
        }
        let mut bits = vec![false, true];
        bits.extend(rest);
        TurnString::new(bits).unwrap()
    })
}

fn hp_sequence(len: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::bool::ANY, len).prop_map(|v| v.iter().map(|&h| if h { 'H' } else { 'P' }).collect())
}

fn coefficient() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

/// Random multilinear polynomial of the given arity with terms up to degree `max_deg`.
fn polynomial(arity: std::ops::RangeInclusive<usize>, max_deg: usize) -> impl Strategy<Value = MultilinearPolynomial> {
    arity.prop_flat_map(move |n| {
        prop::collection::vec((0u64..1 << n, coefficient()), 0..12).prop_map(move |terms| {
            let mut p = MultilinearPolynomial::zero(n);
            for (mask, c) in terms {
                if mask.count_ones() as usize <= max_deg {
                    p.add_term(Monomial::from_mask(mask), c);
                }
            }
            p
        })
    })
}

fn ising_model(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = IsingModel> {
    n.prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let np = pairs.len();
        (
            prop::collection::vec(-4i64..=4, n),
            prop::collection::vec(-4i64..=4, np),
            -5i64..=5,
            1i64..=3,
        )
            .prop_map(move |(h, j, off, scale)| {
                let couplings = pairs.iter().copied().zip(j.into_iter().map(int)).filter(|(_, v)| *v != int(0));
                IsingModel::new(h.into_iter().map(int).collect(), couplings, int(off), int(scale)).unwrap()
            })
    })
}

fn minimizers(p: &MultilinearPolynomial) -> BTreeSet<u64> {
    let min = p.min_value().unwrap();
    (0..1u64 << p.arity()).filter(|&m| p.evaluate(m) == min).collect()
}

fn ising_minimizers(m: &IsingModel) -> BTreeSet<u64> {
    exhaustive_ground_states(m).unwrap().samples.iter().map(|s| mask_from_spins(&s.spins)).collect()
}

fn reflect(f: &Fold) -> Fold {
    Fold::new(f.points().iter().map(|&(x, y)| (x, -y)).collect()).unwrap()
}

/// Walks the chain from the other end, translated so that it starts at the origin.
fn reverse(f: &Fold) -> Fold {
    let (x0, y0) = *f.points().last().unwrap();
    Fold::new(f.points().iter().rev().map(|&(x, y)| (x - x0, y - y0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn turn_encoding_round_trips(t in turn_string(12)) {
        let f = decode_turns(&t);
        prop_assert_eq!(f.len(), t.num_bonds() + 1);
        let back = encode_fold(&f).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(decode_turns(&back), f);
        let text = t.to_string();
        prop_assert_eq!(text.parse::<TurnString>().unwrap(), t);
    }

    #[test]
    fn fold_energy_is_invariant_under_symmetries(
        (t, seq) in (1usize..10).prop_flat_map(|b| (turn_string(b).prop_filter("length", move |t| t.num_bonds() == b), hp_sequence(b + 1)))
    ) {
        let seq_rev: String = seq.chars().rev().collect();
        let s = AminoSequence::parse(&seq).unwrap();
        let s_rev = AminoSequence::parse(&seq_rev).unwrap();
        let model = InteractionModel::hp();
        let none = ExternalPotential::none();
        let f = decode_turns(&t);
        let e = fold_energy(&s, &f, &model, &none, int(2));
        prop_assert_eq!(fold_energy(&s, &reflect(&f), &model, &none, int(2)), e);
        prop_assert_eq!(fold_energy(&s_rev, &reverse(&f), &model, &none, int(2)), e);
        if f.is_self_avoiding() {
            prop_assert!(e <= int(0));
            prop_assert!(f.overlaps().is_empty());
        }
    }

    #[test]
    fn interpolation_reproduces_the_oracle(p in polynomial(0..=7, 7)) {
        let q = interpolate_polynomial(p.arity(), |m| p.evaluate(m)).unwrap();
        prop_assert_eq!(q, p);
    }

    #[test]
    fn quadratization_keeps_values_and_penalizes_violations(p in polynomial(3..=6, 4)) {
        let q = quadratize(&p, None).unwrap();
        prop_assert!(q.polynomial.degree() <= 2);
        for m in 0..1u64 << p.arity() {
            prop_assert_eq!(q.polynomial.evaluate(q.consistent_extension(m)), p.evaluate(m));
        }
        for m in 0..1u64 << q.polynomial.arity() {
            if !q.is_consistent(m) {
                prop_assert!(q.polynomial.evaluate(m) > int(0), "violation {m:b} not above zero");
            }
        }
        prop_assert!(check_quadratization(&p, &q).unwrap().passed());
    }

    #[test]
    fn spin_form_round_trips(p in polynomial(1..=6, 2)) {
        let m = to_ising(&p).unwrap();
        prop_assert_eq!(m.to_polynomial(), p.clone());
        for mask in 0..1u64 << p.arity() {
            prop_assert_eq!(m.binary_energy(&spins_from_mask(mask, p.arity())), p.evaluate(mask));
        }
    }

    #[test]
    fn normalization_keeps_minimizers(p in polynomial(1..=6, 2)) {
        let m = to_ising(&p).unwrap();
        let c = m.max_abs_coefficient();
        prop_assert!(c == int(0) || c == int(1));
        prop_assert_eq!(ising_minimizers(&m), minimizers(&p));
        let twice = m.normalized();
        prop_assert_eq!(twice, m);
    }

    #[test]
    fn serde_round_trips(p in polynomial(0..=5, 3), m in ising_model(1..=4)) {
        let text = serde_json::to_string(&p).unwrap();
        prop_assert_eq!(serde_json::from_str::<MultilinearPolynomial>(&text).unwrap(), p);
        let text = serde_json::to_string(&m).unwrap();
        prop_assert_eq!(serde_json::from_str::<IsingModel>(&text).unwrap(), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn embedding_preserves_logical_energies(m in ising_model(2..=5), seed in 0u64..1000) {
        let g = build_chimera(1, 1, 4, &[]).unwrap();
        let opts = EmbedOptions { seed, gamma: GammaRule::Auto, ..Default::default() };
        let emb = embed(&m, &g, None, &opts).unwrap();
        let text = serde_json::to_string(&emb).unwrap();
        prop_assert_eq!(&serde_json::from_str::<foldq::embedding::Embedding>(&text).unwrap(), &emb);

        let phys = apply_embedding(&m, &emb, &g, FieldDistribution::Root).unwrap();
        let n = m.n();
        for mask in 0..1u64 << n {
            let logical = spins_from_mask(mask, n);
            let s = embed_sample(&logical, &emb, &phys);
            prop_assert_eq!(phys.model.binary_energy(&s), m.binary_energy(&logical));
            prop_assert_eq!(logical_mask(&s, &emb, &phys, n), Some(mask));
        }

        let pn = phys.model.n();
        let ground = exhaustive_ground_states(&phys.model).unwrap();
        let e0 = ground.samples[0].energy.0;
        for s in &ground.samples {
            let lm = logical_mask(&s.spins, &emb, &phys, n);
            prop_assert!(lm.is_some(), "broken chain in a ground state");
            prop_assert!(ising_minimizers(&m).contains(&lm.unwrap()));
        }
        prop_assert_eq!(ground.samples.len(), ising_minimizers(&m).len());
        if m.binary_energy(&spins_from_mask(*ising_minimizers(&m).first().unwrap(), n)) <= int(0) {
            for mask in 0..1u64 << pn {
                let s = spins_from_mask(mask, pn);
                if logical_mask(&s, &emb, &phys, n).is_none() {
                    prop_assert!(phys.model.energy(&s) > e0);
                }
            }
        }
    }

    #[test]
    fn annealing_never_beats_exhaustive(m in ising_model(1..=8), seed in any::<u64>()) {
        let schedule = SaSchedule::geometric(0.1, 10.0, 200).unwrap();
        let a = simulated_anneal(&m, &schedule, seed, 16).unwrap();
        let b = simulated_anneal(&m, &schedule, seed, 16).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.verify(&m));
        prop_assert_eq!(a.total_count(), 16);
        let best = exhaustive_ground_states(&m).unwrap();
        let e0 = best.samples[0].energy.0;
        prop_assert!(a.samples.iter().all(|s| s.energy.0 >= e0));
        prop_assert!(best.verify(&m));
    }

    #[test]
    fn spectrum_ends_on_the_classical_energies(m in ising_model(1..=5)) {
        let s = AnnealSchedule::linear(5.0, 5.0, 1.0).unwrap();
        let op = AnnealOperator::new(&m).unwrap();
        let mut classical = op.problem_diagonal().to_vec();
        classical.sort_by(f64::total_cmp);
        let levels = levels_at(&op, &s, 1.0, op.dim());
        for (k, e) in levels.iter().enumerate() {
            prop_assert!((e - s.b(1.0) * classical[k]).abs() < 1e-9);
        }
        let e0 = to_f64(&exhaustive_ground_states(&m).unwrap().samples[0].energy.0);
        prop_assert!((classical[0] - e0).abs() < 1e-12);
    }

    #[test]
    fn rates_satisfy_detailed_balance(m in ising_model(2..=4), tau in 0.1f64..0.9) {
        let s = AnnealSchedule::linear(5.0, 5.0, 1.0).unwrap();
        let op = AnnealOperator::new(&m).unwrap();
        let (e, v) = eigh_lowest(&op.dense(s.a(tau), s.b(tau)), op.dim());
        let bath = BathParams::default();
        let w = rate_matrix(&op, &e, &v, &bath, tau);
        for c in 0..w.ncols() {
            prop_assert!(w.column(c).sum().abs() <= 1e-9 * w[(c, c)].abs().max(1.0));
        }
        let gibbs = gibbs_distribution(&e, bath.t_mk);
        // Pairs of levels with both populations non-negligible are in balance.
        for a in 0..e.len() {
            for b in 0..e.len() {
                let (fwd, back) = (w[(b, a)] * gibbs[a], w[(a, b)] * gibbs[b]);
                if a != b && fwd.max(back) > 1e-200 {
                    prop_assert!((fwd - back).abs() <= 1e-6 * fwd.max(back), "{a}->{b}");
                }
            }
        }
        // Degenerate levels can leave the generator reducible; only check the ergodic case.
        let connected = (1..e.len()).all(|k| w[(k, 0)] > 0.0 && w[(0, k)] > 0.0);
        if connected && gibbs.iter().all(|&p| p > 1e-12) {
            let pi = stationary_distribution(&w);
            for (x, y) in pi.iter().zip(&gibbs) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}

/// Overlapping folds of the HP instances cost more than zero. The PSVKMA contact
/// energies outweigh an overlap penalty of 2, so it is excluded.
#[test]
fn overlapping_folds_of_hp_instances_are_positive() {
    for name in ["hpph_instance", "hpph_chaperone_instance"] {
        let inst = fixtures::instance(name).unwrap();
        let rows = inst.landscape().unwrap();
        assert!(!rows.is_empty());
        for r in rows.iter().filter(|r| !r.valid) {
            assert!(r.energy > int(0), "{name}: {}", r.assignment_bits());
        }
    }
}
