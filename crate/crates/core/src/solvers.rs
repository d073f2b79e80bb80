//! Exhaustive enumeration, simulated annealing, and landscape tables.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_capacity, Error, Result};
use crate::ising::{spins_from_mask, IsingModel};
use crate::lattice::{assignment_bits, assignment_order_key, decode_turns, Fold, TurnLayout};
use crate::poly::{MultilinearPolynomial, MAX_EXHAUSTIVE_ARITY};
use crate::rational::{Exact, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub spins: Vec<i8>,
    /// Normalized Ising energy.
    pub energy: Exact,
    /// Energy in the units of the source polynomial.
    pub binary_energy: Exact,
    pub count: usize,
}

impl Sample {
    /// Binary assignment string, `q_i = (1 - s_i) / 2`.
    pub fn assignment(&self) -> String {
        self.spins.iter().map(|&s| if s < 0 { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub meta: SolverMeta,
}

impl SampleSet {
    pub fn lowest(&self) -> Option<&Sample> {
        self.samples.iter().min_by_key(|s| s.energy)
    }

    pub fn total_count(&self) -> usize {
        self.samples.iter().map(|s| s.count).sum()
    }

    /// Checks every stored energy against the model.
    pub fn verify(&self, model: &IsingModel) -> bool {
        self.samples.iter().all(|s| {
            let e = model.energy(&s.spins);
            e == s.energy.0 && model.to_binary_energy(e) == s.binary_energy.0
        })
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["assignment", "energy", "binary_energy", "count"])?;
        for s in &self.samples {
            out.write_record([
                s.assignment(),
                s.energy.0.to_string(),
                s.binary_energy.0.to_string(),
                s.count.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn sample(model: &IsingModel, spins: Vec<i8>, count: usize) -> Sample {
    let e = model.energy(&spins);
    Sample {
        binary_energy: Exact(model.to_binary_energy(e)),
        energy: Exact(e),
        spins,
        count,
    }
}

/// Sort key matching the numeric order of the bit mask, for any number of spins.
fn mask_order(spins: &[i8]) -> Vec<bool> {
    spins.iter().rev().map(|&s| s < 0).collect()
}

/// All minimizers in ascending mask order (bit `i` set means `s_i = -1`).
pub fn exhaustive_ground_states(model: &IsingModel) -> Result<SampleSet> {
    check_capacity("spins for exhaustive search", model.n(), MAX_EXHAUSTIVE_ARITY)?;
    let ii = model.integer_form();
    let mut best = i64::MAX;
    let mut masks = Vec::new();
    ii.for_each_state(|mask, e| {
        if e < best {
            best = e;
            masks.clear();
        }
        if e == best {
            masks.push(mask);
        }
    });
    masks.sort_unstable();
    Ok(SampleSet {
        samples: masks
            .into_iter()
            .map(|m| sample(model, spins_from_mask(m, model.n()), 1))
            .collect(),
        meta: SolverMeta {
            method: "exhaustive".into(),
            seed: None,
            reads: None,
            sweeps: None,
            beta_range: None,
        },
    })
}

/// Inverse temperatures, one per sweep, nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaSchedule {
    betas: Vec<f64>,
}

impl SaSchedule {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Schedule("empty beta schedule".into()));
        }
        if betas.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::Schedule("betas must be finite and nonnegative".into()));
        }
        if betas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Schedule("betas must be nondecreasing".into()));
        }
        Ok(SaSchedule { betas })
    }

    pub fn geometric(beta_min: f64, beta_max: f64, sweeps: usize) -> Result<Self> {
        if sweeps == 0 || !(beta_min > 0.0) || beta_max < beta_min {
            return Err(Error::Schedule(format!(
                "geometric schedule needs 0 < beta_min <= beta_max and sweeps > 0, got {beta_min}, {beta_max}, {sweeps}"
            )));
        }
        if sweeps == 1 {
            return SaSchedule::new(vec![beta_max]);
        }
        let ratio = (beta_max / beta_min).ln() / (sweeps - 1) as f64;
        SaSchedule::new((0..sweeps).map(|k| beta_min * (ratio * k as f64).exp()).collect())
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

impl Default for SaSchedule {
    fn default() -> Self {
        SaSchedule::geometric(0.1, 10.0, 1000).expect("valid default schedule")
    }
}

/// Float couplings in adjacency form for Metropolis updates.
#[derive(Debug, Clone)]
pub struct SpinSystem {
    h: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl SpinSystem {
    pub fn new(model: &IsingModel) -> Self {
        let mut adj = vec![Vec::new(); model.n()];
        for ((a, b), v) in model.couplings_f64() {
            adj[a].push((b, v));
            adj[b].push((a, v));
        }
        SpinSystem {
            h: model.h_f64(),
            adj,
        }
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.h.len() {
            e += self.h[i] * spins[i] as f64;
            for &(k, w) in &self.adj[i] {
                if k > i {
                    e += w * (spins[i] * spins[k]) as f64;
                }
            }
        }
        e
    }

    pub fn flip_delta(&self, spins: &[i8], i: usize) -> f64 {
        let field = self.h[i] + self.adj[i].iter().map(|&(k, w)| w * spins[k] as f64).sum::<f64>();
        -2.0 * spins[i] as f64 * field
    }

    /// One Metropolis sweep in index order; returns the energy change.
    pub fn metropolis_sweep<R: Rng>(&self, spins: &mut [i8], beta: f64, rng: &mut R) -> f64 {
        let mut total = 0.0;
        for i in 0..spins.len() {
            let d = self.flip_delta(spins, i);
            if d <= 0.0 || rng.gen::<f64>() < (-beta * d).exp() {
                spins[i] = -spins[i];
                total += d;
            }
        }
        total
    }
}

/// RNG for one read, derived from `(seed, read)` only.
pub fn read_rng(seed: u64, read: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(read as u64);
    rng
}

/// Each read starts from a random state, sweeps through the schedule, and reports the
/// lowest state it visited. Reads run in parallel without affecting the result.
pub fn simulated_anneal(
    model: &IsingModel,
    schedule: &SaSchedule,
    seed: u64,
    n_reads: usize,
) -> Result<SampleSet> {
    if n_reads == 0 {
        return Err(Error::validation("n_reads must be at least 1"));
    }
    let sys = SpinSystem::new(model);
    let n = model.n();
    let finals: Vec<Vec<i8>> = (0..n_reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = read_rng(seed, read);
            let mut spins: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let mut e = sys.energy(&spins);
            let mut best = spins.clone();
            let mut best_e = e;
            for &beta in schedule.betas() {
                e += sys.metropolis_sweep(&mut spins, beta, &mut rng);
                if e < best_e - 1e-12 {
                    best_e = e;
                    best.copy_from_slice(&spins);
                }
            }
            best
        })
        .collect();
    let mut counts: BTreeMap<Vec<bool>, (usize, &Vec<i8>)> = BTreeMap::new();
    for s in &finals {
        counts.entry(mask_order(s)).or_insert((0, s)).0 += 1;
    }
    let mut samples: Vec<Sample> = counts
        .into_values()
        .map(|(c, s)| sample(model, s.clone(), c))
        .collect();
    samples.sort_by(|a, b| {
        a.energy
            .cmp(&b.energy)
            .then_with(|| mask_order(&a.spins).cmp(&mask_order(&b.spins)))
    });
    let b = schedule.betas();
    Ok(SampleSet {
        samples,
        meta: SolverMeta {
            method: "sa".into(),
            seed: Some(seed),
            reads: Some(n_reads),
            sweeps: Some(b.len()),
            beta_range: Some((b[0], b[b.len() - 1])),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub assignment: u64,
    pub energy: Rational,
    pub fold: Option<Fold>,
    pub valid: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandscapeTable {
    pub arity: usize,
    pub rows: Vec<ReportRow>,
    /// Distinct energies with their multiplicities, ascending.
    pub degeneracy: Vec<(Rational, usize)>,
}

impl LandscapeTable {
    pub fn count_at_most(&self, e: Rational) -> usize {
        self.rows.iter().filter(|r| r.energy <= e).count()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["assignment_bits", "valid", "energy_num", "energy_den", "points"])?;
        for r in &self.rows {
            out.write_record([
                assignment_bits(r.assignment, self.arity),
                r.valid.map(|v| v.to_string()).unwrap_or_default(),
                r.energy.numer().to_string(),
                r.energy.denom().to_string(),
                r.fold.as_ref().map(Fold::format_points).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Every assignment of `p` with its energy and, given a layout, the decoded fold.
pub fn landscape_report(p: &MultilinearPolynomial, decoder: Option<&TurnLayout>) -> Result<LandscapeTable> {
    check_capacity("landscape arity", p.arity(), MAX_EXHAUSTIVE_ARITY)?;
    if let Some(l) = decoder {
        if l.arity() != p.arity() {
            return Err(Error::validation(format!(
                "layout has {} free bits, polynomial has {}",
                l.arity(),
                p.arity()
            )));
        }
    }
    let dense = p.dense_values()?;
    let arity = p.arity();
    let mut rows: Vec<ReportRow> = (0..dense.values.len())
        .map(|m| {
            let fold = decoder.map(|l| decode_turns(&l.turns(m as u64)));
            ReportRow {
                assignment: m as u64,
                energy: dense.get(m),
                valid: fold.as_ref().map(Fold::is_self_avoiding),
                fold,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.energy.cmp(&b.energy).then(
            assignment_order_key(a.assignment, arity).cmp(&assignment_order_key(b.assignment, arity)),
        )
    });
    let mut degeneracy: Vec<(Rational, usize)> = Vec::new();
    for r in &rows {
        match degeneracy.last_mut() {
            Some((e, c)) if *e == r.energy => *c += 1,
            _ => degeneracy.push((r.energy, 1)),
        }
    }
    Ok(LandscapeTable {
        arity,
        rows,
        degeneracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn zero_model_all_states_tie() {
        let s = exhaustive_ground_states(&IsingModel::zero(3)).unwrap();
        assert_eq!(s.samples.len(), 8);
    }

    #[test]
    fn fields_only_align_against_fields() {
        let m = IsingModel::new(vec![int(1), int(-1), int(1)], [], int(0), int(1)).unwrap();
        let s = simulated_anneal(&m, &SaSchedule::geometric(5.0, 20.0, 50).unwrap(), 3, 20).unwrap();
        assert_eq!(s.samples.len(), 1);
        assert_eq!(s.samples[0].spins, vec![-1, 1, -1]);
        assert_eq!(s.samples[0].count, 20);
    }

    #[test]
    fn schedule_validation() {
        assert!(SaSchedule::new(vec![]).is_err());
        assert!(SaSchedule::new(vec![1.0, 0.5]).is_err());
        assert!(SaSchedule::geometric(0.0, 1.0, 10).is_err());
        assert_eq!(SaSchedule::default().betas().len(), 1000);
    }

    #[test]
    fn zero_reads_rejected() {
        assert!(simulated_anneal(&IsingModel::zero(2), &SaSchedule::default(), 0, 0).is_err());
    }

    #[test]
    fn constant_polynomial_single_class() {
        let p = MultilinearPolynomial::constant(3, int(5));
        let t = landscape_report(&p, None).unwrap();
        assert_eq!(t.rows.len(), 8);
        assert_eq!(t.degeneracy, vec![(int(5), 8)]);
    }
}
