//! Trajectories produced by the closed and open evolutions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::spectrum::fmt17;
use crate::error::Result;
use crate::lattice::assignment_bits;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionMeta {
    pub method: String,
    pub t_run_us: f64,
    pub levels: usize,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Largest `| ||psi|| - 1 |` (closed) or `|tr rho - 1|` (open) seen.
    pub max_norm_error: f64,
    /// Populations below `-1e-12` that had to be reported rather than clipped.
    pub negative_populations: usize,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub tau: Vec<f64>,
    /// Lowest instantaneous levels per output point, GHz.
    pub energies: Vec<Vec<f64>>,
    /// Population of each of those levels.
    pub populations: Vec<Vec<f64>>,
    /// Computational-basis probabilities at `tau = 1`, indexed by assignment mask.
    pub final_probabilities: Vec<f64>,
    pub meta: EvolutionMeta,
}

impl EvolutionResult {
    /// Ground-level population at each output point.
    pub fn ground_population(&self) -> Vec<f64> {
        self.populations.iter().map(|p| p[0]).collect()
    }

    /// Final probability summed over `states`.
    pub fn probability_of(&self, states: &[u64]) -> f64 {
        states.iter().map(|&s| self.final_probabilities[s as usize]).sum()
    }

    /// Populations summed over levels within `tol` GHz of each other.
    pub fn cluster_populations(&self, row: usize, tol: f64) -> Vec<f64> {
        let e = &self.energies[row];
        let p = &self.populations[row];
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=e.len() {
            if k == e.len() || e[k] - e[k - 1] > tol {
                out.push(p[start..k].iter().sum());
                start = k;
            }
        }
        out
    }

    /// Columns `tau`, `gap_k = E_k - E_0` and `P_k` for each kept level.
    pub fn write_trajectory_csv(&self, w: impl Write) -> Result<()> {
        let k = self.energies.first().map_or(0, Vec::len);
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["tau".to_string()];
        header.extend((0..k).map(|i| format!("gap_{i}")));
        header.extend((0..k).map(|i| format!("P_{i}")));
        out.write_record(&header)?;
        for ((t, e), p) in self.tau.iter().zip(&self.energies).zip(&self.populations) {
            let mut rec = vec![fmt17(*t)];
            rec.extend(e.iter().map(|v| fmt17(v - e[0])));
            rec.extend(p.iter().map(|v| fmt17(*v)));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn final_json(&self, ground_states: &[u64], n: usize) -> serde_json::Value {
        serde_json::json!({
            "n": n,
            "probabilities": self.final_probabilities,
            "ground_states": ground_states.iter().map(|&s| assignment_bits(s, n)).collect::<Vec<_>>(),
            "ground_probability": self.probability_of(ground_states),
            "meta": self.meta,
        })
    }
}
