//! Annealing schedules `A(tau)`, `B(tau)` in GHz over `tau = t / t_run`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    tau: Vec<f64>,
    a_ghz: Vec<f64>,
    b_ghz: Vec<f64>,
    pub t_run_us: f64,
}

#[derive(Debug, Deserialize)]
struct ScheduleRow {
    #[serde(alias = "τ")]
    tau: f64,
    #[serde(rename = "A_GHz")]
    a: f64,
    #[serde(rename = "B_GHz")]
    b: f64,
}

impl AnnealSchedule {
    pub const DEFAULT_T_RUN_US: f64 = 148.0;
    pub const DEFAULT_A0_GHZ: f64 = 5.0;
    pub const DEFAULT_B0_GHZ: f64 = 5.0;

    pub fn new(tau: Vec<f64>, a_ghz: Vec<f64>, b_ghz: Vec<f64>, t_run_us: f64) -> Result<Self> {
        let s = AnnealSchedule {
            tau,
            a_ghz,
            b_ghz,
            t_run_us,
        };
        s.validate()?;
        Ok(s)
    }

    /// `A(tau) = a0 (1 - tau)`, `B(tau) = b0 tau`.
    pub fn linear(a0_ghz: f64, b0_ghz: f64, t_run_us: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![a0_ghz, 0.0], vec![0.0, b0_ghz], t_run_us)
    }

    /// Reads `tau,A_GHz,B_GHz` rows.
    pub fn from_csv_reader(r: impl Read, t_run_us: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let (mut tau, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let row: ScheduleRow = row?;
            tau.push(row.tau);
            a.push(row.a);
            b.push(row.b);
        }
        Self::new(tau, a, b, t_run_us)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Schedule(m));
        let n = self.tau.len();
        if n < 2 || self.a_ghz.len() != n || self.b_ghz.len() != n {
            return bad("need at least two rows with tau, A and B".into());
        }
        if !(self.t_run_us > 0.0 && self.t_run_us.is_finite()) {
            return bad(format!("t_run must be positive, got {}", self.t_run_us));
        }
        if self.tau[0] != 0.0 || self.tau[n - 1] != 1.0 {
            return bad("tau grid must run from 0 to 1".into());
        }
        for w in self.tau.windows(2) {
            if w[1] <= w[0] {
                return bad(format!("tau grid not increasing at {}", w[1]));
            }
        }
        if self
            .a_ghz
            .iter()
            .chain(&self.b_ghz)
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return bad("A and B must be finite and nonnegative".into());
        }
        let scale = self.a_ghz.iter().chain(&self.b_ghz).fold(0.0f64, |m, v| m.max(*v));
        for k in 1..n {
            if self.a_ghz[k] > self.a_ghz[k - 1] + MONOTONE_SLACK * scale {
                return bad(format!("A increases at tau = {}", self.tau[k]));
            }
            if self.b_ghz[k] < self.b_ghz[k - 1] - MONOTONE_SLACK * scale {
                return bad(format!("B decreases at tau = {}", self.tau[k]));
            }
        }
        if self.a_ghz[0] <= self.b_ghz[0] || self.a_ghz[n - 1] >= self.b_ghz[n - 1] {
            return bad("need A(0) > B(0) and A(1) < B(1)".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> &[f64] {
        &self.tau
    }

    fn interp(&self, v: &[f64], tau: f64) -> f64 {
        let tau = tau.clamp(0.0, 1.0);
        let k = self.tau.partition_point(|&t| t <= tau).clamp(1, self.tau.len() - 1);
        let (t0, t1) = (self.tau[k - 1], self.tau[k]);
        let w = (tau - t0) / (t1 - t0);
        v[k - 1] + w * (v[k] - v[k - 1])
    }

    pub fn a(&self, tau: f64) -> f64 {
        self.interp(&self.a_ghz, tau)
    }

    pub fn b(&self, tau: f64) -> f64 {
        self.interp(&self.b_ghz, tau)
    }

    /// First schedule node strictly after `tau`, so integrators never step across a kink.
    pub fn next_node(&self, tau: f64) -> f64 {
        self.tau
            .iter()
            .copied()
            .find(|&t| t > tau + 1e-15)
            .unwrap_or(1.0)
    }

    /// Both curves multiplied by `k`.
    pub fn rescaled(&self, k: f64) -> Result<Self> {
        Self::new(
            self.tau.clone(),
            self.a_ghz.iter().map(|v| v * k).collect(),
            self.b_ghz.iter().map(|v| v * k).collect(),
            self.t_run_us,
        )
    }

    pub fn with_t_run(&self, t_run_us: f64) -> Result<Self> {
        Self::new(self.tau.clone(), self.a_ghz.clone(), self.b_ghz.clone(), t_run_us)
    }
}

/// `n` evenly spaced points on `[0, 1]`, endpoints included.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}
