//! Instantaneous spectra along a schedule and the location of the minimum gap.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::eigen::eigh_lowest;
use super::hamiltonian::AnnealOperator;
use super::schedule::AnnealSchedule;
use crate::error::{Error, Result};
use crate::ising::IsingModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub tau: f64,
    /// Lowest levels in GHz.
    pub energies: Vec<f64>,
}

impl SpectrumRow {
    /// `E_k - E_0` for each kept level.
    pub fn gaps(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e - self.energies[0]).collect()
    }

    pub fn first_gap(&self) -> f64 {
        self.energies.get(1).map_or(f64::INFINITY, |e| e - self.energies[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub rows: Vec<SpectrumRow>,
    /// Location of the smallest `E_1 - E_0`, refined between grid points.
    pub tau_star: f64,
    pub min_gap: f64,
}

pub fn levels_at(op: &AnnealOperator, schedule: &AnnealSchedule, tau: f64, k: usize) -> Vec<f64> {
    eigh_lowest(&op.dense(schedule.a(tau), schedule.b(tau)), k).0
}

pub fn instantaneous_spectrum(
    ising: &IsingModel,
    schedule: &AnnealSchedule,
    k: usize,
    tau_grid: &[f64],
) -> Result<SpectrumReport> {
    if k == 0 || tau_grid.is_empty() {
        return Err(Error::validation("spectrum needs k >= 1 and a nonempty tau grid"));
    }
    if tau_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::validation("tau grid values must lie in [0, 1]"));
    }
    let op = AnnealOperator::new(ising)?;
    let k = k.min(op.dim());
    let rows: Vec<SpectrumRow> = tau_grid
        .iter()
        .map(|&tau| SpectrumRow {
            tau,
            energies: levels_at(&op, schedule, tau, k.max(2)),
        })
        .collect();
    let gap = |tau: f64| {
        let e = levels_at(&op, schedule, tau, 2);
        e.get(1).map_or(f64::INFINITY, |e1| e1 - e[0])
    };
    let (best, _) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.first_gap().total_cmp(&b.1.first_gap()))
        .expect("nonempty grid");
    let (mut tau_star, mut min_gap) = (rows[best].tau, rows[best].first_gap());
    if rows.len() >= 3 && best > 0 && best + 1 < rows.len() {
        let (t, g) = golden_min(gap, rows[best - 1].tau, rows[best + 1].tau, 60);
        if g < min_gap {
            tau_star = t;
            min_gap = g;
        }
    }
    let rows = rows
        .into_iter()
        .map(|mut r| {
            r.energies.truncate(k);
            r
        })
        .collect();
    Ok(SpectrumReport {
        rows,
        tau_star,
        min_gap,
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

impl SpectrumReport {
    /// Columns `tau, E_0.., gap_1..` with 17 significant digits.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let k = self.rows.first().map_or(0, |r| r.energies.len());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["tau".to_string()];
        header.extend((0..k).map(|i| format!("E_{i}")));
        header.extend((1..k).map(|i| format!("gap_{i}")));
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![fmt17(r.tau)];
            rec.extend(r.energies.iter().map(|&e| fmt17(e)));
            rec.extend(r.gaps().iter().skip(1).map(|&g| fmt17(g)));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Decimal float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
