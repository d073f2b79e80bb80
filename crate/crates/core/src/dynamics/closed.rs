//! Schrodinger evolution in the computational basis: fourth-order Magnus steps with a
//! Lanczos exponential and step-doubling error control.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::eigen::eigh_lowest;
use super::hamiltonian::AnnealOperator;
use super::krylov::expm_minus_i;
use super::result::{EvolutionMeta, EvolutionResult};
use super::schedule::{uniform_grid, AnnealSchedule};
use super::units::phase_rate;
use crate::error::{Error, Result};
use crate::ising::IsingModel;

pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ClosedOptions {
    /// Instantaneous levels reported at each output point.
    pub levels: usize,
    pub output: Vec<f64>,
    /// Local error allowed per accepted step (2-norm of the state difference).
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for ClosedOptions {
    fn default() -> Self {
        ClosedOptions {
            levels: 8,
            output: uniform_grid(101),
            tol: 1e-10,
            max_steps: 20_000_000,
        }
    }
}

pub(crate) fn check_output_grid(out: &[f64]) -> Result<()> {
    if out.is_empty() || out.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("output grid must be nonempty and increasing"));
    }
    if out[0] < 0.0 || *out.last().unwrap() > 1.0 {
        return Err(Error::validation("output grid must lie in [0, 1]"));
    }
    Ok(())
}

struct Stepper<'a> {
    op: &'a AnnealOperator,
    schedule: &'a AnnealSchedule,
    c: f64,
    krylov_tol: f64,
}

impl Stepper<'_> {
    /// One Magnus-4 step from `tau` to `tau + h`.
    fn step(&self, tau: f64, h: f64, psi: &[Complex64]) -> Option<Vec<Complex64>> {
        let off = 3f64.sqrt() / 6.0;
        let (t1, t2) = (tau + h * (0.5 - off), tau + h * (0.5 + off));
        let (a1, b1) = (self.schedule.a(t1), self.schedule.b(t1));
        let (a2, b2) = (self.schedule.a(t2), self.schedule.b(t2));
        let lin = self.c * h / 2.0;
        let comm = self.c * self.c * 3f64.sqrt() * h * h / 12.0 * (a2 * b1 - b2 * a1);
        let dim = psi.len();
        let apply = |x: &[Complex64], out: &mut [Complex64]| {
            self.op.apply(lin * (a1 + a2), lin * (b1 + b2), x, out);
            if comm != 0.0 {
                let mut cx = vec![Complex64::new(0.0, 0.0); dim];
                self.op.apply_commutator(x, &mut cx);
                let k = Complex64::new(0.0, -comm);
                for (o, v) in out.iter_mut().zip(&cx) {
                    *o += k * v;
                }
            }
        };
        expm_minus_i(apply, psi, self.krylov_tol)
    }
}

fn state_norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn populations(v: &DMatrix<f64>, psi: &[Complex64]) -> Vec<f64> {
    (0..v.ncols())
        .map(|k| {
            let amp: Complex64 = psi.iter().enumerate().map(|(j, x)| x * v[(j, k)]).sum();
            amp.norm_sqr()
        })
        .collect()
}

pub fn evolve_closed(
    ising: &IsingModel,
    schedule: &AnnealSchedule,
    opts: &ClosedOptions,
) -> Result<EvolutionResult> {
    check_output_grid(&opts.output)?;
    let op = AnnealOperator::new(ising)?;
    let dim = op.dim();
    let levels = opts.levels.clamp(1, dim);
    let c = phase_rate(schedule.t_run_us);
    let stepper = Stepper {
        op: &op,
        schedule,
        c,
        krylov_tol: opts.tol * 1e-2,
    };
    let amp = 1.0 / (dim as f64).sqrt();
    let mut psi = vec![Complex64::new(amp, 0.0); dim];
    let mut meta = EvolutionMeta {
        method: "closed_magnus4_lanczos".into(),
        t_run_us: schedule.t_run_us,
        levels,
        threads: 1,
        ..Default::default()
    };
    let mut result = EvolutionResult {
        tau: Vec::new(),
        energies: Vec::new(),
        populations: Vec::new(),
        final_probabilities: Vec::new(),
        meta: EvolutionMeta::default(),
    };
    let record = |tau: f64, psi: &[Complex64], result: &mut EvolutionResult| {
        let (e, v) = eigh_lowest(&op.dense(schedule.a(tau), schedule.b(tau)), levels);
        result.tau.push(tau);
        result.populations.push(populations(&v, psi));
        result.energies.push(e);
    };

    let bound = op.norm_bound(
        schedule.a(0.0).max(schedule.a(1.0)),
        schedule.b(0.0).max(schedule.b(1.0)),
    );
    let mut h = (8.0 / (c * bound).max(1e-300)).min(0.05);
    let mut tau = 0.0;
    let mut next_out = 0;
    while next_out < opts.output.len() && opts.output[next_out] <= 0.0 {
        record(0.0, &psi, &mut result);
        next_out += 1;
    }
    while tau < 1.0 {
        if meta.steps_accepted + meta.steps_rejected >= opts.max_steps {
            return Err(Error::StepFailure(format!(
                "closed evolution exceeded {} steps at tau = {tau}",
                opts.max_steps
            )));
        }
        let target = opts
            .output
            .get(next_out)
            .copied()
            .unwrap_or(1.0)
            .min(schedule.next_node(tau));
        let hit = h >= target - tau;
        let h_try = if hit { target - tau } else { h };
        if h_try < 1e-14 {
            return Err(Error::StepFailure(format!("step size underflow at tau = {tau}")));
        }
        let attempt = stepper.step(tau, h_try, &psi).and_then(|full| {
            let half = stepper.step(tau, h_try / 2.0, &psi)?;
            let fine = stepper.step(tau + h_try / 2.0, h_try / 2.0, &half)?;
            let err = full
                .iter()
                .zip(&fine)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            Some((fine, err))
        });
        match attempt {
            Some((fine, err)) if err <= opts.tol => {
                psi = fine;
                tau = if hit { target } else { tau + h_try };
                meta.steps_accepted += 1;
                meta.max_norm_error = meta.max_norm_error.max((state_norm(&psi) - 1.0).abs());
                let grow = if err == 0.0 { 4.0 } else { 0.9 * (opts.tol / err).powf(0.2) };
                if !hit || h_try >= h {
                    h = h_try * grow.clamp(0.3, 4.0);
                }
                while next_out < opts.output.len() && opts.output[next_out] <= tau {
                    record(tau, &psi, &mut result);
                    next_out += 1;
                }
            }
            Some((_, err)) => {
                meta.steps_rejected += 1;
                h = h_try * (0.9 * (opts.tol / err).powf(0.2)).clamp(0.1, 0.7);
            }
            None => {
                meta.steps_rejected += 1;
                h = h_try / 2.0;
            }
        }
    }
    if meta.max_norm_error > NORM_DRIFT_LIMIT {
        return Err(Error::StepFailure(format!(
            "norm drift {:.3e} exceeds {NORM_DRIFT_LIMIT:e}",
            meta.max_norm_error
        )));
    }
    result.final_probabilities = psi.iter().map(|x| x.norm_sqr()).collect();
    result.meta = meta;
    Ok(result)
}
