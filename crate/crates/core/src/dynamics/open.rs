//! Density-matrix evolution in the instantaneous eigenbasis, truncated to the lowest
//! `K` levels. Coherent transport comes from the rotation of the eigenbasis between
//! steps; dissipation is a Davies rate equation on populations with matching
//! dephasing of coherences, applied as a symmetric splitting around the coherent step.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::bath::BathParams;
use super::closed::check_output_grid;
use super::eigen::eigh_lowest;
use super::hamiltonian::AnnealOperator;
use super::result::{EvolutionMeta, EvolutionResult};
use super::schedule::{uniform_grid, AnnealSchedule};
use super::units::{ghz_to_angular, mk_to_ghz, phase_rate};
use crate::error::{Error, Result};
use crate::ising::IsingModel;

pub const DEFAULT_LEVELS: usize = 24;
/// Populations between this and zero are clipped; anything lower is counted.
pub const NEGATIVE_POPULATION_SLACK: f64 = 1e-12;
/// Eigenbasis rotation angle above which a step is refused outright.
const MAX_FRAME_ANGLE: f64 = 0.8;
/// Schedule offset used to split degeneracies of the pure driver at `tau = 0`.
const INITIAL_SPLIT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct OpenOptions {
    pub levels: usize,
    pub output: Vec<f64>,
    /// Allowed local change between one full step and two half steps (Frobenius norm).
    pub tol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OpenOptions {
    fn default() -> Self {
        OpenOptions {
            levels: DEFAULT_LEVELS,
            output: uniform_grid(101),
            tol: 1e-4,
            h_min: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
struct Frame {
    tau: f64,
    energies: Vec<f64>,
    vecs: DMatrix<f64>,
    /// Population generator per unit tau, `gen[(b, a)]` is the rate `a -> b`.
    gen: Option<DMatrix<f64>>,
}

/// Generator of the population dynamics per second: off-diagonal `(b, a)` entries are
/// `W_{a->b} = sum_i |<b|sz_i|a>|^2 S(w_ab) / hbar^2`, columns sum to zero.
pub fn rate_matrix(
    op: &AnnealOperator,
    energies: &[f64],
    vecs: &DMatrix<f64>,
    bath: &BathParams,
    tau: f64,
) -> DMatrix<f64> {
    let k = energies.len();
    let n = op.n();
    let dim = op.dim();
    let mut w = DMatrix::zeros(k, k);
    if bath.is_decoupled() {
        return w;
    }
    let mut coupling = DMatrix::<f64>::zeros(k, k);
    for i in 0..n {
        let mut zv = vecs.clone();
        for j in 0..dim {
            if j >> i & 1 == 1 {
                for a in 0..k {
                    zv[(j, a)] = -zv[(j, a)];
                }
            }
        }
        let m = vecs.transpose() * zv;
        coupling += m.component_mul(&m);
    }
    for a in 0..k {
        for b in 0..k {
            if a != b {
                let omega = ghz_to_angular(energies[a] - energies[b]);
                w[(b, a)] = coupling[(b, a)] * bath.rate(omega, tau);
            }
        }
    }
    for a in 0..k {
        let out: f64 = (0..k).filter(|&b| b != a).map(|b| w[(b, a)]).sum();
        w[(a, a)] = -out;
    }
    w
}

/// Normalized null vector of a rate generator.
pub fn stationary_distribution(gen: &DMatrix<f64>) -> Vec<f64> {
    let k = gen.nrows();
    let svd = gen.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let row: Vec<f64> = (0..k).map(|c| vt[(idx, c)]).collect();
    let s: f64 = row.iter().sum();
    row.iter().map(|v| v / s).collect()
}

/// Boltzmann weights of levels given in GHz.
pub fn gibbs_distribution(energies: &[f64], t_mk: f64) -> Vec<f64> {
    let kt = mk_to_ghz(t_mk);
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-(e - e0) / kt).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Orthogonal polar factor of a square real matrix.
fn polar(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    svd.u.expect("u") * svd.v_t.expect("v_t")
}

/// Real logarithm of an orthogonal matrix close to the identity, and its largest angle.
fn orthogonal_log(q: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let k = q.nrows();
    let qc = q.map(|x| Complex64::new(x, 0.0));
    let sym = (&qc + qc.transpose()) * Complex64::new(0.5, 0.0);
    let anti = (&qc - qc.transpose()) * Complex64::new(0.0, -0.5);
    // Same eigenvectors as q; the weight keeps e^{i t} and e^{i(pi - t)} apart.
    let mix = sym + anti * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let eig = SymmetricEigen::new(mix);
    let w = eig.eigenvectors;
    let mut log = DMatrix::<Complex64>::zeros(k, k);
    let mut max_angle = 0.0f64;
    for c in 0..k {
        let col = w.column(c);
        let rq: Complex64 = (0..k)
            .map(|r| col[r].conj() * (0..k).map(|s| qc[(r, s)] * col[s]).sum::<Complex64>())
            .sum();
        let theta = rq.arg();
        max_angle = max_angle.max(theta.abs());
        let coef = Complex64::new(0.0, theta);
        log += col * col.adjoint() * coef;
    }
    let l = log.map(|z| z.re);
    let l = (&l - l.transpose()) * 0.5;
    (l, max_angle)
}

fn phi(x: f64) -> Complex64 {
    if x.abs() < 1e-6 {
        Complex64::new(1.0 - x * x / 6.0, x / 2.0)
    } else {
        (Complex64::new(0.0, x).exp() - 1.0) / Complex64::new(0.0, x)
    }
}

/// `exp(-i H)` for Hermitian `H`.
fn expm_hermitian(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let k = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let mut d = DMatrix::<Complex64>::zeros(k, k);
    for i in 0..k {
        d[(i, i)] = Complex64::from_polar(1.0, -eig.eigenvalues[i]);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

struct Engine<'a> {
    op: &'a AnnealOperator,
    schedule: &'a AnnealSchedule,
    bath: &'a BathParams,
    levels: usize,
    c: f64,
    seconds: f64,
}

impl Engine<'_> {
    fn frame(&self, tau: f64, prev: Option<&Frame>) -> Frame {
        let (energies, mut vecs) =
            eigh_lowest(&self.op.dense(self.schedule.a(tau), self.schedule.b(tau)), self.levels);
        if let Some(p) = prev {
            self.fix_gauge(&energies, &mut vecs, p);
        }
        let gen = (!self.bath.is_decoupled()).then(|| {
            rate_matrix(self.op, &energies, &vecs, self.bath, tau) * self.seconds
        });
        Frame {
            tau,
            energies,
            vecs,
            gen,
        }
    }

    fn initial_frame(&self) -> Frame {
        let (_, vecs) = eigh_lowest(
            &self
                .op
                .dense(self.schedule.a(INITIAL_SPLIT), self.schedule.b(INITIAL_SPLIT)),
            self.levels,
        );
        let energies = eigh_lowest(
            &self.op.dense(self.schedule.a(0.0), self.schedule.b(0.0)),
            self.levels,
        )
        .0;
        let gen = (!self.bath.is_decoupled())
            .then(|| rate_matrix(self.op, &energies, &vecs, self.bath, 0.0) * self.seconds);
        Frame {
            tau: 0.0,
            energies,
            vecs,
            gen,
        }
    }

    /// Rotates each (near-)degenerate cluster so its overlap with `prev` is symmetric
    /// positive; for a single level this is a sign choice.
    fn fix_gauge(&self, energies: &[f64], vecs: &mut DMatrix<f64>, prev: &Frame) {
        let k = energies.len();
        let scale = 1.0 + energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let tol = 1e-10 * scale;
        let mut start = 0;
        for end in 1..=k {
            if end < k && energies[end] - energies[end - 1] <= tol {
                continue;
            }
            let cols: Vec<usize> = (start..end).collect();
            let block = vecs.columns(start, cols.len()).into_owned();
            let o = block.transpose() * prev.vecs.columns(start, cols.len());
            let u = polar(&o);
            let rotated = block * u;
            vecs.columns_mut(start, cols.len()).copy_from(&rotated);
            start = end;
        }
    }

    fn dissipate(&self, rho: &mut DMatrix<Complex64>, gen: &DMatrix<f64>, dt: f64) {
        let k = rho.nrows();
        let p: nalgebra::DVector<f64> = (0..k).map(|a| rho[(a, a)].re).collect::<Vec<_>>().into();
        let p = (gen * dt).exp() * p;
        let out: Vec<f64> = (0..k).map(|a| -gen[(a, a)]).collect();
        for a in 0..k {
            for b in 0..k {
                if a == b {
                    rho[(a, a)] = Complex64::new(p[a], 0.0);
                } else {
                    rho[(a, b)] *= (-0.5 * (out[a] + out[b]) * dt).exp();
                }
            }
        }
    }

    /// Coherent propagator between two gauge-consistent frames.
    fn coherent(&self, f0: &Frame, f1: &Frame) -> Option<DMatrix<Complex64>> {
        let k = f0.energies.len();
        let h = f1.tau - f0.tau;
        let q = polar(&(f1.vecs.transpose() * &f0.vecs));
        let (l, angle) = orthogonal_log(&q);
        if angle > MAX_FRAME_ANGLE {
            return None;
        }
        let mean: Vec<f64> = (0..k)
            .map(|a| 0.5 * (f0.energies[a] + f1.energies[a]))
            .collect();
        // exp(Omega) with Omega_ab = L_ab phi(x_ab); Omega = -i G, G Hermitian.
        let mut g = DMatrix::<Complex64>::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                if a != b && l[(a, b)] != 0.0 {
                    let x = self.c * h * (mean[a] - mean[b]);
                    g[(a, b)] = Complex64::new(0.0, 1.0) * phi(x) * l[(a, b)];
                }
            }
        }
        let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
        let mut u = expm_hermitian(&g);
        let e_ref = mean[0];
        for a in 0..k {
            let ph = Complex64::from_polar(1.0, -self.c * h * (mean[a] - e_ref));
            for b in 0..k {
                u[(a, b)] *= ph;
            }
        }
        Some(u)
    }

    fn step(&self, rho: &DMatrix<Complex64>, f0: &Frame, f1: &Frame) -> Option<DMatrix<Complex64>> {
        let h = f1.tau - f0.tau;
        let u = self.coherent(f0, f1)?;
        let mut r = rho.clone();
        if let Some(g) = &f0.gen {
            self.dissipate(&mut r, g, h / 2.0);
        }
        let mut r = &u * r * u.adjoint();
        if let Some(g) = &f1.gen {
            self.dissipate(&mut r, g, h / 2.0);
        }
        Some(r)
    }
}

fn hermitize(rho: &mut DMatrix<Complex64>) {
    let h = (&*rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    *rho = h;
}

/// Open-system anneal from the instantaneous ground state at `tau = 0`.
pub fn evolve_open(
    ising: &IsingModel,
    schedule: &AnnealSchedule,
    bath: &BathParams,
    opts: &OpenOptions,
) -> Result<EvolutionResult> {
    bath.validate()?;
    check_output_grid(&opts.output)?;
    let op = AnnealOperator::new(ising)?;
    if opts.levels == 0 || opts.levels > op.dim() {
        return Err(Error::validation(format!(
            "levels must be in 1..={}, got {}",
            op.dim(),
            opts.levels
        )));
    }
    let engine = Engine {
        op: &op,
        schedule,
        bath,
        levels: opts.levels,
        c: phase_rate(schedule.t_run_us),
        seconds: schedule.t_run_us * 1e-6,
    };
    let k = opts.levels;
    let mut rho = DMatrix::<Complex64>::zeros(k, k);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    let mut frame = engine.initial_frame();
    let mut meta = EvolutionMeta {
        method: "open_adiabatic_frame".into(),
        t_run_us: schedule.t_run_us,
        levels: k,
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
    let mut record = |f: &Frame, rho: &mut DMatrix<Complex64>, meta: &mut EvolutionMeta| {
        let mut pops = Vec::with_capacity(k);
        for a in 0..k {
            let mut p = rho[(a, a)].re;
            if p < 0.0 {
                if p < -NEGATIVE_POPULATION_SLACK {
                    meta.negative_populations += 1;
                } else {
                    p = 0.0;
                }
            }
            pops.push(p);
        }
        result.tau.push(f.tau);
        result.energies.push(f.energies.clone());
        result.populations.push(pops);
    };

    let mut h: f64 = 1e-3;
    let mut next_out = 0;
    while next_out < opts.output.len() && opts.output[next_out] <= 0.0 {
        record(&frame, &mut rho, &mut meta);
        next_out += 1;
    }
    while frame.tau < 1.0 {
        if meta.steps_accepted + meta.steps_rejected >= opts.max_steps {
            return Err(Error::StepFailure(format!(
                "open evolution exceeded {} steps at tau = {}",
                opts.max_steps, frame.tau
            )));
        }
        let tau = frame.tau;
        let target = opts
            .output
            .get(next_out)
            .copied()
            .unwrap_or(1.0)
            .min(schedule.next_node(tau));
        let hit = h >= target - tau;
        let h_try = if hit { target - tau } else { h };
        let mid = engine.frame(tau + h_try / 2.0, Some(&frame));
        let end = engine.frame(if hit { target } else { tau + h_try }, Some(&mid));
        let attempt = engine.step(&rho, &frame, &end).and_then(|full| {
            let half = engine.step(&rho, &frame, &mid)?;
            let fine = engine.step(&half, &mid, &end)?;
            let err = (&full - &fine).norm();
            Some((fine, err))
        });
        let factor = match &attempt {
            Some((_, err)) if *err > 0.0 => 0.9 * (opts.tol / err).powf(1.0 / 3.0),
            Some(_) => 4.0,
            None => 0.5,
        };
        match attempt {
            Some((fine, err)) if err <= opts.tol || h_try <= opts.h_min => {
                rho = fine;
                hermitize(&mut rho);
                frame = end;
                meta.steps_accepted += 1;
                let tr: f64 = (0..k).map(|a| rho[(a, a)].re).sum();
                meta.max_norm_error = meta.max_norm_error.max((tr - 1.0).abs());
                if !hit || h_try >= h {
                    h = h_try * factor.clamp(0.3, 4.0);
                }
                while next_out < opts.output.len() && opts.output[next_out] <= frame.tau {
                    record(&frame, &mut rho, &mut meta);
                    next_out += 1;
                }
            }
            _ => {
                meta.steps_rejected += 1;
                h = (h_try * factor.clamp(0.1, 0.7)).max(opts.h_min);
            }
        }
    }
    let v = &frame.vecs;
    let vc = v.map(|x| Complex64::new(x, 0.0));
    let full = &vc * &rho * vc.transpose();
    result.final_probabilities = (0..op.dim()).map(|j| full[(j, j)].re.max(0.0)).collect();
    let total: f64 = result.final_probabilities.iter().sum();
    meta.max_norm_error = meta.max_norm_error.max((total - 1.0).abs());
    result.meta = meta;
    Ok(result)
}
