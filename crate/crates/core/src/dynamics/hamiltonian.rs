//! `H(tau) = A(tau) (-sum_i sigma^x_i) + B(tau) H_p` on `2^n` basis states.
//!
//! Basis state `k` has spin `i` equal to -1 exactly when bit `i` of `k` is set, the same
//! convention as assignment masks elsewhere in the crate.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_capacity, Result};
use crate::ising::IsingModel;

pub const DENSE_MAX_QUBITS: usize = 12;

/// Driver and problem parts of the annealing Hamiltonian, energies in GHz per unit
/// of schedule coefficient.
#[derive(Debug, Clone)]
pub struct AnnealOperator {
    n: usize,
    diag: Vec<f64>,
}

impl AnnealOperator {
    pub fn new(ising: &IsingModel) -> Result<Self> {
        let n = ising.n();
        check_capacity("qubits for dense dynamics", n, DENSE_MAX_QUBITS)?;
        let h = ising.h_f64();
        let j = ising.couplings_f64();
        let diag = (0..1usize << n)
            .map(|k| {
                let s = |i: usize| if k >> i & 1 == 1 { -1.0 } else { 1.0 };
                let mut e: f64 = h.iter().enumerate().map(|(i, hi)| hi * s(i)).sum();
                for &((a, b), v) in &j {
                    e += v * s(a) * s(b);
                }
                e
            })
            .collect();
        Ok(AnnealOperator { n, diag })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Classical problem energies per basis state.
    pub fn problem_diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `out = -sum_i sigma^x_i x`.
    pub fn apply_driver(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..self.n {
                acc -= x[k ^ (1 << i)];
            }
            *o = acc;
        }
    }

    /// `out = a H_b x + b H_p x`.
    pub fn apply(&self, a: f64, b: f64, x: &[Complex64], out: &mut [Complex64]) {
        self.apply_driver(x, out);
        for ((o, xi), d) in out.iter_mut().zip(x).zip(&self.diag) {
            *o = *o * a + *xi * (b * d);
        }
    }

    /// `out = [H_b, H_p] x`.
    pub fn apply_commutator(&self, x: &[Complex64], out: &mut [Complex64]) {
        let px: Vec<Complex64> = x.iter().zip(&self.diag).map(|(v, d)| v * d).collect();
        self.apply_driver(&px, out);
        let mut bx = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply_driver(x, &mut bx);
        for ((o, b), d) in out.iter_mut().zip(&bx).zip(&self.diag) {
            *o -= b * d;
        }
    }

    /// Upper bound on the spectral radius of `a H_b + b H_p`.
    pub fn norm_bound(&self, a: f64, b: f64) -> f64 {
        let dmax = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        a.abs() * self.n as f64 + b.abs() * dmax
    }

    pub fn dense(&self, a: f64, b: f64) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            m[(k, k)] = b * self.diag[k];
            for i in 0..self.n {
                m[(k, k ^ (1 << i))] = -a;
            }
        }
        m
    }
}

pub fn build_hamiltonian(ising: &IsingModel, a: f64, b: f64) -> Result<DMatrix<f64>> {
    Ok(AnnealOperator::new(ising)?.dense(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::eigen::eigh_lowest;
    use crate::rational::int;

    fn one_spin() -> IsingModel {
        IsingModel::new(vec![int(1)], [], int(0), int(1)).unwrap()
    }

    #[test]
    fn driver_only_single_qubit() {
        let m = build_hamiltonian(&one_spin(), 2.0, 0.0).unwrap();
        let (v, _) = eigh_lowest(&m, 2);
        assert!((v[0] + 2.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn problem_only_is_classical() {
        let ising = IsingModel::new(
            vec![int(1), int(-1)],
            [((0, 1), int(1))],
            int(0),
            int(1),
        )
        .unwrap();
        let m = build_hamiltonian(&ising, 0.0, 1.0).unwrap();
        for k in 0..4u64 {
            let e = crate::rational::to_f64(&ising.energy_mask(k));
            assert_eq!(m[(k as usize, k as usize)], e);
        }
        assert_eq!(m.clone() - m.transpose(), DMatrix::zeros(4, 4));
    }

    #[test]
    fn commutator_matches_dense() {
        let ising = IsingModel::new(
            vec![int(1), int(-2), int(1)],
            [((0, 1), int(1)), ((1, 2), int(-1))],
            int(0),
            int(1),
        )
        .unwrap();
        let op = AnnealOperator::new(&ising).unwrap();
        let hb = op.dense(1.0, 0.0);
        let hp = op.dense(0.0, 1.0);
        let c = &hb * &hp - &hp * &hb;
        let x: Vec<Complex64> = (0..8).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); 8];
        op.apply_commutator(&x, &mut out);
        for r in 0..8 {
            let want: Complex64 = (0..8).map(|s| x[s] * c[(r, s)]).sum();
            assert!((out[r] - want).norm() < 1e-12);
        }
    }
}
