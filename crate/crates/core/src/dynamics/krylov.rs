//! Lanczos approximation of `exp(-i G) v` for Hermitian `G` given as a matrix-vector
//! product.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub const KRYLOV_MAX_DIM: usize = 48;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Returns `None` when the Krylov space of dimension `KRYLOV_MAX_DIM` does not reach
/// `tol`; callers shrink the step and retry.
pub fn expm_minus_i(
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    v: &[Complex64],
    tol: f64,
) -> Option<Vec<Complex64>> {
    let dim = v.len();
    let beta = norm(v);
    if beta == 0.0 {
        return Some(v.to_vec());
    }
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut off: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let max_m = KRYLOV_MAX_DIM.min(dim);
    for j in 0..max_m {
        apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm(&w);
        let m = j + 1;
        let small = small_exp(&alpha, &off);
        let last = small[m - 1].norm() * b;
        let done = b <= 1e-14 * (1.0 + a.abs()) || m == dim;
        if done || last * beta <= tol {
            let mut out = vec![Complex64::new(0.0, 0.0); dim];
            for (q, c) in basis.iter().zip(&small) {
                let c = c * beta;
                for (o, qi) in out.iter_mut().zip(q) {
                    *o += c * qi;
                }
            }
            return Some(out);
        }
        off.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    None
}

/// First column of `exp(-i T)` for the symmetric tridiagonal `T`.
fn small_exp(alpha: &[f64], off: &[f64]) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let u = eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)];
                    Complex64::from_polar(u, -eig.eigenvalues[k])
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_diagonal_exponential() {
        let d: Vec<f64> = (0..20).map(|k| (k as f64 * 0.37).sin() * 3.0).collect();
        let v: Vec<Complex64> = (0..20).map(|k| Complex64::new(1.0, k as f64 * 0.1)).collect();
        let out = expm_minus_i(
            |x, o| {
                for ((oi, xi), di) in o.iter_mut().zip(x).zip(&d) {
                    *oi = xi * di;
                }
            },
            &v,
            1e-13,
        )
        .unwrap();
        for k in 0..20 {
            let want = v[k] * Complex64::from_polar(1.0, -d[k]);
            assert!((out[k] - want).norm() < 1e-11);
        }
    }
}
