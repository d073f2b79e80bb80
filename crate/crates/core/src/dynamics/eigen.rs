//! Lowest eigenpairs of a dense real symmetric matrix: Householder reduction to
//! tridiagonal form, Sturm bisection for the eigenvalues, inverse iteration for the
//! vectors and back-transformation through the reflectors. Only the requested
//! vectors are formed, which is what makes this cheaper than a full decomposition.

use nalgebra::DMatrix;

struct Tridiagonal {
    n: usize,
    d: Vec<f64>,
    /// `e[i]` couples rows `i` and `i + 1`.
    e: Vec<f64>,
    /// Reflector `j` is `I - beta v v^T` acting on indices `j + 1..n`.
    reflectors: Vec<(f64, Vec<f64>)>,
}

fn tridiagonalize(m: &DMatrix<f64>) -> Tridiagonal {
    let n = m.nrows();
    let mut a = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![0.0; n];
    for j in 0..n.saturating_sub(1) {
        d[j] = a[j + j * n];
        let off = j + 1;
        let len = n - off;
        let col = &a[j * n + off..(j + 1) * n];
        let x0 = col[0];
        let sigma: f64 = col[1..].iter().map(|x| x * x).sum();
        if sigma == 0.0 {
            e[j] = x0;
            continue;
        }
        let norm = (x0 * x0 + sigma).sqrt();
        let alpha = if x0 > 0.0 { -norm } else { norm };
        let mut v = col.to_vec();
        v[0] = x0 - alpha;
        let beta = 2.0 / (v[0] * v[0] + sigma);
        e[j] = alpha;

        // p = beta B v using the lower triangle of the trailing block B.
        let p = &mut p[..len];
        p.iter_mut().for_each(|x| *x = 0.0);
        for c in 0..len {
            let bc = &a[(off + c) * n + off + c..(off + c + 1) * n];
            let vc = v[c];
            p[c] += bc[0] * vc;
            let mut dot = 0.0;
            for (r, &b) in bc.iter().enumerate().skip(1) {
                p[c + r] += b * vc;
                dot += b * v[c + r];
            }
            p[c] += dot;
        }
        p.iter_mut().for_each(|x| *x *= beta);
        let kk = 0.5 * beta * p.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        let w: Vec<f64> = p.iter().zip(&v).map(|(x, y)| x - kk * y).collect();
        for c in 0..len {
            let (vc, wc) = (v[c], w[c]);
            let bc = &mut a[(off + c) * n + off + c..(off + c + 1) * n];
            for (r, b) in bc.iter_mut().enumerate() {
                *b -= v[c + r] * wc + w[c + r] * vc;
            }
        }
        reflectors.push((j, beta, v));
    }
    if n > 0 {
        d[n - 1] = a[n * n - 1];
    }
    let mut dense = Vec::with_capacity(n.saturating_sub(1));
    let mut it = reflectors.into_iter().peekable();
    for j in 0..n.saturating_sub(1) {
        match it.peek() {
            Some((k, _, _)) if *k == j => {
                let (_, beta, v) = it.next().expect("peeked");
                dense.push((beta, v));
            }
            _ => dense.push((0.0, Vec::new())),
        }
    }
    Tridiagonal {
        n,
        d,
        e,
        reflectors: dense,
    }
}

impl Tridiagonal {
    fn norm(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let l = if i > 0 { self.e[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < self.n { self.e[i].abs() } else { 0.0 };
                self.d[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.d[0] - x;
        for i in 0..self.n {
            if i > 0 {
                q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `i`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    fn eigenvalue(&self, i: usize, lo: f64, hi: f64, pivmin: f64) -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if self.count_below(mid, pivmin) > i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Applies the stored reflectors, mapping a tridiagonal eigenvector back to the
    /// original basis.
    fn back_transform(&self, z: &mut [f64]) {
        for (j, (beta, v)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let tail = &mut z[j + 1..];
            let s = beta * tail.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            tail.iter_mut().zip(v).for_each(|(a, b)| *a -= s * b);
        }
    }
}

/// LU factors of `T - shift` with partial pivoting; rows of `U` have two
/// superdiagonals.
struct ShiftedLu {
    u: Vec<[f64; 3]>,
    mult: Vec<f64>,
    swap: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &Tridiagonal, shift: f64, tiny: f64) -> Self {
        let n = t.n;
        let mut u = Vec::with_capacity(n);
        let mut mult = Vec::with_capacity(n);
        let mut swap = Vec::with_capacity(n);
        let mut cur = [t.d[0] - shift, t.e.first().copied().unwrap_or(0.0), 0.0];
        for i in 0..n {
            if i + 1 == n {
                if cur[0].abs() < tiny {
                    cur[0] = tiny;
                }
                u.push(cur);
                break;
            }
            let mut nxt = [
                t.e[i],
                t.d[i + 1] - shift,
                t.e.get(i + 1).copied().unwrap_or(0.0),
            ];
            let swapped = nxt[0].abs() > cur[0].abs();
            if swapped {
                std::mem::swap(&mut cur, &mut nxt);
            }
            if cur[0].abs() < tiny {
                cur[0] = tiny;
            }
            let l = nxt[0] / cur[0];
            u.push(cur);
            mult.push(l);
            swap.push(swapped);
            cur = [nxt[1] - l * cur[1], nxt[2] - l * cur[2], 0.0];
        }
        ShiftedLu { u, mult, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.mult[i] * b[i];
        }
        for i in (0..n).rev() {
            let r = self.u[i];
            let mut s = b[i];
            if i + 1 < n {
                s -= r[1] * b[i + 1];
            }
            if i + 2 < n {
                s -= r[2] * b[i + 2];
            }
            b[i] = s / r[0];
        }
    }
}

fn normalize(x: &mut [f64]) {
    let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
}

fn orthogonalize(x: &mut [f64], against: &[Vec<f64>]) {
    for q in against {
        let s: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(q).for_each(|(a, b)| *a -= s * b);
    }
}

/// Eigenpairs of a real symmetric matrix, ascending; only the lowest `k` are formed.
pub fn eigh_lowest(m: &DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let k = k.min(n);
    if k == 0 {
        return (Vec::new(), DMatrix::zeros(n, 0));
    }
    let t = tridiagonalize(m);
    let tnorm = t.norm().max(f64::MIN_POSITIVE);
    let max_e2 = t.e.iter().fold(0.0f64, |a, e| a.max(e * e));
    let pivmin = f64::MIN_POSITIVE * max_e2.max(1.0);
    let (lo, hi) = (-tnorm - 1.0, tnorm + 1.0);
    let mut values: Vec<f64> = (0..k).map(|i| t.eigenvalue(i, lo, hi, pivmin)).collect();

    let cluster_gap = 1e-3 * tnorm;
    let separation = 10.0 * f64::EPSILON * tnorm;
    let tiny = f64::EPSILON * tnorm;
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut cluster_start = 0;
    let mut seed: u64 = 0x9e37_79b9_7f4a_7c15;
    for i in 0..k {
        if i > 0 && values[i] - values[i - 1] > cluster_gap {
            cluster_start = i;
        }
        let mut shift = values[i];
        if i > cluster_start && shift - values[i - 1] < separation {
            shift = values[i - 1] + separation;
        }
        let lu = ShiftedLu::new(&t, shift, tiny);
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                seed ^= seed << 13;
                seed ^= seed >> 7;
                seed ^= seed << 17;
                (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        normalize(&mut x);
        for _ in 0..4 {
            lu.solve(&mut x);
            orthogonalize(&mut x, &vectors[cluster_start..i]);
            normalize(&mut x);
        }
        orthogonalize(&mut x, &vectors[cluster_start..i]);
        normalize(&mut x);
        vectors.push(x);
    }
    let mut out = DMatrix::zeros(n, k);
    for (c, mut z) in vectors.into_iter().enumerate() {
        t.back_transform(&mut z);
        out.column_mut(c).copy_from_slice(&z);
    }
    // Rayleigh quotients are at least as accurate as the bisection values.
    for (c, v) in values.iter_mut().enumerate() {
        let col = out.column(c);
        *v = col.dot(&(m * col));
    }
    (values, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn check(m: &DMatrix<f64>, k: usize) {
        let (vals, vecs) = eigh_lowest(m, k);
        let mut reference: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        let scale = m.norm().max(1.0);
        for (i, v) in vals.iter().enumerate() {
            assert!((v - reference[i]).abs() < 1e-12 * scale, "value {i}: {v} vs {}", reference[i]);
            let col = vecs.column(i);
            let res = (m * col - col * *v).norm();
            assert!(res < 1e-11 * scale, "residual {i}: {res}");
        }
        let gram = vecs.transpose() * &vecs;
        assert!((gram - DMatrix::identity(vals.len(), vals.len())).norm() < 1e-11);
    }

    #[test]
    fn matches_full_decomposition() {
        let mut s: u64 = 7;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in [1, 2, 3, 17, 64] {
            let a = DMatrix::from_fn(n, n, |_, _| rnd());
            let m = &a + a.transpose();
            check(&m, n.min(10));
        }
    }

    #[test]
    fn handles_exact_degeneracy() {
        // Pure transverse field on 6 spins: levels -6, -4 (x6), -2 (x15), ...
        let n = 6;
        let dim = 1 << n;
        let m = DMatrix::from_fn(dim, dim, |r, c| {
            if (r ^ c).count_ones() == 1 {
                -1.0
            } else {
                0.0
            }
        });
        check(&m, 24);
        let (vals, _) = eigh_lowest(&m, 22);
        assert!((vals[0] + 6.0).abs() < 1e-12);
        assert!(vals[1..7].iter().all(|v| (v + 4.0).abs() < 1e-12));
        assert!(vals[7..22].iter().all(|v| (v + 2.0).abs() < 1e-12));
        check(&DMatrix::identity(5, 5), 3);
    }
}
