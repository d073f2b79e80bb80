//! Ising models `sum h_i s_i + sum J_ij s_i s_j` with exact coefficients.
//!
//! A model remembers how it was normalized: the binary-variable energy it came from is
//! `scale * E_ising(s) + offset`, with `q_i = (1 - s_i) / 2`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Monomial, MultilinearPolynomial};
use crate::rational::{common_denominator, int, rat, scaled_integer, to_f64, Exact, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsingModel {
    h: Vec<Rational>,
    j: BTreeMap<(usize, usize), Rational>,
    offset: Rational,
    scale: Rational,
}

/// Spin of variable `i` in an assignment mask: bit set means `q = 1`, i.e. `s = -1`.
pub fn spin_of(mask: u64, i: usize) -> i8 {
    if mask >> i & 1 == 1 {
        -1
    } else {
        1
    }
}

pub fn spins_from_mask(mask: u64, n: usize) -> Vec<i8> {
    (0..n).map(|i| spin_of(mask, i)).collect()
}

pub fn mask_from_spins(spins: &[i8]) -> u64 {
    spins
        .iter()
        .enumerate()
        .fold(0u64, |m, (i, &s)| if s < 0 { m | 1 << i } else { m })
}

impl IsingModel {
    pub fn new<I>(h: Vec<Rational>, couplings: I, offset: Rational, scale: Rational) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), Rational)>,
    {
        let n = h.len();
        if scale <= Rational::zero() {
            return Err(Error::validation("Ising scale must be positive"));
        }
        let mut j: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for ((a, b), v) in couplings {
            if a == b {
                return Err(Error::validation(format!("diagonal coupling J[{a},{a}]")));
            }
            if a >= n || b >= n {
                return Err(Error::validation(format!(
                    "coupling ({a},{b}) outside {n} spins"
                )));
            }
            *j.entry((a.min(b), a.max(b))).or_insert_with(Rational::zero) += v;
        }
        j.retain(|_, v| !v.is_zero());
        Ok(IsingModel {
            h,
            j,
            offset,
            scale,
        })
    }

    pub fn zero(n: usize) -> Self {
        IsingModel {
            h: vec![Rational::zero(); n],
            j: BTreeMap::new(),
            offset: Rational::zero(),
            scale: Rational::one(),
        }
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[Rational] {
        &self.h
    }

    pub fn couplings(&self) -> &BTreeMap<(usize, usize), Rational> {
        &self.j
    }

    pub fn coupling(&self, a: usize, b: usize) -> Rational {
        self.j
            .get(&(a.min(b), a.max(b)))
            .copied()
            .unwrap_or_else(Rational::zero)
    }

    pub fn offset(&self) -> Rational {
        self.offset
    }

    pub fn scale(&self) -> Rational {
        self.scale
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        for &(a, b) in self.j.keys() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn max_abs_coefficient(&self) -> Rational {
        self.h
            .iter()
            .chain(self.j.values())
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn energy(&self, spins: &[i8]) -> Rational {
        assert_eq!(spins.len(), self.n(), "spin vector length");
        let mut e = Rational::zero();
        for (h, &s) in self.h.iter().zip(spins) {
            e += *h * int(s as i64);
        }
        for (&(a, b), v) in &self.j {
            e += *v * int((spins[a] * spins[b]) as i64);
        }
        e
    }

    pub fn energy_mask(&self, mask: u64) -> Rational {
        self.energy(&spins_from_mask(mask, self.n()))
    }

    /// Energy in the units of the source polynomial.
    pub fn binary_energy(&self, spins: &[i8]) -> Rational {
        self.scale * self.energy(spins) + self.offset
    }

    pub fn to_binary_energy(&self, e: Rational) -> Rational {
        self.scale * e + self.offset
    }

    /// Divides all coefficients by the largest magnitude so that it becomes 1.
    pub fn normalized(&self) -> Self {
        let m = self.max_abs_coefficient();
        if m.is_zero() || m.is_one() {
            return self.clone();
        }
        IsingModel {
            h: self.h.iter().map(|v| *v / m).collect(),
            j: self.j.iter().map(|(k, v)| (*k, *v / m)).collect(),
            offset: self.offset,
            scale: self.scale * m,
        }
    }

    /// The binary-variable polynomial `scale * E_ising + offset` with `s = 1 - 2q`.
    pub fn to_polynomial(&self) -> MultilinearPolynomial {
        let mut p = MultilinearPolynomial::zero(self.n());
        p.add_term(Monomial::constant(), self.offset);
        for (i, h) in self.h.iter().enumerate() {
            let c = *h * self.scale;
            p.add_term(Monomial::constant(), c);
            p.add_term(Monomial::new(vec![i + 1]), c * int(-2));
        }
        for (&(a, b), v) in &self.j {
            let c = *v * self.scale;
            p.add_term(Monomial::constant(), c);
            p.add_term(Monomial::new(vec![a + 1]), c * int(-2));
            p.add_term(Monomial::new(vec![b + 1]), c * int(-2));
            p.add_term(Monomial::new(vec![a + 1, b + 1]), c * int(4));
        }
        p
    }

    pub fn h_f64(&self) -> Vec<f64> {
        self.h.iter().map(to_f64).collect()
    }

    pub fn couplings_f64(&self) -> Vec<((usize, usize), f64)> {
        self.j.iter().map(|(k, v)| (*k, to_f64(v))).collect()
    }

    /// Coefficients as integers over a common denominator, for fast exact enumeration.
    pub fn integer_form(&self) -> IntegerIsing {
        let den = common_denominator(self.h.iter().chain(self.j.values()));
        let h = self.h.iter().map(|v| scaled_integer(v, den)).collect();
        let mut adj = vec![Vec::new(); self.n()];
        for (&(a, b), v) in &self.j {
            let w = scaled_integer(v, den);
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        IntegerIsing { den, h, adj }
    }
}

/// `den * (Ising energy)` in integer arithmetic.
#[derive(Debug, Clone)]
pub struct IntegerIsing {
    pub den: i64,
    pub h: Vec<i64>,
    pub adj: Vec<Vec<(usize, i64)>>,
}

impl IntegerIsing {
    pub fn energy(&self, spins: &[i8]) -> i64 {
        let mut e = 0i64;
        for (i, &s) in spins.iter().enumerate() {
            e += self.h[i] * s as i64;
            for &(k, w) in &self.adj[i] {
                if k > i {
                    e += w * (s * spins[k]) as i64;
                }
            }
        }
        e
    }

    /// Energy change from flipping spin `i`.
    pub fn flip_delta(&self, spins: &[i8], i: usize) -> i64 {
        let field: i64 = self.h[i]
            + self.adj[i]
                .iter()
                .map(|&(k, w)| w * spins[k] as i64)
                .sum::<i64>();
        -2 * spins[i] as i64 * field
    }

    /// Calls `f(mask, scaled energy)` for every state in Gray-code order.
    pub fn for_each_state(&self, mut f: impl FnMut(u64, i64)) {
        let n = self.h.len();
        let mut spins = vec![1i8; n];
        let mut e = self.energy(&spins);
        let mut mask = 0u64;
        f(mask, e);
        for step in 1u64..(1u64 << n) {
            let i = step.trailing_zeros() as usize;
            e += self.flip_delta(&spins, i);
            spins[i] = -spins[i];
            mask ^= 1 << i;
            f(mask, e);
        }
    }
}

/// Spin form of a quadratic polynomial, normalized so the largest |h| or |J| is 1.
pub fn to_ising(p: &MultilinearPolynomial) -> Result<IsingModel> {
    if p.degree() > 2 {
        return Err(Error::validation(format!(
            "to_ising needs a quadratic polynomial, got degree {}",
            p.degree()
        )));
    }
    let n = p.arity();
    let mut h = vec![Rational::zero(); n];
    let mut j = BTreeMap::new();
    let mut offset = Rational::zero();
    let half = rat(1, 2);
    let quarter = rat(1, 4);
    for (m, c) in p.terms() {
        match m.vars() {
            [] => offset += *c,
            [a] => {
                offset += *c * half;
                h[a - 1] -= *c * half;
            }
            [a, b] => {
                offset += *c * quarter;
                h[a - 1] -= *c * quarter;
                h[b - 1] -= *c * quarter;
                *j.entry((a - 1, b - 1)).or_insert_with(Rational::zero) += *c * quarter;
            }
            _ => unreachable!("degree checked above"),
        }
    }
    Ok(IsingModel::new(h, j, offset, Rational::one())?.normalized())
}

/// Interchange form: `{n, h, J: [{i, j, v}], offset, scale}` with exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsingFile {
    pub n: usize,
    pub h: Vec<Exact>,
    #[serde(rename = "J")]
    pub j: Vec<CouplingRecord>,
    pub offset: Exact,
    pub scale: Exact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub i: usize,
    pub j: usize,
    pub v: Exact,
}

impl From<&IsingModel> for IsingFile {
    fn from(m: &IsingModel) -> Self {
        IsingFile {
            n: m.n(),
            h: m.h.iter().map(|v| Exact(*v)).collect(),
            j: m
                .j
                .iter()
                .map(|(&(i, j), v)| CouplingRecord { i, j, v: Exact(*v) })
                .collect(),
            offset: Exact(m.offset),
            scale: Exact(m.scale),
        }
    }
}

impl TryFrom<IsingFile> for IsingModel {
    type Error = Error;

    fn try_from(f: IsingFile) -> Result<Self> {
        if f.h.len() != f.n {
            return Err(Error::validation(format!(
                "h has {} entries but n = {}",
                f.h.len(),
                f.n
            )));
        }
        IsingModel::new(
            f.h.into_iter().map(|e| e.0).collect(),
            f.j.into_iter().map(|c| ((c.i, c.j), c.v.0)),
            f.offset.0,
            f.scale.0,
        )
    }
}

impl Serialize for IsingModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IsingFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for IsingModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        IsingModel::try_from(IsingFile::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
