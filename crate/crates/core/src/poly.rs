//! Multilinear pseudo-Boolean polynomials with exact rational coefficients.
//!
//! Variables are 1-based (`q1 .. ql`). Assignment masks put `q_i` in bit `i - 1`.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_capacity, Error, Result};
use crate::rational::{common_denominator, int, parse_rational, scaled_integer, Rational};

/// Largest arity handled by exhaustive enumeration and interpolation.
pub const MAX_EXHAUSTIVE_ARITY: usize = 24;

/// A set of distinct variable indices, kept sorted.
///
/// Ordering is colexicographic, which is the order of the monomial's bit mask
/// read as an unsigned integer: `q1q2 < q3 < q1q3 < q2q3 < q1q2q3 < q4`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<usize>);

impl Monomial {
    /// Sorts and removes repeats (`q_i^2 = q_i`).
    pub fn new(mut vars: Vec<usize>) -> Self {
        vars.sort_unstable();
        vars.dedup();
        Monomial(vars)
    }

    pub fn constant() -> Self {
        Monomial(Vec::new())
    }

    pub fn vars(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn max_var(&self) -> usize {
        self.0.last().copied().unwrap_or(0)
    }

    /// Bit mask over variables `1..=64`.
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &v| m | 1u64 << (v - 1))
    }

    pub fn from_mask(mask: u64) -> Self {
        Monomial((0..64).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect())
    }

    pub fn union(&self, other: &Monomial) -> Monomial {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Monomial::new(v)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter().rev();
        let mut b = other.0.iter().rev();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) if x != y => return x.cmp(y),
                _ => {}
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultilinearPolynomial {
    arity: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl MultilinearPolynomial {
    pub fn zero(arity: usize) -> Self {
        MultilinearPolynomial {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: Rational) -> Self {
        let mut p = Self::zero(arity);
        p.add_term(Monomial::constant(), c);
        p
    }

    /// Collects terms, merging repeats and dropping zeros. Indices must lie in `1..=arity`.
    pub fn from_terms<I>(arity: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, Rational)>,
    {
        let mut p = Self::zero(arity);
        for (vars, c) in terms {
            if let Some(&v) = vars.iter().find(|&&v| v == 0 || v > arity) {
                return Err(Error::UnknownVariable(v));
            }
            p.add_term(Monomial::new(vars), c);
        }
        Ok(p)
    }

    /// Parses text such as `"4 - 3q1 + 4q2 - 4q1q2"` or `"13/4 q1 q2"`.
    /// The arity is the largest index that appears.
    pub fn parse(s: &str) -> Result<Self> {
        let terms = parse_terms(s)?;
        let arity = terms
            .iter()
            .flat_map(|(v, _)| v.iter().copied())
            .max()
            .unwrap_or(0);
        Self::from_terms(arity, terms)
    }

    pub fn parse_with_arity(s: &str, arity: usize) -> Result<Self> {
        Self::from_terms(arity, parse_terms(s)?)
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        if m.max_var() > self.arity {
            self.arity = m.max_var();
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn with_arity(mut self, arity: usize) -> Result<Self> {
        let needed = self.terms.keys().map(Monomial::max_var).max().unwrap_or(0);
        if arity < needed {
            return Err(Error::UnknownVariable(needed));
        }
        self.arity = arity;
        Ok(self)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, vars: &[usize]) -> Rational {
        self.terms
            .get(&Monomial::new(vars.to_vec()))
            .copied()
            .unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&[])
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Value at an assignment mask; only meaningful for arity <= 64.
    pub fn evaluate(&self, mask: u64) -> Rational {
        self.terms
            .iter()
            .filter(|(m, _)| {
                let mm = m.mask();
                mask & mm == mm
            })
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn evaluate_bits(&self, bits: &[bool]) -> Rational {
        self.terms
            .iter()
            .filter(|(m, _)| m.vars().iter().all(|&v| bits.get(v - 1).copied().unwrap_or(false)))
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn scale(&self, k: Rational) -> Self {
        let mut p = Self::zero(self.arity);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), *c * k);
        }
        p
    }

    /// All `2^arity` values as integers over a common denominator.
    pub fn dense_values(&self) -> Result<DenseValues> {
        check_capacity("polynomial arity", self.arity, MAX_EXHAUSTIVE_ARITY)?;
        let den = common_denominator(self.terms.values());
        let mut v = vec![0i64; 1usize << self.arity];
        for (m, c) in &self.terms {
            v[m.mask() as usize] += scaled_integer(c, den);
        }
        // Zeta transform: value(x) = sum of coefficients over subsets of x.
        for bit in 0..self.arity {
            let step = 1usize << bit;
            for x in 0..v.len() {
                if x & step != 0 {
                    v[x] += v[x ^ step];
                }
            }
        }
        Ok(DenseValues { den, values: v })
    }

    /// Minimum over all assignments.
    pub fn min_value(&self) -> Result<Rational> {
        let d = self.dense_values()?;
        Ok(d.get(d.argmin()))
    }

    /// Polynomial with variables renamed by `map(old) -> new`.
    pub fn relabel(&self, arity: usize, map: impl Fn(usize) -> usize) -> Result<Self> {
        Self::from_terms(
            arity,
            self.terms
                .iter()
                .map(|(m, c)| (m.vars().iter().map(|&v| map(v)).collect(), *c)),
        )
    }
}

/// Exhaustive table of polynomial values, `values[mask] / den`.
#[derive(Debug, Clone)]
pub struct DenseValues {
    pub den: i64,
    pub values: Vec<i64>,
}

impl DenseValues {
    pub fn get(&self, mask: usize) -> Rational {
        Rational::new(self.values[mask], self.den)
    }

    /// Lowest mask attaining the minimum.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }
}

impl Add for &MultilinearPolynomial {
    type Output = MultilinearPolynomial;

    fn add(self, rhs: &MultilinearPolynomial) -> MultilinearPolynomial {
        let mut p = self.clone();
        p.arity = p.arity.max(rhs.arity);
        for (m, c) in &rhs.terms {
            p.add_term(m.clone(), *c);
        }
        p
    }
}

impl Sub for &MultilinearPolynomial {
    type Output = MultilinearPolynomial;

    fn sub(self, rhs: &MultilinearPolynomial) -> MultilinearPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &MultilinearPolynomial {
    type Output = MultilinearPolynomial;

    fn neg(self) -> MultilinearPolynomial {
        self.scale(-Rational::one())
    }
}

impl Mul for &MultilinearPolynomial {
    type Output = MultilinearPolynomial;

    /// Product reduced with `q_i^2 = q_i`.
    fn mul(self, rhs: &MultilinearPolynomial) -> MultilinearPolynomial {
        let mut p = MultilinearPolynomial::zero(self.arity.max(rhs.arity));
        for (a, ca) in &self.terms {
            for (b, cb) in &rhs.terms {
                p.add_term(a.union(b), *ca * *cb);
            }
        }
        p
    }
}

fn fmt_coefficient(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for MultilinearPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            match (k, c.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.degree() == 0 {
                f.write_str(&fmt_coefficient(&mag))?;
                continue;
            }
            if !mag.is_one() {
                f.write_str(&fmt_coefficient(&mag))?;
                if !mag.is_integer() {
                    f.write_str(" ")?;
                }
            }
            for v in m.vars() {
                write!(f, "q{v}")?;
            }
        }
        Ok(())
    }
}

fn parse_terms(s: &str) -> Result<Vec<(Vec<usize>, Rational)>> {
    let bad = |msg: String| Error::validation(format!("polynomial text: {msg}"));
    let chars: Vec<char> = s
        .chars()
        .map(|c| if c == '\u{2212}' { '-' } else { c })
        .collect();
    let n = chars.len();
    let skip_ws = |i: &mut usize| {
        while *i < n && (chars[*i].is_whitespace() || chars[*i] == '*') {
            *i += 1;
        }
    };
    let mut out = Vec::new();
    let mut i = 0;
    skip_ws(&mut i);
    if i == n {
        return Err(bad("empty".into()));
    }
    while i < n {
        let mut sign = int(1);
        let mut saw_sign = false;
        while i < n && (chars[i] == '+' || chars[i] == '-') {
            if chars[i] == '-' {
                sign = -sign;
            }
            saw_sign = true;
            i += 1;
            skip_ws(&mut i);
        }
        if !saw_sign && !out.is_empty() {
            return Err(bad(format!("expected '+' or '-' at position {i}")));
        }
        let start = i;
        while i < n && (chars[i].is_ascii_digit() || chars[i] == '/' || chars[i] == '.') {
            i += 1;
        }
        let coef: Rational = if i > start {
            let text: String = chars[start..i].iter().collect();
            parse_rational(&text)?
        } else {
            int(1)
        };
        skip_ws(&mut i);
        let mut vars = Vec::new();
        while i < n && (chars[i] == 'q' || chars[i] == 'x') {
            i += 1;
            let vs = i;
            while i < n && chars[i].is_ascii_digit() {
                i += 1;
            }
            if vs == i {
                return Err(bad("variable without index".into()));
            }
            let idx: usize = chars[vs..i]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| bad("bad variable index".into()))?;
            if idx == 0 {
                return Err(Error::UnknownVariable(0));
            }
            vars.push(idx);
            skip_ws(&mut i);
        }
        if i == start {
            return Err(bad(format!("empty term at position {start}")));
        }
        if i < n && chars[i] != '+' && chars[i] != '-' {
            return Err(bad(format!("unexpected '{}'", chars[i])));
        }
        out.push((vars, sign * coef));
    }
    Ok(out)
}

/// The unique multilinear polynomial matching `oracle` on all `2^arity` assignments.
pub fn interpolate_polynomial(
    arity: usize,
    oracle: impl Fn(u64) -> Rational,
) -> Result<MultilinearPolynomial> {
    check_capacity("interpolation arity", arity, MAX_EXHAUSTIVE_ARITY)?;
    let raw: Vec<Rational> = (0..1u64 << arity).map(oracle).collect();
    let den = common_denominator(raw.iter());
    let mut v: Vec<i64> = raw.iter().map(|r| scaled_integer(r, den)).collect();
    // Moebius transform: coefficient(S) = sum over T subset of S of (-1)^{|S|-|T|} f(T).
    for bit in 0..arity {
        let step = 1usize << bit;
        for x in 0..v.len() {
            if x & step != 0 {
                v[x] -= v[x ^ step];
            }
        }
    }
    let mut p = MultilinearPolynomial::zero(arity);
    for (mask, c) in v.into_iter().enumerate() {
        if c != 0 {
            p.add_term(Monomial::from_mask(mask as u64), Rational::new(c, den));
        }
    }
    Ok(p)
}

/// Substitutes constants for variables. With `relabel`, the survivors are renumbered
/// `1..` in their original order; otherwise the arity is unchanged.
pub fn fix_variables(
    p: &MultilinearPolynomial,
    bindings: &[(usize, bool)],
    relabel: bool,
) -> Result<MultilinearPolynomial> {
    let mut fixed: BTreeMap<usize, bool> = BTreeMap::new();
    for &(v, b) in bindings {
        if v == 0 || v > p.arity() {
            return Err(Error::UnknownVariable(v));
        }
        if let Some(prev) = fixed.insert(v, b) {
            if prev != b {
                return Err(Error::validation(format!("q{v} bound to both 0 and 1")));
            }
        }
    }
    let survivors: Vec<usize> = (1..=p.arity()).filter(|v| !fixed.contains_key(v)).collect();
    let new_index: BTreeMap<usize, usize> = survivors
        .iter()
        .enumerate()
        .map(|(k, &v)| (v, if relabel { k + 1 } else { v }))
        .collect();
    let arity = if relabel { survivors.len() } else { p.arity() };
    let mut out = MultilinearPolynomial::zero(arity);
    'terms: for (m, c) in p.terms() {
        let mut vars = Vec::with_capacity(m.degree());
        for &v in m.vars() {
            match fixed.get(&v) {
                Some(false) => continue 'terms,
                Some(true) => {}
                None => vars.push(new_index[&v]),
            }
        }
        out.add_term(Monomial::new(vars), *c);
    }
    Ok(out)
}

/// Interchange form: `{arity, terms: [{vars, num, den}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialFile {
    pub arity: usize,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub vars: Vec<usize>,
    pub num: i64,
    pub den: i64,
}

impl From<&MultilinearPolynomial> for PolynomialFile {
    fn from(p: &MultilinearPolynomial) -> Self {
        PolynomialFile {
            arity: p.arity(),
            terms: p
                .terms()
                .map(|(m, c)| TermRecord {
                    vars: m.vars().to_vec(),
                    num: *c.numer(),
                    den: *c.denom(),
                })
                .collect(),
        }
    }
}

impl TryFrom<PolynomialFile> for MultilinearPolynomial {
    type Error = Error;

    fn try_from(f: PolynomialFile) -> Result<Self> {
        let mut terms = Vec::with_capacity(f.terms.len());
        for t in f.terms {
            if t.den == 0 {
                return Err(Error::validation("zero denominator in polynomial term"));
            }
            terms.push((t.vars, Rational::new(t.num, t.den)));
        }
        MultilinearPolynomial::from_terms(f.arity, terms)
    }
}

impl Serialize for MultilinearPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultilinearPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = PolynomialFile::deserialize(d)?;
        MultilinearPolynomial::try_from(f).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn p(s: &str) -> MultilinearPolynomial {
        MultilinearPolynomial::parse(s).unwrap()
    }

    #[test]
    fn colex_display_order() {
        let q = p("q1q2q3 + 15q2q3 + 4q1q2 - 4q1q4");
        assert_eq!(q.to_string(), "4q1q2 + 15q2q3 + q1q2q3 - 4q1q4");
    }

    #[test]
    fn parse_round_trip() {
        let text = "4 - 3q1 + 4q2 - 4q1q2 - 13/4 q3 + q1q3";
        let q = p(text);
        assert_eq!(p(&q.to_string()), q);
        assert_eq!(q.coefficient(&[3]), rat(-13, 4));
        assert_eq!(q.constant_term(), int(4));
    }

    #[test]
    fn parse_merges_repeated_variables() {
        let q = p("2q1q1 + q1");
        assert_eq!(q.coefficient(&[1]), int(3));
        assert_eq!(q.num_terms(), 1);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(MultilinearPolynomial::parse("3q1 q").is_err());
        assert!(MultilinearPolynomial::parse("3q0").is_err());
        assert!(MultilinearPolynomial::parse("").is_err());
        assert!(MultilinearPolynomial::parse("2q1 3q2").is_err());
    }

    #[test]
    fn interpolate_trivial_cases() {
        assert!(interpolate_polynomial(3, |_| int(0)).unwrap().is_zero());
        let and = interpolate_polynomial(2, |m| int((m == 0b11) as i64)).unwrap();
        assert_eq!(and, p("q1q2"));
    }

    #[test]
    fn fix_all_variables_gives_value() {
        let q = p("-1 - 4q3 + 9q1q3 + 9q2q3 - 16q1q2q3");
        let f = fix_variables(&q, &[(1, true), (2, false), (3, true)], true).unwrap();
        assert_eq!(f.arity(), 0);
        assert_eq!(f.constant_term(), q.evaluate(0b101));
    }

    #[test]
    fn fix_without_relabel_keeps_indices() {
        let q = p("q1q2 + q3");
        let f = fix_variables(&q, &[(1, true)], false).unwrap();
        assert_eq!(f, p("q2 + q3"));
        assert_eq!(f.arity(), 3);
    }

    #[test]
    fn fix_rejects_unknown_index() {
        let q = p("q1q2");
        assert!(matches!(fix_variables(&q, &[(3, true)], true), Err(Error::UnknownVariable(3))));
    }

    #[test]
    fn dense_values_match_pointwise() {
        let q = p("1/2 - q1 + 3q2q3 - 7/3 q1q2q3");
        let d = q.dense_values().unwrap();
        for m in 0..8u64 {
            assert_eq!(d.get(m as usize), q.evaluate(m));
        }
    }

    #[test]
    fn json_form() {
        let q = p("-3/2 q2 + 7q1q2");
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(
            s,
            r#"{"arity":2,"terms":[{"vars":[2],"num":-3,"den":2},{"vars":[1,2],"num":7,"den":1}]}"#
        );
        let back: MultilinearPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
