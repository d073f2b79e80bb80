//! Degree reduction by pair collapses and the AND penalty gadget.
//!
//! A collapse `(i, j) -> r` replaces every occurrence of `q_i q_j`, including the bare
//! quadratic term, by a fresh ancilla `r`, then adds
//! `delta * (3r + q_i q_j - 2 q_i r - 2 q_j r)`, which is zero exactly when `r = q_i q_j`.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Monomial, MultilinearPolynomial, MAX_EXHAUSTIVE_ARITY};
use crate::rational::{int, Exact, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseSpec {
    pub i: usize,
    pub j: usize,
    /// Penalty weight; chosen automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Exact>,
}

impl CollapseSpec {
    pub fn new(i: usize, j: usize, delta: Option<Rational>) -> Self {
        CollapseSpec {
            i,
            j,
            delta: delta.map(Exact),
        }
    }
}

/// Ordered collapses; ancillas are numbered after the current arity as they are created.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratizationPlan {
    pub collapses: Vec<CollapseSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collapse {
    pub i: usize,
    pub j: usize,
    pub ancilla: usize,
    pub delta: Exact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadratization {
    pub polynomial: MultilinearPolynomial,
    pub original_arity: usize,
    pub collapses: Vec<Collapse>,
    /// False when the penalty check was skipped because the arity exceeded the
    /// exhaustive limit (explicit deltas only).
    pub verified: bool,
}

impl Quadratization {
    /// Extends an assignment of the original variables with consistent ancillas.
    pub fn consistent_extension(&self, mask: u64) -> u64 {
        let mut m = mask;
        for c in &self.collapses {
            let on = (m >> (c.i - 1)) & (m >> (c.j - 1)) & 1;
            m |= on << (c.ancilla - 1);
        }
        m
    }

    pub fn is_consistent(&self, mask: u64) -> bool {
        self.collapses.iter().all(|c| {
            let want = (mask >> (c.i - 1)) & (mask >> (c.j - 1)) & 1;
            (mask >> (c.ancilla - 1)) & 1 == want
        })
    }

    pub fn ancilla_map(&self) -> BTreeMap<usize, (usize, usize)> {
        self.collapses.iter().map(|c| (c.ancilla, (c.i, c.j))).collect()
    }
}

pub fn and_gadget(i: usize, j: usize, r: usize, delta: Rational) -> MultilinearPolynomial {
    let mut g = MultilinearPolynomial::zero(i.max(j).max(r));
    g.add_term(Monomial::new(vec![r]), delta * int(3));
    g.add_term(Monomial::new(vec![i, j]), delta);
    g.add_term(Monomial::new(vec![i, r]), delta * int(-2));
    g.add_term(Monomial::new(vec![j, r]), delta * int(-2));
    g
}

/// Replace-all substitution of `q_i q_j` by `q_r` (no penalty added).
pub fn substitute_pair(p: &MultilinearPolynomial, i: usize, j: usize, r: usize) -> MultilinearPolynomial {
    let mut out = MultilinearPolynomial::zero(p.arity().max(r));
    for (m, c) in p.terms() {
        if m.contains(i) && m.contains(j) {
            let mut vars: Vec<usize> = m.vars().iter().copied().filter(|&v| v != i && v != j).collect();
            vars.push(r);
            out.add_term(Monomial::new(vars), *c);
        } else {
            out.add_term(m.clone(), *c);
        }
    }
    out
}

fn check_pair(p: &MultilinearPolynomial, i: usize, j: usize) -> Result<()> {
    for v in [i, j] {
        if v == 0 || v > p.arity() {
            return Err(Error::UnknownVariable(v));
        }
    }
    if i == j {
        return Err(Error::Plan(format!("cannot collapse q{i} with itself")));
    }
    Ok(())
}

/// Supremum of the deltas that fail: every violating assignment of `r = q_i q_j` is
/// above zero exactly when delta exceeds this value. `r` is the next free index.
pub fn delta_threshold(p: &MultilinearPolynomial, i: usize, j: usize) -> Result<Rational> {
    check_pair(p, i, j)?;
    let r = p.arity() + 1;
    let sub = substitute_pair(p, i, j, r);
    let dense = sub.dense_values()?;
    let mut worst: Option<Rational> = None;
    for (mask, &base) in dense.values.iter().enumerate() {
        let (qi, qj, qr) = (mask >> (i - 1) & 1, mask >> (j - 1) & 1, mask >> (r - 1) & 1);
        if qr == qi & qj {
            continue;
        }
        // Gadget value on a violation: 3 when r=1 with q_i=q_j=0, else 1.
        let g: i64 = if qr == 1 && qi == 0 && qj == 0 { 3 } else { 1 };
        let t = Rational::new(-base, dense.den * g);
        if worst.map_or(true, |w| t > w) {
            worst = Some(t);
        }
    }
    Ok(worst.unwrap_or_else(Rational::zero))
}

/// Smallest integer delta >= 1 for which every assignment violating `r = q_i q_j` lies
/// strictly above zero. Consistent assignments with `E <= 0` are never above zero, so
/// this also clears all of them.
pub fn select_delta(p: &MultilinearPolynomial, i: usize, j: usize) -> Result<Rational> {
    let t = delta_threshold(p, i, j)?;
    Ok(int((t.floor().to_integer() + 1).max(1)))
}

/// Greedy plan: repeatedly collapse the pair shared by the most monomials of degree
/// at least three, ties going to the lexicographically smallest pair.
pub fn auto_plan(p: &MultilinearPolynomial) -> QuadratizationPlan {
    let mut cur = p.clone();
    let mut collapses = Vec::new();
    loop {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (m, _) in cur.terms().filter(|(m, _)| m.degree() >= 3) {
            let v = m.vars();
            for a in 0..v.len() {
                for b in a + 1..v.len() {
                    *counts.entry((v[a], v[b])).or_default() += 1;
                }
            }
        }
        let Some(best) = counts.values().copied().max() else {
            break;
        };
        let (i, j) = *counts.iter().find(|(_, &c)| c == best).unwrap().0;
        let r = cur.arity() + 1;
        cur = substitute_pair(&cur, i, j, r);
        collapses.push(CollapseSpec::new(i, j, None));
    }
    QuadratizationPlan { collapses }
}

/// Applies `plan`, or the greedy plan when `None`, and checks the penalty criterion.
pub fn quadratize(
    p: &MultilinearPolynomial,
    plan: Option<&QuadratizationPlan>,
) -> Result<Quadratization> {
    let owned;
    let plan = match plan {
        Some(pl) => pl,
        None => {
            owned = auto_plan(p);
            &owned
        }
    };
    let mut cur = p.clone();
    let mut collapses = Vec::with_capacity(plan.collapses.len());
    let mut verified = true;
    for spec in &plan.collapses {
        check_pair(&cur, spec.i, spec.j)?;
        let r = cur.arity() + 1;
        let exhaustive = r <= MAX_EXHAUSTIVE_ARITY;
        let delta = match spec.delta {
            Some(Exact(d)) => {
                if d <= Rational::zero() {
                    return Err(Error::Plan(format!(
                        "delta for q{}q{} must be positive, got {d}",
                        spec.i, spec.j
                    )));
                }
                if exhaustive {
                    let t = delta_threshold(&cur, spec.i, spec.j)?;
                    if d <= t {
                        return Err(Error::Penalty(format!(
                            "delta {d} for q{}q{} leaves a violating assignment at or below zero; it must exceed {t}",
                            spec.i, spec.j
                        )));
                    }
                } else {
                    verified = false;
                }
                d
            }
            None => select_delta(&cur, spec.i, spec.j)?,
        };
        let sub = substitute_pair(&cur, spec.i, spec.j, r);
        cur = &sub + &and_gadget(spec.i, spec.j, r, delta);
        cur = cur.with_arity(r)?;
        collapses.push(Collapse {
            i: spec.i,
            j: spec.j,
            ancilla: r,
            delta: Exact(delta),
        });
    }
    if cur.degree() > 2 {
        return Err(Error::Plan(format!(
            "degree {} remains after {} collapses",
            cur.degree(),
            collapses.len()
        )));
    }
    Ok(Quadratization {
        polynomial: cur,
        original_arity: p.arity(),
        collapses,
        verified,
    })
}

/// Exhaustive comparison of a quadratization against its source polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadratizationCheck {
    pub assignments: usize,
    pub consistent_mismatches: usize,
    pub violations: usize,
    /// Violating assignments with energy <= 0.
    pub low_violations: usize,
    pub min_violation_energy: Option<Rational>,
}

impl QuadratizationCheck {
    pub fn passed(&self) -> bool {
        self.consistent_mismatches == 0 && self.low_violations == 0
    }
}

pub fn check_quadratization(
    original: &MultilinearPolynomial,
    q: &Quadratization,
) -> Result<QuadratizationCheck> {
    let full = q.polynomial.dense_values()?;
    let orig = original.dense_values()?;
    let mut check = QuadratizationCheck {
        assignments: full.values.len(),
        consistent_mismatches: 0,
        violations: 0,
        low_violations: 0,
        min_violation_energy: None,
    };
    let low_mask = (1u64 << q.original_arity) - 1;
    for mask in 0..full.values.len() as u64 {
        let e = full.get(mask as usize);
        if q.is_consistent(mask) {
            if e != orig.get((mask & low_mask) as usize) {
                check.consistent_mismatches += 1;
            }
        } else {
            check.violations += 1;
            if e <= Rational::zero() {
                check.low_violations += 1;
            }
            if check.min_violation_energy.map_or(true, |m| e < m) {
                check.min_violation_energy = Some(e);
            }
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> MultilinearPolynomial {
        MultilinearPolynomial::parse(s).unwrap()
    }

    #[test]
    fn quadratic_input_unchanged() {
        let q = p("1 - q1 + 2q1q2");
        let out = quadratize(&q, Some(&QuadratizationPlan::default())).unwrap();
        assert_eq!(out.polynomial, q);
        assert!(out.collapses.is_empty());
        assert_eq!(auto_plan(&q).collapses.len(), 0);
    }

    #[test]
    fn independent_pair_needs_unit_delta() {
        let q = p("1 + q3 - q4");
        assert_eq!(select_delta(&q, 1, 2).unwrap(), int(1));
        // A negative baseline is still lifted above zero.
        let q = p("q3 - q4");
        assert_eq!(select_delta(&q, 1, 2).unwrap(), int(2));
    }

    #[test]
    fn gadget_zero_iff_consistent() {
        let g = and_gadget(1, 2, 3, int(1));
        for m in 0..8u64 {
            let ok = (m >> 2 & 1) == (m & 1) & (m >> 1 & 1);
            assert_eq!(g.evaluate(m).is_zero(), ok, "mask {m:03b}");
        }
    }

    #[test]
    fn undersized_delta_is_penalty_error() {
        let q = p("-1 - 4q3 + 9q1q3 + 9q2q3 - 16q1q2q3");
        let plan = QuadratizationPlan {
            collapses: vec![CollapseSpec::new(2, 3, Some(int(8)))],
        };
        assert!(matches!(quadratize(&q, Some(&plan)), Err(Error::Penalty(_))));
    }

    #[test]
    fn nonpositive_delta_is_plan_error() {
        let q = p("q1q2q3");
        let plan = QuadratizationPlan {
            collapses: vec![CollapseSpec::new(1, 2, Some(int(0)))],
        };
        assert!(matches!(quadratize(&q, Some(&plan)), Err(Error::Plan(_))));
    }

    #[test]
    fn insufficient_plan_is_plan_error() {
        let q = p("q1q2q3q4");
        let plan = QuadratizationPlan {
            collapses: vec![CollapseSpec::new(1, 2, None)],
        };
        assert!(matches!(quadratize(&q, Some(&plan)), Err(Error::Plan(_))));
    }

    #[test]
    fn consistent_extension_follows_nested_collapses() {
        let q = p("q1q2q3q4");
        let out = quadratize(&q, None).unwrap();
        for m in 0..16u64 {
            let ext = out.consistent_extension(m);
            assert!(out.is_consistent(ext));
            assert_eq!(out.polynomial.evaluate(ext), q.evaluate(m));
        }
    }
}
