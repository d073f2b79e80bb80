//! 2D square-lattice folds, their turn-bit encoding, and the brute-force energy oracle.
//!
//! Each bond is two bits: `00` down, `01` right, `10` left, `11` up. The first bond is
//! always `01`, so every fold starts `(0,0), (1,0)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{check_capacity, Error, Result};
use crate::rational::{int, Exact, Rational};

pub type Point = (i32, i32);

/// Largest number of free bits enumerated exhaustively.
pub const MAX_ENUMERATION_BITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Down,
    Right,
    Left,
    Up,
}

impl Direction {
    pub fn from_bits(hi: bool, lo: bool) -> Self {
        match (hi, lo) {
            (false, false) => Direction::Down,
            (false, true) => Direction::Right,
            (true, false) => Direction::Left,
            (true, true) => Direction::Up,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Direction::Down => (false, false),
            Direction::Right => (false, true),
            Direction::Left => (true, false),
            Direction::Up => (true, true),
        }
    }

    pub fn step(self) -> Point {
        match self {
            Direction::Down => (0, -1),
            Direction::Right => (1, 0),
            Direction::Left => (-1, 0),
            Direction::Up => (0, 1),
        }
    }

    pub fn from_step(step: Point) -> Option<Self> {
        match step {
            (0, -1) => Some(Direction::Down),
            (1, 0) => Some(Direction::Right),
            (-1, 0) => Some(Direction::Left),
            (0, 1) => Some(Direction::Up),
            _ => None,
        }
    }
}

/// Binary encoding of a fold, two bits per bond.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TurnString {
    bits: Vec<bool>,
}

impl TurnString {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.len() < 2 || bits.len() % 2 != 0 {
            return Err(Error::Encoding(format!(
                "turn string needs an even number of bits >= 2, got {}",
                bits.len()
            )));
        }
        if bits[0] || !bits[1] {
            return Err(Error::Encoding(
                "the first bond must be rightward (\"01\")".into(),
            ));
        }
        Ok(TurnString { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn num_bonds(&self) -> usize {
        self.bits.len() / 2
    }

    pub fn directions(&self) -> impl Iterator<Item = Direction> + '_ {
        self.bits
            .chunks_exact(2)
            .map(|c| Direction::from_bits(c[0], c[1]))
    }
}

impl FromStr for TurnString {
    type Err = Error;

    /// Accepts `0`/`1` with optional spaces, `_` or `|` separators.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                ' ' | '_' | '|' => {}
                other => {
                    return Err(Error::Encoding(format!(
                        "unexpected character '{other}' in turn string"
                    )))
                }
            }
        }
        TurnString::new(bits)
    }
}

impl fmt::Display for TurnString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fold {
    points: Vec<Point>,
}

impl Fold {
    /// A fold must start at the origin; steps are checked by [`encode_fold`].
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Geometry("a fold needs at least two points".into()));
        }
        if points[0] != (0, 0) {
            return Err(Error::Geometry("a fold must start at (0,0)".into()));
        }
        Ok(Fold { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_self_avoiding(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.points.iter().all(|p| seen.insert(*p))
    }

    /// Non-bonded residue pairs `(i, j)`, `j > i + 1`, at lattice distance one.
    pub fn contacts(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.points.len() {
            for j in i + 2..self.points.len() {
                let (a, b) = (self.points[i], self.points[j]);
                if (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Residue pairs occupying the same site.
    pub fn overlaps(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                if self.points[i] == self.points[j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn format_points(&self) -> String {
        self.points
            .iter()
            .map(|(x, y)| format!("({x},{y})"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn decode_turns(t: &TurnString) -> Fold {
    let mut points = Vec::with_capacity(t.num_bonds() + 1);
    let mut p = (0, 0);
    points.push(p);
    for d in t.directions() {
        let (dx, dy) = d.step();
        p = (p.0 + dx, p.1 + dy);
        points.push(p);
    }
    Fold { points }
}

pub fn encode_fold(f: &Fold) -> Result<TurnString> {
    let mut bits = Vec::with_capacity(2 * (f.len() - 1));
    for w in f.points.windows(2) {
        let step = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        let d = Direction::from_step(step).ok_or_else(|| {
            Error::Geometry(format!(
                "non-unit step from {:?} to {:?}",
                w[0], w[1]
            ))
        })?;
        let (hi, lo) = d.bits();
        bits.push(hi);
        bits.push(lo);
    }
    TurnString::new(bits).map_err(|_| Error::Geometry("the first bond must point right".into()))
}

pub fn is_self_avoiding(f: &Fold) -> bool {
    f.is_self_avoiding()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AminoSequence {
    residues: Vec<String>,
}

impl AminoSequence {
    pub fn new(residues: Vec<String>) -> Result<Self> {
        if residues.len() < 2 {
            return Err(Error::validation("a sequence needs at least two residues"));
        }
        if let Some(r) = residues.iter().find(|r| r.trim().is_empty()) {
            return Err(Error::validation(format!("empty residue label '{r}'")));
        }
        Ok(AminoSequence { residues })
    }

    /// "HPPH" is split per character; "Pro Ser Val" or "P,S,V" per token.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let tokens: Vec<String> = if s.contains([' ', ',', '-']) {
            s.split([' ', ',', '-'])
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect()
        } else {
            s.chars().map(|c| c.to_string()).collect()
        };
        AminoSequence::new(tokens)
    }

    pub fn residues(&self) -> &[String] {
        &self.residues
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "HP")]
    Hp,
    #[serde(rename = "MJ")]
    Mj,
    #[serde(rename = "custom")]
    Custom,
}

/// Symmetric contact-energy table. Pairs absent from the table contribute zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionModel {
    kind: ModelKind,
    alphabet: BTreeSet<String>,
    table: BTreeMap<(String, String), Rational>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl InteractionModel {
    pub fn hp() -> Self {
        let mut table = BTreeMap::new();
        table.insert(ordered("H", "H"), int(-1));
        InteractionModel {
            kind: ModelKind::Hp,
            alphabet: ["H", "P"].iter().map(|s| s.to_string()).collect(),
            table,
        }
    }

    /// Builds a table from `(a, b, energy)` triples. Listing both orders is allowed
    /// if the energies agree.
    pub fn from_pairs<I, S>(kind: ModelKind, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, Rational)>,
        S: AsRef<str>,
    {
        let mut table: BTreeMap<(String, String), Rational> = BTreeMap::new();
        let mut alphabet = BTreeSet::new();
        for (a, b, e) in pairs {
            let (a, b) = (a.as_ref().trim(), b.as_ref().trim());
            if a.is_empty() || b.is_empty() {
                return Err(Error::validation("empty residue label in pair table"));
            }
            alphabet.insert(a.to_string());
            alphabet.insert(b.to_string());
            let key = ordered(a, b);
            if let Some(prev) = table.get(&key) {
                if *prev != e {
                    return Err(Error::validation(format!(
                        "asymmetric pair energy for {a}-{b}: {prev} vs {e}"
                    )));
                }
            }
            table.insert(key, e);
        }
        if kind == ModelKind::Hp {
            alphabet.insert("H".into());
            alphabet.insert("P".into());
        }
        Ok(InteractionModel {
            kind,
            alphabet,
            table,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn pair_energy(&self, a: &str, b: &str) -> Rational {
        self.table
            .get(&ordered(a, b))
            .copied()
            .unwrap_or_else(Rational::zero)
    }

    pub fn resolves(&self, label: &str) -> bool {
        self.alphabet.contains(label)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, Rational)> {
        self.table
            .iter()
            .map(|((a, b), e)| (a.as_str(), b.as_str(), *e))
    }

    pub fn check_sequence(&self, seq: &AminoSequence) -> Result<()> {
        for r in seq.residues() {
            if !self.resolves(r) {
                return Err(Error::validation(format!(
                    "residue '{r}' is not covered by the interaction model"
                )));
            }
        }
        Ok(())
    }
}

/// One nonnegative penalty term of an external potential.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExternalTerm {
    /// Adds `weight` when the turn string matches `pattern` (`0`, `1`, `?`; missing
    /// trailing positions are don't-care).
    BitPattern { pattern: String, weight: Exact },
    /// Adds `weight` for every residue sitting on one of `sites`.
    ForbiddenSites { sites: Vec<Point>, weight: Exact },
}

impl ExternalTerm {
    fn weight(&self) -> Rational {
        match self {
            ExternalTerm::BitPattern { weight, .. } | ExternalTerm::ForbiddenSites { weight, .. } => {
                weight.0
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.weight() < Rational::zero() {
            return Err(Error::validation("external penalty weights must be nonnegative"));
        }
        if let ExternalTerm::BitPattern { pattern, .. } = self {
            if let Some(c) = pattern_chars(pattern).find(|c| !matches!(c, '0' | '1' | '?')) {
                return Err(Error::validation(format!(
                    "unexpected character '{c}' in bit pattern"
                )));
            }
        }
        Ok(())
    }

    fn evaluate(&self, turns: Option<&TurnString>, fold: &Fold) -> Rational {
        match self {
            ExternalTerm::BitPattern { pattern, weight } => {
                let Some(t) = turns else {
                    return Rational::zero();
                };
                let matched = pattern_chars(pattern).enumerate().all(|(i, c)| match c {
                    '?' => true,
                    c => t.bits().get(i).is_some_and(|&b| b == (c == '1')),
                });
                if matched {
                    weight.0
                } else {
                    Rational::zero()
                }
            }
            ExternalTerm::ForbiddenSites { sites, weight } => {
                let hits = fold.points().iter().filter(|p| sites.contains(p)).count();
                weight.0 * int(hits as i64)
            }
        }
    }
}

fn pattern_chars(p: &str) -> impl Iterator<Item = char> + '_ {
    p.chars().filter(|c| !matches!(c, ' ' | '_' | '|'))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExternalPotential {
    pub terms: Vec<ExternalTerm>,
}

impl ExternalPotential {
    pub fn none() -> Self {
        ExternalPotential::default()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.terms.iter().try_for_each(ExternalTerm::validate)
    }

    pub fn evaluate(&self, fold: &Fold) -> Rational {
        if self.terms.is_empty() {
            return Rational::zero();
        }
        let turns = encode_fold(fold).ok();
        self.terms
            .iter()
            .map(|t| t.evaluate(turns.as_ref(), fold))
            .sum()
    }
}

/// Oracle energy: contact energies of non-bonded neighbours, `overlap` per coinciding
/// residue pair, plus external terms.
///
/// # Panics
/// If the fold and sequence lengths differ.
pub fn fold_energy(
    seq: &AminoSequence,
    fold: &Fold,
    model: &InteractionModel,
    ext: &ExternalPotential,
    overlap: Rational,
) -> Rational {
    assert_eq!(seq.len(), fold.len(), "fold and sequence lengths differ");
    let r = seq.residues();
    let mut e: Rational = fold
        .contacts()
        .into_iter()
        .map(|(i, j)| model.pair_energy(&r[i], &r[j]))
        .sum();
    e += overlap * int(fold.overlaps().len() as i64);
    e + ext.evaluate(fold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Fixed(bool),
    /// Index of the free variable, 0-based (`q1` is 0).
    Free(usize),
}

/// Which turn bits are fixed and which are computational variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnLayout {
    slots: Vec<Slot>,
    arity: usize,
}

impl TurnLayout {
    /// Prefix `010`: first bond right and the second bond's first bit fixed,
    /// leaving `2N - 5` free bits.
    pub fn in_vacuo(n_residues: usize) -> Result<Self> {
        let prefix = if n_residues >= 3 { "010" } else { "01" };
        TurnLayout::from_template(prefix, n_residues)
    }

    /// Prefix `01` only, leaving `2N - 4` free bits.
    pub fn with_external(n_residues: usize) -> Result<Self> {
        TurnLayout::from_template("01", n_residues)
    }

    /// `template` covers a prefix of the turn string with `0`, `1` or `?` (free);
    /// positions past its end are free.
    pub fn from_template(template: &str, n_residues: usize) -> Result<Self> {
        if n_residues < 2 {
            return Err(Error::validation("a sequence needs at least two residues"));
        }
        let total = 2 * (n_residues - 1);
        let chars: Vec<char> = pattern_chars(template).collect();
        if chars.len() > total {
            return Err(Error::Encoding(format!(
                "template has {} bits but the chain has only {total}",
                chars.len()
            )));
        }
        let mut slots = Vec::with_capacity(total);
        let mut arity = 0;
        for pos in 0..total {
            let slot = match chars.get(pos) {
                Some('0') => Slot::Fixed(false),
                Some('1') => Slot::Fixed(true),
                Some('?') | None => {
                    arity += 1;
                    Slot::Free(arity - 1)
                }
                Some(c) => {
                    return Err(Error::Encoding(format!(
                        "unexpected character '{c}' in turn template"
                    )))
                }
            };
            slots.push(slot);
        }
        match (slots[0], slots[1]) {
            (Slot::Fixed(false), Slot::Fixed(true)) => {}
            _ => {
                return Err(Error::Encoding(
                    "turn template must start with the fixed first bond \"01\"".into(),
                ))
            }
        }
        Ok(TurnLayout { slots, arity })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn n_residues(&self) -> usize {
        self.slots.len() / 2 + 1
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn template(&self) -> String {
        self.slots
            .iter()
            .map(|s| match s {
                Slot::Fixed(false) => '0',
                Slot::Fixed(true) => '1',
                Slot::Free(_) => '?',
            })
            .collect()
    }

    /// Turn string for an assignment mask (bit `i` is `q_{i+1}`).
    pub fn turns(&self, mask: u64) -> TurnString {
        let bits = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::Fixed(b) => b,
                Slot::Free(i) => mask >> i & 1 == 1,
            })
            .collect();
        TurnString { bits }
    }

    /// Recovers the assignment mask of a turn string, if it fits the template.
    pub fn assignment_of(&self, t: &TurnString) -> Option<u64> {
        if t.bits().len() != self.slots.len() {
            return None;
        }
        let mut mask = 0u64;
        for (s, &b) in self.slots.iter().zip(t.bits()) {
            match *s {
                Slot::Fixed(f) if f != b => return None,
                Slot::Fixed(_) => {}
                Slot::Free(i) => mask |= (b as u64) << i,
            }
        }
        Some(mask)
    }
}

/// Assignment written `q1 q2 ... ql` as a bit string.
pub fn assignment_bits(mask: u64, arity: usize) -> String {
    (0..arity)
        .map(|i| if mask >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Sort key for the "unsigned integer" order of an assignment, `q1` most significant.
pub fn assignment_order_key(mask: u64, arity: usize) -> u64 {
    (0..arity).fold(0u64, |acc, i| (acc << 1) | (mask >> i & 1))
}

pub fn parse_assignment(bits: &str) -> Result<(u64, usize)> {
    let mut mask = 0u64;
    let mut n = 0;
    for c in bits.chars() {
        match c {
            '0' | '1' => {
                if n == 64 {
                    return Err(Error::validation("assignment longer than 64 bits"));
                }
                mask |= ((c == '1') as u64) << n;
                n += 1;
            }
            ' ' | '_' => {}
            _ => return Err(Error::validation(format!("bad assignment bit '{c}'"))),
        }
    }
    Ok((mask, n))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandscapeRow {
    pub assignment: u64,
    pub arity: usize,
    pub turns: TurnString,
    pub fold: Fold,
    pub valid: bool,
    pub energy: Rational,
}

impl LandscapeRow {
    pub fn assignment_bits(&self) -> String {
        assignment_bits(self.assignment, self.arity)
    }
}

/// Every assignment of the layout's free bits with its fold, validity and oracle energy,
/// sorted by energy and then by assignment.
pub fn enumerate_landscape(
    seq: &AminoSequence,
    model: &InteractionModel,
    ext: &ExternalPotential,
    overlap: Rational,
    layout: &TurnLayout,
) -> Result<Vec<LandscapeRow>> {
    check_capacity("free turn bits", layout.arity(), MAX_ENUMERATION_BITS)?;
    if layout.n_residues() != seq.len() {
        return Err(Error::validation(format!(
            "layout is for {} residues, sequence has {}",
            layout.n_residues(),
            seq.len()
        )));
    }
    model.check_sequence(seq)?;
    ext.validate()?;
    let arity = layout.arity();
    let mut rows: Vec<LandscapeRow> = (0..1u64 << arity)
        .map(|mask| {
            let turns = layout.turns(mask);
            let fold = decode_turns(&turns);
            let energy = fold_energy(seq, &fold, model, ext, overlap);
            LandscapeRow {
                assignment: mask,
                arity,
                valid: fold.is_self_avoiding(),
                turns,
                fold,
                energy,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.energy
            .cmp(&b.energy)
            .then(assignment_order_key(a.assignment, arity).cmp(&assignment_order_key(b.assignment, arity)))
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEnergy {
    pub a: String,
    pub b: String,
    pub energy: Exact,
}

/// A folding problem as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub sequence: String,
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_energies: Option<Vec<PairEnergy>>,
    #[serde(default = "default_overlap")]
    pub overlap_penalty: Exact,
    #[serde(default, skip_serializing_if = "ExternalPotential::is_empty")]
    pub external_potential: ExternalPotential,
    /// Turn template; defaults to `010` in vacuo and `01` with an external potential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_bits: Option<String>,
}

fn default_overlap() -> Exact {
    Exact(int(2))
}

impl Instance {
    pub fn sequence(&self) -> Result<AminoSequence> {
        AminoSequence::parse(&self.sequence)
    }

    pub fn interaction_model(&self) -> Result<InteractionModel> {
        match (self.model, &self.pair_energies) {
            (ModelKind::Hp, None) => Ok(InteractionModel::hp()),
            (kind, Some(pairs)) => InteractionModel::from_pairs(
                kind,
                pairs.iter().map(|p| (p.a.as_str(), p.b.as_str(), p.energy.0)),
            ),
            (kind, None) => Err(Error::validation(format!(
                "model {kind:?} needs pair_energies"
            ))),
        }
    }

    pub fn layout(&self) -> Result<TurnLayout> {
        let n = self.sequence()?.len();
        match &self.fixed_bits {
            Some(t) => TurnLayout::from_template(t, n),
            None if self.external_potential.is_empty() => TurnLayout::in_vacuo(n),
            None => TurnLayout::with_external(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let seq = self.sequence()?;
        self.interaction_model()?.check_sequence(&seq)?;
        self.external_potential.validate()?;
        if self.overlap_penalty.0 < Rational::zero() {
            return Err(Error::validation("overlap_penalty must be nonnegative"));
        }
        self.layout().map(|_| ())
    }

    /// Oracle energy of one assignment of the free bits.
    pub fn oracle(&self) -> Result<impl Fn(u64) -> Rational> {
        self.validate()?;
        let seq = self.sequence()?;
        let model = self.interaction_model()?;
        let layout = self.layout()?;
        let ext = self.external_potential.clone();
        let overlap = self.overlap_penalty.0;
        Ok(move |mask| {
            let fold = decode_turns(&layout.turns(mask));
            fold_energy(&seq, &fold, &model, &ext, overlap)
        })
    }

    /// Energy as the multilinear polynomial in the free turn bits.
    pub fn polynomial(&self) -> Result<crate::poly::MultilinearPolynomial> {
        let layout = self.layout()?;
        crate::poly::interpolate_polynomial(layout.arity(), self.oracle()?)
    }

    pub fn landscape(&self) -> Result<Vec<LandscapeRow>> {
        self.validate()?;
        enumerate_landscape(
            &self.sequence()?,
            &self.interaction_model()?,
            &self.external_potential,
            self.overlap_penalty.0,
            &self.layout()?,
        )
    }
}
