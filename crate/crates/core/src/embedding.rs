//! Minor embedding of logical Ising models into a hardware graph via chains of
//! ferromagnetically locked qubits.
//!
//! Logical variables are 0-based spin indices. Each chain of two or more qubits is held
//! together by `gamma * (1 - s s')` on the edges of a BFS spanning tree rooted at the
//! chain's lowest qubit id.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chimera::HardwareGraph;
use crate::error::{Error, Result};
use crate::ising::{mask_from_spins, IntegerIsing, IsingModel};
use crate::rational::{int, rat, Exact, Rational};

/// Physical qubit budget for exhaustive spectrum checks.
pub const VERIFY_MAX_QUBITS: usize = 12;
/// Physical qubit budget for the exhaustive automatic gamma search.
pub const AUTO_GAMMA_MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Embedding {
    pub chains: BTreeMap<usize, Vec<usize>>,
    pub gamma: BTreeMap<usize, Rational>,
    /// Logical edge `(i, j)`, `i < j`, to physical coupler `(p, q)` with `p` in chain `i`.
    pub edge_assign: BTreeMap<(usize, usize), (usize, usize)>,
}

impl Embedding {
    pub fn chain(&self, var: usize) -> &[usize] {
        self.chains.get(&var).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Designated root: the lowest physical id in the chain.
    pub fn root(&self, var: usize) -> Option<usize> {
        self.chain(var).iter().copied().min()
    }

    pub fn num_qubits(&self) -> usize {
        self.chains.values().map(Vec::len).sum()
    }

    pub fn max_chain_len(&self) -> usize {
        self.chains.values().map(Vec::len).max().unwrap_or(0)
    }

    pub fn qubits(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self.chains.values().flatten().copied().collect();
        q.sort_unstable();
        q
    }

    pub fn owner(&self) -> BTreeMap<usize, usize> {
        self.chains
            .iter()
            .flat_map(|(&v, c)| c.iter().map(move |&q| (q, v)))
            .collect()
    }

    /// BFS spanning-tree edges of a chain, or `None` if it is disconnected.
    pub fn chain_tree(&self, var: usize, g: &HardwareGraph) -> Option<Vec<(usize, usize)>> {
        chain_tree(self.chain(var), g)
    }
}

fn chain_tree(chain: &[usize], g: &HardwareGraph) -> Option<Vec<(usize, usize)>> {
    let members: BTreeSet<usize> = chain.iter().copied().collect();
    let root = *members.iter().next()?;
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    let mut edges = Vec::new();
    while let Some(a) = queue.pop_front() {
        for &b in g.neighbors(a) {
            if members.contains(&b) && seen.insert(b) {
                edges.push((a.min(b), a.max(b)));
                queue.push_back(b);
            }
        }
    }
    (seen.len() == members.len()).then_some(edges)
}

fn logical_edges(ising: &IsingModel) -> impl Iterator<Item = (usize, usize)> + '_ {
    ising.couplings().keys().copied()
}

#[derive(Serialize, Deserialize)]
struct EmbeddingFile {
    chains: BTreeMap<usize, Vec<usize>>,
    #[serde(default)]
    gamma: BTreeMap<usize, Exact>,
    #[serde(default)]
    edge_assign: Vec<EdgeAssignRecord>,
}

#[derive(Serialize, Deserialize)]
struct EdgeAssignRecord {
    i: usize,
    j: usize,
    p: usize,
    q: usize,
}

impl Serialize for Embedding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EmbeddingFile {
            chains: self.chains.clone(),
            gamma: self.gamma.iter().map(|(k, v)| (*k, Exact(*v))).collect(),
            edge_assign: self
                .edge_assign
                .iter()
                .map(|(&(i, j), &(p, q))| EdgeAssignRecord { i, j, p, q })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = EmbeddingFile::deserialize(d)?;
        let mut edge_assign = BTreeMap::new();
        for r in f.edge_assign {
            let (key, val) = if r.i < r.j {
                ((r.i, r.j), (r.p, r.q))
            } else {
                ((r.j, r.i), (r.q, r.p))
            };
            edge_assign.insert(key, val);
        }
        Ok(Embedding {
            chains: f
                .chains
                .into_iter()
                .map(|(k, mut v)| {
                    v.sort_unstable();
                    (k, v)
                })
                .collect(),
            gamma: f.gamma.into_iter().map(|(k, v)| (k, v.0)).collect(),
            edge_assign,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    Auto,
    Fixed(Exact),
}

impl std::str::FromStr for GammaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaRule::Auto);
        }
        let g = crate::rational::parse_rational(s)?;
        if g <= Rational::zero() {
            return Err(Error::validation("gamma must be positive"));
        }
        Ok(GammaRule::Fixed(Exact(g)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedOptions {
    pub seed: u64,
    pub restarts: usize,
    pub refine_passes: usize,
    pub gamma: GammaRule,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            seed: 0,
            restarts: 16,
            refine_passes: 2,
            gamma: GammaRule::Auto,
        }
    }
}

fn validate_hint(hint: &Embedding, ising: &IsingModel, g: &HardwareGraph) -> Result<()> {
    let mut used = BTreeMap::new();
    for (&v, chain) in &hint.chains {
        if v >= ising.n() {
            return Err(Error::validation(format!("hint names unknown variable {v}")));
        }
        if chain.is_empty() {
            return Err(Error::validation(format!("hint chain for {v} is empty")));
        }
        for &q in chain {
            if !g.is_usable(q) {
                return Err(Error::validation(format!("hint qubit {q} is not usable")));
            }
            if let Some(o) = used.insert(q, v) {
                return Err(Error::validation(format!(
                    "hint qubit {q} is in the chains of both {o} and {v}"
                )));
            }
        }
        if chain_tree(chain, g).is_none() {
            return Err(Error::validation(format!("hint chain for {v} is disconnected")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, usize);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    // Reversed so that `BinaryHeap` pops the nearest qubit first.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Chains may share qubits while routing. A qubit's price grows with the number of
/// chains on it and with how long it has been contested.
struct Router<'a> {
    g: &'a HardwareGraph,
    adj: Vec<Vec<usize>>,
    fixed: BTreeSet<usize>,
    chains: BTreeMap<usize, Vec<usize>>,
    usage: Vec<u32>,
    /// Qubits of fixed chains, unavailable to everything else.
    reserved: Vec<bool>,
    /// Grows on qubits that stay shared between rounds.
    history: Vec<f64>,
    /// Price of one extra occupant, raised every round.
    present: f64,
}

impl<'a> Router<'a> {
    fn new(g: &'a HardwareGraph, adj: Vec<Vec<usize>>, hint: &BTreeMap<usize, Vec<usize>>) -> Self {
        let mut usage = vec![0; g.num_qubits()];
        let mut reserved = vec![false; g.num_qubits()];
        for c in hint.values() {
            for &q in c {
                usage[q] += 1;
                reserved[q] = true;
            }
        }
        Router {
            g,
            adj,
            fixed: hint.keys().copied().collect(),
            chains: hint.clone(),
            history: vec![0.0; g.num_qubits()],
            usage,
            reserved,
            present: 0.0,
        }
    }

    fn weight(&self, q: usize, exclusive: bool) -> f64 {
        if !self.g.is_usable(q) || self.reserved[q] || (exclusive && self.usage[q] > 0) {
            return f64::INFINITY;
        }
        (1.0 + self.history[q]) * (1.0 + self.present * self.usage[q] as f64)
    }

    fn age(&mut self) {
        for (h, &u) in self.history.iter_mut().zip(&self.usage) {
            if u > 1 {
                *h += (u - 1) as f64;
            }
        }
        self.present = if self.present == 0.0 { 0.5 } else { self.present * 1.3 };
    }

    fn detach(&mut self, v: usize) -> Option<Vec<usize>> {
        let c = self.chains.remove(&v)?;
        for &q in &c {
            self.usage[q] -= 1;
        }
        Some(c)
    }

    fn attach(&mut self, v: usize, mut chain: Vec<usize>) {
        chain.sort_unstable();
        chain.dedup();
        for &q in &chain {
            self.usage[q] += 1;
        }
        self.chains.insert(v, chain);
    }

    /// Node-weighted shortest paths from chain `u`: distance and predecessor of every
    /// qubit, where the qubits of `u` and their neighbours are the sources.
    fn paths_from(&self, u: usize, w: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let n = self.g.num_qubits();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = std::collections::BinaryHeap::new();
        for &q in &self.chains[&u] {
            for s in std::iter::once(q).chain(self.g.neighbors(q).iter().copied()) {
                if w[s] < dist[s] {
                    dist[s] = w[s];
                    heap.push(Dist(w[s], s));
                }
            }
        }
        while let Some(Dist(d, a)) = heap.pop() {
            if d > dist[a] {
                continue;
            }
            for &b in self.g.neighbors(a) {
                let nd = d + w[b];
                if nd < dist[b] {
                    dist[b] = nd;
                    prev[b] = a;
                    heap.push(Dist(nd, b));
                }
            }
        }
        (dist, prev)
    }

    /// New chain for `v` (currently detached) touching every placed neighbour.
    fn route(&self, v: usize, exclusive: bool, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
        let w: Vec<f64> = (0..self.g.num_qubits()).map(|q| self.weight(q, exclusive)).collect();
        let placed: Vec<usize> = self.adj[v]
            .iter()
            .copied()
            .filter(|u| self.chains.contains_key(u))
            .collect();
        let trees: Vec<(Vec<f64>, Vec<usize>)> = placed.iter().map(|&u| self.paths_from(u, &w)).collect();
        // Every path includes the root, which is counted once.
        let cost = |q: usize| match trees.len() {
            0 => w[q],
            k => trees.iter().map(|(d, _)| d[q]).sum::<f64>() - (k - 1) as f64 * w[q],
        };
        let mut best = f64::INFINITY;
        let mut cands = Vec::new();
        for q in 0..self.g.num_qubits() {
            let c = cost(q);
            if !c.is_finite() {
                continue;
            }
            if c < best - 1e-9 {
                best = c;
                cands.clear();
            }
            if c <= best + 1e-9 {
                cands.push(q);
            }
        }
        let root = *cands.choose(rng)?;
        let mut chain = vec![root];
        let mut order: Vec<usize> = (0..trees.len()).collect();
        order.sort_by(|&x, &y| trees[y].0[root].total_cmp(&trees[x].0[root]));
        for t in order {
            let (dist, prev) = &trees[t];
            // Branch from whichever chain qubit is closest; its own price is paid.
            let mut from = chain[0];
            for &x in &chain {
                if dist[x] - w[x] < dist[from] - w[from] {
                    from = x;
                }
            }
            let mut cur = from;
            while prev[cur] != usize::MAX {
                cur = prev[cur];
                chain.push(cur);
            }
        }
        chain.sort_unstable();
        chain.dedup();
        Some(chain)
    }

    fn overlapping(&self) -> Vec<usize> {
        self.chains
            .iter()
            .filter(|(_, c)| c.iter().any(|&q| self.usage[q] > 1))
            .map(|(&v, _)| v)
            .collect()
    }
}

/// Rip-up-and-reroute passes allowed before an attempt counts as failed.
const ROUTE_ROUNDS: usize = 64;

/// Seeded heuristic: hinted chains are kept fixed, the remaining variables are routed
/// along node-weighted shortest paths to their placed neighbours, first allowing shared
/// qubits and then rerouting until no qubit is shared. Restarts use independent
/// streams of the same seed and the smallest successful embedding is returned.
pub fn embed(
    ising: &IsingModel,
    g: &HardwareGraph,
    hint: Option<&Embedding>,
    opts: &EmbedOptions,
) -> Result<Embedding> {
    if ising.n() == 0 {
        return Err(Error::validation("cannot embed a model with no spins"));
    }
    let empty = Embedding::default();
    let hint = hint.unwrap_or(&empty);
    validate_hint(hint, ising, g)?;
    let adj = ising.neighbors();
    let free_vars: Vec<usize> = (0..ising.n()).filter(|v| !hint.chains.contains_key(v)).collect();

    let mut best: Option<BTreeMap<usize, Vec<usize>>> = None;
    let mut unplaced_report: Vec<usize> = Vec::new();
    for attempt in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(attempt as u64);
        // Highest degree first, breadth-first through the logical graph, random ties.
        let mut pending: Vec<usize> = free_vars.clone();
        pending.shuffle(&mut rng);
        pending.sort_by_key(|&v| std::cmp::Reverse(adj[v].len()));
        let mut order = Vec::with_capacity(pending.len());
        let mut queued = BTreeSet::new();
        while let Some(&start) = pending.iter().find(|v| !queued.contains(*v)) {
            let mut queue = VecDeque::from([start]);
            queued.insert(start);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut next: Vec<usize> = adj[v]
                    .iter()
                    .copied()
                    .filter(|u| !hint.chains.contains_key(u) && !queued.contains(u))
                    .collect();
                next.shuffle(&mut rng);
                next.sort_by_key(|&u| std::cmp::Reverse(adj[u].len()));
                for u in next {
                    queued.insert(u);
                    queue.push_back(u);
                }
            }
        }

        let mut router = Router::new(g, adj.clone(), &hint.chains);
        let mut stuck = Vec::new();
        for &v in &order {
            match router.route(v, false, &mut rng) {
                Some(c) => router.attach(v, c),
                None => stuck.push(v),
            }
        }
        let mut round = 0;
        while stuck.is_empty() && round < ROUTE_ROUNDS && !router.overlapping().is_empty() {
            let mut shuffled = order.clone();
            shuffled.shuffle(&mut rng);
            for v in shuffled {
                let old = router.detach(v).unwrap();
                let c = router.route(v, false, &mut rng).unwrap_or(old);
                router.attach(v, c);
            }
            router.age();
            round += 1;
        }
        let mut unplaced = stuck;
        unplaced.extend(router.overlapping().into_iter().filter(|v| !router.fixed.contains(v)));
        if !unplaced.is_empty() {
            unplaced.sort_unstable();
            unplaced.dedup();
            if unplaced_report.is_empty() || unplaced.len() < unplaced_report.len() {
                unplaced_report = unplaced;
            }
            continue;
        }
        for _ in 0..opts.refine_passes {
            for &v in &order {
                let old = router.detach(v).unwrap();
                match router.route(v, true, &mut rng) {
                    Some(c) if c.len() <= old.len() => router.attach(v, c),
                    _ => router.attach(v, old),
                }
            }
        }
        let size: usize = router.chains.values().map(Vec::len).sum();
        if best
            .as_ref()
            .map_or(true, |b| size < b.values().map(Vec::len).sum::<usize>())
        {
            best = Some(router.chains);
        }
    }
    let Some(chains) = best else {
        unplaced_report.sort_unstable();
        return Err(Error::EmbeddingFailed {
            unplaced: unplaced_report,
        });
    };
    let mut emb = Embedding {
        chains,
        gamma: BTreeMap::new(),
        edge_assign: BTreeMap::new(),
    };
    assign_edges(ising, g, &mut emb, &hint.edge_assign)?;
    emb.gamma = match opts.gamma {
        GammaRule::Fixed(Exact(v)) => multi_chains(&emb).map(|k| (k, v)).collect(),
        GammaRule::Auto => {
            let v = auto_gamma(ising, &emb, g)?;
            multi_chains(&emb).map(|k| (k, v)).collect()
        }
    };
    Ok(emb)
}

fn multi_chains(emb: &Embedding) -> impl Iterator<Item = usize> + '_ {
    emb.chains.iter().filter(|(_, c)| c.len() > 1).map(|(&k, _)| k)
}

/// Keeps valid preferred couplers and picks the smallest available one elsewhere.
fn assign_edges(
    ising: &IsingModel,
    g: &HardwareGraph,
    emb: &mut Embedding,
    preferred: &BTreeMap<(usize, usize), (usize, usize)>,
) -> Result<()> {
    for (i, j) in logical_edges(ising) {
        let (ci, cj) = (emb.chain(i), emb.chain(j));
        if let Some(&(p, q)) = preferred.get(&(i, j)) {
            if ci.contains(&p) && cj.contains(&q) && g.has_edge(p, q) {
                emb.edge_assign.insert((i, j), (p, q));
                continue;
            }
            return Err(Error::validation(format!(
                "hinted coupler ({p},{q}) for logical edge ({i},{j}) is not available"
            )));
        }
        let found = ci
            .iter()
            .flat_map(|&p| cj.iter().map(move |&q| (p, q)))
            .find(|&(p, q)| g.has_edge(p, q));
        match found {
            Some(pq) => {
                emb.edge_assign.insert((i, j), pq);
            }
            None => {
                return Err(Error::EmbeddingFailed {
                    unplaced: vec![i, j],
                })
            }
        }
    }
    Ok(())
}

/// Physical model in logical units before normalization, with chain terms split out.
struct RawEmbedded {
    qubits: Vec<usize>,
    h: Vec<Rational>,
    j: BTreeMap<(usize, usize), Rational>,
    /// Chain tree edges as positions into `qubits`, with their chain variable.
    tree: Vec<(usize, usize, usize)>,
}

fn raw_embedded(
    ising: &IsingModel,
    emb: &Embedding,
    g: &HardwareGraph,
    dist: FieldDistribution,
) -> Result<RawEmbedded> {
    let qubits = emb.qubits();
    let index: BTreeMap<usize, usize> = qubits.iter().enumerate().map(|(k, &q)| (q, k)).collect();
    let mut h = vec![Rational::zero(); qubits.len()];
    for v in 0..ising.n() {
        let chain = emb.chain(v);
        if chain.is_empty() {
            return Err(Error::validation(format!("variable {v} has no chain")));
        }
        match dist {
            FieldDistribution::Root => h[index[&emb.root(v).unwrap()]] += ising.h()[v],
            FieldDistribution::EqualSplit => {
                let share = ising.h()[v] / int(chain.len() as i64);
                for q in chain {
                    h[index[q]] += share;
                }
            }
        }
    }
    let mut j = BTreeMap::new();
    for ((a, b), v) in ising.couplings() {
        let &(p, q) = emb.edge_assign.get(&(*a, *b)).ok_or_else(|| {
            Error::validation(format!("no coupler assigned to logical edge ({a},{b})"))
        })?;
        if !g.has_edge(p, q) || !emb.chain(*a).contains(&p) || !emb.chain(*b).contains(&q) {
            return Err(Error::validation(format!(
                "coupler ({p},{q}) for logical edge ({a},{b}) is absent"
            )));
        }
        let (x, y) = (index[&p], index[&q]);
        *j.entry((x.min(y), x.max(y))).or_insert_with(Rational::zero) += *v;
    }
    let mut tree = Vec::new();
    for (&v, chain) in &emb.chains {
        if chain.len() < 2 {
            continue;
        }
        let edges = chain_tree(chain, g)
            .ok_or_else(|| Error::validation(format!("chain for {v} is disconnected")))?;
        for (p, q) in edges {
            tree.push((index[&p], index[&q], v));
        }
    }
    Ok(RawEmbedded {
        qubits,
        h,
        j,
        tree,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldDistribution {
    /// Whole logical field on the chain's lowest qubit id.
    #[default]
    Root,
    EqualSplit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermOrigin {
    Field { qubit: usize, var: usize },
    Coupling { p: usize, q: usize, i: usize, j: usize },
    Chain { p: usize, q: usize, var: usize },
}

/// Physical model over `qubits` (model index `k` is qubit `qubits[k]`). On states with
/// intact chains `model.scale * E + model.offset` is the source polynomial's energy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddedIsing {
    pub qubits: Vec<usize>,
    pub model: IsingModel,
    pub provenance: Vec<TermOrigin>,
}

impl EmbeddedIsing {
    pub fn index_of(&self, qubit: usize) -> Option<usize> {
        self.qubits.binary_search(&qubit).ok()
    }

    pub fn field(&self, qubit: usize) -> Rational {
        self.index_of(qubit)
            .map(|k| self.model.h()[k])
            .unwrap_or_else(Rational::zero)
    }

    pub fn coupler(&self, p: usize, q: usize) -> Rational {
        match (self.index_of(p), self.index_of(q)) {
            (Some(a), Some(b)) => self.model.coupling(a, b),
            _ => Rational::zero(),
        }
    }

    /// Spins keyed by physical id.
    pub fn sample_map(&self, spins: &[i8]) -> BTreeMap<usize, i8> {
        self.qubits.iter().copied().zip(spins.iter().copied()).collect()
    }
}

pub fn apply_embedding(
    ising: &IsingModel,
    emb: &Embedding,
    g: &HardwareGraph,
    dist: FieldDistribution,
) -> Result<EmbeddedIsing> {
    let raw = raw_embedded(ising, emb, g, dist)?;
    let mut j = raw.j.clone();
    let mut dropped = Rational::zero();
    let mut provenance = Vec::new();
    for v in 0..ising.n() {
        let root = emb.root(v).unwrap();
        provenance.push(TermOrigin::Field { qubit: root, var: v });
    }
    for (&(a, b), &(p, q)) in &emb.edge_assign {
        provenance.push(TermOrigin::Coupling { p, q, i: a, j: b });
    }
    for &(x, y, v) in &raw.tree {
        let gamma = *emb
            .gamma
            .get(&v)
            .ok_or_else(|| Error::validation(format!("chain for {v} has no gamma")))?;
        if gamma <= Rational::zero() {
            return Err(Error::validation(format!("gamma for {v} must be positive")));
        }
        *j.entry((x, y)).or_insert_with(Rational::zero) -= gamma;
        dropped += gamma;
        provenance.push(TermOrigin::Chain {
            p: raw.qubits[x],
            q: raw.qubits[y],
            var: v,
        });
    }
    let model = IsingModel::new(
        raw.h,
        j,
        ising.offset() + ising.scale() * dropped,
        ising.scale(),
    )?
    .normalized();
    Ok(EmbeddedIsing {
        qubits: raw.qubits,
        model,
        provenance,
    })
}

/// Binary-energy level a broken chain must exceed: zero when some intact state has
/// energy at or below zero, otherwise the intact ground energy.
fn break_threshold(min_intact: Rational, any_nonpositive: bool) -> Rational {
    if any_nonpositive {
        Rational::zero()
    } else {
        min_intact
    }
}

/// Smallest uniform gamma, in steps of 1/2, that puts every broken-chain state above
/// the break threshold. Exhaustive up to [`AUTO_GAMMA_MAX_QUBITS`]; beyond that the
/// bound `max_i (|h_i| + sum_j |J_ij|)` over chained variables is used.
pub fn auto_gamma(ising: &IsingModel, emb: &Embedding, g: &HardwareGraph) -> Result<Rational> {
    let half = rat(1, 2);
    let round_up = |x: Rational| -> Rational {
        let steps = (x / half).floor().to_integer() + 1;
        half * int(steps.max(1))
    };
    if emb.num_qubits() > AUTO_GAMMA_MAX_QUBITS {
        let mut bound = Rational::zero();
        for v in multi_chains(emb) {
            let mut s = ising.h()[v].abs();
            for ((a, b), c) in ising.couplings() {
                if *a == v || *b == v {
                    s += c.abs();
                }
            }
            bound = bound.max(s);
        }
        return Ok(round_up(bound - rat(1, 1_000_000)));
    }
    let raw = raw_embedded(ising, emb, g, FieldDistribution::Root)?;
    if raw.tree.is_empty() {
        return Ok(int(1));
    }
    let base = IsingModel::new(raw.h.clone(), raw.j.clone(), Rational::zero(), int(1))?;
    let ii = base.integer_form();
    let max_broken = raw.tree.len();
    let mut min_base = vec![i64::MAX; max_broken + 1];
    for_each_with_breaks(&ii, &raw.tree, |_, e, b| {
        if e < min_base[b] {
            min_base[b] = e;
        }
    });
    let den = ii.den;
    let intact_min = Rational::new(min_base[0], den);
    // Binary energy <= 0  <=>  raw <= -offset / scale.
    let zero_level = -ising.offset() / ising.scale();
    let t_raw = if intact_min <= zero_level {
        zero_level
    } else {
        intact_min
    };
    let mut need = Rational::zero();
    for (b, &e) in min_base.iter().enumerate().skip(1) {
        if e == i64::MAX {
            continue;
        }
        // raw broken energy with chain terms: e/den + 2 gamma b > t_raw
        let g_b = (t_raw - Rational::new(e, den)) / int(2 * b as i64);
        need = need.max(g_b);
    }
    Ok(round_up(need))
}

/// Enumerates all states in Gray-code order, reporting `(mask, scaled energy, broken
/// tree edges)`.
fn for_each_with_breaks(
    ii: &IntegerIsing,
    tree: &[(usize, usize, usize)],
    mut f: impl FnMut(u64, i64, usize),
) {
    let n = ii.h.len();
    let mut tree_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(x, y, _) in tree {
        tree_adj[x].push(y);
        tree_adj[y].push(x);
    }
    let mut spins = vec![1i8; n];
    let mut e = ii.energy(&spins);
    let mut broken = 0usize;
    let mut mask = 0u64;
    f(mask, e, broken);
    for step in 1u64..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        e += ii.flip_delta(&spins, i);
        for &k in &tree_adj[i] {
            if spins[k] == spins[i] {
                broken += 1;
            } else {
                broken -= 1;
            }
        }
        spins[i] = -spins[i];
        mask ^= 1 << i;
        f(mask, e, broken);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnembedPolicy {
    Discard,
    /// Majority of chain members; ties read as +1.
    #[default]
    MajorityVote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unembedded {
    /// `None` when the sample was discarded.
    pub spins: Option<Vec<i8>>,
    pub chain_breaks: usize,
}

pub fn unembed(
    sample: &BTreeMap<usize, i8>,
    emb: &Embedding,
    n: usize,
    policy: UnembedPolicy,
) -> Result<Unembedded> {
    let mut spins = Vec::with_capacity(n);
    let mut breaks = 0;
    for v in 0..n {
        let chain = emb.chain(v);
        if chain.is_empty() {
            return Err(Error::validation(format!("variable {v} has no chain")));
        }
        let mut sum = 0i64;
        for q in chain {
            let s = *sample
                .get(q)
                .ok_or_else(|| Error::validation(format!("sample lacks qubit {q}")))?;
            sum += s as i64;
        }
        if sum.unsigned_abs() as usize != chain.len() {
            breaks += 1;
        }
        spins.push(if sum >= 0 { 1 } else { -1 });
    }
    let spins = match policy {
        UnembedPolicy::Discard if breaks > 0 => None,
        _ => Some(spins),
    };
    Ok(Unembedded {
        spins,
        chain_breaks: breaks,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingChain { var: usize },
    EmptyChain { var: usize },
    UnknownVariable { var: usize },
    UnusableQubit { var: usize, qubit: usize },
    SharedQubit { qubit: usize, first: usize, second: usize },
    DisconnectedChain { var: usize },
    MissingCoupler { i: usize, j: usize },
    BadEdgeAssignment { i: usize, j: usize, p: usize, q: usize },
    MissingGamma { var: usize },
    NonPositiveGamma { var: usize },
    SpectrumMismatch { mask: u64 },
    MinimizerMismatch,
    SpectralRisk { mask: u64, energy: Exact, threshold: Exact },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingChain { var } => write!(f, "variable {var} has no chain"),
            Violation::EmptyChain { var } => write!(f, "chain for {var} is empty"),
            Violation::UnknownVariable { var } => write!(f, "chain for unknown variable {var}"),
            Violation::UnusableQubit { var, qubit } => {
                write!(f, "chain for {var} uses unusable qubit {qubit}")
            }
            Violation::SharedQubit { qubit, first, second } => {
                write!(f, "qubit {qubit} is in the chains of {first} and {second}")
            }
            Violation::DisconnectedChain { var } => write!(f, "chain for {var} is disconnected"),
            Violation::MissingCoupler { i, j } => {
                write!(f, "no physical coupler between chains {i} and {j}")
            }
            Violation::BadEdgeAssignment { i, j, p, q } => {
                write!(f, "edge ({i},{j}) assigned to unavailable coupler ({p},{q})")
            }
            Violation::MissingGamma { var } => write!(f, "chain for {var} has no gamma"),
            Violation::NonPositiveGamma { var } => write!(f, "gamma for {var} is not positive"),
            Violation::SpectrumMismatch { mask } => {
                write!(f, "intact-chain state {mask:#x} does not reproduce the logical energy")
            }
            Violation::MinimizerMismatch => {
                write!(f, "physical minimizers do not map onto the logical minimizers")
            }
            Violation::SpectralRisk { mask, energy, threshold } => write!(
                f,
                "broken-chain state {mask:#x} has energy {} <= {}",
                energy.0, threshold.0
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub violations: Vec<Violation>,
    pub spectrum_checked: bool,
    pub physical_qubits: usize,
}

impl EmbeddingReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_embedding(ising: &IsingModel, emb: &Embedding, g: &HardwareGraph) -> EmbeddingReport {
    let mut report = EmbeddingReport {
        physical_qubits: emb.num_qubits(),
        ..Default::default()
    };
    let v = &mut report.violations;
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for (&var, chain) in &emb.chains {
        if var >= ising.n() {
            v.push(Violation::UnknownVariable { var });
        }
        if chain.is_empty() {
            v.push(Violation::EmptyChain { var });
            continue;
        }
        for &q in chain {
            if !g.is_usable(q) {
                v.push(Violation::UnusableQubit { var, qubit: q });
            }
            if let Some(first) = seen.insert(q, var) {
                v.push(Violation::SharedQubit {
                    qubit: q,
                    first,
                    second: var,
                });
            }
        }
        if chain_tree(chain, g).is_none() {
            v.push(Violation::DisconnectedChain { var });
        }
        if chain.len() > 1 {
            match emb.gamma.get(&var) {
                None => v.push(Violation::MissingGamma { var }),
                Some(gm) if *gm <= Rational::zero() => v.push(Violation::NonPositiveGamma { var }),
                _ => {}
            }
        }
    }
    for var in 0..ising.n() {
        if !emb.chains.contains_key(&var) {
            v.push(Violation::MissingChain { var });
        }
    }
    for (i, j) in logical_edges(ising) {
        let (ci, cj) = (emb.chain(i), emb.chain(j));
        let linked = ci.iter().any(|&p| cj.iter().any(|&q| g.has_edge(p, q)));
        if !linked {
            v.push(Violation::MissingCoupler { i, j });
            continue;
        }
        match emb.edge_assign.get(&(i, j)) {
            Some(&(p, q)) if ci.contains(&p) && cj.contains(&q) && g.has_edge(p, q) => {}
            Some(&(p, q)) => v.push(Violation::BadEdgeAssignment { i, j, p, q }),
            None => v.push(Violation::MissingCoupler { i, j }),
        }
    }
    if !report.violations.is_empty() || emb.num_qubits() > VERIFY_MAX_QUBITS {
        return report;
    }
    let Ok(phys) = apply_embedding(ising, emb, g, FieldDistribution::Root) else {
        return report;
    };
    report.spectrum_checked = true;
    report.violations.extend(spectrum_violations(ising, emb, &phys));
    report
}

fn spectrum_violations(ising: &IsingModel, emb: &Embedding, phys: &EmbeddedIsing) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = ising.n();
    let logical_ii = ising.integer_form();
    let mut logical = vec![0i64; 1 << n];
    logical_ii.for_each_state(|m, e| logical[m as usize] = e);
    let lmin = *logical.iter().min().unwrap();
    let logical_min: BTreeSet<u64> = (0..1u64 << n).filter(|&m| logical[m as usize] == lmin).collect();

    let chain_pos: Vec<Vec<usize>> = (0..n)
        .map(|var| {
            emb.chain(var)
                .iter()
                .map(|q| phys.index_of(*q).unwrap())
                .collect()
        })
        .collect();
    let decode = |mask: u64| -> Option<u64> {
        let mut out = 0u64;
        for (var, pos) in chain_pos.iter().enumerate() {
            let first = mask >> pos[0] & 1;
            if pos.iter().any(|&k| mask >> k & 1 != first) {
                return None;
            }
            out |= first << var;
        }
        Some(out)
    };

    let ii = phys.model.integer_form();
    let mut intact_min: Option<Rational> = None;
    let mut any_nonpositive = false;
    let mut broken: Vec<(u64, Rational)> = Vec::new();
    let mut energies = Vec::with_capacity(1 << phys.qubits.len());
    ii.for_each_state(|m, e| energies.push((m, e)));
    let pmin = energies.iter().map(|&(_, e)| e).min().unwrap();
    let mut phys_min_logical = BTreeSet::new();
    for &(m, e) in &energies {
        let be = phys.model.to_binary_energy(Rational::new(e, ii.den));
        match decode(m) {
            Some(l) => {
                let want = ising.to_binary_energy(Rational::new(logical[l as usize], logical_ii.den));
                if be != want && out.len() < 8 {
                    out.push(Violation::SpectrumMismatch { mask: m });
                }
                if intact_min.map_or(true, |x| be < x) {
                    intact_min = Some(be);
                }
                any_nonpositive |= be <= Rational::zero();
                if e == pmin {
                    phys_min_logical.insert(l);
                }
            }
            None => {
                if e == pmin {
                    phys_min_logical.insert(u64::MAX);
                }
                broken.push((m, be));
            }
        }
    }
    if phys_min_logical != logical_min {
        out.push(Violation::MinimizerMismatch);
    }
    let threshold = break_threshold(intact_min.unwrap(), any_nonpositive);
    if let Some(&(mask, e)) = broken
        .iter()
        .filter(|(_, e)| *e <= threshold)
        .min_by_key(|(_, e)| *e)
    {
        out.push(Violation::SpectralRisk {
            mask,
            energy: Exact(e),
            threshold: Exact(threshold),
        });
    }
    out
}

/// Spin vector over `phys.qubits` that realizes a logical assignment with intact chains.
pub fn embed_sample(logical: &[i8], emb: &Embedding, phys: &EmbeddedIsing) -> Vec<i8> {
    let mut spins = vec![1i8; phys.qubits.len()];
    for (var, &s) in logical.iter().enumerate() {
        for q in emb.chain(var) {
            if let Some(k) = phys.index_of(*q) {
                spins[k] = s;
            }
        }
    }
    spins
}

/// Logical mask of a physical state, or `None` when a chain is broken.
pub fn logical_mask(spins: &[i8], emb: &Embedding, phys: &EmbeddedIsing, n: usize) -> Option<u64> {
    let map = phys.sample_map(spins);
    let u = unembed(&map, emb, n, UnembedPolicy::Discard).ok()?;
    u.spins.map(|s| mask_from_spins(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chimera::build_chimera;

    fn path4() -> IsingModel {
        IsingModel::new(
            vec![int(0); 4],
            [((0, 1), int(-1)), ((1, 2), int(1)), ((2, 3), int(-1))],
            int(0),
            int(1),
        )
        .unwrap()
    }

    #[test]
    fn path_fits_single_qubit_chains() {
        let g = build_chimera(1, 1, 4, &[]).unwrap();
        let e = embed(&path4(), &g, None, &EmbedOptions::default()).unwrap();
        assert!(e.chains.values().all(|c| c.len() == 1));
        assert!(verify_embedding(&path4(), &e, &g).is_valid());
    }

    #[test]
    fn single_qubit_chains_rename_only() {
        let g = build_chimera(1, 1, 4, &[]).unwrap();
        let m = path4();
        let e = embed(&m, &g, None, &EmbedOptions::default()).unwrap();
        let phys = apply_embedding(&m, &e, &g, FieldDistribution::Root).unwrap();
        assert_eq!(phys.model.scale(), m.scale());
        assert_eq!(phys.model.offset(), m.offset());
        for ((a, b), v) in m.couplings() {
            let (p, q) = e.edge_assign[&(*a, *b)];
            assert_eq!(phys.coupler(p, q), *v);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = build_chimera(2, 2, 4, &[]).unwrap();
        let opts = EmbedOptions {
            seed: 7,
            ..Default::default()
        };
        let m = path4();
        assert_eq!(embed(&m, &g, None, &opts).unwrap(), embed(&m, &g, None, &opts).unwrap());
    }

    #[test]
    fn tie_reads_plus_one() {
        let e = Embedding {
            chains: BTreeMap::from([(0, vec![0, 4])]),
            ..Default::default()
        };
        let sample = BTreeMap::from([(0, 1i8), (4, -1i8)]);
        let u = unembed(&sample, &e, 1, UnembedPolicy::MajorityVote).unwrap();
        assert_eq!(u.spins, Some(vec![1]));
        assert_eq!(u.chain_breaks, 1);
        let d = unembed(&sample, &e, 1, UnembedPolicy::Discard).unwrap();
        assert_eq!(d.spins, None);
    }

    #[test]
    fn overlapping_chains_and_missing_edges_reported() {
        let g = build_chimera(1, 1, 4, &[]).unwrap();
        let m = path4();
        let e = Embedding {
            chains: BTreeMap::from([(0, vec![0]), (1, vec![4]), (2, vec![4]), (3, vec![1])]),
            ..Default::default()
        };
        let r = verify_embedding(&m, &e, &g);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::SharedQubit { qubit: 4, .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::MissingCoupler { i: 0, j: 1 })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::MissingCoupler { i: 1, j: 2 })));
    }

    #[test]
    fn complete_graph_needs_chains() {
        let k8: Vec<((usize, usize), Rational)> = (0..8)
            .flat_map(|a| (a + 1..8).map(move |b| ((a, b), int(1))))
            .collect();
        let m = IsingModel::new(vec![int(0); 8], k8, int(0), int(1)).unwrap();
        let g = build_chimera(4, 4, 4, &[]).unwrap();
        let e = embed(&m, &g, None, &EmbedOptions::default()).unwrap();
        assert!(e.chains.values().any(|c| c.len() > 1));
        assert!(verify_embedding(&m, &e, &g).is_valid());
    }

    #[test]
    fn impossible_embedding_names_variables() {
        // K5 needs chains; a single cell with four usable qubits cannot hold it.
        let k5: Vec<((usize, usize), Rational)> = (0..5)
            .flat_map(|a| (a + 1..5).map(move |b| ((a, b), int(1))))
            .collect();
        let m = IsingModel::new(vec![int(0); 5], k5, int(0), int(1)).unwrap();
        let g = build_chimera(1, 1, 4, &[0, 1, 2, 3]).unwrap();
        let opts = EmbedOptions {
            restarts: 3,
            ..Default::default()
        };
        match embed(&m, &g, None, &opts) {
            Err(Error::EmbeddingFailed { unplaced }) => assert!(!unplaced.is_empty()),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
