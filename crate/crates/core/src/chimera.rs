//! Chimera hardware graphs: an `M x N` grid of `K_{K,K}` unit cells.
//!
//! Qubit id = `(row * N + col) * 2K + side * K + k`. Side 0 qubits couple to the same
//! position in the cells above and below, side 1 qubits to the cells left and right.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub masked: Vec<usize>,
}

fn default_k() -> usize {
    4
}

impl GraphSpec {
    pub fn build(&self) -> Result<HardwareGraph> {
        build_chimera(self.m, self.n, self.k, &self.masked)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QubitCoord {
    pub row: usize,
    pub col: usize,
    pub side: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareGraph {
    m: usize,
    n: usize,
    k: usize,
    usable: Vec<bool>,
    adj: Vec<Vec<usize>>,
}

pub fn build_chimera(m: usize, n: usize, k: usize, masked: &[usize]) -> Result<HardwareGraph> {
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::validation("Chimera dimensions must be at least 1"));
    }
    let total = m * n * 2 * k;
    let mut usable = vec![true; total];
    for &q in masked {
        if q >= total {
            return Err(Error::validation(format!(
                "masked qubit {q} out of range 0..{total}"
            )));
        }
        usable[q] = false;
    }
    let mut g = HardwareGraph {
        m,
        n,
        k,
        usable,
        adj: vec![Vec::new(); total],
    };
    for row in 0..m {
        for col in 0..n {
            for a in 0..k {
                for b in 0..k {
                    g.link(g.qubit_id(row, col, 0, a), g.qubit_id(row, col, 1, b));
                }
                if row + 1 < m {
                    g.link(g.qubit_id(row, col, 0, a), g.qubit_id(row + 1, col, 0, a));
                }
                if col + 1 < n {
                    g.link(g.qubit_id(row, col, 1, a), g.qubit_id(row, col + 1, 1, a));
                }
            }
        }
    }
    for list in &mut g.adj {
        list.sort_unstable();
    }
    Ok(g)
}

impl HardwareGraph {
    fn link(&mut self, a: usize, b: usize) {
        if self.usable[a] && self.usable[b] {
            self.adj[a].push(b);
            self.adj[b].push(a);
        }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn half_cell(&self) -> usize {
        self.k
    }

    pub fn spec(&self) -> GraphSpec {
        GraphSpec {
            m: self.m,
            n: self.n,
            k: self.k,
            masked: (0..self.num_qubits()).filter(|&q| !self.usable[q]).collect(),
        }
    }

    pub fn qubit_id(&self, row: usize, col: usize, side: usize, k: usize) -> usize {
        (row * self.n + col) * 2 * self.k + side * self.k + k
    }

    pub fn coord(&self, id: usize) -> QubitCoord {
        let cell = id / (2 * self.k);
        let within = id % (2 * self.k);
        QubitCoord {
            row: cell / self.n,
            col: cell % self.n,
            side: within / self.k,
            k: within % self.k,
        }
    }

    /// All qubit ids, masked or not.
    pub fn num_qubits(&self) -> usize {
        self.usable.len()
    }

    pub fn num_usable(&self) -> usize {
        self.usable.iter().filter(|&&u| u).count()
    }

    pub fn is_usable(&self, q: usize) -> bool {
        self.usable.get(q).copied().unwrap_or(false)
    }

    pub fn usable_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_qubits()).filter(|&q| self.usable[q])
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        self.adj.get(q).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, l)| l.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_is_k44() {
        let g = build_chimera(1, 1, 4, &[]).unwrap();
        assert_eq!(g.num_usable(), 8);
        assert_eq!(g.num_edges(), 16);
        for a in 0..4 {
            for b in 4..8 {
                assert!(g.has_edge(a, b));
            }
            for b in 0..4 {
                assert!(!g.has_edge(a, b));
            }
        }
    }

    #[test]
    fn four_by_four() {
        let g = build_chimera(4, 4, 4, &[]).unwrap();
        assert_eq!(g.num_qubits(), 128);
        assert_eq!(g.num_edges(), 16 * 16 + 2 * 3 * 4 * 4);
        let a = g.qubit_id(1, 2, 0, 3);
        assert!(g.has_edge(a, g.qubit_id(2, 2, 0, 3)));
        assert!(!g.has_edge(a, g.qubit_id(1, 3, 0, 3)));
        let b = g.qubit_id(1, 2, 1, 0);
        assert!(g.has_edge(b, g.qubit_id(1, 3, 1, 0)));
        assert_eq!(g.coord(a), QubitCoord { row: 1, col: 2, side: 0, k: 3 });
    }

    #[test]
    fn masked_qubits_lose_edges() {
        let g = build_chimera(1, 1, 4, &[0, 5]).unwrap();
        assert_eq!(g.num_usable(), 6);
        assert!(g.neighbors(0).is_empty());
        assert_eq!(g.num_edges(), 9);
        assert!(build_chimera(1, 1, 4, &[8]).is_err());
    }
}
