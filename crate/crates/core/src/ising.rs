//! Ising graphs: conversion from QUBO, energies, gains, and subproblem
//! extraction.
//!
//! A graph holds per-node biases `h`, weighted edges `w`, and a constant
//! offset. Energies use the spin convention `s_i = 1 - 2 x_i` (bit 0 maps
//! to spin +1), so `E(s) = e0 + sum_i h_i s_i + sum_{ij} w_ij s_i s_j`.

use std::collections::BTreeMap;

use crate::error::Error;
use crate::qubo::QuboProblem;

/// Couplings weaker than this are dropped at construction; they are noise
/// from cancellations in contraction products.
pub const EDGE_WEIGHT_FLOOR: f64 = 1e-12;

/// Weighted graph form of a quadratic binary objective.
#[derive(Debug, Clone)]
pub struct IsingGraph {
    biases: Vec<f64>,
    /// Sorted, deduplicated, `i < j`.
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    offset: f64,
    /// Traces each node back to the variable it represents in the graph's
    /// ancestor (original QUBO variables for compiled graphs; parent node
    /// indices survive extraction and contraction through composition).
    labels: Vec<usize>,
}

impl IsingGraph {
    /// Build a graph from raw parts. Duplicate edges merge, couplings below
    /// [`EDGE_WEIGHT_FLOOR`] are dropped, and node labels default to the
    /// identity.
    pub fn from_parts(
        biases: Vec<f64>,
        edges: Vec<(usize, usize, f64)>,
        offset: f64,
    ) -> Result<Self, Error> {
        let labels = (0..biases.len()).collect();
        Self::from_parts_labeled(biases, edges, offset, labels)
    }

    pub fn from_parts_labeled(
        biases: Vec<f64>,
        edges: Vec<(usize, usize, f64)>,
        offset: f64,
        labels: Vec<usize>,
    ) -> Result<Self, Error> {
        let n = biases.len();
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "labels length {} does not match node count {n}",
                labels.len()
            )));
        }
        for b in &biases {
            if !b.is_finite() {
                return Err(Error::Validation("bias is not finite".into()));
            }
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, w) in &edges {
            if i == j {
                return Err(Error::Validation(format!(
                    "self edge at node {i}; fold self terms into the bias or offset"
                )));
            }
            if i >= n || j >= n {
                return Err(Error::Validation(format!("edge ({i},{j}) out of range")));
            }
            if !w.is_finite() {
                return Err(Error::Validation(format!("edge ({i},{j}) weight not finite")));
            }
            *merged.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        let edges: Vec<(usize, usize, f64)> = merged
            .into_iter()
            .filter(|(_, w)| w.abs() >= EDGE_WEIGHT_FLOOR)
            .map(|((i, j), w)| (i, j, w))
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, w) in &edges {
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        Ok(IsingGraph {
            biases,
            edges,
            adjacency,
            offset,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.biases.len()
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Energy of a bit assignment, computed from scratch.
    pub fn energy(&self, bits: &[u8]) -> Result<f64, Error> {
        if bits.len() != self.n() {
            return Err(Error::Dimension(format!(
                "assignment length {} does not match node count {}",
                bits.len(),
                self.n()
            )));
        }
        let spin = |i: usize| 1.0 - 2.0 * f64::from(bits[i]);
        let mut e = self.offset;
        for (i, h) in self.biases.iter().enumerate() {
            e += h * spin(i);
        }
        for &(i, j, w) in &self.edges {
            e += w * spin(i) * spin(j);
        }
        Ok(e)
    }
}

/// A bit assignment over a graph's nodes with energy bookkeeping.
///
/// The cached energy is maintained incrementally through [`Assignment::flip`]
/// and stays within 1e-9 of a fresh recomputation.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    bits: Vec<u8>,
    energy: f64,
}

impl Assignment {
    pub fn zeros(graph: &IsingGraph) -> Self {
        Self::from_bits(graph, vec![0; graph.n()]).expect("sizes match by construction")
    }

    pub fn from_bits(graph: &IsingGraph, bits: Vec<u8>) -> Result<Self, Error> {
        let energy = graph.energy(&bits)?;
        Ok(Assignment { bits, energy })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn spin(&self, i: usize) -> f64 {
        1.0 - 2.0 * f64::from(self.bits[i])
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Flip node `i`, updating the cached energy in `O(degree(i))`.
    pub fn flip(&mut self, graph: &IsingGraph, i: usize) {
        self.energy += flip_delta(graph, self, i).expect("index checked by caller");
        self.bits[i] ^= 1;
    }

    /// Re-sync the cached energy with a fresh computation.
    pub fn resync_energy(&mut self, graph: &IsingGraph) {
        self.energy = graph.energy(&self.bits).expect("assignment matches graph");
    }

    /// Overwrite bits from another assignment over a node subset; the
    /// caller supplies the mapping from subset position to node index.
    pub fn write_subset(&mut self, graph: &IsingGraph, nodes: &[usize], bits: &[u8]) {
        for (&node, &bit) in nodes.iter().zip(bits) {
            self.bits[node] = bit;
        }
        self.resync_energy(graph);
    }
}

/// Energy of an assignment under a graph (fresh computation).
pub fn ising_energy(graph: &IsingGraph, assignment: &Assignment) -> Result<f64, Error> {
    graph.energy(assignment.bits())
}

/// Per-node gains: the edge-sign sum extended with the bias contribution,
/// so that flipping node `i` changes the energy by exactly `-2 g_i`.
pub fn gains(graph: &IsingGraph, assignment: &Assignment) -> Result<Vec<f64>, Error> {
    if assignment.bits().len() != graph.n() {
        return Err(Error::Dimension(
            "assignment does not match graph size".into(),
        ));
    }
    Ok((0..graph.n()).map(|i| gain_at(graph, assignment, i)).collect())
}

pub(crate) fn gain_at(graph: &IsingGraph, assignment: &Assignment, i: usize) -> f64 {
    let si = assignment.spin(i);
    let mut g = graph.bias(i) * si;
    for &(j, w) in graph.neighbors(i) {
        g += w * si * assignment.spin(j);
    }
    g
}

/// Energy change from flipping node `i`, without recomputation: `-2 g_i`.
pub fn flip_delta(graph: &IsingGraph, assignment: &Assignment, i: usize) -> Result<f64, Error> {
    if i >= graph.n() {
        return Err(Error::Dimension(format!(
            "node {i} out of range for graph of {} nodes",
            graph.n()
        )));
    }
    Ok(-2.0 * gain_at(graph, assignment, i))
}

/// Convert a QUBO into graph form via `x_i = (1 - s_i) / 2`.
///
/// Energies are preserved exactly: for every bit vector, the spin energy of
/// the result equals the QUBO value.
pub fn qubo_to_ising(problem: &QuboProblem) -> IsingGraph {
    let n = problem.n;
    let mut h = vec![0.0; n];
    let mut edges = Vec::new();
    let mut e0 = problem.offset;
    for (i, j, q) in problem.entries() {
        if i == j {
            // q x = q/2 - (q/2) s
            h[i] -= q / 2.0;
            e0 += q / 2.0;
        } else {
            // q x_i x_j = q/4 (1 - s_i - s_j + s_i s_j)
            h[i] -= q / 4.0;
            h[j] -= q / 4.0;
            edges.push((i, j, q / 4.0));
            e0 += q / 4.0;
        }
    }
    IsingGraph::from_parts(h, edges, e0).expect("compiled coefficients are finite")
}

/// Induced subgraph over `nodes` with the complement frozen at the current
/// assignment: boundary couplings fold into biases, frozen-frozen couplings
/// and frozen biases fold into the offset.
///
/// Node `k` of the result corresponds to `nodes[k]`; its label composes
/// with the parent's label.
pub fn extract_subproblem(
    graph: &IsingGraph,
    assignment: &Assignment,
    nodes: &[usize],
) -> Result<IsingGraph, Error> {
    if nodes.is_empty() {
        return Err(Error::Validation("subproblem node set is empty".into()));
    }
    let n = graph.n();
    let mut position = vec![usize::MAX; n];
    for (k, &node) in nodes.iter().enumerate() {
        if node >= n {
            return Err(Error::Validation(format!("node {node} out of range")));
        }
        if position[node] != usize::MAX {
            return Err(Error::Validation(format!("node {node} listed twice")));
        }
        position[node] = k;
    }
    if assignment.bits().len() != n {
        return Err(Error::Dimension(
            "assignment does not match graph size".into(),
        ));
    }

    let mut biases: Vec<f64> = nodes.iter().map(|&u| graph.bias(u)).collect();
    let mut offset = graph.offset();
    let mut edges = Vec::new();

    for (i, &h) in graph.biases().iter().enumerate() {
        if position[i] == usize::MAX {
            offset += h * assignment.spin(i);
        }
    }
    for &(i, j, w) in graph.edges() {
        match (position[i], position[j]) {
            (usize::MAX, usize::MAX) => {
                offset += w * assignment.spin(i) * assignment.spin(j);
            }
            (k, usize::MAX) => biases[k] += w * assignment.spin(j),
            (usize::MAX, k) => biases[k] += w * assignment.spin(i),
            (a, b) => edges.push((a.min(b), a.max(b), w)),
        }
    }

    let labels = nodes.iter().map(|&u| graph.labels()[u]).collect();
    IsingGraph::from_parts_labeled(biases, edges, offset, labels)
}

/// Serialize to sparse text: `n e0` header, `b i h` bias lines, `e i j w`
/// edge lines.
pub fn export_text(graph: &IsingGraph) -> String {
    let mut out = format!("{} {}\n", graph.n(), graph.offset());
    for (i, h) in graph.biases().iter().enumerate() {
        if *h != 0.0 {
            out.push_str(&format!("b {i} {h}\n"));
        }
    }
    for &(i, j, w) in graph.edges() {
        out.push_str(&format!("e {i} {j} {w}\n"));
    }
    out
}

/// Parse the format written by [`export_text`].
pub fn import_text(text: &str) -> Result<IsingGraph, Error> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty graph document".into()))?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("header must start with the node count".into()))?;
    let e0: f64 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("header must carry the offset".into()))?;

    let mut biases = vec![0.0; n];
    let mut edges = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["b", i, h] => {
                let i: usize = i
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad node index on line {}", lineno + 2)))?;
                if i >= n {
                    return Err(Error::Parse(format!("bias index {i} out of range")));
                }
                biases[i] = h
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad bias value on line {}", lineno + 2)))?;
            }
            ["e", i, j, w] => {
                let i: usize = i
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad edge index on line {}", lineno + 2)))?;
                let j: usize = j
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad edge index on line {}", lineno + 2)))?;
                let w: f64 = w
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad edge weight on line {}", lineno + 2)))?;
                edges.push((i, j, w));
            }
            _ => {
                return Err(Error::Parse(format!(
                    "unrecognized line {}: {line:?}",
                    lineno + 2
                )))
            }
        }
    }
    IsingGraph::from_parts(biases, edges, e0)
}
