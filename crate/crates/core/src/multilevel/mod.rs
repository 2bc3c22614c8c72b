//! Multilevel coarsening: sphere embedding, nearest-neighbor matching,
//! contraction, and interpolation back down the hierarchy.
//!
//! Coarsening pairs nodes that sit close together after an embedding pass
//! that pushes strongly coupled nodes apart on the unit sphere, so strong
//! couplings survive to coarser levels. Contraction forms `P^T M P` with
//! the symmetric matrix `M` holding biases on the diagonal and couplings
//! off it; the intra-pair part of the product diagonal is constant in spin
//! variables and folds into the offset, which keeps interpolated energies
//! exactly equal across levels.

mod kdtree;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Error;
use crate::ising::{Assignment, IsingGraph};
use crate::rng::{seeded, subseed};

pub use kdtree::KdTree;

/// Per-node unit vectors in `R^d`.
#[derive(Debug, Clone)]
pub struct Embedding {
    dim: usize,
    positions: Vec<f64>,
}

impl Embedding {
    /// Wrap raw positions; each consecutive `dim` chunk must be unit norm.
    pub fn from_positions(dim: usize, positions: Vec<f64>) -> Result<Self, Error> {
        if dim < 1 || !positions.len().is_multiple_of(dim) {
            return Err(Error::Dimension("positions do not fill dimension".into()));
        }
        for (i, p) in positions.chunks(dim).enumerate() {
            let norm: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!("position {i} is not unit norm")));
            }
        }
        Ok(Embedding { dim, positions })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }
}

/// Spread objective: sum over adjacent pairs of `|w| * distance`, counted
/// from both endpoints.
pub fn embedding_objective(graph: &IsingGraph, embedding: &Embedding) -> f64 {
    let mut total = 0.0;
    for &(i, j, w) in graph.edges() {
        total += 2.0 * w.abs() * distance(embedding.position(i), embedding.position(j));
    }
    total
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Embed nodes on the unit sphere, pushing each node away from the
/// magnitude-weighted centroid of its neighbors.
///
/// Every iteration proposes a two-phase update (all nodes step against the
/// previous snapshot) and accepts it only if the global spread objective
/// does not decrease, halving the step on failure, so the objective trace
/// is non-decreasing.
pub fn embed(graph: &IsingGraph, d: usize, iters: usize, seed: u64) -> Result<Embedding, Error> {
    embed_with_trace(graph, d, iters, seed).map(|(e, _)| e)
}

/// [`embed`] plus the objective value after each iteration.
pub fn embed_with_trace(
    graph: &IsingGraph,
    d: usize,
    iters: usize,
    seed: u64,
) -> Result<(Embedding, Vec<f64>), Error> {
    if d < 2 {
        return Err(Error::Config(format!("embedding dimension {d} must be >= 2")));
    }
    if iters < 1 {
        return Err(Error::Config("embedding iterations must be >= 1".into()));
    }
    let n = graph.n();
    let mut rng = seeded(subseed(seed, "embed-init", 0));

    // Uniform directions via normalized Gaussian-ish rejection sampling.
    let mut positions = vec![0.0; n * d];
    for i in 0..n {
        loop {
            let p = &mut positions[i * d..(i + 1) * d];
            let mut norm2 = 0.0f64;
            for x in p.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
                norm2 += *x * *x;
            }
            if norm2 > 1e-4 && norm2 <= 1.0 {
                let norm = norm2.sqrt();
                p.iter_mut().for_each(|x| *x /= norm);
                break;
            }
        }
    }

    let mut embedding = Embedding { dim: d, positions };
    let mut objective = embedding_objective(graph, &embedding);
    let mut trace = Vec::with_capacity(iters);

    for _ in 0..iters {
        let mut eta = 0.5;
        while eta >= 1e-6 {
            let proposal = step_all(graph, &embedding, eta);
            let proposed_objective = embedding_objective(graph, &proposal);
            if proposed_objective >= objective - 1e-12 * (1.0 + objective.abs()) {
                embedding = proposal;
                objective = proposed_objective;
                break;
            }
            eta *= 0.5;
        }
        trace.push(objective);
    }

    Ok((embedding, trace))
}

/// One two-phase repulsion step; nodes whose local spread would shrink
/// keep their old position.
fn step_all(graph: &IsingGraph, embedding: &Embedding, eta: f64) -> Embedding {
    let d = embedding.dim;
    let mut next = embedding.positions.clone();
    for i in 0..embedding.len() {
        let neighbors = graph.neighbors(i);
        if neighbors.is_empty() {
            continue;
        }
        let mut centroid = vec![0.0; d];
        let mut weight_sum = 0.0;
        for &(j, w) in neighbors {
            let pj = embedding.position(j);
            for (c, x) in centroid.iter_mut().zip(pj) {
                *c += w.abs() * x;
            }
            weight_sum += w.abs();
        }
        if weight_sum <= 0.0 {
            continue;
        }
        centroid.iter_mut().for_each(|c| *c /= weight_sum);

        let pi = embedding.position(i);
        let mut candidate: Vec<f64> = pi
            .iter()
            .zip(&centroid)
            .map(|(p, c)| p + eta * (p - c))
            .collect();
        let norm: f64 = candidate.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        candidate.iter_mut().for_each(|x| *x /= norm);

        let local = |p: &[f64]| -> f64 {
            neighbors
                .iter()
                .map(|&(j, w)| w.abs() * distance(p, embedding.position(j)))
                .sum()
        };
        if local(&candidate) >= local(pi) - 1e-12 {
            next[i * d..(i + 1) * d].copy_from_slice(&candidate);
        }
    }
    Embedding {
        dim: d,
        positions: next,
    }
}

/// A pairwise partition of the nodes: pairs plus at most leftover
/// singletons, with the projection map onto cluster indices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Matching {
    cluster_of: Vec<usize>,
    n_clusters: usize,
    pairs: Vec<(usize, usize)>,
    singletons: Vec<usize>,
    /// First fine node assigned to each cluster; carries the label.
    representatives: Vec<usize>,
}

impl Matching {
    /// Build from explicit pairs and singletons covering every node once.
    pub fn from_pairs(
        n: usize,
        pairs: Vec<(usize, usize)>,
        singletons: Vec<usize>,
    ) -> Result<Self, Error> {
        let mut cluster_of = vec![usize::MAX; n];
        let mut representatives = Vec::with_capacity(pairs.len() + singletons.len());
        let mut cluster = 0;
        for &(a, b) in &pairs {
            if a >= n || b >= n || a == b {
                return Err(Error::Validation(format!("bad pair ({a},{b})")));
            }
            if cluster_of[a] != usize::MAX || cluster_of[b] != usize::MAX {
                return Err(Error::Validation(format!("pair ({a},{b}) reuses a node")));
            }
            cluster_of[a] = cluster;
            cluster_of[b] = cluster;
            representatives.push(a.min(b));
            cluster += 1;
        }
        for &s in &singletons {
            if s >= n {
                return Err(Error::Validation(format!("singleton {s} out of range")));
            }
            if cluster_of[s] != usize::MAX {
                return Err(Error::Validation(format!("singleton {s} reuses a node")));
            }
            cluster_of[s] = cluster;
            representatives.push(s);
            cluster += 1;
        }
        if cluster_of.contains(&usize::MAX) {
            return Err(Error::Validation("matching does not cover every node".into()));
        }
        Ok(Matching {
            cluster_of,
            n_clusters: cluster,
            pairs,
            singletons,
            representatives,
        })
    }

    /// Every node its own cluster.
    pub fn identity(n: usize) -> Self {
        Matching {
            cluster_of: (0..n).collect(),
            n_clusters: n,
            pairs: Vec::new(),
            singletons: (0..n).collect(),
            representatives: (0..n).collect(),
        }
    }

    pub fn cluster_of(&self, fine: usize) -> usize {
        self.cluster_of[fine]
    }

    pub fn projection(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn n_fine(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn singletons(&self) -> &[usize] {
        &self.singletons
    }
}

/// Greedily pair each node with its nearest unpaired neighbor in the
/// embedding, visiting nodes in seeded random order; an odd leftover
/// becomes a singleton.
pub fn match_nodes(
    graph: &IsingGraph,
    embedding: &Embedding,
    seed: u64,
) -> Result<Matching, Error> {
    let n = graph.n();
    if embedding.len() != n {
        return Err(Error::Dimension(format!(
            "embedding covers {} nodes, graph has {n}",
            embedding.len()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(subseed(seed, "match-order", 0)));

    let mut tree = KdTree::new(embedding.dim(), &embedding.positions);
    let mut taken = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    let mut singletons = Vec::new();
    for &u in &order {
        if taken[u] {
            continue;
        }
        taken[u] = true;
        tree.deactivate(u);
        match tree.nearest_active(embedding.position(u)) {
            Some(v) => {
                taken[v] = true;
                tree.deactivate(v);
                pairs.push((u, v));
            }
            None => singletons.push(u),
        }
    }
    Matching::from_pairs(n, pairs, singletons)
}

/// Contract a graph under a matching: `P^T M P` with biases on the
/// diagonal of `M` and couplings off it.
///
/// The product's off-diagonal becomes the coarse couplings and the fine
/// biases sum into the coarse biases. The remaining diagonal part, twice
/// the intra-pair coupling, is constant under spin assignments and folds
/// into the offset as the coupling weight itself, so cluster-constant
/// assignments keep their exact energy.
pub fn coarsen(graph: &IsingGraph, matching: &Matching) -> Result<IsingGraph, Error> {
    let n = graph.n();
    if matching.n_fine() != n {
        return Err(Error::Dimension(format!(
            "matching covers {} nodes, graph has {n}",
            matching.n_fine()
        )));
    }
    let nc = matching.n_clusters();
    let mut biases = vec![0.0; nc];
    for (i, h) in graph.biases().iter().enumerate() {
        biases[matching.cluster_of(i)] += h;
    }
    let mut offset = graph.offset();
    let mut edges = Vec::new();
    for &(i, j, w) in graph.edges() {
        let (ci, cj) = (matching.cluster_of(i), matching.cluster_of(j));
        if ci == cj {
            offset += w;
        } else {
            edges.push((ci.min(cj), ci.max(cj), w));
        }
    }
    let labels = matching
        .representatives
        .iter()
        .map(|&rep| graph.labels()[rep])
        .collect();
    IsingGraph::from_parts_labeled(biases, edges, offset, labels)
}

/// Copy a coarse solution down to the fine level; the energy is preserved
/// exactly because contraction keeps cluster-constant energies.
pub fn interpolate(
    fine_graph: &IsingGraph,
    matching: &Matching,
    coarse: &Assignment,
) -> Result<Assignment, Error> {
    if coarse.bits().len() != matching.n_clusters() {
        return Err(Error::Dimension(format!(
            "coarse assignment has {} bits, matching has {} clusters",
            coarse.bits().len(),
            matching.n_clusters()
        )));
    }
    if matching.n_fine() != fine_graph.n() {
        return Err(Error::Dimension(
            "matching does not cover the fine graph".into(),
        ));
    }
    let bits = (0..fine_graph.n())
        .map(|i| coarse.bit(matching.cluster_of(i)))
        .collect();
    Assignment::from_bits(fine_graph, bits)
}

/// A coarsening hierarchy: level 0 is the input graph, the last level has
/// at most `m` nodes, and `matchings[l]` projects level `l` onto `l + 1`.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<IsingGraph>,
    matchings: Vec<Matching>,
    embed_objectives: Vec<f64>,
}

impl Hierarchy {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &IsingGraph {
        &self.levels[l]
    }

    pub fn matching(&self, l: usize) -> &Matching {
        &self.matchings[l]
    }

    pub fn finest(&self) -> &IsingGraph {
        &self.levels[0]
    }

    pub fn coarsest(&self) -> &IsingGraph {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|g| g.n()).collect()
    }

    /// Final embedding objective of each coarsening step.
    pub fn embed_objectives(&self) -> &[f64] {
        &self.embed_objectives
    }

    /// Diagnostic dump: per-level node counts, embedding objectives, and
    /// projection maps, as a structured log document.
    pub fn dump_json(&self) -> String {
        let levels: Vec<serde_json::Value> = self
            .levels
            .iter()
            .enumerate()
            .map(|(l, g)| serde_json::json!({ "level": l, "nodes": g.n() }))
            .collect();
        let steps: Vec<serde_json::Value> = self
            .matchings
            .iter()
            .enumerate()
            .map(|(l, m)| {
                serde_json::json!({
                    "from_level": l,
                    "embed_objective": self.embed_objectives[l],
                    "projection": m.projection(),
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "levels": levels,
            "coarsenings": steps,
        }))
        .expect("dump serializes")
    }
}

/// Repeat embed → match → contract until the coarsest level has at most
/// `m` nodes.
pub fn build_hierarchy(
    graph: &IsingGraph,
    m: usize,
    d: usize,
    iters: usize,
    seed: u64,
) -> Result<Hierarchy, Error> {
    if m < 2 {
        return Err(Error::Config(format!("coarsest size {m} must be >= 2")));
    }
    let mut levels = vec![graph.clone()];
    let mut matchings = Vec::new();
    let mut embed_objectives = Vec::new();
    let mut l = 0u64;
    while levels.last().expect("non-empty").n() > m {
        let fine = levels.last().expect("non-empty");
        let (embedding, trace) =
            embed_with_trace(fine, d, iters, subseed(seed, "level-embed", l))?;
        let matching = match_nodes(fine, &embedding, subseed(seed, "level-match", l))?;
        let coarse = coarsen(fine, &matching)?;
        if coarse.n() >= fine.n() {
            return Err(Error::Internal(format!(
                "contraction failed to shrink level {l}: {} -> {}",
                fine.n(),
                coarse.n()
            )));
        }
        levels.push(coarse);
        matchings.push(matching);
        embed_objectives.push(trace.last().copied().unwrap_or(0.0));
        l += 1;
    }
    Ok(Hierarchy {
        levels,
        matchings,
        embed_objectives,
    })
}
