//! Recursive variable elimination driven by measured circuit correlations.
//!
//! Each round optimizes the circuit angles on the current graph, reads the
//! strongest single- or two-point spin correlation off the measured (or
//! exact) distribution, fixes or merges the involved variables, and
//! recurses on the reduced graph until brute force takes over below the
//! minimum size.

use crate::classical::{brute_force, SolveResult};
use crate::error::Error;
use crate::ising::{Assignment, IsingGraph};
use crate::quantum::qaoa::{optimize_angles_on, sample, QaoaSimulator, StateVector};
use crate::quantum::QiroConfig;
use crate::rng::subseed;
use std::time::Instant;

/// One elimination round, reported in original node indices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QiroStep {
    pub round: usize,
    pub action: QiroAction,
    pub correlation: f64,
    pub remaining_nodes: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QiroAction {
    Freeze { node: usize, spin: i8 },
    Merge { kept: usize, merged: usize, sign: i8 },
}

enum Substitution {
    Freeze { node: usize, spin: f64 },
    Merge { kept: usize, merged: usize, sign: f64 },
}

/// Solve a graph with recursive correlation rounding.
pub fn qiro_solve(graph: &IsingGraph, config: &QiroConfig, seed: u64) -> Result<SolveResult, Error> {
    qiro_solve_traced(graph, config, seed).map(|(r, _)| r)
}

/// [`qiro_solve`] plus the per-round elimination trace.
pub fn qiro_solve_traced(
    graph: &IsingGraph,
    config: &QiroConfig,
    seed: u64,
) -> Result<(SolveResult, Vec<QiroStep>), Error> {
    config.validate()?;
    if graph.n() > config.n_max {
        return Err(Error::Capacity(format!(
            "graph has {} nodes, configured maximum is {}",
            graph.n(),
            config.n_max
        )));
    }
    let start = Instant::now();

    // Working copy labeled by position in the input graph.
    let mut current = IsingGraph::from_parts(
        graph.biases().to_vec(),
        graph.edges().to_vec(),
        graph.offset(),
    )?;
    let mut substitutions: Vec<Substitution> = Vec::new();
    let mut trace = Vec::new();
    let mut round = 0usize;

    while current.n() > config.min_size {
        let sim = QaoaSimulator::new(&current)?;
        let params = optimize_angles_on(&sim, config)?;
        let state = sim.state(&params);

        let (singles, pairs) = if config.exact_expectations {
            correlations_exact(&current, &state)
        } else {
            let counts = sample(&state, config.shots, subseed(seed, "qiro-round", round as u64))?;
            correlations_sampled(&current, &counts)
        };

        // Strongest correlation wins; single-point beats two-point on ties
        // and lower indices beat higher ones.
        let mut best_value = f64::NEG_INFINITY;
        let mut choice: Option<Substitution> = None;
        for (i, &v) in singles.iter().enumerate() {
            if v.abs() > best_value {
                best_value = v.abs();
                choice = Some(Substitution::Freeze {
                    node: current.labels()[i],
                    spin: sign_of(v),
                });
            }
        }
        for (e, &(i, j, _)) in current.edges().iter().enumerate() {
            let v = pairs[e];
            if v.abs() > best_value {
                best_value = v.abs();
                choice = Some(Substitution::Merge {
                    kept: current.labels()[i],
                    merged: current.labels()[j],
                    sign: sign_of(v),
                });
            }
        }
        let choice = choice.ok_or_else(|| Error::Internal("no correlation candidates".into()))?;

        current = apply_substitution(&current, &choice)?;
        trace.push(QiroStep {
            round,
            action: match &choice {
                Substitution::Freeze { node, spin } => QiroAction::Freeze {
                    node: *node,
                    spin: *spin as i8,
                },
                Substitution::Merge { kept, merged, sign } => QiroAction::Merge {
                    kept: *kept,
                    merged: *merged,
                    sign: *sign as i8,
                },
            },
            correlation: best_value,
            remaining_nodes: current.n(),
        });
        substitutions.push(choice);
        round += 1;
    }

    let base = brute_force(&current)?;

    // Unwind: seed spins from the base solution, then replay eliminations
    // backwards so merged nodes copy their keeper's final spin.
    let mut spins = vec![0.0f64; graph.n()];
    for (k, &label) in current.labels().iter().enumerate() {
        spins[label] = 1.0 - 2.0 * f64::from(base.assignment.bit(k));
    }
    for sub in substitutions.iter().rev() {
        match sub {
            Substitution::Freeze { node, spin } => spins[*node] = *spin,
            Substitution::Merge { kept, merged, sign } => spins[*merged] = sign * spins[*kept],
        }
    }
    let bits: Vec<u8> = spins
        .iter()
        .map(|&s| if s < 0.0 { 1u8 } else { 0u8 })
        .collect();
    let assignment = Assignment::from_bits(graph, bits)?;

    Ok((
        SolveResult {
            energy: assignment.energy(),
            assignment,
            iterations: round as u64,
            wall_seconds: start.elapsed().as_secs_f64(),
            solver: "qiro".into(),
            seed,
        },
        trace,
    ))
}

fn sign_of(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `<Z_i>` per node and `<Z_i Z_j>` per edge from exact amplitudes.
pub(crate) fn correlations_exact(
    graph: &IsingGraph,
    state: &StateVector,
) -> (Vec<f64>, Vec<f64>) {
    accumulate(
        graph,
        state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(b, a)| (b as u64, a.norm_sqr())),
    )
}

/// Correlations estimated from a shot histogram.
pub(crate) fn correlations_sampled(
    graph: &IsingGraph,
    counts: &crate::quantum::ShotCounts,
) -> (Vec<f64>, Vec<f64>) {
    let total = counts.total() as f64;
    accumulate(graph, counts.iter().map(|(b, c)| (b, c as f64 / total)))
}

fn accumulate<I: Iterator<Item = (u64, f64)>>(graph: &IsingGraph, dist: I) -> (Vec<f64>, Vec<f64>) {
    let n = graph.n();
    let mut singles = vec![0.0; n];
    let mut pairs = vec![0.0; graph.edges().len()];
    for (b, p) in dist {
        if p == 0.0 {
            continue;
        }
        for (i, s) in singles.iter_mut().enumerate() {
            *s += p * spin_of(b, i);
        }
        for (e, &(i, j, _)) in graph.edges().iter().enumerate() {
            pairs[e] += p * spin_of(b, i) * spin_of(b, j);
        }
    }
    (singles, pairs)
}

fn spin_of(basis: u64, qubit: usize) -> f64 {
    if (basis >> qubit) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Reduce the graph by one substitution, keeping labels pointed at the
/// original node indices.
fn apply_substitution(graph: &IsingGraph, sub: &Substitution) -> Result<IsingGraph, Error> {
    let n = graph.n();
    let label_pos = |label: usize| -> usize {
        graph
            .labels()
            .iter()
            .position(|&l| l == label)
            .expect("label present in current graph")
    };

    match sub {
        Substitution::Freeze { node, spin } => {
            let k = label_pos(*node);
            let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
            let position = position_map(n, &keep);
            let mut biases: Vec<f64> = keep.iter().map(|&i| graph.bias(i)).collect();
            let offset = graph.offset() + graph.bias(k) * spin;
            let mut edges = Vec::new();
            for &(i, j, w) in graph.edges() {
                if i == k {
                    biases[position[j]] += w * spin;
                } else if j == k {
                    biases[position[i]] += w * spin;
                } else {
                    edges.push((position[i], position[j], w));
                }
            }
            let labels: Vec<usize> = keep.iter().map(|&i| graph.labels()[i]).collect();
            IsingGraph::from_parts_labeled(biases, edges, offset, labels)
        }
        Substitution::Merge { kept, merged, sign } => {
            let ki = label_pos(*kept);
            let kj = label_pos(*merged);
            let keep: Vec<usize> = (0..n).filter(|&i| i != kj).collect();
            let position = position_map(n, &keep);
            let mut biases: Vec<f64> = keep.iter().map(|&i| graph.bias(i)).collect();
            biases[position[ki]] += sign * graph.bias(kj);
            let mut offset = graph.offset();
            let mut edges = Vec::new();
            for &(i, j, w) in graph.edges() {
                let touches_merged = i == kj || j == kj;
                if !touches_merged {
                    edges.push((position[i], position[j], w));
                    continue;
                }
                let other = if i == kj { j } else { i };
                if other == ki {
                    offset += sign * w;
                } else {
                    let (a, b) = (position[ki], position[other]);
                    edges.push((a.min(b), a.max(b), sign * w));
                }
            }
            let labels: Vec<usize> = keep.iter().map(|&i| graph.labels()[i]).collect();
            IsingGraph::from_parts_labeled(biases, edges, offset, labels)
        }
    }
}

fn position_map(n: usize, keep: &[usize]) -> Vec<usize> {
    let mut position = vec![usize::MAX; n];
    for (p, &i) in keep.iter().enumerate() {
        position[i] = p;
    }
    position
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::tests::random_graph;
    use crate::quantum::qaoa::qaoa_state;
    use crate::quantum::QaoaParams;
    use crate::rng::seeded;

    #[test]
    fn base_case_matches_brute_force() {
        let mut rng = seeded(151);
        let g = random_graph(&mut rng, 8, 0.4);
        let exact = brute_force(&g).unwrap();
        let (qiro, trace) = qiro_solve_traced(&g, &QiroConfig::default(), 1).unwrap();
        assert!(trace.is_empty());
        assert_eq!(qiro.assignment.bits(), exact.assignment.bits());
        assert_eq!(qiro.energy, exact.energy);
    }

    #[test]
    fn antiferromagnetic_pair_correlation_is_negative() {
        let g = IsingGraph::from_parts(vec![0.0, 0.0], vec![(0, 1, 1.0)], 0.0).unwrap();
        // Optimal single-layer angles concentrate the state on anti-aligned
        // strings, so the edge correlation turns strongly negative.
        let params = QaoaParams::new(vec![3.0 * std::f64::consts::FRAC_PI_4], vec![
            std::f64::consts::FRAC_PI_8,
        ])
        .unwrap();
        let state = qaoa_state(&g, &params).unwrap();
        let (_, pairs) = correlations_exact(&g, &state);
        assert!(pairs[0] < -0.9, "edge correlation {}", pairs[0]);
    }

    #[test]
    fn merge_reduces_and_recovers_pair_optimum() {
        // Triangle with one dominant antiferromagnetic coupling; the first
        // elimination must merge across that edge with opposite signs.
        let g = IsingGraph::from_parts(
            vec![0.0, 0.0, 0.0],
            vec![(0, 1, 2.0), (0, 2, 0.2), (1, 2, 0.2)],
            0.5,
        )
        .unwrap();
        let config = QiroConfig {
            min_size: 2,
            exact_expectations: true,
            ..QiroConfig::default()
        };
        let (result, trace) = qiro_solve_traced(&g, &config, 3).unwrap();
        assert_eq!(trace.len(), 1);
        match &trace[0].action {
            QiroAction::Merge { kept, merged, sign } => {
                assert_eq!((*kept, *merged), (0, 1));
                assert_eq!(*sign, -1);
            }
            other => panic!("expected a merge, got {other:?}"),
        }
        let exact = brute_force(&g).unwrap();
        assert!((result.energy - exact.energy).abs() < 1e-9);
    }

    #[test]
    fn strong_bias_gets_frozen() {
        // One dominant bias beats every pair correlation.
        let g = IsingGraph::from_parts(
            vec![5.0, 0.1, 0.0, 0.0],
            vec![(0, 1, 0.1), (1, 2, 0.1), (2, 3, 0.1)],
            0.0,
        )
        .unwrap();
        let config = QiroConfig {
            min_size: 3,
            exact_expectations: true,
            ..QiroConfig::default()
        };
        let (result, trace) = qiro_solve_traced(&g, &config, 7).unwrap();
        assert_eq!(trace.len(), 1);
        match &trace[0].action {
            QiroAction::Freeze { node, spin } => {
                assert_eq!(*node, 0);
                // Positive bias prefers spin -1.
                assert_eq!(*spin, -1);
            }
            other => panic!("expected a freeze, got {other:?}"),
        }
        let exact = brute_force(&g).unwrap();
        assert!((result.energy - exact.energy).abs() < 1e-9);
    }

    #[test]
    fn twelve_node_quality_and_termination() {
        let mut rng = seeded(157);
        let config = QiroConfig::default();
        let mut ratios = Vec::new();
        for seed in 0..20u64 {
            let g = random_graph(&mut rng, 12, 0.4);
            let (result, trace) = qiro_solve_traced(&g, &config, seed).unwrap();
            assert!(trace.len() <= 12 - config.min_size);
            let best = brute_force(&g).unwrap().energy;
            let worst = -brute_force(&negated(&g)).unwrap().energy;
            let range = worst - best;
            let ratio = if range.abs() < 1e-12 {
                1.0
            } else {
                (worst - result.energy) / range
            };
            assert!(result.energy >= best - 1e-9);
            ratios.push(ratio);
        }
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ratios[ratios.len() / 2];
        assert!(median >= 0.9, "median ratio {median}");
    }

    #[test]
    fn qiro_is_deterministic() {
        let mut rng = seeded(163);
        let g = random_graph(&mut rng, 12, 0.4);
        let a = qiro_solve(&g, &QiroConfig::default(), 11).unwrap();
        let b = qiro_solve(&g, &QiroConfig::default(), 11).unwrap();
        assert_eq!(a.assignment.bits(), b.assignment.bits());
        assert_eq!(a.energy, b.energy);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn oversized_graph_is_refused() {
        let g = IsingGraph::from_parts(vec![0.0; 17], vec![], 0.0).unwrap();
        assert!(matches!(
            qiro_solve(&g, &QiroConfig::default(), 0),
            Err(Error::Capacity(_))
        ));
    }

    fn negated(g: &IsingGraph) -> IsingGraph {
        IsingGraph::from_parts(
            g.biases().iter().map(|h| -h).collect(),
            g.edges().iter().map(|&(i, j, w)| (i, j, -w)).collect(),
            -g.offset(),
        )
        .unwrap()
    }
}
