//! Classical optimizers: exhaustive brute force, multi-restart 1-flip
//! descent, and simulated annealing.
//!
//! Brute force doubles as the exactness oracle for every other solver and
//! as the base case of the recursive quantum solver. The local search
//! fills the role of an external max-cut heuristic for coarsest-level
//! solves without pulling in a dependency.

use std::time::Instant;

use rand::Rng;

use crate::error::Error;
use crate::ising::{flip_delta, gains, Assignment, IsingGraph};
use crate::rng::{seeded, subseed};

/// Largest node count brute force will enumerate (2^24 states).
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Geometric cooling schedule.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnnealSchedule {
    pub t0: f64,
    pub t1: f64,
    pub sweeps: usize,
    pub moves_per_sweep: usize,
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.t0 > self.t1 && self.t1 > 0.0) {
            return Err(Error::Config(format!(
                "anneal schedule requires t0 > t1 > 0, got t0={} t1={}",
                self.t0, self.t1
            )));
        }
        if self.sweeps < 1 {
            return Err(Error::Config("anneal schedule requires sweeps >= 1".into()));
        }
        if self.moves_per_sweep < 1 {
            return Err(Error::Config(
                "anneal schedule requires moves_per_sweep >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Scale-aware default: the initial temperature is the largest flip
    /// magnitude seen on a random probe assignment.
    pub fn default_for(graph: &IsingGraph, seed: u64) -> Self {
        let mut rng = seeded(subseed(seed, "anneal-probe", 0));
        let bits: Vec<u8> = (0..graph.n()).map(|_| rng.gen_range(0..=1)).collect();
        let probe = Assignment::from_bits(graph, bits).expect("probe sized to graph");
        let mut t0 = 1e-9f64;
        for i in 0..graph.n() {
            t0 = t0.max(flip_delta(graph, &probe, i).expect("index in range").abs());
        }
        AnnealSchedule {
            t0,
            t1: 1e-3 * t0,
            sweeps: 200,
            moves_per_sweep: graph.n().max(1),
        }
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub assignment: Assignment,
    pub energy: f64,
    pub iterations: u64,
    pub wall_seconds: f64,
    pub solver: String,
    pub seed: u64,
}

/// Exact minimizer by Gray-code enumeration of all `2^n` assignments.
///
/// Ties resolve to the lexicographically smallest bit string. The cached
/// incremental energy is re-synced periodically and every candidate
/// optimum is re-evaluated exactly, so the result does not drift.
pub fn brute_force(graph: &IsingGraph) -> Result<SolveResult, Error> {
    let start = Instant::now();
    let n = graph.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity(format!(
            "brute force handles at most {BRUTE_FORCE_LIMIT} nodes, got {n}"
        )));
    }

    let mut current = Assignment::zeros(graph);
    let mut best_bits = current.bits().to_vec();
    let mut best_energy = current.energy();

    let total: u64 = 1u64 << n;
    for k in 1..total {
        let i = k.trailing_zeros() as usize;
        current.flip(graph, i);
        if k % 4096 == 0 {
            current.resync_energy(graph);
        }
        let margin = 1e-9 * (1.0 + best_energy.abs());
        if current.energy() <= best_energy + margin {
            let exact = graph.energy(current.bits())?;
            let tie = 1e-12 * (1.0 + best_energy.abs());
            if exact < best_energy - tie
                || ((exact - best_energy).abs() <= tie && current.bits() < best_bits.as_slice())
            {
                best_energy = exact;
                best_bits = current.bits().to_vec();
            }
        }
    }

    let assignment = Assignment::from_bits(graph, best_bits)?;
    Ok(SolveResult {
        energy: assignment.energy(),
        assignment,
        iterations: total,
        wall_seconds: start.elapsed().as_secs_f64(),
        solver: "brute_force".into(),
        seed: 0,
    })
}

/// Random kicks applied after each descent converges.
const PLATEAU_KICKS: usize = 3;
const KICK_FLIPS: usize = 2;

/// Multi-restart steepest 1-flip descent with plateau kicks.
///
/// Every returned assignment is a strict 1-flip local optimum; the best
/// one over all restarts wins. Deterministic for a fixed seed.
pub fn local_search(graph: &IsingGraph, restarts: usize, seed: u64) -> Result<SolveResult, Error> {
    if restarts < 1 {
        return Err(Error::Config("local search requires restarts >= 1".into()));
    }
    let start = Instant::now();
    let n = graph.n();
    let mut best: Option<(Vec<u8>, f64)> = None;
    let mut iterations: u64 = 0;

    for r in 0..restarts {
        let mut rng = seeded(subseed(seed, "local-restart", r as u64));
        let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let mut current = Assignment::from_bits(graph, bits)?;
        let mut g = gains(graph, &current)?;

        let mut local_best: Option<(Vec<u8>, f64)> = None;
        for kick in 0..=PLATEAU_KICKS {
            if kick > 0 && n > 0 {
                for _ in 0..KICK_FLIPS {
                    let i = rng.gen_range(0..n);
                    apply_flip(graph, &mut current, &mut g, i);
                }
            }
            iterations += descend(graph, &mut current, &mut g);
            current.resync_energy(graph);
            let better = match &local_best {
                None => true,
                Some((_, e)) => current.energy() < *e,
            };
            if better {
                local_best = Some((current.bits().to_vec(), current.energy()));
            }
        }

        let (bits, energy) = local_best.expect("at least one descent ran");
        let better = match &best {
            None => true,
            Some((_, e)) => energy < *e,
        };
        if better {
            best = Some((bits, energy));
        }
    }

    let (bits, _) = best.expect("restarts >= 1");
    let assignment = Assignment::from_bits(graph, bits)?;
    Ok(SolveResult {
        energy: assignment.energy(),
        assignment,
        iterations,
        wall_seconds: start.elapsed().as_secs_f64(),
        solver: "local_search".into(),
        seed,
    })
}

/// Flip node `i`, keeping the gain vector in sync.
fn apply_flip(graph: &IsingGraph, a: &mut Assignment, g: &mut [f64], i: usize) {
    let si_old = a.spin(i);
    for &(j, w) in graph.neighbors(i) {
        g[j] -= 2.0 * w * si_old * a.spin(j);
    }
    g[i] = -g[i];
    a.flip(graph, i);
}

/// Steepest descent until no flip strictly improves; returns steps taken.
fn descend(graph: &IsingGraph, a: &mut Assignment, g: &mut [f64]) -> u64 {
    let mut steps = 0;
    loop {
        let mut best_gain = 1e-12;
        let mut best_node = None;
        for (i, &gi) in g.iter().enumerate() {
            if gi > best_gain {
                best_gain = gi;
                best_node = Some(i);
            }
        }
        match best_node {
            Some(i) => {
                apply_flip(graph, a, g, i);
                steps += 1;
            }
            None => return steps,
        }
    }
}

/// Metropolis single-flip annealing with geometric cooling.
pub fn simulated_annealing(
    graph: &IsingGraph,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<SolveResult, Error> {
    let (result, _) = simulated_annealing_from(graph, schedule, seed, None)?;
    Ok(result)
}

/// Annealing with an optional warm start; also returns the best-seen
/// energy at the end of every sweep.
pub fn simulated_annealing_from(
    graph: &IsingGraph,
    schedule: &AnnealSchedule,
    seed: u64,
    start_from: Option<Assignment>,
) -> Result<(SolveResult, Vec<f64>), Error> {
    schedule.validate()?;
    let start = Instant::now();
    let n = graph.n();
    let mut rng = seeded(subseed(seed, "anneal", 0));

    let mut current = match start_from {
        Some(a) => {
            if a.bits().len() != n {
                return Err(Error::Dimension("start does not match graph".into()));
            }
            a
        }
        None => {
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
            Assignment::from_bits(graph, bits)?
        }
    };
    let mut best_bits = current.bits().to_vec();
    let mut best_energy = current.energy();
    let mut trace = Vec::with_capacity(schedule.sweeps);
    let mut iterations: u64 = 0;

    let cooling = if schedule.sweeps > 1 {
        (schedule.t1 / schedule.t0).powf(1.0 / (schedule.sweeps as f64 - 1.0))
    } else {
        1.0
    };
    let mut temperature = schedule.t0;

    for _ in 0..schedule.sweeps {
        for _ in 0..schedule.moves_per_sweep {
            iterations += 1;
            if n == 0 {
                continue;
            }
            let i = rng.gen_range(0..n);
            let delta = flip_delta(graph, &current, i)?;
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
            if accept {
                current.flip(graph, i);
                if current.energy() < best_energy {
                    best_energy = current.energy();
                    best_bits.copy_from_slice(current.bits());
                }
            }
        }
        current.resync_energy(graph);
        if current.energy() < best_energy {
            best_energy = current.energy();
            best_bits.copy_from_slice(current.bits());
        }
        trace.push(best_energy);
        temperature *= cooling;
    }

    let assignment = Assignment::from_bits(graph, best_bits)?;
    Ok((
        SolveResult {
            energy: assignment.energy(),
            assignment,
            iterations,
            wall_seconds: start.elapsed().as_secs_f64(),
            solver: "simulated_annealing".into(),
            seed,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::tests::{random_assignment, random_graph};
    use crate::rng::seeded;

    #[test]
    fn brute_force_empty_graph_returns_offset() {
        let g = IsingGraph::from_parts(vec![], vec![], 3.0).unwrap();
        let r = brute_force(&g).unwrap();
        assert_eq!(r.energy, 3.0);
        assert!(r.assignment.bits().is_empty());
    }

    #[test]
    fn brute_force_antiferromagnetic_pair_breaks_tie_lexicographically() {
        let g = IsingGraph::from_parts(vec![0.0, 0.0], vec![(0, 1, 1.0)], 0.5).unwrap();
        let r = brute_force(&g).unwrap();
        assert!((r.energy - (0.5 - 1.0)).abs() < 1e-12);
        assert_eq!(r.assignment.bits(), &[0, 1]);
    }

    #[test]
    fn brute_force_beats_random_sampling() {
        let mut rng = seeded(31);
        for _ in 0..5 {
            let g = random_graph(&mut rng, 10, 0.4);
            let opt = brute_force(&g).unwrap().energy;
            for _ in 0..10_000 {
                let a = random_assignment(&mut rng, &g);
                assert!(a.energy() >= opt - 1e-9);
            }
        }
    }

    #[test]
    fn brute_force_refuses_oversized_graphs() {
        let g = IsingGraph::from_parts(vec![0.0; 25], vec![], 0.0).unwrap();
        assert!(matches!(brute_force(&g), Err(Error::Capacity(_))));
    }

    #[test]
    fn brute_force_energy_matches_recomputation() {
        let mut rng = seeded(37);
        for _ in 0..10 {
            let g = random_graph(&mut rng, 12, 0.35);
            let r = brute_force(&g).unwrap();
            assert!((r.energy - g.energy(r.assignment.bits()).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn local_search_results_are_one_flip_optimal() {
        let mut rng = seeded(41);
        for _ in 0..10 {
            let g = random_graph(&mut rng, 20, 0.3);
            let r = local_search(&g, 5, 7).unwrap();
            for i in 0..g.n() {
                assert!(
                    flip_delta(&g, &r.assignment, i).unwrap() >= -1e-9,
                    "node {i} still improves"
                );
            }
        }
    }

    #[test]
    fn local_search_finds_all_off_optimum_when_flips_worsen() {
        // Negative biases make spin +1 (bit 0) optimal everywhere.
        let g = IsingGraph::from_parts(vec![-1.0; 12], vec![], 0.0).unwrap();
        let r = local_search(&g, 3, 11).unwrap();
        assert_eq!(r.assignment.bits(), &[0; 12]);
        assert_eq!(r.energy, -12.0);
    }

    #[test]
    fn local_search_near_optimal_with_restarts() {
        let mut rng = seeded(43);
        let mut hits = 0;
        let total = 100;
        for _ in 0..total {
            let g = random_graph(&mut rng, 12, 0.4);
            let opt = brute_force(&g).unwrap();
            let worst = -brute_force(&negated(&g)).unwrap().energy;
            let ls = local_search(&g, 50, 3).unwrap();
            let range = worst - opt.energy;
            let ratio = if range.abs() < 1e-12 {
                1.0
            } else {
                (worst - ls.energy) / range
            };
            if ratio >= 0.98 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/{total} runs within 2% of optimum");
    }

    #[test]
    fn local_search_is_deterministic() {
        let mut rng = seeded(47);
        let g = random_graph(&mut rng, 16, 0.4);
        let a = local_search(&g, 10, 99).unwrap();
        let b = local_search(&g, 10, 99).unwrap();
        assert_eq!(a.assignment.bits(), b.assignment.bits());
        assert_eq!(a.energy, b.energy);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn annealing_frozen_chain_keeps_local_optimum_start() {
        let g = IsingGraph::from_parts(vec![-1.0; 8], vec![], 0.0).unwrap();
        let start = Assignment::zeros(&g); // strict local optimum
        let schedule = AnnealSchedule {
            t0: 1e-9,
            t1: 1e-12,
            sweeps: 10,
            moves_per_sweep: 8,
        };
        let (r, _) = simulated_annealing_from(&g, &schedule, 5, Some(start.clone())).unwrap();
        assert_eq!(r.assignment.bits(), start.bits());
    }

    #[test]
    fn annealing_finds_optimum_with_generous_schedule() {
        let mut rng = seeded(53);
        let mut hits = 0;
        let total = 100;
        for k in 0..total {
            let g = random_graph(&mut rng, 10, 0.4);
            let opt = brute_force(&g).unwrap().energy;
            let mut schedule = AnnealSchedule::default_for(&g, k);
            schedule.sweeps = 300;
            schedule.moves_per_sweep = 2 * g.n();
            let r = simulated_annealing(&g, &schedule, k).unwrap();
            if (r.energy - opt).abs() <= 1e-9 * (1.0 + opt.abs()) {
                hits += 1;
            }
        }
        assert!(hits >= 90, "only {hits}/{total} runs reached the optimum");
    }

    #[test]
    fn annealing_best_seen_trace_is_non_increasing() {
        let mut rng = seeded(59);
        let g = random_graph(&mut rng, 14, 0.4);
        let schedule = AnnealSchedule::default_for(&g, 1);
        let (_, trace) = simulated_annealing_from(&g, &schedule, 1, None).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn annealing_is_deterministic() {
        let mut rng = seeded(61);
        let g = random_graph(&mut rng, 12, 0.4);
        let schedule = AnnealSchedule::default_for(&g, 2);
        let a = simulated_annealing(&g, &schedule, 17).unwrap();
        let b = simulated_annealing(&g, &schedule, 17).unwrap();
        assert_eq!(a.assignment.bits(), b.assignment.bits());
        assert_eq!(a.energy, b.energy);
    }

    #[test]
    fn annealing_rejects_bad_schedule() {
        let g = IsingGraph::from_parts(vec![0.0], vec![], 0.0).unwrap();
        let bad = AnnealSchedule {
            t0: 1.0,
            t1: 2.0,
            sweeps: 5,
            moves_per_sweep: 1,
        };
        assert!(matches!(
            simulated_annealing(&g, &bad, 0),
            Err(Error::Config(_))
        ));
    }

    /// Same graph with all couplings and biases negated; its minimum is the
    /// negated maximum of the original.
    fn negated(g: &IsingGraph) -> IsingGraph {
        IsingGraph::from_parts(
            g.biases().iter().map(|h| -h).collect(),
            g.edges().iter().map(|&(i, j, w)| (i, j, -w)).collect(),
            -g.offset(),
            )
        .unwrap()
    }
}
