//! End-to-end orchestration: compile, coarsen, solve coarse, refine down
//! the hierarchy, decode, and report.
//!
//! Refinement at each level repeatedly extracts a high-gain subproblem
//! (adaptive sampling over gain magnitudes), solves it with the recursive
//! quantum solver when it fits the simulator and with local search
//! otherwise, and writes the solution back only when the total energy
//! strictly improves. Three consecutive rejections or ten iterations end
//! a level.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classical::{brute_force, local_search, simulated_annealing, AnnealSchedule};
use crate::error::Error;
use crate::ising::{extract_subproblem, gain_at, gains, qubo_to_ising, Assignment, IsingGraph};
use crate::multilevel::{build_hierarchy, interpolate};
use crate::quantum::{qiro_solve, qiro_solve_traced, QiroConfig, QiroStep};
use crate::qubo::{compile, decode, sparsity_report, SparsityReport};
use crate::rng::{seeded, subseed};
use crate::ucp::{
    evaluate_schedule, CostReport, DemandSquareMode, MinDownMode, PenaltyFactors, Schedule,
    UcpInstance,
};

/// Nodes at or below this count are solved exactly at the coarsest level.
pub const COARSE_EXACT_LIMIT: usize = 20;

/// Full solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub penalties: PenaltyFactors,
    pub demand_square_mode: DemandSquareMode,
    pub min_down_mode: MinDownMode,
    /// Subproblem size H.
    pub subproblem_size: usize,
    /// Coarsest graph size m.
    pub coarsest_size: usize,
    /// Consecutive rejections that end a level.
    pub c_max: usize,
    /// Iteration cap per level.
    pub iter_max: usize,
    pub embed_dim: usize,
    pub embed_iters: usize,
    pub qiro: QiroConfig,
    /// Restarts for local search at the coarsest level and for subproblems
    /// too large to simulate.
    pub local_restarts: usize,
    /// Embed per-round elimination traces in the subproblem records.
    pub record_qiro_trace: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            penalties: PenaltyFactors::default(),
            demand_square_mode: DemandSquareMode::default(),
            min_down_mode: MinDownMode::default(),
            subproblem_size: 100,
            coarsest_size: 16,
            c_max: 3,
            iter_max: 10,
            embed_dim: 4,
            embed_iters: 20,
            qiro: QiroConfig::default(),
            local_restarts: 50,
            record_qiro_trace: false,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Desk-scale preset: subproblems sized to fit the state-vector
    /// simulator, so refinement actually exercises the quantum path.
    pub fn desk() -> Self {
        PipelineConfig {
            subproblem_size: 14,
            ..PipelineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.penalties.validate()?;
        if self.subproblem_size < 2 {
            return Err(Error::Config("subproblem size must be >= 2".into()));
        }
        if self.coarsest_size < 2 {
            return Err(Error::Config("coarsest size must be >= 2".into()));
        }
        if self.c_max < 1 || self.iter_max < 1 {
            return Err(Error::Config(
                "refinement limits must be >= 1".into(),
            ));
        }
        if self.local_restarts < 1 {
            return Err(Error::Config("local restarts must be >= 1".into()));
        }
        self.qiro.validate()
    }
}

/// Coarsest-level solve record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoarseRecord {
    pub level: usize,
    pub nodes: usize,
    pub solver: String,
    pub energy: f64,
}

/// Per-level refinement record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub nodes: usize,
    pub energy_in: f64,
    pub energy_out: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub iterations: usize,
}

/// One subproblem solve inside a level.
#[derive(Debug, Clone, Serialize)]
pub struct SubproblemRecord {
    pub level: usize,
    pub iteration: usize,
    pub size: usize,
    pub solver: String,
    pub energy_before: f64,
    pub energy_after: f64,
    pub accepted: bool,
    pub seconds: f64,
    /// Per-round elimination trace, present when configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qiro_trace: Option<Vec<QiroStep>>,
}

/// One baseline solver outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRecord {
    pub solver: String,
    /// `ok` or `not_run` (with the reason in `note`).
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub energy: Option<f64>,
    pub costs: Option<CostReport>,
    pub seconds: f64,
}

/// Wall-clock breakdown.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub compile_seconds: f64,
    pub hierarchy_seconds: f64,
    pub coarse_seconds: f64,
    pub refine_seconds: f64,
}

/// Complete run record; serializes to the report document.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub seed: u64,
    pub accept_metric: String,
    pub n_variables: usize,
    pub sparsity: SparsityReport,
    pub hierarchy_level_sizes: Vec<usize>,
    pub coarse: Option<CoarseRecord>,
    pub levels: Vec<LevelRecord>,
    pub subproblems: Vec<SubproblemRecord>,
    pub final_energy: f64,
    pub schedule: Schedule,
    pub costs: CostReport,
    pub baselines: Vec<BaselineRecord>,
    pub timings: Timings,
}

impl RunReport {
    /// Zero every wall-clock field; reports of repeated seeded runs are
    /// then identical.
    pub fn zero_timings(&mut self) {
        self.timings = Timings::default();
        for sub in &mut self.subproblems {
            sub.seconds = 0.0;
        }
        for b in &mut self.baselines {
            b.seconds = 0.0;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Refinement outcome for one level.
#[derive(Debug)]
pub struct RefineOutcome {
    pub assignment: Assignment,
    pub record: LevelRecord,
    pub subproblems: Vec<SubproblemRecord>,
}

/// Pick `min(h, n)` distinct nodes, mostly greedily by gain magnitude with
/// occasional weighted exploration; nodes from the previous rejected
/// selection weigh half.
fn select_nodes(
    gain_values: &[f64],
    h: usize,
    previous_rejected: Option<&[usize]>,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<usize> {
    use rand::Rng;
    let n = gain_values.len();
    let take = h.min(n);
    let mut weight: Vec<f64> = gain_values.iter().map(|g| g.abs() + 1e-9).collect();
    if let Some(previous) = previous_rejected {
        for &i in previous {
            weight[i] *= 0.5;
        }
    }
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| weight[b].partial_cmp(&weight[a]).unwrap().then(a.cmp(&b)));

    let mut chosen = vec![false; n];
    let mut selected = Vec::with_capacity(take);
    let mut cursor = 0usize;
    for _ in 0..take {
        let greedy = rng.gen_bool(0.8);
        let pick = if greedy {
            while chosen[ranked[cursor]] {
                cursor += 1;
            }
            ranked[cursor]
        } else {
            let total: f64 = (0..n).filter(|&i| !chosen[i]).map(|i| weight[i]).sum();
            let mut u = rng.gen_range(0.0..total);
            let mut pick = None;
            for i in 0..n {
                if chosen[i] {
                    continue;
                }
                u -= weight[i];
                if u <= 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| ranked.iter().copied().rfind(|&i| !chosen[i]).unwrap())
        };
        chosen[pick] = true;
        selected.push(pick);
    }
    selected.sort_unstable();
    selected
}

/// Refine one level: gain-ranked subproblem extraction with
/// accept-only-if-improving write-back.
pub fn refine_level(
    graph: &IsingGraph,
    assignment: Assignment,
    config: &PipelineConfig,
    level: usize,
    seed: u64,
) -> Result<RefineOutcome, Error> {
    config.validate()?;
    let mut assignment = assignment;
    let mut gain_values = gains(graph, &assignment)?;
    let energy_in = assignment.energy();

    let mut rng = seeded(subseed(seed, "refine-select", level as u64));
    let mut previous_rejected: Option<Vec<usize>> = None;
    let mut consecutive_rejects = 0usize;
    let mut iteration = 0usize;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut subproblems = Vec::new();

    while consecutive_rejects < config.c_max && iteration < config.iter_max {
        let nodes = select_nodes(
            &gain_values,
            config.subproblem_size,
            previous_rejected.as_deref(),
            &mut rng,
        );
        let sub = extract_subproblem(graph, &assignment, &nodes)?;
        let sub_seed = subseed(seed, "subproblem", (level * 1000 + iteration) as u64);
        let t0 = Instant::now();
        let (solver, result, qiro_trace) = if sub.n() <= config.qiro.n_max {
            if config.record_qiro_trace {
                let (result, trace) = qiro_solve_traced(&sub, &config.qiro, sub_seed)?;
                ("qiro", result, Some(trace))
            } else {
                ("qiro", qiro_solve(&sub, &config.qiro, sub_seed)?, None)
            }
        } else {
            (
                "local_search",
                local_search(&sub, config.local_restarts, sub_seed)?,
                None,
            )
        };
        let seconds = t0.elapsed().as_secs_f64();

        let energy_before = assignment.energy();
        let improves = result.energy < energy_before - 1e-9 * (1.0 + energy_before.abs());
        if improves {
            let old_bits: Vec<u8> = nodes.iter().map(|&u| assignment.bit(u)).collect();
            assignment.write_subset(graph, &nodes, result.assignment.bits());
            // Refresh gains around every flipped node.
            let mut touched: Vec<usize> = Vec::new();
            for (k, &node) in nodes.iter().enumerate() {
                if old_bits[k] != result.assignment.bit(k) {
                    touched.push(node);
                    for &(neighbor, _) in graph.neighbors(node) {
                        touched.push(neighbor);
                    }
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &i in &touched {
                gain_values[i] = gain_at(graph, &assignment, i);
            }
            consecutive_rejects = 0;
            previous_rejected = None;
            accepted += 1;
        } else {
            consecutive_rejects += 1;
            previous_rejected = Some(nodes.clone());
            rejected += 1;
        }
        subproblems.push(SubproblemRecord {
            level,
            iteration,
            size: sub.n(),
            solver: solver.into(),
            energy_before,
            energy_after: assignment.energy(),
            accepted: improves,
            seconds,
            qiro_trace,
        });
        iteration += 1;
    }

    let record = LevelRecord {
        level,
        nodes: graph.n(),
        energy_in,
        energy_out: assignment.energy(),
        accepted,
        rejected,
        iterations: iteration,
    };
    Ok(RefineOutcome {
        assignment,
        record,
        subproblems,
    })
}

/// Run the full pipeline on an instance.
pub fn solve_pipeline(instance: &UcpInstance, config: &PipelineConfig) -> Result<RunReport, Error> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    instance.validate().map_err(|e| e.in_stage("instance"))?;
    let total_start = Instant::now();
    let seed = config.seed;

    let t = Instant::now();
    let qubo = compile(
        instance,
        &config.penalties,
        config.demand_square_mode,
        config.min_down_mode,
    )
    .map_err(|e| e.in_stage("compile"))?;
    let sparsity = sparsity_report(&qubo);
    let graph = qubo_to_ising(&qubo);
    let compile_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let hierarchy = build_hierarchy(
        &graph,
        config.coarsest_size,
        config.embed_dim,
        config.embed_iters,
        subseed(seed, "hierarchy", 0),
    )
    .map_err(|e| e.in_stage("coarsening"))?;
    let hierarchy_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let coarsest = hierarchy.coarsest();
    let coarse_result = if coarsest.n() <= COARSE_EXACT_LIMIT {
        brute_force(coarsest)
    } else {
        local_search(coarsest, config.local_restarts, subseed(seed, "coarse", 0))
    }
    .map_err(|e| e.in_stage("coarse solve"))?;
    let coarse = CoarseRecord {
        level: hierarchy.n_levels() - 1,
        nodes: coarsest.n(),
        solver: coarse_result.solver.clone(),
        energy: coarse_result.energy,
    };
    let coarse_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut assignment = coarse_result.assignment;
    let mut levels = Vec::new();
    let mut subproblems = Vec::new();
    for l in (0..hierarchy.n_levels() - 1).rev() {
        assignment = interpolate(hierarchy.level(l), hierarchy.matching(l), &assignment)
            .map_err(|e| e.in_stage("interpolation"))?;
        let outcome = refine_level(
            hierarchy.level(l),
            assignment,
            config,
            l,
            subseed(seed, "level", l as u64),
        )
        .map_err(|e| e.in_stage("refinement"))?;
        assignment = outcome.assignment;
        levels.push(outcome.record);
        subproblems.extend(outcome.subproblems);
    }
    let refine_seconds = t.elapsed().as_secs_f64();

    let varmap = qubo.varmap.as_ref().expect("compiled problems carry a map");
    let schedule = decode(varmap, assignment.bits()).map_err(|e| e.in_stage("decode"))?;
    let costs = evaluate_schedule(
        instance,
        &schedule,
        &config.penalties,
        config.demand_square_mode,
        config.min_down_mode,
    )
    .map_err(|e| e.in_stage("evaluation"))?;

    Ok(RunReport {
        config: config.clone(),
        seed,
        accept_metric: "energy".into(),
        n_variables: qubo.n,
        sparsity,
        hierarchy_level_sizes: hierarchy.level_sizes(),
        coarse: Some(coarse),
        levels,
        subproblems,
        final_energy: assignment.energy(),
        schedule,
        costs,
        baselines: Vec::new(),
        timings: Timings {
            total_seconds: total_start.elapsed().as_secs_f64(),
            compile_seconds,
            hierarchy_seconds,
            coarse_seconds,
            refine_seconds,
        },
    })
}

/// Run the classical baselines (annealing always, exhaustive search when
/// the instance is small enough) in the same report schema.
pub fn run_baselines(instance: &UcpInstance, config: &PipelineConfig) -> Result<RunReport, Error> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    instance.validate().map_err(|e| e.in_stage("instance"))?;
    let total_start = Instant::now();
    let seed = config.seed;

    let qubo = compile(
        instance,
        &config.penalties,
        config.demand_square_mode,
        config.min_down_mode,
    )
    .map_err(|e| e.in_stage("compile"))?;
    let sparsity = sparsity_report(&qubo);
    let graph = qubo_to_ising(&qubo);
    let varmap = qubo.varmap.as_ref().expect("compiled problems carry a map");

    let evaluate = |bits: &[u8]| -> Result<(Schedule, CostReport), Error> {
        let schedule = decode(varmap, bits)?;
        let costs = evaluate_schedule(
            instance,
            &schedule,
            &config.penalties,
            config.demand_square_mode,
            config.min_down_mode,
        )?;
        Ok((schedule, costs))
    };

    let mut baselines = Vec::new();

    let t = Instant::now();
    let sa_schedule = AnnealSchedule::default_for(&graph, seed);
    let sa = simulated_annealing(&graph, &sa_schedule, subseed(seed, "baseline-sa", 0))
        .map_err(|e| e.in_stage("annealing"))?;
    let (sa_sched, sa_costs) = evaluate(sa.assignment.bits())?;
    baselines.push(BaselineRecord {
        solver: "simulated_annealing".into(),
        status: "ok".into(),
        note: None,
        energy: Some(sa.energy),
        costs: Some(sa_costs.clone()),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let mut exact: Option<(Schedule, CostReport, f64)> = None;
    if graph.n() <= crate::classical::BRUTE_FORCE_LIMIT {
        let bf = brute_force(&graph).map_err(|e| e.in_stage("exhaustive"))?;
        let (sched, costs) = evaluate(bf.assignment.bits())?;
        baselines.push(BaselineRecord {
            solver: "brute_force".into(),
            status: "ok".into(),
            note: None,
            energy: Some(bf.energy),
            costs: Some(costs.clone()),
            seconds: t.elapsed().as_secs_f64(),
        });
        exact = Some((sched, costs, bf.energy));
    } else {
        baselines.push(BaselineRecord {
            solver: "brute_force".into(),
            status: "not_run".into(),
            note: Some(format!(
                "{} variables exceed the exhaustive limit of {}",
                graph.n(),
                crate::classical::BRUTE_FORCE_LIMIT
            )),
            energy: None,
            costs: None,
            seconds: 0.0,
        });
    }

    // Report the best available baseline as the headline result.
    let (schedule, costs, final_energy) = match exact {
        Some(x) => x,
        None => (sa_sched, sa_costs, sa.energy),
    };

    Ok(RunReport {
        config: config.clone(),
        seed,
        accept_metric: "energy".into(),
        n_variables: qubo.n,
        sparsity,
        hierarchy_level_sizes: vec![graph.n()],
        coarse: None,
        levels: Vec::new(),
        subproblems: Vec::new(),
        final_energy,
        schedule,
        costs,
        baselines,
        timings: Timings {
            total_seconds: total_start.elapsed().as_secs_f64(),
            ..Timings::default()
        },
    })
}
