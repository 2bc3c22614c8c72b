//! Multilevel hybrid solver for the unit commitment problem.
//!
//! The crate compiles unit commitment instances into an explicit QUBO,
//! maps the QUBO onto an Ising graph, coarsens that graph into a hierarchy
//! by sphere embedding and nearest-neighbor pairing, solves the coarsest
//! level classically, and refines level by level by extracting high-gain
//! subproblems that are solved with a state-vector QAOA simulator under
//! recursive correlation-based variable elimination.
//!
//! Modules mirror the stages:
//!
//! * [`ucp`] — instance model, parsing, synthesis, schedule cost evaluation
//! * [`qubo`] — symbolic expansion of the penalized objective into a QUBO
//! * [`ising`] — Ising graph, energies, gains, subproblem extraction
//! * [`multilevel`] — embedding, matching, contraction, interpolation
//! * [`classical`] — brute force, multi-restart local search, annealing
//! * [`quantum`] — QAOA state vectors, angle optimization, QIRO
//! * [`pipeline`] — end-to-end orchestration, configuration, reporting

pub mod classical;
pub mod error;
pub mod ising;
pub mod multilevel;
pub mod pipeline;
pub mod quantum;
pub mod qubo;
pub mod rng;
pub mod ucp;

pub use classical::{AnnealSchedule, SolveResult};
pub use error::Error;
pub use ising::{Assignment, IsingGraph};
pub use multilevel::{Embedding, Hierarchy, Matching};
pub use pipeline::{PipelineConfig, RunReport};
pub use quantum::{QaoaParams, QiroConfig, ShotCounts};
pub use qubo::{QuboProblem, VariableMap};
pub use ucp::{
    CostReport, DemandSquareMode, MinDownMode, PenaltyFactors, Schedule, UcpInstance, UnitSpec,
};
