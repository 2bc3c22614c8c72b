//! State-vector QAOA simulation and recursive correlation-based variable
//! elimination.

mod nelder_mead;
mod qaoa;
mod qiro;

pub use nelder_mead::NelderMead;
pub use qaoa::{
    cost_diagonal, optimize_angles, qaoa_expectation, qaoa_state, sample, QaoaSimulator,
    StateVector, MAX_STATE_QUBITS,
};
pub use qiro::{qiro_solve, qiro_solve_traced, QiroStep};

use std::collections::BTreeMap;

use crate::error::Error;

/// Circuit angles: one cost angle and one mixer angle per layer.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self, Error> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(Error::Config(
                "angle vectors must be non-empty and of equal length".into(),
            ));
        }
        if gammas.iter().chain(&betas).any(|a| !a.is_finite()) {
            return Err(Error::Config("angles must be finite".into()));
        }
        Ok(QaoaParams { gammas, betas })
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    /// Zero angles for `p` layers; the circuit is then the identity on the
    /// uniform superposition.
    pub fn zeros(p: usize) -> Self {
        QaoaParams {
            gammas: vec![0.0; p],
            betas: vec![0.0; p],
        }
    }
}

/// Histogram of measured bitstrings.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotCounts {
    n_qubits: usize,
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl ShotCounts {
    pub(crate) fn new(n_qubits: usize, counts: BTreeMap<u64, u64>) -> Self {
        let total = counts.values().sum();
        ShotCounts {
            n_qubits,
            counts,
            total,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, basis_state: u64) -> u64 {
        self.counts.get(&basis_state).copied().unwrap_or(0)
    }

    /// Raw `(basis_state, count)` entries in basis order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&b, &c)| (b, c))
    }

    /// Render a basis state as a bitstring of length `n_qubits`, qubit 0
    /// leftmost.
    pub fn bitstring(&self, basis_state: u64) -> String {
        (0..self.n_qubits)
            .map(|q| if (basis_state >> q) & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

/// Configuration for the recursive solver.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QiroConfig {
    /// Below this size the remaining problem is solved exactly.
    pub min_size: usize,
    /// Largest subproblem simulated as a state vector.
    pub n_max: usize,
    /// Measurement shots per correlation estimate.
    pub shots: u64,
    /// Total expectation evaluations the angle optimizer may spend.
    pub optimizer_budget: usize,
    /// Circuit layers.
    pub layers: usize,
    /// Estimate correlations from amplitudes instead of sampled shots.
    pub exact_expectations: bool,
}

impl Default for QiroConfig {
    fn default() -> Self {
        QiroConfig {
            min_size: 10,
            n_max: 16,
            shots: 10_240,
            optimizer_budget: 200,
            layers: 1,
            exact_expectations: false,
        }
    }
}

impl QiroConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(2 <= self.min_size && self.min_size <= self.n_max && self.n_max <= MAX_STATE_QUBITS) {
            return Err(Error::Config(format!(
                "need 2 <= min_size <= n_max <= {MAX_STATE_QUBITS}, got min_size={} n_max={}",
                self.min_size, self.n_max
            )));
        }
        if self.shots < 1 {
            return Err(Error::Config("shots must be >= 1".into()));
        }
        if self.layers < 1 {
            return Err(Error::Config("layers must be >= 1".into()));
        }
        Ok(())
    }
}
