//! QAOA state-vector simulation: cost diagonal, circuit application,
//! expectation values, measurement sampling, and angle optimization.

use num_complex::Complex64;
use rand::Rng;

use crate::error::Error;
use crate::ising::IsingGraph;
use crate::quantum::{NelderMead, QaoaParams, QiroConfig, ShotCounts};
use crate::rng::{seeded, subseed};

/// Hard cap on simulated qubits (amplitude memory doubles per qubit).
pub const MAX_STATE_QUBITS: usize = 26;

/// `2^n` complex amplitudes; qubit `q` is bit `q` of the basis index.
#[derive(Debug, Clone)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Uniform superposition over `n` qubits.
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        StateVector {
            n_qubits: n,
            amplitudes: vec![amp; dim],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn probability(&self, basis_state: usize) -> f64 {
        self.amplitudes[basis_state].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Multiply each amplitude by `exp(-i angle * diag[b])`.
    fn apply_diagonal_phase(&mut self, angle: f64, diag: &[f64]) {
        debug_assert_eq!(diag.len(), self.amplitudes.len());
        for (amp, d) in self.amplitudes.iter_mut().zip(diag) {
            let (sin, cos) = (-angle * d).sin_cos();
            *amp *= Complex64::new(cos, sin);
        }
    }

    /// Apply `exp(-i angle X)` on every qubit.
    fn apply_uniform_mixer(&mut self, angle: f64) {
        let (sin, cos) = angle.sin_cos();
        let c = Complex64::new(cos, 0.0);
        let ms = Complex64::new(0.0, -sin);
        for q in 0..self.n_qubits {
            let stride = 1usize << q;
            let mut base = 0usize;
            while base < self.amplitudes.len() {
                for lo in base..base + stride {
                    let hi = lo + stride;
                    let a = self.amplitudes[lo];
                    let b = self.amplitudes[hi];
                    self.amplitudes[lo] = c * a + ms * b;
                    self.amplitudes[hi] = ms * a + c * b;
                }
                base += stride << 1;
            }
        }
    }
}

fn check_qubits(n: usize) -> Result<(), Error> {
    if n > MAX_STATE_QUBITS {
        Err(Error::Capacity(format!(
            "state vector supports at most {MAX_STATE_QUBITS} qubits, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Diagonal of the cost Hamiltonian: entry `b` is the graph energy of the
/// spin assignment with bit `q` of `b` as `x_q` (bit 0 means spin +1).
pub fn cost_diagonal(graph: &IsingGraph) -> Result<Vec<f64>, Error> {
    let n = graph.n();
    check_qubits(n)?;
    let dim = 1usize << n;
    let mut diag = vec![graph.offset(); dim];
    for (i, h) in graph.biases().iter().enumerate() {
        if *h == 0.0 {
            continue;
        }
        let mask = 1u64 << i;
        for (b, d) in diag.iter_mut().enumerate() {
            *d += if b as u64 & mask == 0 { *h } else { -*h };
        }
    }
    for &(i, j, w) in graph.edges() {
        let mi = 1u64 << i;
        let mj = 1u64 << j;
        for (b, d) in diag.iter_mut().enumerate() {
            let parity = ((b as u64 & mi != 0) as u8) ^ ((b as u64 & mj != 0) as u8);
            *d += if parity == 0 { w } else { -w };
        }
    }
    Ok(diag)
}

/// Caches the cost diagonal of one graph so repeated circuit evaluations
/// share it.
pub struct QaoaSimulator {
    n_qubits: usize,
    diag: Vec<f64>,
}

impl QaoaSimulator {
    pub fn new(graph: &IsingGraph) -> Result<Self, Error> {
        Ok(QaoaSimulator {
            n_qubits: graph.n(),
            diag: cost_diagonal(graph)?,
        })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `|psi> = prod_k exp(-i beta_k H_M) exp(-i gamma_k H_C) |+>^n`.
    pub fn state(&self, params: &QaoaParams) -> StateVector {
        let mut state = StateVector::uniform(self.n_qubits);
        for (gamma, beta) in params.gammas.iter().zip(&params.betas) {
            state.apply_diagonal_phase(*gamma, &self.diag);
            state.apply_uniform_mixer(*beta);
        }
        state
    }

    pub fn expectation_of_state(&self, state: &StateVector) -> f64 {
        state
            .amplitudes
            .iter()
            .zip(&self.diag)
            .map(|(a, d)| a.norm_sqr() * d)
            .sum()
    }

    pub fn expectation(&self, params: &QaoaParams) -> f64 {
        self.expectation_of_state(&self.state(params))
    }
}

/// Build the circuit state for a graph (one-shot convenience).
pub fn qaoa_state(graph: &IsingGraph, params: &QaoaParams) -> Result<StateVector, Error> {
    Ok(QaoaSimulator::new(graph)?.state(params))
}

/// Cost expectation `<psi|H_C|psi>` for a graph and angles.
pub fn qaoa_expectation(graph: &IsingGraph, params: &QaoaParams) -> Result<f64, Error> {
    let sim = QaoaSimulator::new(graph)?;
    Ok(sim.expectation(params))
}

/// Fixed multi-start seeds: cost angles in `[0, pi)`, mixer angles in
/// `[0, pi/2)`.
fn seed_grid() -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    let mut grid = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            grid.push((i as f64 * PI / 4.0, j as f64 * PI / 8.0));
        }
    }
    grid
}

/// Optimize circuit angles with a seeded grid plus simplex refinement.
///
/// Spends at most `config.optimizer_budget` expectation evaluations and
/// returns angles no worse than every grid seed.
pub fn optimize_angles(graph: &IsingGraph, config: &QiroConfig) -> Result<QaoaParams, Error> {
    config.validate()?;
    check_qubits(graph.n())?;
    let sim = QaoaSimulator::new(graph)?;
    optimize_angles_on(&sim, config)
}

pub(crate) fn optimize_angles_on(
    sim: &QaoaSimulator,
    config: &QiroConfig,
) -> Result<QaoaParams, Error> {
    let grid = seed_grid();
    if config.optimizer_budget < grid.len() {
        return Err(Error::Config(format!(
            "optimizer budget {} is below the {} multi-start points",
            config.optimizer_budget,
            grid.len()
        )));
    }
    let p = config.layers;
    let params_of = |x: &[f64]| -> QaoaParams {
        QaoaParams {
            gammas: x[..p].to_vec(),
            betas: x[p..].to_vec(),
        }
    };

    let mut spent = 0usize;
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(grid.len());
    for &(gamma, beta) in &grid {
        let mut x = vec![gamma; p];
        x.extend(std::iter::repeat_n(beta, p));
        let value = sim.expectation(&params_of(&x));
        spent += 1;
        scored.push((value, x));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best = scored[0].clone();

    // Refine the two best seeds within the remaining budget.
    let starts = 2.min(scored.len());
    for (s, seed_point) in scored.iter().take(starts).enumerate() {
        let remaining = config.optimizer_budget - spent;
        if remaining == 0 {
            break;
        }
        let nm = NelderMead {
            max_evals: remaining / (starts - s),
            ..NelderMead::default()
        };
        if nm.max_evals == 0 {
            break;
        }
        let (x, value, used) = nm.minimize(|x| sim.expectation(&params_of(x)), &seed_point.1);
        spent += used;
        if value < best.0 {
            best = (value, x);
        }
    }

    Ok(params_of(&best.1))
}

/// Draw multinomial samples from the measurement distribution.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<ShotCounts, Error> {
    if shots < 1 {
        return Err(Error::Config("shots must be >= 1".into()));
    }
    let mut cumulative = Vec::with_capacity(state.amplitudes().len());
    let mut acc = 0.0;
    for amp in state.amplitudes() {
        acc += amp.norm_sqr();
        cumulative.push(acc);
    }
    let top = acc;

    let mut rng = seeded(subseed(seed, "shots", 0));
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.gen_range(0.0..top);
        let idx = cumulative.partition_point(|&c| c <= u);
        let idx = idx.min(cumulative.len() - 1);
        *counts.entry(idx as u64).or_insert(0) += 1;
    }
    Ok(ShotCounts::new(state.n_qubits(), counts))
}
