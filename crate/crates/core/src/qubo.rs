//! Symbolic expansion of the penalized objective into an explicit QUBO.
//!
//! The compiler walks every term of the objective, multiplies out products
//! of binary variables (folding the pre-horizon commitment state in as a
//! constant), and accumulates coefficients into an upper-triangular sparse
//! matrix. Linear terms live on the diagonal since `x^2 = x` for binary
//! variables; constants accumulate into the offset.

use std::collections::BTreeMap;

use crate::error::Error;
use crate::ucp::{DemandSquareMode, MinDownMode, PenaltyFactors, Schedule, UcpInstance};

/// Which of the two decision variables of a `(period, unit)` cell an index
/// refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    On,
    Start,
}

/// Bijection between flat variable indices and `(period, unit, kind)`.
///
/// Layout: `index = 2 * (t * n_units + i) + kind`, with `On` before `Start`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct VariableMap {
    pub horizon: usize,
    pub n_units: usize,
}

impl VariableMap {
    pub fn new(horizon: usize, n_units: usize) -> Self {
        VariableMap { horizon, n_units }
    }

    pub fn len(&self) -> usize {
        2 * self.horizon * self.n_units
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, t: usize, i: usize, kind: VarKind) -> usize {
        debug_assert!(t < self.horizon && i < self.n_units);
        2 * (t * self.n_units + i)
            + match kind {
                VarKind::On => 0,
                VarKind::Start => 1,
            }
    }

    pub fn describe(&self, k: usize) -> (usize, usize, VarKind) {
        debug_assert!(k < self.len());
        let cell = k / 2;
        let kind = if k.is_multiple_of(2) {
            VarKind::On
        } else {
            VarKind::Start
        };
        (cell / self.n_units, cell % self.n_units, kind)
    }
}

/// A QUBO: minimize `x^T Q x + offset` over binary `x`.
///
/// `Q` is stored upper-triangular with the full coefficient on each
/// off-diagonal pair and linear terms on the diagonal.
#[derive(Debug, Clone)]
pub struct QuboProblem {
    pub n: usize,
    coefficients: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    /// Present when the problem was compiled from an instance.
    pub varmap: Option<VariableMap>,
}

impl QuboProblem {
    /// Stored entries as `(i, j, value)` with `i <= j`, in index order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.coefficients.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn nnz_stored(&self) -> usize {
        self.coefficients.len()
    }
}

/// Accumulates QUBO coefficients term by term.
#[derive(Debug, Clone)]
pub struct QuboBuilder {
    n: usize,
    coefficients: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

/// One factor of a product: a decision variable or a folded constant.
#[derive(Debug, Clone, Copy)]
enum Factor {
    Var(usize),
    Const(f64),
}

impl QuboBuilder {
    pub fn new(n: usize) -> Self {
        QuboBuilder {
            n,
            coefficients: BTreeMap::new(),
            offset: 0.0,
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn add_linear(&mut self, k: usize, coeff: f64) {
        debug_assert!(k < self.n);
        if coeff != 0.0 {
            *self.coefficients.entry((k, k)).or_insert(0.0) += coeff;
        }
    }

    /// Add `coeff * x_a * x_b`; `a == b` folds to a linear term.
    pub fn add_pair(&mut self, a: usize, b: usize, coeff: f64) {
        debug_assert!(a < self.n && b < self.n);
        if coeff == 0.0 {
            return;
        }
        let key = (a.min(b), a.max(b));
        *self.coefficients.entry(key).or_insert(0.0) += coeff;
    }

    fn add_product(&mut self, a: Factor, b: Factor, coeff: f64) {
        match (a, b) {
            (Factor::Var(i), Factor::Var(j)) => self.add_pair(i, j, coeff),
            (Factor::Var(i), Factor::Const(c)) | (Factor::Const(c), Factor::Var(i)) => {
                self.add_linear(i, coeff * c)
            }
            (Factor::Const(c1), Factor::Const(c2)) => self.add_constant(coeff * c1 * c2),
        }
    }

    /// Add `scale * (sum_k coeff_k * x_k + constant)^2`.
    fn add_squared_linear_form(&mut self, terms: &[(usize, f64)], constant: f64, scale: f64) {
        if scale == 0.0 {
            return;
        }
        for (idx, &(k, ck)) in terms.iter().enumerate() {
            self.add_linear(k, scale * ck * ck);
            for &(l, cl) in &terms[idx + 1..] {
                self.add_pair(k, l, 2.0 * scale * ck * cl);
            }
            self.add_linear(k, 2.0 * scale * ck * constant);
        }
        self.add_constant(scale * constant * constant);
    }

    /// Finish the problem, pruning exactly-cancelled entries.
    pub fn build(mut self, varmap: Option<VariableMap>) -> Result<QuboProblem, Error> {
        self.coefficients.retain(|_, v| *v != 0.0);
        for (&(i, j), &v) in &self.coefficients {
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "coefficient ({i},{j}) overflowed the representable range"
                )));
            }
        }
        if !self.offset.is_finite() {
            return Err(Error::Validation("offset overflowed".into()));
        }
        Ok(QuboProblem {
            n: self.n,
            coefficients: self.coefficients,
            offset: self.offset,
            varmap,
        })
    }
}

/// Compile an instance into a QUBO under the selected objective readings.
pub fn compile(
    instance: &UcpInstance,
    penalties: &PenaltyFactors,
    demand_mode: DemandSquareMode,
    min_down_mode: MinDownMode,
) -> Result<QuboProblem, Error> {
    instance.validate()?;
    penalties.validate()?;

    let horizon = instance.horizon;
    let n_units = instance.n_units();
    let map = VariableMap::new(horizon, n_units);
    let mut b = QuboBuilder::new(map.len());

    // `on` one period earlier resolves to the pre-horizon constant at t = 0.
    let on = |t: usize, i: usize| Factor::Var(map.index(t, i, VarKind::On));
    let st = |t: usize, i: usize| Factor::Var(map.index(t, i, VarKind::Start));
    let prev_on = |t: usize, i: usize| -> Factor {
        if t == 0 {
            Factor::Const(f64::from(instance.units[i].initial_on))
        } else {
            on(t - 1, i)
        }
    };

    // Generation cost.
    for t in 0..horizon {
        for (i, u) in instance.units.iter().enumerate() {
            b.add_linear(map.index(t, i, VarKind::On), u.linear_cost * u.max_power);
            b.add_linear(map.index(t, i, VarKind::Start), u.startup_cost);
        }
    }

    // Demand balance.
    match demand_mode {
        DemandSquareMode::PerPeriod => {
            for t in 0..horizon {
                let terms: Vec<(usize, f64)> = instance
                    .units
                    .iter()
                    .enumerate()
                    .map(|(i, u)| (map.index(t, i, VarKind::On), u.max_power))
                    .collect();
                b.add_squared_linear_form(&terms, -instance.demand[t], penalties.a);
            }
        }
        DemandSquareMode::Verbatim => {
            let mut terms = Vec::with_capacity(horizon * n_units);
            let mut constant = 0.0;
            for t in 0..horizon {
                for (i, u) in instance.units.iter().enumerate() {
                    terms.push((map.index(t, i, VarKind::On), u.max_power));
                }
                constant -= instance.demand[t];
            }
            b.add_squared_linear_form(&terms, constant, penalties.a);
        }
    }

    // Startup logic: on_t (1 - on_{t-1}) + 2 s_t (on_{t-1} - on_t) + s_t.
    for t in 0..horizon {
        for i in 0..n_units {
            b.add_product(on(t, i), Factor::Const(1.0), penalties.b);
            b.add_product(on(t, i), prev_on(t, i), -penalties.b);
            b.add_product(st(t, i), prev_on(t, i), 2.0 * penalties.b);
            b.add_product(st(t, i), on(t, i), -2.0 * penalties.b);
            b.add_product(st(t, i), Factor::Const(1.0), penalties.b);
        }
    }

    // Minimum up: minup_i s_t - sum over the clamped on-window of s_t on_tau.
    for t in 0..horizon {
        for (i, u) in instance.units.iter().enumerate() {
            b.add_product(
                st(t, i),
                Factor::Const(1.0),
                penalties.c * f64::from(u.min_up),
            );
            let end = (t + u.min_up as usize - 1).min(horizon - 1);
            for tau in t..=end {
                b.add_product(st(t, i), on(tau, i), -penalties.c);
            }
        }
    }

    // Minimum down: (s_t + on_{t-1} - on_t) on_tau over the selected window.
    for t in 0..horizon {
        for (i, u) in instance.units.iter().enumerate() {
            let window: Vec<usize> = match min_down_mode {
                MinDownMode::Verbatim => {
                    let lo = (t + 1).saturating_sub(u.min_down as usize);
                    (lo..=t).collect()
                }
                MinDownMode::Forward => {
                    let hi = (t + u.min_down as usize - 1).min(horizon - 1);
                    (t..=hi).collect()
                }
            };
            for tau in window {
                b.add_product(st(t, i), on(tau, i), penalties.d);
                b.add_product(prev_on(t, i), on(tau, i), penalties.d);
                b.add_product(on(t, i), on(tau, i), -penalties.d);
            }
        }
    }

    b.build(Some(map))
}

/// Evaluate `x^T Q x + offset` in one pass over the stored entries.
pub fn evaluate_qubo(problem: &QuboProblem, x: &[u8]) -> Result<f64, Error> {
    if x.len() != problem.n {
        return Err(Error::Dimension(format!(
            "assignment length {} does not match variable count {}",
            x.len(),
            problem.n
        )));
    }
    let mut energy = problem.offset;
    for (&(i, j), &q) in &problem.coefficients {
        if x[i] != 0 && x[j] != 0 {
            energy += q;
        }
    }
    Ok(energy)
}

/// Reconstruct a schedule from a binary assignment.
pub fn decode(varmap: &VariableMap, x: &[u8]) -> Result<Schedule, Error> {
    if x.len() != varmap.len() {
        return Err(Error::Dimension(format!(
            "assignment length {} does not match variable count {}",
            x.len(),
            varmap.len()
        )));
    }
    let mut schedule = Schedule::zeros(varmap.horizon, varmap.n_units);
    for (k, &bit) in x.iter().enumerate() {
        let (t, i, kind) = varmap.describe(k);
        match kind {
            VarKind::On => schedule.on[t][i] = bit,
            VarKind::Start => schedule.start[t][i] = bit,
        }
    }
    Ok(schedule)
}

/// Flatten a schedule into the assignment vector, inverse of [`decode`].
pub fn encode(varmap: &VariableMap, schedule: &Schedule) -> Result<Vec<u8>, Error> {
    if schedule.on.len() != varmap.horizon
        || schedule.on.iter().any(|r| r.len() != varmap.n_units)
        || schedule.start.len() != varmap.horizon
        || schedule.start.iter().any(|r| r.len() != varmap.n_units)
    {
        return Err(Error::Dimension("schedule does not match variable map".into()));
    }
    let mut x = vec![0u8; varmap.len()];
    for t in 0..varmap.horizon {
        for i in 0..varmap.n_units {
            x[varmap.index(t, i, VarKind::On)] = schedule.on[t][i];
            x[varmap.index(t, i, VarKind::Start)] = schedule.start[t][i];
        }
    }
    Ok(x)
}

/// Structural sparsity of the full symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SparsityReport {
    pub n: usize,
    /// Nonzero entries of the dense symmetric matrix; off-diagonal pairs
    /// count twice.
    pub nnz: usize,
    pub density: f64,
}

pub fn sparsity_report(problem: &QuboProblem) -> SparsityReport {
    let mut nnz = 0;
    for (i, j, _) in problem.entries() {
        nnz += if i == j { 1 } else { 2 };
    }
    let dense = problem.n * problem.n;
    SparsityReport {
        n: problem.n,
        nnz,
        density: if dense == 0 {
            0.0
        } else {
            nnz as f64 / dense as f64
        },
    }
}

/// Export in sparse coordinate text form: a `n offset` header, then one
/// `i j value` line per stored entry.
pub fn export_coo(problem: &QuboProblem) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", problem.n, fmt_float(problem.offset)));
    for (i, j, v) in problem.entries() {
        out.push_str(&format!("{i} {j} {}\n", fmt_float(v)));
    }
    out
}

fn fmt_float(v: f64) -> String {
    // Shortest representation that round-trips.
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}
