//! Unit commitment instances and schedule evaluation.
//!
//! An instance is a set of generating units with linear production cost,
//! fixed startup cost, maximum output, and minimum up/down times, plus a
//! demand profile over a discrete horizon. Units run at full output when
//! committed, so a schedule is fully described by the binary operating
//! states `on[t][i]` and start states `start[t][i]`.
//!
//! [`evaluate_schedule`] computes the true generation cost and the full
//! penalized objective term by term. It is the ground-truth evaluator that
//! the QUBO compiler is checked against.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A single generating unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitSpec {
    /// Production cost per MW per period.
    #[serde(rename = "c")]
    pub linear_cost: f64,
    /// Fixed cost per start.
    #[serde(rename = "h")]
    pub startup_cost: f64,
    /// Maximum power output in MW; the unit runs at this level when on.
    #[serde(rename = "maxp")]
    pub max_power: f64,
    /// Minimum number of consecutive periods the unit must stay on after a start.
    #[serde(rename = "minup")]
    pub min_up: u32,
    /// Minimum number of consecutive periods the unit must stay off after a stop.
    #[serde(rename = "mindown")]
    pub min_down: u32,
    /// Commitment state just before the horizon begins.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub initial_on: u8,
}

fn is_zero(v: &u8) -> bool {
    *v == 0
}

impl UnitSpec {
    fn validate(&self, idx: usize) -> Result<(), Error> {
        if self.max_power <= 0.0 || !self.max_power.is_finite() {
            return Err(Error::Validation(format!("units[{idx}].maxp must be > 0")));
        }
        if self.min_up < 1 {
            return Err(Error::Validation(format!("units[{idx}].minup must be >= 1")));
        }
        if self.min_down < 1 {
            return Err(Error::Validation(format!(
                "units[{idx}].mindown must be >= 1"
            )));
        }
        if self.linear_cost < 0.0 || !self.linear_cost.is_finite() {
            return Err(Error::Validation(format!("units[{idx}].c must be >= 0")));
        }
        if self.startup_cost < 0.0 || !self.startup_cost.is_finite() {
            return Err(Error::Validation(format!("units[{idx}].h must be >= 0")));
        }
        if self.initial_on > 1 {
            return Err(Error::Validation(format!(
                "units[{idx}].initial_on must be 0 or 1"
            )));
        }
        Ok(())
    }
}

/// A unit commitment instance: units, horizon, and per-period demand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UcpInstance {
    pub horizon: usize,
    pub demand: Vec<f64>,
    pub units: Vec<UnitSpec>,
}

impl UcpInstance {
    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    /// Number of binary decision variables: one operating and one start
    /// state per unit per period.
    pub fn n_vars(&self) -> usize {
        2 * self.horizon * self.units.len()
    }

    pub fn total_capacity(&self) -> f64 {
        self.units.iter().map(|u| u.max_power).sum()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.horizon < 1 {
            return Err(Error::Validation("horizon must be >= 1".into()));
        }
        if self.units.is_empty() {
            return Err(Error::Validation("units must be non-empty".into()));
        }
        if self.demand.len() != self.horizon {
            return Err(Error::Validation(format!(
                "demand length {} does not match horizon {}",
                self.demand.len(),
                self.horizon
            )));
        }
        for (t, d) in self.demand.iter().enumerate() {
            if *d < 0.0 || !d.is_finite() {
                return Err(Error::Validation(format!("demand[{t}] must be >= 0")));
            }
        }
        for (i, u) in self.units.iter().enumerate() {
            u.validate(i)?;
        }
        Ok(())
    }
}

/// Binary operating and start states, `T x |I|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub on: Vec<Vec<u8>>,
    pub start: Vec<Vec<u8>>,
}

impl Schedule {
    pub fn zeros(horizon: usize, n_units: usize) -> Self {
        Schedule {
            on: vec![vec![0; n_units]; horizon],
            start: vec![vec![0; n_units]; horizon],
        }
    }

    fn check_dims(&self, instance: &UcpInstance) -> Result<(), Error> {
        let t = instance.horizon;
        let n = instance.n_units();
        let ok = self.on.len() == t
            && self.start.len() == t
            && self.on.iter().all(|row| row.len() == n)
            && self.start.iter().all(|row| row.len() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "schedule must be {t} x {n} in both on and start"
            )))
        }
    }
}

/// Penalty weights on the demand, startup-logic, minimum-up, and
/// minimum-down blocks of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyFactors {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for PenaltyFactors {
    fn default() -> Self {
        PenaltyFactors {
            a: 10_000.0,
            b: 100.0,
            c: 100.0,
            d: 10.0,
        }
    }
}

impl PenaltyFactors {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::Validation(format!("penalty {name} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// How the demand-balance block squares its sum.
///
/// `PerPeriod` squares the imbalance of each period separately, the
/// standard balance penalty. `Verbatim` squares the sum over the whole
/// horizon, which lets surplus hours cancel deficit hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandSquareMode {
    #[default]
    PerPeriod,
    Verbatim,
}

/// Which window the minimum-down block scans.
///
/// `Verbatim` looks backward from the stop period; `Forward` scans the
/// periods that must actually stay off after the stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinDownMode {
    #[default]
    Verbatim,
    Forward,
}

/// Cost breakdown of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// Production plus startup cost only.
    pub generation_cost: f64,
    /// Signed committed-capacity minus demand, per period.
    pub demand_mismatch: Vec<f64>,
    /// Periods where `start` disagrees with the turn-on logic.
    pub startup_inconsistency_count: usize,
    /// On-window periods spent off after a turn-on, summed over units.
    pub min_up_violations: usize,
    /// Off-window periods spent on after a turn-off, summed over units.
    pub min_down_violations: usize,
    /// Full penalized objective value under the selected modes.
    pub penalized_objective: f64,
}

/// Evaluate a schedule: generation cost, violation counters, and the full
/// penalized objective computed term by term.
///
/// The violation counters come from the logical constraints and do not
/// depend on the penalty weights.
pub fn evaluate_schedule(
    instance: &UcpInstance,
    schedule: &Schedule,
    penalties: &PenaltyFactors,
    demand_mode: DemandSquareMode,
    min_down_mode: MinDownMode,
) -> Result<CostReport, Error> {
    schedule.check_dims(instance)?;
    let horizon = instance.horizon;
    let units = &instance.units;

    let mut generation_cost = 0.0;
    for t in 0..horizon {
        for (i, u) in units.iter().enumerate() {
            generation_cost += u.linear_cost * u.max_power * f64::from(schedule.on[t][i])
                + u.startup_cost * f64::from(schedule.start[t][i]);
        }
    }

    let mut demand_mismatch = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let committed: f64 = units
            .iter()
            .enumerate()
            .map(|(i, u)| u.max_power * f64::from(schedule.on[t][i]))
            .sum();
        demand_mismatch.push(committed - instance.demand[t]);
    }
    let block_a = match demand_mode {
        DemandSquareMode::PerPeriod => demand_mismatch.iter().map(|m| m * m).sum::<f64>(),
        DemandSquareMode::Verbatim => {
            let total: f64 = demand_mismatch.iter().sum();
            total * total
        }
    };

    // on[t-1] with the pre-horizon state folded in at t = 0.
    let prev_on = |t: usize, i: usize| -> f64 {
        if t == 0 {
            f64::from(units[i].initial_on)
        } else {
            f64::from(schedule.on[t - 1][i])
        }
    };

    let mut block_b = 0.0;
    let mut block_c = 0.0;
    let mut block_d = 0.0;
    let mut startup_inconsistency_count = 0;
    for t in 0..horizon {
        for (i, u) in units.iter().enumerate() {
            let on = f64::from(schedule.on[t][i]);
            let s = f64::from(schedule.start[t][i]);
            let on_prev = prev_on(t, i);

            block_b += on * (1.0 - on_prev) + 2.0 * s * (on_prev - on) + s;
            if (s - on * (1.0 - on_prev)).abs() > 0.5 {
                startup_inconsistency_count += 1;
            }

            let up_end = (t + u.min_up as usize - 1).min(horizon - 1);
            let mut up_window = 0.0;
            for row in &schedule.on[t..=up_end] {
                up_window += f64::from(row[i]);
            }
            block_c += s * f64::from(u.min_up) - s * up_window;

            let stop_factor = s + on_prev - on;
            match min_down_mode {
                MinDownMode::Verbatim => {
                    let lo = (t + 1).saturating_sub(u.min_down as usize);
                    for row in &schedule.on[lo..=t] {
                        block_d += stop_factor * f64::from(row[i]);
                    }
                }
                MinDownMode::Forward => {
                    let hi = (t + u.min_down as usize - 1).min(horizon - 1);
                    for row in &schedule.on[t..=hi] {
                        block_d += stop_factor * f64::from(row[i]);
                    }
                }
            }
        }
    }

    let mut min_up_violations = 0;
    let mut min_down_violations = 0;
    for (i, u) in units.iter().enumerate() {
        for t in 0..horizon {
            let on = schedule.on[t][i];
            let was_on = if t == 0 {
                u.initial_on
            } else {
                schedule.on[t - 1][i]
            };
            if on == 1 && was_on == 0 {
                let end = (t + u.min_up as usize).min(horizon);
                min_up_violations += schedule.on[t..end]
                    .iter()
                    .filter(|row| row[i] == 0)
                    .count();
            }
            if on == 0 && was_on == 1 {
                let end = (t + u.min_down as usize).min(horizon);
                min_down_violations += schedule.on[t..end]
                    .iter()
                    .filter(|row| row[i] == 1)
                    .count();
            }
        }
    }

    let penalized_objective = generation_cost
        + penalties.a * block_a
        + penalties.b * block_b
        + penalties.c * block_c
        + penalties.d * block_d;

    Ok(CostReport {
        generation_cost,
        demand_mismatch,
        startup_inconsistency_count,
        min_up_violations,
        min_down_violations,
        penalized_objective,
    })
}

/// Parse an instance document (JSON key/value tree).
pub fn parse_instance(text: &str) -> Result<UcpInstance, Error> {
    let instance: UcpInstance =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    instance.validate()?;
    Ok(instance)
}

/// Serialize an instance to the document format accepted by [`parse_instance`].
pub fn instance_to_json(instance: &UcpInstance) -> String {
    serde_json::to_string_pretty(instance).expect("instance serialization cannot fail")
}

/// Generate a deterministic synthetic instance.
///
/// Capacities are drawn from 20..400 MW, production costs from 5..40 per
/// MW-period, startup costs proportional to capacity, and min up/down
/// times from 1..=4 periods (clamped to the horizon). The demand profile
/// follows a two-harmonic daily shape scaled so that peak demand lands
/// between 40% and 100% of total capacity.
pub fn generate_synthetic(n_units: usize, horizon: usize, seed: u64) -> UcpInstance {
    use rand::Rng;
    assert!(n_units >= 1, "n_units must be >= 1");
    assert!(horizon >= 1, "horizon must be >= 1");

    let mut rng = crate::rng::seeded(seed);
    let mut units = Vec::with_capacity(n_units);
    for _ in 0..n_units {
        let max_power = (rng.gen_range(20.0..400.0_f64)).round();
        let linear_cost = (rng.gen_range(5.0..40.0_f64) * 100.0).round() / 100.0;
        let startup_cost = (max_power * rng.gen_range(2.0..10.0_f64)).round();
        let cap = 4.min(horizon as u32).max(1);
        let min_up = rng.gen_range(1..=cap);
        let min_down = rng.gen_range(1..=cap);
        units.push(UnitSpec {
            linear_cost,
            startup_cost,
            max_power,
            min_up,
            min_down,
            initial_on: 0,
        });
    }

    let total_capacity: f64 = units.iter().map(|u| u.max_power).sum();
    let peak_fraction = rng.gen_range(0.5..0.85);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut shape = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let x = t as f64 / horizon as f64 * std::f64::consts::TAU;
        let base = 0.65 + 0.25 * (x + phase).sin() + 0.08 * (2.0 * x + phase).cos();
        let noise = rng.gen_range(-0.02..0.02);
        shape.push((base + noise).max(0.05));
    }
    let peak = shape.iter().cloned().fold(0.0, f64::max);
    let scale = peak_fraction * total_capacity / peak;
    let demand: Vec<f64> = shape.iter().map(|s| (s * scale).round()).collect();

    let instance = UcpInstance {
        horizon,
        demand,
        units,
    };
    debug_assert!(instance.validate().is_ok());
    instance
}
