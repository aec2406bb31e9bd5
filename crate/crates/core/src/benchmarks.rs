//! Reference policies: the (N-best, TTT) preparation rule used by deployed
//! networks, and two hindsight oracles.

use std::fmt;

use crate::error::{Error, Result};
use crate::objective::{self, PreparationVector};
use crate::radio::{linear_to_db, ScenarioTimeline, SlotEnvironment};

/// `(N, TTT)`: prepare the cells that have ranked among a UE's `N` best for
/// the last `TTT` consecutive slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TttComparatorConfig {
    pub best: usize,
    pub ttt: usize,
    /// Rank on offset-adjusted SINR instead of raw SINR.
    pub use_offsets: bool,
}

impl TttComparatorConfig {
    pub fn new(best: usize, ttt: usize) -> Self {
        TttComparatorConfig {
            best,
            ttt,
            use_offsets: false,
        }
    }

    pub fn validate(&self, cells: usize) -> Result<()> {
        if self.best > cells {
            return Err(Error::InvalidComparator(format!(
                "N={} exceeds the number of cells ({cells})",
                self.best
            )));
        }
        if self.ttt == 0 {
            return Err(Error::InvalidComparator("TTT must be >= 1".into()));
        }
        Ok(())
    }
}

impl fmt::Display for TttComparatorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ttt({},{})", self.best, self.ttt)?;
        if self.use_offsets {
            f.write_str("+offsets")?;
        }
        Ok(())
    }
}

/// Indices of the `n` best cells of a UE, ties to the lower index.
fn top_n(env: &SlotEnvironment, ue: usize, n: usize, use_offsets: bool) -> Vec<usize> {
    let row = &env.sinr[ue * env.cells..(ue + 1) * env.cells];
    let score = |j: usize| {
        let db = linear_to_db(row[j]);
        if use_offsets {
            db - env.offsets_db[j]
        } else {
            db
        }
    };
    let mut order: Vec<usize> = (0..env.cells).collect();
    order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    order.truncate(n);
    order
}

/// Decision sequence of the `(N, TTT)` rule over the whole timeline.
pub fn run_ttt_comparator(
    timeline: &ScenarioTimeline,
    cfg: TttComparatorConfig,
) -> Result<Vec<PreparationVector>> {
    cfg.validate(timeline.cells)?;
    let (ues, cells) = (timeline.ues, timeline.cells);
    let mut streak = vec![0usize; ues * cells];
    let mut out = Vec::with_capacity(timeline.len());
    for env in &timeline.slots {
        let mut in_top = vec![false; ues * cells];
        for i in 0..ues {
            for j in top_n(env, i, cfg.best, cfg.use_offsets) {
                in_top[i * cells + j] = true;
            }
        }
        let mut x = vec![0.0; ues * cells];
        for n in 0..ues * cells {
            streak[n] = if in_top[n] { streak[n] + 1 } else { 0 };
            if streak[n] >= cfg.ttt {
                x[n] = 1.0;
            }
        }
        out.push(PreparationVector::binary(ues, cells, x)?);
    }
    Ok(out)
}

/// A benchmark decision sequence and its scores.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub decisions: Vec<PreparationVector>,
    pub utilities: Vec<f64>,
    /// Per-slot objective including the switching charge, starting from the
    /// all-zero decision.
    pub objectives: Vec<f64>,
    pub total_utility: f64,
    pub total_objective: f64,
}

impl OracleResult {
    fn score(timeline: &ScenarioTimeline, decisions: Vec<PreparationVector>) -> Result<Self> {
        let scores = score_sequence(timeline, &decisions)?;
        let utilities: Vec<f64> = scores.iter().map(|b| b.utility).collect();
        let objectives: Vec<f64> = scores.iter().map(|b| b.objective).collect();
        Ok(OracleResult {
            total_utility: utilities.iter().sum(),
            total_objective: objectives.iter().sum(),
            decisions,
            utilities,
            objectives,
        })
    }
}

/// Per-slot objective breakdowns of a decision sequence, with the all-zero
/// decision before the first slot.
pub fn score_sequence(
    timeline: &ScenarioTimeline,
    decisions: &[PreparationVector],
) -> Result<Vec<objective::ObjectiveBreakdown>> {
    if decisions.len() != timeline.len() {
        return Err(Error::DimensionMismatch {
            expected: timeline.len(),
            actual: decisions.len(),
        });
    }
    let mut prev = vec![0.0; timeline.ues * timeline.cells];
    let mut out = Vec::with_capacity(decisions.len());
    for (env, x) in timeline.slots.iter().zip(decisions) {
        out.push(objective::evaluate(x.values(), &prev, env)?);
        prev.clear();
        prev.extend_from_slice(x.values());
    }
    Ok(out)
}

/// Hindsight maximiser of each slot's utility in isolation: prepare exactly
/// the pairs with a positive gradient entry.
pub fn oracle_per_slot(timeline: &ScenarioTimeline) -> Result<OracleResult> {
    let decisions = timeline
        .slots
        .iter()
        .map(|env| {
            let grad = objective::utility_gradient(env)?;
            let x = grad.iter().map(|&g| if g > 0.0 { 1.0 } else { 0.0 }).collect();
            PreparationVector::binary(timeline.ues, timeline.cells, x)
        })
        .collect::<Result<Vec<_>>>()?;
    OracleResult::score(timeline, decisions)
}

/// Largest decision dimension the exact oracle accepts.
pub const DP_MAX_ENTRIES: usize = 14;

/// Exact maximiser of the switching-cost-coupled objective over the whole
/// horizon, by dynamic programming over the previous binary decision.
pub fn oracle_dp(timeline: &ScenarioTimeline) -> Result<OracleResult> {
    let m = timeline.ues * timeline.cells;
    if m > DP_MAX_ENTRIES {
        return Err(Error::OracleCapacity {
            max: DP_MAX_ENTRIES,
            actual: m,
        });
    }
    let states = 1usize << m;
    let slots = timeline.len();
    if slots == 0 {
        return OracleResult::score(timeline, Vec::new());
    }

    let mut value = vec![f64::NEG_INFINITY; states];
    value[0] = 0.0;
    let mut parent: Vec<Vec<u32>> = Vec::with_capacity(slots);
    let mut gain = vec![0.0; states];
    let mut move_cost = vec![0.0; states];

    for env in &timeline.slots {
        let grad = objective::utility_gradient(env)?;
        let base: f64 = (0..m)
            .filter(|&n| env.indicator(n) == 1.0)
            .map(|n| -env.gamma.at(n))
            .sum();
        // Utility and weighted squared displacement, built up one bit at a time.
        let mut sq = vec![0.0; states];
        gain[0] = base;
        for s in 1..states {
            let low = s.trailing_zeros() as usize;
            let rest = s & (s - 1);
            gain[s] = gain[rest] + grad[low];
            sq[s] = sq[rest] + env.switching_weights[low];
        }
        for s in 0..states {
            move_cost[s] = env.delta * sq[s].sqrt();
        }

        let mut next = vec![f64::NEG_INFINITY; states];
        let mut from = vec![0u32; states];
        for s in 0..states {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0u32;
            for (p, &v) in value.iter().enumerate() {
                if v == f64::NEG_INFINITY {
                    continue;
                }
                let cand = v - move_cost[s ^ p];
                if cand > best {
                    best = cand;
                    arg = p as u32;
                }
            }
            next[s] = best + gain[s];
            from[s] = arg;
        }
        value = next;
        parent.push(from);
    }

    let mut state = value
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (s, &v)| if v > acc.1 { (s, v) } else { acc })
        .0;
    let mut path = vec![0usize; slots];
    for t in (0..slots).rev() {
        path[t] = state;
        state = parent[t][state] as usize;
    }
    let decisions = path
        .into_iter()
        .map(|s| {
            let x = (0..m).map(|n| ((s >> n) & 1) as f64).collect();
            PreparationVector::binary(timeline.ues, timeline.cells, x)
        })
        .collect::<Result<Vec<_>>>()?;
    OracleResult::score(timeline, decisions)
}
