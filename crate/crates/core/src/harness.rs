//! Runs every configured algorithm on every seed, scores them with the shared
//! objective, and tracks regret against the per-slot hindsight oracle.

use std::io::Write;
use std::path::Path;

use crate::benchmarks::{self, OracleResult};
use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{Error, Result};
use crate::learner::{Chomet, EnvironmentBounds, HyperParams};
use crate::objective::{self, ObjectiveBreakdown, PreparationVector};
use crate::radio::{self, ScenarioConfig, ScenarioTimeline};

/// One row of experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    /// One-based slot index.
    pub slot: usize,
    pub algorithm: String,
    pub seed: u64,
    pub utility: f64,
    /// `delta * ||x_t - x_{t-1}||_B`.
    pub switching: f64,
    pub objective: f64,
    pub cum_objective: f64,
    pub preparations: usize,
    /// Utility of the per-slot hindsight oracle in this slot.
    pub oracle_g: f64,
    pub avg_regret: f64,
}

/// Per (algorithm, seed) aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: String,
    pub seed: u64,
    pub total_objective: f64,
    /// Objective accumulated over the last `objective_window` slots.
    pub tail_objective: f64,
    /// Mean preparations per slot over the last `preparations_window` slots.
    pub mean_preparations: f64,
    pub final_regret: f64,
    /// Path length of the benchmark sequence.
    pub path_length: f64,
    /// Regret bound for the learner's hyperparameters, CHOMET only.
    pub regret_bound: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub records: Vec<SlotRecord>,
    pub summaries: Vec<RunSummary>,
}

impl ExperimentOutput {
    pub fn records_for<'a>(&'a self, algorithm: &'a str, seed: u64) -> impl Iterator<Item = &'a SlotRecord> {
        self.records
            .iter()
            .filter(move |r| r.algorithm == algorithm && r.seed == seed)
    }

    pub fn summary(&self, algorithm: &str, seed: u64) -> Option<&RunSummary> {
        self.summaries
            .iter()
            .find(|s| s.algorithm == algorithm && s.seed == seed)
    }

    /// Mean of `field` across seeds for one algorithm.
    pub fn mean_over_seeds(&self, algorithm: &str, field: impl Fn(&RunSummary) -> f64) -> Option<f64> {
        let values: Vec<f64> = self
            .summaries
            .iter()
            .filter(|s| s.algorithm == algorithm)
            .map(field)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}

/// Bounds the learner assumes known in advance, taken from the scenario.
pub fn scenario_bounds(scenario: &ScenarioConfig) -> EnvironmentBounds {
    EnvironmentBounds {
        // drawn weights are clamped into [radio::MIN_SWITCHING_WEIGHT, 1]
        b_max: 1.0,
        c_max: scenario.max_rate(),
        beta_max: scenario.beta.max(),
        gamma_max: scenario.gamma.max(),
    }
}

pub fn chomet_params(config: &ExperimentConfig) -> Result<HyperParams> {
    let s = &config.scenario;
    HyperParams::derive_scaled(
        s.slots,
        s.ues,
        s.cells,
        scenario_bounds(s),
        config.theta_scale,
        config.eta_scale,
    )
}

/// Average dynamic regret `R_t / t` for every prefix.
pub fn compute_regret(objectives: &[f64], oracle_utilities: &[f64]) -> Result<Vec<f64>> {
    if objectives.len() != oracle_utilities.len() {
        return Err(Error::DimensionMismatch {
            expected: oracle_utilities.len(),
            actual: objectives.len(),
        });
    }
    let mut gap = 0.0;
    Ok(objectives
        .iter()
        .zip(oracle_utilities)
        .enumerate()
        .map(|(t, (obj, best))| {
            gap += best - obj;
            gap / (t + 1) as f64
        })
        .collect())
}

/// Weighted-norm path length of a benchmark sequence, from its first
/// decision onwards.
pub fn compute_path_length(decisions: &[PreparationVector], timeline: &ScenarioTimeline) -> Result<f64> {
    if decisions.len() != timeline.len() {
        return Err(Error::DimensionMismatch {
            expected: timeline.len(),
            actual: decisions.len(),
        });
    }
    let mut total = 0.0;
    for t in 1..decisions.len() {
        total += objective::switching_norm(
            decisions[t].values(),
            decisions[t - 1].values(),
            &timeline.slots[t].switching_weights,
        )?;
    }
    Ok(total)
}

/// Decisions and per-slot scores of one algorithm on one timeline.
pub struct Trajectory {
    pub decisions: Vec<PreparationVector>,
    pub scores: Vec<ObjectiveBreakdown>,
}

pub fn run_chomet(params: HyperParams, seed: u64, timeline: &ScenarioTimeline) -> Result<Trajectory> {
    let mut learner = Chomet::new(params, seed);
    let mut decisions = Vec::with_capacity(timeline.len());
    let mut scores = Vec::with_capacity(timeline.len());
    for (t, env) in timeline.slots.iter().enumerate() {
        let report = learner
            .step(env)
            .map_err(|e| e.within(format!("slot {}", t + 1)))?;
        scores.push(report.breakdown);
        decisions.push(report.decision);
    }
    Ok(Trajectory { decisions, scores })
}

fn run_algorithm(
    config: &ExperimentConfig,
    algorithm: &Algorithm,
    seed: u64,
    timeline: &ScenarioTimeline,
    oracle: &OracleResult,
) -> Result<Trajectory> {
    let scored = |decisions: Vec<PreparationVector>| -> Result<Trajectory> {
        let scores = benchmarks::score_sequence(timeline, &decisions)?;
        Ok(Trajectory { decisions, scores })
    };
    match algorithm {
        Algorithm::Chomet => run_chomet(chomet_params(config)?, seed, timeline),
        Algorithm::Ttt(cfg) => scored(benchmarks::run_ttt_comparator(timeline, *cfg)?),
        Algorithm::OraclePerSlot => scored(oracle.decisions.clone()),
        Algorithm::OracleDp => scored(benchmarks::oracle_dp(timeline)?.decisions),
    }
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<ExperimentOutput> {
    let mut scenario = config.scenario.clone();
    scenario.seed = seed;
    let timeline = radio::generate_timeline(&scenario)?;
    let oracle = benchmarks::oracle_per_slot(&timeline)?;
    let path_length = compute_path_length(&oracle.decisions, &timeline)?;
    let slots = timeline.len();

    let mut out = ExperimentOutput::default();
    for algorithm in &config.algorithms {
        let id = algorithm.to_string();
        let traj = run_algorithm(config, algorithm, seed, &timeline, &oracle)
            .map_err(|e| e.within(format!("algorithm {id}, seed {seed}")))?;
        let objectives: Vec<f64> = traj.scores.iter().map(|s| s.objective).collect();
        let regret = compute_regret(&objectives, &oracle.utilities)?;

        let mut cum = 0.0;
        for t in 0..slots {
            let s = &traj.scores[t];
            cum += s.objective;
            out.records.push(SlotRecord {
                slot: t + 1,
                algorithm: id.clone(),
                seed,
                utility: s.utility,
                switching: s.switching_cost,
                objective: s.objective,
                cum_objective: cum,
                preparations: traj.decisions[t].total() as usize,
                oracle_g: oracle.utilities[t],
                avg_regret: regret[t],
            });
        }

        let tail = slots.saturating_sub(config.objective_window);
        let prep_from = slots.saturating_sub(config.preparations_window);
        let prep_count = (slots - prep_from) as f64;
        out.summaries.push(RunSummary {
            algorithm: id,
            seed,
            total_objective: cum,
            tail_objective: objectives[tail..].iter().sum(),
            mean_preparations: traj.decisions[prep_from..]
                .iter()
                .map(PreparationVector::total)
                .sum::<f64>()
                / prep_count,
            final_regret: regret.last().copied().unwrap_or(0.0),
            path_length,
            regret_bound: match algorithm {
                Algorithm::Chomet => Some(chomet_params(config)?.regret_bound(path_length)),
                _ => None,
            },
        });
    }
    Ok(out)
}

/// Runs the whole experiment. Seeds run on separate threads; output is
/// ordered by seed, then algorithm, then slot, and is identical to a
/// sequential run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let results: Vec<Result<ExperimentOutput>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .seeds
            .iter()
            .map(|&seed| scope.spawn(move || run_seed(config, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment worker panicked"))
            .collect()
    });
    let mut out = ExperimentOutput::default();
    for r in results {
        let part = r?;
        out.records.extend(part.records);
        out.summaries.extend(part.summaries);
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 10] = [
    "slot",
    "algorithm",
    "seed",
    "utility",
    "switching",
    "objective",
    "cum_objective",
    "preparations",
    "oracle_g",
    "avg_regret",
];

/// Formats a float with 9 significant digits, plain notation for moderate
/// magnitudes and scientific otherwise.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let plain = format!("{:.*}", (8 - exp) as usize, v);
        trim_fraction(&plain).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_records<W: Write>(records: &[SlotRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.slot.to_string(),
            r.algorithm.clone(),
            r.seed.to_string(),
            format_sig9(r.utility),
            format_sig9(r.switching),
            format_sig9(r.objective),
            format_sig9(r.cum_objective),
            r.preparations.to_string(),
            format_sig9(r.oracle_g),
            format_sig9(r.avg_regret),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(records: &[SlotRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_records(records, std::io::BufWriter::new(file))
}
