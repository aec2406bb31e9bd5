//! Experiment configuration files.
//!
//! Configs are TOML. Top-level keys: `seeds` (list of integers, default
//! `[1, 2, 3, 4, 5]`) and `algorithms` (list of ids: `chomet`,
//! `oracle_per_slot`, `oracle_dp`, `ttt(N,TTT)`). Sections:
//!
//! - `[scenario]`: `mode` (required), `ues`, `cells`, `slots` (required),
//!   `sinr_range_db`, `change_period`, `bandwidths_mhz`, `offset_range_db`,
//!   `offset_redraw` (`with_sinr` | `every_slot`), `availability`
//!   (`fixed` | `random`), `beta`, `gamma`, `delta` (number or per-slot list)
//! - `[scenario.physical]`: `transmit_power_w`, `noise_psd_w_per_mhz`,
//!   `gain_range_db`, `reuse`
//! - `[chomet]`: `theta_scale`, `eta_scale` (multipliers on the derived
//!   expert and meta steps, default 1)
//! - `[[comparators]]`: `best`, `ttt`, `use_offsets`; each entry adds a
//!   `ttt(best,ttt)` algorithm
//! - `[output]`: `path`, `preparations_window` (100), `objective_window` (50)

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::benchmarks::TttComparatorConfig;
use crate::error::{Error, Result};
use crate::radio::{
    AvailabilityMode, OffsetRedraw, PhysicalConfig, ScenarioConfig, ScenarioMode, Schedule,
};

pub const VALID_ALGORITHMS: &str = "chomet, oracle_per_slot, oracle_dp, ttt(N,TTT)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Chomet,
    Ttt(TttComparatorConfig),
    OraclePerSlot,
    OracleDp,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Chomet => f.write_str("chomet"),
            Algorithm::Ttt(c) => write!(f, "{c}"),
            Algorithm::OraclePerSlot => f.write_str("oracle_per_slot"),
            Algorithm::OracleDp => f.write_str("oracle_dp"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || {
            Error::config(
                "algorithms",
                format!("unknown algorithm `{s}`; valid ids: {VALID_ALGORITHMS}"),
            )
        };
        match s.trim() {
            "chomet" => Ok(Algorithm::Chomet),
            "oracle_per_slot" => Ok(Algorithm::OraclePerSlot),
            "oracle_dp" => Ok(Algorithm::OracleDp),
            other => {
                let inner = other
                    .strip_prefix("ttt(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(unknown)?;
                let (n, ttt) = inner.split_once(',').ok_or_else(unknown)?;
                let n = n.trim().parse().map_err(|_| unknown())?;
                let ttt = ttt.trim().parse().map_err(|_| unknown())?;
                Ok(Algorithm::Ttt(TttComparatorConfig::new(n, ttt)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Volatile,
    Stationary,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volatile" => Ok(Preset::Volatile),
            "stationary" => Ok(Preset::Stationary),
            other => Err(Error::config(
                "preset",
                format!("unknown preset `{other}` (expected volatile or stationary)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub theta_scale: f64,
    pub eta_scale: f64,
    pub preparations_window: usize,
    pub objective_window: usize,
    pub output: Option<PathBuf>,
}

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

impl ExperimentConfig {
    pub fn new(scenario: ScenarioConfig, algorithms: Vec<Algorithm>) -> Self {
        ExperimentConfig {
            scenario,
            algorithms,
            seeds: DEFAULT_SEEDS.to_vec(),
            theta_scale: 1.0,
            eta_scale: 1.0,
            preparations_window: 100,
            objective_window: 50,
            output: None,
        }
    }

    /// Headline runs: CHOMET, the per-slot oracle and the comparator grid
    /// (N in {1,3,7} x TTT in {2,8,12} for volatile, N = 1 for stationary).
    pub fn preset(preset: Preset) -> Self {
        let (scenario, bests): (_, &[usize]) = match preset {
            Preset::Volatile => (ScenarioConfig::volatile(), &[1, 3, 7]),
            Preset::Stationary => (ScenarioConfig::stationary(), &[1]),
        };
        let mut algorithms = vec![Algorithm::Chomet, Algorithm::OraclePerSlot];
        for &n in bests {
            for ttt in [2, 8, 12] {
                algorithms.push(Algorithm::Ttt(TttComparatorConfig::new(n, ttt)));
            }
        }
        ExperimentConfig::new(scenario, algorithms)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario
            .validate()
            .map_err(|e| Error::config("scenario", e.to_string()))?;
        if self.algorithms.is_empty() {
            return Err(Error::config(
                "algorithms",
                format!("at least one algorithm is required; valid ids: {VALID_ALGORITHMS}"),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        for (idx, alg) in self.algorithms.iter().enumerate() {
            if let Algorithm::Ttt(c) = alg {
                c.validate(self.scenario.cells)
                    .map_err(|e| Error::config(format!("algorithms[{idx}] ({alg})"), e.to_string()))?;
            }
        }
        if !(self.theta_scale > 0.0 && self.theta_scale.is_finite()) {
            return Err(Error::config("chomet.theta_scale", "must be a positive number"));
        }
        if !(self.eta_scale > 0.0 && self.eta_scale.is_finite()) {
            return Err(Error::config("chomet.eta_scale", "must be a positive number"));
        }
        if self.preparations_window == 0 {
            return Err(Error::config("output.preparations_window", "must be >= 1"));
        }
        if self.objective_window == 0 {
            return Err(Error::config("output.objective_window", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSchedule {
    Constant(f64),
    PerSlot(Vec<f64>),
}

impl From<RawSchedule> for Schedule {
    fn from(r: RawSchedule) -> Self {
        match r {
            RawSchedule::Constant(v) => Schedule::Constant(v),
            RawSchedule::PerSlot(v) => Schedule::PerSlot(v),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    transmit_power_w: Option<f64>,
    noise_psd_w_per_mhz: Option<f64>,
    gain_range_db: Option<[f64; 2]>,
    reuse: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    mode: String,
    ues: usize,
    cells: usize,
    slots: usize,
    sinr_range_db: Option<[f64; 2]>,
    change_period: Option<usize>,
    bandwidths_mhz: Option<Vec<f64>>,
    offset_range_db: Option<[f64; 2]>,
    offset_redraw: Option<OffsetRedraw>,
    availability: Option<AvailabilityMode>,
    beta: Option<RawSchedule>,
    gamma: Option<RawSchedule>,
    delta: Option<RawSchedule>,
    physical: Option<RawPhysical>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChomet {
    theta_scale: Option<f64>,
    eta_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComparator {
    best: usize,
    ttt: usize,
    #[serde(default)]
    use_offsets: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    preparations_window: Option<usize>,
    objective_window: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    algorithms: Vec<String>,
    scenario: RawScenario,
    chomet: Option<RawChomet>,
    #[serde(default)]
    comparators: Vec<RawComparator>,
    output: Option<RawOutput>,
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let span = e
            .span()
            .map(|s| format!(" (bytes {}..{})", s.start, s.end))
            .unwrap_or_default();
        Error::config("<document>", format!("{}{span}", e.message()))
    })?;

    let s = raw.scenario;
    let mode: ScenarioMode = s
        .mode
        .parse()
        .map_err(|e: Error| Error::config("scenario.mode", e.to_string()))?;
    let mut scenario = ScenarioConfig::new(mode, s.ues, s.cells, s.slots);
    if let Some([lo, hi]) = s.sinr_range_db {
        scenario.sinr_range_db = (lo, hi);
    }
    if let Some(p) = s.change_period {
        scenario.change_period = p;
    }
    if let Some(b) = s.bandwidths_mhz {
        scenario.bandwidths_mhz = b;
    }
    if let Some([lo, hi]) = s.offset_range_db {
        scenario.offset_range_db = (lo, hi);
    }
    if let Some(r) = s.offset_redraw {
        scenario.offset_redraw = r;
    }
    if let Some(a) = s.availability {
        scenario.availability = a;
    }
    if let Some(v) = s.beta {
        scenario.beta = v.into();
    }
    if let Some(v) = s.gamma {
        scenario.gamma = v.into();
    }
    if let Some(v) = s.delta {
        scenario.delta = v.into();
    }
    if let Some(p) = s.physical {
        let d = PhysicalConfig::default();
        scenario.physical = PhysicalConfig {
            transmit_power_w: p.transmit_power_w.unwrap_or(d.transmit_power_w),
            noise_psd_w_per_mhz: p.noise_psd_w_per_mhz.unwrap_or(d.noise_psd_w_per_mhz),
            gain_range_db: p.gain_range_db.map_or(d.gain_range_db, |[a, b]| (a, b)),
            reuse: p.reuse.unwrap_or(d.reuse),
        };
    }

    let mut algorithms = Vec::new();
    for (idx, id) in raw.algorithms.iter().enumerate() {
        let alg: Algorithm = id.parse().map_err(|e| match e {
            Error::Config { message, .. } => Error::config(format!("algorithms[{idx}]"), message),
            other => other,
        })?;
        algorithms.push(alg);
    }
    for (idx, c) in raw.comparators.iter().enumerate() {
        let cfg = TttComparatorConfig {
            best: c.best,
            ttt: c.ttt,
            use_offsets: c.use_offsets,
        };
        cfg.validate(scenario.cells)
            .map_err(|e| Error::config(format!("comparators[{idx}]"), e.to_string()))?;
        algorithms.push(Algorithm::Ttt(cfg));
    }

    let mut config = ExperimentConfig::new(scenario, algorithms);
    if let Some(seeds) = raw.seeds {
        config.seeds = seeds;
    }
    if let Some(c) = raw.chomet {
        config.theta_scale = c.theta_scale.unwrap_or(config.theta_scale);
        config.eta_scale = c.eta_scale.unwrap_or(config.eta_scale);
    }
    if let Some(out) = raw.output {
        config.output = out.path;
        if let Some(w) = out.preparations_window {
            config.preparations_window = w;
        }
        if let Some(w) = out.objective_window {
            config.objective_window = w;
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| e.within(path.display().to_string()))
}
