//! Exogenous radio environment: SINR, achievable rates, best-cell indicators,
//! offsets, bandwidth availability and switching weights for every slot.
//!
//! Two generators are supported. The direct modes (`stationary`, `volatile`)
//! draw SINR in dB uniformly from a range and hold each draw for
//! `change_period` slots. The `physical` mode draws channel gains on the same
//! schedule and derives SINR from transmit powers, noise and co-channel
//! interference.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Lower clamp applied to drawn switching weights so the weighted norm stays
/// positive definite.
pub const MIN_SWITCHING_WEIGHT: f64 = 1e-3;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear ratio to dB; zero maps to negative infinity.
pub fn linear_to_db(linear: f64) -> f64 {
    if linear > 0.0 {
        10.0 * linear.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Static description of one cell for the physical SINR model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    /// Transmit power in watts.
    pub transmit_power_w: f64,
    /// Bandwidth in MHz.
    pub bandwidth_mhz: f64,
    /// Indices of the other cells sharing this cell's frequency.
    pub cochannel: Vec<usize>,
    /// Noise power spectral density in watts per MHz.
    pub noise_psd_w_per_mhz: f64,
}

impl CellConfig {
    pub fn validate(&self, index: usize, total: usize) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.transmit_power_w) {
            return Err(Error::InvalidCell(format!(
                "cell {index}: transmit power must be > 0"
            )));
        }
        if !positive(self.bandwidth_mhz) {
            return Err(Error::InvalidCell(format!(
                "cell {index}: bandwidth must be > 0"
            )));
        }
        if !positive(self.noise_psd_w_per_mhz) {
            return Err(Error::InvalidCell(format!(
                "cell {index}: noise psd must be > 0"
            )));
        }
        if self.cochannel.contains(&index) {
            return Err(Error::InvalidCell(format!(
                "cell {index} lists itself as a co-channel interferer"
            )));
        }
        if let Some(&bad) = self.cochannel.iter().find(|&&k| k >= total) {
            return Err(Error::InvalidCell(format!(
                "cell {index}: co-channel index {bad} out of range"
            )));
        }
        Ok(())
    }
}

/// Linear SINR of `cell` at a UE whose channel gains towards every cell are
/// `gains`.
pub fn compute_sinr(gains: &[f64], cell: usize, cells: &[CellConfig]) -> Result<f64> {
    if gains.len() != cells.len() {
        return Err(Error::DimensionMismatch {
            expected: cells.len(),
            actual: gains.len(),
        });
    }
    let target = cells
        .get(cell)
        .ok_or_else(|| Error::InvalidCell(format!("cell {cell} out of range")))?;
    if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::InvalidCell("channel gains must be finite and >= 0".into()));
    }
    let interference: f64 = target
        .cochannel
        .iter()
        .map(|&k| cells[k].transmit_power_w * gains[k])
        .sum();
    let denominator = target.bandwidth_mhz * target.noise_psd_w_per_mhz + interference;
    if denominator <= 0.0 {
        return Err(Error::InvalidCell(format!(
            "cell {cell}: zero noise-plus-interference"
        )));
    }
    Ok(target.transmit_power_w * gains[cell] / denominator)
}

/// Shannon rate in Mbps for a bandwidth in MHz and a linear SINR.
pub fn compute_rate(bandwidth_mhz: f64, sinr: f64) -> f64 {
    bandwidth_mhz * (1.0 + sinr).log2()
}

/// Index of the cell maximising offset-adjusted SINR (dB scale), lowest index
/// on ties. `None` when every cell is unreachable.
pub fn best_cell(sinr: &[f64], offsets_db: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (&s, &o)) in sinr.iter().zip(offsets_db).enumerate() {
        if s <= 0.0 {
            continue;
        }
        let score = linear_to_db(s) - o;
        match best {
            Some((_, top)) if score <= top => {}
            _ => best = Some((j, score)),
        }
    }
    best.map(|(j, _)| j)
}

/// One-hot row marking the best cell for a UE.
pub fn best_cell_indicator(sinr: &[f64], offsets_db: &[f64]) -> Result<Vec<f64>> {
    if sinr.len() != offsets_db.len() {
        return Err(Error::DimensionMismatch {
            expected: sinr.len(),
            actual: offsets_db.len(),
        });
    }
    let j = best_cell(sinr, offsets_db).ok_or(Error::OutOfCoverage { ue: 0, slot: 0 })?;
    let mut row = vec![0.0; sinr.len()];
    row[j] = 1.0;
    Ok(row)
}

/// Scalarization parameter that is either shared by all UE-cell pairs or
/// given per pair (row-major, UE outer).
#[derive(Debug, Clone, PartialEq)]
pub enum PairParam {
    Uniform(f64),
    PerPair(Vec<f64>),
}

impl PairParam {
    #[inline]
    pub fn at(&self, n: usize) -> f64 {
        match self {
            PairParam::Uniform(v) => *v,
            PairParam::PerPair(v) => v[n],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            PairParam::Uniform(v) => *v,
            PairParam::PerPair(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Everything exogenous about one slot. Matrices are flattened row-major with
/// the UE index outer, so pair `(i, j)` lives at `i * cells + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotEnvironment {
    pub ues: usize,
    pub cells: usize,
    /// Linear SINR, 0 for unreachable cells.
    pub sinr: Vec<f64>,
    /// Rate in Mbps.
    pub rate: Vec<f64>,
    /// Best (offset-adjusted) cell per UE.
    pub serving: Vec<usize>,
    pub offsets_db: Vec<f64>,
    pub availability: Vec<f64>,
    pub switching_weights: Vec<f64>,
    pub beta: PairParam,
    pub gamma: PairParam,
    pub delta: f64,
}

impl SlotEnvironment {
    /// Builds a slot from raw SINR, deriving rates and best cells.
    #[allow(clippy::too_many_arguments)]
    pub fn from_sinr(
        ues: usize,
        cells: usize,
        sinr: Vec<f64>,
        bandwidths_mhz: &[f64],
        offsets_db: Vec<f64>,
        availability: Vec<f64>,
        switching_weights: Vec<f64>,
        beta: PairParam,
        gamma: PairParam,
        delta: f64,
    ) -> Result<Self> {
        let n = ues * cells;
        for (what, len, want) in [
            ("sinr", sinr.len(), n),
            ("bandwidths", bandwidths_mhz.len(), cells),
            ("offsets", offsets_db.len(), cells),
            ("availability", availability.len(), cells),
            ("switching weights", switching_weights.len(), n),
        ] {
            if len != want {
                return Err(Error::InvalidScenario(format!(
                    "{what}: expected {want} entries, got {len}"
                )));
            }
        }
        let rate = sinr
            .iter()
            .enumerate()
            .map(|(idx, &s)| compute_rate(bandwidths_mhz[idx % cells], s))
            .collect();
        let mut serving = Vec::with_capacity(ues);
        for i in 0..ues {
            let row = &sinr[i * cells..(i + 1) * cells];
            serving.push(best_cell(row, &offsets_db).ok_or(Error::OutOfCoverage { ue: i, slot: 0 })?);
        }
        let env = SlotEnvironment {
            ues,
            cells,
            sinr,
            rate,
            serving,
            offsets_db,
            availability,
            switching_weights,
            beta,
            gamma,
            delta,
        };
        env.validate()?;
        Ok(env)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ues * self.cells
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Best-cell indicator `p` for the flattened pair index.
    #[inline]
    pub fn indicator(&self, n: usize) -> f64 {
        if self.serving[n / self.cells] == n % self.cells {
            1.0
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let bad = |msg: String| Err(Error::InconsistentEnvironment(msg));
        if self.sinr.len() != n || self.rate.len() != n || self.switching_weights.len() != n {
            return bad("pair vectors do not have ues*cells entries".into());
        }
        if self.serving.len() != self.ues
            || self.offsets_db.len() != self.cells
            || self.availability.len() != self.cells
        {
            return bad("per-ue or per-cell vectors have the wrong length".into());
        }
        if let Some(&j) = self.serving.iter().find(|&&j| j >= self.cells) {
            return bad(format!("serving cell {j} out of range"));
        }
        if self.sinr.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("sinr must be finite and >= 0".into());
        }
        if self.rate.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("rates must be finite and >= 0".into());
        }
        if self.availability.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return bad("availability must lie in [0, 1]".into());
        }
        if self.switching_weights.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
            return bad("switching weights must lie in (0, 1]".into());
        }
        for (name, p) in [("beta", &self.beta), ("gamma", &self.gamma)] {
            match p {
                PairParam::PerPair(v) if v.len() != n => {
                    return bad(format!("{name}: expected {n} per-pair values"));
                }
                _ => {}
            }
            let negative = match p {
                PairParam::Uniform(v) => *v < 0.0,
                PairParam::PerPair(v) => v.iter().any(|x| *x < 0.0),
            };
            if negative {
                return bad(format!("{name} must be >= 0"));
            }
        }
        if self.delta < 0.0 {
            return bad("delta must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioMode {
    Stationary,
    Volatile,
    Physical,
}

impl ScenarioMode {
    pub fn default_change_period(self) -> usize {
        match self {
            ScenarioMode::Stationary => 600,
            ScenarioMode::Volatile | ScenarioMode::Physical => 10,
        }
    }
}

impl FromStr for ScenarioMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(ScenarioMode::Stationary),
            "volatile" => Ok(ScenarioMode::Volatile),
            "physical" => Ok(ScenarioMode::Physical),
            other => Err(Error::InvalidScenario(format!(
                "unknown mode `{other}` (expected stationary, volatile or physical)"
            ))),
        }
    }
}

impl fmt::Display for ScenarioMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioMode::Stationary => "stationary",
            ScenarioMode::Volatile => "volatile",
            ScenarioMode::Physical => "physical",
        })
    }
}

/// A scalar that is constant or given slot by slot.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    PerSlot(Vec<f64>),
}

impl Schedule {
    /// Value in zero-based slot `t`.
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PerSlot(v) => v[t],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PerSlot(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn check(&self, name: &str, slots: usize) -> Result<()> {
        let values: &[f64] = match self {
            Schedule::Constant(v) => std::slice::from_ref(v),
            Schedule::PerSlot(v) => {
                if v.len() != slots {
                    return Err(Error::InvalidScenario(format!(
                        "{name}: schedule has {} values, expected {slots}",
                        v.len()
                    )));
                }
                v
            }
        };
        if values.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidScenario(format!("{name} must be finite and >= 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AvailabilityMode {
    /// `u_j = 1` always.
    Fixed,
    /// `u_j` uniform on [0, 1], redrawn with the SINR.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetRedraw {
    /// Offsets change whenever the SINR is redrawn.
    WithSinr,
    EverySlot,
}

/// Parameters of the physical SINR generator.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConfig {
    pub transmit_power_w: f64,
    pub noise_psd_w_per_mhz: f64,
    /// Channel gains are drawn uniformly in dB from this range.
    pub gain_range_db: (f64, f64),
    /// Cell `j` uses channel `j % reuse`; cells on one channel interfere.
    pub reuse: usize,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        PhysicalConfig {
            transmit_power_w: 20.0,
            noise_psd_w_per_mhz: 4e-15,
            gain_range_db: (-110.0, -80.0),
            reuse: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: ScenarioMode,
    pub ues: usize,
    pub cells: usize,
    pub slots: usize,
    pub sinr_range_db: (f64, f64),
    pub change_period: usize,
    pub bandwidths_mhz: Vec<f64>,
    pub offset_range_db: (f64, f64),
    pub offset_redraw: OffsetRedraw,
    pub beta: Schedule,
    pub gamma: Schedule,
    pub delta: Schedule,
    pub availability: AvailabilityMode,
    pub physical: PhysicalConfig,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(mode: ScenarioMode, ues: usize, cells: usize, slots: usize) -> Self {
        ScenarioConfig {
            mode,
            ues,
            cells,
            slots,
            sinr_range_db: (10.0, 30.0),
            change_period: mode.default_change_period(),
            bandwidths_mhz: vec![5.0, 10.0, 15.0, 20.0],
            offset_range_db: (0.0, 1.0),
            offset_redraw: OffsetRedraw::WithSinr,
            beta: Schedule::Constant(0.5),
            gamma: Schedule::Constant(10.0),
            delta: Schedule::Constant(5.0),
            availability: AvailabilityMode::Fixed,
            physical: PhysicalConfig::default(),
            seed: 0,
        }
    }

    /// Volatile headline scenario: 20 UEs, 10 cells, 5000 slots, SINR redrawn
    /// every 10 slots, beta 0.5, gamma 10, delta 5.
    pub fn volatile() -> Self {
        ScenarioConfig::new(ScenarioMode::Volatile, 20, 10, 5000)
    }

    /// Stationary headline scenario: as volatile but 3000 slots with the SINR
    /// redrawn every 600 slots.
    pub fn stationary() -> Self {
        ScenarioConfig::new(ScenarioMode::Stationary, 20, 10, 3000)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidScenario(m));
        if self.ues == 0 || self.cells == 0 || self.slots == 0 {
            return invalid("ues, cells and slots must be positive".into());
        }
        if self.change_period == 0 {
            return invalid("change_period must be >= 1".into());
        }
        let (lo, hi) = self.sinr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("sinr range [{lo}, {hi}] must satisfy lower < upper"));
        }
        let (olo, ohi) = self.offset_range_db;
        if !(olo.is_finite() && ohi.is_finite() && olo <= ohi) {
            return invalid(format!("offset range [{olo}, {ohi}] must satisfy lower <= upper"));
        }
        if self.bandwidths_mhz.is_empty()
            || self.bandwidths_mhz.iter().any(|w| !(w.is_finite() && *w > 0.0))
        {
            return invalid("bandwidth set must be non-empty with positive entries".into());
        }
        self.beta.check("beta", self.slots)?;
        self.gamma.check("gamma", self.slots)?;
        self.delta.check("delta", self.slots)?;
        if self.mode == ScenarioMode::Physical {
            let p = &self.physical;
            if !(p.transmit_power_w > 0.0 && p.noise_psd_w_per_mhz > 0.0) {
                return invalid("physical: power and noise psd must be > 0".into());
            }
            if p.reuse == 0 {
                return invalid("physical: reuse must be >= 1".into());
            }
            if !(p.gain_range_db.0 <= p.gain_range_db.1) {
                return invalid("physical: gain range lower must be <= upper".into());
            }
        }
        Ok(())
    }

    /// Largest achievable rate under this configuration, in Mbps.
    pub fn max_rate(&self) -> f64 {
        let w_max = self
            .bandwidths_mhz
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let s_max = match self.mode {
            ScenarioMode::Physical => {
                let p = &self.physical;
                let w_min = self.bandwidths_mhz.iter().copied().fold(f64::INFINITY, f64::min);
                p.transmit_power_w * db_to_linear(p.gain_range_db.1) / (w_min * p.noise_psd_w_per_mhz)
            }
            _ => db_to_linear(self.sinr_range_db.1),
        };
        compute_rate(w_max, s_max)
    }

    /// Cell descriptions used by the physical generator.
    pub fn physical_cells(&self, bandwidths_mhz: &[f64]) -> Vec<CellConfig> {
        let reuse = self.physical.reuse.max(1);
        (0..self.cells)
            .map(|j| CellConfig {
                transmit_power_w: self.physical.transmit_power_w,
                bandwidth_mhz: bandwidths_mhz[j],
                cochannel: (0..self.cells)
                    .filter(|&k| k != j && k % reuse == j % reuse)
                    .collect(),
                noise_psd_w_per_mhz: self.physical.noise_psd_w_per_mhz,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTimeline {
    pub ues: usize,
    pub cells: usize,
    pub bandwidths_mhz: Vec<f64>,
    pub slots: Vec<SlotEnvironment>,
}

impl ScenarioTimeline {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Generates the full timeline for `config`, a pure function of the config
/// (including its seed).
pub fn generate_timeline(config: &ScenarioConfig) -> Result<ScenarioTimeline> {
    config.validate()?;
    let (ues, cells) = (config.ues, config.cells);
    let n = ues * cells;

    let mut bw_rng = rng::stream(config.seed, Stream::Bandwidth);
    let mut sinr_rng = rng::stream(config.seed, Stream::Sinr);
    let mut offset_rng = rng::stream(config.seed, Stream::Offsets);
    let mut weight_rng = rng::stream(config.seed, Stream::SwitchingWeights);
    let mut avail_rng = rng::stream(config.seed, Stream::Availability);
    let mut gain_rng = rng::stream(config.seed, Stream::Gains);

    let bandwidths: Vec<f64> = (0..cells)
        .map(|_| config.bandwidths_mhz[bw_rng.gen_range(0..config.bandwidths_mhz.len())])
        .collect();
    let physical_cells = config.physical_cells(&bandwidths);

    let draw_offsets = |rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
        let (lo, hi) = config.offset_range_db;
        (0..cells)
            .map(|_| if lo < hi { rng.gen_range(lo..hi) } else { lo })
            .collect()
    };

    let mut sinr = vec![0.0; n];
    let mut offsets = vec![0.0; cells];
    let mut weights = vec![1.0; n];
    let mut availability = vec![1.0; cells];
    let mut out = Vec::with_capacity(config.slots);

    for t in 0..config.slots {
        let redraw = t % config.change_period == 0;
        if redraw {
            sinr = match config.mode {
                ScenarioMode::Physical => {
                    let (glo, ghi) = config.physical.gain_range_db;
                    let mut s = Vec::with_capacity(n);
                    for _ in 0..ues {
                        let gains: Vec<f64> = (0..cells)
                            .map(|_| {
                                let db = if glo < ghi { gain_rng.gen_range(glo..ghi) } else { glo };
                                db_to_linear(db)
                            })
                            .collect();
                        for j in 0..cells {
                            s.push(compute_sinr(&gains, j, &physical_cells)?);
                        }
                    }
                    s
                }
                _ => {
                    let (lo, hi) = config.sinr_range_db;
                    (0..n)
                        .map(|_| db_to_linear(sinr_rng.gen_range(lo..hi)))
                        .collect()
                }
            };
            weights = (0..n)
                .map(|_| {
                    let b: f64 = weight_rng.gen();
                    b.clamp(MIN_SWITCHING_WEIGHT, 1.0)
                })
                .collect();
            if config.availability == AvailabilityMode::Random {
                availability = (0..cells).map(|_| avail_rng.gen::<f64>()).collect();
            }
        }
        if redraw || config.offset_redraw == OffsetRedraw::EverySlot {
            offsets = draw_offsets(&mut offset_rng);
        }
        let env = SlotEnvironment::from_sinr(
            ues,
            cells,
            sinr.clone(),
            &bandwidths,
            offsets.clone(),
            availability.clone(),
            weights.clone(),
            PairParam::Uniform(config.beta.at(t)),
            PairParam::Uniform(config.gamma.at(t)),
            config.delta.at(t),
        )
        .map_err(|e| match e {
            Error::OutOfCoverage { ue, .. } => Error::OutOfCoverage { ue, slot: t + 1 },
            other => other,
        })?;
        out.push(env);
    }

    Ok(ScenarioTimeline {
        ues,
        cells,
        bandwidths_mhz: bandwidths,
        slots: out,
    })
}
