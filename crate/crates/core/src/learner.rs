//! Meta-learned cell preparation.
//!
//! A pool of projected online-gradient-ascent experts, each with its own step
//! on a doubling grid, is aggregated by exponential weights over a partially
//! linearised loss. The fractional mix is turned into an implementable binary
//! decision by systematic (Madow) sampling.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::objective::{self, DecisionKind, PreparationVector};
use crate::radio::SlotEnvironment;
use crate::rng::{self, Stream};

/// Known upper bounds on the environment, needed to size the step grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentBounds {
    pub b_max: f64,
    pub c_max: f64,
    pub beta_max: f64,
    pub gamma_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub experts: usize,
    /// Expert steps, ascending, each twice the previous.
    pub thetas: Vec<f64>,
    pub eta: f64,
    pub nu: f64,
    pub horizon: usize,
    pub ues: usize,
    pub cells: usize,
    pub bounds: EnvironmentBounds,
    /// Domain diameter `sqrt(I*J)`.
    pub d: f64,
    /// Gradient bound.
    pub g: f64,
    pub d_b: f64,
    pub d_b_dual: f64,
    pub g_b: f64,
}

/// `ceil(log2 sqrt(1 + 2T)) + 1`.
pub fn expert_count(horizon: usize) -> usize {
    let v = (1.0 + 2.0 * horizon as f64).sqrt().log2().ceil();
    v as usize + 1
}

impl HyperParams {
    pub fn derive(horizon: usize, ues: usize, cells: usize, bounds: EnvironmentBounds) -> Result<Self> {
        Self::derive_scaled(horizon, ues, cells, bounds, 1.0, 1.0)
    }

    /// As [`HyperParams::derive`] with every expert step multiplied by
    /// `theta_scale` and the meta step by `eta_scale`.
    pub fn derive_scaled(
        horizon: usize,
        ues: usize,
        cells: usize,
        bounds: EnvironmentBounds,
        theta_scale: f64,
        eta_scale: f64,
    ) -> Result<Self> {
        if horizon == 0 || ues == 0 || cells == 0 {
            return Err(Error::InvalidScenario(
                "horizon, ues and cells must be positive".into(),
            ));
        }
        let EnvironmentBounds {
            b_max,
            c_max,
            beta_max,
            gamma_max,
        } = bounds;
        if !(b_max > 0.0 && c_max > 0.0 && beta_max >= 0.0 && gamma_max >= 0.0) {
            return Err(Error::InvalidScenario(format!("invalid bounds {bounds:?}")));
        }
        if !(theta_scale > 0.0 && eta_scale > 0.0) {
            return Err(Error::InvalidScenario("step scales must be > 0".into()));
        }
        let (i, j, t) = (ues as f64, cells as f64, horizon as f64);
        let d = (i * j).sqrt();
        let g = (i * (j - 1.0) * beta_max * beta_max + i * (c_max.ln() + gamma_max).powi(2)).sqrt();
        let root_b = b_max.sqrt();
        let d_b = d * root_b;
        let d_b_dual = d / root_b;
        let g_b = g * root_b;

        let experts = expert_count(horizon);
        let base = (d_b * d_b / (t * (g * g + 2.0 * g_b))).sqrt() * theta_scale;
        let thetas = (0..experts).map(|k| base * 2f64.powi(k as i32)).collect();
        let nu = (d_b + 0.125) * (g * d + 2.0 * d_b).powi(2);
        let eta = eta_scale / (t * nu).sqrt();

        Ok(HyperParams {
            experts,
            thetas,
            eta,
            nu,
            horizon,
            ues,
            cells,
            bounds,
            d,
            g,
            d_b,
            d_b_dual,
            g_b,
        })
    }

    /// Right-hand side of the expected dynamic regret bound for a benchmark
    /// with path length `path_length`, taking the expert with the smallest
    /// prior weight (the loosest `ln(1/w)` term).
    pub fn regret_bound(&self, path_length: f64) -> f64 {
        let w = init_weights(self.experts);
        let prior = w.iter().copied().fold(f64::INFINITY, f64::min);
        let t = self.horizon as f64;
        let gg = self.g * self.g + 2.0 * self.g_b;
        let relaxed = self.nu.sqrt() * (1.0 + (1.0 / prior).ln())
            + (gg * (self.d_b * self.d_b + 2.0 * self.d_b_dual * path_length)).sqrt();
        let rounding = t * (self.g + self.bounds.b_max.sqrt()) * self.d / 2.0;
        t.sqrt() * relaxed + rounding
    }
}

/// Prior `w_k = (1 + 1/K) / (k (k + 1))`, which telescopes to a distribution.
pub fn init_weights(experts: usize) -> Vec<f64> {
    let scale = 1.0 + 1.0 / experts as f64;
    (1..=experts)
        .map(|k| scale / (k as f64 * (k as f64 + 1.0)))
        .collect()
}

/// Weighted combination `sum_k w_k x^k`.
pub fn meta_combine(weights: &[f64], experts: &[Vec<f64>]) -> Result<Vec<f64>> {
    if weights.len() != experts.len() {
        return Err(Error::DimensionMismatch {
            expected: experts.len(),
            actual: weights.len(),
        });
    }
    let len = experts.first().map_or(0, Vec::len);
    let mut mix = vec![0.0; len];
    for (w, x) in weights.iter().zip(experts) {
        if x.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: x.len(),
            });
        }
        for (m, v) in mix.iter_mut().zip(x) {
            *m += w * v;
        }
    }
    // Rounding can push a convex combination a hair outside the box.
    for m in &mut mix {
        *m = m.clamp(0.0, 1.0);
    }
    Ok(mix)
}

/// Systematic sampling with a given offset `u` in [0, 1).
///
/// Entry `n` is selected iff a point of `{u, u+1, u+2, ...}` falls in
/// `(C_{n-1}, C_n]`, where `C` is the running sum of the marginals.
pub fn madow_with_offset(marginals: &[f64], u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(marginals.len());
    let mut lower = 0.0f64;
    for &p in marginals {
        let upper = lower + p;
        let hits = (upper - u).floor() - (lower - u).floor();
        out.push(if p > 0.0 && hits >= 1.0 { 1.0 } else { 0.0 });
        lower = upper;
    }
    out
}

/// Unbiased binary rounding of a fractional decision.
pub fn madow_quantize<R: Rng + ?Sized>(
    mix: &PreparationVector,
    rng: &mut R,
) -> Result<PreparationVector> {
    let u: f64 = rng.gen();
    PreparationVector::binary(mix.ues(), mix.cells(), madow_with_offset(mix.values(), u))
}

/// `<grad, x^k - x_t> - switching_term`.
pub fn surrogate_loss(grad: &[f64], expert: &[f64], implemented: &[f64], switching_term: f64) -> f64 {
    let inner: f64 = grad
        .iter()
        .zip(expert.iter().zip(implemented))
        .map(|(g, (a, b))| g * (a - b))
        .sum();
    inner - switching_term
}

/// Exponential-weights update `w_k <- w_k exp(eta l_k) / Z`.
pub fn update_weights(weights: &[f64], losses: &[f64], eta: f64) -> Result<Vec<f64>> {
    if weights.len() != losses.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            actual: losses.len(),
        });
    }
    let shift = losses
        .iter()
        .map(|l| eta * l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut next: Vec<f64> = weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w * (eta * l - shift).exp())
        .collect();
    let z: f64 = next.iter().sum();
    for w in &mut next {
        *w /= z;
    }
    Ok(next)
}

/// One projected gradient-ascent step. The decision hull is the unit box, so
/// the projection is entrywise clipping.
pub fn expert_step(x: &[f64], grad: &[f64], theta: f64) -> Vec<f64> {
    x.iter()
        .zip(grad)
        .map(|(v, g)| (v + theta * g).clamp(0.0, 1.0))
        .collect()
}

/// What the learner saw and did in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub mix: PreparationVector,
    pub decision: PreparationVector,
    pub gradient: Vec<f64>,
    pub losses: Vec<f64>,
    /// Weights used to form this slot's mix.
    pub weights: Vec<f64>,
    pub breakdown: objective::ObjectiveBreakdown,
}

/// Running learner state.
#[derive(Debug, Clone)]
pub struct Chomet {
    params: HyperParams,
    experts: Vec<Vec<f64>>,
    weights: Vec<f64>,
    previous: PreparationVector,
    previous_mix: PreparationVector,
    rng: ChaCha12Rng,
}

impl Chomet {
    /// Fresh learner; all experts and the pre-horizon decision start at zero.
    pub fn new(params: HyperParams, seed: u64) -> Self {
        let n = params.ues * params.cells;
        let experts = vec![vec![0.0; n]; params.experts];
        let weights = init_weights(params.experts);
        Chomet {
            previous: PreparationVector::zeros(params.ues, params.cells, DecisionKind::Binary),
            previous_mix: PreparationVector::zeros(params.ues, params.cells, DecisionKind::Fractional),
            params,
            experts,
            weights,
            rng: rng::stream(seed, Stream::Quantizer),
        }
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn experts(&self) -> &[Vec<f64>] {
        &self.experts
    }

    pub fn previous_decision(&self) -> &PreparationVector {
        &self.previous
    }

    pub fn previous_mix(&self) -> &PreparationVector {
        &self.previous_mix
    }

    /// Fractional decision for the upcoming slot.
    pub fn current_mix(&self) -> Result<PreparationVector> {
        let mix = meta_combine(&self.weights, &self.experts)?;
        PreparationVector::fractional(self.params.ues, self.params.cells, mix)
    }

    /// Runs one slot: mix, quantize, observe `env`, then update weights and
    /// experts from the utility gradient at the implemented decision.
    pub fn step(&mut self, env: &SlotEnvironment) -> Result<StepReport> {
        let mix = self.current_mix()?;
        let decision = madow_quantize(&mix, &mut self.rng)?;

        // g is linear, so the gradient does not depend on where it is taken.
        let gradient = objective::utility_gradient(env)?;
        let breakdown = objective::objective(&decision, &self.previous, env)?;

        let losses: Vec<f64> = self
            .experts
            .iter()
            .map(|x| surrogate_loss(&gradient, x, decision.values(), breakdown.switching_cost))
            .collect();
        let next = update_weights(&self.weights, &losses, self.params.eta)?;
        let used = std::mem::replace(&mut self.weights, next);
        for (x, &theta) in self.experts.iter_mut().zip(&self.params.thetas) {
            *x = expert_step(x, &gradient, theta);
        }

        self.previous = decision.clone();
        self.previous_mix = mix.clone();
        Ok(StepReport {
            mix,
            decision,
            gradient,
            losses,
            weights: used,
            breakdown,
        })
    }
}
