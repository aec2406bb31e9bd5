//! Per-slot utility, its gradient, the weighted switching norm and the
//! combined objective `g_t(x_t) - delta_t * ||x_t - x_{t-1}||_{B_t}`.
//!
//! The utility is linear in the decision, so its gradient depends only on the
//! environment. Rates enter through the natural log.

use crate::error::{Error, Result};
use crate::radio::SlotEnvironment;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionKind {
    /// Entries in [0, 1].
    Fractional,
    /// Entries in {0, 1}.
    Binary,
}

/// A UE-by-cell preparation decision, flattened row-major (UE outer).
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationVector {
    ues: usize,
    cells: usize,
    kind: DecisionKind,
    values: Vec<f64>,
}

impl PreparationVector {
    pub fn zeros(ues: usize, cells: usize, kind: DecisionKind) -> Self {
        PreparationVector {
            ues,
            cells,
            kind,
            values: vec![0.0; ues * cells],
        }
    }

    pub fn fractional(ues: usize, cells: usize, values: Vec<f64>) -> Result<Self> {
        Self::checked(ues, cells, DecisionKind::Fractional, values)
    }

    pub fn binary(ues: usize, cells: usize, values: Vec<f64>) -> Result<Self> {
        Self::checked(ues, cells, DecisionKind::Binary, values)
    }

    fn checked(ues: usize, cells: usize, kind: DecisionKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != ues * cells {
            return Err(Error::DimensionMismatch {
                expected: ues * cells,
                actual: values.len(),
            });
        }
        let ok = match kind {
            DecisionKind::Fractional => values.iter().all(|v| (0.0..=1.0).contains(v)),
            DecisionKind::Binary => values.iter().all(|&v| v == 0.0 || v == 1.0),
        };
        if !ok {
            return Err(Error::InvalidDecision(format!(
                "{kind:?} decision has entries outside its domain"
            )));
        }
        let v = PreparationVector {
            ues,
            cells,
            kind,
            values,
        };
        // Per-UE totals never exceed the cell count on the unit box.
        debug_assert!(v.per_ue_totals().iter().all(|&s| s <= cells as f64));
        Ok(v)
    }

    pub fn ues(&self) -> usize {
        self.ues
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn kind(&self) -> DecisionKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, ue: usize, cell: usize) -> f64 {
        self.values[ue * self.cells + cell]
    }

    /// Sum of all entries; for a binary decision, the number of preparations.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn per_ue_totals(&self) -> Vec<f64> {
        self.values
            .chunks(self.cells.max(1))
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Components of the per-slot objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown {
    pub rate_term: f64,
    pub beta_penalty: f64,
    pub gamma_penalty: f64,
    pub utility: f64,
    /// Unscaled weighted norm of the decision change.
    pub switching_norm: f64,
    /// `delta * switching_norm`.
    pub switching_cost: f64,
    pub objective: f64,
}

fn check_dims(len: usize, env: &SlotEnvironment) -> Result<()> {
    if len != env.len() {
        return Err(Error::DimensionMismatch {
            expected: env.len(),
            actual: len,
        });
    }
    Ok(())
}

fn log_rate(env: &SlotEnvironment, n: usize) -> Result<f64> {
    let c = env.rate[n];
    if c <= 0.0 {
        return Err(Error::InconsistentEnvironment(format!(
            "pair {n} is the best cell but has zero rate"
        )));
    }
    Ok(c.ln())
}

/// The three utility terms, unsigned.
fn utility_terms(x: &[f64], env: &SlotEnvironment) -> Result<(f64, f64, f64)> {
    check_dims(x.len(), env)?;
    let (mut rate, mut beta, mut gamma) = (0.0, 0.0, 0.0);
    for (n, &xn) in x.iter().enumerate() {
        let p = env.indicator(n);
        if p == 1.0 {
            rate += xn * env.availability[n % env.cells] * log_rate(env, n)?;
            gamma += env.gamma.at(n) * (1.0 - xn);
        } else {
            beta += env.beta.at(n) * xn;
        }
    }
    Ok((rate, beta, gamma))
}

/// `g_t(x)`.
pub fn utility(x: &PreparationVector, env: &SlotEnvironment) -> Result<f64> {
    let (rate, beta, gamma) = utility_terms(x.values(), env)?;
    Ok(rate - beta - gamma)
}

/// Gradient of `g_t`; constant in the decision.
pub fn utility_gradient(env: &SlotEnvironment) -> Result<Vec<f64>> {
    (0..env.len())
        .map(|n| {
            if env.indicator(n) == 1.0 {
                Ok(env.availability[n % env.cells] * log_rate(env, n)? + env.gamma.at(n))
            } else {
                Ok(-env.beta.at(n))
            }
        })
        .collect()
}

/// `sqrt(sum_n b_n (x_n - prev_n)^2)`.
pub fn switching_norm(x: &[f64], prev: &[f64], weights: &[f64]) -> Result<f64> {
    if x.len() != prev.len() || x.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: if prev.len() != x.len() { prev.len() } else { weights.len() },
        });
    }
    let mut acc = 0.0;
    for ((&a, &b), &w) in x.iter().zip(prev).zip(weights) {
        if w <= 0.0 {
            return Err(Error::InconsistentEnvironment(
                "switching weights must be positive".into(),
            ));
        }
        let d = a - b;
        acc += w * d * d;
    }
    Ok(acc.sqrt())
}

/// Full objective for implementing `x` after `prev` in slot `env`.
pub fn objective(
    x: &PreparationVector,
    prev: &PreparationVector,
    env: &SlotEnvironment,
) -> Result<ObjectiveBreakdown> {
    evaluate(x.values(), prev.values(), env)
}

/// Slice form of [`objective`], used on hot paths.
pub fn evaluate(x: &[f64], prev: &[f64], env: &SlotEnvironment) -> Result<ObjectiveBreakdown> {
    let (rate_term, beta_penalty, gamma_penalty) = utility_terms(x, env)?;
    let utility = rate_term - beta_penalty - gamma_penalty;
    let norm = switching_norm(x, prev, &env.switching_weights)?;
    let switching_cost = env.delta * norm;
    Ok(ObjectiveBreakdown {
        rate_term,
        beta_penalty,
        gamma_penalty,
        utility,
        switching_norm: norm,
        switching_cost,
        objective: utility - switching_cost,
    })
}
