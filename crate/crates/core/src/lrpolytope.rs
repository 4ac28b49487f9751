//! Deterministic local-realistic strategies and their convex mixtures.
//!
//! A deterministic strategy fixes one outcome for every (party, local
//! setting) pair; there are `d^{l·s}` of them. Strategy `h` is identified
//! by its mixed-radix index with digits ordered party-major, setting-minor.
//! Each strategy distribution has exactly one non-zero result per joint
//! setting, so [`LrPolytope`] stores only those `s^l` result indices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::{Distribution, Scenario};

/// Largest strategy count that is ever enumerated.
pub const STRATEGY_CAP: usize = 1 << 20;

const SIMPLEX_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    index: usize,
    settings: usize,
    /// `outcomes[party·s + setting]`, settings 0-based.
    outcomes: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn index(&self) -> usize {
        self.index
    }

    /// Outcome of `party` (0-based) at local `setting` (1-based).
    pub fn outcome(&self, party: usize, setting: usize) -> usize {
        self.outcomes[party * self.settings + setting - 1]
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }
}

/// `d^{l·s}`, or a size error beyond [`STRATEGY_CAP`].
pub fn strategy_count(scenario: &Scenario) -> Result<usize> {
    let digits = scenario.parties() * scenario.settings();
    let h = u32::try_from(digits)
        .ok()
        .and_then(|e| scenario.outcomes().checked_pow(e))
        .filter(|h| *h <= STRATEGY_CAP)
        .ok_or_else(|| {
            Error::SizeLimit(format!(
                "{}^{digits} deterministic strategies exceed the cap {STRATEGY_CAP}",
                scenario.outcomes()
            ))
        })?;
    Ok(h)
}

fn decode_strategy(scenario: &Scenario, index: usize) -> DeterministicStrategy {
    let digits = scenario.parties() * scenario.settings();
    let d = scenario.outcomes();
    let mut outcomes = vec![0; digits];
    let mut rest = index;
    for slot in outcomes.iter_mut().rev() {
        *slot = rest % d;
        rest /= d;
    }
    DeterministicStrategy {
        index,
        settings: scenario.settings(),
        outcomes,
    }
}

/// All deterministic strategies in mixed-radix order.
pub fn enumerate_strategies(scenario: &Scenario) -> Result<Vec<DeterministicStrategy>> {
    let h = strategy_count(scenario)?;
    Ok((0..h).map(|i| decode_strategy(scenario, i)).collect())
}

/// Result indices reached by `strategy`, one per joint setting.
fn strategy_support(scenario: &Scenario, strategy: &DeterministicStrategy) -> Vec<usize> {
    let l = scenario.parties();
    let s = scenario.settings();
    let d = scenario.outcomes();
    (0..scenario.joint_settings())
        .map(|joint| {
            // setting digits of `joint`, party 1 most significant
            let mut local = vec![0; l];
            let mut rest = joint;
            for slot in local.iter_mut().rev() {
                *slot = rest % s;
                rest /= s;
            }
            local
                .iter()
                .enumerate()
                .fold(joint, |acc, (party, &u)| acc * d + strategy.outcomes[party * s + u])
        })
        .collect()
}

pub fn strategy_distribution(
    scenario: &Scenario,
    strategy: &DeterministicStrategy,
) -> Result<Distribution> {
    let k = scenario.enumerable_size()?;
    if strategy.outcomes.len() != scenario.parties() * scenario.settings()
        || strategy.outcomes.iter().any(|&v| v >= scenario.outcomes())
    {
        return Err(Error::InvalidInput("strategy does not fit the scenario".into()));
    }
    let mut probs = vec![0.0; k];
    for (joint, x) in strategy_support(scenario, strategy).into_iter().enumerate() {
        probs[x] = scenario.joint_setting_probability(joint);
    }
    Ok(Distribution::from_raw(scenario.clone(), probs))
}

/// Convex weights over the deterministic strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct LRMixture {
    weights: Vec<f64>,
}

impl LRMixture {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one weight".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "mixture weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidInput(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(count: usize) -> Self {
        Self {
            weights: vec![1.0 / count as f64; count],
        }
    }

    pub fn point(count: usize, at: usize) -> Self {
        let mut weights = vec![0.0; count];
        weights[at] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

pub fn mixture_distribution(scenario: &Scenario, mixture: &LRMixture) -> Result<Distribution> {
    let poly = LrPolytope::new(scenario)?;
    poly.mixture_distribution(mixture)
}

/// Sparse vertex table of the LR polytope for one scenario.
#[derive(Debug, Clone)]
pub struct LrPolytope {
    scenario: Scenario,
    strategies: usize,
    joint: usize,
    /// `support[h·joint + j]` is the result index hit by strategy h at joint setting j.
    support: Vec<usize>,
    setting_probs: Vec<f64>,
}

impl LrPolytope {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.enumerable_size()?;
        let strategies = strategy_count(scenario)?;
        let joint = scenario.joint_settings();
        let mut support = Vec::with_capacity(strategies * joint);
        for h in 0..strategies {
            support.extend(strategy_support(scenario, &decode_strategy(scenario, h)));
        }
        Ok(Self {
            scenario: scenario.clone(),
            strategies,
            joint,
            support,
            setting_probs: scenario.setting_table(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn strategy_count(&self) -> usize {
        self.strategies
    }

    pub fn joint_settings(&self) -> usize {
        self.joint
    }

    /// Result indices of strategy `h`, one per joint setting.
    pub fn support(&self, h: usize) -> &[usize] {
        &self.support[h * self.joint..(h + 1) * self.joint]
    }

    pub fn setting_probs(&self) -> &[f64] {
        &self.setting_probs
    }

    /// `p_λ(x) = Σ_h λ_h e_h(x)` as a raw table.
    pub fn mixture_probs(&self, weights: &[f64]) -> Vec<f64> {
        let k = self.scenario.joint_outcomes() * self.joint;
        let mut probs = vec![0.0; k];
        for (h, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (j, &x) in self.support(h).iter().enumerate() {
                probs[x] += w * self.setting_probs[j];
            }
        }
        probs
    }

    pub fn mixture_distribution(&self, mixture: &LRMixture) -> Result<Distribution> {
        if mixture.weights.len() != self.strategies {
            return Err(Error::DimensionMismatch {
                expected: self.strategies,
                actual: mixture.weights.len(),
            });
        }
        Ok(Distribution::from_raw(
            self.scenario.clone(),
            self.mixture_probs(&mixture.weights),
        ))
    }

    /// `⟨values⟩` under every deterministic strategy.
    pub fn vertex_expectations(&self, values: &[f64]) -> Vec<f64> {
        (0..self.strategies)
            .into_par_iter()
            .map(|h| {
                self.support(h)
                    .iter()
                    .zip(&self.setting_probs)
                    .map(|(&x, &p)| p * values[x])
                    .sum()
            })
            .collect()
    }

    /// Largest LR expectation of `values`, attained at a vertex.
    pub fn max_expectation(&self, values: &[f64]) -> f64 {
        self.vertex_expectations(values)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
