//! Experiment configurations, trial records and distributions over the
//! finite result space.
//!
//! A result is encoded as a mixed-radix integer whose most significant
//! digits are the per-party setting indices (party 1 first, radix `s`)
//! followed by the per-party outcome indices (radix `d`). All
//! distributions in the crate are indexed by this encoding.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest result space that is ever materialized as a table.
pub const ENUMERATION_CAP: usize = 1 << 24;

const SETTING_SUM_TOL: f64 = 1e-12;
const DISTRIBUTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
enum SettingDistribution {
    Uniform,
    Explicit(Vec<f64>),
}

/// Number of parties, settings per party, outcomes per setting, and the
/// joint-setting distribution, fixed before the experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    parties: usize,
    settings: usize,
    outcomes: usize,
    joint_settings: usize,
    setting_distribution: SettingDistribution,
}

impl Scenario {
    /// Scenario with a uniform joint-setting distribution.
    pub fn new(parties: usize, settings: usize, outcomes: usize) -> Result<Self> {
        if parties == 0 || settings == 0 || outcomes == 0 {
            return Err(Error::InvalidScenario(format!(
                "parties, settings and outcomes must be positive (got l={parties}, s={settings}, d={outcomes})"
            )));
        }
        let joint_settings = checked_pow(settings, parties).ok_or_else(|| {
            Error::SizeLimit(format!("s^l = {settings}^{parties} overflows"))
        })?;
        Ok(Self {
            parties,
            settings,
            outcomes,
            joint_settings,
            setting_distribution: SettingDistribution::Uniform,
        })
    }

    /// Scenario with an explicit joint-setting table of length `s^l`,
    /// indexed like the setting digits of [`Scenario::encode_result`].
    pub fn with_setting_distribution(
        parties: usize,
        settings: usize,
        outcomes: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let mut scenario = Self::new(parties, settings, outcomes)?;
        if probs.len() != scenario.joint_settings {
            return Err(Error::DimensionMismatch {
                expected: scenario.joint_settings,
                actual: probs.len(),
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidScenario(
                "setting probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SETTING_SUM_TOL {
            return Err(Error::InvalidScenario(format!(
                "setting probabilities sum to {total}, not 1"
            )));
        }
        scenario.setting_distribution = SettingDistribution::Explicit(probs);
        Ok(scenario)
    }

    /// The two-party, two-setting, two-outcome configuration with uniform settings.
    pub fn chsh() -> Self {
        Self::new(2, 2, 2).expect("static scenario")
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// Number of joint settings, `s^l`.
    pub fn joint_settings(&self) -> usize {
        self.joint_settings
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.setting_distribution, SettingDistribution::Uniform)
    }

    /// Number of possible trial results, `(d·s)^l`.
    pub fn result_space_size(&self) -> Result<usize> {
        self.settings
            .checked_mul(self.outcomes)
            .and_then(|ds| checked_pow(ds, self.parties))
            .ok_or_else(|| {
                Error::SizeLimit(format!(
                    "(d·s)^l = ({}·{})^{} exceeds the platform integer range",
                    self.outcomes, self.settings, self.parties
                ))
            })
    }

    /// Result space size, failing when it exceeds [`ENUMERATION_CAP`].
    pub fn enumerable_size(&self) -> Result<usize> {
        let k = self.result_space_size()?;
        if k > ENUMERATION_CAP {
            return Err(Error::SizeLimit(format!(
                "result space of {k} exceeds the enumeration cap {ENUMERATION_CAP}"
            )));
        }
        Ok(k)
    }

    /// Number of joint outcome tuples, `d^l`.
    pub fn joint_outcomes(&self) -> usize {
        // (d·s)^l fits whenever callers reach this through an enumerable scenario
        self.outcomes.pow(self.parties as u32)
    }

    /// Probability of the joint setting with index `joint` (0-based mixed radix).
    pub fn joint_setting_probability(&self, joint: usize) -> f64 {
        match &self.setting_distribution {
            SettingDistribution::Uniform => 1.0 / self.joint_settings as f64,
            SettingDistribution::Explicit(p) => p[joint],
        }
    }

    /// Probability of the given 1-based per-party settings.
    pub fn setting_probability(&self, settings: &[usize]) -> f64 {
        match &self.setting_distribution {
            SettingDistribution::Uniform => 1.0 / self.joint_settings as f64,
            SettingDistribution::Explicit(p) => {
                let joint = settings
                    .iter()
                    .fold(0usize, |acc, &u| acc * self.settings + (u - 1));
                p[joint]
            }
        }
    }

    /// The explicit joint-setting table.
    pub fn setting_table(&self) -> Vec<f64> {
        (0..self.joint_settings)
            .map(|j| self.joint_setting_probability(j))
            .collect()
    }

    pub fn validate(&self, x: &TrialResult) -> Result<()> {
        if x.settings.len() != self.parties || x.outcomes.len() != self.parties {
            return Err(Error::ScenarioMismatch(format!(
                "trial has {} settings and {} outcomes, scenario has {} parties",
                x.settings.len(),
                x.outcomes.len(),
                self.parties
            )));
        }
        for (party, &u) in x.settings.iter().enumerate() {
            if u == 0 || u > self.settings {
                return Err(Error::OutOfRange(format!(
                    "party {} setting {u} not in 1..={}",
                    party + 1,
                    self.settings
                )));
            }
        }
        for (party, &v) in x.outcomes.iter().enumerate() {
            if v >= self.outcomes {
                return Err(Error::OutOfRange(format!(
                    "party {} outcome {v} not in 0..{}",
                    party + 1,
                    self.outcomes
                )));
            }
        }
        Ok(())
    }

    /// Mixed-radix index of a trial result.
    pub fn encode_result(&self, x: &TrialResult) -> Result<usize> {
        self.validate(x)?;
        self.result_space_size()?;
        Ok(self.encode_unchecked(x))
    }

    pub(crate) fn encode_unchecked(&self, x: &TrialResult) -> usize {
        let joint = x
            .settings
            .iter()
            .fold(0usize, |acc, &u| acc * self.settings + (u - 1));
        x.outcomes
            .iter()
            .fold(joint, |acc, &v| acc * self.outcomes + v)
    }

    /// Inverse of [`Scenario::encode_result`].
    pub fn decode_result(&self, index: usize) -> Result<TrialResult> {
        let k = self.result_space_size()?;
        if index >= k {
            return Err(Error::OutOfRange(format!(
                "result index {index} not below {k}"
            )));
        }
        let mut rest = index;
        let mut outcomes = vec![0; self.parties];
        for slot in outcomes.iter_mut().rev() {
            *slot = rest % self.outcomes;
            rest /= self.outcomes;
        }
        let mut settings = vec![0; self.parties];
        for slot in settings.iter_mut().rev() {
            *slot = rest % self.settings + 1;
            rest /= self.settings;
        }
        Ok(TrialResult { settings, outcomes })
    }

    /// Splits an encoded index into (joint setting index, joint outcome index).
    pub(crate) fn split_index(&self, index: usize) -> (usize, usize) {
        let per_setting = self.joint_outcomes();
        (index / per_setting, index % per_setting)
    }

    pub(crate) fn header(&self) -> ScenarioHeader {
        ScenarioHeader {
            l: self.parties,
            s: self.settings,
            d: self.outcomes,
            setting_distribution: match &self.setting_distribution {
                SettingDistribution::Uniform => None,
                SettingDistribution::Explicit(p) => Some(p.clone()),
            },
        }
    }

    pub(crate) fn from_header(h: &ScenarioHeader) -> Result<Self> {
        match &h.setting_distribution {
            None => Self::new(h.l, h.s, h.d),
            Some(p) => Self::with_setting_distribution(h.l, h.s, h.d, p.clone()),
        }
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let exp = u32::try_from(exp).ok()?;
    base.checked_pow(exp)
}

/// One trial: 1-based setting choices and 0-based outcomes, one per party.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialResult {
    pub settings: Vec<usize>,
    pub outcomes: Vec<usize>,
}

impl TrialResult {
    pub fn new(settings: Vec<usize>, outcomes: Vec<usize>) -> Self {
        Self { settings, outcomes }
    }
}

/// Probability table over the result space ordered by `encode_result`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    scenario: Scenario,
    probs: Vec<f64>,
    empirical: bool,
}

impl Distribution {
    /// Validates normalization and the setting marginals.
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        let k = scenario.enumerable_size()?;
        if probs.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: probs.len(),
            });
        }
        let dist = Self {
            scenario,
            probs,
            empirical: false,
        };
        dist.check_normalized()?;
        let err = dist.max_marginal_error();
        if err > DISTRIBUTION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "setting marginals deviate from the setting distribution by {err:e}"
            )));
        }
        Ok(dist)
    }

    /// Empirical frequency table of a non-empty trial sequence.
    pub fn empirical(scenario: &Scenario, trials: &[TrialResult]) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::EmptyTrials);
        }
        let k = scenario.enumerable_size()?;
        let mut counts = vec![0u64; k];
        for x in trials {
            counts[scenario.encode_result(x)?] += 1;
        }
        Ok(Self::from_counts(scenario.clone(), &counts))
    }

    /// Empirical table from per-index counts; at least one count must be positive.
    pub(crate) fn from_counts(scenario: Scenario, counts: &[u64]) -> Self {
        let n: u64 = counts.iter().sum();
        let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self {
            scenario,
            probs,
            empirical: true,
        }
    }

    /// Unvalidated table; used for intermediate LR-model tables.
    pub(crate) fn from_raw(scenario: Scenario, probs: Vec<f64>) -> Self {
        Self {
            scenario,
            probs,
            empirical: false,
        }
    }

    /// Mixes in `eps` of the table with the known setting marginals and
    /// uniform outcomes: `(1 − eps)·self + eps·u`.
    pub fn with_floor(&self, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidInput(format!("floor {eps} not in [0, 1]")));
        }
        if eps == 0.0 {
            return Ok(self.clone());
        }
        let outcomes = self.scenario.joint_outcomes() as f64;
        let probs = self
            .probs
            .iter()
            .enumerate()
            .map(|(x, &f)| {
                let (joint, _) = self.scenario.split_index(x);
                (1.0 - eps) * f + eps * self.scenario.joint_setting_probability(joint) / outcomes
            })
            .collect();
        Ok(Self {
            scenario: self.scenario.clone(),
            probs,
            empirical: self.empirical,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: &TrialResult) -> Result<f64> {
        Ok(self.probs[self.scenario.encode_result(x)?])
    }

    /// True for tables built from observed frequencies, which need not match
    /// the setting distribution.
    pub fn is_empirical(&self) -> bool {
        self.empirical
    }

    /// `Σ_x p(x)·values[x]`.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(values)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Largest deviation of a per-setting marginal from the setting distribution.
    pub fn max_marginal_error(&self) -> f64 {
        let per = self.scenario.joint_outcomes();
        self.probs
            .chunks(per)
            .enumerate()
            .map(|(j, chunk)| {
                (chunk.iter().sum::<f64>() - self.scenario.joint_setting_probability(j)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest violation of the no-signaling equalities for two parties:
    /// each party's outcome marginal must not depend on the other's setting.
    pub fn max_signaling(&self) -> f64 {
        let sc = &self.scenario;
        if sc.parties() != 2 {
            return 0.0;
        }
        let (s, d) = (sc.settings(), sc.outcomes());
        // conditional P(outcome of `party` = v | settings (i, j))
        let cond = |i: usize, j: usize, party: usize, v: usize| -> f64 {
            let joint = i * s + j;
            let pi = sc.joint_setting_probability(joint);
            if pi == 0.0 {
                return f64::NAN;
            }
            let mut acc = 0.0;
            for other in 0..d {
                let (a, b) = if party == 0 { (v, other) } else { (other, v) };
                acc += self.probs[(joint * d + a) * d + b];
            }
            acc / pi
        };
        let mut worst: f64 = 0.0;
        for u in 0..s {
            for v in 0..d {
                for w1 in 0..s {
                    for w2 in (w1 + 1)..s {
                        let da = (cond(u, w1, 0, v) - cond(u, w2, 0, v)).abs();
                        let db = (cond(w1, u, 1, v) - cond(w2, u, 1, v)).abs();
                        for x in [da, db] {
                            if x.is_finite() {
                                worst = worst.max(x);
                            }
                        }
                    }
                }
            }
        }
        worst
    }

    fn check_normalized(&self) -> Result<()> {
        if self.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

/// Counts of observed results keyed by the result itself, so that result
/// spaces beyond the enumeration cap can still be tallied.
pub fn tally(trials: &[TrialResult]) -> HashMap<TrialResult, u64> {
    let mut counts = HashMap::new();
    for x in trials {
        *counts.entry(x.clone()).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ScenarioHeader {
    l: usize,
    s: usize,
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    setting_distribution: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    scenario: ScenarioHeader,
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    scenario: ScenarioHeader,
    probs: Vec<f64>,
}

/// Reads a trial-record file: one `{"settings":[..],"outcomes":[..]}` object
/// per line, optionally preceded by a `{"scenario":{..}}` header.
pub fn read_trials(path: impl AsRef<Path>, scenario: &Scenario) -> Result<Vec<TrialResult>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trials_from(BufReader::new(file), path, scenario)
}

pub fn read_trials_from(
    reader: impl BufRead,
    path: &Path,
    scenario: &Scenario,
) -> Result<Vec<TrialResult>> {
    let mut trials = Vec::new();
    let mut seen_record = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if value.get("scenario").is_some() {
            if seen_record {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: "scenario header after trial records".into(),
                });
            }
            let header: HeaderLine =
                serde_json::from_value(value).map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: e.to_string(),
                })?;
            let declared = Scenario::from_header(&header.scenario)?;
            if declared != *scenario {
                return Err(Error::ScenarioMismatch(format!(
                    "{}:{line_no}: file declares l={}, s={}, d={}; expected l={}, s={}, d={}",
                    path.display(),
                    declared.parties,
                    declared.settings,
                    declared.outcomes,
                    scenario.parties,
                    scenario.settings,
                    scenario.outcomes
                )));
            }
            continue;
        }
        let x: TrialResult = serde_json::from_value(value).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        scenario.validate(&x).map_err(|e| match e {
            Error::OutOfRange(msg) => Error::OutOfRange(format!("{}:{line_no}: {msg}", path.display())),
            Error::ScenarioMismatch(msg) => {
                Error::ScenarioMismatch(format!("{}:{line_no}: {msg}", path.display()))
            }
            other => other,
        })?;
        seen_record = true;
        trials.push(x);
    }
    Ok(trials)
}

/// Scenario declared by the header line of a trial file, if it has one.
pub fn read_trial_header(path: impl AsRef<Path>) -> Result<Option<Scenario>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let parse = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse(e.to_string()))?;
        if value.get("scenario").is_none() {
            return Ok(None);
        }
        let header: HeaderLine = serde_json::from_value(value).map_err(|e| parse(e.to_string()))?;
        return Scenario::from_header(&header.scenario).map(Some);
    }
    Ok(None)
}

/// Writes trials with a scenario header line.
pub fn write_trials(
    path: impl AsRef<Path>,
    scenario: &Scenario,
    trials: &[TrialResult],
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_trials_to(&mut out, scenario, trials).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trials_to(
    out: &mut impl Write,
    scenario: &Scenario,
    trials: &[TrialResult],
) -> std::io::Result<()> {
    let header = HeaderLine {
        scenario: scenario.header(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for x in trials {
        writeln!(out, "{}", serde_json::to_string(x)?)?;
    }
    Ok(())
}

pub fn write_distribution(path: impl AsRef<Path>, dist: &Distribution) -> Result<()> {
    let path = path.as_ref();
    let text = distribution_to_json(dist)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn distribution_to_json(dist: &Distribution) -> Result<String> {
    let file = DistributionFile {
        scenario: dist.scenario.header(),
        probs: dist.probs.clone(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn read_distribution(path: impl AsRef<Path>) -> Result<Distribution> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    distribution_from_json(&text)
}

pub fn distribution_from_json(text: &str) -> Result<Distribution> {
    let file: DistributionFile = serde_json::from_str(text)?;
    let scenario = Scenario::from_header(&file.scenario)?;
    Distribution::new(scenario, file.probs)
}

/// Parses `"l,s,d"`.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidScenario(format!(
            "expected `l,s,d`, got `{text}`"
        )));
    }
    let mut nums = [0usize; 3];
    for (slot, p) in nums.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| Error::InvalidScenario(format!("`{p}` is not a positive integer")))?;
    }
    Scenario::new(nums[0], nums[1], nums[2])
}
