//! Seeded i.i.d. trial sampling and the end-to-end experiment runner.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellfn::{primary_functional, standardized_set, Functional};
use crate::error::{Error, Result};
use crate::gainrates::{gain_martingale, gain_spbr, optimal_gain};
use crate::optim::OptimizerControls;
use crate::protocols::{
    run_full_pbr, run_martingale, run_simplified_pbr, ReportRow, DEFAULT_BLOCK_SIZE,
    DEFAULT_FULL_PBR_FLOOR,
};
use crate::scenario::{Distribution, TrialResult};

/// Identifier of the generator behind [`sample_trials`], written into reports.
pub const RNG_NAME: &str = "chacha20";

/// `n` i.i.d. draws from `q` by inverse CDF over the encoded result index.
pub fn sample_trials(q: &Distribution, n: usize, seed: u64) -> Result<Vec<TrialResult>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut cdf = Vec::with_capacity(q.probs().len());
    let mut acc = 0.0;
    for &p in q.probs() {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    // rounding in the running sum must never land on a trailing zero-probability result
    let last_positive = q.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u).min(last_positive);
            q.scenario().decode_result(idx)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Mart,
    Spbr,
    Fpbr,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Mart, Protocol::Spbr, Protocol::Fpbr];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Mart => "mart",
            Protocol::Spbr => "spbr",
            Protocol::Fpbr => "fpbr",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mart" => Ok(Protocol::Mart),
            "spbr" => Ok(Protocol::Spbr),
            "fpbr" => Ok(Protocol::Fpbr),
            other => Err(Error::InvalidInput(format!(
                "unknown protocol `{other}` (expected mart, spbr or fpbr)"
            ))),
        }
    }
}

/// Parses a comma-separated protocol list such as `mart,spbr`.
pub fn parse_protocols(text: &str) -> Result<Vec<Protocol>> {
    let mut out: Vec<Protocol> = Vec::new();
    for p in text.split(',').filter(|p| !p.trim().is_empty()) {
        let p: Protocol = p.parse()?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no protocol selected".into()));
    }
    Ok(out)
}

/// Everything needed to replay one simulated experiment.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    /// Label of the source, e.g. `cglmp:3`.
    pub source: String,
    pub distribution: Distribution,
    /// Catalog names of the sPBR set; the first non-trivial functional
    /// also drives the martingale protocol.
    pub functions: String,
    pub trials: usize,
    pub seed: u64,
    pub protocols: Vec<Protocol>,
    pub block_size: usize,
    pub controls: OptimizerControls,
    /// Floor mixed into the full-PBR estimate before projection.
    pub full_floor: f64,
    /// Also compute exact asymptotic rates for the overlay rows.
    pub asymptotes: bool,
}

impl SimulationPlan {
    pub fn new(source: impl Into<String>, distribution: Distribution, functions: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            distribution,
            functions: functions.into(),
            trials: 10_000,
            seed: 1,
            protocols: Protocol::ALL.to_vec(),
            block_size: DEFAULT_BLOCK_SIZE,
            controls: OptimizerControls::default(),
            full_floor: DEFAULT_FULL_PBR_FLOOR,
            asymptotes: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("a simulation needs at least one trial".into()));
        }
        if self.block_size == 0 {
            return Err(Error::InvalidInput("block size must be at least 1".into()));
        }
        if self.protocols.is_empty() {
            return Err(Error::InvalidInput("no protocol selected".into()));
        }
        self.controls.validate()
    }

    /// The functional used by the martingale protocol.
    pub fn martingale_functional(&self) -> Result<Functional> {
        primary_functional(&self.functions, self.distribution.scenario())
    }
}

/// One protocol's running curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub protocol: Protocol,
    pub rows: Vec<ReportRow>,
    /// Exact asymptotic rate (bits/trial) for the overlay, if computed.
    pub rate: Option<f64>,
    pub zero_ratio: bool,
    pub optimizer_warning: bool,
}

impl ProtocolRun {
    /// `−log2 p` after the last trial.
    pub fn final_neg_log2_p(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| -r.log2_p)
    }

    /// `N·rate − (−log2 p_N)`.
    pub fn learning_offset(&self) -> Option<f64> {
        let n = self.rows.last()?.n as f64;
        Some(n * self.rate? - self.final_neg_log2_p())
    }

    /// Least-squares slope of `−log2 p` against `n` over the last `window` rows.
    pub fn tail_slope(&self, window: usize) -> f64 {
        let start = self.rows.len().saturating_sub(window);
        let tail = &self.rows[start..];
        let m = tail.len() as f64;
        if tail.len() < 2 {
            return 0.0;
        }
        let mean_n = tail.iter().map(|r| r.n as f64).sum::<f64>() / m;
        let mean_y = tail.iter().map(|r| -r.log2_p).sum::<f64>() / m;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for r in tail {
            let dx = r.n as f64 - mean_n;
            sxy += dx * (-r.log2_p - mean_y);
            sxx += dx * dx;
        }
        sxy / sxx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub source: String,
    pub seed: u64,
    pub trials: usize,
    pub block_size: usize,
    pub runs: Vec<ProtocolRun>,
}

impl ExperimentReport {
    pub fn run(&self, protocol: Protocol) -> Option<&ProtocolRun> {
        self.runs.iter().find(|r| r.protocol == protocol)
    }

    pub fn header(&self) -> String {
        format!(
            "# source={} rng={RNG_NAME} seed={} trials={} block={}",
            self.source, self.seed, self.trials, self.block_size
        )
    }
}

/// Exact asymptotic rates of the plan's source, per protocol.
pub fn asymptotic_rates(plan: &SimulationPlan) -> Result<Vec<(Protocol, f64)>> {
    let q = &plan.distribution;
    let mut out = Vec::new();
    for &p in &plan.protocols {
        let rate = match p {
            Protocol::Mart => {
                let f = plan.martingale_functional()?;
                let i_q = q.expectation(&f.table()?);
                gain_martingale(i_q.max(f.bound()), f.sup(), f.inf(), f.bound())?
            }
            Protocol::Spbr => {
                let set = standardized_set(&plan.functions, q.scenario())?;
                gain_spbr(q, &set, &plan.controls)?.0
            }
            Protocol::Fpbr => optimal_gain(q, &plan.controls)?,
        };
        out.push((p, rate));
    }
    Ok(out)
}

/// Runs every selected protocol on one trial sequence.
pub fn run_on_trials(
    plan: &SimulationPlan,
    trials: &[TrialResult],
    rates: Option<&[(Protocol, f64)]>,
) -> Result<Vec<ProtocolRun>> {
    let scenario = plan.distribution.scenario();
    let rate_of = |p: Protocol| rates.and_then(|r| r.iter().find(|(q, _)| *q == p).map(|(_, v)| *v));
    let mut runs = Vec::with_capacity(plan.protocols.len());
    for &p in &plan.protocols {
        let run = match p {
            Protocol::Mart => {
                let state = run_martingale(trials, &plan.martingale_functional()?)?;
                ProtocolRun {
                    protocol: p,
                    rows: state.history,
                    rate: rate_of(p),
                    zero_ratio: false,
                    optimizer_warning: false,
                }
            }
            Protocol::Spbr => {
                let set = standardized_set(&plan.functions, scenario)?;
                let state = run_simplified_pbr(trials, set, plan.block_size, &plan.controls)?;
                ProtocolRun {
                    protocol: p,
                    rows: state.history,
                    rate: rate_of(p),
                    zero_ratio: state.zero_ratio,
                    optimizer_warning: state.optimizer_warning,
                }
            }
            Protocol::Fpbr => {
                let controls = OptimizerControls {
                    floor: plan.full_floor,
                    ..plan.controls
                };
                let state = run_full_pbr(trials, scenario, plan.block_size, &controls)?;
                ProtocolRun {
                    protocol: p,
                    rows: state.history,
                    rate: rate_of(p),
                    zero_ratio: state.zero_ratio,
                    optimizer_warning: state.optimizer_warning,
                }
            }
        };
        runs.push(run);
    }
    Ok(runs)
}

/// Samples once and feeds the same sequence to each selected protocol.
pub fn run_experiment(plan: &SimulationPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let rates = if plan.asymptotes {
        Some(asymptotic_rates(plan)?)
    } else {
        None
    };
    run_seed(plan, plan.seed, rates.as_deref())
}

fn run_seed(plan: &SimulationPlan, seed: u64, rates: Option<&[(Protocol, f64)]>) -> Result<ExperimentReport> {
    let trials = sample_trials(&plan.distribution, plan.trials, seed)?;
    Ok(ExperimentReport {
        source: plan.source.clone(),
        seed,
        trials: plan.trials,
        block_size: plan.block_size,
        runs: run_on_trials(plan, &trials, rates)?,
    })
}

/// Independent experiments for each seed, run in parallel; rates are
/// computed once and shared.
pub fn run_seeds(plan: &SimulationPlan, seeds: &[u64]) -> Result<Vec<ExperimentReport>> {
    plan.validate()?;
    let rates = if plan.asymptotes {
        Some(asymptotic_rates(plan)?)
    } else {
        None
    };
    seeds
        .par_iter()
        .map(|&seed| run_seed(plan, seed, rates.as_deref()))
        .collect()
}

/// Writes `n,<protocol>…,<protocol>_asymptote…` with `−log2 p` per protocol.
pub fn write_curves(out: &mut impl Write, report: &ExperimentReport, every: usize) -> std::io::Result<()> {
    writeln!(out, "{}", report.header())?;
    let mut cols = vec!["n".to_string()];
    cols.extend(report.runs.iter().map(|r| r.protocol.to_string()));
    cols.extend(
        report
            .runs
            .iter()
            .filter(|r| r.rate.is_some())
            .map(|r| format!("{}_asymptote", r.protocol)),
    );
    writeln!(out, "{}", cols.join(","))?;
    let len = report.runs.first().map_or(0, |r| r.rows.len());
    let step = every.max(1);
    for i in 0..len {
        let n = i + 1;
        if n % step != 0 && n != len {
            continue;
        }
        let mut line = n.to_string();
        for r in &report.runs {
            line.push_str(&format!(",{}", -r.rows[i].log2_p));
        }
        for r in report.runs.iter().filter_map(|r| r.rate) {
            line.push_str(&format!(",{}", n as f64 * r));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Per-seed final `−log2 p` values, one row per seed.
pub fn write_seed_summary(out: &mut impl Write, reports: &[ExperimentReport]) -> std::io::Result<()> {
    let Some(first) = reports.first() else {
        return writeln!(out, "seed");
    };
    writeln!(out, "# source={} rng={RNG_NAME} trials={} block={}", first.source, first.trials, first.block_size)?;
    let mut cols = vec!["seed".to_string()];
    for r in &first.runs {
        cols.push(format!("{}_neg_log2_p", r.protocol));
        if r.rate.is_some() {
            cols.push(format!("{}_offset", r.protocol));
        }
    }
    writeln!(out, "{}", cols.join(","))?;
    for rep in reports {
        let mut line = rep.seed.to_string();
        for r in &rep.runs {
            line.push_str(&format!(",{}", r.final_neg_log2_p()));
            if let Some(offset) = r.learning_offset() {
                line.push_str(&format!(",{offset}"));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes `curves.csv` plus one `n,statistic,p_value` report per protocol
/// into `dir`.
pub fn write_experiment(dir: impl AsRef<Path>, report: &ExperimentReport, every: usize) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("curves.csv");
    let mut buf = Vec::new();
    write_curves(&mut buf, report, every).map_err(|e| Error::io(&path, e))?;
    std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    for run in &report.runs {
        let path = dir.join(format!("{}.csv", run.protocol));
        let mut buf = Vec::new();
        writeln!(buf, "{}", report.header()).map_err(|e| Error::io(&path, e))?;
        crate::protocols::write_report(&mut buf, &run.rows, Some(every)).map_err(|e| Error::io(&path, e))?;
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Fraction of seeds whose final p-value is at most each `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exceedance {
    pub protocol: Protocol,
    pub alpha: f64,
    pub rate: f64,
    pub runs: usize,
}

impl Exceedance {
    /// `α + 3·√(α/runs)`.
    pub fn allowance(&self) -> f64 {
        self.alpha + 3.0 * (self.alpha / self.runs as f64).sqrt()
    }

    pub fn holds(&self) -> bool {
        self.rate <= self.allowance()
    }
}

/// Monte Carlo check of `Prob(p ≤ α) ≤ α` for data drawn from an LR source.
pub fn validity_exceedance(
    plan: &SimulationPlan,
    seeds: std::ops::Range<u64>,
    alphas: &[f64],
) -> Result<Vec<Exceedance>> {
    plan.validate()?;
    let finals: Vec<Vec<f64>> = seeds
        .clone()
        .into_par_iter()
        .map(|seed| {
            let trials = sample_trials(&plan.distribution, plan.trials, seed)?;
            let runs = run_on_trials(plan, &trials, None)?;
            Ok(runs.iter().map(|r| r.rows.last().map_or(1.0, |x| x.p_value)).collect())
        })
        .collect::<Result<_>>()?;
    let runs = finals.len();
    let mut out = Vec::new();
    for (k, &protocol) in plan.protocols.iter().enumerate() {
        for &alpha in alphas {
            let hits = finals.iter().filter(|p| p[k] <= alpha).count();
            out.push(Exceedance {
                protocol,
                alpha,
                rate: hits as f64 / runs.max(1) as f64,
                runs,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lrpolytope::{LRMixture, LrPolytope};
    use crate::quantum::{cglmp_config, chsh_config};
    use crate::scenario::Scenario;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn sampling_is_deterministic() {
        let q = chsh_config(FRAC_PI_4).unwrap().distribution().unwrap();
        assert!(sample_trials(&q, 0, 3).unwrap().is_empty());
        let a = sample_trials(&q, 500, 7).unwrap();
        let b = sample_trials(&q, 500, 7).unwrap();
        let c = sample_trials(&q, 500, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_chsh_mean_is_within_five_sigma() {
        let q = chsh_config(FRAC_PI_4).unwrap().distribution().unwrap();
        let f = Functional::chsh(q.scenario()).unwrap();
        let table = f.table().unwrap();
        let n = 100_000;
        let trials = sample_trials(&q, n, 11).unwrap();
        let mean = trials.iter().map(|x| f.evaluate(x)).sum::<f64>() / n as f64;
        let expected = q.expectation(&table);
        let second: f64 = q.probs().iter().zip(&table).map(|(p, v)| p * v * v).sum();
        let sigma = ((second - expected * expected) / n as f64).sqrt();
        assert!((mean - 2.0 * 2f64.sqrt()).abs() < 5.0 * sigma, "{mean}");
    }

    #[test]
    fn sampling_never_returns_zero_probability_results() {
        let sc = Scenario::chsh();
        let poly = LrPolytope::new(&sc).unwrap();
        let q = poly.mixture_distribution(&LRMixture::point(16, 0)).unwrap();
        for x in sample_trials(&q, 2000, 5).unwrap() {
            assert!(q.prob(&x).unwrap() > 0.0);
        }
    }

    #[test]
    fn protocols_parse() {
        assert_eq!(parse_protocols("mart,spbr").unwrap(), vec![Protocol::Mart, Protocol::Spbr]);
        assert!(parse_protocols("mart,xyz").is_err());
        assert!(parse_protocols("").is_err());
    }

    #[test]
    fn lr_source_gives_p_near_one() {
        let sc = Scenario::chsh();
        let q = Distribution::new(sc, vec![1.0 / 16.0; 16]).unwrap();
        let mut plan = SimulationPlan::new("uniform", q, "chsh");
        plan.trials = 600;
        plan.block_size = 100;
        let report = run_experiment(&plan).unwrap();
        for run in &report.runs {
            assert!(run.rate.unwrap() < 1e-6);
            assert!(run.final_neg_log2_p() < 10.0, "{}: {}", run.protocol, run.final_neg_log2_p());
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let q = cglmp_config(3).unwrap().distribution().unwrap();
        let mut plan = SimulationPlan::new("cglmp:3", q, "cglmp:3");
        plan.trials = 400;
        plan.block_size = 50;
        let write = |plan: &SimulationPlan| {
            let mut buf = Vec::new();
            write_curves(&mut buf, &run_experiment(plan).unwrap(), 10).unwrap();
            buf
        };
        let first = write(&plan);
        assert_eq!(first, write(&plan));
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("# source=cglmp:3 rng=chacha20 seed=1"));
        assert!(text.lines().nth(1).unwrap() == "n,mart,spbr,fpbr,mart_asymptote,spbr_asymptote,fpbr_asymptote");
    }

    #[test]
    fn multi_seed_runs_match_single_runs() {
        let q = cglmp_config(3).unwrap().distribution().unwrap();
        let mut plan = SimulationPlan::new("cglmp:3", q, "cglmp:3");
        plan.trials = 200;
        plan.block_size = 40;
        plan.protocols = vec![Protocol::Mart, Protocol::Spbr];
        let many = run_seeds(&plan, &[4, 5]).unwrap();
        plan.seed = 5;
        assert_eq!(many[1], run_experiment(&plan).unwrap());
        let mut buf = Vec::new();
        write_seed_summary(&mut buf, &many).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn tail_slope_of_a_line() {
        let rows: Vec<ReportRow> = (1..=100)
            .map(|n| ReportRow {
                n,
                statistic: 0.0,
                p_value: 1.0,
                log2_p: -0.5 * n as f64 + 3.0,
            })
            .collect();
        let run = ProtocolRun {
            protocol: Protocol::Spbr,
            rows,
            rate: Some(0.5),
            zero_ratio: false,
            optimizer_warning: false,
        };
        assert!((run.tail_slope(50) - 0.5).abs() < 1e-12);
        assert!((run.learning_offset().unwrap() - 3.0).abs() < 1e-12);
    }
}
