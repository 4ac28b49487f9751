//! The three p-value engines: the martingale (Hoeffding) bound, the
//! simplified PBR protocol and the full PBR protocol.
//!
//! The PBR engines are streaming: trials are pushed one at a time and the
//! PBR used for a trial depends only on trials from earlier, completed
//! blocks. The first block is scored with `R = 1`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::bellfn::{Functional, StandardizedFunctional};
use crate::error::{Error, Result};
use crate::lrpolytope::LrPolytope;
use crate::optim::{maximize_log_gain, project_onto, OptimizerControls, RTable, Weights};
use crate::scenario::{Distribution, Scenario, TrialResult};

pub const DEFAULT_BLOCK_SIZE: usize = 154;

/// Full-PBR floor used unless the caller sets one.
pub const DEFAULT_FULL_PBR_FLOOR: f64 = 1e-9;

/// Slack allowed when checking that a running mean lies in `[b, a]`.
const RANGE_SLACK: f64 = 1e-9;

/// `min(2^{−log2 T}, 1)`, clamped below at the smallest positive `f64`.
pub fn pbr_pvalue(log2_t: f64) -> f64 {
    if log2_t.is_nan() || log2_t <= 0.0 {
        return 1.0;
    }
    (-log2_t).exp2().max(f64::MIN_POSITIVE)
}

fn check_martingale_inputs(mean: f64, n: u64, a: f64, b: f64, bound: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("martingale p-value needs N ≥ 1".into()));
    }
    if !(b < bound && bound < a) {
        return Err(Error::InvalidInput(format!(
            "need b < B < a, got b={b}, B={bound}, a={a}"
        )));
    }
    if !(mean >= b - RANGE_SLACK && mean <= a + RANGE_SLACK) {
        return Err(Error::InvalidInput(format!(
            "mean {mean} outside the declared range [{b}, {a}]"
        )));
    }
    Ok(())
}

/// `log2` of the Hoeffding-type martingale p-value; 0 when `mean ≤ B`.
pub fn martingale_log2_pvalue(mean: f64, n: u64, a: f64, b: f64, bound: f64) -> Result<f64> {
    check_martingale_inputs(mean, n, a, b, bound)?;
    let mean = mean.clamp(b, a);
    if mean <= bound {
        return Ok(0.0);
    }
    let width = a - b;
    let upper = a - mean;
    // (a−Î)·log((a−B)/(a−Î)) → 0 as Î → a
    let first = if upper > 0.0 {
        upper / width * ((a - bound) / upper).log2()
    } else {
        0.0
    };
    let second = (mean - b) / width * ((bound - b) / (mean - b)).log2();
    Ok((n as f64 * (first + second)).min(0.0))
}

pub fn martingale_pvalue(mean: f64, n: u64, a: f64, b: f64, bound: f64) -> Result<f64> {
    Ok(martingale_log2_pvalue(mean, n, a, b, bound)?
        .exp2()
        .max(f64::MIN_POSITIVE))
}

/// Azuma–Hoeffding p-value `exp(−2N(Î−B)²/(a−b)²)` for increments confined
/// to a range of width `a − b`; the comparison baseline.
pub fn azuma_pvalue(mean: f64, n: u64, a: f64, b: f64, bound: f64) -> Result<f64> {
    check_martingale_inputs(mean, n, a, b, bound)?;
    if mean <= bound {
        return Ok(1.0);
    }
    let t = mean - bound;
    Ok((-2.0 * n as f64 * t * t / ((a - b) * (a - b)))
        .exp()
        .clamp(f64::MIN_POSITIVE, 1.0))
}

/// One running-report line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub n: u64,
    /// Running mean `Î` (martingale) or `log2 T` (PBR).
    pub statistic: f64,
    pub p_value: f64,
    /// `log2` of the p-value, kept separately so it survives underflow.
    pub log2_p: f64,
}

/// The PBR currently in force.
#[derive(Debug, Clone, PartialEq)]
pub enum CurrentPbr {
    /// Convex weights over the standardized set (simplified PBR).
    Weights(Weights),
    /// `R(x)` for every encoded result (full PBR).
    Ratio(Vec<f64>),
}

/// Final state of a PBR analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisState {
    pub log2_t: f64,
    pub n: u64,
    pub current_pbr: CurrentPbr,
    pub block_size: usize,
    pub history: Vec<ReportRow>,
    /// Some trial scored `R = 0`; the p-value is then 1 from that point on.
    pub zero_ratio: bool,
    /// Some block's optimization stopped at the iteration limit.
    pub optimizer_warning: bool,
}

impl AnalysisState {
    pub fn p_value(&self) -> f64 {
        pbr_pvalue(self.log2_t)
    }

    pub fn neg_log2_p(&self) -> f64 {
        self.log2_t.max(0.0)
    }
}

fn check_block(block_size: usize) -> Result<()> {
    if block_size == 0 {
        return Err(Error::InvalidInput("block size must be at least 1".into()));
    }
    Ok(())
}

fn pbr_row(n: u64, log2_t: f64) -> ReportRow {
    ReportRow {
        n,
        statistic: log2_t,
        p_value: pbr_pvalue(log2_t),
        log2_p: if log2_t > 0.0 { -log2_t } else { 0.0 },
    }
}

/// Streaming simplified-PBR engine.
#[derive(Debug, Clone)]
pub struct SimplifiedPbr {
    functions: Vec<StandardizedFunctional>,
    block_size: usize,
    controls: OptimizerControls,
    weights: Weights,
    log2_t: f64,
    n: u64,
    /// Completed-block tallies: support point → (count, r-vector).
    support: HashMap<TrialResult, (u64, Vec<f64>)>,
    completed: u64,
    block: Vec<(TrialResult, Vec<f64>)>,
    history: Vec<ReportRow>,
    zero_ratio: bool,
    optimizer_warning: bool,
    block_weights: Vec<Weights>,
}

impl SimplifiedPbr {
    /// `functions[0]` must be the trivial function.
    pub fn new(
        functions: Vec<StandardizedFunctional>,
        block_size: usize,
        controls: OptimizerControls,
    ) -> Result<Self> {
        check_block(block_size)?;
        controls.validate()?;
        match functions.first() {
            Some(f) if f.is_trivial() => {}
            _ => {
                return Err(Error::InvalidInput(
                    "the first standardized function must be the trivial one".into(),
                ))
            }
        }
        let scenario = functions[0].source().scenario().clone();
        if functions.iter().any(|f| *f.source().scenario() != scenario) {
            return Err(Error::ScenarioMismatch(
                "standardized functions belong to different scenarios".into(),
            ));
        }
        let m = functions.len();
        Ok(Self {
            functions,
            block_size,
            controls,
            weights: Weights::trivial(m),
            log2_t: 0.0,
            n: 0,
            support: HashMap::new(),
            completed: 0,
            block: Vec::with_capacity(block_size),
            history: Vec::new(),
            zero_ratio: false,
            optimizer_warning: false,
            block_weights: vec![Weights::trivial(m)],
        })
    }

    pub fn scenario(&self) -> &Scenario {
        self.functions[0].source().scenario()
    }

    pub fn push(&mut self, x: &TrialResult) -> Result<ReportRow> {
        self.scenario().validate(x)?;
        let r: Vec<f64> = self.functions.iter().map(|f| f.evaluate_r(x)).collect();
        let value = self.weights.dot(&r);
        if value > 0.0 {
            self.log2_t += value.log2();
        } else {
            self.zero_ratio = true;
            self.log2_t = f64::NEG_INFINITY;
        }
        self.n += 1;
        self.block.push((x.clone(), r));
        if self.block.len() == self.block_size {
            self.close_block()?;
        }
        let row = pbr_row(self.n, self.log2_t);
        self.history.push(row);
        Ok(row)
    }

    fn close_block(&mut self) -> Result<()> {
        for (x, r) in self.block.drain(..) {
            self.support.entry(x).or_insert((0, r)).0 += 1;
        }
        self.completed += self.block_size as u64;
        let mut rows = Vec::with_capacity(self.support.len());
        let mut freq = Vec::with_capacity(self.support.len());
        // deterministic order regardless of hash iteration
        let mut points: Vec<_> = self.support.iter().collect();
        points.sort_by(|a, b| a.0.cmp(b.0));
        for (_, (count, r)) in points {
            rows.push(r.clone());
            freq.push(*count as f64 / self.completed as f64);
        }
        let table = RTable::new(self.functions.len(), &rows)?;
        let out = maximize_log_gain(&table, &freq, &self.controls)?;
        self.optimizer_warning |= !out.converged;
        self.weights = out.weights;
        self.block_weights.push(self.weights.clone());
        Ok(())
    }

    pub fn log2_t(&self) -> f64 {
        self.log2_t
    }

    pub fn p_value(&self) -> f64 {
        pbr_pvalue(self.log2_t)
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Weights used for each block so far (block 1 is trivial).
    pub fn block_weights(&self) -> &[Weights] {
        &self.block_weights
    }

    pub fn finish(self) -> AnalysisState {
        AnalysisState {
            log2_t: self.log2_t,
            n: self.n,
            current_pbr: CurrentPbr::Weights(self.weights),
            block_size: self.block_size,
            history: self.history,
            zero_ratio: self.zero_ratio,
            optimizer_warning: self.optimizer_warning,
        }
    }
}

pub fn run_simplified_pbr(
    trials: &[TrialResult],
    functions: Vec<StandardizedFunctional>,
    block_size: usize,
    controls: &OptimizerControls,
) -> Result<AnalysisState> {
    let mut engine = SimplifiedPbr::new(functions, block_size, *controls)?;
    for x in trials {
        engine.push(x)?;
    }
    Ok(engine.finish())
}

/// Streaming full-PBR engine.
#[derive(Debug, Clone)]
pub struct FullPbr {
    poly: LrPolytope,
    block_size: usize,
    controls: OptimizerControls,
    ratio: Option<Vec<f64>>,
    counts: Vec<u64>,
    completed: u64,
    in_block: usize,
    log2_t: f64,
    n: u64,
    history: Vec<ReportRow>,
    zero_ratio: bool,
    optimizer_warning: bool,
}

impl FullPbr {
    /// `controls.floor` mixes uniform outcomes into the estimate `q`
    /// before projection; a zero floor uses raw frequencies.
    pub fn new(scenario: &Scenario, block_size: usize, controls: OptimizerControls) -> Result<Self> {
        check_block(block_size)?;
        controls.validate()?;
        let poly = LrPolytope::new(scenario)?;
        let k = scenario.enumerable_size()?;
        Ok(Self {
            poly,
            block_size,
            controls,
            ratio: None,
            counts: vec![0; k],
            completed: 0,
            in_block: 0,
            log2_t: 0.0,
            n: 0,
            history: Vec::new(),
            zero_ratio: false,
            optimizer_warning: false,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        self.poly.scenario()
    }

    pub fn push(&mut self, x: &TrialResult) -> Result<ReportRow> {
        let idx = self.scenario().encode_result(x)?;
        if let Some(ratio) = &self.ratio {
            let value = ratio[idx];
            if value > 0.0 {
                self.log2_t += value.log2();
            } else {
                self.zero_ratio = true;
                self.log2_t = f64::NEG_INFINITY;
            }
        }
        self.n += 1;
        self.counts[idx] += 1;
        self.in_block += 1;
        if self.in_block == self.block_size {
            self.close_block()?;
        }
        let row = pbr_row(self.n, self.log2_t);
        self.history.push(row);
        Ok(row)
    }

    fn close_block(&mut self) -> Result<()> {
        self.completed += self.in_block as u64;
        self.in_block = 0;
        let q = Distribution::from_counts(self.scenario().clone(), &self.counts)
            .with_floor(self.controls.floor)?;
        let projection = project_onto(&self.poly, &q, &self.controls, None)?;
        self.optimizer_warning |= !projection.converged;
        let p = projection.projected.probs();
        let mut ratio: Vec<f64> = q
            .probs()
            .iter()
            .zip(p)
            .map(|(&qx, &px)| if qx > 0.0 { qx / px } else { 0.0 })
            .collect();
        // exact projections give a vertex maximum of exactly 1
        let worst = self.poly.max_expectation(&ratio);
        if worst > 1.0 {
            ratio.iter_mut().for_each(|r| *r /= worst);
        }
        self.ratio = Some(ratio);
        Ok(())
    }

    pub fn log2_t(&self) -> f64 {
        self.log2_t
    }

    pub fn p_value(&self) -> f64 {
        pbr_pvalue(self.log2_t)
    }

    pub fn finish(self) -> AnalysisState {
        let k = self.counts.len();
        AnalysisState {
            log2_t: self.log2_t,
            n: self.n,
            current_pbr: CurrentPbr::Ratio(self.ratio.unwrap_or_else(|| vec![1.0; k])),
            block_size: self.block_size,
            history: self.history,
            zero_ratio: self.zero_ratio,
            optimizer_warning: self.optimizer_warning,
        }
    }
}

pub fn run_full_pbr(
    trials: &[TrialResult],
    scenario: &Scenario,
    block_size: usize,
    controls: &OptimizerControls,
) -> Result<AnalysisState> {
    let mut engine = FullPbr::new(scenario, block_size, *controls)?;
    for x in trials {
        engine.push(x)?;
    }
    Ok(engine.finish())
}

/// Running state of the martingale protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleState {
    pub sum: f64,
    pub n: u64,
    pub sup: f64,
    pub inf: f64,
    pub bound: f64,
    pub history: Vec<ReportRow>,
}

impl MartingaleState {
    pub fn new(functional: &Functional) -> Result<Self> {
        let (a, b, bound) = (functional.sup(), functional.inf(), functional.bound());
        if !(a.is_finite() && b.is_finite() && b < bound && bound < a) {
            return Err(Error::InvalidInput(format!(
                "`{}` needs finite b < B < a (b={b}, B={bound}, a={a})",
                functional.name()
            )));
        }
        Ok(Self {
            sum: 0.0,
            n: 0,
            sup: a,
            inf: b,
            bound,
            history: Vec::new(),
        })
    }

    pub fn push_value(&mut self, value: f64) -> Result<ReportRow> {
        if !(value >= self.inf - RANGE_SLACK && value <= self.sup + RANGE_SLACK) {
            return Err(Error::InvalidInput(format!(
                "value {value} outside the declared range [{}, {}]",
                self.inf, self.sup
            )));
        }
        self.sum += value;
        self.n += 1;
        let mean = self.mean();
        let log2_p = martingale_log2_pvalue(mean, self.n, self.sup, self.inf, self.bound)?;
        let row = ReportRow {
            n: self.n,
            statistic: mean,
            p_value: log2_p.exp2().max(f64::MIN_POSITIVE),
            log2_p,
        };
        self.history.push(row);
        Ok(row)
    }

    /// Running mean `Î`, or `B` before any trial.
    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            self.bound
        } else {
            (self.sum / self.n as f64).clamp(self.inf, self.sup)
        }
    }

    pub fn log2_p(&self) -> f64 {
        martingale_log2_pvalue(self.mean(), self.n.max(1), self.sup, self.inf, self.bound)
            .unwrap_or(0.0)
    }

    pub fn p_value(&self) -> f64 {
        self.log2_p().exp2().max(f64::MIN_POSITIVE)
    }
}

pub fn run_martingale(trials: &[TrialResult], functional: &Functional) -> Result<MartingaleState> {
    let mut state = MartingaleState::new(functional)?;
    for x in trials {
        functional.scenario().validate(x)?;
        state.push_value(functional.evaluate(x))?;
    }
    Ok(state)
}

/// Writes `n,statistic,p_value` rows; `every` keeps only rows whose `n` is a
/// multiple of it plus the last row.
pub fn write_report(out: &mut impl Write, rows: &[ReportRow], every: Option<usize>) -> std::io::Result<()> {
    writeln!(out, "n,statistic,p_value")?;
    let step = every.unwrap_or(1).max(1) as u64;
    for (i, row) in rows.iter().enumerate() {
        let last = i + 1 == rows.len();
        if row.n % step == 0 || last {
            writeln!(out, "{},{},{:e}", row.n, row.statistic, row.p_value)?;
        }
    }
    Ok(())
}

pub fn write_report_file(path: impl AsRef<Path>, rows: &[ReportRow], every: Option<usize>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_report(&mut out, rows, every).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellfn::{standardize, standardized_set};

    fn chsh() -> Functional {
        Functional::chsh(&Scenario::chsh()).unwrap()
    }

    fn t(i: usize, j: usize, a: usize, b: usize) -> TrialResult {
        TrialResult::new(vec![i, j], vec![a, b])
    }

    #[test]
    fn pbr_pvalue_examples() {
        assert_eq!(pbr_pvalue(0.0), 1.0);
        assert_eq!(pbr_pvalue(10.0), 2f64.powi(-10));
        assert_eq!(pbr_pvalue(-3.0), 1.0);
        assert_eq!(pbr_pvalue(f64::NEG_INFINITY), 1.0);
        assert_eq!(pbr_pvalue(5000.0), f64::MIN_POSITIVE);
    }

    #[test]
    fn martingale_examples() {
        assert_eq!(martingale_pvalue(2.0, 10, 4.0, -4.0, 2.0).unwrap(), 1.0);
        let p = martingale_pvalue(4.0, 10, 4.0, -4.0, 2.0).unwrap();
        assert!((p - 0.75f64.powi(10)).abs() < 1e-15);
        assert!((p - 5.63e-2).abs() < 1e-4);
        // Î = 2√2, N = 1000: −log2 p = N·G_mart ≈ 46.3
        let log2_p = martingale_log2_pvalue(2.0 * 2f64.sqrt(), 1000, 4.0, -4.0, 2.0).unwrap();
        assert!((log2_p + 46.27).abs() < 0.01, "{log2_p}");
    }

    #[test]
    fn martingale_errors() {
        assert!(martingale_pvalue(2.5, 0, 4.0, -4.0, 2.0).is_err());
        assert!(martingale_pvalue(5.0, 3, 4.0, -4.0, 2.0).is_err());
        assert!(martingale_pvalue(1.0, 3, 4.0, -4.0, 4.0).is_err());
    }

    #[test]
    fn azuma_examples() {
        assert_eq!(azuma_pvalue(2.0, 10, 4.0, -4.0, 2.0).unwrap(), 1.0);
        let p = azuma_pvalue(4.0, 10, 4.0, -4.0, 2.0).unwrap();
        assert!((p / (-1.25f64).exp() - 1.0).abs() < 1e-12);
        assert!(p >= martingale_pvalue(4.0, 10, 4.0, -4.0, 2.0).unwrap());
    }

    #[test]
    fn martingale_alternating_values() {
        let trials = [t(1, 1, 0, 0), t(1, 1, 0, 1)];
        let trials: Vec<_> = trials.iter().cycle().take(20).cloned().collect();
        let state = run_martingale(&trials, &chsh()).unwrap();
        assert_eq!(state.mean(), 0.0);
        assert_eq!(state.p_value(), 1.0);
    }

    #[test]
    fn martingale_all_max_values() {
        let trials = vec![t(1, 1, 0, 0); 25];
        let state = run_martingale(&trials, &chsh()).unwrap();
        assert!((state.p_value() - 0.75f64.powi(25)).abs() < 1e-15);
        assert_eq!(state.history.len(), 25);
    }

    #[test]
    fn trivial_weights_give_p_one() {
        let sc = Scenario::chsh();
        // one block never triggers an update that is used
        let trials = vec![t(1, 1, 0, 0); 50];
        let state = run_simplified_pbr(
            &trials,
            standardized_set("chsh", &sc).unwrap(),
            100,
            &OptimizerControls::default(),
        )
        .unwrap();
        assert_eq!(state.p_value(), 1.0);
        assert_eq!(state.log2_t, 0.0);
    }

    #[test]
    fn simplified_pbr_scores_later_blocks() {
        let sc = Scenario::chsh();
        let trials = vec![t(1, 1, 0, 0); 30];
        let mut engine = SimplifiedPbr::new(
            standardized_set("chsh", &sc).unwrap(),
            10,
            OptimizerControls::default(),
        )
        .unwrap();
        for x in &trials {
            engine.push(x).unwrap();
        }
        // block 1 trivial, blocks 2–3 use ω ≈ (0, 1): 20·log2(4/3)
        let expected = 20.0 * (4.0f64 / 3.0).log2();
        assert!((engine.log2_t() - expected).abs() < 1e-4);
        assert_eq!(engine.block_weights().len(), 4);
    }

    #[test]
    fn simplified_pbr_requires_trivial_first() {
        let sc = Scenario::chsh();
        let r = standardize(&chsh()).unwrap();
        assert!(SimplifiedPbr::new(vec![r], 10, OptimizerControls::default()).is_err());
        assert!(SimplifiedPbr::new(
            standardized_set("chsh", &sc).unwrap(),
            0,
            OptimizerControls::default()
        )
        .is_err());
    }

    #[test]
    fn block_permutation_leaves_weights_unchanged() {
        let sc = Scenario::chsh();
        let base = [
            t(1, 1, 0, 0),
            t(1, 2, 0, 0),
            t(2, 1, 1, 1),
            t(2, 2, 0, 1),
            t(1, 1, 1, 0),
            t(2, 2, 1, 0),
        ];
        let trials: Vec<_> = base.iter().cycle().take(36).cloned().collect();
        let mut permuted = trials.clone();
        for block in permuted.chunks_mut(6) {
            block.reverse();
        }
        let run = |data: &[TrialResult]| {
            let mut e = SimplifiedPbr::new(
                standardized_set("chsh,nosignaling", &sc).unwrap(),
                6,
                OptimizerControls::default(),
            )
            .unwrap();
            for x in data {
                e.push(x).unwrap();
            }
            e.block_weights().to_vec()
        };
        assert_eq!(run(&trials), run(&permuted));
    }

    #[test]
    fn full_pbr_single_block_gives_p_one() {
        let sc = Scenario::chsh();
        let trials = vec![t(1, 1, 0, 0); 40];
        let state = run_full_pbr(&trials, &sc, 40, &OptimizerControls::default()).unwrap();
        assert_eq!(state.p_value(), 1.0);
    }

    #[test]
    fn full_pbr_on_lr_support_stays_near_one() {
        // outcomes fixed by the all-zero strategy, every setting pair visited
        let sc = Scenario::chsh();
        let base = [t(1, 1, 0, 0), t(1, 2, 0, 0), t(2, 1, 0, 0), t(2, 2, 0, 0)];
        let trials: Vec<_> = base.iter().cycle().take(80).cloned().collect();
        let state = run_full_pbr(&trials, &sc, 8, &OptimizerControls::default()).unwrap();
        assert!(state.log2_t.abs() < 1e-6, "{}", state.log2_t);
        assert!(!state.zero_ratio);
    }

    #[test]
    fn full_pbr_unseen_result_zeroes_the_ratio_without_floor() {
        let sc = Scenario::chsh();
        let mut trials = vec![t(1, 1, 0, 0); 10];
        trials.push(t(2, 2, 1, 1));
        let state = run_full_pbr(&trials, &sc, 10, &OptimizerControls::default()).unwrap();
        assert!(state.zero_ratio);
        assert_eq!(state.p_value(), 1.0);
        let floored = OptimizerControls {
            floor: DEFAULT_FULL_PBR_FLOOR,
            ..Default::default()
        };
        let state = run_full_pbr(&trials, &sc, 10, &floored).unwrap();
        assert!(!state.zero_ratio);
    }

    #[test]
    fn full_pbr_ratio_is_a_valid_pbr() {
        let sc = Scenario::chsh();
        let trials: Vec<_> = (0..64)
            .map(|k| {
                let i = 1 + k % 2;
                let j = 1 + (k / 2) % 2;
                // correlated except on (2,2)
                let a = (k / 4) % 2;
                let b = if i == 2 && j == 2 { 1 - a } else { a };
                t(i, j, a, b)
            })
            .collect();
        let state = run_full_pbr(&trials, &sc, 16, &OptimizerControls::default()).unwrap();
        let CurrentPbr::Ratio(ratio) = &state.current_pbr else {
            panic!("full PBR keeps a ratio table")
        };
        let poly = LrPolytope::new(&sc).unwrap();
        assert!(poly.max_expectation(ratio) <= 1.0 + 1e-12);
        assert!(state.log2_t > 0.0);
    }

    #[test]
    fn report_rows() {
        let rows: Vec<_> = (1..=5).map(|n| pbr_row(n, n as f64)).collect();
        let mut buf = Vec::new();
        write_report(&mut buf, &rows, Some(2)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,statistic,p_value");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("5,5,"));
    }
}
