//! Multiplicative (EM) optimizers over the probability simplex.
//!
//! Both problems solved here have the form
//! `maximize Σ_x f(x)·log2(Σ_m w_m·k_m(x))` over simplex weights `w`:
//! the log-gain of a convex combination of standardized Bell functions,
//! and the log-likelihood of an LR mixture (whose maximizer is the KL
//! projection). The update `w_m ← w_m·Σ_x f(x)·k_m(x)/(w·k)(x)` keeps the
//! weights on the simplex and never decreases the objective. At every
//! iterate, `log2(max_m Σ_x f(x)·k_m(x)/(w·k)(x))` bounds the distance to
//! the optimum from above, which is what the stopping rule tests.

use crate::error::{Error, Result};
use crate::lrpolytope::{LRMixture, LrPolytope};
use crate::scenario::Distribution;

const FREQ_SUM_TOL: f64 = 1e-9;

/// Simplex weights over the functions of a standardized set; index 0 is
/// conventionally the trivial function.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "weights must be non-empty, finite and non-negative".into(),
            ));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        Ok(Self(values))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    /// All mass on the first (trivial) function.
    pub fn trivial(len: usize) -> Self {
        let mut w = vec![0.0; len];
        w[0] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, r: &[f64]) -> f64 {
        self.0.iter().zip(r).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerControls {
    pub max_iterations: usize,
    /// Stop once the certified gap to the optimum (bits) is at most this.
    pub tolerance: f64,
    /// Uniform-mixture floor applied to estimated distributions before projection.
    pub floor: f64,
}

impl Default for OptimizerControls {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            tolerance: 1e-10,
            floor: 0.0,
        }
    }
}

impl OptimizerControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.floor >= 0.0 && self.floor <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "optimizer controls need tolerance > 0 and 0 ≤ floor ≤ 1 (got {}, {})",
                self.tolerance, self.floor
            )));
        }
        Ok(())
    }
}

/// Standardized function values `r_m(x)` over a list of support points.
#[derive(Debug, Clone, PartialEq)]
pub struct RTable {
    cols: usize,
    data: Vec<f64>,
}

impl RTable {
    /// One row of `cols` values per support point.
    pub fn new(cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(cols, data)
    }

    pub fn from_flat(cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 || !data.len().is_multiple_of(cols) {
            return Err(Error::InvalidInput(format!(
                "{} values do not form rows of {cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "standardized values must be finite and non-negative".into(),
            ));
        }
        Ok(Self { cols, data })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Result of [`maximize_log_gain`].
#[derive(Debug, Clone, PartialEq)]
pub struct GainOptimum {
    pub weights: Weights,
    /// Achieved `Σ_x f(x)·log2(ω·r(x))`.
    pub gain: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Certified upper bound on `sup − gain`.
    pub gap_bound: f64,
}

/// Result of [`kl_project_lr`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub mixture: LRMixture,
    pub projected: Distribution,
    /// `D_KL(q | p*)` in bits.
    pub divergence: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gap_bound: f64,
}

/// A non-negative kernel `k_m(x)` over support points that the EM step needs
/// to mix (`Σ_m w_m k_m(x)`) and to pull back (`Σ_x ratio(x) k_m(x)`).
trait Kernel {
    fn cols(&self) -> usize;
    fn points(&self) -> usize;
    fn mix(&self, weights: &[f64], out: &mut [f64]);
    fn pull_back(&self, ratio: &[f64], out: &mut [f64]);
}

impl Kernel for RTable {
    fn cols(&self) -> usize {
        self.cols
    }

    fn points(&self) -> usize {
        self.rows()
    }

    fn mix(&self, weights: &[f64], out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.row(i).iter().zip(weights).map(|(r, w)| r * w).sum();
        }
    }

    fn pull_back(&self, ratio: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for (i, &c) in ratio.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (g, r) in out.iter_mut().zip(self.row(i)) {
                *g += c * r;
            }
        }
    }
}

impl Kernel for LrPolytope {
    fn cols(&self) -> usize {
        self.strategy_count()
    }

    fn points(&self) -> usize {
        self.scenario().joint_outcomes() * self.joint_settings()
    }

    fn mix(&self, weights: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|p| *p = 0.0);
        let probs = self.setting_probs();
        for (h, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (j, &x) in self.support(h).iter().enumerate() {
                out[x] += w * probs[j];
            }
        }
    }

    fn pull_back(&self, ratio: &[f64], out: &mut [f64]) {
        let probs = self.setting_probs();
        for (h, g) in out.iter_mut().enumerate() {
            *g = self
                .support(h)
                .iter()
                .zip(probs)
                .map(|(&x, &p)| p * ratio[x])
                .sum();
        }
    }
}

struct EmRun {
    weights: Vec<f64>,
    /// `Σ_x f(x)·log2(mix(x))`.
    objective: f64,
    iterations: usize,
    converged: bool,
    gap_bound: f64,
}

fn run_em<K: Kernel>(
    kernel: &K,
    freq: &[f64],
    controls: &OptimizerControls,
    mut trace: Option<&mut Vec<f64>>,
) -> EmRun {
    let m = kernel.cols();
    let n = kernel.points();
    let mut weights = vec![1.0 / m as f64; m];
    let mut mix = vec![0.0; n];
    let mut ratio = vec![0.0; n];
    let mut grad = vec![0.0; m];
    let mut iterations = 0;
    loop {
        kernel.mix(&weights, &mut mix);
        let mut objective = 0.0;
        for ((r, &f), &s) in ratio.iter_mut().zip(freq).zip(&mix) {
            if f > 0.0 {
                objective += f * s.log2();
                *r = f / s;
            } else {
                *r = 0.0;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective);
        }
        kernel.pull_back(&ratio, &mut grad);
        let top = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap_bound = top.log2().max(0.0);
        let converged = gap_bound <= controls.tolerance;
        if converged || iterations >= controls.max_iterations || !objective.is_finite() {
            return EmRun {
                weights,
                objective,
                iterations,
                converged,
                gap_bound,
            };
        }
        let mut total = 0.0;
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w *= g;
            total += *w;
        }
        weights.iter_mut().for_each(|w| *w /= total);
        iterations += 1;
    }
}

fn check_freq(freq: &[f64], expected: usize) -> Result<()> {
    if freq.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: freq.len(),
        });
    }
    if freq.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::InvalidInput("frequencies must be non-negative".into()));
    }
    let total: f64 = freq.iter().sum();
    if (total - 1.0).abs() > FREQ_SUM_TOL {
        return Err(Error::InvalidInput(format!(
            "frequencies sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// `Σ_x f(x)·log2(ω·r(x))`; `-∞` if some point with `f(x) > 0` has `ω·r(x) = 0`.
pub fn log_gain(weights: &Weights, table: &RTable, freq: &[f64]) -> Result<f64> {
    if weights.len() != table.cols() {
        return Err(Error::DimensionMismatch {
            expected: table.cols(),
            actual: weights.len(),
        });
    }
    if freq.len() != table.rows() {
        return Err(Error::DimensionMismatch {
            expected: table.rows(),
            actual: freq.len(),
        });
    }
    let mut total = 0.0;
    for (i, &f) in freq.iter().enumerate() {
        if f > 0.0 {
            let s = weights.dot(table.row(i));
            if s <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            total += f * s.log2();
        }
    }
    Ok(total)
}

/// Log-optimal weights for the observed support: EM from uniform weights.
pub fn maximize_log_gain(
    table: &RTable,
    freq: &[f64],
    controls: &OptimizerControls,
) -> Result<GainOptimum> {
    maximize_inner(table, freq, controls, None)
}

/// [`maximize_log_gain`] that also returns the objective at every iterate.
pub fn maximize_log_gain_traced(
    table: &RTable,
    freq: &[f64],
    controls: &OptimizerControls,
) -> Result<(GainOptimum, Vec<f64>)> {
    let mut trace = Vec::new();
    let out = maximize_inner(table, freq, controls, Some(&mut trace))?;
    Ok((out, trace))
}

fn maximize_inner(
    table: &RTable,
    freq: &[f64],
    controls: &OptimizerControls,
    trace: Option<&mut Vec<f64>>,
) -> Result<GainOptimum> {
    controls.validate()?;
    check_freq(freq, table.rows())?;
    for (i, &f) in freq.iter().enumerate() {
        if f > 0.0 && table.row(i).iter().all(|r| *r == 0.0) {
            return Err(Error::InvalidInput(format!(
                "support point {i} is zero for every function; include the trivial function"
            )));
        }
    }
    let run = run_em(table, freq, controls, trace);
    Ok(GainOptimum {
        weights: Weights(run.weights),
        gain: run.objective,
        iterations: run.iterations,
        converged: run.converged,
        gap_bound: run.gap_bound,
    })
}

/// Base-2 KL divergence `Σ_x q(x)·log2(q(x)/p(x))`; `+∞` when `q` is not
/// absolutely continuous with respect to `p`.
pub fn kl_divergence(q: &Distribution, p: &Distribution) -> Result<f64> {
    if q.probs().len() != p.probs().len() {
        return Err(Error::DimensionMismatch {
            expected: q.probs().len(),
            actual: p.probs().len(),
        });
    }
    if q.scenario() != p.scenario() {
        return Err(Error::ScenarioMismatch(
            "divergence between distributions of different scenarios".into(),
        ));
    }
    Ok(kl_bits(q.probs(), p.probs()))
}

pub(crate) fn kl_bits(q: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in q.iter().zip(p) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).log2();
        }
    }
    total.max(0.0)
}

/// LR model closest to `q` in KL divergence.
pub fn kl_project_lr(q: &Distribution, controls: &OptimizerControls) -> Result<Projection> {
    let poly = LrPolytope::new(q.scenario())?;
    project_onto(&poly, q, controls, None)
}

/// [`kl_project_lr`] that also returns the divergence at every iterate.
pub fn kl_project_lr_traced(
    q: &Distribution,
    controls: &OptimizerControls,
) -> Result<(Projection, Vec<f64>)> {
    let poly = LrPolytope::new(q.scenario())?;
    let mut trace = Vec::new();
    let out = project_onto(&poly, q, controls, Some(&mut trace))?;
    let entropy_term = neg_entropy_bits(q.probs());
    let divergences = trace.into_iter().map(|ll| entropy_term - ll).collect();
    Ok((out, divergences))
}

/// KL projection reusing an already built polytope.
pub fn project_onto(
    poly: &LrPolytope,
    q: &Distribution,
    controls: &OptimizerControls,
    trace: Option<&mut Vec<f64>>,
) -> Result<Projection> {
    controls.validate()?;
    if q.scenario() != poly.scenario() {
        return Err(Error::ScenarioMismatch(
            "distribution and polytope scenarios differ".into(),
        ));
    }
    check_freq(q.probs(), poly.points())?;
    let run = run_em(poly, q.probs(), controls, trace);
    let projected = poly.mixture_probs(&run.weights);
    let divergence = kl_bits(q.probs(), &projected);
    Ok(Projection {
        mixture: LRMixture::from_raw(run.weights),
        projected: Distribution::from_raw(q.scenario().clone(), projected),
        divergence,
        iterations: run.iterations,
        converged: run.converged,
        gap_bound: run.gap_bound,
    })
}

fn neg_entropy_bits(q: &[f64]) -> f64 {
    q.iter().filter(|a| **a > 0.0).map(|a| a * a.log2()).sum()
}
