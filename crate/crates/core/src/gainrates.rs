//! Asymptotic confidence-gain rates in bits per trial: the martingale rate
//! `G_mart`, the simplified-PBR rate `G_sPBR` and the optimal rate `S_q`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bellfn::{standardize, standardized_set, Functional, StandardizedFunctional};
use crate::error::{Error, Result};
use crate::lrpolytope::{strategy_count, STRATEGY_CAP};
use crate::optim::{kl_project_lr, maximize_log_gain, OptimizerControls, RTable, Weights};
use crate::quantum::{cglmp_config, chsh_config};
use crate::scenario::Distribution;

/// Closed-form martingale rate for mean `I_q` and range `[b, a]`, bound `B`.
pub fn gain_martingale(i_q: f64, a: f64, b: f64, bound: f64) -> Result<f64> {
    if !(b < bound && bound < a) {
        return Err(Error::InvalidInput(format!(
            "need b < B < a, got b={b}, B={bound}, a={a}"
        )));
    }
    const SLACK: f64 = 1e-12;
    if !(i_q >= bound - SLACK && i_q <= a + SLACK) {
        return Err(Error::InvalidInput(format!(
            "I_q = {i_q} outside [B, a] = [{bound}, {a}]"
        )));
    }
    let i_q = i_q.clamp(bound, a);
    let width = a - b;
    let upper = a - i_q;
    let first = if upper > 0.0 {
        upper / width * (upper / (a - bound)).log2()
    } else {
        0.0
    };
    let second = (i_q - b) / width * ((i_q - b) / (bound - b)).log2();
    Ok((first + second).max(0.0))
}

/// Standardized values over the result space, one row per result.
fn r_table(set: &[StandardizedFunctional]) -> Result<RTable> {
    let columns: Vec<Vec<f64>> = set.iter().map(|f| f.table()).collect::<Result<_>>()?;
    let k = columns.first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(k * set.len());
    for x in 0..k {
        data.extend(columns.iter().map(|c| c[x]));
    }
    RTable::from_flat(set.len(), data)
}

/// `max_ω Σ_x q(x)·log2(ω·r(x))` over the simplex of the set's weights.
pub fn gain_spbr(
    q: &Distribution,
    set: &[StandardizedFunctional],
    controls: &OptimizerControls,
) -> Result<(f64, Weights)> {
    if !set.iter().any(|f| f.is_trivial()) {
        return Err(Error::InvalidInput(
            "the standardized set must contain the trivial function".into(),
        ));
    }
    if set.iter().any(|f| f.source().scenario() != q.scenario()) {
        return Err(Error::ScenarioMismatch(
            "functional and distribution scenarios differ".into(),
        ));
    }
    let table = r_table(set)?;
    let out = maximize_log_gain(&table, q.probs(), controls)?;
    Ok((out.gain.max(0.0), out.weights))
}

/// `S_q = min_p D_KL(q | p)` over LR models `p`.
pub fn optimal_gain(q: &Distribution, controls: &OptimizerControls) -> Result<f64> {
    Ok(kl_project_lr(q, controls)?.divergence)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    /// Sweep parameter (`d` or `θ`).
    pub parameter: f64,
    pub i_q: f64,
    pub g_mart: f64,
    pub g_spbr: f64,
    pub s_q: Option<f64>,
    pub functions: Vec<String>,
}

/// All three rates of `functional` on `q`; `set` is the sPBR set and `S_q`
/// is computed only when `with_optimal` and the strategy count is within cap.
pub fn gain_report(
    parameter: f64,
    q: &Distribution,
    functional: &Functional,
    set: &[StandardizedFunctional],
    with_optimal: bool,
    controls: &OptimizerControls,
) -> Result<GainReport> {
    let i_q = q.expectation(&functional.table()?);
    let g_mart = gain_martingale(
        i_q.max(functional.bound()),
        functional.sup(),
        functional.inf(),
        functional.bound(),
    )?;
    let (g_spbr, _) = gain_spbr(q, set, controls)?;
    let s_q = if with_optimal && strategy_count(q.scenario()).is_ok_and(|h| h <= STRATEGY_CAP) {
        Some(optimal_gain(q, controls)?)
    } else {
        None
    };
    Ok(GainReport {
        parameter,
        i_q,
        g_mart,
        g_spbr,
        s_q,
        functions: set.iter().map(|f| f.name().to_string()).collect(),
    })
}

/// A parameter sweep for [`gain_curve`].
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// CGLMP configurations with `{trivial, CGLMP_d}`.
    Cglmp { dims: Vec<usize> },
    /// Unbalanced Bell states with `{trivial, CHSH}`, optionally augmented
    /// by the no-signaling functionals.
    Chsh { thetas: Vec<f64>, no_signaling: bool },
}

fn sweep_point(sweep: &Sweep, index: usize, with_optimal: bool, controls: &OptimizerControls) -> Result<GainReport> {
    match sweep {
        Sweep::Cglmp { dims } => {
            let d = dims[index];
            let q = cglmp_config(d)?.distribution()?;
            let f = Functional::cglmp(q.scenario(), d)?;
            let set = vec![StandardizedFunctional::trivial(q.scenario()), standardize(&f)?];
            gain_report(d as f64, &q, &f, &set, with_optimal, controls)
        }
        Sweep::Chsh { thetas, no_signaling } => {
            let theta = thetas[index];
            let q = chsh_config(theta)?.distribution()?;
            let f = Functional::chsh(q.scenario())?;
            let names = if *no_signaling { "chsh,nosignaling" } else { "chsh" };
            let set = standardized_set(names, q.scenario())?;
            gain_report(theta, &q, &f, &set, with_optimal, controls)
        }
    }
}

/// One report per sweep value, computed in parallel, in sweep order.
pub fn gain_curve(sweep: &Sweep, with_optimal: bool, controls: &OptimizerControls) -> Result<Vec<GainReport>> {
    let len = match sweep {
        Sweep::Cglmp { dims } => dims.len(),
        Sweep::Chsh { thetas, .. } => thetas.len(),
    };
    (0..len)
        .into_par_iter()
        .map(|i| sweep_point(sweep, i, with_optimal, controls))
        .collect()
}

/// `parameter,G_mart,G_sPBR,S_q` rows; a missing `S_q` is left empty.
pub fn write_gain_table(out: &mut impl Write, reports: &[GainReport]) -> std::io::Result<()> {
    writeln!(out, "parameter,G_mart,G_sPBR,S_q")?;
    for r in reports {
        let s_q = r.s_q.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.parameter, r.g_mart, r.g_spbr, s_q)?;
    }
    Ok(())
}

pub fn write_gain_table_file(path: impl AsRef<Path>, reports: &[GainReport]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_gain_table(&mut buf, reports).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn controls() -> OptimizerControls {
        OptimizerControls::default()
    }

    #[test]
    fn martingale_rate_examples() {
        assert_eq!(gain_martingale(2.0, 4.0, -4.0, 2.0).unwrap(), 0.0);
        let g = gain_martingale(2.0 * 2f64.sqrt(), 4.0, -4.0, 2.0).unwrap();
        assert!((g - 0.04633).abs() < 1e-4, "{g}");
        let top = gain_martingale(4.0, 4.0, -4.0, 2.0).unwrap();
        assert!((top - (8.0f64 / 6.0).log2()).abs() < 1e-15);
        assert!(gain_martingale(1.0, 4.0, -4.0, 2.0).is_err());
        assert!(gain_martingale(3.0, 4.0, -4.0, 4.0).is_err());
    }

    #[test]
    fn martingale_rate_is_continuous_at_the_top() {
        let near = gain_martingale(4.0 - 1e-9, 4.0, -4.0, 2.0).unwrap();
        let top = gain_martingale(4.0, 4.0, -4.0, 2.0).unwrap();
        assert!((near - top).abs() < 1e-6);
    }

    #[test]
    fn lr_distribution_has_zero_rates() {
        let sc = Scenario::chsh();
        let q = Distribution::new(sc.clone(), vec![1.0 / 16.0; 16]).unwrap();
        let set = standardized_set("chsh,nosignaling", &sc).unwrap();
        let (g, _) = gain_spbr(&q, &set, &controls()).unwrap();
        assert!(g.abs() < 1e-9);
        assert!(optimal_gain(&q, &controls()).unwrap() < 1e-6);
    }

    #[test]
    fn chsh_spbr_equals_martingale_rate() {
        let q = chsh_config(FRAC_PI_4).unwrap().distribution().unwrap();
        let set = standardized_set("chsh", q.scenario()).unwrap();
        let (g, w) = gain_spbr(&q, &set, &controls()).unwrap();
        let mart = gain_martingale(2.0 * 2f64.sqrt(), 4.0, -4.0, 2.0).unwrap();
        assert!((g - mart).abs() < 1e-9, "{g} vs {mart}");
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn gain_spbr_requires_the_trivial_function() {
        let q = chsh_config(FRAC_PI_4).unwrap().distribution().unwrap();
        let f = standardize(&Functional::chsh(q.scenario()).unwrap()).unwrap();
        assert!(gain_spbr(&q, &[f], &controls()).is_err());
    }

    #[test]
    fn cglmp_three_rates() {
        let reports = gain_curve(&Sweep::Cglmp { dims: vec![3] }, true, &controls()).unwrap();
        let r = &reports[0];
        assert!((r.g_mart - 0.0565).abs() < 5e-4, "{}", r.g_mart);
        assert!((r.g_spbr - 0.0675).abs() < 5e-4, "{}", r.g_spbr);
        assert!((r.s_q.unwrap() - r.g_spbr).abs() < 1e-3);
        assert!((r.i_q - 32.0 / 11.0).abs() < 1e-9);
    }

    #[test]
    fn no_signaling_improves_unbalanced_states() {
        let thetas = vec![PI / 8.0];
        let plain = gain_curve(&Sweep::Chsh { thetas: thetas.clone(), no_signaling: false }, false, &controls())
            .unwrap();
        let extended = gain_curve(&Sweep::Chsh { thetas, no_signaling: true }, false, &controls()).unwrap();
        assert!(extended[0].g_spbr > plain[0].g_spbr + 1e-4);
        assert_eq!(plain[0].g_mart, extended[0].g_mart);
    }

    #[test]
    fn gain_table_format() {
        let reports = vec![GainReport {
            parameter: 2.0,
            i_q: 2.8,
            g_mart: 0.1,
            g_spbr: 0.2,
            s_q: None,
            functions: vec![],
        }];
        let mut buf = Vec::new();
        write_gain_table(&mut buf, &reports).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "parameter,G_mart,G_sPBR,S_q\n2,0.1,0.2,\n");
    }
}
