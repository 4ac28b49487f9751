//! Bell functions (per-trial functionals with an LR expectation bound),
//! their standardized forms, and the shipped catalog.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Scenario, ScenarioHeader, TrialResult};

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant(f64),
    Chsh,
    Cglmp,
    NoSignaling(NoSignalingTerm),
    Table(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct NoSignalingTerm {
    /// 0 for the first party, 1 for the second.
    party: usize,
    /// 0-based local setting of `party`.
    setting: usize,
    outcome: usize,
    /// 0-based settings of the other party being compared (w1 < w2).
    first: usize,
    second: usize,
    sign: f64,
}

/// A real-valued function of a trial result with `⟨I⟩ ≤ bound` under local
/// realism and declared range `[inf, sup]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    name: String,
    scenario: Scenario,
    kind: Kind,
    bound: f64,
    inf: f64,
    sup: f64,
}

impl Functional {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// LR upper bound `B` on the expectation.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Declared lower bound `b` of the range.
    pub fn inf(&self) -> f64 {
        self.inf
    }

    /// Declared upper bound `a` of the range.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// `I ≡ 1` with `B = 1`; declared lower bound 0 so that it standardizes to `r ≡ 1`.
    pub fn trivial(scenario: &Scenario) -> Self {
        Self {
            name: "trivial".into(),
            scenario: scenario.clone(),
            kind: Kind::Constant(1.0),
            bound: 1.0,
            inf: 0.0,
            sup: 1.0,
        }
    }

    /// `I(x) = (1 − 2δ_{i,2}δ_{j,2})·a_i·b_j / π(i, j)` with outcome index
    /// 0 ↦ +1 and 1 ↦ −1, `B = 2`.
    pub fn chsh(scenario: &Scenario) -> Result<Self> {
        require_shape(scenario, 2, 2, Some(2), "chsh")?;
        let (inf, sup) = symmetric_range(scenario);
        Ok(Self {
            name: "chsh".into(),
            scenario: scenario.clone(),
            kind: Kind::Chsh,
            bound: 2.0,
            inf,
            sup,
        })
    }

    /// Per-trial CGLMP function for `d` outcomes, `B = 2`.
    ///
    /// Each setting pair contributes the indicator form of one link of the
    /// chain `A1–B1–A2–B2–A1`, scaled by `1/π(i, j)`. The outcome shift of
    /// the chain sits on the `(A2, B2)` link, so that `I_2` coincides with
    /// the CHSH function.
    pub fn cglmp(scenario: &Scenario, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!(
                "CGLMP needs at least 2 outcomes, got {d}"
            )));
        }
        require_shape(scenario, 2, 2, Some(d), "cglmp")?;
        let (inf, sup) = symmetric_range(scenario);
        Ok(Self {
            name: format!("cglmp:{d}"),
            scenario: scenario.clone(),
            kind: Kind::Cglmp,
            bound: 2.0,
            inf,
            sup,
        })
    }

    /// One-sided no-signaling functionals for a bipartite scenario.
    ///
    /// For each party, local setting `u`, outcome `v` and pair `w1 < w2` of
    /// the other party's settings, `N(x) = ±(1{u, v, w1} − 1{u, v, w2})/π`,
    /// whose expectation `P(v|u,w1) − P(v|u,w2)` vanishes under every
    /// no-signaling model. Both signs are emitted with `B = 0`.
    pub fn no_signaling(scenario: &Scenario) -> Result<Vec<Self>> {
        if scenario.parties() != 2 {
            return Err(Error::InvalidScenario(format!(
                "no-signaling functionals need 2 parties, got {}",
                scenario.parties()
            )));
        }
        let s = scenario.settings();
        let d = scenario.outcomes();
        let mut out = Vec::new();
        for party in 0..2 {
            for setting in 0..s {
                for outcome in 0..d {
                    for first in 0..s {
                        for second in (first + 1)..s {
                            for sign in [1.0, -1.0] {
                                let term = NoSignalingTerm {
                                    party,
                                    setting,
                                    outcome,
                                    first,
                                    second,
                                    sign,
                                };
                                let (inf, sup) = no_signaling_range(scenario, &term);
                                out.push(Self {
                                    name: format!(
                                        "nosignaling:{}{}:{}:{}-{}:{}",
                                        if party == 0 { 'A' } else { 'B' },
                                        setting + 1,
                                        outcome,
                                        first + 1,
                                        second + 1,
                                        if sign > 0.0 { '+' } else { '-' }
                                    ),
                                    scenario: scenario.clone(),
                                    kind: Kind::NoSignaling(term),
                                    bound: 0.0,
                                    inf,
                                    sup,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Custom functional from a value table of length `K` ordered by
    /// `encode_result`; the range is taken from the table.
    pub fn from_table(
        scenario: &Scenario,
        name: impl Into<String>,
        bound: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let k = scenario.enumerable_size()?;
        if values.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) || !bound.is_finite() {
            return Err(Error::InvalidInput("table values must be finite".into()));
        }
        let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
        let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            name: name.into(),
            scenario: scenario.clone(),
            kind: Kind::Table(values),
            bound,
            inf,
            sup,
        })
    }

    /// Reads `{"scenario":{..}, "B":.., "values":[..]}`.
    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: TableFile = serde_json::from_str(&text)?;
        let scenario = Scenario::from_header(&file.scenario)?;
        let name = file
            .name
            .unwrap_or_else(|| format!("table:{}", path.display()));
        Self::from_table(&scenario, name, file.bound, file.values)
    }

    /// Writes the functional's value table (enumerable scenarios only).
    pub fn write_table_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = TableFile {
            scenario: self.scenario.header(),
            bound: self.bound,
            values: self.table()?,
            name: Some(self.name.clone()),
        };
        std::fs::write(path, serde_json::to_string(&file)? + "\n").map_err(|e| Error::io(path, e))
    }

    /// Value at a (valid) trial result.
    pub fn evaluate(&self, x: &TrialResult) -> f64 {
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Chsh => {
                let (i, j) = (x.settings[0], x.settings[1]);
                let sa = if x.outcomes[0] == 0 { 1.0 } else { -1.0 };
                let sb = if x.outcomes[1] == 0 { 1.0 } else { -1.0 };
                let sign = if i == 2 && j == 2 { -1.0 } else { 1.0 };
                sign * sa * sb / self.scenario.setting_probability(&x.settings)
            }
            Kind::Cglmp => {
                let d = self.scenario.outcomes();
                let (i, j) = (x.settings[0], x.settings[1]);
                let (a, b) = (x.outcomes[0], x.outcomes[1]);
                let diff = match (i, j) {
                    (1, 1) => (a + d - b) % d,
                    (2, 1) | (1, 2) => (b + d - a) % d,
                    _ => (a + 2 * d - b - 1) % d,
                };
                cglmp_score(diff, d) / self.scenario.setting_probability(&x.settings)
            }
            Kind::NoSignaling(t) => {
                let me = t.party;
                let other = 1 - t.party;
                if x.settings[me] - 1 != t.setting || x.outcomes[me] != t.outcome {
                    return 0.0;
                }
                let w = x.settings[other] - 1;
                let indicator = if w == t.first {
                    1.0
                } else if w == t.second {
                    -1.0
                } else {
                    return 0.0;
                };
                t.sign * indicator / self.scenario.setting_probability(&x.settings)
            }
            Kind::Table(values) => values[self.scenario.encode_unchecked(x)],
        }
    }

    /// Value at an encoded result index.
    pub fn evaluate_index(&self, index: usize) -> Result<f64> {
        if let Kind::Table(values) = &self.kind {
            return values.get(index).copied().ok_or_else(|| {
                Error::OutOfRange(format!("result index {index} not below {}", values.len()))
            });
        }
        Ok(self.evaluate(&self.scenario.decode_result(index)?))
    }

    /// Values over the whole result space, ordered by `encode_result`.
    pub fn table(&self) -> Result<Vec<f64>> {
        let k = self.scenario.enumerable_size()?;
        if let Kind::Table(values) = &self.kind {
            return Ok(values.clone());
        }
        (0..k).map(|x| self.evaluate_index(x)).collect()
    }

    /// Exact `(min, max)` of the function over the result space.
    pub fn bounds_by_enumeration(&self) -> Result<(f64, f64)> {
        let table = self.table()?;
        let lo = table.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, Kind::Constant(c) if c == 1.0) && self.bound == 1.0 && self.inf == 0.0
    }
}

/// `Σ_k (1 − 2k/(d−1))·(1{diff = k} − 1{diff = d−1−k})` over `k < ⌊d/2⌋`.
fn cglmp_score(diff: usize, d: usize) -> f64 {
    let half = d / 2;
    let weight = |k: usize| 1.0 - 2.0 * k as f64 / (d as f64 - 1.0);
    if diff < half {
        weight(diff)
    } else if d - 1 - diff < half {
        -weight(d - 1 - diff)
    } else {
        0.0
    }
}

fn require_shape(
    scenario: &Scenario,
    parties: usize,
    settings: usize,
    outcomes: Option<usize>,
    what: &str,
) -> Result<()> {
    let ok = scenario.parties() == parties
        && scenario.settings() == settings
        && outcomes.is_none_or(|d| scenario.outcomes() == d);
    if ok {
        return Ok(());
    }
    Err(Error::InvalidScenario(format!(
        "{what} needs l={parties}, s={settings}{}; got l={}, s={}, d={}",
        outcomes.map(|d| format!(", d={d}")).unwrap_or_default(),
        scenario.parties(),
        scenario.settings(),
        scenario.outcomes()
    )))
}

/// Range of `±1/π(i,j)` style functions attaining both signs in every setting pair.
fn symmetric_range(scenario: &Scenario) -> (f64, f64) {
    let widest = (0..scenario.joint_settings())
        .map(|j| 1.0 / scenario.joint_setting_probability(j))
        .fold(0.0, f64::max);
    (-widest, widest)
}

fn no_signaling_range(scenario: &Scenario, t: &NoSignalingTerm) -> (f64, f64) {
    let s = scenario.settings();
    let joint = |w: usize| {
        if t.party == 0 {
            t.setting * s + w
        } else {
            w * s + t.setting
        }
    };
    let plus = t.sign / scenario.joint_setting_probability(joint(t.first));
    let minus = -t.sign / scenario.joint_setting_probability(joint(t.second));
    (plus.min(minus).min(0.0), plus.max(minus).max(0.0))
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    scenario: ScenarioHeader,
    #[serde(rename = "B")]
    bound: f64,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

/// `r(x) = (I(x) − b)/(B − b)`: non-negative with `⟨r⟩ ≤ 1` under LR.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedFunctional {
    source: Functional,
    scale: f64,
}

impl StandardizedFunctional {
    pub fn trivial(scenario: &Scenario) -> Self {
        standardize(&Functional::trivial(scenario)).expect("trivial functional standardizes")
    }

    pub fn source(&self) -> &Functional {
        &self.source
    }

    pub fn name(&self) -> &str {
        &self.source.name
    }

    pub fn evaluate_r(&self, x: &TrialResult) -> f64 {
        // clamp rounding below the declared lower bound
        ((self.source.evaluate(x) - self.source.inf) * self.scale).max(0.0)
    }

    /// Standardized values over the whole result space.
    pub fn table(&self) -> Result<Vec<f64>> {
        Ok(self
            .source
            .table()?
            .into_iter()
            .map(|v| ((v - self.source.inf) * self.scale).max(0.0))
            .collect())
    }

    pub fn is_trivial(&self) -> bool {
        self.source.is_trivial()
    }
}

pub fn standardize(f: &Functional) -> Result<StandardizedFunctional> {
    if !(f.inf < f.bound) {
        return Err(Error::StandardizationUndefined {
            name: f.name.clone(),
            inf: f.inf,
            bound: f.bound,
        });
    }
    Ok(StandardizedFunctional {
        source: f.clone(),
        scale: 1.0 / (f.bound - f.inf),
    })
}

/// Names accepted by [`catalog`].
pub const CATALOG_NAMES: &[&str] = &["trivial", "chsh", "cglmp:<d>", "nosignaling"];

/// Resolves one catalog name to its functionals (`nosignaling` yields a family).
pub fn catalog(name: &str, scenario: &Scenario) -> Result<Vec<Functional>> {
    let name = name.trim();
    match name {
        "trivial" => Ok(vec![Functional::trivial(scenario)]),
        "chsh" => Ok(vec![Functional::chsh(scenario)?]),
        "nosignaling" => Functional::no_signaling(scenario),
        _ => {
            if let Some(d) = name.strip_prefix("cglmp:") {
                let d: usize = d
                    .parse()
                    .map_err(|_| Error::UnknownFunctional(name.to_string()))?;
                return Ok(vec![Functional::cglmp(scenario, d)?]);
            }
            if name == "cglmp" {
                return Ok(vec![Functional::cglmp(scenario, scenario.outcomes())?]);
            }
            Err(Error::UnknownFunctional(name.to_string()))
        }
    }
}

/// First non-trivial functional named in a comma-separated list; this is
/// the statistic of the martingale protocol.
pub fn primary_functional(names: &str, scenario: &Scenario) -> Result<Functional> {
    for name in names.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        if let Some(f) = catalog(name, scenario)?.into_iter().find(|f| !f.is_trivial()) {
            return Ok(f);
        }
    }
    Err(Error::InvalidInput(format!(
        "`{names}` names no non-trivial functional for the martingale protocol"
    )))
}

/// Standardized set for a comma-separated list of catalog names, with the
/// trivial function first (added if absent).
pub fn standardized_set(names: &str, scenario: &Scenario) -> Result<Vec<StandardizedFunctional>> {
    let mut out = vec![StandardizedFunctional::trivial(scenario)];
    for name in names.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        for f in catalog(name, scenario)? {
            if f.is_trivial() {
                continue;
            }
            out.push(standardize(&f)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lrpolytope::LrPolytope;

    fn t(settings: [usize; 2], outcomes: [usize; 2]) -> TrialResult {
        TrialResult::new(settings.to_vec(), outcomes.to_vec())
    }

    // outcome index for a ±1 value
    fn idx(v: i32) -> usize {
        if v == 1 {
            0
        } else {
            1
        }
    }

    #[test]
    fn chsh_values() {
        let f = Functional::chsh(&Scenario::chsh()).unwrap();
        assert_eq!(f.evaluate(&t([1, 1], [idx(1), idx(1)])), 4.0);
        assert_eq!(f.evaluate(&t([2, 2], [idx(1), idx(1)])), -4.0);
        assert_eq!(f.evaluate(&t([1, 2], [idx(1), idx(-1)])), -4.0);
        assert_eq!((f.bound(), f.inf(), f.sup()), (2.0, -4.0, 4.0));
        assert_eq!(f.bounds_by_enumeration().unwrap(), (-4.0, 4.0));
    }

    #[test]
    fn chsh_rejects_wrong_shape() {
        let sc = Scenario::new(2, 2, 3).unwrap();
        assert!(matches!(Functional::chsh(&sc), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn standardization_examples() {
        let r = standardize(&Functional::chsh(&Scenario::chsh()).unwrap()).unwrap();
        let x = t([1, 1], [0, 0]);
        assert!((r.evaluate_r(&x) - 4.0 / 3.0).abs() < 1e-15);
        // I = b → 0, I = B → 1 on a table functional
        let sc = Scenario::new(1, 1, 3).unwrap();
        let f = Functional::from_table(&sc, "t", 2.0, vec![-1.0, 2.0, 5.0]).unwrap();
        let r = standardize(&f).unwrap();
        assert_eq!(r.table().unwrap(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn standardization_undefined_when_inf_not_below_bound() {
        let sc = Scenario::new(1, 1, 2).unwrap();
        let f = Functional::from_table(&sc, "flat", 1.0, vec![1.0, 3.0]).unwrap();
        assert!(matches!(
            standardize(&f),
            Err(Error::StandardizationUndefined { .. })
        ));
    }

    #[test]
    fn trivial_function() {
        let sc = Scenario::chsh();
        let f = Functional::trivial(&sc);
        assert_eq!(f.bounds_by_enumeration().unwrap(), (1.0, 1.0));
        let r = StandardizedFunctional::trivial(&sc);
        assert!(r.table().unwrap().iter().all(|v| *v == 1.0));
        assert!(r.is_trivial());
    }

    #[test]
    fn lr_strategy_all_plus_gives_two_and_r_one() {
        let sc = Scenario::chsh();
        let f = Functional::chsh(&sc).unwrap();
        let r = standardize(&f).unwrap();
        let poly = LrPolytope::new(&sc).unwrap();
        // strategy 0 has every outcome 0, i.e. +1
        let e = poly.vertex_expectations(&f.table().unwrap());
        assert!((e[0] - 2.0).abs() < 1e-15);
        let er = poly.vertex_expectations(&r.table().unwrap());
        assert!((er[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cglmp_three_values_for_d3() {
        let sc = Scenario::new(2, 2, 3).unwrap();
        let f = Functional::cglmp(&sc, 3).unwrap();
        let mut values = f.table().unwrap();
        values.sort_by(f64::total_cmp);
        values.dedup();
        assert_eq!(values.len(), 3);
        assert_eq!(f.bounds_by_enumeration().unwrap(), (values[0], values[2]));
        assert_eq!((f.inf(), f.sup()), (-4.0, 4.0));
    }

    #[test]
    fn cglmp_takes_d_values() {
        for d in 2..=7 {
            let sc = Scenario::new(2, 2, d).unwrap();
            let mut values = Functional::cglmp(&sc, d).unwrap().table().unwrap();
            values.sort_by(f64::total_cmp);
            values.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            assert_eq!(values.len(), d, "d = {d}");
        }
    }

    #[test]
    fn cglmp_is_tight_at_two() {
        // brute-force maximum over all deterministic strategies
        for d in 2..=5 {
            let sc = Scenario::new(2, 2, d).unwrap();
            let f = Functional::cglmp(&sc, d).unwrap();
            let table = f.table().unwrap();
            let mut best = f64::NEG_INFINITY;
            for a1 in 0..d {
                for a2 in 0..d {
                    for b1 in 0..d {
                        for b2 in 0..d {
                            let a = [a1, a2];
                            let b = [b1, b2];
                            let mut e = 0.0;
                            for i in 0..2 {
                                for j in 0..2 {
                                    let x = t([i + 1, j + 1], [a[i], b[j]]);
                                    e += 0.25 * table[sc.encode_result(&x).unwrap()];
                                }
                            }
                            best = best.max(e);
                        }
                    }
                }
            }
            assert!((best - 2.0).abs() < 1e-12, "d = {d}: {best}");
        }
    }

    #[test]
    fn cglmp_two_equals_chsh() {
        let sc = Scenario::chsh();
        let c2 = Functional::cglmp(&sc, 2).unwrap().table().unwrap();
        let chsh = Functional::chsh(&sc).unwrap().table().unwrap();
        // least-squares affine fit I_2 = α·I_CHSH + β, then zero residual
        let n = c2.len() as f64;
        let mx = chsh.iter().sum::<f64>() / n;
        let my = c2.iter().sum::<f64>() / n;
        let sxy: f64 = chsh.iter().zip(&c2).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = chsh.iter().map(|x| (x - mx) * (x - mx)).sum();
        let alpha = sxy / sxx;
        let beta = my - alpha * mx;
        for (x, y) in chsh.iter().zip(&c2) {
            assert!((alpha * x + beta - y).abs() < 1e-12);
        }
        // LR bound 2 maps to 2
        assert!((alpha * 2.0 + beta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cglmp_argument_errors() {
        let sc = Scenario::new(2, 2, 3).unwrap();
        assert!(Functional::cglmp(&sc, 1).is_err());
        assert!(Functional::cglmp(&sc, 4).is_err());
        assert!(Functional::cglmp(&Scenario::new(3, 2, 3).unwrap(), 3).is_err());
    }

    #[test]
    fn no_signaling_counts() {
        assert_eq!(Functional::no_signaling(&Scenario::chsh()).unwrap().len(), 16);
        let sc = Scenario::new(2, 2, 3).unwrap();
        assert_eq!(Functional::no_signaling(&sc).unwrap().len(), 24);
        assert!(Functional::no_signaling(&Scenario::new(3, 2, 2).unwrap()).is_err());
    }

    #[test]
    fn no_signaling_vanishes_on_every_strategy() {
        for d in [2, 3] {
            let sc = Scenario::new(2, 2, d).unwrap();
            let poly = LrPolytope::new(&sc).unwrap();
            for f in Functional::no_signaling(&sc).unwrap() {
                assert_eq!(f.bound(), 0.0);
                let (lo, hi) = f.bounds_by_enumeration().unwrap();
                assert!(lo >= f.inf() && hi <= f.sup());
                for e in poly.vertex_expectations(&f.table().unwrap()) {
                    assert!(e.abs() < 1e-12, "{}: {e}", f.name());
                }
            }
        }
    }

    #[test]
    fn catalog_functionals_respect_bounds_on_vertices() {
        for d in [2, 3] {
            let sc = Scenario::new(2, 2, d).unwrap();
            let poly = LrPolytope::new(&sc).unwrap();
            let mut fs = catalog("cglmp", &sc).unwrap();
            if d == 2 {
                fs.extend(catalog("chsh", &sc).unwrap());
            }
            fs.extend(catalog("trivial", &sc).unwrap());
            for f in fs {
                let (lo, hi) = f.bounds_by_enumeration().unwrap();
                assert!(f.inf() <= lo && hi <= f.sup());
                let e = poly.vertex_expectations(&f.table().unwrap());
                let best = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert!(best <= f.bound() + 1e-12);
                let r = standardize(&f).unwrap().table().unwrap();
                assert!(r.iter().all(|v| *v >= 0.0));
                let er = poly.vertex_expectations(&r);
                assert!(er.iter().all(|v| *v <= 1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn catalog_names_resolve() {
        let sc = Scenario::chsh();
        assert!(catalog("chsh", &sc).is_ok());
        assert!(catalog("cglmp:2", &sc).is_ok());
        assert!(matches!(
            catalog("bogus", &sc),
            Err(Error::UnknownFunctional(n)) if n == "bogus"
        ));
        let set = standardized_set("chsh,nosignaling", &sc).unwrap();
        assert_eq!(set.len(), 18);
        assert!(set[0].is_trivial());
    }

    #[test]
    fn table_file_round_trip() {
        let sc = Scenario::chsh();
        let f = Functional::chsh(&sc).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chsh.json");
        f.write_table_file(&path).unwrap();
        let g = Functional::from_table_file(&path).unwrap();
        assert_eq!(g.table().unwrap(), f.table().unwrap());
        assert_eq!(g.bound(), 2.0);
        assert_eq!((g.inf(), g.sup()), (-4.0, 4.0));
    }
}
