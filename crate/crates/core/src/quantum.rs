//! Bipartite pure states, projective measurement banks and Born-rule
//! trial distributions for the CHSH and CGLMP configurations.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::{Distribution, Scenario, TrialResult};

/// Largest local dimension handled by [`cglmp_config`].
pub const MAX_DIMENSION: usize = 32;

const NORM_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;
const THETA_SLACK: f64 = 1e-4;

/// `ψ = Σ_{jk} amp[j·d + k] |j⟩|k⟩` for two `d`-level systems.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dim: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(dim: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || amplitudes.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "state has squared norm {norm}, expected 1"
            )));
        }
        Ok(Self { dim, amplitudes })
    }

    /// `Σ_j c_j |jj⟩` after normalizing `c`.
    pub fn from_schmidt(coefficients: &[f64]) -> Result<Self> {
        let dim = coefficients.len();
        let norm = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        if dim == 0 || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput(
                "Schmidt coefficients must be finite and not all zero".into(),
            ));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, c) in coefficients.iter().enumerate() {
            amplitudes[j * dim + j] = Complex64::new(c / norm, 0.0);
        }
        Self::new(dim, amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, j: usize, k: usize) -> Complex64 {
        self.amplitudes[j * self.dim + k]
    }
}

/// One party's projective measurements: `bases[setting][outcome]` is the
/// vector of the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBank {
    dim: usize,
    bases: Vec<Vec<Vec<Complex64>>>,
}

impl MeasurementBank {
    pub fn new(bases: Vec<Vec<Vec<Complex64>>>) -> Result<Self> {
        let dim = bases
            .first()
            .map(|b| b.len())
            .ok_or_else(|| Error::InvalidInput("measurement bank has no settings".into()))?;
        for (u, basis) in bases.iter().enumerate() {
            if basis.len() != dim || basis.iter().any(|v| v.len() != dim) {
                return Err(Error::InvalidInput(format!(
                    "setting {} is not a {dim}-element basis of {dim}-vectors",
                    u + 1
                )));
            }
            for (k, v) in basis.iter().enumerate() {
                for (l, w) in basis.iter().enumerate() {
                    let inner: Complex64 = v.iter().zip(w).map(|(a, b)| a.conj() * b).sum();
                    let target = if k == l { 1.0 } else { 0.0 };
                    if (inner - target).norm() > ORTHO_TOL {
                        return Err(Error::InvalidInput(format!(
                            "setting {} basis not orthonormal: ⟨{k}|{l}⟩ = {inner}",
                            u + 1
                        )));
                    }
                }
            }
        }
        Ok(Self { dim, bases })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> usize {
        self.bases.len()
    }

    pub fn vector(&self, setting: usize, outcome: usize) -> &[Complex64] {
        &self.bases[setting][outcome]
    }
}

/// A named bipartite configuration: state plus one bank per party.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumConfig {
    pub name: String,
    pub state: PureState,
    pub banks: [MeasurementBank; 2],
}

impl QuantumConfig {
    /// Scenario `(2, s, d)` with uniform settings.
    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(2, self.banks[0].settings(), self.state.dim())
    }

    pub fn distribution(&self) -> Result<Distribution> {
        born_distribution(&self.state, &self.banks, &self.scenario()?)
    }
}

/// `P(i, j, a, b) = π(i, j)·|⟨a_i ⊗ b_j|ψ⟩|²`.
pub fn born_distribution(
    state: &PureState,
    banks: &[MeasurementBank; 2],
    scenario: &Scenario,
) -> Result<Distribution> {
    let d = state.dim();
    if scenario.parties() != 2 || scenario.outcomes() != d {
        return Err(Error::ScenarioMismatch(format!(
            "a bipartite {d}-level state needs a (2, s, {d}) scenario"
        )));
    }
    for bank in banks {
        if bank.dim() != d || bank.settings() != scenario.settings() {
            return Err(Error::ScenarioMismatch(format!(
                "measurement bank has {} settings of dimension {}, scenario needs {} of {d}",
                bank.settings(),
                bank.dim(),
                scenario.settings()
            )));
        }
    }
    let s = scenario.settings();
    let k = scenario.enumerable_size()?;
    let mut probs = vec![0.0; k];
    for i in 0..s {
        for j in 0..s {
            let pi = scenario.setting_probability(&[i + 1, j + 1]);
            let mut block = Vec::with_capacity(d * d);
            for a in 0..d {
                let va = banks[0].vector(i, a);
                for b in 0..d {
                    let vb = banks[1].vector(j, b);
                    let mut amp = Complex64::new(0.0, 0.0);
                    for p in 0..d {
                        if va[p] == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let left = va[p].conj();
                        for q in 0..d {
                            amp += left * vb[q].conj() * state.amplitude(p, q);
                        }
                    }
                    block.push(amp.norm_sqr());
                }
            }
            // renormalize rounding so each joint setting carries exactly π(i, j)
            let total: f64 = block.iter().sum();
            for a in 0..d {
                for b in 0..d {
                    let x = TrialResult::new(vec![i + 1, j + 1], vec![a, b]);
                    probs[scenario.encode_unchecked(&x)] = pi * block[a * d + b] / total;
                }
            }
        }
    }
    Distribution::new(scenario.clone(), probs)
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Eigenbasis of the spin observable `cos φ·σ_z + sin φ·σ_x`; outcome 0 is
/// the `+1` eigenvector.
fn spin_basis(phi: f64) -> Vec<Vec<Complex64>> {
    let (s, c) = (phi / 2.0).sin_cos();
    vec![vec![real(c), real(s)], vec![real(-s), real(c)]]
}

/// `cos θ|00⟩ + sin θ|11⟩` with A measuring along z and x and B along
/// `z·cos μ ± x·sin μ`, `tan μ = sin 2θ`.
pub fn chsh_config(theta: f64) -> Result<QuantumConfig> {
    if !(theta > 0.0 && theta <= FRAC_PI_4 + THETA_SLACK) {
        return Err(Error::OutOfRange(format!("θ = {theta} not in (0, π/4]")));
    }
    // decimal spellings of π/4 such as 0.7854 land just above it
    let theta = theta.min(FRAC_PI_4);
    let state = PureState::from_schmidt(&[theta.cos(), theta.sin()])?;
    let mu = (2.0 * theta).sin().atan();
    let a = MeasurementBank::new(vec![spin_basis(0.0), spin_basis(PI / 2.0)])?;
    let b = MeasurementBank::new(vec![spin_basis(mu), spin_basis(-mu)])?;
    Ok(QuantumConfig {
        name: format!("chsh:{theta}"),
        state,
        banks: [a, b],
    })
}

/// Fourier-phase basis `|k⟩ ∝ Σ_q exp(sign·i2πq(k + shift)/d)|q⟩`.
fn phase_basis(d: usize, shift: f64, sign: f64) -> Vec<Vec<Complex64>> {
    let norm = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|k| {
            (0..d)
                .map(|q| {
                    let angle = sign * 2.0 * PI * q as f64 * (k as f64 + shift) / d as f64;
                    Complex64::from_polar(norm, angle)
                })
                .collect()
        })
        .collect()
}

/// Schmidt coefficients `c_j ∝ 1/cos(π(j − (d−1)/2)/(2d))` that maximize
/// the CGLMP value for the phase bases of [`cglmp_config`].
pub fn cglmp_schmidt(d: usize) -> Vec<f64> {
    let centre = (d as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..d)
        .map(|j| 1.0 / (PI * (j as f64 - centre) / (2.0 * d as f64)).cos())
        .collect();
    let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
    raw.into_iter().map(|c| c / norm).collect()
}

/// CGLMP configuration for `d` outcomes: phase bases with shifts
/// `α = (0, −1/2)` for A and conjugate phases with `β = (−1/4, 1/4)` for B.
pub fn cglmp_config(d: usize) -> Result<QuantumConfig> {
    if !(2..=MAX_DIMENSION).contains(&d) {
        return Err(Error::OutOfRange(format!(
            "CGLMP dimension {d} not in 2..={MAX_DIMENSION}"
        )));
    }
    let state = PureState::from_schmidt(&cglmp_schmidt(d))?;
    let a = MeasurementBank::new(vec![phase_basis(d, 0.0, 1.0), phase_basis(d, -0.5, 1.0)])?;
    let b = MeasurementBank::new(vec![phase_basis(d, -0.25, -1.0), phase_basis(d, 0.25, -1.0)])?;
    Ok(QuantumConfig {
        name: format!("cglmp:{d}"),
        state,
        banks: [a, b],
    })
}

/// Parses `chsh:<θ>` or `cglmp:<d>`.
pub fn named_config(name: &str) -> Result<QuantumConfig> {
    let name = name.trim();
    let bad = || Error::InvalidInput(format!("unknown quantum configuration `{name}`"));
    let (kind, arg) = name.split_once(':').ok_or_else(bad)?;
    match kind {
        "chsh" => chsh_config(arg.trim().parse().map_err(|_| bad())?),
        "cglmp" => cglmp_config(arg.trim().parse().map_err(|_| bad())?),
        _ => Err(bad()),
    }
}
