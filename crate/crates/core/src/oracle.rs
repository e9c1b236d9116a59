//! Side-by-side comparison of the phase-space constructors with their
//! number-basis counterparts.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bell::{homodyne_distribution, outcome_probabilities, Detector, QubitOutcome};
use crate::error::{Error, Result};
use crate::factory::{
    bs_entangled_kerr, displaced_thermal, measure_qubit, micro_macro_entangle, thermal_bell,
    thermal_qubit, thermal_superposition_conditional, BellLabel, Conditional, KerrConfig, Sign,
};
use crate::fock::{self, FockDensityMatrix};
use crate::kernel::PhaseSpaceState;
use crate::marginal::QuadratureConvention;

pub const WIGNER_TOLERANCE: f64 = 1e-6;
pub const PROBABILITY_TOLERANCE: f64 = 1e-5;
pub const PARITY_TOLERANCE: f64 = 1e-8;

pub const ORACLE_VARIANCES: [f64; 4] = [1.0, 2.0, 3.0, 5.0];
pub const ORACLE_DISPLACEMENTS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
pub const ORACLE_PHASES: [f64; 3] = [PI, PI / 2.0, PI / 16.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub max_variance: f64,
    pub max_displacement: f64,
    /// Points per axis of the square Wigner grid; points with `|β|` beyond
    /// `radius` are skipped.
    pub grid_points: usize,
    pub radius: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_variance: 5.0, max_displacement: 2.0, grid_points: 21, radius: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub constructor: String,
    pub variance: f64,
    pub displacement: f64,
    pub phi: Option<f64>,
    pub label: Option<String>,
    pub cutoff: usize,
    pub truncation_deficit: f64,
    pub certified: bool,
    pub max_wigner_deviation: f64,
    pub probability_deviation: Option<f64>,
    /// Both sides report a zero-probability outcome.
    pub impossible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellPipelineOracle {
    pub variance: f64,
    pub displacement: f64,
    pub cutoff: usize,
    pub truncation_deficit: f64,
    pub max_probability_deviation: f64,
    /// Detector-C density, over every feasible outcome and input label.
    pub max_density_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub cases: Vec<OracleCase>,
    pub max_wigner_deviation: f64,
    pub max_probability_deviation: f64,
    pub parity_residual: f64,
    pub bell_pipeline: BellPipelineOracle,
    pub passed: bool,
    pub elapsed_seconds: f64,
}

fn grid(config: &OracleConfig) -> Vec<C64> {
    let n = config.grid_points.max(2);
    let r = config.radius;
    let step = 2.0 * r / (n - 1) as f64;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let b = C64::new(-r + i as f64 * step, -r + j as f64 * step);
            if b.norm() <= r + 1e-12 {
                out.push(b);
            }
        }
    }
    out
}

/// Fixed coordinates of the other mode for two-mode slices.
const SLICES: [(usize, C64); 3] = [
    (0, C64 { re: 0.0, im: 0.0 }),
    (0, C64 { re: 0.7, im: -0.4 }),
    (1, C64 { re: 0.5, im: 0.2 }),
];

fn single_mode_deviation(state: &PhaseSpaceState, rho: &FockDensityMatrix, points: &[C64]) -> Result<f64> {
    let w = state.compile_wigner()?;
    let f = fock::fock_wigner_slice(rho, 0, &[C64::from(0.0)], points)?;
    Ok(points.iter().zip(&f).map(|(p, v)| (w.eval(&[p.re, p.im]) - v).abs()).fold(0.0, f64::max))
}

fn two_mode_deviation(state: &PhaseSpaceState, rho: &FockDensityMatrix, points: &[C64]) -> Result<f64> {
    let w = state.compile_wigner()?;
    let mut worst: f64 = 0.0;
    for (free, other) in SLICES {
        let fixed = if free == 0 { [C64::from(0.0), other] } else { [other, C64::from(0.0)] };
        let f = fock::fock_wigner_slice(rho, free, &fixed, points)?;
        for (p, v) in points.iter().zip(&f) {
            let mut pt = fixed;
            pt[free] = *p;
            let k = w.eval(&[pt[0].re, pt[0].im, pt[1].re, pt[1].im]);
            worst = worst.max((k - v).abs());
        }
    }
    Ok(worst)
}

fn is_zero_outcome(e: &Error) -> bool {
    matches!(e, Error::ZeroTrace(_) | Error::Infeasible(_))
}

struct Params {
    variance: f64,
    d: f64,
    phi: Option<f64>,
    label: Option<String>,
}

fn case(
    constructor: &str,
    p: &Params,
    rho: &FockDensityMatrix,
    wigner: f64,
    probability: Option<f64>,
) -> OracleCase {
    OracleCase {
        constructor: constructor.to_string(),
        variance: p.variance,
        displacement: p.d,
        phi: p.phi,
        label: p.label.clone(),
        cutoff: rho.cutoff(0),
        truncation_deficit: rho.truncation_deficit(),
        certified: rho.is_certified(),
        max_wigner_deviation: wigner,
        probability_deviation: probability,
        impossible: false,
    }
}

fn impossible(constructor: &str, p: &Params, probability: Option<f64>) -> OracleCase {
    OracleCase {
        constructor: constructor.to_string(),
        variance: p.variance,
        displacement: p.d,
        phi: p.phi,
        label: p.label.clone(),
        cutoff: 0,
        truncation_deficit: 0.0,
        certified: true,
        max_wigner_deviation: 0.0,
        probability_deviation: probability,
        impossible: true,
    }
}

fn conditional_pair(
    constructor: &str,
    p: &Params,
    kernel: Conditional<PhaseSpaceState>,
    fock_side: Conditional<FockDensityMatrix>,
    points: &[C64],
    two_mode: bool,
) -> Result<OracleCase> {
    let dp = (kernel.probability() - fock_side.probability()).abs();
    match (kernel, fock_side) {
        (Conditional::Possible { state, .. }, Conditional::Possible { state: rho, .. }) => {
            let w = if two_mode {
                two_mode_deviation(&state, &rho, points)?
            } else {
                single_mode_deviation(&state, &rho, points)?
            };
            Ok(case(constructor, p, &rho, w, Some(dp)))
        }
        (Conditional::Impossible { .. }, Conditional::Impossible { .. }) => Ok(impossible(constructor, p, Some(dp))),
        _ => Ok(OracleCase { max_wigner_deviation: f64::INFINITY, ..impossible(constructor, p, Some(dp)) }),
    }
}

fn balanced() -> [C64; 2] {
    [C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)]
}

/// Cases for one `(V, d)` pair.
pub fn oracle_cases_at(variance: f64, d: f64, config: &OracleConfig) -> Result<Vec<OracleCase>> {
    let points = grid(config);
    let dc = C64::from(d);
    let mut out = Vec::new();
    let base = |phi: Option<f64>, label: Option<String>| Params { variance, d, phi, label };

    let th = displaced_thermal(variance, dc)?;
    let rho = fock::thermal_fock(variance, dc, None)?;
    out.push(case("displaced_thermal", &base(None, None), &rho, single_mode_deviation(&th, &rho, &points)?, None));

    for &phi in &ORACLE_PHASES {
        // Hybrid qubit ⊗ field before measurement.
        {
            let hybrid = micro_macro_entangle(balanced(), &th, &[0], KerrConfig::new(phi))?;
            let w = hybrid.compile_wigner()?;
            let rho = fock::fock_micro_macro(variance, dc, phi, None)?;
            let mut worst: f64 = 0.0;
            for q in [C64::new(0.0, 0.0), C64::new(0.3, 0.2)] {
                let f = fock::fock_wigner_slice(&rho, 0, &[C64::from(0.0), q], &points)?;
                for (pt, v) in points.iter().zip(&f) {
                    worst = worst.max((w.at(q, &[*pt]) - v).abs());
                }
            }
            out.push(case("micro_macro_entangle", &base(Some(phi), None), &rho, worst, None));
        }
        for sign in [Sign::Plus, Sign::Minus] {
            let label = Some(sign.symbol().to_string());
            let p = base(Some(phi), label);
            let k = thermal_superposition_conditional(variance, dc, phi, sign)?;
            let f = fock::fock_thermal_superposition(variance, dc, phi, sign, None)?;
            out.push(conditional_pair("thermal_superposition", &p, k, f, &points, false)?);

            let hybrid = micro_macro_entangle(balanced(), &th.tensor(&th), &[0, 1], KerrConfig::new(phi))?;
            let k = measure_qubit(&hybrid, sign)?;
            let f = fock::fock_two_mode_kerr_entangled(variance, dc, phi, sign, None)?;
            out.push(conditional_pair("two_mode_kerr_entangled", &p, k, f, &points, true)?);

            match bs_entangled_kerr(variance, dc, phi, sign) {
                Ok(state) => {
                    let rho = fock::fock_bs_entangled_kerr(variance, dc, phi, sign, None)?;
                    out.push(case("bs_entangled_kerr", &p, &rho, two_mode_deviation(&state, &rho, &points)?, None));
                }
                Err(e) if is_zero_outcome(&e) => out.push(impossible("bs_entangled_kerr", &p, None)),
                Err(e) => return Err(e),
            }
        }
    }

    for label in BellLabel::ALL {
        let p = base(Some(PI), Some(label.name().to_string()));
        match thermal_bell(label, variance, dc) {
            Ok(state) => {
                let rho = fock::fock_thermal_bell(label, variance, dc, None)?;
                out.push(case("thermal_bell", &p, &rho, two_mode_deviation(&state, &rho, &points)?, None));
            }
            Err(e) if is_zero_outcome(&e) => {
                let f = fock::fock_two_mode_kerr_entangled(variance, dc, PI, label.sign(), None)?;
                let dp = f.probability().abs();
                out.push(if matches!(f, Conditional::Impossible { .. }) {
                    impossible("thermal_bell", &p, Some(dp))
                } else {
                    OracleCase { max_wigner_deviation: f64::INFINITY, ..impossible("thermal_bell", &p, Some(dp)) }
                });
            }
            Err(e) => return Err(e),
        }
    }

    for (a, b) in [(C64::from(FRAC_1_SQRT_2), C64::new(0.0, FRAC_1_SQRT_2)), (C64::from(0.6), C64::from(-0.8))] {
        let p = base(None, Some(format!("a={a},b={b}")));
        match thermal_qubit(a, b, variance, dc) {
            Ok(state) => {
                let rho = fock::fock_thermal_qubit(a, b, variance, dc, None)?;
                out.push(case("thermal_qubit", &p, &rho, single_mode_deviation(&state, &rho, &points)?, None));
            }
            Err(e) if is_zero_outcome(&e) => out.push(impossible("thermal_qubit", &p, None)),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Largest `|⟨Π⟩ ∓ 1|` over the four thermal-Bell states.
pub fn bell_parity_residual(variance: f64, d: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for label in BellLabel::ALL {
        let rho = fock::fock_thermal_bell(label, variance, C64::from(d), None)?;
        let parity = fock::fock_parity(&rho, &[0, 1])?;
        worst = worst.max((parity - label.sign().value()).abs());
    }
    Ok(worst)
}

/// The Bell-measurement pipeline (beam splitter, two Kerr-coupled qubits,
/// qubit readout, detector-C homodyne) in both representations.
pub fn bell_pipeline_oracle(variance: f64, d: f64) -> Result<BellPipelineOracle> {
    let cutoff = fock::oracle_cutoff(variance, C64::from(std::f64::consts::SQRT_2 * d), 2)?;
    let plus = [C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)];
    let (c_mode, d_mode) = (Detector::C.mode(), Detector::D.mode());
    let xs: Vec<f64> = (0..=160).map(|i| -8.0 + 0.1 * i as f64).collect();
    let mut worst_p: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    let mut deficit: f64 = 0.0;
    for label in BellLabel::ALL {
        let rho = fock::fock_thermal_bell(label, variance, C64::from(d), Some(cutoff))?;
        let rho = fock::fock_beam_splitter(&rho, 0, 1, PI / 2.0, 0.0)?;
        deficit = deficit.max(rho.truncation_deficit());
        let probs = outcome_probabilities(label, variance, d)?;
        for o in QubitOutcome::ALL {
            let [sc, sd] = o.signs();
            let first = fock::fock_kerr_conditional(&rho, plus, &[c_mode], PI, sc)?;
            let (p, state) = match first {
                Conditional::Impossible { probability } => (probability, None),
                Conditional::Possible { state, probability } => {
                    match fock::fock_kerr_conditional(&state, plus, &[d_mode], PI, sd)? {
                        Conditional::Impossible { probability: q } => (probability * q, None),
                        Conditional::Possible { state, probability: q } => (probability * q, Some(state)),
                    }
                }
            };
            worst_p = worst_p.max((p - probs.get(o)).abs());
            if let Some(state) = state {
                let kernel = homodyne_distribution(label, o, Detector::C, variance, d)?;
                let got = fock::fock_homodyne_distribution(&state, c_mode, 0.0, &xs, QuadratureConvention::Quadrature)?;
                for (x, g) in xs.iter().zip(got) {
                    worst_w = worst_w.max((kernel.eval(*x) - g).abs());
                }
            }
        }
    }
    Ok(BellPipelineOracle {
        variance,
        displacement: d,
        cutoff,
        truncation_deficit: deficit,
        max_probability_deviation: worst_p,
        max_density_deviation: worst_w,
    })
}

/// Full comparison over the parameter lattice within the configured bounds,
/// plus the thermal-Bell parity check at `V = 3`, `d = 1`.
pub fn oracle_check(config: &OracleConfig) -> Result<OracleReport> {
    let start = Instant::now();
    let mut cases = Vec::new();
    for &v in ORACLE_VARIANCES.iter().filter(|&&v| v <= config.max_variance) {
        for &d in ORACLE_DISPLACEMENTS.iter().filter(|&&d| d <= config.max_displacement) {
            cases.extend(oracle_cases_at(v, d, config)?);
        }
    }
    let parity_residual = bell_parity_residual(3.0, 1.0)?;
    let bell_pipeline = bell_pipeline_oracle(3.0, 1.0)?;
    let max_wigner_deviation = cases.iter().map(|c| c.max_wigner_deviation).fold(0.0, f64::max);
    let max_probability_deviation = cases.iter().filter_map(|c| c.probability_deviation).fold(0.0, f64::max);
    let passed = max_wigner_deviation < WIGNER_TOLERANCE
        && max_probability_deviation < PROBABILITY_TOLERANCE
        && parity_residual < PARITY_TOLERANCE
        && bell_pipeline.max_probability_deviation < PROBABILITY_TOLERANCE
        && bell_pipeline.max_density_deviation < PROBABILITY_TOLERANCE;
    Ok(OracleReport {
        cases,
        max_wigner_deviation,
        max_probability_deviation,
        parity_residual,
        bell_pipeline,
        passed,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lattice_agrees() {
        let cfg = OracleConfig { max_variance: 2.0, max_displacement: 0.5, grid_points: 9, radius: 3.0 };
        let report = oracle_check(&cfg).unwrap();
        for c in &report.cases {
            assert!(c.max_wigner_deviation < WIGNER_TOLERANCE, "{c:?}");
        }
        assert!(report.passed, "{:?}", (report.max_wigner_deviation, report.max_probability_deviation, report.parity_residual));
        assert!(report.cases.iter().any(|c| c.impossible));
    }

    #[test]
    fn bell_pipeline_agrees() {
        let r = bell_pipeline_oracle(3.0, 1.0).unwrap();
        assert!(r.max_probability_deviation < PROBABILITY_TOLERANCE, "{r:?}");
        assert!(r.max_density_deviation < PROBABILITY_TOLERANCE, "{r:?}");
    }

    #[test]
    fn grid_respects_radius() {
        let g = grid(&OracleConfig::default());
        assert!(g.iter().all(|b| b.norm() <= 4.0 + 1e-12));
        assert!(g.len() > 300 && g.len() < 441);
    }
}
