//! Thermal-Bell state discrimination with a 50:50 beam splitter, two
//! cross-Kerr couplings to dual-rail single-photon qubits, qubit parity
//! readout and homodyne detection.
//!
//! After the beam splitter, output mode 0 carries `η = (α+β)/√2` for the
//! `Φ` states and output mode 1 carries it for the `Ψ` states. Homodyne
//! detector C reads output mode 1, so its `Φ` densities are centred on the
//! origin and its `Ψ` densities sit near `±2d`. The first qubit sign in an
//! outcome belongs to the qubit coupled to detector C's mode.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factory::{micro_macro_entangle, thermal_bell, BellLabel, Conditional, HybridState, KerrConfig, Sign};
use crate::kernel::{apply_beam_splitter, marginal_distribution, moments, PhaseSpaceState};
use crate::marginal::{GaussianMixture1D, QuadratureConvention};

/// Beam-splitter output read by the many-photon detector A for `Φ` inputs.
pub const DETECTOR_A_MODE: usize = 0;
/// Beam-splitter output read by the many-photon detector B for `Ψ` inputs.
pub const DETECTOR_B_MODE: usize = 1;

/// Homodyne detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detector {
    C,
    D,
}

impl Detector {
    pub fn mode(self) -> usize {
        match self {
            Detector::C => DETECTOR_B_MODE,
            Detector::D => DETECTOR_A_MODE,
        }
    }
}

impl std::str::FromStr for Detector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "c" => Ok(Detector::C),
            "D" | "d" => Ok(Detector::D),
            other => Err(Error::InvalidParameter(format!("unknown detector '{other}'"))),
        }
    }
}

/// Joint result of the two dual-rail qubit measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitOutcome {
    #[serde(rename = "++")]
    PlusPlus,
    #[serde(rename = "+-")]
    PlusMinus,
    #[serde(rename = "-+")]
    MinusPlus,
    #[serde(rename = "--")]
    MinusMinus,
}

impl QubitOutcome {
    pub const ALL: [QubitOutcome; 4] =
        [QubitOutcome::PlusPlus, QubitOutcome::PlusMinus, QubitOutcome::MinusPlus, QubitOutcome::MinusMinus];

    pub fn from_signs(c: Sign, d: Sign) -> Self {
        match (c, d) {
            (Sign::Plus, Sign::Plus) => QubitOutcome::PlusPlus,
            (Sign::Plus, Sign::Minus) => QubitOutcome::PlusMinus,
            (Sign::Minus, Sign::Plus) => QubitOutcome::MinusPlus,
            (Sign::Minus, Sign::Minus) => QubitOutcome::MinusMinus,
        }
    }

    /// Signs of the qubits on detector C's mode and detector D's mode.
    pub fn signs(self) -> [Sign; 2] {
        match self {
            QubitOutcome::PlusPlus => [Sign::Plus, Sign::Plus],
            QubitOutcome::PlusMinus => [Sign::Plus, Sign::Minus],
            QubitOutcome::MinusPlus => [Sign::Minus, Sign::Plus],
            QubitOutcome::MinusMinus => [Sign::Minus, Sign::Minus],
        }
    }

    /// Total photon-number parity of the field.
    pub fn parity(self) -> Sign {
        let [a, b] = self.signs();
        if a == b {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            QubitOutcome::PlusPlus => "++",
            QubitOutcome::PlusMinus => "+-",
            QubitOutcome::MinusPlus => "-+",
            QubitOutcome::MinusMinus => "--",
        }
    }
}

impl std::fmt::Display for QubitOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for QubitOutcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        QubitOutcome::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown qubit outcome '{s}'")))
    }
}

/// The projectors `|±±⟩⟨±±|` on two dual-rail qubits, in the logical basis
/// `|L₀⟩ = |0⟩|1⟩`, `|L₁⟩ = |1⟩|0⟩` per rail pair, where
/// `|ψ±⟩ = (|L₀⟩ ± |L₁⟩)/√2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitMeasurementBasis {
    pub projectors: [[C64; 16]; 4],
}

impl QubitMeasurementBasis {
    pub fn new() -> Self {
        let mut projectors = [[C64::new(0.0, 0.0); 16]; 4];
        for o in QubitOutcome::ALL {
            let v = Self::vector(o);
            for i in 0..4 {
                for j in 0..4 {
                    projectors[o.index()][i * 4 + j] = v[i] * v[j].conj();
                }
            }
        }
        Self { projectors }
    }

    pub fn vector(outcome: QubitOutcome) -> [C64; 4] {
        let [a, b] = outcome.signs();
        let single = |s: Sign| [FRAC_1_SQRT_2, s.value() * FRAC_1_SQRT_2];
        let (u, w) = (single(a), single(b));
        [u[0] * w[0], u[0] * w[1], u[1] * w[0], u[1] * w[1]].map(C64::from)
    }
}

impl Default for QubitMeasurementBasis {
    fn default() -> Self {
        Self::new()
    }
}

/// First beam splitter of the measurement: `(α, β) → ((α+β)/√2, (β−α)/√2)`.
pub fn bs1_transform(bell: &PhaseSpaceState) -> Result<PhaseSpaceState> {
    if bell.modes() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: bell.modes() });
    }
    apply_beam_splitter(bell, 0, 1, PI / 2.0, 0.0)
}

/// Couple a `|ψ₊⟩` dual-rail qubit to each output mode with a cross-Kerr
/// phase of `π`; the qubit on detector C's mode comes first.
pub fn kerr_qubit_stage(field: &PhaseSpaceState) -> Result<HybridState> {
    let plus = [C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)];
    let kerr = KerrConfig::new(PI);
    micro_macro_entangle(plus, field, &[Detector::C.mode()], kerr)?.entangle(plus, &[Detector::D.mode()], kerr)
}

/// Thermal-Bell input through the beam splitter and both Kerr couplings.
pub fn measurement_pipeline(label: BellLabel, variance: f64, d: f64) -> Result<HybridState> {
    let input = thermal_bell(label, variance, C64::from(d))?;
    kerr_qubit_stage(&bs1_transform(&input)?)
}

/// Probabilities indexed by [`QubitOutcome::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities(pub [f64; 4]);

impl OutcomeProbabilities {
    pub fn get(&self, o: QubitOutcome) -> f64 {
        self.0[o.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Qubit outcome probabilities computed through the hybrid pipeline.
pub fn outcome_probabilities(label: BellLabel, variance: f64, d: f64) -> Result<OutcomeProbabilities> {
    let hybrid = measurement_pipeline(label, variance, d)?;
    let mut p = [0.0; 4];
    for o in QubitOutcome::ALL {
        p[o.index()] = hybrid.project(&o.signs())?.probability();
    }
    let total: f64 = p.iter().sum();
    Ok(OutcomeProbabilities(p.map(|x| x / total)))
}

/// Closed-form outcome probabilities.
///
/// Each output mode ends in an even or odd thermal cat whose weight is
/// `1 ± g` with `g = e^{−2|m|²/V}/V` for centre `m`: `g = 1/V` on the empty
/// mode and `e^{−4d²/V}/V` on the occupied one.
pub fn closed_form_probabilities(label: BellLabel, variance: f64, d: f64) -> Result<OutcomeProbabilities> {
    if !(variance >= 1.0) {
        return Err(Error::InvalidVariance(variance));
    }
    let g_empty = 1.0 / variance;
    let g_full = (-4.0 * d * d / variance).exp() / variance;
    let (g_c, g_d) = if label.is_phi() { (g_empty, g_full) } else { (g_full, g_empty) };
    let s = label.sign().value();
    let z = 2.0 * (1.0 + s * g_c * g_d);
    let mut p = [0.0; 4];
    for o in QubitOutcome::ALL {
        if o.parity() != label.sign() {
            continue;
        }
        let [a, b] = o.signs();
        p[o.index()] = (1.0 + a.value() * g_c) * (1.0 + b.value() * g_d) / z;
    }
    Ok(OutcomeProbabilities(p))
}

/// Normalized two-mode field state after the qubit readout.
pub fn conditional_field_state(
    label: BellLabel,
    variance: f64,
    d: f64,
    outcome: QubitOutcome,
) -> Result<Conditional<PhaseSpaceState>> {
    measurement_pipeline(label, variance, d)?.project(&outcome.signs())
}

/// Homodyne density of `X = (a + a†)/√2` at `detector`.
pub fn homodyne_distribution(
    label: BellLabel,
    outcome: QubitOutcome,
    detector: Detector,
    variance: f64,
    d: f64,
) -> Result<GaussianMixture1D> {
    let state = conditional_field_state(label, variance, d, outcome)?.into_state().map_err(|_| {
        Error::Infeasible(format!("outcome {outcome} cannot follow input {label}"))
    })?;
    marginal_distribution(&state, detector.mode(), 0.0, QuadratureConvention::Quadrature)
}

/// Detector-C density for a `Φ` input whose C-mode cat has parity `sign`:
/// `√V(e^{−x²/V} ± e^{−Vx²})/(√π(V ± 1))`, with the `V = 1` odd case taken
/// as its limit `2x² e^{−x²}/√π`.
pub fn phi_density_closed_form(sign: Sign, variance: f64, x: f64) -> f64 {
    let v = variance;
    let sqrt_pi = PI.sqrt();
    match sign {
        Sign::Plus => v.sqrt() * ((-v * x * x).exp() + (-x * x / v).exp()) / (sqrt_pi * (v + 1.0)),
        Sign::Minus if (v - 1.0).abs() < 1e-9 => 2.0 * x * x * (-x * x).exp() / sqrt_pi,
        Sign::Minus => v.sqrt() * ((-x * x / v).exp() - (-v * x * x).exp()) / (sqrt_pi * (v - 1.0)),
    }
}

/// Success probability of telling `Φ⁺` from `Ψ⁺` after a `++` readout by
/// the test `|x| < d` at detector C.
pub fn distinguishability(variance: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!("distinguishability needs d > 0, got {d}")));
    }
    let phi = homodyne_distribution(BellLabel::PhiPlus, QubitOutcome::PlusPlus, Detector::C, variance, d)?;
    let psi = homodyne_distribution(BellLabel::PsiPlus, QubitOutcome::PlusPlus, Detector::C, variance, d)?;
    let inside_phi = phi.interval(-d, d);
    let outside_psi = 1.0 - psi.interval(-d, d);
    Ok(0.5 * (inside_phi + outside_psi))
}

/// `∫ p(x) q(x) dx` by composite Simpson quadrature over the joint support.
pub fn density_overlap(p: &GaussianMixture1D, q: &GaussianMixture1D) -> f64 {
    let (a0, b0) = p.support();
    let (a1, b1) = q.support();
    let (lo, hi) = (a0.min(a1), b0.max(b1));
    let n = 20_000;
    let h = (hi - lo) / n as f64;
    let f = |x: f64| p.eval(x).max(0.0) * q.eval(x).max(0.0);
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// One simulated measurement run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellOutcomeRecord {
    pub qubit_outcome: QubitOutcome,
    /// Detector C.
    pub homodyne_x: f64,
    /// Detector D, when read.
    pub homodyne_x_d: Option<f64>,
    pub decision: Option<BellLabel>,
    pub correct: Option<bool>,
}

impl BellOutcomeRecord {
    pub fn new(qubit_outcome: QubitOutcome, homodyne_x: f64) -> Self {
        Self { qubit_outcome, homodyne_x, homodyne_x_d: None, decision: None, correct: None }
    }
}

/// Threshold rule: the qubit parity picks the sign, `|x| < d` at detector C
/// picks `Φ`. With detector D read as well, `Φ` also needs `|x_D| ≥ d`.
pub fn discriminate(record: &BellOutcomeRecord, _variance: f64, d: f64) -> BellLabel {
    let mut phi = record.homodyne_x.abs() < d;
    if let Some(xd) = record.homodyne_x_d {
        phi = phi && xd.abs() >= d;
    }
    BellLabel::from_parts(phi, record.qubit_outcome.parity())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    #[default]
    Threshold,
    /// Maximum likelihood over the two labels allowed by the qubit parity,
    /// with equal priors.
    LikelihoodRatio,
}

/// Closed-form outcome probabilities and detector densities for every
/// feasible `(label, outcome)` pair at fixed `(V, d)`.
#[derive(Debug, Clone)]
pub struct BellModel {
    pub variance: f64,
    pub d: f64,
    pub probabilities: [OutcomeProbabilities; 4],
    densities_c: Vec<Option<GaussianMixture1D>>,
    densities_d: Vec<Option<GaussianMixture1D>>,
}

fn label_index(label: BellLabel) -> usize {
    BellLabel::ALL.iter().position(|&l| l == label).expect("label listed")
}

impl BellModel {
    pub fn new(variance: f64, d: f64) -> Result<Self> {
        let mut probabilities = [OutcomeProbabilities([0.0; 4]); 4];
        let mut densities_c = Vec::with_capacity(16);
        let mut densities_d = Vec::with_capacity(16);
        for label in BellLabel::ALL {
            let hybrid = measurement_pipeline(label, variance, d)?;
            for o in QubitOutcome::ALL {
                let cond = hybrid.project(&o.signs())?;
                probabilities[label_index(label)].0[o.index()] = cond.probability() / hybrid.trace()?;
                match cond.state() {
                    Some(s) => {
                        let mc = marginal_distribution(s, Detector::C.mode(), 0.0, QuadratureConvention::Quadrature)?;
                        let md = marginal_distribution(s, Detector::D.mode(), 0.0, QuadratureConvention::Quadrature)?;
                        densities_c.push(Some(mc));
                        densities_d.push(Some(md));
                    }
                    None => {
                        densities_c.push(None);
                        densities_d.push(None);
                    }
                }
            }
        }
        Ok(Self { variance, d, probabilities, densities_c, densities_d })
    }

    pub fn density(&self, label: BellLabel, outcome: QubitOutcome, detector: Detector) -> Option<&GaussianMixture1D> {
        let k = label_index(label) * 4 + outcome.index();
        match detector {
            Detector::C => self.densities_c[k].as_ref(),
            Detector::D => self.densities_d[k].as_ref(),
        }
    }

    fn likelihood(&self, label: BellLabel, record: &BellOutcomeRecord) -> f64 {
        let o = record.qubit_outcome;
        let p = self.probabilities[label_index(label)].get(o);
        let Some(dc) = self.density(label, o, Detector::C) else {
            return 0.0;
        };
        let mut l = p * dc.eval(record.homodyne_x).max(0.0);
        if let (Some(xd), Some(dd)) = (record.homodyne_x_d, self.density(label, o, Detector::D)) {
            l *= dd.eval(xd).max(0.0);
        }
        l
    }

    pub fn decide(&self, record: &BellOutcomeRecord, rule: DecisionRule) -> BellLabel {
        match rule {
            DecisionRule::Threshold => discriminate(record, self.variance, self.d),
            DecisionRule::LikelihoodRatio => {
                let sign = record.qubit_outcome.parity();
                let (phi, psi) = (BellLabel::from_parts(true, sign), BellLabel::from_parts(false, sign));
                BellLabel::from_parts(self.likelihood(phi, record) >= self.likelihood(psi, record), sign)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    pub rule: DecisionRule,
    pub use_detector_d: bool,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { trials: 100_000, seed: 0, rule: DecisionRule::Threshold, use_detector_d: false }
    }
}

/// Rows are true labels and columns decisions, both in [`BellLabel::ALL`]
/// order; entries are counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: [BellLabel; 4],
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn accuracy(&self, label: BellLabel) -> f64 {
        let row = &self.counts[label_index(label)];
        let total: u64 = row.iter().sum();
        row[label_index(label)] as f64 / total.max(1) as f64
    }

    pub fn overall_accuracy(&self) -> f64 {
        let total: u64 = self.counts.iter().flatten().sum();
        let hits: u64 = (0..4).map(|i| self.counts[i][i]).sum();
        hits as f64 / total.max(1) as f64
    }
}

/// Seed for trial `k` of `label`, derived from the master seed.
fn trial_seed(master: u64, label: usize, k: usize) -> u64 {
    let mut z = master ^ ((label as u64) << 56) ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_outcome(p: &OutcomeProbabilities, u: f64) -> QubitOutcome {
    let mut acc = 0.0;
    let total = p.total();
    for o in QubitOutcome::ALL {
        acc += p.get(o) / total;
        if u < acc {
            return o;
        }
    }
    QubitOutcome::ALL.into_iter().rev().find(|&o| p.get(o) > 0.0).unwrap_or(QubitOutcome::MinusMinus)
}

/// Sample the qubit outcome, then the detector readings by inverse CDF, and
/// apply the decision rule; one seeded generator per trial.
pub fn simulate(model: &BellModel, label: BellLabel, config: &MonteCarloConfig) -> Vec<BellOutcomeRecord> {
    let probs = model.probabilities[label_index(label)];
    let samplers: Vec<_> = QubitOutcome::ALL
        .iter()
        .map(|&o| {
            let c = model.density(label, o, Detector::C).map(|m| m.sampler());
            let d = model.density(label, o, Detector::D).map(|m| m.sampler());
            (c, d)
        })
        .collect();
    let li = label_index(label);
    (0..config.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, li, k));
            let o = sample_outcome(&probs, rng.gen());
            let (sc, sd) = &samplers[o.index()];
            let x = sc.as_ref().map_or(f64::NAN, |s| s.quantile(rng.gen()));
            let mut rec = BellOutcomeRecord::new(o, x);
            if config.use_detector_d {
                rec.homodyne_x_d = sd.as_ref().map(|s| s.quantile(rng.gen()));
            }
            let decision = model.decide(&rec, config.rule);
            rec.decision = Some(decision);
            rec.correct = Some(decision == label);
            rec
        })
        .collect()
}

pub fn confusion_matrix(model: &BellModel, config: &MonteCarloConfig) -> ConfusionMatrix {
    let mut counts = [[0u64; 4]; 4];
    for (i, label) in BellLabel::ALL.into_iter().enumerate() {
        for rec in simulate(model, label, config) {
            counts[i][label_index(rec.decision.expect("decided"))] += 1;
        }
    }
    ConfusionMatrix { labels: BellLabel::ALL, counts }
}

/// Mean photon numbers on the two beam-splitter outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonSplit {
    pub detector_a: f64,
    pub detector_b: f64,
    /// Mean on the output that the input label routes its amplitude to.
    pub many: f64,
    pub few: f64,
}

pub fn mean_photon_split(label: BellLabel, variance: f64, d: f64) -> Result<PhotonSplit> {
    let out = bs1_transform(&thermal_bell(label, variance, C64::from(d))?)?;
    let a = moments(&out, DETECTOR_A_MODE, 0.0)?.mean_photon;
    let b = moments(&out, DETECTOR_B_MODE, 0.0)?.mean_photon;
    let (many, few) = if label.is_phi() { (a, b) } else { (b, a) };
    Ok(PhotonSplit { detector_a: a, detector_b: b, many, few })
}

/// Detector-C density of one outcome on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub outcome: QubitOutcome,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellReport {
    pub input_label: BellLabel,
    #[serde(rename = "V")]
    pub variance: f64,
    pub d: f64,
    pub outcome_probs: OutcomeProbabilities,
    pub x_grid: Vec<f64>,
    pub density_grid: Vec<DensityCurve>,
    #[serde(rename = "P_s")]
    pub p_s: f64,
    pub confusion_matrix: ConfusionMatrix,
    pub accuracy: f64,
}

/// Everything the measurement pipeline reports for one input label.
pub fn bell_report(label: BellLabel, variance: f64, d: f64, xs: &[f64], mc: &MonteCarloConfig) -> Result<BellReport> {
    let model = BellModel::new(variance, d)?;
    let probs = model.probabilities[label_index(label)];
    let density_grid = QubitOutcome::ALL
        .into_iter()
        .filter_map(|o| {
            model
                .density(label, o, Detector::C)
                .map(|m| DensityCurve { outcome: o, density: xs.iter().map(|&x| m.eval(x)).collect() })
        })
        .collect();
    let confusion = confusion_matrix(&model, mc);
    Ok(BellReport {
        input_label: label,
        variance,
        d,
        outcome_probs: probs,
        x_grid: xs.to_vec(),
        density_grid,
        p_s: distinguishability(variance, d)?,
        accuracy: confusion.accuracy(label),
        confusion_matrix: confusion,
    })
}
