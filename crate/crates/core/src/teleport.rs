//! Teleportation of a thermal-state qubit through a thermal-Bell channel.
//!
//! Bob's conditional state is obtained by projecting the sender's two modes
//! onto the four Bell patterns, treating `|±α⟩|±β⟩` as an orthonormal set.
//! Bob's qubit then depends linearly on the input amplitudes through one of
//! `1`, `Z`, `X` or `XZ`, and the correction undoes it.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bell::{kerr_qubit_stage, OutcomeProbabilities, QubitOutcome};
use crate::error::{Error, Result};
use crate::factory::{thermal_bell, thermal_qubit, BellLabel};
use crate::kernel::{apply_beam_splitter, apply_displacement, apply_phase_shift, hs_overlap, partial_trace, PhaseSpaceState};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Outcomes whose formal probability falls below this are skipped.
pub const SKIP_PROBABILITY: f64 = 1e-14;

/// `∫ P(α) (a|α⟩ + b|−α⟩)(a*⟨α| + b*⟨−α|)` with amplitudes kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalQubit {
    pub a: C64,
    pub b: C64,
    pub variance: f64,
    pub d: f64,
}

impl ThermalQubit {
    pub fn new(a: C64, b: C64, variance: f64, d: f64) -> Result<Self> {
        let n = a.norm_sqr() + b.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::UnnormalizedQubit(n));
        }
        if !(variance >= 1.0) {
            return Err(Error::InvalidVariance(variance));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!("thermal qubit needs d > 0, got {d}")));
        }
        Ok(Self { a, b, variance, d })
    }

    pub fn state(&self) -> Result<PhaseSpaceState> {
        thermal_qubit(self.a, self.b, self.variance, C64::from(self.d))
    }

    /// Unnormalized trace `|a|² + |b|² + 2 Re(a b*) e^{−2d²/V}/V`.
    fn weight(&self) -> f64 {
        let g = (-2.0 * self.d * self.d / self.variance).exp() / self.variance;
        self.a.norm_sqr() + self.b.norm_sqr() + 2.0 * (self.a * self.b.conj()).re * g
    }

    fn with(&self, a: C64, b: C64) -> Self {
        Self { a, b, ..*self }
    }
}

/// Pauli frame of Bob's qubit relative to the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PauliFrame {
    Identity,
    /// `b → −b`.
    Z,
    /// `a ↔ b`.
    X,
    /// `(a, b) → (∓b, ±a)`.
    XZ,
}

/// Bob's operation for one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    Identity,
    PiPhase,
    SignFlip,
    /// Sign flip followed by a `π` phase shift.
    SignFlipThenPiPhase,
}

impl Correction {
    fn undoing(frame: PauliFrame) -> Self {
        match frame {
            PauliFrame::Identity => Correction::Identity,
            PauliFrame::Z => Correction::SignFlip,
            PauliFrame::X => Correction::PiPhase,
            PauliFrame::XZ => Correction::SignFlipThenPiPhase,
        }
    }
}

/// How the sign flip is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMode {
    /// Exact relabeling `b → −b` of the kernel coefficients.
    #[default]
    Formal,
    /// `D(iπ/(4d))`, whose relative phase between `|d⟩` and `|−d⟩` is `π`.
    Physical,
}

impl std::str::FromStr for CorrectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formal" => Ok(CorrectionMode::Formal),
            "physical" => Ok(CorrectionMode::Physical),
            other => Err(Error::InvalidParameter(format!("unknown correction mode '{other}'"))),
        }
    }
}

/// Corrections for the `Ψ⁻` channel.
pub fn correction_table() -> [(BellLabel, Correction); 4] {
    [
        (BellLabel::PsiMinus, Correction::Identity),
        (BellLabel::PhiMinus, Correction::PiPhase),
        (BellLabel::PsiPlus, Correction::SignFlip),
        (BellLabel::PhiPlus, Correction::SignFlipThenPiPhase),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleportReport {
    pub outcome: BellLabel,
    pub probability: f64,
    pub correction: Correction,
    pub mode: CorrectionMode,
    /// `Tr[ρ_out ρ_in] / Tr[ρ_in²]`; absent for skipped outcomes.
    pub hs_overlap: Option<f64>,
    pub exact_match: Option<bool>,
    pub skipped: bool,
}

/// Amplitude of the Bell pattern `label` on sender sign pattern `(s₁, s₂)`.
fn bell_coefficient(label: BellLabel, s1: f64, s2: f64) -> C64 {
    label
        .patterns()
        .iter()
        .find(|(_, p)| p[0] == s1 && p[1] == s2)
        .map_or(ZERO, |(c, _)| 0.5 * c.conj())
}

/// Bob's unnormalized amplitudes `(a′, b′)` on `|γ⟩`, `|−γ⟩` after the
/// sender's modes are projected onto `outcome`.
pub fn bob_amplitudes(a: C64, b: C64, channel: BellLabel, outcome: BellLabel) -> [C64; 2] {
    let mut out = [ZERO; 2];
    for (q, s1) in [(a, 1.0), (b, -1.0)] {
        for (c, [s2, s3]) in channel.patterns() {
            let k = if s3 > 0.0 { 0 } else { 1 };
            out[k] += bell_coefficient(outcome, s1, s2) * q * c;
        }
    }
    out
}

/// Pauli frame taking the input amplitudes to Bob's, read off from the
/// images of `(1, 0)` and `(0, 1)`.
pub fn pauli_frame(channel: BellLabel, outcome: BellLabel) -> PauliFrame {
    let e0 = bob_amplitudes(C64::from(1.0), ZERO, channel, outcome);
    let e1 = bob_amplitudes(ZERO, C64::from(1.0), channel, outcome);
    let diagonal = e0[1].norm() < 1e-14 && e1[0].norm() < 1e-14;
    if diagonal {
        if (e0[0] - e1[1]).norm() < 1e-14 {
            PauliFrame::Identity
        } else {
            PauliFrame::Z
        }
    } else if (e0[1] - e1[0]).norm() < 1e-14 {
        PauliFrame::X
    } else {
        PauliFrame::XZ
    }
}

fn apply_formal(q: &ThermalQubit, correction: Correction) -> ThermalQubit {
    match correction {
        Correction::Identity => *q,
        Correction::PiPhase => q.with(q.b, q.a),
        Correction::SignFlip => q.with(q.a, -q.b),
        Correction::SignFlipThenPiPhase => q.with(-q.b, q.a),
    }
}

fn apply_physical(q: &ThermalQubit, correction: Correction) -> Result<PhaseSpaceState> {
    let flip = C64::new(0.0, PI / (4.0 * q.d));
    let state = q.state()?;
    let out = match correction {
        Correction::Identity => state,
        Correction::PiPhase => apply_phase_shift(&state, 0, PI)?,
        Correction::SignFlip => apply_displacement(&state, 0, flip)?,
        Correction::SignFlipThenPiPhase => apply_phase_shift(&apply_displacement(&state, 0, flip)?, 0, PI)?,
    };
    out.normalize()
}

/// One report per Bell outcome of the sender's measurement.
pub fn teleport(input: &ThermalQubit, channel: BellLabel, mode: CorrectionMode) -> Result<Vec<TeleportReport>> {
    let target = input.state()?;
    let target_purity = hs_overlap(&target, &target)?;
    let bobs: Vec<(BellLabel, ThermalQubit)> = BellLabel::ALL
        .iter()
        .map(|&o| {
            let [a, b] = bob_amplitudes(input.a, input.b, channel, o);
            (o, input.with(a, b))
        })
        .collect();
    let total: f64 = bobs.iter().map(|(_, q)| q.weight()).sum();
    let mut reports = Vec::with_capacity(4);
    for (outcome, bob) in bobs {
        let probability = bob.weight() / total;
        let correction = Correction::undoing(pauli_frame(channel, outcome));
        if probability < SKIP_PROBABILITY {
            reports.push(TeleportReport {
                outcome,
                probability,
                correction,
                mode,
                hs_overlap: None,
                exact_match: None,
                skipped: true,
            });
            continue;
        }
        let out = match mode {
            CorrectionMode::Formal => {
                let fixed = apply_formal(&bob, correction);
                let n = (fixed.a.norm_sqr() + fixed.b.norm_sqr()).sqrt();
                thermal_qubit(fixed.a / n, fixed.b / n, bob.variance, C64::from(bob.d))?
            }
            CorrectionMode::Physical => apply_physical(&bob, correction)?,
        };
        let overlap = hs_overlap(&out, &target)? / target_purity;
        reports.push(TeleportReport {
            outcome,
            probability,
            correction,
            mode,
            hs_overlap: Some(overlap),
            exact_match: Some(out.approx_eq(&target, 1e-12)),
            skipped: false,
        });
    }
    Ok(reports)
}

/// Input qubit ⊗ channel: mode 0 is the qubit, modes 1 and 2 the channel.
pub fn teleport_input_state(input: &ThermalQubit, channel: BellLabel) -> Result<PhaseSpaceState> {
    Ok(input.state()?.tensor(&thermal_bell(channel, input.variance, C64::from(input.d))?))
}

/// Qubit-readout probabilities of the Bell-measurement pipeline run on the
/// sender's two modes of the full three-mode state.
pub fn sender_qubit_statistics(input: &ThermalQubit, channel: BellLabel) -> Result<OutcomeProbabilities> {
    let full = teleport_input_state(input, channel)?;
    let hybrid = kerr_qubit_stage(&apply_beam_splitter(&full, 0, 1, PI / 2.0, 0.0)?)?;
    let mut p = [0.0; 4];
    for o in QubitOutcome::ALL {
        p[o.index()] = hybrid.project(&o.signs())?.probability();
    }
    let total: f64 = p.iter().sum();
    Ok(OutcomeProbabilities(p.map(|x| x / total)))
}

/// The same readout on the reduced state of the sender's modes alone.
pub fn reduced_qubit_statistics(input: &ThermalQubit, channel: BellLabel) -> Result<OutcomeProbabilities> {
    let reduced = partial_trace(&teleport_input_state(input, channel)?, 2)?;
    let hybrid = kerr_qubit_stage(&apply_beam_splitter(&reduced, 0, 1, PI / 2.0, 0.0)?)?;
    let mut p = [0.0; 4];
    for o in QubitOutcome::ALL {
        p[o.index()] = hybrid.project(&o.signs())?.probability();
    }
    let total: f64 = p.iter().sum();
    Ok(OutcomeProbabilities(p.map(|x| x / total)))
}

/// Physical-mode overlap of the `Ψ⁺` outcome over a grid of `d`.
pub fn physical_overlap_curve(a: C64, b: C64, variance: f64, ds: &[f64]) -> Result<Vec<(f64, f64)>> {
    ds.iter()
        .map(|&d| {
            let q = ThermalQubit::new(a, b, variance, d)?;
            let reports = teleport(&q, BellLabel::PsiMinus, CorrectionMode::Physical)?;
            let r = reports.iter().find(|r| r.outcome == BellLabel::PsiPlus).expect("all outcomes reported");
            Ok((d, r.hs_overlap.unwrap_or(f64::NAN)))
        })
        .collect()
}

/// Nine amplitude pairs spread over the Bloch sphere.
pub fn bloch_grid() -> Vec<(C64, C64)> {
    let mut out = Vec::new();
    for (theta, phis) in [(0.0, vec![0.0]), (PI / 2.0, vec![0.0, PI / 2.0, PI, 1.5 * PI]), (PI / 4.0, vec![0.0, PI / 3.0]), (3.0 * PI / 4.0, vec![PI / 5.0]), (PI, vec![0.0])] {
        for phi in phis {
            out.push((C64::from((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), phi)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn table_matches_frames() {
        for (label, c) in correction_table() {
            assert_eq!(Correction::undoing(pauli_frame(BellLabel::PsiMinus, label)), c);
        }
    }

    #[test]
    fn formal_round_trip() {
        let grid = bloch_grid();
        assert_eq!(grid.len(), 9);
        for (v, d) in [(1.0, 2.0), (1.0, 8.0), (10.0, 2.0), (10.0, 8.0)] {
            for &(a, b) in &grid {
                let q = ThermalQubit::new(a, b, v, d).unwrap();
                let reports = teleport(&q, BellLabel::PsiMinus, CorrectionMode::Formal).unwrap();
                let total: f64 = reports.iter().map(|r| r.probability).sum();
                assert!((total - 1.0).abs() < 1e-10);
                for r in &reports {
                    assert_eq!(r.exact_match, Some(true), "{r:?} {a} {b} V={v} d={d}");
                    assert!((r.hs_overlap.unwrap() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn other_channels_also_round_trip() {
        let q = ThermalQubit::new(C64::from(0.6), C64::new(0.0, 0.8), 3.0, 2.0).unwrap();
        for channel in BellLabel::ALL {
            for r in teleport(&q, channel, CorrectionMode::Formal).unwrap() {
                assert_eq!(r.exact_match, Some(true));
            }
        }
    }

    #[test]
    fn physical_flip_improves_with_d() {
        let (a, b) = (C64::from(FRAC_1_SQRT_2), C64::new(0.0, FRAC_1_SQRT_2));
        let curve = physical_overlap_curve(a, b, 1.0, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 > w[0].1, "{curve:?}");
        }
        assert!(curve[3].1 > 0.99 && curve[3].1 <= 1.0 + 1e-12, "{curve:?}");
    }

    #[test]
    fn sender_statistics_ignore_bob() {
        let q = ThermalQubit::new(C64::from(0.6), C64::from(0.8), 2.0, 1.5).unwrap();
        let full = sender_qubit_statistics(&q, BellLabel::PsiMinus).unwrap();
        let reduced = reduced_qubit_statistics(&q, BellLabel::PsiMinus).unwrap();
        for o in QubitOutcome::ALL {
            assert!((full.get(o) - reduced.get(o)).abs() < 1e-10);
        }
    }

    #[test]
    fn basis_qubit_skips_nothing() {
        let q = ThermalQubit::new(C64::from(1.0), ZERO, 10.0, 2.0).unwrap();
        let reports = teleport(&q, BellLabel::PsiMinus, CorrectionMode::Formal).unwrap();
        assert!(reports.iter().all(|r| !r.skipped && r.hs_overlap == Some(1.0)));
        assert!(ThermalQubit::new(C64::from(1.0), C64::from(1.0), 1.0, 1.0).is_err());
    }
}
