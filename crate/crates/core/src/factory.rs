//! Constructors for thermal superpositions, thermal entangled states and
//! thermal-state qubits, plus the qubit ⊗ field states produced by a
//! cross-Kerr coupling.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    apply_beam_splitter, minimize_on_box, unit_phase, CompiledWigner, MinWignerConfig, MinimumReport, PhaseSpaceState,
    SearchRegion, ThermalKernel,
};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Outcome sign of a qubit measured in the `(|0⟩ ± |1⟩)/√2` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "even" => Ok(Sign::Plus),
            "-" | "minus" | "odd" => Ok(Sign::Minus),
            other => Err(Error::InvalidParameter(format!("unknown sign '{other}'"))),
        }
    }
}

/// Result of a conditional (post-selected) operation.
#[derive(Debug, Clone, PartialEq)]
pub enum Conditional<T> {
    Possible { state: T, probability: f64 },
    Impossible { probability: f64 },
}

impl<T> Conditional<T> {
    pub fn probability(&self) -> f64 {
        match self {
            Conditional::Possible { probability, .. } | Conditional::Impossible { probability } => *probability,
        }
    }

    pub fn state(&self) -> Option<&T> {
        match self {
            Conditional::Possible { state, .. } => Some(state),
            Conditional::Impossible { .. } => None,
        }
    }

    pub fn into_state(self) -> Result<T> {
        match self {
            Conditional::Possible { state, .. } => Ok(state),
            Conditional::Impossible { probability } => {
                Err(Error::Infeasible(format!("outcome has probability {probability:e}")))
            }
        }
    }
}

/// Post-select `unnormalized`, whose trace is the outcome probability.
pub(crate) fn condition(unnormalized: PhaseSpaceState) -> Result<Conditional<PhaseSpaceState>> {
    let p = unnormalized.trace()?.re;
    let scale = unnormalized.trace_scale()?;
    if !(p > 1e-300) || p < 1e-13 * scale {
        return Ok(Conditional::Impossible { probability: p });
    }
    Ok(Conditional::Possible { state: unnormalized.scale(C64::from(1.0 / p)), probability: p })
}

/// Cross-Kerr rotation angle `φ = λt`, reduced mod 2π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KerrConfig {
    pub phi: f64,
}

impl KerrConfig {
    pub fn new(phi: f64) -> Self {
        let two_pi = 2.0 * PI;
        let r = phi.rem_euclid(two_pi);
        Self { phi: if (r - two_pi).abs() < 1e-15 { 0.0 } else { r } }
    }

    pub fn from_interaction(strength: f64, time: f64) -> Self {
        Self::new(strength * time)
    }
}

/// Qubits ⊗ field state as a matrix of field-operator blocks.
///
/// Block `(i, j)` is the field operator multiplying `|i⟩⟨j|` on the qubits;
/// with two qubits the index is `2·i₁ + i₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    qubits: usize,
    field_modes: usize,
    blocks: Vec<PhaseSpaceState>,
}

fn check_amplitudes(amps: [C64; 2]) -> Result<()> {
    let n = amps[0].norm_sqr() + amps[1].norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::UnnormalizedQubit(n));
    }
    Ok(())
}

/// `R(qφ) ρ R(q'φ)†` on every listed mode.
fn rotate_block(field: &PhaseSpaceState, modes: &[usize], q: usize, qp: usize, phi: f64) -> Result<PhaseSpaceState> {
    let (ket, bra) = (unit_phase(q as f64 * phi), unit_phase(qp as f64 * phi));
    let mut out = field.clone();
    for &m in modes {
        out = out.scale_mode(m, ket, bra)?;
    }
    Ok(out)
}

impl HybridState {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn qubit_dims(&self) -> usize {
        1 << self.qubits
    }

    pub fn field_modes(&self) -> usize {
        self.field_modes
    }

    pub fn block(&self, i: usize, j: usize) -> &PhaseSpaceState {
        &self.blocks[i * self.qubit_dims() + j]
    }

    pub fn trace(&self) -> Result<f64> {
        let mut t = 0.0;
        for i in 0..self.qubit_dims() {
            t += self.block(i, i).trace()?.re;
        }
        Ok(t)
    }

    /// Couple one more control qubit `c₀|0⟩ + c₁|1⟩` to `modes`.
    pub fn entangle(&self, amplitudes: [C64; 2], modes: &[usize], kerr: KerrConfig) -> Result<Self> {
        check_amplitudes(amplitudes)?;
        let dim = self.qubit_dims();
        let new_dim = 2 * dim;
        let mut blocks = Vec::with_capacity(new_dim * new_dim);
        for row in 0..new_dim {
            for col in 0..new_dim {
                let (i, q) = (row / 2, row % 2);
                let (j, qp) = (col / 2, col % 2);
                let coeff = amplitudes[q] * amplitudes[qp].conj();
                let b = rotate_block(self.block(i, j), modes, q, qp, kerr.phi)?;
                blocks.push(b.scale(coeff));
            }
        }
        Ok(Self { qubits: self.qubits + 1, field_modes: self.field_modes, blocks })
    }

    /// Project every qubit onto `(|0⟩ + sₖ|1⟩)/√2`.
    pub fn project(&self, signs: &[Sign]) -> Result<Conditional<PhaseSpaceState>> {
        if signs.len() != self.qubits {
            return Err(Error::DimensionMismatch { expected: self.qubits, got: signs.len() });
        }
        let dim = self.qubit_dims();
        let mut acc: Option<PhaseSpaceState> = None;
        for i in 0..dim {
            for j in 0..dim {
                let mut coeff = 1.0;
                for (k, s) in signs.iter().enumerate() {
                    let shift = self.qubits - 1 - k;
                    let bits = ((i >> shift) & 1) + ((j >> shift) & 1);
                    coeff *= 0.5 * s.value().powi(bits as i32);
                }
                let term = self.block(i, j).scale(C64::from(coeff));
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term)?,
                });
            }
        }
        condition(acc.expect("at least one block"))
    }

    /// Field state with the qubits traced out.
    pub fn reduced_field(&self) -> Result<PhaseSpaceState> {
        let mut acc = self.block(0, 0).clone();
        for i in 1..self.qubit_dims() {
            acc = acc.add(self.block(i, i))?;
        }
        Ok(acc)
    }

    /// Wigner function of a single-qubit hybrid with the qubit read as a
    /// bosonic mode restricted to `{|0⟩, |1⟩}`.
    pub fn compile_wigner(&self) -> Result<HybridWigner> {
        if self.qubits != 1 {
            return Err(Error::InvalidParameter("qubit phase-space map needs a single-qubit hybrid".into()));
        }
        let blocks: Result<Vec<CompiledWigner>> = self.blocks.iter().map(|b| b.compile_wigner()).collect();
        Ok(HybridWigner { blocks: blocks? })
    }
}

/// Compiled Wigner function of a single-qubit hybrid; coordinates are
/// `(Re α, Im α)` of the qubit followed by the field coordinates.
#[derive(Debug, Clone)]
pub struct HybridWigner {
    blocks: Vec<CompiledWigner>,
}

/// Wigner functions of `|i⟩⟨j|` for `i, j ∈ {0, 1}` at `α`.
pub fn qubit_dyadic_wigner(alpha: C64) -> [C64; 4] {
    let g = (-2.0 * alpha.norm_sqr()).exp();
    let w00 = FRAC_2_PI * g;
    let w11 = FRAC_2_PI * (4.0 * alpha.norm_sqr() - 1.0) * g;
    let w01 = 2.0 * FRAC_2_PI * alpha * g;
    let w10 = 2.0 * FRAC_2_PI * alpha.conj() * g;
    [C64::from(w00), w01, w10, C64::from(w11)]
}

impl HybridWigner {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let q = qubit_dyadic_wigner(C64::new(x[0], x[1]));
        let field = &x[2..];
        let mut acc = ZERO;
        for k in 0..4 {
            let (v, _) = self.blocks[k].eval_complex(field);
            acc += q[k] * v;
        }
        acc.re
    }

    pub fn at(&self, qubit: C64, field: &[C64]) -> f64 {
        let mut x = vec![qubit.re, qubit.im];
        x.extend(field.iter().flat_map(|z| [z.re, z.im]));
        self.eval(&x)
    }
}

/// Most negative value of a single-qubit hybrid Wigner function inside
/// `region` (qubit coordinates first).
pub fn hybrid_min_wigner(hybrid: &HybridState, region: &SearchRegion, config: &MinWignerConfig) -> Result<MinimumReport> {
    let expected = 2 + 2 * hybrid.field_modes();
    if region.dim() != expected {
        return Err(Error::DimensionMismatch { expected, got: region.dim() });
    }
    let w = hybrid.compile_wigner()?;
    Ok(minimize_on_box(|x| w.eval(x), region, config))
}

/// Balanced qubit entangled with `ρ^th(V, d)` through a cross-Kerr
/// rotation by `φ`, before any qubit measurement.
pub fn qubit_field_entangled(variance: f64, d: C64, phi: f64) -> Result<HybridState> {
    micro_macro_entangle(balanced(), &displaced_thermal(variance, d)?, &[0], KerrConfig::new(phi))
}

/// `ρ^th(V, d)`.
pub fn displaced_thermal(variance: f64, d: C64) -> Result<PhaseSpaceState> {
    PhaseSpaceState::from_kernels(&[ThermalKernel::displaced_thermal(variance, d)?])
}

/// Qubit `c₀|0⟩ + c₁|1⟩` coupled by a cross-Kerr interaction to `modes`
/// of `field`: `|1⟩` rotates those modes by `e^{iφ}`.
pub fn micro_macro_entangle(
    amplitudes: [C64; 2],
    field: &PhaseSpaceState,
    modes: &[usize],
    kerr: KerrConfig,
) -> Result<HybridState> {
    for &m in modes {
        if m >= field.modes() {
            return Err(Error::ModeOutOfRange { mode: m, modes: field.modes() });
        }
    }
    let trivial = HybridState { qubits: 0, field_modes: field.modes(), blocks: vec![field.clone()] };
    trivial.entangle(amplitudes, modes, kerr)
}

/// Project a single-qubit hybrid onto `(|0⟩ ± |1⟩)/√2`.
pub fn measure_qubit(hybrid: &HybridState, sign: Sign) -> Result<Conditional<PhaseSpaceState>> {
    if hybrid.qubits() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: hybrid.qubits() });
    }
    hybrid.project(&[sign])
}

fn balanced() -> [C64; 2] {
    [C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)]
}

/// `ρ^±`: a displaced thermal state after a balanced control qubit, a
/// cross-Kerr rotation by `φ`, and a `±` qubit measurement.
pub fn thermal_superposition(variance: f64, d: C64, phi: f64, sign: Sign) -> Result<PhaseSpaceState> {
    thermal_superposition_conditional(variance, d, phi, sign)?.into_state()
}

/// As [`thermal_superposition`], also returning the outcome probability.
pub fn thermal_superposition_conditional(variance: f64, d: C64, phi: f64, sign: Sign) -> Result<Conditional<PhaseSpaceState>> {
    let field = displaced_thermal(variance, d)?;
    let hybrid = micro_macro_entangle(balanced(), &field, &[0], KerrConfig::new(phi))?;
    measure_qubit(&hybrid, sign)
}

/// One frame of a Kerr-time series.
#[derive(Debug, Clone)]
pub struct KerrFrame {
    pub theta: f64,
    pub probability: f64,
    pub state: Option<PhaseSpaceState>,
}

/// [`thermal_superposition`] at each interaction angle `θ ∈ [0, π]`.
pub fn kerr_time_series(variance: f64, d: C64, thetas: &[f64], sign: Sign) -> Result<Vec<KerrFrame>> {
    thetas
        .iter()
        .map(|&theta| {
            if !(0.0..=PI + 1e-12).contains(&theta) {
                return Err(Error::InvalidParameter(format!("θ = {theta} outside [0, π]")));
            }
            let c = thermal_superposition_conditional(variance, d, theta, sign)?;
            let probability = c.probability();
            Ok(KerrFrame { theta, probability, state: c.state().map(|s| s.simplify(1e-15)) })
        })
        .collect()
}

/// Two displaced thermal modes, both coupled to one control qubit with
/// rotation `φ`, after a `±` qubit measurement.
pub fn two_mode_kerr_entangled(variance: f64, d: C64, phi: f64, sign: Sign) -> Result<PhaseSpaceState> {
    let th = displaced_thermal(variance, d)?;
    let field = th.tensor(&th);
    let hybrid = micro_macro_entangle(balanced(), &field, &[0, 1], KerrConfig::new(phi))?;
    measure_qubit(&hybrid, sign)?.into_state()
}

/// Two-mode thermal entangled state (`φ = π`):
/// `∫∫ P(α) P(β) (|α,β⟩ ± |−α,−β⟩)(⟨α,β| ± ⟨−α,−β|)` normalized.
pub fn two_mode_thermal_entangled(variance: f64, d: C64, sign: Sign) -> Result<PhaseSpaceState> {
    two_mode_kerr_entangled(variance, d, PI, sign)
}

/// Sum of `cᵢ cⱼ*` times the dyadic `|sᵢ·α⟩⟨sⱼ·α|` over patterns, where every
/// mode carries its own independent thermal variable; normalized.
pub fn coherent_pattern_state(variance: f64, d: C64, components: &[(C64, Vec<C64>)]) -> Result<PhaseSpaceState> {
    let modes = components.first().map(|c| c.1.len()).ok_or_else(|| Error::InvalidParameter("no components".into()))?;
    let mut terms = Vec::new();
    for (ci, si) in components {
        for (cj, sj) in components {
            if si.len() != modes || sj.len() != modes {
                return Err(Error::DimensionMismatch { expected: modes, got: si.len().min(sj.len()) });
            }
            let mut term = ThermalKernel::new(variance, d, vec![si[0]], vec![sj[0]], ci * cj.conj())?.to_term();
            for m in 1..modes {
                term = term.tensor(&ThermalKernel::new(variance, d, vec![si[m]], vec![sj[m]], ONE)?.to_term());
            }
            terms.push(term);
        }
    }
    PhaseSpaceState::new(modes, terms)?.normalize()
}

/// The four thermal-Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    #[serde(rename = "Phi+")]
    PhiPlus,
    #[serde(rename = "Phi-")]
    PhiMinus,
    #[serde(rename = "Psi+")]
    PsiPlus,
    #[serde(rename = "Psi-")]
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [BellLabel::PhiPlus, BellLabel::PhiMinus, BellLabel::PsiPlus, BellLabel::PsiMinus];

    pub fn is_phi(self) -> bool {
        matches!(self, BellLabel::PhiPlus | BellLabel::PhiMinus)
    }

    pub fn sign(self) -> Sign {
        match self {
            BellLabel::PhiPlus | BellLabel::PsiPlus => Sign::Plus,
            BellLabel::PhiMinus | BellLabel::PsiMinus => Sign::Minus,
        }
    }

    pub fn from_parts(phi: bool, sign: Sign) -> Self {
        match (phi, sign) {
            (true, Sign::Plus) => BellLabel::PhiPlus,
            (true, Sign::Minus) => BellLabel::PhiMinus,
            (false, Sign::Plus) => BellLabel::PsiPlus,
            (false, Sign::Minus) => BellLabel::PsiMinus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "Phi+",
            BellLabel::PhiMinus => "Phi-",
            BellLabel::PsiPlus => "Psi+",
            BellLabel::PsiMinus => "Psi-",
        }
    }

    /// Ket sign patterns `(s₁, s₂)` and their relative amplitudes.
    pub fn patterns(self) -> [(C64, [f64; 2]); 2] {
        let s = self.sign().value();
        if self.is_phi() {
            [(ONE, [1.0, 1.0]), (C64::from(s), [-1.0, -1.0])]
        } else {
            [(ONE, [1.0, -1.0]), (C64::from(s), [-1.0, 1.0])]
        }
    }
}

impl std::fmt::Display for BellLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BellLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phiplus" => Ok(BellLabel::PhiPlus),
            "phi-" | "phiminus" => Ok(BellLabel::PhiMinus),
            "psi+" | "psiplus" => Ok(BellLabel::PsiPlus),
            "psi-" | "psiminus" => Ok(BellLabel::PsiMinus),
            other => Err(Error::InvalidParameter(format!("unknown Bell label '{other}'"))),
        }
    }
}

/// Thermal-Bell state with independent thermal variables per mode.
pub fn thermal_bell(label: BellLabel, variance: f64, d: C64) -> Result<PhaseSpaceState> {
    let comps: Vec<(C64, Vec<C64>)> =
        label.patterns().iter().map(|(c, s)| (*c, s.iter().map(|&v| C64::from(v)).collect())).collect();
    coherent_pattern_state(variance, d, &comps)
}

/// A thermal superposition with Kerr angle `φ` split on a 50:50 beam
/// splitter with a vacuum mode.
pub fn bs_entangled_kerr(variance: f64, d: C64, phi: f64, sign: Sign) -> Result<PhaseSpaceState> {
    let input = thermal_superposition(variance, d, phi, sign)?.tensor(&PhaseSpaceState::vacuum(1));
    apply_beam_splitter(&input, 0, 1, PI / 2.0, 0.0)
}

/// [`bs_entangled_kerr`] at `φ = π`.
pub fn bs_entangled(variance: f64, d: C64, sign: Sign) -> Result<PhaseSpaceState> {
    bs_entangled_kerr(variance, d, PI, sign)
}

/// Thermal-state qubit `∫ P(α) (a|α⟩ + b|−α⟩)(a*⟨α| + b*⟨−α|)`, normalized.
pub fn thermal_qubit(a: C64, b: C64, variance: f64, d: C64) -> Result<PhaseSpaceState> {
    if a == ZERO && b == ZERO {
        return Err(Error::InvalidParameter("thermal qubit amplitudes are both zero".into()));
    }
    let mut comps = Vec::new();
    if a != ZERO {
        comps.push((a, vec![ONE]));
    }
    if b != ZERO {
        comps.push((b, vec![-ONE]));
    }
    coherent_pattern_state(variance, d, &comps)
}
