//! Thermal-kernel states and their closed-form phase-space algebra.
//!
//! A [`KernelTerm`] is
//!
//! ```text
//!   w ∫ dᵏu exp(G(u)) ⊗ₘ |aₘ(u)⟩⟨bₘ(u)|
//! ```
//!
//! where `G` is a complex Gaussian exponent in `k` real integration
//! variables and `aₘ`, `bₘ` are complex-affine in those variables. A
//! [`ThermalKernel`] (one thermal P function shared by all modes, with
//! per-mode ket and bra scales) is the common special case; tensor products
//! of kernels with independent integration variables, displaced kernels and
//! partially traced kernels all stay inside the same family, so every state
//! built by this crate is a [`PhaseSpaceState`]: a weighted list of terms.
//!
//! All observables reduce to Gaussian integrals over `u` that are carried out
//! symbolically by [`ComplexGaussianExponent`].

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{close, AffineForm, ComplexGaussianExponent};
use crate::marginal::{self, FringeMetrics, GaussianComponent, GaussianMixture1D, QuadratureConvention};
use crate::optimize::{nelder_mead, NelderMeadConfig};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;

/// Version tag written into serialized states.
pub const STATE_FORMAT_VERSION: &str = "thermalcat-state/1";

/// Relative tolerance for the imaginary residue of real observables.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

/// Centroid distance beyond which evaluation switches to a recentred frame.
const RECENTRE_RADIUS: f64 = 16.0;

/// `e^{iφ}`, exact at multiples of π/2.
pub fn unit_phase(phi: f64) -> C64 {
    let quarter = phi / std::f64::consts::FRAC_PI_2;
    let k = quarter.round();
    if (quarter - k).abs() < 1e-14 {
        match (k as i64).rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    } else {
        C64::from_polar(1.0, phi)
    }
}

fn check_variance(v: f64) -> Result<()> {
    if !(v >= 1.0) || !v.is_finite() {
        return Err(Error::InvalidVariance(v));
    }
    Ok(())
}

/// `∫ d²α P(α) ⊗ᵢ |cᵢᴸ α⟩⟨cᵢᴿ α|` with `P` the thermal P function of
/// variance `V` centred at `d`, times `weight`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalKernel {
    pub variance: f64,
    pub center: C64,
    pub left_scales: Vec<C64>,
    pub right_scales: Vec<C64>,
    pub weight: C64,
}

impl ThermalKernel {
    pub fn new(variance: f64, center: C64, left_scales: Vec<C64>, right_scales: Vec<C64>, weight: C64) -> Result<Self> {
        check_variance(variance)?;
        if left_scales.len() != right_scales.len() {
            return Err(Error::DimensionMismatch { expected: left_scales.len(), got: right_scales.len() });
        }
        if left_scales.is_empty() {
            return Err(Error::InvalidParameter("a kernel needs at least one mode".into()));
        }
        Ok(Self { variance, center, left_scales, right_scales, weight })
    }

    /// Single-mode `ρ^th(V, d)`.
    pub fn displaced_thermal(variance: f64, center: C64) -> Result<Self> {
        Self::new(variance, center, vec![ONE], vec![ONE], ONE)
    }

    /// `|γ⟩⟨γ|`.
    pub fn coherent(amplitude: C64) -> Self {
        Self { variance: 1.0, center: amplitude, left_scales: vec![ONE], right_scales: vec![ONE], weight: ONE }
    }

    pub fn modes(&self) -> usize {
        self.left_scales.len()
    }

    /// `V = 1` within rounding: the P function is a point mass.
    pub fn is_point_mass(&self) -> bool {
        self.variance - 1.0 < 1e-12
    }

    pub fn to_term(&self) -> KernelTerm {
        let n = self.modes();
        if self.is_point_mass() {
            let kets = self.left_scales.iter().map(|c| AffineForm::constant(0, c * self.center)).collect();
            let bras = self.right_scales.iter().map(|c| AffineForm::constant(0, c * self.center)).collect();
            return KernelTerm { weight: self.weight, measure: ComplexGaussianExponent::new(0), kets, bras };
        }
        let s = self.variance - 1.0;
        let measure = ComplexGaussianExponent::from_parts(
            2,
            vec![C64::from(-2.0 / s), ZERO, ZERO, C64::from(-2.0 / s)],
            vec![ZERO, ZERO],
            C64::from((2.0 / (std::f64::consts::PI * s)).ln()),
        )
        .expect("2x2 measure");
        let form = |c: C64| AffineForm { coeffs: vec![c, c * C64::i()], constant: c * self.center };
        let kets = self.left_scales.iter().map(|&c| form(c)).collect();
        let bras = self.right_scales.iter().map(|&c| form(c)).collect();
        debug_assert_eq!(n, self.right_scales.len());
        KernelTerm { weight: self.weight, measure, kets, bras }
    }
}

/// General term `w ∫ exp(G(u)) ⊗ₘ |aₘ(u)⟩⟨bₘ(u)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    pub weight: C64,
    pub measure: ComplexGaussianExponent,
    pub kets: Vec<AffineForm>,
    pub bras: Vec<AffineForm>,
}

/// Add `ln⟨b|a⟩ = -|a|²/2 - |b|²/2 + b* a` to an exponent.
fn add_overlap(e: &mut ComplexGaussianExponent, a: &AffineForm, b: &AffineForm) {
    let (ac, bc) = (a.conj(), b.conj());
    e.add_product(C64::from(-0.5), a, &ac);
    e.add_product(C64::from(-0.5), b, &bc);
    e.add_product(ONE, &bc, a);
}

impl KernelTerm {
    pub fn modes(&self) -> usize {
        self.kets.len()
    }

    pub fn variables(&self) -> usize {
        self.measure.dim()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let (ka, kb) = (self.variables(), other.variables());
        let dim = ka + kb;
        let embed_a = |f: &AffineForm| f.embed(dim, 0);
        let embed_b = |f: &AffineForm| f.embed(dim, ka);
        Self {
            weight: self.weight * other.weight,
            measure: self.measure.direct_sum(&other.measure),
            kets: self.kets.iter().map(embed_a).chain(other.kets.iter().map(embed_b)).collect(),
            bras: self.bras.iter().map(embed_a).chain(other.bras.iter().map(embed_b)).collect(),
        }
    }

    /// Exponent whose integral is `ln Tr(term) - ln w`.
    fn trace_exponent(&self) -> ComplexGaussianExponent {
        let mut e = self.measure.clone();
        for (a, b) in self.kets.iter().zip(&self.bras) {
            add_overlap(&mut e, a, b);
        }
        e
    }

    pub fn trace(&self) -> Result<C64> {
        if self.weight == ZERO {
            return Ok(ZERO);
        }
        Ok(self.weight * self.trace_exponent().log_integral()?.exp())
    }

    /// Wigner function as a Gaussian in the `2n` real phase-space coordinates
    /// `(Re β₁, Im β₁, Re β₂, ...)`.
    pub fn compile_wigner(&self) -> Result<CompiledTerm> {
        let k = self.variables();
        let n = self.modes();
        let dim = k + 2 * n;
        let mut e = self.measure.embed(dim, 0);
        for m in 0..n {
            let a = self.kets[m].embed(dim, 0);
            let b = self.bras[m].embed(dim, 0);
            let beta = AffineForm::complex_coordinate(dim, k + 2 * m, ONE);
            let (ac, bc, betac) = (a.conj(), b.conj(), beta.conj());
            e.add_product(C64::from(-2.0), &beta, &betac);
            e.add_product(C64::from(2.0), &a, &betac);
            e.add_product(C64::from(2.0), &bc, &beta);
            e.add_product(C64::from(-0.5), &a, &ac);
            e.add_product(C64::from(-0.5), &b, &bc);
            e.add_product(C64::from(-1.0), &a, &bc);
            e.add_constant(C64::from(FRAC_2_PI.ln()));
        }
        let exponent = e.integrate_leading(k)?;
        Ok(CompiledTerm { weight: self.weight, exponent })
    }

    /// Quadrature density contribution of one mode at angle `theta`
    /// (`X = (a + a†)/√2` convention), other modes traced out.
    pub fn compile_marginal(&self, mode: usize, theta: f64) -> Result<GaussianComponent> {
        let k = self.variables();
        let dim = k + 1;
        let mut e = self.measure.embed(dim, 0);
        for m in 0..self.modes() {
            let a = self.kets[m].embed(dim, 0);
            let b = self.bras[m].embed(dim, 0);
            if m != mode {
                add_overlap(&mut e, &a, &b);
                continue;
            }
            let (ac, bc) = (a.conj(), b.conj());
            let ap = a.scale(unit_phase(-theta));
            let bcp = bc.scale(unit_phase(theta));
            let mut x = AffineForm::zeros(dim);
            x.coeffs[k] = ONE;
            let r2 = C64::from(std::f64::consts::SQRT_2);
            e.add_product(C64::from(-1.0), &x, &x);
            e.add_product(r2, &x, &ap);
            e.add_product(r2, &x, &bcp);
            e.add_product(C64::from(-0.5), &ap, &ap);
            e.add_product(C64::from(-0.5), &bcp, &bcp);
            e.add_product(C64::from(-0.5), &a, &ac);
            e.add_product(C64::from(-0.5), &b, &bc);
            e.add_constant(C64::from(-0.5 * std::f64::consts::PI.ln()));
        }
        let g = e.integrate_leading(k)?;
        Ok(GaussianComponent { q: g.quadratic(0, 0), l: g.linear()[0], c: g.constant_term() + self.weight.ln() })
    }

    fn map_mode_forms(&self, mode: usize, ket: C64, bra: C64) -> Self {
        let mut t = self.clone();
        t.kets[mode] = t.kets[mode].scale(ket);
        t.bras[mode] = t.bras[mode].scale(bra);
        t
    }

    /// Integrate out variables no longer referenced by any form.
    fn prune(mut self) -> Result<Self> {
        let k = self.variables();
        let used: Vec<bool> = (0..k)
            .map(|j| self.kets.iter().chain(&self.bras).any(|f| f.coeffs[j] != ZERO))
            .collect();
        let unused: Vec<usize> = (0..k).filter(|&j| !used[j]).collect();
        if unused.is_empty() {
            return Ok(self);
        }
        let keep: Vec<usize> = (0..k).filter(|&j| used[j]).collect();
        self.measure = self.measure.integrate_coordinates(&unused)?;
        self.kets = self.kets.iter().map(|f| f.select(&keep)).collect();
        self.bras = self.bras.iter().map(|f| f.select(&keep)).collect();
        Ok(self)
    }

    /// Same operator structure (measure up to its constant, forms) within `tol`.
    fn same_structure(&self, other: &Self, tol: f64) -> bool {
        let k = self.variables();
        if k != other.variables() || self.modes() != other.modes() {
            return false;
        }
        for i in 0..k {
            for j in 0..k {
                if !close(self.measure.quadratic(i, j), other.measure.quadratic(i, j), tol) {
                    return false;
                }
            }
            if !close(self.measure.linear()[i], other.measure.linear()[i], tol) {
                return false;
            }
        }
        self.kets.iter().zip(&other.kets).all(|(a, b)| a.approx_eq(b, tol))
            && self.bras.iter().zip(&other.bras).all(|(a, b)| a.approx_eq(b, tol))
    }

    /// `ln w + G(0)`: the weight with the measure constant folded in.
    fn log_coefficient(&self) -> C64 {
        self.weight.ln() + self.measure.constant_term()
    }
}

/// A term's Wigner function `w exp(E(x))`.
#[derive(Debug, Clone)]
pub struct CompiledTerm {
    pub weight: C64,
    pub exponent: ComplexGaussianExponent,
}

impl CompiledTerm {
    pub fn eval(&self, x: &[f64]) -> C64 {
        self.weight * self.exponent.eval(x).exp()
    }
}

/// Wigner function of a whole state, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledWigner {
    modes: usize,
    /// Real coordinates of the frame origin; terms are evaluated at `x − offsets`.
    offsets: Option<Vec<f64>>,
    terms: Vec<CompiledTerm>,
}

impl CompiledWigner {
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Complex sum over terms at real coordinates `x` (length `2n`).
    pub fn eval_complex(&self, x: &[f64]) -> (C64, f64) {
        if let Some(o) = &self.offsets {
            let y: Vec<f64> = x.iter().zip(o).map(|(a, b)| a - b).collect();
            return self.eval_local(&y);
        }
        self.eval_local(x)
    }

    fn eval_local(&self, x: &[f64]) -> (C64, f64) {
        let mut sum = ZERO;
        let mut scale = 0.0;
        for t in &self.terms {
            let v = t.eval(x);
            scale += v.norm();
            sum += v;
        }
        (sum, scale)
    }

    /// Real value; the imaginary residue is checked against
    /// [`HERMITICITY_TOLERANCE`].
    pub fn eval_real(&self, x: &[f64]) -> Result<f64> {
        let (v, scale) = self.eval_complex(x);
        let tol = HERMITICITY_TOLERANCE * scale.max(1.0);
        if v.im.abs() > tol {
            return Err(Error::Hermiticity { residue: v.im.abs(), tolerance: tol });
        }
        Ok(v.re)
    }

    /// Real part without the hermiticity check (hot loops).
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.offsets {
            None => self.terms.iter().map(|t| t.eval(x).re).sum(),
            Some(_) => self.eval_complex(x).0.re,
        }
    }

    pub fn at(&self, point: &[C64]) -> Result<f64> {
        if point.len() != self.modes {
            return Err(Error::DimensionMismatch { expected: self.modes, got: point.len() });
        }
        self.eval_real(&to_real_coords(point))
    }
}

pub fn to_real_coords(point: &[C64]) -> Vec<f64> {
    point.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn from_real_coords(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|c| C64::new(c[0], c[1])).collect()
}

/// Weighted sum of kernel terms over a fixed number of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceState {
    modes: usize,
    terms: Vec<KernelTerm>,
}

#[derive(Serialize, Deserialize)]
struct StateDocument {
    version: String,
    modes: usize,
    terms: Vec<KernelTerm>,
}

impl PhaseSpaceState {
    pub fn new(modes: usize, terms: Vec<KernelTerm>) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("a state needs at least one mode".into()));
        }
        for t in &terms {
            if t.modes() != modes || t.bras.len() != modes {
                return Err(Error::DimensionMismatch { expected: modes, got: t.modes() });
            }
            let k = t.variables();
            if let Some(f) = t.kets.iter().chain(&t.bras).find(|f| f.dim() != k) {
                return Err(Error::DimensionMismatch { expected: k, got: f.dim() });
            }
        }
        Ok(Self { modes, terms })
    }

    pub fn from_kernels(kernels: &[ThermalKernel]) -> Result<Self> {
        let modes = kernels.first().map(|k| k.modes()).ok_or_else(|| Error::InvalidParameter("empty kernel list".into()))?;
        Self::new(modes, kernels.iter().map(|k| k.to_term()).collect())
    }

    pub fn vacuum(modes: usize) -> Self {
        let term = KernelTerm {
            weight: ONE,
            measure: ComplexGaussianExponent::new(0),
            kets: vec![AffineForm::constant(0, ZERO); modes],
            bras: vec![AffineForm::constant(0, ZERO); modes],
        };
        Self { modes, terms: vec![term] }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(Error::ModeOutOfRange { mode, modes: self.modes });
        }
        Ok(())
    }

    pub fn trace(&self) -> Result<C64> {
        let parts: Result<Vec<C64>> = self.terms.par_iter().map(|t| t.trace()).collect();
        Ok(parts?.into_iter().sum())
    }

    /// Sum of `|Tr term|`, the scale against which cancellations are judged.
    pub fn trace_scale(&self) -> Result<f64> {
        let mut s = 0.0;
        for t in &self.terms {
            s += t.trace()?.norm();
        }
        Ok(s)
    }

    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace()?;
        if !(tr.re > 1e-300) || tr.im.abs() > 1e-8 * tr.re.max(1.0) {
            return Err(Error::ZeroTrace(tr.re));
        }
        Ok(self.scale(C64::from(1.0 / tr.re)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let terms = self.terms.iter().map(|t| KernelTerm { weight: t.weight * s, ..t.clone() }).collect();
        Self { modes: self.modes, terms }
    }

    /// Operator sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.modes != other.modes {
            return Err(Error::DimensionMismatch { expected: self.modes, got: other.modes });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { modes: self.modes, terms })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.tensor(b));
            }
        }
        Self { modes: self.modes + other.modes, terms }
    }

    /// Merge structurally identical terms and drop vanishing ones.
    pub fn simplify(&self, tol: f64) -> Self {
        let mut out: Vec<KernelTerm> = Vec::new();
        for t in &self.terms {
            if t.weight == ZERO {
                continue;
            }
            if let Some(existing) = out.iter_mut().find(|e| e.same_structure(t, tol)) {
                let shift = t.measure.constant_term() - existing.measure.constant_term();
                existing.weight += t.weight * shift.exp();
            } else {
                out.push(t.clone());
            }
        }
        out.retain(|t| t.weight != ZERO);
        Self { modes: self.modes, terms: out }
    }

    /// Term-list equality after merging, with relative tolerance `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.modes != other.modes {
            return false;
        }
        let a = self.simplify(tol);
        let b = other.simplify(tol);
        if a.terms.len() != b.terms.len() {
            return false;
        }
        let mut used = vec![false; b.terms.len()];
        for ta in &a.terms {
            let found = b.terms.iter().enumerate().position(|(j, tb)| {
                !used[j] && ta.same_structure(tb, tol) && ((ta.log_coefficient() - tb.log_coefficient()).exp() - ONE).norm() <= tol
            });
            match found {
                Some(j) => used[j] = true,
                None => return false,
            }
        }
        true
    }

    /// `⟨aₘ⟩ / Tr ρ` for every mode (zero when the trace vanishes).
    pub fn centroids(&self) -> Result<Vec<C64>> {
        let tr = self.trace()?;
        if tr.norm() < 1e-12 * self.trace_scale()?.max(1e-300) {
            return Ok(vec![ZERO; self.modes]);
        }
        (0..self.modes).map(|m| Ok(ladder_moments(self, m)?[1] / tr)).collect()
    }

    /// Displacement that moves states far from the origin back to it, so
    /// that exponents stay small; `None` when no mode is far out.
    fn recentring(&self) -> Result<Option<Vec<C64>>> {
        if self.terms.iter().all(|t| t.kets.iter().chain(&t.bras).all(|f| f.constant.norm() < RECENTRE_RADIUS)) {
            return Ok(None);
        }
        let c = self.centroids()?;
        if c.iter().all(|z| z.norm() < RECENTRE_RADIUS) {
            return Ok(None);
        }
        Ok(Some(c))
    }

    fn displaced_all(&self, shifts: &[C64]) -> Result<Self> {
        let mut out = self.clone();
        for (m, &g) in shifts.iter().enumerate() {
            if g != ZERO {
                out = apply_displacement(&out, m, -g)?;
            }
        }
        Ok(out)
    }

    /// Compiled Wigner function; states far from the origin are evaluated in
    /// a frame centred on their centroid.
    pub fn compile_wigner(&self) -> Result<CompiledWigner> {
        let (state, offsets) = match self.recentring()? {
            None => (std::borrow::Cow::Borrowed(self), None),
            Some(c) => (std::borrow::Cow::Owned(self.displaced_all(&c)?), Some(to_real_coords(&c))),
        };
        let terms: Result<Vec<CompiledTerm>> =
            state.terms.par_iter().filter(|t| t.weight != ZERO).map(|t| t.compile_wigner()).collect();
        Ok(CompiledWigner { modes: self.modes, offsets, terms: terms? })
    }

    pub fn wigner(&self, point: &[C64]) -> Result<f64> {
        state_wigner(self, point)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = StateDocument { version: STATE_FORMAT_VERSION.into(), modes: self.modes, terms: self.terms.clone() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: StateDocument = serde_json::from_str(s)?;
        if doc.version != STATE_FORMAT_VERSION {
            return Err(Error::Serialization(format!("unsupported version {}", doc.version)));
        }
        Self::new(doc.modes, doc.terms)
    }

    pub(crate) fn map_terms(&self, f: impl Fn(&KernelTerm) -> KernelTerm) -> Self {
        Self { modes: self.modes, terms: self.terms.iter().map(f).collect() }
    }

    /// Multiply the ket forms of `mode` by `ket` and the bra forms by `bra`.
    pub(crate) fn scale_mode(&self, mode: usize, ket: C64, bra: C64) -> Result<Self> {
        self.check_mode(mode)?;
        Ok(self.map_terms(|t| t.map_mode_forms(mode, ket, bra)))
    }
}

/// Closed-form Wigner value of a single kernel at `point`.
pub fn kernel_wigner(kernel: &ThermalKernel, point: &[C64]) -> Result<C64> {
    check_variance(kernel.variance)?;
    if point.len() != kernel.modes() {
        return Err(Error::DimensionMismatch { expected: kernel.modes(), got: point.len() });
    }
    Ok(kernel.to_term().compile_wigner()?.eval(&to_real_coords(point)))
}

pub fn kernel_trace(kernel: &ThermalKernel) -> Result<C64> {
    check_variance(kernel.variance)?;
    kernel.to_term().trace()
}

pub fn state_wigner(state: &PhaseSpaceState, point: &[C64]) -> Result<f64> {
    if point.len() != state.modes {
        return Err(Error::DimensionMismatch { expected: state.modes, got: point.len() });
    }
    state.compile_wigner()?.at(point)
}

/// Box in real phase-space coordinates `(Re β₁, Im β₁, ...)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchRegion {
    /// `[-r, r]` on every coordinate of an `n`-mode phase space.
    pub fn square(modes: usize, radius: f64) -> Self {
        Self { lower: vec![-radius; 2 * modes], upper: vec![radius; 2 * modes] }
    }

    /// Square box of half-width `radius` around each complex centre.
    pub fn around(centers: &[C64], radius: f64) -> Self {
        let c = to_real_coords(centers);
        Self { lower: c.iter().map(|v| v - radius).collect(), upper: c.iter().map(|v| v + radius).collect() }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinWignerConfig {
    /// Grid points per axis; `None` picks 101 in two dimensions and keeps
    /// the total near 3·10⁶ otherwise.
    pub grid_points: Option<usize>,
    /// Number of best grid points handed to the simplex refinement.
    pub candidates: usize,
    pub refine_iterations: usize,
    pub tolerance: f64,
}

impl Default for MinWignerConfig {
    fn default() -> Self {
        Self { grid_points: None, candidates: 8, refine_iterations: 500, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimumReport {
    pub point: Vec<f64>,
    pub value: f64,
    /// Set when the function is negligible everywhere on the grid.
    pub support_warning: bool,
}

/// Grid scan over `region` followed by simplex refinement of the best
/// candidates (kept inside the box).
pub fn minimize_on_box<F>(f: F, region: &SearchRegion, config: &MinWignerConfig) -> MinimumReport
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = region.dim();
    let per_axis = config.grid_points.unwrap_or(if dim <= 2 { 101 } else { (3.0e6f64.powf(1.0 / dim as f64)).floor().max(3.0) as usize }).max(2);
    let total = per_axis.pow(dim as u32);
    let coord = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        (0..dim)
            .map(|a| {
                let i = rem % per_axis;
                rem /= per_axis;
                region.lower[a] + (region.upper[a] - region.lower[a]) * i as f64 / (per_axis - 1) as f64
            })
            .collect()
    };
    let values: Vec<f64> = (0..total).into_par_iter().map(|i| f(&coord(i))).collect();
    let support_warning = values.iter().all(|v| v.abs() < 1e-12);

    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let step: Vec<f64> = (0..dim).map(|a| (region.upper[a] - region.lower[a]) / (per_axis - 1) as f64).collect();
    let clamp = |x: &[f64]| -> Vec<f64> {
        x.iter().enumerate().map(|(a, v)| v.clamp(region.lower[a], region.upper[a])).collect()
    };
    let nm = NelderMeadConfig { max_iter: config.refine_iterations, ftol: config.tolerance, xtol: 1e-12 };
    let refined: Vec<(Vec<f64>, f64)> = order[..config.candidates.min(total)]
        .par_iter()
        .map(|&i| {
            let m = nelder_mead(|x| f(&clamp(x)), &coord(i), &step, &nm);
            let x = clamp(&m.x);
            let v = f(&x);
            (x, v)
        })
        .collect();
    let mut best = (coord(order[0]), values[order[0]]);
    for (x, v) in refined {
        if v < best.1 {
            best = (x, v);
        }
    }
    MinimumReport { point: best.0, value: best.1, support_warning }
}

/// Most negative Wigner value of `state` inside `region`.
pub fn min_wigner(state: &PhaseSpaceState, region: &SearchRegion, config: &MinWignerConfig) -> Result<MinimumReport> {
    if region.dim() != 2 * state.modes() {
        return Err(Error::DimensionMismatch { expected: 2 * state.modes(), got: region.dim() });
    }
    let w = state.compile_wigner()?;
    let report = minimize_on_box(|x| w.eval(x), region, config);
    w.eval_real(&report.point)?;
    Ok(report)
}

/// Closed-form quadrature density of `mode` at angle `theta`.
pub fn marginal_distribution(
    state: &PhaseSpaceState,
    mode: usize,
    theta: f64,
    convention: QuadratureConvention,
) -> Result<GaussianMixture1D> {
    state.check_mode(mode)?;
    let (local, offset) = match state.recentring()? {
        None => (std::borrow::Cow::Borrowed(state), 0.0),
        Some(c) => {
            let o = std::f64::consts::SQRT_2 * (c[mode] * unit_phase(-theta)).re;
            (std::borrow::Cow::Owned(state.displaced_all(&c)?), o)
        }
    };
    let comps: Result<Vec<GaussianComponent>> =
        local.terms.par_iter().filter(|t| t.weight != ZERO).map(|t| t.compile_marginal(mode, theta)).collect();
    let mixture = GaussianMixture1D::new(comps?)?.with_offset(offset);
    let scale: f64 = mixture.components.iter().map(|c| c.log_peak().exp()).sum();
    mixture.check_nonnegative(1e-12 * (1.0 + scale))?;
    Ok(mixture.with_convention(convention))
}

/// Visibility and fringe spacing of the marginal of `mode` along `theta`.
pub fn fringe_metrics(
    state: &PhaseSpaceState,
    mode: usize,
    theta: f64,
    convention: QuadratureConvention,
) -> Result<FringeMetrics> {
    Ok(marginal::fringe_metrics(&marginal_distribution(state, mode, theta, convention)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMoments {
    pub mean_photon: f64,
    /// `⟨X_θ⟩` with `X_θ = (a e^{-iθ} + a† e^{iθ})/√2`.
    pub quadrature_mean: f64,
    pub quadrature_variance: f64,
    /// `Tr ρ²` of the whole state.
    pub purity: f64,
}

/// Raw moments `(⟨a†a⟩, ⟨a⟩, ⟨a²⟩, ⟨a†²⟩)` of one mode.
pub fn ladder_moments(state: &PhaseSpaceState, mode: usize) -> Result<[C64; 4]> {
    state.check_mode(mode)?;
    let parts: Result<Vec<[C64; 4]>> = state
        .terms
        .par_iter()
        .filter(|t| t.weight != ZERO)
        .map(|t| {
            let e = t.trace_exponent();
            let a = &t.kets[mode];
            let bc = t.bras[mode].conj();
            let n = e.moments(&bc, a)?;
            let aa = e.moments(a, a)?;
            let bb = e.moments(&bc, &bc)?;
            let z = t.weight * n.log_z.exp();
            Ok([z * n.mean_fg, z * n.mean_g, z * aa.mean_fg, z * bb.mean_fg])
        })
        .collect();
    let mut acc = [ZERO; 4];
    for p in parts? {
        for i in 0..4 {
            acc[i] += p[i];
        }
    }
    Ok(acc)
}

pub fn moments(state: &PhaseSpaceState, mode: usize, theta: f64) -> Result<ModeMoments> {
    let tr = state.trace()?.re;
    let [n, a, a2, ad2] = ladder_moments(state, mode)?;
    let (n, a, a2, ad2) = (n / tr, a / tr, a2 / tr, ad2 / tr);
    let ph = unit_phase(-theta);
    let mean = std::f64::consts::SQRT_2 * (ph * a).re;
    let second = 0.5 * ((ph * ph * a2 + ph.conj() * ph.conj() * ad2).re + 2.0 * n.re + 1.0);
    Ok(ModeMoments {
        mean_photon: n.re,
        quadrature_mean: mean,
        quadrature_variance: second - mean * mean,
        purity: purity(state)?,
    })
}

pub fn quadrature_variance(state: &PhaseSpaceState, mode: usize, theta: f64) -> Result<f64> {
    let tr = state.trace()?.re;
    let [n, a, a2, ad2] = ladder_moments(state, mode)?;
    let ph = unit_phase(-theta);
    let mean = std::f64::consts::SQRT_2 * (ph * a / tr).re;
    let second = 0.5 * ((ph * ph * a2 + ph.conj() * ph.conj() * ad2).re / tr + 2.0 * n.re / tr + 1.0);
    Ok(second - mean * mean)
}

fn pair_overlap(a: &KernelTerm, b: &KernelTerm) -> Result<C64> {
    let (ka, kb) = (a.variables(), b.variables());
    let dim = ka + kb;
    let mut e = a.measure.direct_sum(&b.measure);
    for m in 0..a.modes() {
        let (a_ket, a_bra) = (a.kets[m].embed(dim, 0), a.bras[m].embed(dim, 0));
        let (b_ket, b_bra) = (b.kets[m].embed(dim, ka), b.bras[m].embed(dim, ka));
        add_overlap(&mut e, &b_ket, &a_bra);
        add_overlap(&mut e, &a_ket, &b_bra);
    }
    Ok(a.weight * b.weight * e.log_integral()?.exp())
}

/// `Tr[ρ_a ρ_b]` in closed form.
pub fn hs_overlap(a: &PhaseSpaceState, b: &PhaseSpaceState) -> Result<f64> {
    if a.modes != b.modes {
        return Err(Error::DimensionMismatch { expected: a.modes, got: b.modes });
    }
    let pairs: Vec<(usize, usize)> =
        (0..a.terms.len()).flat_map(|i| (0..b.terms.len()).map(move |j| (i, j))).collect();
    let parts: Result<Vec<C64>> = pairs.par_iter().map(|&(i, j)| pair_overlap(&a.terms[i], &b.terms[j])).collect();
    let total: C64 = parts?.into_iter().sum();
    Ok(total.re)
}

pub fn purity(state: &PhaseSpaceState) -> Result<f64> {
    hs_overlap(state, state)
}

/// Hilbert–Schmidt distance `‖ρ_a − ρ_b‖₂`.
pub fn hs_distance(a: &PhaseSpaceState, b: &PhaseSpaceState) -> Result<f64> {
    let d2 = hs_overlap(a, a)? + hs_overlap(b, b)? - 2.0 * hs_overlap(a, b)?;
    Ok(d2.max(0.0).sqrt())
}

/// `exp[θ/2 (e^{iφ} aᵢ† aⱼ − h.c.)]`, acting on coherent amplitudes as
/// `αᵢ → cos(θ/2) αᵢ + e^{iφ} sin(θ/2) αⱼ`, `αⱼ → −e^{−iφ} sin(θ/2) αᵢ + cos(θ/2) αⱼ`.
pub fn apply_beam_splitter(state: &PhaseSpaceState, i: usize, j: usize, theta: f64, phi: f64) -> Result<PhaseSpaceState> {
    state.check_mode(i)?;
    state.check_mode(j)?;
    if i == j {
        return Err(Error::InvalidParameter("beam splitter needs two distinct modes".into()));
    }
    let half = 0.5 * theta;
    let (c, s) = if (half - std::f64::consts::FRAC_PI_4).abs() < 1e-15 {
        (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
    } else {
        (half.cos(), half.sin())
    };
    let e = unit_phase(phi);
    let (c, s) = (C64::from(c), C64::from(s));
    Ok(state.map_terms(|t| {
        let mut t = t.clone();
        let mix = |fi: &AffineForm, fj: &AffineForm| {
            (fi.scale(c).add(&fj.scale(e * s)), fi.scale(-e.conj() * s).add(&fj.scale(c)))
        };
        let (ki, kj) = mix(&t.kets[i], &t.kets[j]);
        let (bi, bj) = mix(&t.bras[i], &t.bras[j]);
        t.kets[i] = ki;
        t.kets[j] = kj;
        t.bras[i] = bi;
        t.bras[j] = bj;
        t
    }))
}

/// `R(φ) ρ R(φ)†` with `R(φ)|α⟩ = |α e^{iφ}⟩`.
pub fn apply_phase_shift(state: &PhaseSpaceState, mode: usize, phi: f64) -> Result<PhaseSpaceState> {
    let p = unit_phase(phi);
    state.scale_mode(mode, p, p)
}

/// `D(γ) ρ D(γ)†` on one mode.
pub fn apply_displacement(state: &PhaseSpaceState, mode: usize, gamma: C64) -> Result<PhaseSpaceState> {
    state.check_mode(mode)?;
    let half = C64::from(0.5);
    Ok(state.map_terms(|t| {
        let mut t = t.clone();
        let (a, b) = (t.kets[mode].clone(), t.bras[mode].clone());
        // D(γ)|a⟩ = e^{(γ a* − γ* a)/2} |a + γ⟩, and the conjugate on the bra.
        t.measure.add_form(half * gamma, &a.conj());
        t.measure.add_form(-half * gamma.conj(), &a);
        t.measure.add_form(half * gamma.conj(), &b);
        t.measure.add_form(-half * gamma, &b.conj());
        t.kets[mode] = a.shift(gamma);
        t.bras[mode] = b.shift(gamma);
        t
    }))
}

/// Trace out `mode`.
pub fn partial_trace(state: &PhaseSpaceState, mode: usize) -> Result<PhaseSpaceState> {
    state.check_mode(mode)?;
    if state.modes == 1 {
        return Err(Error::InvalidParameter("cannot trace out the only mode".into()));
    }
    let terms: Result<Vec<KernelTerm>> = state
        .terms
        .iter()
        .map(|t| {
            let mut t = t.clone();
            let (a, b) = (t.kets.remove(mode), t.bras.remove(mode));
            add_overlap(&mut t.measure, &a, &b);
            t.prune()
        })
        .collect();
    Ok(PhaseSpaceState { modes: state.modes - 1, terms: terms? })
}

/// `τ/ħν = 1 / ln[(V+1)/(V−1)]`; zero at `V = 1`.
pub fn temperature_map(variance: f64) -> Result<f64> {
    check_variance(variance)?;
    if variance == 1.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (2.0 / (variance - 1.0)).ln_1p())
}

/// Inverse of [`temperature_map`]: `V = coth(ħν / 2τ)`.
pub fn variance_from_temperature(tau: f64) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("temperature must be non-negative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(1.0);
    }
    let x = 1.0 / tau;
    // (e^x + 1)/(e^x − 1) = 1 + 2/(e^x − 1)
    Ok(1.0 + 2.0 / x.exp_m1())
}
