//! Truncated number-basis density matrices, used as an independent
//! brute-force check of the phase-space closed forms.
//!
//! A [`FockDensityMatrix`] carries one dimension per mode; qubits are modes
//! of dimension 2. Matrices are dense and stored row-major, with the last
//! mode varying fastest.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::factory::{BellLabel, Conditional, Sign};
use crate::kernel::unit_phase;
use crate::marginal::QuadratureConvention;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Largest truncation deficit a construction may carry and still count as
/// certified.
pub const DEFICIT_TOLERANCE: f64 = 1e-10;
/// Per-mode cutoff cap for states with more than one field mode.
pub const MAX_FIELD_CUTOFF: usize = 60;
const MAX_RULE_CUTOFF: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    dims: Vec<usize>,
    data: Vec<C64>,
    truncation_deficit: f64,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut st = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        st[k] = st[k + 1] * dims[k + 1];
    }
    st
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for k in 1..=n {
        out.push(out[k - 1] + (k as f64).ln());
    }
    out
}

/// `⟨m|D(γ)|n⟩` for `m < rows`, `n < cols`, row-major.
///
/// Uses `√(n!/m!) γ^{m-n} e^{-|γ|²/2} L_n^{(m-n)}(|γ|²)` for `m ≥ n` and
/// `⟨m|D(γ)|n⟩ = ⟨n|D(-γ)|m⟩*` otherwise, so every element is exact rather
/// than an artifact of a truncated generator.
pub fn displacement_matrix(gamma: C64, rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![ZERO; rows * cols];
    let x = gamma.norm_sqr();
    if x == 0.0 {
        for k in 0..rows.min(cols) {
            out[k * cols + k] = ONE;
        }
        return out;
    }
    let lf = ln_factorials(rows.max(cols));
    let r = gamma.norm();
    let lr = r.ln();
    let ph = gamma / r;
    // One diagonal at a time: the Laguerre recurrence runs along the lower index.
    let mut diagonal = |offset: usize, len: usize, phase: C64, lower_is_col: bool| {
        let a = offset as f64;
        let (mut l_prev, mut l) = (0.0, 1.0);
        for k in 0..len {
            let hi = k + offset;
            let mag = (0.5 * (lf[k] - lf[hi]) - 0.5 * x + a * lr).exp();
            let idx = if lower_is_col { hi * cols + k } else { k * cols + hi };
            out[idx] = phase * (mag * l);
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0 + a - x) * l - (kf + a) * l_prev) / (kf + 1.0);
            l_prev = l;
            l = next;
        }
    };
    for offset in 0..rows {
        let len = cols.min(rows - offset);
        diagonal(offset, len, ph.powu(offset as u32), true);
    }
    for offset in 1..cols {
        let len = rows.min(cols - offset);
        diagonal(offset, len, (-ph).powu(offset as u32).conj(), false);
    }
    out
}

/// `D(2β)Π` restricted to `dim` levels, the single-mode Wigner kernel.
fn displaced_parity(beta: C64, dim: usize) -> Vec<C64> {
    let mut a = displacement_matrix(2.0 * beta, dim, dim);
    for row in a.chunks_mut(dim) {
        for (m, v) in row.iter_mut().enumerate() {
            if m % 2 == 1 {
                *v = -*v;
            }
        }
    }
    a
}

/// Normalized Hermite functions `ψ_n(x)` for `n < dim`, `X = (a + a†)/√2`.
fn hermite_functions(x: f64, dim: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(dim);
    if dim == 0 {
        return psi;
    }
    psi.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if dim > 1 {
        psi.push(std::f64::consts::SQRT_2 * x * psi[0]);
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

/// Sparse operator on a subset of modes: `rows[s]` lists `(s', U[s, s'])`.
type LocalRows = Vec<Vec<(usize, C64)>>;

fn dense_rows(u: &[C64], dim: usize) -> LocalRows {
    (0..dim)
        .map(|r| (0..dim).filter_map(|c| {
            let v = u[r * dim + c];
            (v != ZERO).then_some((c, v))
        }).collect())
        .collect()
}

impl FockDensityMatrix {
    /// Build from a row-major matrix; checks shape and hermiticity.
    pub fn new(dims: Vec<usize>, data: Vec<C64>, truncation_deficit: f64) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidParameter("Fock dimensions must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        let out = Self { dims, data, truncation_deficit };
        let residue = out.hermiticity_residue();
        if residue > 1e-12 * (1.0 + out.max_abs()) {
            return Err(Error::Hermiticity { residue, tolerance: 1e-12 });
        }
        Ok(out)
    }

    /// `|ψ⟩⟨ψ|` for a state vector over `dims`, normalized.
    pub fn pure(dims: Vec<usize>, psi: &[C64]) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if psi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: psi.len() });
        }
        let n: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        if !(n > 0.0) {
            return Err(Error::ZeroTrace(n));
        }
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = psi[r] * psi[c].conj() / n;
            }
        }
        Self::new(dims, data, 0.0)
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::number_state(0, cutoff).expect("vacuum fits any cutoff")
    }

    pub fn number_state(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::CutoffInsufficient { cutoff, deficit: 1.0 });
        }
        let mut psi = vec![ZERO; cutoff + 1];
        psi[n] = ONE;
        Self::pure(vec![cutoff + 1], &psi)
    }

    /// Truncated coherent state; the lost norm becomes the deficit.
    pub fn coherent(alpha: C64, cutoff: usize) -> Self {
        let psi: Vec<C64> = displacement_matrix(alpha, cutoff + 1, 1);
        let kept: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        let mut out = Self::pure(vec![cutoff + 1], &psi).expect("coherent amplitudes are nonzero");
        out.truncation_deficit = 1.0 - kept;
        out
    }

    /// `c₀|0⟩ + c₁|1⟩` as a dimension-2 mode.
    pub fn qubit(amplitudes: [C64; 2]) -> Result<Self> {
        let n = amplitudes[0].norm_sqr() + amplitudes[1].norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::UnnormalizedQubit(n));
        }
        Self::pure(vec![2], &amplitudes)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn modes(&self) -> usize {
        self.dims.len()
    }

    /// Highest number state kept on `mode`.
    pub fn cutoff(&self, mode: usize) -> usize {
        self.dims[mode] - 1
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major matrix elements.
    pub fn matrix(&self) -> &[C64] {
        &self.data
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    /// `1 − trace` before renormalization, accumulated over the construction.
    pub fn truncation_deficit(&self) -> f64 {
        self.truncation_deficit
    }

    pub fn is_certified(&self) -> bool {
        self.truncation_deficit < DEFICIT_TOLERANCE
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|k| self.data[k * dim + k]).sum()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_residue(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.data[r * dim + c] - self.data[c * dim + r].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        let m = DMatrix::from_fn(dim, dim, |r, c| 0.5 * (self.data[r * dim + c] + self.data[c * dim + r].conj()));
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Tr[ρ σ]`.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let dim = self.dim();
        let mut acc = ZERO;
        for r in 0..dim {
            for c in 0..dim {
                acc += self.data[r * dim + c] * other.data[c * dim + r];
            }
        }
        Ok(acc)
    }

    pub fn purity(&self) -> f64 {
        self.overlap(self).map(|v| v.re).unwrap_or(f64::NAN)
    }

    /// Divide by the trace, folding the lost weight into the deficit.
    pub fn renormalize(&self) -> Result<Self> {
        let t = self.trace().re;
        if !(t > 0.0) {
            return Err(Error::ZeroTrace(t));
        }
        let data = self.data.iter().map(|v| v / t).collect();
        let deficit = 1.0 - (1.0 - self.truncation_deficit) * t.min(1.0);
        Ok(Self { dims: self.dims.clone(), data, truncation_deficit: deficit })
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim(), other.dim());
        let dim = da * db;
        let mut data = vec![ZERO; dim * dim];
        for ia in 0..da {
            for ja in 0..da {
                let a = self.data[ia * da + ja];
                if a == ZERO {
                    continue;
                }
                for ib in 0..db {
                    let row = (ia * db + ib) * dim + ja * db;
                    let src = &other.data[ib * db..(ib + 1) * db];
                    for (dst, b) in data[row..row + db].iter_mut().zip(src) {
                        *dst = a * b;
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let deficit = 1.0 - (1.0 - self.truncation_deficit) * (1.0 - other.truncation_deficit);
        Self { dims, data, truncation_deficit: deficit }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(Error::ModeOutOfRange { mode, modes: self.modes() });
        }
        Ok(())
    }

    /// Photon number on `mode` for every full index.
    fn digits(&self, mode: usize) -> Vec<usize> {
        let st = strides(&self.dims);
        (0..self.dim()).map(|r| (r / st[mode]) % self.dims[mode]).collect()
    }

    /// `Σ_{i,j} ρ[…i…, …j…] A[j, i]`: removes `mode`, leaving an operator
    /// (not necessarily hermitian) on the others.
    fn contract(&self, mode: usize, a: &[C64]) -> (Vec<usize>, Vec<C64>) {
        let d = self.dims[mode];
        let dim = self.dim();
        let mut dims = self.dims.clone();
        dims.remove(mode);
        let st = strides(&self.dims);
        let inner = st[mode];
        let reduced = |r: usize| (r / (d * inner)) * inner + r % inner;
        let rdim = dim / d;
        let digit: Vec<usize> = (0..dim).map(|r| (r / inner) % d).collect();
        let red: Vec<usize> = (0..dim).map(reduced).collect();
        let mut out = vec![ZERO; rdim * rdim];
        for r in 0..dim {
            let (i, rr) = (digit[r], red[r]);
            let row = &self.data[r * dim..(r + 1) * dim];
            let dst = &mut out[rr * rdim..(rr + 1) * rdim];
            for (c, v) in row.iter().enumerate() {
                if *v != ZERO {
                    dst[red[c]] += v * a[digit[c] * d + i];
                }
            }
        }
        if dims.is_empty() {
            dims.push(1);
        }
        (dims, out)
    }

    pub fn partial_trace(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if self.modes() == 1 {
            return Err(Error::InvalidParameter("cannot trace out the only mode".into()));
        }
        let d = self.dims[mode];
        let mut id = vec![ZERO; d * d];
        for k in 0..d {
            id[k * d + k] = ONE;
        }
        let (dims, data) = self.contract(mode, &id);
        Ok(Self { dims, data, truncation_deficit: self.truncation_deficit })
    }

    /// Single-mode reduced state of `mode`.
    pub fn reduced(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        for m in (0..self.modes()).rev() {
            if m != mode {
                out = out.partial_trace(m)?;
            }
        }
        Ok(out)
    }

    /// `ρ → f(r) ρ_{rc} f(c)*` for a diagonal operator `f` on multi-indices.
    fn apply_diagonal(&self, f: impl Fn(&[usize]) -> C64) -> Self {
        let dim = self.dim();
        let st = strides(&self.dims);
        let mut digits = vec![0; self.modes()];
        let phases: Vec<C64> = (0..dim)
            .map(|r| {
                for (k, dg) in digits.iter_mut().enumerate() {
                    *dg = (r / st[k]) % self.dims[k];
                }
                f(&digits)
            })
            .collect();
        let mut data = self.data.clone();
        for r in 0..dim {
            let pr = phases[r];
            for (c, v) in data[r * dim..(r + 1) * dim].iter_mut().enumerate() {
                *v *= pr * phases[c].conj();
            }
        }
        Self { dims: self.dims.clone(), data, truncation_deficit: self.truncation_deficit }
    }

    /// `U ρ U†` for `U` acting on `modes` (in the order given).
    fn sandwich(&self, modes: &[usize], rows: &LocalRows) -> Self {
        let dim = self.dim();
        let st = strides(&self.dims);
        let sub_dims: Vec<usize> = modes.iter().map(|&m| self.dims[m]).collect();
        let sub_st = strides(&sub_dims);
        let sub_dim: usize = sub_dims.iter().product();
        let offset: Vec<usize> = (0..sub_dim)
            .map(|s| modes.iter().enumerate().map(|(k, &m)| ((s / sub_st[k]) % sub_dims[k]) * st[m]).sum())
            .collect();
        let mut sub = vec![0; dim];
        let mut base = vec![0; dim];
        for r in 0..dim {
            let mut s = 0;
            let mut b = r;
            for (k, &m) in modes.iter().enumerate() {
                let dg = (r / st[m]) % self.dims[m];
                s += dg * sub_st[k];
                b -= dg * st[m];
            }
            sub[r] = s;
            base[r] = b;
        }
        // A = U ρ, one output row at a time from whole source rows.
        let live: Vec<bool> = self.data.chunks(dim).map(|row| row.iter().any(|v| *v != ZERO)).collect();
        let mut a = vec![ZERO; dim * dim];
        for r in 0..dim {
            let dst_range = r * dim..(r + 1) * dim;
            for &(s2, u) in &rows[sub[r]] {
                let from = base[r] + offset[s2];
                if !live[from] {
                    continue;
                }
                let src_row = &self.data[from * dim..(from + 1) * dim];
                for (d, v) in a[dst_range.clone()].iter_mut().zip(src_row) {
                    *d += u * v;
                }
            }
        }
        // ρ' = A U†: each output element gathers from one row of A.
        let mut live_col = vec![false; dim];
        let mut live_row = vec![false; dim];
        for (r, row) in a.chunks(dim).enumerate() {
            for (c, v) in row.iter().enumerate() {
                if *v != ZERO {
                    live_col[c] = true;
                    live_row[r] = true;
                }
            }
        }
        let gathers: Vec<Vec<(usize, C64)>> = (0..dim)
            .map(|c| {
                rows[sub[c]]
                    .iter()
                    .filter_map(|&(s2, u)| {
                        let x = base[c] + offset[s2];
                        live_col[x].then_some((x, u.conj()))
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![ZERO; dim * dim];
        for r in (0..dim).filter(|&r| live_row[r]) {
            let arow = &a[r * dim..(r + 1) * dim];
            for (c, g) in gathers.iter().enumerate() {
                out[r * dim + c] = g.iter().map(|&(x, u)| arow[x] * u).sum();
            }
        }
        Self { dims: self.dims.clone(), data: out, truncation_deficit: self.truncation_deficit }
    }
}

/// Mean photon number of the undisplaced thermal state with variance `V`.
fn mean_thermal(variance: f64) -> f64 {
    (variance - 1.0) / 2.0
}

fn check_variance(variance: f64) -> Result<()> {
    if !(variance >= 1.0) || !variance.is_finite() {
        return Err(Error::InvalidVariance(variance));
    }
    Ok(())
}

/// Number of thermal levels needed for the geometric tail to fall below 1e-18.
fn thermal_levels(nbar: f64, at_least: usize) -> usize {
    if nbar == 0.0 {
        return at_least;
    }
    let ratio = nbar / (nbar + 1.0);
    let k = ((1e-18f64).ln() / ratio.ln()).ceil() as usize;
    k.max(at_least)
}

/// `D(d) ρ_th D(d)†` on `cutoff + 1` levels, before renormalization.
fn thermal_block(variance: f64, d: C64, cutoff: usize) -> Vec<C64> {
    let nbar = mean_thermal(variance);
    let levels = thermal_levels(nbar, cutoff + 1);
    let n = cutoff + 1;
    let dm = displacement_matrix(d, n, levels);
    let p: Vec<f64> = if nbar == 0.0 {
        (0..levels).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect()
    } else {
        let ratio = nbar / (nbar + 1.0);
        (0..levels).map(|k| ratio.powi(k as i32) / (nbar + 1.0)).collect()
    };
    let mut out = vec![ZERO; n * n];
    for r in 0..n {
        for c in r..n {
            let mut acc = ZERO;
            for k in 0..levels {
                acc += dm[r * levels + k] * dm[c * levels + k].conj() * p[k];
            }
            out[r * n + c] = acc;
            out[c * n + r] = acc.conj();
        }
    }
    out
}

/// Smallest `n_max` whose displaced-thermal population beyond it is below 1e-10.
pub fn smallest_certified_cutoff(variance: f64, d: C64) -> Result<usize> {
    check_variance(variance)?;
    let mut guess = heuristic_cutoff(variance, d);
    loop {
        if guess > MAX_RULE_CUTOFF {
            return Err(Error::CutoffInsufficient { cutoff: MAX_RULE_CUTOFF, deficit: f64::NAN });
        }
        let block = thermal_block(variance, d, guess);
        let n = guess + 1;
        let mut kept = 0.0;
        for k in 0..n {
            kept += block[k * n + k].re;
            if 1.0 - kept < DEFICIT_TOLERANCE {
                return Ok(k);
            }
        }
        guess = guess * 3 / 2 + 10;
    }
}

/// `n̄ + |d|² + 10√(n̄ + |d|²) + 20`.
pub fn heuristic_cutoff(variance: f64, d: C64) -> usize {
    let s = mean_thermal(variance) + d.norm_sqr();
    (s + 10.0 * s.sqrt() + 20.0).ceil() as usize
}

/// Default cutoff: the heuristic, raised until the tail beyond it is
/// certified below 1e-10.
///
/// The heuristic also keeps `|β| ≲ 4` inside the basis support, which the
/// Wigner reconstruction needs: truncation errors there scale with
/// amplitudes, not populations.
pub fn cutoff_rule(variance: f64, d: C64) -> Result<usize> {
    Ok(smallest_certified_cutoff(variance, d)?.max(heuristic_cutoff(variance, d)))
}

/// Cutoff used by the oracle: the rule, capped at [`MAX_FIELD_CUTOFF`] when
/// the construction carries more than one field mode.
pub fn oracle_cutoff(variance: f64, d: C64, field_modes: usize) -> Result<usize> {
    let rule = cutoff_rule(variance, d)?;
    Ok(if field_modes > 1 { rule.min(MAX_FIELD_CUTOFF) } else { rule })
}

/// `ρ^th(V, d)` in the number basis.
///
/// With `cutoff = None` the smallest certified cutoff is chosen; an explicit
/// cutoff that leaves a deficit of 1e-10 or more is an error.
pub fn thermal_fock(variance: f64, d: C64, cutoff: Option<usize>) -> Result<FockDensityMatrix> {
    let n = match cutoff {
        Some(n) => n,
        None => cutoff_rule(variance, d)?,
    };
    let out = thermal_fock_truncated(variance, d, n)?;
    if !out.is_certified() {
        return Err(Error::CutoffInsufficient { cutoff: n, deficit: out.truncation_deficit });
    }
    Ok(out)
}

/// `ρ^th(V, d)` at a fixed cutoff, renormalized, deficit reported but not enforced.
pub fn thermal_fock_truncated(variance: f64, d: C64, cutoff: usize) -> Result<FockDensityMatrix> {
    check_variance(variance)?;
    let data = thermal_block(variance, d, cutoff);
    FockDensityMatrix { dims: vec![cutoff + 1], data, truncation_deficit: 0.0 }.renormalize()
}

/// Displaced-parity Wigner value with a flag for points outside the cutoff support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockWignerValue {
    pub value: f64,
    pub support_warning: bool,
}

fn check_point(rho: &FockDensityMatrix, beta: &[C64]) -> Result<()> {
    if beta.len() != rho.modes() {
        return Err(Error::DimensionMismatch { expected: rho.modes(), got: beta.len() });
    }
    Ok(())
}

/// `W(β) = (2/π)^n Tr[ρ ⊗ₘ D(2βₘ)Π]`.
pub fn fock_wigner(rho: &FockDensityMatrix, beta: &[C64]) -> Result<f64> {
    Ok(fock_wigner_checked(rho, beta)?.value)
}

/// [`fock_wigner`] with a warning when `|βₘ|² > n_max + ½` on a mode, where
/// the truncated basis no longer covers phase space.
pub fn fock_wigner_checked(rho: &FockDensityMatrix, beta: &[C64]) -> Result<FockWignerValue> {
    check_point(rho, beta)?;
    let support_warning = beta.iter().zip(&rho.dims).any(|(b, &d)| b.norm_sqr() > d as f64 - 0.5);
    let mut dims = rho.dims.clone();
    let mut data = rho.data.clone();
    for m in (0..beta.len()).rev() {
        let cur = FockDensityMatrix { dims, data, truncation_deficit: 0.0 };
        let a = displaced_parity(beta[m], cur.dims[m]);
        (dims, data) = cur.contract(m, &a);
    }
    let value = data[0].re * FRAC_2_PI.powi(beta.len() as i32);
    Ok(FockWignerValue { value, support_warning })
}

/// Wigner values over `points` on `free_mode` with every other mode fixed
/// at `fixed[m]` (the entry for `free_mode` is ignored).
pub fn fock_wigner_slice(rho: &FockDensityMatrix, free_mode: usize, fixed: &[C64], points: &[C64]) -> Result<Vec<f64>> {
    check_point(rho, fixed)?;
    rho.check_mode(free_mode)?;
    let mut dims = rho.dims.clone();
    let mut data = rho.data.clone();
    let mut free = free_mode;
    for m in (0..fixed.len()).rev() {
        if m == free_mode {
            continue;
        }
        let cur = FockDensityMatrix { dims, data, truncation_deficit: 0.0 };
        let a = displaced_parity(fixed[m], cur.dims[m]);
        (dims, data) = cur.contract(m, &a);
        if m < free_mode {
            free -= 1;
        }
    }
    debug_assert_eq!(free, 0);
    let d = dims[0];
    let scale = FRAC_2_PI.powi(fixed.len() as i32);
    Ok(points
        .iter()
        .map(|&b| {
            let a = displaced_parity(b, d);
            let mut acc = ZERO;
            for r in 0..d {
                for c in 0..d {
                    acc += data[r * d + c] * a[c * d + r];
                }
            }
            acc.re * scale
        })
        .collect())
}

pub fn fock_phase_shift(rho: &FockDensityMatrix, mode: usize, phi: f64) -> Result<FockDensityMatrix> {
    rho.check_mode(mode)?;
    Ok(rho.apply_diagonal(|n| unit_phase(n[mode] as f64 * phi)))
}

/// `exp(iφ n_a n_b)`.
pub fn fock_cross_kerr(rho: &FockDensityMatrix, mode_a: usize, mode_b: usize, phi: f64) -> Result<FockDensityMatrix> {
    rho.check_mode(mode_a)?;
    rho.check_mode(mode_b)?;
    Ok(rho.apply_diagonal(|n| unit_phase((n[mode_a] * n[mode_b]) as f64 * phi)))
}

/// Append a control qubit `c₀|0⟩ + c₁|1⟩` as the last mode and couple it by
/// cross-Kerr to each of `modes`.
pub fn fock_controlled_kerr(
    rho_field: &FockDensityMatrix,
    amplitudes: [C64; 2],
    modes: &[usize],
    phi: f64,
) -> Result<FockDensityMatrix> {
    for &m in modes {
        rho_field.check_mode(m)?;
    }
    let mut out = rho_field.kron(&FockDensityMatrix::qubit(amplitudes)?);
    let q = out.modes() - 1;
    for &m in modes {
        out = fock_cross_kerr(&out, m, q, phi)?;
    }
    Ok(out)
}

/// Cross-Kerr coupling of `modes` to a control qubit prepared in
/// `amplitudes`, followed by projecting the qubit on `(|0⟩ ± |1⟩)/√2`.
///
/// Applies the field Kraus operator `⟨±|U|c⟩ = Σ_q (±1)^q c_q e^{iqφn}/√2`
/// directly, so the qubit never enters the matrix.
pub fn fock_kerr_conditional(
    rho_field: &FockDensityMatrix,
    amplitudes: [C64; 2],
    modes: &[usize],
    phi: f64,
    sign: Sign,
) -> Result<Conditional<FockDensityMatrix>> {
    for &m in modes {
        rho_field.check_mode(m)?;
    }
    let v = sign_vector(sign);
    let kraus = rho_field.apply_diagonal(|n| {
        let total: usize = modes.iter().map(|&m| n[m]).sum();
        v[0].conj() * amplitudes[0] + v[1].conj() * amplitudes[1] * unit_phase(total as f64 * phi)
    });
    let p = kraus.trace().re;
    if !(p > 1e-300) || p < 1e-13 * rho_field.trace().re.abs() {
        return Ok(Conditional::Impossible { probability: p });
    }
    let data = kraus.data.iter().map(|x| x / p).collect();
    Ok(Conditional::Possible {
        state: FockDensityMatrix { dims: kraus.dims, data, truncation_deficit: kraus.truncation_deficit },
        probability: p,
    })
}

/// Beam splitter with `U a_i† U† = c a_i† − e^{-iφ} s a_j†`,
/// `U a_j† U† = e^{iφ} s a_i† + c a_j†`, `c = cos(θ/2)`, `s = sin(θ/2)`.
///
/// Output levels beyond the cutoffs are dropped; the lost weight is added to
/// the deficit.
pub fn fock_beam_splitter(rho: &FockDensityMatrix, i: usize, j: usize, theta: f64, phi: f64) -> Result<FockDensityMatrix> {
    rho.check_mode(i)?;
    rho.check_mode(j)?;
    if i == j {
        return Err(Error::InvalidParameter("beam splitter needs two distinct modes".into()));
    }
    let (di, dj) = (rho.dims[i], rho.dims[j]);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = unit_phase(phi);
    // Column |m,n⟩ out, indexed by photons k in mode i within block t = m + n.
    let bi = |v: &[C64]| -> Vec<C64> {
        let t = v.len() - 1;
        let mut out = vec![ZERO; t + 2];
        for (k, &a) in v.iter().enumerate() {
            out[k + 1] += c * ((k + 1) as f64).sqrt() * a;
            out[k] -= e.conj() * s * ((t - k + 1) as f64).sqrt() * a;
        }
        out
    };
    let bj = |v: &[C64]| -> Vec<C64> {
        let t = v.len() - 1;
        let mut out = vec![ZERO; t + 2];
        for (k, &a) in v.iter().enumerate() {
            out[k + 1] += e * s * ((k + 1) as f64).sqrt() * a;
            out[k] += c * ((t - k + 1) as f64).sqrt() * a;
        }
        out
    };
    let sub = di * dj;
    let mut columns: Vec<Vec<C64>> = vec![Vec::new(); sub];
    let mut v0 = vec![ONE];
    for n in 0..dj {
        if n > 0 {
            v0 = bj(&v0).into_iter().map(|x| x / (n as f64).sqrt()).collect();
        }
        let mut v = v0.clone();
        for m in 0..di {
            if m > 0 {
                v = bi(&v).into_iter().map(|x| x / (m as f64).sqrt()).collect();
            }
            columns[m * dj + n] = v.clone();
        }
    }
    let mut rows: LocalRows = vec![Vec::new(); sub];
    for (col, v) in columns.iter().enumerate() {
        let t = v.len() - 1;
        for (k, &a) in v.iter().enumerate() {
            if k < di && t - k < dj && a != ZERO {
                rows[k * dj + (t - k)].push((col, a));
            }
        }
    }
    let before = rho.trace().re;
    let mut out = rho.sandwich(&[i, j], &rows);
    let after = out.trace().re;
    out.truncation_deficit = 1.0 - (1.0 - rho.truncation_deficit) * (after / before).min(1.0);
    Ok(out)
}

/// `D(γ) ρ D(γ)†` on `mode` using exact truncated matrix elements.
pub fn fock_displace(rho: &FockDensityMatrix, mode: usize, gamma: C64) -> Result<FockDensityMatrix> {
    rho.check_mode(mode)?;
    let d = rho.dims[mode];
    let u = displacement_matrix(gamma, d, d);
    let before = rho.trace().re;
    let mut out = rho.sandwich(&[mode], &dense_rows(&u, d));
    let after = out.trace().re;
    out.truncation_deficit = 1.0 - (1.0 - rho.truncation_deficit) * (after / before).min(1.0);
    Ok(out)
}

/// `L ρ L†` for an arbitrary single-mode operator `L` (row-major).
pub fn fock_apply_operator(rho: &FockDensityMatrix, mode: usize, op: &[C64]) -> Result<FockDensityMatrix> {
    rho.check_mode(mode)?;
    let d = rho.dims[mode];
    if op.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: op.len() });
    }
    Ok(rho.sandwich(&[mode], &dense_rows(op, d)))
}

/// Project `mode` onto the normalized vector `vector`, removing it.
pub fn fock_project(rho: &FockDensityMatrix, mode: usize, vector: &[C64]) -> Result<Conditional<FockDensityMatrix>> {
    rho.check_mode(mode)?;
    let d = rho.dims[mode];
    if vector.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: vector.len() });
    }
    let norm: f64 = vector.iter().map(|v| v.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("projection vector has norm² {norm}")));
    }
    if rho.modes() == 1 {
        return Err(Error::InvalidParameter("cannot project out the only mode".into()));
    }
    let mut a = vec![ZERO; d * d];
    for jj in 0..d {
        for ii in 0..d {
            a[jj * d + ii] = vector[jj] * vector[ii].conj();
        }
    }
    let (dims, data) = rho.contract(mode, &a);
    let out = FockDensityMatrix { dims, data, truncation_deficit: rho.truncation_deficit };
    let p = out.trace().re;
    if !(p > 1e-300) || p < 1e-13 * rho.trace().re.abs() {
        return Ok(Conditional::Impossible { probability: p });
    }
    let data = out.data.iter().map(|v| v / p).collect();
    Ok(Conditional::Possible {
        state: FockDensityMatrix { dims: out.dims, data, truncation_deficit: out.truncation_deficit },
        probability: p,
    })
}

/// `(|0⟩ ± |1⟩)/√2`.
pub fn sign_vector(sign: Sign) -> [C64; 2] {
    [C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2 * sign.value())]
}

/// `⟨(−1)^{Σ nₘ}⟩` over the listed modes.
pub fn fock_parity(rho: &FockDensityMatrix, modes: &[usize]) -> Result<f64> {
    for &m in modes {
        rho.check_mode(m)?;
    }
    let dim = rho.dim();
    let st = strides(&rho.dims);
    let mut acc = 0.0;
    for r in 0..dim {
        let n: usize = modes.iter().map(|&m| (r / st[m]) % rho.dims[m]).sum();
        let v = rho.data[r * dim + r].re;
        acc += if n % 2 == 0 { v } else { -v };
    }
    Ok(acc / rho.trace().re)
}

/// `⟨n̂ₘ⟩`.
pub fn fock_mean_photon(rho: &FockDensityMatrix, mode: usize) -> Result<f64> {
    rho.check_mode(mode)?;
    let digit = rho.digits(mode);
    let dim = rho.dim();
    Ok((0..dim).map(|r| digit[r] as f64 * rho.data[r * dim + r].re).sum::<f64>() / rho.trace().re)
}

/// Photon-number populations of `mode`.
pub fn fock_populations(rho: &FockDensityMatrix, mode: usize) -> Result<Vec<f64>> {
    let red = rho.reduced(mode)?;
    let d = red.dim();
    Ok((0..d).map(|k| red.data[k * d + k].re).collect())
}

/// Quadrature density of `mode` at angle `θ`, from the Hermite-function
/// eigenbasis: `⟨x_θ|n⟩ = e^{-inθ} ψ_n(x)`.
pub fn fock_homodyne_distribution(
    rho: &FockDensityMatrix,
    mode: usize,
    theta: f64,
    xs: &[f64],
    convention: QuadratureConvention,
) -> Result<Vec<f64>> {
    let red = rho.reduced(mode)?;
    let d = red.dim();
    let s = convention.scale();
    let t = red.trace().re;
    Ok(xs
        .iter()
        .map(|&x| {
            let psi = hermite_functions(s * x, d);
            let mut acc = ZERO;
            for m in 0..d {
                for n in 0..d {
                    let phase = unit_phase(-(m as f64 - n as f64) * theta);
                    acc += red.data[m * d + n] * phase * (psi[m] * psi[n]);
                }
            }
            s * acc.re / t
        })
        .collect())
}

fn balanced() -> [C64; 2] {
    [C64::from(FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)]
}

fn resolve_cutoff(variance: f64, d: C64, field_modes: usize, cutoff: Option<usize>) -> Result<usize> {
    match cutoff {
        Some(n) => Ok(n),
        None => oracle_cutoff(variance, d, field_modes),
    }
}

/// Field ⊗ balanced control qubit (last mode) after the cross-Kerr coupling.
pub fn fock_micro_macro(variance: f64, d: C64, phi: f64, cutoff: Option<usize>) -> Result<FockDensityMatrix> {
    let n = resolve_cutoff(variance, d, 1, cutoff)?;
    let field = thermal_fock_truncated(variance, d, n)?;
    fock_controlled_kerr(&field, balanced(), &[0], phi)
}

/// Number-basis counterpart of the thermal superposition `ρ^±`.
pub fn fock_thermal_superposition(
    variance: f64,
    d: C64,
    phi: f64,
    sign: Sign,
    cutoff: Option<usize>,
) -> Result<Conditional<FockDensityMatrix>> {
    let hybrid = fock_micro_macro(variance, d, phi, cutoff)?;
    fock_project(&hybrid, 1, &sign_vector(sign))
}

/// Two displaced thermal modes coupled to one control qubit, then measured.
pub fn fock_two_mode_kerr_entangled(
    variance: f64,
    d: C64,
    phi: f64,
    sign: Sign,
    cutoff: Option<usize>,
) -> Result<Conditional<FockDensityMatrix>> {
    let n = resolve_cutoff(variance, d, 2, cutoff)?;
    let th = thermal_fock_truncated(variance, d, n)?;
    fock_kerr_conditional(&th.kron(&th), balanced(), &[0, 1], phi, sign)
}

/// Thermal-Bell states: `Φ±` from the two-mode construction at `φ = π`,
/// `Ψ±` by a further π phase on the second mode.
pub fn fock_thermal_bell(label: BellLabel, variance: f64, d: C64, cutoff: Option<usize>) -> Result<FockDensityMatrix> {
    let phi = fock_two_mode_kerr_entangled(variance, d, PI, label.sign(), cutoff)?.into_state()?;
    if label.is_phi() {
        Ok(phi)
    } else {
        fock_phase_shift(&phi, 1, PI)
    }
}

/// `ρ^±` with Kerr angle `φ` split with vacuum on a 50:50 beam splitter.
pub fn fock_bs_entangled_kerr(
    variance: f64,
    d: C64,
    phi: f64,
    sign: Sign,
    cutoff: Option<usize>,
) -> Result<FockDensityMatrix> {
    let n = resolve_cutoff(variance, d, 2, cutoff)?;
    let sup = fock_thermal_superposition(variance, d, phi, sign, Some(n))?.into_state()?;
    let input = sup.kron(&FockDensityMatrix::vacuum(n));
    fock_beam_splitter(&input, 0, 1, PI / 2.0, 0.0)
}

/// `(a + bΠ) ρ^th (a + bΠ)†`, normalized.
pub fn fock_thermal_qubit(a: C64, b: C64, variance: f64, d: C64, cutoff: Option<usize>) -> Result<FockDensityMatrix> {
    let n = resolve_cutoff(variance, d, 1, cutoff)?;
    let th = thermal_fock_truncated(variance, d, n)?;
    let dim = n + 1;
    let mut op = vec![ZERO; dim * dim];
    for k in 0..dim {
        op[k * dim + k] = a + if k % 2 == 0 { b } else { -b };
    }
    fock_apply_operator(&th, 0, &op)?.renormalize_keeping_deficit()
}

impl FockDensityMatrix {
    /// Divide by the trace without treating the change as truncation loss.
    pub fn renormalize_keeping_deficit(&self) -> Result<Self> {
        let t = self.trace().re;
        if !(t > 0.0) {
            return Err(Error::ZeroTrace(t));
        }
        Ok(Self { dims: self.dims.clone(), data: self.data.iter().map(|v| v / t).collect(), truncation_deficit: self.truncation_deficit })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Padded Taylor-series exponential of the truncated generator.
    fn displacement_by_expm(gamma: C64, dim: usize, pad: usize) -> Vec<C64> {
        let n = dim + pad;
        let mut g = DMatrix::<C64>::zeros(n, n);
        for k in 1..n {
            let s = (k as f64).sqrt();
            g[(k, k - 1)] = gamma * s;
            g[(k - 1, k)] = -gamma.conj() * s;
        }
        let e = g.exp();
        let mut out = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                out[r * dim + c] = e[(r, c)];
            }
        }
        out
    }

    #[test]
    fn closed_form_displacement_matches_padded_generator() {
        for gamma in [c(0.3, 0.0), c(1.0, -0.5), c(-1.2, 0.7)] {
            let exact = displacement_matrix(gamma, 20, 20);
            let expm = displacement_by_expm(gamma, 20, 40);
            let worst = exact.iter().zip(&expm).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "{gamma}: {worst:e}");
        }
    }

    #[test]
    fn displacement_column_is_coherent_state() {
        let alpha = c(0.8, 0.3);
        let col = displacement_matrix(alpha, 30, 1);
        let mut lf = 0.0;
        for (n, v) in col.iter().enumerate() {
            if n > 0 {
                lf += (n as f64).ln();
            }
            let expect = (-0.5 * alpha.norm_sqr() - 0.5 * lf).exp() * alpha.powu(n as u32);
            assert!((v - expect).norm() < 1e-14);
        }
        let u = displacement_matrix(c(1.5, -2.0), 80, 80);
        // Columns deep inside the truncation are unit vectors.
        let norm: f64 = (0..80).map(|r| u[r * 80 + 3].norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_populations_and_moments() {
        let vac = thermal_fock(1.0, ZERO, None).unwrap();
        assert!((vac.element(0, 0) - ONE).norm() < 1e-15);
        let th = thermal_fock(3.0, ZERO, None).unwrap();
        for n in 0..10 {
            assert!((th.element(n, n).re - 0.5f64.powi(n as i32 + 1)).abs() < 1e-10);
        }
        let disp = thermal_fock(3.0, ONE, None).unwrap();
        assert!(disp.is_certified());
        assert!((fock_mean_photon(&disp, 0).unwrap() - 2.0).abs() < 1e-8);
        assert!((disp.purity() - 1.0 / 3.0).abs() < 1e-9);
        assert!(disp.min_eigenvalue() > -1e-10);
        assert!(matches!(thermal_fock(3.0, ONE, Some(10)), Err(Error::CutoffInsufficient { .. })));
    }

    #[test]
    fn cutoff_rule_is_certified() {
        for (v, d) in [(3.0, 1.0), (5.0, 2.0), (2.0, 0.5)] {
            let rule = cutoff_rule(v, C64::from(d)).unwrap();
            assert!(rule >= heuristic_cutoff(v, C64::from(d)));
            let n = smallest_certified_cutoff(v, C64::from(d)).unwrap();
            assert!(thermal_fock(v, C64::from(d), Some(n)).is_ok());
            assert!(thermal_fock(v, C64::from(d), Some(n - 1)).is_err());
        }
    }

    #[test]
    fn wigner_reference_values() {
        let w0 = fock_wigner(&FockDensityMatrix::vacuum(10), &[ZERO]).unwrap();
        assert!((w0 - FRAC_2_PI).abs() < 1e-15);
        let w1 = fock_wigner(&FockDensityMatrix::number_state(1, 10).unwrap(), &[ZERO]).unwrap();
        assert!((w1 + FRAC_2_PI).abs() < 1e-15);
        let th = thermal_fock(3.0, ZERO, None).unwrap();
        assert!((fock_wigner(&th, &[ZERO]).unwrap() - 2.0 / (3.0 * PI)).abs() < 1e-10);
        let disp = thermal_fock(3.0, c(1.0, 0.5), None).unwrap();
        for b in [c(0.2, -0.4), c(1.5, 1.0), c(-1.0, 0.0)] {
            let expect = 2.0 / (3.0 * PI) * (-2.0 * (b - c(1.0, 0.5)).norm_sqr() / 3.0).exp();
            assert!((fock_wigner(&disp, &[b]).unwrap() - expect).abs() < 1e-10);
        }
        let far = fock_wigner_checked(&FockDensityMatrix::vacuum(4), &[c(3.0, 0.0)]).unwrap();
        assert!(far.support_warning);
    }

    #[test]
    fn slices_agree_with_pointwise_wigner() {
        let rho = fock_two_mode_kerr_entangled(2.0, c(0.7, 0.0), PI / 2.0, Sign::Plus, None).unwrap().into_state().unwrap();
        let pts = [c(0.1, 0.2), c(-0.6, 0.4)];
        let fixed = [ZERO, c(0.3, -0.2)];
        let slice = fock_wigner_slice(&rho, 0, &fixed, &pts).unwrap();
        for (p, s) in pts.iter().zip(&slice) {
            assert!((fock_wigner(&rho, &[*p, fixed[1]]).unwrap() - s).abs() < 1e-13);
        }
        let slice = fock_wigner_slice(&rho, 1, &[c(0.4, 0.0), ZERO], &pts).unwrap();
        assert!((fock_wigner(&rho, &[c(0.4, 0.0), pts[1]]).unwrap() - slice[1]).abs() < 1e-13);
    }

    #[test]
    fn cross_kerr_flips_coherent_amplitude() {
        let alpha = FockDensityMatrix::coherent(ONE, 40);
        let ctrl = FockDensityMatrix::number_state(1, 1).unwrap();
        let out = fock_cross_kerr(&alpha.kron(&ctrl), 0, 1, PI).unwrap();
        let field = out.partial_trace(1).unwrap();
        let target = FockDensityMatrix::coherent(-ONE, 40);
        assert!(field.overlap(&target).unwrap().re > 1.0 - 1e-10);
        let same = fock_cross_kerr(&alpha.kron(&ctrl), 0, 1, 0.0).unwrap();
        assert_eq!(same, alpha.kron(&ctrl));
    }

    #[test]
    fn kraus_route_matches_explicit_qubit() {
        let th = thermal_fock_truncated(2.0, c(0.6, 0.1), 12).unwrap();
        let field = th.kron(&th);
        let amps = [c(0.6, 0.0), c(0.0, 0.8)];
        for sign in [Sign::Plus, Sign::Minus] {
            let dense = fock_project(&fock_controlled_kerr(&field, amps, &[0, 1], 0.9).unwrap(), 2, &sign_vector(sign)).unwrap();
            let kraus = fock_kerr_conditional(&field, amps, &[0, 1], 0.9, sign).unwrap();
            assert!((dense.probability() - kraus.probability()).abs() < 1e-14);
            let (a, b) = (dense.state().unwrap(), kraus.state().unwrap());
            let worst = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(worst < 1e-14);
        }
    }

    #[test]
    fn beam_splitter_on_coherent_and_vacuum() {
        let a = c(1.2, -0.4);
        let input = FockDensityMatrix::coherent(a, 30).kron(&FockDensityMatrix::vacuum(30));
        let out = fock_beam_splitter(&input, 0, 1, PI / 2.0, 0.0).unwrap();
        let expect = FockDensityMatrix::coherent(a * FRAC_1_SQRT_2, 30).kron(&FockDensityMatrix::coherent(-a * FRAC_1_SQRT_2, 30));
        assert!(out.overlap(&expect).unwrap().re > 1.0 - 1e-10);
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        assert!(out.hermiticity_residue() < 1e-12);
    }

    #[test]
    fn beam_splitter_is_unitary_on_complete_blocks() {
        let mut psi = vec![ZERO; 13 * 13];
        psi[13 + 2] = ONE;
        psi[2 * 13 + 1] = c(0.0, 1.0);
        psi[3 * 13 + 3] = c(-0.5, 0.5);
        let rho = FockDensityMatrix::pure(vec![13, 13], &psi).unwrap();
        let out = fock_beam_splitter(&rho, 1, 0, 1.1, 0.7).unwrap();
        let back = fock_beam_splitter(&out, 1, 0, -1.1, 0.7).unwrap();
        assert!(out.min_eigenvalue() > -1e-10);
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        let worst = rho.data.iter().zip(&back.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst:e}");
    }

    #[test]
    fn projection_and_parity() {
        let sup = fock_thermal_superposition(1.0, c(1.0, 0.0), PI, Sign::Minus, None).unwrap();
        let rho = sup.state().unwrap();
        assert!((fock_parity(rho, &[0]).unwrap() + 1.0).abs() < 1e-12);
        let p = sup.probability();
        assert!((p - 0.5 * (1.0 - (-2.0f64).exp())).abs() < 1e-10);
        let zero = FockDensityMatrix::number_state(0, 1).unwrap().kron(&FockDensityMatrix::number_state(1, 1).unwrap());
        let out = fock_project(&zero, 0, &[ZERO, ONE]).unwrap();
        assert!(matches!(out, Conditional::Impossible { .. }));
        for label in BellLabel::ALL {
            let bell = fock_thermal_bell(label, 3.0, ONE, None).unwrap();
            let parity = fock_parity(&bell, &[0, 1]).unwrap();
            let expect = if label.sign() == Sign::Plus { 1.0 } else { -1.0 };
            assert!((parity - expect).abs() < 1e-8, "{label}: {parity}");
        }
    }

    #[test]
    fn homodyne_of_coherent_state() {
        let rho = FockDensityMatrix::coherent(c(1.0, 0.5), 40);
        let xs = [-1.0, 0.0, 0.7, 2.0];
        let theta = 0.3;
        let got = fock_homodyne_distribution(&rho, 0, theta, &xs, QuadratureConvention::Quadrature).unwrap();
        let mean = std::f64::consts::SQRT_2 * (c(1.0, 0.5) * unit_phase(-theta)).re;
        for (x, g) in xs.iter().zip(&got) {
            let expect = (-(x - mean).powi(2)).exp() / PI.sqrt();
            assert!((g - expect).abs() < 1e-12);
        }
        let fig = fock_homodyne_distribution(&rho, 0, theta, &[mean / 2f64.sqrt()], QuadratureConvention::Amplitude).unwrap();
        assert!((fig[0] - (2.0 / PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn thermal_qubit_parity_components() {
        let even = fock_thermal_qubit(ONE, ONE, 1.0, c(1.0, 0.0), None).unwrap();
        assert!((fock_parity(&even, &[0]).unwrap() - 1.0).abs() < 1e-12);
        let plain = fock_thermal_qubit(ONE, ZERO, 3.0, c(1.0, 0.0), None).unwrap();
        assert!((plain.overlap(&thermal_fock(3.0, ONE, None).unwrap()).unwrap().re - 1.0 / 3.0).abs() < 1e-9);
    }
}
