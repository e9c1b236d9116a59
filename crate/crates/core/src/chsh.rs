//! Bell-CHSH functional with displaced-parity settings, evaluated on
//! two-mode Wigner functions, and its multi-start maximization.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factory::{bs_entangled_kerr, two_mode_kerr_entangled, Sign};
use crate::kernel::{CompiledWigner, PhaseSpaceState};
use crate::optimize::{nelder_mead, NelderMeadConfig};

/// `2√2`.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

/// Displaced-parity settings: `α, α′` on mode 1 and `β, β′` on mode 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub alpha: C64,
    pub alpha_prime: C64,
    pub beta: C64,
    pub beta_prime: C64,
}

impl ChshSettings {
    pub fn new(alpha: C64, alpha_prime: C64, beta: C64, beta_prime: C64) -> Self {
        Self { alpha, alpha_prime, beta, beta_prime }
    }

    pub fn zero() -> Self {
        let z = C64::new(0.0, 0.0);
        Self::new(z, z, z, z)
    }

    pub fn to_vec(&self) -> Vec<f64> {
        [self.alpha, self.alpha_prime, self.beta, self.beta_prime].iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self::new(C64::new(x[0], x[1]), C64::new(x[2], x[3]), C64::new(x[4], x[5]), C64::new(x[6], x[7]))
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    /// Every coordinate clamped to `[-r, r]`.
    fn clamped(x: &[f64], r: f64) -> Vec<f64> {
        x.iter().map(|v| v.clamp(-r, r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    /// `|B|` at `argmax`.
    pub value: f64,
    pub signed: f64,
    pub argmax: ChshSettings,
    pub restarts_used: usize,
    pub converged: bool,
}

fn check_two_mode(state: &PhaseSpaceState) -> Result<()> {
    if state.modes() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: state.modes() });
    }
    Ok(())
}

/// `(π²/4)[W(α,β) + W(α,β′) + W(α′,β) − W(α′,β′)]` on a compiled Wigner function.
pub fn chsh_signed_compiled(w: &CompiledWigner, s: &ChshSettings) -> f64 {
    let at = |a: C64, b: C64| w.eval(&[a.re, a.im, b.re, b.im]);
    let sum = at(s.alpha, s.beta) + at(s.alpha, s.beta_prime) + at(s.alpha_prime, s.beta) - at(s.alpha_prime, s.beta_prime);
    0.25 * PI * PI * sum
}

/// Signed CHSH combination.
pub fn chsh_signed(state: &PhaseSpaceState, s: &ChshSettings) -> Result<f64> {
    check_two_mode(state)?;
    if !s.is_finite() {
        return Err(Error::InvalidParameter("non-finite CHSH settings".into()));
    }
    Ok(chsh_signed_compiled(&state.compile_wigner()?, s))
}

/// `|B|`.
pub fn chsh_value(state: &PhaseSpaceState, s: &ChshSettings) -> Result<f64> {
    Ok(chsh_signed(state, s)?.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Half-width of the search box on every real coordinate.
    pub radius: f64,
    /// Extra starting points, also evaluated as given.
    pub warm_starts: Vec<ChshSettings>,
    /// Random starts are drawn around these points (mode 1, mode 2).
    pub centres: [C64; 2],
    pub max_iter: usize,
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for ChshConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0,
            radius: 3.0,
            warm_starts: Vec::new(),
            centres: [C64::new(0.0, 0.0); 2],
            max_iter: 4000,
            ftol: 1e-13,
            xtol: 1e-10,
        }
    }
}

/// State families used in sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChshFamily {
    /// Two thermal modes coupled to one control qubit.
    #[serde(rename = "two_mode_thermal")]
    TwoModeThermal,
    /// A thermal superposition split on a 50:50 beam splitter.
    #[serde(rename = "bs_entangled")]
    BsEntangled,
}

impl ChshFamily {
    pub fn name(self) -> &'static str {
        match self {
            ChshFamily::TwoModeThermal => "two_mode_thermal",
            ChshFamily::BsEntangled => "bs_entangled",
        }
    }

    pub fn state(self, variance: f64, d: f64, theta: f64, sign: Sign) -> Result<PhaseSpaceState> {
        match self {
            ChshFamily::TwoModeThermal => two_mode_kerr_entangled(variance, C64::from(d), theta, sign),
            ChshFamily::BsEntangled => bs_entangled_kerr(variance, C64::from(d), theta, sign),
        }
    }

    /// Centre, fringe direction and fringe wavenumber of the interference
    /// term on each mode, for the pure-cat version of the family.
    fn fringe_geometry(self, d: f64, theta: f64) -> Option<[(C64, C64, f64); 2]> {
        let e = crate::kernel::unit_phase(theta);
        let gap = C64::from(d) * (C64::from(1.0) - e);
        if gap.norm() < 1e-12 {
            return None;
        }
        let mid = C64::from(d) * (C64::from(1.0) + e) / 2.0;
        let dir = C64::new(0.0, 1.0) * gap / gap.norm();
        Some(match self {
            ChshFamily::TwoModeThermal => [(mid, dir, 2.0 * gap.norm()); 2],
            ChshFamily::BsEntangled => {
                let (m, k) = (mid / SQRT_2, SQRT_2 * gap.norm());
                [(m, dir, k), (-m, -dir, k)]
            }
        })
    }

    /// Settings reaching `2√2` for the pure-cat version of the family, where
    /// the correlator near the fringe centre is `cos(k(x₁ + x₂) + φ₀)`; one
    /// start per sign and quarter-period offset of the unknown `φ₀`.
    pub fn cat_warm_starts(self, d: f64, theta: f64) -> Vec<ChshSettings> {
        let Some([(m1, u1, k1), (m2, u2, k2)]) = self.fringe_geometry(d, theta) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for s in [1.0, -1.0] {
            for q in 0..4 {
                let off = -(q as f64) * PI / 2.0;
                out.push(ChshSettings::new(
                    m1 + u1 * (s * off / k1),
                    m1 + u1 * (s * (PI / 2.0 + off) / k1),
                    m2 + u2 * (-s * PI / (4.0 * k2)),
                    m2 + u2 * (s * PI / (4.0 * k2)),
                ));
            }
        }
        out
    }

    /// Midpoints of the two cat components on both modes.
    pub fn fringe_centres(self, d: f64, theta: f64) -> [C64; 2] {
        let mid = C64::from(d) * (C64::from(1.0) + crate::kernel::unit_phase(theta)) / 2.0;
        match self {
            ChshFamily::TwoModeThermal => [mid; 2],
            ChshFamily::BsEntangled => [mid / SQRT_2, -mid / SQRT_2],
        }
    }
}

impl std::str::FromStr for ChshFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_mode_thermal" | "two-mode-thermal" | "tm" => Ok(ChshFamily::TwoModeThermal),
            "bs_entangled" | "bs-entangled" | "bs" => Ok(ChshFamily::BsEntangled),
            other => Err(Error::InvalidParameter(format!("unknown CHSH family '{other}'"))),
        }
    }
}

impl ChshConfig {
    /// Box `max(3, 3/√V)·(1 + d/V)`, the family's cat warm starts, and
    /// random starts around the fringe centres.
    pub fn for_family(family: ChshFamily, variance: f64, d: f64, theta: f64) -> Self {
        Self {
            radius: 3.0f64.max(3.0 / variance.sqrt()) * (1.0 + d.abs() / variance),
            warm_starts: family.cat_warm_starts(d, theta),
            centres: family.fringe_centres(d, theta),
            ..Self::default()
        }
    }

    fn nm(&self) -> NelderMeadConfig {
        NelderMeadConfig { max_iter: self.max_iter, ftol: self.ftol, xtol: self.xtol }
    }
}

/// Random start with log-uniform offsets from the centres, so both fine
/// fringe structure and box-scale features are sampled.
fn random_start(rng: &mut ChaCha8Rng, radius: f64, centres: &[C64; 2]) -> Vec<f64> {
    (0..4)
        .flat_map(|k| {
            let r = radius * 10f64.powf(-3.0 * rng.gen::<f64>());
            let t = 2.0 * PI * rng.gen::<f64>();
            let c = centres[k / 2];
            [c.re + r * t.cos(), c.im + r * t.sin()]
        })
        .collect()
}

struct Candidate {
    value: f64,
    order: usize,
    x: Vec<f64>,
    converged: bool,
}

/// Maximize `|B|` over the eight real setting coordinates.
///
/// Each restart uses its own ChaCha8 stream seeded by `seed + index`; the
/// best result is chosen by value and then by index, so the output does not
/// depend on thread scheduling.
pub fn optimize_chsh(state: &PhaseSpaceState, config: &ChshConfig) -> Result<ChshResult> {
    check_two_mode(state)?;
    let w = state.compile_wigner()?;
    optimize_compiled(&w, config)
}

fn optimize_compiled(w: &CompiledWigner, config: &ChshConfig) -> Result<ChshResult> {
    if !(config.radius > 0.0) || !config.radius.is_finite() {
        return Err(Error::InvalidParameter(format!("CHSH search radius {}", config.radius)));
    }
    let r = config.radius;
    let objective = |x: &[f64]| -chsh_signed_compiled(w, &ChshSettings::from_slice(&ChshSettings::clamped(x, r))).abs();
    let mut starts: Vec<Vec<f64>> = config.warm_starts.iter().map(|s| ChshSettings::clamped(&s.to_vec(), r)).collect();
    for k in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(k as u64));
        starts.push(ChshSettings::clamped(&random_start(&mut rng, r, &config.centres), r));
    }
    let nm = config.nm();
    let mut candidates: Vec<Candidate> = starts
        .par_iter()
        .enumerate()
        .map(|(order, x0)| {
            let c = &config.centres;
            let centre = [c[0].re, c[0].im, c[0].re, c[0].im, c[1].re, c[1].im, c[1].re, c[1].im];
            let scale = x0.iter().zip(&centre).map(|(v, m)| (v - m).abs()).fold(0.0, f64::max).max(1e-3 * r);
            let step = vec![0.25 * scale; 8];
            let m = nelder_mead(objective, x0, &step, &nm);
            // A second pass from the first optimum polishes shallow valleys.
            let step2 = vec![0.05 * scale; 8];
            let m2 = nelder_mead(objective, &m.x, &step2, &nm);
            let best = if m2.value <= m.value { m2 } else { m };
            Candidate { value: -best.value, order, x: ChshSettings::clamped(&best.x, r), converged: best.converged }
        })
        .collect();
    // User-supplied settings as given, outside the box if need be.
    for (order, s) in config.warm_starts.iter().enumerate() {
        let v = chsh_signed_compiled(w, s).abs();
        candidates.push(Candidate { value: v, order: starts.len() + order, x: s.to_vec(), converged: true });
    }
    candidates.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.order.cmp(&b.order)));
    let best = &candidates[0];
    let argmax = ChshSettings::from_slice(&best.x);
    let signed = chsh_signed_compiled(w, &argmax);
    Ok(ChshResult { value: signed.abs(), signed, argmax, restarts_used: starts.len(), converged: best.converged })
}

/// Sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Displacements at a fixed Kerr angle.
    Displacement { theta: f64, values: Vec<f64> },
    /// Kerr angles at a fixed displacement.
    Theta { d: f64, values: Vec<f64> },
    /// Variances at fixed displacement and Kerr angle.
    Variance { d: f64, theta: f64, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshRow {
    pub family: ChshFamily,
    pub variance: f64,
    pub d: f64,
    pub theta: f64,
    pub result: ChshResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshSweep {
    pub rows: Vec<ChshRow>,
    /// Number of consecutive pairs along which `B` decreases.
    pub decreases: usize,
    /// Points whose optimizer did not converge.
    pub unconverged: usize,
}

pub const CSV_HEADER: &str =
    "family,V,d,theta,B,a_re,a_im,ap_re,ap_im,b_re,b_im,bp_re,bp_im,converged";

impl ChshRow {
    pub fn csv(&self) -> String {
        let s = self.result.argmax.to_vec();
        let coords: Vec<String> = s.iter().map(|v| format!("{v:.10e}")).collect();
        format!(
            "{},{},{},{},{:.12},{},{}",
            self.family.name(),
            self.variance,
            self.d,
            self.theta,
            self.result.value,
            coords.join(","),
            self.result.converged
        )
    }
}

impl ChshSweep {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{}", r.csv())?;
        }
        Ok(())
    }

    /// `[θ_lo, θ_hi]` spanned by points with `B > 2`, with linear
    /// interpolation of the crossings; `None` without a violation.
    pub fn violation_window(&self) -> Option<(f64, f64)> {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.theta).collect();
        let bs: Vec<f64> = self.rows.iter().map(|r| r.result.value).collect();
        violation_window(&xs, &bs, 2.0)
    }
}

/// Interval of `x` over which `y > level`, interpolating the crossings.
pub fn violation_window(xs: &[f64], ys: &[f64], level: f64) -> Option<(f64, f64)> {
    let first = ys.iter().position(|&y| y > level)?;
    let last = ys.iter().rposition(|&y| y > level)?;
    let cross = |i: usize, j: usize| {
        let t = (level - ys[i]) / (ys[j] - ys[i]);
        xs[i] + t * (xs[j] - xs[i])
    };
    let lo = if first == 0 { xs[0] } else { cross(first - 1, first) };
    let hi = if last + 1 == xs.len() { xs[last] } else { cross(last, last + 1) };
    Some((lo.min(hi), lo.max(hi)))
}

/// Optimize `B` along a parameter axis, warm-starting every point from the
/// previous argmax.
pub fn chsh_sweep(
    family: ChshFamily,
    variance: f64,
    axis: &SweepAxis,
    sign: Sign,
    base: &ChshConfig,
) -> Result<ChshSweep> {
    let points: Vec<(f64, f64, f64)> = match axis {
        SweepAxis::Displacement { theta, values } => values.iter().map(|&d| (variance, d, *theta)).collect(),
        SweepAxis::Theta { d, values } => values.iter().map(|&t| (variance, *d, t)).collect(),
        SweepAxis::Variance { d, theta, values } => values.iter().map(|&v| (v, *d, *theta)).collect(),
    };
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite() && p.2.is_finite())) {
        return Err(Error::InvalidParameter("sweep grid must be finite".into()));
    }
    let mut rows: Vec<ChshRow> = Vec::with_capacity(points.len());
    let mut previous: Option<ChshSettings> = None;
    for (v, d, theta) in points {
        let state = family.state(v, d, theta, sign)?;
        let mut cfg = ChshConfig::for_family(family, v, d, theta);
        cfg.restarts = base.restarts;
        cfg.seed = base.seed;
        cfg.max_iter = base.max_iter;
        cfg.ftol = base.ftol;
        cfg.xtol = base.xtol;
        cfg.warm_starts.extend(base.warm_starts.iter().copied());
        if let Some(p) = previous {
            cfg.warm_starts.push(p);
        }
        let result = optimize_chsh(&state, &cfg)?;
        previous = Some(result.argmax);
        rows.push(ChshRow { family, variance: v, d, theta, result });
    }
    let decreases = rows.windows(2).filter(|w| w[1].result.value < w[0].result.value - 1e-9).count();
    let unconverged = rows.iter().filter(|r| !r.result.converged).count();
    Ok(ChshSweep { rows, decreases, unconverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{bs_entangled, two_mode_thermal_entangled};

    #[test]
    fn product_vacuum_gives_two() {
        let vac = PhaseSpaceState::vacuum(2);
        assert!((chsh_value(&vac, &ChshSettings::zero()).unwrap() - 2.0).abs() < 1e-12);
        assert!(chsh_value(&PhaseSpaceState::vacuum(1), &ChshSettings::zero()).is_err());
    }

    #[test]
    fn collapsed_settings_respect_local_bound() {
        let state = two_mode_thermal_entangled(1.0, C64::from(2.0), Sign::Plus).unwrap();
        let a = C64::new(0.1, 0.05);
        let b = C64::new(-0.02, 0.08);
        let s = ChshSettings::new(a, a, b, b);
        assert!(chsh_value(&state, &s).unwrap() <= 2.0 + 1e-12);
    }

    #[test]
    fn pure_cat_violates_near_tsirelson() {
        let state = two_mode_thermal_entangled(1.0, C64::from(2.0), Sign::Plus).unwrap();
        let cfg = ChshConfig { restarts: 8, ..ChshConfig::for_family(ChshFamily::TwoModeThermal, 1.0, 2.0, PI) };
        let r = optimize_chsh(&state, &cfg).unwrap();
        assert!((r.value - 2.7085).abs() < 2e-3, "{}", r.value);
        assert!((chsh_value(&state, &r.argmax).unwrap() - r.value).abs() < 1e-12);
    }

    #[test]
    fn vacuum_split_is_local() {
        let state = bs_entangled(1.0, C64::from(0.0), Sign::Plus).unwrap();
        let r = optimize_chsh(&state, &ChshConfig { restarts: 8, ..Default::default() }).unwrap();
        assert!((r.value - 2.0).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn deterministic_given_seed() {
        let state = two_mode_thermal_entangled(3.0, C64::from(1.0), Sign::Minus).unwrap();
        let cfg = ChshConfig { restarts: 4, seed: 7, ..Default::default() };
        let a = optimize_chsh(&state, &cfg).unwrap();
        let b = optimize_chsh(&state, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn user_settings_never_beaten_by_result() {
        let state = two_mode_thermal_entangled(1.0, C64::from(1.5), Sign::Plus).unwrap();
        let mine = ChshSettings::new(C64::new(0.0, 0.0), C64::new(0.0, 0.3), C64::new(0.0, -0.1), C64::new(0.0, 0.1));
        let cfg = ChshConfig { restarts: 1, max_iter: 5, warm_starts: vec![mine], ..Default::default() };
        let r = optimize_chsh(&state, &cfg).unwrap();
        assert!(r.value >= chsh_value(&state, &mine).unwrap() - 1e-15);
    }

    #[test]
    fn no_interaction_is_local() {
        for family in [ChshFamily::BsEntangled, ChshFamily::TwoModeThermal] {
            let axis = SweepAxis::Theta { d: 2.0, values: vec![0.0] };
            let cfg = ChshConfig { restarts: 8, ..Default::default() };
            let sw = chsh_sweep(family, 1.0, &axis, Sign::Plus, &cfg).unwrap();
            assert!((sw.rows[0].result.value - 2.0).abs() < 1e-6, "{}", sw.rows[0].result.value);
        }
    }

    #[test]
    fn window_interpolation() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.5, 2.5, 2.6, 1.9, 1.0];
        let (lo, hi) = violation_window(&xs, &ys, 2.0).unwrap();
        assert!((lo - 0.5).abs() < 1e-12 && (hi - (2.0 + 0.6 / 0.7)).abs() < 1e-12);
        assert!(violation_window(&xs, &[1.0; 5], 2.0).is_none());
    }
}
