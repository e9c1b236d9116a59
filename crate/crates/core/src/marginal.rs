//! One-dimensional quadrature densities.
//!
//! A marginal of any kernel state is a finite sum of complex Gaussians
//! `Re Σ exp(q x² + l x + c)`; everything here (evaluation, interval
//! probabilities, sampling, fringe analysis) works from those coefficients
//! without numerical quadrature.

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Abscissa convention for quadrature marginals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureConvention {
    /// `x = Re α`, the coordinate of a coherent amplitude.
    Amplitude,
    /// `X = (a + a†)/√2`; the vacuum density is `exp(-X²)/√π`.
    #[default]
    Quadrature,
}

impl QuadratureConvention {
    /// Factor `s` such that the abscissa in this convention is `X / s`.
    pub fn scale(self) -> f64 {
        match self {
            QuadratureConvention::Amplitude => std::f64::consts::SQRT_2,
            QuadratureConvention::Quadrature => 1.0,
        }
    }
}

/// A single complex Gaussian `exp(q x² + l x + c)` with `Re q < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub q: C64,
    pub l: C64,
    pub c: C64,
}

impl GaussianComponent {
    pub fn log_value(&self, x: f64) -> C64 {
        self.q * x * x + self.l * x + self.c
    }

    pub fn value(&self, x: f64) -> C64 {
        self.log_value(x).exp()
    }

    /// Log of `∫ exp(q x² + l x + c) dx` over the real line.
    pub fn log_total(&self) -> C64 {
        let a = -self.q;
        self.c + self.l * self.l / (4.0 * a) + 0.5 * (C64::from(std::f64::consts::PI) / a).ln()
    }

    fn sqrt_a(&self) -> C64 {
        (-self.q).sqrt()
    }

    fn z(&self, x: f64) -> C64 {
        let a = -self.q;
        let m = self.l / (2.0 * a);
        a.sqrt() * (x - m)
    }

    /// `∫_x^∞`, stable when `Re z(x) ≥ 0`.
    fn upper_tail_stable(&self, x: f64) -> C64 {
        SQRT_PI / (2.0 * self.sqrt_a()) * self.z(x).erfcx() * self.log_value(x).exp()
    }

    /// `∫_{-∞}^x`, stable when `Re z(x) ≤ 0`.
    fn lower_tail_stable(&self, x: f64) -> C64 {
        SQRT_PI / (2.0 * self.sqrt_a()) * (-self.z(x)).erfcx() * self.log_value(x).exp()
    }

    pub fn lower_tail(&self, x: f64) -> C64 {
        if self.z(x).re <= 0.0 {
            self.lower_tail_stable(x)
        } else {
            self.log_total().exp() - self.upper_tail_stable(x)
        }
    }

    pub fn upper_tail(&self, x: f64) -> C64 {
        if self.z(x).re >= 0.0 {
            self.upper_tail_stable(x)
        } else {
            self.log_total().exp() - self.lower_tail_stable(x)
        }
    }

    /// `∫_a^b` for `a ≤ b`, choosing the formulation that avoids cancellation.
    pub fn interval(&self, a: f64, b: f64) -> C64 {
        if a.is_infinite() && b.is_infinite() {
            return self.log_total().exp();
        }
        if a == f64::NEG_INFINITY {
            return self.lower_tail(b);
        }
        if b == f64::INFINITY {
            return self.upper_tail(a);
        }
        let (za, zb) = (self.z(a), self.z(b));
        if zb.re <= 0.0 {
            self.lower_tail_stable(b) - self.lower_tail_stable(a)
        } else if za.re >= 0.0 {
            self.upper_tail_stable(a) - self.upper_tail_stable(b)
        } else {
            self.log_total().exp() - self.lower_tail_stable(a) - self.upper_tail_stable(b)
        }
    }

    /// Centre and width of the envelope `|exp(...)|`.
    pub fn envelope(&self) -> (f64, f64) {
        let center = -self.l.re / (2.0 * self.q.re);
        let width = (-0.5 / self.q.re).sqrt();
        (center, width)
    }

    /// Log of the envelope peak height.
    pub fn log_peak(&self) -> f64 {
        let (m, _) = self.envelope();
        self.log_value(m).re
    }

    /// Local wavenumber of the oscillating factor at `x`.
    pub fn wavenumber(&self, x: f64) -> f64 {
        (2.0 * self.q * x + self.l).im
    }

    /// Substitute `x → s x` and multiply by `s`, so the result is a density
    /// in the rescaled abscissa.
    pub fn rescale(&self, s: f64) -> Self {
        Self { q: self.q * s * s, l: self.l * s, c: self.c + s.ln() }
    }
}

/// Real density `Re Σ exp(q y² + l y + c)` with `y = x − offset`.
///
/// The offset keeps the coefficients small for states far from the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture1D {
    pub offset: f64,
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixture1D {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        for comp in &components {
            if !(comp.q.re < 0.0) {
                return Err(Error::NonIntegrable(format!("{}", comp.q)));
            }
        }
        Ok(Self { offset: 0.0, components })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn eval_complex(&self, x: f64) -> C64 {
        let y = x - self.offset;
        self.components.iter().map(|c| c.value(y)).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_complex(x).re
    }

    pub fn total(&self) -> f64 {
        self.components.iter().map(|c| c.log_total().exp()).sum::<C64>().re
    }

    pub fn interval(&self, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        let (a, b) = (a - self.offset, b - self.offset);
        self.components.iter().map(|c| c.interval(a, b)).sum::<C64>().re
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let y = x - self.offset;
        self.components.iter().map(|c| c.lower_tail(y)).sum::<C64>().re
    }

    /// Same density with abscissa divided by `s` (values multiplied by `s`).
    pub fn rescale(&self, s: f64) -> Self {
        Self { offset: self.offset / s, components: self.components.iter().map(|c| c.rescale(s)).collect() }
    }

    pub fn with_convention(&self, convention: QuadratureConvention) -> Self {
        match convention {
            QuadratureConvention::Quadrature => self.clone(),
            QuadratureConvention::Amplitude => self.rescale(convention.scale()),
        }
    }

    /// Components whose envelope peak lies within `e^-60` of the largest.
    fn significant(&self) -> Vec<&GaussianComponent> {
        let top = self.components.iter().map(|c| c.log_peak()).fold(f64::NEG_INFINITY, f64::max);
        self.components.iter().filter(|c| c.log_peak() > top - 60.0).collect()
    }

    /// Interval outside which the density is negligible.
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in self.significant() {
            let (m, w) = c.envelope();
            lo = lo.min(m - 12.0 * w);
            hi = hi.max(m + 12.0 * w);
        }
        if !lo.is_finite() {
            return (self.offset - 1.0, self.offset + 1.0);
        }
        (lo + self.offset, hi + self.offset)
    }

    /// Scan for negative values on a dense grid across the support.
    pub fn check_nonnegative(&self, tolerance: f64) -> Result<()> {
        let (lo, hi) = self.support();
        let n = 4000;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let v = self.eval(x);
            if v < -tolerance {
                return Err(Error::NegativeDensity { x, value: v });
            }
        }
        Ok(())
    }

    /// Inverse CDF by bracketing on a tabulated CDF followed by safeguarded
    /// Newton steps on the exact CDF.
    pub fn sampler(&self) -> InverseCdf<'_> {
        let (lo, hi) = self.support();
        let n = 2048;
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = self.cdf(lo);
        cdf.push(acc);
        for w in xs.windows(2) {
            acc += self.interval(w[0], w[1]);
            cdf.push(acc);
        }
        InverseCdf { mixture: self, xs, cdf }
    }
}

/// Tabulated inverse CDF with exact refinement.
#[derive(Debug, Clone)]
pub struct InverseCdf<'a> {
    mixture: &'a GaussianMixture1D,
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf<'_> {
    pub fn quantile(&self, p: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c < p);
        if k == 0 {
            return self.xs[0];
        }
        if k >= self.xs.len() {
            return *self.xs.last().unwrap();
        }
        let (mut a, mut b) = (self.xs[k - 1], self.xs[k]);
        let (ca, cb) = (self.cdf[k - 1], self.cdf[k]);
        let target = p - ca;
        let mut x = if cb > ca { a + (b - a) * target / (cb - ca) } else { 0.5 * (a + b) };
        for _ in 0..60 {
            let g = self.mixture.interval(self.xs[k - 1], x) - target;
            if g.abs() < 1e-15 {
                break;
            }
            if g > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let dens = self.mixture.eval(x);
            let newton = x - g / dens;
            x = if dens > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a < 1e-14 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}

/// Outcome of a fringe analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FringeMetrics {
    Fringes {
        visibility: f64,
        /// Carrier period `2π/ω` of the interference term at its envelope peak.
        spacing: f64,
        /// Mean distance between adjacent located maxima.
        measured_spacing: f64,
        i_max: f64,
        i_min: f64,
        x_max: f64,
        x_min: f64,
        maxima: usize,
    },
    NoFringes,
}

impl FringeMetrics {
    pub fn visibility(&self) -> Option<f64> {
        match self {
            FringeMetrics::Fringes { visibility, .. } => Some(*visibility),
            FringeMetrics::NoFringes => None,
        }
    }

    pub fn spacing(&self) -> Option<f64> {
        match self {
            FringeMetrics::Fringes { spacing, .. } => Some(*spacing),
            FringeMetrics::NoFringes => None,
        }
    }
}

fn golden_extremum(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> (f64, f64) {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |x: f64| sign * f(x);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Visibility and spacing of the interference pattern of `mixture`.
///
/// The scan window is the envelope of the dominant oscillating component,
/// sampled at 64 points per carrier period; every grid extremum is refined
/// by golden-section search on the exact density.
pub fn fringe_metrics(mixture: &GaussianMixture1D) -> FringeMetrics {
    let significant = mixture.significant();
    let carrier = significant
        .iter()
        .filter(|c| {
            let (m, _) = c.envelope();
            let k = c.wavenumber(m).abs();
            let (_, w) = c.envelope();
            k * w > 1e-3
        })
        .max_by(|a, b| a.log_peak().total_cmp(&b.log_peak()));
    let Some(carrier) = carrier else {
        return FringeMetrics::NoFringes;
    };
    let (center, width) = carrier.envelope();
    let center = center + mixture.offset;
    let omega = carrier.wavenumber(center - mixture.offset).abs();
    let period = 2.0 * std::f64::consts::PI / omega;
    let half = (5.0 * width).max(3.0 * period);
    let step = period / 64.0;
    let n = ((2.0 * half / step).ceil() as usize).clamp(256, 4_000_000);
    let lo = center - half;
    let h = 2.0 * half / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| mixture.eval(x)).collect();
    let f = |x: f64| mixture.eval(x);

    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..n {
        if ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] {
            maxima.push(golden_extremum(&f, xs[i - 1], xs[i + 1], true));
        } else if ys[i] < ys[i - 1] && ys[i] <= ys[i + 1] {
            minima.push(golden_extremum(&f, xs[i - 1], xs[i + 1], false));
        }
    }
    if maxima.is_empty() || minima.is_empty() || maxima.len() + minima.len() < 2 {
        return FringeMetrics::NoFringes;
    }
    let &(x_max, i_max) = maxima.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let left = minima.iter().filter(|m| m.0 < x_max).max_by(|a, b| a.0.total_cmp(&b.0));
    let right = minima.iter().filter(|m| m.0 > x_max).min_by(|a, b| a.0.total_cmp(&b.0));
    let &(x_min, i_min) = match (left, right) {
        (Some(l), Some(r)) => if l.1 <= r.1 { l } else { r },
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => return FringeMetrics::NoFringes,
    };
    let i_min_clamped = i_min.max(0.0);
    let visibility = (i_max - i_min_clamped) / (i_max + i_min_clamped);

    let strong: Vec<f64> = maxima.iter().filter(|m| m.1 > 1e-3 * i_max).map(|m| m.0).collect();
    let measured_spacing = if strong.len() >= 2 {
        (strong[strong.len() - 1] - strong[0]) / (strong.len() - 1) as f64
    } else {
        f64::NAN
    };
    FringeMetrics::Fringes {
        visibility,
        spacing: period,
        measured_spacing,
        i_max,
        i_min,
        x_max,
        x_min,
        maxima: maxima.len(),
    }
}
