//! Complex Gaussian exponents over real coordinates.
//!
//! Every quantity computed by the kernel algebra (Wigner values, traces,
//! quadrature densities, overlaps, moments) is a Gaussian integral
//!
//! ```text
//!   ∫ d^m x  exp( xᵀ Q x + lᵀ x + c )
//! ```
//!
//! with a complex symmetric `Q` whose real part is negative definite on the
//! integrated block. Integration is performed one coordinate at a time by
//! completing the square, so the result stays in log form until the caller
//! exponentiates it. The Schur complements of a matrix with negative definite
//! real part keep that property, so every pivot has a strictly positive real
//! part after negation and the principal square root is the correct branch.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Complex-valued affine function of real coordinates, `f(x) = Σ cⱼ xⱼ + c₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub coeffs: Vec<C64>,
    pub constant: C64,
}

impl AffineForm {
    pub fn zeros(dim: usize) -> Self {
        Self { coeffs: vec![ZERO; dim], constant: ZERO }
    }

    pub fn constant(dim: usize, value: C64) -> Self {
        Self { coeffs: vec![ZERO; dim], constant: value }
    }

    /// The complex coordinate `x[re] + i x[re + 1]` scaled by `scale`.
    pub fn complex_coordinate(dim: usize, re: usize, scale: C64) -> Self {
        let mut f = Self::zeros(dim);
        f.coeffs[re] = scale;
        f.coeffs[re + 1] = scale * C64::i();
        f
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Complex conjugate of the function (coordinates are real).
    pub fn conj(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
            constant: self.constant.conj(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            constant: self.constant * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            constant: self.constant + other.constant,
        }
    }

    pub fn shift(&self, offset: C64) -> Self {
        Self { coeffs: self.coeffs.clone(), constant: self.constant + offset }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        self.coeffs.iter().zip(x).map(|(c, xi)| c * xi).sum::<C64>() + self.constant
    }

    /// Embed into a `dim`-dimensional coordinate space, placing the current
    /// coordinates starting at `offset`.
    pub fn embed(&self, dim: usize, offset: usize) -> Self {
        let mut coeffs = vec![ZERO; dim];
        coeffs[offset..offset + self.dim()].copy_from_slice(&self.coeffs);
        Self { coeffs, constant: self.constant }
    }

    /// Keep only the listed coordinates, in the given order.
    pub fn select(&self, keep: &[usize]) -> Self {
        Self { coeffs: keep.iter().map(|&k| self.coeffs[k]).collect(), constant: self.constant }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim() == other.dim()
            && close(self.constant, other.constant, tol)
            && self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| close(*a, *b, tol))
    }
}

pub(crate) fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

/// Exponent `xᵀ Q x + lᵀ x + c` of a complex Gaussian in `dim` real
/// coordinates. `Q` is stored symmetric, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexGaussianExponent {
    dim: usize,
    quadratic: Vec<C64>,
    linear: Vec<C64>,
    constant: C64,
}

impl ComplexGaussianExponent {
    pub fn new(dim: usize) -> Self {
        Self { dim, quadratic: vec![ZERO; dim * dim], linear: vec![ZERO; dim], constant: ZERO }
    }

    pub fn from_parts(dim: usize, quadratic: Vec<C64>, linear: Vec<C64>, constant: C64) -> Result<Self> {
        if quadratic.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: quadratic.len() });
        }
        if linear.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: linear.len() });
        }
        let mut g = Self { dim, quadratic, linear, constant };
        g.symmetrize();
        Ok(g)
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (self.quadratic[i * n + j] + self.quadratic[j * n + i]);
                self.quadratic[i * n + j] = s;
                self.quadratic[j * n + i] = s;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn quadratic(&self, i: usize, j: usize) -> C64 {
        self.quadratic[i * self.dim + j]
    }

    pub fn linear(&self) -> &[C64] {
        &self.linear
    }

    pub fn constant_term(&self) -> C64 {
        self.constant
    }

    pub fn add_constant(&mut self, c: C64) {
        self.constant += c;
    }

    /// Add `scale · f(x)` to the exponent.
    pub fn add_form(&mut self, scale: C64, f: &AffineForm) {
        debug_assert_eq!(f.dim(), self.dim);
        for (l, c) in self.linear.iter_mut().zip(&f.coeffs) {
            *l += scale * c;
        }
        self.constant += scale * f.constant;
    }

    /// Add `scale · f(x) g(x)` to the exponent.
    pub fn add_product(&mut self, scale: C64, f: &AffineForm, g: &AffineForm) {
        debug_assert_eq!(f.dim(), self.dim);
        debug_assert_eq!(g.dim(), self.dim);
        let n = self.dim;
        for i in 0..n {
            if f.coeffs[i] == ZERO && g.coeffs[i] == ZERO {
                continue;
            }
            for j in 0..n {
                let v = 0.5 * scale * (f.coeffs[i] * g.coeffs[j] + g.coeffs[i] * f.coeffs[j]);
                self.quadratic[i * n + j] += v;
            }
        }
        for i in 0..n {
            self.linear[i] += scale * (f.constant * g.coeffs[i] + g.constant * f.coeffs[i]);
        }
        self.constant += scale * f.constant * g.constant;
    }

    /// Sum of two exponents over the same coordinates.
    pub fn add(&mut self, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.quadratic.iter_mut().zip(&other.quadratic) {
            *a += b;
        }
        for (a, b) in self.linear.iter_mut().zip(&other.linear) {
            *a += b;
        }
        self.constant += other.constant;
    }

    /// Embed into a larger space, current coordinates starting at `offset`.
    pub fn embed(&self, dim: usize, offset: usize) -> Self {
        let mut out = Self::new(dim);
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                out.quadratic[(i + offset) * dim + j + offset] = self.quadratic[i * n + j];
            }
            out.linear[i + offset] = self.linear[i];
        }
        out.constant = self.constant;
        out
    }

    /// Direct sum over disjoint coordinate blocks.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let dim = self.dim + other.dim;
        let mut out = self.embed(dim, 0);
        out.add(&other.embed(dim, self.dim));
        out
    }

    /// Log of the integrand at `x`.
    pub fn eval(&self, x: &[f64]) -> C64 {
        let n = self.dim;
        let mut acc = self.constant;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                row += self.quadratic[i * n + j] * x[j];
            }
            acc += x[i] * (row + self.linear[i]);
        }
        acc
    }

    /// Integrate out a single coordinate by completing the square.
    pub fn integrate_coordinate(&self, k: usize) -> Result<Self> {
        let n = self.dim;
        let qkk = self.quadratic[k * n + k];
        let a = -qkk;
        if !(a.re > 0.0) || !a.re.is_finite() {
            return Err(Error::NonIntegrable(format!("{a}")));
        }
        let lk = self.linear[k];
        let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
        let m = n - 1;
        let mut out = Self::new(m);
        for (ii, &i) in keep.iter().enumerate() {
            let qik = self.quadratic[i * n + k];
            for (jj, &j) in keep.iter().enumerate() {
                out.quadratic[ii * m + jj] = self.quadratic[i * n + j] - qik * self.quadratic[k * n + j] / qkk;
            }
            out.linear[ii] = self.linear[i] - qik * lk / qkk;
        }
        out.constant = self.constant - lk * lk / (4.0 * qkk)
            + 0.5 * (C64::from(std::f64::consts::PI).ln() - a.ln());
        Ok(out)
    }

    /// Integrate out the listed coordinates; the survivors keep their
    /// relative order.
    pub fn integrate_coordinates(&self, coords: &[usize]) -> Result<Self> {
        let mut sorted = coords.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut g = self.clone();
        for &k in sorted.iter().rev() {
            g = g.integrate_coordinate(k)?;
        }
        Ok(g)
    }

    /// Integrate out the first `k` coordinates.
    pub fn integrate_leading(&self, k: usize) -> Result<Self> {
        let mut g = self.clone();
        for _ in 0..k {
            g = g.integrate_coordinate(0)?;
        }
        Ok(g)
    }

    /// Log of the full integral.
    pub fn log_integral(&self) -> Result<C64> {
        Ok(self.integrate_leading(self.dim)?.constant)
    }

    /// Solve `(-2Q) y = rhs` by elimination without pivoting; the pivots of a
    /// matrix with positive definite real part never vanish.
    fn solve_precision(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let n = self.dim;
        let mut m: Vec<C64> = self.quadratic.iter().map(|q| -2.0 * q).collect();
        let mut y = rhs.to_vec();
        for k in 0..n {
            let p = m[k * n + k];
            if !(p.re > 0.0) {
                return Err(Error::NonIntegrable(format!("{p}")));
            }
            for i in (k + 1)..n {
                let f = m[i * n + k] / p;
                if f == ZERO {
                    continue;
                }
                for j in k..n {
                    let mkj = m[k * n + j];
                    m[i * n + j] -= f * mkj;
                }
                let yk = y[k];
                y[i] -= f * yk;
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for j in (k + 1)..n {
                s -= m[k * n + j] * y[j];
            }
            y[k] = s / m[k * n + k];
        }
        Ok(y)
    }

    /// Log integral `ln Z` together with the normalized expectations
    /// `⟨f⟩` and `⟨f g⟩` under the (complex) Gaussian weight.
    pub fn moments(&self, f: &AffineForm, g: &AffineForm) -> Result<GaussianMoments> {
        let log_z = self.log_integral()?;
        if self.dim == 0 {
            return Ok(GaussianMoments {
                log_z,
                mean_f: f.constant,
                mean_g: g.constant,
                mean_fg: f.constant * g.constant,
            });
        }
        let mu = self.solve_precision(&self.linear)?;
        let sigma_g = self.solve_precision(&g.coeffs)?;
        let mean_f = f.coeffs.iter().zip(&mu).map(|(a, b)| a * b).sum::<C64>() + f.constant;
        let mean_g = g.coeffs.iter().zip(&mu).map(|(a, b)| a * b).sum::<C64>() + g.constant;
        let cov: C64 = f.coeffs.iter().zip(&sigma_g).map(|(a, b)| a * b).sum();
        Ok(GaussianMoments { log_z, mean_f, mean_g, mean_fg: mean_f * mean_g + cov })
    }
}

/// Result of [`ComplexGaussianExponent::moments`].
#[derive(Debug, Clone, Copy)]
pub struct GaussianMoments {
    pub log_z: C64,
    pub mean_f: C64,
    pub mean_g: C64,
    pub mean_fg: C64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Brute-force 2-D trapezoid quadrature of exp(E) over a box.
    fn quad2(g: &ComplexGaussianExponent, half: f64, n: usize) -> C64 {
        let h = 2.0 * half / n as f64;
        let mut acc = ZERO;
        for i in 0..=n {
            for j in 0..=n {
                let x = [-half + i as f64 * h, -half + j as f64 * h];
                let w = if i == 0 || i == n { 0.5 } else { 1.0 } * if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * g.eval(&x).exp();
            }
        }
        acc * h * h
    }

    fn sample() -> ComplexGaussianExponent {
        ComplexGaussianExponent::from_parts(
            2,
            vec![c(-1.3, 0.4), c(0.2, -0.3), c(0.2, -0.3), c(-0.8, -0.5)],
            vec![c(0.3, 0.7), c(-0.4, 0.2)],
            c(0.1, -0.2),
        )
        .unwrap()
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let g = sample();
        let exact = g.log_integral().unwrap().exp();
        let numeric = quad2(&g, 9.0, 600);
        assert!((exact - numeric).norm() < 1e-9, "{exact} vs {numeric}");
    }

    #[test]
    fn integration_order_is_irrelevant() {
        let g = sample();
        let a = g.integrate_coordinate(0).unwrap().integrate_coordinate(0).unwrap();
        let b = g.integrate_coordinate(1).unwrap().integrate_coordinate(0).unwrap();
        assert!((a.constant_term() - b.constant_term()).norm() < 1e-13);
    }

    #[test]
    fn moments_match_quadrature() {
        let g = sample();
        let f = AffineForm { coeffs: vec![c(1.0, 0.5), c(0.0, -1.0)], constant: c(0.2, 0.0) };
        let h = AffineForm { coeffs: vec![c(-0.3, 0.0), c(0.7, 0.1)], constant: c(0.0, 1.0) };
        let m = g.moments(&f, &h).unwrap();
        let z = m.log_z.exp();
        let mut gf = g.clone();
        // ⟨f h⟩ by differentiating nothing: quadrature of f h e^E
        let n = 600;
        let half = 9.0;
        let step = 2.0 * half / n as f64;
        let mut acc = ZERO;
        for i in 0..=n {
            for j in 0..=n {
                let x = [-half + i as f64 * step, -half + j as f64 * step];
                let w = if i == 0 || i == n { 0.5 } else { 1.0 } * if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * f.eval(&x) * h.eval(&x) * gf.eval(&x).exp();
            }
        }
        acc *= step * step;
        assert!((m.mean_fg * z - acc).norm() < 1e-8, "{} vs {}", m.mean_fg * z, acc);
        gf.add_constant(ZERO);
    }

    #[test]
    fn divergent_integral_is_reported() {
        let g = ComplexGaussianExponent::from_parts(1, vec![c(0.5, 0.0)], vec![ZERO], ZERO).unwrap();
        assert!(matches!(g.log_integral(), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn add_product_reproduces_pointwise_product() {
        let f = AffineForm { coeffs: vec![c(1.0, 2.0), c(-0.5, 0.0)], constant: c(0.3, -0.1) };
        let h = AffineForm { coeffs: vec![c(0.0, 1.0), c(2.0, 0.5)], constant: c(-1.0, 0.0) };
        let mut g = ComplexGaussianExponent::new(2);
        g.add_product(c(0.7, 0.2), &f, &h);
        let x = [0.37, -1.2];
        let direct = c(0.7, 0.2) * f.eval(&x) * h.eval(&x);
        assert!((g.eval(&x) - direct).norm() < 1e-14);
    }
}
