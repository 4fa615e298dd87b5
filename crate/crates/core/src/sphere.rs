//! Kernels on the sphere `S^(d-1)`: orthogonal polynomials, projections
//! onto spherical harmonics, the half-wave group `e^(iθΛ)` and the
//! partial-wave synthesis of the zero-energy scattering matrix.
//!
//! Zonal kernels are functions of `w = ω·ω'` and are sampled on a
//! Chebyshev–Lobatto grid in `w`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre;
use crate::potentials::PotentialModel;
use crate::radial::correction_integral;

const W_SLACK: f64 = 1e-12;

fn check_w(w: f64) -> Result<f64> {
    if !(w.abs() <= 1.0 + W_SLACK) {
        return Err(Error::Domain(format!("w = {w} lies outside [-1, 1]")));
    }
    Ok(w.clamp(-1.0, 1.0))
}

fn check_dim(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("sphere dimension needs d >= 2, got {d}")));
    }
    Ok(())
}

/// `T_n(w)`, with `T_n(cos φ) = cos nφ`.
pub fn tchebyshev(n: u32, w: f64) -> Result<f64> {
    let w = check_w(w)?;
    let (mut a, mut b) = (1.0, w);
    if n == 0 {
        return Ok(a);
    }
    for _ in 1..n {
        (a, b) = (b, 2.0 * w * b - a);
    }
    Ok(b)
}

/// Gegenbauer polynomial `C_n^α(w)`.
pub fn gegenbauer(alpha: f64, n: u32, w: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("Gegenbauer index must be positive, got {alpha}")));
    }
    let w = check_w(w)?;
    let (mut a, mut b) = (1.0, 2.0 * alpha * w);
    if n == 0 {
        return Ok(a);
    }
    for m in 2..=n {
        let m = m as f64;
        (a, b) = (b, (2.0 * w * (m + alpha - 1.0) * b - (m + 2.0 * alpha - 2.0) * a) / m);
    }
    Ok(b)
}

/// Iterates `Q_l^(d-1)(w)` for `l = 0, 1, 2, …`.
#[derive(Debug, Clone)]
struct ProjectionIter {
    d: u32,
    w: f64,
    l: u32,
    prev: f64,
    cur: f64,
    scale: f64,
}

impl ProjectionIter {
    fn new(d: u32, w: f64) -> Self {
        let scale = if d == 2 {
            1.0 / PI
        } else {
            let df = d as f64;
            gamma(df / 2.0 - 1.0) / (4.0 * PI.powf(df / 2.0))
        };
        Self {
            d,
            w,
            l: 0,
            prev: 0.0,
            cur: 1.0,
            scale,
        }
    }
}

impl Iterator for ProjectionIter {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let l = self.l;
        let w = self.w;
        let value = if self.d == 2 {
            if l == 0 {
                0.5 * self.scale
            } else {
                self.scale * self.cur
            }
        } else {
            (self.d as f64 - 2.0 + 2.0 * l as f64) * self.scale * self.cur
        };
        // advance the underlying polynomial to degree l + 1
        let next = if self.d == 2 {
            if l == 0 {
                w
            } else {
                2.0 * w * self.cur - self.prev
            }
        } else {
            let alpha = (self.d as f64 - 2.0) / 2.0;
            let m = (l + 1) as f64;
            if l == 0 {
                2.0 * alpha * w
            } else {
                (2.0 * w * (m + alpha - 1.0) * self.cur - (m + 2.0 * alpha - 2.0) * self.prev) / m
            }
        };
        self.prev = self.cur;
        self.cur = next;
        self.l += 1;
        Some(value)
    }
}

/// Kernel `Q_l^(d-1)(w)` of the orthogonal projection onto spherical
/// harmonics of order `l` on `S^(d-1)`.
pub fn projection_kernel(d: u32, l: u32, w: f64) -> Result<f64> {
    check_dim(d)?;
    let w = check_w(w)?;
    Ok(ProjectionIter::new(d, w).nth(l as usize).unwrap())
}

/// Eigenvalue `l + d/2 - 1` of `Λ` on order-`l` harmonics.
pub fn lambda_eigenvalue(d: u32, l: u32) -> f64 {
    l as f64 + d as f64 / 2.0 - 1.0
}

/// Area of the unit sphere `S^(n)` embedded in `ℝ^(n+1)`.
pub fn sphere_area(n: u32) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Dimension of the space of order-`l` spherical harmonics on `S^(d-1)`.
pub fn harmonic_dimension(d: u32, l: u32) -> f64 {
    projection_kernel(d, l, 1.0).unwrap() * sphere_area(d - 1)
}

/// `e^(iθΛ)` at `θ ∈ πℤ`: a multiple of the identity or of the parity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialKernel {
    Identity(Complex64),
    Parity(Complex64),
}

pub fn wave_kernel_special(d: u32, theta: f64) -> Result<SpecialKernel> {
    check_dim(d)?;
    let n = (theta / PI).round();
    if (theta - n * PI).abs() > 1e-12 * theta.abs().max(1.0) {
        return Err(Error::NotApplicable(format!("theta = {theta} is not a multiple of π")));
    }
    let n = n as i64;
    let phase = Complex64::from_polar(1.0, n as f64 * PI * (d as f64 / 2.0 - 1.0));
    if n.rem_euclid(2) == 0 {
        Ok(SpecialKernel::Identity(phase))
    } else {
        Ok(SpecialKernel::Parity(phase))
    }
}

/// Closed-form kernel of `e^(iθΛ)`:
/// `(2π)^(-d/2) Γ(d/2) e^(-iπ/2) sin θ (cos θ - w ∓ i0)^(-d/2)`.
///
/// The `∓i0` is realised by evaluating at the complex angle `θ + iε`,
/// which reproduces the sign prescription on each half-period. Outside
/// `(-π, π]` the angle is reduced by `2πm` at the cost of the factor
/// `(-1)^(md)`. Principal branch throughout.
pub fn wave_kernel_closed(d: u32, theta: f64, w: f64, eps: f64) -> Result<Complex64> {
    check_dim(d)?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("regulariser eps must be positive, got {eps}")));
    }
    let m = (theta / (2.0 * PI)).round();
    let reduced = theta - 2.0 * PI * m;
    if wave_kernel_special(d, reduced).is_ok() {
        return Err(Error::NotApplicable(format!(
            "theta = {theta} is a multiple of π; use wave_kernel_special"
        )));
    }
    let w = check_w(w)?;
    let df = d as f64;
    let z = Complex64::new(reduced, eps);
    let base = z.cos() - w;
    let value = Complex64::new(0.0, -1.0) * z.sin() * base.powf(-df / 2.0) * gamma(df / 2.0)
        / (2.0 * PI).powf(df / 2.0);
    let sign = if (m as i64 * d as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(sign * value)
}

/// Exact sum of the Abel-damped series `Σ_l e^(i(l+d/2-1)θ) t^l Q_l(w)`,
/// `0 ≤ t < 1`.
pub fn wave_kernel_abel_sum(d: u32, theta: f64, t: f64, w: f64) -> Result<Complex64> {
    check_dim(d)?;
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("Abel factor must lie in [0, 1), got {t}")));
    }
    let w = check_w(w)?;
    let df = d as f64;
    let z = Complex64::from_polar(t, theta);
    let e_plus = Complex64::new(w, (1.0 - w * w).sqrt());
    let one = Complex64::new(1.0, 0.0);
    let f1 = (one - z * e_plus).powf(-df / 2.0);
    let f2 = (one - z * e_plus.conj()).powf(-df / 2.0);
    let pre = gamma(df / 2.0) / (2.0 * PI.powf(df / 2.0));
    Ok(pre * Complex64::from_polar(1.0, (df / 2.0 - 1.0) * theta) * (one - z * z) * f1 * f2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    None,
    /// Factor `t^l`.
    Abel(f64),
    /// Factor `exp(-(l/width)²)`.
    Gauss(f64),
}

impl Smoothing {
    pub fn factor(&self, l: u32) -> f64 {
        match *self {
            Smoothing::None => 1.0,
            Smoothing::Abel(t) => t.powi(l as i32),
            Smoothing::Gauss(width) => (-(l as f64 / width).powi(2)).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Smoothing::Abel(t) if !(t > 0.0 && t <= 1.0) => {
                Err(Error::Domain(format!("Abel factor must lie in (0, 1], got {t}")))
            }
            Smoothing::Gauss(w) if !(w > 0.0) => Err(Error::Domain(format!("Gauss width must be positive, got {w}"))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::None => f.write_str("none"),
            Smoothing::Abel(t) => write!(f, "abel({t})"),
            Smoothing::Gauss(w) => write!(f, "gauss({w})"),
        }
    }
}

/// Sampling and truncation parameters of a synthesized kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nodes: usize,
    pub l_max: u32,
    pub smoothing: Smoothing,
}

impl GridSpec {
    /// 2001 nodes, Abel factor `1 - 1/l_max`.
    pub fn new(l_max: u32) -> Self {
        Self {
            nodes: 2001,
            l_max,
            smoothing: Smoothing::Abel(1.0 - 1.0 / l_max.max(1) as f64),
        }
    }

    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }
}

/// Chebyshev–Lobatto nodes `-cos(πj/(n-1))`, ascending from `-1` to `1`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|j| (PI * (2.0 * j as f64 - m) / (2.0 * m)).sin())
        .collect()
}

/// Zonal kernel `Σ_l s_l c_l Q_l(w)` sampled on a Chebyshev grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    pub w: Vec<f64>,
    pub values: Vec<Complex64>,
    pub d: u32,
    pub l_max: u32,
    pub smoothing: Smoothing,
    /// Unsmoothed coefficients `c_l`, `l = 0..=l_max`.
    pub coefficients: Vec<Complex64>,
}

/// Synthesizes `Σ_{l ≤ l_max} s_l c_l Q_l(w)` on the grid of `spec`.
pub fn synthesize(d: u32, coefficients: &[Complex64], spec: &GridSpec) -> Result<KernelGrid> {
    check_dim(d)?;
    spec.smoothing.validate()?;
    if spec.nodes < 3 {
        return Err(Error::Input(format!("grid needs at least 3 nodes, got {}", spec.nodes)));
    }
    let need = spec.l_max as usize + 1;
    if coefficients.len() < need {
        return Err(Error::Input(format!(
            "need coefficients for l = 0..={}, got {}",
            spec.l_max,
            coefficients.len()
        )));
    }
    let damped: Vec<Complex64> = coefficients[..need]
        .iter()
        .enumerate()
        .map(|(l, c)| c * spec.smoothing.factor(l as u32))
        .collect();
    let w = chebyshev_nodes(spec.nodes);
    let values = w
        .par_iter()
        .map(|&x| {
            damped
                .iter()
                .zip(ProjectionIter::new(d, x))
                .fold(Complex64::new(0.0, 0.0), |acc, (c, q)| acc + c * q)
        })
        .collect();
    Ok(KernelGrid {
        w,
        values,
        d,
        l_max: spec.l_max,
        smoothing: spec.smoothing,
        coefficients: coefficients[..need].to_vec(),
    })
}

/// Truncated, smoothed series of `e^(iθΛ)`.
pub fn wave_kernel_series(d: u32, theta: f64, spec: &GridSpec) -> Result<KernelGrid> {
    let coeffs: Vec<Complex64> = (0..=spec.l_max)
        .map(|l| Complex64::from_polar(1.0, theta * lambda_eigenvalue(d, l)))
        .collect();
    synthesize(d, &coeffs, spec)
}

/// Kernel of `S(0)`: `Σ_l e^(2iσ_l) Q_l(w)`, smoothed.
pub fn s0_kernel(d: u32, sigmas: &[f64], spec: &GridSpec) -> Result<KernelGrid> {
    let coeffs: Vec<Complex64> = sigmas.iter().map(|s| Complex64::from_polar(1.0, 2.0 * s)).collect();
    synthesize(d, &coeffs, spec)
}

/// Clenshaw–Curtis weights for the Lobatto nodes of [`chebyshev_nodes`].
fn clenshaw_curtis(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes - 1;
    let nf = n as f64;
    (0..=n)
        .map(|j| {
            let c = if j == 0 || j == n { 1.0 } else { 2.0 };
            let mut s = 0.0;
            for k in 1..=n / 2 {
                let b = if 2 * k == n { 1.0 } else { 2.0 };
                s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * PI * (k * j) as f64 / nf).cos();
            }
            c / nf * (1.0 - s)
        })
        .collect()
}

impl KernelGrid {
    /// Weights `ω_j` with `Σ_j ω_j f(w_j) ≈ ∫_{S^(d-1)} f(ω·e) dω`.
    pub fn sphere_weights(&self) -> Vec<f64> {
        let n = self.w.len();
        let area = sphere_area(self.d - 2);
        if self.d % 2 == 1 {
            // polynomial weight (1-w²)^((d-3)/2): Clenshaw–Curtis in w
            let p = ((self.d - 3) / 2) as i32;
            clenshaw_curtis(n)
                .iter()
                .zip(&self.w)
                .map(|(c, w)| area * c * (1.0 - w * w).powi(p))
                .collect()
        } else {
            // sin^(d-2) φ is a cosine polynomial: trapezoid in φ
            let h = PI / (n - 1) as f64;
            (0..n)
                .map(|j| {
                    let end = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                    let phi = PI - j as f64 * h;
                    area * end * h * phi.sin().powi(self.d as i32 - 2)
                })
                .collect()
        }
    }

    /// `∫ |K(ω·e)|² dω` on the grid.
    pub fn l2_mass(&self) -> f64 {
        self.sphere_weights()
            .iter()
            .zip(&self.values)
            .map(|(q, v)| q * v.norm_sqr())
            .sum()
    }

    /// Parseval prediction `Σ |s_l c_l|² Q_l(1)` for [`Self::l2_mass`].
    pub fn parseval_mass(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(l, c)| {
                let s = self.smoothing.factor(l as u32);
                (s * c.norm()).powi(2) * projection_kernel(self.d, l as u32, 1.0).unwrap()
            })
            .sum()
    }

    /// Recovers `s_l c_l` by projecting the sampled kernel onto order `l`:
    /// `∫ K(ω·e) Q_l(ω·e) dω / Q_l(1)`.
    pub fn recover_coefficient(&self, l: u32) -> Complex64 {
        let q1 = projection_kernel(self.d, l, 1.0).unwrap();
        self.sphere_weights()
            .iter()
            .zip(&self.values)
            .zip(&self.w)
            .map(|((q, v), &w)| v * (q * projection_kernel(self.d, l, w).unwrap()))
            .sum::<Complex64>()
            / q1
    }

    /// Relative L² distance `‖self - other‖/‖other‖` on the sphere.
    pub fn relative_l2_distance(&self, other: &KernelGrid) -> Result<f64> {
        if self.w != other.w || self.d != other.d {
            return Err(Error::Input("kernels live on different grids".into()));
        }
        let q = self.sphere_weights();
        let (mut num, mut den) = (0.0, 0.0);
        for ((a, b), wq) in self.values.iter().zip(&other.values).zip(&q) {
            num += wq * (a - b).norm_sqr();
            den += wq * b.norm_sqr();
        }
        Ok((num / den).sqrt())
    }

    /// Width of the grid cell containing `w`.
    pub fn cell_width_at(&self, w: f64) -> f64 {
        let i = self.w.partition_point(|&x| x < w).clamp(1, self.w.len() - 1);
        self.w[i] - self.w[i - 1]
    }

    /// Fraction of the L² mass within `|w - center| < delta`.
    pub fn mass_fraction_near(&self, center: f64, delta: f64) -> f64 {
        let q = self.sphere_weights();
        let total: f64 = q.iter().zip(&self.values).map(|(a, v)| a * v.norm_sqr()).sum();
        let near: f64 = q
            .iter()
            .zip(&self.values)
            .zip(&self.w)
            .filter(|(_, w)| (*w - center).abs() < delta)
            .map(|((a, v), _)| a * v.norm_sqr())
            .sum();
        near / total
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub w_peak: f64,
    /// Peak modulus over median modulus.
    pub sharpness: f64,
}

/// Locates the maximum of `|K|`, refined by a parabola through the
/// neighbouring samples.
pub fn singularity_locator(kernel: &KernelGrid) -> Result<Peak> {
    let abs: Vec<f64> = kernel.values.iter().map(|v| v.norm()).collect();
    let n = abs.len();
    if n < 3 {
        return Err(Error::Input("kernel grid too small".into()));
    }
    let mut i = 0;
    for j in 1..n {
        if abs[j] > abs[i] {
            i = j;
        }
    }
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[n / 2];
    let sharpness = if median > 0.0 { abs[i] / median } else { f64::INFINITY };
    if !(sharpness >= 2.0) {
        return Err(Error::Degenerate(format!("no peak: sharpness {sharpness:.3} < 2")));
    }
    let w = &kernel.w;
    let mut w_peak = w[i];
    if i > 0 && i < n - 1 {
        let (x0, x1, x2) = (w[i - 1], w[i], w[i + 1]);
        let (y0, y1, y2) = (abs[i - 1], abs[i], abs[i + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let curv = (d12 - d01) / (x2 - x0);
        if curv < 0.0 {
            let x = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
            w_peak = x.clamp(x0, x2);
        }
    }
    Ok(Peak { w_peak, sharpness })
}

/// `c₀ = 4√(2γ)/(2-μ)·R0^(1-μ/2) + 2∫_{R0}^∞(√(-2V₁) - √(-2V))`.
pub fn scattering_constant(model: &PotentialModel) -> Result<f64> {
    Ok(2.0 * model.action_prefactor() * model.reference_radius.powf(1.0 - 0.5 * model.mu)
        + 2.0 * correction_integral(model)?)
}

/// Angle `-μπ/(2-μ)` of the leading part `e^(ic₀) e^(-iμπΛ/(2-μ))` of `S(0)`.
pub fn cone_angle(mu: f64) -> f64 {
    -mu * PI / (2.0 - mu)
}

/// `e^(2iσ_l) - e^(i(c₀ - (μπ/(2-μ))(l+d/2-1)))` for each `(l, σ_l)`.
pub fn compact_remainder_residuals(
    model: &PotentialModel,
    d: u32,
    sigmas: &[(u32, f64)],
) -> Result<Vec<(u32, Complex64)>> {
    let c0 = scattering_constant(model)?;
    let theta = cone_angle(model.mu);
    Ok(sigmas
        .iter()
        .map(|&(l, s)| {
            let lead = Complex64::from_polar(1.0, c0 + theta * lambda_eigenvalue(d, l));
            (l, Complex64::from_polar(1.0, 2.0 * s) - lead)
        })
        .collect())
}

/// Product rule on `S²`: Gauss–Legendre in `cos ϑ` times the trapezoid
/// rule in the azimuth. Exact for polynomials of degree `< min(2 n_theta, n_phi)`.
pub fn sphere_quadrature_s2(n_theta: usize, n_phi: usize) -> Vec<([f64; 3], f64)> {
    let (x, wx) = gauss_legendre(n_theta);
    let h = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (c, wc) in x.iter().zip(&wx) {
        let s = (1.0 - c * c).sqrt();
        for j in 0..n_phi {
            let p = j as f64 * h;
            out.push(([s * p.cos(), s * p.sin(), *c], wc * h));
        }
    }
    out
}

/// `(P_l f)(x) = ∫_{S²} Q_l(x·y) f(y) dy` by the product rule.
pub fn project_s2<F: Fn([f64; 3]) -> f64>(l: u32, f: F, x: [f64; 3], rule: &[([f64; 3], f64)]) -> f64 {
    rule.iter()
        .map(|(y, wt)| {
            let dot = (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).clamp(-1.0, 1.0);
            wt * projection_kernel(3, l, dot).unwrap() * f(*y)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn tchebyshev_examples() {
        assert_eq!(tchebyshev(0, 0.3).unwrap(), 1.0);
        assert_relative_eq!(tchebyshev(3, 0.5).unwrap(), -1.0, epsilon = 1e-15);
        assert!(tchebyshev(2, 1.5).is_err());
        // generating function -ln(1 - 2wt + t²) = Σ 2t^l/l T_l(w)
        let (t, w) = (0.3f64, 0.5);
        let sum: f64 = (1..60).map(|l| 2.0 * t.powi(l) / l as f64 * tchebyshev(l as u32, w).unwrap()).sum();
        assert!((sum + (1.0 - 2.0 * w * t + t * t).ln()).abs() < 1e-10);
    }

    #[test]
    fn gegenbauer_examples() {
        assert_eq!(gegenbauer(0.7, 0, 0.2).unwrap(), 1.0);
        assert_relative_eq!(gegenbauer(0.5, 1, 0.37).unwrap(), 0.37);
        // Legendre P_2
        assert_relative_eq!(gegenbauer(0.5, 2, 0.3).unwrap(), 0.5 * (3.0 * 0.09 - 1.0), epsilon = 1e-15);
        let (t, w, a) = (0.2f64, -0.4, 1.0);
        let sum: f64 = (0..60).map(|n| t.powi(n) * gegenbauer(a, n as u32, w).unwrap()).sum();
        assert!((sum - (1.0 - 2.0 * w * t + t * t).powf(-a)).abs() < 1e-10);
        assert!(gegenbauer(0.0, 2, 0.1).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_relative_eq!(projection_kernel(3, 0, 0.2).unwrap(), 1.0 / (4.0 * PI), epsilon = 1e-15);
        let phi = 0.7f64;
        assert_relative_eq!(projection_kernel(2, 2, phi.cos()).unwrap(), (2.0 * phi).cos() / PI, epsilon = 1e-14);
        assert_relative_eq!(projection_kernel(2, 0, phi.cos()).unwrap(), 0.5 / PI);
        for d in 2..7 {
            assert_relative_eq!(harmonic_dimension(d, 0), 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(harmonic_dimension(3, 4), 9.0, epsilon = 1e-12);
        assert_relative_eq!(harmonic_dimension(4, 3), 16.0, epsilon = 1e-12);
        assert_relative_eq!(harmonic_dimension(2, 5), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_eigenvalue(3, 2), 2.5);
        assert_eq!(lambda_eigenvalue(2, 0), 0.0);
        for d in 2..6 {
            for l in 0..10 {
                let lam = lambda_eigenvalue(d, l);
                let h = d as f64 / 2.0 - 1.0;
                assert_relative_eq!(lam * lam - h * h, (l * (l + d - 2)) as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn projection_reproduces_zonal_harmonics() {
        let rule = sphere_quadrature_s2(16, 32);
        let z = [0.0, 0.0, 1.0];
        let x = [0.48, -0.6, 0.64];
        for l in 0..=5u32 {
            let f = |y: [f64; 3]| gegenbauer(0.5, l, y[2]).unwrap();
            let got = project_s2(l, f, x, &rule);
            assert!((got - gegenbauer(0.5, l, x[2]).unwrap()).abs() < 1e-12);
            // other orders are annihilated
            let other = project_s2((l + 1) % 6, f, x, &rule);
            assert!(other.abs() < 1e-12);
        }
        let _ = z;
    }

    #[test]
    fn projection_is_idempotent() {
        let rule = sphere_quadrature_s2(16, 32);
        let f = |y: [f64; 3]| (y[0] + 0.3 * y[1] * y[2]).powi(3) + y[2];
        let x = [0.6, 0.0, 0.8];
        for l in 0..=5u32 {
            let once = |p: [f64; 3]| project_s2(l, f, p, &rule);
            let twice = project_s2(l, once, x, &rule);
            assert!((twice - once(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_matches_abel_sum() {
        for d in [2u32, 3, 4, 5] {
            for theta in [0.4, PI / 2.0, 2.5, -1.0, -2.9, 3.0 * PI / 2.0, 7.0, -8.0] {
                for eps in [1e-3, 0.05, 0.7] {
                    let t = (-eps as f64).exp();
                    for w in [-0.95, -0.3, 0.0, 0.45, 0.99] {
                        let a = wave_kernel_abel_sum(d, theta, t, w).unwrap() * t.powf(d as f64 / 2.0 - 1.0);
                        let b = wave_kernel_closed(d, theta, w, eps).unwrap();
                        assert!((a - b).norm() <= 1e-10 * a.norm(), "d={d} θ={theta} ε={eps} w={w}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn abel_sum_matches_series() {
        let spec = GridSpec::new(300).with_nodes(41).with_smoothing(Smoothing::Abel(0.9));
        for d in [2u32, 3, 4] {
            let k = wave_kernel_series(d, 1.1, &spec).unwrap();
            for (w, v) in k.w.iter().zip(&k.values) {
                let exact = wave_kernel_abel_sum(d, 1.1, 0.9, *w).unwrap();
                assert!((v - exact).norm() < 1e-10 * exact.norm().max(1.0));
            }
        }
    }

    #[test]
    fn closed_form_conjugation() {
        for d in [2u32, 3] {
            let a = wave_kernel_closed(d, 1.2, 0.1, 1e-9).unwrap();
            let b = wave_kernel_closed(d, -1.2, 0.1, 1e-9).unwrap();
            assert!((a - b.conj()).norm() < 1e-8 * a.norm());
        }
        assert!(matches!(wave_kernel_closed(3, PI, 0.1, 1e-3), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn special_angles() {
        assert_eq!(wave_kernel_special(3, 2.0 * PI).unwrap(), SpecialKernel::Identity(Complex64::from_polar(1.0, PI)));
        match wave_kernel_special(3, PI).unwrap() {
            SpecialKernel::Parity(c) => assert!((c - Complex64::new(0.0, 1.0)).norm() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(wave_kernel_special(3, 1.0).is_err());
    }

    #[test]
    fn smoothed_series_concentrates_at_special_angles() {
        let spec = GridSpec::new(200);
        let k = wave_kernel_series(4, 2.0 * PI, &spec).unwrap();
        assert!(k.mass_fraction_near(1.0, 0.05) > 0.9);
        let k = wave_kernel_series(3, PI, &spec).unwrap();
        assert!(k.mass_fraction_near(-1.0, 0.05) > 0.9);
        // phase e^{iπ/2} at the concentration point
        let v = k.values[0];
        assert!((v / v.norm() - Complex64::new(0.0, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn parseval_and_coefficient_recovery() {
        let spec = GridSpec::new(40).with_smoothing(Smoothing::None).with_nodes(201);
        for d in [2u32, 3, 4, 5] {
            let coeffs: Vec<Complex64> = (0..=40).map(|l| Complex64::from_polar(1.0, 0.37 * (l * l) as f64)).collect();
            let k = synthesize(d, &coeffs, &spec).unwrap();
            assert_relative_eq!(k.l2_mass(), k.parseval_mass(), max_relative = 1e-8);
            if d == 3 {
                for l in [0u32, 7, 40] {
                    assert!((k.recover_coefficient(l).norm() - 1.0).abs() < 1e-8);
                }
            }
        }
        let spec = GridSpec::new(60);
        let coeffs: Vec<Complex64> = (0..=60).map(|l| Complex64::from_polar(1.0, (l as f64).sqrt())).collect();
        let k = synthesize(3, &coeffs, &spec).unwrap();
        assert_relative_eq!(k.l2_mass(), k.parseval_mass(), max_relative = 1e-6);
    }

    #[test]
    fn full_turn_is_a_global_phase() {
        let spec = GridSpec::new(50).with_nodes(21);
        for d in [2u32, 3] {
            let a = wave_kernel_series(d, 0.8, &spec).unwrap();
            let b = wave_kernel_series(d, 0.8 + 2.0 * PI, &spec).unwrap();
            let f = Complex64::from_polar(1.0, 2.0 * PI * (d as f64 / 2.0 - 1.0));
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                assert!((x * f - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn locator_examples() {
        let spec = GridSpec::new(200);
        let k = wave_kernel_series(3, -PI, &spec).unwrap();
        let p = singularity_locator(&k).unwrap();
        assert!((p.w_peak + 1.0).abs() <= k.cell_width_at(-1.0));
        let id = s0_kernel(3, &[0.0; 201], &spec).unwrap();
        assert_eq!(singularity_locator(&id).unwrap().w_peak, 1.0);
        let k = wave_kernel_series(3, cone_angle(1.2), &spec).unwrap();
        let p = singularity_locator(&k).unwrap();
        assert!(p.w_peak.abs() <= k.cell_width_at(0.0));
        // flat kernel
        let flat = synthesize(3, &[Complex64::new(1.0, 0.0)], &GridSpec::new(0).with_smoothing(Smoothing::None)).unwrap();
        assert!(singularity_locator(&flat).is_err());
    }

    #[test]
    fn missing_coefficients_rejected() {
        assert!(matches!(s0_kernel(3, &[0.0; 10], &GridSpec::new(20)), Err(Error::Input(_))));
    }

    #[test]
    fn scattering_constant_example() {
        let m = PotentialModel::new(0.5, 1.0, 3).unwrap();
        assert_relative_eq!(scattering_constant(&m).unwrap(), 4.0, epsilon = 1e-15);
        // consistency with the linear law: c₀ = 2·(c/2) + (μπ/(2-μ))(d/2-1)
        for (mu, d) in [(1.0, 3u32), (0.6, 2), (1.4, 5)] {
            let m = PotentialModel::new(0.8, mu, d).unwrap().with_correction(0.3, 1.5).unwrap();
            let c_half = crate::radial::asymptote_intercept(&m, d).unwrap();
            let lhs = scattering_constant(&m).unwrap();
            assert_relative_eq!(lhs, 2.0 * c_half - cone_angle(mu) * (d as f64 / 2.0 - 1.0), epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn gegenbauer_generating_function(alpha in 0.1f64..3.0, w in -1.0f64..1.0, t in -0.5f64..0.5) {
            let sum: f64 = (0..=50).map(|n| t.powi(n) * gegenbauer(alpha, n as u32, w).unwrap()).sum();
            let exact = (1.0 - 2.0 * w * t + t * t).powf(-alpha);
            // tail bound: |C_n^α| ≤ C_n^α(1) grows polynomially, t^51 is tiny
            prop_assert!((sum - exact).abs() < 1e-9 * exact.abs().max(1.0));
        }

        #[test]
        fn tchebyshev_is_cosine(phi in 0.0f64..PI, n in 0u32..80) {
            prop_assert!((tchebyshev(n, phi.cos()).unwrap() - (n as f64 * phi).cos()).abs() < 1e-11);
        }

        #[test]
        fn locator_ignores_global_phase(a in -PI..PI) {
            let spec = GridSpec::new(60).with_nodes(301);
            let base = wave_kernel_series(3, 2.0, &spec).unwrap();
            let rotated: Vec<Complex64> = base.coefficients.iter().map(|c| c * Complex64::from_polar(1.0, a)).collect();
            let k = synthesize(3, &rotated, &spec).unwrap();
            let p = singularity_locator(&base).unwrap();
            let q = singularity_locator(&k).unwrap();
            prop_assert!((p.w_peak - q.w_peak).abs() < 1e-12);
        }
    }
}
