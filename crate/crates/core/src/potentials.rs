//! The admissible radial potential family and the scalar functions derived
//! from it.
//!
//! The leading part is `V₁(r) = -γ r^(-μ)` for `r ≥ 1`, optionally switched
//! off smoothly on `r < 1`. An optional correction `V₂(r) = -β r^(-μ-ε)`
//! lives on `r ≥ 1` and is switched off below `r = 1/2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::{brent, integrate_power_left, sign_change_brackets, QuadOptions};

/// Inner edge of the interior switch: `V₁ ≡ 0` on `r ≤ CUT_LO` in
/// [`CutoffMode::CutInterior`].
pub const CUT_LO: f64 = 0.25;
/// `V₁` is exactly homogeneous from here outwards.
pub const CUT_HI: f64 = 1.0;
/// `V₂ ≡ 0` below this radius.
pub const V2_LO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CutoffMode {
    /// `V₁` is smoothly switched off on `[CUT_LO, CUT_HI]` and vanishes near 0.
    #[default]
    CutInterior,
    /// `V₁ = -γ r^(-μ)` all the way down to `r = 0`.
    PureHomogeneous,
}

impl fmt::Display for CutoffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffMode::CutInterior => write!(f, "cut-interior"),
            CutoffMode::PureHomogeneous => write!(f, "pure-homogeneous"),
        }
    }
}

impl FromStr for CutoffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "cut-interior" | "cutinterior" | "cut" => Ok(CutoffMode::CutInterior),
            "pure-homogeneous" | "purehomogeneous" | "pure" => Ok(CutoffMode::PureHomogeneous),
            other => Err(Error::Input(format!(
                "unknown cutoff mode {other:?} (expected cut-interior or pure-homogeneous)"
            ))),
        }
    }
}

/// `V(r) = V₁(r) + V₂(r)` in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialModel {
    pub gamma: f64,
    pub mu: f64,
    /// Reference radius `R₀ ≥ 1` where phase integrals start.
    pub reference_radius: f64,
    pub cutoff: CutoffMode,
    pub v2_beta: f64,
    pub v2_eps: f64,
    pub dim: u32,
}

impl PotentialModel {
    /// Homogeneous model with `R₀ = 1`, interior cutoff and no correction.
    pub fn new(gamma: f64, mu: f64, dim: u32) -> Result<Self> {
        Self {
            gamma,
            mu,
            reference_radius: 1.0,
            cutoff: CutoffMode::CutInterior,
            v2_beta: 0.0,
            v2_eps: 1.0,
            dim,
        }
        .validated()
    }

    pub fn with_cutoff(mut self, cutoff: CutoffMode) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_reference_radius(mut self, r0: f64) -> Result<Self> {
        self.reference_radius = r0;
        self.validated()
    }

    pub fn with_correction(mut self, beta: f64, eps: f64) -> Result<Self> {
        self.v2_beta = beta;
        self.v2_eps = eps;
        self.validated()
    }

    pub fn with_dim(mut self, dim: u32) -> Result<Self> {
        self.dim = dim;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if !(self.mu > 0.0 && self.mu < 2.0) {
            return bad(format!("mu must lie in (0,2), got {}", self.mu));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.reference_radius >= 1.0) || !self.reference_radius.is_finite() {
            return bad(format!("R0 must be >= 1, got {}", self.reference_radius));
        }
        if self.dim < 2 {
            return bad(format!("dim must be >= 2, got {}", self.dim));
        }
        if !self.v2_beta.is_finite() {
            return bad("v2_beta must be finite".into());
        }
        if !(self.v2_eps > 0.0) || !self.v2_eps.is_finite() {
            return bad(format!("v2_eps2 must be positive, got {}", self.v2_eps));
        }
        // V < 0 beyond R₀: with β < 0 the weakest point is r = R₀.
        if self.v2_beta < 0.0 && self.gamma + self.v2_beta * self.reference_radius.powf(-self.v2_eps) <= 0.0 {
            return bad("correction term makes V non-negative beyond R0".into());
        }
        Ok(())
    }

    pub fn has_correction(&self) -> bool {
        self.v2_beta != 0.0
    }

    /// True when `V = -γ r^(-μ)` exactly for every `r > 0`.
    pub fn is_exactly_homogeneous(&self) -> bool {
        self.cutoff == CutoffMode::PureHomogeneous && !self.has_correction()
    }

    /// The decay condition under which the correction's phase integrals
    /// converge: `ε₂ > 1 - μ/2`.
    pub fn check_correction_decay(&self) -> Result<()> {
        if self.has_correction() && self.v2_eps <= 1.0 - 0.5 * self.mu {
            return Err(Error::InvalidModel(format!(
                "correction decays too slowly: need v2_eps2 > 1 - mu/2 = {}, got {}",
                1.0 - 0.5 * self.mu,
                self.v2_eps
            )));
        }
        Ok(())
    }

    fn interior_switch(&self, r: f64) -> (f64, f64) {
        match self.cutoff {
            CutoffMode::PureHomogeneous => (1.0, 0.0),
            CutoffMode::CutInterior => {
                let w = CUT_HI - CUT_LO;
                let (s, ds) = smooth_step((r - CUT_LO) / w);
                (s, ds / w)
            }
        }
    }

    /// Leading part `V₁(r)`.
    pub fn v1(&self, r: f64) -> f64 {
        let (s, _) = self.interior_switch(r);
        if s == 0.0 {
            return 0.0;
        }
        -self.gamma * r.powf(-self.mu) * s
    }

    /// Correction `V₂(r)`.
    pub fn v2(&self, r: f64) -> f64 {
        if !self.has_correction() {
            return 0.0;
        }
        let w = CUT_HI - V2_LO;
        let (s, _) = smooth_step((r - V2_LO) / w);
        if s == 0.0 {
            return 0.0;
        }
        -self.v2_beta * r.powf(-self.mu - self.v2_eps) * s
    }

    /// `V(r)` without argument checks.
    pub fn v(&self, r: f64) -> f64 {
        self.v1(r) + self.v2(r)
    }

    /// `V'(r)`, analytic everywhere.
    pub fn v_prime(&self, r: f64) -> f64 {
        let mu = self.mu;
        let (s, ds) = self.interior_switch(r);
        let mut dv = if s == 0.0 && ds == 0.0 {
            0.0
        } else {
            self.gamma * mu * r.powf(-mu - 1.0) * s - self.gamma * r.powf(-mu) * ds
        };
        if self.has_correction() {
            let w = CUT_HI - V2_LO;
            let (s2, ds2) = smooth_step((r - V2_LO) / w);
            let p = mu + self.v2_eps;
            if s2 != 0.0 || ds2 != 0.0 {
                dv += self.v2_beta * p * r.powf(-p - 1.0) * s2 - self.v2_beta * r.powf(-p) * ds2 / w;
            }
        }
        dv
    }

    /// `V''(r)`: analytic on `r ≥ 1`, central differences of `V'` inside the
    /// switching shells.
    pub fn v_second(&self, r: f64) -> f64 {
        if r >= CUT_HI {
            let mu = self.mu;
            let mut d2 = -self.gamma * mu * (mu + 1.0) * r.powf(-mu - 2.0);
            if self.has_correction() {
                let p = mu + self.v2_eps;
                d2 -= self.v2_beta * p * (p + 1.0) * r.powf(-p - 2.0);
            }
            d2
        } else {
            let h = 1e-5 * r;
            (self.v_prime(r + h) - self.v_prime(r - h)) / (2.0 * h)
        }
    }

    /// Checked `V(r)`.
    pub fn eval_potential(&self, r: f64) -> Result<f64> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::Domain(format!("potential needs finite r > 0, got {r}")));
        }
        Ok(self.v(r))
    }

    /// Local momentum `g(r) = √(2λ - 2V₁(r))`.
    pub fn eval_g(&self, r: f64, lambda: f64) -> Result<f64> {
        if !r.is_finite() || r <= 0.0 || !(lambda >= 0.0) {
            return Err(Error::Domain(format!("g needs r > 0 and lambda >= 0, got r = {r}, lambda = {lambda}")));
        }
        let arg = 2.0 * lambda - 2.0 * self.v1(r);
        if arg <= 0.0 {
            return Err(Error::Degenerate(format!(
                "g(r) vanishes at r = {r} (lambda = {lambda}); the potential is switched off there"
            )));
        }
        Ok(arg.sqrt())
    }

    /// `h(r) = (∫_r^∞ r'^(-2) g(r')^(-1) dr')^(-1)`, computed in `s = 1/r'`.
    pub fn eval_h(&self, r: f64, lambda: f64) -> Result<f64> {
        if !(r >= CUT_HI) || !r.is_finite() {
            return Err(Error::Precondition(format!("h needs r >= 1, got {r}")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
        }
        let gamma = self.gamma;
        let mu = self.mu;
        // g(1/s)^(-1) ~ s^(-μ/2) at s → 0 when λ = 0; the power map absorbs it.
        let integrand = |s: f64| {
            let arg = 2.0 * lambda + 2.0 * gamma * s.powf(mu);
            1.0 / arg.sqrt()
        };
        let m = 2.0 / (2.0 - mu);
        let res = integrate_power_left(integrand, 0.0, 1.0 / r, m, QuadOptions::with_tol(0.0, 1e-13))?;
        Ok(1.0 / res.value)
    }

    /// `h(r)` in closed form for `λ = 0`: `(1 - μ/2)·√(2γ)·r^(1-μ/2)`.
    pub fn h_zero_energy_closed(&self, r: f64) -> f64 {
        (1.0 - 0.5 * self.mu) * (2.0 * self.gamma).sqrt() * r.powf(1.0 - 0.5 * self.mu)
    }

    /// `√(2γ)/(1-μ/2)`, the prefactor of the zero-energy radial action
    /// `∫ √(-2V₁) dr` on the homogeneous region.
    pub fn action_prefactor(&self) -> f64 {
        (2.0 * self.gamma).sqrt() / (1.0 - 0.5 * self.mu)
    }

    /// `∫_a^b √(-2V₁(r)) dr` for `1 ≤ a ≤ b` (closed form).
    pub fn homogeneous_action(&self, a: f64, b: f64) -> f64 {
        let p = 1.0 - 0.5 * self.mu;
        self.action_prefactor() * (b.powf(p) - a.powf(p))
    }
}

impl fmt::Display for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gamma={} mu={} R0={} cutoff_mode={} v2_beta={} v2_eps2={} dim={}",
            self.gamma, self.mu, self.reference_radius, self.cutoff, self.v2_beta, self.v2_eps, self.dim
        )
    }
}

/// C^∞ switch from 0 (x ≤ 0) to 1 (x ≥ 1) built from `exp(-1/x)`; returns
/// the value and its derivative.
pub fn smooth_step(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    let den = a + b;
    let da = a / (x * x);
    let db = b / ((1.0 - x) * (1.0 - x));
    (a / den, (da * b + a * db) / (den * den))
}

/// One partial wave `(d, l)` of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub model: PotentialModel,
    pub l: u32,
    /// Effective index `k = l + (d - 3)/2`.
    pub k: f64,
    /// Zero of the effective potential, `0` when there is none.
    pub r0: f64,
}

impl Channel {
    /// Centrifugal coefficient `k(k+1) = (l + d/2 - 1)² - 1/4`.
    pub fn centrifugal(&self) -> f64 {
        self.k * (self.k + 1.0)
    }

    pub fn dim(&self) -> u32 {
        self.model.dim
    }

    pub fn has_turning_point(&self) -> bool {
        self.r0 > 0.0
    }

    /// Leading power of the regular solution, `l + (d-1)/2 = k + 1`.
    pub fn regular_exponent(&self) -> f64 {
        self.k + 1.0
    }
}

/// `k = l + (d - 3)/2`.
pub fn effective_index(l: u32, d: u32) -> f64 {
    l as f64 + (d as f64 - 3.0) / 2.0
}

/// `V_k(r) = 2V(r) + k(k+1)/r²`.
pub fn effective_potential(channel: &Channel, r: f64) -> f64 {
    2.0 * channel.model.v(r) + channel.centrifugal() / (r * r)
}

/// `V_k'(r)`.
pub fn effective_potential_prime(channel: &Channel, r: f64) -> f64 {
    2.0 * channel.model.v_prime(r) - 2.0 * channel.centrifugal() / (r * r * r)
}

/// `V_k''(r)`.
pub fn effective_potential_second(channel: &Channel, r: f64) -> f64 {
    2.0 * channel.model.v_second(r) + 6.0 * channel.centrifugal() / (r * r * r * r)
}

/// Closed-form zero `(k(k+1)/2γ)^(1/(2-μ))` of `-2γ r^(-μ) + k(k+1)/r²`.
pub fn homogeneous_turning_point(gamma: f64, mu: f64, centrifugal: f64) -> f64 {
    (centrifugal / (2.0 * gamma)).powf(1.0 / (2.0 - mu))
}

/// Build the channel `(d, l)` and locate its turning point.
pub fn turning_point(model: &PotentialModel, l: u32, d: u32) -> Result<Channel> {
    let model = model.with_dim(d)?;
    let k = effective_index(l, d);
    let mut ch = Channel { model, l, k, r0: 0.0 };
    let cc = ch.centrifugal();
    if cc <= 0.0 {
        return Ok(ch);
    }
    let guess = homogeneous_turning_point(model.gamma, model.mu, cc);
    if model.is_exactly_homogeneous() {
        ch.r0 = guess;
        return Ok(ch);
    }
    let lo = (1e-3 * guess).min(1e-3);
    let hi = (1e3 * guess).max(1e3);
    let f = |r: f64| effective_potential(&ch, r);
    let brackets = sign_change_brackets(f, lo, hi, 4000);
    match brackets.as_slice() {
        [] => Err(Error::Root(format!(
            "effective potential has no sign change on [{lo}, {hi}]"
        ))),
        [(a, b)] => {
            ch.r0 = brent(f, *a, *b, 1e-14, 200)?;
            Ok(ch)
        }
        many => Err(Error::AmbiguousTurningPoint {
            brackets: many.to_vec(),
        }),
    }
}
