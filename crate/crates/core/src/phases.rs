//! Short-range and Dollard phase modifiers of a radial potential and their
//! oscillatory small-energy asymptotics.
//!
//! Both modifiers are stored as real integrals `ψ`; the operator factor is
//! `e^(iψ)` and the scattering matrices are related by `e^(-2iψ)`.
//! Only the leading part `V₁` enters.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{integrate, integrate_power_left, integrate_tail, QuadOptions};
use crate::potentials::PotentialModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `μ > 1`.
    ShortRange,
    /// `μ = 1`.
    DollardMid,
    /// `1/2 < μ < 1`.
    DollardLow,
}

impl Regime {
    pub fn of(mu: f64) -> Result<Self> {
        if mu > 1.0 && mu < 2.0 {
            Ok(Regime::ShortRange)
        } else if mu == 1.0 {
            Ok(Regime::DollardMid)
        } else if mu > 0.5 && mu < 1.0 {
            Ok(Regime::DollardLow)
        } else {
            Err(Error::Regime(format!("no phase modifier regime for mu = {mu}")))
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ShortRange => "short-range",
            Regime::DollardMid => "dollard-mid",
            Regime::DollardLow => "dollard-low",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modifier {
    ShortRange,
    Dollard,
}

impl fmt::Display for Modifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modifier::ShortRange => "sr",
            Modifier::Dollard => "dol",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseModifierResult {
    pub lambda: f64,
    pub value: f64,
    pub asymptotic_value: f64,
    pub regime: Regime,
}

impl PhaseModifierResult {
    pub fn rel_err(&self) -> f64 {
        ((self.value - self.asymptotic_value) / self.asymptotic_value).abs()
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 4000,
    }
}

/// `1 - √(1+x)` without cancellation.
fn sr_core(x: f64) -> f64 {
    -x / (1.0 + (1.0 + x).sqrt())
}

/// `1 - √(1+x) + x/2 ≥ 0` without cancellation.
fn dol_core(x: f64) -> f64 {
    0.25 * x * x / (1.0 + 0.5 * x + (1.0 + x).sqrt())
}

fn core(kind: Modifier) -> fn(f64) -> f64 {
    match kind {
        Modifier::ShortRange => sr_core,
        Modifier::Dollard => dol_core,
    }
}

/// Decay exponent of the scaled integrand at infinity.
fn tail_decay(kind: Modifier, mu: f64) -> f64 {
    match kind {
        Modifier::ShortRange => mu,
        Modifier::Dollard => 2.0 * mu,
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// `∫_{s0}^∞ core(2γ s^(-μ)) ds`, split where `2γ s^(-μ) = 1`.
fn scaled_integral(kind: Modifier, gamma: f64, mu: f64, s0: f64) -> Result<f64> {
    let f = core(kind);
    let a = 2.0 * gamma;
    let g = |s: f64| f(a * s.powf(-mu));
    let s_star = a.powf(1.0 / mu);
    let opts = quad_opts();
    let mut total = 0.0;
    if s0 < s_star {
        // log variable: the integrand spans many decades below s*
        let h = |t: f64| {
            let s = t.exp();
            g(s) * s
        };
        total += integrate(h, s0.ln(), s_star.ln(), opts)?.value;
    }
    total += integrate_tail(g, s0.max(s_star), tail_decay(kind, mu), opts)?.value;
    Ok(total)
}

fn modifier(model: &PotentialModel, lambda: f64, kind: Modifier) -> Result<f64> {
    check_lambda(lambda)?;
    if model.gamma == 0.0 {
        return Ok(0.0);
    }
    model.validate()?;
    let mu = model.mu;
    let two_l = 2.0 * lambda;
    let s0 = model.reference_radius * two_l.powf(1.0 / mu);
    Ok(two_l.powf(0.5 - 1.0 / mu) * scaled_integral(kind, model.gamma, mu, s0)?)
}

/// `ψ_sr(λ) = ∫_{R0}^∞ (√(2λ) - √(2λ - 2V₁(r))) dr`, `μ > 1`.
pub fn psi_sr(model: &PotentialModel, lambda: f64) -> Result<f64> {
    if !(model.mu > 1.0) {
        return Err(Error::Regime(format!(
            "short-range modifier needs mu > 1, got {}",
            model.mu
        )));
    }
    modifier(model, lambda, Modifier::ShortRange)
}

/// `ψ_dol(λ) = ∫_{R0}^∞ (√(2λ) - √(2λ - 2V₁(r)) - (2λ)^(-1/2) V₁(r)) dr`,
/// `1/2 < μ < 2`.
pub fn psi_dol(model: &PotentialModel, lambda: f64) -> Result<f64> {
    if !(model.mu > 0.5 && model.mu < 2.0) {
        return Err(Error::Regime(format!(
            "Dollard modifier needs 1/2 < mu < 2, got {}",
            model.mu
        )));
    }
    modifier(model, lambda, Modifier::Dollard)
}

pub fn psi(model: &PotentialModel, lambda: f64, kind: Modifier) -> Result<f64> {
    match kind {
        Modifier::ShortRange => psi_sr(model, lambda),
        Modifier::Dollard => psi_dol(model, lambda),
    }
}

/// `∫_0^∞ core(2γ s^(-μ)) ds` with the substitution `s = u^m` near 0.
fn improper_constant(kind: Modifier, gamma: f64, mu: f64) -> Result<f64> {
    let f = core(kind);
    let a = 2.0 * gamma;
    let g = |s: f64| if s <= 0.0 { 0.0 } else { f(a * s.powf(-mu)) };
    let s_star = a.powf(1.0 / mu);
    let singular = match kind {
        Modifier::ShortRange => 0.5 * mu,
        Modifier::Dollard => mu,
    };
    let m = 1.0 / (1.0 - singular);
    let opts = quad_opts();
    let head = integrate_power_left(g, 0.0, s_star, m, opts)?.value;
    let tail = integrate_tail(g, s_star, tail_decay(kind, mu), opts)?.value;
    Ok(head + tail)
}

/// Constant of the leading small-energy term of the modifier for the
/// model's regime: `∫_0^∞(1 - √(1+2γs^(-μ)))ds` (short range),
/// `C₁` (`μ = 1`) or `C_μ` (`1/2 < μ < 1`).
pub fn asymptotic_constants(model: &PotentialModel) -> Result<(Regime, f64)> {
    model.validate()?;
    let (gamma, mu) = (model.gamma, model.mu);
    let regime = Regime::of(mu)?;
    let value = match regime {
        Regime::ShortRange => improper_constant(Modifier::ShortRange, gamma, mu)?,
        Regime::DollardLow => improper_constant(Modifier::Dollard, gamma, mu)?,
        Regime::DollardMid => {
            let a = 2.0 * gamma;
            let opts = quad_opts();
            let outer = integrate_tail(|s: f64| dol_core(a / s), 1.0, 2.0, opts)?.value;
            let inner = integrate_power_left(
                |s: f64| if s <= 0.0 { 0.0 } else { sr_core(a / s) },
                0.0,
                1.0,
                2.0,
                opts,
            )?
            .value;
            outer + inner - gamma * model.reference_radius.ln()
        }
    };
    Ok((regime, value))
}

/// Leading small-energy behaviour of `ψ_sr` (`μ > 1`).
pub fn psi_sr_asymptotic(model: &PotentialModel, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let (regime, c) = asymptotic_constants(model)?;
    if regime != Regime::ShortRange {
        return Err(Error::Regime(format!("short-range modifier needs mu > 1, got {}", model.mu)));
    }
    Ok((2.0 * lambda).powf(0.5 - 1.0 / model.mu) * c)
}

/// Leading small-energy behaviour of `ψ_dol` in each regime.
pub fn psi_dol_asymptotic(model: &PotentialModel, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    model.validate()?;
    let (gamma, mu) = (model.gamma, model.mu);
    let two_l = 2.0 * lambda;
    match Regime::of(mu)? {
        Regime::DollardLow => {
            let (_, c) = asymptotic_constants(model)?;
            Ok(two_l.powf(0.5 - 1.0 / mu) * c)
        }
        Regime::DollardMid => {
            let (_, c1) = asymptotic_constants(model)?;
            Ok(two_l.powf(-0.5) * (c1 - gamma * two_l.ln()))
        }
        Regime::ShortRange => Ok(two_l.powf(-0.5) * model.reference_radius.powf(1.0 - mu) * gamma / (mu - 1.0)),
    }
}

pub fn psi_asymptotic(model: &PotentialModel, lambda: f64, kind: Modifier) -> Result<f64> {
    match kind {
        Modifier::ShortRange => psi_sr_asymptotic(model, lambda),
        Modifier::Dollard => psi_dol_asymptotic(model, lambda),
    }
}

/// `e^(-2iψ_dol(λ))`, the factor with `S_dol(λ) = factor · S(λ)`.
pub fn sdol_phase_factor(model: &PotentialModel, lambda: f64) -> Result<Complex64> {
    Ok(Complex64::from_polar(1.0, -2.0 * psi_dol(model, lambda)?))
}

/// `e^(-2iψ_sr(λ))`, the factor with `S_sr(λ) = factor · S(λ)`.
pub fn ssr_phase_factor(model: &PotentialModel, lambda: f64) -> Result<Complex64> {
    Ok(Complex64::from_polar(1.0, -2.0 * psi_sr(model, lambda)?))
}

pub fn modifier_result(model: &PotentialModel, lambda: f64, kind: Modifier) -> Result<PhaseModifierResult> {
    Ok(PhaseModifierResult {
        lambda,
        value: psi(model, lambda, kind)?,
        asymptotic_value: psi_asymptotic(model, lambda, kind)?,
        regime: Regime::of(model.mu)?,
    })
}

/// Evaluates the modifier along a ladder of energies, in input order.
pub fn modifier_ladder(model: &PotentialModel, kind: Modifier, lambdas: &[f64]) -> Result<Vec<PhaseModifierResult>> {
    lambdas
        .par_iter()
        .map(|&lambda| modifier_result(model, lambda, kind))
        .collect()
}
