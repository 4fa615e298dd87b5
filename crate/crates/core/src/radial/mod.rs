//! Zero-energy partial-wave phase shifts.
//!
//! The oracle path integrates the regular solution and matches it to the
//! phase `Φ` of the WKB ansatz `u = ρ q^(-1/2) sin Φ`, `q = √(-V_k)`; the
//! fast path evaluates the semiclassical quadratures in closed form.

mod solution;

use std::f64::consts::PI;
use std::fmt;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{integrate, integrate_power_left, integrate_tail, QuadOptions};
use crate::potentials::{effective_potential, turning_point, Channel, PotentialModel};

pub use solution::{
    extract_local_phase, launch, regular_solution, LaunchState, regular_solution_with, LaunchOptions, RadialSample,
    RegularSolution,
};
use solution::{integrate_regular, local_momentum, wkb_defect, PhaseIntegrator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseMethod {
    OdeOracle,
    WkbClosedForm,
}

impl fmt::Display for PhaseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseMethod::OdeOracle => "ode",
            PhaseMethod::WkbClosedForm => "wkb",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftResult {
    pub l: u32,
    pub k: f64,
    /// Unwound phase shift, not reduced mod π.
    pub sigma: f64,
    /// Matching constant `D`.
    pub d: f64,
    /// Largest matching radius used.
    pub r_match: f64,
    /// Fitted power-law decay exponent of the ladder differences.
    pub residual_decay: f64,
    pub uncertainty: f64,
    pub method: PhaseMethod,
    /// `D` at each rung of the matching ladder.
    pub ladder: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShiftOptions {
    /// Local tolerance of the ODE integration.
    pub tol: f64,
    /// Required difference between the last two ladder rungs.
    pub ladder_tol: f64,
    pub min_rungs: usize,
    pub max_rungs: usize,
}

impl Default for PhaseShiftOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            ladder_tol: 1e-6,
            min_rungs: 5,
            max_rungs: 16,
        }
    }
}

impl PhaseShiftOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions::with_tol(1e-14, 1e-12)
}

/// `∫_a^b √(-2V₁)`, closed form where `V₁` is homogeneous.
fn leading_action(model: &PotentialModel, a: f64, b: f64) -> Result<f64> {
    if a >= 1.0 || model.cutoff == crate::potentials::CutoffMode::PureHomogeneous {
        return Ok(model.homogeneous_action(a, b));
    }
    let f = |r: f64| (-2.0 * model.v1(r)).max(0.0).sqrt();
    Ok(integrate(f, a, b, quad_opts())?.value)
}

/// `∫_{R0}^∞ (√(-2V₁) - √(-2V))`, zero when there is no correction term.
pub fn correction_integral(model: &PotentialModel) -> Result<f64> {
    if !model.has_correction() {
        return Ok(0.0);
    }
    model.check_correction_decay()?;
    let f = |r: f64| {
        let a = -2.0 * model.v1(r);
        let b = -2.0 * model.v(r);
        (a - b) / (a.sqrt() + b.sqrt())
    };
    let decay = 0.5 * model.mu + model.v2_eps;
    Ok(integrate_tail(f, model.reference_radius, decay, QuadOptions::with_tol(1e-13, 1e-10))?.value)
}

/// `c/2` of the linear law `σ_l(0) = -(μπ/(2(2-μ)))·l + c/2 + o(1)`.
pub fn asymptote_intercept(model: &PotentialModel, d: u32) -> Result<f64> {
    let mu = model.mu;
    Ok(-PI * mu * (d as f64 - 2.0) / (4.0 * (2.0 - mu))
        + model.action_prefactor() * model.reference_radius.powf(1.0 - 0.5 * mu)
        + correction_integral(model)?)
}

/// Slope `-μπ/(2(2-μ))` of the linear law.
pub fn asymptote_slope(mu: f64) -> f64 {
    -mu * PI / (2.0 * (2.0 - mu))
}

fn maslov_offset(channel: &Channel) -> f64 {
    (channel.dim() as f64 - 3.0 + 2.0 * channel.l as f64) * PI / 4.0
}

/// Estimate of `D` from the phase state at `r`, with the non-oscillating
/// tails integrated and the leading oscillating tail removed by parts.
fn matching_constant(channel: &Channel, r: f64, phase: f64) -> Result<f64> {
    let model = &channel.model;
    let cc = channel.centrifugal();
    let mu = model.mu;
    let action_tail = |x: f64| {
        let q2 = -effective_potential(channel, x);
        let w2 = -2.0 * model.v1(x);
        // q² - w² = -2V₂ - k(k+1)/x²
        let num = -2.0 * model.v2(x) - cc / (x * x);
        if num == 0.0 {
            0.0
        } else {
            num / (q2.sqrt() + w2.sqrt())
        }
    };
    let mut decay = 2.0 - 0.5 * mu;
    if model.has_correction() {
        decay = decay.min(0.5 * mu + model.v2_eps);
    }
    let t1 = integrate_tail(action_tail, r, decay, quad_opts())?.value;
    let defect = |x: f64| {
        let (q, _) = local_momentum(channel, x).unwrap_or((f64::NAN, 0.0));
        wkb_defect(channel, x) / (2.0 * q)
    };
    let t2 = integrate_tail(defect, r, 2.0 - 0.5 * mu, quad_opts())?.value;
    // second-order drift of the averaged phase
    let drift = |x: f64| {
        let q = (-effective_potential(channel, x)).sqrt();
        let e = wkb_defect(channel, x);
        e * e / (8.0 * q * q * q)
    };
    let t4 = integrate_tail(drift, r, 4.0 - 1.5 * mu, quad_opts())?.value;
    // ∫_r^∞ (η/2q) cos 2Φ, integrated by parts twice with Φ' ≈ q
    let (q, _) = local_momentum(channel, r)?;
    let ratio = |x: f64| wkb_defect(channel, x) / (-4.0 * effective_potential(channel, x));
    let h = 1e-4 * r;
    let dratio = (ratio(r + h) - ratio(r - h)) / (2.0 * h);
    let (s2, c2) = (2.0 * phase).sin_cos();
    let t3 = ratio(r) * s2 + dratio * c2 / (2.0 * q);
    Ok(phase - leading_action(model, model.reference_radius, r)? + t1 - t2 - t3 - t4)
}

/// Richardson extrapolation of a geometric ladder. Returns
/// `(limit, uncertainty, decay exponent)`.
fn extrapolate(ladder: &[f64]) -> (f64, f64, f64) {
    let n = ladder.len();
    let last = ladder[n - 1];
    if n < 3 {
        let unc = if n == 2 { (last - ladder[0]).abs() } else { f64::INFINITY };
        return (last, unc, 0.0);
    }
    let d1 = ladder[n - 1] - ladder[n - 2];
    let d0 = ladder[n - 2] - ladder[n - 3];
    let floor = 1e-14 * last.abs().max(1.0);
    let unc = d1.abs().max(floor);
    let rho = d1 / d0;
    if d0 != 0.0 && rho > 0.0 && rho < 0.9 {
        (last + d1 * rho / (1.0 - rho), unc, -rho.log2())
    } else {
        (last, unc, 0.0)
    }
}

/// Phase shift `σ_l(0)` of the regular solution.
pub fn phase_shift(channel: &Channel, tol: f64) -> Result<PhaseShiftResult> {
    phase_shift_with(channel, &PhaseShiftOptions::with_tol(tol))
}

pub fn phase_shift_with(channel: &Channel, opts: &PhaseShiftOptions) -> Result<PhaseShiftResult> {
    let model = &channel.model;
    model.validate()?;
    model.check_correction_decay()?;
    let r0_ref = model.reference_radius;
    let r_handover = (1.5 * channel.r0).max(r0_ref).max(1.0);
    let (handover, _, _) = integrate_regular(
        channel,
        r_handover,
        LaunchOptions {
            r_start: None,
            tol: opts.tol,
        },
        |_| {},
    )?;
    let mut prufer = PhaseIntegrator::from_handover(channel, &handover, opts.tol)?;

    let mut r = r0_ref;
    let start = (16.0 * r0_ref).max(4.0 * channel.r0);
    while r < start {
        r *= 2.0;
    }
    let mut ladder = Vec::new();
    let mut radii = Vec::new();
    loop {
        prufer.advance(r)?;
        ladder.push(matching_constant(channel, r, prufer.phase)?);
        radii.push(r);
        let (_, unc, _) = extrapolate(&ladder);
        if ladder.len() >= opts.min_rungs && unc <= opts.ladder_tol {
            break;
        }
        if ladder.len() >= opts.max_rungs {
            return Err(Error::Convergence {
                what: format!("matching constant D for l = {}", channel.l),
                ladder,
            });
        }
        r *= 2.0;
    }
    let (d, uncertainty, decay) = extrapolate(&ladder);
    Ok(PhaseShiftResult {
        l: channel.l,
        k: channel.k,
        sigma: d + correction_integral(model)? + maslov_offset(channel),
        d,
        r_match: *radii.last().unwrap(),
        residual_decay: decay,
        uncertainty,
        method: PhaseMethod::OdeOracle,
        ladder,
    })
}

/// Semiclassical phase shift
/// `∫_{r₀}^∞(√(-V_k) - √(-2V₁)) + ∫_{R0}^∞(√(-2V₁) - √(-2V)) - ∫_{R0}^{r₀}√(-2V₁) + (k+½)π/2`,
/// in closed form for the exactly homogeneous potential.
pub fn wkb_phase_shift(channel: &Channel) -> Result<PhaseShiftResult> {
    if channel.model.is_exactly_homogeneous() {
        wkb_from_sigma(channel, wkb_closed_form(channel)?)
    } else {
        wkb_phase_shift_quadrature(channel)
    }
}

fn wkb_closed_form(channel: &Channel) -> Result<f64> {
    if !(channel.k > 0.0) {
        return Err(Error::NotApplicable(format!("WKB phase shift needs k > 0, got k = {}", channel.k)));
    }
    let m = &channel.model;
    let mu = m.mu;
    Ok(-channel.centrifugal().sqrt() * PI / (2.0 - mu)
        + (channel.k + 0.5) * PI / 2.0
        + m.action_prefactor() * m.reference_radius.powf(1.0 - 0.5 * mu))
}

fn wkb_from_sigma(channel: &Channel, sigma: f64) -> Result<PhaseShiftResult> {
    let corr = correction_integral(&channel.model)?;
    Ok(PhaseShiftResult {
        l: channel.l,
        k: channel.k,
        sigma: sigma + corr,
        d: sigma - maslov_offset(channel),
        r_match: channel.r0,
        residual_decay: 0.0,
        uncertainty: 0.0,
        method: PhaseMethod::WkbClosedForm,
        ladder: Vec::new(),
    })
}

/// [`wkb_phase_shift`] by quadrature, for any admissible model.
pub fn wkb_phase_shift_quadrature(channel: &Channel) -> Result<PhaseShiftResult> {
    if !(channel.k > 0.0) || !channel.has_turning_point() {
        return Err(Error::NotApplicable(format!("WKB phase shift needs k > 0, got k = {}", channel.k)));
    }
    let model = &channel.model;
    model.check_correction_decay()?;
    let r0 = channel.r0;
    let cc = channel.centrifugal();
    let diff = |x: f64| {
        let q2 = (-effective_potential(channel, x)).max(0.0);
        let w2 = -2.0 * model.v1(x);
        (q2 - w2) / (q2.sqrt() + w2.sqrt())
    };
    let near = integrate_power_left(diff, r0, 2.0 * r0, 2.0, quad_opts())?.value;
    let tail_diff = |x: f64| {
        let q2 = -effective_potential(channel, x);
        let w2 = -2.0 * model.v1(x);
        (-2.0 * model.v2(x) - cc / (x * x)) / (q2.sqrt() + w2.sqrt())
    };
    let mut decay = 2.0 - 0.5 * model.mu;
    if model.has_correction() {
        decay = decay.min(0.5 * model.mu + model.v2_eps);
    }
    let far = integrate_tail(tail_diff, 2.0 * r0, decay, quad_opts())?.value;
    let inner = leading_action_signed(model, model.reference_radius, r0)?;
    wkb_from_sigma(channel, near + far - inner + (channel.k + 0.5) * PI / 2.0)
}

fn leading_action_signed(model: &PotentialModel, a: f64, b: f64) -> Result<f64> {
    if b >= a {
        leading_action(model, a, b)
    } else {
        Ok(-leading_action(model, b, a)?)
    }
}

/// `∫₁^∞ (√(r^(-μ) - r^(-2)) - √(r^(-μ))) dr`, which equals `(2-π)/(2-μ)`.
pub fn end_polar_integral(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 2.0) {
        return Err(Error::Domain(format!("mu must lie in (0,2), got {mu}")));
    }
    let f = |r: f64| {
        let a = r.powf(-mu);
        let b = r.powi(-2);
        -b / ((a - b).max(0.0).sqrt() + a.sqrt())
    };
    let near = integrate_power_left(f, 1.0, 2.0, 2.0, quad_opts())?.value;
    let far = integrate_tail(f, 2.0, 2.0 - 0.5 * mu, quad_opts())?.value;
    Ok(near + far)
}

/// Phase shifts for a list of `l`, computed in parallel; the output order
/// follows `ls`.
pub fn phase_shift_sweep(
    model: &PotentialModel,
    d: u32,
    ls: &[u32],
    opts: &PhaseShiftOptions,
) -> Result<Vec<PhaseShiftResult>> {
    ls.par_iter()
        .map(|&l| phase_shift_with(&turning_point(model, l, d)?, opts))
        .collect()
}

/// `σ_l(0) - (slope·l + c/2)` for each `l` of the range.
pub fn asymptote_residual(
    model: &PotentialModel,
    d: u32,
    l_range: RangeInclusive<u32>,
    opts: &PhaseShiftOptions,
) -> Result<Vec<(u32, f64)>> {
    let ls: Vec<u32> = l_range.collect();
    let shifts = phase_shift_sweep(model, d, &ls, opts)?;
    let c_half = asymptote_intercept(model, d)?;
    let slope = asymptote_slope(model.mu);
    Ok(shifts
        .iter()
        .map(|s| (s.l, s.sigma - slope * s.l as f64 - c_half))
        .collect())
}

/// Fit of `u q^(1/2) ≈ A sin(∫_{r₀}^r q + π/4 + δ)` over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Main1Fit {
    pub delta: f64,
    pub amplitude: f64,
    /// RMS fit residual relative to `amplitude`.
    pub rms: f64,
    pub samples: usize,
}

/// Fits the phase offset `δ_k` of the regular solution against the
/// turning-point WKB form over `window`.
pub fn prop_main1_residual(channel: &Channel, window: (f64, f64), tol: f64) -> Result<Main1Fit> {
    let (lo, hi) = window;
    if !channel.has_turning_point() || !(lo > channel.r0) || !(hi > lo) {
        return Err(Error::Precondition(format!(
            "window [{lo}, {hi}] must lie beyond the turning point r0 = {}",
            channel.r0
        )));
    }
    let mut samples = Vec::new();
    integrate_regular(channel, hi, LaunchOptions { r_start: None, tol }, |s| {
        if s.r >= lo {
            samples.push(*s);
        }
    })?;
    if samples.len() < 8 {
        return Err(Error::Degenerate(format!("only {} samples in the fit window", samples.len())));
    }
    let reference = samples[0].log_scale;
    let q_of = |x: f64| (-effective_potential(channel, x)).max(0.0).sqrt();
    let mut action = integrate_power_left(q_of, channel.r0, samples[0].r, 2.0, quad_opts())?.value;
    let mut prev = samples[0].r;
    let (mut sss, mut scc, mut ssc, mut sys, mut syc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::with_capacity(samples.len());
    for s in &samples {
        if s.r > prev {
            action += integrate(q_of, prev, s.r, QuadOptions::with_tol(1e-13, 1e-12))?.value;
            prev = s.r;
        }
        let y = s.u_at_scale(reference) * q_of(s.r).sqrt();
        let (sn, cs) = (action + PI / 4.0).sin_cos();
        sss += sn * sn;
        scc += cs * cs;
        ssc += sn * cs;
        sys += y * sn;
        syc += y * cs;
        rows.push((y, sn, cs));
    }
    let det = sss * scc - ssc * ssc;
    if !(det > 1e-10 * sss * scc) {
        return Err(Error::Degenerate("fit basis is degenerate over the window".into()));
    }
    let a = (sys * scc - syc * ssc) / det;
    let b = (syc * sss - sys * ssc) / det;
    let amplitude = a.hypot(b);
    let ms = rows
        .iter()
        .map(|(y, sn, cs)| (y - a * sn - b * cs).powi(2))
        .sum::<f64>()
        / rows.len() as f64;
    Ok(Main1Fit {
        delta: b.atan2(a),
        amplitude,
        rms: ms.sqrt() / amplitude,
        samples: rows.len(),
    })
}
