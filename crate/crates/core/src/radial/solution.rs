//! The regular solution of `-u'' + V_k u = 0` and the WKB-adapted phase
//! variables used to read off its asymptotic phase.

use crate::error::{Error, Result};
use crate::numeric::{Dopri5, OdeOptions};
use crate::potentials::{
    effective_potential, effective_potential_prime, effective_potential_second, Channel, CutoffMode, CUT_LO,
};

/// Relative size of the first neglected Frobenius term at the launch point.
const SERIES_LAUNCH_SIZE: f64 = 1e-4;
/// `u` and `u'` are renormalised once they exceed this magnitude.
const RESCALE_THRESHOLD: f64 = 1e150;

/// One point of the sampled regular solution. The physical value is
/// `u·exp(log_scale)` up to one overall positive constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub log_scale: f64,
}

impl RadialSample {
    /// Value of `u` relative to the scale `reference`.
    pub fn u_at_scale(&self, reference: f64) -> f64 {
        self.u * (self.log_scale - reference).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularSolution {
    pub samples: Vec<RadialSample>,
    /// Where the solution was launched.
    pub r_start: f64,
    /// Where the forbidden-region Riccati integration handed over to `(u, u')`.
    pub r_switch: f64,
    pub steps: usize,
}

impl RegularSolution {
    pub fn last(&self) -> &RadialSample {
        self.samples.last().expect("solution has at least one sample")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaunchOptions {
    /// Launch radius; `None` picks one from the Frobenius series.
    pub r_start: Option<f64>,
    pub tol: f64,
}

impl Default for LaunchOptions {
    fn default() -> Self {
        Self {
            r_start: None,
            tol: 1e-11,
        }
    }
}

/// Launch point of the regular solution, stored as `ln u` and `w = u'/u`
/// so that high powers `r^(k+1)` do not underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaunchState {
    pub r: f64,
    pub log_u: f64,
    pub w: f64,
}

impl LaunchState {
    pub fn u(&self) -> f64 {
        self.log_u.exp()
    }

    pub fn du(&self) -> f64 {
        self.w * self.u()
    }
}

/// Launch data of the regular solution `u ~ r^(k+1)`.
///
/// With the interior cutoff `V ≡ 0` on `r ≤ CUT_LO`, so `u = r^(k+1)`
/// exactly; in the homogeneous case the two-term series in powers of
/// `r^(2-μ)` is used.
pub fn launch(channel: &Channel, r_start: Option<f64>) -> Result<LaunchState> {
    let s = channel.regular_exponent();
    let model = &channel.model;
    match model.cutoff {
        CutoffMode::CutInterior => {
            let r = r_start.unwrap_or(CUT_LO);
            if !(r > 0.0 && r <= CUT_LO) {
                return Err(Error::Precondition(format!(
                    "launch radius {r} lies outside the free interior (0, {CUT_LO}]"
                )));
            }
            Ok(LaunchState {
                r,
                log_u: s * r.ln(),
                w: s / r,
            })
        }
        CutoffMode::PureHomogeneous => {
            let p = 2.0 - model.mu;
            let a1 = -2.0 * model.gamma / (p * (2.0 * s + p - 1.0));
            let p2 = 2.0 * p;
            let a2 = -2.0 * model.gamma * a1 / (p2 * (2.0 * s + p2 - 1.0));
            let r = match r_start {
                Some(r) => r,
                None => {
                    let mut r = (SERIES_LAUNCH_SIZE / a1.abs()).powf(1.0 / p).min(CUT_LO);
                    if channel.has_turning_point() {
                        r = r.min(0.25 * channel.r0);
                    }
                    r
                }
            };
            if !(r > 0.0) {
                return Err(Error::Precondition(format!("launch radius must be positive, got {r}")));
            }
            let x = r.powf(p);
            let series = 1.0 + a1 * x + a2 * x * x;
            let dseries = s + a1 * (s + p) * x + a2 * (s + p2) * x * x;
            Ok(LaunchState {
                r,
                log_u: s * r.ln() + series.ln(),
                w: dseries / (r * series),
            })
        }
    }
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
    if y == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        y
    }
}

/// State of the regular solution handed from the `(u, u')` stage to the
/// phase stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Handover {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub log_scale: f64,
    /// `atan2(u, u')` unwound from the launch; `floor(/π)` counts the zeros
    /// of `u` on `(0, r]`.
    pub sturm_angle: f64,
    pub steps: usize,
}

/// Integrates the regular solution out to `r_end`, calling `visit` on every
/// accepted step.
pub(crate) fn integrate_regular<V: FnMut(&RadialSample)>(
    channel: &Channel,
    r_end: f64,
    opts: LaunchOptions,
    mut visit: V,
) -> Result<(Handover, f64, f64)> {
    let start = launch(channel, opts.r_start)?;
    let r_s = start.r;
    if !(r_end > r_s) {
        return Err(Error::Precondition(format!("r_end = {r_end} must exceed the launch radius {r_s}")));
    }
    let ch = *channel;
    let vk = move |r: f64| effective_potential(&ch, r);
    let mut steps = 0;

    // forbidden region: Riccati variable w = u'/u together with ln u
    let r_switch = if channel.has_turning_point() {
        (0.9 * channel.r0).clamp(r_s, r_end)
    } else {
        r_s
    };
    let mut log_u = start.log_u;
    let mut w = start.w;
    visit(&RadialSample {
        r: r_s,
        u: 1.0,
        du: w,
        log_scale: log_u,
    });
    if r_switch > r_s {
        let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = vk(r) - y[1] * y[1];
        };
        let mut ode = Dopri5::new(rhs, r_s, &[log_u, w], OdeOptions::with_tol(opts.tol, opts.tol));
        while ode.t() < r_switch {
            ode.step(r_switch)?;
            let y = ode.y();
            visit(&RadialSample {
                r: ode.t(),
                u: 1.0,
                du: y[1],
                log_scale: y[0],
            });
        }
        steps += ode.steps();
        log_u = ode.y()[0];
        w = ode.y()[1];
    }

    // (u, u') with u(r_switch) = 1 and occasional renormalisation
    let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = vk(r) * y[0];
    };
    let mut log_scale = log_u;
    let mut ode = Dopri5::new(rhs, r_switch, &[1.0, w], OdeOptions::with_tol(opts.tol, opts.tol * 1e-3));
    let mut sturm = (1.0f64).atan2(w);
    let mut raw_prev = sturm;
    while ode.t() < r_end {
        // at most about half a radian of oscillation per step
        let scale = vk(ode.t()).abs().max(1e-300).sqrt();
        ode.opts.h_max = 0.5 / scale;
        ode.step(r_end)?;
        let (u, du) = (ode.y()[0], ode.y()[1]);
        let raw = u.atan2(du);
        sturm += wrap_pi(raw - raw_prev);
        raw_prev = raw;
        visit(&RadialSample {
            r: ode.t(),
            u,
            du,
            log_scale,
        });
        let big = u.abs().max(du.abs());
        if big > RESCALE_THRESHOLD {
            ode.reset_state(&[u / big, du / big]);
            log_scale += big.ln();
        }
    }
    steps += ode.steps();
    let y = ode.y();
    Ok((
        Handover {
            r: r_end,
            u: y[0],
            du: y[1],
            log_scale,
            sturm_angle: sturm,
            steps,
        },
        r_s,
        r_switch,
    ))
}

/// Regular solution sampled on the integrator's adaptive grid out to `r_max`.
pub fn regular_solution(channel: &Channel, r_max: f64, tol: f64) -> Result<RegularSolution> {
    regular_solution_with(channel, r_max, LaunchOptions { r_start: None, tol })
}

pub fn regular_solution_with(channel: &Channel, r_max: f64, opts: LaunchOptions) -> Result<RegularSolution> {
    let floor = 4.0 * channel.r0.max(channel.model.reference_radius);
    if !(r_max > floor) {
        return Err(Error::Precondition(format!(
            "r_max = {r_max} must exceed 4·max(r0, R0) = {floor}"
        )));
    }
    let mut samples = Vec::new();
    let (handover, r_start, r_switch) = integrate_regular(channel, r_max, opts, |s| samples.push(*s))?;
    if let Some(s) = samples.iter().find(|s| !s.u.is_finite() || !s.du.is_finite()) {
        return Err(Error::Integration {
            t: s.r,
            reason: "regular solution overflowed despite rescaling".into(),
        });
    }
    Ok(RegularSolution {
        samples,
        r_start,
        r_switch,
        steps: handover.steps,
    })
}

/// Local WKB momentum `q = √(-V_k)` and its derivative.
pub(crate) fn local_momentum(channel: &Channel, r: f64) -> Result<(f64, f64)> {
    let vk = effective_potential(channel, r);
    if !(vk < 0.0) {
        return Err(Error::Precondition(format!(
            "r = {r} lies in the classically forbidden region (V_k = {vk:e})"
        )));
    }
    let q = (-vk).sqrt();
    let dq = -effective_potential_prime(channel, r) / (2.0 * q);
    Ok((q, dq))
}

/// Inverts `u = A q^(-1/2) sin Φ`, `u' + (q'/2q) u = A q^(1/2) cos Φ` at `r`.
/// Returns `(A, Φ)` with `Φ ∈ (-π, π]`.
pub fn extract_local_phase(channel: &Channel, u: f64, uprime: f64, r: f64) -> Result<(f64, f64)> {
    if channel.has_turning_point() && r < channel.r0 {
        return Err(Error::Precondition(format!(
            "r = {r} is inside the turning point r0 = {}",
            channel.r0
        )));
    }
    let (q, dq) = local_momentum(channel, r)?;
    Ok(invert_wkb(q, dq, u, uprime))
}

pub(crate) fn invert_wkb(q: f64, dq: f64, u: f64, uprime: f64) -> (f64, f64) {
    let s = q * u;
    let c = uprime + dq / (2.0 * q) * u;
    ((s * s + c * c).sqrt() / q.sqrt(), s.atan2(c))
}

/// `η = P''/(4P) - 5P'²/(16P²)` with `P = -V_k = q²`: the defect of the WKB
/// ansatz, entering `Φ' = q - (η/q) sin²Φ`.
pub(crate) fn wkb_defect(channel: &Channel, r: f64) -> f64 {
    let p = -effective_potential(channel, r);
    let dp = -effective_potential_prime(channel, r);
    let d2p = -effective_potential_second(channel, r);
    d2p / (4.0 * p) - 5.0 * dp * dp / (16.0 * p * p)
}

/// Phase-amplitude integrator in the classically allowed region:
/// `Φ' = q - (η/q) sin²Φ`, `(ln ρ)' = (η/q) sin Φ cos Φ`, exact for
/// `u = ρ q^(-1/2) sin Φ`.
pub(crate) struct PhaseIntegrator<'a> {
    channel: &'a Channel,
    tol: f64,
    pub r: f64,
    pub phase: f64,
    pub log_amp: f64,
    pub steps: usize,
}

impl<'a> PhaseIntegrator<'a> {
    /// Start from the `(u, u')` handover, keeping the Sturm zero count.
    pub fn from_handover(channel: &'a Channel, h: &Handover, tol: f64) -> Result<Self> {
        let (q, dq) = local_momentum(channel, h.r)?;
        let (amp, raw) = invert_wkb(q, dq, h.u, h.du);
        let pi = std::f64::consts::PI;
        let zeros = (h.sturm_angle / pi).floor();
        let phase = zeros * pi + raw.rem_euclid(pi);
        Ok(Self {
            channel,
            tol,
            r: h.r,
            phase,
            log_amp: amp.ln() + 0.5 * q.ln() + h.log_scale,
            steps: h.steps,
        })
    }

    pub fn advance(&mut self, r_end: f64) -> Result<()> {
        let ch = self.channel;
        let rhs = |r: f64, y: &[f64], dy: &mut [f64]| {
            let vk = effective_potential(ch, r);
            let q = (-vk).max(0.0).sqrt();
            let e = wkb_defect(ch, r) / q;
            let (s, c) = y[0].sin_cos();
            dy[0] = q - e * s * s;
            dy[1] = e * s * c;
        };
        let mut ode = Dopri5::new(
            rhs,
            self.r,
            &[self.phase, self.log_amp],
            OdeOptions::with_tol(0.0, self.tol),
        );
        while ode.t() < r_end {
            let q = (-effective_potential(ch, ode.t())).sqrt();
            ode.opts.h_max = 1.0 / q;
            ode.step(r_end)?;
        }
        self.steps += ode.steps();
        self.r = r_end;
        self.phase = ode.y()[0];
        self.log_amp = ode.y()[1];
        Ok(())
    }
}
