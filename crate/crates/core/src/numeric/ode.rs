//! Dormand–Prince 5(4) stepper with embedded error control and a cubic
//! Hermite interpolant over the last accepted step.
//!
//! The stepper is driven one accepted step at a time so that callers can
//! watch the state (phase unwinding, stop conditions, rescaling) between
//! steps and tighten `h_max` on the fly.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; `0` picks one from the local derivative scale.
    pub h_init: f64,
    pub h_max: f64,
    /// Smallest step relative to `|t|`.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_init: 0.0,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 5_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }
}

pub struct Dopri5<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    rhs: F,
    pub opts: OdeOptions,
    t: f64,
    y: Vec<f64>,
    dy: Vec<f64>,
    t_prev: f64,
    y_prev: Vec<f64>,
    dy_prev: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 6],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    dy_new: Vec<f64>,
    steps: usize,
    rejected: usize,
}

impl<F> Dopri5<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(rhs: F, t0: f64, y0: &[f64], opts: OdeOptions) -> Self {
        let n = y0.len();
        let mut dy = vec![0.0; n];
        rhs(t0, y0, &mut dy);
        let zero = || vec![0.0; n];
        Self {
            rhs,
            opts,
            t: t0,
            y: y0.to_vec(),
            dy: dy.clone(),
            t_prev: t0,
            y_prev: y0.to_vec(),
            dy_prev: dy,
            h: opts.h_init,
            k: [zero(), zero(), zero(), zero(), zero(), zero()],
            y_stage: zero(),
            y_new: zero(),
            dy_new: zero(),
            steps: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dydt(&self) -> &[f64] {
        &self.dy
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Overwrite the state in place (used for rescaling); resets the
    /// interpolation window.
    pub fn reset_state(&mut self, y: &[f64]) {
        self.y.copy_from_slice(y);
        (self.rhs)(self.t, &self.y, &mut self.dy);
        self.t_prev = self.t;
        self.y_prev.copy_from_slice(&self.y);
        self.dy_prev.copy_from_slice(&self.dy);
    }

    fn initial_step(&self, direction: f64) -> f64 {
        let n = self.y.len() as f64;
        let sc = |y: f64| self.opts.abs_tol + self.opts.rel_tol * y.abs();
        let d0 = (self.y.iter().map(|&y| (y / sc(y)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self
            .y
            .iter()
            .zip(&self.dy)
            .map(|(&y, &f)| (f / sc(y)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        direction * h0.min(self.opts.h_max)
    }

    /// Take one accepted step, never stepping past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<()> {
        let span = t_limit - self.t;
        if span == 0.0 {
            return Ok(());
        }
        let direction = span.signum();
        if self.h == 0.0 || self.h.signum() != direction {
            self.h = self.initial_step(direction);
        }
        let n = self.y.len();
        loop {
            if self.steps + self.rejected >= self.opts.max_steps {
                return Err(Error::Integration {
                    t: self.t,
                    reason: format!("step budget of {} exhausted", self.opts.max_steps),
                });
            }
            let mut h = self.h.abs().min(self.opts.h_max) * direction;
            let mut last = false;
            if (self.t + h - t_limit) * direction >= 0.0 {
                h = t_limit - self.t;
                last = true;
            }
            let h_floor = self.opts.h_min * self.t.abs().max(1e-150);
            if h.abs() < h_floor && !last {
                return Err(Error::Integration {
                    t: self.t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }

            let t = self.t;
            let y = &self.y;
            let k1 = &self.dy;
            let [k2, k3, k4, k5, k6, k7] = &mut self.k;
            let ys = &mut self.y_stage;
            for i in 0..n {
                ys[i] = y[i] + h * A21 * k1[i];
            }
            (self.rhs)(t + C2 * h, ys, k2);
            for i in 0..n {
                ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            (self.rhs)(t + C3 * h, ys, k3);
            for i in 0..n {
                ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            (self.rhs)(t + C4 * h, ys, k4);
            for i in 0..n {
                ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            (self.rhs)(t + C5 * h, ys, k5);
            for i in 0..n {
                ys[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            (self.rhs)(t + h, ys, k6);
            let yn = &mut self.y_new;
            for i in 0..n {
                yn[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            (self.rhs)(t + h, yn, k7);
            self.dy_new.copy_from_slice(k7);

            let mut err2 = 0.0;
            let mut finite = true;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(yn[i].abs());
                err2 += (e / sc).powi(2);
                finite &= yn[i].is_finite() && k7[i].is_finite();
            }
            let err = (err2 / n as f64).sqrt();

            if !finite || !err.is_finite() {
                self.rejected += 1;
                self.h = h * 0.25;
                continue;
            }
            if err <= 1.0 {
                self.t_prev = self.t;
                self.y_prev.copy_from_slice(&self.y);
                self.dy_prev.copy_from_slice(&self.dy);
                self.t = if last { t_limit } else { t + h };
                std::mem::swap(&mut self.y, &mut self.y_new);
                std::mem::swap(&mut self.dy, &mut self.dy_new);
                self.steps += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the proposed step when we were clipped by t_limit
                if !last || fac * h.abs() > self.h.abs() {
                    self.h = h * fac;
                }
                return Ok(());
            }
            self.rejected += 1;
            self.h = h * (0.9 * err.powf(-0.2)).max(0.1);
        }
    }

    /// Step repeatedly until `t_end` is reached exactly.
    pub fn integrate_to(&mut self, t_end: f64) -> Result<()> {
        while self.t != t_end {
            self.step(t_end)?;
        }
        Ok(())
    }

    /// Cubic Hermite interpolation inside the last accepted step.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t - self.t_prev;
        if h == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let s = (t - self.t_prev) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        for i in 0..out.len() {
            out[i] = h00 * self.y_prev[i]
                + h10 * h * self.dy_prev[i]
                + h01 * self.y[i]
                + h11 * h * self.dy[i];
        }
    }
}
