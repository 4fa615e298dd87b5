//! Identity suite run by the `selftest` command.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use zeroscat::classical::{self, FlowMode, ReducedState};
use zeroscat::radial::end_polar_integral;
use zeroscat::sphere::{gegenbauer, lambda_eigenvalue, projection_kernel, wave_kernel_abel_sum};
use zeroscat::{CutoffMode, PotentialModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Worst error found, or `NaN` if the evaluation itself failed.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: impl Into<String>, value: zeroscat::Result<f64>, tolerance: f64) -> Check {
    let value = value.unwrap_or(f64::NAN);
    Check {
        name: name.into(),
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

fn end_polar(mu: f64) -> zeroscat::Result<f64> {
    Ok((end_polar_integral(mu)? - (2.0 - PI) / (2.0 - mu)).abs())
}

/// `Σ_n C_n^α(w) t^n = (1 - 2wt + t²)^(-α)`.
fn gegenbauer_generating(alpha: f64) -> zeroscat::Result<f64> {
    let mut worst: f64 = 0.0;
    for (w, t) in [(0.3, 0.5), (-0.8, 0.6), (1.0, 0.4)] {
        let mut sum = 0.0;
        for n in 0..300 {
            sum += gegenbauer(alpha, n, w)? * f64::powi(t, n as i32);
        }
        let exact = (1.0 - 2.0 * w * t + t * t).powf(-alpha);
        worst = worst.max((sum - exact).abs() / exact);
    }
    Ok(worst)
}

/// Closed form of the Abel-damped half-wave series against its partial sums.
fn wave_generating(d: u32) -> zeroscat::Result<f64> {
    let mut worst: f64 = 0.0;
    for (theta, t, w) in [(1.0, 0.5, 0.2), (PI / 2.0, 0.7, -0.6), (4.0, 0.6, 0.9)] {
        let mut sum = Complex64::new(0.0, 0.0);
        for l in 0..400u32 {
            let c = Complex64::from_polar(f64::powi(t, l as i32), theta * lambda_eigenvalue(d, l));
            sum += c * projection_kernel(d, l, w)?;
        }
        let exact = wave_kernel_abel_sum(d, theta, t, w)?;
        worst = worst.max((sum - exact).norm() / exact.norm());
    }
    Ok(worst)
}

fn tanh_law() -> zeroscat::Result<f64> {
    let mut worst: f64 = 0.0;
    for k in [0.5, 1.0] {
        for mu in [0.5, 1.0, 1.5] {
            let z = ReducedState::new(vec![1.0, 0.0, 0.0], 0.0, vec![0.0, f64::sqrt(k), 0.0])?;
            for tau_end in [-10.0, 10.0] {
                for (tau, s) in classical::reduced_flow(&z, mu, tau_end, FlowMode::Simplified, 1e-12)? {
                    worst = worst.max((s.b - classical::simplified_b(k, mu, tau, 0.0)).abs());
                }
            }
        }
    }
    Ok(worst)
}

fn h_closed_form() -> zeroscat::Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in [0.5, 1.0, 1.5] {
        let m = PotentialModel::new(0.5, mu, 3)?.with_cutoff(CutoffMode::PureHomogeneous);
        for r in [1.0, 7.0, 1e3, 1e6] {
            let exact = m.h_zero_energy_closed(r);
            worst = worst.max((m.eval_h(r, 0.0)? - exact).abs() / exact);
        }
    }
    Ok(worst)
}

/// `½|∇φ|² + V - λ` by central differences.
fn eikonal_residual() -> zeroscat::Result<f64> {
    let m = PotentialModel::new(0.5, 1.0, 3)?.with_correction(0.2, 1.5)?;
    let mut worst: f64 = 0.0;
    for lambda in [0.0, 0.2] {
        for (r, th) in [(5.0, 0.1), (20.0, -0.2)] {
            let phi = |r: f64, t: f64| classical::eikonal_phase_sph(&m, r, t, lambda);
            let (hr, ht) = (1e-4 * r, 1e-4);
            let dr = (phi(r + hr, th)? - phi(r - hr, th)?) / (2.0 * hr);
            let dt = (phi(r, th + ht)? - phi(r, th - ht)?) / (2.0 * ht);
            worst = worst.max((0.5 * (dr * dr + dt * dt / (r * r)) + m.v(r) - lambda).abs());
        }
    }
    Ok(worst)
}

pub fn run_all() -> Vec<Check> {
    let mut out = Vec::new();
    for mu in [0.5, 1.0, 1.5] {
        out.push(check(format!("end-polar integral mu={mu}"), end_polar(mu), 1e-8));
    }
    for alpha in [0.5, 1.0, 1.5] {
        out.push(check(format!("Gegenbauer generating function alpha={alpha}"), gegenbauer_generating(alpha), 1e-12));
    }
    for d in [2, 3, 4] {
        out.push(check(format!("half-wave generating function d={d}"), wave_generating(d), 1e-10));
    }
    out.push(check("reduced-flow tanh law", tanh_law(), 1e-6));
    out.push(check("h closed form", h_closed_form(), 1e-10));
    out.push(check("eikonal equation residual", eikonal_residual(), 1e-5));
    out
}

pub fn table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{} {:width$}  error {:.3e}  tol {:.0e}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
        ));
    }
    s
}

pub fn write_csv<W: Write + ?Sized>(out: &mut W, checks: &[Check], metadata: &[(String, String)]) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "identity,value,tolerance,pass")?;
    for c in checks {
        writeln!(out, "{},{:e},{:e},{}", c.name, c.value, c.tolerance, c.pass)?;
    }
    Ok(())
}
