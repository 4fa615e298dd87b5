//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test --release -p zeroscat-cli --test acceptance`.

use std::f64::consts::PI;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use zeroscat::classical::{self, FlowMode, ReducedState};
use zeroscat::radial::{self, PhaseShiftOptions, PhaseShiftResult};
use zeroscat::sphere::{self, GridSpec, KernelGrid, Smoothing};
use zeroscat::{phases, turning_point, CutoffMode, PotentialModel};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, Option<Duration>, fn(&mut Shared) -> Outcome);

/// Phase shifts of the `μ = 1, γ = 1/2, R0 = 1, d = 3` configuration,
/// shared by several criteria.
#[derive(Default)]
struct Shared {
    mu1: Option<Vec<PhaseShiftResult>>,
}

const MU1_LMAX: u32 = 80;

fn mu1_model() -> PotentialModel {
    PotentialModel::new(0.5, 1.0, 3).unwrap()
}

impl Shared {
    fn mu1(&mut self) -> &[PhaseShiftResult] {
        self.mu1.get_or_insert_with(|| {
            let ls: Vec<u32> = (0..=MU1_LMAX).collect();
            radial::phase_shift_sweep(&mu1_model(), 3, &ls, &PhaseShiftOptions::default()).unwrap()
        })
    }

    fn sigma(&mut self, l: u32) -> f64 {
        self.mu1()[l as usize].sigma
    }
}

fn c1_end_polar(_: &mut Shared) -> Outcome {
    let mut worst: f64 = 0.0;
    for mu in [0.5, 1.0, 1.5] {
        let v = radial::end_polar_integral(mu).unwrap();
        worst = worst.max((v - (2.0 - PI) / (2.0 - mu)).abs());
    }
    outcome(worst <= 1e-8, format!("max |I - (2-π)/(2-μ)| = {worst:.2e} (tol 1e-8)"))
}

fn c2_deflection(_: &mut Shared) -> Outcome {
    let mut worst_chi: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    for mu in [0.5, 1.0, 1.5] {
        let m = PotentialModel::new(0.5, mu, 3).unwrap().with_cutoff(CutoffMode::PureHomogeneous);
        for b in [2.0, 5.0, 10.0] {
            let traj = classical::orbit_through_perihelion(&m, b, 0.0, 100.0 * b, 1e-11).unwrap();
            let chi = classical::deflection_angle(&traj).unwrap();
            worst_chi = worst_chi.max((chi - classical::zero_energy_deflection(mu)).abs());
            worst_inv = worst_inv.max(classical::polar_invariant_residual(&traj).unwrap());
        }
    }
    outcome(
        worst_chi <= 1e-3 && worst_inv <= 1e-6,
        format!("max deflection error {worst_chi:.2e} (tol 1e-3), polar invariant {worst_inv:.2e} (tol 1e-6)"),
    )
}

fn c3_reduced_flow(_: &mut Shared) -> Outcome {
    let mut worst_tanh: f64 = 0.0;
    let mut worst_modes: f64 = 0.0;
    for k in [0.5, 1.0] {
        for mu in [0.5, 1.0, 1.5] {
            let z = ReducedState::new(vec![1.0, 0.0, 0.0], 0.0, vec![0.0, f64::sqrt(k), 0.0]).unwrap();
            for tau_end in [-10.0, 10.0] {
                let path = classical::reduced_flow(&z, mu, tau_end, FlowMode::Simplified, 1e-12).unwrap();
                for (tau, s) in &path {
                    worst_tanh = worst_tanh.max((s.b - classical::simplified_b(k, mu, *tau, 0.0)).abs());
                }
            }
        }
    }
    for (b0, mu) in [(0.0, 0.5), (-0.6, 1.0), (0.3, 1.5)] {
        let z = ReducedState::new(vec![1.0, 0.0, 0.0], b0, vec![0.0, f64::sqrt(1.0 - b0 * b0), 0.0]).unwrap();
        for tau_end in [-10.0, 10.0] {
            let full = classical::reduced_flow(&z, mu, tau_end, FlowMode::Full, 1e-13).unwrap();
            let simp = classical::reduced_flow(&z, mu, tau_end, FlowMode::Simplified, 1e-13).unwrap();
            let (a, b) = (&full.last().unwrap().1, &simp.last().unwrap().1);
            let diff = (a.b - b.b)
                .abs()
                .max(a.xhat.iter().zip(&b.xhat).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
                .max(a.cbar.iter().zip(&b.cbar).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
            worst_modes = worst_modes.max(diff);
        }
    }
    outcome(
        worst_tanh <= 1e-6 && worst_modes <= 1e-8,
        format!("tanh law {worst_tanh:.2e} (tol 1e-6), full vs simplified on shell {worst_modes:.2e} (tol 1e-8)"),
    )
}

fn line_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxy / sxx, my - sxy / sxx * mx)
}

fn c4_slope(shared: &mut Shared) -> Outcome {
    let pts: Vec<(f64, f64)> = (20..=60).map(|l| (l as f64, shared.sigma(l))).collect();
    let (slope, intercept) = line_fit(&pts);
    let target = 2.0 - PI / 4.0;
    let (es, ei) = ((slope + PI / 2.0).abs(), (intercept - target).abs());
    outcome(
        es <= 1e-2 && ei <= 5e-2,
        format!("slope {slope:.6} (|Δ| {es:.2e}, tol 1e-2), intercept {intercept:.6} vs {target:.6} (|Δ| {ei:.2e}, tol 5e-2)"),
    )
}

fn c5_wkb(shared: &mut Shared) -> Outcome {
    let m = mu1_model();
    let mut gaps = Vec::new();
    for l in [10u32, 20, 40, 80] {
        let wkb = radial::wkb_phase_shift(&turning_point(&m, l, 3).unwrap()).unwrap();
        gaps.push((wkb.sigma - shared.sigma(l)).abs());
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = *gaps.last().unwrap();
    outcome(
        decreasing && last <= 1e-2,
        format!("gaps at l=10,20,40,80: {} (strictly decreasing: {decreasing}, final tol 1e-2)", fmt_list(&gaps)),
    )
}

fn c6_parity(shared: &mut Shared) -> Outcome {
    let diffs: Vec<f64> = (30..=60).map(|l| 2.0 * shared.sigma(l + 1) - 2.0 * shared.sigma(l)).collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let err = (mean + PI).abs();
    outcome(err <= 2e-2, format!("mean 2σ_(l+1) - 2σ_l over l=30..60 = {mean:.6}, |Δ + π| = {err:.2e} (tol 2e-2)"))
}

/// Residuals below this level are rounding noise of the phase-shift
/// solver, where monotonicity is not meaningful.
const NOISE_FLOOR: f64 = 1e-6;

fn c7_singrad(shared: &mut Shared) -> Outcome {
    let m = mu1_model();
    let c0 = sphere::scattering_constant(&m).unwrap();
    let pairs: Vec<(u32, f64)> = (20..=80).map(|l| (l, shared.sigma(l))).collect();
    let res: Vec<f64> = sphere::compact_remainder_residuals(&m, 3, &pairs)
        .unwrap()
        .iter()
        .map(|(_, r)| r.norm())
        .collect();
    let monotone = res.windows(2).all(|w| w[1] <= w[0].max(NOISE_FLOOR));
    let last = *res.last().unwrap();
    // with a correction term the residuals are well above the noise floor
    let corrected = PotentialModel::new(0.5, 1.0, 3).unwrap().with_correction(0.5, 1.2).unwrap();
    let ls: Vec<u32> = (20..=80).step_by(10).collect();
    let shifts = radial::phase_shift_sweep(&corrected, 3, &ls, &PhaseShiftOptions::default()).unwrap();
    let pairs: Vec<(u32, f64)> = shifts.iter().map(|s| (s.l, s.sigma)).collect();
    let res2: Vec<f64> = sphere::compact_remainder_residuals(&corrected, 3, &pairs)
        .unwrap()
        .iter()
        .map(|(_, r)| r.norm())
        .collect();
    let strict = res2.windows(2).all(|w| w[1] < w[0]);
    let last2 = *res2.last().unwrap();
    outcome(
        (c0 - 4.0).abs() < 1e-12 && monotone && last <= 0.05 && strict && last2 <= 0.05,
        format!(
            "c0 = {c0}; residual l=20 {:.2e} -> l=80 {last:.2e} (non-increasing above {NOISE_FLOOR:.0e}: {monotone}); \
             with V2: {} (strictly decreasing: {strict})",
            res[0],
            fmt_list(&res2)
        ),
    )
}

fn c8_cone(_: &mut Shared) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for mu in [2.0 / 3.0, 1.0, 1.2] {
        let m = PotentialModel::new(0.5, mu, 3).unwrap();
        let ls: Vec<u32> = (0..=200).collect();
        let sig: Vec<f64> = radial::phase_shift_sweep(&m, 3, &ls, &PhaseShiftOptions::default())
            .unwrap()
            .iter()
            .map(|s| s.sigma)
            .collect();
        let spec = GridSpec::new(200);
        let kernel = sphere::s0_kernel(3, &sig, &spec).unwrap();
        let peak = sphere::singularity_locator(&kernel).unwrap();
        let expected = sphere::cone_angle(mu).cos();
        let cell = kernel.cell_width_at(expected);
        let off = (peak.w_peak - expected).abs();
        let c0 = sphere::scattering_constant(&m).unwrap();
        let mut lead = sphere::wave_kernel_series(3, sphere::cone_angle(mu), &spec).unwrap();
        let phase = Complex64::from_polar(1.0, c0);
        lead.values.iter_mut().for_each(|v| *v *= phase);
        let dist = kernel.relative_l2_distance(&lead).unwrap();
        ok &= off <= cell && dist <= 0.05;
        parts.push(format!("μ={mu:.4}: peak off by {off:.1e} (cell {cell:.1e}), L2 {dist:.4}"));
    }
    outcome(ok, parts.join("; "))
}

fn c9_wave_closed(_: &mut Shared) -> Outcome {
    const L_MAX: u32 = 10_000;
    let t: f64 = 1.0 - 1.0 / 400.0;
    let eps = -t.ln();
    let mut worst: f64 = 0.0;
    for d in [2u32, 3] {
        for theta in [PI / 3.0, PI / 2.0, 1.5 * PI] {
            let spec = GridSpec {
                nodes: 2001,
                l_max: L_MAX,
                smoothing: Smoothing::Abel(t),
            };
            let series: KernelGrid = sphere::wave_kernel_series(d, theta, &spec).unwrap();
            let scale = t.powf(-(d as f64 / 2.0 - 1.0));
            for (w, v) in series.w.iter().zip(&series.values) {
                if (w - theta.cos()).abs() < 0.1 {
                    continue;
                }
                let closed = sphere::wave_kernel_closed(d, theta, *w, eps).unwrap() * scale;
                worst = worst.max((v - closed).norm() / closed.norm());
            }
        }
    }
    outcome(
        worst <= 1e-3,
        format!("max relative error {worst:.2e} (tol 1e-3) with Abel t = 1 - 1/400, L_max = {L_MAX}, matched ε = -ln t"),
    )
}

fn c10_addition(_: &mut Shared) -> Outcome {
    let rule = sphere::sphere_quadrature_s2(16, 32);
    let legendre = |l: u32, z: f64| sphere::gegenbauer(0.5, l, z).unwrap();
    // degree-l harmonics: Re (x + iy)^l and P_l(z)
    let harmonic = |l: u32, p: [f64; 3]| Complex64::new(p[0], p[1]).powu(l).re + legendre(l, p[2]);
    let coeff = |l: u32| 1.0 + 0.5 * l as f64;
    let f = |p: [f64; 3]| (0..=5).map(|l| coeff(l) * harmonic(l, p)).sum::<f64>();
    let mut worst: f64 = 0.0;
    let points = [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.36, 0.48, -0.8], [-1.0, 0.0, 0.0]];
    for x in points {
        for l in 0..=7u32 {
            let got = sphere::project_s2(l, f, x, &rule);
            let want = if l <= 5 { coeff(l) * harmonic(l, x) } else { 0.0 };
            worst = worst.max((got - want).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max reproduction error {worst:.2e} for l <= 5 (tol 1e-6)"))
}

fn c11_modifiers(_: &mut Shared) -> Outcome {
    let lambda = 1e-8;
    let mut ok = true;
    let mut parts = Vec::new();
    for mu in [0.75, 1.0, 1.5] {
        let m = PotentialModel::new(1.0, mu, 3).unwrap();
        let r = phases::modifier_result(&m, lambda, phases::Modifier::Dollard).unwrap();
        ok &= r.rel_err() <= 1e-2;
        parts.push(format!("μ={mu}: {:.2e}", r.rel_err()));
    }
    outcome(ok, format!("ψ_dol relative error at λ = 1e-8 (γ = 1): {} (tol 1e-2)", parts.join(", ")))
}

fn c12_determinism(_: &mut Shared) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        ("phase_shifts.csv", "command = phase-shifts\nmu = 1\nl_min = 0\nl_max = 40\n"),
        ("kernel.csv", "command = kernel\nmu = 1.2\nL_max = 120\n"),
        ("phases.csv", "command = phases\nmu = 0.75\n"),
    ];
    let mut ok = true;
    for (name, cfg) in configs {
        let cfg_path = dir.path().join("run.conf");
        fs::write(&cfg_path, cfg).unwrap();
        let mut outputs = Vec::new();
        for threads in ["1", "3", "8", "1"] {
            let out_dir = dir.path().join(format!("out{}", outputs.len()));
            let status = Command::new(env!("CARGO_BIN_EXE_zeroscat"))
                .arg("--config")
                .arg(&cfg_path)
                .arg("--out")
                .arg(&out_dir)
                .args(["--threads", threads])
                .output()
                .unwrap()
                .status;
            ok &= status.success();
            outputs.push(fs::read(out_dir.join(name)).unwrap_or_default());
        }
        ok &= !outputs[0].is_empty() && outputs.iter().all(|o| o == &outputs[0]);
    }
    outcome(ok, "phase-shifts, kernel and phases CSVs byte-identical over 1, 3, 8, 1 threads")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("end-polar integral identity", Some(Duration::from_secs(1)), c1_end_polar),
        ("zero-energy deflection law", Some(Duration::from_secs(30)), c2_deflection),
        ("reduced flow tanh law", None, c3_reduced_flow),
        ("phase-shift slope and intercept", Some(Duration::from_secs(120)), c4_slope),
        ("WKB closed form vs ODE oracle", None, c5_wkb),
        ("Coulomb parity", None, c6_parity),
        ("compact remainder residuals", None, c7_singrad),
        ("singular cone of S(0)", None, c8_cone),
        ("half-wave closed form", None, c9_wave_closed),
        ("addition theorem", None, c10_addition),
        ("modifier asymptotics", None, c11_modifiers),
        ("determinism", None, c12_determinism),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = f(&mut shared);
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            if elapsed > *b {
                o.pass = false;
                o.detail.push_str(&format!("; over the {:.0?} budget", b));
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} [{:.2?}]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
