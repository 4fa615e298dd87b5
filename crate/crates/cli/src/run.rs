//! Command dispatch and artifact emission.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use zeroscat::classical::{self, ReducedState};
use zeroscat::export::{self, Metadata};
use zeroscat::phases;
use zeroscat::radial::{self, PhaseMethod, PhaseShiftOptions, PhaseShiftResult};
use zeroscat::sphere::{self, GridSpec};
use zeroscat::{turning_point, Error};

use crate::config::{Command, ConfigError, RunConfig};
use crate::selftest::{self, Check};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigError),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Quadrature { .. }
            | Error::Integration { .. }
            | Error::NearCollision { .. }
            | Error::Convergence { .. }
            | Error::Root(_)
            | Error::AmbiguousTurningPoint { .. } => CliError::Convergence(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Human-readable summary for standard output.
    pub summary: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    body(&mut out).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

/// Metadata common to every artifact: tool version and the configuration
/// keys needed to re-run the computation.
fn base_metadata(config: &RunConfig) -> Metadata {
    let mut m = vec![
        ("generator".to_string(), format!("zeroscat {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), config.command.to_string()),
    ];
    m.extend(
        config
            .entries
            .iter()
            .filter(|(k, _)| k != "command" && k != "threads")
            .map(|(k, v)| (format!("config.{k}"), v.clone())),
    );
    m
}

fn push(m: &mut Metadata, k: &str, v: impl ToString) {
    m.push((k.to_string(), v.to_string()));
}

/// Least-squares line `y ≈ slope·x + intercept`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn phase_options(config: &RunConfig) -> PhaseShiftOptions {
    PhaseShiftOptions {
        tol: config.tol,
        ladder_tol: config.ladder_tol,
        ..PhaseShiftOptions::default()
    }
}

fn phase_shifts(config: &RunConfig, ls: &[u32], method: PhaseMethod) -> Result<Vec<PhaseShiftResult>, CliError> {
    let model = &config.model;
    let d = model.dim;
    Ok(match method {
        PhaseMethod::OdeOracle => radial::phase_shift_sweep(model, d, ls, &phase_options(config))?,
        PhaseMethod::WkbClosedForm => ls
            .iter()
            .map(|&l| radial::wkb_phase_shift(&turning_point(model, l, d)?))
            .collect::<Result<_, Error>>()?,
    })
}

/// Executes the configured command, writing its CSV under `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<RunReport, CliError> {
    let path = out_dir.join(config.output_path.clone().unwrap_or_else(|| config.command.file_name()));
    let mut meta = base_metadata(config);
    let model = config.model;
    let log = |msg: &str| {
        if verbose {
            eprintln!("[zeroscat] {msg}");
        }
    };
    log(&format!("running {} with {:?}", config.command, model));
    let summary = match config.command {
        Command::PhaseShifts => {
            let ls: Vec<u32> = (config.l_min..=config.l_max).collect();
            let results = phase_shifts(config, &ls, config.method)?;
            let pts: Vec<(f64, f64)> = results.iter().map(|r| (r.l as f64, r.sigma)).collect();
            let target_slope = radial::asymptote_slope(model.mu);
            let target_intercept = radial::asymptote_intercept(&model, model.dim)?;
            push(&mut meta, "target_slope", format!("{target_slope:e} (-mu*pi/(2*(2-mu)))"));
            push(&mut meta, "target_intercept", format!("{target_intercept:e}"));
            let fit = fit_line(&pts);
            if let Some((slope, intercept)) = fit {
                push(&mut meta, "fitted_slope", format!("{slope:e}"));
                push(&mut meta, "fitted_intercept", format!("{intercept:e}"));
            }
            write_file(&path, |w| export::write_phase_shifts(w, &results, &meta))?;
            match fit {
                Some((s, c)) => format!(
                    "{} channels; fitted slope {s:.6} (target {target_slope:.6}), intercept {c:.6} (target {target_intercept:.6})",
                    results.len()
                ),
                None => format!("{} channels", results.len()),
            }
        }
        Command::Kernel => {
            let ls: Vec<u32> = (0..=config.kernel_l_max).collect();
            let results = phase_shifts(config, &ls, PhaseMethod::OdeOracle)?;
            let sigmas: Vec<f64> = results.iter().map(|r| r.sigma).collect();
            let spec = GridSpec {
                nodes: config.grid_size,
                l_max: config.kernel_l_max,
                smoothing: config.grid_smoothing(),
            };
            let grid = sphere::s0_kernel(model.dim, &sigmas, &spec)?;
            let expected = sphere::cone_angle(model.mu).cos();
            push(&mut meta, "expected_peak_w", format!("{expected:e}"));
            let c0 = sphere::scattering_constant(&model)?;
            push(&mut meta, "c0", format!("{c0:e}"));
            let peak = sphere::singularity_locator(&grid).ok();
            if let Some(p) = peak {
                push(&mut meta, "measured_peak_w", format!("{:e}", p.w_peak));
            }
            let label = format!("gamma={},mu={},r0={}", model.gamma, model.mu, model.reference_radius);
            write_file(&path, |w| export::write_kernel(w, &grid, &label, &meta))?;
            match peak {
                Some(p) => format!("S(0) kernel: peak at w = {:.6}, expected {expected:.6}", p.w_peak),
                None => "S(0) kernel: no pronounced peak".into(),
            }
        }
        Command::WaveKernel => {
            let theta = config.theta.expect("validated");
            let spec = GridSpec {
                nodes: config.grid_size,
                l_max: config.kernel_l_max,
                smoothing: config.grid_smoothing(),
            };
            let grid = sphere::wave_kernel_series(model.dim, theta, &spec)?;
            push(&mut meta, "singular_w", format!("{:e}", theta.cos()));
            write_file(&path, |w| export::write_kernel(w, &grid, &format!("theta={theta:e}"), &meta))?;
            format!("e^(i theta Lambda) kernel at theta = {theta:.6} on {} nodes", grid.w.len())
        }
        Command::Orbit => {
            let r_far = config.r_far.unwrap_or(100.0 * config.perihelion);
            let traj = classical::orbit_through_perihelion(&model, config.perihelion, config.lambda, r_far, config.tol)?;
            let deflection = classical::deflection_angle(&traj);
            if let Ok(chi) = &deflection {
                push(&mut meta, "deflection", format!("{chi:e}"));
            }
            if config.lambda == 0.0 {
                push(&mut meta, "expected_deflection", format!("{:e}", classical::zero_energy_deflection(model.mu)));
            }
            write_file(&path, |w| export::write_trajectory(w, &traj, &meta))?;
            match deflection {
                Ok(chi) => format!("{} samples; deflection {chi:.9}", traj.samples.len()),
                Err(e) => format!("{} samples; no deflection angle ({e})", traj.samples.len()),
            }
        }
        Command::Flow => {
            let d = model.dim as usize;
            let mut xhat = vec![0.0; d];
            xhat[0] = 1.0;
            let mut cbar = vec![0.0; d];
            cbar[1] = (config.shell - config.b0 * config.b0).max(0.0).sqrt();
            let z0 = ReducedState::new(xhat, config.b0, cbar)?;
            let mut path_pts = classical::reduced_flow(&z0, model.mu, -config.tau_end, config.flow_mode, config.tol)?;
            path_pts.reverse();
            path_pts.pop();
            path_pts.extend(classical::reduced_flow(&z0, model.mu, config.tau_end, config.flow_mode, config.tol)?);
            push(&mut meta, "swept_angle", format!("{:e}", classical::reduced_swept_angle(&path_pts)));
            write_file(&path, |w| export::write_reduced_flow(w, &path_pts, &meta))?;
            format!("{} flow samples on [-{t}, {t}]", path_pts.len(), t = config.tau_end)
        }
        Command::Phases => {
            let kind = config.modifier();
            let results = phases::modifier_ladder(&model, kind, &config.lambda_ladder)?;
            push(&mut meta, "modifier", kind);
            push(&mut meta, "regime", phases::Regime::of(model.mu)?);
            write_file(&path, |w| export::write_modifier_ladder(w, &results, &meta))?;
            let last = results.last().expect("non-empty ladder");
            format!("{} energies; relative error {:.3e} at lambda = {:e}", results.len(), last.rel_err(), last.lambda)
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            write_file(&path, |w| selftest::write_csv(w, &checks, &meta))?;
            let table = selftest::table(&checks);
            let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
            if !failed.is_empty() {
                return Err(CliError::Convergence(format!(
                    "{} self-test identities failed\n{table}",
                    failed.len()
                )));
            }
            table
        }
    };
    Ok(RunReport {
        files: vec![path],
        summary,
    })
}
