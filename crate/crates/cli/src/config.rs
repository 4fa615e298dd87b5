//! Run configuration: a line-oriented `key = value` file with `[model]`
//! and `[run]` sections and `#` comments.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use zeroscat::classical::FlowMode;
use zeroscat::phases::Modifier;
use zeroscat::radial::PhaseMethod;
use zeroscat::sphere::Smoothing;
use zeroscat::{CutoffMode, PotentialModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    PhaseShifts,
    Kernel,
    WaveKernel,
    Orbit,
    Flow,
    Phases,
    Selftest,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::PhaseShifts,
        Command::Kernel,
        Command::WaveKernel,
        Command::Orbit,
        Command::Flow,
        Command::Phases,
        Command::Selftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::PhaseShifts => "phase-shifts",
            Command::Kernel => "kernel",
            Command::WaveKernel => "wave-kernel",
            Command::Orbit => "orbit",
            Command::Flow => "flow",
            Command::Phases => "phases",
            Command::Selftest => "selftest",
        }
    }

    /// Default output file name.
    pub fn file_name(self) -> String {
        format!("{}.csv", self.name().replace('-', "_"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct ConfigError(pub Vec<Diagnostic>);

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: PotentialModel,
    /// Channel range for `phase-shifts`.
    pub l_min: u32,
    pub l_max: u32,
    /// Truncation order of synthesized kernels.
    pub kernel_l_max: u32,
    pub grid_size: usize,
    /// `None` selects Abel smoothing with `t = 1 - 1/L_max`.
    pub smoothing: Option<Smoothing>,
    pub theta: Option<f64>,
    pub method: PhaseMethod,
    pub tol: f64,
    pub ladder_tol: f64,
    pub lambda: f64,
    pub lambda_ladder: Vec<f64>,
    pub modifier: Option<Modifier>,
    pub perihelion: f64,
    pub r_far: Option<f64>,
    pub tau_end: f64,
    pub b0: f64,
    pub shell: f64,
    pub flow_mode: FlowMode,
    pub output_path: Option<String>,
    pub threads: Option<usize>,
    /// Every key as written, in file order, for output metadata.
    pub entries: Vec<(String, String)>,
}

impl RunConfig {
    pub fn grid_smoothing(&self) -> Smoothing {
        self.smoothing
            .unwrap_or(Smoothing::Abel(1.0 - 1.0 / self.kernel_l_max.max(1) as f64))
    }

    pub fn modifier(&self) -> Modifier {
        self.modifier.unwrap_or(if self.model.mu > 1.0 {
            Modifier::ShortRange
        } else {
            Modifier::Dollard
        })
    }
}

const MODEL_KEYS: &[&str] = &["gamma", "mu", "dim", "r0", "cutoff", "beta", "eps"];
const RUN_KEYS: &[&str] = &[
    "command",
    "l_min",
    "l_max",
    "L_max",
    "grid_size",
    "smoothing",
    "theta",
    "method",
    "tol",
    "ladder_tol",
    "lambda",
    "lambda_ladder",
    "modifier",
    "perihelion",
    "r_far",
    "tau_end",
    "b0",
    "shell",
    "flow_mode",
    "output_path",
    "threads",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Model,
    Run,
}

struct Reader {
    entries: HashMap<String, Entry>,
    diags: Vec<Diagnostic>,
}

impl Reader {
    fn diag(&mut self, line: usize, column: usize, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            line,
            column,
            message: message.into(),
        });
    }

    fn get<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let e = self.entries.get(key)?.clone();
        match parse(&e.value) {
            Some(v) => Some(v),
            None => {
                self.diag(e.line, e.column, format!("`{key}` expects {what}, got `{}`", e.value));
                None
            }
        }
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        self.get(key, "a finite number", parse_number)
    }

    fn integer(&mut self, key: &str) -> Option<u64> {
        self.get(key, "a non-negative integer", |s| s.parse().ok())
    }

    /// Checks a parsed value, reporting at the key's position.
    fn check(&mut self, key: &str, ok: bool, message: impl Into<String>) {
        if !ok {
            let (line, column) = self.entries.get(key).map_or((0, 0), |e| (e.line, e.column));
            self.diag(line, column, message);
        }
    }

    fn position(&self, key: &str) -> (usize, usize) {
        self.entries.get(key).map_or((0, 0), |e| (e.line, e.column))
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// A number, optionally written as a multiple of π: `1.5`, `pi/3`,
/// `2pi/3`, `-0.5pi`.
pub fn parse_angle(s: &str) -> Option<f64> {
    if let Some(x) = parse_number(s) {
        return Some(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), parse_number(b.trim())?),
        None => (s, 1.0),
    };
    let coeff = num.strip_suffix("pi")?.trim();
    let coeff = match coeff {
        "" => 1.0,
        "-" => -1.0,
        c => parse_number(c.trim_end_matches('*'))?,
    };
    let v = coeff * PI / den;
    v.is_finite().then_some(v)
}

fn parse_command(s: &str) -> Option<Command> {
    Command::ALL.into_iter().find(|c| c.name() == s)
}

fn parse_smoothing(s: &str) -> Option<Smoothing> {
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k.trim(), Some(parse_number(a.trim())?)),
        None => (s, None),
    };
    match (kind, arg) {
        ("none", None) => Some(Smoothing::None),
        ("abel", Some(t)) if (0.0..1.0).contains(&t) => Some(Smoothing::Abel(t)),
        ("gauss", Some(w)) if w > 0.0 => Some(Smoothing::Gauss(w)),
        _ => None,
    }
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = s.split(',').map(|x| parse_number(x.trim())).collect();
    v.filter(|v| !v.is_empty())
}

/// Parses and validates a configuration; all problems are reported at once.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut reader = Reader {
        entries: HashMap::new(),
        diags: Vec::new(),
    };
    let mut order = Vec::new();
    let mut section = Section::Top;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len() + 1;
        if let Some(name) = trimmed.strip_prefix('[') {
            section = match name.strip_suffix(']').map(str::trim) {
                Some("model") => Section::Model,
                Some("run") => Section::Run,
                _ => {
                    reader.diag(line_no, indent, format!("unknown section `{trimmed}`"));
                    section
                }
            };
            continue;
        }
        let Some(eq) = content.find('=') else {
            reader.diag(line_no, indent, "expected `key = value`");
            continue;
        };
        let key = content[..eq].trim();
        let after = &content[eq + 1..];
        let value_col = eq + 2 + after.len() - after.trim_start().len();
        let value = after.trim();
        let allowed = match section {
            Section::Top => MODEL_KEYS.contains(&key) || RUN_KEYS.contains(&key),
            Section::Model => MODEL_KEYS.contains(&key),
            Section::Run => RUN_KEYS.contains(&key),
        };
        if !allowed {
            let place = match section {
                Section::Top => String::new(),
                Section::Model => " in [model]".into(),
                Section::Run => " in [run]".into(),
            };
            reader.diag(line_no, indent, format!("unknown key `{key}`{place}"));
            continue;
        }
        if value.is_empty() {
            reader.diag(line_no, value_col, format!("missing value for `{key}`"));
            continue;
        }
        if let Some(prev) = reader.entries.get(key) {
            let msg = format!("duplicate key `{key}` (first set on line {})", prev.line);
            reader.diag(line_no, indent, msg);
            continue;
        }
        reader.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: line_no,
                column: value_col,
            },
        );
        order.push((key.to_string(), value.to_string()));
    }

    let command = match reader.entries.contains_key("command") {
        true => reader.get("command", "one of phase-shifts, kernel, wave-kernel, orbit, flow, phases, selftest", parse_command),
        false => {
            reader.diag(0, 0, "missing required key `command`");
            None
        }
    };

    let gamma = reader.number("gamma").unwrap_or(0.5);
    reader.check("gamma", gamma > 0.0, "gamma must be positive");
    let mu = reader.number("mu").unwrap_or(1.0);
    reader.check("mu", mu > 0.0 && mu < 2.0, "mu must lie in (0,2)");
    let dim = reader.integer("dim").unwrap_or(3);
    reader.check("dim", (2..=64).contains(&dim), "dim must lie in [2, 64]");
    let r0 = reader.number("r0").unwrap_or(1.0);
    reader.check("r0", r0 >= 1.0, "r0 must be >= 1");
    let cutoff = reader
        .get("cutoff", "`cut-interior` or `pure-homogeneous`", |s| match s {
            "cut-interior" => Some(CutoffMode::CutInterior),
            "pure-homogeneous" => Some(CutoffMode::PureHomogeneous),
            _ => None,
        })
        .unwrap_or(CutoffMode::CutInterior);
    let beta = reader.number("beta").unwrap_or(0.0);
    let eps = reader.number("eps").unwrap_or(1.0);
    reader.check("eps", eps > 0.0, "eps must be positive");

    let l_min = reader.integer("l_min").unwrap_or(0);
    let l_max = reader.integer("l_max").unwrap_or(60);
    reader.check("l_max", l_max >= l_min, "l_max must be >= l_min");
    reader.check("l_max", l_max <= 100_000, "l_max must be <= 100000");
    let kernel_l_max = reader.integer("L_max").unwrap_or(200);
    reader.check("L_max", (1..=100_000).contains(&kernel_l_max), "L_max must lie in [1, 100000]");
    let grid_size = reader.integer("grid_size").unwrap_or(2001);
    reader.check("grid_size", (3..=1_000_000).contains(&grid_size), "grid_size must lie in [3, 1000000]");
    let smoothing = reader.get("smoothing", "`none`, `abel:<t>` or `gauss:<width>`", parse_smoothing);
    let theta = reader.get("theta", "an angle such as `1.2` or `2pi/3`", parse_angle);
    let method = reader
        .get("method", "`ode` or `wkb`", |s| match s {
            "ode" => Some(PhaseMethod::OdeOracle),
            "wkb" => Some(PhaseMethod::WkbClosedForm),
            _ => None,
        })
        .unwrap_or(PhaseMethod::OdeOracle);
    let tol = reader.number("tol").unwrap_or(1e-11);
    reader.check("tol", tol > 0.0 && tol < 1e-2, "tol must lie in (0, 1e-2)");
    let ladder_tol = reader.number("ladder_tol").unwrap_or(1e-6);
    reader.check("ladder_tol", ladder_tol > 0.0, "ladder_tol must be positive");
    let lambda = reader.number("lambda").unwrap_or(0.0);
    reader.check("lambda", lambda >= 0.0, "lambda must be >= 0");
    let lambda_ladder = reader
        .get("lambda_ladder", "a comma-separated list of numbers", parse_list)
        .unwrap_or_else(|| (2..=8).map(|n| 10f64.powi(-n)).collect());
    reader.check(
        "lambda_ladder",
        lambda_ladder.iter().all(|&x| x > 0.0),
        "lambda_ladder entries must be positive",
    );
    let modifier = reader.get("modifier", "`sr` or `dol`", |s| match s {
        "sr" => Some(Modifier::ShortRange),
        "dol" => Some(Modifier::Dollard),
        _ => None,
    });
    let perihelion = reader.number("perihelion").unwrap_or(3.0);
    reader.check("perihelion", perihelion >= 1.0, "perihelion must be >= 1");
    let r_far = reader.number("r_far");
    if let Some(rf) = r_far {
        reader.check("r_far", rf > perihelion, "r_far must exceed the perihelion");
    }
    let tau_end = reader.number("tau_end").unwrap_or(10.0);
    let b0 = reader.number("b0").unwrap_or(0.0);
    let shell = reader.number("shell").unwrap_or(1.0);
    reader.check("shell", shell > 0.0, "shell must be positive");
    reader.check("b0", b0 * b0 <= shell, "b0² must not exceed shell");
    let flow_mode = reader
        .get("flow_mode", "`full` or `simplified`", |s| match s {
            "full" => Some(FlowMode::Full),
            "simplified" => Some(FlowMode::Simplified),
            _ => None,
        })
        .unwrap_or(FlowMode::Simplified);
    let output_path = reader.entries.get("output_path").map(|e| e.value.clone());
    let threads = reader.integer("threads");
    if let Some(t) = threads {
        reader.check("threads", t >= 1, "threads must be >= 1");
    }

    if command == Some(Command::WaveKernel) && theta.is_none() && !reader.entries.contains_key("theta") {
        reader.diag(0, 0, "command `wave-kernel` needs `theta`");
    }

    let model = if reader.diags.is_empty() {
        let built = PotentialModel::new(gamma, mu, dim as u32)
            .map(|m| m.with_cutoff(cutoff))
            .and_then(|m| m.with_reference_radius(r0))
            .and_then(|m| m.with_correction(beta, eps));
        match built {
            Ok(m) => Some(m),
            Err(e) => {
                let (line, column) = reader.position("beta");
                reader.diag(line, column, e.to_string());
                None
            }
        }
    } else {
        None
    };

    if !reader.diags.is_empty() {
        let mut diags = reader.diags;
        diags.sort_by_key(|d| (d.line, d.column));
        return Err(ConfigError(diags));
    }
    Ok(RunConfig {
        command: command.unwrap(),
        model: model.unwrap(),
        l_min: l_min as u32,
        l_max: l_max as u32,
        kernel_l_max: kernel_l_max as u32,
        grid_size: grid_size as usize,
        smoothing,
        theta,
        method,
        tol,
        ladder_tol,
        lambda,
        lambda_ladder,
        modifier,
        perihelion,
        r_far,
        tau_end,
        b0,
        shell,
        flow_mode,
        output_path,
        threads: threads.map(|t| t as usize),
        entries: order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("1.5"), Some(1.5));
        assert_eq!(parse_angle("pi"), Some(PI));
        assert_eq!(parse_angle("pi/3"), Some(PI / 3.0));
        assert_eq!(parse_angle("3pi/2"), Some(3.0 * PI / 2.0));
        assert_eq!(parse_angle("-0.5pi"), Some(-0.5 * PI));
        assert_eq!(parse_angle("tau"), None);
    }

    #[test]
    fn smoothing_values() {
        assert_eq!(parse_smoothing("none"), Some(Smoothing::None));
        assert_eq!(parse_smoothing("abel:0.99"), Some(Smoothing::Abel(0.99)));
        assert_eq!(parse_smoothing("gauss: 40"), Some(Smoothing::Gauss(40.0)));
        assert_eq!(parse_smoothing("abel:1"), None);
    }

    #[test]
    fn value_column_points_at_value() {
        let err = parse_config("command = selftest\n  mu =  abc\n").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!((err.0[0].line, err.0[0].column), (2, 9));
    }
}
