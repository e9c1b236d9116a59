//! Command-line front end. Every subcommand produces a table (CSV) or a
//! report (JSON) whose bytes depend only on the parsed arguments.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bell::{bell_report, distinguishability, DecisionRule, MonteCarloConfig, QubitOutcome};
use crate::chsh::{chsh_sweep, optimize_chsh, ChshConfig, ChshFamily, ChshRow, SweepAxis};
use crate::error::Error;
use crate::factory::{
    bs_entangled, bs_entangled_kerr, displaced_thermal, hybrid_min_wigner, kerr_time_series, qubit_field_entangled,
    thermal_bell, thermal_qubit, thermal_superposition, two_mode_kerr_entangled, two_mode_thermal_entangled, BellLabel,
    HybridWigner, Sign,
};
use crate::kernel::{
    fringe_metrics, marginal_distribution, min_wigner, unit_phase, CompiledWigner, MinWignerConfig, PhaseSpaceState,
    SearchRegion,
};
use crate::marginal::QuadratureConvention;
use crate::oracle::{oracle_check, OracleConfig};
use crate::teleport::{teleport, CorrectionMode, ThermalQubit};

pub const ARTIFACT: &str = concat!("thermalcat/", env!("CARGO_PKG_VERSION"));
pub const SEED_ENV: &str = "THERMALCAT_SEED";

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidParameter(String),
    #[error("{message}")]
    Numerical { message: String, diagnostics: Value },
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidParameter(_) => 2,
            CliError::Numerical { .. } | CliError::Io(_) => 3,
        }
    }

    pub fn to_json(&self) -> Value {
        let kind = match self {
            CliError::InvalidParameter(_) => "invalid_parameter",
            CliError::Numerical { .. } => "numerical_failure",
            CliError::Io(_) => "io",
        };
        let diagnostics = match self {
            CliError::Numerical { diagnostics, .. } => diagnostics.clone(),
            _ => Value::Null,
        };
        json!({ "error": { "kind": kind, "message": self.to_string(), "exit_code": self.exit_code(), "diagnostics": diagnostics } })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidVariance(_)
            | Error::ModeOutOfRange { .. }
            | Error::InvalidParameter(_)
            | Error::UnnormalizedQubit(_)
            | Error::Infeasible(_) => CliError::InvalidParameter(e.to_string()),
            other => CliError::Numerical { message: other.to_string(), diagnostics: Value::Null },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

// ---------------------------------------------------------------- parsers

/// Angle as a number or a multiple/fraction of π: `pi`, `-pi/2`, `3pi/4`,
/// `2*pi/1000`, `pi-0.005`, `0.25`.
pub fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t: String = s.trim().to_lowercase().replace('π', "pi").chars().filter(|c| !c.is_whitespace() && *c != '*').collect();
    if t.is_empty() {
        return Err("empty angle".into());
    }
    // a ± b, splitting at the last sign that is not leading or an exponent
    let bytes = t.as_bytes();
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'e' {
            let (l, r) = (parse_angle(&t[..i])?, parse_angle(&t[i + 1..])?);
            return Ok(if bytes[i] == b'+' { l + r } else { l - r });
        }
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| format!("bad angle denominator in '{s}'"))?),
        None => (t.as_str(), 1.0),
    };
    let value = if let Some(coef) = num.strip_suffix("pi") {
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| format!("bad angle '{s}'"))?,
        };
        c * PI
    } else {
        num.parse::<f64>().map_err(|_| format!("bad angle '{s}'"))?
    };
    let v = value / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("angle '{s}' is not finite"))
    }
}

pub fn parse_variance(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("bad variance '{s}'"))?;
    if v >= 1.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("variance must satisfy V >= 1, got {s}"))
    }
}

pub fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("bad number '{s}'"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

pub fn parse_resolution(s: &str) -> std::result::Result<usize, String> {
    let n: usize = s.trim().parse().map_err(|_| format!("bad resolution '{s}'"))?;
    if n >= 2 {
        Ok(n)
    } else {
        Err(format!("resolution must be at least 2, got {n}"))
    }
}

/// `re`, `re,im` or a pure imaginary `0.7071i`.
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let t = s.trim();
    let z = if let Some((re, im)) = t.split_once(',') {
        C64::new(parse_finite(re)?, parse_finite(im)?)
    } else if let Some(im) = t.strip_suffix('i') {
        let c = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => parse_finite(c)?,
        };
        C64::new(0.0, c)
    } else {
        C64::new(parse_finite(t)?, 0.0)
    };
    Ok(z)
}

fn parse_sign(s: &str) -> std::result::Result<Sign, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_label(s: &str) -> std::result::Result<BellLabel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<ChshFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A single value, an inclusive range `a..b`, or a list `a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueSpec {
    Single(f64),
    Range(f64, f64),
    List(Vec<f64>),
}

impl Serialize for ValueSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ValueSpec::Single(v) => s.serialize_f64(*v),
            ValueSpec::Range(a, b) => s.serialize_str(&format!("{a}..{b}")),
            ValueSpec::List(v) => v.serialize(s),
        }
    }
}

impl ValueSpec {
    fn parse_with(s: &str, elem: fn(&str) -> std::result::Result<f64, String>) -> std::result::Result<Self, String> {
        if let Some((a, b)) = s.split_once("..") {
            Ok(ValueSpec::Range(elem(a)?, elem(b)?))
        } else if s.contains(',') {
            Ok(ValueSpec::List(s.split(',').map(elem).collect::<std::result::Result<_, _>>()?))
        } else {
            Ok(ValueSpec::Single(elem(s)?))
        }
    }

    pub fn is_single(&self) -> bool {
        match self {
            ValueSpec::Single(_) => true,
            ValueSpec::Range(a, b) => a == b,
            ValueSpec::List(v) => v.len() == 1,
        }
    }

    pub fn first(&self) -> f64 {
        match self {
            ValueSpec::Single(v) | ValueSpec::Range(v, _) => *v,
            ValueSpec::List(v) => v[0],
        }
    }

    /// Grid of `points` values; ranges are spaced per `spacing`.
    pub fn values(&self, points: usize, spacing: Spacing) -> CliResult<Vec<f64>> {
        let (a, b) = match self {
            ValueSpec::Single(v) => return Ok(vec![*v]),
            ValueSpec::List(v) => return Ok(v.clone()),
            ValueSpec::Range(a, b) => (*a, *b),
        };
        if points == 1 || a == b {
            return Ok(vec![a]);
        }
        let t = |i: usize| i as f64 / (points - 1) as f64;
        match spacing {
            Spacing::Linear => Ok((0..points).map(|i| a + (b - a) * t(i)).collect()),
            Spacing::Log => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(CliError::InvalidParameter("log spacing needs positive endpoints".into()));
                }
                Ok((0..points).map(|i| a * (b / a).powf(t(i))).collect())
            }
            Spacing::LogGap => {
                let (ga, gb) = (PI - a, PI - b);
                if !(ga > 0.0 && gb > 0.0) {
                    return Err(CliError::InvalidParameter("log-gap spacing needs endpoints below π".into()));
                }
                Ok((0..points).map(|i| PI - ga * (gb / ga).powf(t(i))).collect())
            }
        }
    }
}

fn parse_value_spec(s: &str) -> std::result::Result<ValueSpec, String> {
    ValueSpec::parse_with(s, parse_finite)
}

fn parse_angle_spec(s: &str) -> std::result::Result<ValueSpec, String> {
    ValueSpec::parse_with(s, parse_angle)
}

fn parse_variance_spec(s: &str) -> std::result::Result<ValueSpec, String> {
    ValueSpec::parse_with(s, parse_variance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
    /// Log-spaced distance `π − θ`.
    LogGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Quadrature,
    Amplitude,
}

impl From<Convention> for QuadratureConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Quadrature => QuadratureConvention::Quadrature,
            Convention::Amplitude => QuadratureConvention::Amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Threshold,
    Likelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    Formal,
    Physical,
}

/// State constructors reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    /// `ρ^th(V, d)`.
    Thermal,
    /// Thermal superposition after a Kerr rotation `φ` and a `±` readout.
    Superposition,
    /// Two modes sharing one control qubit, rotation `φ`.
    TwoModeKerr,
    /// [`StateKind::TwoModeKerr`] at `φ = π`.
    TwoModeThermal,
    /// Superposition at rotation `φ` split on a 50:50 beam splitter.
    BsKerr,
    /// [`StateKind::BsKerr`] at `φ = π`.
    Bs,
    /// Thermal-Bell state `--label`.
    Bell,
    /// Thermal-state qubit with amplitudes `--a`, `--b`.
    Qubit,
    /// Balanced qubit entangled with `ρ^th(V, d)`, qubit unmeasured; its
    /// phase space is (qubit, field).
    QubitField,
}

// ---------------------------------------------------------------- arguments

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StateArgs {
    #[arg(long, value_enum, default_value_t = StateKind::Superposition)]
    pub state: StateKind,
    #[arg(long = "V", visible_alias = "variance", default_value = "1", value_parser = parse_variance)]
    #[serde(rename = "V")]
    pub variance: f64,
    #[arg(long, default_value = "0", allow_hyphen_values = true, value_parser = parse_finite)]
    pub d: f64,
    /// Kerr rotation angle.
    #[arg(long, default_value = "pi", allow_hyphen_values = true, value_parser = parse_angle)]
    pub phi: f64,
    /// Qubit readout; the odd branch `-` is the default.
    #[arg(long, default_value = "-", allow_hyphen_values = true, value_parser = parse_sign)]
    pub sign: Sign,
    #[arg(long, default_value = "Phi+", value_parser = parse_label)]
    pub label: BellLabel,
    #[arg(long, default_value = "1", allow_hyphen_values = true, value_parser = parse_complex)]
    pub a: C64,
    #[arg(long, default_value = "0", allow_hyphen_values = true, value_parser = parse_complex)]
    pub b: C64,
}

/// Compiled Wigner function of either a field state or a qubit ⊗ field state.
enum Evaluator {
    Field(CompiledWigner),
    Hybrid(HybridWigner),
}

impl Evaluator {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Evaluator::Field(w) => w.eval(x),
            Evaluator::Hybrid(w) => w.eval(x),
        }
    }
}

impl StateArgs {
    fn complex_modes(&self) -> usize {
        match self.state {
            StateKind::Thermal | StateKind::Superposition | StateKind::Qubit => 1,
            _ => 2,
        }
    }

    pub fn build(&self) -> CliResult<PhaseSpaceState> {
        let (v, d) = (self.variance, C64::from(self.d));
        let s = match self.state {
            StateKind::Thermal => displaced_thermal(v, d)?,
            StateKind::Superposition => thermal_superposition(v, d, self.phi, self.sign)?,
            StateKind::TwoModeKerr => two_mode_kerr_entangled(v, d, self.phi, self.sign)?,
            StateKind::TwoModeThermal => two_mode_thermal_entangled(v, d, self.sign)?,
            StateKind::BsKerr => bs_entangled_kerr(v, d, self.phi, self.sign)?,
            StateKind::Bs => bs_entangled(v, d, self.sign)?,
            StateKind::Bell => thermal_bell(self.label, v, d)?,
            StateKind::Qubit => {
                let n = (self.a.norm_sqr() + self.b.norm_sqr()).sqrt();
                if n == 0.0 {
                    return Err(CliError::InvalidParameter("qubit amplitudes are both zero".into()));
                }
                thermal_qubit(self.a / n, self.b / n, v, d)?
            }
            StateKind::QubitField => {
                return Err(CliError::InvalidParameter(
                    "qubit-field has no field-only density operator; use negativity or wigner-grid".into(),
                ))
            }
        };
        Ok(s)
    }

    fn evaluator(&self) -> CliResult<Evaluator> {
        if self.state == StateKind::QubitField {
            let h = qubit_field_entangled(self.variance, C64::from(self.d), self.phi)?;
            return Ok(Evaluator::Hybrid(h.compile_wigner()?));
        }
        Ok(Evaluator::Field(self.build()?.compile_wigner()?))
    }

    fn effective_phi(&self) -> Option<f64> {
        match self.state {
            StateKind::Superposition | StateKind::TwoModeKerr | StateKind::BsKerr | StateKind::QubitField => Some(self.phi),
            StateKind::TwoModeThermal | StateKind::Bs => Some(PI),
            _ => None,
        }
    }

    /// Grid centre and half-width for `mode`. The default frame is the
    /// origin with half-width `|d| + 5√V`; when both components sit close
    /// together far from the origin the frame moves to their midpoint.
    pub fn frame(&self, mode: usize) -> (C64, f64) {
        let spread = 5.0 * self.variance.sqrt();
        let default = (ZERO, self.d.abs() + spread);
        if self.state == StateKind::QubitField && mode == 0 {
            return (ZERO, 2.5);
        }
        let Some(phi) = self.effective_phi() else { return default };
        let d = C64::from(self.d);
        let e = unit_phase(phi);
        let (mut mid, mut gap) = (d * (1.0 + e) / 2.0, (d * (1.0 - e)).norm());
        if matches!(self.state, StateKind::BsKerr | StateKind::Bs) {
            mid = if mode == 0 { mid } else { -mid } * FRAC_1_SQRT_2;
            gap *= FRAC_1_SQRT_2;
        }
        if gap < 0.5 * mid.norm() {
            (mid, gap / 2.0 + spread)
        } else {
            default
        }
    }

    /// Direction of the interference fringes on the first field mode, as a
    /// quadrature angle.
    fn fringe_angle(&self) -> f64 {
        let Some(phi) = self.effective_phi() else { return PI / 2.0 };
        let gap = C64::from(self.d) * (1.0 - unit_phase(phi));
        if gap.norm() < 1e-300 {
            PI / 2.0
        } else {
            (C64::new(0.0, 1.0) * gap).arg()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Points per axis.
    #[arg(long, default_value_t = 201, value_parser = parse_resolution)]
    pub points: usize,
    /// Half-width of the grid; defaults to the state's frame.
    #[arg(long, value_parser = parse_finite)]
    pub extent: Option<f64>,
    /// Grid centre (`re,im`); defaults to the state's frame.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub center: Option<C64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WignerGridArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    /// Phase-space coordinate scanned by the grid (qubit is 0 for qubit-field).
    #[arg(long, default_value_t = 0)]
    pub mode: usize,
    /// Value of the other coordinate for two-coordinate states.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub fixed: Option<C64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MarginalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 0)]
    pub mode: usize,
    /// Quadrature angle θ of `X_θ`.
    #[arg(long, default_value = "0", allow_hyphen_values = true, value_parser = parse_angle)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = Convention::Quadrature)]
    pub convention: Convention,
    #[arg(long, default_value_t = 201, value_parser = parse_resolution)]
    pub points: usize,
    #[arg(long, value_parser = parse_finite)]
    pub extent: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NegativityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
    /// Half-width of the search box around each coordinate's frame centre.
    #[arg(long, value_parser = parse_finite)]
    pub radius: Option<f64>,
    #[arg(long, value_parser = parse_resolution)]
    pub grid_points: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VisibilityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 0)]
    pub mode: usize,
    /// Quadrature angle; defaults to the fringe direction.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_angle)]
    pub theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Convention::Quadrature)]
    pub convention: Convention,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KerrMovieArgs {
    #[arg(long = "V", visible_alias = "variance", default_value = "1", value_parser = parse_variance)]
    #[serde(rename = "V")]
    pub variance: f64,
    #[arg(long, default_value = "0", allow_hyphen_values = true, value_parser = parse_finite)]
    pub d: f64,
    #[arg(long, default_value = "+", allow_hyphen_values = true, value_parser = parse_sign)]
    pub sign: Sign,
    /// Interaction angles θ = λt, within [0, π].
    #[arg(long, default_value = "0..pi", allow_hyphen_values = true, value_parser = parse_angle_spec)]
    pub theta: ValueSpec,
    #[arg(long, default_value_t = 9)]
    pub frames: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChshOptimizeArgs {
    #[arg(long, default_value = "two_mode_thermal", value_parser = parse_family)]
    pub family: ChshFamily,
    #[arg(long = "V", visible_alias = "variance", default_value = "1", value_parser = parse_variance)]
    #[serde(rename = "V")]
    pub variance: f64,
    #[arg(long, default_value = "2", allow_hyphen_values = true, value_parser = parse_finite)]
    pub d: f64,
    /// Kerr rotation angle.
    #[arg(long, default_value = "pi", allow_hyphen_values = true, value_parser = parse_angle)]
    pub theta: f64,
    #[arg(long, default_value = "+", allow_hyphen_values = true, value_parser = parse_sign)]
    pub sign: Sign,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChshSweepArgs {
    #[arg(long, default_value = "two_mode_thermal", value_parser = parse_family)]
    pub family: ChshFamily,
    #[arg(long = "V", visible_alias = "variance", default_value = "1", value_parser = parse_variance_spec)]
    #[serde(rename = "V")]
    pub variance: ValueSpec,
    #[arg(long, default_value = "0..5", allow_hyphen_values = true, value_parser = parse_value_spec)]
    pub d: ValueSpec,
    #[arg(long, default_value = "pi", allow_hyphen_values = true, value_parser = parse_angle_spec)]
    pub theta: ValueSpec,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub spacing: Spacing,
    #[arg(long, default_value = "+", allow_hyphen_values = true, value_parser = parse_sign)]
    pub sign: Sign,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BellMeasureArgs {
    #[arg(long, default_value = "Phi+", value_parser = parse_label)]
    pub label: BellLabel,
    #[arg(long = "V", visible_alias = "variance", default_value = "10", value_parser = parse_variance)]
    #[serde(rename = "V")]
    pub variance: f64,
    #[arg(long, default_value = "10", allow_hyphen_values = true, value_parser = parse_finite)]
    pub d: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Rule::Threshold)]
    pub rule: Rule,
    /// Also read the second homodyne detector.
    #[arg(long)]
    pub detector_d: bool,
    #[arg(long, default_value_t = 201, value_parser = parse_resolution)]
    pub points: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistinguishArgs {
    #[arg(long = "V", visible_alias = "variance", default_value = "1,10,20", value_parser = parse_variance_spec)]
    #[serde(rename = "V")]
    pub variance: ValueSpec,
    /// Displacements; d = 0 has no branch to tell apart
    #[arg(long, default_value = "0.1..12", allow_hyphen_values = true, value_parser = parse_value_spec)]
    pub d: ValueSpec,
    #[arg(long, default_value_t = 120)]
    pub points: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TeleportArgs {
    #[arg(long, default_value = "0.7071067811865476", allow_hyphen_values = true, value_parser = parse_complex)]
    pub a: C64,
    #[arg(long, default_value = "0.7071067811865476i", allow_hyphen_values = true, value_parser = parse_complex)]
    pub b: C64,
    #[arg(long = "V", visible_alias = "variance", default_value = "1", value_parser = parse_variance)]
    #[serde(rename = "V")]
    pub variance: f64,
    #[arg(long, default_value = "1,2,4,8", value_parser = parse_value_spec)]
    pub d: ValueSpec,
    #[arg(long, default_value_t = 4)]
    pub points: usize,
    #[arg(long, default_value = "Psi-", value_parser = parse_label)]
    pub channel: BellLabel,
    #[arg(long, value_enum, default_value_t = Correction::Formal)]
    pub correction: Correction,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleCheckArgs {
    #[arg(long = "max-V", default_value = "5", value_parser = parse_variance)]
    #[serde(rename = "max_V")]
    pub max_variance: f64,
    #[arg(long, default_value = "2", value_parser = parse_finite)]
    pub max_d: f64,
    #[arg(long, default_value_t = 21, value_parser = parse_resolution)]
    pub grid_points: usize,
    #[arg(long, default_value = "4", value_parser = parse_finite)]
    pub radius: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Wigner function on a square grid of one phase-space coordinate.
    WignerGrid(WignerGridArgs),
    /// Quadrature density of one mode.
    Marginal(MarginalArgs),
    /// Most negative Wigner value.
    Negativity(NegativityArgs),
    /// Fringe visibility and spacing of a quadrature density.
    Visibility(VisibilityArgs),
    /// Wigner grids of a thermal superposition over the interaction time.
    KerrMovie(KerrMovieArgs),
    /// Maximal Bell-CHSH value of one state.
    ChshOptimize(ChshOptimizeArgs),
    /// Maximal Bell-CHSH values along a parameter axis.
    ChshSweep(ChshSweepArgs),
    /// Thermal-Bell measurement statistics and Monte Carlo discrimination.
    BellMeasure(BellMeasureArgs),
    /// Distinguishability of the Φ and Ψ branches versus d.
    Distinguish(DistinguishArgs),
    /// Teleportation of a thermal-state qubit.
    Teleport(TeleportArgs),
    /// Closed forms against the truncated Fock simulation.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Clone, Parser)]
#[command(name = "thermalcat", version, about = "Phase-space simulation of thermal-state superpositions and entanglement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::WignerGrid(_) => "wigner-grid",
            Command::Marginal(_) => "marginal",
            Command::Negativity(_) => "negativity",
            Command::Visibility(_) => "visibility",
            Command::KerrMovie(_) => "kerr-movie",
            Command::ChshOptimize(_) => "chsh-optimize",
            Command::ChshSweep(_) => "chsh-sweep",
            Command::BellMeasure(_) => "bell-measure",
            Command::Distinguish(_) => "distinguish",
            Command::Teleport(_) => "teleport",
            Command::OracleCheck(_) => "oracle-check",
        }
    }

    fn output(&self) -> &OutputArgs {
        match self {
            Command::WignerGrid(a) => &a.output,
            Command::Marginal(a) => &a.output,
            Command::Negativity(a) => &a.output,
            Command::Visibility(a) => &a.output,
            Command::KerrMovie(a) => &a.output,
            Command::ChshOptimize(a) => &a.output,
            Command::ChshSweep(a) => &a.output,
            Command::BellMeasure(a) => &a.output,
            Command::Distinguish(a) => &a.output,
            Command::Teleport(a) => &a.output,
            Command::OracleCheck(a) => &a.output,
        }
    }

    /// Parameter echo: the subcommand's arguments without output routing.
    pub fn parameters(&self) -> Value {
        let v = serde_json::to_value(self).unwrap_or(Value::Null);
        match v {
            Value::Object(mut m) => m.remove(self.name()).unwrap_or(Value::Null),
            other => other,
        }
    }
}

// ---------------------------------------------------------------- output

/// Result of a subcommand: a table plus, for report-style commands, a
/// structured JSON result.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub command: &'static str,
    pub parameters: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub report: Option<Value>,
    pub default_format: Format,
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Artifact {
    fn header_line(&self) -> String {
        let mut parts = vec![format!("artifact={ARTIFACT}"), format!("command={}", self.command)];
        if let Value::Object(m) = &self.parameters {
            for (k, v) in m {
                parts.push(format!("{k}={}", cell(v)));
            }
        }
        format!("# {}", parts.join(" "))
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.header_line())?;
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
            w.write_record(&self.columns).map_err(|e| CliError::Io(e.to_string()))?;
            for row in &self.rows {
                w.write_record(row.iter().map(cell)).map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.flush()?;
        }
        Ok(buf)
    }

    pub fn to_json(&self) -> CliResult<Vec<u8>> {
        let result = match &self.report {
            Some(r) => r.clone(),
            None => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
                    .collect();
                Value::Array(rows)
            }
        };
        let doc = json!({
            "artifact": ARTIFACT,
            "command": self.command,
            "parameters": self.parameters,
            "result": result,
        });
        let mut buf = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
        buf.push(b'\n');
        Ok(buf)
    }

    pub fn render(&self, format: Option<Format>) -> CliResult<Vec<u8>> {
        match format.unwrap_or(self.default_format) {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

// ---------------------------------------------------------------- commands

fn axis(centre: f64, half: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| centre - half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
}

fn wigner_grid(a: &WignerGridArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>)> {
    let s = &a.state;
    let n_coords = s.complex_modes();
    if a.mode >= n_coords {
        return Err(Error::ModeOutOfRange { mode: a.mode, modes: n_coords }.into());
    }
    let w = s.evaluator()?;
    let (fc, fh) = s.frame(a.mode);
    let centre = a.grid.center.unwrap_or(fc);
    let half = a.grid.extent.unwrap_or(fh);
    if !(half > 0.0) {
        return Err(CliError::InvalidParameter("grid extent must be positive".into()));
    }
    let other = 1 - a.mode.min(1);
    let fixed = a.fixed.unwrap_or_else(|| if s.state == StateKind::QubitField && other == 0 { C64::new(-0.5, 0.0) } else { s.frame(other).0 });
    let (xs, ys) = (axis(centre.re, half, a.grid.points), axis(centre.im, half, a.grid.points));
    let mut rows = Vec::with_capacity(xs.len() * ys.len());
    let mut point = vec![0.0; 2 * n_coords];
    if n_coords == 2 {
        point[2 * other] = fixed.re;
        point[2 * other + 1] = fixed.im;
    }
    for &x in &xs {
        for &y in &ys {
            point[2 * a.mode] = x;
            point[2 * a.mode + 1] = y;
            rows.push(vec![num(x), num(y), num(w.eval(&point))]);
        }
    }
    Ok((vec!["re", "im", "W"], rows))
}

fn run_wigner_grid(a: &WignerGridArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let (c, r) = wigner_grid(a)?;
    Ok((c, r, None))
}

fn run_marginal(a: &MarginalArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let state = a.state.build()?;
    let conv: QuadratureConvention = a.convention.into();
    let m = marginal_distribution(&state, a.mode, a.theta, conv)?;
    let (fc, fh) = a.state.frame(a.mode);
    let centre = std::f64::consts::SQRT_2 * (fc * unit_phase(-a.theta)).re / conv.scale();
    let half = a.extent.unwrap_or(std::f64::consts::SQRT_2 * fh / conv.scale());
    let rows = axis(centre, half, a.points).into_iter().map(|x| vec![num(x), num(m.eval(x))]).collect();
    Ok((vec!["x", "P"], rows, None))
}

fn run_negativity(a: &NegativityArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let s = &a.state;
    let n = s.complex_modes();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for mode in 0..n {
        let (c, h) = if s.state == StateKind::QubitField {
            // field box around the interference term
            (if mode == 0 { ZERO } else { C64::from(s.d) * (1.0 + unit_phase(s.phi)) / 2.0 }, 2.5)
        } else {
            s.frame(mode)
        };
        let h = a.radius.unwrap_or(h);
        lower.extend([c.re - h, c.im - h]);
        upper.extend([c.re + h, c.im + h]);
    }
    let region = SearchRegion { lower, upper };
    let config = MinWignerConfig { grid_points: a.grid_points, ..MinWignerConfig::default() };
    let report = if s.state == StateKind::QubitField {
        hybrid_min_wigner(&qubit_field_entangled(s.variance, C64::from(s.d), s.phi)?, &region, &config)?
    } else {
        min_wigner(&s.build()?, &region, &config)?
    };
    let mut row = vec![num(report.value)];
    row.extend(report.point.iter().map(|&x| num(x)));
    row.extend([num(region.lower[0]), num(region.upper[0])]);
    let columns: Vec<&'static str> = if n == 1 {
        vec!["W_min", "re", "im", "box_lo", "box_hi"]
    } else {
        vec!["W_min", "re_1", "im_1", "re_2", "im_2", "box_lo", "box_hi"]
    };
    let rep = json!({
        "value": num(report.value),
        "point": report.point,
        "support_warning": report.support_warning,
        "region": { "lower": region.lower, "upper": region.upper },
    });
    Ok((columns, vec![row], Some(rep)))
}

fn run_visibility(a: &VisibilityArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let state = a.state.build()?;
    let theta = a.theta.unwrap_or_else(|| a.state.fringe_angle());
    let fm = fringe_metrics(&state, a.mode, theta, a.convention.into())?;
    let row = vec![
        num(a.state.variance),
        num(a.state.d),
        num(a.state.phi),
        num(theta),
        fm.visibility().map_or(Value::Null, num),
        fm.spacing().map_or(Value::Null, num),
    ];
    let rep = json!({ "theta": num(theta), "metrics": serde_json::to_value(&fm).map_err(|e| CliError::Io(e.to_string()))? });
    Ok((vec!["V", "d", "phi", "theta", "v", "spacing"], vec![row], Some(rep)))
}

fn run_kerr_movie(a: &KerrMovieArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let thetas = a.theta.values(a.frames.max(1), Spacing::Linear)?;
    let frames = kerr_time_series(a.variance, C64::from(a.d), &thetas, a.sign)?;
    let half = a.grid.extent.unwrap_or(a.d.abs() + 5.0 * a.variance.sqrt());
    let centre = a.grid.center.unwrap_or(ZERO);
    let (xs, ys) = (axis(centre.re, half, a.grid.points), axis(centre.im, half, a.grid.points));
    let mut rows = Vec::new();
    for f in &frames {
        match &f.state {
            None => rows.push(vec![num(f.theta), num(f.probability), Value::Null, Value::Null, Value::Null]),
            Some(s) => {
                let w = s.compile_wigner()?;
                for &x in &xs {
                    for &y in &ys {
                        rows.push(vec![num(f.theta), num(f.probability), num(x), num(y), num(w.eval(&[x, y]))]);
                    }
                }
            }
        }
    }
    Ok((vec!["theta", "probability", "re", "im", "W"], rows, None))
}

fn chsh_row(r: &ChshRow) -> Vec<Value> {
    let mut row = vec![Value::String(r.family.name().into()), num(r.variance), num(r.d), num(r.theta), num(r.result.value)];
    row.extend(r.result.argmax.to_vec().into_iter().map(num));
    row.push(Value::Bool(r.result.converged));
    row
}

const CHSH_COLUMNS: [&str; 14] =
    ["family", "V", "d", "theta", "B", "a_re", "a_im", "ap_re", "ap_im", "b_re", "b_im", "bp_re", "bp_im", "converged"];

fn run_chsh_optimize(a: &ChshOptimizeArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let state = a.family.state(a.variance, a.d, a.theta, a.sign)?;
    let mut cfg = ChshConfig::for_family(a.family, a.variance, a.d, a.theta);
    cfg.restarts = a.restarts;
    cfg.seed = a.seed;
    let result = optimize_chsh(&state, &cfg)?;
    let row = ChshRow { family: a.family, variance: a.variance, d: a.d, theta: a.theta, result };
    let rep = serde_json::to_value(&row).map_err(|e| CliError::Io(e.to_string()))?;
    Ok((CHSH_COLUMNS.to_vec(), vec![chsh_row(&row)], Some(rep)))
}

fn run_chsh_sweep(a: &ChshSweepArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let ranged = [!a.variance.is_single(), !a.d.is_single(), !a.theta.is_single()];
    if ranged.iter().filter(|&&r| r).count() > 1 {
        return Err(CliError::InvalidParameter("at most one of --V, --d, --theta may span several values".into()));
    }
    let base = ChshConfig { restarts: a.restarts, seed: a.seed, ..ChshConfig::default() };
    let (v0, d0, t0) = (a.variance.first(), a.d.first(), a.theta.first());
    let axis = if ranged[0] {
        SweepAxis::Variance { d: d0, theta: t0, values: a.variance.values(a.points, a.spacing)? }
    } else if ranged[2] {
        SweepAxis::Theta { d: d0, values: a.theta.values(a.points, a.spacing)? }
    } else {
        SweepAxis::Displacement { theta: t0, values: a.d.values(a.points, a.spacing)? }
    };
    let sweep = chsh_sweep(a.family, v0, &axis, a.sign, &base)?;
    let rows = sweep.rows.iter().map(chsh_row).collect();
    let rep = json!({
        "rows": serde_json::to_value(&sweep.rows).map_err(|e| CliError::Io(e.to_string()))?,
        "decreases": sweep.decreases,
        "unconverged": sweep.unconverged,
        "violation_window": sweep.violation_window().map(|(lo, hi)| json!([num(lo), num(hi)])),
    });
    Ok((CHSH_COLUMNS.to_vec(), rows, Some(rep)))
}

fn run_bell_measure(a: &BellMeasureArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let mc = MonteCarloConfig {
        trials: a.trials,
        seed: a.seed,
        rule: match a.rule {
            Rule::Threshold => DecisionRule::Threshold,
            Rule::Likelihood => DecisionRule::LikelihoodRatio,
        },
        use_detector_d: a.detector_d,
    };
    let half = a.d.abs() + 5.0 * a.variance.sqrt();
    let xs = axis(0.0, half, a.points);
    let report = bell_report(a.label, a.variance, a.d, &xs, &mc)?;
    let mut columns = vec!["x"];
    let mut curves: Vec<&Vec<f64>> = Vec::new();
    for o in QubitOutcome::ALL {
        if let Some(c) = report.density_grid.iter().find(|c| c.outcome == o) {
            columns.push(match o {
                QubitOutcome::PlusPlus => "P_pp",
                QubitOutcome::PlusMinus => "P_pm",
                QubitOutcome::MinusPlus => "P_mp",
                QubitOutcome::MinusMinus => "P_mm",
            });
            curves.push(&c.density);
        }
    }
    let rows = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| std::iter::once(num(x)).chain(curves.iter().map(|c| num(c[i]))).collect())
        .collect();
    let rep = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    Ok((columns, rows, Some(rep)))
}

fn run_distinguish(a: &DistinguishArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let vs = a.variance.values(a.points, Spacing::Linear)?;
    let ds = a.d.values(a.points, Spacing::Linear)?;
    let mut rows = Vec::new();
    for &v in &vs {
        for &d in &ds {
            rows.push(vec![num(v), num(d), num(distinguishability(v, d)?)]);
        }
    }
    Ok((vec!["V", "d", "P_s"], rows, None))
}

fn run_teleport(a: &TeleportArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let mode = match a.correction {
        Correction::Formal => CorrectionMode::Formal,
        Correction::Physical => CorrectionMode::Physical,
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for d in a.d.values(a.points, Spacing::Linear)? {
        let q = ThermalQubit::new(a.a, a.b, a.variance, d)?;
        for r in teleport(&q, a.channel, mode)? {
            rows.push(vec![
                num(d),
                Value::String(r.outcome.name().into()),
                num(r.probability),
                serde_json::to_value(r.correction).unwrap_or(Value::Null),
                r.hs_overlap.map_or(Value::Null, num),
                r.exact_match.map_or(Value::Null, Value::Bool),
                Value::Bool(r.skipped),
            ]);
            reports.push(json!({ "d": num(d), "report": serde_json::to_value(&r).map_err(|e| CliError::Io(e.to_string()))? }));
        }
    }
    Ok((vec!["d", "outcome", "probability", "correction", "hs_overlap", "exact_match", "skipped"], rows, Some(Value::Array(reports))))
}

fn run_oracle_check(a: &OracleCheckArgs) -> CliResult<(Vec<&'static str>, Vec<Vec<Value>>, Option<Value>)> {
    let cfg = OracleConfig { max_variance: a.max_variance, max_displacement: a.max_d, grid_points: a.grid_points, radius: a.radius };
    let report = oracle_check(&cfg)?;
    let rows = report
        .cases
        .iter()
        .map(|c| {
            vec![
                Value::String(c.constructor.clone()),
                num(c.variance),
                num(c.displacement),
                c.phi.map_or(Value::Null, num),
                c.label.clone().map_or(Value::Null, Value::String),
                json!(c.cutoff),
                num(c.truncation_deficit),
                Value::Bool(c.certified),
                num(c.max_wigner_deviation),
                c.probability_deviation.map_or(Value::Null, num),
            ]
        })
        .collect();
    let mut rep = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    // wall-clock time would break byte-identical output
    if let Value::Object(m) = &mut rep {
        m.remove("elapsed_seconds");
    }
    let columns = vec![
        "constructor",
        "V",
        "d",
        "phi",
        "label",
        "cutoff",
        "truncation_deficit",
        "certified",
        "max_wigner_deviation",
        "probability_deviation",
    ];
    Ok((columns, rows, Some(rep)))
}

/// Runs a parsed command. A failed oracle check still returns its
/// artifact, paired with the numerical-failure error.
pub fn run(command: &Command) -> (Option<Artifact>, Option<CliError>) {
    let outcome = match command {
        Command::WignerGrid(a) => run_wigner_grid(a),
        Command::Marginal(a) => run_marginal(a),
        Command::Negativity(a) => run_negativity(a),
        Command::Visibility(a) => run_visibility(a),
        Command::KerrMovie(a) => run_kerr_movie(a),
        Command::ChshOptimize(a) => run_chsh_optimize(a),
        Command::ChshSweep(a) => run_chsh_sweep(a),
        Command::BellMeasure(a) => run_bell_measure(a),
        Command::Distinguish(a) => run_distinguish(a),
        Command::Teleport(a) => run_teleport(a),
        Command::OracleCheck(a) => run_oracle_check(a),
    };
    let (columns, rows, report) = match outcome {
        Ok(x) => x,
        Err(e) => return (None, Some(e)),
    };
    let default_format = match command {
        Command::Negativity(_)
        | Command::ChshOptimize(_)
        | Command::BellMeasure(_)
        | Command::Teleport(_)
        | Command::OracleCheck(_) => Format::Json,
        _ => Format::Csv,
    };
    let failure = match (command, &report) {
        (Command::OracleCheck(_), Some(r)) if r.get("passed") != Some(&Value::Bool(true)) => Some(CliError::Numerical {
            message: "oracle check failed".into(),
            diagnostics: json!({
                "max_wigner_deviation": r.get("max_wigner_deviation"),
                "max_probability_deviation": r.get("max_probability_deviation"),
                "parity_residual": r.get("parity_residual"),
            }),
        }),
        _ => None,
    };
    let artifact = Artifact { command: command.name(), parameters: command.parameters(), columns, rows, report, default_format };
    (Some(artifact), failure)
}

fn emit(command: &Command, artifact: &Artifact) -> CliResult<()> {
    let out = command.output();
    let bytes = artifact.render(out.format)?;
    match &out.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return 0;
            }
            let err = CliError::InvalidParameter(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let (artifact, failure) = run(&cli.command);
    let failure = match artifact {
        Some(a) => match emit(&cli.command, &a) {
            Ok(()) => failure,
            Err(e) => Some(e),
        },
        None => failure,
    };
    match failure {
        None => 0,
        Some(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        let mut v = vec!["thermalcat"];
        v.extend_from_slice(args);
        Cli::try_parse_from(v).unwrap().command
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/1000").unwrap(), PI / 1000.0);
        assert_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_angle("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("1e-3").unwrap(), 1e-3);
        assert!((parse_angle("pi-0.005").unwrap() - (PI - 0.005)).abs() < 1e-15);
        assert!(parse_angle("tau").is_err());
        assert!(parse_angle("pi/0").is_err());
    }

    #[test]
    fn complex_and_specs() {
        assert_eq!(parse_complex("1,-2").unwrap(), C64::new(1.0, -2.0));
        assert_eq!(parse_complex("0.5i").unwrap(), C64::new(0.0, 0.5));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_value_spec("0..0").unwrap(), ValueSpec::Range(0.0, 0.0));
        assert_eq!(parse_value_spec("1,2,4").unwrap(), ValueSpec::List(vec![1.0, 2.0, 4.0]));
        assert_eq!(parse_value_spec("0..0").unwrap().values(1, Spacing::Linear).unwrap(), vec![0.0]);
        let g = ValueSpec::Range(0.0, PI - 0.005).values(3, Spacing::LogGap).unwrap();
        assert!((g[0] - 0.0).abs() < 1e-12 && (g[2] - (PI - 0.005)).abs() < 1e-12);
        assert!(parse_variance("0.5").is_err());
        assert!(parse_resolution("1").is_err());
    }

    #[test]
    fn visibility_example() {
        let cmd = parse(&["visibility", "--V", "100", "--d", "100", "--phi", "pi"]);
        let (art, err) = run(&cmd);
        assert!(err.is_none());
        let art = art.unwrap();
        let csv = String::from_utf8(art.to_csv().unwrap()).unwrap();
        assert!(csv.starts_with("# artifact=thermalcat/"), "{csv}");
        let v = art.rows[0][4].as_f64().unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn invalid_parameters_exit_two() {
        assert_eq!(main_with_args(["thermalcat", "visibility", "--V", "0.5"]), 2);
        assert_eq!(main_with_args(["thermalcat", "wigner-grid", "--points", "1"]), 2);
        assert_eq!(main_with_args(["thermalcat", "marginal", "--mode", "3"]), 2);
        assert_eq!(main_with_args(["thermalcat", "teleport", "--d", "0"]), 2);
    }

    #[test]
    fn outputs_are_deterministic() {
        let args = ["wigner-grid", "--state", "superposition", "--V", "2", "--d", "1.5", "--points", "11", "--sign", "+"];
        let a = run(&parse(&args)).0.unwrap().to_csv().unwrap();
        let b = run(&parse(&args)).0.unwrap().to_csv().unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 2 + 121);
        assert!(text.lines().nth(1).unwrap() == "re,im,W");
    }

    #[test]
    fn default_frame_recentres_clustered_components() {
        let cmd = parse(&["wigner-grid", "--V", "5", "--d", "2000", "--phi", "pi/1000"]);
        let Command::WignerGrid(a) = cmd else { unreachable!() };
        let (c, h) = a.state.frame(0);
        assert!((c.re - 2000.0).abs() < 1e-2 && h < 20.0, "{c} {h}");
        let cmd = parse(&["wigner-grid", "--V", "4", "--d", "3"]);
        let Command::WignerGrid(a) = cmd else { unreachable!() };
        assert_eq!(a.state.frame(0), (ZERO, 3.0 + 10.0));
    }

    #[test]
    fn json_keys_are_stable() {
        let cmd = parse(&["negativity", "--state", "superposition", "--V", "3", "--d", "0", "--sign", "-"]);
        let art = run(&cmd).0.unwrap();
        let text = String::from_utf8(art.to_json().unwrap()).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        let v = doc["result"]["value"].as_f64().unwrap();
        assert!((v + 2.0 / PI).abs() < 1e-9, "{v}");
        assert!(text.find("\"artifact\"").unwrap() < text.find("\"command\"").unwrap());
    }
}
