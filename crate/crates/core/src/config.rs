//! Run configuration: flat `key = value` text with dotted keys and `#` comments.
//!
//! ```text
//! r = 1.5
//! a = 2pi
//! ic.kind = modes
//! ic.amplitude = 0.01
//! ic.modes = 1 1 1.0 cc; 2 0 0.5 sc
//! ```
//!
//! A mode entry `m n c xy` contributes `c * X(2 pi m x / P) * Y(n theta)` where
//! `X`, `Y` are `cos` (`c`) or `sin` (`s`) and `P` is the period of the
//! simulated cell (`a` for periodic runs, `2a` for Neumann runs).

use std::f64::consts::PI;
use std::fmt;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::equilibria::cylinder_height;
use crate::flow::{FlowParams, Scheme};
use crate::geometry::SurfaceOperator;
use crate::grid::{Grid, HeightField};

/// Name of the generator behind `ic.kind = random`.
pub const RNG_ALGORITHM: &str = "ChaCha20";

pub const PRESET_STABILITY: &str = "\
# Perturbed cylinder above the critical radius: converges to a cylinder.
r = 1.5
a = 2pi
nx = 64
ntheta = 64
t_end = 50
ic.kind = modes
ic.amplitude = 0.01
ic.modes = 1 1 1.0 cc; 2 0 0.5 sc
output.dir = out/stability
";

pub const PRESET_INSTABILITY: &str = "\
# Below the critical radius the axial mode grows until the surface pinches.
r = 0.8
a = 2pi
nx = 64
ntheta = 64
tol_step = 1e-6
t_end = 200
ic.kind = modes
ic.amplitude = 1e-4
ic.modes = 1 0 1.0 cc
output.dir = out/instability
";

pub const PRESET_NEUMANN: &str = "\
# Half cell with Neumann ends, simulated through its even extension.
r = 1.5
a = pi
bc = neumann
nx = 64
ntheta = 64
t_end = 50
ic.kind = modes
ic.amplitude = 0.01
ic.modes = 1 1 1.0 cc
output.dir = out/neumann
";

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "stability" => Some(PRESET_STABILITY),
        "instability" => Some(PRESET_INSTABILITY),
        "neumann" => Some(PRESET_NEUMANN),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// 1-based line, absent for overrides and whole-config checks.
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line: None, key: key.to_string(), message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IcKind {
    Zero,
    Modes,
    OffsetCylinder,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trig {
    Cos,
    Sin,
}

impl Trig {
    fn eval(self, s: f64) -> f64 {
        match self {
            Trig::Cos => s.cos(),
            Trig::Sin => s.sin(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeTerm {
    pub m: u32,
    pub n: u32,
    pub coeff: f64,
    pub x: Trig,
    pub theta: Trig,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IcSpec {
    pub kind: IcKind,
    pub amplitude: f64,
    pub modes: Vec<ModeTerm>,
    pub seed: u64,
    /// Largest `|m|`, `n` of the random superposition.
    pub band: u32,
    pub ybar: f64,
    pub zbar: f64,
    pub rbar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: String,
    /// Series stride in accepted steps.
    pub every: usize,
    /// Snapshot stride in accepted steps; 0 keeps only the initial and final states.
    pub snapshot_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub r: f64,
    pub a: f64,
    pub nx: usize,
    pub ntheta: usize,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub tol_step: f64,
    pub tol_residual: f64,
    pub tol_fit: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub kappa: f64,
    pub dealias: bool,
    pub adaptive: bool,
    pub clearance: f64,
    pub bc: Boundary,
    pub ic: IcSpec,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let flow = FlowParams::default();
        RunConfig {
            r: 1.5,
            a: 2.0 * PI,
            nx: 64,
            ntheta: 64,
            dt0: flow.dt0,
            dt_min: flow.dt_min,
            dt_max: flow.dt_max,
            tol_step: flow.tol_step,
            tol_residual: flow.tol_residual,
            tol_fit: flow.tol_fit,
            t_end: flow.t_end,
            scheme: flow.scheme,
            kappa: flow.kappa,
            dealias: flow.operator.dealias,
            adaptive: flow.adaptive,
            clearance: flow.operator.clearance,
            bc: Boundary::Periodic,
            ic: IcSpec {
                kind: IcKind::Zero,
                amplitude: 0.0,
                modes: Vec::new(),
                seed: 0,
                band: 4,
                ybar: 0.0,
                zbar: 0.0,
                rbar: 1.5,
            },
            output: OutputSpec { dir: "out".into(), every: 10, snapshot_every: 0 },
        }
    }
}

/// Reals, optionally written as multiples of `pi`: `pi`, `2pi`, `0.5*pi`.
fn parse_real(key: &str, v: &str) -> Result<f64, ConfigError> {
    let bad = || err(key, format!("expected a number, got {v:?}"));
    let x = if let Some(head) = v.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let c = if head.is_empty() { 1.0 } else { head.parse::<f64>().map_err(|_| bad())? };
        c * PI
    } else {
        v.parse::<f64>().map_err(|_| bad())?
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| err(key, format!("expected a non-negative integer, got {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(key, format!("expected true or false, got {v:?}"))),
    }
}

fn parse_modes(key: &str, v: &str) -> Result<Vec<ModeTerm>, ConfigError> {
    let trig = |c: char| match c {
        'c' => Some(Trig::Cos),
        's' => Some(Trig::Sin),
        _ => None,
    };
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|entry| {
            let bad = || err(key, format!("mode entry {entry:?} is not `m n coeff xy`"));
            let parts: Vec<&str> = entry.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(bad());
            }
            let kinds: Vec<char> = parts[3].chars().collect();
            if kinds.len() != 2 {
                return Err(bad());
            }
            Ok(ModeTerm {
                m: parts[0].parse().map_err(|_| bad())?,
                n: parts[1].parse().map_err(|_| bad())?,
                coeff: parse_real(key, parts[2])?,
                x: trig(kinds[0]).ok_or_else(bad)?,
                theta: trig(kinds[1]).ok_or_else(bad)?,
            })
        })
        .collect()
}

impl RunConfig {
    /// Parse `text` on top of the defaults and validate the result.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    line: Some(i + 1),
                    key: line.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            cfg.set(key.trim(), value.trim()).map_err(|e| ConfigError { line: Some(i + 1), ..e })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set one key. Used for file lines and command line overrides alike.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "r" => self.r = parse_real(key, v)?,
            "a" => self.a = parse_real(key, v)?,
            "nx" => self.nx = parse_int(key, v)?,
            "ntheta" => self.ntheta = parse_int(key, v)?,
            "dt0" => self.dt0 = parse_real(key, v)?,
            "dt_min" => self.dt_min = parse_real(key, v)?,
            "dt_max" => self.dt_max = parse_real(key, v)?,
            "tol_step" => self.tol_step = parse_real(key, v)?,
            "tol_residual" => self.tol_residual = parse_real(key, v)?,
            "tol_fit" => self.tol_fit = parse_real(key, v)?,
            "t_end" => self.t_end = parse_real(key, v)?,
            "kappa" => self.kappa = parse_real(key, v)?,
            "clearance" => self.clearance = parse_real(key, v)?,
            "dealias" => self.dealias = parse_bool(key, v)?,
            "adaptive" => self.adaptive = parse_bool(key, v)?,
            "scheme" => {
                self.scheme = match v {
                    "imex1" => Scheme::Imex1,
                    "bdf2" => Scheme::Bdf2,
                    _ => return Err(err(key, format!("unknown scheme {v:?}, expected imex1 or bdf2"))),
                }
            }
            "bc" => {
                self.bc = match v {
                    "periodic" => Boundary::Periodic,
                    "neumann" => Boundary::Neumann,
                    _ => return Err(err(key, format!("unknown boundary {v:?}, expected periodic or neumann"))),
                }
            }
            "ic.kind" => {
                self.ic.kind = match v {
                    "zero" => IcKind::Zero,
                    "modes" => IcKind::Modes,
                    "offset_cylinder" => IcKind::OffsetCylinder,
                    "random" => IcKind::Random,
                    _ => return Err(err(key, format!("unknown initial condition {v:?}"))),
                }
            }
            "ic.amplitude" => self.ic.amplitude = parse_real(key, v)?,
            "ic.modes" => self.ic.modes = parse_modes(key, v)?,
            "ic.seed" => self.ic.seed = parse_int(key, v)?,
            "ic.band" => self.ic.band = parse_int(key, v)?,
            "ic.ybar" => self.ic.ybar = parse_real(key, v)?,
            "ic.zbar" => self.ic.zbar = parse_real(key, v)?,
            "ic.rbar" => self.ic.rbar = parse_real(key, v)?,
            "output.dir" => self.output.dir = v.to_string(),
            "output.every" => self.output.every = parse_int(key, v)?,
            "output.snapshot_every" => self.output.snapshot_every = parse_int(key, v)?,
            _ => return Err(err(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("r", self.r),
            ("a", self.a),
            ("dt0", self.dt0),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("tol_step", self.tol_step),
            ("tol_residual", self.tol_residual),
            ("tol_fit", self.tol_fit),
            ("t_end", self.t_end),
            ("kappa", self.kappa),
            ("clearance", self.clearance),
        ];
        for (key, v) in positive {
            if v <= 0.0 {
                return Err(err(key, format!("must be positive, got {v}")));
            }
        }
        if self.dt_min > self.dt_max {
            return Err(err("dt_min", "exceeds dt_max"));
        }
        for (key, n) in [("nx", self.nx), ("ntheta", self.ntheta)] {
            if n < 8 || n % 2 != 0 {
                return Err(err(key, format!("resolution must be even and at least 8, got {n}")));
            }
        }
        if self.ic.amplitude < 0.0 {
            return Err(err("ic.amplitude", "must be non-negative"));
        }
        if self.output.every == 0 {
            return Err(err("output.every", "must be at least 1"));
        }
        if self.ic.kind == IcKind::Modes && self.ic.modes.is_empty() {
            return Err(err("ic.modes", "required when ic.kind = modes"));
        }
        if self.bc == Boundary::Neumann {
            if let Some(t) = self.ic.modes.iter().find(|t| t.x == Trig::Sin) {
                return Err(err(
                    "ic.modes",
                    format!("mode ({}, {}) is odd in x and violates the Neumann conditions", t.m, t.n),
                ));
            }
        }
        if self.ic.kind == IcKind::OffsetCylinder {
            let off = self.ic.ybar.powi(2) + self.ic.zbar.powi(2);
            if !(self.ic.rbar > 0.0 && off < self.ic.rbar.powi(2)) {
                return Err(err("ic.rbar", "offset cylinder must enclose the axis"));
            }
        }
        Ok(())
    }

    /// Grid of the simulated periodic cell; for Neumann runs this is the
    /// `2a`-periodic extension with `nx` samples.
    pub fn grid(&self) -> crate::Result<Grid> {
        let period = match self.bc {
            Boundary::Periodic => self.a,
            Boundary::Neumann => 2.0 * self.a,
        };
        Grid::new(period, self.r, self.nx, self.ntheta)
    }

    pub fn flow_params(&self) -> FlowParams {
        FlowParams {
            scheme: self.scheme,
            kappa: self.kappa,
            dt0: self.dt0,
            dt_min: self.dt_min,
            dt_max: self.dt_max,
            tol_step: self.tol_step,
            tol_residual: self.tol_residual,
            tol_fit: self.tol_fit,
            t_end: self.t_end,
            adaptive: self.adaptive,
            output_every: self.output.every,
            symmetrize_every: None,
            max_steps: None,
            operator: SurfaceOperator { dealias: self.dealias, clearance: self.clearance },
        }
    }

    /// Initial height on `grid` (from [`RunConfig::grid`]).
    pub fn initial_field(&self, grid: &Grid) -> crate::Result<HeightField> {
        let ic = &self.ic;
        let kx = 2.0 * PI / grid.a();
        match ic.kind {
            IcKind::Zero => Ok(HeightField::zeros(grid)),
            IcKind::OffsetCylinder => cylinder_height(ic.ybar, ic.zbar, ic.rbar, grid),
            IcKind::Modes => Ok(HeightField::from_fn(grid, |x, t| {
                ic.amplitude
                    * ic.modes
                        .iter()
                        .map(|m| m.coeff * m.x.eval(kx * m.m as f64 * x) * m.theta.eval(m.n as f64 * t))
                        .sum::<f64>()
            })),
            IcKind::Random => {
                let f = random_field(grid, ic.seed, ic.band, self.bc);
                let sup = f.sup_norm();
                Ok(if sup > 0.0 { f.map(|v| ic.amplitude * v / sup) } else { f })
            }
        }
    }
}

fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * 2f64.powi(-53) * 2.0 - 1.0
}

/// Superposition of modes up to `band` with coefficients uniform in `[-1, 1)`.
///
/// Periodic: `sum u1 cos(k m x + n theta) + u2 sin(k m x + n theta)` over
/// `-band <= m <= band`, `0 <= n <= band`. Neumann: `sum cos(k m x) (u1 cos(n theta)
/// + u2 sin(n theta))` over `0 <= m, n <= band`. Draws run `m` outer, `n` inner.
pub fn random_field(grid: &Grid, seed: u64, band: u32, bc: Boundary) -> HeightField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let band = band as i64;
    let m_lo = match bc {
        Boundary::Periodic => -band,
        Boundary::Neumann => 0,
    };
    let mut terms = Vec::new();
    for m in m_lo..=band {
        for n in 0..=band {
            terms.push((m as f64, n as f64, uniform(&mut rng), uniform(&mut rng)));
        }
    }
    let kx = 2.0 * PI / grid.a();
    HeightField::from_fn(grid, |x, t| {
        terms
            .iter()
            .map(|&(m, n, u1, u2)| match bc {
                Boundary::Periodic => {
                    let s = kx * m * x + n * t;
                    u1 * s.cos() + u2 * s.sin()
                }
                Boundary::Neumann => (kx * m * x).cos() * (u1 * (n * t).cos() + u2 * (n * t).sin()),
            })
            .sum()
    })
}
