//! Experiment configuration: TOML text checked against a fixed schema.
//!
//! Every problem in a file is collected before giving up, so a config is
//! either fully valid or rejected with the complete list of issues.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use congestion::brinkman_stepper::{Observers, StepControls};
use congestion::field_grid::{Boundary, Grid};
use congestion::pressure_laws::Growth;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigIssue {
    Syntax(String),
    UnknownKey { path: String, nearest: Option<String> },
    TypeMismatch { path: String, expected: &'static str, found: &'static str },
    Missing { path: String },
    Invalid { path: String, message: String },
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Syntax(m) => write!(f, "syntax error: {m}"),
            Self::UnknownKey { path, nearest: Some(n) } => write!(f, "unknown key `{path}` (did you mean `{n}`?)"),
            Self::UnknownKey { path, nearest: None } => write!(f, "unknown key `{path}`"),
            Self::TypeMismatch { path, expected, found } => write!(f, "`{path}`: expected {expected}, found {found}"),
            Self::Missing { path } => write!(f, "missing required key `{path}`"),
            Self::Invalid { path, message } => write!(f, "`{path}`: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.issues.iter().map(ToString::to_string).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LawFamily {
    Power,
    Log,
    /// Power law with `gamma = 1 / nu` for every `nu` in the schedule.
    Joint,
    Incompressible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawSpec {
    pub family: LawFamily,
    pub gamma: Vec<f64>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Bump,
    TwoBumps,
    Plateau,
    /// One bump per species, side by side.
    TwoSpecies,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatumSpec {
    pub shape: Shape,
    pub height: f64,
    pub width: f64,
    pub center: [f64; 2],
    pub separation: f64,
    /// Pressure level bounding the datum; defaults to the datum's own peak
    /// pressure.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Brinkman,
    Darcy,
    DarcyUpwind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub t_end: f64,
    pub model: Model,
    pub observers: Observers,
    pub controls: StepControls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticKind {
    Bounds,
    Internal,
    H1,
    Power,
    Entropy,
    Budget,
    Complementarity,
    SingularMass,
    FluxSwap,
}

impl DiagnosticKind {
    pub const ALL: [Self; 9] = [
        Self::Bounds,
        Self::Internal,
        Self::H1,
        Self::Power,
        Self::Entropy,
        Self::Budget,
        Self::Complementarity,
        Self::SingularMass,
        Self::FluxSwap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bounds => "bounds",
            Self::Internal => "internal",
            Self::H1 => "h1",
            Self::Power => "power",
            Self::Entropy => "entropy",
            Self::Budget => "budget",
            Self::Complementarity => "complementarity",
            Self::SingularMass => "singular-mass",
            Self::FluxSwap => "flux-swap",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.name() == name).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
            match nearest(name, &names) {
                Some(n) => format!("unknown diagnostic `{name}` (did you mean `{n}`?)"),
                None => format!("unknown diagnostic `{name}`"),
            }
        })
    }

    /// Balances that integrate over every recorded step.
    pub fn needs_every_step(self) -> bool {
        matches!(self, Self::Internal | Self::H1 | Self::Power | Self::Entropy | Self::Budget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSpec {
    pub enabled: BTreeSet<DiagnosticKind>,
    /// Largest normalized residual accepted for each energy balance.
    pub residual_tol: f64,
    pub power_order: f64,
    pub psi_radius: f64,
    pub v_p: f64,
    /// Complementarity is evaluated where `p > v_p + margin * p_H`.
    pub margin: f64,
    pub level_center: f64,
    pub level_widths: Vec<f64>,
    pub flux_delta: Option<f64>,
    pub budget_constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub nu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub joint: Vec<f64>,
    pub reference_gamma: f64,
    /// Cells per axis of the reference run; defaults to the grid's.
    pub reference_cells: Option<usize>,
    /// Observer times per convergence run.
    pub samples: usize,
    /// Largest relative L1 gap accepted between the two limit paths.
    pub diagram_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub grid: Grid,
    pub law: LawSpec,
    pub growth: Growth,
    pub initial: DatumSpec,
    pub run: RunSpec,
    pub diagnostics: DiagnosticsSpec,
    pub sweep: SweepSpec,
    pub output: PathBuf,
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a float",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "a list",
        Value::Table(_) => "a section",
    }
}

/// Closest candidate by edit distance, if any is reasonably close.
pub fn nearest<'a>(word: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(word, c), *c))
        .min()
        .filter(|(d, c)| *d <= c.len().max(word.len()).div_ceil(2))
        .map(|(_, c)| c)
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// One table of the file together with the keys the schema asked about.
struct Section<'a> {
    prefix: String,
    table: Option<&'a Table>,
    known: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn root(table: &'a Table) -> Self {
        Self { prefix: String::new(), table: Some(table), known: Vec::new() }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.known.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn missing<T>(&self, issues: &mut Vec<ConfigIssue>, key: &str, default: Option<T>) -> Option<T> {
        if default.is_none() {
            issues.push(ConfigIssue::Missing { path: self.path(key) });
        }
        default
    }

    fn mismatch(&self, issues: &mut Vec<ConfigIssue>, key: &str, expected: &'static str, v: &Value) {
        issues.push(ConfigIssue::TypeMismatch { path: self.path(key), expected, found: type_name(v) });
    }

    fn invalid(&self, issues: &mut Vec<ConfigIssue>, key: &str, message: impl Into<String>) {
        issues.push(ConfigIssue::Invalid { path: self.path(key), message: message.into() });
    }

    fn number(&mut self, issues: &mut Vec<ConfigIssue>, key: &'static str, default: Option<f64>) -> Option<f64> {
        match self.get(key) {
            None => self.missing(issues, key, default),
            Some(v) => match as_number(v) {
                Some(x) if x.is_finite() => Some(x),
                Some(x) => {
                    self.invalid(issues, key, format!("must be finite, got {x}"));
                    None
                }
                None => {
                    self.mismatch(issues, key, "a number", v);
                    None
                }
            },
        }
    }

    fn optional_number(&mut self, issues: &mut Vec<ConfigIssue>, key: &'static str) -> Option<f64> {
        if self.table.is_some_and(|t| t.contains_key(key)) {
            self.number(issues, key, None)
        } else {
            self.known.push(key);
            None
        }
    }

    fn count(&mut self, issues: &mut Vec<ConfigIssue>, key: &'static str, default: Option<usize>) -> Option<usize> {
        match self.get(key) {
            None => self.missing(issues, key, default),
            Some(Value::Integer(i)) if *i >= 0 => Some(*i as usize),
            Some(Value::Integer(i)) => {
                self.invalid(issues, key, format!("must be nonnegative, got {i}"));
                None
            }
            Some(v) => {
                self.mismatch(issues, key, "an integer", v);
                None
            }
        }
    }

    fn text(&mut self, issues: &mut Vec<ConfigIssue>, key: &'static str, default: Option<&str>) -> Option<String> {
        match self.get(key) {
            None => self.missing(issues, key, default.map(str::to_string)),
            Some(Value::String(s)) => Some(s.clone()),
            Some(v) => {
                self.mismatch(issues, key, "a string", v);
                None
            }
        }
    }

    fn choice<T: Copy>(
        &mut self,
        issues: &mut Vec<ConfigIssue>,
        key: &'static str,
        options: &[(&str, T)],
        default: Option<T>,
    ) -> Option<T> {
        let name = match self.get(key) {
            None => return self.missing(issues, key, default),
            Some(Value::String(name)) => name,
            Some(v) => {
                self.mismatch(issues, key, "a string", v);
                return None;
            }
        };
        if let Some((_, v)) = options.iter().find(|(n, _)| n == name) {
            return Some(*v);
        }
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        let hint = nearest(name, &names).map(|n| format!("; did you mean `{n}`?")).unwrap_or_default();
        self.invalid(issues, key, format!("`{name}` is not one of {}{hint}", names.join(", ")));
        None
    }

    /// A number or a list of numbers.
    fn numbers(&mut self, issues: &mut Vec<ConfigIssue>, key: &'static str, default: Option<Vec<f64>>) -> Option<Vec<f64>> {
        match self.get(key) {
            None => self.missing(issues, key, default),
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    match as_number(item) {
                        Some(x) if x.is_finite() => out.push(x),
                        _ => {
                            issues.push(ConfigIssue::TypeMismatch {
                                path: format!("{}[{i}]", self.path(key)),
                                expected: "a finite number",
                                found: type_name(item),
                            });
                            return None;
                        }
                    }
                }
                Some(out)
            }
            Some(v) => match as_number(v) {
                Some(x) if x.is_finite() => Some(vec![x]),
                _ => {
                    self.mismatch(issues, key, "a number or a list of numbers", v);
                    None
                }
            },
        }
    }

    fn strings(&mut self, issues: &mut Vec<ConfigIssue>, key: &'static str, default: Vec<String>) -> Option<Vec<String>> {
        match self.get(key) {
            None => Some(default),
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for item in items {
                    match item {
                        Value::String(s) => out.push(s.clone()),
                        other => {
                            self.mismatch(issues, key, "a list of strings", other);
                            return None;
                        }
                    }
                }
                Some(out)
            }
            Some(v) => {
                self.mismatch(issues, key, "a list of strings", v);
                None
            }
        }
    }

    fn section(&mut self, issues: &mut Vec<ConfigIssue>, key: &'static str) -> Section<'a> {
        let prefix = self.path(key);
        let table = match self.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(v) => {
                self.mismatch(issues, key, "a section", v);
                None
            }
        };
        Section { prefix, table, known: Vec::new() }
    }

    fn finish(self, issues: &mut Vec<ConfigIssue>) {
        let Some(table) = self.table else { return };
        for key in table.keys() {
            if !self.known.contains(&key.as_str()) {
                issues.push(ConfigIssue::UnknownKey {
                    path: self.path(key),
                    nearest: nearest(key, &self.known).map(str::to_string),
                });
            }
        }
    }
}

fn require(issues: &mut Vec<ConfigIssue>, path: &str, ok: bool, message: &str) {
    if !ok {
        issues.push(ConfigIssue::Invalid { path: path.to_string(), message: message.to_string() });
    }
}

fn parse_grid(root: &mut Section, issues: &mut Vec<ConfigIssue>) -> Option<Grid> {
    let mut s = root.section(issues, "grid");
    let dim = s.count(issues, "dim", Some(1));
    let cells = s.count(issues, "cells", None);
    let length = s.number(issues, "length", Some(4.0));
    let boundary =
        s.choice(issues, "boundary", &[("neumann", Boundary::Neumann), ("periodic", Boundary::Periodic)], Some(Boundary::Neumann));
    s.finish(issues);
    let grid = Grid::new(dim?, cells?, length?, boundary?);
    grid.map_err(|e| issues.push(ConfigIssue::Invalid { path: "grid".into(), message: e.to_string() })).ok()
}

fn parse_law(root: &mut Section, issues: &mut Vec<ConfigIssue>) -> Option<LawSpec> {
    let mut s = root.section(issues, "law");
    let family = s.choice(
        issues,
        "family",
        &[
            ("power", LawFamily::Power),
            ("log", LawFamily::Log),
            ("joint", LawFamily::Joint),
            ("incompressible", LawFamily::Incompressible),
        ],
        Some(LawFamily::Power),
    );
    let needs_gamma = family == Some(LawFamily::Power);
    let gamma = s.numbers(issues, "gamma", if needs_gamma { None } else { Some(Vec::new()) });
    let nu = s.numbers(issues, "nu", if family == Some(LawFamily::Incompressible) { Some(vec![0.0]) } else { None });
    s.finish(issues);
    let (family, gamma, nu) = (family?, gamma?, nu?);
    require(issues, "law.gamma", !needs_gamma || !gamma.is_empty(), "needs at least one value");
    require(issues, "law.gamma", gamma.iter().all(|&g| g >= 1.0), "every value must be at least 1");
    require(issues, "law.nu", !nu.is_empty(), "needs at least one value");
    let nu_ok = match family {
        LawFamily::Power | LawFamily::Incompressible => nu.iter().all(|&v| v >= 0.0),
        LawFamily::Log => nu.iter().all(|&v| v > 0.0),
        LawFamily::Joint => nu.iter().all(|&v| v > 0.0 && v <= 1.0),
    };
    require(issues, "law.nu", nu_ok, "value out of range for this family");
    Some(LawSpec { family, gamma, nu })
}

fn parse_growth(root: &mut Section, issues: &mut Vec<ConfigIssue>) -> Option<Growth> {
    let mut s = root.section(issues, "growth");
    #[derive(Clone, Copy)]
    enum Kind {
        Linear,
        Clamped,
        Zero,
    }
    let kind = s.choice(issues, "kind", &[("linear", Kind::Linear), ("clamped", Kind::Clamped), ("zero", Kind::Zero)], Some(Kind::Linear));
    let p_h = s.number(issues, "p_h", Some(1.0));
    let g0 = s.number(issues, "g0", Some(1.0));
    s.finish(issues);
    let (p_h, g0) = (p_h?, g0?);
    let growth = match kind? {
        Kind::Linear => Growth::linear(p_h, g0),
        Kind::Clamped => Growth::clamped(p_h, g0),
        Kind::Zero => Growth::zero(p_h),
    };
    growth.map_err(|e| issues.push(ConfigIssue::Invalid { path: "growth".into(), message: e.to_string() })).ok()
}

fn parse_initial(root: &mut Section, issues: &mut Vec<ConfigIssue>) -> Option<DatumSpec> {
    let mut s = root.section(issues, "initial");
    let shape = s.choice(
        issues,
        "shape",
        &[
            ("bump", Shape::Bump),
            ("two-bumps", Shape::TwoBumps),
            ("plateau", Shape::Plateau),
            ("two-species", Shape::TwoSpecies),
        ],
        None,
    );
    let height = s.number(issues, "height", Some(0.8));
    let width = s.number(issues, "width", Some(0.5));
    let center = s.numbers(issues, "center", Some(vec![0.0, 0.0]));
    let separation = s.number(issues, "separation", Some(1.0));
    let bound = s.optional_number(issues, "bound");
    s.finish(issues);
    let (height, width, center) = (height?, width?, center?);
    require(issues, "initial.height", height >= 0.0, "must be nonnegative");
    require(issues, "initial.width", width > 0.0, "must be positive");
    require(issues, "initial.center", (1..=2).contains(&center.len()), "needs one or two coordinates");
    let center = [center.first().copied().unwrap_or(0.0), center.get(1).copied().unwrap_or(0.0)];
    Some(DatumSpec { shape: shape?, height, width, center, separation: separation?, bound })
}

fn parse_observers(s: &mut Section, issues: &mut Vec<ConfigIssue>) -> Option<Observers> {
    match s.get("observers") {
        None => Some(Observers::EveryStep),
        Some(Value::String(v)) if v == "every-step" => Some(Observers::EveryStep),
        Some(Value::Integer(k)) if *k >= 1 => Some(Observers::Stride(*k as usize)),
        Some(Value::Array(_)) => {
            s.known.pop();
            s.numbers(issues, "observers", None).map(Observers::Times)
        }
        Some(v) => {
            s.mismatch(issues, "observers", "\"every-step\", a positive stride or a list of times", v);
            None
        }
    }
}

fn parse_run(root: &mut Section, issues: &mut Vec<ConfigIssue>) -> Option<RunSpec> {
    let mut s = root.section(issues, "run");
    let t_end = s.number(issues, "t_end", None);
    let model = s.choice(
        issues,
        "model",
        &[("brinkman", Model::Brinkman), ("darcy", Model::Darcy), ("darcy-upwind", Model::DarcyUpwind)],
        Some(Model::Brinkman),
    );
    let observers = parse_observers(&mut s, issues);
    let d = StepControls::default();
    let mut c = s.section(issues, "controls");
    let cfl_fraction = c.number(issues, "cfl_fraction", Some(d.cfl_fraction));
    let reaction_fraction = c.number(issues, "reaction_fraction", Some(d.reaction_fraction));
    let max_dt = c.number(issues, "max_dt", Some(d.max_dt));
    let boundary_cells = c.count(issues, "boundary_cells", Some(d.boundary_cells));
    let boundary_tol = c.number(issues, "boundary_tol", Some(d.boundary_tol));
    let min_dt = c.number(issues, "min_dt", Some(d.min_dt));
    c.finish(issues);
    s.finish(issues);
    let controls = StepControls {
        cfl_fraction: cfl_fraction?,
        reaction_fraction: reaction_fraction?,
        max_dt: max_dt?,
        boundary_cells: boundary_cells?,
        boundary_tol: boundary_tol?,
        min_dt: min_dt?,
    };
    let (t_end, observers) = (t_end?, observers?);
    require(issues, "run.t_end", t_end >= 0.0, "must be nonnegative");
    if let Observers::Times(times) = &observers {
        let ok = times.iter().all(|&t| (0.0..=t_end).contains(&t));
        require(issues, "run.observers", ok, "observer times must lie in [0, t_end]");
    }
    if let Err(e) = controls.validate() {
        issues.push(ConfigIssue::Invalid { path: "run.controls".into(), message: e.to_string() });
    }
    Some(RunSpec { t_end, model: model?, observers, controls })
}

fn parse_diagnostics(root: &mut Section, issues: &mut Vec<ConfigIssue>) -> Option<DiagnosticsSpec> {
    let mut s = root.section(issues, "diagnostics");
    let names = s.strings(issues, "enabled", vec!["bounds".into()]);
    let residual_tol = s.number(issues, "residual_tol", Some(0.1));
    let power_order = s.number(issues, "power_order", Some(2.0));
    let psi_radius = s.number(issues, "psi_radius", Some(1.5));
    let v_p = s.number(issues, "v_p", Some(0.0));
    let margin = s.number(issues, "margin", Some(0.05));
    let level_center = s.number(issues, "level_center", Some(0.1));
    let level_widths = s.numbers(issues, "level_widths", Some(vec![0.2, 0.1, 0.05, 0.025]));
    let flux_delta = s.optional_number(issues, "flux_delta");
    let budget_constant = s.number(issues, "budget_constant", Some(1.0));
    s.finish(issues);
    let mut enabled = BTreeSet::new();
    for (i, name) in names?.iter().enumerate() {
        match DiagnosticKind::from_name(name) {
            Ok(k) => {
                enabled.insert(k);
            }
            Err(message) => issues.push(ConfigIssue::Invalid { path: format!("diagnostics.enabled[{i}]"), message }),
        }
    }
    let power_order = power_order?;
    require(issues, "diagnostics.power_order", power_order > 1.0, "must exceed 1");
    require(issues, "diagnostics.psi_radius", psi_radius? > 0.0, "must be positive");
    let widths = level_widths?;
    require(issues, "diagnostics.level_widths", widths.iter().all(|&w| w > 0.0), "must be positive");
    Some(DiagnosticsSpec {
        enabled,
        residual_tol: residual_tol?,
        power_order,
        psi_radius: psi_radius?,
        v_p: v_p?,
        margin: margin?,
        level_center: level_center?,
        level_widths: widths,
        flux_delta,
        budget_constant: budget_constant?,
    })
}

fn parse_sweep(root: &mut Section, issues: &mut Vec<ConfigIssue>) -> Option<SweepSpec> {
    let mut s = root.section(issues, "sweep");
    let nu = s.numbers(issues, "nu", Some(Vec::new()));
    let gamma = s.numbers(issues, "gamma", Some(Vec::new()));
    let joint = s.numbers(issues, "joint", Some(Vec::new()));
    let reference_gamma = s.number(issues, "reference_gamma", Some(80.0));
    let reference_cells = match s.table.is_some_and(|t| t.contains_key("reference_cells")) {
        true => Some(s.count(issues, "reference_cells", None)),
        false => {
            s.known.push("reference_cells");
            None
        }
    };
    let samples = s.count(issues, "samples", Some(50));
    let diagram_tol = s.number(issues, "diagram_tol", Some(0.1));
    s.finish(issues);
    let (nu, gamma, joint) = (nu?, gamma?, joint?);
    require(issues, "sweep.nu", nu.iter().all(|&v| v >= 0.0), "values must be nonnegative");
    require(issues, "sweep.gamma", gamma.iter().all(|&g| g >= 1.0), "values must be at least 1");
    require(issues, "sweep.joint", joint.iter().all(|&v| v > 0.0 && v <= 1.0), "values must lie in (0, 1]");
    let samples = samples?;
    require(issues, "sweep.samples", samples >= 1, "must be positive");
    let reference_cells = match reference_cells {
        Some(c) => Some(c?),
        None => None,
    };
    Some(SweepSpec { nu, gamma, joint, reference_gamma: reference_gamma?, reference_cells, samples, diagram_tol: diagram_tol? })
}

/// Parses and validates a config; on failure every issue found is returned.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        issues: vec![ConfigIssue::Syntax(e.message().to_string())],
    })?;
    let mut issues = Vec::new();
    let mut root = Section::root(&table);
    let scenario = root.text(&mut issues, "scenario", Some("unnamed"));
    let grid = parse_grid(&mut root, &mut issues);
    let law = parse_law(&mut root, &mut issues);
    let growth = parse_growth(&mut root, &mut issues);
    let initial = parse_initial(&mut root, &mut issues);
    let run = parse_run(&mut root, &mut issues);
    let diagnostics = parse_diagnostics(&mut root, &mut issues);
    let sweep = parse_sweep(&mut root, &mut issues);
    let mut out = root.section(&mut issues, "output");
    let dir = out.text(&mut issues, "dir", Some("out"));
    out.finish(&mut issues);
    root.finish(&mut issues);
    if let (Some(grid), Some(initial)) = (&grid, &initial) {
        if initial.shape == Shape::TwoSpecies || initial.shape == Shape::TwoBumps {
            let half = grid.length() / 2.0;
            let reach = initial.center[0].abs() + initial.separation / 2.0 + initial.width;
            require(&mut issues, "initial.separation", reach < half, "datum leaves the box");
        }
    }
    if let (Some(initial), Some(sweep)) = (&initial, &sweep) {
        // the incompressible reference needs a datum it can hold
        let overlap = initial.shape == Shape::TwoSpecies && initial.separation < 2.0 * initial.width;
        let peak = if overlap { 2.0 * initial.height } else { initial.height };
        let proxied = !(sweep.gamma.is_empty() && sweep.joint.is_empty());
        require(&mut issues, "initial.height", !proxied || peak <= 1.0, "gamma and joint arms need a datum at most 1");
    }
    match (scenario, grid, law, growth, initial, run, diagnostics, sweep, dir) {
        (Some(scenario), Some(grid), Some(law), Some(growth), Some(initial), Some(run), Some(diagnostics), Some(sweep), Some(dir))
            if issues.is_empty() =>
        {
            Ok(ExperimentConfig { scenario, grid, law, growth, initial, run, diagnostics, sweep, output: dir.into() })
        }
        _ => Err(ConfigError { issues }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
cells = 256
[law]
gamma = 3
nu = 1e-3
[initial]
shape = "bump"
[run]
t_end = 0.5
"#;

    #[test]
    fn proxied_arms_need_a_datum_at_most_1() {
        let sweep = "[sweep]\njoint = [1e-1, 1e-2]\n";
        let tall = MINIMAL.replace("shape = \"bump\"", "shape = \"bump\"\nheight = 1.2");
        assert!(parse_config(&format!("{MINIMAL}{sweep}")).is_ok());
        assert!(parse_config(&tall).is_ok());
        let err = parse_config(&format!("{tall}{sweep}")).unwrap_err();
        assert!(err.issues.iter().any(|i| matches!(i, ConfigIssue::Invalid { path, .. } if path == "initial.height")));
    }

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.cells_per_axis(), 256);
        assert_eq!(c.law.gamma, vec![3.0]);
        assert_eq!(c.law.nu, vec![1e-3]);
        assert_eq!(c.initial.shape, Shape::Bump);
        assert_eq!(c.run.t_end, 0.5);
        assert_eq!(c.run.observers, Observers::EveryStep);
    }

    #[test]
    fn misspelled_key_names_the_nearest() {
        let err = parse_config(&MINIMAL.replace("gamma = 3", "gamm = 3")).unwrap_err();
        assert!(err.issues.contains(&ConfigIssue::UnknownKey { path: "law.gamm".into(), nearest: Some("gamma".into()) }));
        assert!(err.to_string().contains("did you mean `gamma`"));
    }

    #[test]
    fn list_becomes_a_schedule() {
        let c = parse_config(&MINIMAL.replace("nu = 1e-3", "nu = [1e-1, 1e-2, 1e-3]")).unwrap();
        assert_eq!(c.law.nu, vec![1e-1, 1e-2, 1e-3]);
    }

    #[test]
    fn all_issues_are_reported() {
        let text = MINIMAL.replace("cells = 256", "cells = \"many\"").replace("t_end = 0.5", "t_ned = 0.5");
        let err = parse_config(&text).unwrap_err();
        assert!(err.issues.iter().any(|i| matches!(i, ConfigIssue::TypeMismatch { path, .. } if path == "grid.cells")));
        assert!(err.issues.iter().any(|i| matches!(i, ConfigIssue::Missing { path } if path == "run.t_end")));
        assert!(err.issues.iter().any(|i| matches!(i, ConfigIssue::UnknownKey { path, .. } if path == "run.t_ned")));
    }

    #[test]
    fn bad_choices_and_syntax() {
        let err = parse_config(&MINIMAL.replace("\"bump\"", "\"bumps\"")).unwrap_err();
        assert!(err.to_string().contains("did you mean `bump`"), "{err}");
        assert!(matches!(parse_config("[grid").unwrap_err().issues[0], ConfigIssue::Syntax(_)));
        let err = parse_config(&format!("{MINIMAL}\n[diagnostics]\nenabled = [\"fluxswap\"]\n")).unwrap_err();
        assert!(err.to_string().contains("flux-swap"), "{err}");
    }

    #[test]
    fn nested_controls_and_observers() {
        let text = format!("{MINIMAL}observers = [0.1, 0.5]\n[run.controls]\nmax_dt = 1e-3\n");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.run.controls.max_dt, 1e-3);
        assert_eq!(c.run.observers, Observers::Times(vec![0.1, 0.5]));
        let bad = parse_config(&format!("{MINIMAL}observers = [0.1, 0.9]\n")).unwrap_err();
        assert!(bad.to_string().contains("observer times"));
    }
}
