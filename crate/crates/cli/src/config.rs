//! TOML run configuration: strict schema (unknown keys rejected with a
//! nearest-key suggestion), every default made explicit in the echo, and all
//! model/grid/scheme preconditions re-checked at parse time so a bad file
//! fails before any compute starts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use aggdiff::driver::RunConfig as CoreRunConfig;
use aggdiff::{Grid, GridDensity, ModelSpec, Result as CoreResult};
use serde_json::{json, Value as Json};
use toml::Value;

use crate::error::{CliError, Result};

/// What the scheme evolves from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// `amplitude · exp(−(x − center)² / width)`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// Sum of two Gaussians, for merger-type runs.
    TwoGaussian { amplitudes: [f64; 2], centers: [f64; 2], widths: [f64; 2] },
    /// Self-similar spreading profile of the quadratic-pressure equation at
    /// time `t0` with the given mass.
    Barenblatt { t0: f64, mass: f64 },
    /// Constant `height` on `[left, right]`, zero elsewhere.
    Block { left: f64, right: f64, height: f64 },
}

impl InitialProfile {
    pub fn build(&self, grid: Grid) -> CoreResult<GridDensity> {
        match *self {
            InitialProfile::Gaussian { amplitude, center, width } => {
                GridDensity::from_fn(grid, |x| amplitude * (-(x - center).powi(2) / width).exp())
            }
            InitialProfile::TwoGaussian { amplitudes, centers, widths } => {
                GridDensity::from_fn(grid, |x| {
                    amplitudes[0] * (-(x - centers[0]).powi(2) / widths[0]).exp()
                        + amplitudes[1] * (-(x - centers[1]).powi(2) / widths[1]).exp()
                })
            }
            InitialProfile::Barenblatt { t0, mass } => {
                aggdiff::oracle::barenblatt_profile(grid, t0, mass)
            }
            InitialProfile::Block { left, right, height } => GridDensity::from_fn(grid, |x| {
                if x >= left && x < right {
                    height
                } else {
                    0.0
                }
            }),
        }
    }

    fn echo(&self) -> Json {
        match *self {
            InitialProfile::Gaussian { amplitude, center, width } => json!({
                "profile": "gaussian", "amplitude": amplitude, "center": center, "width": width,
            }),
            InitialProfile::TwoGaussian { amplitudes, centers, widths } => json!({
                "profile": "two-gaussian",
                "amplitudes": amplitudes, "centers": centers, "widths": widths,
            }),
            InitialProfile::Barenblatt { t0, mass } => {
                json!({ "profile": "barenblatt", "t0": t0, "mass": mass })
            }
            InitialProfile::Block { left, right, height } => {
                json!({ "profile": "block", "left": left, "right": right, "height": height })
            }
        }
    }
}

/// Which solver the `run` subcommand drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Transport + reaction splitting (the full scheme).
    Splitting,
    /// Transport only; requires `k_m = 0` so the config says what it means.
    JkoOnly,
    /// Independent finite-volume solve of the same equation.
    FvOracle,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Splitting => "splitting",
            Mode::JkoOnly => "jko-only",
            Mode::FvOracle => "fv-oracle",
        })
    }
}

/// Whether a post-run check gates the exit status or is merely written to the
/// summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Off,
    Record,
    Enforce,
}

impl CheckMode {
    pub fn runs(self) -> bool {
        self != CheckMode::Off
    }

    fn as_str(self) -> &'static str {
        match self {
            CheckMode::Off => "off",
            CheckMode::Record => "record",
            CheckMode::Enforce => "enforce",
        }
    }
}

/// Per-run check switches with their tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct Checks {
    pub dissipation: CheckMode,
    pub mass: CheckMode,
    pub gronwall: CheckMode,
    pub constraint: CheckMode,
    pub constraint_tol: f64,
    /// Compare the final state against the closed-form spreading profile
    /// advanced to `t0 + T`; only valid for Barenblatt initial data with
    /// `χ = 0`, `k_m = 0`.
    pub oracle: CheckMode,
    pub oracle_budget: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            dissipation: CheckMode::Enforce,
            mass: CheckMode::Enforce,
            gronwall: CheckMode::Enforce,
            constraint: CheckMode::Record,
            constraint_tol: 1e-9,
            oracle: CheckMode::Off,
            oracle_budget: 0.02,
        }
    }
}

/// Fully validated configuration for one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub spec: ModelSpec,
    pub half_width: f64,
    pub cells: usize,
    pub tau: f64,
    pub t_final: f64,
    pub n_particles: usize,
    pub eps_grad: f64,
    pub max_iters: usize,
    pub freeze_beta_empty: bool,
    pub initial: InitialProfile,
    pub mode: Mode,
    pub output_dir: String,
    pub seed: u64,
    pub snapshot_every: usize,
    pub checks: Checks,
}

impl CliConfig {
    pub fn grid(&self) -> CoreResult<Grid> {
        Grid::new(self.half_width, self.cells)
    }

    pub fn core_run_config(&self) -> CoreRunConfig {
        let mut cfg = CoreRunConfig::new(self.tau, self.t_final, self.n_particles);
        cfg.eps_grad = self.eps_grad;
        cfg.max_iters = self.max_iters;
        cfg.freeze_beta_empty = self.freeze_beta_empty;
        cfg
    }

    /// Complete config echo — every field, defaulted or not — for the summary.
    pub fn echo(&self) -> Json {
        json!({
            "model": {
                "gamma": self.spec.gamma,
                "chi": self.spec.chi,
                "k_m": self.spec.k_m,
                "k_h": self.spec.k_h,
                "support_threshold": self.spec.support_threshold,
            },
            "grid": { "half_width": self.half_width, "cells": self.cells },
            "scheme": {
                "tau": self.tau,
                "t_final": self.t_final,
                "n_particles": self.n_particles,
                "eps_grad": self.eps_grad,
                "max_iters": self.max_iters,
                "freeze_beta_empty": self.freeze_beta_empty,
            },
            "initial": self.initial.echo(),
            "mode": self.mode.to_string(),
            "output_dir": self.output_dir,
            "seed": self.seed,
            "output": { "snapshot_every": self.snapshot_every },
            "checks": {
                "dissipation": self.checks.dissipation.as_str(),
                "mass": self.checks.mass.as_str(),
                "gronwall": self.checks.gronwall.as_str(),
                "constraint": self.checks.constraint.as_str(),
                "constraint_tol": self.checks.constraint_tol,
                "oracle": self.checks.oracle.as_str(),
                "oracle_budget": self.checks.oracle_budget,
            },
        })
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// A table walker that crosses every consumed key off and can report the rest
/// as unknown, with a nearest-match suggestion.
struct Section<'a> {
    path: &'a str,
    entries: BTreeMap<String, Value>,
}

impl<'a> Section<'a> {
    fn new(path: &'a str, table: toml::map::Map<String, Value>) -> Self {
        Self { path, entries: table.into_iter().collect() }
    }

    fn full_key(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{}", self.path, key)
        }
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(v)),
            Some(Value::Integer(v)) => Ok(Some(v as f64)),
            Some(other) => Err(config_err(format!(
                "key \"{}\" must be a number, got {}",
                self.full_key(key),
                other.type_str()
            ))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Integer(v)) if v >= 0 => Ok(Some(v as usize)),
            Some(other) => Err(config_err(format!(
                "key \"{}\" must be a non-negative integer, got {other}",
                self.full_key(key)
            ))),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Boolean(v)) => Ok(Some(v)),
            Some(other) => Err(config_err(format!(
                "key \"{}\" must be a boolean, got {}",
                self.full_key(key),
                other.type_str()
            ))),
        }
    }

    fn take_string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(v)) => Ok(Some(v)),
            Some(other) => Err(config_err(format!(
                "key \"{}\" must be a string, got {}",
                self.full_key(key),
                other.type_str()
            ))),
        }
    }

    fn take_table(&mut self, key: &str) -> Result<Option<toml::map::Map<String, Value>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(other) => Err(config_err(format!(
                "key \"{}\" must be a table ([{}] section), got {}",
                self.full_key(key),
                self.full_key(key),
                other.type_str()
            ))),
        }
    }

    /// Error for a required key that is absent. When an unconsumed key is a
    /// near-miss of it, that typo is almost surely the cause, so say so.
    fn missing(&self, key: &str) -> CliError {
        let typo = self
            .entries
            .keys()
            .map(|k| (strsim::levenshtein(k, key), k))
            .min()
            .filter(|(d, _)| *d <= 3)
            .map(|(_, k)| format!(" (found \"{}\" — did you mean \"{}\"?)", self.full_key(k), self.full_key(key)));
        config_err(format!(
            "missing key \"{}\"{}",
            self.full_key(key),
            typo.unwrap_or_default()
        ))
    }

    /// Errors on the first leftover key, suggesting the closest known one.
    fn finish(self, known: &[&str]) -> Result<()> {
        if let Some(key) = self.entries.keys().next().cloned() {
            let suggestion = known
                .iter()
                .map(|k| (strsim::levenshtein(&key, k), *k))
                .min()
                .filter(|(d, _)| *d <= 3)
                .map(|(_, k)| format!(" — did you mean \"{}\"?", self.full_key(k)));
            return Err(config_err(format!(
                "unknown key \"{}\"{}",
                self.full_key(&key),
                suggestion.unwrap_or_default()
            )));
        }
        Ok(())
    }
}

fn check_mode(section: &mut Section<'_>, key: &str, default: CheckMode) -> Result<CheckMode> {
    match section.take_string(key)? {
        None => Ok(default),
        Some(s) => match s.as_str() {
            "off" => Ok(CheckMode::Off),
            "record" => Ok(CheckMode::Record),
            "enforce" => Ok(CheckMode::Enforce),
            other => Err(config_err(format!(
                "key \"{}\" must be \"off\", \"record\", or \"enforce\", got \"{other}\"",
                section.full_key(key)
            ))),
        },
    }
}

/// Reads and fully validates a config file.
pub fn parse_config(path: &Path) -> Result<CliConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// The parse itself, file handling aside, so tests can feed strings directly.
pub fn parse_config_str(text: &str) -> Result<CliConfig> {
    let root: Value =
        text.parse().map_err(|e| config_err(format!("malformed TOML: {e}")))?;
    let Value::Table(table) = root else {
        return Err(config_err("top level must be a table"));
    };
    let mut root = Section::new("", table);

    // [model]
    let mut model = Section::new(
        "model",
        root.take_table("model")?.ok_or_else(|| config_err("missing [model] section"))?,
    );
    let gamma = model.take_f64("gamma")?.ok_or_else(|| model.missing("gamma"))?;
    let chi = model.take_f64("chi")?.unwrap_or(0.0);
    let k_m = model.take_f64("k_m")?.unwrap_or(0.0);
    let k_h = model.take_f64("k_h")?.unwrap_or(1.0);
    let support_threshold = model.take_f64("support_threshold")?.unwrap_or(0.0);
    model.finish(&["gamma", "chi", "k_m", "k_h", "support_threshold"])?;
    let spec = ModelSpec::new(gamma, chi, k_m, k_h, support_threshold)
        .map_err(|e| config_err(format!("[model] rejected: {e}")))?;

    // [grid]
    let mut grid = Section::new(
        "grid",
        root.take_table("grid")?.ok_or_else(|| config_err("missing [grid] section"))?,
    );
    let half_width = grid.take_f64("half_width")?.unwrap_or(10.0);
    let cells = grid.take_usize("cells")?.ok_or_else(|| grid.missing("cells"))?;
    grid.finish(&["half_width", "cells"])?;
    Grid::new(half_width, cells).map_err(|e| config_err(format!("[grid] rejected: {e}")))?;

    // [scheme]
    let mut scheme = Section::new(
        "scheme",
        root.take_table("scheme")?.ok_or_else(|| config_err("missing [scheme] section"))?,
    );
    let tau = scheme.take_f64("tau")?.ok_or_else(|| scheme.missing("tau"))?;
    let t_final = scheme.take_f64("t_final")?.ok_or_else(|| scheme.missing("t_final"))?;
    let n_particles = scheme.take_usize("n_particles")?.unwrap_or(400);
    let eps_grad = scheme.take_f64("eps_grad")?.unwrap_or(1e-6);
    let max_iters = scheme.take_usize("max_iters")?.unwrap_or(500);
    let freeze_beta_empty = scheme.take_bool("freeze_beta_empty")?.unwrap_or(false);
    scheme.finish(&[
        "tau",
        "t_final",
        "n_particles",
        "eps_grad",
        "max_iters",
        "freeze_beta_empty",
    ])?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(config_err(format!("key \"scheme.tau\" must be positive, got {tau}")));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(config_err(format!(
            "key \"scheme.t_final\" must be non-negative, got {t_final}"
        )));
    }
    if t_final > 0.0 {
        let ratio = t_final / tau;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(config_err(format!(
                "scheme.t_final ({t_final}) must be an integer multiple of scheme.tau ({tau})"
            )));
        }
    }
    if n_particles < 2 {
        return Err(config_err(format!(
            "key \"scheme.n_particles\" must be at least 2, got {n_particles}"
        )));
    }
    if !(eps_grad.is_finite() && eps_grad > 0.0) {
        return Err(config_err(format!(
            "key \"scheme.eps_grad\" must be positive, got {eps_grad}"
        )));
    }

    // [initial]
    let mut initial = Section::new(
        "initial",
        root.take_table("initial")?
            .ok_or_else(|| config_err("missing [initial] section"))?,
    );
    let profile = initial.take_string("profile")?.ok_or_else(|| initial.missing("profile"))?;
    let initial = match profile.as_str() {
        "gaussian" => {
            let amplitude = initial.take_f64("amplitude")?.unwrap_or(1.0);
            let center = initial.take_f64("center")?.unwrap_or(0.0);
            let width = initial.take_f64("width")?.unwrap_or(1.0);
            initial.finish(&["profile", "amplitude", "center", "width"])?;
            if amplitude <= 0.0 || width <= 0.0 {
                return Err(config_err(
                    "gaussian initial data needs positive \"initial.amplitude\" and \"initial.width\"",
                ));
            }
            InitialProfile::Gaussian { amplitude, center, width }
        }
        "two-gaussian" => {
            let a1 = initial.take_f64("amplitude_1")?.unwrap_or(1.0);
            let a2 = initial.take_f64("amplitude_2")?.unwrap_or(1.0);
            let c1 = initial.take_f64("center_1")?.unwrap_or(-1.0);
            let c2 = initial.take_f64("center_2")?.unwrap_or(1.0);
            let w1 = initial.take_f64("width_1")?.unwrap_or(1.0);
            let w2 = initial.take_f64("width_2")?.unwrap_or(1.0);
            initial.finish(&[
                "profile",
                "amplitude_1",
                "amplitude_2",
                "center_1",
                "center_2",
                "width_1",
                "width_2",
            ])?;
            if a1 <= 0.0 || a2 <= 0.0 || w1 <= 0.0 || w2 <= 0.0 {
                return Err(config_err(
                    "two-gaussian initial data needs positive amplitudes and widths",
                ));
            }
            InitialProfile::TwoGaussian {
                amplitudes: [a1, a2],
                centers: [c1, c2],
                widths: [w1, w2],
            }
        }
        "barenblatt" => {
            let t0 = initial.take_f64("t0")?.unwrap_or(1.0);
            let mass = initial.take_f64("mass")?.unwrap_or(1.0);
            initial.finish(&["profile", "t0", "mass"])?;
            if t0 <= 0.0 || mass <= 0.0 {
                return Err(config_err(
                    "barenblatt initial data needs positive \"initial.t0\" and \"initial.mass\"",
                ));
            }
            InitialProfile::Barenblatt { t0, mass }
        }
        "block" => {
            let left = initial.take_f64("left")?.unwrap_or(-1.0);
            let right = initial.take_f64("right")?.unwrap_or(1.0);
            let height = initial.take_f64("height")?.unwrap_or(1.0);
            initial.finish(&["profile", "left", "right", "height"])?;
            if right <= left || height <= 0.0 {
                return Err(config_err(
                    "block initial data needs \"initial.right\" > \"initial.left\" and positive \"initial.height\"",
                ));
            }
            InitialProfile::Block { left, right, height }
        }
        other => {
            return Err(config_err(format!(
                "key \"initial.profile\" must be one of \"gaussian\", \"two-gaussian\", \"barenblatt\", \"block\"; got \"{other}\""
            )))
        }
    };

    // top-level scalars
    let mode = match root.take_string("mode")?.as_deref() {
        None | Some("splitting") => Mode::Splitting,
        Some("jko-only") => Mode::JkoOnly,
        Some("fv-oracle") => Mode::FvOracle,
        Some(other) => {
            return Err(config_err(format!(
                "key \"mode\" must be \"splitting\", \"jko-only\", or \"fv-oracle\"; got \"{other}\""
            )))
        }
    };
    if mode == Mode::JkoOnly && spec.k_m != 0.0 {
        return Err(config_err(format!(
            "mode \"jko-only\" requires model.k_m = 0 (reaction disabled), got {}",
            spec.k_m
        )));
    }
    let output_dir = root.take_string("output_dir")?.unwrap_or_else(|| "out".to_string());
    let seed = match root.take("seed") {
        None => 0,
        Some(Value::Integer(v)) if v >= 0 => v as u64,
        Some(other) => {
            return Err(config_err(format!(
                "key \"seed\" must be a non-negative integer, got {other}"
            )))
        }
    };

    // [output]
    let mut output = Section::new("output", root.take_table("output")?.unwrap_or_default());
    let snapshot_every = output.take_usize("snapshot_every")?.unwrap_or(1);
    output.finish(&["snapshot_every"])?;
    if snapshot_every == 0 {
        return Err(config_err("key \"output.snapshot_every\" must be at least 1"));
    }

    // [checks]
    let defaults = Checks::default();
    let mut checks = Section::new("checks", root.take_table("checks")?.unwrap_or_default());
    let checks_out = Checks {
        dissipation: check_mode(&mut checks, "dissipation", defaults.dissipation)?,
        mass: check_mode(&mut checks, "mass", defaults.mass)?,
        gronwall: check_mode(&mut checks, "gronwall", defaults.gronwall)?,
        constraint: check_mode(&mut checks, "constraint", defaults.constraint)?,
        constraint_tol: checks.take_f64("constraint_tol")?.unwrap_or(defaults.constraint_tol),
        oracle: check_mode(&mut checks, "oracle", defaults.oracle)?,
        oracle_budget: checks.take_f64("oracle_budget")?.unwrap_or(defaults.oracle_budget),
    };
    checks.finish(&[
        "dissipation",
        "mass",
        "gronwall",
        "constraint",
        "constraint_tol",
        "oracle",
        "oracle_budget",
    ])?;
    if checks_out.oracle.runs() {
        let compatible = matches!(initial, InitialProfile::Barenblatt { .. })
            && spec.chi == 0.0
            && spec.k_m == 0.0;
        if !compatible {
            return Err(config_err(
                "checks.oracle needs initial.profile = \"barenblatt\" with model.chi = 0 and model.k_m = 0; \
                 the closed-form reference only solves that case",
            ));
        }
    }

    root.finish(&["model", "grid", "scheme", "initial", "mode", "output_dir", "seed", "output", "checks"])?;

    Ok(CliConfig {
        spec,
        half_width,
        cells,
        tau,
        t_final,
        n_particles,
        eps_grad,
        max_iters,
        freeze_beta_empty,
        initial,
        mode,
        output_dir,
        seed,
        snapshot_every,
        checks: checks_out,
    })
}

/// Applies a `--param key --values v` style override onto raw TOML text,
/// returning the re-serialized document. The key is dotted, e.g. `scheme.tau`.
pub fn override_key(text: &str, key: &str, value: &str) -> Result<String> {
    let mut root: Value =
        text.parse().map_err(|e| config_err(format!("malformed TOML: {e}")))?;
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = &mut root;
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_table_mut()
            .ok_or_else(|| config_err(format!("key \"{key}\" does not name a table entry")))?
            .entry(part.to_string())
            .or_insert(Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| config_err(format!("key \"{key}\" does not name a table entry")))?;
    let leaf = parts[parts.len() - 1].to_string();
    // Typed in priority order: integer, float, boolean, bare string.
    let parsed = if let Ok(v) = value.parse::<i64>() {
        Value::Integer(v)
    } else if let Ok(v) = value.parse::<f64>() {
        Value::Float(v)
    } else if let Ok(v) = value.parse::<bool>() {
        Value::Boolean(v)
    } else {
        Value::String(value.to_string())
    };
    table.insert(leaf, parsed);
    toml::to_string(&root).map_err(|e| config_err(format!("cannot re-serialize config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        gamma = 2.0
        [grid]
        cells = 128
        [scheme]
        tau = 0.01
        t_final = 0.1
        [initial]
        profile = "gaussian"
    "#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.half_width, 10.0);
        assert_eq!(cfg.n_particles, 400);
        assert_eq!(cfg.eps_grad, 1e-6);
        assert_eq!(cfg.mode, Mode::Splitting);
        assert_eq!(cfg.snapshot_every, 1);
        assert_eq!(cfg.checks, Checks::default());
        // The echo must carry the defaulted values explicitly.
        let echo = cfg.echo();
        assert_eq!(echo["scheme"]["n_particles"], 400);
        assert_eq!(echo["grid"]["half_width"], 10.0);
        assert_eq!(echo["checks"]["constraint"], "record");
    }

    #[test]
    fn unknown_key_is_rejected_with_suggestion() {
        let text = MINIMAL.replace("gamma = 2.0", "gamma = 2.0\ngamma_ = 3.0");
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(err.contains("unknown key \"model.gamma_\""), "{err}");
        assert!(err.contains("did you mean \"model.gamma\"?"), "{err}");
    }

    #[test]
    fn shallow_exponent_is_rejected_naming_the_rule() {
        let text = MINIMAL.replace("gamma = 2.0", "gamma = 0.5");
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(err.contains("[model] rejected"), "{err}");
        assert!(err.contains("gamma"), "{err}");
    }

    #[test]
    fn misaligned_horizon_is_rejected() {
        let text = MINIMAL.replace("t_final = 0.1", "t_final = 0.105");
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(err.contains("integer multiple"), "{err}");
    }

    #[test]
    fn jko_only_requires_no_reaction() {
        // `mode` is a top-level key, so it must precede the first table header.
        let text = format!("mode = \"jko-only\"\n{MINIMAL}").replace(
            "gamma = 2.0",
            "gamma = 2.0\nk_m = 0.5",
        );
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(err.contains("jko-only"), "{err}");
        let ok = format!("mode = \"jko-only\"\n{MINIMAL}");
        assert_eq!(parse_config_str(&ok).unwrap().mode, Mode::JkoOnly);
    }

    #[test]
    fn oracle_check_demands_the_closed_form_case() {
        let text = format!("{MINIMAL}\n[checks]\noracle = \"enforce\"");
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(err.contains("barenblatt"), "{err}");
    }

    #[test]
    fn override_retypes_values() {
        let out = override_key(MINIMAL, "scheme.tau", "0.02").unwrap();
        let cfg = parse_config_str(&out).unwrap();
        assert_eq!(cfg.tau, 0.02);
        let out = override_key(MINIMAL, "scheme.n_particles", "64").unwrap();
        assert_eq!(parse_config_str(&out).unwrap().n_particles, 64);
        let out = override_key(MINIMAL, "mode", "jko-only").unwrap();
        assert_eq!(parse_config_str(&out).unwrap().mode, Mode::JkoOnly);
    }

    #[test]
    fn zero_horizon_is_allowed() {
        let text = MINIMAL.replace("t_final = 0.1", "t_final = 0.0");
        assert_eq!(parse_config_str(&text).unwrap().t_final, 0.0);
    }
}
