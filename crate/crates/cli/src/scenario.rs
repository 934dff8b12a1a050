//! TOML scenario files.
//!
//! Every file names its `kind` at the top level; the remaining keys are the
//! parameters of that kind. Unknown keys are rejected.
//!
//! ```toml
//! kind = "pde-run"
//! extrema = [-5.0, 3.5]
//!
//! [kernel]
//! kind = "gaussian"
//! sigma = 1.0
//!
//! [run]
//! n = 8192
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavebreak_core::ode::{IntegrationOptions, SlackPair};
use wavebreak_core::threshold::SEPARATRIX_X_INTERCEPT;
use wavebreak_core::whitham::{KernelSpec, ProfileSpec, RunOptions};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Classify(ClassifySpec),
    Separatrix(SeparatrixSpec),
    Portrait(PortraitSpec),
    OdeRun(OdeRunSpec),
    OdeSweep(OdeSweepSpec),
    PdeRun(PdeRunSpec),
    PdeSweep(PdeSweepSpec),
    Report(ReportSpec),
}

/// Phase points given as `[m1, m2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySpec {
    pub points: Vec<[f64; 2]>,
}

impl Default for ClassifySpec {
    fn default() -> Self {
        Self {
            points: vec![[-5.0, 3.5], [-1.0, 0.5], [-2.0, 0.0], [-3.0, 0.0], [-3.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeparatrixSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for SeparatrixSpec {
    fn default() -> Self {
        Self {
            x_min: -8.0,
            x_max: SEPARATRIX_X_INTERCEPT,
            points: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    PhasePortrait,
    Region,
    Both,
}

/// Plot data for the phase portrait and the blow-up region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PortraitSpec {
    pub figure: Figure,
    /// Plot frame, `[min, max]` per axis.
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Arrow grid of the direction field.
    pub arrows: [usize; 2],
    /// Classification raster cells per axis.
    pub raster: [usize; 2],
    /// Samples along the separatrix polyline.
    pub separatrix_points: usize,
    pub tolerance: Tolerance,
}

impl Default for PortraitSpec {
    fn default() -> Self {
        Self {
            figure: Figure::Both,
            x_range: [-8.0, 0.0],
            y_range: [0.0, 8.0],
            arrows: [25, 25],
            raster: [200, 200],
            separatrix_points: 400,
            tolerance: Tolerance::default(),
        }
    }
}

/// Integrator settings; defaults are the sweep settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerance {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub horizon: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    pub blowup_threshold: f64,
    pub origin_radius: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        let o = IntegrationOptions::sweep();
        Self {
            rel_tol: o.rel_tol,
            abs_tol: o.abs_tol,
            horizon: o.horizon,
            initial_step: o.initial_step,
            max_steps: o.max_steps,
            blowup_threshold: o.blowup_threshold,
            origin_radius: o.origin_radius,
        }
    }
}

impl Tolerance {
    pub fn options(&self) -> IntegrationOptions {
        IntegrationOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            horizon: self.horizon,
            initial_step: self.initial_step,
            max_steps: self.max_steps,
            blowup_threshold: self.blowup_threshold,
            origin_radius: self.origin_radius,
            output_interval: None,
        }
    }

    /// `--tol` sets the relative tolerance, with the absolute one a hundred
    /// times smaller.
    pub fn override_with(&mut self, tol: f64) {
        self.rel_tol = tol;
        self.abs_tol = 1e-2 * tol;
    }

    fn validate(&self, path: &str) -> CliResult<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("horizon", self.horizon),
            ("initial_step", self.initial_step),
            ("blowup_threshold", self.blowup_threshold),
            ("origin_radius", self.origin_radius),
        ] {
            positive(&format!("{path}.{name}"), v)?;
        }
        if self.max_steps == 0 {
            return Err(field(&format!("{path}.max_steps"), "must be at least 1"));
        }
        Ok(())
    }
}

/// Seeded random piecewise-constant slack pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSlack {
    pub interval: f64,
    pub count: usize,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeRunSpec {
    pub start: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<SlackPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_slack: Option<RandomSlack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
    #[serde(default)]
    pub tolerance: Tolerance,
}

impl Default for OdeRunSpec {
    fn default() -> Self {
        Self {
            start: [-5.0, 3.5],
            slack: None,
            random_slack: None,
            seed: None,
            output_interval: None,
            tolerance: Tolerance::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeSweepSpec {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub tolerance: Tolerance,
}

impl Default for OdeSweepSpec {
    fn default() -> Self {
        Self {
            x_range: [-8.0, -0.05],
            y_range: [0.05, 8.0],
            nx: 200,
            ny: 200,
            tolerance: Tolerance::default(),
        }
    }
}

/// One Whitham run. Initial data come from `profile` or, as a shorthand,
/// from `extrema = [m1, m2]` through the balanced two-bump construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeRunSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrema: Option<[f64; 2]>,
    #[serde(default)]
    pub run: RunOptions,
}

impl Default for PdeRunSpec {
    fn default() -> Self {
        Self {
            kernel: Some(KernelSpec::Gaussian { sigma: 1.0 }),
            profile: None,
            extrema: Some([-5.0, 3.5]),
            run: RunOptions::default(),
        }
    }
}

impl PdeRunSpec {
    pub fn initial_profile(&self) -> CliResult<ProfileSpec> {
        match (&self.profile, self.extrema) {
            (Some(p), None) => Ok(p.clone()),
            (None, Some([m1, m2])) => Ok(ProfileSpec::for_extrema(m1, m2, self.run.period)?),
            _ => Err(field("pde-run.profile", "give exactly one of `profile` and `extrema`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    pub extrema: Vec<[f64; 2]>,
    #[serde(default)]
    pub run: RunOptions,
}

impl Default for PdeSweepSpec {
    fn default() -> Self {
        Self {
            kernel: Some(KernelSpec::Gaussian { sigma: 1.0 }),
            extrema: vec![[-5.0, 3.5], [-3.0, 0.0], [-2.0, 0.0], [-0.5, 0.5]],
            run: RunOptions::default(),
        }
    }
}

/// Summary over earlier artifacts plus optional random sampling of the
/// classical half-plane.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSpec {
    pub inputs: Vec<PathBuf>,
    pub seliger_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn positive(path: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(path, format!("{v} must be positive")))
    }
}

fn range(path: &str, r: [f64; 2]) -> CliResult<()> {
    if r[0].is_finite() && r[1].is_finite() && r[0] < r[1] {
        Ok(())
    } else {
        Err(field(path, format!("{r:?} must be an increasing pair")))
    }
}

fn second_quadrant(path: &str, p: [f64; 2]) -> CliResult<()> {
    if p[0].is_finite() && p[1].is_finite() && p[0] <= 0.0 && p[1] >= 0.0 && p[1] > p[0] {
        Ok(())
    } else {
        Err(field(path, format!("{p:?} must satisfy m1 <= 0 <= m2, m2 > m1")))
    }
}

/// Re-labels a core parameter error with the scenario path it came from.
fn nested(path: &str, e: wavebreak_core::Error) -> CliError {
    if let wavebreak_core::Error::Parameter { name, detail } = &e {
        return field(&format!("{path}.{name}"), detail);
    }
    match CliError::from(e) {
        CliError::Config(msg) => field(path, msg),
        other => other,
    }
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Classify(_) => "classify",
            Scenario::Separatrix(_) => "separatrix",
            Scenario::Portrait(_) => "portrait",
            Scenario::OdeRun(_) => "ode-run",
            Scenario::OdeSweep(_) => "ode-sweep",
            Scenario::PdeRun(_) => "pde-run",
            Scenario::PdeSweep(_) => "pde-sweep",
            Scenario::Report(_) => "report",
        }
    }

    /// The default scenario of a kind.
    pub fn default_for(kind: &str) -> Option<Self> {
        Some(match kind {
            "classify" => Scenario::Classify(ClassifySpec::default()),
            "separatrix" => Scenario::Separatrix(SeparatrixSpec::default()),
            "portrait" => Scenario::Portrait(PortraitSpec::default()),
            "ode-run" => Scenario::OdeRun(OdeRunSpec::default()),
            "ode-sweep" => Scenario::OdeSweep(OdeSweepSpec::default()),
            "pde-run" => Scenario::PdeRun(PdeRunSpec::default()),
            "pde-sweep" => Scenario::PdeSweep(PdeSweepSpec::default()),
            "report" => Scenario::Report(ReportSpec::default()),
            _ => return None,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        match self {
            Scenario::Classify(s) => {
                if s.points.is_empty() {
                    return Err(field("classify.points", "at least one point is required"));
                }
                for (i, p) in s.points.iter().enumerate() {
                    second_quadrant(&format!("classify.points[{i}]"), *p)?;
                }
            }
            Scenario::Separatrix(s) => {
                range("separatrix.x_min/x_max", [s.x_min, s.x_max])?;
                if s.x_max > SEPARATRIX_X_INTERCEPT {
                    return Err(field("separatrix.x_max", "must not exceed -4/e"));
                }
                if s.points < 2 {
                    return Err(field("separatrix.points", "at least 2 points are required"));
                }
            }
            Scenario::Portrait(s) => {
                range("portrait.x_range", s.x_range)?;
                range("portrait.y_range", s.y_range)?;
                if s.x_range[1] > 0.0 || s.y_range[0] < 0.0 {
                    return Err(field("portrait.x_range", "the frame must lie in the second quadrant"));
                }
                if s.arrows.iter().chain(&s.raster).any(|&n| n < 2) {
                    return Err(field("portrait.arrows/raster", "at least 2 cells per axis"));
                }
                if s.separatrix_points < 2 {
                    return Err(field("portrait.separatrix_points", "at least 2 points are required"));
                }
                s.tolerance.validate("portrait.tolerance")?;
            }
            Scenario::OdeRun(s) => {
                second_quadrant("ode-run.start", s.start)?;
                if s.slack.is_some() && s.random_slack.is_some() {
                    return Err(field("ode-run.slack", "give at most one of `slack` and `random_slack`"));
                }
                if let Some(r) = s.random_slack {
                    positive("ode-run.random_slack.interval", r.interval)?;
                    if !(r.max >= 0.0) {
                        return Err(field("ode-run.random_slack.max", "must be nonnegative"));
                    }
                    if s.seed.is_none() {
                        return Err(field("ode-run.seed", "required with `random_slack`"));
                    }
                }
                if let Some(dt) = s.output_interval {
                    positive("ode-run.output_interval", dt)?;
                }
                s.tolerance.validate("ode-run.tolerance")?;
            }
            Scenario::OdeSweep(s) => {
                range("ode-sweep.x_range", s.x_range)?;
                range("ode-sweep.y_range", s.y_range)?;
                if s.nx < 2 || s.ny < 2 {
                    return Err(field("ode-sweep.nx/ny", "at least 2 nodes per axis"));
                }
                s.tolerance.validate("ode-sweep.tolerance")?;
            }
            Scenario::PdeRun(s) => {
                let kernel = s.kernel.ok_or_else(|| field("pde-run.kernel", "missing"))?;
                kernel.validate().map_err(|e| nested("pde-run.kernel", e))?;
                s.run.validate().map_err(|e| nested("pde-run.run", e))?;
                if let Some(p) = &s.profile {
                    p.validate().map_err(|e| nested("pde-run", e))?;
                }
                if let Some(e) = s.extrema {
                    second_quadrant("pde-run.extrema", e)?;
                }
                s.initial_profile()?;
            }
            Scenario::PdeSweep(s) => {
                let kernel = s.kernel.ok_or_else(|| field("pde-sweep.kernel", "missing"))?;
                kernel.validate().map_err(|e| nested("pde-sweep.kernel", e))?;
                s.run.validate().map_err(|e| nested("pde-sweep.run", e))?;
                if s.extrema.is_empty() {
                    return Err(field("pde-sweep.extrema", "at least one pair is required"));
                }
                for (i, e) in s.extrema.iter().enumerate() {
                    second_quadrant(&format!("pde-sweep.extrema[{i}]"), *e)?;
                }
            }
            Scenario::Report(s) => {
                if s.seliger_samples > 0 && s.seed.is_none() {
                    return Err(field("report.seed", "required with `seliger_samples`"));
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize to TOML")
    }
}

/// 1-based line of the first `key = ...` assignment or `[key]` header.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        let line = line.trim_start();
        let assigned = line
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='));
        let header = line.trim_start_matches('[').trim_end().trim_end_matches(']');
        assigned || (line.starts_with('[') && header.rsplit('.').next() == Some(key))
    })
    .map(|i| i + 1)
}

/// The key named in a serde message such as ``unknown field `x` ``.
fn named_key(msg: &str) -> Option<&str> {
    let rest = msg.strip_prefix("unknown field `")?;
    rest.split('`').next()
}

/// Deserializes scenario text without validating it, so command-line
/// overrides can still fill in fields; `origin` names the source in errors.
pub fn load_scenario_str(text: &str, origin: &str) -> CliResult<Scenario> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        // The kind tag makes serde buffer the table, which drops spans for
        // errors inside it; fall back to locating the named key.
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .or_else(|| named_key(&msg).and_then(|k| key_line(text, k)));
        match line {
            Some(l) => CliError::Config(format!("{origin}:{l}: {msg}")),
            None => CliError::Config(format!("{origin}: {msg}")),
        }
    })
}

/// Parses and validates scenario text.
pub fn parse_scenario_str(text: &str, origin: &str) -> CliResult<Scenario> {
    let scenario = load_scenario_str(text, origin)?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    load_scenario_str(&text, &path.display().to_string())
}

pub fn parse_scenario(path: &Path) -> CliResult<Scenario> {
    let scenario = load_scenario(path)?;
    scenario.validate()?;
    Ok(scenario)
}
