//! TOML scenario files.
//!
//! Five flat sections: `[system]`, `[initial]`, `[propagation]`, `[grid]` and
//! `[indicator]`. Scalars may be written as plain numbers or as multiples of
//! pi (`"3.5pi"`, `"pi*1e-3"`).

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::frames::SystemParams;

/// A real number that also accepts `"<k>pi"`, `"<k>*pi"` and `"pi*<k>"`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Scalar(pub f64);

impl Scalar {
    /// Parses a product of factors joined by `*`, where each factor is a
    /// number, `pi` or `<k>pi`, with an optional leading minus sign.
    pub fn parse(text: &str) -> Option<f64> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) if rest.contains("pi") => (true, rest),
            _ => (false, t.as_str()),
        };
        let mut acc = 1.0;
        for factor in body.split('*') {
            acc *= if factor == "pi" {
                std::f64::consts::PI
            } else if let Some(k) = factor.strip_suffix("pi") {
                k.parse::<f64>().ok()? * std::f64::consts::PI
            } else {
                factor.parse::<f64>().ok()?
            };
        }
        Some(if neg { -acc } else { acc })
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Scalar(v)),
            Raw::Int(v) => Ok(Scalar(v as f64)),
            Raw::Text(s) => Scalar::parse(&s)
                .map(Scalar)
                .ok_or_else(|| serde::de::Error::custom(format!("cannot read {s:?} as a number"))),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cartesian,
    #[default]
    Ks,
    Switching,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(Mode::Cartesian),
            "ks" => Ok(Mode::Ks),
            "switching" => Ok(Mode::Switching),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// `sun-jupiter` or `sun-earth`; explicit `mu`/`eps` override it.
    pub preset: Option<String>,
    pub mu: Option<f64>,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementsSection {
    pub a: f64,
    pub e: f64,
    #[serde(default)]
    pub i: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub node: f64,
    /// True anomaly of the particle on its heliocentric orbit.
    pub f: f64,
    /// Defaults to `1 - mu`.
    pub grav_param: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "zero")]
    pub f0: Scalar,
    /// Rotating-pulsating position.
    pub position: Option<[f64; 3]>,
    pub momenta: Option<[f64; 3]>,
    /// `dr/df` in the rotating-pulsating frame, alternative to `momenta`.
    pub velocity: Option<[f64; 3]>,
    pub elements: Option<ElementsSection>,
    /// Added to the rotating position after conversion.
    pub offset_position: Option<[f64; 3]>,
    /// Added to `dr/df` after conversion.
    pub offset_velocity: Option<[f64; 3]>,
}

fn zero() -> Scalar {
    Scalar(0.0)
}

/// One leg of a propagation: run until `s` or `f` reaches `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegSection {
    pub variable: LegVariable,
    pub target: Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegVariable {
    S,
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    #[serde(default)]
    pub mode: Mode,
    /// Step in the active variable (`s` for KS and switching, `f` for
    /// Cartesian).
    pub step: Option<Scalar>,
    /// Cartesian `f` step used outside the ball in switching mode.
    pub cartesian_step: Option<Scalar>,
    #[serde(default)]
    pub legs: Vec<LegSection>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Encounter protocol: backward leg stops beyond this distance.
    #[serde(default = "one")]
    pub far_distance: f64,
    /// Switching radius; defaults to `mu^(1/3)`.
    pub switch_radius: Option<f64>,
    /// Relative half-width of the switching hysteresis band.
    #[serde(default = "default_hysteresis")]
    pub hysteresis: f64,
    /// Comparison protocol.
    #[serde(default)]
    pub ks_steps: Vec<Scalar>,
    #[serde(default)]
    pub cartesian_steps: Vec<Scalar>,
    pub s_backward: Option<Scalar>,
    pub s_forward: Option<Scalar>,
    /// A comparison row whose radius deviates from the reference by more
    /// than this is flagged as failed.
    #[serde(default = "default_failure_tolerance")]
    pub failure_tolerance: f64,
}

impl Default for PropagationSection {
    fn default() -> Self {
        Self {
            mode: Mode::Ks,
            step: None,
            cartesian_step: None,
            legs: Vec::new(),
            max_steps: default_max_steps(),
            far_distance: 1.0,
            switch_radius: None,
            hysteresis: default_hysteresis(),
            ks_steps: Vec::new(),
            cartesian_steps: Vec::new(),
            s_backward: None,
            s_forward: None,
            failure_tolerance: default_failure_tolerance(),
        }
    }
}

fn default_max_steps() -> usize {
    50_000_000
}

fn one() -> f64 {
    1.0
}

fn default_hysteresis() -> f64 {
    0.05
}

fn default_failure_tolerance() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    /// `dx/df`.
    #[serde(rename = "xp")]
    Xp,
    /// `dz/df`.
    #[serde(rename = "zp")]
    Zp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IndicatorKind {
    #[default]
    Mfli,
    Rfli,
    Tisserand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_axis: Axis,
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default = "default_cells")]
    pub nx: usize,
    pub y_axis: Axis,
    pub y_min: f64,
    pub y_max: f64,
    #[serde(default = "default_cells")]
    pub ny: usize,
    #[serde(default)]
    pub indicator: IndicatorKind,
    /// Bounds are offsets from the scenario's initial condition.
    #[serde(default)]
    pub relative: bool,
}

fn default_cells() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSection {
    #[serde(default = "default_indicator_step")]
    pub step: Scalar,
    /// Final true anomaly `F`.
    pub final_anomaly: Option<Scalar>,
    /// Defaults to the conventional Hill radius.
    pub lambda: Option<f64>,
    #[serde(default = "default_jump_threshold")]
    pub jump_threshold: f64,
    #[serde(default = "default_renorm")]
    pub renorm_threshold: f64,
    pub w0: Option<[f64; 8]>,
}

impl Default for IndicatorSection {
    fn default() -> Self {
        Self {
            step: default_indicator_step(),
            final_anomaly: None,
            lambda: None,
            jump_threshold: default_jump_threshold(),
            renorm_threshold: default_renorm(),
            w0: None,
        }
    }
}

fn default_indicator_step() -> Scalar {
    Scalar(0.02)
}

fn default_jump_threshold() -> f64 {
    0.5
}

fn default_renorm() -> f64 {
    1e100
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub propagation: PropagationSection,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub indicator: IndicatorSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let base = match &self.system.preset {
            Some(name) => Some(
                SystemParams::preset(name).ok_or_else(|| Error::InvalidConfig(format!("unknown preset {name:?}")))?,
            ),
            None => None,
        };
        let mu = self.system.mu.or(base.map(|p| p.mu));
        let eps = self.system.eps.or(base.map(|p| p.eps));
        match (mu, eps) {
            (Some(mu), Some(eps)) => SystemParams::new(mu, eps),
            _ => Err(Error::InvalidConfig("[system] needs a preset or both mu and eps".into())),
        }
    }
}
