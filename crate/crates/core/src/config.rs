//! Experiment files (JSON or TOML) and their validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fock::FockState;
use crate::hamiltonian::{FieldConfig, ReducedParams};
use crate::lattice::LatticeConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Field offset used by the two-stage multiplexer, in units of J.
#[allow(clippy::approx_constant)]
pub const MUX_FIELD_NU: f64 = -3.14;

/// A schema violation, tied to the offending field where possible.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Spectrum,
    Evolve,
    FidelityScan,
    Demux,
    Mux,
    AmpDemux,
    AmpMux,
    Lattice,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Evolve => "evolve",
            Mode::FidelityScan => "fidelity-scan",
            Mode::Demux => "demux",
            Mode::Mux => "mux",
            Mode::AmpDemux => "amp-demux",
            Mode::AmpMux => "amp-mux",
            Mode::Lattice => "lattice",
        }
    }
}

/// Model knobs in units of `J`; defaults are the reference values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default = "default_u")]
    pub u: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_j")]
    pub j: f64,
}

fn default_u() -> f64 {
    0.51
}
fn default_sigma() -> f64 {
    1.56
}
fn default_j() -> f64 {
    1.0
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { u: default_u(), sigma: default_sigma(), j: default_j() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldInput {
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_target")]
    pub target: usize,
}

fn default_nu() -> f64 {
    1.05
}
fn default_target() -> usize {
    3
}

impl Default for FieldInput {
    fn default() -> Self {
        Self { nu: default_nu(), target: default_target() }
    }
}

/// Initial condition: plain occupations or a coherent pair on two wells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialInput {
    Occupations([u32; 4]),
    CoherentPair(PairInput),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInput {
    pub q: f64,
    pub n1: u32,
    #[serde(default = "default_sites")]
    pub sites: (usize, usize),
    /// `(site, occupation)` of the remaining wells.
    #[serde(default)]
    pub spectator: Vec<(usize, u32)>,
}

fn default_sites() -> (usize, usize) {
    (1, 2)
}

/// `n` evenly spaced points over `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        crate::protocols::linspace(self.lo, self.hi, self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub mode: Mode,
    /// Total particle number where the mode does not fix it otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<u32>,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialInput>,
    /// Field target / selected well for the routing modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_grid: Option<Grid>,
    /// Duration of `evolve`, or of the readout of `amp-mux`, in `1/J`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Report `<N_j>/N` instead of `<N_j>`.
    #[serde(default = "default_true")]
    pub fractional: bool,
    /// Output stem; `.csv`, `.dat` and `.json` are appended.
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Written by the tool into sidecars; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<serde_json::Value>,
}

fn default_samples() -> usize {
    401
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// A config for `mode` with every optional field at its default.
    pub fn template(mode: Mode, output: impl Into<PathBuf>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            mode,
            particles: None,
            params: ModelParams::default(),
            lattice: None,
            field: None,
            initial_state: None,
            k: None,
            q: None,
            q_grid: None,
            sigma_grid: None,
            u_grid: None,
            t_max: None,
            samples: default_samples(),
            fractional: true,
            output: output.into(),
            seed: None,
            results: None,
        }
    }

    /// Parse JSON or TOML; the format follows the extension, falling back
    /// to sniffing the first non-blank character.
    pub fn parse(text: &str, path: Option<&Path>) -> Result<Self, ConfigError> {
        if text.trim().is_empty() {
            return Err(ConfigError::new("<root>", "configuration is empty"));
        }
        let ext = path.and_then(|p| p.extension()).and_then(|e| e.to_str());
        let json = match ext {
            Some("json") => true,
            Some("toml") => false,
            _ => text.trim_start().starts_with('{'),
        };
        let cfg: Self = if json {
            serde_json::from_str(text).map_err(|e| ConfigError::new(&json_field(&e), e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| ConfigError::new(&toml_field(&e), e.message().to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        Self::parse(&text, Some(path))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let p = &self.params;
        if !(p.u.is_finite() && p.sigma.is_finite()) {
            return Err(ConfigError::new("params", "u and sigma must be finite"));
        }
        if !(p.j.is_finite() && p.j > 0.0) {
            return Err(ConfigError::new("params.j", "hopping rate must be positive"));
        }
        if let Some(f) = &self.field {
            if !f.nu.is_finite() {
                return Err(ConfigError::new("field.nu", "must be finite"));
            }
            if !(1..=3).contains(&f.target) {
                return Err(ConfigError::new("field.target", "must be 1, 2 or 3"));
            }
        }
        if self.samples < 2 {
            return Err(ConfigError::new("samples", "need at least 2 samples"));
        }
        if self.output.as_os_str().is_empty() {
            return Err(ConfigError::new("output", "output stem is empty"));
        }
        if let Some(q) = self.q {
            if !(0.0..=1.0).contains(&q) {
                return Err(ConfigError::new("q", "must lie in [0, 1]"));
            }
        }
        if let Some(qs) = &self.q_grid {
            if qs.is_empty() || qs.iter().any(|q| !(0.0..=1.0).contains(q)) {
                return Err(ConfigError::new("q_grid", "values must lie in [0, 1]"));
            }
        }
        for (name, g) in [("sigma_grid", &self.sigma_grid), ("u_grid", &self.u_grid)] {
            if let Some(g) = g {
                if g.n == 0 || !g.lo.is_finite() || !g.hi.is_finite() || g.hi < g.lo {
                    return Err(ConfigError::new(name, "need n >= 1 and finite lo <= hi"));
                }
            }
        }
        if let Some(t) = self.t_max {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::new("t_max", "must be positive"));
            }
        }
        if let Some(InitialInput::CoherentPair(c)) = &self.initial_state {
            if !(0.0..=1.0).contains(&c.q) {
                return Err(ConfigError::new("initial_state.q", "must lie in [0, 1]"));
            }
        }
        if let Some(lat) = &self.lattice {
            lat.validate().map_err(|e| ConfigError::new("lattice", e.to_string()))?;
        }
        let need_k = |allowed: &[usize]| -> Result<usize, ConfigError> {
            match self.k {
                None => Err(ConfigError::new("k", format!("required by mode {}", self.mode.name()))),
                Some(k) if !allowed.contains(&k) => {
                    Err(ConfigError::new("k", format!("mode {} accepts {allowed:?}, got {k}", self.mode.name())))
                }
                Some(k) => Ok(k),
            }
        };
        match self.mode {
            Mode::Evolve => {
                if self.initial_state.is_none() {
                    return Err(ConfigError::new("initial_state", "required by mode evolve"));
                }
            }
            Mode::Demux => {
                need_k(&[1, 2, 3])?;
            }
            Mode::Mux => {
                need_k(&[1, 2])?;
            }
            Mode::AmpDemux => {
                need_k(&[2, 3])?;
            }
            Mode::AmpMux => {
                need_k(&[1, 2])?;
                if self.q.is_none() {
                    return Err(ConfigError::new("q", "required by mode amp-mux"));
                }
            }
            Mode::Spectrum | Mode::FidelityScan | Mode::Lattice => {}
        }
        if matches!(self.mode, Mode::Demux | Mode::Mux | Mode::AmpDemux | Mode::AmpMux) {
            if let Some(InitialInput::CoherentPair(_)) = self.initial_state {
                return Err(ConfigError::new("initial_state", "routing modes start from occupations"));
            }
            if self.field.is_some_and(|f| f.nu == 0.0) {
                return Err(ConfigError::new("field.nu", "routing needs a non-zero field"));
            }
        }
        Ok(())
    }

    pub fn field_or_default(&self) -> FieldInput {
        self.field.unwrap_or(match self.mode {
            // the two-stage multiplexer uses the stronger, reversed field
            Mode::AmpMux => FieldInput { nu: MUX_FIELD_NU, target: 3 },
            _ => FieldInput::default(),
        })
    }

    pub fn field_config(&self) -> crate::Result<FieldConfig> {
        let f = self.field_or_default();
        FieldConfig::new(f.nu, f.target)
    }

    pub fn reduced(&self, particles: u32) -> crate::Result<ReducedParams> {
        ReducedParams::new(self.params.u, self.params.sigma, self.params.j, particles)
    }

    /// Occupations of the initial state, when given as such.
    pub fn occupations(&self) -> Option<FockState> {
        match &self.initial_state {
            Some(InitialInput::Occupations(o)) => Some(FockState(*o)),
            _ => None,
        }
    }

    pub fn with_output(mut self, output: impl Into<PathBuf>) -> Self {
        self.output = output.into();
        self
    }
}

fn json_field(e: &serde_json::Error) -> String {
    // serde reports the field inside the message: "unknown field `x`", "missing field `y`"
    let msg = e.to_string();
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<root>".into())
}

fn toml_field(e: &toml::de::Error) -> String {
    let msg = e.message();
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<root>".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_rejected() {
        let e = ExperimentConfig::parse("  \n", None).unwrap_err();
        assert_eq!(e.field, "<root>");
    }

    #[test]
    fn unknown_field_is_named() {
        let e = ExperimentConfig::parse(r#"{"schema_version":1,"mode":"spectrum","output":"x","bogus":3}"#, None)
            .unwrap_err();
        assert_eq!(e.field, "bogus");
    }

    #[test]
    fn toml_and_json_agree() {
        let j = ExperimentConfig::parse(
            r#"{"schema_version":1,"mode":"mux","k":2,"output":"out/m","initial_state":[12,4,0,0]}"#,
            None,
        )
        .unwrap();
        let t = ExperimentConfig::parse(
            "schema_version = 1\nmode = \"mux\"\nk = 2\noutput = \"out/m\"\ninitial_state = [12, 4, 0, 0]\n",
            None,
        )
        .unwrap();
        assert_eq!(j, t);
        assert_eq!(j.occupations(), Some(FockState([12, 4, 0, 0])));
    }

    #[test]
    fn mode_requirements() {
        let e =
            ExperimentConfig::parse(r#"{"schema_version":1,"mode":"amp-mux","k":1,"output":"x"}"#, None).unwrap_err();
        assert_eq!(e.field, "q");
        let e = ExperimentConfig::parse(r#"{"schema_version":1,"mode":"evolve","output":"x"}"#, None).unwrap_err();
        assert_eq!(e.field, "initial_state");
        let e = ExperimentConfig::parse(r#"{"schema_version":2,"mode":"spectrum","output":"x"}"#, None).unwrap_err();
        assert_eq!(e.field, "schema_version");
    }

    #[test]
    fn coherent_pair_input() {
        let c = ExperimentConfig::parse(
            r#"{"schema_version":1,"mode":"evolve","output":"x",
                "initial_state":{"q":0.5,"n1":4,"spectator":[[4,1]]}}"#,
            None,
        )
        .unwrap();
        assert!(matches!(c.initial_state, Some(InitialInput::CoherentPair(_))));
    }
}
