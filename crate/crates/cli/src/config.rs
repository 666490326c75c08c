use std::path::{Path, PathBuf};

use duffing_core::lindblad::SteadyMethod;
use duffing_core::model::{self, LabFrameParams, ScaledParams};
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::output::Format;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledBlock {
    pub lambda: f64,
    pub beta: f64,
    pub eta: f64,
    pub nbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabBlock {
    pub m: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub gamma: f64,
    #[serde(rename = "F0")]
    pub f0: f64,
    pub nu: f64,
    pub eta: f64,
    #[serde(rename = "T_over_Omega")]
    pub t_over_omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpaceGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

/// Either an explicit list or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid1d {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid1d {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid1d::Values(v) => v.clone(),
            Grid1d::Range { start, stop, step } => {
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start + step * i as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub phase_space: Option<PhaseSpaceGrid>,
    pub eta: Option<Grid1d>,
    pub temperature: Option<Grid1d>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegeneracyScan {
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyBlock {
    pub method: Option<SteadyMethod>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scaled: Option<ScaledBlock>,
    lab_frame: Option<LabBlock>,
    truncation: Option<usize>,
    #[serde(default)]
    grids: Grids,
    degeneracy_scan: Option<DegeneracyScan>,
    steady_state: Option<SteadyBlock>,
    output_dir: Option<PathBuf>,
    format: Option<Format>,
}

/// Settings from the command line that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub method: Option<SteadyMethod>,
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ScaledParams,
    /// Temperature in units of Ω when given through the lab-frame block.
    pub temperature: Option<f64>,
    pub truncation: Option<usize>,
    pub grids: Grids,
    pub degeneracy_scan: Option<DegeneracyScan>,
    pub method: SteadyMethod,
    pub tol: f64,
    pub output_dir: PathBuf,
    pub format: Format,
    /// SHA-256 of the canonical form of the effective configuration.
    pub hash: String,
}

pub const DEFAULT_TOL: f64 = 1e-10;

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { message: format!("{}: {e}", path.display()) })?;
        Self::parse(&text, &path.display().to_string(), overrides)
    }

    pub fn parse(text: &str, origin: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let located = |e: serde_json::Error| ConfigError {
            message: format!("{origin}:{}:{}: {e}", e.line(), e.column()),
        };
        let mut value: Value = serde_json::from_str(text).map_err(located)?;
        let raw: RawConfig = serde_json::from_value(value.clone()).map_err(|e| {
            // from_value loses positions; re-run on the text for them
            match serde_json::from_str::<RawConfig>(text) {
                Err(e) => located(e),
                Ok(_) => ConfigError { message: format!("{origin}: {e}") },
            }
        })?;
        let at = |key: &str, msg: String| ConfigError { message: format!("{origin}:{}: {msg}", line_of(text, key)) };

        let (params, temperature) = match (raw.scaled, raw.lab_frame) {
            (Some(s), None) => {
                // β = 0 is the undriven limit; valid for the landscape and spectrum
                let probe_beta = if s.beta == 0.0 { 1.0 } else { s.beta };
                let params = ScaledParams::new(s.lambda, probe_beta, s.eta, s.nbar).map_err(|e| at("scaled", e.to_string()))?;
                (ScaledParams { beta: s.beta, ..params }, None)
            }
            (None, Some(l)) => {
                let lab = LabFrameParams::new(l.m, l.omega, l.gamma, l.f0, l.nu).map_err(|e| at("lab_frame", e.to_string()))?;
                if !(l.t_over_omega >= 0.0) {
                    return Err(at("T_over_Omega", format!("T_over_Omega = {} must be >= 0", l.t_over_omega)));
                }
                let nbar = model::thermal_occupation(l.t_over_omega);
                let params = model::scale(&model::derive_rwa(&lab), l.eta, nbar).map_err(|e| at("lab_frame", e.to_string()))?;
                (params, Some(l.t_over_omega))
            }
            (Some(_), Some(_)) => return Err(at("lab_frame", "give either \"scaled\" or \"lab_frame\", not both".into())),
            (None, None) => return Err(ConfigError { message: format!("{origin}: missing \"scaled\" or \"lab_frame\" block") }),
        };

        if let Some(g) = &raw.grids.phase_space {
            if g.nq < 2 || g.np < 2 {
                return Err(at("phase_space", "phase-space grid needs at least 2 points per axis".into()));
            }
            if !(g.q_max > g.q_min && g.p_max > g.p_min) {
                return Err(at("phase_space", "phase-space grid bounds must satisfy min < max".into()));
            }
        }
        for (key, grid) in [("eta", &raw.grids.eta), ("temperature", &raw.grids.temperature)] {
            if let Some(grid) = grid {
                if let Grid1d::Range { start, stop, step } = grid {
                    if !(*step > 0.0 && stop >= start) {
                        return Err(at(key, format!("{key} range needs step > 0 and stop >= start")));
                    }
                }
                let values = grid.values();
                if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(at(key, format!("{key} grid must be non-empty with finite values >= 0")));
                }
            }
        }
        if let Some(scan) = &raw.degeneracy_scan {
            if !(scan.beta_lo > 0.0 && scan.beta_hi > scan.beta_lo) || scan.points < 3 {
                return Err(at("degeneracy_scan", "degeneracy scan needs 0 < beta_lo < beta_hi and points >= 3".into()));
            }
        }
        let tol = raw.steady_state.and_then(|s| s.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(at("tol", format!("tol = {tol} must be > 0")));
        }
        let truncation = overrides.truncation.or(raw.truncation);
        if let Some(n) = truncation {
            if n < 2 {
                return Err(at("truncation", format!("truncation = {n} must be >= 2")));
            }
        }
        let method = overrides.method.or(raw.steady_state.and_then(|s| s.method)).unwrap_or(SteadyMethod::NullSpace);
        let format = overrides.format.or(raw.format).unwrap_or(Format::Csv);
        let output_dir = overrides.out.clone().or(raw.output_dir).unwrap_or_else(|| PathBuf::from("out"));

        // the hash covers everything that changes the numbers written
        if let Value::Object(map) = &mut value {
            map.remove("output_dir");
            map.insert("format".into(), Value::String(format.as_str().into()));
            if let Some(n) = truncation {
                map.insert("truncation".into(), Value::from(n));
            }
            let steady = map.entry("steady_state").or_insert_with(|| Value::Object(Default::default()));
            if let Value::Object(s) = steady {
                s.insert("method".into(), Value::String(method.as_str().into()));
                s.insert("tol".into(), Value::from(tol));
            }
        }
        let canonical = serde_json::to_string(&value).expect("serializable");
        let hash = Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();

        Ok(Self {
            params,
            temperature,
            truncation,
            grids: raw.grids,
            degeneracy_scan: raw.degeneracy_scan,
            method,
            tol,
            output_dir,
            format,
            hash,
        })
    }
}

/// 1-based line of the first occurrence of `"key"`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.find(&needle).map_or(1, |pos| text[..pos].matches('\n').count() + 1)
}
