use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

/// Everything a run reads. Unknown keys are rejected.
///
/// Precedence, lowest first: built-in defaults, the `--config` JSON file,
/// trailing `key=value` pairs, then named flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub nu: u32,
    pub p: Option<f64>,
    pub eps: Option<f64>,
    /// Truncation `G`.
    pub generations: u32,
    /// Graph resolution.
    pub h: f64,
    pub samples: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    /// A `space.json` from `build-space` to load instead of enumerating.
    pub space_cache: Option<PathBuf>,
    pub cube_budget: u64,
    pub vertex_budget: usize,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub lambdas: Vec<f64>,
    pub nus: Vec<u32>,
    pub ps: Vec<f64>,
    pub qs: Vec<f64>,
    pub gens: Vec<u32>,
    pub k_max: u32,
    /// Curves per family.
    pub paths: usize,
    pub depth: Option<u32>,
    /// `none`, `gamma-i`, `gamma-q`, `gamma-q1q2`, `cone` or `double-cone`.
    pub overlay: String,
    pub tol: f64,
    pub max_iter: usize,
    pub nu_cap: u32,
    pub width_px: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lambda: 0.25,
            nu: 2,
            p: None,
            eps: None,
            generations: 2,
            h: 0.01,
            samples: None,
            seed: 0,
            out: PathBuf::from("out"),
            threads: None,
            space_cache: None,
            cube_budget: crate::space::DEFAULT_CUBE_BUDGET,
            vertex_budget: crate::metric::DEFAULT_VERTEX_BUDGET,
            r_min: None,
            r_max: None,
            lambdas: Vec::new(),
            nus: Vec::new(),
            ps: Vec::new(),
            qs: Vec::new(),
            gens: Vec::new(),
            k_max: 4,
            paths: 32,
            depth: None,
            overlay: "none".into(),
            tol: 1e-4,
            max_iter: 20_000,
            nu_cap: crate::qcmap::DEFAULT_NU_CAP,
            width_px: 800,
        }
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Layers `file`, then `pairs` (`key=value`, value parsed as JSON when it
/// parses), then `flags` over the defaults.
pub fn resolve(file: Option<&str>, pairs: &[String], flags: Map<String, Value>) -> Result<ExperimentConfig> {
    let mut merged = match serde_json::to_value(ExperimentConfig::default())? {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    if let Some(text) = file {
        match serde_json::from_str::<Value>(text).map_err(|e| Error::Usage(format!("config is not JSON: {e}")))? {
            Value::Object(m) => merged.extend(m),
            _ => return Err(Error::Usage("config must be a JSON object".into())),
        }
    }
    for kv in pairs {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected key=value, got `{kv}`")))?;
        merged.insert(k.replace('-', "_"), parse_value(v));
    }
    merged.extend(flags);
    let cfg: ExperimentConfig =
        serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Usage(format!("invalid config: {e}")))?;
    cfg.check()?;
    Ok(cfg)
}

impl ExperimentConfig {
    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Usage(m));
        if !(self.h > 0.0) {
            return bad(format!("h = {} must be positive", self.h));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol = {} must be positive", self.tol));
        }
        if self.paths == 0 {
            return bad("paths must be positive".into());
        }
        if self.width_px == 0 {
            return bad("width_px must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }
}
