use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hilange_core::analysis::Sweep;
use hilange_core::models::{ModelId, ModelParams};
use hilange_core::spectral::{FrequencyGrid, NoiseModel};
use hilange_core::timedomain::SdeRun;
use hilange_core::verify::VerifyOptions;
use serde::{Deserialize, Serialize};

/// Time-domain integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Sde,
    Ode,
}

/// One JSON document driving a command.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Must name the subcommand when present.
    pub command: Option<String>,
    pub model: Option<ModelId>,
    pub params: ModelParams,
    pub grid: Option<FrequencyGrid>,
    /// Replaces or adds input noise models by id.
    pub noise: BTreeMap<String, NoiseModel>,
    pub run: Option<SdeRun>,
    pub integrator: Integrator,
    /// Diode chain orders for a convergence study.
    pub orders: Vec<usize>,
    pub sweep: Option<Sweep>,
    pub verify: Option<VerifyOptions>,
    pub seed: Option<u64>,
    pub tolerance: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
}

/// Tolerance keys accepted by `--tolerance` and the `tolerance` object.
pub const TOLERANCE_KEYS: [(&str, f64); 2] = [("stability", 1e-9), ("oracle", 1e-10)];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("at '{path}': {}", e.into_inner())
        })?;
        for key in cfg.tolerance.keys() {
            check_key(key)?;
        }
        Ok(cfg)
    }

    /// Resolved tolerances: defaults, then the config, then overrides.
    pub fn tolerances(&self, overrides: &[(String, f64)]) -> Result<BTreeMap<String, f64>> {
        let mut t: BTreeMap<String, f64> = TOLERANCE_KEYS.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        t.extend(self.tolerance.iter().map(|(k, v)| (k.clone(), *v)));
        for (k, v) in overrides {
            check_key(k)?;
            t.insert(k.clone(), *v);
        }
        for (k, v) in &t {
            if !(v.is_finite() && *v >= 0.0) {
                bail!("tolerance '{k}' must be finite and non-negative");
            }
        }
        Ok(t)
    }
}

fn check_key(key: &str) -> Result<()> {
    if TOLERANCE_KEYS.iter().any(|(k, _)| *k == key) {
        return Ok(());
    }
    let known: Vec<&str> = TOLERANCE_KEYS.iter().map(|(k, _)| *k).collect();
    bail!("unknown tolerance '{key}' (known: {})", known.join(", "))
}

/// Parses `K=V`.
pub fn parse_tolerance(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected K=V, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}
