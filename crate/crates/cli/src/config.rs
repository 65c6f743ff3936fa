//! Run configuration: defaults, then command-line flags, then the config
//! file, then `CHAMBERFLOW_SEED`.

use std::path::Path;

use chamberflow_core::io::to_json_string;
use chamberflow_core::schottky::DEFAULT_WORD_CAP;
use chamberflow_core::Config;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SEED_ENV: &str = "CHAMBERFLOW_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub max_words: usize,
    pub max_power: u32,
    pub mc_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoPaths {
    /// directory receiving cone.csv and cone.svg
    pub out_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    pub tolerances: Config,
    pub budgets: Budgets,
    pub io: IoPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 3,
            seed: 42,
            tolerances: Config::default(),
            budgets: Budgets {
                max_words: DEFAULT_WORD_CAP,
                max_power: 12,
                mc_samples: 1000,
            },
            io: IoPaths { out_dir: ".".into() },
        }
    }
}

/// Flags that map onto config fields; None means not given.
#[derive(Debug, Default, Clone)]
pub struct FlagOverrides {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub max_words: Option<usize>,
    pub max_power: Option<u32>,
    pub mc_samples: Option<usize>,
    pub out_dir: Option<String>,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    pub fn resolve(flags: &FlagOverrides, file: Option<&Path>, env_seed: Option<String>) -> Result<RunConfig, CliError> {
        let mut v = serde_json::to_value(RunConfig::default()).expect("serializable");
        let mut f = serde_json::Map::new();
        let mut budgets = serde_json::Map::new();
        if let Some(n) = flags.n {
            f.insert("n".into(), n.into());
        }
        if let Some(s) = flags.seed {
            f.insert("seed".into(), s.into());
        }
        if let Some(x) = flags.max_words {
            budgets.insert("max_words".into(), x.into());
        }
        if let Some(x) = flags.max_power {
            budgets.insert("max_power".into(), x.into());
        }
        if let Some(x) = flags.mc_samples {
            budgets.insert("mc_samples".into(), x.into());
        }
        if !budgets.is_empty() {
            f.insert("budgets".into(), Value::Object(budgets));
        }
        if let Some(d) = &flags.out_dir {
            f.insert("io".into(), serde_json::json!({ "out_dir": d }));
        }
        merge(&mut v, Value::Object(f));

        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let file_value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", path.display())))?;
            if !file_value.is_object() {
                return Err(CliError::Config(format!("{} must contain a JSON object", path.display())));
            }
            merge(&mut v, file_value);
        }
        let mut cfg: RunConfig =
            serde_json::from_value(v).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))?;
        if let Some(s) = env_seed {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={s} is not an unsigned integer")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(2..=8).contains(&self.n) {
            return Err(CliError::Config(format!("n = {} is outside 2..=8", self.n)));
        }
        if self.budgets.mc_samples < 1000 {
            return Err(CliError::Config("budgets.mc_samples must be at least 1000".into()));
        }
        if self.budgets.max_power == 0 {
            return Err(CliError::Config("budgets.max_power must be positive".into()));
        }
        let t = &self.tolerances;
        for (name, x) in [
            ("tol_det", t.tol_det),
            ("tol_minor", t.tol_minor),
            ("tol_recon", t.tol_recon),
            ("tol_id", t.tol_id),
            ("tol_lox", t.tol_lox),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(CliError::Config(format!("tolerances.{name} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(to_json_string(self).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
