//! Layered settings: built-in defaults, then a JSON file, then
//! `FRAMESCOPE_*` environment variables, then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use framescope::backends::{BackendConfig, OraclePolicy};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const ENV_PREFIX: &str = "FRAMESCOPE_";
const SECRET_KEYS: [&str; 4] = ["api_key", "apikey", "token", "authorization"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppConfig {
    pub data_root: PathBuf,
    pub cache_dir: PathBuf,
    pub profiles: BTreeMap<String, BackendConfig>,
    pub default_profile: String,
    pub seeds: Vec<u64>,
    pub log_level: String,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            data_root: PathBuf::from("data"),
            cache_dir: PathBuf::from("runs"),
            profiles: BTreeMap::from([("mock".to_string(), BackendConfig::mock(OraclePolicy::always_gold()))]),
            default_profile: "mock".into(),
            seeds: vec![1, 2, 3],
            log_level: "warn".into(),
        }
    }
}

/// Every field optional, so a file or the environment can set any subset.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub data_root: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub profiles: BTreeMap<String, BackendConfig>,
    pub default_profile: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub log_level: Option<String>,
}

impl ConfigLayer {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(key) = find_secret(&value) {
            bail!(
                "config {} contains `{key}`; keep credentials in an environment variable and name it in the profile's api_key_env",
                path.display()
            );
        }
        serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Reads `FRAMESCOPE_DATA_ROOT`, `_CACHE_DIR`, `_PROFILE`, `_SEEDS`
    /// (comma-separated) and `_LOG_LEVEL` from `vars`.
    pub fn from_env<I: IntoIterator<Item = (String, String)>>(vars: I) -> Result<Self> {
        let mut layer = ConfigLayer::default();
        for (key, value) in vars {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else { continue };
            match name {
                "DATA_ROOT" => layer.data_root = Some(value.into()),
                "CACHE_DIR" => layer.cache_dir = Some(value.into()),
                "PROFILE" => layer.default_profile = Some(value),
                "SEEDS" => layer.seeds = Some(parse_seeds(&value).with_context(|| format!("{key}={value}"))?),
                "LOG_LEVEL" => layer.log_level = Some(value),
                _ => {}
            }
        }
        Ok(layer)
    }
}

fn find_secret(value: &Value) -> Option<String> {
    match value {
        Value::Object(map) => map.iter().find_map(|(k, v)| {
            if SECRET_KEYS.contains(&k.to_ascii_lowercase().as_str()) {
                Some(k.clone())
            } else {
                find_secret(v)
            }
        }),
        Value::Array(items) => items.iter().find_map(find_secret),
        _ => None,
    }
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let seeds = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().with_context(|| format!("bad seed `{p}`")))
        .collect::<Result<Vec<_>>>()?;
    if seeds.is_empty() {
        bail!("at least one seed is needed");
    }
    Ok(seeds)
}

impl AppConfig {
    pub fn apply(&mut self, layer: ConfigLayer) {
        if let Some(v) = layer.data_root {
            self.data_root = v;
        }
        if let Some(v) = layer.cache_dir {
            self.cache_dir = v;
        }
        self.profiles.extend(layer.profiles);
        if let Some(v) = layer.default_profile {
            self.default_profile = v;
        }
        if let Some(v) = layer.seeds {
            self.seeds = v;
        }
        if let Some(v) = layer.log_level {
            self.log_level = v;
        }
    }

    /// Defaults, then the file (if any), then the environment, then flags.
    pub fn resolve(
        file: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
        flags: ConfigLayer,
    ) -> Result<Self> {
        let mut config = AppConfig::default();
        if let Some(path) = file {
            config.apply(ConfigLayer::from_file(path)?);
        }
        config.apply(ConfigLayer::from_env(env)?);
        config.apply(flags);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.profiles.contains_key(&self.default_profile) {
            bail!(
                "profile `{}` is not defined (known: {})",
                self.default_profile,
                self.profiles.keys().cloned().collect::<Vec<_>>().join(", ")
            );
        }
        for (name, profile) in &self.profiles {
            profile.validate().with_context(|| format!("profile `{name}`"))?;
        }
        Ok(())
    }

    pub fn profile(&self, name: Option<&str>) -> Result<BackendConfig> {
        let name = name.unwrap_or(&self.default_profile);
        self.profiles.get(name).cloned().with_context(|| format!("profile `{name}` is not defined"))
    }
}
