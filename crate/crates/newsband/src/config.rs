//! TOML configuration with `section.key=value` command-line overrides.

use std::path::{Path, PathBuf};

use newsband_core::change::ChangeConfig;
use newsband_core::classifier::ElmConfig;
use newsband_core::features::FeatureParams;
use newsband_core::hough::HoughConfig;
use newsband_core::pipeline::PipelineConfig;
use newsband_core::reasoning::ReasoningConfig;
use newsband_core::text::TextDetectorConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming the configuration file.
pub const CONFIG_ENV: &str = "NEWSBAND_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub model: Option<PathBuf>,
    pub context: Option<PathBuf>,
    pub frames: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSettings {
    pub addr: String,
}

impl Default for ServerSettings {
    fn default() -> Self {
        ServerSettings {
            addr: "127.0.0.1:8080".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Overrides the line detector and classifier seeds when set.
    pub seed: Option<u64>,
    /// Worker threads for batch commands; 0 uses every core.
    pub jobs: usize,
    pub paths: Paths,
    pub server: ServerSettings,
    pub hough: HoughConfig,
    pub text: TextDetectorConfig,
    pub features: FeatureParams,
    pub classifier: ElmConfig,
    pub change: ChangeConfig,
    pub reasoning: ReasoningConfig,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("invalid configuration: "))))
    }

    /// Loads `explicit`, else the file named by [`CONFIG_ENV`], else defaults,
    /// then applies `overrides`.
    pub fn resolve(explicit: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let base = match explicit.map(Path::to_path_buf).or(from_env) {
            Some(p) => std::fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut table: toml::Table = base.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline().validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let mut p = PipelineConfig {
            hough: self.hough.clone(),
            text: self.text.clone(),
            features: self.features,
            classifier: self.classifier,
            change: self.change,
            reasoning: self.reasoning,
        };
        if let Some(seed) = self.seed {
            p.hough.seed = seed;
            p.classifier.seed = seed;
        }
        p
    }
}

/// Sets `section.key` (or a top-level `key`) from `key=value`, reading the
/// value as a TOML literal and falling back to a plain string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v was just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for s in sections {
        cur = cur
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{s}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
