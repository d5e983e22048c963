//! Per-language threshold configuration (`filter_config.json`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{FilterError, MatchConfig, SegmentationMode};

/// The shipped default, identical to `filter_config.json` at the repo root.
pub const DEFAULT_FILTER_CONFIG: &str = include_str!("../../../filter_config.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] FilterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangSetting {
    pub mode: SegmentationMode,
    pub t_c: u32,
    pub t_d: f64,
}

/// Map of language code to its match configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    langs: BTreeMap<String, MatchConfig>,
}

impl FilterConfig {
    pub fn from_json(json: &str) -> Result<Self, ConfigError> {
        let raw: BTreeMap<String, LangSetting> = serde_json::from_str(json)?;
        let mut langs = BTreeMap::new();
        for (lang, s) in raw {
            let cfg = MatchConfig::new(lang.clone(), s.mode, s.t_c, s.t_d)?;
            langs.insert(lang, cfg);
        }
        Ok(Self { langs })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&json)
    }

    pub fn shipped() -> Self {
        Self::from_json(DEFAULT_FILTER_CONFIG).expect("shipped filter config is valid")
    }

    pub fn get(&self, lang: &str) -> Option<&MatchConfig> {
        self.langs.get(lang)
    }

    pub fn langs(&self) -> impl Iterator<Item = &str> {
        self.langs.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MatchConfig> {
        self.langs.values()
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<&str, LangSetting> = self
            .langs
            .iter()
            .map(|(k, c)| {
                (
                    k.as_str(),
                    LangSetting {
                        mode: c.mode,
                        t_c: c.t_c,
                        t_d: c.t_d,
                    },
                )
            })
            .collect();
        serde_json::to_string_pretty(&raw).expect("config serializes")
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::shipped()
    }
}
