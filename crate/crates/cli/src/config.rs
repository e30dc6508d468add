//! Effective configuration: flags, then environment, then the config file,
//! then built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use pgakv_core::index::DEFAULT_TOP_K;
use pgakv_core::llm::CassetteMode;
use pgakv_core::pipeline::DEFAULT_MAX_RETRIES;
use pgakv_core::prune::DEFAULT_CONFIDENCE_THRESHOLD;
use pgakv_core::{PipelineConfig, PruneConfig};
use serde::{Deserialize, Serialize};

use crate::args::RunArgs;
use crate::error::CliError;

pub const BUILTIN_PROVIDER: &str = "builtin-hash";
pub const CASSETTE_MODE_ENV: &str = "PGAKV_CASSETTE_MODE";

/// The flat key-value config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kg: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub provider: Option<String>,
    pub llm_url: Option<String>,
    pub model: Option<String>,
    pub cassette: Option<PathBuf>,
    pub cassette_mode: Option<CassetteMode>,
    pub threshold: Option<f64>,
    pub topk: Option<usize>,
    pub max_retries: Option<usize>,
    pub concurrency: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Input(format!("config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("config file {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AppConfig {
    pub kg: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub provider: String,
    pub llm_url: Option<String>,
    pub model: Option<String>,
    pub cassette: Option<PathBuf>,
    pub cassette_mode: CassetteMode,
    pub threshold: f64,
    pub topk: usize,
    pub max_retries: usize,
    pub concurrency: usize,
    pub seed: u64,
}

fn mode_from_env() -> Result<Option<CassetteMode>, CliError> {
    match std::env::var(CASSETTE_MODE_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.as_str() {
            "replay" => Ok(Some(CassetteMode::Replay)),
            "record" => Ok(Some(CassetteMode::Record)),
            other => Err(CliError::Input(format!(
                "{CASSETTE_MODE_ENV}={other}: expected `replay` or `record`"
            ))),
        },
    }
}

impl AppConfig {
    /// `run` already merges flags over environment variables.
    pub fn resolve(run: &RunArgs, file: FileConfig) -> Result<Self, CliError> {
        let flag_mode = if run.record {
            Some(CassetteMode::Record)
        } else if run.replay {
            Some(CassetteMode::Replay)
        } else {
            None
        };
        let cfg = Self {
            kg: run.kg.clone().or(file.kg),
            index: run.index.clone().or(file.index),
            provider: run
                .provider
                .clone()
                .or(file.provider)
                .unwrap_or_else(|| BUILTIN_PROVIDER.to_string()),
            llm_url: run.llm_url.clone().or(file.llm_url),
            model: run.model.clone().or(file.model),
            cassette: run.cassette.clone().or(file.cassette),
            cassette_mode: flag_mode
                .or(mode_from_env()?)
                .or(file.cassette_mode)
                .unwrap_or(CassetteMode::Replay),
            threshold: run.threshold.or(file.threshold).unwrap_or(DEFAULT_CONFIDENCE_THRESHOLD),
            topk: run.topk.or(file.topk).unwrap_or(DEFAULT_TOP_K),
            max_retries: run.max_retries.or(file.max_retries).unwrap_or(DEFAULT_MAX_RETRIES),
            concurrency: run.concurrency.or(file.concurrency).unwrap_or(1),
            seed: run.seed.or(file.seed).unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        PruneConfig::with_threshold(self.threshold).map_err(|e| CliError::Input(e.to_string()))?;
        if self.topk == 0 {
            return Err(CliError::Input("--topk must be at least 1".into()));
        }
        if self.concurrency == 0 {
            return Err(CliError::Input("--concurrency must be at least 1".into()));
        }
        for path in [&self.kg, &self.index].into_iter().flatten() {
            if !path.is_file() {
                return Err(CliError::Input(format!("{}: no such file", path.display())));
            }
        }
        if let Some(c) = &self.cassette {
            match self.cassette_mode {
                CassetteMode::Replay if !c.is_file() => {
                    return Err(CliError::Input(format!("cassette {}: no such file", c.display())))
                }
                CassetteMode::Record => {
                    let parent = c
                        .parent()
                        .filter(|p| !p.as_os_str().is_empty())
                        .unwrap_or(Path::new("."));
                    if !parent.is_dir() {
                        return Err(CliError::Input(format!(
                            "cassette directory {}: not found",
                            parent.display()
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            top_k: self.topk,
            prune: PruneConfig {
                confidence_threshold: self.threshold,
                k_override: None,
            },
            max_retries: self.max_retries,
            ..PipelineConfig::default()
        }
    }
}
