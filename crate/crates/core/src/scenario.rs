//! Scenario configuration: what to simulate, for how long, with which seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netsim::{ClockModel, LinkModel, StageModels};
use crate::trafficgen::{CloudParams, ProfileFile, TrafficProfile, DEFAULT_TRACKING_PAYLOAD};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;
/// Overrides the profile search path (platform path-list syntax).
pub const PROFILE_DIR_ENV: &str = "VRSIM_PROFILE_DIR";
pub const DEFAULT_SIZE_THRESHOLD: u32 = 30_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{field}: {msg}")]
    Semantic { field: String, msg: String },
    #[error("profile {0:?} not found in search path {1:?}")]
    UnknownProfile(String, Vec<PathBuf>),
    #[error(transparent)]
    Traffic(#[from] crate::trafficgen::TrafficError),
}

fn semantic(field: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Semantic {
        field: field.into(),
        msg: msg.into(),
    }
}

/// A traffic profile given by label or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileRef {
    Named(String),
    Inline(Box<TrafficProfile>),
}

impl ProfileRef {
    pub fn inline(&self) -> Option<&TrafficProfile> {
        match self {
            ProfileRef::Inline(p) => Some(p),
            ProfileRef::Named(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Video {
        profile: ProfileRef,
    },
    Tracking {
        freq_hz: f64,
        #[serde(default = "default_ti_payload")]
        payload_bytes: u32,
        #[serde(default)]
        jitter_us: f64,
    },
    Cloud(CloudParams),
}

fn default_ti_payload() -> u32 {
    DEFAULT_TRACKING_PAYLOAD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisRange {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_s: Option<f64>,
    #[serde(default = "default_window")]
    pub window_s: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds_bytes: Vec<u32>,
}

fn default_window() -> f64 {
    1.0
}

fn default_thresholds() -> Vec<u32> {
    vec![DEFAULT_SIZE_THRESHOLD]
}

impl Default for AnalysisRange {
    fn default() -> Self {
        Self {
            from_s: None,
            to_s: None,
            window_s: default_window(),
            thresholds_bytes: default_thresholds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub duration_s: f64,
    pub seed: u64,
    pub sources: Vec<SourceSpec>,
    pub stage_models: StageModels,
    #[serde(default)]
    pub link: LinkModel,
    #[serde(default)]
    pub clock: ClockModel,
    #[serde(default)]
    pub analysis: AnalysisRange,
    /// Free-form testbed description (channel, bandwidth, ...); not used by
    /// the simulator.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl ScenarioConfig {
    pub fn duration_us(&self) -> u64 {
        (self.duration_s * 1e6).round() as u64
    }

    pub fn video_profile(&self) -> Option<&TrafficProfile> {
        self.sources.iter().find_map(|s| match s {
            SourceSpec::Video { profile } => profile.inline(),
            _ => None,
        })
    }

    pub fn tracking(&self) -> Option<(f64, u32, f64)> {
        self.sources.iter().find_map(|s| match *s {
            SourceSpec::Tracking {
                freq_hz,
                payload_bytes,
                jitter_us,
            } => Some((freq_hz, payload_bytes, jitter_us)),
            _ => None,
        })
    }

    pub fn cloud(&self) -> Option<&CloudParams> {
        self.sources.iter().find_map(|s| match s {
            SourceSpec::Cloud(c) => Some(c),
            _ => None,
        })
    }

    /// Replace named profile references with the profiles they name.
    pub fn resolve_profiles(&mut self, search: &[PathBuf]) -> Result<(), ConfigError> {
        for source in &mut self.sources {
            if let SourceSpec::Video { profile } = source {
                if let ProfileRef::Named(label) = profile {
                    let found = find_profile(label, search)?;
                    *profile = ProfileRef::Inline(Box::new(found));
                }
            }
        }
        Ok(())
    }

    /// Full semantic validation. Profile references must already be resolved.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(semantic(
                "schema_version",
                format!(
                    "expected {SCENARIO_SCHEMA_VERSION}, got {}",
                    self.schema_version
                ),
            ));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(semantic(
                "duration_s",
                format!("must be > 0, got {}", self.duration_s),
            ));
        }
        let count = |pred: fn(&SourceSpec) -> bool| self.sources.iter().filter(|s| pred(s)).count();
        let videos = count(|s| matches!(s, SourceSpec::Video { .. }));
        if videos != 1 {
            return Err(semantic(
                "sources",
                format!("exactly one video source required, got {videos}"),
            ));
        }
        if count(|s| matches!(s, SourceSpec::Tracking { .. })) > 1 {
            return Err(semantic("sources", "at most one tracking source"));
        }
        if count(|s| matches!(s, SourceSpec::Cloud(_))) > 1 {
            return Err(semantic("sources", "at most one cloud source"));
        }
        for (i, source) in self.sources.iter().enumerate() {
            let field = format!("sources[{i}]");
            match source {
                SourceSpec::Video { profile } => match profile {
                    ProfileRef::Inline(p) => {
                        p.validate().map_err(|e| semantic(&field, e.to_string()))?
                    }
                    ProfileRef::Named(n) => {
                        return Err(semantic(
                            field,
                            format!("unresolved profile reference {n:?}"),
                        ))
                    }
                },
                SourceSpec::Tracking {
                    freq_hz,
                    payload_bytes,
                    jitter_us,
                } => {
                    crate::trafficgen::TrackingSource::with_jitter(
                        *freq_hz,
                        *payload_bytes,
                        *jitter_us,
                        0,
                    )
                    .map_err(|e| semantic(&field, e.to_string()))?;
                }
                SourceSpec::Cloud(c) => {
                    c.validate().map_err(|e| semantic(&field, e.to_string()))?
                }
            }
        }
        self.stage_models
            .validate()
            .map_err(|e| semantic("stage_models", e.to_string()))?;
        self.link
            .validate()
            .map_err(|e| semantic("link", e.to_string()))?;
        self.clock
            .validate()
            .map_err(|e| semantic("clock", e.to_string()))?;
        let a = &self.analysis;
        if !(a.window_s.is_finite() && a.window_s > 0.0) {
            return Err(semantic(
                "analysis.window_s",
                format!("must be > 0, got {}", a.window_s),
            ));
        }
        if let (Some(from), Some(to)) = (a.from_s, a.to_s) {
            if !(from < to) {
                return Err(semantic(
                    "analysis",
                    format!("from_s {from} must precede to_s {to}"),
                ));
            }
        }
        if a.from_s.is_some_and(|f| f < 0.0) {
            return Err(semantic("analysis.from_s", "must be >= 0"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Directories searched for profile files, in priority order.
pub fn profile_search_dirs(scenario_dir: Option<&Path>) -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if let Some(v) = std::env::var_os(PROFILE_DIR_ENV) {
        dirs.extend(std::env::split_paths(&v).filter(|p| !p.as_os_str().is_empty()));
    }
    if let Some(dir) = scenario_dir {
        dirs.push(dir.join("profiles"));
        dirs.push(dir.join("..").join("profiles"));
    }
    dirs.push(PathBuf::from("profiles"));
    dirs
}

pub fn find_profile(label: &str, search: &[PathBuf]) -> Result<TrafficProfile, ConfigError> {
    for dir in search {
        let Ok(entries) = std::fs::read_dir(dir) else {
            continue;
        };
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for file in files {
            let pf = ProfileFile::load(&file)?;
            if let Some(p) = pf.get(label) {
                return Ok(p.clone());
            }
        }
    }
    Err(ConfigError::UnknownProfile(
        label.to_string(),
        search.to_vec(),
    ))
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

/// Read, resolve and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut config = parse_scenario(&text, &path.display().to_string())?;
    config.resolve_profiles(&profile_search_dirs(path.parent()))?;
    config.validate()?;
    Ok(config)
}

pub fn save_scenario(config: &ScenarioConfig, path: &Path) -> Result<(), ConfigError> {
    std::fs::write(path, config.to_json() + "\n").map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
