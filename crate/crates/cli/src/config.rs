//! Runtime configuration file.

use serde::{Deserialize, Serialize};
use spice_core::bridge::{PeerConfig, PeerConfigError};
use spice_core::detection::{DistortionModel, InvalidModel, MockAdapter, MockScriptError};
use spice_core::dial::{DialConfig, DialConfigError};
use spice_core::recipe::{RecipeError, RecipeLibrary};
use spice_core::scene::{Workspace, WorkspaceError};
use spice_core::tracking::{MarkerTemplate, TemplateLoadError, TemplateViolation};
use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum AdapterSettings {
    /// Scripted answers keyed by image file name.
    Mock { script: PathBuf },
    /// HTTP endpoint from `SPICE_VLM_URL` / `SPICE_VLM_KEY`.
    Live,
}

fn default_deadline() -> f64 {
    spice_core::detection::DEFAULT_DEADLINE.as_secs_f64()
}

/// On-disk form. Relative paths are relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub workspace: PathBuf,
    pub recipes: PathBuf,
    pub template: PathBuf,
    #[serde(default)]
    pub peers: PeerConfig,
    #[serde(default)]
    pub dial: DialConfig,
    pub adapter: AdapterSettings,
    /// Directory holding the images named by `image-ref` records; defaults to the trace's directory.
    #[serde(default)]
    pub images: Option<PathBuf>,
    /// Live mode: frame re-read on every re-detect command.
    #[serde(default)]
    pub camera_image: Option<PathBuf>,
    /// Lens model applied to camera frames before detection.
    #[serde(default)]
    pub distortion: Option<DistortionModel>,
    #[serde(default = "default_deadline")]
    pub detection_deadline_secs: f64,
    /// Live mode: where the event log is appended.
    #[serde(default)]
    pub event_log: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("workspace {path}: {source}")]
    Workspace { path: PathBuf, source: WorkspaceError },
    #[error("recipes {path}: {source}")]
    Recipes { path: PathBuf, source: RecipeError },
    #[error("template {path}: {source}")]
    TemplateLoad { path: PathBuf, source: TemplateLoadError },
    #[error("template {path} fails: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Template { path: PathBuf, violations: Vec<TemplateViolation> },
    #[error("mock script {path}: {source}")]
    MockScript { path: PathBuf, source: MockScriptError },
    #[error(transparent)]
    Peers(#[from] PeerConfigError),
    #[error(transparent)]
    Dial(#[from] DialConfigError),
    #[error(transparent)]
    Distortion(#[from] InvalidModel),
    #[error("{0}")]
    Invalid(String),
}

/// A loaded, validated configuration with every referenced file parsed.
#[derive(Debug, Clone)]
pub struct RuntimeConfig {
    pub file: ConfigFile,
    pub base_dir: PathBuf,
    pub workspace: Workspace,
    pub library: RecipeLibrary,
    pub template: MarkerTemplate,
    pub mock: Option<MockAdapter>,
}

impl RuntimeConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ConfigFile = serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_file(file, &base)
    }

    pub fn from_file(file: ConfigFile, base_dir: &Path) -> Result<Self, ConfigError> {
        let resolve = |p: &Path| base_dir.join(p);
        file.peers.validate()?;
        file.dial.validate()?;
        if let Some(d) = &file.distortion {
            d.validate()?;
        }
        if !(file.detection_deadline_secs.is_finite() && file.detection_deadline_secs > 0.0) {
            return Err(ConfigError::Invalid("detection_deadline_secs must be positive".into()));
        }

        let path = resolve(&file.workspace);
        let workspace = Workspace::load(&path).map_err(|source| ConfigError::Workspace { path, source })?;
        let path = resolve(&file.recipes);
        let library = RecipeLibrary::load(&path).map_err(|source| ConfigError::Recipes { path, source })?;
        let path = resolve(&file.template);
        let template = MarkerTemplate::load(&path).map_err(|source| ConfigError::TemplateLoad {
            path: path.clone(),
            source,
        })?;
        template
            .validate()
            .map_err(|violations| ConfigError::Template { path, violations })?;
        let mock = match &file.adapter {
            AdapterSettings::Mock { script } => {
                let path = resolve(script);
                Some(MockAdapter::load(&path).map_err(|source| ConfigError::MockScript { path, source })?)
            }
            AdapterSettings::Live => None,
        };
        Ok(Self {
            base_dir: base_dir.to_path_buf(),
            workspace,
            library,
            template,
            mock,
            file,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn detection_deadline(&self) -> Duration {
        Duration::from_secs_f64(self.file.detection_deadline_secs)
    }
}
