use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, TrainConfig};

/// Files a training run reads and writes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub train_deps: Option<PathBuf>,
    pub train_props: Option<PathBuf>,
    pub dev_deps: Option<PathBuf>,
    pub dev_props: Option<PathBuf>,
    pub train_external: Option<PathBuf>,
    pub dev_external: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
}

/// Everything that determines a training run. Read from JSON, then
/// overridden by command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks settings and that every input file exists. Returns the
    /// required train files and checkpoint directory.
    pub fn check(&self) -> Result<(&Path, &Path, &Path)> {
        self.model.validate()?;
        self.train.validate()?;
        let d = &self.data;
        let deps = need(&d.train_deps, "train_deps")?;
        let props = need(&d.train_props, "train_props")?;
        let dir = need(&d.checkpoint_dir, "checkpoint_dir")?;
        if d.dev_deps.is_some() != d.dev_props.is_some() {
            return Err(Error::Config("dev_deps and dev_props must be given together".into()));
        }
        if d.dev_external.is_some() && d.dev_deps.is_none() {
            return Err(Error::Config("dev_external needs a dev set".into()));
        }
        let ext = self.model.input.external_dim > 0;
        if ext != d.train_external.is_some() || (ext && d.dev_deps.is_some() && d.dev_external.is_none()) {
            return Err(Error::Config(
                "external vector files must be given exactly when external_dim > 0".into(),
            ));
        }
        for p in [
            &d.train_deps,
            &d.train_props,
            &d.dev_deps,
            &d.dev_props,
            &d.train_external,
            &d.dev_external,
        ]
        .into_iter()
        .flatten()
        {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        Ok((deps, props, dir))
    }
}

fn need<'a>(p: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("{name} is not set")))
}
