mod analysis;
mod physics;
mod simulate;

use std::path::{Path, PathBuf};

use casimir_core::io::write_atomic;

use crate::config::JobConfig;
use crate::error::{core, CliError, Result};

pub use analysis::{calibrate, extract};
pub use physics::{conductivity_fit, eps, force};
pub use simulate::simulate;

/// Shared state of one invocation.
pub struct Ctx {
    pub cfg: JobConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Ctx {
    pub fn new(cfg: JobConfig, out: PathBuf, seed: Option<u64>) -> Result<Self> {
        std::fs::create_dir_all(&out)
            .map_err(|e| CliError::Config(format!("output directory {}: {e}", out.display())))?;
        Ok(Self { cfg, out, seed })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_atomic(&path, contents).map_err(core)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}

/// Formats a number for file names: `30`, `2.5`, `inf`.
fn tag(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
