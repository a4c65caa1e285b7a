//! CSV writers. Column names carry their units.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn subdir(&self, name: &str) -> anyhow::Result<Self> {
        Self::create(&self.0.join(name))
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.0.join(file)
    }

    pub fn write_rows<R: Serialize>(&self, file: &str, rows: &[R]) -> anyhow::Result<PathBuf> {
        let path = self.path(file);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}
