pub mod diffusion;
pub mod dipolar;
pub mod holeburn;
pub mod pulse;
pub mod zeeman;

use std::path::PathBuf;

use crate::config::ExperimentConfig;
use crate::output::OutDir;

pub struct Context {
    pub config: ExperimentConfig,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strict: bool,
}

impl Context {
    /// `--out`, then the config's `output_dir`, then `./out`.
    pub fn out(&self) -> anyhow::Result<OutDir> {
        let path = self
            .out
            .clone()
            .or_else(|| self.config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        OutDir::create(&path)
    }

    /// `--seed`, then the config's `seed`, then 0.
    pub fn seed(&self) -> u64 {
        self.seed.or(self.config.seed).unwrap_or(0)
    }

    /// Prints the warning, or fails with it in strict mode.
    pub fn warn<E>(&self, warning: E) -> anyhow::Result<()>
    where
        E: std::error::Error + Send + Sync + 'static,
    {
        if self.strict {
            return Err(warning.into());
        }
        eprintln!("warning: {warning}");
        Ok(())
    }
}
