//! Experiment configuration: a JSON file of defaults with command-line
//! overrides on top. The seed has no wall-clock fallback — stochastic
//! commands refuse to run without one so every report is reproducible.

use serde::Deserialize;
use std::path::{Path, PathBuf};

use qig::{Error, Result};

/// On-disk experiment configuration. Every field is optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub dim: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub input: Option<PathBuf>,
    pub family: Option<String>,
    pub hamiltonian: Option<PathBuf>,
    pub points: Option<Vec<Vec<f64>>>,
    pub count: Option<usize>,
    pub pairs: Option<usize>,
    pub resolution: Option<usize>,
}

/// Merged settings used by the command implementations.
#[derive(Debug)]
pub struct Settings {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub dim: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub file: ExperimentConfig,
}

impl Settings {
    pub fn load(
        config: Option<&Path>,
        seed: Option<u64>,
        samples: Option<usize>,
        dim: Option<usize>,
        out: Option<PathBuf>,
        threads: Option<usize>,
    ) -> Result<Self> {
        let file = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str::<ExperimentConfig>(&text)?
            }
            None => ExperimentConfig::default(),
        };
        Ok(Self {
            seed: seed.or(file.seed),
            samples: samples.or(file.samples),
            dim: dim.or(file.dim),
            out: out.or_else(|| file.out.clone()),
            threads: threads.or(file.threads),
            file,
        })
    }

    /// Seed for a stochastic command; refuses to invent one.
    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidArgument(
                "stochastic command requires --seed (or a seed in the config file)".into(),
            )
        })
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    pub fn dim_or(&self, default: usize) -> usize {
        self.dim.unwrap_or(default)
    }

    /// Write `text` to the output path, or stdout when none is set.
    pub fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text)?,
            None => println!("{text}"),
        }
        Ok(())
    }
}
