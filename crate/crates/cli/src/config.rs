//! Sweep configuration: one TOML file captures the whole experiment;
//! command-line flags override individual values. The resolved (effective)
//! configuration is hashed and the hash stamped into every checkpoint, so a
//! checkpoint can never silently resume under different settings.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use vortexmc::ensemble::ModelParams;
use vortexmc::sampler::SamplerConfig;
use vortexmc::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// The on-disk TOML schema. Everything optional has a default; `model` and
/// `betas` must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileConfig {
    pub schema_version: u32,
    pub model: ModelSection,
    pub betas: BetaSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub run: RunSection,
}

/// Model constants minus β (β comes from the sweep axis).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelSection {
    pub n_filaments: usize,
    pub n_segments: usize,
    pub length: f64,
    pub alpha: f64,
    pub mu: f64,
}

/// β values: explicit list, log-spaced spec, or both; `extra` points are
/// appended after the expansion.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BetaSection {
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub log_spaced: Option<LogSpaced>,
    #[serde(default)]
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogSpaced {
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SamplerSection {
    pub translation_halfwidth: f64,
    /// 0 means "use N, the number of filaments".
    pub moves_per_sweep: usize,
    pub burn_in_sweeps: usize,
    pub measure_interval: usize,
    pub equilibration_window: usize,
    pub equilibration_tol: f64,
    pub autotune: bool,
    pub init_square_side: f64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            translation_halfwidth: 1.0,
            moves_per_sweep: 0,
            burn_in_sweeps: 50_000,
            measure_interval: 2,
            equilibration_window: 500,
            equilibration_tol: 1e-3,
            autotune: true,
            init_square_side: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RunSection {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Sweeps between checkpoint writes.
    pub checkpoint_interval: u64,
    /// 0 means "all available parallelism".
    pub workers: usize,
    /// Measurement snapshots per β after burn-in.
    pub n_snapshots: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            master_seed: 0,
            output_dir: PathBuf::from("sweep-out"),
            checkpoint_interval: 5000,
            workers: 0,
            n_snapshots: 10_000,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Overrides the burn-in sweep cap (run_chain's "max sweeps").
    pub max_sweeps: Option<u64>,
}

/// The fully resolved sweep: validated, β axis expanded, overrides applied.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub model: ModelSection,
    /// Expanded β axis in execution order (index = seed stream).
    pub betas: Vec<f64>,
    pub sampler: SamplerSection,
    pub run: RunSection,
}

impl SweepConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        let file: FileConfig =
            toml::from_str(&text).map_err(|e| bad(format!("bad config TOML: {e}")))?;
        Self::resolve(file, overrides)
    }

    pub fn resolve(file: FileConfig, overrides: &Overrides) -> Result<Self> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let betas = expand_betas(&file.betas)?;
        let mut sampler = file.sampler.clone();
        if let Some(cap) = overrides.max_sweeps {
            sampler.burn_in_sweeps = cap as usize;
        }
        let mut run = file.run.clone();
        if let Some(dir) = &overrides.output_dir {
            run.output_dir = dir.clone();
        }
        if let Some(seed) = overrides.seed {
            run.master_seed = seed;
        }
        if let Some(workers) = overrides.workers {
            run.workers = workers;
        }

        if run.n_snapshots < 2 {
            return Err(bad("run.n_snapshots must be at least 2"));
        }
        if run.checkpoint_interval < 1 {
            return Err(bad("run.checkpoint_interval must be at least 1"));
        }
        let cfg = Self {
            schema_version: file.schema_version,
            model: file.model,
            betas,
            sampler,
            run,
        };
        // Validate the model/sampler pair on the first β; all β share them.
        let p = cfg.model_params(cfg.betas[0])?;
        cfg.sampler_config(&p).validate()?;
        Ok(cfg)
    }

    pub fn model_params(&self, beta: f64) -> Result<ModelParams> {
        ModelParams::new(
            self.model.n_filaments,
            self.model.n_segments,
            self.model.length,
            self.model.alpha,
            beta,
            self.model.mu,
        )
    }

    pub fn sampler_config(&self, p: &ModelParams) -> SamplerConfig {
        let s = &self.sampler;
        SamplerConfig {
            translation_halfwidth: s.translation_halfwidth,
            moves_per_sweep: if s.moves_per_sweep == 0 {
                p.n_filaments
            } else {
                s.moves_per_sweep
            },
            burn_in_sweeps: s.burn_in_sweeps,
            measure_interval: s.measure_interval,
            equilibration_window: s.equilibration_window,
            equilibration_tol: s.equilibration_tol,
            autotune: s.autotune,
            init_square_side: s.init_square_side,
        }
    }

    /// FNV-1a over the canonical JSON encoding of the resolved config.
    /// Stable across runs of the same build; stamped into checkpoints.
    pub fn hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("config is always serializable");
        fnv1a64(&bytes)
    }
}

/// Deterministic, endpoint-inclusive expansion of the β axis: log-spaced
/// block first (ascending), then explicit values, then extras, in the order
/// given. Duplicates (exact f64 equality) are rejected.
fn expand_betas(section: &BetaSection) -> Result<Vec<f64>> {
    let mut betas = Vec::new();
    if let Some(ls) = &section.log_spaced {
        if ls.count < 2 {
            return Err(bad("betas.log_spaced.count must be at least 2"));
        }
        if !(ls.min > 0.0 && ls.max > ls.min) {
            return Err(bad("betas.log_spaced needs 0 < min < max"));
        }
        for i in 0..ls.count {
            let beta = if i == 0 {
                ls.min
            } else if i == ls.count - 1 {
                ls.max
            } else {
                ls.min * (ls.max / ls.min).powf(i as f64 / (ls.count - 1) as f64)
            };
            betas.push(beta);
        }
    }
    betas.extend_from_slice(&section.values);
    betas.extend_from_slice(&section.extra);
    if betas.is_empty() {
        return Err(bad("no beta values: give betas.values or betas.log_spaced"));
    }
    for (i, &b) in betas.iter().enumerate() {
        if !(b > 0.0 && b.is_finite()) {
            return Err(bad(format!("beta[{i}] = {b} is not positive and finite")));
        }
        if betas[..i].contains(&b) {
            return Err(bad(format!("duplicate beta value {b}")));
        }
    }
    Ok(betas)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}
