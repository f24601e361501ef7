//! Experiment configuration: a single strict TOML file.
//!
//! Unknown keys are rejected, every numeric field is validated before any
//! computation starts, and the raw file bytes are hashed so reports can be
//! tied back to the exact input that produced them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use qtorus::lattice::EnergyCutoff;
use qtorus::symbols::{build_symbol, RegularityIndex, SymbolCoefficients, SymbolError, SymbolTerm};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("config field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("symbol definition: {0}")]
    Symbol(#[from] SymbolError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

/// Geometric energy grid `start · factor^j`, `j = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGridSpec {
    pub start: f64,
    pub factor: f64,
    pub count: usize,
}

impl EnergyGridSpec {
    pub fn max_energy(&self) -> f64 {
        self.start * self.factor.powi(self.count as i32 - 1)
    }

    pub fn energies(&self) -> Vec<EnergyCutoff> {
        (0..self.count)
            .map(|j| {
                EnergyCutoff::new(self.start * self.factor.powi(j as i32))
                    .expect("grid validated as positive and finite")
            })
            .collect()
    }
}

/// Numeric tolerances; every field has a default, so the table may be
/// partial or absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Entrywise slack for phase identities.
    pub phase: f64,
    /// Additive slack on the operator norm bound.
    pub norm_slack: f64,
    /// Singular values below this fraction of the largest count as zero.
    pub rank_relative: f64,
    /// Tail tolerance for the norm constant; default depends on dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bessel_tail: Option<f64>,
    /// Relative stopping tolerance of the norm power iteration.
    pub power_tol: f64,
    /// Iteration cap of the norm power iteration.
    pub power_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            phase: 1e-12,
            norm_slack: 1e-9,
            rank_relative: 1e-10,
            bessel_tail: None,
            power_tol: 1e-10,
            power_max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub directory: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: PathBuf::from("runs") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub frequency_radius: i64,
    pub momentum_radius: i64,
    pub regularity: f64,
    /// Times for the conjugation identity checks.
    pub times: Vec<f64>,
    /// Averaging horizons `T`.
    pub horizons: Vec<f64>,
    #[serde(rename = "symbol")]
    pub symbol_terms: Vec<SymbolTerm>,
    pub energy_grid: EnergyGridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// Reads, parses, and validates a config file; also returns the SHA-256
    /// digest of the raw bytes.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let bytes = fs::read(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let digest = digest_hex(&bytes);
        let text = String::from_utf8(bytes)
            .map_err(|e| invalid("file", format!("not valid UTF-8: {e}")))?;
        let config = Self::parse(&text)?;
        Ok((config, digest))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dimension == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        if self.frequency_radius < 0 {
            return Err(invalid("frequency_radius", "must be nonnegative"));
        }
        if self.momentum_radius < 0 {
            return Err(invalid("momentum_radius", "must be nonnegative"));
        }
        self.regularity_index()?;
        if self.times.is_empty() {
            return Err(invalid("times", "must list at least one time"));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("times", "entries must be finite"));
        }
        if self.horizons.is_empty() {
            return Err(invalid("horizons", "must list at least one horizon"));
        }
        if self.horizons.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(invalid("horizons", "entries must be positive and finite"));
        }
        if self.symbol_terms.is_empty() {
            return Err(invalid("symbol", "must list at least one term"));
        }
        let grid = &self.energy_grid;
        if !grid.start.is_finite() || grid.start <= 0.0 {
            return Err(invalid("energy_grid.start", "must be positive and finite"));
        }
        if !grid.factor.is_finite() || grid.factor <= 1.0 {
            return Err(invalid("energy_grid.factor", "must exceed 1"));
        }
        if grid.count == 0 {
            return Err(invalid("energy_grid.count", "must be at least 1"));
        }
        if !grid.max_energy().is_finite() {
            return Err(invalid("energy_grid", "top energy overflows"));
        }
        let tol = &self.tolerances;
        for (field, value) in [
            ("tolerances.phase", tol.phase),
            ("tolerances.rank_relative", tol.rank_relative),
            ("tolerances.power_tol", tol.power_tol),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(invalid(field, "must be positive and finite"));
            }
        }
        if !tol.norm_slack.is_finite() || tol.norm_slack < 0.0 {
            return Err(invalid("tolerances.norm_slack", "must be nonnegative and finite"));
        }
        if let Some(tail) = tol.bessel_tail {
            if !tail.is_finite() || tail <= 0.0 {
                return Err(invalid("tolerances.bessel_tail", "must be positive and finite"));
            }
        }
        if tol.power_max_iter == 0 {
            return Err(invalid("tolerances.power_max_iter", "must be at least 1"));
        }
        self.build_symbol()?;
        Ok(())
    }

    pub fn regularity_index(&self) -> Result<RegularityIndex, ConfigError> {
        RegularityIndex::new(self.regularity, self.dimension)
            .map_err(|e| invalid("regularity", e.to_string()))
    }

    pub fn build_symbol(&self) -> Result<SymbolCoefficients, ConfigError> {
        Ok(build_symbol(
            self.dimension,
            self.frequency_radius,
            self.momentum_radius,
            &self.symbol_terms,
        )?)
    }

    /// Tail tolerance for the norm constant; the dimension-2 lattice sum
    /// needs a looser default to stay within the summation budget.
    pub fn resolved_bessel_tail(&self) -> f64 {
        self.tolerances
            .bessel_tail
            .unwrap_or(if self.dimension == 1 { 1e-6 } else { 1e-2 })
    }

    pub fn energies(&self) -> Vec<EnergyCutoff> {
        self.energy_grid.energies()
    }
}

pub fn digest_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
