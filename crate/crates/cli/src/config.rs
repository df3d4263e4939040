//! Scenario configuration: JSON file keys, overridden by flags.

use std::path::{Path, PathBuf};

use mmac_core::{ChannelConfig, QuadratureSpec, ReflectionConstraint, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "MMAC_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub element_count: usize,
    /// Per-element power gain of the reflected path.
    pub element_gain_sq: f64,
    pub noise_power: f64,
    /// Transmit SNR `P / sigma^2` values.
    pub snr_db: Vec<f64>,
    pub constraints: Vec<ReflectionConstraint>,
    /// Scheme angles are `pi / n` for `n = 1..=alpha_n_max`.
    pub alpha_n_max: u32,
    pub mu1_grid: Vec<f64>,
    pub quadrature: QuadratureSpec,
    pub solver: SolverOptions,
    pub seed: u64,
    pub mc_samples: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut mu1_grid: Vec<f64> = (1..=9).map(|i| i as f64 * 0.05).collect();
        mu1_grid.iter_mut().for_each(|m| *m = (*m * 100.0).round() / 100.0);
        mu1_grid.push(0.49);
        Self {
            element_count: 64,
            element_gain_sq: 0.003,
            noise_power: 1.0,
            snr_db: vec![-5.0, 0.0, 5.0],
            constraints: vec![ReflectionConstraint::UnitModulus, ReflectionConstraint::UnitDisk],
            alpha_n_max: 8,
            mu1_grid,
            quadrature: QuadratureSpec::default(),
            solver: SolverOptions::default(),
            seed: SolverOptions::default().seed,
            mc_samples: 1_000_000,
            out_dir: None,
        }
    }
}

/// Flag values that override file keys when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub snr_db: Option<Vec<f64>>,
    pub constraint: Option<ReflectionConstraint>,
    pub mu1_grid: Option<Vec<f64>>,
    pub alpha_n_max: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn load(path: Option<&Path>, over: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(v) = &over.snr_db {
            cfg.snr_db = v.clone();
        }
        if let Some(c) = over.constraint {
            cfg.constraints = vec![c];
        }
        if let Some(v) = &over.mu1_grid {
            cfg.mu1_grid = v.clone();
        }
        if let Some(n) = over.alpha_n_max {
            cfg.alpha_n_max = n;
        }
        if let Some(s) = over.seed {
            cfg.seed = s;
        }
        cfg.solver.seed = cfg.seed;
        if let Some(o) = &over.out {
            cfg.out_dir = Some(o.clone());
        }
        if cfg.out_dir.is_none() {
            cfg.out_dir = Some(std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db must be a nonempty list of finite values".into());
        }
        if self.constraints.is_empty() {
            return bad("constraints must not be empty".into());
        }
        if self.alpha_n_max == 0 {
            return bad("alpha_n_max must be at least 1".into());
        }
        if let Some(m) = self.mu1_grid.iter().find(|m| !(**m > 0.0 && **m < 0.5)) {
            return bad(format!("mu1 values must lie in (0, 0.5), got {m}"));
        }
        if self.mc_samples < 10_000 {
            return bad("mc_samples must be at least 10000".into());
        }
        self.quadrature.validate()?;
        self.solver.validate()?;
        self.channel(self.snr_db[0])?;
        Ok(())
    }

    pub fn channel(&self, snr_db: f64) -> Result<ChannelConfig, CliError> {
        let base = ChannelConfig::uniform(self.element_count, self.element_gain_sq, self.noise_power, 1.0)?;
        Ok(base.with_snr_db(snr_db)?)
    }

    pub fn out_dir(&self) -> &Path {
        self.out_dir.as_deref().unwrap_or(Path::new("out"))
    }
}
