//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dirichlet::Overrides;
use crate::metric::MeshParams;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "LEP_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Value(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub h: f64,
    pub ring: usize,
    pub steiner_per_edge: usize,
    /// Check tolerance; `None` means `10 h (1 + C)`.
    pub tol: Option<f64>,
    /// `eikonal` is the only kind selectable from files.
    pub kind: String,
    pub out: Option<PathBuf>,
    pub mesh_out: Option<PathBuf>,
    pub override_strict_subsolution: bool,
    pub override_boundary_compat: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = MeshParams::default();
        RunConfig {
            h: p.h,
            ring: p.ring,
            steiner_per_edge: p.steiner_per_edge,
            tol: None,
            kind: "eikonal".into(),
            out: None,
            mesh_out: None,
            override_strict_subsolution: false,
            override_boundary_compat: false,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: RunConfig = toml::from_str(text)?;
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.to_path_buf(), e))?;
        Self::from_toml(&text)
    }

    /// Explicit path, else the file named by `LEP_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(ConfigError::Value(format!("h must be positive, got {}", self.h)));
        }
        if self.ring == 0 || self.steiner_per_edge == 0 {
            return Err(ConfigError::Value("ring and steiner_per_edge must be positive".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::Value(format!("tol must be positive, got {t}")));
            }
        }
        if self.kind != "eikonal" {
            return Err(ConfigError::Value(format!("unsupported Hamiltonian kind '{}'", self.kind)));
        }
        Ok(())
    }

    pub fn mesh_params(&self) -> MeshParams {
        MeshParams { h: self.h, steiner_per_edge: self.steiner_per_edge, ring: self.ring }
    }

    pub fn overrides(&self) -> Overrides {
        Overrides {
            strict_subsolution: self.override_strict_subsolution,
            boundary_compat: self.override_boundary_compat,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = RunConfig::from_toml("h = 0.0625\nring = 3\nseed = 7\n").unwrap();
        assert_eq!((c.h, c.ring, c.seed), (0.0625, 3, 7));
        assert!(RunConfig::from_toml("h = -1.0\n").is_err());
        assert!(RunConfig::from_toml("mesh = 1\n").is_err());
    }
}
