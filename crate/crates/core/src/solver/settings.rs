use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming a TOML file with a `[solver]` section.
pub const SETTINGS_ENV: &str = "RANDCERT_SOLVER_SETTINGS";

/// Interior-point settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Target relative duality gap and relative residuals.
    pub tol: f64,
    /// Accuracy still accepted (status `NearOptimal`) when progress stalls
    /// before `tol` is reached.
    pub reduced_tol: f64,
    pub max_iter: usize,
    /// Threshold on normalized Farkas residuals for declaring infeasibility.
    pub infeasibility_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-9,
            reduced_tol: 1e-6,
            max_iter: 120,
            infeasibility_tol: 1e-8,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingsFile {
    #[serde(default)]
    solver: SolverSettings,
}

impl SolverSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Parse the `[solver]` section of a TOML document; missing keys keep
    /// their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SettingsFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let s = file.solver;
        if !(s.tol > 0.0 && s.reduced_tol >= s.tol && s.infeasibility_tol > 0.0 && s.max_iter > 0) {
            return Err(Error::InvalidArgument(format!(
                "inconsistent solver settings {s:?}"
            )));
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Settings from the file named by `RANDCERT_SOLVER_SETTINGS`, or the
    /// defaults when the variable is unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(SETTINGS_ENV) {
            Some(path) => Self::from_file(Path::new(&path)),
            None => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_section_keeps_defaults() {
        let s = SolverSettings::from_toml("[solver]\ntol = 1e-7\nmax_iter = 50\n").unwrap();
        assert_eq!(s.tol, 1e-7);
        assert_eq!(s.max_iter, 50);
        assert_eq!(s.reduced_tol, SolverSettings::default().reduced_tol);
        assert_eq!(
            SolverSettings::from_toml("").unwrap(),
            SolverSettings::default()
        );
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(SolverSettings::from_toml("[solver]\ntolerance = 1e-7\n").is_err());
        assert!(SolverSettings::from_toml("[solver]\ntol = -1.0\n").is_err());
    }
}
