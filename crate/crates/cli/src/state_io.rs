//! Density matrices as JSON: `{"dim": d, "re": [[..]], "im": [[..]]}`.

use std::fs;
use std::path::Path;

use naqi_core::qmat::validate_state;
use naqi_core::{ComplexMatrix, DensityMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        StateFile {
            dim: m.dim(),
            re: m.real_parts(),
            im: m.imag_parts(),
        }
    }

    pub fn into_state(self) -> Result<DensityMatrix, String> {
        if ![2, 4, 8].contains(&self.dim) {
            return Err(format!("dim: expected 2, 4 or 8, got {}", self.dim));
        }
        for (name, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                return Err(format!("{name}: expected a {0}x{0} array", self.dim));
            }
        }
        let m = ComplexMatrix::from_parts(&self.re, &self.im).map_err(|e| e.to_string())?;
        let diag = validate_state(&m);
        if !diag.passes {
            return Err(format!("state: {}", diag.describe()));
        }
        DensityMatrix::new(m).map_err(|e| format!("state: {e}"))
    }
}

pub fn read_state_json(path: &Path) -> Result<DensityMatrix, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("state file {}: {e}", path.display()))?;
    let file: StateFile =
        serde_json::from_str(&text).map_err(|e| format!("state file {}: {e}", path.display()))?;
    file.into_state()
}

/// Floats are written in shortest round-trip form, so reading the file back
/// reproduces every entry bit for bit.
pub fn write_state_json(path: &Path, rho: &DensityMatrix) -> Result<(), String> {
    let text = serde_json::to_string_pretty(&StateFile::from_state(rho)).map_err(|e| e.to_string())?;
    fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}
