//! Algebra file format: JSON with flat row-major `structure` (n³) and
//! `gram` (n²) arrays. Floats are written in shortest round-trip form, so
//! `load(save(a))` reproduces `a` bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{AlgebraSpec, SYMMETRIZATION_WARN};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub schema_version: u32,
    pub label: String,
    pub dim: usize,
    pub structure: Vec<f64>,
    pub gram: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, Value>,
}

/// A parsed algebra plus anything worth telling the user about it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub algebra: AlgebraSpec,
    pub metadata: BTreeMap<String, Value>,
    /// Max-abs `C[i,j,k] − C[j,i,k]` removed by symmetrization.
    pub asymmetry: f64,
    pub warnings: Vec<String>,
}

impl AlgebraFile {
    pub fn from_spec(a: &AlgebraSpec, metadata: BTreeMap<String, Value>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            label: a.label().to_string(),
            dim: a.dim(),
            structure: a.structure().to_vec(),
            gram: a.gram().transpose().as_slice().to_vec(),
            metadata,
        }
    }

    /// Checks sizes and version and builds the symmetrized algebra.
    pub fn into_loaded(self) -> Result<Loaded> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "field `schema_version`: unsupported version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let n = self.dim;
        if n == 0 {
            return Err(Error::Parse("field `dim`: must be positive".into()));
        }
        if self.gram.len() != n * n {
            return Err(Error::ShapeMismatch {
                field: "gram",
                expected: n * n,
                got: self.gram.len(),
            });
        }
        let gram = DMatrix::from_row_slice(n, n, &self.gram);
        let raw = AlgebraSpec::new(self.label, n, self.structure, gram)?;
        let (algebra, asymmetry) = raw.symmetrized();
        let mut warnings = Vec::new();
        if asymmetry > SYMMETRIZATION_WARN {
            let msg = format!(
                "field `structure`: C[i,j,k] and C[j,i,k] differ by up to {asymmetry:.3e}; \
                 replaced by the symmetric part"
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        Ok(Loaded {
            algebra,
            metadata: self.metadata,
            asymmetry,
            warnings,
        })
    }
}

pub fn to_json(a: &AlgebraSpec, metadata: BTreeMap<String, Value>) -> Result<String> {
    if a.structure().iter().chain(a.gram().iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("algebra contains non-finite entries".into()));
    }
    let file = AlgebraFile::from_spec(a, metadata);
    let mut s = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Loaded> {
    let file: AlgebraFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_loaded()
}

pub fn save(a: &AlgebraSpec, path: &Path) -> Result<()> {
    save_with_metadata(a, BTreeMap::new(), path)
}

pub fn save_with_metadata(a: &AlgebraSpec, metadata: BTreeMap<String, Value>, path: &Path) -> Result<()> {
    fs::write(path, to_json(a, metadata)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path)?;
    from_json(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}
