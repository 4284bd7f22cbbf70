//! The JSON spec-file schema and its conversion into a `ToricSpec`.
//!
//! ```json
//! {
//!   "name": "unit-simplex",
//!   "dim": 2,
//!   "facets": [
//!     {"normal": [1, 0], "offset": 0.0},
//!     {"normal": [0, 1], "offset": 0.0},
//!     {"normal": [-1, -1], "offset": -1.0}
//!   ],
//!   "projective": {"R": 2.0}
//! }
//! ```
//!
//! Facet indices in all inputs and outputs are 0-based.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use toric_kahler::ToricSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub name: String,
    pub dim: usize,
    pub facets: Vec<FacetSpec>,
    #[serde(default)]
    pub projective: Option<ProjectiveSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetSpec {
    pub normal: Vec<i64>,
    pub offset: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectiveSpec {
    #[serde(rename = "R")]
    pub r: f64,
}

/// A parsed spec file: the toric data plus file-level metadata.
pub struct LoadedSpec {
    pub name: String,
    pub spec: ToricSpec,
    pub projective_r: Option<f64>,
}

pub fn load(path: &Path) -> Result<LoadedSpec, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: SpecFile =
        serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
    if file.facets.is_empty() {
        return Err(format!("{}: no facets", path.display()));
    }
    let normals: Vec<Vec<i64>> = file.facets.iter().map(|f| f.normal.clone()).collect();
    let offsets: Vec<f64> = file.facets.iter().map(|f| f.offset).collect();
    if normals.iter().any(|u| u.len() != file.dim) {
        return Err(format!(
            "{}: a facet normal does not match dim = {}",
            path.display(),
            file.dim
        ));
    }
    let spec = ToricSpec::new(normals, offsets).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(LoadedSpec {
        name: file.name,
        spec,
        projective_r: file.projective.map(|p| p.r),
    })
}
