//! Strict JSON file formats: family files, dataset files, cover files,
//! and sweep grids. Unknown keys are rejected everywhere.

use crate::complexity::{ComplexityError, FamilyCover};
use crate::experiments::SweepGrid;
use crate::model::{Dataset, Density, ModelError, ModelFamily, SampleSpace};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cover(#[from] ComplexityError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    space_size: usize,
    #[serde(default)]
    truth: Option<Vec<f64>>,
    models: Vec<ModelEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelEntry {
    id: String,
    prior: f64,
    probs: Vec<f64>,
}

/// A family file: the validated family, the model ids in file order, and
/// the optional true density.
#[derive(Debug, Clone)]
pub struct LoadedFamily {
    pub family: ModelFamily,
    pub ids: Vec<String>,
    pub truth: Option<Density>,
}

impl LoadedFamily {
    /// Index of the model with this id.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// The truth, required.
    pub fn require_truth(&self) -> Result<&Density, IoError> {
        self.truth
            .as_ref()
            .ok_or_else(|| IoError::Invalid("family file carries no \"truth\" density".into()))
    }
}

/// Parse and validate a family file.
pub fn parse_family(json: &str) -> Result<LoadedFamily, IoError> {
    let file: FamilyFile = serde_json::from_str(json)?;
    if file.space_size == 0 {
        return Err(IoError::Invalid("space_size must be at least 1".into()));
    }
    for entry in &file.models {
        if entry.probs.len() != file.space_size {
            return Err(IoError::Invalid(format!(
                "model \"{}\" has {} probs, space_size is {}",
                entry.id,
                entry.probs.len(),
                file.space_size
            )));
        }
    }
    let ids: Vec<String> = file.models.iter().map(|m| m.id.clone()).collect();
    let priors: Vec<f64> = file.models.iter().map(|m| m.prior).collect();
    let masses: Vec<Vec<f64>> = file.models.into_iter().map(|m| m.probs).collect();
    let family = ModelFamily::validate(masses, priors)?;
    let truth = match file.truth {
        None => None,
        Some(mass) => {
            if mass.len() != file.space_size {
                return Err(IoError::Invalid(format!(
                    "truth has {} entries, space_size is {}",
                    mass.len(),
                    file.space_size
                )));
            }
            Some(Density::new(mass)?)
        }
    };
    Ok(LoadedFamily { family, ids, truth })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    samples: Vec<usize>,
}

/// Parse a dataset file against a known space.
pub fn parse_dataset(json: &str, space: SampleSpace) -> Result<Dataset, IoError> {
    let file: DatasetFile = serde_json::from_str(json)?;
    Ok(Dataset::new(file.samples, space)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverFile {
    blocks: Vec<Vec<usize>>,
}

/// Parse a cover file for a family of `n_models` models.
pub fn parse_cover(json: &str, n_models: usize) -> Result<FamilyCover, IoError> {
    let file: CoverFile = serde_json::from_str(json)?;
    Ok(FamilyCover::new(file.blocks, n_models)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    #[serde(default)]
    lambda: Vec<f64>,
    #[serde(default)]
    rho: Vec<f64>,
    #[serde(default)]
    gamma: Vec<f64>,
    #[serde(default)]
    alpha: Vec<f64>,
    #[serde(default)]
    t: Vec<f64>,
    #[serde(default)]
    delta: Vec<f64>,
    #[serde(default)]
    n: Vec<usize>,
}

/// Parse a sweep grid file.
pub fn parse_grid(json: &str) -> Result<SweepGrid, IoError> {
    let file: GridFile = serde_json::from_str(json)?;
    Ok(SweepGrid {
        lambda: file.lambda,
        rho: file.rho,
        gamma: file.gamma,
        alpha: file.alpha,
        t: file.t,
        delta: file.delta,
        n: file.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAMILY: &str = r#"{
        "space_size": 2,
        "truth": [0.5, 0.5],
        "models": [
            {"id": "a", "prior": 0.25, "probs": [0.9, 0.1]},
            {"id": "b", "prior": 0.75, "probs": [0.5, 0.5]}
        ]
    }"#;

    #[test]
    fn family_roundtrip() {
        let loaded = parse_family(FAMILY).unwrap();
        assert_eq!(loaded.family.len(), 2);
        assert_eq!(loaded.ids, vec!["a", "b"]);
        assert_eq!(loaded.index_of("b"), Some(1));
        assert!(loaded.truth.is_some());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let with_extra = FAMILY.replace("\"space_size\"", "\"spice\": 1, \"space_size\"");
        assert!(matches!(parse_family(&with_extra), Err(IoError::Json(_))));
        assert!(parse_dataset(
            r#"{"samples": [0], "extra": 1}"#,
            SampleSpace::new(2).unwrap()
        )
        .is_err());
    }

    #[test]
    fn invalid_values_are_rejected_not_renormalized() {
        let bad_prior = FAMILY.replace("0.25", "0.30");
        assert!(matches!(parse_family(&bad_prior), Err(IoError::Model(_))));
        let bad_len = FAMILY.replace("[0.9, 0.1]", "[0.9, 0.05, 0.05]");
        assert!(matches!(parse_family(&bad_len), Err(IoError::Invalid(_))));
    }

    #[test]
    fn dataset_and_cover_and_grid_parse() {
        let space = SampleSpace::new(3).unwrap();
        let data = parse_dataset(r#"{"samples": [0, 2, 1]}"#, space).unwrap();
        assert_eq!(data.len(), 3);
        assert!(parse_dataset(r#"{"samples": [3]}"#, space).is_err());

        let cover = parse_cover(r#"{"blocks": [[0, 1], [2]]}"#, 3).unwrap();
        assert!(cover.is_partition());
        assert!(parse_cover(r#"{"blocks": [[0]]}"#, 2).is_err());

        let grid = parse_grid(r#"{"lambda": [1.5, 2.0], "n": [10]}"#).unwrap();
        assert_eq!(grid.lambda, vec![1.5, 2.0]);
        assert_eq!(grid.n, vec![10]);
        assert!(grid.rho.is_empty());
        assert!(parse_grid(r#"{"lambdas": [1.0]}"#).is_err());
    }
}
