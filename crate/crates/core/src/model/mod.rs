//! Finite-type model instances.
//!
//! A model has `A` particle types. Type `a` carries a jump-rate function
//! `w_a(y, t)`, a weight `r_a` (its share of the population) and an initial
//! tail profile `rho_a(y)`: the fraction of type-`a` particles whose initial
//! normalized position is at least `y`.

mod assign;
mod bound;
mod validate;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ratelang::{ExprError, RateExpr, Var};

pub use assign::{make_assignment, AssignMode, TypeAssignment};
pub use bound::{rate_bound, RateBoundDetail};
pub use validate::{validate_model, ValidationReport, Violation, ViolationKind};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("type {index}: {field}: {source}")]
    Expr {
        index: usize,
        field: &'static str,
        #[source]
        source: ExprError,
    },
    #[error("model has no types")]
    Empty,
    #[error("model is invalid: {0}")]
    Invalid(String),
    #[error("rate bound has not been computed")]
    MissingBound,
    #[error("cannot assign types at y={y}: tail deviation {deviation} exceeds {limit}")]
    InfeasibleAssignment { y: f64, deviation: f64, limit: f64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// On-disk model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub types: Vec<TypeEntry>,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeEntry {
    pub rate: String,
    pub profile: String,
    pub weight: f64,
}

/// One particle type with its derivatives precomputed.
#[derive(Clone, Debug)]
pub struct TypeSpec {
    pub rate: RateExpr,
    /// `dw/dy`.
    pub rate_dy: RateExpr,
    pub profile: RateExpr,
    /// `drho/dy`.
    pub profile_dy: RateExpr,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub types: Vec<TypeSpec>,
    pub horizon: f64,
    /// Certified `R >= sup max(w, |dw/dy|)`; filled by [`ModelSpec::compute_rate_bound`].
    pub rate_bound: Option<f64>,
    source: ModelFile,
}

impl ModelSpec {
    pub fn from_file(file: &ModelFile) -> Result<ModelSpec, ModelError> {
        if file.types.is_empty() {
            return Err(ModelError::Empty);
        }
        let types = file
            .types
            .iter()
            .enumerate()
            .map(|(index, entry)| {
                let wrap = |field: &'static str| move |source| ModelError::Expr { index, field, source };
                let rate = RateExpr::parse(&entry.rate).map_err(wrap("rate"))?;
                let rate_dy = rate.diff_y().map_err(wrap("rate"))?;
                let profile = RateExpr::parse(&entry.profile).map_err(wrap("profile"))?;
                let profile_dy = profile.diff_y().map_err(wrap("profile"))?;
                Ok(TypeSpec {
                    rate,
                    rate_dy,
                    profile,
                    profile_dy,
                    weight: entry.weight,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(ModelSpec {
            types,
            horizon: file.horizon,
            rate_bound: None,
            source: file.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<ModelSpec, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        ModelSpec::from_file(&file)
    }

    /// Parses, validates and computes the rate bound in one go.
    pub fn load(file: &ModelFile) -> Result<ModelSpec, ModelError> {
        let mut model = ModelSpec::from_file(file)?;
        let report = validate_model(&model);
        if !report.is_accepted() {
            return Err(ModelError::Invalid(report.summary()));
        }
        model.compute_rate_bound().map_err(|source| ModelError::Expr {
            index: 0,
            field: "rate",
            source,
        })?;
        Ok(model)
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.types.iter().map(|t| t.weight).collect()
    }

    pub fn file(&self) -> &ModelFile {
        &self.source
    }

    pub fn compute_rate_bound(&mut self) -> Result<f64, ExprError> {
        let r = rate_bound(self)?.bound;
        self.rate_bound = Some(r);
        Ok(r)
    }

    pub fn bound(&self) -> Result<f64, ModelError> {
        self.rate_bound.ok_or(ModelError::MissingBound)
    }

    /// SHA-256 over the canonical JSON of the model file.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.source).expect("model file serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// True if type `a` has a rate depending on neither `y` nor `t`.
    pub fn constant_rate(&self, a: usize) -> Option<f64> {
        let rate = &self.types[a].rate;
        if rate.depends_on(Var::Y) || rate.depends_on(Var::T) {
            None
        } else {
            rate.as_constant()
        }
    }
}

/// A handful of ready-made models used by tests, benches and the CLI docs.
pub mod presets {
    use super::{ModelFile, TypeEntry};

    fn entry(rate: &str, profile: &str, weight: f64) -> TypeEntry {
        TypeEntry {
            rate: rate.into(),
            profile: profile.into(),
            weight,
        }
    }

    /// One type, unit rate, uniform initial profile.
    pub fn constant(horizon: f64) -> ModelFile {
        ModelFile {
            types: vec![entry("1.0", "1-y", 1.0)],
            horizon,
        }
    }

    /// Two types with constant rates 1 and 2 and equal uniform profiles.
    pub fn two_constant(horizon: f64) -> ModelFile {
        ModelFile {
            types: vec![entry("1.0", "1-y", 0.5), entry("2.0", "1-y", 0.5)],
            horizon,
        }
    }

    /// Two types with space-time dependent rates and non-uniform profiles.
    pub fn two_type_space_time(horizon: f64) -> ModelFile {
        ModelFile {
            types: vec![
                entry("exp(-t)*(1+y)", "(1-y)*(1-y)", 0.5),
                entry("0.5+y*y", "2*(1-y)-(1-y)*(1-y)", 0.5),
            ],
            horizon,
        }
    }

    /// A frozen type (rate zero) mixed with a position-dependent one.
    pub fn with_zero_rate(horizon: f64) -> ModelFile {
        ModelFile {
            types: vec![entry("0", "1-y", 0.5), entry("1+y", "1-y", 0.5)],
            horizon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_schema() {
        let text = r#"{"types":[{"rate":"exp(-t)*(1+y)","profile":"1-y","weight":1.0}],"horizon":1.5}"#;
        let m = ModelSpec::from_json(text).unwrap();
        assert_eq!(m.num_types(), 1);
        assert_eq!(m.horizon, 1.5);
        assert_eq!(m.file().types[0].rate, "exp(-t)*(1+y)");
        assert!(ModelSpec::from_json(r#"{"types":[],"horizon":1}"#).is_err());
        assert!(
            ModelSpec::from_json(r#"{"types":[{"rate":"1","profile":"1-y","weight":1,"x":2}],"horizon":1}"#).is_err()
        );
    }

    #[test]
    fn parse_errors_name_the_type() {
        let mut f = presets::two_constant(1.0);
        f.types[1].profile = "1-q".into();
        let err = ModelSpec::from_file(&f).unwrap_err();
        assert!(
            matches!(
                err,
                ModelError::Expr {
                    index: 1,
                    field: "profile",
                    ..
                }
            ),
            "{err}"
        );
        f.types[1].profile = "1-y".into();
        f.types[0].rate = "max(y, 0.5)".into();
        assert!(matches!(
            ModelSpec::from_file(&f).unwrap_err(),
            ModelError::Expr {
                index: 0,
                source: ExprError::NotDifferentiable(_),
                ..
            }
        ));
    }

    #[test]
    fn hash_is_stable() {
        let a = ModelSpec::from_file(&presets::constant(1.0)).unwrap();
        let b = ModelSpec::from_file(&presets::constant(1.0)).unwrap();
        let c = ModelSpec::from_file(&presets::constant(2.0)).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn load_rejects_invalid() {
        let mut f = presets::constant(1.0);
        f.types[0].profile = "1-0.9*y".into();
        assert!(matches!(ModelSpec::load(&f), Err(ModelError::Invalid(_))));
        let m = ModelSpec::load(&presets::two_type_space_time(1.0)).unwrap();
        assert!(m.bound().unwrap() >= 2.0);
        assert_eq!(m.constant_rate(0), None);
        let c = ModelSpec::load(&presets::two_constant(1.0)).unwrap();
        assert_eq!(c.constant_rate(1), Some(2.0));
    }
}
