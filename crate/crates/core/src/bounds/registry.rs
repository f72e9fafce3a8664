//! Bound estimators selectable by name.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    basic_lp, pc_bounds_basic, pc_bounds_covariate, pc_bounds_mediator,
    pc_bounds_tian_pearl, tian_pearl_lp, BoundsInterval, Margins, MediatorData, StratifiedData,
};
use crate::error::{Error, Result};

/// Any of the data shapes the estimators accept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BoundsInput {
    Margins(Margins),
    Stratified(StratifiedData),
    Mediator(MediatorData),
}

impl BoundsInput {
    fn kind(&self) -> &'static str {
        match self {
            BoundsInput::Margins(_) => "margins",
            BoundsInput::Stratified(_) => "stratified",
            BoundsInput::Mediator(_) => "mediator",
        }
    }
}

pub trait BoundEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the estimator can use this input at all.
    fn accepts(&self, input: &BoundsInput) -> bool;

    fn estimate(&self, input: &BoundsInput) -> Result<BoundsInterval>;
}

impl fmt::Debug for dyn BoundEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundEstimator({})", self.name())
    }
}

fn unsupported(name: &str, input: &BoundsInput) -> Error {
    Error::InvalidInput(format!("estimator {name} does not accept {} input", input.kind()))
}

struct Basic;

impl BoundEstimator for Basic {
    fn name(&self) -> &'static str {
        "basic"
    }
    fn accepts(&self, input: &BoundsInput) -> bool {
        matches!(input, BoundsInput::Margins(_))
    }
    fn estimate(&self, input: &BoundsInput) -> Result<BoundsInterval> {
        match input {
            BoundsInput::Margins(m) => pc_bounds_basic(m),
            other => Err(unsupported(self.name(), other)),
        }
    }
}

struct Covariate;

impl BoundEstimator for Covariate {
    fn name(&self) -> &'static str {
        "covariate"
    }
    fn accepts(&self, input: &BoundsInput) -> bool {
        matches!(input, BoundsInput::Stratified(_))
    }
    fn estimate(&self, input: &BoundsInput) -> Result<BoundsInterval> {
        match input {
            BoundsInput::Stratified(d) => pc_bounds_covariate(d),
            other => Err(unsupported(self.name(), other)),
        }
    }
}

struct TianPearl;

impl BoundEstimator for TianPearl {
    fn name(&self) -> &'static str {
        "tian-pearl"
    }
    fn accepts(&self, input: &BoundsInput) -> bool {
        match input {
            BoundsInput::Margins(m) => m.p_x1.is_some() && m.p_y1_do_x0.is_some(),
            BoundsInput::Stratified(d) => d.has_joint(),
            BoundsInput::Mediator(_) => false,
        }
    }
    fn estimate(&self, input: &BoundsInput) -> Result<BoundsInterval> {
        match input {
            BoundsInput::Margins(m) => pc_bounds_tian_pearl(m),
            BoundsInput::Stratified(d) => pc_bounds_tian_pearl(&d.pooled_margins()?),
            other => Err(unsupported(self.name(), other)),
        }
    }
}

struct Mediator;

impl BoundEstimator for Mediator {
    fn name(&self) -> &'static str {
        "mediator"
    }
    fn accepts(&self, input: &BoundsInput) -> bool {
        matches!(input, BoundsInput::Mediator(_))
    }
    fn estimate(&self, input: &BoundsInput) -> Result<BoundsInterval> {
        match input {
            BoundsInput::Mediator(d) => pc_bounds_mediator(d),
            other => Err(unsupported(self.name(), other)),
        }
    }
}

/// Solves the constraint set of the matching closed-form estimator as a
/// linear program.
struct Lp;

impl BoundEstimator for Lp {
    fn name(&self) -> &'static str {
        "lp"
    }
    fn accepts(&self, input: &BoundsInput) -> bool {
        matches!(input, BoundsInput::Margins(_) | BoundsInput::Mediator(_))
    }
    fn estimate(&self, input: &BoundsInput) -> Result<BoundsInterval> {
        match input {
            BoundsInput::Margins(m) if m.p_x1.is_some() && m.p_y1_do_x0.is_some() => {
                tian_pearl_lp(m, None)
            }
            BoundsInput::Margins(m) => basic_lp(m, None),
            BoundsInput::Mediator(d) => {
                let mut b = pc_bounds_mediator(d)?;
                b.method = super::Method::Lp;
                Ok(b)
            }
            other => Err(unsupported(self.name(), other)),
        }
    }
}

/// Estimators keyed by name.
pub struct EstimatorRegistry {
    estimators: BTreeMap<&'static str, Box<dyn BoundEstimator>>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self {
            estimators: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, e: Box<dyn BoundEstimator>) {
        self.estimators.insert(e.name(), e);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.estimators.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn BoundEstimator> {
        self.estimators.get(name).map(|e| e.as_ref()).ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown estimator {name:?}; available: {}",
                self.names().join(", ")
            ))
        })
    }

    /// The most informative registered estimator for the input.
    pub fn default_for(&self, input: &BoundsInput) -> Result<&dyn BoundEstimator> {
        let name = match input {
            BoundsInput::Margins(m) if m.p_x1.is_some() && m.p_y1_do_x0.is_some() => "tian-pearl",
            BoundsInput::Margins(_) => "basic",
            BoundsInput::Stratified(_) => "covariate",
            BoundsInput::Mediator(_) => "mediator",
        };
        self.get(name)
    }

    pub fn estimate(&self, name: &str, input: &BoundsInput) -> Result<BoundsInterval> {
        self.get(name)?.estimate(input)
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Basic));
        r.register(Box::new(Covariate));
        r.register(Box::new(TianPearl));
        r.register(Box::new(Mediator));
        r.register(Box::new(Lp));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Method;

    #[test]
    fn registry_dispatch() {
        let r = EstimatorRegistry::default();
        assert_eq!(r.names(), ["basic", "covariate", "lp", "mediator", "tian-pearl"]);
        let m = BoundsInput::Margins(Margins::new(0.6, 0.3).unwrap());
        assert_eq!(r.default_for(&m).unwrap().name(), "basic");
        let b = r.estimate("lp", &m).unwrap();
        assert_eq!(b.method, Method::Lp);
        assert!((b.lower - 0.5).abs() < 1e-12);
        assert!(!r.get("covariate").unwrap().accepts(&m));
        assert!(matches!(r.estimate("covariate", &m), Err(Error::InvalidInput(_))));
        assert!(r.get("bogus").is_err());
    }
}
