//! Bounds on the probability of causation.
//!
//! PC = P(Y(0)=0 | X=1, Y=1) is not identified from data on (X, Y) alone.
//! The estimators here return the sharpest interval implied by different
//! kinds of side information:
//!
//! | name         | input              | information used                         |
//! |--------------|--------------------|------------------------------------------|
//! | `basic`      | [`Margins`]        | P(Y=1∣X=x) under ignorability            |
//! | `covariate`  | [`StratifiedData`] | a pre-exposure covariate S               |
//! | `tian-pearl` | [`Margins`]        | observational joint plus P(Y=1∣X←0)      |
//! | `mediator`   | [`MediatorData`]   | a complete binary mediator M             |
//! | `lp`         | any                | the same constraints, solved as an LP    |
//!
//! Estimators are registered by name in an [`EstimatorRegistry`].

pub mod basic;
pub mod covariate;
pub mod lp;
pub mod mediator;
pub mod registry;
pub mod tian_pearl;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use basic::{basic_lp, pc_bounds_basic, pc_point, risk_ratio, tau_rho, PoJoint};
pub use covariate::{
    compare_bounds, desired_exposure_strata, pc_bounds_conditional, pc_bounds_covariate,
    BoundsComparison, StratifiedData, Stratum,
};
pub use lp::{LinearProgram, LpOutcome, LpSolver};
pub use mediator::{mediator_lp, pc_bounds_mediator, MediatorData};
pub use registry::{BoundEstimator, BoundsInput, EstimatorRegistry};
pub use tian_pearl::{pc_bounds_tian_pearl, tian_pearl_lp};

/// Probabilities closer than this to zero are treated as zero.
pub const PROB_EPS: f64 = 1e-12;

/// Slack allowed when validating probabilities and cross-source consistency.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Response probabilities of a binary outcome under each exposure level.
///
/// Under ignorability these are the observational conditionals
/// P(Y=1|X=x). The exposure rate and the experimental P(Y=1|X←0) are only
/// needed by the Tian–Pearl bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub p_y1_given_x1: f64,
    pub p_y1_given_x0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_x1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_y1_do_x0: Option<f64>,
}

impl Margins {
    pub fn new(p_y1_given_x1: f64, p_y1_given_x0: f64) -> Result<Self> {
        let m = Self {
            p_y1_given_x1,
            p_y1_given_x0,
            p_x1: None,
            p_y1_do_x0: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_exposure(mut self, p_x1: f64) -> Result<Self> {
        self.p_x1 = Some(p_x1);
        self.validate()?;
        Ok(self)
    }

    pub fn with_experimental(mut self, p_y1_do_x0: f64) -> Result<Self> {
        self.p_y1_do_x0 = Some(p_y1_do_x0);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_prob("P(Y=1|X=1)", self.p_y1_given_x1)?;
        check_prob("P(Y=1|X=0)", self.p_y1_given_x0)?;
        if let Some(p) = self.p_x1 {
            check_prob("P(X=1)", p)?;
        }
        if let Some(p) = self.p_y1_do_x0 {
            check_prob("P(Y=1|do(X=0))", p)?;
        }
        Ok(())
    }
}

pub(crate) fn check_prob(what: &str, p: f64) -> Result<()> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} = {p} is not a probability")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Basic,
    Covariate,
    TianPearl,
    Mediator,
    Lp,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Basic => "basic",
            Method::Covariate => "covariate",
            Method::TianPearl => "tian-pearl",
            Method::Mediator => "mediator",
            Method::Lp => "lp",
        })
    }
}

/// Per-stratum summary reported by the covariate bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub label: String,
    pub weight: f64,
    pub rr: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Side quantities computed along the way; all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_stratum: Vec<StratumSummary>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub flags: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// An interval `[lower, upper] ⊆ [0, 1]` for PC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsInterval {
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl BoundsInterval {
    /// Clamps tiny rounding excursions into `[0, 1]` and checks ordering.
    pub(crate) fn new(lower: f64, upper: f64, method: Method, diagnostics: Diagnostics) -> Result<Self> {
        let lower = clamp_unit(lower);
        let upper = clamp_unit(upper);
        if lower > upper + 1e-9 {
            return Err(Error::InfeasibleData(format!(
                "{method} bounds are empty: lower {lower} > upper {upper}"
            )));
        }
        Ok(Self {
            lower,
            upper: upper.max(lower),
            method,
            diagnostics,
        })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v < 0.0 && v > -1e-9 {
        0.0
    } else if v > 1.0 && v < 1.0 + 1e-9 {
        1.0
    } else {
        v
    }
}
