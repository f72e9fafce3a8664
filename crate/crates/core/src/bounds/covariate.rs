//! Bounds that exploit a pre-exposure covariate S.
//!
//! Within each stratum the basic interval applies. The stratum-level slacks
//! can be chosen independently, so averaging the stratum endpoints with
//! weights P(S=s | X=1) · P(Y=1|X=1,S=s) / P(Y=1|X=1) gives sharp bounds:
//!
//! ```text
//! L = Σ_s max{0, p₁(s) − p₀(s)} P(s|X=1) / P(Y=1|X=1)
//! U = 1 − Σ_s max{0, p₁(s) − (1 − p₀(s))} P(s|X=1) / P(Y=1|X=1)
//! ```

use serde::{Deserialize, Serialize};

use super::basic::{pc_bounds_basic, risk_ratio};
use super::tian_pearl::pc_bounds_tian_pearl;
use super::{check_prob, BoundsInterval, Diagnostics, Margins, Method, StratumSummary, PROB_EPS};
use crate::error::{Error, Result};

/// One level of the covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    pub p_y1_given_x1: f64,
    pub p_y1_given_x0: f64,
    /// P(S=s | X=1).
    pub weight: f64,
    /// P(S=s), when the full joint over (S, X, Y) is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_s: Option<f64>,
    /// P(X=1 | S=s), when the full joint over (S, X, Y) is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_x1_given_s: Option<f64>,
}

impl Stratum {
    pub fn margins(&self) -> Margins {
        Margins {
            p_y1_given_x1: self.p_y1_given_x1,
            p_y1_given_x0: self.p_y1_given_x0,
            p_x1: None,
            p_y1_do_x0: None,
        }
    }
}

/// Stratum-specific response rates with their weights among the exposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedData {
    pub strata: Vec<Stratum>,
}

impl StratifiedData {
    /// From `(label, P(Y=1|X=1,s), P(Y=1|X=0,s), P(s|X=1))` tuples.
    pub fn from_exposed(strata: Vec<(&str, f64, f64, f64)>) -> Result<Self> {
        let d = Self {
            strata: strata
                .into_iter()
                .map(|(label, p1, p0, w)| Stratum {
                    label: label.to_string(),
                    p_y1_given_x1: p1,
                    p_y1_given_x0: p0,
                    weight: w,
                    p_s: None,
                    p_x1_given_s: None,
                })
                .collect(),
        };
        d.validate()?;
        Ok(d)
    }

    /// From `(label, P(s), P(X=1|s), P(Y=1|X=1,s), P(Y=1|X=0,s))` tuples,
    /// i.e. the full joint of (S, X, Y).
    pub fn from_joint(strata: Vec<(&str, f64, f64, f64, f64)>) -> Result<Self> {
        let exposed: f64 = strata.iter().map(|s| s.1 * s.2).sum();
        if exposed <= PROB_EPS {
            return Err(Error::PositivityViolation("P(X=1) = 0".into()));
        }
        let d = Self {
            strata: strata
                .into_iter()
                .map(|(label, ps, px, p1, p0)| Stratum {
                    label: label.to_string(),
                    p_y1_given_x1: p1,
                    p_y1_given_x0: p0,
                    weight: ps * px / exposed,
                    p_s: Some(ps),
                    p_x1_given_s: Some(px),
                })
                .collect(),
        };
        d.validate()?;
        Ok(d)
    }

    /// From counts `n[s][x][y]`. Every observed stratum must contain both
    /// exposed and unexposed units.
    pub fn from_counts(labels: &[&str], counts: &[[[f64; 2]; 2]]) -> Result<Self> {
        if labels.len() != counts.len() {
            return Err(Error::InvalidInput("one label per stratum required".into()));
        }
        let total: f64 = counts.iter().flatten().flatten().sum();
        if total <= 0.0 || counts.iter().flatten().flatten().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::InvalidInput("counts must be nonnegative with positive total".into()));
        }
        let mut rows = Vec::new();
        for (label, n) in labels.iter().zip(counts) {
            let ns: f64 = n.iter().flatten().sum();
            if ns == 0.0 {
                continue;
            }
            let (n0, n1) = (n[0][0] + n[0][1], n[1][0] + n[1][1]);
            if n0 == 0.0 || n1 == 0.0 {
                return Err(Error::PositivityViolation(format!(
                    "stratum {label} has no {} units",
                    if n1 == 0.0 { "exposed" } else { "unexposed" }
                )));
            }
            rows.push((*label, ns / total, n1 / ns, n[1][1] / n1, n[0][1] / n0));
        }
        Self::from_joint(rows)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strata.is_empty() {
            return Err(Error::InvalidInput("no strata".into()));
        }
        let mut total = 0.0;
        let mut total_s = 0.0;
        for s in &self.strata {
            check_prob("P(Y=1|X=1,S)", s.p_y1_given_x1)?;
            check_prob("P(Y=1|X=0,S)", s.p_y1_given_x0)?;
            check_prob("P(S|X=1)", s.weight)?;
            if let Some(p) = s.p_s {
                check_prob("P(S)", p)?;
                total_s += p;
            }
            if let Some(p) = s.p_x1_given_s {
                check_prob("P(X=1|S)", p)?;
            }
            total += s.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("stratum weights sum to {total}")));
        }
        if self.has_joint() && (total_s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("P(S) sums to {total_s}")));
        }
        Ok(())
    }

    /// Whether P(S) and P(X=1|S) are known for every stratum.
    pub fn has_joint(&self) -> bool {
        self.strata.iter().all(|s| s.p_s.is_some() && s.p_x1_given_s.is_some())
    }

    pub fn stratum(&self, label: &str) -> Result<&Stratum> {
        self.strata
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::UnknownVariable(format!("stratum {label}")))
    }

    /// P(Y=1 | X=1), pooled over strata.
    pub fn p_y1_given_x1(&self) -> f64 {
        self.strata.iter().map(|s| s.weight * s.p_y1_given_x1).sum()
    }

    /// Pooled margins; with the full joint these include P(X=1) and the
    /// back-door adjusted P(Y=1 | X←0).
    pub fn pooled_margins(&self) -> Result<Margins> {
        let p1 = self.p_y1_given_x1();
        if !self.has_joint() {
            return Err(Error::InvalidInput(
                "pooling needs P(S) and P(X=1|S) for every stratum".into(),
            ));
        }
        let mut px1 = 0.0;
        let mut p00_mass = 0.0;
        let mut y1x0 = 0.0;
        let mut do0 = 0.0;
        for s in &self.strata {
            let (ps, px) = (s.p_s.unwrap(), s.p_x1_given_s.unwrap());
            if ps > PROB_EPS && 1.0 - px <= PROB_EPS {
                return Err(Error::PositivityViolation(format!(
                    "stratum {} has no unexposed units",
                    s.label
                )));
            }
            px1 += ps * px;
            p00_mass += ps * (1.0 - px);
            y1x0 += ps * (1.0 - px) * s.p_y1_given_x0;
            do0 += ps * s.p_y1_given_x0;
        }
        let p0 = if p00_mass > PROB_EPS { y1x0 / p00_mass } else { 0.0 };
        Ok(Margins {
            p_y1_given_x1: p1,
            p_y1_given_x0: p0,
            p_x1: Some(px1),
            p_y1_do_x0: Some(do0),
        })
    }
}

/// Sharp bounds using the covariate.
pub fn pc_bounds_covariate(d: &StratifiedData) -> Result<BoundsInterval> {
    d.validate()?;
    let p1 = d.p_y1_given_x1();
    if p1 <= PROB_EPS {
        return Err(Error::PcUndefined("P(Y=1|X=1) = 0".into()));
    }
    let mut diagnostics = Diagnostics::default();
    let mut lower = 0.0;
    let mut excess = 0.0;
    for s in &d.strata {
        if s.weight <= PROB_EPS {
            diagnostics
                .warnings
                .push(format!("stratum {} has no exposed units; skipped", s.label));
            continue;
        }
        let (q1, q0) = (s.p_y1_given_x1, s.p_y1_given_x0);
        lower += (q1 - q0).max(0.0) * s.weight;
        excess += (q1 - (1.0 - q0)).max(0.0) * s.weight;
        let (l, u) = if q1 > PROB_EPS {
            (((q1 - q0) / q1).max(0.0), ((1.0 - q0) / q1).min(1.0))
        } else {
            (f64::NAN, f64::NAN)
        };
        diagnostics.per_stratum.push(StratumSummary {
            label: s.label.clone(),
            weight: s.weight,
            rr: risk_ratio(&s.margins()),
            lower: l,
            upper: u,
        });
    }
    diagnostics.values.insert("p_y1_given_x1".into(), p1);
    BoundsInterval::new(lower / p1, 1.0 - excess / p1, Method::Covariate, diagnostics)
}

/// Basic bounds for an individual known to belong to stratum `label`.
pub fn pc_bounds_conditional(d: &StratifiedData, label: &str) -> Result<BoundsInterval> {
    let s = d.stratum(label)?;
    if s.weight <= PROB_EPS && s.p_s.is_none_or(|p| p <= PROB_EPS) {
        return Err(Error::ZeroMass(format!("stratum {label} has no mass")));
    }
    pc_bounds_basic(&s.margins())
}

/// Stratification on the desired exposure D, recorded before the
/// exposure decision and equal to it in the observational regime. The
/// exposed all have D=1, and within that stratum the unexposed response rate
/// is P(Y(0)=1 | X=1), which the experimental margin identifies. Covariate
/// bounds on this stratification coincide with the Tian–Pearl bounds.
pub fn desired_exposure_strata(m: &Margins) -> Result<StratifiedData> {
    let q = super::tian_pearl::counterfactual_unexposed_rate(m)?;
    StratifiedData::from_exposed(vec![
        ("D=0", 0.0, m.p_y1_given_x0, 0.0),
        ("D=1", m.p_y1_given_x1, q, 1.0),
    ])
}

/// Covariate bounds against Tian–Pearl bounds on the same population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsComparison {
    pub covariate: BoundsInterval,
    pub tian_pearl: BoundsInterval,
    /// `L′ ≤ L`.
    pub lower_dominates: bool,
    /// `U ≤ U′`.
    pub upper_dominates: bool,
    pub lower_equal: bool,
    pub upper_equal: bool,
    /// All stratum risk ratios on one side of 1 (ties allowed).
    pub rr_same_side: bool,
    /// All ratios P(Y=1|X=1,s) / P(Y=0|X=0,s) on one side of 1.
    pub u_ratio_same_side: bool,
}

impl BoundsComparison {
    /// Monotonicity holds, and each equality holds exactly when its
    /// same-side condition does.
    pub fn is_consistent(&self) -> bool {
        self.lower_dominates
            && self.upper_dominates
            && self.lower_equal == self.rr_same_side
            && self.upper_equal == self.u_ratio_same_side
    }
}

fn same_side(diffs: impl Iterator<Item = f64>) -> bool {
    let (mut pos, mut neg) = (false, false);
    for d in diffs {
        pos |= d > PROB_EPS;
        neg |= d < -PROB_EPS;
    }
    !(pos && neg)
}

/// Computes both intervals. The Tian–Pearl side treats S as a sufficient
/// adjustment set, so P(Y=1|X←0) is obtained by back-door adjustment.
pub fn compare_bounds(d: &StratifiedData) -> Result<BoundsComparison> {
    const TOL: f64 = 1e-9;
    let covariate = pc_bounds_covariate(d)?;
    let tian_pearl = pc_bounds_tian_pearl(&d.pooled_margins()?)?;
    let live = || d.strata.iter().filter(|s| s.weight > PROB_EPS);
    let rr_same_side = same_side(live().map(|s| s.p_y1_given_x1 - s.p_y1_given_x0));
    let u_ratio_same_side =
        same_side(live().map(|s| s.p_y1_given_x1 - (1.0 - s.p_y1_given_x0)));
    Ok(BoundsComparison {
        lower_dominates: tian_pearl.lower <= covariate.lower + TOL,
        upper_dominates: covariate.upper <= tian_pearl.upper + TOL,
        lower_equal: (tian_pearl.lower - covariate.lower).abs() <= TOL,
        upper_equal: (tian_pearl.upper - covariate.upper).abs() <= TOL,
        rr_same_side,
        u_ratio_same_side,
        covariate,
        tian_pearl,
    })
}
