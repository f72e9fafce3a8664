//! The interval of ambiguity from exposure-specific response rates alone.
//!
//! Write p₁ = P(Y(1)=1) and p₀ = P(Y(0)=1). The joint of (Y(0), Y(1)) has
//! one free parameter, the slack ξ = P(Y(0) ≠ Y(1)):
//!
//! ```text
//!              Y(1)=0            Y(1)=1
//! Y(0)=0   (1 − ξ − ρ)/2      (ξ + τ)/2
//! Y(0)=1      (ξ − τ)/2    (1 − ξ + ρ)/2
//! ```
//!
//! with τ = p₁ − p₀, ρ = p₁ + p₀ − 1 and |τ| ≤ ξ ≤ 1 − |ρ|.

use serde::{Deserialize, Serialize};

use super::lp::{default_solver, LinearProgram, LpSolver};
use super::{BoundsInterval, Diagnostics, Margins, Method, PROB_EPS};
use crate::error::{Error, Result};

/// `(τ, ρ)` for the given margins.
pub fn tau_rho(m: &Margins) -> (f64, f64) {
    let (p1, p0) = (m.p_y1_given_x1, m.p_y1_given_x0);
    (p1 - p0, p1 - (1.0 - p0))
}

/// P(Y=1|X=1) / P(Y=1|X=0); infinite when the denominator vanishes.
pub fn risk_ratio(m: &Margins) -> f64 {
    if m.p_y1_given_x0 <= PROB_EPS {
        f64::INFINITY
    } else {
        m.p_y1_given_x1 / m.p_y1_given_x0
    }
}

/// A joint distribution of the two potential outcomes, parametrized by
/// `(τ, ρ, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoJoint {
    pub tau: f64,
    pub rho: f64,
    pub xi: f64,
}

impl PoJoint {
    pub fn new(tau: f64, rho: f64, xi: f64) -> Result<Self> {
        let j = Self { tau, rho, xi };
        let (lo, hi) = (tau.abs(), 1.0 - rho.abs());
        if !(xi >= lo - 1e-12 && xi <= hi + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "slack {xi} outside [{lo}, {hi}]"
            )));
        }
        if j.cells().iter().any(|&c| c < -1e-12) {
            return Err(Error::InvalidInput(format!(
                "(tau, rho) = ({tau}, {rho}) is not a feasible margin pair"
            )));
        }
        Ok(j)
    }

    pub fn from_margins(m: &Margins, xi: f64) -> Result<Self> {
        let (tau, rho) = tau_rho(m);
        Self::new(tau, rho, xi)
    }

    /// Feasible range of the slack.
    pub fn slack_range(m: &Margins) -> (f64, f64) {
        let (tau, rho) = tau_rho(m);
        (tau.abs(), 1.0 - rho.abs())
    }

    /// Cell probabilities `[P(0,0), P(0,1), P(1,0), P(1,1)]`, indexed by
    /// `(Y(0), Y(1))`.
    pub fn cells(&self) -> [f64; 4] {
        let (t, r, x) = (self.tau, self.rho, self.xi);
        [
            (1.0 - x - r) / 2.0,
            (x + t) / 2.0,
            (x - t) / 2.0,
            (1.0 - x + r) / 2.0,
        ]
    }
}

/// PC = (ξ + τ) / (1 + τ + ρ).
pub fn pc_point(j: &PoJoint) -> Result<f64> {
    let den = 1.0 + j.tau + j.rho;
    if den <= PROB_EPS {
        return Err(Error::PcUndefined("P(Y(1)=1) = 0".into()));
    }
    Ok((j.xi + j.tau) / den)
}

/// `[max(0, 1 − 1/RR), min(1, P(Y=0|X=0)/P(Y=1|X=1))]`.
pub fn pc_bounds_basic(m: &Margins) -> Result<BoundsInterval> {
    m.validate()?;
    let (p1, p0) = (m.p_y1_given_x1, m.p_y1_given_x0);
    if p1 <= PROB_EPS {
        return Err(Error::PcUndefined("P(Y=1|X=1) = 0".into()));
    }
    let (tau, rho) = tau_rho(m);
    // 1 − 1/RR = τ / p₁, written without the division by p₀
    let lower = (tau / p1).max(0.0);
    let upper = ((1.0 - p0) / p1).min(1.0);
    let diagnostics = Diagnostics {
        rr: Some(risk_ratio(m)),
        tau: Some(tau),
        rho: Some(rho),
        ..Default::default()
    };
    BoundsInterval::new(lower, upper, Method::Basic, diagnostics)
}

/// The same interval as [`pc_bounds_basic`], obtained by optimizing the
/// PC numerator over all joints of `(Y(0), Y(1))` with the given margins.
pub fn basic_lp(m: &Margins, solver: Option<&dyn LpSolver>) -> Result<BoundsInterval> {
    m.validate()?;
    let (p1, p0) = (m.p_y1_given_x1, m.p_y1_given_x0);
    if p1 <= PROB_EPS {
        return Err(Error::PcUndefined("P(Y=1|X=1) = 0".into()));
    }
    // cell index 2·y0 + y1
    let lp = LinearProgram::new(4)
        .indicator_equality(|_| true, 1.0)
        .indicator_equality(|c| c & 1 == 1, p1)
        .indicator_equality(|c| c >> 1 == 1, p0)
        .objective(vec![0.0, 1.0 / p1, 0.0, 0.0]);
    let solver = solver.unwrap_or(default_solver());
    let o = solver.optimize(&lp)?;
    let (tau, rho) = tau_rho(m);
    let mut diagnostics = Diagnostics {
        rr: Some(risk_ratio(m)),
        tau: Some(tau),
        rho: Some(rho),
        ..Default::default()
    };
    diagnostics.values.insert("xi_at_lower".into(), o.argmin[1] + o.argmin[2]);
    diagnostics.values.insert("xi_at_upper".into(), o.argmax[1] + o.argmax[2]);
    BoundsInterval::new(o.min, o.max, Method::Lp, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::lp::{ExactSimplex, Simplex};

    #[test]
    fn tau_rho_examples() {
        let (t, r) = tau_rho(&Margins::new(0.6, 0.3).unwrap());
        assert!((t - 0.3).abs() < 1e-15 && (r + 0.1).abs() < 1e-15);
        assert_eq!(tau_rho(&Margins::new(1.0, 0.0).unwrap()), (1.0, 0.0));
        assert_eq!(tau_rho(&Margins::new(0.4, 0.4).unwrap()).0, 0.0);
    }

    #[test]
    fn point_values() {
        assert_eq!(pc_point(&PoJoint::new(1.0, 0.0, 1.0).unwrap()).unwrap(), 1.0);
        assert_eq!(pc_point(&PoJoint::new(0.0, 0.0, 0.0).unwrap()).unwrap(), 0.0);
        let j = PoJoint::new(0.3, -0.1, 0.5).unwrap();
        assert!((pc_point(&j).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // the same number from the joint (Y0, Y1) cells given X=1: P(Y0=0, Y1=1) / P(Y1=1)
        let c = j.cells();
        assert!((c[1] / (c[1] + c[3]) - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // Y(1) never 1
        assert!(matches!(
            pc_point(&PoJoint::new(-0.5, -1.0 + 0.5, 0.5).unwrap()),
            Err(Error::PcUndefined(_))
        ));
        assert!(PoJoint::new(0.3, -0.1, 0.95).is_err());
    }

    #[test]
    fn basic_examples() {
        let b = pc_bounds_basic(&Margins::new(0.6, 0.3).unwrap()).unwrap();
        assert!((b.lower - 0.5).abs() < 1e-15 && b.upper == 1.0);
        assert_eq!(b.diagnostics.rr, Some(2.0));
        let b = pc_bounds_basic(&Margins::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
        let b = pc_bounds_basic(&Margins::new(0.5, 0.5).unwrap()).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 1.0));
        assert!(matches!(
            pc_bounds_basic(&Margins::new(0.0, 0.3).unwrap()),
            Err(Error::PcUndefined(_))
        ));
        assert!(Margins::new(1.2, 0.3).is_err());
    }

    #[test]
    fn lp_agrees_with_closed_form_and_attains_endpoints() {
        for &(p1, p0) in &[(0.6, 0.3), (0.2, 0.7), (0.9, 0.8), (1.0, 0.0), (0.5, 0.5), (0.05, 0.0)] {
            let m = Margins::new(p1, p0).unwrap();
            let closed = pc_bounds_basic(&m).unwrap();
            for solver in [None, Some(&Simplex as &dyn LpSolver), Some(&ExactSimplex)] {
                let lp = basic_lp(&m, solver).unwrap();
                assert!((lp.lower - closed.lower).abs() < 1e-12, "{p1} {p0}");
                assert!((lp.upper - closed.upper).abs() < 1e-12, "{p1} {p0}");
            }
            let (lo, hi) = PoJoint::slack_range(&m);
            let at = |xi| pc_point(&PoJoint::from_margins(&m, xi).unwrap()).unwrap();
            assert!((at(lo) - closed.lower).abs() < 1e-12);
            assert!((at(hi) - closed.upper).abs() < 1e-12);
        }
    }
}
