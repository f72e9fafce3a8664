//! Bounds when the effect of X on Y runs entirely through a binary
//! mediator M, so that Y ⫫ X | M.
//!
//! Each unit carries four potential values (M(0), M(1), Y(m=0), Y(m=1)).
//! A distribution over those 16 types must reproduce P(M=1|X=x),
//! P(Y=1|M=m) and the composed rates P(Y(M(x))=1) = P(Y=1|X=x); PC is the
//! mass of {Y(M(1))=1, Y(M(0))=0} divided by P(Y=1|X=1).

use serde::{Deserialize, Serialize};

use super::basic::{risk_ratio, tau_rho};
use super::lp::{default_solver, LinearProgram, LpSolver};
use super::{check_prob, BoundsInterval, Diagnostics, Margins, Method, CONSISTENCY_TOL, PROB_EPS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediatorData {
    /// P(M=1 | X=0).
    pub p_m1_given_x0: f64,
    /// P(M=1 | X=1).
    pub p_m1_given_x1: f64,
    /// P(Y=1 | M=0).
    pub p_y1_given_m0: f64,
    /// P(Y=1 | M=1).
    pub p_y1_given_m1: f64,
    /// Observed P(Y=1 | X=x), if available; checked against the value the
    /// mediator model implies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<[f64; 2]>,
}

impl MediatorData {
    pub fn new(p_m1_given_x: [f64; 2], p_y1_given_m: [f64; 2]) -> Result<Self> {
        let d = Self {
            p_m1_given_x0: p_m1_given_x[0],
            p_m1_given_x1: p_m1_given_x[1],
            p_y1_given_m0: p_y1_given_m[0],
            p_y1_given_m1: p_y1_given_m[1],
            observed: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_observed(mut self, p_y1_given_x: [f64; 2]) -> Result<Self> {
        self.observed = Some(p_y1_given_x);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_prob("P(M=1|X=0)", self.p_m1_given_x0)?;
        check_prob("P(M=1|X=1)", self.p_m1_given_x1)?;
        check_prob("P(Y=1|M=0)", self.p_y1_given_m0)?;
        check_prob("P(Y=1|M=1)", self.p_y1_given_m1)?;
        if let Some(o) = self.observed {
            check_prob("P(Y=1|X=0)", o[0])?;
            check_prob("P(Y=1|X=1)", o[1])?;
        }
        Ok(())
    }

    /// P(Y=1 | X=x) = Σ_m P(Y=1|M=m) P(M=m|X=x).
    pub fn implied(&self, x: usize) -> f64 {
        let a = if x == 1 { self.p_m1_given_x1 } else { self.p_m1_given_x0 };
        self.p_y1_given_m1 * a + self.p_y1_given_m0 * (1.0 - a)
    }

    pub fn implied_margins(&self) -> Margins {
        Margins {
            p_y1_given_x1: self.implied(1),
            p_y1_given_x0: self.implied(0),
            p_x1: None,
            p_y1_do_x0: None,
        }
    }

    fn check_observed(&self) -> Result<()> {
        if let Some(o) = self.observed {
            for x in 0..2 {
                let d = (o[x] - self.implied(x)).abs();
                if d > CONSISTENCY_TOL {
                    return Err(Error::InfeasibleData(format!(
                        "observed P(Y=1|X={x}) = {} but the mediator implies {}",
                        o[x],
                        self.implied(x)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Index of a response type: `8·M(0) + 4·M(1) + 2·Y(m=0) + Y(m=1)`.
pub fn mediator_type(m0: usize, m1: usize, y0: usize, y1: usize) -> usize {
    8 * m0 + 4 * m1 + 2 * y0 + y1
}

/// `(M(0), M(1), Y(m=0), Y(m=1))` of a response type index.
pub fn mediator_type_parts(t: usize) -> (usize, usize, usize, usize) {
    ((t >> 3) & 1, (t >> 2) & 1, (t >> 1) & 1, t & 1)
}

/// The linear program over the 16 response types.
pub fn mediator_lp(d: &MediatorData) -> Result<LinearProgram> {
    d.validate()?;
    let p1 = d.implied(1);
    if p1 <= PROB_EPS {
        return Err(Error::PcUndefined("P(Y=1|X=1) = 0".into()));
    }
    let parts = mediator_type_parts;
    let y_of = |t: usize, m: usize| {
        let (_, _, y0, y1) = parts(t);
        if m == 1 { y1 } else { y0 }
    };
    let y_through = |t: usize, x: usize| {
        let (m0, m1, _, _) = parts(t);
        y_of(t, if x == 1 { m1 } else { m0 })
    };
    Ok(LinearProgram::new(16)
        .indicator_equality(|_| true, 1.0)
        .indicator_equality(|t| parts(t).0 == 1, d.p_m1_given_x0)
        .indicator_equality(|t| parts(t).1 == 1, d.p_m1_given_x1)
        .indicator_equality(|t| parts(t).2 == 1, d.p_y1_given_m0)
        .indicator_equality(|t| parts(t).3 == 1, d.p_y1_given_m1)
        .indicator_equality(|t| y_through(t, 0) == 1, d.implied(0))
        .indicator_equality(|t| y_through(t, 1) == 1, p1)
        .objective(
            (0..16)
                .map(|t| {
                    if y_through(t, 1) == 1 && y_through(t, 0) == 0 {
                        1.0 / p1
                    } else {
                        0.0
                    }
                })
                .collect(),
        ))
}

pub fn pc_bounds_mediator_with(d: &MediatorData, solver: &dyn LpSolver) -> Result<BoundsInterval> {
    d.check_observed()?;
    let lp = mediator_lp(d)?;
    let o = solver.optimize(&lp)?;
    let m = d.implied_margins();
    let (tau, rho) = tau_rho(&m);
    let mut diagnostics = Diagnostics {
        rr: Some(risk_ratio(&m)),
        tau: Some(tau),
        rho: Some(rho),
        ..Default::default()
    };
    diagnostics.values.insert("implied_p_y1_given_x0".into(), m.p_y1_given_x0);
    diagnostics.values.insert("implied_p_y1_given_x1".into(), m.p_y1_given_x1);
    BoundsInterval::new(o.min, o.max, Method::Mediator, diagnostics)
}

pub fn pc_bounds_mediator(d: &MediatorData) -> Result<BoundsInterval> {
    pc_bounds_mediator_with(d, default_solver())
}
