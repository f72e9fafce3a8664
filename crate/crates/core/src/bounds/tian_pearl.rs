//! Bounds combining observational and experimental data, without assuming
//! ignorability.
//!
//! The experimental rate P(Y=1|X←0) mixes the unexposed's observed rate with
//! the exposed's unobservable P(Y(0)=1 | X=1), which can therefore be solved
//! for. Basic bounds within the exposed subpopulation then give
//!
//! ```text
//! L′ = max{0, [P(Y=1) − P(Y=1|X←0)] / P(X=1,Y=1)}
//! U′ = min{1, [P(Y=0|X←0) − P(X=0,Y=0)] / P(X=1,Y=1)}
//! ```

use super::lp::{default_solver, LinearProgram, LpSolver};
use super::{BoundsInterval, Diagnostics, Margins, Method, CONSISTENCY_TOL, PROB_EPS};
use crate::error::{Error, Result};

fn required(m: &Margins) -> Result<(f64, f64)> {
    m.validate()?;
    let px = m
        .p_x1
        .ok_or_else(|| Error::InvalidInput("P(X=1) is required".into()))?;
    let pdo = m
        .p_y1_do_x0
        .ok_or_else(|| Error::InvalidInput("experimental P(Y=1|do(X=0)) is required".into()))?;
    Ok((px, pdo))
}

/// P(Y(0)=1 | X=1), solved from the experimental and observational data.
/// Fails with [`Error::InfeasibleData`] if the two sources cannot both hold.
pub fn counterfactual_unexposed_rate(m: &Margins) -> Result<f64> {
    let (px, pdo) = required(m)?;
    if px <= PROB_EPS {
        return Err(Error::PcUndefined("P(X=1) = 0".into()));
    }
    let q = (pdo - m.p_y1_given_x0 * (1.0 - px)) / px;
    if !(-CONSISTENCY_TOL..=1.0 + CONSISTENCY_TOL).contains(&q) {
        return Err(Error::InfeasibleData(format!(
            "experimental P(Y=1|do(X=0)) = {pdo} is incompatible with the observational data \
             (implied P(Y(0)=1|X=1) = {q})"
        )));
    }
    Ok(q.clamp(0.0, 1.0))
}

pub fn pc_bounds_tian_pearl(m: &Margins) -> Result<BoundsInterval> {
    let (px, pdo) = required(m)?;
    let (p1, p0) = (m.p_y1_given_x1, m.p_y1_given_x0);
    let p11 = px * p1;
    if p11 <= PROB_EPS {
        return Err(Error::PcUndefined("P(X=1, Y=1) = 0".into()));
    }
    let q = counterfactual_unexposed_rate(m)?;
    let p_y1 = p11 + (1.0 - px) * p0;
    let p00 = (1.0 - px) * (1.0 - p0);
    let lower = ((p_y1 - pdo) / p11).max(0.0);
    let upper = (((1.0 - pdo) - p00) / p11).min(1.0);
    let mut diagnostics = Diagnostics {
        rr: Some(super::risk_ratio(m)),
        ..Default::default()
    };
    diagnostics.values.insert("p_y1".into(), p_y1);
    diagnostics.values.insert("p_x1_y1".into(), p11);
    diagnostics.values.insert("p_y0_1_given_x1".into(), q);
    BoundsInterval::new(lower, upper, Method::TianPearl, diagnostics)
}

/// The same bounds by linear programming over joints of
/// `(X, Y(0), Y(1))` that reproduce every supplied margin.
pub fn tian_pearl_lp(m: &Margins, solver: Option<&dyn LpSolver>) -> Result<BoundsInterval> {
    let (px, pdo) = required(m)?;
    let (p1, p0) = (m.p_y1_given_x1, m.p_y1_given_x0);
    let p11 = px * p1;
    if p11 <= PROB_EPS {
        return Err(Error::PcUndefined("P(X=1, Y=1) = 0".into()));
    }
    // cell index 4·x + 2·y0 + y1
    let x = |c: usize| c >> 2;
    let y0 = |c: usize| (c >> 1) & 1;
    let y1 = |c: usize| c & 1;
    let lp = LinearProgram::new(8)
        .indicator_equality(|_| true, 1.0)
        .indicator_equality(|c| x(c) == 1, px)
        .indicator_equality(|c| x(c) == 1 && y1(c) == 1, p11)
        .indicator_equality(|c| x(c) == 0 && y0(c) == 1, (1.0 - px) * p0)
        .indicator_equality(|c| y0(c) == 1, pdo)
        .objective(
            (0..8)
                .map(|c| if x(c) == 1 && y1(c) == 1 && y0(c) == 0 { 1.0 / p11 } else { 0.0 })
                .collect(),
        );
    let o = solver.unwrap_or(default_solver()).optimize(&lp)?;
    BoundsInterval::new(o.min, o.max, Method::Lp, Diagnostics::default())
}
