//! Instrumental variables with binary instrument Z, exposure X and
//! outcome Y.
//!
//! Each unit has a response type `(X(Z=0), X(Z=1), Y(X=0), Y(X=1))`, indexed
//! `8·x0 + 4·x1 + 2·y0 + y1`. The exclusion restriction lets Z act on Y only
//! through X, so Y(Z=z) = Y(X = X(Z=z)).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::lp::{default_solver, LinearProgram, LpSolver};
use crate::error::{Error, Result};
use crate::factor::{assignment, Assignment, Factor};
use crate::scm::{potential_name, Scm};

/// Default threshold on the instrument's effect on exposure for exact
/// probabilities.
pub const WEAK_INSTRUMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compliance {
    Complier,
    NeverTaker,
    AlwaysTaker,
    Defier,
}

impl fmt::Display for Compliance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compliance::Complier => "complier",
            Compliance::NeverTaker => "never-taker",
            Compliance::AlwaysTaker => "always-taker",
            Compliance::Defier => "defier",
        })
    }
}

/// A response type, see the module docs for the index layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResponseType {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl ResponseType {
    pub fn from_index(t: usize) -> Self {
        assert!(t < 16, "response type index {t}");
        Self {
            x0: (t >> 3) & 1,
            x1: (t >> 2) & 1,
            y0: (t >> 1) & 1,
            y1: t & 1,
        }
    }

    pub fn index(&self) -> usize {
        8 * self.x0 + 4 * self.x1 + 2 * self.y0 + self.y1
    }

    pub fn all() -> impl Iterator<Item = ResponseType> {
        (0..16).map(Self::from_index)
    }

    pub fn compliance(&self) -> Compliance {
        match (self.x0, self.x1) {
            (0, 1) => Compliance::Complier,
            (0, 0) => Compliance::NeverTaker,
            (1, 1) => Compliance::AlwaysTaker,
            _ => Compliance::Defier,
        }
    }

    /// X(Z=z).
    pub fn exposure(&self, z: usize) -> usize {
        if z == 1 { self.x1 } else { self.x0 }
    }

    /// Y(X=x).
    pub fn outcome(&self, x: usize) -> usize {
        if x == 1 { self.y1 } else { self.y0 }
    }

    /// Y(Z=z) = Y(X = X(Z=z)).
    pub fn outcome_under_instrument(&self, z: usize) -> usize {
        self.outcome(self.exposure(z))
    }

    pub fn ice_zx(&self) -> i32 {
        self.x1 as i32 - self.x0 as i32
    }

    pub fn ice_xy(&self) -> i32 {
        self.y1 as i32 - self.y0 as i32
    }

    pub fn ice_zy(&self) -> i32 {
        self.outcome_under_instrument(1) as i32 - self.outcome_under_instrument(0) as i32
    }
}

/// A distribution over the 16 response types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalStrata {
    mass: [f64; 16],
}

impl PrincipalStrata {
    pub fn new(mass: [f64; 16]) -> Result<Self> {
        if mass.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidInput("stratum masses must be nonnegative".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("stratum masses sum to {total}")));
        }
        Ok(Self { mass })
    }

    /// From `(type, mass)` pairs; unlisted types get zero.
    pub fn from_types(pairs: &[(ResponseType, f64)]) -> Result<Self> {
        let mut mass = [0.0; 16];
        for (t, p) in pairs {
            mass[t.index()] += p;
        }
        Self::new(mass)
    }

    /// Response types implied by a structural model.
    pub fn from_scm(scm: &Scm, z: &str, x: &str, y: &str) -> Result<Self> {
        let f = scm.response_types(z, x, y)?;
        Self::from_factor(&f, z, x, y)
    }

    fn from_factor(f: &Factor, z: &str, x: &str, y: &str) -> Result<Self> {
        let names = [
            potential_name(x, z, 0),
            potential_name(x, z, 1),
            potential_name(y, x, 0),
            potential_name(y, x, 1),
        ];
        let mut mass = [0.0; 16];
        for t in ResponseType::all() {
            let a: Assignment = assignment([
                (names[0].as_str(), t.x0),
                (names[1].as_str(), t.x1),
                (names[2].as_str(), t.y0),
                (names[3].as_str(), t.y1),
            ]);
            mass[t.index()] = f.get(&a);
        }
        Self::new(mass)
    }

    pub fn mass(&self) -> &[f64; 16] {
        &self.mass
    }

    pub fn of(&self, t: ResponseType) -> f64 {
        self.mass[t.index()]
    }

    pub fn compliance_mass(&self, c: Compliance) -> f64 {
        ResponseType::all()
            .filter(|t| t.compliance() == c)
            .map(|t| self.of(t))
            .sum()
    }

    /// No defiers (up to 1e-12).
    pub fn is_monotone(&self) -> bool {
        self.compliance_mass(Compliance::Defier) <= 1e-12
    }

    /// No unit takes the exposure when the instrument is off.
    pub fn is_availability_design(&self) -> bool {
        ResponseType::all().filter(|t| t.x0 == 1).all(|t| self.of(t) <= 1e-12)
    }

    fn expect(&self, f: impl Fn(ResponseType) -> f64) -> f64 {
        ResponseType::all().map(|t| self.of(t) * f(t)).sum()
    }
}

/// Effects computed by averaging over response types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvEstimands {
    pub ace_zx: f64,
    pub ace_zy: f64,
    pub ace_xy: f64,
    pub complier_mass: f64,
    /// Average X→Y effect among compliers; `None` without compliers.
    pub late: Option<f64>,
}

pub fn strata_estimands(p: &PrincipalStrata) -> IvEstimands {
    let ace_zx = p.expect(|t| t.ice_zx() as f64);
    let ace_zy = p.expect(|t| t.ice_zy() as f64);
    let ace_xy = p.expect(|t| t.ice_xy() as f64);
    let complier_mass = p.compliance_mass(Compliance::Complier);
    let late = (complier_mass > 1e-12).then(|| {
        p.expect(|t| {
            if t.compliance() == Compliance::Complier {
                t.ice_xy() as f64
            } else {
                0.0
            }
        }) / complier_mass
    });
    IvEstimands {
        ace_zx,
        ace_zy,
        ace_xy,
        complier_mass,
        late,
    }
}

/// P(X=x, Y=y | Z=z) for binary data, indexed `[z][x][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvData {
    pub p: [[[f64; 2]; 2]; 2],
    /// P(Z=1), if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_z1: Option<f64>,
}

impl IvData {
    pub fn from_probabilities(p: [[[f64; 2]; 2]; 2], p_z1: Option<f64>) -> Result<Self> {
        for (z, block) in p.iter().enumerate() {
            if block.iter().flatten().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::InvalidInput("probabilities must be nonnegative".into()));
            }
            let s: f64 = block.iter().flatten().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("P(X, Y | Z={z}) sums to {s}")));
            }
        }
        if let Some(q) = p_z1 {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidInput(format!("P(Z=1) = {q}")));
            }
        }
        Ok(Self { p, p_z1 })
    }

    /// Plug-in estimates from counts `n[z][x][y]`.
    pub fn from_counts(n: [[[f64; 2]; 2]; 2]) -> Result<Self> {
        if n.iter().flatten().flatten().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::InvalidInput("counts must be nonnegative".into()));
        }
        let nz: Vec<f64> = n.iter().map(|b| b.iter().flatten().sum()).collect();
        if nz.contains(&0.0) {
            return Err(Error::PositivityViolation(
                "both instrument levels must be observed".into(),
            ));
        }
        let mut p = [[[0.0; 2]; 2]; 2];
        for z in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    p[z][x][y] = n[z][x][y] / nz[z];
                }
            }
        }
        Self::from_probabilities(p, Some(nz[1] / (nz[0] + nz[1])))
    }

    /// The observable distribution generated by response types when Z is
    /// randomized.
    pub fn from_strata(s: &PrincipalStrata) -> Self {
        let mut p = [[[0.0; 2]; 2]; 2];
        for t in ResponseType::all() {
            for (z, block) in p.iter_mut().enumerate() {
                let x = t.exposure(z);
                block[x][t.outcome(x)] += s.of(t);
            }
        }
        Self { p, p_z1: None }
    }

    /// P(X, Y | Z←z) computed from a structural model.
    pub fn from_scm(scm: &Scm, z: &str, x: &str, y: &str) -> Result<Self> {
        for n in [z, x, y] {
            if scm.variables().get(n).map(|v| v.card()) != Some(2) {
                return Err(Error::InvalidQuery(format!("{n} must be a binary variable")));
            }
        }
        let mut p = [[[0.0; 2]; 2]; 2];
        for (u, w) in scm.exogenous_support() {
            for (zv, block) in p.iter_mut().enumerate() {
                let v = scm.solve(&u, &assignment([(z, zv)]));
                block[v[x]][v[y]] += w;
            }
        }
        Self::from_probabilities(p, None)
    }

    pub fn p_x1_given_z(&self, z: usize) -> f64 {
        self.p[z][1][0] + self.p[z][1][1]
    }

    pub fn p_y1_given_z(&self, z: usize) -> f64 {
        self.p[z][0][1] + self.p[z][1][1]
    }

    /// E(X | Z=1) − E(X | Z=0).
    pub fn ace_zx(&self) -> f64 {
        self.p_x1_given_z(1) - self.p_x1_given_z(0)
    }

    /// E(Y | Z=1) − E(Y | Z=0), the intention-to-treat effect.
    pub fn ace_zy(&self) -> f64 {
        self.p_y1_given_z(1) - self.p_y1_given_z(0)
    }
}

/// Untestable assumptions the caller is willing to make.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IvAssumptions {
    /// No defiers.
    pub monotone: bool,
    /// The exposure is unavailable without the instrument: X(Z=0) = 0.
    /// Implies monotonicity.
    pub availability: bool,
}

fn check_availability(d: &IvData) -> Result<()> {
    if d.p_x1_given_z(0) > 1e-9 {
        return Err(Error::InfeasibleData(format!(
            "availability design requires P(X=1|Z=0) = 0, got {}",
            d.p_x1_given_z(0)
        )));
    }
    Ok(())
}

/// ACE(Z→Y) / ACE(Z→X).
pub fn wald_ratio(d: &IvData, threshold: f64) -> Result<f64> {
    let den = d.ace_zx();
    if den.abs() <= threshold {
        return Err(Error::WeakInstrument {
            denominator: den,
            threshold,
        });
    }
    Ok(d.ace_zy() / den)
}

/// The local average treatment effect, which equals the Wald ratio when
/// there are no defiers. Monotonicity cannot be checked from data; an
/// availability design is verified to have P(X=1|Z=0) = 0.
pub fn late(d: &IvData, assumptions: IvAssumptions, threshold: f64) -> Result<f64> {
    if assumptions.availability {
        check_availability(d)?;
    }
    wald_ratio(d, threshold)
}

/// Linear structural equations `X = α0 + α1 Z + U_X`, `Y = β0 + β1 X + U_Y`
/// with Z independent of the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSemParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// Covariance of `(U_X, U_Y)`.
    pub residual_cov: [[f64; 2]; 2],
    /// Variance of Z (for simulation).
    pub var_z: f64,
}

impl LinearSemParams {
    pub fn validate(&self) -> Result<()> {
        let c = self.residual_cov;
        let ok = c[0][0] >= 0.0
            && c[1][1] >= 0.0
            && (c[0][1] - c[1][0]).abs() <= 1e-12
            && c[0][0] * c[1][1] - c[0][1] * c[1][0] >= -1e-12
            && self.var_z > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("residual covariance must be symmetric PSD and var(Z) > 0".into()))
        }
    }

    /// Population coefficient of Z in the regression of X on Z.
    pub fn coef_x_on_z(&self) -> f64 {
        self.alpha1
    }

    /// Population coefficient of Z in the regression of Y on Z.
    pub fn coef_y_on_z(&self) -> f64 {
        self.beta1 * self.alpha1
    }

    /// Population coefficient of X in the regression of Y on X, which
    /// absorbs the residual correlation.
    pub fn coef_y_on_x(&self) -> f64 {
        let c = self.residual_cov;
        let var_x = self.alpha1 * self.alpha1 * self.var_z + c[0][0];
        self.beta1 + c[0][1] / var_x
    }
}

/// The ratio of the population regression coefficients, which is β1.
pub fn wald_ratio_sem(p: &LinearSemParams) -> Result<f64> {
    p.validate()?;
    let den = p.coef_x_on_z();
    if den.abs() <= WEAK_INSTRUMENT_TOL {
        return Err(Error::WeakInstrument {
            denominator: den,
            threshold: WEAK_INSTRUMENT_TOL,
        });
    }
    Ok(p.coef_y_on_z() / den)
}

/// Least-squares slope of `y` on `x` (with intercept).
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput("need two equally long samples of size ≥ 2".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidInput("regressor has no variation".into()));
    }
    Ok(sxy / sxx)
}

/// Ratio of the sample regression coefficients of Y on Z and X on Z.
pub fn wald_ratio_sample(z: &[f64], x: &[f64], y: &[f64], threshold: f64) -> Result<f64> {
    let den = ols_slope(z, x)?;
    if den.abs() <= threshold {
        return Err(Error::WeakInstrument {
            denominator: den,
            threshold,
        });
    }
    Ok(ols_slope(z, y)? / den)
}

/// Range of ACE(X→Y) over all response-type distributions that reproduce
/// the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AceInterval {
    pub lower: f64,
    pub upper: f64,
    pub assumptions: IvAssumptions,
}

impl AceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }
}

/// The linear program behind [`ace_bounds_lp`].
pub fn ace_lp(d: &IvData, assumptions: IvAssumptions) -> LinearProgram {
    let mut lp = LinearProgram::new(16).indicator_equality(|_| true, 1.0);
    for z in 0..2 {
        for x in 0..2 {
            for y in 0..2 {
                lp = lp.indicator_equality(
                    |i| {
                        let t = ResponseType::from_index(i);
                        t.exposure(z) == x && t.outcome(x) == y
                    },
                    d.p[z][x][y],
                );
            }
        }
    }
    if assumptions.monotone || assumptions.availability {
        lp = lp.indicator_equality(
            |i| ResponseType::from_index(i).compliance() == Compliance::Defier,
            0.0,
        );
    }
    if assumptions.availability {
        lp = lp.indicator_equality(|i| ResponseType::from_index(i).x0 == 1, 0.0);
    }
    lp.objective(
        (0..16)
            .map(|i| ResponseType::from_index(i).ice_xy() as f64)
            .collect(),
    )
}

/// Sharp bounds on ACE(X→Y) under the exclusion restriction.
/// Data that no response-type distribution can produce are reported as
/// [`Error::InfeasibleData`].
pub fn ace_bounds_lp(d: &IvData, assumptions: IvAssumptions) -> Result<AceInterval> {
    ace_bounds_lp_with(d, assumptions, default_solver())
}

pub fn ace_bounds_lp_with(
    d: &IvData,
    assumptions: IvAssumptions,
    solver: &dyn LpSolver,
) -> Result<AceInterval> {
    if assumptions.availability {
        check_availability(d)?;
    }
    let o = solver.optimize(&ace_lp(d, assumptions))?;
    Ok(AceInterval {
        lower: o.min.max(-1.0),
        upper: o.max.min(1.0),
        assumptions,
    })
}

/// How far a model departs from Y(Z=z) = Y(X = X(Z=z)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    /// Probability, for each z, that the two sides differ.
    pub violation: [f64; 2],
    pub holds: bool,
}

/// Evaluates the exclusion identity unit by unit on a structural model.
/// Y(X=x) is computed with Z left at its natural value.
pub fn check_exclusion(scm: &Scm, z: &str, x: &str, y: &str) -> Result<ExclusionReport> {
    for n in [z, x, y] {
        if !scm.variables().contains_key(n) {
            return Err(Error::UnknownVariable(n.to_string()));
        }
    }
    let mut violation = [0.0; 2];
    for (u, w) in scm.exogenous_support() {
        for (zv, v) in violation.iter_mut().enumerate() {
            let world = scm.solve(&u, &assignment([(z, zv)]));
            let through = scm.solve(&u, &assignment([(x, world[x])]));
            if world[y] != through[y] {
                *v += w;
            }
        }
    }
    Ok(ExclusionReport {
        violation,
        holds: violation.iter().all(|&v| v <= 1e-12),
    })
}
