//! Small linear programs over nonnegative variables with equality constraints.
//!
//! Three interchangeable solvers implement [`LpSolver`]:
//!
//! * [`VertexEnumeration`]: tries every basis of the row-reduced constraint
//!   matrix. Exhaustive and deterministic; suited to the ≤ 16-variable
//!   programs that arise over principal strata.
//! * [`Simplex`]: two-phase tableau simplex with Bland's rule in `f64`.
//! * [`ExactSimplex`]: the same algorithm in arbitrary-precision rationals.
//!   Inputs are converted exactly from their `f64` values.
//!
//! All solvers require the feasible region to be bounded, which holds when
//! one constraint fixes the total mass.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Feasibility and optimality tolerance for the floating-point solvers.
pub const LP_TOL: f64 = 1e-9;

/// `optimize c·x subject to A x = b, x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    objective: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            rows: Vec::new(),
            rhs: Vec::new(),
            objective: vec![0.0; num_vars],
        }
    }

    /// Adds `row · x = rhs`.
    pub fn equality(mut self, row: Vec<f64>, rhs: f64) -> Self {
        assert_eq!(row.len(), self.num_vars, "constraint width");
        self.rows.push(row);
        self.rhs.push(rhs);
        self
    }

    /// Adds `Σ_{i : mask(i)} x_i = rhs`.
    pub fn indicator_equality(self, mask: impl Fn(usize) -> bool, rhs: f64) -> Self {
        let row = (0..self.num_vars)
            .map(|i| if mask(i) { 1.0 } else { 0.0 })
            .collect();
        self.equality(row, rhs)
    }

    pub fn objective(mut self, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.num_vars, "objective width");
        self.objective = c;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn objective_coefficients(&self) -> &[f64] {
        &self.objective
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest constraint violation of `x` (including negativity).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| (r.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).abs());
        let neg = x.iter().map(|v| (-v).max(0.0));
        eq.chain(neg).fold(0.0, f64::max)
    }
}

/// Minimum and maximum of the objective, with optimal points.
#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub min: f64,
    pub max: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
}

pub trait LpSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Both optima of the program, or [`Error::InfeasibleData`] when the
    /// constraint set is empty.
    fn optimize(&self, lp: &LinearProgram) -> Result<LpOutcome>;
}

impl fmt::Debug for dyn LpSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LpSolver({})", self.name())
    }
}

/// Named LP solvers, selectable at runtime.
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn LpSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            solvers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, solver: Box<dyn LpSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn get(&self, name: &str) -> Result<&dyn LpSolver> {
        self.solvers.get(name).map(|s| s.as_ref()).ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown LP solver {name:?}; available: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.keys().copied().collect()
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(VertexEnumeration));
        r.register(Box::new(Simplex));
        r.register(Box::new(ExactSimplex));
        r
    }
}

/// The default solver.
pub fn default_solver() -> &'static dyn LpSolver {
    &VertexEnumeration
}

/// Exhaustive enumeration of basic feasible solutions. Vertices are visited
/// in lexicographic order of their basis columns; among equal objective
/// values the first vertex found is kept.
#[derive(Debug, Clone, Copy, Default)]
pub struct VertexEnumeration;

impl LpSolver for VertexEnumeration {
    fn name(&self) -> &'static str {
        "vertex"
    }

    fn optimize(&self, lp: &LinearProgram) -> Result<LpOutcome> {
        let (a, b) = row_reduce(lp)?;
        let n = lp.num_vars;
        let r = a.len();
        let mut best: Option<LpOutcome> = None;
        let mut consider = |x: Vec<f64>| {
            let v = lp.value(&x);
            match &mut best {
                None => {
                    best = Some(LpOutcome {
                        min: v,
                        max: v,
                        argmin: x.clone(),
                        argmax: x,
                    })
                }
                Some(o) => {
                    if v < o.min - 1e-15 {
                        o.min = v;
                        o.argmin = x.clone();
                    }
                    if v > o.max + 1e-15 {
                        o.max = v;
                        o.argmax = x;
                    }
                }
            }
        };
        if r == 0 {
            consider(vec![0.0; n]);
        } else {
            let mut cols: Vec<usize> = (0..r).collect();
            loop {
                if let Some(xb) = solve_basis(&a, &b, &cols) {
                    if xb.iter().all(|&v| v >= -LP_TOL) {
                        let mut x = vec![0.0; n];
                        for (&c, v) in cols.iter().zip(xb) {
                            x[c] = v.max(0.0);
                        }
                        if lp.violation(&x) <= 1e-7 {
                            consider(x);
                        }
                    }
                }
                if !next_combination(&mut cols, n) {
                    break;
                }
            }
        }
        best.ok_or_else(|| Error::InfeasibleData("no feasible vertex".into()))
    }
}

/// Gaussian elimination with partial pivoting on `[A | b]`; returns the
/// independent rows. A zero row with nonzero right-hand side is infeasible.
fn row_reduce(lp: &LinearProgram) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut m: Vec<Vec<f64>> = lp
        .rows
        .iter()
        .zip(&lp.rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(*b);
            row
        })
        .collect();
    let n = lp.num_vars;
    let mut rank = 0;
    for col in 0..n {
        if rank == m.len() {
            break;
        }
        let (piv, val) = (rank..m.len())
            .map(|i| (i, m[i][col].abs()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= 1e-12 {
            continue;
        }
        m.swap(rank, piv);
        let p = m[rank][col];
        for v in m[rank].iter_mut() {
            *v /= p;
        }
        for i in 0..m.len() {
            if i != rank {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..=n {
                        m[i][j] -= f * m[rank][j];
                    }
                }
            }
        }
        rank += 1;
    }
    for row in &m[rank..] {
        if row[n].abs() > 1e-7 {
            return Err(Error::InfeasibleData(format!(
                "inconsistent equality constraints (residual {})",
                row[n]
            )));
        }
    }
    m.truncate(rank);
    let b = m.iter().map(|r| r[n]).collect();
    for r in &mut m {
        r.pop();
    }
    Ok((m, b))
}

fn solve_basis(a: &[Vec<f64>], b: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let r = cols.len();
    let mut m: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            let mut row: Vec<f64> = cols.iter().map(|&c| a[i][c]).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..r {
        let piv = (col..r).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-10 {
            return None;
        }
        m.swap(col, piv);
        for i in col + 1..r {
            let f = m[i][col] / m[col][col];
            if f != 0.0 {
                for j in col..=r {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0; r];
    for i in (0..r).rev() {
        let s: f64 = (i + 1..r).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][r] - s) / m[i][i];
    }
    Some(x)
}

fn next_combination(cols: &mut [usize], n: usize) -> bool {
    let k = cols.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if cols[i] < n - k + i {
            cols[i] += 1;
            for j in i + 1..k {
                cols[j] = cols[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Arithmetic needed by the tableau simplex.
pub trait LpScalar:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Strictly greater than zero beyond the scalar's tolerance.
    fn is_pos(&self) -> bool;
    /// Strictly less than zero beyond the scalar's tolerance.
    fn is_neg(&self) -> bool;
}

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_pos(&self) -> bool {
        *self > LP_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -LP_TOL
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
}

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0`, by the two-phase tableau
/// method with Bland's anti-cycling rule. Returns the optimum and a
/// minimizer.
pub fn simplex_minimize<T: LpScalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> Result<(T, Vec<T>)> {
    let m = a.len();
    let n = c.len();
    // tableau columns: n structural, m artificial, 1 rhs
    let width = n + m + 1;
    let mut t: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let flip = b[i].is_neg() || (b[i] < T::zero());
        let mut row = Vec::with_capacity(width);
        for j in 0..n {
            row.push(if flip { -a[i][j].clone() } else { a[i][j].clone() });
        }
        for k in 0..m {
            row.push(if k == i { T::one() } else { T::zero() });
        }
        row.push(if flip { -b[i].clone() } else { b[i].clone() });
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase 1: minimize the sum of artificials
    let mut cost = vec![T::zero(); width];
    for row in &t {
        for j in 0..n {
            cost[j] = cost[j].clone() - row[j].clone();
        }
        cost[width - 1] = cost[width - 1].clone() - row[width - 1].clone();
    }
    t.push(cost);
    run_simplex(&mut t, &mut basis, n + m)?;
    let phase1 = -t[m][width - 1].clone();
    if phase1.is_pos() {
        return Err(Error::InfeasibleData(format!(
            "constraints are infeasible (phase-one residual {})",
            phase1.to_f64()
        )));
    }
    // drive remaining artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < basis.len() {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].is_pos() || t[i][j].is_neg()) {
                pivot(&mut t, &mut basis, i, j);
            } else {
                t.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
    let m = basis.len();
    t.truncate(m);
    // phase 2 objective row, priced out against the basis
    let mut obj = vec![T::zero(); width];
    obj[..n].clone_from_slice(c);
    for (r, &bj) in basis.iter().enumerate() {
        let f = obj[bj].clone();
        if f.is_pos() || f.is_neg() || !(f == T::zero()) {
            for j in 0..width {
                obj[j] = obj[j].clone() - f.clone() * t[r][j].clone();
            }
        }
    }
    t.push(obj);
    run_simplex(&mut t, &mut basis, n)?;
    let mut x = vec![T::zero(); n];
    for (r, &bj) in basis.iter().enumerate() {
        if bj < n {
            x[bj] = t[r][width - 1].clone();
        }
    }
    let value = -t[m][width - 1].clone();
    Ok((value, x))
}

/// Iterates pivots until no entering column among the first `eligible`
/// columns has negative reduced cost.
fn run_simplex<T: LpScalar>(t: &mut [Vec<T>], basis: &mut [usize], eligible: usize) -> Result<()> {
    let m = basis.len();
    let width = t[0].len();
    loop {
        let Some(enter) = (0..eligible).find(|&j| t[m][j].is_neg()) else {
            return Ok(());
        };
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            if t[i][enter].is_pos() {
                let ratio = t[i][width - 1].clone() / t[i][enter].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::InvalidInput("linear program is unbounded".into()));
        };
        pivot(t, basis, row, enter);
    }
}

fn pivot<T: LpScalar>(t: &mut [Vec<T>], basis: &mut [usize], row: usize, col: usize) {
    let p = t[row][col].clone();
    for v in t[row].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col].clone();
        if f == T::zero() {
            continue;
        }
        for (v, pv) in r.iter_mut().zip(&pivot_row) {
            *v = v.clone() - f.clone() * pv.clone();
        }
    }
    basis[row] = col;
}

fn optimize_with<T: LpScalar>(lp: &LinearProgram) -> Result<LpOutcome> {
    let a: Vec<Vec<T>> = lp
        .rows
        .iter()
        .map(|r| r.iter().map(|&v| T::from_f64(v)).collect())
        .collect();
    let b: Vec<T> = lp.rhs.iter().map(|&v| T::from_f64(v)).collect();
    let c: Vec<T> = lp.objective.iter().map(|&v| T::from_f64(v)).collect();
    let neg: Vec<T> = c.iter().map(|v| -v.clone()).collect();
    let (min, argmin) = simplex_minimize(&a, &b, &c)?;
    let (negmax, argmax) = simplex_minimize(&a, &b, &neg)?;
    let to_f = |x: Vec<T>| x.iter().map(T::to_f64).collect();
    Ok(LpOutcome {
        min: min.to_f64(),
        max: (-negmax).to_f64(),
        argmin: to_f(argmin),
        argmax: to_f(argmax),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Simplex;

impl LpSolver for Simplex {
    fn name(&self) -> &'static str {
        "simplex"
    }

    fn optimize(&self, lp: &LinearProgram) -> Result<LpOutcome> {
        optimize_with::<f64>(lp)
    }
}

/// Rational-arithmetic simplex. Results are exact for the binary values of
/// the `f64` inputs, then rounded to `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSimplex;

impl LpSolver for ExactSimplex {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn optimize(&self, lp: &LinearProgram) -> Result<LpOutcome> {
        optimize_with::<BigRational>(lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solvers() -> Vec<Box<dyn LpSolver>> {
        vec![Box::new(VertexEnumeration), Box::new(Simplex), Box::new(ExactSimplex)]
    }

    #[test]
    fn constant_objective() {
        let lp = LinearProgram::new(3)
            .equality(vec![1.0, 1.0, 1.0], 1.0)
            .objective(vec![2.0, 2.0, 2.0]);
        for s in solvers() {
            let o = s.optimize(&lp).unwrap();
            assert!((o.min - 2.0).abs() < 1e-12 && (o.max - 2.0).abs() < 1e-12, "{}", s.name());
        }
    }

    #[test]
    fn simplex_corner_values() {
        // x0 + x1 + x2 = 1, x0 = 0.25; objective x1 - x2
        let lp = LinearProgram::new(3)
            .equality(vec![1.0, 1.0, 1.0], 1.0)
            .equality(vec![1.0, 0.0, 0.0], 0.25)
            .objective(vec![0.0, 1.0, -1.0]);
        for s in solvers() {
            let o = s.optimize(&lp).unwrap();
            assert!((o.min + 0.75).abs() < 1e-12, "{}", s.name());
            assert!((o.max - 0.75).abs() < 1e-12, "{}", s.name());
            assert!(lp.violation(&o.argmin) < 1e-12);
            assert!((lp.value(&o.argmax) - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_polytope_is_infeasible() {
        let lp = LinearProgram::new(2)
            .equality(vec![1.0, 1.0], 1.0)
            .equality(vec![1.0, 0.0], 1.5);
        for s in solvers() {
            assert!(
                matches!(s.optimize(&lp), Err(Error::InfeasibleData(_))),
                "{}",
                s.name()
            );
        }
        // inconsistent rows
        let lp = LinearProgram::new(2)
            .equality(vec![1.0, 1.0], 1.0)
            .equality(vec![2.0, 2.0], 1.0);
        for s in solvers() {
            assert!(matches!(s.optimize(&lp), Err(Error::InfeasibleData(_))));
        }
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let lp = LinearProgram::new(4)
            .equality(vec![1.0; 4], 1.0)
            .equality(vec![1.0, 1.0, 0.0, 0.0], 0.4)
            .equality(vec![0.0, 0.0, 1.0, 1.0], 0.6)
            .objective(vec![1.0, 0.0, 0.0, 1.0]);
        for s in solvers() {
            let o = s.optimize(&lp).unwrap();
            assert!(o.min.abs() < 1e-12 && (o.max - 1.0).abs() < 1e-12, "{}", s.name());
        }
    }

    #[test]
    fn exact_simplex_is_exact() {
        let third = |v: i64| BigRational::new(BigInt::from(v), BigInt::from(3));
        let a = vec![vec![third(3), third(3)], vec![third(3), third(0)]];
        let b = vec![third(3), third(1)];
        let c = vec![third(0), third(3)];
        let (v, x) = simplex_minimize(&a, &b, &c).unwrap();
        assert_eq!(v, third(2));
        assert_eq!(x, vec![third(1), third(2)]);
    }

    #[test]
    fn registry_lookup() {
        let r = SolverRegistry::default();
        assert_eq!(r.names(), ["exact", "simplex", "vertex"]);
        assert_eq!(r.get("vertex").unwrap().name(), "vertex");
        assert!(r.get("ipm").is_err());
    }
}
