//! Dense factors over discrete variables.
//!
//! A [`Factor`] is a nonnegative table indexed by the joint states of its
//! scope. The scope is always kept in canonical (lexicographic by name)
//! order, with the last variable varying fastest, so two factors over the
//! same variables can be compared entry by entry.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total mass below which a factor is considered empty.
pub const ZERO_MASS_TOL: f64 = 1e-12;

/// Tolerance on the total mass of a [`Distribution`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A (partial) assignment of state indices to variable names.
pub type Assignment = BTreeMap<String, usize>;

/// Builds an [`Assignment`] from `(name, state)` pairs.
pub fn assignment<'a>(pairs: impl IntoIterator<Item = (&'a str, usize)>) -> Assignment {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Stochastic,
    /// Non-stochastic regime indicator. The last state is "idle"
    /// (observational regime); state `i < card - 1` means "target set to `i`".
    Regime,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    name: String,
    card: usize,
    kind: VarKind,
}

impl Variable {
    pub fn new(name: impl Into<String>, card: usize) -> Result<Self> {
        let name = name.into();
        if card < 2 {
            return Err(Error::InvalidModel(format!(
                "variable {name} has cardinality {card}, need at least 2"
            )));
        }
        if name.is_empty() {
            return Err(Error::InvalidModel("empty variable name".into()));
        }
        Ok(Self {
            name,
            card,
            kind: VarKind::Stochastic,
        })
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::new(name, 2).expect("binary variable with non-empty name")
    }

    /// The regime indicator `F_<target>` for a stochastic target.
    pub fn regime_for(target: &Variable) -> Self {
        Self {
            name: regime_name(&target.name),
            card: target.card + 1,
            kind: VarKind::Regime,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn kind(&self) -> VarKind {
        self.kind
    }

    pub fn is_regime(&self) -> bool {
        self.kind == VarKind::Regime
    }

    /// State index of the idle regime. Only meaningful for regime variables.
    pub fn idle_state(&self) -> usize {
        self.card - 1
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..self.clone()
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

pub fn regime_name(target: &str) -> String {
    format!("F_{target}")
}

/// Row-major odometer over a product of finite ranges.
pub(crate) struct Odometer {
    cards: Vec<usize>,
    state: Vec<usize>,
    done: bool,
}

impl Odometer {
    pub(crate) fn new(cards: &[usize]) -> Self {
        Self {
            cards: cards.to_vec(),
            state: vec![0; cards.len()],
            done: cards.contains(&0),
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.state.clone();
        let mut i = self.cards.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.state[i] += 1;
            if self.state[i] < self.cards[i] {
                break;
            }
            self.state[i] = 0;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<Variable>,
    values: Vec<f64>,
}

impl Factor {
    /// Builds a factor from a table laid out row-major over `scope` in the
    /// order given (last variable fastest). The result is canonicalized.
    pub fn new(scope: Vec<Variable>, values: Vec<f64>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &scope {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::InvalidModel(format!(
                    "duplicate variable {} in factor scope",
                    v.name
                )));
            }
        }
        let size: usize = scope.iter().map(|v| v.card).product();
        if values.len() != size {
            return Err(Error::InvalidModel(format!(
                "factor over {} has {} entries, expected {size}",
                display_scope(&scope),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidModel(format!(
                "factor over {} has invalid entry {bad}",
                display_scope(&scope)
            )));
        }
        Ok(Self::canonicalize(scope, values))
    }

    /// Builds a factor by evaluating `f` on every joint state of `scope`
    /// (states passed in the order of `scope`).
    pub fn from_fn(scope: Vec<Variable>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let cards: Vec<usize> = scope.iter().map(|v| v.card).collect();
        let values = Odometer::new(&cards).map(|s| f(&s)).collect();
        Self::new(scope, values)
    }

    /// Point mass at `state` on a single variable.
    pub fn point_mass(var: &Variable, state: usize) -> Self {
        let mut values = vec![0.0; var.card];
        if state < var.card {
            values[state] = 1.0;
        }
        Self {
            scope: vec![var.clone()],
            values,
        }
    }

    /// The empty-scope factor with value 1.
    pub fn unit() -> Self {
        Self::scalar(1.0)
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            scope: Vec::new(),
            values: vec![value],
        }
    }

    fn canonicalize(scope: Vec<Variable>, values: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scope.len()).collect();
        order.sort_by(|&a, &b| scope[a].name.cmp(&scope[b].name));
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return Self { scope, values };
        }
        let new_scope: Vec<Variable> = order.iter().map(|&i| scope[i].clone()).collect();
        let old_strides = strides(&scope);
        let cards: Vec<usize> = new_scope.iter().map(|v| v.card).collect();
        let new_values = Odometer::new(&cards)
            .map(|s| {
                let idx: usize = s
                    .iter()
                    .zip(&order)
                    .map(|(&state, &old)| state * old_strides[old])
                    .sum();
                values[idx]
            })
            .collect();
        Self {
            scope: new_scope,
            values: new_values,
        }
    }

    pub fn scope(&self) -> &[Variable] {
        &self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scope_names(&self) -> BTreeSet<String> {
        self.scope.iter().map(|v| v.name.clone()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.scope.iter().position(|v| v.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.scope.iter().find(|v| v.name == name)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Entry at the given joint state (one index per scope variable, canonical order).
    pub fn at(&self, states: &[usize]) -> f64 {
        let strides = strides(&self.scope);
        self.values[states.iter().zip(&strides).map(|(s, k)| s * k).sum::<usize>()]
    }

    /// Entry at an assignment covering the whole scope. Extra keys are ignored.
    ///
    /// Panics if a scope variable is missing from `a`.
    pub fn get(&self, a: &Assignment) -> f64 {
        let states: Vec<usize> = self
            .scope
            .iter()
            .map(|v| {
                *a.get(&v.name)
                    .unwrap_or_else(|| panic!("assignment is missing variable {}", v.name))
            })
            .collect();
        self.at(&states)
    }

    /// Iterates over `(assignment, value)` pairs in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (Assignment, f64)> + '_ {
        let cards: Vec<usize> = self.scope.iter().map(|v| v.card).collect();
        Odometer::new(&cards).zip(&self.values).map(move |(s, &v)| {
            let a = self
                .scope
                .iter()
                .zip(s)
                .map(|(var, st)| (var.name.clone(), st))
                .collect();
            (a, v)
        })
    }

    pub fn multiply(&self, other: &Factor) -> Result<Factor> {
        let mut union: BTreeMap<&str, &Variable> = BTreeMap::new();
        for v in self.scope.iter().chain(&other.scope) {
            if let Some(prev) = union.insert(&v.name, v) {
                if prev.card != v.card {
                    return Err(Error::CardinalityMismatch {
                        name: v.name.clone(),
                        left: prev.card,
                        right: v.card,
                    });
                }
            }
        }
        let scope: Vec<Variable> = union.values().map(|v| (*v).clone()).collect();
        let map_a = self.projection(&scope);
        let map_b = other.projection(&scope);
        let cards: Vec<usize> = scope.iter().map(|v| v.card).collect();
        let values = Odometer::new(&cards)
            .map(|s| self.values[map_a.index(&s)] * other.values[map_b.index(&s)])
            .collect();
        Ok(Factor { scope, values })
    }

    /// Sums out every variable not in `keep`.
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<Factor> {
        for k in keep {
            if !self.contains(k.as_ref()) {
                return Err(Error::UnknownVariable(format!(
                    "{} is not in factor scope {}",
                    k.as_ref(),
                    display_scope(&self.scope)
                )));
            }
        }
        let keep: BTreeSet<&str> = keep.iter().map(|k| k.as_ref()).collect();
        let scope: Vec<Variable> = self
            .scope
            .iter()
            .filter(|v| keep.contains(v.name.as_str()))
            .cloned()
            .collect();
        let map = Projection::between(&self.scope, &scope);
        let mut values = vec![0.0; scope.iter().map(|v| v.card).product()];
        let cards: Vec<usize> = self.scope.iter().map(|v| v.card).collect();
        for (s, v) in Odometer::new(&cards).zip(&self.values) {
            values[map.index(&s)] += v;
        }
        Ok(Factor { scope, values })
    }

    /// Sums out a single variable. No-op if it is not in scope.
    pub fn sum_out(&self, name: &str) -> Factor {
        if !self.contains(name) {
            return self.clone();
        }
        let keep: Vec<&str> = self
            .scope
            .iter()
            .filter(|v| v.name != name)
            .map(|v| v.name.as_str())
            .collect();
        self.marginalize(&keep).expect("kept variables are in scope")
    }

    /// Slices the table at the evidence values. Evidence on variables outside
    /// the scope is ignored; the result is not renormalized. A state index
    /// outside a variable's range selects nothing (all-zero result).
    pub fn condition(&self, evidence: &Assignment) -> Factor {
        let fixed: Vec<Option<usize>> = self
            .scope
            .iter()
            .map(|v| evidence.get(&v.name).copied())
            .collect();
        if fixed.iter().all(Option::is_none) {
            return self.clone();
        }
        let scope: Vec<Variable> = self
            .scope
            .iter()
            .zip(&fixed)
            .filter(|(_, f)| f.is_none())
            .map(|(v, _)| v.clone())
            .collect();
        let out_of_range = self
            .scope
            .iter()
            .zip(&fixed)
            .any(|(v, f)| matches!(f, Some(s) if *s >= v.card));
        let size: usize = scope.iter().map(|v| v.card).product();
        if out_of_range {
            return Factor {
                scope,
                values: vec![0.0; size],
            };
        }
        let full_strides = strides(&self.scope);
        let base: usize = fixed
            .iter()
            .zip(&full_strides)
            .filter_map(|(f, k)| f.map(|s| s * k))
            .sum();
        let free_strides: Vec<usize> = fixed
            .iter()
            .zip(&full_strides)
            .filter(|(f, _)| f.is_none())
            .map(|(_, &k)| k)
            .collect();
        let cards: Vec<usize> = scope.iter().map(|v| v.card).collect();
        let values = Odometer::new(&cards)
            .map(|s| {
                let idx: usize = base + s.iter().zip(&free_strides).map(|(a, b)| a * b).sum::<usize>();
                self.values[idx]
            })
            .collect();
        Factor { scope, values }
    }

    pub fn normalize(&self) -> Result<Distribution> {
        let total = self.total();
        if total <= ZERO_MASS_TOL {
            return Err(Error::ZeroMass(format!(
                "factor over {} has total mass {total}",
                display_scope(&self.scope)
            )));
        }
        Ok(Distribution(Factor {
            scope: self.scope.clone(),
            values: self.values.iter().map(|v| v / total).collect(),
        }))
    }

    pub fn scale(&self, k: f64) -> Factor {
        Factor {
            scope: self.scope.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
        }
    }

    /// Renames scope variables according to `map`; unmapped names are kept.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Result<Factor> {
        let scope = self
            .scope
            .iter()
            .map(|v| match map.get(&v.name) {
                Some(n) => v.renamed(n.clone()),
                None => v.clone(),
            })
            .collect();
        Factor::new(scope, self.values.clone())
    }

    /// Same scope (by name and cardinality) and every entry within `tol`.
    pub fn approx_eq(&self, other: &Factor, tol: f64) -> bool {
        self.scope.len() == other.scope.len()
            && self
                .scope
                .iter()
                .zip(&other.scope)
                .all(|(a, b)| a.name == b.name && a.card == b.card)
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn max_abs_diff(&self, other: &Factor) -> Option<f64> {
        let same = self.scope.len() == other.scope.len()
            && self
                .scope
                .iter()
                .zip(&other.scope)
                .all(|(a, b)| a.name == b.name && a.card == b.card);
        same.then(|| {
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }

    fn projection(&self, onto: &[Variable]) -> Projection {
        Projection::between(onto, &self.scope)
    }
}

/// Maps a joint state over a superset scope to an index into a subset-scope table.
struct Projection {
    /// For each position in the superset scope, the stride in the subset table (0 if absent).
    strides: Vec<usize>,
}

impl Projection {
    fn between(superset: &[Variable], subset: &[Variable]) -> Self {
        let sub_strides = strides(subset);
        let strides = superset
            .iter()
            .map(|v| {
                subset
                    .iter()
                    .position(|w| w.name == v.name)
                    .map_or(0, |i| sub_strides[i])
            })
            .collect();
        Self { strides }
    }

    fn index(&self, state: &[usize]) -> usize {
        state.iter().zip(&self.strides).map(|(s, k)| s * k).sum()
    }
}

fn strides(scope: &[Variable]) -> Vec<usize> {
    let mut out = vec![1; scope.len()];
    for i in (0..scope.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * scope[i + 1].card;
    }
    out
}

fn display_scope(scope: &[Variable]) -> String {
    let names: Vec<&str> = scope.iter().map(|v| v.name.as_str()).collect();
    format!("{{{}}}", names.join(","))
}

/// A factor whose entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Factor);

impl Distribution {
    pub fn try_from_factor(f: Factor) -> Result<Self> {
        let total = f.total();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidModel(format!(
                "distribution over {} sums to {total}",
                display_scope(&f.scope)
            )));
        }
        Ok(Self(f))
    }

    pub fn into_factor(self) -> Factor {
        self.0
    }

    pub fn factor(&self) -> &Factor {
        &self.0
    }

    /// Probability of a (possibly partial) assignment over the scope.
    pub fn prob(&self, a: &Assignment) -> f64 {
        self.0.condition(a).total()
    }

    /// Expected state index of a variable (the usual 0/1 coding for binaries).
    pub fn expectation(&self, name: &str) -> Result<f64> {
        let m = self.0.marginalize(&[name])?;
        Ok(m.values.iter().enumerate().map(|(i, p)| i as f64 * p).sum())
    }
}

impl Deref for Distribution {
    type Target = Factor;

    fn deref(&self) -> &Factor {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coin(name: &str, p1: f64) -> Factor {
        Factor::new(vec![Variable::binary(name)], vec![1.0 - p1, p1]).unwrap()
    }

    #[test]
    fn unit_is_identity_for_multiply() {
        let f = coin("A", 0.3);
        assert_eq!(Factor::unit().multiply(&f).unwrap(), f);
        assert_eq!(f.multiply(&Factor::unit()).unwrap(), f);
    }

    #[test]
    fn zero_factor_absorbs() {
        let f = coin("A", 0.3);
        let z = Factor::new(vec![Variable::binary("B")], vec![0.0, 0.0]).unwrap();
        let p = f.multiply(&z).unwrap();
        assert_eq!(p.scope_names().len(), 2);
        assert!(p.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn product_of_independent_marginals() {
        let j = coin("A", 0.7).multiply(&coin("B", 0.4)).unwrap();
        // full enumeration of the joint
        let expected = [0.3 * 0.6, 0.3 * 0.4, 0.7 * 0.6, 0.7 * 0.4];
        for (v, e) in j.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-15);
        }
        assert!((j.get(&assignment([("A", 1), ("B", 1)])) - 0.28).abs() < 1e-15);
    }

    #[test]
    fn multiply_rejects_cardinality_mismatch() {
        let a = coin("A", 0.5);
        let b = Factor::new(vec![Variable::new("A", 3).unwrap()], vec![1.0; 3]).unwrap();
        assert!(matches!(
            a.multiply(&b),
            Err(Error::CardinalityMismatch { .. })
        ));
    }

    #[test]
    fn new_canonicalizes_scope_order() {
        let a = Variable::binary("A");
        let b = Variable::new("B", 3).unwrap();
        // laid out as (B, A)
        let f = Factor::new(vec![b.clone(), a.clone()], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(f.scope()[0].name(), "A");
        assert_eq!(f.get(&assignment([("A", 1), ("B", 2)])), 6.0);
        assert_eq!(f.get(&assignment([("A", 0), ("B", 1)])), 3.0);
        assert_eq!(f.get(&assignment([("A", 1), ("B", 0)])), 2.0);
    }

    #[test]
    fn new_rejects_bad_tables() {
        let a = Variable::binary("A");
        assert!(Factor::new(vec![a.clone()], vec![1.0]).is_err());
        assert!(Factor::new(vec![a.clone()], vec![1.0, -0.1]).is_err());
        assert!(Factor::new(vec![a.clone(), a.clone()], vec![1.0; 4]).is_err());
        assert!(Variable::new("X", 1).is_err());
    }

    #[test]
    fn marginalize_cases() {
        let f = coin("A", 0.7).multiply(&coin("B", 0.4)).unwrap();
        assert_eq!(f.marginalize(&["A", "B"]).unwrap(), f);
        assert!(f.marginalize(&["A"]).unwrap().approx_eq(&coin("A", 0.7), 1e-15));
        let s = f.marginalize::<&str>(&[]).unwrap();
        assert!(s.scope().is_empty());
        assert!((s.values()[0] - f.total()).abs() < 1e-15);
        assert!(matches!(f.marginalize(&["C"]), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn condition_then_normalize_matches_hand_conditional() {
        // P(A,B): rows A, cols B
        let f = Factor::new(
            vec![Variable::binary("A"), Variable::binary("B")],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        let c = f.condition(&assignment([("A", 1)])).normalize().unwrap();
        assert!((c.values()[0] - 0.3 / 0.7).abs() < 1e-15);
        assert!((c.values()[1] - 0.4 / 0.7).abs() < 1e-15);
        assert_eq!(f.condition(&Assignment::new()), f);
    }

    #[test]
    fn condition_on_null_event_gives_zero_factor() {
        let f = Factor::new(
            vec![Variable::binary("A"), Variable::binary("B")],
            vec![0.5, 0.5, 0.0, 0.0],
        )
        .unwrap();
        let c = f.condition(&assignment([("A", 1)]));
        assert_eq!(c.values(), &[0.0, 0.0]);
        assert!(matches!(c.normalize(), Err(Error::ZeroMass(_))));
    }

    #[test]
    fn normalize_cases() {
        let a = Variable::binary("A");
        let d = Factor::new(vec![a.clone()], vec![2.0, 2.0]).unwrap().normalize().unwrap();
        assert_eq!(d.values(), &[0.5, 0.5]);
        let d = Factor::new(vec![a.clone()], vec![0.0, 3.0]).unwrap().normalize().unwrap();
        assert_eq!(d.values(), &[0.0, 1.0]);
        assert!(matches!(
            Factor::new(vec![a], vec![0.0, 0.0]).unwrap().normalize(),
            Err(Error::ZeroMass(_))
        ));
    }

    fn arb_factor(names: &'static [&'static str]) -> impl Strategy<Value = Factor> {
        let vars: Vec<Variable> = names
            .iter()
            .map(|n| Variable::new(*n, if *n == "B" { 3 } else { 2 }).unwrap())
            .collect();
        let size: usize = vars.iter().map(|v| v.card()).product();
        proptest::collection::vec(0.0f64..1.0, size)
            .prop_map(move |vals| Factor::new(vars.clone(), vals).unwrap())
    }

    proptest! {
        #[test]
        fn multiply_commutes_and_associates(
            a in arb_factor(&["A", "B"]),
            b in arb_factor(&["B", "C"]),
            c in arb_factor(&["C", "A"]),
        ) {
            let ab = a.multiply(&b).unwrap();
            let ba = b.multiply(&a).unwrap();
            prop_assert!(ab.approx_eq(&ba, 1e-12));
            let left = ab.multiply(&c).unwrap();
            let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert!(left.approx_eq(&right, 1e-12));
        }

        #[test]
        fn marginalize_distributes_over_product(
            a in arb_factor(&["A", "B"]),
            b in arb_factor(&["B", "C"]),
        ) {
            // b overlaps a only on B, which is kept
            let lhs = a.multiply(&b).unwrap().marginalize(&["A", "B"]).unwrap();
            let rhs = a.multiply(&b.marginalize(&["B"]).unwrap()).unwrap();
            prop_assert!(lhs.approx_eq(&rhs, 1e-12));
        }

        #[test]
        fn normalized_factors_sum_to_one(a in arb_factor(&["A", "B", "C"])) {
            prop_assume!(a.total() > 1e-6);
            let d = a.normalize().unwrap();
            prop_assert!((d.total() - 1.0).abs() <= NORMALIZATION_TOL);
            prop_assert!((a.marginalize::<&str>(&[]).unwrap().values()[0] - a.total()).abs() < 1e-12);
        }
    }
}
