//! Causal Bayesian networks with explicit regime indicators.
//!
//! Every node that may be intervened on carries a regime parent `F_X`. With
//! `F_X` idle the node follows its observational CPT; with `F_X = x` it is a
//! point mass at `x`. Interventional queries are ordinary queries with the
//! regime nodes fixed, so extended conditional independences can be read off
//! the augmented graph with [`Dag::d_separated`].

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::factor::{Assignment, Distribution, Factor, Variable, NORMALIZATION_TOL};
use crate::graph::{AugmentedDag, Dag, EdgeStyle};

/// Mass below which a conditioning stratum is treated as empty.
pub const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Cbn {
    variables: BTreeMap<String, Variable>,
    graph: AugmentedDag,
    /// One CPT per stochastic node, over the node and all its parents.
    cpts: BTreeMap<String, Factor>,
    interventions: Assignment,
}

/// Incrementally assembles a [`Cbn`]. CPT tables are laid out row-major over
/// `parents..., node`, so each consecutive block of `card(node)` entries is
/// the distribution of the node for one parent configuration.
#[derive(Debug, Clone, Default)]
pub struct CbnBuilder {
    variables: BTreeMap<String, Variable>,
    cpts: BTreeMap<String, (Vec<String>, Vec<f64>)>,
    regimes: BTreeSet<String>,
    styles: BTreeMap<(String, String), EdgeStyle>,
}

impl CbnBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variable(mut self, var: Variable) -> Self {
        self.variables.insert(var.name().to_string(), var);
        self
    }

    pub fn binary(self, name: &str) -> Self {
        self.variable(Variable::binary(name))
    }

    pub fn cpt(mut self, node: &str, parents: &[&str], table: Vec<f64>) -> Self {
        self.cpts.insert(
            node.to_string(),
            (parents.iter().map(|p| p.to_string()).collect(), table),
        );
        self
    }

    /// Declares a regime indicator `F_<target>` so that `target` can be intervened on.
    pub fn regime(mut self, target: &str) -> Self {
        self.regimes.insert(target.to_string());
        self
    }

    pub fn edge_style(mut self, from: &str, to: &str, style: EdgeStyle) -> Self {
        self.styles.insert((from.to_string(), to.to_string()), style);
        self
    }

    pub fn declared_variables(&self) -> &BTreeMap<String, Variable> {
        &self.variables
    }

    /// Parents and table of a node's CPT, as given to [`CbnBuilder::cpt`].
    pub fn cpt_of(&self, node: &str) -> Option<(&[String], &[f64])> {
        self.cpts
            .get(node)
            .map(|(p, t)| (p.as_slice(), t.as_slice()))
    }

    pub fn declared_regimes(&self) -> &BTreeSet<String> {
        &self.regimes
    }

    pub fn build(self) -> Result<Cbn> {
        let mut dag = Dag::new();
        for name in self.variables.keys() {
            dag.add_node(name);
        }
        let mut cpts = BTreeMap::new();
        for (name, var) in &self.variables {
            let (parents, table) = self
                .cpts
                .get(name)
                .ok_or_else(|| Error::InvalidModel(format!("node {name} has no CPT")))?;
            let mut scope = Vec::with_capacity(parents.len() + 1);
            for p in parents {
                let pv = self.variables.get(p).ok_or_else(|| {
                    Error::InvalidModel(format!("CPT of {name} references unknown parent {p}"))
                })?;
                scope.push(pv.clone());
                let style = self
                    .styles
                    .get(&(p.clone(), name.clone()))
                    .copied()
                    .unwrap_or(if self.regimes.contains(name) {
                        EdgeStyle::Dashed
                    } else {
                        EdgeStyle::Solid
                    });
                dag.add_edge(p, name, style)?;
            }
            scope.push(var.clone());
            check_columns(name, var.card(), table)?;
            cpts.insert(name.clone(), Factor::new(scope, table.clone())?);
        }
        if let Some(extra) = self.cpts.keys().find(|k| !self.variables.contains_key(*k)) {
            return Err(Error::InvalidModel(format!("CPT given for undeclared node {extra}")));
        }
        let mut variables = self.variables;
        let mut regimes = BTreeMap::new();
        for target in &self.regimes {
            let tv = variables
                .get(target)
                .ok_or_else(|| Error::InvalidModel(format!("regime for unknown node {target}")))?
                .clone();
            let fv = Variable::regime_for(&tv);
            if variables.contains_key(fv.name()) {
                return Err(Error::InvalidModel(format!(
                    "regime name {} clashes with a declared variable",
                    fv.name()
                )));
            }
            dag.add_edge(fv.name(), target, EdgeStyle::Solid)?;
            let obs = &cpts[target];
            cpts.insert(target.clone(), with_regime(obs, &tv, &fv)?);
            regimes.insert(fv.name().to_string(), target.clone());
            variables.insert(fv.name().to_string(), fv);
        }
        let graph = AugmentedDag::new(dag, regimes)?;
        Ok(Cbn {
            variables,
            graph,
            cpts,
            interventions: Assignment::new(),
        })
    }
}

fn check_columns(name: &str, card: usize, table: &[f64]) -> Result<()> {
    if table.is_empty() || table.len() % card != 0 {
        return Err(Error::InvalidModel(format!(
            "CPT of {name} has {} entries, not a multiple of {card}",
            table.len()
        )));
    }
    for (i, col) in table.chunks(card).enumerate() {
        let s: f64 = col.iter().sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidModel(format!(
                "CPT of {name}: parent configuration {i} sums to {s}"
            )));
        }
    }
    Ok(())
}

/// Extends an observational CPT with a regime parent: idle keeps the CPT,
/// `F = x` is a point mass at `x`.
fn with_regime(obs: &Factor, target: &Variable, regime: &Variable) -> Result<Factor> {
    let mut scope: Vec<Variable> = obs.scope().to_vec();
    scope.push(regime.clone());
    let idle = regime.idle_state();
    let tpos = scope
        .iter()
        .position(|v| v.name() == target.name())
        .expect("CPT contains its node");
    let n = scope.len();
    Factor::from_fn(scope, |s| {
        let f = s[n - 1];
        if f == idle {
            obs.at(&s[..n - 1])
        } else if s[tpos] == f {
            1.0
        } else {
            0.0
        }
    })
}

/// A posterior query. Regime entries are keyed by the *intervened node*;
/// unspecified regimes are idle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Query {
    pub targets: Vec<String>,
    pub evidence: Assignment,
    pub set: Assignment,
}

impl Query {
    pub fn new<'a>(targets: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            targets: targets.into_iter().map(str::to_string).collect(),
            ..Self::default()
        }
    }

    pub fn given(mut self, name: &str, state: usize) -> Self {
        self.evidence.insert(name.to_string(), state);
        self
    }

    pub fn given_all(mut self, evidence: &Assignment) -> Self {
        self.evidence.extend(evidence.iter().map(|(k, v)| (k.clone(), *v)));
        self
    }

    /// Sets `node` by intervention (regime `F_node = state`).
    pub fn set(mut self, node: &str, state: usize) -> Self {
        self.set.insert(node.to_string(), state);
        self
    }
}

impl Cbn {
    pub fn variables(&self) -> &BTreeMap<String, Variable> {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.variables
            .get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn graph(&self) -> &AugmentedDag {
        &self.graph
    }

    pub fn dag(&self) -> &Dag {
        self.graph.dag()
    }

    pub fn cpt(&self, node: &str) -> Option<&Factor> {
        self.cpts.get(node)
    }

    pub fn cpts(&self) -> &BTreeMap<String, Factor> {
        &self.cpts
    }

    /// Interventions applied by [`Cbn::intervene`] so far.
    pub fn interventions(&self) -> &Assignment {
        &self.interventions
    }

    pub fn stochastic_nodes(&self) -> impl Iterator<Item = &str> {
        self.variables
            .values()
            .filter(|v| !v.is_regime())
            .map(Variable::name)
    }

    pub fn regime_of(&self, node: &str) -> Option<&str> {
        self.graph.regime_of(node)
    }

    /// Topological order of all nodes, regime nodes included.
    pub fn topological_order(&self) -> Vec<String> {
        self.graph.dag().validate().expect("validated at construction")
    }

    fn check_state(&self, name: &str, state: usize) -> Result<&Variable> {
        let v = self.variable(name)?;
        if v.is_regime() {
            return Err(Error::InvalidQuery(format!(
                "{name} is a regime indicator; use an intervention instead"
            )));
        }
        if state >= v.card() {
            return Err(Error::InvalidQuery(format!(
                "state {state} out of range for {name} (cardinality {})",
                v.card()
            )));
        }
        Ok(v)
    }

    /// Regime assignment for every regime node: requested settings, idle otherwise.
    fn regime_assignment(&self, set: &Assignment) -> Result<Assignment> {
        let mut out: Assignment = self
            .graph
            .regimes()
            .keys()
            .map(|f| (f.clone(), self.variables[f].idle_state()))
            .collect();
        for (node, &x) in set {
            self.check_state(node, x)?;
            let f = self.regime_of(node).ok_or_else(|| {
                Error::InvalidQuery(format!("{node} has no regime indicator and cannot be set"))
            })?;
            out.insert(f.to_string(), x);
        }
        Ok(out)
    }

    fn validate_query(&self, q: &Query) -> Result<Assignment> {
        let mut seen = BTreeSet::new();
        for t in &q.targets {
            if self.variable(t)?.is_regime() {
                return Err(Error::InvalidQuery(format!("target {t} is a regime indicator")));
            }
            if !seen.insert(t) {
                return Err(Error::InvalidQuery(format!("duplicate target {t}")));
            }
            if q.evidence.contains_key(t) {
                return Err(Error::InvalidQuery(format!("{t} is both target and evidence")));
            }
        }
        for (k, &v) in &q.evidence {
            self.check_state(k, v)?;
        }
        self.regime_assignment(&q.set)
    }

    /// Exact posterior over the query targets by variable elimination with a
    /// min-fill ordering (ties broken lexicographically).
    pub fn joint_query(&self, q: &Query) -> Result<Distribution> {
        let regime = self.validate_query(q)?;
        let mut fixed = q.evidence.clone();
        fixed.extend(regime);
        let factors: Vec<Factor> = self.cpts.values().map(|f| f.condition(&fixed)).collect();
        let keep: BTreeSet<String> = q.targets.iter().cloned().collect();
        let result = eliminate(factors, &keep)?;
        let targets: Vec<&str> = q.targets.iter().map(String::as_str).collect();
        result.marginalize(&targets)?.normalize()
    }

    /// Unnormalized product of all CPTs under the given regime assignment
    /// (regime nodes keyed by intervened node, as in [`Query::set`]); a
    /// factor over every stochastic node.
    pub fn full_joint(&self, set: &Assignment) -> Result<Factor> {
        let regime = self.regime_assignment(set)?;
        self.cpts
            .values()
            .try_fold(Factor::unit(), |acc, f| acc.multiply(&f.condition(&regime)))
    }

    /// Same contract as [`Cbn::joint_query`], computed by building the full
    /// joint table and conditioning it. Exponential in the number of nodes.
    pub fn joint_query_by_enumeration(&self, q: &Query) -> Result<Distribution> {
        self.validate_query(q)?;
        let joint = self.full_joint(&q.set)?;
        let targets: Vec<&str> = q.targets.iter().map(String::as_str).collect();
        joint.condition(&q.evidence).marginalize(&targets)?.normalize()
    }

    /// The observational (all-idle) joint over every stochastic node.
    pub fn observational_joint(&self) -> Result<Distribution> {
        self.full_joint(&Assignment::new())?.normalize()
    }

    /// Returns the model with each listed node set by intervention: its CPT
    /// becomes a point mass and every incoming edge other than the one from its
    /// regime indicator is removed.
    pub fn intervene(&self, set: &Assignment) -> Result<Cbn> {
        let mut out = self.clone();
        let regime = self.regime_assignment(set)?;
        let mut dag = self.graph.dag().clone();
        for (node, &x) in set {
            let f = self.regime_of(node).expect("checked by regime_assignment");
            let target = &self.variables[node];
            let fv = &self.variables[f];
            let parents: Vec<String> = dag.parents(node).map(str::to_string).collect();
            for p in parents.iter().filter(|p| *p != f) {
                dag.remove_edge(p, node);
            }
            out.cpts.insert(
                node.clone(),
                Factor::from_fn(vec![target.clone(), fv.clone()], |s| {
                    if s[0] == x {
                        1.0
                    } else {
                        0.0
                    }
                })?,
            );
            out.interventions.insert(node.clone(), regime[f]);
        }
        out.graph = AugmentedDag::new(dag, self.graph.regimes().clone())?;
        Ok(out)
    }

    fn check_binary_cause(&self, x: &str) -> Result<()> {
        let v = self.variable(x)?;
        if v.card() != 2 {
            return Err(Error::InvalidQuery(format!("{x} must be binary")));
        }
        if self.regime_of(x).is_none() {
            return Err(Error::InvalidQuery(format!(
                "{x} has no regime indicator; its causal effect is not defined"
            )));
        }
        Ok(())
    }

    /// Average causal effect `E(Y | F_X = 1) - E(Y | F_X = 0)`, with Y coded
    /// by state index.
    pub fn ace(&self, x: &str, y: &str) -> Result<f64> {
        self.sce(x, y, &Assignment::new())
    }

    /// Specific causal effect within the subpopulation `u`:
    /// `E(Y | u, F_X = 1) - E(Y | u, F_X = 0)`.
    pub fn sce(&self, x: &str, y: &str, u: &Assignment) -> Result<f64> {
        self.check_binary_cause(x)?;
        let mean = |state| -> Result<f64> {
            self.joint_query(&Query::new([y]).given_all(u).set(x, state))?
                .expectation(y)
        };
        Ok(mean(1)? - mean(0)?)
    }

    /// Back-door adjustment `Σ_s P(Y | X = x, S = s) P(S = s)` from the
    /// observational joint, for every state `x`.
    pub fn back_door(&self, x: &str, y: &str, adjust: &[&str]) -> Result<BTreeMap<usize, Distribution>> {
        let xv = self.variable(x)?.clone();
        let yv = self.variable(y)?.clone();
        if x == y {
            return Err(Error::InvalidQuery("exposure and outcome coincide".into()));
        }
        for s in adjust {
            if self.variable(s)?.is_regime() {
                return Err(Error::InvalidQuery(format!("{s} is a regime indicator")));
            }
            if *s == x || *s == y {
                return Err(Error::InvalidQuery(format!(
                    "adjustment set must not contain {s}"
                )));
            }
        }
        let mut targets: Vec<&str> = vec![x, y];
        targets.extend(adjust);
        let joint = self.joint_query(&Query::new(targets.iter().copied()))?;
        let p_s = joint.marginalize(adjust)?;
        let p_xs = joint.marginalize(&[&[x][..], adjust].concat())?;
        let mut out = BTreeMap::new();
        for xs in 0..xv.card() {
            let mut acc = vec![0.0; yv.card()];
            for (s, ps) in p_s.entries() {
                if ps <= POSITIVITY_TOL {
                    continue;
                }
                let mut sx = s.clone();
                sx.insert(x.to_string(), xs);
                let pxs = p_xs.get(&sx);
                if pxs <= POSITIVITY_TOL {
                    return Err(Error::PositivityViolation(format!(
                        "P({x}={xs}, {s:?}) = 0 while P({s:?}) = {ps}"
                    )));
                }
                for (ys, slot) in acc.iter_mut().enumerate() {
                    let mut full = sx.clone();
                    full.insert(y.to_string(), ys);
                    *slot += joint.get(&full) / pxs * ps;
                }
            }
            out.insert(
                xs,
                Distribution::try_from_factor(Factor::new(vec![yv.clone()], acc)?)?,
            );
        }
        Ok(out)
    }
}

/// Sums out every variable not in `keep`, choosing at each step the variable
/// whose elimination adds the fewest fill edges.
fn eliminate(mut factors: Vec<Factor>, keep: &BTreeSet<String>) -> Result<Factor> {
    loop {
        let candidates: BTreeSet<String> = factors
            .iter()
            .flat_map(|f| f.scope_names())
            .filter(|n| !keep.contains(n))
            .collect();
        let Some(var) = min_fill(&factors, &candidates) else {
            break;
        };
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(&var));
        let product = touching
            .iter()
            .try_fold(Factor::unit(), |acc, f| acc.multiply(f))?;
        factors = rest;
        factors.push(product.sum_out(&var));
    }
    factors
        .iter()
        .try_fold(Factor::unit(), |acc, f| acc.multiply(f))
}

fn min_fill(factors: &[Factor], candidates: &BTreeSet<String>) -> Option<String> {
    let scopes: Vec<BTreeSet<String>> = factors.iter().map(Factor::scope_names).collect();
    let adjacent = |a: &str, b: &str| scopes.iter().any(|s| s.contains(a) && s.contains(b));
    candidates
        .iter()
        .map(|v| {
            let nbrs: BTreeSet<&String> = scopes
                .iter()
                .filter(|s| s.contains(v))
                .flatten()
                .filter(|n| *n != v)
                .collect();
            let nbrs: Vec<&String> = nbrs.into_iter().collect();
            let mut fill = 0usize;
            for (i, a) in nbrs.iter().enumerate() {
                for b in &nbrs[i + 1..] {
                    if !adjacent(a, b) {
                        fill += 1;
                    }
                }
            }
            (fill, v)
        })
        .min()
        .map(|(_, v)| v.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::assignment;
    use crate::graph::node_set;

    fn uniform_iv() -> Cbn {
        CbnBuilder::new()
            .binary("Z")
            .binary("U")
            .binary("X")
            .binary("Y")
            .cpt("Z", &[], vec![0.5, 0.5])
            .cpt("U", &[], vec![0.5, 0.5])
            .cpt("X", &["Z", "U"], vec![0.5; 8])
            .cpt("Y", &["X", "U"], vec![0.5; 8])
            .regime("X")
            .build()
            .unwrap()
    }

    /// Instrument model with a regime on X: Z -> X <- U, X -> Y <- U, F_X -> X.
    fn iv_model() -> Cbn {
        CbnBuilder::new()
            .binary("Z")
            .binary("U")
            .binary("X")
            .binary("Y")
            .cpt("Z", &[], vec![0.4, 0.6])
            .cpt("U", &[], vec![0.7, 0.3])
            .cpt("X", &["Z", "U"], vec![0.9, 0.1, 0.6, 0.4, 0.3, 0.7, 0.05, 0.95])
            .cpt("Y", &["X", "U"], vec![0.8, 0.2, 0.4, 0.6, 0.5, 0.5, 0.1, 0.9])
            .regime("X")
            .build()
            .unwrap()
    }

    #[test]
    fn builder_rejects_unnormalized_columns() {
        let err = CbnBuilder::new()
            .binary("A")
            .cpt("A", &[], vec![0.5, 0.51])
            .build();
        assert!(matches!(err, Err(Error::InvalidModel(_))));
        let missing = CbnBuilder::new().binary("A").build();
        assert!(missing.is_err());
    }

    #[test]
    fn regime_edges_and_dashed_tags() {
        let m = iv_model();
        assert!(m.dag().has_edge("F_X", "X"));
        assert_eq!(m.dag().edge_style("Z", "X"), Some(EdgeStyle::Dashed));
        assert_eq!(m.dag().edge_style("X", "Y"), Some(EdgeStyle::Solid));
    }

    #[test]
    fn uniform_iv_evidence_on_z_is_uninformative_about_y() {
        let m = uniform_iv();
        let py = m.joint_query(&Query::new(["Y"])).unwrap();
        let pyz = m.joint_query(&Query::new(["Y"]).given("Z", 1)).unwrap();
        assert!(py.approx_eq(&pyz, 1e-12));
        let brute = m.joint_query_by_enumeration(&Query::new(["Y"]).given("Z", 1)).unwrap();
        assert!(pyz.approx_eq(&brute, 1e-12));
    }

    #[test]
    fn full_joint_sums_to_one() {
        let m = iv_model();
        let j = m.joint_query(&Query::new(["U", "X", "Y", "Z"])).unwrap();
        assert!((j.total() - 1.0).abs() < 1e-12);
        assert!(j.approx_eq(&m.observational_joint().unwrap(), 1e-12));
    }

    #[test]
    fn zero_probability_evidence() {
        let m = CbnBuilder::new()
            .binary("A")
            .binary("B")
            .cpt("A", &[], vec![1.0, 0.0])
            .cpt("B", &["A"], vec![0.5, 0.5, 0.5, 0.5])
            .build()
            .unwrap();
        assert!(matches!(
            m.joint_query(&Query::new(["B"]).given("A", 1)),
            Err(Error::ZeroMass(_))
        ));
    }

    #[test]
    fn query_validation() {
        let m = iv_model();
        assert!(m.joint_query(&Query::new(["Q"])).is_err());
        assert!(m.joint_query(&Query::new(["Y"]).given("Y", 1)).is_err());
        assert!(m.joint_query(&Query::new(["Y"]).given("X", 2)).is_err());
        // Y has no regime indicator
        assert!(matches!(
            m.joint_query(&Query::new(["X"]).set("Y", 1)),
            Err(Error::InvalidQuery(_))
        ));
    }

    #[test]
    fn intervene_gives_point_mass_and_cuts_edges() {
        let m = iv_model();
        let set = assignment([("X", 1)]);
        let mi = m.intervene(&set).unwrap();
        let px = mi.joint_query(&Query::new(["X"])).unwrap();
        assert_eq!(px.values(), &[0.0, 1.0]);
        assert!(!mi.dag().has_edge("Z", "X"));
        assert!(!mi.dag().has_edge("U", "X"));
        assert!(mi.dag().has_edge("F_X", "X"));
        // equals a regime query on the unmodified model
        let a = mi.joint_query(&Query::new(["Y", "Z"])).unwrap();
        let b = m.joint_query(&Query::new(["Y", "Z"]).set("X", 1)).unwrap();
        assert!(a.approx_eq(&b, 1e-12));
        assert!(m.intervene(&assignment([("Y", 0)])).is_err());
    }

    #[test]
    fn intervention_leaves_instrument_distribution_unchanged() {
        let m = iv_model();
        let idle = m.joint_query(&Query::new(["Z"])).unwrap();
        for x in 0..2 {
            let set = m.joint_query(&Query::new(["Z"]).set("X", x)).unwrap();
            assert!(idle.approx_eq(&set, 1e-12));
        }
        // and graphically: Z is d-separated from F_X
        assert!(m
            .dag()
            .d_separated(&node_set(["Z"]), &node_set(["F_X"]), &node_set([]))
            .unwrap());
    }

    #[test]
    fn parentless_exposure_do_equals_see() {
        let m = CbnBuilder::new()
            .binary("X")
            .binary("Y")
            .cpt("X", &[], vec![0.3, 0.7])
            .cpt("Y", &["X"], vec![0.9, 0.1, 0.2, 0.8])
            .regime("X")
            .build()
            .unwrap();
        let see = m.joint_query(&Query::new(["Y"]).given("X", 1)).unwrap();
        let doit = m.joint_query(&Query::new(["Y"]).set("X", 1)).unwrap();
        assert!(see.approx_eq(&doit, 1e-12));
    }

    #[test]
    fn ace_trivial_cases() {
        let null = CbnBuilder::new()
            .binary("X")
            .binary("Y")
            .cpt("X", &[], vec![0.5, 0.5])
            .cpt("Y", &["X"], vec![0.3, 0.7, 0.3, 0.7])
            .regime("X")
            .build()
            .unwrap();
        assert!(null.ace("X", "Y").unwrap().abs() < 1e-12);
        let copy = CbnBuilder::new()
            .binary("X")
            .binary("Y")
            .cpt("X", &[], vec![0.5, 0.5])
            .cpt("Y", &["X"], vec![1.0, 0.0, 0.0, 1.0])
            .regime("X")
            .build()
            .unwrap();
        assert!((copy.ace("X", "Y").unwrap() - 1.0).abs() < 1e-12);
        assert!(copy.ace("Y", "X").is_err());
    }

    fn xor_model(pu1: f64) -> Cbn {
        CbnBuilder::new()
            .binary("U")
            .binary("X")
            .binary("Y")
            .cpt("U", &[], vec![1.0 - pu1, pu1])
            .cpt("X", &["U"], vec![0.6, 0.4, 0.2, 0.8])
            // Y = X xor U; rows (X,U) = 00, 01, 10, 11
            .cpt("Y", &["X", "U"], vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0])
            .regime("X")
            .build()
            .unwrap()
    }

    #[test]
    fn sce_for_xor_response() {
        let m = xor_model(0.3);
        let s0 = m.sce("X", "Y", &assignment([("U", 0)])).unwrap();
        let s1 = m.sce("X", "Y", &assignment([("U", 1)])).unwrap();
        assert!((s0 - 1.0).abs() < 1e-12);
        assert!((s1 + 1.0).abs() < 1e-12);
        let ace = m.ace("X", "Y").unwrap();
        assert!((ace - (1.0 - 2.0 * 0.3)).abs() < 1e-12);
        // ACE = E{SCE(U)}
        assert!((ace - (0.7 * s0 + 0.3 * s1)).abs() < 1e-12);
        let degenerate = xor_model(0.0);
        assert!(matches!(
            degenerate.sce("X", "Y", &assignment([("U", 1)])),
            Err(Error::ZeroMass(_))
        ));
    }

    #[test]
    fn sce_constant_effect_equals_ace() {
        // P(Y=1 | X, U) = 0.2 + 0.5 X + 0.1 U
        let m = CbnBuilder::new()
            .binary("U")
            .binary("X")
            .binary("Y")
            .cpt("U", &[], vec![0.4, 0.6])
            .cpt("X", &["U"], vec![0.7, 0.3, 0.1, 0.9])
            .cpt("Y", &["X", "U"], vec![0.8, 0.2, 0.7, 0.3, 0.3, 0.7, 0.2, 0.8])
            .regime("X")
            .build()
            .unwrap();
        let ace = m.ace("X", "Y").unwrap();
        assert!((ace - 0.5).abs() < 1e-12);
        for u in 0..2 {
            assert!((m.sce("X", "Y", &assignment([("U", u)])).unwrap() - ace).abs() < 1e-12);
        }
    }

    fn confounded() -> Cbn {
        CbnBuilder::new()
            .binary("S")
            .binary("X")
            .binary("Y")
            .cpt("S", &[], vec![0.35, 0.65])
            .cpt("X", &["S"], vec![0.8, 0.2, 0.3, 0.7])
            .cpt("Y", &["S", "X"], vec![0.9, 0.1, 0.6, 0.4, 0.5, 0.5, 0.15, 0.85])
            .regime("X")
            .build()
            .unwrap()
    }

    #[test]
    fn back_door_empty_set_is_observational() {
        let m = confounded();
        let bd = m.back_door("X", "Y", &[]).unwrap();
        for x in 0..2 {
            let obs = m.joint_query(&Query::new(["Y"]).given("X", x)).unwrap();
            assert!(bd[&x].approx_eq(&obs, 1e-12));
        }
    }

    #[test]
    fn back_door_on_confounder_matches_intervention() {
        let m = confounded();
        let bd = m.back_door("X", "Y", &["S"]).unwrap();
        for x in 0..2 {
            // hand enumeration: sum_s P(Y=1|x,s) P(s)
            let p1 = [0.1, 0.4, 0.5, 0.85];
            let expected = 0.35 * p1[x] + 0.65 * p1[2 + x];
            assert!((bd[&x].values()[1] - expected).abs() < 1e-12);
            let doit = m.joint_query(&Query::new(["Y"]).set("X", x)).unwrap();
            assert!(bd[&x].approx_eq(&doit, 1e-12));
        }
    }

    #[test]
    fn back_door_positivity_violation() {
        let m = CbnBuilder::new()
            .binary("S")
            .binary("X")
            .binary("Y")
            .cpt("S", &[], vec![0.5, 0.5])
            .cpt("X", &["S"], vec![1.0, 0.0, 0.3, 0.7])
            .cpt("Y", &["S", "X"], vec![0.9, 0.1, 0.6, 0.4, 0.5, 0.5, 0.15, 0.85])
            .regime("X")
            .build()
            .unwrap();
        assert!(matches!(
            m.back_door("X", "Y", &["S"]),
            Err(Error::PositivityViolation(_))
        ));
        assert!(m.back_door("X", "Y", &["X"]).is_err());
    }
}
