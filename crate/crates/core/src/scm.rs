//! Structural and stochastic causal models, potential outcomes, and twin
//! networks for counterfactual queries.
//!
//! A deterministic [`Scm`] is converted to a [`StCm`] with degenerate CPTs,
//! so both share one twin-network construction. Variables in the *shared*
//! set exist once and are common to the factual and counterfactual worlds;
//! every other variable gets a mirror copy named `<name>'`. Mirror noise is
//! independent of factual noise given the shared variables.

use std::collections::{BTreeMap, BTreeSet};

use crate::cbn::{Cbn, CbnBuilder, Query};
use crate::error::{Error, Result};
use crate::factor::{Assignment, Distribution, Factor, Odometer, Variable};
use crate::graph::Dag;

/// Name of the counterfactual copy of `name`.
pub fn mirror_name(name: &str) -> String {
    format!("{name}'")
}

/// Name of the potential outcome of `outcome` when `cause` is set to `state`.
pub fn potential_name(outcome: &str, cause: &str, state: usize) -> String {
    format!("{outcome}({cause}={state})")
}

/// `node = f(parents, exogenous)`, tabulated row-major over
/// `parents..., exogenous...` (last fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralEquation {
    pub node: String,
    pub parents: Vec<String>,
    pub exogenous: Vec<String>,
    pub table: Vec<usize>,
}

impl StructuralEquation {
    pub fn new(node: &str, parents: &[&str], exogenous: &[&str], table: Vec<usize>) -> Self {
        Self {
            node: node.to_string(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            exogenous: exogenous.iter().map(|s| s.to_string()).collect(),
            table,
        }
    }

    fn inputs(&self) -> impl Iterator<Item = &String> {
        self.parents.iter().chain(&self.exogenous)
    }

    fn eval(&self, values: &Assignment, vars: &BTreeMap<String, Variable>) -> usize {
        let mut idx = 0;
        for name in self.inputs() {
            idx = idx * vars[name].card() + values[name];
        }
        self.table[idx]
    }
}

/// Deterministic structural causal model over finite variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    variables: BTreeMap<String, Variable>,
    exogenous_dist: Distribution,
    equations: BTreeMap<String, StructuralEquation>,
    order: Vec<String>,
    shared: BTreeSet<String>,
    ignorable: bool,
}

impl Scm {
    /// `exogenous_dist` is the joint distribution of all exogenous variables;
    /// its scope defines which variables are exogenous. Every other variable
    /// needs exactly one equation.
    pub fn new(
        variables: Vec<Variable>,
        exogenous_dist: Factor,
        equations: Vec<StructuralEquation>,
    ) -> Result<Self> {
        let variables: BTreeMap<String, Variable> = variables
            .into_iter()
            .map(|v| (v.name().to_string(), v))
            .collect();
        for v in exogenous_dist.scope() {
            match variables.get(v.name()) {
                Some(d) if d.card() == v.card() => {}
                _ => {
                    return Err(Error::InvalidModel(format!(
                        "exogenous variable {} is not declared with matching cardinality",
                        v.name()
                    )))
                }
            }
        }
        let exogenous_dist = Distribution::try_from_factor(exogenous_dist)?;
        let exo = exogenous_dist.scope_names();
        let mut eqs = BTreeMap::new();
        let mut dag = Dag::new();
        for name in variables.keys() {
            dag.add_node(name);
        }
        for eq in equations {
            if exo.contains(&eq.node) {
                return Err(Error::InvalidModel(format!(
                    "exogenous variable {} cannot have an equation",
                    eq.node
                )));
            }
            let node = variables
                .get(&eq.node)
                .ok_or_else(|| Error::UnknownVariable(eq.node.clone()))?;
            let mut size = 1;
            for input in eq.inputs() {
                let v = variables
                    .get(input)
                    .ok_or_else(|| Error::UnknownVariable(input.clone()))?;
                size *= v.card();
                dag.add_edge(input, &eq.node, Default::default())?;
            }
            for e in &eq.exogenous {
                if !exo.contains(e) {
                    return Err(Error::InvalidModel(format!(
                        "{e} is listed as exogenous input of {} but has no exogenous distribution",
                        eq.node
                    )));
                }
            }
            if eq.table.len() != size {
                return Err(Error::InvalidModel(format!(
                    "equation for {} has {} entries, expected {size}",
                    eq.node,
                    eq.table.len()
                )));
            }
            if let Some(bad) = eq.table.iter().find(|&&s| s >= node.card()) {
                return Err(Error::InvalidModel(format!(
                    "equation for {} yields out-of-range state {bad}",
                    eq.node
                )));
            }
            if eqs.insert(eq.node.clone(), eq).is_some() {
                return Err(Error::InvalidModel("duplicate equation".into()));
            }
        }
        if let Some(missing) = variables
            .keys()
            .find(|n| !exo.contains(*n) && !eqs.contains_key(*n))
        {
            return Err(Error::InvalidModel(format!(
                "endogenous variable {missing} has no equation"
            )));
        }
        let order = dag
            .validate()?
            .into_iter()
            .filter(|n| eqs.contains_key(n))
            .collect();
        Ok(Self {
            variables,
            exogenous_dist,
            equations: eqs,
            order,
            shared: exo,
            ignorable: false,
        })
    }

    pub fn with_shared<'a>(mut self, shared: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        self.shared = check_shared(&self.variables, shared)?;
        Ok(self)
    }

    pub fn with_ignorable(mut self, ignorable: bool) -> Self {
        self.ignorable = ignorable;
        self
    }

    pub fn variables(&self) -> &BTreeMap<String, Variable> {
        &self.variables
    }

    pub fn exogenous(&self) -> BTreeSet<String> {
        self.exogenous_dist.scope_names()
    }

    pub fn exogenous_distribution(&self) -> &Distribution {
        &self.exogenous_dist
    }

    pub fn equations(&self) -> &BTreeMap<String, StructuralEquation> {
        &self.equations
    }

    pub fn shared(&self) -> &BTreeSet<String> {
        &self.shared
    }

    pub fn is_ignorable(&self) -> bool {
        self.ignorable
    }

    /// Solves the equations for exogenous values `u`, replacing the equation
    /// of every node in `set` by the constant given there.
    pub fn solve(&self, u: &Assignment, set: &Assignment) -> Assignment {
        let mut values: Assignment = u.clone();
        for (k, &x) in set {
            if !self.equations.contains_key(k) {
                values.insert(k.clone(), x);
            }
        }
        for node in &self.order {
            let v = match set.get(node) {
                Some(&x) => x,
                None => self.equations[node].eval(&values, &self.variables),
            };
            values.insert(node.clone(), v);
        }
        values
    }

    /// Exogenous assignments with positive probability.
    pub fn exogenous_support(&self) -> impl Iterator<Item = (Assignment, f64)> + '_ {
        self.exogenous_dist.entries().filter(|(_, p)| *p > 0.0)
    }

    /// Joint distribution of factual `x` and the potential outcomes `y(x = i)`
    /// for every state `i` of `x`, pushed forward through the exogenous
    /// distribution.
    pub fn potential_outcomes(&self, x: &str, y: &str) -> Result<PotentialOutcomeJoint> {
        let xv = self.endogenous(x)?.clone();
        let yv = self.endogenous(y)?.clone();
        let mut scope = vec![xv.clone()];
        let names: Vec<String> = (0..xv.card()).map(|i| potential_name(y, x, i)).collect();
        scope.extend(names.iter().map(|n| yv.renamed(n.clone())));
        let mut table: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (u, p) in self.exogenous_support() {
            let factual = self.solve(&u, &Assignment::new());
            let mut key = vec![factual[x]];
            for i in 0..xv.card() {
                let world = self.solve(&u, &[(x.to_string(), i)].into());
                key.push(world[y]);
            }
            *table.entry(key).or_default() += p;
        }
        let cards: Vec<usize> = scope.iter().map(Variable::card).collect();
        let values = Odometer::new(&cards)
            .map(|s| table.get(&s).copied().unwrap_or(0.0))
            .collect();
        Ok(PotentialOutcomeJoint {
            exposure: x.to_string(),
            outcome: y.to_string(),
            joint: Distribution::try_from_factor(Factor::new(scope, values)?)?,
        })
    }

    /// Joint distribution of the response type
    /// `(x(z=0), x(z=1), y(x=0), y(x=1))` for binary `z`, `x`, `y`.
    ///
    /// Refused when `x` is not a descendant of `z`: potential values of `x`
    /// under settings of `z` are then meaningless.
    pub fn response_types(&self, z: &str, x: &str, y: &str) -> Result<Factor> {
        for n in [z, x, y] {
            if self.variables.get(n).map(Variable::card) != Some(2) {
                return Err(Error::InvalidQuery(format!("{n} must be a binary variable")));
            }
        }
        self.endogenous(x)?;
        self.endogenous(y)?;
        if !self.causal_graph().descendants(z).contains(x) {
            return Err(Error::InvalidQuery(format!(
                "{z} is not a cause of {x}; {x}({z}=z) is undefined"
            )));
        }
        let names = [
            potential_name(x, z, 0),
            potential_name(x, z, 1),
            potential_name(y, x, 0),
            potential_name(y, x, 1),
        ];
        let scope: Vec<Variable> = names.iter().map(|n| Variable::binary(n.clone())).collect();
        let mut mass = [0.0; 16];
        for (u, p) in self.exogenous_support() {
            // a non-exogenous z keeps its natural value when x is set
            let x0 = self.solve(&u, &[(z.to_string(), 0)].into())[x];
            let x1 = self.solve(&u, &[(z.to_string(), 1)].into())[x];
            let y0 = self.solve(&u, &[(x.to_string(), 0)].into())[y];
            let y1 = self.solve(&u, &[(x.to_string(), 1)].into())[y];
            mass[x0 * 8 + x1 * 4 + y0 * 2 + y1] += p;
        }
        Factor::new(scope, mass.to_vec())
    }

    fn endogenous(&self, name: &str) -> Result<&Variable> {
        let v = self
            .variables
            .get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        if !self.equations.contains_key(name) {
            return Err(Error::InvalidQuery(format!("{name} is exogenous")));
        }
        Ok(v)
    }

    /// Graph with an edge from every equation input to its node.
    pub fn causal_graph(&self) -> Dag {
        let mut dag = Dag::new();
        for n in self.variables.keys() {
            dag.add_node(n);
        }
        for eq in self.equations.values() {
            for i in eq.inputs() {
                dag.add_edge(i, &eq.node, Default::default())
                    .expect("validated at construction");
            }
        }
        dag
    }
}

fn check_shared<'a>(
    variables: &BTreeMap<String, Variable>,
    shared: impl IntoIterator<Item = &'a str>,
) -> Result<BTreeSet<String>> {
    shared
        .into_iter()
        .map(|s| {
            if variables.contains_key(s) {
                Ok(s.to_string())
            } else {
                Err(Error::UnknownVariable(s.to_string()))
            }
        })
        .collect()
}

/// Stochastic causal model: a DAG with conditional distributions, some
/// nodes declared exogenous.
#[derive(Debug, Clone)]
pub struct StCm {
    spec: CbnBuilder,
    observational: Cbn,
    exogenous: BTreeSet<String>,
    shared: BTreeSet<String>,
    ignorable: bool,
}

impl StCm {
    /// Regime declarations in `spec` are ignored; shared defaults to the
    /// exogenous set.
    pub fn new<'a>(spec: CbnBuilder, exogenous: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut plain = CbnBuilder::new();
        for (name, var) in spec.declared_variables() {
            plain = plain.variable(var.clone());
            if let Some((parents, table)) = spec.cpt_of(name) {
                let ps: Vec<&str> = parents.iter().map(String::as_str).collect();
                plain = plain.cpt(name, &ps, table.to_vec());
            }
        }
        let observational = plain.clone().build()?;
        let exogenous = check_shared(spec.declared_variables(), exogenous)?;
        Ok(Self {
            spec: plain,
            observational,
            shared: exogenous.clone(),
            exogenous,
            ignorable: false,
        })
    }

    pub fn with_shared<'a>(mut self, shared: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        self.shared = check_shared(self.spec.declared_variables(), shared)?;
        Ok(self)
    }

    pub fn with_ignorable(mut self, ignorable: bool) -> Self {
        self.ignorable = ignorable;
        self
    }

    pub fn variables(&self) -> &BTreeMap<String, Variable> {
        self.spec.declared_variables()
    }

    pub fn exogenous(&self) -> &BTreeSet<String> {
        &self.exogenous
    }

    pub fn shared(&self) -> &BTreeSet<String> {
        &self.shared
    }

    pub fn is_ignorable(&self) -> bool {
        self.ignorable
    }

    /// Parents and CPT table of `node`, laid out as for [`CbnBuilder::cpt`].
    pub fn cpt_of(&self, node: &str) -> Option<(&[String], &[f64])> {
        self.spec.cpt_of(node)
    }

    /// The model as a network without regime indicators.
    pub fn observational(&self) -> &Cbn {
        &self.observational
    }
}

/// Models that admit counterfactual (twin-network) queries.
pub trait CausalModel {
    fn to_stcm(&self) -> Result<StCm>;
}

impl CausalModel for StCm {
    fn to_stcm(&self) -> Result<StCm> {
        Ok(self.clone())
    }
}

impl CausalModel for Scm {
    /// Equations become degenerate CPTs. The exogenous joint is factorized
    /// by the chain rule in name order (zero-mass rows made uniform).
    fn to_stcm(&self) -> Result<StCm> {
        let mut spec = CbnBuilder::new();
        for v in self.variables.values() {
            spec = spec.variable(v.clone());
        }
        let exo: Vec<&Variable> = self.exogenous_dist.scope().iter().collect();
        for (i, v) in exo.iter().enumerate() {
            let prefix: Vec<&str> = exo[..i].iter().map(|p| p.name()).collect();
            let mut keep = prefix.clone();
            keep.push(v.name());
            let marg = self.exogenous_dist.marginalize(&keep)?;
            // canonical order is by name, which matches `keep` since `exo` is sorted
            let table: Vec<f64> = marg
                .values()
                .chunks(v.card())
                .flat_map(|row| {
                    let s: f64 = row.iter().sum();
                    if s > 0.0 {
                        row.iter().map(|p| p / s).collect::<Vec<_>>()
                    } else {
                        vec![1.0 / v.card() as f64; v.card()]
                    }
                })
                .collect();
            spec = spec.cpt(v.name(), &prefix, table);
        }
        for eq in self.equations.values() {
            let inputs: Vec<&str> = eq.inputs().map(String::as_str).collect();
            let card = self.variables[&eq.node].card();
            let table: Vec<f64> = eq
                .table
                .iter()
                .flat_map(|&s| (0..card).map(move |k| if k == s { 1.0 } else { 0.0 }))
                .collect();
            spec = spec.cpt(&eq.node, &inputs, table);
        }
        let exogenous = self.exogenous();
        StCm::new(spec, exogenous.iter().map(String::as_str))?
            .with_shared(self.shared.iter().map(String::as_str))
            .map(|s| s.with_ignorable(self.ignorable))
    }
}

/// CBN whose observational joint is the model's implied joint, with a regime
/// indicator on every non-exogenous node so that interventions replace that
/// node's mechanism and keep all others.
pub fn scm_to_cbn(model: &impl CausalModel) -> Result<Cbn> {
    let s = model.to_stcm()?;
    let mut spec = s.spec.clone();
    for n in s.variables().keys() {
        if !s.exogenous.contains(n) {
            spec = spec.regime(n);
        }
    }
    spec.build()
}

/// Joint of factual exposure and potential outcomes, `(X, Y(X=0), Y(X=1), ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomeJoint {
    pub exposure: String,
    pub outcome: String,
    pub joint: Distribution,
}

impl PotentialOutcomeJoint {
    pub fn potential(&self, state: usize) -> String {
        potential_name(&self.outcome, &self.exposure, state)
    }

    /// `E{Y(1)} - E{Y(0)}`.
    pub fn ace(&self) -> Result<f64> {
        Ok(self.joint.expectation(&self.potential(1))? - self.joint.expectation(&self.potential(0))?)
    }

    /// Marginal of `(Y(0), Y(1))`.
    pub fn response_pair(&self) -> Result<Factor> {
        self.joint.marginalize(&[self.potential(0), self.potential(1)])
    }

    /// `P(Y(x) = y | X = x)`, which by consistency equals `P(Y = y | X = x)`.
    pub fn consistent_conditional(&self, x: usize, y: usize) -> Result<f64> {
        let px = self
            .joint
            .prob(&[(self.exposure.clone(), x)].into());
        if px <= 0.0 {
            return Err(Error::ZeroMass(format!("P({}={x}) = 0", self.exposure)));
        }
        let joint = self
            .joint
            .prob(&[(self.exposure.clone(), x), (self.potential(x), y)].into());
        Ok(joint / px)
    }
}

/// A factual world and its counterfactual mirror in one network.
#[derive(Debug, Clone)]
pub struct TwinNetwork {
    pub cbn: Cbn,
    /// factual name -> mirror name, for every non-shared variable
    pub mirror: BTreeMap<String, String>,
    pub factual: Assignment,
    /// counterfactual intervention, keyed by factual name
    pub counterfactual: Assignment,
}

impl TwinNetwork {
    pub fn counterpart<'a>(&'a self, name: &'a str) -> &'a str {
        self.mirror.get(name).map_or(name, String::as_str)
    }

    /// Distribution of the counterfactual copies of `targets` given the
    /// factual evidence.
    pub fn counterfactual_query(&self, targets: &[&str]) -> Result<Distribution> {
        let names: Vec<&str> = targets.iter().map(|t| self.counterpart(t)).collect();
        self.cbn
            .joint_query(&Query::new(names).given_all(&self.factual))
    }
}

/// Builds the twin network of `model`. Non-shared variables are mirrored;
/// mirrored nodes listed in `counterfactual` are set by intervention (point
/// mass, no parents). With an ignorable model, factual nodes that are
/// counterfactually intervened on take their marginal distribution, so the
/// factual exposure carries no information about the shared background.
pub fn twin_network(
    model: &impl CausalModel,
    factual: &Assignment,
    counterfactual: &Assignment,
) -> Result<TwinNetwork> {
    let s = model.to_stcm()?;
    let vars = s.variables();
    for (k, &v) in factual.iter().chain(counterfactual) {
        let var = vars.get(k).ok_or_else(|| Error::UnknownVariable(k.clone()))?;
        if v >= var.card() {
            return Err(Error::InvalidQuery(format!("state {v} out of range for {k}")));
        }
    }
    if let Some(bad) = counterfactual.keys().find(|k| s.shared.contains(*k)) {
        return Err(Error::InvalidQuery(format!(
            "cannot intervene counterfactually on shared variable {bad}"
        )));
    }
    let mirror: BTreeMap<String, String> = vars
        .keys()
        .filter(|n| !s.shared.contains(*n))
        .map(|n| (n.clone(), mirror_name(n)))
        .collect();
    if let Some(clash) = mirror.values().find(|m| vars.contains_key(*m)) {
        return Err(Error::InvalidModel(format!(
            "mirror name {clash} clashes with a declared variable"
        )));
    }
    let marginals = if s.ignorable && !counterfactual.is_empty() {
        let names: Vec<&str> = counterfactual.keys().map(String::as_str).collect();
        Some(s.observational.joint_query(&Query::new(names.iter().copied()))?)
    } else {
        None
    };
    let mut spec = CbnBuilder::new();
    for (name, var) in vars {
        let (parents, table) = s.cpt_of(name).expect("every node has a CPT");
        let ps: Vec<&str> = parents.iter().map(String::as_str).collect();
        spec = spec.variable(var.clone());
        match (&marginals, counterfactual.contains_key(name)) {
            (Some(m), true) => {
                let marg = m.marginalize(&[name.as_str()])?;
                spec = spec.cpt(name, &[], marg.values().to_vec());
            }
            _ => spec = spec.cpt(name, &ps, table.to_vec()),
        }
        let Some(mname) = mirror.get(name) else {
            continue;
        };
        spec = spec.variable(var.renamed(mname.clone()));
        if let Some(&x) = counterfactual.get(name) {
            let pm = (0..var.card()).map(|k| if k == x { 1.0 } else { 0.0 }).collect();
            spec = spec.cpt(mname, &[], pm);
        } else {
            let mps: Vec<&str> = ps
                .iter()
                .map(|p| mirror.get(*p).map_or(*p, String::as_str))
                .collect();
            spec = spec.cpt(mname, &mps, table.to_vec());
        }
    }
    Ok(TwinNetwork {
        cbn: spec.build()?,
        mirror,
        factual: factual.clone(),
        counterfactual: counterfactual.clone(),
    })
}

/// Probability that `outcome` would have differed from its factual value
/// under the counterfactual intervention, given the factual evidence:
/// for binary variables, `P(Y' = 0 | X = 1, Y = 1, X' <- 0)`.
pub fn pc_exact(
    model: &impl CausalModel,
    factual: &Assignment,
    counterfactual: &Assignment,
    outcome: &str,
) -> Result<f64> {
    let y = *factual.get(outcome).ok_or_else(|| {
        Error::InvalidQuery(format!("factual evidence must include the outcome {outcome}"))
    })?;
    let twin = twin_network(model, factual, counterfactual)?;
    // factual event must have positive probability
    let names: Vec<&str> = factual.keys().map(String::as_str).collect();
    let joint = twin.cbn.joint_query(&Query::new(names))?;
    if joint.get(factual) <= crate::factor::ZERO_MASS_TOL {
        return Err(Error::ZeroMass(format!(
            "factual event {factual:?} has probability zero"
        )));
    }
    if !twin.mirror.contains_key(outcome) {
        // outcome shared across worlds: it cannot differ
        return Ok(0.0);
    }
    let cf = twin.counterfactual_query(&[outcome])?;
    Ok(1.0 - cf.values()[y])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::assignment;

    fn bern(name: &str, p1: f64) -> Factor {
        Factor::new(vec![Variable::binary(name)], vec![1.0 - p1, p1]).unwrap()
    }

    /// X exogenous-driven (X = U_X), Y = f(X, U).
    fn scm_y_of_x(table: [usize; 4], pu: f64) -> Scm {
        let exo = bern("U", pu).multiply(&bern("V", 0.5)).unwrap();
        Scm::new(
            ["U", "V", "X", "Y"].map(Variable::binary).to_vec(),
            exo,
            vec![
                StructuralEquation::new("X", &[], &["V"], vec![0, 1]),
                StructuralEquation::new("Y", &["X"], &["U"], table.to_vec()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn scm_validation() {
        let exo = bern("U", 0.5);
        let vars = ["U", "X"].map(Variable::binary).to_vec();
        // missing equation
        assert!(Scm::new(vars.clone(), exo.clone(), vec![]).is_err());
        // bad table size
        assert!(Scm::new(
            vars.clone(),
            exo.clone(),
            vec![StructuralEquation::new("X", &[], &["U"], vec![0])]
        )
        .is_err());
        // out-of-range output
        assert!(Scm::new(
            vars.clone(),
            exo.clone(),
            vec![StructuralEquation::new("X", &[], &["U"], vec![0, 2])]
        )
        .is_err());
        // equation for exogenous
        assert!(Scm::new(
            vars,
            exo,
            vec![StructuralEquation::new("U", &[], &[], vec![0])]
        )
        .is_err());
    }

    #[test]
    fn copy_mechanism_to_cbn() {
        // Y = X, X uniform
        let m = scm_y_of_x([0, 0, 1, 1], 0.5);
        let cbn = scm_to_cbn(&m).unwrap();
        let p = cbn.joint_query(&Query::new(["Y"]).given("X", 1)).unwrap();
        assert!((p.values()[1] - 1.0).abs() < 1e-12);
        assert!(cbn.regime_of("X").is_some() && cbn.regime_of("U").is_none());
    }

    #[test]
    fn null_effect_potential_outcomes_agree() {
        // Y = U
        let m = scm_y_of_x([0, 1, 0, 1], 0.3);
        let po = m.potential_outcomes("X", "Y").unwrap();
        let pair = po.response_pair().unwrap();
        let agree = pair.values()[0] + pair.values()[3];
        assert!((agree - 1.0).abs() < 1e-12);
    }

    #[test]
    fn xor_potential_outcomes() {
        // Y = X xor U, U ~ Bern(0.5)
        let m = scm_y_of_x([0, 1, 1, 0], 0.5);
        let pair = m.potential_outcomes("X", "Y").unwrap().response_pair().unwrap();
        // (Y(0), Y(1)) in {(0,1), (1,0)} each with 1/2
        assert_eq!(pair.values(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn pc_exact_trivial_models() {
        let copy = scm_y_of_x([0, 0, 1, 1], 0.5);
        let f = assignment([("X", 1), ("Y", 1)]);
        let cf = assignment([("X", 0)]);
        assert!((pc_exact(&copy, &f, &cf, "Y").unwrap() - 1.0).abs() < 1e-12);
        let ignores = scm_y_of_x([0, 1, 0, 1], 0.5);
        assert!(pc_exact(&ignores, &f, &cf, "Y").unwrap().abs() < 1e-12);
    }

    #[test]
    fn pc_exact_zero_mass_factual() {
        // Y = X and U irrelevant; factual X=1,Y=0 impossible
        let copy = scm_y_of_x([0, 0, 1, 1], 0.5);
        let f = assignment([("X", 1), ("Y", 0)]);
        assert!(matches!(
            pc_exact(&copy, &f, &assignment([("X", 0)]), "Y"),
            Err(Error::ZeroMass(_))
        ));
    }

    #[test]
    fn twin_topology_for_iv_model() {
        // Z -> X <- U, X -> Y <- U; shared {U}
        let spec = CbnBuilder::new()
            .binary("U")
            .binary("X")
            .binary("Y")
            .cpt("U", &[], vec![0.5, 0.5])
            .cpt("X", &["U"], vec![0.7, 0.3, 0.4, 0.6])
            .cpt("Y", &["X", "U"], vec![0.8, 0.2, 0.5, 0.5, 0.1, 0.9, 0.5, 0.5]);
        let m = StCm::new(spec, ["U"]).unwrap();
        let twin = twin_network(
            &m,
            &assignment([("X", 1), ("Y", 1)]),
            &assignment([("X", 0)]),
        )
        .unwrap();
        let nodes: Vec<&str> = twin.cbn.dag().nodes().collect();
        assert_eq!(nodes, ["U", "X", "X'", "Y", "Y'"]);
        let edges: BTreeSet<(String, String)> = twin.cbn.dag().edges().into_iter().collect();
        let expected: BTreeSet<(String, String)> = [
            ("U", "X"),
            ("U", "Y"),
            ("X", "Y"),
            ("U", "Y'"),
            ("X'", "Y'"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(edges, expected);
    }

    #[test]
    fn twin_with_everything_shared_is_the_factual_model() {
        let m = scm_y_of_x([0, 1, 1, 0], 0.4)
            .with_shared(["U", "V", "X", "Y"])
            .unwrap();
        let twin = twin_network(&m, &assignment([("X", 1)]), &Assignment::new()).unwrap();
        assert!(twin.mirror.is_empty());
        let base = scm_to_cbn(&m).unwrap();
        let a = twin.counterfactual_query(&["Y"]).unwrap();
        let b = base.joint_query(&Query::new(["Y"]).given("X", 1)).unwrap();
        assert!(a.approx_eq(&b, 1e-12));
        assert!(twin_network(&m, &Assignment::new(), &assignment([("X", 0)])).is_err());
    }

    #[test]
    fn deterministic_twin_matches_pushforward() {
        // Y depends on X and a 4-state U
        let u = Variable::new("U", 4).unwrap();
        let exo = Factor::new(vec![u.clone()], vec![0.1, 0.2, 0.3, 0.4])
            .unwrap()
            .multiply(&bern("V", 0.5))
            .unwrap();
        let table = vec![0, 1, 1, 0, 1, 0, 1, 1];
        let m = Scm::new(
            vec![u, Variable::binary("V"), Variable::binary("X"), Variable::binary("Y")],
            exo,
            vec![
                StructuralEquation::new("X", &[], &["V"], vec![0, 1]),
                StructuralEquation::new("Y", &["X"], &["U"], table.clone()),
            ],
        )
        .unwrap();
        // X is exogenously driven, so conditioning on X = 1 acts as setting it
        let twin = twin_network(&m, &assignment([("X", 1)]), &assignment([("X", 0)])).unwrap();
        let joint = twin
            .cbn
            .joint_query(&Query::new(["Y", "Y'"]).given("X", 1))
            .unwrap();
        let pu = [0.1, 0.2, 0.3, 0.4];
        let mut expected = [0.0; 4];
        for (k, p) in pu.iter().enumerate() {
            let y1 = table[4 + k];
            let y0 = table[k];
            expected[y1 * 2 + y0] += p;
        }
        for (got, want) in joint.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn scm_and_its_stcm_give_the_same_pc() {
        let exo = bern("U", 0.35).multiply(&bern("V", 0.6)).unwrap();
        let m = Scm::new(
            ["U", "V", "X", "Y"].map(Variable::binary).to_vec(),
            exo,
            vec![
                StructuralEquation::new("X", &[], &["U", "V"], vec![0, 1, 1, 1]),
                StructuralEquation::new("Y", &["X"], &["U"], vec![0, 1, 1, 1]),
            ],
        )
        .unwrap();
        let f = assignment([("X", 1), ("Y", 1)]);
        let cf = assignment([("X", 0)]);
        let a = pc_exact(&m, &f, &cf, "Y").unwrap();
        let b = pc_exact(&m.to_stcm().unwrap(), &f, &cf, "Y").unwrap();
        assert!((a - b).abs() < 1e-12);
        // posterior over (U, V) given X=1, Y=1 by direct enumeration
        let mut num = 0.0;
        let mut den = 0.0;
        for (u, pu) in [(0, 0.65), (1, 0.35)] {
            for (v, pv) in [(0, 0.4), (1, 0.6)] {
                let x = u | v;
                let y = (x | u) as usize;
                if x == 1 && y == 1 {
                    den += pu * pv;
                    if u == 0 {
                        num += pu * pv; // Y(0) = U = 0
                    }
                }
            }
        }
        assert!((a - num / den).abs() < 1e-12);
    }

    #[test]
    fn correlated_exogenous_factorization() {
        // dependent (U, V) joint survives the chain-rule factorization
        let exo = Factor::new(
            ["U", "V"].map(Variable::binary).to_vec(),
            vec![0.4, 0.1, 0.2, 0.3],
        )
        .unwrap();
        let m = Scm::new(
            ["U", "V", "X"].map(Variable::binary).to_vec(),
            exo.clone(),
            vec![StructuralEquation::new("X", &[], &["U", "V"], vec![0, 1, 1, 0])],
        )
        .unwrap();
        let cbn = scm_to_cbn(&m).unwrap();
        let uv = cbn.joint_query(&Query::new(["U", "V"])).unwrap();
        assert!(uv.approx_eq(&exo, 1e-12));
    }

    #[test]
    fn response_types_refused_without_causal_path() {
        // Z merely correlated with X through a common cause
        let exo = bern("W", 0.5).multiply(&bern("U", 0.5)).unwrap();
        let m = Scm::new(
            ["W", "U", "Z", "X", "Y"].map(Variable::binary).to_vec(),
            exo,
            vec![
                StructuralEquation::new("Z", &[], &["W"], vec![0, 1]),
                StructuralEquation::new("X", &[], &["W", "U"], vec![0, 1, 1, 1]),
                StructuralEquation::new("Y", &["X"], &["U"], vec![0, 0, 1, 1]),
            ],
        )
        .unwrap();
        assert!(matches!(
            m.response_types("Z", "X", "Y"),
            Err(Error::InvalidQuery(_))
        ));
        // the decision-theoretic effect of X is still defined
        assert!((scm_to_cbn(&m).unwrap().ace("X", "Y").unwrap() - 1.0).abs() < 1e-12);
    }
}
