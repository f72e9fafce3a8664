//! Model files: JSON documents describing a network, a deterministic
//! structural model, or a stochastic one.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use coe_lab::cbn::{Cbn, CbnBuilder};
use coe_lab::factor::{Assignment, Factor, Variable};
use coe_lab::graph::{Dag, EdgeStyle};
use coe_lab::scm::{scm_to_cbn, Scm, StCm, StructuralEquation};
use coe_lab::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Cbn,
    Scm,
    Stcm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    /// State labels; defaults to `"0"`, `"1"`, … when only `card` is given.
    #[serde(default)]
    pub states: Option<Vec<String>>,
    #[serde(default)]
    pub card: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub style: EdgeStyle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptSpec {
    pub node: String,
    #[serde(default)]
    pub parents: Vec<String>,
    /// Row-major over the parents, then the node (the node varies fastest).
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub node: String,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub exogenous: Vec<String>,
    /// Output state, row-major over parents then exogenous inputs.
    pub table: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub variables: Vec<String>,
    /// Row-major over `variables`, the last varying fastest.
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub kind: Kind,
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub edges: Option<Vec<EdgeSpec>>,
    #[serde(default)]
    pub regime_nodes: Vec<String>,
    #[serde(default)]
    pub cpts: Vec<CptSpec>,
    #[serde(default)]
    pub equations: Vec<EquationSpec>,
    #[serde(default)]
    pub exogenous: Vec<String>,
    #[serde(default)]
    pub exogenous_distribution: Option<JointSpec>,
    #[serde(default)]
    pub shared: Option<Vec<String>>,
    #[serde(default)]
    pub ignorable: bool,
}

pub enum Model {
    Cbn(Cbn),
    Scm(Scm),
    StCm(StCm),
}

/// A parsed, validated model with its state labels.
pub struct Loaded {
    pub kind: Kind,
    pub model: Model,
    labels: BTreeMap<String, Vec<String>>,
}

impl Loaded {
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
        Ok(Self::from_file(file)?)
    }

    pub fn from_file(file: ModelFile) -> coe_lab::Result<Self> {
        if file.version != SCHEMA_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                file.version
            )));
        }
        let mut labels = BTreeMap::new();
        let mut vars = Vec::new();
        for v in &file.variables {
            let states = match (&v.states, v.card) {
                (Some(s), Some(c)) if s.len() != c => {
                    return Err(Error::InvalidModel(format!(
                        "{}: {} state labels but card {c}",
                        v.name,
                        s.len()
                    )))
                }
                (Some(s), _) => s.clone(),
                (None, Some(c)) => (0..c).map(|i| i.to_string()).collect(),
                (None, None) => {
                    return Err(Error::InvalidModel(format!("{}: give states or card", v.name)))
                }
            };
            if states.iter().collect::<BTreeSet<_>>().len() != states.len() {
                return Err(Error::InvalidModel(format!("{}: duplicate state labels", v.name)));
            }
            vars.push(Variable::new(v.name.clone(), states.len())?);
            if labels.insert(v.name.clone(), states).is_some() {
                return Err(Error::InvalidModel(format!("variable {} declared twice", v.name)));
            }
        }
        let declared_parents: Vec<(String, String)> = match file.kind {
            Kind::Cbn | Kind::Stcm => file
                .cpts
                .iter()
                .flat_map(|c| c.parents.iter().map(move |p| (p.clone(), c.node.clone())))
                .collect(),
            Kind::Scm => file
                .equations
                .iter()
                .flat_map(|e| {
                    e.parents
                        .iter()
                        .chain(&e.exogenous)
                        .map(move |p| (p.clone(), e.node.clone()))
                })
                .collect(),
        };
        if let Some(edges) = &file.edges {
            check_edges(&labels, edges, &declared_parents)?;
        }
        let model = match file.kind {
            Kind::Cbn => {
                let mut b = builder(&vars, &file.cpts);
                for t in &file.regime_nodes {
                    b = b.regime(t);
                }
                for e in file.edges.iter().flatten() {
                    b = b.edge_style(&e.from, &e.to, e.style);
                }
                Model::Cbn(b.build()?)
            }
            Kind::Stcm => {
                let mut m = StCm::new(builder(&vars, &file.cpts), file.exogenous.iter().map(String::as_str))?;
                if let Some(s) = &file.shared {
                    m = m.with_shared(s.iter().map(String::as_str))?;
                }
                Model::StCm(m.with_ignorable(file.ignorable))
            }
            Kind::Scm => {
                let joint = file.exogenous_distribution.as_ref().ok_or_else(|| {
                    Error::InvalidModel("scm models need exogenous_distribution".into())
                })?;
                let scope = joint
                    .variables
                    .iter()
                    .map(|n| {
                        vars.iter()
                            .find(|v| v.name() == n)
                            .cloned()
                            .ok_or_else(|| Error::UnknownVariable(n.clone()))
                    })
                    .collect::<coe_lab::Result<Vec<_>>>()?;
                let dist = Factor::new(scope, joint.table.clone())?;
                let eqs = file
                    .equations
                    .iter()
                    .map(|e| {
                        let ps: Vec<&str> = e.parents.iter().map(String::as_str).collect();
                        let us: Vec<&str> = e.exogenous.iter().map(String::as_str).collect();
                        StructuralEquation::new(&e.node, &ps, &us, e.table.clone())
                    })
                    .collect();
                let mut m = Scm::new(vars.clone(), dist, eqs)?;
                if let Some(s) = &file.shared {
                    m = m.with_shared(s.iter().map(String::as_str))?;
                }
                Model::Scm(m.with_ignorable(file.ignorable))
            }
        };
        Ok(Self {
            kind: file.kind,
            model,
            labels,
        })
    }

    /// A network for interventional queries. Structural models get a regime
    /// indicator on every non-exogenous node.
    pub fn network(&self) -> coe_lab::Result<Cbn> {
        match &self.model {
            Model::Cbn(c) => Ok(c.clone()),
            Model::Scm(s) => scm_to_cbn(s),
            Model::StCm(s) => scm_to_cbn(s),
        }
    }

    /// The causal graph over declared variables (plus regime nodes for
    /// networks).
    pub fn dag(&self) -> Dag {
        match &self.model {
            Model::Cbn(c) => c.dag().clone(),
            Model::Scm(s) => s.causal_graph(),
            Model::StCm(s) => s.observational().dag().clone(),
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn states(&self, var: &str) -> coe_lab::Result<&[String]> {
        self.labels
            .get(var)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownVariable(var.to_string()))
    }

    /// State index for a label, accepting a bare index as fallback.
    pub fn state(&self, var: &str, label: &str) -> coe_lab::Result<usize> {
        let states = self.states(var)?;
        if let Some(i) = states.iter().position(|s| s == label) {
            return Ok(i);
        }
        match label.parse::<usize>() {
            Ok(i) if i < states.len() => Ok(i),
            _ => Err(Error::InvalidQuery(format!(
                "{label:?} is not a state of {var} (states: {})",
                states.join(", ")
            ))),
        }
    }

    pub fn label(&self, var: &str, state: usize) -> String {
        self.labels
            .get(var)
            .and_then(|s| s.get(state))
            .cloned()
            .unwrap_or_else(|| state.to_string())
    }

    /// Parses `A=a,B=b`.
    pub fn assignment(&self, spec: &str) -> coe_lab::Result<Assignment> {
        let mut out = Assignment::new();
        for (var, value) in parse_pairs(spec)? {
            let s = self.state(&var, &value)?;
            out.insert(var, s);
        }
        Ok(out)
    }

    pub fn labelled(&self, a: &Assignment) -> BTreeMap<String, String> {
        a.iter().map(|(k, &v)| (k.clone(), self.label(k, v))).collect()
    }
}

/// Splits `A=a,B=b` into pairs.
pub fn parse_pairs(spec: &str) -> coe_lab::Result<Vec<(String, String)>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidQuery(format!("expected NAME=VALUE, got {kv:?}")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Splits a comma-separated name list.
pub fn parse_names(spec: &str) -> Vec<String> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn builder(vars: &[Variable], cpts: &[CptSpec]) -> CbnBuilder {
    let mut b = CbnBuilder::new();
    for v in vars {
        b = b.variable(v.clone());
    }
    for c in cpts {
        let ps: Vec<&str> = c.parents.iter().map(String::as_str).collect();
        b = b.cpt(&c.node, &ps, c.table.clone());
    }
    b
}

/// Declared edges must be exactly the parent relations of the mechanisms.
fn check_edges(
    labels: &BTreeMap<String, Vec<String>>,
    edges: &[EdgeSpec],
    parents: &[(String, String)],
) -> coe_lab::Result<()> {
    let mut dag = Dag::new();
    for n in labels.keys() {
        dag.add_node(n);
    }
    for e in edges {
        for n in [&e.from, &e.to] {
            if !labels.contains_key(n) {
                return Err(Error::UnknownVariable(n.clone()));
            }
        }
        dag.add_edge(&e.from, &e.to, e.style)?;
    }
    dag.validate()?;
    let declared: BTreeSet<(String, String)> =
        edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect();
    let implied: BTreeSet<(String, String)> = parents.iter().cloned().collect();
    if let Some((a, b)) = declared.difference(&implied).next() {
        return Err(Error::InvalidModel(format!(
            "edge {a} -> {b} is not reflected in the mechanism of {b}"
        )));
    }
    if let Some((a, b)) = implied.difference(&declared).next() {
        return Err(Error::InvalidModel(format!(
            "mechanism of {b} depends on {a} but edge {a} -> {b} is not declared"
        )));
    }
    Ok(())
}

/// Reads a model file; `bail!`s on I/O problems with context.
pub fn load(path: &Path) -> anyhow::Result<Loaded> {
    if !path.exists() {
        bail!(Error::InvalidInput(format!("{} does not exist", path.display())));
    }
    Loaded::from_path(path)
}
