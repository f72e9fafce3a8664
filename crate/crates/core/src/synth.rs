//! Deterministic random models and synthetic data.
//!
//! All randomness comes from `ChaCha8Rng` (crate `rand_chacha` 0.3) seeded
//! with `seed_from_u64`, so a seed reproduces the same output on every
//! platform. Probability vectors are drawn from a flat Dirichlet by
//! normalizing independent standard exponentials.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::{Margins, MediatorData, StratifiedData};
use crate::cbn::{Cbn, CbnBuilder};
use crate::error::{Error, Result};
use crate::factor::{Assignment, Factor, Variable};
use crate::iv::{Compliance, LinearSemParams, PrincipalStrata, ResponseType};
use crate::scm::{Scm, StCm, StructuralEquation};

/// The generator behind every function in this module.
pub type SynthRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SynthRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const MAX_NODES: usize = 8;
pub const MAX_STATES: usize = 4;

/// A draw from the flat Dirichlet on `k` points.
pub fn dirichlet(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Size of a random model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub nodes: usize,
    /// Each variable gets between 2 and `max_states` states.
    pub max_states: usize,
    pub edge_prob: f64,
    pub max_parents: usize,
    /// Add a regime indicator to every node.
    pub regimes: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            nodes: 4,
            max_states: 2,
            edge_prob: 0.5,
            max_parents: 3,
            regimes: false,
        }
    }
}

impl Shape {
    pub fn binary(nodes: usize) -> Self {
        Self {
            nodes,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1..=MAX_NODES).contains(&self.nodes) || !(2..=MAX_STATES).contains(&self.max_states) {
            return Err(Error::InvalidInput(format!(
                "random models support 1..={MAX_NODES} nodes with 2..={MAX_STATES} states"
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::InvalidInput("edge probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Node names `A, B, C, …` in topological order.
pub fn node_names(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
}

fn random_structure(rng: &mut impl Rng, shape: &Shape) -> (Vec<Variable>, Vec<Vec<usize>>) {
    let names = node_names(shape.nodes);
    let vars: Vec<Variable> = names
        .iter()
        .map(|n| Variable::new(n.clone(), rng.gen_range(2..=shape.max_states)).expect("card ≥ 2"))
        .collect();
    let parents = (0..shape.nodes)
        .map(|j| {
            let mut ps: Vec<usize> = (0..j).filter(|_| rng.gen_bool(shape.edge_prob)).collect();
            ps.truncate(shape.max_parents);
            ps
        })
        .collect();
    (vars, parents)
}

fn random_cpt_table(rng: &mut impl Rng, card: usize, parent_configs: usize) -> Vec<f64> {
    // row-major over parents then node: one Dirichlet column per config
    (0..parent_configs).flat_map(|_| dirichlet(rng, card)).collect()
}

fn random_spec(rng: &mut impl Rng, shape: &Shape) -> CbnBuilder {
    let (vars, parents) = random_structure(rng, shape);
    let mut b = CbnBuilder::new();
    for v in &vars {
        b = b.variable(v.clone());
    }
    for (j, v) in vars.iter().enumerate() {
        let ps: Vec<&str> = parents[j].iter().map(|&i| vars[i].name()).collect();
        let configs: usize = parents[j].iter().map(|&i| vars[i].card()).product();
        b = b.cpt(v.name(), &ps, random_cpt_table(rng, v.card(), configs));
        if shape.regimes {
            b = b.regime(v.name());
        }
    }
    b
}

/// A random network with Dirichlet CPTs.
pub fn random_cbn(shape: &Shape, seed: u64) -> Result<Cbn> {
    shape.validate()?;
    random_spec(&mut rng(seed), shape).build()
}

/// A random stochastic causal model. Root nodes are exogenous and shared
/// across worlds.
pub fn random_stcm(shape: &Shape, seed: u64) -> Result<StCm> {
    shape.validate()?;
    let spec = random_spec(&mut rng(seed), &Shape { regimes: false, ..*shape });
    let cbn = spec.clone().build()?;
    let roots: Vec<String> = cbn
        .stochastic_nodes()
        .filter(|n| cbn.dag().parents(n).next().is_none())
        .map(String::from)
        .collect();
    StCm::new(spec, roots.iter().map(String::as_str))
}

/// A random deterministic model: every endogenous node `V` has its own
/// exogenous `U_V`, independent across nodes, and a uniformly random
/// response table.
pub fn random_scm(shape: &Shape, seed: u64) -> Result<Scm> {
    shape.validate()?;
    let mut rng = rng(seed);
    let (vars, parents) = random_structure(&mut rng, shape);
    let mut all = vars.clone();
    let mut exo = Factor::unit();
    let mut eqs = Vec::new();
    for (j, v) in vars.iter().enumerate() {
        let u = Variable::new(format!("U_{}", v.name()), rng.gen_range(2..=shape.max_states))?;
        let pu = Factor::new(vec![u.clone()], dirichlet(&mut rng, u.card()))?;
        exo = exo.multiply(&pu)?;
        let ps: Vec<&str> = parents[j].iter().map(|&i| vars[i].name()).collect();
        let rows: usize = parents[j].iter().map(|&i| vars[i].card()).product::<usize>() * u.card();
        let table = (0..rows).map(|_| rng.gen_range(0..v.card())).collect();
        eqs.push(StructuralEquation::new(v.name(), &ps, &[u.name()], table));
        all.push(u);
    }
    Scm::new(all, exo, eqs)
}

/// Binary exposure X and outcome Y with a shared background U (2–4 states)
/// acting on Y only. X is independent of U, so exposure is ignorable.
pub fn random_pc_stcm(seed: u64) -> Result<StCm> {
    let mut rng = rng(seed);
    let ku = rng.gen_range(2..=4);
    let u = Variable::new("U", ku)?;
    let mut y_table = Vec::new();
    for _ in 0..2 * ku {
        let p = rng.gen::<f64>();
        y_table.extend([1.0 - p, p]);
    }
    let px = 0.05 + 0.9 * rng.gen::<f64>();
    let spec = CbnBuilder::new()
        .variable(u)
        .binary("X")
        .binary("Y")
        .cpt("U", &[], dirichlet(&mut rng, ku))
        .cpt("X", &[], vec![1.0 - px, px])
        .cpt("Y", &["X", "U"], y_table);
    StCm::new(spec, ["U"])
}

/// Instrumental-variable model: randomized binary Z, confounder U with
/// 2–8 states, `X = f(Z, U)`, `Y = g(X, U)`.
pub fn random_iv_scm(seed: u64) -> Result<Scm> {
    let mut rng = rng(seed);
    let ku = rng.gen_range(2..=8);
    let u = Variable::new("U", ku)?;
    let pz = 0.1 + 0.8 * rng.gen::<f64>();
    let exo = Factor::new(vec![Variable::binary("Z")], vec![1.0 - pz, pz])?
        .multiply(&Factor::new(vec![u.clone()], dirichlet(&mut rng, ku))?)?;
    let fx = (0..2 * ku).map(|_| rng.gen_range(0..2)).collect();
    let fy = (0..2 * ku).map(|_| rng.gen_range(0..2)).collect();
    Scm::new(
        vec![Variable::binary("Z"), u, Variable::binary("X"), Variable::binary("Y")],
        exo,
        vec![
            StructuralEquation::new("X", &["Z"], &["U"], fx),
            StructuralEquation::new("Y", &["X"], &["U"], fy),
        ],
    )
}

/// Dirichlet over the 16 response types; with `monotone`, defiers get no
/// mass.
pub fn random_iv_strata(monotone: bool, seed: u64) -> Result<PrincipalStrata> {
    let mut rng = rng(seed);
    let allowed: Vec<usize> = ResponseType::all()
        .filter(|t| !monotone || t.compliance() != Compliance::Defier)
        .map(|t| t.index())
        .collect();
    let w = dirichlet(&mut rng, allowed.len());
    let mut mass = [0.0; 16];
    for (i, p) in allowed.into_iter().zip(w) {
        mass[i] = p;
    }
    PrincipalStrata::new(mass)
}

/// Uniform response rates, with P(Y=1|X=1) kept away from zero.
pub fn random_margins(seed: u64) -> Margins {
    let mut rng = rng(seed);
    Margins {
        p_y1_given_x1: 1e-3 + (1.0 - 1e-3) * rng.gen::<f64>(),
        p_y1_given_x0: rng.gen::<f64>(),
        p_x1: None,
        p_y1_do_x0: None,
    }
}

/// A random full joint over (S, X, Y) with `strata` covariate levels.
pub fn random_stratified(strata: usize, seed: u64) -> Result<StratifiedData> {
    let mut rng = rng(seed);
    let ps = dirichlet(&mut rng, strata);
    let labels: Vec<String> = (0..strata).map(|s| s.to_string()).collect();
    let rows = (0..strata)
        .map(|s| {
            (
                labels[s].as_str(),
                ps[s],
                0.05 + 0.9 * rng.gen::<f64>(),
                rng.gen::<f64>(),
                rng.gen::<f64>(),
            )
        })
        .collect();
    StratifiedData::from_joint(rows)
}

pub fn random_mediator(seed: u64) -> MediatorData {
    let mut rng = rng(seed);
    MediatorData {
        p_m1_given_x0: rng.gen(),
        p_m1_given_x1: rng.gen(),
        p_y1_given_m0: rng.gen(),
        p_y1_given_m1: rng.gen(),
        observed: None,
    }
}

/// Rows of state indices with named columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Fraction of rows matching every entry of `event`.
    pub fn frequency(&self, event: &Assignment) -> Result<f64> {
        let idx: Vec<(usize, usize)> = event
            .iter()
            .map(|(k, &v)| {
                self.column(k)
                    .map(|c| (c, v))
                    .ok_or_else(|| Error::UnknownVariable(k.clone()))
            })
            .collect::<Result<_>>()?;
        let hits = self
            .rows
            .iter()
            .filter(|r| idx.iter().all(|&(c, v)| r[c] == v))
            .count();
        Ok(hits as f64 / self.rows.len().max(1) as f64)
    }

    /// Number of rows per distinct assignment.
    pub fn counts(&self) -> BTreeMap<Vec<usize>, usize> {
        let mut m = BTreeMap::new();
        for r in &self.rows {
            *m.entry(r.clone()).or_insert(0) += 1;
        }
        m
    }
}

fn categorical(rng: &mut impl Rng, p: &[f64]) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in p.iter().enumerate() {
        acc += w;
        if r < acc {
            return i;
        }
    }
    // rounding left r above the total: take the last state with mass
    p.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Ancestral samples from the observational regime (all regime indicators
/// idle). Columns are the stochastic nodes in name order.
pub fn sample(model: &Cbn, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let columns: Vec<String> = model.stochastic_nodes().map(String::from).collect();
    let col_of: BTreeMap<&str, usize> = columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    // per node: parent columns, cards, and a conditional table per config
    struct Plan {
        col: usize,
        parents: Vec<usize>,
        cards: Vec<usize>,
        tables: Vec<Vec<f64>>,
    }
    let mut plans = Vec::new();
    for node in model.topological_order() {
        let Some(&col) = col_of.get(node.as_str()) else { continue };
        let cpt = model
            .cpt(&node)
            .ok_or_else(|| Error::InvalidModel(format!("no CPT for {node}")))?;
        let card = model.variable(&node)?.card();
        let mut fixed = Assignment::new();
        let mut parents = Vec::new();
        let mut cards = Vec::new();
        for v in cpt.scope() {
            if v.name() == node {
                continue;
            }
            if v.is_regime() {
                fixed.insert(v.name().to_string(), v.idle_state());
            } else if let Some(&pc) = col_of.get(v.name()) {
                parents.push(pc);
                cards.push(v.card());
            }
        }
        let configs: usize = cards.iter().product();
        let mut tables = Vec::with_capacity(configs);
        for k in 0..configs {
            let mut a = fixed.clone();
            let mut rem = k;
            for (i, &pc) in parents.iter().enumerate().rev() {
                a.insert(columns[pc].clone(), rem % cards[i]);
                rem /= cards[i];
            }
            let row: Vec<f64> = (0..card)
                .map(|s| {
                    a.insert(node.clone(), s);
                    cpt.get(&a)
                })
                .collect();
            tables.push(row);
        }
        plans.push(Plan { col, parents, cards, tables });
    }
    let mut rng = rng(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![0; columns.len()];
        for p in &plans {
            let k = p
                .parents
                .iter()
                .zip(&p.cards)
                .fold(0, |k, (&c, &card)| k * card + row[c]);
            row[p.col] = categorical(&mut rng, &p.tables[k]);
        }
        rows.push(row);
    }
    Ok(Dataset { columns, rows })
}

/// Samples of a deterministic model: exogenous draws pushed through the
/// equations. Columns are all variables in name order.
pub fn sample_scm(model: &Scm, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let support: Vec<(Assignment, f64)> = model.exogenous_support().collect();
    let weights: Vec<f64> = support.iter().map(|(_, p)| *p).collect();
    let columns: Vec<String> = model.variables().keys().cloned().collect();
    let mut rng = rng(seed);
    let rows = (0..n)
        .map(|_| {
            let (u, _) = &support[categorical(&mut rng, &weights)];
            let v = model.solve(u, &Assignment::new());
            columns.iter().map(|c| v[c]).collect()
        })
        .collect();
    Ok(Dataset { columns, rows })
}

/// Draws `(z, x, y)` from the linear system with `Z ~ N(0, var_z)` and
/// jointly normal residuals.
pub fn simulate_linear_sem(p: &LinearSemParams, n: usize, seed: u64) -> Result<[Vec<f64>; 3]> {
    p.validate()?;
    let c = p.residual_cov;
    // Cholesky factor of the residual covariance
    let l11 = c[0][0].sqrt();
    let l21 = if l11 > 0.0 { c[1][0] / l11 } else { 0.0 };
    let l22 = (c[1][1] - l21 * l21).max(0.0).sqrt();
    let sz = p.var_z.sqrt();
    let mut rng = rng(seed);
    let (mut zs, mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let e: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let z = sz * e[0];
        let ux = l11 * e[1];
        let uy = l21 * e[1] + l22 * e[2];
        let x = p.alpha0 + p.alpha1 * z + ux;
        let y = p.beta0 + p.beta1 * x + uy;
        zs.push(z);
        xs.push(x);
        ys.push(y);
    }
    Ok([zs, xs, ys])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbn::Query;
    use crate::factor::assignment;

    #[test]
    fn same_seed_same_model() {
        let shape = Shape {
            nodes: 5,
            max_states: 3,
            ..Default::default()
        };
        let a = random_cbn(&shape, 7).unwrap();
        let b = random_cbn(&shape, 7).unwrap();
        assert_eq!(a.cpts(), b.cpts());
        let c = random_cbn(&shape, 8).unwrap();
        assert_ne!(a.cpts(), c.cpts());
    }

    #[test]
    fn generators_produce_valid_models() {
        for seed in 0..50 {
            let shape = Shape {
                nodes: 1 + (seed as usize % 8),
                max_states: 2 + (seed as usize % 3),
                regimes: seed % 2 == 0,
                ..Default::default()
            };
            random_cbn(&shape, seed).unwrap();
            random_scm(&shape, seed).unwrap();
            random_stcm(&shape, seed).unwrap();
            random_iv_scm(seed).unwrap();
            random_pc_stcm(seed).unwrap();
        }
        assert!(random_cbn(&Shape::binary(9), 0).is_err());
    }

    #[test]
    fn monotone_strata_have_no_defiers() {
        for seed in 0..20 {
            assert!(random_iv_strata(true, seed).unwrap().is_monotone());
        }
        assert!(!random_iv_strata(false, 3).unwrap().is_monotone());
    }

    #[test]
    fn dirichlet_is_on_the_simplex() {
        let mut r = rng(1);
        let p = dirichlet(&mut r, 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn single_sample_and_determinism() {
        let m = random_cbn(&Shape::binary(3), 2).unwrap();
        let d = sample(&m, 1, 5).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.columns, ["A", "B", "C"]);
        assert_eq!(sample(&m, 100, 5).unwrap(), sample(&m, 100, 5).unwrap());
        assert!(sample(&m, 0, 5).is_err());
    }

    #[test]
    fn deterministic_model_gives_identical_rows() {
        let m = CbnBuilder::new()
            .binary("X")
            .binary("Y")
            .cpt("X", &[], vec![0.0, 1.0])
            .cpt("Y", &["X"], vec![1.0, 0.0, 0.0, 1.0])
            .regime("X")
            .build()
            .unwrap();
        let d = sample(&m, 50, 1).unwrap();
        assert!(d.rows.iter().all(|r| r == &vec![1, 1]));
    }

    #[test]
    fn empirical_conditional_converges() {
        let m = CbnBuilder::new()
            .binary("Z")
            .binary("X")
            .binary("Y")
            .cpt("Z", &[], vec![0.6, 0.4])
            .cpt("X", &["Z"], vec![0.7, 0.3, 0.2, 0.8])
            .cpt("Y", &["X", "Z"], vec![0.9, 0.1, 0.6, 0.4, 0.5, 0.5, 0.25, 0.75])
            .build()
            .unwrap();
        let truth = m
            .joint_query(&Query::new(["Y"]).given("X", 1))
            .unwrap()
            .values()[1];
        let d = sample(&m, 100_000, 11).unwrap();
        let est = d.frequency(&assignment([("X", 1), ("Y", 1)])).unwrap()
            / d.frequency(&assignment([("X", 1)])).unwrap();
        assert!((est - truth).abs() < 0.01, "{est} vs {truth}");
    }

    #[test]
    fn scm_samples_follow_equations() {
        let m = random_iv_scm(4).unwrap();
        let d = sample_scm(&m, 200, 9).unwrap();
        assert_eq!(d.columns, ["U", "X", "Y", "Z"]);
        for r in &d.rows {
            let u: Assignment = assignment([("U", r[0]), ("Z", r[3])]);
            let v = m.solve(&u, &Assignment::new());
            assert_eq!((v["X"], v["Y"]), (r[1], r[2]));
        }
    }
}
