//! Directed acyclic graphs, moralization, and d-separation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dashed edges are the ones drawn as absent under an interventional regime.
/// The tag is metadata only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeStyle {
    #[default]
    Solid,
    Dashed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dag {
    nodes: BTreeSet<String>,
    parents: BTreeMap<String, BTreeSet<String>>,
    styles: BTreeMap<(String, String), EdgeStyle>,
}

impl Dag {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from nodes and solid edges; edge endpoints are added as
    /// nodes. Acyclicity is not checked here, see [`Dag::validate`].
    pub fn from_edges<'a>(
        nodes: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut g = Self::new();
        for n in nodes {
            g.add_node(n);
        }
        for (a, b) in edges {
            g.add_edge(a, b, EdgeStyle::Solid)?;
        }
        Ok(g)
    }

    pub fn add_node(&mut self, name: &str) {
        self.nodes.insert(name.to_string());
        self.parents.entry(name.to_string()).or_default();
    }

    pub fn add_edge(&mut self, from: &str, to: &str, style: EdgeStyle) -> Result<()> {
        if from == to {
            return Err(Error::InvalidModel(format!("self-loop on {from}")));
        }
        self.add_node(from);
        self.add_node(to);
        let ps = self.parents.get_mut(to).expect("node just added");
        if !ps.insert(from.to_string()) {
            return Err(Error::InvalidModel(format!("duplicate edge {from} -> {to}")));
        }
        self.styles.insert((from.to_string(), to.to_string()), style);
        Ok(())
    }

    pub fn remove_edge(&mut self, from: &str, to: &str) -> bool {
        self.styles.remove(&(from.to_string(), to.to_string()));
        self.parents
            .get_mut(to)
            .is_some_and(|ps| ps.remove(from))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.contains(name)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edges as `(parent, child)` pairs, sorted.
    pub fn edges(&self) -> Vec<(String, String)> {
        self.styles.keys().cloned().collect()
    }

    pub fn edge_style(&self, from: &str, to: &str) -> Option<EdgeStyle> {
        self.styles.get(&(from.to_string(), to.to_string())).copied()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.parents.get(to).is_some_and(|ps| ps.contains(from))
    }

    pub fn parents(&self, name: &str) -> impl Iterator<Item = &str> {
        self.parents
            .get(name)
            .into_iter()
            .flat_map(|ps| ps.iter().map(String::as_str))
    }

    pub fn children<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.parents
            .iter()
            .filter(move |(_, ps)| ps.contains(name))
            .map(|(c, _)| c.as_str())
    }

    /// Topological order with lexicographic tie-breaking, or the offending cycle.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut indegree: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .map(|n| (n.as_str(), self.parents[n].len()))
            .collect();
        let mut ready: BTreeSet<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_first() {
            order.push(n.to_string());
            for c in self.children(n) {
                let d = indegree.get_mut(c).expect("child is a node");
                *d -= 1;
                if *d == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == self.nodes.len() {
            Ok(order)
        } else {
            let done: BTreeSet<&str> = order.iter().map(String::as_str).collect();
            Err(Error::CycleDetected(self.find_cycle(&done)))
        }
    }

    fn find_cycle(&self, acyclic: &BTreeSet<&str>) -> Vec<String> {
        // every remaining node has a remaining parent; walk parents until a repeat
        let start = self
            .nodes
            .iter()
            .find(|n| !acyclic.contains(n.as_str()))
            .expect("a cycle exists");
        let mut path = vec![start.clone()];
        loop {
            let cur = path.last().expect("non-empty");
            let next = self.parents[cur]
                .iter()
                .find(|p| !acyclic.contains(p.as_str()))
                .expect("remaining node has a remaining parent")
                .clone();
            if let Some(i) = path.iter().position(|n| *n == next) {
                let mut cycle: Vec<String> = path[i..].to_vec();
                cycle.reverse();
                cycle.push(cycle[0].clone());
                return cycle;
            }
            path.push(next);
        }
    }

    /// The given nodes together with all their ancestors.
    pub fn ancestral_set<'a>(&self, of: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<String> = of.into_iter().map(str::to_string).collect();
        while let Some(n) = stack.pop() {
            if out.insert(n.clone()) {
                stack.extend(self.parents(&n).map(str::to_string));
            }
        }
        out
    }

    pub fn descendants(&self, of: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![of.to_string()];
        while let Some(n) = stack.pop() {
            for c in self.children(&n) {
                if out.insert(c.to_string()) {
                    stack.push(c.to_string());
                }
            }
        }
        out
    }

    pub fn induced_subgraph(&self, keep: &BTreeSet<String>) -> Dag {
        let mut g = Dag::new();
        for n in keep {
            g.add_node(n);
        }
        for ((a, b), style) in &self.styles {
            if keep.contains(a) && keep.contains(b) {
                g.add_edge(a, b, *style).expect("edges of a valid graph");
            }
        }
        g
    }

    /// Undirected graph obtained by marrying co-parents and dropping directions.
    pub fn moralize(&self) -> UndirectedGraph {
        let mut u = UndirectedGraph::with_nodes(self.nodes.iter().cloned());
        for (child, ps) in &self.parents {
            for p in ps {
                u.add_edge(p, child);
            }
            let ps: Vec<&String> = ps.iter().collect();
            for (i, a) in ps.iter().enumerate() {
                for b in &ps[i + 1..] {
                    u.add_edge(a, b);
                }
            }
        }
        u
    }

    fn check_sets(&self, sets: [&BTreeSet<String>; 3]) -> Result<()> {
        for s in sets {
            if let Some(n) = s.iter().find(|n| !self.contains(n)) {
                return Err(Error::UnknownVariable(n.clone()));
            }
        }
        let [a, b, c] = sets;
        if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
            return Err(Error::InvalidQuery(
                "d-separation sets must be pairwise disjoint".into(),
            ));
        }
        Ok(())
    }

    /// Whether `a` and `b` are d-separated by `given`, decided by separation
    /// in the moral graph of the ancestral set of `a ∪ b ∪ given`.
    pub fn d_separated(
        &self,
        a: &BTreeSet<String>,
        b: &BTreeSet<String>,
        given: &BTreeSet<String>,
    ) -> Result<bool> {
        self.check_sets([a, b, given])?;
        if a.is_empty() || b.is_empty() {
            return Ok(true);
        }
        let anc = self.ancestral_set(a.iter().chain(b).chain(given).map(String::as_str));
        let moral = self.induced_subgraph(&anc).moralize();
        Ok(!moral.connected_avoiding(a, b, given))
    }

    /// Path-based d-separation: enumerates every simple path in the skeleton
    /// and checks the blocking rules directly. Exponential; intended for small
    /// graphs as an independent check of [`Dag::d_separated`].
    pub fn d_separated_by_paths(
        &self,
        a: &BTreeSet<String>,
        b: &BTreeSet<String>,
        given: &BTreeSet<String>,
    ) -> Result<bool> {
        self.check_sets([a, b, given])?;
        let skeleton = self.moralize_skeleton();
        let descendants: BTreeMap<&str, BTreeSet<String>> =
            self.nodes.iter().map(|n| (n.as_str(), self.descendants(n))).collect();
        let collider_open = |v: &str| {
            given.contains(v) || descendants[v].iter().any(|d| given.contains(d))
        };
        for start in a {
            let mut path = vec![start.clone()];
            if self.open_path_exists(&skeleton, &mut path, b, given, &collider_open) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn moralize_skeleton(&self) -> UndirectedGraph {
        let mut u = UndirectedGraph::with_nodes(self.nodes.iter().cloned());
        for (a, b) in self.styles.keys() {
            u.add_edge(a, b);
        }
        u
    }

    fn open_path_exists(
        &self,
        skeleton: &UndirectedGraph,
        path: &mut Vec<String>,
        targets: &BTreeSet<String>,
        given: &BTreeSet<String>,
        collider_open: &dyn Fn(&str) -> bool,
    ) -> bool {
        let last = path.last().expect("non-empty path").clone();
        // check the triple ending at the second-to-last node
        if path.len() >= 3 {
            let (x, v, y) = (&path[path.len() - 3], &path[path.len() - 2], &last);
            let collider = self.has_edge(x, v) && self.has_edge(y, v);
            let blocked = if collider {
                !collider_open(v)
            } else {
                given.contains(v)
            };
            if blocked {
                return false;
            }
        }
        if path.len() >= 2 && targets.contains(&last) {
            return true;
        }
        let next: Vec<String> = skeleton.neighbors(&last).map(str::to_string).collect();
        for n in next {
            if path.contains(&n) {
                continue;
            }
            path.push(n);
            let found = self.open_path_exists(skeleton, path, targets, given, collider_open);
            path.pop();
            if found {
                return true;
            }
        }
        false
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UndirectedGraph {
    nodes: BTreeSet<String>,
    /// Each edge stored once as `(min, max)`.
    edges: BTreeSet<(String, String)>,
}

impl UndirectedGraph {
    pub fn with_nodes(nodes: impl IntoIterator<Item = String>) -> Self {
        Self {
            nodes: nodes.into_iter().collect(),
            edges: BTreeSet::new(),
        }
    }

    pub fn add_edge(&mut self, a: &str, b: &str) {
        if a == b {
            return;
        }
        self.nodes.insert(a.to_string());
        self.nodes.insert(b.to_string());
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        self.edges.insert((x.to_string(), y.to_string()));
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        self.edges.contains(&(x.to_string(), y.to_string()))
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn neighbors<'a>(&'a self, n: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges.iter().filter_map(move |(a, b)| {
            if a == n {
                Some(b.as_str())
            } else if b == n {
                Some(a.as_str())
            } else {
                None
            }
        })
    }

    /// Is some node of `from` connected to some node of `to` once `removed`
    /// is deleted?
    pub fn connected_avoiding(
        &self,
        from: &BTreeSet<String>,
        to: &BTreeSet<String>,
        removed: &BTreeSet<String>,
    ) -> bool {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        for s in from {
            if !removed.contains(s) && seen.insert(s) {
                queue.push_back(s);
            }
        }
        while let Some(n) = queue.pop_front() {
            if to.contains(n) {
                return true;
            }
            for m in self.neighbors(n) {
                if !removed.contains(m) && seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        false
    }
}

/// A DAG whose node set includes regime indicators, each a parentless node
/// with a single stochastic child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedDag {
    dag: Dag,
    /// regime node -> target
    regimes: BTreeMap<String, String>,
}

impl AugmentedDag {
    pub fn new(dag: Dag, regimes: BTreeMap<String, String>) -> Result<Self> {
        dag.validate()?;
        for (f, target) in &regimes {
            if !dag.contains(f) || !dag.contains(target) {
                return Err(Error::InvalidModel(format!(
                    "regime {f} or its target {target} is not a graph node"
                )));
            }
            if dag.parents(f).next().is_some() {
                return Err(Error::InvalidModel(format!("regime node {f} has parents")));
            }
            let children: Vec<&str> = dag.children(f).collect();
            if children != [target.as_str()] {
                return Err(Error::InvalidModel(format!(
                    "regime node {f} must have exactly one child {target}, has {children:?}"
                )));
            }
        }
        Ok(Self { dag, regimes })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn regimes(&self) -> &BTreeMap<String, String> {
        &self.regimes
    }

    pub fn regime_of(&self, target: &str) -> Option<&str> {
        self.regimes
            .iter()
            .find(|(_, t)| *t == target)
            .map(|(f, _)| f.as_str())
    }

    pub fn is_regime(&self, node: &str) -> bool {
        self.regimes.contains_key(node)
    }
}

/// Collects names into a set; convenience for d-separation calls.
pub fn node_set<'a>(names: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    names.into_iter().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv_graph() -> Dag {
        Dag::from_edges(
            ["Z", "U", "X", "Y"],
            [("Z", "X"), ("U", "X"), ("X", "Y"), ("U", "Y")],
        )
        .unwrap()
    }

    #[test]
    fn validate_orders_iv_graph() {
        assert_eq!(iv_graph().validate().unwrap(), ["U", "Z", "X", "Y"]);
        let single = Dag::from_edges(["A"], []).unwrap();
        assert_eq!(single.validate().unwrap(), ["A"]);
    }

    #[test]
    fn validate_reports_cycle() {
        let g = Dag::from_edges(["A", "B"], [("A", "B"), ("B", "A")]).unwrap();
        match g.validate() {
            Err(Error::CycleDetected(c)) => {
                assert_eq!(c.first(), c.last());
                assert_eq!(c.len(), 3);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        let mut g = Dag::new();
        assert!(g.add_edge("A", "A", EdgeStyle::Solid).is_err());
        g.add_edge("A", "B", EdgeStyle::Solid).unwrap();
        assert!(g.add_edge("A", "B", EdgeStyle::Dashed).is_err());
    }

    #[test]
    fn iv_graph_separations() {
        let g = iv_graph();
        let s = |v: &[&str]| node_set(v.iter().copied());
        for f in [Dag::d_separated, Dag::d_separated_by_paths] {
            assert!(f(&g, &s(&["Z"]), &s(&["U"]), &s(&[])).unwrap());
            assert!(f(&g, &s(&["Y"]), &s(&["Z"]), &s(&["X", "U"])).unwrap());
            // conditioning on the collider X opens Z -> X <- U -> Y
            assert!(!f(&g, &s(&["Y"]), &s(&["Z"]), &s(&["X"])).unwrap());
            assert!(!f(&g, &s(&["Z"]), &s(&["U"]), &s(&["X"])).unwrap());
        }
    }

    #[test]
    fn d_separation_rejects_overlap_and_unknown() {
        let g = iv_graph();
        let s = |v: &[&str]| node_set(v.iter().copied());
        assert!(g.d_separated(&s(&["Z"]), &s(&["Z"]), &s(&[])).is_err());
        assert!(matches!(
            g.d_separated(&s(&["Q"]), &s(&["Y"]), &s(&[])),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn moralize_iv_graph() {
        let m = iv_graph().moralize();
        let expected: BTreeSet<(String, String)> =
            [("X", "Z"), ("U", "X"), ("X", "Y"), ("U", "Y"), ("U", "Z")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
        assert_eq!(m.edges(), &expected);
    }

    #[test]
    fn moralize_trivial_graphs() {
        let g = Dag::from_edges(["A", "B", "C"], []).unwrap();
        assert!(g.moralize().edges().is_empty());
        let chain = Dag::from_edges(["A", "B", "C"], [("A", "B"), ("B", "C")]).unwrap();
        let m = chain.moralize();
        assert_eq!(m.edges().len(), 2);
        assert!(m.has_edge("A", "B") && m.has_edge("B", "C"));
    }

    /// Every DAG on `n` labelled nodes whose edges respect the order 0..n.
    fn all_ordered_dags(n: usize) -> impl Iterator<Item = Dag> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
        (0u32..1 << pairs.len()).map(move |mask| {
            let mut g = Dag::new();
            for nm in &names {
                g.add_node(nm);
            }
            for (k, (i, j)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    g.add_edge(&names[*i], &names[*j], EdgeStyle::Solid).unwrap();
                }
            }
            g
        })
    }

    /// Assigns each node to A (1), B (2), C (3), or nothing (0).
    fn all_triples(n: usize) -> impl Iterator<Item = [BTreeSet<String>; 3]> {
        (0..4usize.pow(n as u32)).filter_map(move |code| {
            let mut sets: [BTreeSet<String>; 3] = Default::default();
            let mut c = code;
            for i in 0..n {
                let role = c % 4;
                c /= 4;
                if role > 0 {
                    sets[role - 1].insert(format!("V{i}"));
                }
            }
            (!sets[0].is_empty() && !sets[1].is_empty()).then_some(sets)
        })
    }

    #[test]
    fn moral_and_path_criteria_agree_exhaustively_up_to_four_nodes() {
        for n in 1..=4 {
            for g in all_ordered_dags(n) {
                for [a, b, c] in all_triples(n) {
                    let moral = g.d_separated(&a, &b, &c).unwrap();
                    let paths = g.d_separated_by_paths(&a, &b, &c).unwrap();
                    assert_eq!(moral, paths, "{g:?} {a:?} {b:?} {c:?}");
                    assert_eq!(moral, g.d_separated(&b, &a, &c).unwrap());
                }
            }
        }
    }

    #[test]
    fn augmented_dag_checks_regimes() {
        let mut g = iv_graph();
        g.add_edge("F_X", "X", EdgeStyle::Solid).unwrap();
        let regimes: BTreeMap<String, String> = [("F_X".to_string(), "X".to_string())].into();
        let aug = AugmentedDag::new(g.clone(), regimes.clone()).unwrap();
        assert_eq!(aug.regime_of("X"), Some("F_X"));
        // F_X is marginally independent of Z
        let s = |v: &[&str]| node_set(v.iter().copied());
        assert!(aug.dag().d_separated(&s(&["F_X"]), &s(&["Z"]), &s(&[])).unwrap());
        g.add_edge("F_X", "Y", EdgeStyle::Solid).unwrap();
        assert!(AugmentedDag::new(g, regimes).is_err());
    }
}
