//! Discrete Bayesian networks with hard and soft evidence.
//!
//! Inference is exact variable elimination. [`enumerate_joint`] computes the
//! full joint by brute force and serves as the reference for small networks.
//!
//! Soft evidence is only accepted on root nodes, where it replaces the prior.
//! For a root with no other evidence this is the exact Jeffrey update.

mod enumerate;
mod factor;
pub mod risk;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use enumerate::{enumerate_joint, JointDistribution, ENUMERATION_CAP};
use factor::Factor;

/// Tolerance for row and evidence normalisation.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("node `{0}` needs at least two states")]
    TooFewStates(String),
    #[error("node `{node}` lists state `{state}` twice")]
    DuplicateState { node: String, state: String },
    #[error("node `{node}` has unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("cycle through nodes {0:?}")]
    Cycle(Vec<String>),
    #[error("no table for node `{0}`")]
    MissingTable(String),
    #[error("more than one table for node `{0}`")]
    DuplicateTable(String),
    #[error("table for unknown node `{0}`")]
    TableForUnknownNode(String),
    #[error("table `{node}` has {found} rows, expected {expected}")]
    RowCountMismatch { node: String, expected: usize, found: usize },
    #[error("table `{node}` row {row}: {reason}")]
    NonStochasticRow { node: String, row: String, reason: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has no state `{state}`")]
    UnknownState { node: String, state: String },
    #[error("soft evidence on non-root node `{0}`")]
    SoftEvidenceOnNonRoot(String),
    #[error("soft evidence on `{node}`: {reason}")]
    InvalidSoftEvidence { node: String, reason: String },
    #[error("evidence has zero probability")]
    ImpossibleEvidence,
    #[error("joint size {size} exceeds enumeration cap {cap}")]
    TooLarge { size: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, NetworkError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub states: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
}

impl NodeSpec {
    pub fn new(name: &str, states: &[&str], parents: &[&str]) -> Self {
        NodeSpec {
            name: name.to_owned(),
            states: states.iter().map(|s| s.to_string()).collect(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Conditional table of one node. Rows enumerate parent-state combinations
/// in row-major order (the last parent varies fastest); a root has one row,
/// its prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub child: String,
    pub rows: Vec<Vec<f64>>,
}

impl ConditionalTable {
    pub fn new(child: &str, rows: Vec<Vec<f64>>) -> Self {
        ConditionalTable { child: child.to_owned(), rows }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeSpec>,
    pub tables: Vec<ConditionalTable>,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq)]
struct Node {
    name: String,
    states: Vec<String>,
    parents: Vec<usize>,
    /// Flattened rows, child state fastest.
    table: Vec<f64>,
}

/// A validated, immutable discrete Bayesian network with a target node.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteNetwork {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    topo: Vec<usize>,
    target: usize,
}

fn check_row(row: &[f64]) -> std::result::Result<(), String> {
    if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(format!("entry {v} is not a finite non-negative probability"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}

impl DiscreteNetwork {
    pub fn build(spec: &NetworkSpec) -> Result<DiscreteNetwork> {
        let mut index = HashMap::new();
        for (i, n) in spec.nodes.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(NetworkError::DuplicateNode(n.name.clone()));
            }
            if n.states.len() < 2 {
                return Err(NetworkError::TooFewStates(n.name.clone()));
            }
            for (k, s) in n.states.iter().enumerate() {
                if n.states[..k].contains(s) {
                    return Err(NetworkError::DuplicateState { node: n.name.clone(), state: s.clone() });
                }
            }
        }
        let mut parents = Vec::with_capacity(spec.nodes.len());
        for n in &spec.nodes {
            let ps = n
                .parents
                .iter()
                .map(|p| {
                    index
                        .get(p)
                        .copied()
                        .ok_or_else(|| NetworkError::UnknownParent { node: n.name.clone(), parent: p.clone() })
                })
                .collect::<Result<Vec<_>>>()?;
            parents.push(ps);
        }
        let topo = topological_order(&parents)
            .map_err(|cyclic| NetworkError::Cycle(cyclic.into_iter().map(|i| spec.nodes[i].name.clone()).collect()))?;

        let mut tables: Vec<Option<&ConditionalTable>> = vec![None; spec.nodes.len()];
        for t in &spec.tables {
            let &i = index.get(&t.child).ok_or_else(|| NetworkError::TableForUnknownNode(t.child.clone()))?;
            if tables[i].replace(t).is_some() {
                return Err(NetworkError::DuplicateTable(t.child.clone()));
            }
        }

        let mut nodes = Vec::with_capacity(spec.nodes.len());
        for (i, n) in spec.nodes.iter().enumerate() {
            let t = tables[i].ok_or_else(|| NetworkError::MissingTable(n.name.clone()))?;
            let parent_cards: Vec<usize> = parents[i].iter().map(|&p| spec.nodes[p].states.len()).collect();
            let expected: usize = parent_cards.iter().product();
            if t.rows.len() != expected {
                return Err(NetworkError::RowCountMismatch { node: n.name.clone(), expected, found: t.rows.len() });
            }
            let mut flat = Vec::with_capacity(expected * n.states.len());
            for (r, row) in t.rows.iter().enumerate() {
                let describe = || describe_row(spec, &parents[i], &parent_cards, r);
                if row.len() != n.states.len() {
                    return Err(NetworkError::NonStochasticRow {
                        node: n.name.clone(),
                        row: describe(),
                        reason: format!("has {} entries, expected {}", row.len(), n.states.len()),
                    });
                }
                check_row(row).map_err(|reason| NetworkError::NonStochasticRow {
                    node: n.name.clone(),
                    row: describe(),
                    reason,
                })?;
                flat.extend_from_slice(row);
            }
            nodes.push(Node {
                name: n.name.clone(),
                states: n.states.clone(),
                parents: parents[i].clone(),
                table: flat,
            });
        }
        let target = *index.get(&spec.target).ok_or_else(|| NetworkError::UnknownNode(spec.target.clone()))?;
        Ok(DiscreteNetwork { nodes, index, topo, target })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }

    pub fn target(&self) -> &str {
        &self.nodes[self.target].name
    }

    fn node_id(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| NetworkError::UnknownNode(name.to_owned()))
    }

    pub fn states(&self, node: &str) -> Result<&[String]> {
        Ok(&self.nodes[self.node_id(node)?].states)
    }

    pub fn parents(&self, node: &str) -> Result<Vec<&str>> {
        let n = &self.nodes[self.node_id(node)?];
        Ok(n.parents.iter().map(|&p| self.nodes[p].name.as_str()).collect())
    }

    pub fn is_root(&self, node: &str) -> Result<bool> {
        Ok(self.nodes[self.node_id(node)?].parents.is_empty())
    }

    /// The node's table as rows, parent combinations in row-major order.
    pub fn table(&self, node: &str) -> Result<ConditionalTable> {
        let n = &self.nodes[self.node_id(node)?];
        let rows = n.table.chunks(n.states.len()).map(<[f64]>::to_vec).collect();
        Ok(ConditionalTable { child: n.name.clone(), rows })
    }

    /// Conditional distribution of `node` for named parent states.
    pub fn conditional(&self, node: &str, parent_states: &[&str]) -> Result<Vec<f64>> {
        let id = self.node_id(node)?;
        let n = &self.nodes[id];
        if parent_states.len() != n.parents.len() {
            return Err(NetworkError::UnknownState { node: node.to_owned(), state: parent_states.join(",") });
        }
        let mut row = 0;
        for (&p, s) in n.parents.iter().zip(parent_states) {
            let pn = &self.nodes[p];
            let k = state_index(pn, s)?;
            row = row * pn.states.len() + k;
        }
        let c = n.states.len();
        Ok(n.table[row * c..(row + 1) * c].to_vec())
    }

    pub(crate) fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    pub(crate) fn cardinality(&self, node: usize) -> usize {
        self.nodes[node].states.len()
    }

    /// `P(node = state | parents)` for a full assignment indexed by node id.
    pub(crate) fn local_probability(&self, node: usize, assignment: &[usize], priors: &[Option<Vec<f64>>]) -> f64 {
        let n = &self.nodes[node];
        if let Some(prior) = &priors[node] {
            return prior[assignment[node]];
        }
        let mut row = 0;
        for &p in &n.parents {
            row = row * self.nodes[p].states.len() + assignment[p];
        }
        n.table[row * n.states.len() + assignment[node]]
    }

    /// Resolves evidence into per-node hard state indices and soft priors.
    pub(crate) fn resolve(&self, ev: &Evidence) -> Result<Resolved> {
        let mut hard = vec![None; self.nodes.len()];
        let mut soft = vec![None; self.nodes.len()];
        for (name, finding) in &ev.findings {
            let id = self.node_id(name)?;
            let node = &self.nodes[id];
            match finding {
                Finding::Hard(state) => hard[id] = Some(state_index(node, state)?),
                Finding::Soft(p) => {
                    if !node.parents.is_empty() {
                        return Err(NetworkError::SoftEvidenceOnNonRoot(name.clone()));
                    }
                    if p.len() != node.states.len() {
                        return Err(NetworkError::InvalidSoftEvidence {
                            node: name.clone(),
                            reason: format!("{} values for {} states", p.len(), node.states.len()),
                        });
                    }
                    check_row(p).map_err(|reason| NetworkError::InvalidSoftEvidence { node: name.clone(), reason })?;
                    soft[id] = Some(p.clone());
                }
            }
        }
        Ok((hard, soft))
    }

    /// Exact posterior of the target node by variable elimination.
    pub fn infer(&self, ev: &Evidence) -> Result<Posterior> {
        let (hard, soft) = self.resolve(ev)?;
        let target = self.target;
        let mut factors: Vec<Factor> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut vars = n.parents.clone();
                vars.push(i);
                let cards = vars.iter().map(|&v| self.nodes[v].states.len()).collect();
                let values = soft[i].clone().unwrap_or_else(|| n.table.clone());
                Factor::new(vars, cards, values)
            })
            .collect();
        for (var, state) in hard.iter().enumerate().filter_map(|(v, s)| s.map(|s| (v, s))) {
            for f in &mut factors {
                if f.contains(var) {
                    *f = f.reduce(var, state);
                }
            }
        }

        let mut remaining: Vec<usize> = (0..self.nodes.len()).filter(|&v| v != target && hard[v].is_none()).collect();
        while !remaining.is_empty() {
            // greedy min-scope ordering, ties broken by node index
            let (pos, &var) =
                remaining.iter().enumerate().min_by_key(|(_, &v)| (elimination_width(&factors, v), v)).unwrap();
            remaining.swap_remove(pos);
            let (touching, rest): (Vec<_>, Vec<_>) = factors.into_iter().partition(|f| f.contains(var));
            factors = rest;
            let merged = touching.iter().fold(Factor::scalar(1.0), |acc, f| acc.product(f));
            factors.push(merged.sum_out(var));
        }
        let result = factors.iter().fold(Factor::scalar(1.0), |acc, f| acc.product(f));

        let states = self.nodes[target].states.clone();
        let probabilities = match hard[target] {
            Some(k) => {
                if result.values[0].is_nan() || result.values[0] <= 0.0 {
                    return Err(NetworkError::ImpossibleEvidence);
                }
                let mut p = vec![0.0; states.len()];
                p[k] = 1.0;
                p
            }
            None => normalise(result.values)?,
        };
        Ok(Posterior { states, probabilities })
    }
}

/// Per-node hard state indices and soft priors.
pub(crate) type Resolved = (Vec<Option<usize>>, Vec<Option<Vec<f64>>>);

fn elimination_width(factors: &[Factor], var: usize) -> usize {
    let mut scope: Vec<usize> =
        factors.iter().filter(|f| f.contains(var)).flat_map(|f| f.vars.iter().copied()).collect();
    scope.sort_unstable();
    scope.dedup();
    scope.len()
}

pub(crate) fn normalise(values: Vec<f64>) -> Result<Vec<f64>> {
    let z: f64 = values.iter().sum();
    if z.is_nan() || z <= 0.0 {
        return Err(NetworkError::ImpossibleEvidence);
    }
    Ok(values.into_iter().map(|v| v / z).collect())
}

fn state_index(node: &Node, state: &str) -> Result<usize> {
    node.states
        .iter()
        .position(|s| s == state)
        .ok_or_else(|| NetworkError::UnknownState { node: node.name.clone(), state: state.to_owned() })
}

fn describe_row(spec: &NetworkSpec, parents: &[usize], cards: &[usize], mut row: usize) -> String {
    if parents.is_empty() {
        return "prior".to_owned();
    }
    let mut parts = vec![String::new(); parents.len()];
    for k in (0..parents.len()).rev() {
        let s = row % cards[k];
        row /= cards[k];
        let node = &spec.nodes[parents[k]];
        parts[k] = format!("{}={}", node.name, node.states[s]);
    }
    parts.join(", ")
}

/// Kahn's algorithm; on failure returns the nodes left on cycles.
fn topological_order(parents: &[Vec<usize>]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|i| indegree[*i] > 0).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Finding {
    Hard(String),
    Soft(Vec<f64>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub findings: BTreeMap<String, Finding>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hard(mut self, node: &str, state: &str) -> Self {
        self.findings.insert(node.to_owned(), Finding::Hard(state.to_owned()));
        self
    }

    pub fn soft(mut self, node: &str, distribution: Vec<f64>) -> Self {
        self.findings.insert(node.to_owned(), Finding::Soft(distribution));
        self
    }
}

/// Posterior distribution of the target node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub states: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl Posterior {
    pub fn probability(&self, state: &str) -> Option<f64> {
        self.states.iter().position(|s| s == state).map(|i| self.probabilities[i])
    }
}

/// Builds a validated network from a description.
pub fn build_network(spec: &NetworkSpec) -> Result<DiscreteNetwork> {
    DiscreteNetwork::build(spec)
}

pub fn infer(net: &DiscreteNetwork, ev: &Evidence) -> Result<Posterior> {
    net.infer(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> NetworkSpec {
        NetworkSpec {
            nodes: vec![NodeSpec::new("A", &["a0", "a1"], &[]), NodeSpec::new("B", &["b0", "b1"], &["A"])],
            tables: vec![
                ConditionalTable::new("A", vec![vec![0.4, 0.6]]),
                ConditionalTable::new("B", vec![vec![0.9, 0.1], vec![0.2, 0.8]]),
            ],
            target: "B".into(),
        }
    }

    #[test]
    fn single_root_is_valid() {
        let spec = NetworkSpec {
            nodes: vec![NodeSpec::new("R", &["x", "y"], &[])],
            tables: vec![ConditionalTable::new("R", vec![vec![0.5, 0.5]])],
            target: "R".into(),
        };
        let net = build_network(&spec).unwrap();
        assert_eq!(infer(&net, &Evidence::new()).unwrap().probabilities, vec![0.5, 0.5]);
    }

    #[test]
    fn chain_marginals_by_hand() {
        let net = build_network(&chain()).unwrap();
        let post = infer(&net, &Evidence::new()).unwrap();
        assert!((post.probabilities[0] - (0.4 * 0.9 + 0.6 * 0.2)).abs() < 1e-15);
        let post = infer(&net, &Evidence::new().hard("A", "a1")).unwrap();
        assert!((post.probabilities[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn diagnostic_query_flows_upstream() {
        let mut spec = chain();
        spec.target = "A".into();
        let net = build_network(&spec).unwrap();
        let post = infer(&net, &Evidence::new().hard("B", "b1")).unwrap();
        let pb1 = 0.4 * 0.1 + 0.6 * 0.8;
        assert!((post.probabilities[1] - 0.6 * 0.8 / pb1).abs() < 1e-15);
    }

    #[test]
    fn self_loop_and_cycle_rejected() {
        let mut spec = chain();
        spec.nodes[0].parents = vec!["A".into()];
        assert!(matches!(build_network(&spec), Err(NetworkError::Cycle(_))));
        let mut spec = chain();
        spec.nodes[0].parents = vec!["B".into()];
        spec.tables[0].rows = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        match build_network(&spec).unwrap_err() {
            NetworkError::Cycle(nodes) => assert_eq!(nodes, vec!["A".to_string(), "B".to_string()]),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn table_shape_and_stochasticity_checked() {
        let mut spec = chain();
        spec.tables[1].rows.pop();
        assert!(matches!(build_network(&spec), Err(NetworkError::RowCountMismatch { expected: 2, found: 1, .. })));
        let mut spec = chain();
        spec.tables[1].rows[1] = vec![0.3, 0.3];
        match build_network(&spec).unwrap_err() {
            NetworkError::NonStochasticRow { node, row, .. } => {
                assert_eq!(node, "B");
                assert_eq!(row, "A=a1");
            }
            e => panic!("unexpected {e:?}"),
        }
        let mut spec = chain();
        spec.tables.pop();
        assert_eq!(build_network(&spec).unwrap_err(), NetworkError::MissingTable("B".into()));
        let mut spec = chain();
        spec.nodes[1].states = vec!["only".into()];
        assert_eq!(build_network(&spec).unwrap_err(), NetworkError::TooFewStates("B".into()));
    }

    #[test]
    fn evidence_errors() {
        let net = build_network(&chain()).unwrap();
        assert_eq!(
            infer(&net, &Evidence::new().soft("B", vec![0.5, 0.5])).unwrap_err(),
            NetworkError::SoftEvidenceOnNonRoot("B".into())
        );
        assert!(matches!(infer(&net, &Evidence::new().hard("A", "zz")), Err(NetworkError::UnknownState { .. })));
        assert!(matches!(
            infer(&net, &Evidence::new().soft("A", vec![0.5, 0.6])),
            Err(NetworkError::InvalidSoftEvidence { .. })
        ));
        assert!(matches!(infer(&net, &Evidence::new().hard("Z", "a0")), Err(NetworkError::UnknownNode(_))));
    }

    #[test]
    fn impossible_evidence_detected() {
        let mut spec = chain();
        spec.tables[1].rows = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        spec.target = "A".into();
        let net = build_network(&spec).unwrap();
        assert_eq!(infer(&net, &Evidence::new().hard("B", "b1")).unwrap_err(), NetworkError::ImpossibleEvidence);
        spec.target = "B".into();
        let net = build_network(&spec).unwrap();
        assert_eq!(infer(&net, &Evidence::new().hard("B", "b1")).unwrap_err(), NetworkError::ImpossibleEvidence);
    }

    #[test]
    fn conditional_lookup() {
        let net = build_network(&chain()).unwrap();
        assert_eq!(net.conditional("B", &["a1"]).unwrap(), vec![0.2, 0.8]);
        assert_eq!(net.conditional("A", &[]).unwrap(), vec![0.4, 0.6]);
    }
}
