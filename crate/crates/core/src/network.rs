//! Finite-state Bayesian networks: variables, DAG structure, CPTs and the
//! product factorization of the joint distribution.

use std::collections::BTreeSet;

use rand::Rng;

use crate::configs;
use crate::error::{Error, Result};

mod format;

pub use format::{parse_network, write_network};

/// Tolerance for CPT row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// CPT entries must lie in `[INTERIOR_EPS, 1 - INTERIOR_EPS]`.
pub const INTERIOR_EPS: f64 = 1e-12;

/// A finite-state variable. State 0 is the reference state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    name: String,
    labels: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(Error::InvalidVariable(format!(
                "`{name}` is not an identifier"
            )));
        }
        if labels.len() < 2 {
            return Err(Error::InvalidVariable(format!(
                "`{name}` needs at least two states"
            )));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !is_identifier(l) {
                return Err(Error::InvalidVariable(format!(
                    "label `{l}` of `{name}` is not an identifier"
                )));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidVariable(format!(
                    "duplicate label `{l}` in `{name}`"
                )));
            }
        }
        Ok(Self { name, labels })
    }

    /// A binary variable labelled `s1`, `s2`.
    pub fn binary(name: impl Into<String>) -> Self {
        Self::with_states(name, 2)
    }

    /// A variable with `n` states labelled `s1..sn`.
    pub fn with_states(name: impl Into<String>, n: usize) -> Self {
        let labels = (1..=n.max(2)).map(|k| format!("s{k}")).collect();
        Self::new(name, labels).expect("generated labels are valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn state_count(&self) -> usize {
        self.labels.len()
    }

    pub fn state_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '-' || c == '.')
}

/// A per-variable state assignment, possibly partial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    assignment: Vec<Option<usize>>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Self {
            assignment: vec![None; n],
        }
    }

    pub fn total(states: Vec<usize>) -> Self {
        Self {
            assignment: states.into_iter().map(Some).collect(),
        }
    }

    pub fn from_partial(assignment: Vec<Option<usize>>) -> Self {
        Self { assignment }
    }

    pub fn set(&mut self, var: usize, state: usize) {
        self.assignment[var] = Some(state);
    }

    pub fn unset(&mut self, var: usize) {
        self.assignment[var] = None;
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.assignment.get(var).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    /// The states if every variable is assigned.
    pub fn as_total(&self) -> Option<Vec<usize>> {
        self.assignment.iter().copied().collect()
    }

    /// Checks indices against `net`.
    pub fn validate(&self, net: &BayesianNetwork) -> Result<()> {
        if self.assignment.len() != net.len() {
            return Err(Error::InvalidIndex(format!(
                "configuration has {} slots, network has {} variables",
                self.assignment.len(),
                net.len()
            )));
        }
        for (v, s) in self.assignment.iter().enumerate() {
            if let Some(s) = s {
                let r = net.variable(v).state_count();
                if *s >= r {
                    return Err(Error::InvalidIndex(format!(
                        "state {s} of `{}` (has {r} states)",
                        net.variable(v).name()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One conditional probability table, flattened row-major:
/// entry `(row, state)` lives at `row * state_count + state`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    state_count: usize,
    probs: Vec<f64>,
}

impl Cpt {
    pub fn rows(&self) -> usize {
        self.probs.len() / self.state_count
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.state_count..(r + 1) * self.state_count]
    }

    pub fn get(&self, row: usize, state: usize) -> f64 {
        self.probs[row * self.state_count + state]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// A validated, immutable Bayesian network over finite-state variables.
///
/// Parents of each node are kept in ascending index order; CPT rows are
/// indexed by the parents' joint configuration, leftmost parent slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    variables: Vec<Variable>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    cpts: Vec<Cpt>,
    topo: Vec<usize>,
}

/// Validates inputs and builds a network. `cpts[i]` holds one probability
/// vector per parent configuration of node `i`.
pub fn build_network(
    variables: Vec<Variable>,
    edges: &[(usize, usize)],
    cpts: Vec<Vec<Vec<f64>>>,
) -> Result<BayesianNetwork> {
    BayesianNetwork::new(variables, edges, cpts)
}

impl BayesianNetwork {
    pub fn new(
        variables: Vec<Variable>,
        edges: &[(usize, usize)],
        cpts: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let mut net = Self::structure(variables, edges)?;
        if cpts.len() != net.len() {
            return Err(Error::CptShapeMismatch {
                node: "<network>".into(),
                expected: net.len(),
                found: cpts.len(),
            });
        }
        let tables = cpts
            .into_iter()
            .enumerate()
            .map(|(i, rows)| net.make_cpt(i, rows))
            .collect::<Result<Vec<_>>>()?;
        net.cpts = tables;
        Ok(net)
    }

    /// Same structure with every CPT row uniform.
    pub fn uniform(variables: Vec<Variable>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut net = Self::structure(variables, edges)?;
        net.cpts = (0..net.len())
            .map(|i| {
                let r = net.variables[i].state_count();
                Cpt {
                    state_count: r,
                    probs: vec![1.0 / r as f64; r * net.row_count(i)],
                }
            })
            .collect();
        Ok(net)
    }

    /// Checks names, indices and acyclicity; CPTs are left empty.
    fn structure(variables: Vec<Variable>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = variables.len();
        let mut names = BTreeSet::new();
        for v in &variables {
            if !names.insert(v.name()) {
                return Err(Error::InvalidVariable(format!(
                    "duplicate variable `{}`",
                    v.name()
                )));
            }
        }
        let mut parent_sets = vec![BTreeSet::new(); n];
        for &(p, c) in edges {
            if p >= n || c >= n {
                return Err(Error::InvalidIndex(format!(
                    "edge ({p}, {c}) with {n} variables"
                )));
            }
            if p == c {
                return Err(Error::CycleDetected(variables[p].name().to_string()));
            }
            parent_sets[c].insert(p);
        }
        let parents: Vec<Vec<usize>> = parent_sets
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let topo = topological_order(&parents, &children, |_| true).ok_or_else(|| {
            let stuck = first_cyclic_node(&parents, &children);
            Error::CycleDetected(variables[stuck].name().to_string())
        })?;
        Ok(Self {
            variables,
            parents,
            children,
            cpts: Vec::new(),
            topo,
        })
    }

    fn make_cpt(&self, node: usize, rows: Vec<Vec<f64>>) -> Result<Cpt> {
        let name = self.variables[node].name().to_string();
        let r = self.variables[node].state_count();
        let q = self.row_count(node);
        if rows.len() != q {
            return Err(Error::CptShapeMismatch {
                node: name,
                expected: q * r,
                found: rows.iter().map(Vec::len).sum(),
            });
        }
        let mut probs = Vec::with_capacity(q * r);
        for (ri, row) in rows.into_iter().enumerate() {
            if row.len() != r {
                return Err(Error::CptShapeMismatch {
                    node: name,
                    expected: q * r,
                    found: probs.len() + row.len(),
                });
            }
            for &p in &row {
                if !(p.is_finite() && (INTERIOR_EPS..=1.0 - INTERIOR_EPS).contains(&p)) {
                    return Err(Error::ProbabilityOutOfInterior {
                        node: name,
                        row: ri,
                        value: p,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowNotNormalized {
                    node: name,
                    row: ri,
                    sum,
                });
            }
            probs.extend(row);
        }
        Ok(Cpt {
            state_count: r,
            probs,
        })
    }

    /// Same structure, new CPTs.
    pub fn with_cpts(&self, cpts: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Self::new(self.variables.clone(), &self.edges(), cpts)
    }

    /// Same structure, CPT entries drawn uniformly from `[lo, hi]` and then
    /// normalized per row. Requires `0 < lo <= hi`.
    pub fn with_random_cpts<R: Rng + ?Sized>(&self, rng: &mut R, lo: f64, hi: f64) -> Self {
        assert!(lo > 0.0 && hi >= lo, "probe range must be positive");
        let cpts = (0..self.len())
            .map(|i| {
                let r = self.variables[i].state_count();
                let q = self.row_count(i);
                let mut probs = Vec::with_capacity(q * r);
                for _ in 0..q {
                    let row: Vec<f64> = (0..r).map(|_| rng.random_range(lo..=hi)).collect();
                    let s: f64 = row.iter().sum();
                    probs.extend(row.into_iter().map(|p| p / s));
                }
                Cpt {
                    state_count: r,
                    probs,
                }
            })
            .collect();
        Self {
            cpts,
            ..self.clone()
        }
    }

    /// Replaces one CPT's flat entries without validation. Used by finite
    /// difference probes that step slightly off a validated point.
    pub(crate) fn set_cpt_flat_unchecked(&mut self, node: usize, probs: Vec<f64>) {
        debug_assert_eq!(probs.len(), self.cpts[node].probs.len());
        self.cpts[node].probs = probs;
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name() == name)
    }

    pub fn state_count(&self, i: usize) -> usize {
        self.variables[i].state_count()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn cpt(&self, i: usize) -> &Cpt {
        &self.cpts[i]
    }

    /// All edges `(parent, child)` sorted by child then parent.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Radices of node `i`'s parents, in parent order.
    pub fn parent_radices(&self, i: usize) -> Vec<usize> {
        self.parents[i]
            .iter()
            .map(|&p| self.state_count(p))
            .collect()
    }

    /// Number of parent configurations of node `i`.
    pub fn row_count(&self, i: usize) -> usize {
        self.parents[i]
            .iter()
            .map(|&p| self.state_count(p))
            .product()
    }

    /// CPT row of node `i` selected by a total assignment of the network.
    pub fn row_index(&self, i: usize, states: &[usize]) -> usize {
        self.parents[i]
            .iter()
            .fold(0usize, |acc, &p| acc * self.state_count(p) + states[p])
    }

    /// `theta(z_i | pa_i)` under a total assignment.
    pub fn local_probability(&self, i: usize, states: &[usize]) -> f64 {
        self.cpts[i].get(self.row_index(i, states), states[i])
    }

    /// Joint probability of a total configuration as the product of local
    /// probabilities.
    pub fn joint_probability(&self, z: &Configuration) -> Result<f64> {
        z.validate(self)?;
        let states = z.as_total().ok_or_else(|| {
            let v = z.assignment().iter().position(Option::is_none).unwrap_or(0);
            Error::PartialConfiguration(self.variables[v].name().to_string())
        })?;
        Ok(self.joint_probability_total(&states))
    }

    pub fn joint_probability_total(&self, states: &[usize]) -> f64 {
        (0..self.len())
            .map(|i| self.local_probability(i, states))
            .product()
    }

    /// Topological order with ascending-index tie-breaking.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// `mask[v]` is true iff `v` is a proper descendant of `y`.
    pub fn descendants(&self, y: usize) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        let mut stack = self.children[y].clone();
        while let Some(v) = stack.pop() {
            if !mask[v] {
                mask[v] = true;
                stack.extend_from_slice(&self.children[v]);
            }
        }
        mask
    }

    /// Topological order in which exactly the non-descendants of `y` precede
    /// it. Returns the order and the number of nodes placed before `y`.
    pub fn ordering_y_late(&self, y: usize) -> Result<(Vec<usize>, usize)> {
        if y >= self.len() {
            return Err(Error::InvalidIndex(format!(
                "node {y} with {} variables",
                self.len()
            )));
        }
        let desc = self.descendants(y);
        let before = topological_order(&self.parents, &self.children, |v| v != y && !desc[v])
            .expect("network is acyclic");
        let after = topological_order(&self.parents, &self.children, |v| desc[v])
            .expect("network is acyclic");
        let n_h = before.len();
        let mut order = before;
        order.push(y);
        order.extend(after);
        Ok((order, n_h))
    }

    /// Total configuration count, if it fits in `u128`.
    pub fn configuration_count(&self) -> Option<u128> {
        let radices: Vec<usize> = self.variables.iter().map(Variable::state_count).collect();
        configs::count(&radices)
    }
}

/// Kahn's algorithm restricted to nodes where `keep` holds, always emitting
/// the smallest ready index. Edges from dropped nodes count as satisfied.
fn topological_order(
    parents: &[Vec<usize>],
    children: &[Vec<usize>],
    keep: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = (0..n)
        .map(|v| parents[v].iter().filter(|&&p| keep(p)).count())
        .collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| keep(v) && indeg[v] == 0).collect();
    let mut order = Vec::new();
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            if keep(c) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
    }
    let kept = (0..n).filter(|&v| keep(v)).count();
    (order.len() == kept).then_some(order)
}

/// Some node that Kahn's algorithm can never place, i.e. one on or behind a
/// cycle.
fn first_cyclic_node(parents: &[Vec<usize>], children: &[Vec<usize>]) -> usize {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut placed = vec![false; n];
    while let Some(v) = ready.pop() {
        placed[v] = true;
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.push(c);
            }
        }
    }
    placed.iter().position(|p| !p).unwrap_or(0)
}
