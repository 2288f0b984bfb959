//! Embedded Bayesian network classifiers and their local distribution.
//!
//! An [`Ebnc`] binds a class variable `Y` and inputs `X` to an inner network
//! over exactly `{Y} ∪ X`. With every input observed, the posterior log odds
//! of each class state against state 0 is a sum of log CPT ratios: the term
//! for `Y`'s own CPT, plus one term per node placed after `Y` in a
//! "Y as late as possible" ordering. Nodes placed before `Y` cancel.

use crate::configs;
use crate::error::{Error, Result};
use crate::network::BayesianNetwork;

/// Default cap on enumerated input configurations.
pub const DEFAULT_CONFIG_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Ebnc {
    inner: BayesianNetwork,
    y: usize,
    inputs: Vec<usize>,
    order: Vec<usize>,
    n_h: usize,
}

impl Ebnc {
    /// `input_order[j]` is the inner node holding the `j`-th outer input.
    pub fn new(inner: BayesianNetwork, y: usize, input_order: Vec<usize>) -> Result<Self> {
        let n = inner.len();
        if y >= n {
            return Err(Error::InvalidIndex(format!(
                "class node {y} with {n} variables"
            )));
        }
        if input_order.len() + 1 != n {
            return Err(Error::SchemaMismatch(format!(
                "inner network has {n} variables but {} inputs plus the class were given",
                input_order.len()
            )));
        }
        let mut seen = vec![false; n];
        seen[y] = true;
        for &v in &input_order {
            if v >= n || seen[v] {
                return Err(Error::SchemaMismatch(format!(
                    "input order {input_order:?} is not a permutation of the non-class nodes"
                )));
            }
            seen[v] = true;
        }
        let (order, n_h) = inner.ordering_y_late(y)?;
        Ok(Self {
            inner,
            y,
            inputs: input_order,
            order,
            n_h,
        })
    }

    /// Inputs are the non-class nodes in ascending index order.
    pub fn with_class(inner: BayesianNetwork, y: usize) -> Result<Self> {
        let inputs = (0..inner.len()).filter(|&v| v != y).collect();
        Self::new(inner, y, inputs)
    }

    pub fn with_class_name(inner: BayesianNetwork, class: &str) -> Result<Self> {
        let y = inner
            .index_of(class)
            .ok_or_else(|| Error::InvalidVariable(format!("no class variable `{class}`")))?;
        Self::with_class(inner, y)
    }

    pub fn inner(&self) -> &BayesianNetwork {
        &self.inner
    }

    pub fn class_node(&self) -> usize {
        self.y
    }

    pub fn class_name(&self) -> &str {
        self.inner.variable(self.y).name()
    }

    pub fn class_states(&self) -> usize {
        self.inner.state_count(self.y)
    }

    /// Inner node index of each input, in input order.
    pub fn input_nodes(&self) -> &[usize] {
        &self.inputs
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs
            .iter()
            .map(|&v| self.inner.variable(v).name())
            .collect()
    }

    pub fn input_radices(&self) -> Vec<usize> {
        self.inputs
            .iter()
            .map(|&v| self.inner.state_count(v))
            .collect()
    }

    /// `q_y`, the number of input configurations.
    pub fn input_configurations(&self) -> Option<u128> {
        configs::count(&self.input_radices())
    }

    /// The "Y late" ordering and the count of nodes before `Y`.
    pub fn ordering(&self) -> (&[usize], usize) {
        (&self.order, self.n_h)
    }

    /// Nodes after `Y` in the ordering; only these contribute to log odds.
    pub fn trailing_nodes(&self) -> &[usize] {
        &self.order[self.n_h + 1..]
    }

    /// Same structure and bindings with different CPTs.
    pub fn with_inner_cpts(&self, inner: BayesianNetwork) -> Result<Self> {
        if inner.edges() != self.inner.edges() || inner.variables() != self.inner.variables() {
            return Err(Error::SchemaMismatch(
                "replacement network has a different structure".into(),
            ));
        }
        Ok(Self {
            inner,
            ..self.clone()
        })
    }

    pub(crate) fn with_inner_unchecked(&self, inner: BayesianNetwork) -> Self {
        Self {
            inner,
            ..self.clone()
        }
    }

    fn check_input(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.inputs.len() {
            return Err(Error::InvalidIndex(format!(
                "expected {} input states, got {}",
                self.inputs.len(),
                x.len()
            )));
        }
        for (j, (&s, &v)) in x.iter().zip(&self.inputs).enumerate() {
            if s >= self.inner.state_count(v) {
                return Err(Error::InvalidIndex(format!(
                    "input {j} (`{}`) has no state {s}",
                    self.inner.variable(v).name()
                )));
            }
        }
        Ok(())
    }

    /// Posterior log odds `log p(y^k|x) / p(y^1|x)` for `k = 2..r_y`.
    pub fn log_odds(&self, x: &[usize]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = vec![0.0; self.class_states() - 1];
        let mut states = vec![0; self.inner.len()];
        self.fill_log_odds(x, &mut states, &mut out);
        Ok(out)
    }

    /// Unchecked core of [`Ebnc::log_odds`]. `states` is scratch space of
    /// length `inner.len()`.
    pub(crate) fn fill_log_odds(&self, x: &[usize], states: &mut [usize], out: &mut [f64]) {
        for (&v, &s) in self.inputs.iter().zip(x) {
            states[v] = s;
        }
        let net = &self.inner;
        let after = self.trailing_nodes();
        let mut base = 0.0;
        states[self.y] = 0;
        base += net.local_probability(self.y, states).ln();
        for &v in after {
            base += net.local_probability(v, states).ln();
        }
        for (k, slot) in out.iter_mut().enumerate() {
            states[self.y] = k + 1;
            let mut acc = net.local_probability(self.y, states).ln();
            for &v in after {
                acc += net.local_probability(v, states).ln();
            }
            *slot = acc - base;
        }
        states[self.y] = 0;
    }

    /// `p(Y | x)` as a probability vector.
    pub fn conditional_distribution(&self, x: &[usize]) -> Result<Vec<f64>> {
        Ok(softmax(&self.log_odds(x)?))
    }

    /// Most probable class state; ties go to the lowest index.
    pub fn classify(&self, x: &[usize]) -> Result<usize> {
        Ok(argmax(&self.conditional_distribution(x)?))
    }

    /// Log odds for every input configuration, row-major over inputs.
    pub fn full_log_odds_table(&self, cap: u128) -> Result<LogOddsTable> {
        let radices = self.input_radices();
        let q = configs::count(&radices).unwrap_or(u128::MAX);
        if q > cap {
            return Err(Error::CapExceeded {
                what: "log-odds table",
                requested: q,
                cap,
            });
        }
        let q = q as usize;
        let width = self.class_states() - 1;
        let mut values = vec![0.0; q * width];
        let mut x = vec![0; radices.len()];
        let mut states = vec![0; self.inner.len()];
        for row in values.chunks_mut(width) {
            self.fill_log_odds(&x, &mut states, row);
            configs::advance(&mut x, &radices);
        }
        Ok(LogOddsTable {
            class_states: self.class_states(),
            radices,
            values,
        })
    }
}

/// Log odds for every input configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LogOddsTable {
    class_states: usize,
    radices: Vec<usize>,
    values: Vec<f64>,
}

impl LogOddsTable {
    pub fn rows(&self) -> usize {
        self.values.len() / (self.class_states - 1)
    }

    pub fn row(&self, config: usize) -> &[f64] {
        let w = self.class_states - 1;
        &self.values[config * w..(config + 1) * w]
    }

    pub fn input_radices(&self) -> &[usize] {
        &self.radices
    }

    /// Flattened values, `(r_y - 1)` per configuration.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Maps log odds against state 0 back to probabilities over all `r` states.
///
/// Shifts by `max(0, λ...)` before exponentiating so large log odds never
/// overflow.
pub fn softmax(lambda: &[f64]) -> Vec<f64> {
    let shift = lambda.iter().copied().fold(0.0_f64, f64::max);
    let mut out = Vec::with_capacity(lambda.len() + 1);
    out.push((-shift).exp());
    out.extend(lambda.iter().map(|l| (l - shift).exp()));
    let z: f64 = out.iter().sum();
    for p in &mut out {
        *p /= z;
    }
    out
}

/// `log softmax(λ)` over all `r` states, computed stably.
pub fn log_softmax(lambda: &[f64]) -> Vec<f64> {
    let shift = lambda.iter().copied().fold(0.0_f64, f64::max);
    let z = (-shift).exp() + lambda.iter().map(|l| (l - shift).exp()).sum::<f64>();
    let log_z = shift + z.ln();
    std::iter::once(-log_z)
        .chain(lambda.iter().map(|l| l - log_z))
        .collect()
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, Variable};
    use proptest::prelude::*;

    fn one_input_naive() -> Ebnc {
        // theta(y2) = 0.6, theta(x2|y2) = 0.8, theta(x2|y1) = 0.3
        let net = build_network(
            vec![Variable::binary("Y"), Variable::binary("X1")],
            &[(0, 1)],
            vec![vec![vec![0.4, 0.6]], vec![vec![0.7, 0.3], vec![0.2, 0.8]]],
        )
        .unwrap();
        Ebnc::with_class(net, 0).unwrap()
    }

    #[test]
    fn naive_single_input_log_odds() {
        let e = one_input_naive();
        let l = e.log_odds(&[1]).unwrap();
        assert!((l[0] - 4f64.ln()).abs() < 1e-12);
        let p = e.conditional_distribution(&[1]).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12);
        assert_eq!(e.classify(&[1]).unwrap(), 1);
    }

    #[test]
    fn uniform_cpts_give_zero_log_odds() {
        let net = BayesianNetwork::uniform(
            vec![
                Variable::with_states("Y", 3),
                Variable::binary("A"),
                Variable::binary("B"),
            ],
            &[(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        let e = Ebnc::with_class(net, 0).unwrap();
        let t = e.full_log_odds_table(DEFAULT_CONFIG_CAP).unwrap();
        assert_eq!(t.rows(), 4);
        assert!(t.as_slice().iter().all(|&v| v == 0.0));
        let p = e.conditional_distribution(&[1, 0]).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(e.classify(&[1, 0]).unwrap(), 0);
    }

    #[test]
    fn trivial_ebnc_returns_cpt_row() {
        let net = build_network(
            vec![
                Variable::binary("A"),
                Variable::binary("B"),
                Variable::with_states("Y", 3),
            ],
            &[(0, 2), (1, 2)],
            vec![
                vec![vec![0.5, 0.5]],
                vec![vec![0.3, 0.7]],
                vec![
                    vec![0.1, 0.2, 0.7],
                    vec![0.3, 0.3, 0.4],
                    vec![0.25, 0.5, 0.25],
                    vec![0.6, 0.3, 0.1],
                ],
            ],
        )
        .unwrap();
        let e = Ebnc::with_class(net.clone(), 2).unwrap();
        for row in 0..4 {
            let x = configs::decode(row, &[2, 2]);
            let p = e.conditional_distribution(&x).unwrap();
            for (a, b) in p.iter().zip(net.cpt(2).row(row)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn table_matches_per_configuration_calls() {
        let net = BayesianNetwork::uniform(
            vec![
                Variable::binary("Y"),
                Variable::binary("A"),
                Variable::binary("B"),
            ],
            &[(0, 1), (0, 2)],
        )
        .unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let e = Ebnc::with_class(net.with_random_cpts(&mut rng, 0.1, 0.9), 0).unwrap();
        let t = e.full_log_odds_table(DEFAULT_CONFIG_CAP).unwrap();
        assert_eq!(t.rows(), 4);
        for r in 0..4 {
            assert_eq!(t.row(r), e.log_odds(&configs::decode(r, &[2, 2])).unwrap());
        }
        assert!(matches!(
            e.full_log_odds_table(3),
            Err(Error::CapExceeded { requested: 4, .. })
        ));
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let e = one_input_naive();
        assert!(e.log_odds(&[2]).is_err());
        assert!(e.log_odds(&[0, 0]).is_err());
        let net = e.inner().clone();
        assert!(Ebnc::new(net.clone(), 0, vec![0]).is_err());
        assert!(Ebnc::new(net, 0, vec![]).is_err());
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0, 0.0]);
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let p = softmax(&[2f64.ln()]);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
        let p = softmax(&[1000.0, -1000.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[1] - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn softmax_inverts_log_ratios(raw in proptest::collection::vec(0.01f64..1.0, 2..6)) {
            let z: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / z).collect();
            let lambda: Vec<f64> = p[1..].iter().map(|pk| (pk / p[0]).ln()).collect();
            let back = softmax(&lambda);
            for (a, b) in back.iter().zip(&p) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let logs = log_softmax(&lambda);
            for (a, b) in logs.iter().zip(&p) {
                prop_assert!((a - b.ln()).abs() < 1e-12);
            }
        }
    }
}
