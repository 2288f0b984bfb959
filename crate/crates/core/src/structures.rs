//! Standard inner-network structures. The class is node 0 and the inputs
//! follow in the given order; CPTs start uniform.

use crate::ebnc::Ebnc;
use crate::error::Result;
use crate::network::{BayesianNetwork, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InnerStructure {
    /// Every input is a parent of the class.
    Trivial,
    /// The class is the only parent of every input.
    NaiveBayes,
    /// Class is a parent of every input, and input `j` is a parent of `j+1`.
    MarkovChain,
}

impl InnerStructure {
    pub fn name(self) -> &'static str {
        match self {
            InnerStructure::Trivial => "trivial",
            InnerStructure::NaiveBayes => "naive",
            InnerStructure::MarkovChain => "chain",
        }
    }

    pub fn edges(self, n_inputs: usize) -> Vec<(usize, usize)> {
        match self {
            InnerStructure::Trivial => (1..=n_inputs).map(|j| (j, 0)).collect(),
            InnerStructure::NaiveBayes => (1..=n_inputs).map(|j| (0, j)).collect(),
            InnerStructure::MarkovChain => (1..=n_inputs)
                .flat_map(|j| {
                    let mut e = vec![(0, j)];
                    if j > 1 {
                        e.push((j - 1, j));
                    }
                    e
                })
                .collect(),
        }
    }

    pub fn network(self, class: Variable, inputs: Vec<Variable>) -> Result<BayesianNetwork> {
        let edges = self.edges(inputs.len());
        let mut vars = vec![class];
        vars.extend(inputs);
        BayesianNetwork::uniform(vars, &edges)
    }

    pub fn ebnc(self, class: Variable, inputs: Vec<Variable>) -> Result<Ebnc> {
        Ebnc::with_class(self.network(class, inputs)?, 0)
    }

    /// All-binary classifier with class `Y` and inputs `X1..Xn`.
    pub fn binary(self, n: usize) -> Ebnc {
        let inputs = (1..=n).map(|j| Variable::binary(format!("X{j}"))).collect();
        self.ebnc(Variable::binary("Y"), inputs)
            .expect("standard structures are acyclic")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_sets() {
        assert_eq!(InnerStructure::Trivial.edges(2), vec![(1, 0), (2, 0)]);
        assert_eq!(InnerStructure::NaiveBayes.edges(2), vec![(0, 1), (0, 2)]);
        assert_eq!(
            InnerStructure::MarkovChain.edges(3),
            vec![(0, 1), (0, 2), (1, 2), (0, 3), (2, 3)]
        );
        assert_eq!(
            InnerStructure::MarkovChain.binary(4).inner().edge_count(),
            7
        );
    }
}
