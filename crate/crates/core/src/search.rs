//! Exhaustive selection among candidate classifiers for one class variable,
//! optionally over every subset of the candidate inputs.
//!
//! Only the class-local score is compared: the marginal terms of the inputs
//! are shared by every candidate, so scores are not full-joint values.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::ebnc::Ebnc;
use crate::error::{Error, Result};
use crate::network::{BayesianNetwork, Variable};
use crate::numfmt::sig9;
use crate::scoring::{score_local, LocalModel, ScoreMethod, ScoreOptions};
use crate::structures::InnerStructure;

/// Default cap on the number of enumerated candidates.
pub const DEFAULT_CANDIDATE_CAP: u128 = 10_000;

#[derive(Debug, Clone)]
pub enum Generator {
    Standard(InnerStructure),
    /// A user-supplied DAG over the class and the inputs. Subsets keep the
    /// induced subgraph.
    Custom {
        name: String,
        network: BayesianNetwork,
    },
}

impl Generator {
    pub fn name(&self) -> &str {
        match self {
            Generator::Standard(s) => s.name(),
            Generator::Custom { name, .. } => name,
        }
    }

    fn build(&self, class: &Variable, inputs: &[Variable]) -> Result<Ebnc> {
        match self {
            Generator::Standard(s) => s.ebnc(class.clone(), inputs.to_vec()),
            Generator::Custom { network, .. } => {
                let mut keep = vec![network.index_of(class.name()).ok_or_else(|| {
                    Error::SchemaMismatch(format!("structure has no variable `{}`", class.name()))
                })?];
                for v in inputs {
                    keep.push(network.index_of(v.name()).ok_or_else(|| {
                        Error::SchemaMismatch(format!("structure has no variable `{}`", v.name()))
                    })?);
                }
                let mut vars = vec![class.clone()];
                vars.extend(inputs.iter().cloned());
                let position = |v: usize| keep.iter().position(|&k| k == v);
                let edges: Vec<(usize, usize)> = network
                    .edges()
                    .into_iter()
                    .filter_map(|(p, c)| Some((position(p)?, position(c)?)))
                    .collect();
                Ebnc::with_class(BayesianNetwork::uniform(vars, &edges)?, 0)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CandidateFamily {
    pub class: Variable,
    pub inputs: Vec<Variable>,
    pub generators: Vec<Generator>,
    /// Enumerate every subset of `inputs`, not just the full set.
    pub subset_search: bool,
}

impl CandidateFamily {
    /// Class and inputs taken from the columns of `data`.
    pub fn from_dataset(
        data: &Dataset,
        class: &str,
        generators: Vec<Generator>,
        subset_search: bool,
    ) -> Result<Self> {
        let c = data
            .column_of(class)
            .ok_or_else(|| Error::SchemaMismatch(format!("dataset has no column `{class}`")))?;
        Ok(Self {
            class: data.variables()[c].clone(),
            inputs: data
                .variables()
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != c)
                .map(|(_, v)| v.clone())
                .collect(),
            generators,
            subset_search,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: usize,
    pub structure: String,
    pub features: Vec<String>,
    pub ebnc: Ebnc,
}

/// Index subsets of `0..n`, by size and then lexicographically.
pub fn subsets_by_size(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(1 << n);
    for k in 0..=n {
        let mut s: Vec<usize> = (0..k).collect();
        loop {
            out.push(s.clone());
            // next k-combination
            let Some(i) = (0..k).rev().find(|&i| s[i] < n - k + i) else {
                break;
            };
            s[i] += 1;
            for j in i + 1..k {
                s[j] = s[j - 1] + 1;
            }
        }
    }
    out
}

/// Generator-major, subset-minor enumeration; the id is the position.
pub fn enumerate_candidates(family: &CandidateFamily, cap: u128) -> Result<Vec<Candidate>> {
    let n = family.inputs.len();
    let per_generator: u128 = if family.subset_search {
        if n >= 127 {
            u128::MAX
        } else {
            1u128 << n
        }
    } else {
        1
    };
    let total = per_generator.saturating_mul(family.generators.len() as u128);
    if total > cap {
        return Err(Error::CapExceeded {
            what: "candidate enumeration",
            requested: total,
            cap,
        });
    }
    let subsets = if family.subset_search {
        subsets_by_size(n)
    } else {
        vec![(0..n).collect()]
    };
    let mut out = Vec::with_capacity(total as usize);
    for g in &family.generators {
        for s in &subsets {
            let inputs: Vec<Variable> = s.iter().map(|&j| family.inputs[j].clone()).collect();
            out.push(Candidate {
                id: out.len(),
                structure: g.name().to_string(),
                features: inputs.iter().map(|v| v.name().to_string()).collect(),
                ebnc: g.build(&family.class, &inputs)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub id: usize,
    pub structure: String,
    pub features: Vec<String>,
    pub score: f64,
    pub dimension: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub method: ScoreMethod,
    pub ranked: Vec<RankedCandidate>,
    pub winner: usize,
}

fn rank_order(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.dimension.cmp(&b.dimension))
        .then(a.id.cmp(&b.id))
}

impl SelectionResult {
    pub fn winner(&self) -> &RankedCandidate {
        &self.ranked[0]
    }

    /// Tab-separated ranking, best first.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method\t{}", self.method);
        let _ = writeln!(out, "rank\tcandidate\tstructure\tfeatures\tscore\td");
        for (r, c) in self.ranked.iter().enumerate() {
            let features = if c.features.is_empty() {
                "-".to_string()
            } else {
                c.features.join(",")
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r + 1,
                c.id,
                c.structure,
                features,
                sig9(c.score),
                c.dimension
            );
        }
        let _ = writeln!(out, "winner\t{}", self.winner);
        out
    }
}

/// Scores every candidate's class-local term and ranks them: higher score
/// first, then smaller dimension, then lower id.
pub fn select(
    family: &CandidateFamily,
    data: &Dataset,
    method: ScoreMethod,
    opts: &ScoreOptions,
    candidate_cap: u128,
) -> Result<SelectionResult> {
    let candidates = enumerate_candidates(family, candidate_cap)?;
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate structures".into()));
    }
    let mut ranked = candidates
        .into_par_iter()
        .map(|c| {
            let local = LocalModel::new(c.ebnc, opts.cap)?;
            let s = score_local(&local, data, method, opts)?;
            log::debug!(
                "candidate {} ({}) {:?}: {}",
                c.id,
                c.structure,
                c.features,
                s.score
            );
            Ok(RankedCandidate {
                id: c.id,
                structure: c.structure,
                features: c.features,
                score: s.score,
                dimension: s.dimension,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(rank_order);
    Ok(SelectionResult {
        method,
        winner: ranked[0].id,
        ranked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::sample_dataset;
    use crate::scoring::FitOptions;

    fn family(n: usize, gens: &[InnerStructure], subsets: bool) -> CandidateFamily {
        CandidateFamily {
            class: Variable::binary("Y"),
            inputs: (1..=n).map(|j| Variable::binary(format!("X{j}"))).collect(),
            generators: gens.iter().map(|&g| Generator::Standard(g)).collect(),
            subset_search: subsets,
        }
    }

    fn opts() -> ScoreOptions {
        ScoreOptions {
            fit: FitOptions {
                restarts: 1,
                ..FitOptions::default()
            },
            ..ScoreOptions::default()
        }
    }

    #[test]
    fn subsets_are_ordered_by_size_then_lexicographically() {
        assert_eq!(
            subsets_by_size(3),
            vec![
                vec![],
                vec![0],
                vec![1],
                vec![2],
                vec![0, 1],
                vec![0, 2],
                vec![1, 2],
                vec![0, 1, 2]
            ]
        );
        assert_eq!(subsets_by_size(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn candidate_counts() {
        let c =
            enumerate_candidates(&family(2, &[InnerStructure::NaiveBayes], true), 10_000).unwrap();
        let f: Vec<Vec<String>> = c.iter().map(|c| c.features.clone()).collect();
        assert_eq!(f, vec![vec![], vec!["X1"], vec!["X2"], vec!["X1", "X2"]]);
        let one =
            enumerate_candidates(&family(2, &[InnerStructure::NaiveBayes], false), 10).unwrap();
        assert_eq!(one.len(), 1);
        let both = family(
            3,
            &[InnerStructure::Trivial, InnerStructure::NaiveBayes],
            true,
        );
        let c = enumerate_candidates(&both, 10_000).unwrap();
        assert_eq!(c.len(), 16);
        assert!(c.iter().enumerate().all(|(i, c)| c.id == i));
        assert!(matches!(
            enumerate_candidates(&both, 15),
            Err(Error::CapExceeded { requested: 16, .. })
        ));
    }

    #[test]
    fn enumeration_is_deterministic() {
        let f = family(
            3,
            &[InnerStructure::MarkovChain, InnerStructure::Trivial],
            true,
        );
        let a = enumerate_candidates(&f, 100).unwrap();
        let b = enumerate_candidates(&f, 100).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                (x.id, &x.structure, &x.features),
                (y.id, &y.structure, &y.features)
            );
            assert_eq!(x.ebnc, y.ebnc);
        }
    }

    #[test]
    fn custom_generator_keeps_induced_edges() {
        let net = BayesianNetwork::uniform(
            vec![
                Variable::binary("Y"),
                Variable::binary("X1"),
                Variable::binary("X2"),
            ],
            &[(1, 0), (1, 2), (0, 2)],
        )
        .unwrap();
        let f = CandidateFamily {
            generators: vec![Generator::Custom {
                name: "file".into(),
                network: net,
            }],
            ..family(2, &[], true)
        };
        let c = enumerate_candidates(&f, 100).unwrap();
        assert_eq!(c[2].features, vec!["X2"]);
        assert_eq!(c[2].ebnc.inner().edges(), vec![(0, 1)]);
        assert_eq!(c[3].ebnc.inner().edge_count(), 3);
    }

    #[test]
    fn independent_class_selects_empty_subset() {
        let net = BayesianNetwork::uniform(
            vec![
                Variable::binary("Y"),
                Variable::binary("X1"),
                Variable::binary("X2"),
            ],
            &[],
        )
        .unwrap()
        .with_cpts(vec![
            vec![vec![0.3, 0.7]],
            vec![vec![0.6, 0.4]],
            vec![vec![0.5, 0.5]],
        ])
        .unwrap();
        let data = sample_dataset(&net, 5_000, 1);
        let f = CandidateFamily::from_dataset(
            &data,
            "Y",
            vec![
                Generator::Standard(InnerStructure::NaiveBayes),
                Generator::Standard(InnerStructure::Trivial),
            ],
            true,
        )
        .unwrap();
        let r = select(&f, &data, ScoreMethod::Bic, &opts(), 10_000).unwrap();
        assert!(r.winner().features.is_empty());
        // Ties between the two empty-set candidates go to the lower id.
        assert_eq!(r.winner, 0);
        assert!(r
            .ranked
            .windows(2)
            .all(|w| rank_order(&w[0], &w[1]) != Ordering::Greater));
    }

    #[test]
    fn single_candidate_wins() {
        let f = family(1, &[InnerStructure::NaiveBayes], false);
        let data = sample_dataset(InnerStructure::NaiveBayes.binary(1).inner(), 20, 3);
        let r = select(&f, &data, ScoreMethod::Laplace, &opts(), 10).unwrap();
        assert_eq!(r.ranked.len(), 1);
        assert_eq!(r.winner, 0);
    }

    #[test]
    fn ranking_score_equals_node_score() {
        let e = InnerStructure::NaiveBayes.binary(2);
        let data = sample_dataset(e.inner(), 200, 5);
        let f = family(2, &[InnerStructure::NaiveBayes], false);
        let r = select(&f, &data, ScoreMethod::Bic, &opts(), 10).unwrap();
        let local = LocalModel::new(e, 1 << 20).unwrap();
        let s = score_local(&local, &data, ScoreMethod::Bic, &opts()).unwrap();
        assert_eq!(r.ranked[0].score, s.score);
    }
}
