//! Plain-text network files.
//!
//! ```text
//! # comment
//! variables
//!   Y: no,yes
//!   X1: lo,hi
//! edges
//!   X1 -> Y
//! cpt X1
//!   0.4 0.6
//! cpt Y
//!   0.9 0.1      # X1 = lo
//!   0.2 0.8      # X1 = hi
//! ```
//!
//! CPT lines run over parent configurations in row-major order, parents in
//! declaration order with the leftmost varying slowest. A node without a
//! `cpt` block gets uniform rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BayesianNetwork, Variable};
use crate::error::{Error, Result};

enum Section {
    None,
    Variables,
    Edges,
    Cpt(usize),
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_network(text: &str) -> Result<BayesianNetwork> {
    let mut variables: Vec<Variable> = Vec::new();
    let mut edge_names: Vec<(usize, String, String)> = Vec::new();
    let mut cpt_lines: BTreeMap<usize, Vec<(usize, Vec<f64>)>> = BTreeMap::new();
    let mut section = Section::None;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "variables" {
            section = Section::Variables;
            continue;
        }
        if line == "edges" {
            section = Section::Edges;
            continue;
        }
        if let Some(rest) = line.strip_prefix("cpt ") {
            let name = rest.trim();
            let idx = variables
                .iter()
                .position(|v| v.name() == name)
                .ok_or_else(|| {
                    parse_err(lineno, format!("cpt for undeclared variable `{name}`"))
                })?;
            if cpt_lines.contains_key(&idx) {
                return Err(parse_err(lineno, format!("second cpt block for `{name}`")));
            }
            cpt_lines.insert(idx, Vec::new());
            section = Section::Cpt(idx);
            continue;
        }
        match section {
            Section::None => {
                return Err(parse_err(lineno, "content before any section header"));
            }
            Section::Variables => {
                let (name, labels) = line
                    .split_once(':')
                    .ok_or_else(|| parse_err(lineno, "expected `name: label1,label2,...`"))?;
                let labels = labels
                    .split(',')
                    .map(|l| l.trim().to_string())
                    .collect::<Vec<_>>();
                let var = Variable::new(name.trim(), labels)
                    .map_err(|e| parse_err(lineno, e.to_string()))?;
                if variables.iter().any(|v| v.name() == var.name()) {
                    return Err(parse_err(
                        lineno,
                        format!("duplicate variable `{}`", var.name()),
                    ));
                }
                variables.push(var);
            }
            Section::Edges => {
                let (p, c) = line
                    .split_once("->")
                    .ok_or_else(|| parse_err(lineno, "expected `parent -> child`"))?;
                edge_names.push((lineno, p.trim().to_string(), c.trim().to_string()));
            }
            Section::Cpt(idx) => {
                let row = line
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| parse_err(lineno, format!("`{t}` is not a number")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                cpt_lines.entry(idx).or_default().push((lineno, row));
            }
        }
    }

    let lookup = |lineno: usize, name: &str| {
        variables
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| parse_err(lineno, format!("edge names undeclared variable `{name}`")))
    };
    let edges = edge_names
        .iter()
        .map(|(l, p, c)| Ok((lookup(*l, p)?, lookup(*l, c)?)))
        .collect::<Result<Vec<_>>>()?;

    let skeleton = BayesianNetwork::uniform(variables, &edges)?;
    if cpt_lines.is_empty() {
        return Ok(skeleton);
    }
    let cpts = (0..skeleton.len())
        .map(|i| match cpt_lines.remove(&i) {
            Some(rows) => rows.into_iter().map(|(_, r)| r).collect(),
            None => {
                let q = skeleton.row_count(i);
                let r = skeleton.state_count(i);
                vec![vec![1.0 / r as f64; r]; q]
            }
        })
        .collect();
    skeleton.with_cpts(cpts)
}

/// Serializes a network. Probabilities use the shortest representation
/// that parses back to the identical `f64`.
pub fn write_network(net: &BayesianNetwork) -> String {
    let mut out = String::from("variables\n");
    for v in net.variables() {
        let _ = writeln!(out, "  {}: {}", v.name(), v.labels().join(","));
    }
    out.push_str("edges\n");
    for (p, c) in net.edges() {
        let _ = writeln!(
            out,
            "  {} -> {}",
            net.variable(p).name(),
            net.variable(c).name()
        );
    }
    for i in 0..net.len() {
        let _ = writeln!(out, "cpt {}", net.variable(i).name());
        let cpt = net.cpt(i);
        for r in 0..cpt.rows() {
            let row: Vec<String> = cpt.row(r).iter().map(|p| p.to_string()).collect();
            let _ = writeln!(out, "  {}", row.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CHAIN: &str = "\
# chain
variables
  A: a1,a2
  B: b1,b2,b3
edges
  A -> B
cpt A
  0.7 0.3
cpt B
  0.2 0.3 0.5   # A = a1
  0.1 0.1 0.8
";

    #[test]
    fn parses_chain() {
        let net = parse_network(CHAIN).unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.parents(1), &[0]);
        assert_eq!(net.cpt(1).row(1), &[0.1, 0.1, 0.8]);
        assert_eq!(net.variable(1).labels(), &["b1", "b2", "b3"]);
    }

    #[test]
    fn missing_cpt_block_is_uniform() {
        let net = parse_network("variables\n A: x,y\n B: u,v\nedges\n A -> B\ncpt A\n 0.4 0.6\n")
            .unwrap();
        assert_eq!(net.cpt(1).row(0), &[0.5, 0.5]);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_network("variables\n A: x,y\nedges\n A -> Q\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        let err = parse_network("variables\n A: x,y\ncpt A\n 0.5 zz\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        let err = parse_network(" A: x,y\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn cycle_in_file_is_reported() {
        let err =
            parse_network("variables\n A: x,y\n B: u,v\nedges\n A -> B\n B -> A\n").unwrap_err();
        assert!(matches!(err, Error::CycleDetected(_)));
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(seed in any::<u64>(), n in 1usize..5, arity in 2usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let vars: Vec<Variable> = (0..n)
                .map(|i| Variable::with_states(format!("V{i}"), if i % 2 == 0 { arity } else { 2 }))
                .collect();
            let edges: Vec<(usize, usize)> = (1..n).map(|c| (c - 1, c)).collect();
            let net = BayesianNetwork::uniform(vars, &edges)
                .unwrap()
                .with_random_cpts(&mut rng, 0.05, 1.0);
            let text = write_network(&net);
            let back = parse_network(&text).unwrap();
            prop_assert_eq!(back.edges(), net.edges());
            for i in 0..net.len() {
                for (a, b) in back.cpt(i).as_slice().iter().zip(net.cpt(i).as_slice()) {
                    prop_assert!((a - b).abs() <= 1e-15);
                }
            }
        }
    }
}
