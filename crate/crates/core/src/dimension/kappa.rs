//! The linear map from log CPT ratios (κ) to posterior log odds (λ).
//!
//! Every λ entry is a sum of κ parameters with coefficient 1: the class
//! term `κ(y^k | pa_y)` plus one `κ(x_c | pa_c^k)` per child `c` of `Y`.
//! Nodes after `Y` that do not have `Y` as a parent contribute
//! `log θ/θ = 0` and carry no parameter.

use crate::configs;
use crate::ebnc::Ebnc;
use crate::error::{Error, Result};
use crate::exact::SparseIntMatrix;
use crate::network::BayesianNetwork;

/// One κ parameter: `log θ(node = state | context, y^k) / θ(node = state |
/// context, y^1)` for a child of `Y`, or `log θ(y^k | context) /
/// θ(y^1 | context)` when `node` is the class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KappaParam {
    pub node: usize,
    pub state: usize,
    pub class_state: usize,
    /// Non-class parents of `node` with their states.
    pub context: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct KappaSystem {
    pub params: Vec<KappaParam>,
    pub names: Vec<String>,
    /// One row per `(x, k)`, `x` row-major over inputs and `k` fastest.
    pub matrix: SparseIntMatrix,
}

pub(crate) fn assignment_label(net: &BayesianNetwork, ctx: &[(usize, usize)]) -> String {
    ctx.iter()
        .map(|&(v, s)| format!("{}={}", net.variable(v).name(), net.variable(v).labels()[s]))
        .collect::<Vec<_>>()
        .join(",")
}

impl KappaParam {
    pub fn name(&self, e: &Ebnc) -> String {
        let net = e.inner();
        let y = e.class_node();
        let yk = &net.variable(y).labels()[self.class_state];
        let ctx = assignment_label(net, &self.context);
        if self.node == y {
            if ctx.is_empty() {
                format!("kappa({}={yk})", net.variable(y).name())
            } else {
                format!("kappa({}={yk}|{ctx})", net.variable(y).name())
            }
        } else {
            let v = net.variable(self.node);
            let sep = if ctx.is_empty() { "" } else { "," };
            format!(
                "kappa({}={}|{ctx}{sep}{}={yk})",
                v.name(),
                v.labels()[self.state],
                net.variable(y).name()
            )
        }
    }

    /// Value under the CPTs of `net`.
    pub fn value(&self, net: &BayesianNetwork, y: usize) -> f64 {
        let mut states = vec![0; net.len()];
        for &(v, s) in &self.context {
            states[v] = s;
        }
        states[self.node] = self.state;
        states[y] = self.class_state;
        let num = net.local_probability(self.node, &states);
        states[y] = 0;
        let den = net.local_probability(self.node, &states);
        (num / den).ln()
    }
}

pub fn build_kappa_system(e: &Ebnc, cap: u128) -> Result<KappaSystem> {
    let net = e.inner();
    let y = e.class_node();
    let ry = e.class_states();
    let radices = e.input_radices();
    let q = configs::count(&radices).unwrap_or(u128::MAX);
    let rows = q.saturating_mul((ry - 1) as u128);
    if rows > cap {
        return Err(Error::CapExceeded {
            what: "kappa coefficient matrix",
            requested: rows,
            cap,
        });
    }

    // Parameter layout: class block first, then each child of Y in index
    // order. Within a block: context row-major, then k, then state.
    let class_ctx: Vec<usize> = net.parents(y).to_vec();
    let children: Vec<usize> = net.children(y).to_vec();
    let child_ctx: Vec<Vec<usize>> = children
        .iter()
        .map(|&c| net.parents(c).iter().copied().filter(|&p| p != y).collect())
        .collect();

    let mut params = Vec::new();
    let radix_of = |vars: &[usize]| vars.iter().map(|&v| net.state_count(v)).collect::<Vec<_>>();

    let class_radices = radix_of(&class_ctx);
    let class_offset = 0;
    let mut u = vec![0; class_ctx.len()];
    loop {
        for k in 1..ry {
            params.push(KappaParam {
                node: y,
                state: k,
                class_state: k,
                context: class_ctx.iter().copied().zip(u.iter().copied()).collect(),
            });
        }
        if !configs::advance(&mut u, &class_radices) {
            break;
        }
    }

    let mut child_offsets = Vec::with_capacity(children.len());
    for (ci, &c) in children.iter().enumerate() {
        child_offsets.push(params.len());
        let ctx = &child_ctx[ci];
        let ctx_radices = radix_of(ctx);
        let rc = net.state_count(c);
        let mut u = vec![0; ctx.len()];
        loop {
            for k in 1..ry {
                for s in 0..rc {
                    params.push(KappaParam {
                        node: c,
                        state: s,
                        class_state: k,
                        context: ctx.iter().copied().zip(u.iter().copied()).collect(),
                    });
                }
            }
            if !configs::advance(&mut u, &ctx_radices) {
                break;
            }
        }
    }

    let mut matrix = SparseIntMatrix::new(params.len());
    let inputs = e.input_nodes();
    let mut x = vec![0; radices.len()];
    let mut states = vec![0; net.len()];
    let child_radices: Vec<Vec<usize>> = child_ctx.iter().map(|c| radix_of(c)).collect();
    for _ in 0..q as usize {
        for (&v, &s) in inputs.iter().zip(&x) {
            states[v] = s;
        }
        let u_class = encode_vars(&class_ctx, &states, &class_radices);
        for k in 1..ry {
            let mut row = Vec::with_capacity(1 + children.len());
            row.push((class_offset + u_class * (ry - 1) + (k - 1), 1));
            for (ci, &c) in children.iter().enumerate() {
                let u = encode_vars(&child_ctx[ci], &states, &child_radices[ci]);
                let rc = net.state_count(c);
                row.push((
                    child_offsets[ci] + (u * (ry - 1) + (k - 1)) * rc + states[c],
                    1,
                ));
            }
            matrix.push_row(row);
        }
        configs::advance(&mut x, &radices);
    }

    let names = params.iter().map(|p| p.name(e)).collect();
    Ok(KappaSystem {
        params,
        names,
        matrix,
    })
}

fn encode_vars(vars: &[usize], states: &[usize], radices: &[usize]) -> usize {
    vars.iter()
        .zip(radices)
        .fold(0, |acc, (&v, &r)| acc * r + states[v])
}

impl KappaSystem {
    /// κ evaluated at the CPTs of `e`.
    pub fn values(&self, e: &Ebnc) -> Vec<f64> {
        self.params
            .iter()
            .map(|p| p.value(e.inner(), e.class_node()))
            .collect()
    }

    /// `matrix · κ`, flattened like a log-odds table.
    pub fn apply(&self, kappa: &[f64]) -> Vec<f64> {
        (0..self.matrix.rows())
            .map(|r| {
                self.matrix
                    .row(r)
                    .iter()
                    .map(|&(c, v)| v as f64 * kappa[c])
                    .sum()
            })
            .collect()
    }
}
