//! Sequential "turn-on" decomposition for all-binary classifiers.
//!
//! With binary variables the log odds is a sum of scope functions:
//! `g_Y(pa_y)` for the class CPT and `g_c(x_c, pa_c \ Y)` for each child
//! `c` of `Y`. Turning inputs on one at a time (state index 1) in a
//! network-consistent order rewrites it as
//!
//! ```text
//! λ(x) = ψ_0 + Σ_i I(x_i = 1) · ψ_i(x_{A_i})
//! ```
//!
//! where `A_i` holds the inputs turned on before `i` that share a scope with
//! it. Each `ψ_i(a)` is a sum of η parameters, one per scope containing `i`,
//! so `ψ_i = J_i η_i` for a 0/1 matrix `J_i`. The ψ values are free
//! coordinates of the λ table, hence `d = Σ rank J_i`.

use crate::configs;
use crate::ebnc::Ebnc;
use crate::error::{Error, Result};
use crate::exact::IntMatrix;
use crate::network::BayesianNetwork;

/// A term of the log odds: the class CPT (`owner == Y`) or the CPT of a
/// child of `Y`. `vars` lists the inputs it reads, in turn-on order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    pub owner: usize,
    pub vars: Vec<usize>,
}

/// One η parameter. For a block parameter, `scopes` has one entry and the
/// value is `g_s(context, node = 1) − g_s(context, node = 0)` with every
/// unlisted variable at its reference state. For the intercept, `node` is
/// `None`, `scopes` lists all scopes and the value is `Σ_s g_s(reference)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaParam {
    pub node: Option<usize>,
    pub scopes: Vec<usize>,
    pub context: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct EtaBlock {
    pub node: usize,
    /// `A_i`, in turn-on order. ψ row `a` is guarded by
    /// `I(x_i = 1) · Π_j I(x_{A_i[j]} = a_j)`.
    pub guard: Vec<usize>,
    pub eta: Vec<EtaParam>,
    /// `∂ψ_i/∂η_i`: one row per guard configuration, one column per η.
    pub jacobian: IntMatrix,
}

#[derive(Debug, Clone)]
pub struct EtaPsiBlocks {
    pub turn_on: Vec<usize>,
    pub scopes: Vec<Scope>,
    pub intercept: EtaParam,
    pub blocks: Vec<EtaBlock>,
}

/// `log θ(owner | ..., Y = 1) / θ(owner | ..., Y = 0)`, or the class log odds
/// when `owner` is `Y`, read from a full state vector.
pub(crate) fn scope_value(
    net: &BayesianNetwork,
    y: usize,
    owner: usize,
    states: &mut [usize],
) -> f64 {
    let saved = states[y];
    states[y] = 1;
    let num = net.local_probability(owner, states);
    states[y] = 0;
    let den = net.local_probability(owner, states);
    states[y] = saved;
    (num / den).ln()
}

impl EtaParam {
    pub fn value(&self, net: &BayesianNetwork, y: usize) -> f64 {
        let mut states = vec![0; net.len()];
        for &(v, s) in &self.context {
            states[v] = s;
        }
        match self.node {
            None => self
                .scopes
                .iter()
                .map(|&s| scope_value(net, y, s, &mut states))
                .sum(),
            Some(i) => self
                .scopes
                .iter()
                .map(|&s| {
                    states[i] = 1;
                    let on = scope_value(net, y, s, &mut states);
                    states[i] = 0;
                    on - scope_value(net, y, s, &mut states)
                })
                .sum(),
        }
    }

    pub fn name(&self, net: &BayesianNetwork) -> String {
        let Some(i) = self.node else {
            return "eta0".to_string();
        };
        let ctx = super::kappa::assignment_label(net, &self.context);
        let owner = net.variable(self.scopes[0]).name();
        if ctx.is_empty() {
            format!("eta({};{owner})", net.variable(i).name())
        } else {
            format!("eta({};{owner}|{ctx})", net.variable(i).name())
        }
    }
}

pub fn require_binary(e: &Ebnc) -> Result<()> {
    match e.inner().variables().iter().find(|v| v.state_count() != 2) {
        Some(v) => Err(Error::NonBinaryVariable(v.name().to_string())),
        None => Ok(()),
    }
}

pub fn build_eta_psi(e: &Ebnc, cap: u128) -> Result<EtaPsiBlocks> {
    require_binary(e)?;
    let net = e.inner();
    let y = e.class_node();
    let turn_on: Vec<usize> = net
        .topological_order()
        .iter()
        .copied()
        .filter(|&v| v != y)
        .collect();
    let mut rank_of = vec![usize::MAX; net.len()];
    for (k, &v) in turn_on.iter().enumerate() {
        rank_of[v] = k;
    }
    let sorted = |mut vars: Vec<usize>| {
        vars.sort_by_key(|&v| rank_of[v]);
        vars
    };

    let mut scopes = vec![Scope {
        owner: y,
        vars: sorted(net.parents(y).to_vec()),
    }];
    for &c in net.children(y) {
        let mut vars: Vec<usize> = net.parents(c).iter().copied().filter(|&p| p != y).collect();
        vars.push(c);
        scopes.push(Scope {
            owner: c,
            vars: sorted(vars),
        });
    }

    let intercept = EtaParam {
        node: None,
        scopes: scopes.iter().map(|s| s.owner).collect(),
        context: Vec::new(),
    };

    let mut blocks = Vec::with_capacity(turn_on.len());
    for &i in &turn_on {
        let containing: Vec<&Scope> = scopes.iter().filter(|s| s.vars.contains(&i)).collect();
        let earlier = |s: &Scope| -> Vec<usize> {
            s.vars
                .iter()
                .copied()
                .filter(|&v| rank_of[v] < rank_of[i])
                .collect()
        };
        let mut guard: Vec<usize> = containing.iter().flat_map(|s| earlier(s)).collect();
        guard = sorted(guard);
        guard.dedup();
        let rows = 1u128 << guard.len().min(127);
        if guard.len() >= 127 || rows > cap {
            return Err(Error::CapExceeded {
                what: "psi block",
                requested: rows,
                cap,
            });
        }

        let mut eta = Vec::new();
        // (first column, earlier vars as guard positions) per scope
        let mut layout = Vec::new();
        for s in &containing {
            let vars = earlier(s);
            let pos: Vec<usize> = vars
                .iter()
                .map(|v| {
                    guard
                        .iter()
                        .position(|g| g == v)
                        .expect("guard covers scope")
                })
                .collect();
            layout.push((eta.len(), pos));
            let mut a = vec![0; vars.len()];
            let radices = vec![2; vars.len()];
            loop {
                eta.push(EtaParam {
                    node: Some(i),
                    scopes: vec![s.owner],
                    context: vars.iter().copied().zip(a.iter().copied()).collect(),
                });
                if !configs::advance(&mut a, &radices) {
                    break;
                }
            }
        }

        let mut jacobian = IntMatrix::zeros(rows as usize, eta.len());
        let guard_radices = vec![2; guard.len()];
        for r in 0..rows as usize {
            let a = configs::decode(r, &guard_radices);
            for (first, pos) in &layout {
                let sub: usize = pos.iter().fold(0, |acc, &p| acc * 2 + a[p]);
                jacobian.set(r, first + sub, 1);
            }
        }
        blocks.push(EtaBlock {
            node: i,
            guard,
            eta,
            jacobian,
        });
    }

    Ok(EtaPsiBlocks {
        turn_on,
        scopes,
        intercept,
        blocks,
    })
}

impl EtaPsiBlocks {
    /// Every η parameter: the intercept, then each block in turn-on order.
    pub fn params(&self) -> Vec<EtaParam> {
        std::iter::once(self.intercept.clone())
            .chain(self.blocks.iter().flat_map(|b| b.eta.iter().cloned()))
            .collect()
    }

    /// Evaluates the indicator expansion at `x` (outer input order) using η
    /// values from the CPTs of `e`.
    pub fn reconstruct_log_odds(&self, e: &Ebnc, x: &[usize]) -> f64 {
        let net = e.inner();
        let y = e.class_node();
        let mut states = vec![0; net.len()];
        for (&v, &s) in e.input_nodes().iter().zip(x) {
            states[v] = s;
        }
        let mut total = self.intercept.value(net, y);
        for b in &self.blocks {
            if states[b.node] != 1 {
                continue;
            }
            let a: Vec<usize> = b.guard.iter().map(|&g| states[g]).collect();
            let row = configs::encode(&a, &vec![2; a.len()]);
            for (col, p) in b.eta.iter().enumerate() {
                if b.jacobian.get(row, col) != 0 {
                    total += b.jacobian.get(row, col) as f64 * p.value(net, y);
                }
            }
        }
        total
    }
}
