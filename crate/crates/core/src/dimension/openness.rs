//! Structural check that the θ → η map of the blockwise construction is
//! open, via an intermediate ω parameterization.
//!
//! ω holds the value of every scope function at every configuration of its
//! scope. θ → ω is open when distinct ω depend on disjoint free θ
//! coordinates, except for the pair `g_c(x_c = 0, u)`, `g_c(x_c = 1, u)` of a
//! child, which is a diffeomorphic image of its two θ coordinates. ω → η is
//! linear; a unit triangular square submatrix of its Jacobian makes it
//! surjective.

use std::collections::{BTreeMap, BTreeSet};

use super::blockwise::{build_eta_psi, EtaPsiBlocks};
use crate::configs;
use crate::ebnc::Ebnc;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Omega {
    /// Index into [`EtaPsiBlocks::scopes`].
    pub scope: usize,
    /// States of the scope variables, in the scope's order.
    pub config: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct OpennessReport {
    pub omega: Vec<Omega>,
    pub omega_names: Vec<String>,
    pub eta_names: Vec<String>,
    /// ω pairs that share θ coordinates.
    pub pairs: Vec<(usize, usize)>,
    /// η rows in elimination order; with `pivot_columns` this selects an
    /// upper unit triangular submatrix of `∂η/∂ω`.
    pub row_order: Vec<usize>,
    pub pivot_columns: Vec<usize>,
}

pub fn check_theta_eta_open(e: &Ebnc, cap: u128) -> Result<OpennessReport> {
    let blocks = build_eta_psi(e, cap)?;
    let net = e.inner();
    let y = e.class_node();

    let mut omega = Vec::new();
    let mut omega_index = BTreeMap::new();
    for (si, s) in blocks.scopes.iter().enumerate() {
        let radices = vec![2; s.vars.len()];
        if s.vars.len() >= 127 || (1u128 << s.vars.len()) > cap {
            return Err(Error::CapExceeded {
                what: "omega scope",
                requested: 1u128 << s.vars.len().min(127),
                cap,
            });
        }
        let mut config = vec![0; s.vars.len()];
        loop {
            omega_index.insert((si, config.clone()), omega.len());
            omega.push(Omega {
                scope: si,
                config: config.clone(),
            });
            if !configs::advance(&mut config, &radices) {
                break;
            }
        }
    }

    // Free θ coordinates are (node, CPT row): binary rows have one.
    let mut deps: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut states = vec![0; net.len()];
    for (w, om) in omega.iter().enumerate() {
        let s = &blocks.scopes[om.scope];
        states.iter_mut().for_each(|v| *v = 0);
        for (&v, &st) in s.vars.iter().zip(&om.config) {
            states[v] = st;
        }
        for ys in 0..2 {
            states[y] = ys;
            deps.entry((s.owner, net.row_index(s.owner, &states)))
                .or_default()
                .push(w);
            if s.owner == y {
                break;
            }
        }
    }
    let mut pairs = BTreeSet::new();
    for ((node, row), users) in &deps {
        match users.as_slice() {
            [_] => {}
            [a, b] if complementary(&blocks, &omega[*a], &omega[*b]) => {
                pairs.insert((*a, *b));
            }
            _ => {
                return Err(Error::TriangularizationFailed(format!(
                    "theta coordinate ({}, row {row}) feeds omega {users:?}",
                    net.variable(*node).name()
                )))
            }
        }
    }

    let params = blocks.params();
    let rows: Vec<Vec<(usize, i64)>> = params
        .iter()
        .map(|p| match p.node {
            None => (0..blocks.scopes.len())
                .map(|si| (omega_index[&(si, vec![0; blocks.scopes[si].vars.len()])], 1))
                .collect(),
            Some(i) => {
                let si = blocks
                    .scopes
                    .iter()
                    .position(|s| s.owner == p.scopes[0])
                    .expect("eta scope exists");
                let s = &blocks.scopes[si];
                let mut config: Vec<usize> = s
                    .vars
                    .iter()
                    .map(|v| p.context.iter().find(|c| c.0 == *v).map_or(0, |c| c.1))
                    .collect();
                let at = s.vars.iter().position(|&v| v == i).expect("node in scope");
                config[at] = 1;
                let on = omega_index[&(si, config.clone())];
                config[at] = 0;
                let off = omega_index[&(si, config)];
                vec![(on, 1), (off, -1)]
            }
        })
        .collect();

    let (row_order, pivot_columns) = peel(&rows, omega.len())?;
    Ok(OpennessReport {
        omega_names: omega.iter().map(|w| omega_name(&blocks, e, w)).collect(),
        omega,
        eta_names: params.iter().map(|p| p.name(net)).collect(),
        pairs: pairs.into_iter().collect(),
        row_order,
        pivot_columns,
    })
}

fn complementary(blocks: &EtaPsiBlocks, a: &Omega, b: &Omega) -> bool {
    if a.scope != b.scope {
        return false;
    }
    let s = &blocks.scopes[a.scope];
    let Some(at) = s.vars.iter().position(|&v| v == s.owner) else {
        return false;
    };
    (0..s.vars.len()).all(|k| (k == at) != (a.config[k] == b.config[k]))
}

fn omega_name(blocks: &EtaPsiBlocks, e: &Ebnc, w: &Omega) -> String {
    let net = e.inner();
    let s = &blocks.scopes[w.scope];
    let ctx: Vec<(usize, usize)> = s
        .vars
        .iter()
        .copied()
        .zip(w.config.iter().copied())
        .collect();
    format!(
        "omega[{}]({})",
        net.variable(s.owner).name(),
        super::kappa::assignment_label(net, &ctx)
    )
}

/// Repeatedly takes the smallest column with a single `+1` among the rows
/// still active and retires that row.
fn peel(rows: &[Vec<(usize, i64)>], cols: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); cols];
    for (r, row) in rows.iter().enumerate() {
        for &(c, _) in row {
            users[c].push(r);
        }
    }
    let mut active = vec![true; rows.len()];
    let mut count: Vec<usize> = users.iter().map(Vec::len).collect();
    let mut used = vec![false; cols];
    let mut ready: BTreeSet<usize> = (0..cols).filter(|&c| count[c] == 1).collect();
    let mut order = Vec::with_capacity(rows.len());
    let mut pivots = Vec::with_capacity(rows.len());

    while order.len() < rows.len() {
        let pick = ready.iter().copied().find(|&c| {
            let r = users[c]
                .iter()
                .copied()
                .find(|&r| active[r])
                .expect("count is 1");
            rows[r].iter().any(|&(cc, v)| cc == c && v == 1)
        });
        let Some(c) = pick else {
            return Err(Error::TriangularizationFailed(format!(
                "{} of {} eta rows left without a unit pivot",
                rows.len() - order.len(),
                rows.len()
            )));
        };
        let r = users[c]
            .iter()
            .copied()
            .find(|&r| active[r])
            .expect("count is 1");
        active[r] = false;
        used[c] = true;
        order.push(r);
        pivots.push(c);
        for &(cc, _) in &rows[r] {
            count[cc] -= 1;
            if count[cc] == 1 && !used[cc] {
                ready.insert(cc);
            } else {
                ready.remove(&cc);
            }
        }
    }
    Ok((order, pivots))
}
