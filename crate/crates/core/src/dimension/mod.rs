//! Model dimension and a non-redundant parameterization φ of a classifier.
//!
//! Both methods express the log-odds table as an exact integer matrix times
//! a parameter vector (κ for the global method, η for the blockwise one)
//! and reduce it to echelon form. The nonzero echelon rows define
//! `φ = R · params`; the λ table is then `C · φ` where `C` is the matrix
//! restricted to the pivot columns.

pub mod blockwise;
pub mod kappa;
pub mod openness;

use std::fmt::{self, Write as _};

use num_traits::Signed;
use rayon::prelude::*;

pub use blockwise::{build_eta_psi, EtaBlock, EtaParam, EtaPsiBlocks, Scope};
pub use kappa::{build_kappa_system, KappaParam, KappaSystem};
pub use openness::{check_theta_eta_open, Omega, OpennessReport};

use crate::ebnc::Ebnc;
use crate::error::{Error, Result};
use crate::exact::{self, Rational, SparseIntMatrix};

/// Default cap on coefficient-matrix rows.
pub const DEFAULT_ROW_CAP: u128 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Global,
    Blockwise,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Global => "global",
            Method::Blockwise => "blockwise",
        })
    }
}

#[derive(Debug, Clone)]
enum Params {
    Kappa(Vec<KappaParam>),
    Eta(Vec<EtaParam>),
}

#[derive(Debug, Clone)]
pub struct DimensionReport {
    pub method: Method,
    pub dimension: usize,
    pub param_names: Vec<String>,
    /// φ_t as sparse rational combinations of the parameters.
    pub basis: Vec<Vec<(usize, Rational)>>,
    /// Row `x·(r_y−1) + (k−1)` gives λ for class state `k` at input
    /// configuration `x` as an integer combination of φ.
    pub lambda_map: SparseIntMatrix,
    /// For the blockwise method: rank of the intercept block, then of each
    /// input block in turn-on order.
    pub block_ranks: Option<Vec<usize>>,
    class_states: usize,
    input_names: Vec<String>,
    input_radices: Vec<usize>,
    params: Params,
    basis_f64: Vec<Vec<(usize, f64)>>,
}

fn sparse_basis(r: &exact::Rref) -> Vec<Vec<(usize, Rational)>> {
    r.rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(c, v)| (c, v.clone()))
                .collect()
        })
        .collect()
}

impl DimensionReport {
    fn assemble(
        e: &Ebnc,
        method: Method,
        params: Params,
        param_names: Vec<String>,
        basis: Vec<Vec<(usize, Rational)>>,
        lambda_map: SparseIntMatrix,
        block_ranks: Option<Vec<usize>>,
    ) -> Self {
        let basis_f64 = basis
            .iter()
            .map(|row| row.iter().map(|(c, v)| (*c, v.to_f64())).collect())
            .collect();
        Self {
            method,
            dimension: basis.len(),
            param_names,
            basis,
            lambda_map,
            block_ranks,
            class_states: e.class_states(),
            input_names: e.input_names().iter().map(|s| s.to_string()).collect(),
            input_radices: e.input_radices(),
            params,
            basis_f64,
        }
    }

    pub fn class_states(&self) -> usize {
        self.class_states
    }

    pub fn input_radices(&self) -> &[usize] {
        &self.input_radices
    }

    /// Errors unless `e` has the class arity and inputs this report was
    /// computed for.
    pub fn check_matches(&self, e: &Ebnc) -> Result<()> {
        if e.class_states() != self.class_states
            || e.input_radices() != self.input_radices
            || e.input_names() != self.input_names
        {
            return Err(Error::BasisMismatch(format!(
                "report is for {} class states over inputs {:?}, classifier has {} over {:?}",
                self.class_states,
                self.input_names,
                e.class_states(),
                e.input_names()
            )));
        }
        Ok(())
    }

    /// Underlying κ or η parameters evaluated at the CPTs of `e`.
    pub fn param_values(&self, e: &Ebnc) -> Result<Vec<f64>> {
        self.check_matches(e)?;
        let net = e.inner();
        let y = e.class_node();
        Ok(match &self.params {
            Params::Kappa(ps) => ps.iter().map(|p| p.value(net, y)).collect(),
            Params::Eta(ps) => ps.iter().map(|p| p.value(net, y)).collect(),
        })
    }

    /// φ coordinates of the CPTs of `e`.
    pub fn phi_values(&self, e: &Ebnc) -> Result<Vec<f64>> {
        let p = self.param_values(e)?;
        Ok(self
            .basis_f64
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * p[c]).sum())
            .collect())
    }

    /// The λ table (flattened, `k` fastest) for basis coordinates `phi`.
    pub fn lambda_table(&self, phi: &[f64]) -> Vec<f64> {
        (0..self.lambda_map.rows())
            .map(|r| {
                self.lambda_map
                    .row(r)
                    .iter()
                    .map(|&(c, v)| v as f64 * phi[c])
                    .sum()
            })
            .collect()
    }

    /// Text report: method, dimension and one line per basis vector.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}", self.method);
        let _ = writeln!(out, "d = {}", self.dimension);
        if let Some(ranks) = &self.block_ranks {
            let r: Vec<String> = ranks.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(out, "block ranks: {}", r.join(" "));
        }
        for (t, row) in self.basis.iter().enumerate() {
            let _ = write!(out, "phi_{} =", t + 1);
            for (k, (c, v)) in row.iter().enumerate() {
                let sign = if v.numer().is_negative() { "-" } else { "+" };
                let mag = Rational::new(v.numer().abs(), v.denom().clone());
                let name = &self.param_names[*c];
                match (k, sign) {
                    (0, "-") => out.push_str(" -"),
                    (0, _) => {}
                    _ => {
                        let _ = write!(out, " {sign}");
                    }
                }
                if mag == Rational::integer(1) {
                    let _ = write!(out, " {name}");
                } else {
                    let _ = write!(out, " {mag}*{name}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Dimension by eliminating the κ → λ coefficient matrix. Any arity.
pub fn dimension_global(e: &Ebnc, cap: u128) -> Result<DimensionReport> {
    let sys = build_kappa_system(e, cap)?;
    let rref = sys.matrix.row_space_rref();
    let lambda_map = sys.matrix.select_columns(&rref.pivots);
    Ok(DimensionReport::assemble(
        e,
        Method::Global,
        Params::Kappa(sys.params),
        sys.names,
        sparse_basis(&rref),
        lambda_map,
        None,
    ))
}

/// Dimension as the sum of per-block ranks of `∂ψ_i/∂η_i`. Binary only.
pub fn dimension_blockwise(e: &Ebnc, cap: u128) -> Result<DimensionReport> {
    let blocks = build_eta_psi(e, cap)?;
    let params = blocks.params();
    let names = params.iter().map(|p| p.name(e.inner())).collect();
    let rrefs: Vec<exact::Rref> = blocks
        .blocks
        .par_iter()
        .map(|b| exact::row_space_rref(&b.jacobian))
        .collect();

    let mut basis = vec![vec![(0, Rational::integer(1))]];
    let mut ranks = vec![1];
    // φ offset and η offset of each block
    let mut offsets = Vec::with_capacity(blocks.blocks.len());
    let mut eta_off = 1;
    for (b, r) in blocks.blocks.iter().zip(&rrefs) {
        offsets.push(basis.len());
        for row in sparse_basis(r) {
            basis.push(row.into_iter().map(|(c, v)| (eta_off + c, v)).collect());
        }
        ranks.push(r.rank());
        eta_off += b.eta.len();
    }

    let radices = e.input_radices();
    let inputs = e.input_nodes();
    let position: Vec<usize> = {
        let mut pos = vec![usize::MAX; e.inner().len()];
        for (j, &v) in inputs.iter().enumerate() {
            pos[v] = j;
        }
        pos
    };
    let q = crate::configs::count(&radices).unwrap_or(u128::MAX);
    if q > cap {
        return Err(Error::CapExceeded {
            what: "log-odds table",
            requested: q,
            cap,
        });
    }
    let mut lambda_map = SparseIntMatrix::new(basis.len());
    let mut x = vec![0; radices.len()];
    for _ in 0..q {
        let mut row = vec![(0, 1)];
        for ((b, r), &off) in blocks.blocks.iter().zip(&rrefs).zip(&offsets) {
            if x[position[b.node]] != 1 {
                continue;
            }
            let a: usize = b.guard.iter().fold(0, |acc, &g| acc * 2 + x[position[g]]);
            for (t, &p) in r.pivots.iter().enumerate() {
                let v = b.jacobian.get(a, p);
                if v != 0 {
                    row.push((off + t, v));
                }
            }
        }
        lambda_map.push_row(row);
        crate::configs::advance(&mut x, &radices);
    }

    Ok(DimensionReport::assemble(
        e,
        Method::Blockwise,
        Params::Eta(params),
        names,
        basis,
        lambda_map,
        Some(ranks),
    ))
}

/// Blockwise when every variable is binary, global otherwise.
pub fn dimension(e: &Ebnc, cap: u128) -> Result<DimensionReport> {
    if blockwise::require_binary(e).is_ok() {
        dimension_blockwise(e, cap)
    } else {
        dimension_global(e, cap)
    }
}

/// Number of free θ parameters of the inner network.
pub fn free_parameter_count(e: &Ebnc) -> u128 {
    let net = e.inner();
    (0..net.len())
        .map(|i| net.row_count(i) as u128 * (net.state_count(i) as u128 - 1))
        .sum()
}

#[cfg(test)]
mod tests;
