//! Brute-force reference computations used to cross-check the fast paths.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::configs;
use crate::ebnc::{Ebnc, DEFAULT_CONFIG_CAP};
use crate::error::{Error, Result};
use crate::network::{BayesianNetwork, Configuration};

/// Enumeration limit for [`exhaustive_posterior`]: 2^20 joint configurations.
pub const EXHAUSTIVE_CAP: u128 = 1 << 20;

/// `p(Y | x)` by summing the joint over every completion of `x`. The class
/// must be unassigned; other unassigned variables are marginalized.
pub fn exhaustive_posterior(
    inner: &BayesianNetwork,
    y: usize,
    x: &Configuration,
) -> Result<Vec<f64>> {
    if y >= inner.len() {
        return Err(Error::InvalidIndex(format!("class node {y}")));
    }
    if x.len() != inner.len() {
        return Err(Error::InvalidIndex(format!(
            "configuration over {} variables for a network of {}",
            x.len(),
            inner.len()
        )));
    }
    if x.get(y).is_some() {
        return Err(Error::InvalidArgument(
            "class variable must be unassigned".into(),
        ));
    }
    x.validate(inner)?;
    let free: Vec<usize> = (0..inner.len())
        .filter(|&v| v != y && x.get(v).is_none())
        .collect();
    let radices: Vec<usize> = free.iter().map(|&v| inner.state_count(v)).collect();
    let completions = configs::count(&radices).unwrap_or(u128::MAX);
    let total = completions.saturating_mul(inner.state_count(y) as u128);
    if total > EXHAUSTIVE_CAP {
        return Err(Error::TooLarge(total));
    }

    let mut states: Vec<usize> = (0..inner.len()).map(|v| x.get(v).unwrap_or(0)).collect();
    let mut post = vec![0.0; inner.state_count(y)];
    let mut fill = vec![0; free.len()];
    for _ in 0..completions {
        for (&v, &s) in free.iter().zip(&fill) {
            states[v] = s;
        }
        for (k, slot) in post.iter_mut().enumerate() {
            states[y] = k;
            *slot += inner.joint_probability_total(&states);
        }
        configs::advance(&mut fill, &radices);
    }
    let z: f64 = post.iter().sum();
    Ok(post.into_iter().map(|p| p / z).collect())
}

/// Random interior CPT settings at which to evaluate the Jacobian rank.
#[derive(Debug, Clone)]
pub struct RankProbe {
    pub theta_points: Vec<BayesianNetwork>,
    /// Singular values above `tolerance · σ_max` count towards the rank.
    pub tolerance: f64,
    pub step: f64,
    pub per_point_ranks: Vec<usize>,
}

impl RankProbe {
    /// `points` settings with entries drawn from U[0.1, 0.9] per row entry,
    /// then normalized.
    pub fn random(e: &Ebnc, points: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            theta_points: (0..points)
                .map(|_| e.inner().with_random_cpts(&mut rng, 0.1, 0.9))
                .collect(),
            tolerance: 1e-6,
            step: 1e-6,
            per_point_ranks: Vec::new(),
        }
    }
}

/// Jacobian of the full λ table with respect to the free CPT coordinates
/// (all but the last entry of every row; the last entry compensates).
pub fn lambda_jacobian(e: &Ebnc, theta: &BayesianNetwork, step: f64) -> Result<DMatrix<f64>> {
    let at = e.with_inner_cpts(theta.clone())?;
    let rows = at.full_log_odds_table(DEFAULT_CONFIG_CAP)?.as_slice().len();
    let mut coords = Vec::new();
    for v in 0..theta.len() {
        let r = theta.state_count(v);
        for row in 0..theta.row_count(v) {
            for s in 0..r - 1 {
                coords.push((v, row * r + s, row * r + r - 1));
            }
        }
    }
    let columns: Vec<Vec<f64>> = coords
        .par_iter()
        .map(|&(v, idx, last)| {
            let table = |sign: f64| {
                let mut net = theta.clone();
                let mut probs = theta.cpt(v).as_slice().to_vec();
                probs[idx] += sign * step;
                probs[last] -= sign * step;
                net.set_cpt_flat_unchecked(v, probs);
                e.with_inner_unchecked(net)
                    .full_log_odds_table(DEFAULT_CONFIG_CAP)
                    .expect("cap checked above")
                    .as_slice()
                    .to_vec()
            };
            let plus = table(1.0);
            let minus = table(-1.0);
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * step))
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(rows, coords.len(), |r, c| columns[c][r]))
}

/// Numeric rank of the θ → λ map: the largest rank seen over the probe
/// points.
pub fn numeric_jacobian_rank(e: &Ebnc, probe: &mut RankProbe) -> Result<usize> {
    probe.per_point_ranks = probe
        .theta_points
        .iter()
        .map(|theta| {
            let j = lambda_jacobian(e, theta, probe.step)?;
            let s = j.singular_values();
            let max = s.iter().fold(0.0f64, |m, v| m.max(*v));
            Ok(s.iter().filter(|&&v| v > probe.tolerance * max).count())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(probe.per_point_ranks.iter().copied().max().unwrap_or(0))
}

/// Closed-form Dirichlet-multinomial log marginal likelihood, summed over
/// parent configurations. `counts[j][k]` is the count of state `k` at
/// configuration `j`.
pub fn exact_trivial_marginal(counts: &[Vec<f64>], alpha: &[f64]) -> Result<f64> {
    if alpha.is_empty() || alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidAlpha);
    }
    let a0: f64 = alpha.iter().sum();
    let mut total = 0.0;
    for row in counts {
        if row.len() != alpha.len() {
            return Err(Error::InvalidArgument(format!(
                "{} counts for {} pseudo-counts",
                row.len(),
                alpha.len()
            )));
        }
        let n: f64 = row.iter().sum();
        total += ln_gamma(a0) - ln_gamma(a0 + n);
        for (&a, &c) in alpha.iter().zip(row) {
            total += ln_gamma(a + c) - ln_gamma(a);
        }
    }
    Ok(total)
}
