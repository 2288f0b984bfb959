//! Likelihood, ML/MAP fitting and marginal-likelihood scores in the
//! non-redundant φ coordinates.
//!
//! λ is linear in φ, so the local log likelihood is that of a softmax-linear
//! model and is concave in φ. Fitting is gradient ascent with a backtracking
//! line search, with the ascent direction preconditioned by the (damped)
//! negative Hessian.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::configs;
use crate::dataset::Dataset;
use crate::dimension::{self, DimensionReport};
use crate::ebnc::{log_softmax, softmax, Ebnc};
use crate::error::{Error, Result};
use crate::network::BayesianNetwork;
use crate::numfmt::sig9;
use crate::structures::InnerStructure;

/// Class counts at one observed input configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub config: usize,
    pub counts: Vec<f64>,
    pub total: f64,
}

/// Sufficient statistics of a dataset for one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCounts {
    pub class_states: usize,
    pub cells: Vec<Cell>,
    pub n: usize,
}

/// Columns of `data` holding the class and the inputs of `e`, checked
/// label by label.
pub fn bind_columns(e: &Ebnc, data: &Dataset) -> Result<(usize, Vec<usize>)> {
    let net = e.inner();
    let find = |v: usize| -> Result<usize> {
        let var = net.variable(v);
        let c = data.column_of(var.name()).ok_or_else(|| {
            Error::SchemaMismatch(format!("dataset has no column `{}`", var.name()))
        })?;
        if data.variables()[c].labels() != var.labels() {
            return Err(Error::SchemaMismatch(format!(
                "labels of `{}` differ between classifier and dataset",
                var.name()
            )));
        }
        Ok(c)
    };
    let y = find(e.class_node())?;
    let xs = e
        .input_nodes()
        .iter()
        .map(|&v| find(v))
        .collect::<Result<_>>()?;
    Ok((y, xs))
}

pub fn local_counts(e: &Ebnc, data: &Dataset) -> Result<LocalCounts> {
    let (yc, xc) = bind_columns(e, data)?;
    let radices = e.input_radices();
    let r = e.class_states();
    let mut map = std::collections::BTreeMap::<usize, Vec<f64>>::new();
    let mut x = vec![0; xc.len()];
    for row in data.rows() {
        for (slot, &c) in x.iter_mut().zip(&xc) {
            *slot = row[c];
        }
        map.entry(configs::encode(&x, &radices))
            .or_insert_with(|| vec![0.0; r])[row[yc]] += 1.0;
    }
    Ok(LocalCounts {
        class_states: r,
        cells: map
            .into_iter()
            .map(|(config, counts)| Cell {
                config,
                total: counts.iter().sum(),
                counts,
            })
            .collect(),
        n: data.len(),
    })
}

/// Local log likelihood of one classifier as a function of φ.
#[derive(Debug, Clone)]
pub struct LocalObjective<'a> {
    report: &'a DimensionReport,
    counts: LocalCounts,
}

impl<'a> LocalObjective<'a> {
    pub fn new(e: &Ebnc, report: &'a DimensionReport, data: &Dataset) -> Result<Self> {
        report.check_matches(e)?;
        Ok(Self {
            report,
            counts: local_counts(e, data)?,
        })
    }

    pub fn from_counts(report: &'a DimensionReport, counts: LocalCounts) -> Self {
        Self { report, counts }
    }

    pub fn dimension(&self) -> usize {
        self.report.dimension
    }

    pub fn counts(&self) -> &LocalCounts {
        &self.counts
    }

    pub fn report(&self) -> &DimensionReport {
        self.report
    }

    fn check_phi(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.dimension() {
            return Err(Error::BasisMismatch(format!(
                "phi has {} coordinates, basis has {}",
                phi.len(),
                self.dimension()
            )));
        }
        Ok(())
    }

    fn rows_of(&self, config: usize) -> impl Iterator<Item = &[(usize, i64)]> {
        let k = self.counts.class_states - 1;
        (0..k).map(move |j| self.report.lambda_map.row(config * k + j))
    }

    fn lambda(&self, config: usize, phi: &[f64]) -> Vec<f64> {
        self.rows_of(config)
            .map(|row| row.iter().map(|&(c, v)| v as f64 * phi[c]).sum())
            .collect()
    }

    pub fn log_likelihood(&self, phi: &[f64]) -> f64 {
        self.counts
            .cells
            .iter()
            .map(|cell| {
                let lp = log_softmax(&self.lambda(cell.config, phi));
                cell.counts
                    .iter()
                    .zip(&lp)
                    .filter(|(n, _)| **n > 0.0)
                    .map(|(n, l)| n * l)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn gradient(&self, phi: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; phi.len()];
        for cell in &self.counts.cells {
            let p = softmax(&self.lambda(cell.config, phi));
            for (k, row) in self.rows_of(cell.config).enumerate() {
                let w = cell.counts[k + 1] - cell.total * p[k + 1];
                for &(c, v) in row {
                    g[c] += w * v as f64;
                }
            }
        }
        g
    }

    /// Analytic negative Hessian of the log likelihood.
    pub fn neg_hessian(&self, phi: &[f64]) -> DMatrix<f64> {
        let d = phi.len();
        let mut a = DMatrix::zeros(d, d);
        for cell in &self.counts.cells {
            let p = softmax(&self.lambda(cell.config, phi));
            add_softmax_curvature(&mut a, self.rows_of(cell.config), &p, cell.total);
        }
        a
    }
}

/// Adds `Cᵀ (w·(diag p' − p' p'ᵀ)) C` where `p'` drops the reference state.
fn add_softmax_curvature<'r>(
    a: &mut DMatrix<f64>,
    rows: impl Iterator<Item = &'r [(usize, i64)]>,
    p: &[f64],
    w: f64,
) {
    let rows: Vec<&[(usize, i64)]> = rows.collect();
    for (ka, ra) in rows.iter().enumerate() {
        for (kb, rb) in rows.iter().enumerate() {
            let pa = p[ka + 1];
            let m = w * (if ka == kb { pa } else { 0.0 } - pa * p[kb + 1]);
            if m == 0.0 {
                continue;
            }
            for &(i, ci) in *ra {
                for &(j, cj) in *rb {
                    a[(i, j)] += m * (ci * cj) as f64;
                }
            }
        }
    }
}

fn check_phi_len(report: &DimensionReport, phi: &[f64]) -> Result<()> {
    if phi.len() != report.dimension {
        return Err(Error::BasisMismatch(format!(
            "phi has {} coordinates, basis has {}",
            phi.len(),
            report.dimension
        )));
    }
    Ok(())
}

/// `Σ_l log p(y_l | x_l, φ)`.
pub fn local_log_likelihood(
    phi: &[f64],
    e: &Ebnc,
    basis: &DimensionReport,
    data: &Dataset,
) -> Result<f64> {
    check_phi_len(basis, phi)?;
    let obj = LocalObjective::new(e, basis, data)?;
    obj.check_phi(phi)?;
    Ok(obj.log_likelihood(phi))
}

pub fn local_log_likelihood_gradient(
    phi: &[f64],
    e: &Ebnc,
    basis: &DimensionReport,
    data: &Dataset,
) -> Result<Vec<f64>> {
    check_phi_len(basis, phi)?;
    Ok(LocalObjective::new(e, basis, data)?.gradient(phi))
}

/// Prior density over φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiPrior {
    /// Independent normal per coordinate, mean 0.
    Gaussian { sd: f64 },
    /// Symmetric Dirichlet(α) on each class distribution, carried to φ.
    /// Only for classifiers whose λ map is square (every λ entry free).
    DirichletLogRatio { alpha: f64 },
}

impl Default for PhiPrior {
    fn default() -> Self {
        PhiPrior::Gaussian { sd: 10.0 }
    }
}

#[derive(Debug, Clone)]
struct PreparedPrior<'a> {
    prior: PhiPrior,
    report: &'a DimensionReport,
    log_det_map: f64,
}

impl<'a> PreparedPrior<'a> {
    fn new(prior: PhiPrior, report: &'a DimensionReport) -> Result<Self> {
        match prior {
            PhiPrior::Gaussian { sd } => {
                if !(sd > 0.0 && sd.is_finite()) {
                    return Err(Error::InvalidArgument(format!("prior sd {sd}")));
                }
                Ok(Self {
                    prior,
                    report,
                    log_det_map: 0.0,
                })
            }
            PhiPrior::DirichletLogRatio { alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidAlpha);
                }
                let m = &report.lambda_map;
                if m.rows() != m.cols() {
                    return Err(Error::PriorNotApplicable(format!(
                        "Dirichlet prior needs every log-odds entry free; d = {} for {} entries",
                        m.cols(),
                        m.rows()
                    )));
                }
                let dense = DMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c) as f64);
                let lu = dense.lu();
                let log_det_map = lu.u().diagonal().iter().map(|v| v.abs().ln()).sum();
                Ok(Self {
                    prior,
                    report,
                    log_det_map,
                })
            }
        }
    }

    fn cells(&self) -> impl Iterator<Item = Vec<&[(usize, i64)]>> {
        let k = self.report.class_states() - 1;
        let q = self.report.lambda_map.rows() / k;
        (0..q).map(move |x| {
            (0..k)
                .map(|j| self.report.lambda_map.row(x * k + j))
                .collect()
        })
    }

    fn lambda(rows: &[&[(usize, i64)]], phi: &[f64]) -> Vec<f64> {
        rows.iter()
            .map(|row| row.iter().map(|&(c, v)| v as f64 * phi[c]).sum())
            .collect()
    }

    fn log_density(&self, phi: &[f64]) -> f64 {
        match self.prior {
            PhiPrior::Gaussian { sd } => phi
                .iter()
                .map(|p| -0.5 * (p / sd).powi(2) - (sd * (2.0 * std::f64::consts::PI).sqrt()).ln())
                .sum(),
            PhiPrior::DirichletLogRatio { alpha } => {
                let r = self.report.class_states() as f64;
                let norm = statrs::function::gamma::ln_gamma(alpha * r)
                    - r * statrs::function::gamma::ln_gamma(alpha);
                self.cells()
                    .map(|rows| {
                        let lp = log_softmax(&Self::lambda(&rows, phi));
                        norm + alpha * lp.iter().sum::<f64>()
                    })
                    .sum::<f64>()
                    + self.log_det_map
            }
        }
    }

    fn gradient(&self, phi: &[f64], g: &mut [f64]) {
        match self.prior {
            PhiPrior::Gaussian { sd } => {
                for (gi, p) in g.iter_mut().zip(phi) {
                    *gi -= p / (sd * sd);
                }
            }
            PhiPrior::DirichletLogRatio { alpha } => {
                let total = alpha * self.report.class_states() as f64;
                for rows in self.cells() {
                    let p = softmax(&Self::lambda(&rows, phi));
                    for (k, row) in rows.iter().enumerate() {
                        let w = alpha - total * p[k + 1];
                        for &(c, v) in *row {
                            g[c] += w * v as f64;
                        }
                    }
                }
            }
        }
    }

    fn add_neg_hessian(&self, phi: &[f64], a: &mut DMatrix<f64>) {
        match self.prior {
            PhiPrior::Gaussian { sd } => {
                for i in 0..phi.len() {
                    a[(i, i)] += 1.0 / (sd * sd);
                }
            }
            PhiPrior::DirichletLogRatio { alpha } => {
                let total = alpha * self.report.class_states() as f64;
                for rows in self.cells() {
                    let p = softmax(&Self::lambda(&rows, phi));
                    add_softmax_curvature(a, rows.into_iter(), &p, total);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Random starts in addition to the zero start.
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Convergence threshold on the gradient sup-norm.
    pub tolerance: f64,
    pub record_trace: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            max_iterations: 10_000,
            tolerance: 1e-6,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub start: Vec<f64>,
    pub phi: Vec<f64>,
    /// Log likelihood plus log prior (MAP) or log likelihood (ML).
    pub objective: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting value first.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedEbnc {
    pub e: Ebnc,
    pub phi_hat: Vec<f64>,
    pub log_likelihood_at_opt: f64,
    pub objective_at_opt: f64,
    pub restarts_used: usize,
    pub converged: Vec<bool>,
    pub best_restart: usize,
    pub outcomes: Vec<RestartOutcome>,
}

impl FittedEbnc {
    pub fn any_converged(&self) -> bool {
        self.converged.iter().any(|&c| c)
    }

    /// Errors if no restart converged.
    pub fn require_converged(&self, max_iterations: usize) -> Result<()> {
        if self.any_converged() {
            Ok(())
        } else {
            Err(Error::NoConvergence {
                iterations: max_iterations,
            })
        }
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Problem<'o, 'r> {
    lik: &'o LocalObjective<'r>,
    prior: Option<PreparedPrior<'r>>,
}

impl Problem<'_, '_> {
    fn value(&self, phi: &[f64]) -> f64 {
        self.lik.log_likelihood(phi) + self.prior.as_ref().map_or(0.0, |p| p.log_density(phi))
    }

    fn gradient(&self, phi: &[f64]) -> Vec<f64> {
        let mut g = self.lik.gradient(phi);
        if let Some(p) = &self.prior {
            p.gradient(phi, &mut g);
        }
        g
    }

    fn neg_hessian(&self, phi: &[f64]) -> DMatrix<f64> {
        let mut a = self.lik.neg_hessian(phi);
        if let Some(p) = &self.prior {
            p.add_neg_hessian(phi, &mut a);
        }
        a
    }

    /// Solves `(A + μI) s = g`, growing μ until the factorization succeeds.
    fn direction(&self, phi: &[f64], g: &[f64]) -> Vec<f64> {
        let a = self.neg_hessian(phi);
        let scale = 1.0 + a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gv = DVector::from_column_slice(g);
        let mut mu = 1e-10 * scale;
        for _ in 0..12 {
            let mut damped = a.clone();
            for i in 0..phi.len() {
                damped[(i, i)] += mu;
            }
            if let Some(ch) = damped.cholesky() {
                let s = ch.solve(&gv);
                if s.iter().all(|v| v.is_finite()) && s.dot(&gv) > 0.0 {
                    return s.iter().copied().collect();
                }
            }
            mu *= 100.0;
        }
        g.to_vec()
    }

    fn ascend(&self, start: Vec<f64>, opts: &FitOptions) -> RestartOutcome {
        let mut phi = start.clone();
        let mut f = self.value(&phi);
        let mut trace = if opts.record_trace {
            vec![f]
        } else {
            Vec::new()
        };
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iterations {
            let g = self.gradient(&phi);
            if sup_norm(&g) < opts.tolerance {
                converged = true;
                break;
            }
            iterations += 1;
            let dir = self.direction(&phi, &g);
            let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-14 {
                let cand: Vec<f64> = phi.iter().zip(&dir).map(|(p, s)| p + t * s).collect();
                let fc = self.value(&cand);
                let roundoff = slope * t <= 1e-12 * (1.0 + f.abs());
                if fc.is_finite() && (fc >= f + 1e-4 * t * slope || (roundoff && fc >= f)) {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, fc)) = accepted else {
                log::debug!("line search stalled after {iterations} iterations");
                break;
            };
            debug_assert!(fc >= f, "line search must not decrease the objective");
            phi = cand;
            f = fc;
            if opts.record_trace {
                trace.push(f);
            }
        }
        if !converged {
            converged = sup_norm(&self.gradient(&phi)) < opts.tolerance;
        }
        RestartOutcome {
            start,
            log_likelihood: self.lik.log_likelihood(&phi),
            phi,
            objective: f,
            iterations,
            converged,
            trace,
        }
    }
}

/// Start points: zero, then `restarts` draws from U[−1, 1]^d.
pub fn start_points(d: usize, restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::once(vec![0.0; d])
        .chain((0..restarts).map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()))
        .collect()
}

fn fit_objective(
    e: &Ebnc,
    lik: &LocalObjective<'_>,
    prior: Option<PhiPrior>,
    opts: &FitOptions,
) -> Result<FittedEbnc> {
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let problem = Problem {
        lik,
        prior: prior
            .map(|p| PreparedPrior::new(p, lik.report))
            .transpose()?,
    };
    let outcomes: Vec<RestartOutcome> = start_points(lik.dimension(), opts.restarts, opts.seed)
        .into_par_iter()
        .map(|s| problem.ascend(s, opts))
        .collect();
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.objective > outcomes[best].objective {
            best = i;
        }
    }
    if !outcomes.iter().any(|o| o.converged) {
        log::warn!(
            "no restart converged for `{}` within {} iterations",
            e.class_name(),
            opts.max_iterations
        );
    }
    let b = &outcomes[best];
    Ok(FittedEbnc {
        e: e.clone(),
        phi_hat: b.phi.clone(),
        log_likelihood_at_opt: b.log_likelihood,
        objective_at_opt: b.objective,
        restarts_used: outcomes.len(),
        converged: outcomes.iter().map(|o| o.converged).collect(),
        best_restart: best,
        outcomes,
    })
}

/// Maximum-likelihood φ from the zero start plus `restarts` random starts.
pub fn fit_ml(
    e: &Ebnc,
    basis: &DimensionReport,
    data: &Dataset,
    restarts: usize,
    seed: u64,
) -> Result<FittedEbnc> {
    let opts = FitOptions {
        restarts,
        seed,
        ..FitOptions::default()
    };
    fit_ml_with(e, basis, data, &opts)
}

pub fn fit_ml_with(
    e: &Ebnc,
    basis: &DimensionReport,
    data: &Dataset,
    opts: &FitOptions,
) -> Result<FittedEbnc> {
    let lik = LocalObjective::new(e, basis, data)?;
    fit_objective(e, &lik, None, opts)
}

/// Maximum a posteriori φ under `prior`.
pub fn fit_map_with(
    e: &Ebnc,
    basis: &DimensionReport,
    data: &Dataset,
    prior: PhiPrior,
    opts: &FitOptions,
) -> Result<FittedEbnc> {
    let lik = LocalObjective::new(e, basis, data)?;
    fit_objective(e, &lik, Some(prior), opts)
}

/// Central-difference Hessian of the log likelihood from its analytic
/// gradient, symmetrized.
pub fn finite_difference_hessian(lik: &LocalObjective<'_>, phi: &[f64]) -> DMatrix<f64> {
    let d = phi.len();
    let mut h = DMatrix::zeros(d, d);
    let mut probe = phi.to_vec();
    for j in 0..d {
        let step = 1e-4 * phi[j].abs().max(1.0);
        probe[j] = phi[j] + step;
        let gp = lik.gradient(&probe);
        probe[j] = phi[j] - step;
        let gm = lik.gradient(&probe);
        probe[j] = phi[j];
        for i in 0..d {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreMethod {
    Bic,
    Laplace,
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMethod::Bic => "bic",
            ScoreMethod::Laplace => "laplace",
        })
    }
}

impl FromStr for ScoreMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bic" => Ok(ScoreMethod::Bic),
            "laplace" => Ok(ScoreMethod::Laplace),
            _ => Err(Error::InvalidArgument(format!(
                "unknown score method `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOptions {
    pub fit: FitOptions,
    pub prior: PhiPrior,
    /// Laplace only: log-sum-exp over distinct local optima instead of the
    /// best optimum alone.
    pub sum_optima: bool,
    pub cap: u128,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            prior: PhiPrior::default(),
            sum_optima: false,
            cap: dimension::DEFAULT_ROW_CAP,
        }
    }
}

/// One node of a network whose local distribution is a classifier.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub ebnc: Ebnc,
    pub report: DimensionReport,
}

impl LocalModel {
    pub fn new(ebnc: Ebnc, cap: u128) -> Result<Self> {
        let report = dimension::dimension(&ebnc, cap)?;
        Ok(Self { ebnc, report })
    }

    pub fn node(&self) -> &str {
        self.ebnc.class_name()
    }
}

/// A local model for every node of `net`: node `i` classified from its
/// parents through the inner structure `structure`.
pub fn locals_for_network(
    net: &BayesianNetwork,
    structure: InnerStructure,
    cap: u128,
) -> Result<Vec<LocalModel>> {
    (0..net.len())
        .map(|i| {
            let inputs = net
                .parents(i)
                .iter()
                .map(|&p| net.variable(p).clone())
                .collect();
            LocalModel::new(structure.ebnc(net.variable(i).clone(), inputs)?, cap)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeScore {
    pub node: String,
    pub log_likelihood: f64,
    pub dimension: usize,
    /// BIC: `d/2 · log N`.
    pub penalty: Option<f64>,
    /// Laplace: `log |A|`.
    pub log_det: Option<f64>,
    /// Laplace: `log p(φ̃)`.
    pub log_prior: Option<f64>,
    pub score: f64,
    pub converged: bool,
    pub hessian_not_pd: bool,
    pub optima: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreResult {
    pub method: ScoreMethod,
    pub n: usize,
    pub per_node: Vec<NodeScore>,
    pub total: f64,
    /// A node's Hessian was not positive definite; `total` is `-inf`.
    pub excluded: bool,
}

fn flags(s: &NodeScore) -> String {
    let mut f = Vec::new();
    if !s.converged {
        f.push("not_converged");
    }
    if s.hessian_not_pd {
        f.push("hessian_not_pd");
    }
    if f.is_empty() {
        "-".into()
    } else {
        f.join(",")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), sig9)
}

impl ScoreResult {
    /// One line per node, then the total. Fields are tab-separated.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method\t{}\tn\t{}", self.method, self.n);
        for s in &self.per_node {
            let extra = match self.method {
                ScoreMethod::Bic => format!("penalty\t{}", opt(s.penalty)),
                ScoreMethod::Laplace => {
                    format!("logdet\t{}\tlogprior\t{}", opt(s.log_det), opt(s.log_prior))
                }
            };
            let _ = writeln!(
                out,
                "node\t{}\tloglik\t{}\td\t{}\t{extra}\tscore\t{}\tflags\t{}",
                s.node,
                sig9(s.log_likelihood),
                s.dimension,
                sig9(s.score),
                flags(s)
            );
        }
        let _ = writeln!(out, "total\t{}", sig9(self.total));
        out
    }

    /// Aligned human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} score over N = {} cases", self.method, self.n);
        let _ = writeln!(
            out,
            "{:<16} {:>16} {:>4} {:>16} {:>16}  flags",
            "node", "loglik", "d", "term", "score"
        );
        for s in &self.per_node {
            let term = match self.method {
                ScoreMethod::Bic => opt(s.penalty),
                ScoreMethod::Laplace => opt(s.log_det),
            };
            let _ = writeln!(
                out,
                "{:<16} {:>16} {:>4} {:>16} {:>16}  {}",
                s.node,
                sig9(s.log_likelihood),
                s.dimension,
                term,
                sig9(s.score),
                flags(s)
            );
        }
        let _ = writeln!(out, "total = {}", sig9(self.total));
        if self.excluded {
            out.push_str("model excluded: a Hessian was not positive definite\n");
        }
        out
    }
}

fn require_data(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyData("scoring needs at least one case".into()));
    }
    Ok(())
}

/// `L(φ̂) − d/2 · log N` for one local model.
pub fn bic_local(local: &LocalModel, data: &Dataset, opts: &ScoreOptions) -> Result<NodeScore> {
    require_data(data)?;
    let fit = fit_ml_with(&local.ebnc, &local.report, data, &opts.fit)?;
    let d = local.report.dimension;
    let penalty = d as f64 / 2.0 * (data.len() as f64).ln();
    Ok(NodeScore {
        node: local.node().to_string(),
        log_likelihood: fit.log_likelihood_at_opt,
        dimension: d,
        penalty: Some(penalty),
        log_det: None,
        log_prior: None,
        score: fit.log_likelihood_at_opt - penalty,
        converged: fit.any_converged(),
        hessian_not_pd: false,
        optima: 1,
    })
}

/// Laplace approximation of the log marginal likelihood of one local model.
pub fn laplace_local(local: &LocalModel, data: &Dataset, opts: &ScoreOptions) -> Result<NodeScore> {
    require_data(data)?;
    let lik = LocalObjective::new(&local.ebnc, &local.report, data)?;
    let prior = PreparedPrior::new(opts.prior, &local.report)?;
    let fit = fit_objective(&local.ebnc, &lik, Some(opts.prior), &opts.fit)?;
    let d = local.report.dimension;
    let half_log_2pi = d as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln();

    let evaluate = |phi: &[f64]| -> (f64, Option<f64>, f64, f64) {
        let a = -finite_difference_hessian(&lik, phi);
        let l = lik.log_likelihood(phi);
        let lp = prior.log_density(phi);
        match a.cholesky() {
            Some(ch) => {
                let log_det = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                (lp + l + half_log_2pi - 0.5 * log_det, Some(log_det), l, lp)
            }
            None => (f64::NEG_INFINITY, None, l, lp),
        }
    };

    let (best_value, log_det, l, lp) = evaluate(&fit.phi_hat);
    let hessian_not_pd = log_det.is_none();
    let mut optima = 1;
    let mut score = best_value;
    if opts.sum_optima && !hessian_not_pd {
        let mut distinct: Vec<&[f64]> = Vec::new();
        for o in fit.outcomes.iter().filter(|o| o.converged) {
            let dup = distinct
                .iter()
                .any(|p| p.iter().zip(&o.phi).all(|(a, b)| (a - b).abs() < 1e-4));
            if !dup {
                distinct.push(&o.phi);
            }
        }
        if distinct.len() > 1 {
            let values: Vec<f64> = distinct.iter().map(|p| evaluate(p).0).collect();
            optima = values.len();
            let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            score = m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        }
    }
    if hessian_not_pd {
        log::warn!("Hessian of `{}` is not positive definite", local.node());
    }
    Ok(NodeScore {
        node: local.node().to_string(),
        log_likelihood: l,
        dimension: d,
        penalty: None,
        log_det,
        log_prior: Some(lp),
        score,
        converged: fit.any_converged(),
        hessian_not_pd,
        optima,
    })
}

pub fn score_local(
    local: &LocalModel,
    data: &Dataset,
    method: ScoreMethod,
    opts: &ScoreOptions,
) -> Result<NodeScore> {
    match method {
        ScoreMethod::Bic => bic_local(local, data, opts),
        ScoreMethod::Laplace => laplace_local(local, data, opts),
    }
}

fn score_network(
    locals: &[LocalModel],
    data: &Dataset,
    method: ScoreMethod,
    opts: &ScoreOptions,
) -> Result<ScoreResult> {
    require_data(data)?;
    let per_node = locals
        .par_iter()
        .map(|l| score_local(l, data, method, opts))
        .collect::<Result<Vec<_>>>()?;
    let excluded = per_node.iter().any(|s| s.hessian_not_pd);
    let total = if excluded {
        f64::NEG_INFINITY
    } else {
        per_node.iter().map(|s| s.score).sum()
    };
    Ok(ScoreResult {
        method,
        n: data.len(),
        per_node,
        total,
        excluded,
    })
}

/// BIC of a network of local models; nodes are fitted independently.
pub fn bic_score(
    locals: &[LocalModel],
    data: &Dataset,
    opts: &ScoreOptions,
) -> Result<ScoreResult> {
    score_network(locals, data, ScoreMethod::Bic, opts)
}

/// Laplace approximation of the log marginal likelihood of a network of
/// local models, with the prior factored per node.
pub fn laplace_score(
    locals: &[LocalModel],
    data: &Dataset,
    opts: &ScoreOptions,
) -> Result<ScoreResult> {
    score_network(locals, data, ScoreMethod::Laplace, opts)
}
