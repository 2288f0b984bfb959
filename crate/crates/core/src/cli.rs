//! Command-line surface of the `ebnc` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::dataset::{sample_dataset, Dataset};
use crate::dimension::{self, check_theta_eta_open, dimension_blockwise, dimension_global};
use crate::ebnc::Ebnc;
use crate::error::{Error, ErrorKind, Result};
use crate::network::{parse_network, BayesianNetwork, Configuration};
use crate::numfmt::sig9;
use crate::oracle::{exhaustive_posterior, numeric_jacobian_rank, RankProbe};
use crate::scoring::{
    bic_score, fit_ml_with, laplace_score, FitOptions, LocalModel, ScoreMethod, ScoreOptions,
};
use crate::search::{select, CandidateFamily, Generator, DEFAULT_CANDIDATE_CAP};
use crate::structures::InnerStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Model dimension and basis by both methods.
    Dim,
    /// Predicted class and posterior for each data row.
    Classify,
    /// Maximum-likelihood φ of the classifier on data.
    Fit,
    /// BIC or Laplace score of a network on data.
    Score,
    /// Select the best classifier structure and feature subset.
    Learn,
    /// Draw a dataset from a network.
    Sample,
    /// Cross-check fast paths against brute-force oracles.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bic,
    Laplace,
}

impl From<MethodArg> for ScoreMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bic => ScoreMethod::Bic,
            MethodArg::Laplace => ScoreMethod::Laplace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Embedded Bayesian network classifiers: dimension, inference, scoring.
#[derive(Debug, Clone, Parser)]
#[command(name = "ebnc", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Network file.
    #[arg(long, value_name = "PATH")]
    pub network: Option<PathBuf>,
    /// CSV dataset with a header row.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 0, value_name = "U64")]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Bic)]
    pub method: MethodArg,
    /// Random restarts in addition to the zero start.
    #[arg(long, default_value_t = 5, value_name = "K")]
    pub restarts: usize,
    /// Inner structure: trivial, naive, chain or file:PATH. Repeatable for
    /// `learn`.
    #[arg(long, value_name = "STRUCTURE")]
    pub inner: Vec<String>,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub subset_search: Switch,
    /// Cap on coefficient-matrix rows and enumerated configurations.
    #[arg(long, default_value_t = 1 << 20, value_name = "ROWS")]
    pub cap: u128,
    /// Also run the oracle cross-checks.
    #[arg(long)]
    pub verify: bool,
    /// Class variable. Defaults to `Y` if present, else the first variable.
    #[arg(long, value_name = "NAME")]
    pub class: Option<String>,
    /// Rows to draw for `sample`.
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub n: usize,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Distinct process exit status per error category.
pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Io => 3,
        ErrorKind::Data => 4,
        ErrorKind::Network => 5,
        ErrorKind::Cap => 6,
        ErrorKind::Dimension => 7,
        ErrorKind::Fit => 8,
        ErrorKind::Verification => 9,
        ErrorKind::Argument => 10,
    }
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("this command needs --{flag}")))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<BayesianNetwork> {
    parse_network(&read(path)?)
}

fn class_name(cfg: &RunConfig, names: &[&str]) -> Result<String> {
    match &cfg.class {
        Some(c) if names.contains(&c.as_str()) => Ok(c.clone()),
        Some(c) => Err(Error::InvalidArgument(format!("no variable named `{c}`"))),
        None if names.contains(&"Y") => Ok("Y".into()),
        None => names
            .first()
            .map(|s| s.to_string())
            .ok_or_else(|| Error::InvalidArgument("no variables".into())),
    }
}

fn structure(spec: &str) -> Result<Generator> {
    Ok(match spec {
        "trivial" => Generator::Standard(InnerStructure::Trivial),
        "naive" => Generator::Standard(InnerStructure::NaiveBayes),
        "chain" => Generator::Standard(InnerStructure::MarkovChain),
        other => match other.strip_prefix("file:") {
            Some(path) => Generator::Custom {
                name: format!("file:{path}"),
                network: load_network(Path::new(path))?,
            },
            None => {
                return Err(Error::InvalidArgument(format!(
                    "unknown inner structure `{other}`"
                )))
            }
        },
    })
}

/// The classifier named by `--class` over the network file. With `--inner`,
/// the network only supplies variables and the structure is generated.
fn classifier(cfg: &RunConfig) -> Result<Ebnc> {
    let net = load_network(need(&cfg.network, "network")?)?;
    let names: Vec<&str> = net.variables().iter().map(|v| v.name()).collect();
    let class = class_name(cfg, &names)?;
    match cfg.inner.as_slice() {
        [] => Ebnc::with_class_name(net, &class),
        [spec] => {
            let y = net.index_of(&class).expect("class checked");
            let inputs = net
                .variables()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != y)
                .map(|(_, v)| v.clone())
                .collect::<Vec<_>>();
            match structure(spec)? {
                Generator::Standard(s) => s.ebnc(net.variable(y).clone(), inputs),
                Generator::Custom { network, .. } => {
                    let y = network.index_of(&class).ok_or_else(|| {
                        Error::SchemaMismatch(format!("structure has no variable `{class}`"))
                    })?;
                    Ebnc::with_class(network, y)
                }
            }
        }
        _ => Err(Error::InvalidArgument(
            "give at most one --inner for this command".into(),
        )),
    }
}

/// Reads the dataset against the network schema, or infers one.
fn load_data(cfg: &RunConfig, schema: Option<&BayesianNetwork>) -> Result<Dataset> {
    let text = read(need(&cfg.data, "data")?)?;
    match schema {
        Some(net) => Dataset::parse_csv(&text, net.variables()),
        None => Dataset::infer_csv(text.as_bytes()),
    }
}

fn score_options(cfg: &RunConfig) -> ScoreOptions {
    ScoreOptions {
        fit: FitOptions {
            restarts: cfg.restarts,
            seed: cfg.seed,
            ..FitOptions::default()
        },
        cap: cfg.cap,
        ..ScoreOptions::default()
    }
}

/// Runs one command, writing its report to `out`.
pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let text = match cfg.command {
        Command::Dim => cmd_dim(cfg)?,
        Command::Classify => cmd_classify(cfg)?,
        Command::Fit => cmd_fit(cfg)?,
        Command::Score => cmd_score(cfg)?,
        Command::Learn => cmd_learn(cfg)?,
        Command::Sample => cmd_sample(cfg)?,
        Command::Verify => String::new(),
    };
    out.write_all(text.as_bytes())?;
    if cfg.verify || cfg.command == Command::Verify {
        let (report, ok) = verify_report(&classifier(cfg)?, cfg)?;
        out.write_all(report.as_bytes())?;
        if !ok {
            return Err(Error::VerificationFailed("see report".into()));
        }
    }
    out.flush()?;
    Ok(())
}

fn header(e: &Ebnc) -> String {
    let inputs = e.input_names();
    format!(
        "classifier {} inputs {}\n",
        e.class_name(),
        if inputs.is_empty() {
            "-".into()
        } else {
            inputs.join(",")
        }
    )
}

fn cmd_dim(cfg: &RunConfig) -> Result<String> {
    let e = classifier(cfg)?;
    let mut out = header(&e);
    let global = dimension_global(&e, cfg.cap)?;
    out.push_str("== global ==\n");
    out.push_str(&global.to_text());
    out.push_str("== blockwise ==\n");
    match dimension_blockwise(&e, cfg.cap) {
        Ok(b) => {
            out.push_str(&b.to_text());
            let verdict = if b.dimension == global.dimension {
                "agree"
            } else {
                "DISAGREE"
            };
            let _ = writeln!(
                out,
                "agreement: {verdict} (d = {} / {})",
                global.dimension, b.dimension
            );
            if b.dimension != global.dimension {
                return Err(Error::VerificationFailed(out));
            }
        }
        Err(Error::NonBinaryVariable(v)) => {
            let _ = writeln!(out, "not applicable: `{v}` is not binary");
            let _ = writeln!(out, "agreement: global only (d = {})", global.dimension);
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

fn cmd_classify(cfg: &RunConfig) -> Result<String> {
    let e = classifier(cfg)?;
    let text = read(need(&cfg.data, "data")?)?;
    // The class column is optional here.
    let header_names: Vec<String> = csv::Reader::from_reader(text.as_bytes())
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let schema: Vec<_> = header_names
        .iter()
        .map(|n| {
            e.inner()
                .index_of(n)
                .map(|i| e.inner().variable(i).clone())
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown column `{n}`")))
        })
        .collect::<Result<_>>()?;
    let data = Dataset::parse_csv(&text, &schema)?;
    let cols = data.columns_for(&e.input_names())?;
    let labels = e.inner().variable(e.class_node()).labels();
    let mut out = header(&e);
    let probs: Vec<String> = labels
        .iter()
        .map(|l| format!("p({}={l})", e.class_name()))
        .collect();
    let _ = writeln!(out, "row\tpredicted\t{}", probs.join("\t"));
    let mut x = vec![0; cols.len()];
    for (l, row) in data.rows().enumerate() {
        for (slot, &c) in x.iter_mut().zip(&cols) {
            *slot = row[c];
        }
        let p = e.conditional_distribution(&x)?;
        let k = e.classify(&x)?;
        let ps: Vec<String> = p.iter().map(|v| sig9(*v)).collect();
        let _ = writeln!(out, "{}\t{}\t{}", l + 1, labels[k], ps.join("\t"));
    }
    Ok(out)
}

fn cmd_fit(cfg: &RunConfig) -> Result<String> {
    let e = classifier(cfg)?;
    let report = dimension::dimension(&e, cfg.cap)?;
    let data = load_data(cfg, Some(e.inner()))?;
    let opts = score_options(cfg);
    let fit = fit_ml_with(&e, &report, &data, &opts.fit)?;
    let mut out = header(&e);
    let _ = writeln!(out, "method\t{}\td\t{}", report.method, report.dimension);
    let _ = writeln!(out, "n\t{}", data.len());
    let _ = writeln!(out, "loglik\t{}", sig9(fit.log_likelihood_at_opt));
    let _ = writeln!(
        out,
        "restarts\t{}\tconverged\t{}\tbest\t{}",
        fit.restarts_used,
        fit.converged.iter().filter(|&&c| c).count(),
        fit.best_restart
    );
    for (t, v) in fit.phi_hat.iter().enumerate() {
        let _ = writeln!(out, "phi_{}\t{}", t + 1, sig9(*v));
    }
    Ok(out)
}

fn cmd_score(cfg: &RunConfig) -> Result<String> {
    let net = load_network(need(&cfg.network, "network")?)?;
    let data = load_data(cfg, Some(&net))?;
    let opts = score_options(cfg);
    let locals = if cfg.class.is_some() {
        vec![LocalModel::new(classifier(cfg)?, cfg.cap)?]
    } else {
        let s = match cfg.inner.as_slice() {
            [] => InnerStructure::Trivial,
            [spec] => match structure(spec)? {
                Generator::Standard(s) => s,
                Generator::Custom { .. } => {
                    return Err(Error::InvalidArgument(
                        "file structures need --class when scoring".into(),
                    ))
                }
            },
            _ => return Err(Error::InvalidArgument("give at most one --inner".into())),
        };
        crate::scoring::locals_for_network(&net, s, cfg.cap)?
    };
    let result = match ScoreMethod::from(cfg.method) {
        ScoreMethod::Bic => bic_score(&locals, &data, &opts)?,
        ScoreMethod::Laplace => laplace_score(&locals, &data, &opts)?,
    };
    Ok(result.to_records())
}

fn cmd_learn(cfg: &RunConfig) -> Result<String> {
    let schema = match &cfg.network {
        Some(p) => Some(load_network(p)?),
        None => None,
    };
    let data = load_data(cfg, schema.as_ref())?;
    let names: Vec<&str> = data.variables().iter().map(|v| v.name()).collect();
    let class = class_name(cfg, &names)?;
    let generators = if cfg.inner.is_empty() {
        vec![
            Generator::Standard(InnerStructure::Trivial),
            Generator::Standard(InnerStructure::NaiveBayes),
        ]
    } else {
        cfg.inner
            .iter()
            .map(|s| structure(s))
            .collect::<Result<_>>()?
    };
    let family =
        CandidateFamily::from_dataset(&data, &class, generators, cfg.subset_search == Switch::On)?;
    let result = select(
        &family,
        &data,
        cfg.method.into(),
        &score_options(cfg),
        DEFAULT_CANDIDATE_CAP,
    )?;
    Ok(result.to_records())
}

fn cmd_sample(cfg: &RunConfig) -> Result<String> {
    let net = load_network(need(&cfg.network, "network")?)?;
    Ok(sample_dataset(&net, cfg.n, cfg.seed).to_csv_string())
}

/// Oracle cross-checks for one classifier. Returns the report and whether
/// every check passed.
pub fn verify_report(e: &Ebnc, cfg: &RunConfig) -> Result<(String, bool)> {
    let mut out = String::new();
    let mut ok = true;
    let mut line = |name: &str, pass: bool, detail: String| {
        ok &= pass;
        let _ = writeln!(
            out,
            "check\t{name}\t{}\t{detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    };

    // Inference against enumeration of the joint.
    let radices = e.input_radices();
    let q = crate::configs::count(&radices).unwrap_or(u128::MAX);
    if q > cfg.cap.min(1 << 16) {
        line("inference", true, format!("skipped: {q} configurations"));
    } else {
        let mut worst = 0.0f64;
        let mut x = vec![0; radices.len()];
        for _ in 0..q {
            let mut z = Configuration::empty(e.inner().len());
            for (&v, &s) in e.input_nodes().iter().zip(&x) {
                z.set(v, s);
            }
            let want = exhaustive_posterior(e.inner(), e.class_node(), &z)?;
            let got = e.conditional_distribution(&x)?;
            for (a, b) in got.iter().zip(&want) {
                worst = worst.max((a - b).abs());
            }
            crate::configs::advance(&mut x, &radices);
        }
        line(
            "inference",
            worst < 1e-10,
            format!("max_abs_diff {}", sig9(worst)),
        );
    }

    let global = dimension_global(e, cfg.cap)?;
    let mut probe = RankProbe::random(e, 5, cfg.seed);
    let numeric = numeric_jacobian_rank(e, &mut probe)?;
    line(
        "rank_global",
        numeric == global.dimension,
        format!("numeric {numeric} exact {}", global.dimension),
    );
    match dimension_blockwise(e, cfg.cap) {
        Ok(b) => {
            line(
                "rank_blockwise",
                numeric == b.dimension,
                format!("numeric {numeric} exact {}", b.dimension),
            );
            let open = check_theta_eta_open(e, cfg.cap);
            line(
                "openness",
                open.is_ok(),
                match open {
                    Ok(r) => format!(
                        "triangular {} of {} omega",
                        r.row_order.len(),
                        r.omega.len()
                    ),
                    Err(err) => err.to_string(),
                },
            );
        }
        Err(Error::NonBinaryVariable(v)) => line(
            "rank_blockwise",
            true,
            format!("skipped: `{v}` is not binary"),
        ),
        Err(err) => return Err(err),
    }
    Ok((out, ok))
}
