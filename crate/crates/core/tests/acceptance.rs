//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ebnc::dataset::{sample_dataset, Dataset};
use ebnc::dimension::{dimension, dimension_blockwise, dimension_global, DEFAULT_ROW_CAP};
use ebnc::ebnc::{softmax, Ebnc};
use ebnc::network::{parse_network, BayesianNetwork, Configuration, Variable};
use ebnc::oracle::{
    exact_trivial_marginal, exhaustive_posterior, numeric_jacobian_rank, RankProbe,
};
use ebnc::scoring::{
    bic_local, fit_ml, laplace_local, local_counts, FitOptions, LocalModel, LocalObjective,
    PhiPrior, ScoreMethod, ScoreOptions,
};
use ebnc::search::{select, CandidateFamily, Generator, DEFAULT_CANDIDATE_CAP};
use ebnc::structures::InnerStructure;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: u128 = DEFAULT_ROW_CAP;
const SIX_NODE: &str = include_str!("data/six_node.net");
const NAIVE: &str = include_str!("data/naive.net");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, elapsed: Duration, o: Outcome) -> Outcome {
    if elapsed > limit {
        outcome(
            false,
            format!("{} (took {:.1?}, limit {:.0?})", o.detail, elapsed, limit),
        )
    } else {
        o
    }
}

/// Every network the dimension criteria name, with its expected d.
fn dimension_cases() -> Vec<(String, Ebnc, usize)> {
    let mut cases = vec![(
        "six-node".to_string(),
        Ebnc::with_class_name(parse_network(SIX_NODE).unwrap(), "Y").unwrap(),
        15,
    )];
    for n in 2..=6 {
        cases.push((
            format!("chain n={n}"),
            InnerStructure::MarkovChain.binary(n),
            2 * n,
        ));
    }
    for n in 1..=6 {
        cases.push((
            format!("naive n={n}"),
            InnerStructure::NaiveBayes.binary(n),
            n + 1,
        ));
    }
    for n in 1..=6 {
        cases.push((
            format!("trivial n={n}"),
            InnerStructure::Trivial.binary(n),
            1 << n,
        ));
    }
    cases
}

fn dimension_reproduction() -> Outcome {
    let mut bad = Vec::new();
    for (name, e, want) in dimension_cases() {
        let g = dimension_global(&e, CAP).unwrap().dimension;
        let b = dimension_blockwise(&e, CAP).unwrap().dimension;
        if g != want || b != want {
            bad.push(format!("{name}: global {g} blockwise {b} want {want}"));
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            "18 networks, both methods exact".into()
        } else {
            bad.join("; ")
        },
    )
}

fn oracle_rank_agreement() -> Outcome {
    let mut bad = Vec::new();
    for (seed, (name, e, _)) in dimension_cases().into_iter().enumerate() {
        let g = dimension_global(&e, CAP).unwrap().dimension;
        let b = dimension_blockwise(&e, CAP).unwrap().dimension;
        let mut probe = RankProbe::random(&e, 5, seed as u64);
        let r = numeric_jacobian_rank(&e, &mut probe).unwrap();
        if r != g || r != b {
            bad.push(format!("{name}: numeric {r} global {g} blockwise {b}"));
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            "numeric rank equals d on all 18 networks".into()
        } else {
            bad.join("; ")
        },
    )
}

/// A binary network over `n` variables whose DAG follows a random order and
/// keeps each forward edge with probability 1/2.
fn random_binary_dag(rng: &mut ChaCha8Rng, n: usize) -> BayesianNetwork {
    let vars: Vec<Variable> = (0..n).map(|i| Variable::binary(format!("V{i}"))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.5) {
                edges.push((order[a], order[b]));
            }
        }
    }
    BayesianNetwork::uniform(vars, &edges)
        .unwrap()
        .with_random_cpts(rng, 0.05, 1.0)
}

fn inference_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut configs = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let net = random_binary_dag(&mut rng, n);
        let y = rng.random_range(0..n);
        let e = Ebnc::with_class(net.clone(), y).unwrap();
        let radices = e.input_radices();
        let q = 1usize << radices.len();
        for code in 0..q {
            let x: Vec<usize> = (0..radices.len()).map(|j| (code >> j) & 1).collect();
            let mut z = Configuration::empty(n);
            for (&v, &s) in e.input_nodes().iter().zip(&x) {
                z.set(v, s);
            }
            let want = exhaustive_posterior(&net, y, &z).unwrap();
            let got = e.conditional_distribution(&x).unwrap();
            for (a, b) in got.iter().zip(&want) {
                worst = worst.max((a - b).abs());
            }
            configs += 1;
        }
    }
    outcome(
        worst <= 1e-10,
        format!("100 networks, {configs} configurations, max |diff| {worst:.3e}"),
    )
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let structures = [
        InnerStructure::Trivial,
        InnerStructure::NaiveBayes,
        InnerStructure::MarkovChain,
    ];
    let mut worst = 0.0f64;
    for draw in 0..50u64 {
        let s = structures[rng.random_range(0..3)];
        let ry = rng.random_range(2..=3);
        let inputs: Vec<Variable> = (0..rng.random_range(1..=3))
            .map(|j| Variable::with_states(format!("X{j}"), rng.random_range(2..=3)))
            .collect();
        let base = s.ebnc(Variable::with_states("Y", ry), inputs).unwrap();
        let e = base
            .with_inner_cpts(base.inner().with_random_cpts(&mut rng, 0.1, 1.0))
            .unwrap();
        let rep = dimension(&e, CAP).unwrap();
        let data = sample_dataset(e.inner(), 200, draw);
        let obj = LocalObjective::new(&e, &rep, &data).unwrap();
        let phi: Vec<f64> = (0..rep.dimension)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let g = obj.gradient(&phi);
        for j in 0..phi.len() {
            let h = 1e-5;
            let mut p = phi.clone();
            p[j] += h;
            let up = obj.log_likelihood(&p);
            p[j] -= 2.0 * h;
            let down = obj.log_likelihood(&p);
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((g[j] - fd).abs() / g[j].abs().max(1.0));
        }
    }
    outcome(
        worst < 1e-6,
        format!("50 draws, max relative error {worst:.3e}"),
    )
}

fn trivial_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for seed in 0..10u64 {
        let e = InnerStructure::Trivial.binary(3);
        let truth = e
            .inner()
            .with_random_cpts(&mut ChaCha8Rng::seed_from_u64(seed), 0.1, 1.0);
        let data = sample_dataset(&truth, 400, seed);
        let rep = dimension_global(&e, CAP).unwrap();
        let fit = fit_ml(&e, &rep, &data, 5, seed).unwrap();
        if !fit.converged[fit.best_restart] {
            unconverged += 1;
        }
        let table = rep.lambda_table(&fit.phi_hat);
        for cell in local_counts(&e, &data).unwrap().cells {
            let p = softmax(&table[cell.config..cell.config + 1]);
            for (k, pk) in p.iter().enumerate() {
                worst = worst.max((pk - cell.counts[k] / cell.total).abs());
            }
        }
    }
    outcome(
        worst < 1e-6 && unconverged == 0,
        format!("10 datasets, max |p - freq| {worst:.3e}, unconverged {unconverged}"),
    )
}

/// Data from the naive-Bayes generator, optionally with an independent
/// binary input `N` appended.
fn naive_data(n: usize, seed: u64, noise: bool) -> Dataset {
    let base = parse_network(NAIVE).unwrap();
    if !noise {
        return sample_dataset(&base, n, seed);
    }
    let mut vars = base.variables().to_vec();
    vars.push(Variable::new("N", vec!["a".into(), "b".into()]).unwrap());
    let mut cpts: Vec<Vec<Vec<f64>>> = (0..base.len())
        .map(|i| {
            let cpt = base.cpt(i);
            (0..cpt.rows()).map(|r| cpt.row(r).to_vec()).collect()
        })
        .collect();
    cpts.push(vec![vec![0.45, 0.55]]);
    let net = BayesianNetwork::new(vars, &base.edges(), cpts).unwrap();
    sample_dataset(&net, n, seed)
}

fn standard_generators() -> Vec<Generator> {
    vec![
        Generator::Standard(InnerStructure::Trivial),
        Generator::Standard(InnerStructure::NaiveBayes),
    ]
}

fn bic_consistency() -> Outcome {
    let data = naive_data(10_000, 6, false);
    let family = CandidateFamily::from_dataset(&data, "Y", standard_generators(), false).unwrap();
    let opts = ScoreOptions::default();
    let score = |s: InnerStructure| {
        let e = s.ebnc(family.class.clone(), family.inputs.clone()).unwrap();
        bic_local(&LocalModel::new(e, CAP).unwrap(), &data, &opts)
            .unwrap()
            .score
    };
    let naive = score(InnerStructure::NaiveBayes);
    let trivial = score(InnerStructure::Trivial);
    let chosen = select(
        &family,
        &data,
        ScoreMethod::Bic,
        &opts,
        DEFAULT_CANDIDATE_CAP,
    )
    .unwrap();
    let winner = chosen.winner().structure.clone();
    outcome(
        naive > trivial && winner == "naive",
        format!("bic naive {naive:.4} trivial {trivial:.4}, selected {winner}"),
    )
}

fn laplace_validation() -> Outcome {
    let e = InnerStructure::Trivial.binary(2);
    let model = LocalModel::new(e.clone(), CAP).unwrap();
    let opts = ScoreOptions {
        prior: PhiPrior::DirichletLogRatio { alpha: 1.0 },
        fit: FitOptions {
            restarts: 1,
            ..FitOptions::default()
        },
        ..ScoreOptions::default()
    };
    let mut details = Vec::new();
    let mut pass = true;
    for seed in 0..5u64 {
        let truth =
            e.inner()
                .with_random_cpts(&mut ChaCha8Rng::seed_from_u64(100 + seed), 0.2, 1.0);
        let mut errs = [0.0; 2];
        for (slot, n) in [100usize, 1000].into_iter().enumerate() {
            let data = sample_dataset(&truth, n, seed);
            let s = laplace_local(&model, &data, &opts).unwrap();
            let table: Vec<Vec<f64>> = local_counts(&e, &data)
                .unwrap()
                .cells
                .into_iter()
                .map(|c| c.counts)
                .collect();
            let exact = exact_trivial_marginal(&table, &[1.0, 1.0]).unwrap();
            errs[slot] = (s.score - exact).abs();
        }
        pass &= errs[1] < errs[0];
        details.push(format!("{:.2e}->{:.2e}", errs[0], errs[1]));
    }
    outcome(
        pass,
        format!(
            "Dirichlet(1) prior on phi, |error| N=100->1000: {}",
            details.join(" ")
        ),
    )
}

fn feature_selection() -> Outcome {
    let mut excluded = 0;
    let mut winners = Vec::new();
    for seed in 1..=5u64 {
        let data = naive_data(10_000, seed, true);
        let family =
            CandidateFamily::from_dataset(&data, "Y", standard_generators(), true).unwrap();
        let chosen = select(
            &family,
            &data,
            ScoreMethod::Bic,
            &ScoreOptions::default(),
            DEFAULT_CANDIDATE_CAP,
        )
        .unwrap();
        let w = chosen.winner();
        if !w.features.iter().any(|f| f == "N") {
            excluded += 1;
        }
        winners.push(format!("{}[{}]", w.structure, w.features.join(",")));
    }
    outcome(
        excluded >= 4,
        format!("noise excluded in {excluded}/5: {}", winners.join(" ")),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ebnc"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let six = path("six.net");
    let naive = path("naive.net");
    std::fs::write(&six, SIX_NODE).unwrap();
    std::fs::write(&naive, NAIVE).unwrap();
    let data = path("data.csv");
    let (code, bytes) = run_cli(&["sample", "--network", &naive, "--n", "800", "--seed", "9"]);
    assert_eq!(code, 0);
    std::fs::write(&data, bytes).unwrap();
    let inputs = path("inputs.csv");
    let text = std::fs::read_to_string(&data).unwrap();
    let projected: String = text
        .lines()
        .map(|l| l.split_once(',').unwrap().1.to_string() + "\n")
        .collect();
    std::fs::write(&inputs, projected).unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["dim", "--network", &six],
        vec!["sample", "--network", &naive, "--n", "500", "--seed", "4"],
        vec!["classify", "--network", &naive, "--data", &inputs],
        vec!["fit", "--network", &naive, "--data", &data, "--seed", "3"],
        vec![
            "score",
            "--network",
            &naive,
            "--data",
            &data,
            "--method",
            "bic",
        ],
        vec![
            "score",
            "--network",
            &naive,
            "--data",
            &data,
            "--method",
            "laplace",
        ],
        vec![
            "learn", "--data", &data, "--inner", "trivial", "--inner", "naive",
        ],
        vec!["verify", "--network", &six, "--seed", "2"],
    ];
    let mut bad = Vec::new();
    for args in &commands {
        let (c1, a) = run_cli(args);
        let (c2, b) = run_cli(args);
        if c1 != 0 || c2 != 0 || a != b || a.is_empty() {
            bad.push(format!("{} (exit {c1}/{c2})", args[0]));
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} commands byte-identical across reruns", commands.len())
        } else {
            format!("differs: {}", bad.join(", "))
        },
    )
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "dimension reproduction",
            Some(Duration::from_secs(10)),
            dimension_reproduction,
        ),
        (
            "oracle rank agreement",
            Some(Duration::from_secs(60)),
            oracle_rank_agreement,
        ),
        (
            "inference equivalence",
            Some(Duration::from_secs(30)),
            inference_equivalence,
        ),
        ("gradient correctness", None, gradient_correctness),
        ("trivial ML closed form", None, trivial_closed_form),
        (
            "BIC consistency",
            Some(Duration::from_secs(120)),
            bic_consistency,
        ),
        ("Laplace validation", None, laplace_validation),
        ("feature selection", None, feature_selection),
        ("CLI determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = check();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            o = within(*limit, elapsed, o);
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} - {name}: {} [{:.2?}]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
