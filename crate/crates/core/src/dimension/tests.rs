use super::*;
use crate::ebnc::Ebnc;
use crate::network::{BayesianNetwork, Variable};
use crate::structures::InnerStructure;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CAP: u128 = DEFAULT_ROW_CAP;

/// Y <- {X1, X2}; X4 <- {X1, X3, Y}; X5 <- {X2, X3, Y}; X3 a root.
fn six_node() -> Ebnc {
    let vars = ["Y", "X1", "X2", "X3", "X4", "X5"]
        .iter()
        .map(|n| Variable::binary(*n))
        .collect();
    let edges = [
        (1, 0),
        (2, 0),
        (1, 4),
        (3, 4),
        (0, 4),
        (2, 5),
        (3, 5),
        (0, 5),
    ];
    Ebnc::with_class(BayesianNetwork::uniform(vars, &edges).unwrap(), 0).unwrap()
}

fn randomized(e: &Ebnc, rng: &mut ChaCha8Rng) -> Ebnc {
    e.with_inner_cpts(e.inner().with_random_cpts(rng, 0.05, 1.0))
        .unwrap()
}

fn suite() -> Vec<Ebnc> {
    let mut s = vec![six_node()];
    for n in 1..=5 {
        s.push(InnerStructure::Trivial.binary(n));
        s.push(InnerStructure::NaiveBayes.binary(n));
        s.push(InnerStructure::MarkovChain.binary(n));
    }
    s
}

#[test]
fn kappa_system_for_single_input_naive_bayes() {
    let sys = build_kappa_system(&InnerStructure::NaiveBayes.binary(1), CAP).unwrap();
    assert_eq!(
        sys.names,
        vec!["kappa(Y=s2)", "kappa(X1=s1|Y=s2)", "kappa(X1=s2|Y=s2)"]
    );
    assert_eq!(sys.matrix.rows(), 2);
    assert_eq!(sys.matrix.row(0), &[(0, 1), (1, 1)]);
    assert_eq!(sys.matrix.row(1), &[(0, 1), (2, 1)]);
}

#[test]
fn kappa_system_for_trivial_selects_one_parameter_per_row() {
    let sys = build_kappa_system(&InnerStructure::Trivial.binary(3), CAP).unwrap();
    assert_eq!(sys.matrix.rows(), 8);
    for r in 0..8 {
        assert_eq!(sys.matrix.row(r), &[(r, 1)]);
    }
}

#[test]
fn kappa_system_reproduces_log_odds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ternary = {
        let vars = vec![
            Variable::with_states("Y", 3),
            Variable::with_states("A", 3),
            Variable::binary("B"),
            Variable::with_states("C", 3),
        ];
        let edges = [(1, 0), (0, 2), (1, 2), (0, 3), (2, 3)];
        Ebnc::with_class(BayesianNetwork::uniform(vars, &edges).unwrap(), 0).unwrap()
    };
    let mut nets = suite();
    nets.push(ternary);
    for base in &nets {
        let sys = build_kappa_system(base, CAP).unwrap();
        for _ in 0..20 {
            let e = randomized(base, &mut rng);
            let got = sys.apply(&sys.values(&e));
            let want = e.full_log_odds_table(CAP).unwrap();
            for (a, b) in got.iter().zip(want.as_slice()) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn kappa_cap_is_enforced() {
    let err = build_kappa_system(&InnerStructure::NaiveBayes.binary(4), 15).unwrap_err();
    assert!(matches!(err, Error::CapExceeded { requested: 16, .. }));
}

#[test]
fn global_dimensions() {
    assert_eq!(dimension_global(&six_node(), CAP).unwrap().dimension, 15);
    for n in 1..=6 {
        let d = |s: InnerStructure| dimension_global(&s.binary(n), CAP).unwrap().dimension;
        assert_eq!(d(InnerStructure::Trivial), 1 << n);
        assert_eq!(d(InnerStructure::NaiveBayes), n + 1);
        if n >= 2 {
            assert_eq!(d(InnerStructure::MarkovChain), 2 * n);
        }
    }
}

#[test]
fn blockwise_dimensions() {
    let r = dimension_blockwise(&six_node(), CAP).unwrap();
    assert_eq!(r.dimension, 15);
    assert_eq!(r.block_ranks, Some(vec![1, 1, 2, 3, 4, 4]));
    for n in 1..=6 {
        let d = |s: InnerStructure| dimension_blockwise(&s.binary(n), CAP).unwrap().dimension;
        assert_eq!(d(InnerStructure::Trivial), 1 << n);
        assert_eq!(d(InnerStructure::NaiveBayes), n + 1);
        if n >= 2 {
            assert_eq!(d(InnerStructure::MarkovChain), 2 * n);
        }
    }
}

#[test]
fn chain_blocks_have_expected_sizes() {
    let b = build_eta_psi(&InnerStructure::MarkovChain.binary(3), CAP).unwrap();
    let psi: Vec<usize> = b.blocks.iter().map(|b| b.jacobian.rows()).collect();
    assert_eq!(psi, vec![1, 2, 2]);
    assert!(b.intercept.node.is_none());
}

#[test]
fn naive_bayes_blocks_are_single_parameters() {
    let b = build_eta_psi(&InnerStructure::NaiveBayes.binary(2), CAP).unwrap();
    assert_eq!(b.blocks.len(), 2);
    for blk in &b.blocks {
        assert!(blk.guard.is_empty());
        assert_eq!(blk.eta.len(), 1);
        assert_eq!(blk.jacobian.row(0), &[1]);
    }
}

#[test]
fn blockwise_rejects_non_binary() {
    let e = InnerStructure::NaiveBayes
        .ebnc(Variable::with_states("Y", 3), vec![Variable::binary("A")])
        .unwrap();
    assert!(matches!(
        dimension_blockwise(&e, CAP),
        Err(Error::NonBinaryVariable(name)) if name == "Y"
    ));
    assert_eq!(dimension(&e, CAP).unwrap().method, Method::Global);
    assert_eq!(dimension(&e, CAP).unwrap().dimension, 4);
}

#[test]
fn indicator_expansion_reproduces_log_odds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let nets = suite();
    for t in 0..50 {
        let base = &nets[t % nets.len()];
        let b = build_eta_psi(base, CAP).unwrap();
        let e = randomized(base, &mut rng);
        let radices = e.input_radices();
        let q = crate::configs::count(&radices).unwrap() as usize;
        let x = crate::configs::decode(t * 7 % q, &radices);
        let want = e.log_odds(&x).unwrap()[0];
        let got = b.reconstruct_log_odds(&e, &x);
        assert!((want - got).abs() < 1e-10, "{want} vs {got}");
    }
}

#[test]
fn openness_witness_exists() {
    for e in [
        six_node(),
        InnerStructure::NaiveBayes.binary(2),
        InnerStructure::MarkovChain.binary(3),
        InnerStructure::Trivial.binary(3),
    ] {
        let rep = check_theta_eta_open(&e, CAP).unwrap();
        assert_eq!(rep.row_order.len(), rep.eta_names.len());
        let mut seen = rep.pivot_columns.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), rep.pivot_columns.len());
    }
    let rep = check_theta_eta_open(&InnerStructure::NaiveBayes.binary(2), CAP).unwrap();
    assert_eq!(rep.pairs.len(), 2);
}

#[test]
fn methods_agree_and_basis_determines_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for base in suite() {
        let g = dimension_global(&base, CAP).unwrap();
        let b = dimension_blockwise(&base, CAP).unwrap();
        assert_eq!(g.dimension, b.dimension);
        assert!(g.dimension as u128 <= free_parameter_count(&base));
        assert!(g.dimension as u128 <= base.input_configurations().unwrap());
        for _ in 0..4 {
            let e = randomized(&base, &mut rng);
            let want = e.full_log_odds_table(CAP).unwrap();
            for rep in [&g, &b] {
                let table = rep.lambda_table(&rep.phi_values(&e).unwrap());
                for (a, w) in table.iter().zip(want.as_slice()) {
                    assert!((a - w).abs() < 1e-9, "{} {a} vs {w}", rep.method);
                }
            }
        }
    }
}

#[test]
fn basis_vectors_are_independent() {
    for base in suite() {
        for rep in [
            dimension_global(&base, CAP).unwrap(),
            dimension_blockwise(&base, CAP).unwrap(),
        ] {
            let mut m = crate::exact::IntMatrix::zeros(rep.dimension, rep.param_names.len());
            // Clearing denominators row by row keeps the rank.
            for (t, row) in rep.basis.iter().enumerate() {
                let lcm = row.iter().fold(num_bigint::BigInt::from(1), |acc, (_, v)| {
                    num_integer::Integer::lcm(&acc, v.denom())
                });
                for (c, v) in row {
                    let scaled = v.numer() * (&lcm / v.denom());
                    m.set(t, *c, i64::try_from(scaled).unwrap());
                }
            }
            assert_eq!(crate::exact::rank(&m), rep.dimension);
        }
    }
}

#[test]
fn report_checks_classifier_shape() {
    let rep = dimension_global(&InnerStructure::NaiveBayes.binary(2), CAP).unwrap();
    let other = InnerStructure::NaiveBayes.binary(3);
    assert!(matches!(
        rep.phi_values(&other),
        Err(Error::BasisMismatch(_))
    ));
}

#[test]
fn text_report() {
    let rep = dimension_global(&InnerStructure::NaiveBayes.binary(1), CAP).unwrap();
    let text = rep.to_text();
    assert_eq!(
        text,
        "method: global\n\
         d = 2\n\
         phi_1 = kappa(Y=s2) + kappa(X1=s2|Y=s2)\n\
         phi_2 = kappa(X1=s1|Y=s2) - kappa(X1=s2|Y=s2)\n"
    );
    let rep = dimension_blockwise(&InnerStructure::NaiveBayes.binary(1), CAP).unwrap();
    assert!(rep
        .to_text()
        .starts_with("method: blockwise\nd = 2\nblock ranks: 1 1\nphi_1 = eta0\n"));
}
