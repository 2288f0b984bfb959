use ebnc::dimension::{
    dimension_blockwise, dimension_global, free_parameter_count, DEFAULT_ROW_CAP,
};
use ebnc::ebnc::Ebnc;
use ebnc::network::{parse_network, write_network, BayesianNetwork, Variable};
use ebnc::oracle::{numeric_jacobian_rank, RankProbe};
use proptest::prelude::*;

/// Binary DAG over `n` nodes from a bitmask over the forward pairs of the
/// identity order.
fn dag(n: usize, mask: u64) -> BayesianNetwork {
    let vars = (0..n).map(|i| Variable::binary(format!("V{i}"))).collect();
    let mut edges = Vec::new();
    let mut bit = 0;
    for a in 0..n {
        for b in a + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((a, b));
            }
            bit += 1;
        }
    }
    BayesianNetwork::uniform(vars, &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn both_methods_and_numeric_rank_agree(n in 1usize..=5, mask in any::<u64>(), y_pick in any::<usize>(), seed in any::<u64>()) {
        let net = dag(n, mask);
        let e = Ebnc::with_class(net, y_pick % n).unwrap();
        let g = dimension_global(&e, DEFAULT_ROW_CAP).unwrap();
        let b = dimension_blockwise(&e, DEFAULT_ROW_CAP).unwrap();
        prop_assert_eq!(g.dimension, b.dimension);
        prop_assert!(g.dimension >= 1);
        prop_assert!(g.dimension <= 1usize << e.input_nodes().len());
        prop_assert!(g.dimension as u128 <= free_parameter_count(&e));
        let mut probe = RankProbe::random(&e, 2, seed);
        prop_assert_eq!(numeric_jacobian_rank(&e, &mut probe).unwrap(), g.dimension);
    }

    #[test]
    fn network_text_round_trips(n in 1usize..=5, mask in any::<u64>(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let net = dag(n, mask).with_random_cpts(&mut rng, 0.1, 1.0);
        let again = parse_network(&write_network(&net)).unwrap();
        prop_assert_eq!(write_network(&again), write_network(&net));
        prop_assert_eq!(again.edges(), net.edges());
    }
}
