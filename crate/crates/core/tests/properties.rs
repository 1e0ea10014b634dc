use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use qsplit::distributions::{
    from_amount_sequence, prefix_split, random_split, to_amount_sequence, DAdicDistribution,
};
use qsplit::gbeta::{best_upper_bound, g_ub_single_block, inner_max, log2_five_quarters, payoff};
use qsplit::numerics::entropy;
use qsplit::splitting::{block_partition, check_block_partition};
use qsplit::strategy::{huffman, QuestionSet, QuestionSetFile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn split_dist(n: usize, d: u32, seed: u64) -> DAdicDistribution {
    random_split(n, d, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn reachable(n: usize, d: u32) -> usize {
    let step = d as usize - 1;
    1 + (n.max(2) - 1).div_ceil(step) * step
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn amount_sequences_round_trip(n in 2usize..40, seed in any::<u64>()) {
        let mu = split_dist(n, 2, seed);
        prop_assume!(!mu.is_constant());
        let k = (usize::BITS - 1 - n.leading_zeros()) as u32;
        let seq = to_amount_sequence(&mu, k).unwrap();
        let back = from_amount_sequence(&seq, k).unwrap();
        prop_assert_eq!(back.canonical().exps().to_vec(), mu.canonical().exps().to_vec());
    }

    #[test]
    fn block_partitions_hold(d in prop::sample::select(vec![2u32, 3, 5]), n in 3usize..64, seed in any::<u64>()) {
        let n = reachable(n, d).min(if d == 2 { 64 } else { 61 });
        let mu = split_dist(n, d, seed);
        prop_assume!(!mu.is_dirac());
        let bp = block_partition(&mu).unwrap();
        prop_assert!(check_block_partition(&mu, &bp).is_ok(), "{:?}", check_block_partition(&mu, &bp));
    }

    #[test]
    fn prefix_split_intervals(d in prop::sample::select(vec![2u32, 3, 5]), n in 2usize..40, seed in any::<u64>()) {
        let n = reachable(n, d);
        let mu = split_dist(n, d, seed);
        let exps: Vec<u32> = mu.exps().iter().map(|e| e.unwrap()).collect();
        let a = exps[0];
        let ends = prefix_split(&exps, d, a).unwrap();
        let unit = BigRational::new(1.into(), BigInt::from(d).pow(a));
        let mut start = 0;
        for &end in &ends {
            let m = (start..end).fold(BigRational::zero(), |s, i| s + mu.prob(i));
            prop_assert_eq!(m, unit.clone());
            start = end;
        }
        prop_assert_eq!(start, n);
    }

    #[test]
    fn dadic_huffman_cost_is_entropy(d in 2u32..5, n in 2usize..30, seed in any::<u64>()) {
        let n = reachable(n, d);
        let mu = split_dist(n, d, seed);
        let p = mu.probs_f64();
        let cost = huffman(&p, d).unwrap().cost;
        prop_assert!((cost - entropy(&p, d).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn upper_bounds_stay_above_the_floor(beta in 1.0f64..1.999) {
        let floor = -log2_five_quarters() - 1e-9;
        prop_assert!(g_ub_single_block(beta, 0).unwrap().value >= floor);
        prop_assert!(g_ub_single_block(beta, 1).unwrap().value >= floor);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn inner_max_beats_uniform(beta in 1.0f64..1.99, b in 0u32..3, w in prop::collection::vec(0.0f64..1.0, 1..5)) {
        // spread part of the mass of c_0 over later classes
        let top = 1.0 / (beta * 2f64.powi(b as i32));
        let scale: f64 = w.iter().enumerate().map(|(i, x)| x * 0.5f64.powi(i as i32 + 1)).sum::<f64>();
        let shrink = top * 0.5 / scale.max(1e-12);
        let mut c = vec![0.0];
        for x in &w {
            c.push(x * shrink.min(1.0));
        }
        c[0] = top - c.iter().enumerate().skip(1).map(|(i, x)| x * 0.5f64.powi(i as i32)).sum::<f64>();
        prop_assume!(c.iter().sum::<f64>() <= 1.0);
        let im = inner_max(&c, b, beta).unwrap();
        prop_assert!(im.value >= payoff(&c, &vec![0.5; c.len()]) - 1e-12);
        prop_assert!(im.value >= -log2_five_quarters() - 1e-9);
    }
}

#[test]
fn best_bound_on_a_grid() {
    let floor = -log2_five_quarters() - 1e-9;
    for j in 0..20 {
        let beta = 1.0 + j as f64 * 0.05;
        assert!(best_upper_bound(beta).unwrap().value >= floor, "beta = {beta}");
    }
}

#[test]
fn question_files_round_trip() {
    for (n, d) in [(3, 2), (4, 2), (4, 3), (5, 3)] {
        let qs = QuestionSet::full(n, d).unwrap();
        let text = serde_json::to_string(&qs.to_file()).unwrap();
        let file: QuestionSetFile = serde_json::from_str(&text).unwrap();
        let back = QuestionSet::from_file(&file).unwrap();
        assert_eq!(serde_json::to_string(&back.to_file()).unwrap(), text);
    }
}
