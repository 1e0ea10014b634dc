use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use qsplit::distributions::{
    enumerate_dadic, for_each_dadic, generalized_tail, tail, DAdicDistribution, EnumOptions,
};
use qsplit::hitters::{exact_min_hitter, halving_size};
use qsplit::splitting::{dividing_counts, rho_min, rho_min_d, splitting_counts};
use qsplit::strategy::{huffman, restricted_opt_cost_exact, Question, QuestionSet};
use qsplit::{Error, Limits};
use qsplit_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn canonical() -> EnumOptions {
    EnumOptions { full_support: true, non_constant: false, canonical: true }
}

fn labeled_with_zeros() -> EnumOptions {
    EnumOptions { full_support: false, non_constant: false, canonical: false }
}

fn as_u64(v: &[BigUint]) -> Vec<u64> {
    v.iter().map(|x| x.to_u64().unwrap()).collect()
}

#[test]
fn splitting_counts_match_subset_enumeration() {
    let lim = Limits::default();
    let mut checked = 0;
    for n in 2..=10 {
        for mu in enumerate_dadic(n, 2, canonical(), &lim).unwrap() {
            let fast = splitting_counts(&mu).unwrap();
            let slow = oracle::splitting_counts(&oracle::probs(2, mu.exps()));
            assert_eq!(as_u64(&fast.counts), slow, "{:?}", mu.exps());
            checked += 1;
        }
    }
    assert_eq!(checked, 115);
}

#[test]
fn splitting_counts_with_zeros() {
    let lim = Limits::default();
    for mu in enumerate_dadic(5, 2, labeled_with_zeros(), &lim).unwrap() {
        let fast = splitting_counts(&mu).unwrap();
        let slow = oracle::splitting_counts(&oracle::probs(2, mu.exps()));
        assert_eq!(as_u64(&fast.counts), slow, "{:?}", mu.exps());
    }
}

#[test]
fn dividing_counts_match_labeling_enumeration() {
    let lim = Limits::default();
    for (n, d) in [(3, 3), (5, 3), (6, 3), (7, 3), (5, 5), (4, 4)] {
        for mu in enumerate_dadic(n, d, labeled_with_zeros(), &lim).unwrap() {
            if mu.is_dirac() {
                continue;
            }
            let fast = dividing_counts(&mu).unwrap();
            let slow = oracle::dividing_counts(&oracle::probs(d, mu.exps()), d as usize);
            let fast: Vec<(Vec<usize>, u64)> =
                fast.types.into_iter().map(|(k, c)| (k, c.to_u64().unwrap())).collect();
            let slow: Vec<(Vec<usize>, u64)> = slow.into_iter().collect();
            assert_eq!(fast, slow, "{:?}", mu.exps());
        }
    }
}

#[test]
fn rho_min_frozen_values() {
    let lim = Limits::default();
    for n in 3..=7 {
        let r = rho_min(n, &lim).unwrap();
        assert_eq!(r.rho, BigRational::new(1.into(), (n as i64).into()));
        assert_eq!(Some(r.rho.clone()), oracle::rho_min(n));
    }
    let r3 = rho_min(3, &lim).unwrap();
    assert_eq!(r3.witness.exps(), &[Some(1), Some(2), Some(2)]);
}

#[test]
fn rho_min_d_frozen_values() {
    let lim = Limits::default();
    let cases = [(2, 2, "1"), (3, 2, "1/3"), (4, 2, "1/4"), (3, 3, "1"), (4, 3, "1/2"), (5, 3, "1/10")];
    for (n, d, want) in cases {
        let fast = rho_min_d(n, d, &lim).unwrap().rho;
        assert_eq!(fast.to_string(), want, "n = {n}, d = {d}");
        assert_eq!(Some(fast), oracle::rho_min_d(n, d));
    }
}

#[test]
fn exact_hitters_match_exhaustive_search() {
    let lim = Limits::default();
    let frozen = [(2, 2, 1), (3, 2, 3), (4, 2, 5), (5, 2, 9), (3, 3, 1), (4, 3, 2)];
    for (n, d, want) in frozen {
        let fast = exact_min_hitter(n, d, &lim).unwrap();
        assert_eq!(fast.size, want, "q({n}, {d})");
        assert_eq!(oracle::min_hitter_size(n, d as usize), want);
        assert_eq!(fast.verified, Some(true));
    }
    for n in 2..=5 {
        assert_eq!(halving_size(n) as usize, exact_min_hitter(n, 2, &lim).unwrap().size);
    }
}

#[test]
fn tails_match_exhaustive_search() {
    let lim = Limits::default();
    for n in 2..=9 {
        for mu in enumerate_dadic(n, 2, canonical(), &lim).unwrap() {
            if mu.is_dirac() {
                continue;
            }
            let t = tail(&mu).unwrap();
            match oracle::largest_tail(mu.exps()) {
                Some((size, a)) => assert_eq!((t.members.len(), t.a), (size, a), "{:?}", mu.exps()),
                None => assert_eq!(t.members.len(), 1, "{:?}", mu.exps()),
            }
        }
    }
    for n in 2..=7 {
        for mu in enumerate_dadic(n, 3, canonical(), &lim).unwrap() {
            if mu.is_dirac() {
                continue;
            }
            let t = generalized_tail(&mu).unwrap();
            match oracle::largest_generalized_tail(mu.exps(), 3) {
                Some((size, a)) => assert_eq!((t.members.len(), t.a), (size, a), "{:?}", mu.exps()),
                None => assert_eq!(t.members.len(), 1, "{:?}", mu.exps()),
            }
        }
    }
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

#[test]
fn huffman_matches_kraft_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..60 {
        let n = 2 + case % 5;
        let d = if case % 2 == 0 { 2 } else { 3 };
        let p = random_probs(&mut rng, n);
        let fast = huffman(&p, d).unwrap().cost;
        let slow = oracle::min_code_cost(&p, d);
        assert!((fast - slow).abs() < 1e-12, "{p:?} d = {d}: {fast} vs {slow}");
    }
}

fn labeling(q: &Question, n: usize) -> Vec<usize> {
    (0..n).map(|i| q.parts().iter().position(|&p| p >> i & 1 == 1).unwrap()).collect()
}

#[test]
fn restricted_cost_matches_recursion() {
    let lim = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..=5 {
        let all = enumerate_dadic(n, 2, labeled_with_zeros(), &lim).unwrap();
        for _ in 0..20 {
            let size = rng.gen_range(1..=4);
            let qs: Vec<Question> = (0..size)
                .map(|_| Question::subset(n, rng.gen_range(1..(1u64 << n) - 1)).unwrap())
                .collect();
            let set = QuestionSet::new(n, 2, qs.clone()).unwrap();
            let labels: Vec<Vec<usize>> = qs.iter().map(|q| labeling(q, n)).collect();
            for mu in all.iter().step_by(3) {
                let slow = oracle::restricted_cost(&oracle::probs(2, mu.exps()), &labels);
                match restricted_opt_cost_exact(mu, &set, &lim) {
                    Ok(c) => assert_eq!(Some(c), slow, "{:?}", mu.exps()),
                    Err(Error::Inseparable(..)) => assert_eq!(slow, None),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

#[test]
fn splitting_sets_respect_the_tail() {
    for n in 3..=10 {
        for_each_dadic(n, 2, canonical(), &mut |mu: &DAdicDistribution| {
            if mu.is_dirac() {
                return true;
            }
            let t = tail(mu).unwrap();
            let tmask: u64 = t.members.iter().map(|&i| 1u64 << i).sum();
            let p = oracle::probs(2, mu.exps());
            let half = oracle::q(1, 2);
            for mask in 0u64..(1 << n) {
                let m = (0..n).filter(|&i| mask >> i & 1 == 1).fold(oracle::q(0, 1), |s, i| s + &p[i]);
                if m == half {
                    assert!(mask & tmask == 0 || mask & tmask == tmask, "{:?} {mask:b}", mu.exps());
                }
            }
            true
        })
        .unwrap();
    }
}
