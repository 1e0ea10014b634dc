//! Question sets that divide every d-adic distribution.
//!
//! An optimal question set is exactly a hitting set for the family
//! {Div(mu)}. The exact solver works on the family with duplicate and
//! superset edges removed; the constructions return sets that are then
//! checked with the verifier.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::DAdicDistribution;
use crate::error::{domain, Error, Result};
use crate::splitting::{compositions, rho_min_d};
use crate::strategy::{
    divisible_distributions, full_mask, is_optimal_question_set, Question, QuestionSet, QuestionSetFile,
    VerifyMethod,
};
use crate::Limits;

#[derive(Clone, Debug)]
pub struct HitterResult {
    pub questions: QuestionSet,
    pub size: usize,
    /// `None` when the ground set is beyond the verifier cap.
    pub verified: Option<bool>,
    pub method: &'static str,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
pub struct HitterFile {
    #[serde(flatten)]
    pub questions: QuestionSetFile,
    pub size: usize,
    pub verified: Option<bool>,
    pub method: &'static str,
    pub seed: Option<u64>,
}

impl HitterResult {
    pub fn to_file(&self) -> HitterFile {
        HitterFile {
            questions: self.questions.to_file(),
            size: self.size,
            verified: self.verified,
            method: self.method,
            seed: self.seed,
        }
    }
}

/// Questions up to relabeling of parts: binary ones as subsets holding
/// element 0, d-ary ones as set partitions into d nonempty blocks.
pub fn question_universe(n: usize, d: u32) -> Result<Vec<Question>> {
    if n < 2 || n > 64 {
        return domain(format!("n = {n} outside 2..=64"));
    }
    if d == 2 {
        return (0..full_mask(n) >> 1)
            .map(|m| Question::subset(n, (m << 1) | 1))
            .collect();
    }
    let d = d as usize;
    let mut out = Vec::new();
    let mut blocks = vec![0usize; n];
    fn rec(i: usize, used: usize, n: usize, d: usize, blocks: &mut Vec<usize>, out: &mut Vec<Question>) {
        if n - i < d - used {
            return;
        }
        if i == n {
            let mut parts = vec![0u64; d];
            for (x, &b) in blocks.iter().enumerate() {
                parts[b] |= 1 << x;
            }
            out.push(Question::new(n, parts).expect("set partition"));
            return;
        }
        for b in 0..=used.min(d - 1) {
            blocks[i] = b;
            rec(i + 1, used.max(b + 1), n, d, blocks, out);
        }
    }
    rec(0, 0, n, d, &mut blocks, &mut out);
    Ok(out)
}

/// Hyperedges of the divisibility family over `universe`, as bitsets of
/// universe indices, with duplicates and supersets removed.
fn edges(n: usize, d: u32, universe: &[Question], limits: &Limits) -> Result<Vec<u128>> {
    if universe.len() > 128 {
        return Err(Error::ResourceCap(format!("{} questions exceed the 128-bit edge sets", universe.len())));
    }
    let all = divisible_distributions(n, d, limits)?;
    let raw = all
        .par_iter()
        .map(|mu: &DAdicDistribution| {
            let (units, total) = mu.units()?;
            Ok(universe
                .iter()
                .enumerate()
                .filter(|(_, q)| q.divides(&units, total))
                .fold(0u128, |e, (i, _)| e | (1 << i)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut uniq: Vec<u128> = raw.into_iter().collect::<HashSet<_>>().into_iter().collect();
    if uniq.contains(&0) {
        return Err(Error::Internal("a divisible distribution has no dividing question".into()));
    }
    uniq.sort_by_key(|e| (e.count_ones(), *e));
    let mut kept: Vec<u128> = Vec::new();
    for e in uniq {
        if !kept.iter().any(|&k| k & e == k) {
            kept.push(e);
        }
    }
    Ok(kept)
}

struct Search<'a> {
    edges: &'a [u128],
    best: u128,
    best_size: u32,
}

impl Search<'_> {
    fn lower_bound(&self, chosen: u128) -> u32 {
        // pairwise disjoint uncovered edges each need their own question
        let mut used = 0u128;
        let mut count = 0;
        for &e in self.edges {
            if e & chosen == 0 && e & used == 0 {
                used |= e;
                count += 1;
            }
        }
        count
    }

    fn run(&mut self, chosen: u128) {
        let size = chosen.count_ones();
        let open = self.edges.iter().filter(|&&e| e & chosen == 0).min_by_key(|e| e.count_ones());
        let Some(&edge) = open else {
            if size < self.best_size {
                self.best_size = size;
                self.best = chosen;
            }
            return;
        };
        if size + self.lower_bound(chosen) >= self.best_size {
            return;
        }
        let mut options: Vec<u32> = (0..128).filter(|&i| edge >> i & 1 == 1).collect();
        options.sort_by_key(|&i| {
            let deg = self.edges.iter().filter(|&&e| e & chosen == 0 && e >> i & 1 == 1).count();
            (std::cmp::Reverse(deg), i)
        });
        for i in options {
            self.run(chosen | 1 << i);
        }
    }
}

fn greedy_cover(edges: &[u128], universe_len: usize) -> u128 {
    let mut chosen = 0u128;
    loop {
        let open: Vec<u128> = edges.iter().copied().filter(|&e| e & chosen == 0).collect();
        if open.is_empty() {
            return chosen;
        }
        let best = (0..universe_len)
            .max_by_key(|&i| (open.iter().filter(|&&e| e >> i & 1 == 1).count(), std::cmp::Reverse(i)))
            .expect("nonempty universe");
        chosen |= 1 << best;
    }
}

fn to_set(n: usize, d: u32, universe: &[Question], chosen: u128) -> Result<QuestionSet> {
    let qs = (0..universe.len()).filter(|&i| chosen >> i & 1 == 1).map(|i| universe[i].clone()).collect();
    QuestionSet::new(n, d, qs)
}

fn verify(qs: &QuestionSet, limits: &Limits) -> Result<Option<bool>> {
    if qs.n > limits.max_verify_n {
        return Ok(None);
    }
    Ok(Some(is_optimal_question_set(qs, VerifyMethod::Hitting, limits)?.optimal))
}

/// A minimum-size optimal question set, by branch and bound.
pub fn exact_min_hitter(n: usize, d: u32, limits: &Limits) -> Result<HitterResult> {
    let cap = if d == 2 { limits.max_exact_n_binary } else { limits.max_exact_n_dary };
    if n > cap {
        return Err(Error::ResourceCap(format!("exact hitter capped at n = {cap} for d = {d}")));
    }
    let universe = question_universe(n, d)?;
    let edges = edges(n, d, &universe, limits)?;
    let start = greedy_cover(&edges, universe.len());
    let mut search = Search { edges: &edges, best: start, best_size: start.count_ones() };
    search.run(0);
    let questions = to_set(n, d, &universe, search.best)?;
    let verified = verify(&questions, limits)?;
    Ok(HitterResult { size: questions.questions.len(), questions, verified, method: "exact", seed: None })
}

/// Greedy set cover over the same family, ties to the earliest question.
pub fn greedy_hitter(n: usize, d: u32, limits: &Limits) -> Result<HitterResult> {
    let universe = question_universe(n, d)?;
    let edges = edges(n, d, &universe, limits)?;
    let questions = to_set(n, d, &universe, greedy_cover(&edges, universe.len()))?;
    let verified = verify(&questions, limits)?;
    Ok(HitterResult { size: questions.questions.len(), questions, verified, method: "greedy", seed: None })
}

/// Samples, for every type with all parts nonempty,
/// ceil(multiplier * 2 n ln n / rho_min) uniform partitions of that type.
/// Each type draws from its own ChaCha stream, so the output does not depend
/// on the thread count.
pub fn randomized_hitter(n: usize, d: u32, seed: u64, multiplier: f64, limits: &Limits) -> Result<HitterResult> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return domain(format!("multiplier must be positive, got {multiplier}"));
    }
    if n < 2 || n > 30 {
        return domain(format!("n = {n} outside 2..=30"));
    }
    let rho = crate::numerics::rational_to_f64(&rho_min_d(n, d, limits)?.rho);
    let per_type = (multiplier * 2.0 * n as f64 * (n as f64).ln() / rho).ceil().max(1.0) as u64;
    let types: Vec<Vec<usize>> = compositions(n, d as usize).into_iter().filter(|k| k.iter().all(|&x| x > 0)).collect();
    let sampled = types
        .par_iter()
        .enumerate()
        .map(|(ti, k)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ti as u64);
            let total = multinomial_u128(n, k)?;
            (0..per_type)
                .map(|_| {
                    let r = rng.gen_range(0..total);
                    Ok(decode_arrangement(n, k, r).canonical())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seen = HashSet::new();
    let mut qs = Vec::new();
    for q in sampled.into_iter().flatten() {
        if seen.insert(q.clone()) {
            qs.push(q);
        }
    }
    qs.sort();
    let questions = QuestionSet::new(n, d, qs)?;
    let verified = verify(&questions, limits)?;
    Ok(HitterResult { size: questions.questions.len(), questions, verified, method: "random", seed: Some(seed) })
}

fn multinomial_u128(n: usize, k: &[usize]) -> Result<u128> {
    let mut acc: u128 = 1;
    let mut left = n as u128;
    for &part in k {
        for j in 0..part as u128 {
            acc = acc
                .checked_mul(left - j)
                .ok_or_else(|| Error::ResourceCap("multinomial exceeds 128 bits".into()))?
                / (j + 1);
        }
        left -= part as u128;
    }
    Ok(acc)
}

/// The r-th (lexicographic) assignment of elements to parts with part sizes k.
fn decode_arrangement(n: usize, k: &[usize], mut r: u128) -> Question {
    let mut left = k.to_vec();
    let mut parts = vec![0u64; k.len()];
    for x in 0..n {
        for j in 0..left.len() {
            if left[j] == 0 {
                continue;
            }
            left[j] -= 1;
            let count = multinomial_u128(n - x - 1, &left).expect("fits: bounded by the total");
            if r < count {
                parts[j] |= 1 << x;
                break;
            }
            r -= count;
            left[j] += 1;
        }
    }
    Question::new(n, parts).expect("arrangement of a valid type")
}

/// Every nonempty proper subset comparable with P = {x_1, ..., x_floor(n/2)}.
pub fn halving_baseline(n: usize, limits: &Limits) -> Result<HitterResult> {
    if !(2..=63).contains(&n) {
        return domain(format!("n = {n} outside 2..=63"));
    }
    let half = n / 2;
    let p = (1u64 << half) - 1;
    let full = full_mask(n);
    let mut masks: Vec<u64> = (1..=p).filter(|m| m & !p == 0).collect();
    let outside = n - half;
    for extra in 1..(1u64 << outside) - 1 {
        masks.push(p | (extra << half));
    }
    masks.retain(|&m| m != full);
    let qs = masks.into_iter().map(|m| Question::subset(n, m)).collect::<Result<Vec<_>>>()?;
    let questions = QuestionSet::new(n, 2, qs)?;
    let verified = verify(&questions, limits)?;
    Ok(HitterResult { size: questions.questions.len(), questions, verified, method: "halving", seed: None })
}

/// 2^floor(n/2) + 2^ceil(n/2) - 3.
pub fn halving_size(n: usize) -> u64 {
    (1u64 << (n / 2)) + (1u64 << n.div_ceil(2)) - 3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universe_sizes() {
        assert_eq!(question_universe(4, 2).unwrap().len(), 7);
        // Stirling numbers S(5,3) and S(4,3)
        assert_eq!(question_universe(5, 3).unwrap().len(), 25);
        assert_eq!(question_universe(4, 3).unwrap().len(), 6);
    }

    #[test]
    fn small_exact() {
        let lim = Limits::default();
        let r = exact_min_hitter(2, 2, &lim).unwrap();
        assert_eq!(r.size, 1);
        let r = exact_min_hitter(3, 2, &lim).unwrap();
        assert_eq!(r.size, 3);
        assert_eq!(r.verified, Some(true));
        assert_eq!(exact_min_hitter(3, 3, &lim).unwrap().size, 1);
        assert!(matches!(exact_min_hitter(9, 2, &lim), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn halving() {
        let lim = Limits::default();
        for n in 2..=6 {
            let r = halving_baseline(n, &lim).unwrap();
            assert_eq!(r.size as u64, halving_size(n));
            assert_eq!(r.verified, Some(true), "n = {n}");
        }
    }

    #[test]
    fn decode_covers_all() {
        let k = [2, 1, 2];
        let total = multinomial_u128(5, &k).unwrap();
        let all: HashSet<Question> = (0..total).map(|r| decode_arrangement(5, &k, r)).collect();
        assert_eq!(all.len() as u128, total);
    }

    #[test]
    fn random_is_reproducible() {
        let lim = Limits::default();
        let a = randomized_hitter(4, 2, 7, 1.0, &lim).unwrap();
        let b = randomized_hitter(4, 2, 7, 1.0, &lim).unwrap();
        assert_eq!(a.questions, b.questions);
        assert_eq!(a.verified, Some(true));
    }
}
