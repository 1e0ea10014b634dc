//! Slow reference computations by exhaustive enumeration. Nothing here
//! depends on the `qsplit` crate; tests compare the two.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// d^{-e}; `None` is probability zero.
pub fn prob(d: u32, e: Option<u32>) -> Q {
    match e {
        Some(e) => BigRational::new(BigInt::one(), BigInt::from(d).pow(e)),
        None => Q::zero(),
    }
}

pub fn probs(d: u32, exps: &[Option<u32>]) -> Vec<Q> {
    exps.iter().map(|&e| prob(d, e)).collect()
}

fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

fn multinom(sizes: &[usize]) -> u128 {
    let mut left = sizes.iter().sum::<usize>() as u64;
    let mut r = 1u128;
    for &s in sizes {
        r *= binom(left, s as u64);
        left -= s as u64;
    }
    r
}

/// Number of subsets of each size whose mass is exactly 1/2.
pub fn splitting_counts(p: &[Q]) -> Vec<u64> {
    let n = p.len();
    let half = q(1, 2);
    let mut counts = vec![0u64; n + 1];
    for mask in 0u64..(1 << n) {
        let mut m = Q::zero();
        for (i, pi) in p.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m += pi;
            }
        }
        if m == half {
            counts[mask.count_ones() as usize] += 1;
        }
    }
    counts
}

/// max over 1 <= i <= n-1 of counts[i] / C(n, i), if any count is nonzero.
pub fn max_relative_density(counts: &[u64]) -> Option<Q> {
    let n = counts.len() - 1;
    (1..n)
        .filter(|&i| counts[i] > 0)
        .map(|i| BigRational::new(BigInt::from(counts[i]), BigInt::from(binom(n as u64, i as u64))))
        .max()
}

/// Ordered d-part labelings with every part of mass 1/d, keyed by part sizes.
pub fn dividing_counts(p: &[Q], d: usize) -> BTreeMap<Vec<usize>, u64> {
    let n = p.len();
    let target = q(1, d as i64);
    let mut out = BTreeMap::new();
    let mut label = vec![0usize; n];
    loop {
        let mut mass = vec![Q::zero(); d];
        let mut sizes = vec![0usize; d];
        for i in 0..n {
            mass[label[i]] += &p[i];
            sizes[label[i]] += 1;
        }
        if mass.iter().all(|m| *m == target) {
            *out.entry(sizes).or_insert(0) += 1;
        }
        let mut i = 0;
        while i < n && label[i] == d - 1 {
            label[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        label[i] += 1;
    }
    out
}

/// max over types of count / multinomial(n; type).
pub fn dividing_density(types: &BTreeMap<Vec<usize>, u64>) -> Option<Q> {
    types
        .iter()
        .map(|(k, &c)| BigRational::new(BigInt::from(c), BigInt::from(multinom(k))))
        .max()
}

/// Every exponent vector over {zero, 0, ..., emax} on n labeled elements
/// whose probabilities sum to one.
pub fn all_dadic(n: usize, d: u32, emax: u32, allow_zero: bool) -> Vec<Vec<Option<u32>>> {
    let choices: Vec<Option<u32>> = if allow_zero { std::iter::once(None).chain((0..=emax).map(Some)).collect() } else { (0..=emax).map(Some).collect() };
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        let exps: Vec<Option<u32>> = cur.iter().map(|&j| choices[j]).collect();
        if probs(d, &exps).iter().fold(Q::zero(), |s, x| s + x) == Q::one() {
            out.push(exps);
        }
        let mut i = 0;
        while i < n && cur[i] == choices.len() - 1 {
            cur[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        cur[i] += 1;
    }
    out
}

/// min rho(Spl) over full-support dyadic distributions on n elements that
/// are not uniform.
pub fn rho_min(n: usize) -> Option<Q> {
    all_dadic(n, 2, n as u32 - 1, false)
        .into_iter()
        .filter(|e| e.iter().any(|x| *x != e[0]))
        .filter_map(|e| max_relative_density(&splitting_counts(&probs(2, &e))))
        .min()
}

/// min rho(Div) over d-adic distributions on n elements, zeros allowed, that
/// admit at least one dividing partition.
pub fn rho_min_d(n: usize, d: u32) -> Option<Q> {
    let emax = (n as u32).saturating_sub(1);
    all_dadic(n, d, emax, true)
        .into_iter()
        .filter_map(|e| {
            let p = probs(d, &e);
            if d == 2 {
                max_relative_density(&splitting_counts(&p))
            } else {
                dividing_density(&dividing_counts(&p, d as usize))
            }
        })
        .min()
}

/// min sum p_i l_i over integer lengths with sum d^{-l_i} <= 1, lengths of
/// zero-probability elements ignored.
pub fn min_code_cost(p: &[f64], d: u32) -> f64 {
    let idx: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let m = idx.len();
    if m <= 1 {
        return 0.0;
    }
    let lmax = m as u32;
    let mut best = f64::INFINITY;
    let mut len = vec![0u32; m];
    loop {
        let kraft: f64 = len.iter().map(|&l| (d as f64).powi(-(l as i32))).sum();
        if kraft <= 1.0 + 1e-12 {
            let c: f64 = idx.iter().zip(&len).map(|(&i, &l)| p[i] * l as f64).sum();
            best = best.min(c);
        }
        let mut i = 0;
        while i < m && len[i] == lmax {
            len[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
        len[i] += 1;
    }
    best
}

/// A question as a labeling of the n elements by answers 0..d.
pub type Labeling = Vec<usize>;

/// Expected number of questions when only `questions` may be asked, or
/// `None` if two elements of positive probability cannot be told apart.
pub fn restricted_cost(p: &[Q], questions: &[Labeling]) -> Option<Q> {
    let n = p.len();
    let start: u64 = (0..n).filter(|&i| !p[i].is_zero()).fold(0, |m, i| m | 1 << i);
    let mut memo = HashMap::new();
    cost_of(start, p, questions, &mut memo)
}

fn cost_of(set: u64, p: &[Q], questions: &[Labeling], memo: &mut HashMap<u64, Option<Q>>) -> Option<Q> {
    if set.count_ones() <= 1 {
        return Some(Q::zero());
    }
    if let Some(v) = memo.get(&set) {
        return v.clone();
    }
    let mass: Q = (0..p.len()).filter(|&i| set >> i & 1 == 1).fold(Q::zero(), |s, i| s + &p[i]);
    let mut best: Option<Q> = None;
    for qn in questions {
        let d = qn.iter().max().map_or(1, |&x| x + 1);
        let mut parts = vec![0u64; d];
        for i in 0..p.len() {
            if set >> i & 1 == 1 {
                parts[qn[i]] |= 1 << i;
            }
        }
        if parts.iter().any(|&x| x == set) {
            continue;
        }
        let mut total = mass.clone();
        let mut ok = true;
        for &part in &parts {
            match cost_of(part, p, questions, memo) {
                Some(c) => total += c,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.as_ref().map_or(true, |b| total < *b) {
            best = Some(total);
        }
    }
    memo.insert(set, best.clone());
    best
}

/// Largest binary tail: a set T of positive elements with mass 2^{-a},
/// a >= 1, probabilities 2^{-a-1}, ..., 2^{-a-m+1}, 2^{-a-m+1}, and every
/// positive element outside T of probability at least 2^{-a}. Returns
/// (|T|, a) for the largest such T with |T| >= 2.
pub fn largest_tail(exps: &[Option<u32>]) -> Option<(usize, u32)> {
    largest_light_set(exps, 2, true)
}

/// As `largest_tail` without the pattern condition, in base d.
pub fn largest_generalized_tail(exps: &[Option<u32>], d: u32) -> Option<(usize, u32)> {
    largest_light_set(exps, d, false)
}

fn largest_light_set(exps: &[Option<u32>], d: u32, pattern: bool) -> Option<(usize, u32)> {
    let n = exps.len();
    let emax = exps.iter().flatten().max().copied().unwrap_or(0);
    let mut best: Option<(usize, u32)> = None;
    for mask in 1u64..(1 << n) {
        if (0..n).any(|i| mask >> i & 1 == 1 && exps[i].is_none()) || mask.count_ones() < 2 {
            continue;
        }
        let m = Q::from_iter_sum((0..n).filter(|&i| mask >> i & 1 == 1).map(|i| prob(d, exps[i])));
        for a in 1..=emax {
            if m != prob(d, Some(a)) {
                continue;
            }
            let inside_light = (0..n).filter(|&i| mask >> i & 1 == 1).all(|i| exps[i].unwrap() > a);
            let outside_heavy = (0..n).filter(|&i| mask >> i & 1 == 0).all(|i| exps[i].map_or(true, |e| e <= a));
            if !(inside_light && outside_heavy) {
                continue;
            }
            if pattern {
                let mut es: Vec<u32> = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| exps[i].unwrap()).collect();
                es.sort_unstable();
                let k = es.len() as u32;
                let mut want: Vec<u32> = (1..k).map(|j| a + j).collect();
                want.push(a + k - 1);
                if es != want {
                    continue;
                }
            }
            let size = mask.count_ones() as usize;
            if best.map_or(true, |(s, _)| size > s) {
                best = Some((size, a));
            }
        }
    }
    best
}

trait SumExt {
    fn from_iter_sum<I: Iterator<Item = Q>>(it: I) -> Q;
}

impl SumExt for Q {
    fn from_iter_sum<I: Iterator<Item = Q>>(it: I) -> Q {
        it.fold(Q::zero(), |s, x| s + x)
    }
}

/// Every question with all d parts nonempty, one per unordered partition.
pub fn questions(n: usize, d: usize) -> Vec<Labeling> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        // restricted growth strings enumerate unordered partitions
        let mut ok = true;
        let mut seen = 0usize;
        for &x in &cur {
            if x > seen {
                ok = false;
                break;
            }
            if x == seen {
                seen += 1;
            }
        }
        if ok && seen == d {
            out.push(cur.clone());
        }
        let mut i = 0;
        while i < n && cur[i] == d - 1 {
            cur[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        cur[i] += 1;
    }
    out
}

fn divides(p: &[Q], qn: &Labeling, d: usize) -> bool {
    let target = q(1, d as i64);
    let mut mass = vec![Q::zero(); d];
    for (i, &l) in qn.iter().enumerate() {
        mass[l] += &p[i];
    }
    mass.iter().all(|m| *m == target)
}

/// Size of the smallest question set dividing every non-Dirac d-adic
/// distribution on n elements, by trying all sets of each size in turn.
pub fn min_hitter_size(n: usize, d: usize) -> usize {
    let universe = questions(n, d);
    let dists: Vec<Vec<Q>> = all_dadic(n, d as u32, n as u32, true)
        .into_iter()
        .filter(|e| e.iter().flatten().count() > 1)
        .map(|e| probs(d as u32, &e))
        .collect();
    let edges: Vec<u64> = dists
        .iter()
        .map(|p| (0..universe.len()).filter(|&j| divides(p, &universe[j], d)).fold(0u64, |m, j| m | 1 << j))
        .collect();
    for size in 0..=universe.len() {
        let mut pick: Vec<usize> = (0..size).collect();
        loop {
            let chosen = pick.iter().fold(0u64, |m, &j| m | 1 << j);
            if edges.iter().all(|&e| e & chosen != 0) {
                return size;
            }
            let mut i = size;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if pick[i] < universe.len() - size + i {
                    pick[i] += 1;
                    for j in i + 1..size {
                        pick[j] = pick[j - 1] + 1;
                    }
                    i = usize::MAX;
                    break;
                }
            }
            if i != usize::MAX {
                break;
            }
        }
    }
    universe.len()
}

/// Shannon entropy in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rho() {
        assert_eq!(rho_min(3), Some(q(1, 3)));
        assert_eq!(rho_min(4), Some(q(1, 4)));
    }

    #[test]
    fn small_hitters() {
        assert_eq!(min_hitter_size(2, 2), 1);
        assert_eq!(min_hitter_size(3, 2), 3);
        assert_eq!(min_hitter_size(3, 3), 1);
    }

    #[test]
    fn code_cost() {
        assert!((min_code_cost(&[0.4, 0.3, 0.2, 0.1], 2) - 1.9).abs() < 1e-12);
    }
}
