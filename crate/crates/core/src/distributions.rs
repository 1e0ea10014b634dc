//! Dyadic and d-adic distributions, tails, and amount sequences.
//!
//! A d-adic distribution stores one exponent per element: element i has
//! probability d^{-e_i}, or zero when the exponent is absent.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Error, Result};
use crate::numerics::inv_pow;
use crate::Limits;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DAdicDistribution {
    base: u32,
    exps: Vec<Option<u32>>,
}

/// On-disk form: `{"d":2,"exponents":[1,2,2]}`, with -1 for a zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionFile {
    pub d: u32,
    pub exponents: Vec<i64>,
}

impl DAdicDistribution {
    pub fn new(base: u32, exps: Vec<Option<u32>>) -> Result<Self> {
        if base < 2 {
            return domain(format!("base must be at least 2, got {base}"));
        }
        if exps.is_empty() {
            return domain("a distribution needs at least one element");
        }
        let mu = DAdicDistribution { base, exps };
        if mu.total_mass() != BigRational::one() {
            return domain(format!("probabilities sum to {}, not 1", mu.total_mass()));
        }
        Ok(mu)
    }

    pub fn dyadic(exps: &[u32]) -> Result<Self> {
        Self::new(2, exps.iter().map(|&e| Some(e)).collect())
    }

    pub fn from_file(file: &DistributionFile) -> Result<Self> {
        let exps = file
            .exponents
            .iter()
            .map(|&e| match e {
                -1 => Ok(None),
                e if e >= 0 && e <= u32::MAX as i64 => Ok(Some(e as u32)),
                e => domain(format!("bad exponent {e}")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.d, exps)
    }

    pub fn to_file(&self) -> DistributionFile {
        DistributionFile { d: self.base, exponents: self.sort_key() }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn n(&self) -> usize {
        self.exps.len()
    }

    pub fn exps(&self) -> &[Option<u32>] {
        &self.exps
    }

    pub fn prob(&self, i: usize) -> BigRational {
        match self.exps[i] {
            Some(e) => inv_pow(self.base, e),
            None => BigRational::zero(),
        }
    }

    pub fn probs(&self) -> Vec<BigRational> {
        (0..self.n()).map(|i| self.prob(i)).collect()
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        let d = self.base as f64;
        self.exps.iter().map(|e| e.map_or(0.0, |e| d.powi(-(e as i32)))).collect()
    }

    pub fn total_mass(&self) -> BigRational {
        let mut counts: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
        for e in self.exps.iter().flatten() {
            *counts.entry(*e).or_default() += 1;
        }
        let Some(&top) = counts.keys().next_back() else {
            return BigRational::zero();
        };
        let d = BigInt::from(self.base);
        let num: BigInt = counts.iter().map(|(&e, &c)| BigInt::from(c) * d.pow(top - e)).sum();
        BigRational::new(num, d.pow(top))
    }

    /// Exponents with -1 for zeros; the order used for "lexicographically first".
    pub fn sort_key(&self) -> Vec<i64> {
        self.exps.iter().map(|e| e.map_or(-1, |e| e as i64)).collect()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.exps[i].is_some()).collect()
    }

    pub fn support_mask(&self) -> u64 {
        self.support().iter().fold(0, |m, &i| m | (1u64 << i))
    }

    pub fn is_full_support(&self) -> bool {
        self.exps.iter().all(|e| e.is_some())
    }

    /// One element carries all the mass.
    pub fn is_dirac(&self) -> bool {
        self.exps.iter().any(|&e| e == Some(0))
    }

    /// Every element of the ground set has the same probability.
    pub fn is_constant(&self) -> bool {
        self.exps.iter().all(|&e| e == self.exps[0])
    }

    /// Probabilities are nonincreasing (zeros last).
    pub fn is_canonical(&self) -> bool {
        self.exps.windows(2).all(|w| order_key(w[0]) <= order_key(w[1]))
    }

    pub fn canonical(&self) -> Self {
        let mut exps = self.exps.clone();
        exps.sort_by_key(|&e| order_key(e));
        DAdicDistribution { base: self.base, exps }
    }

    pub fn max_exponent(&self) -> u32 {
        self.exps.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Probabilities as integer multiples of d^{-emax}, with the total.
    pub fn units(&self) -> Result<(Vec<u128>, u128)> {
        let emax = self.max_exponent();
        let total = checked_pow(self.base, emax)?;
        let units = self
            .exps
            .iter()
            .map(|e| match e {
                Some(e) => checked_pow(self.base, emax - e),
                None => Ok(0),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((units, total))
    }

    /// Base-d entropy, which for a d-adic distribution is sum p_i e_i.
    pub fn entropy_exact(&self) -> BigRational {
        (0..self.n()).fold(BigRational::zero(), |acc, i| match self.exps[i] {
            Some(e) => acc + self.prob(i) * BigRational::from_integer(BigInt::from(e)),
            None => acc,
        })
    }

    /// (exponent, multiplicity) pairs over the support, by increasing exponent.
    pub fn classes(&self) -> Vec<(u32, usize)> {
        let mut map = BTreeMap::new();
        for e in self.exps.iter().flatten() {
            *map.entry(*e).or_insert(0usize) += 1;
        }
        map.into_iter().collect()
    }
}

fn order_key(e: Option<u32>) -> u64 {
    e.map_or(u64::MAX, |e| e as u64)
}

pub(crate) fn checked_pow(d: u32, e: u32) -> Result<u128> {
    (d as u128)
        .checked_pow(e)
        .ok_or_else(|| Error::ResourceCap(format!("{d}^{e} exceeds 128-bit unit arithmetic")))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EnumOptions {
    pub full_support: bool,
    pub non_constant: bool,
    pub canonical: bool,
}

/// Calls `visit` with every nondecreasing exponent tuple of length `m`
/// whose probabilities sum to one.
pub fn visit_canonical_support(m: usize, d: u32, visit: &mut dyn FnMut(&[u32])) -> Result<()> {
    if m == 0 {
        return Ok(());
    }
    let cap = (m - 1) as u32;
    let total = checked_pow(d, cap)?;
    let mut prefix = Vec::with_capacity(m);
    dfs(d, cap, m, total, 0, &mut prefix, visit);
    Ok(())
}

fn dfs(
    d: u32,
    cap: u32,
    m: usize,
    remaining: u128,
    min_e: u32,
    prefix: &mut Vec<u32>,
    visit: &mut dyn FnMut(&[u32]),
) {
    let slots = (m - prefix.len()) as u128;
    if slots == 0 {
        if remaining == 0 {
            visit(prefix);
        }
        return;
    }
    for e in min_e..=cap {
        let u = (d as u128).pow(cap - e);
        if u > remaining {
            continue;
        }
        // the remaining slots hold at most u each and at least one unit each
        if remaining > slots * u {
            break;
        }
        if remaining - u < slots - 1 {
            continue;
        }
        prefix.push(e);
        dfs(d, cap, m, remaining - u, e, prefix, visit);
        prefix.pop();
    }
}

/// Number of distributions `enumerate_dadic` would produce.
pub fn count_dadic(n: usize, d: u32, opts: EnumOptions, limits: &Limits) -> Result<u64> {
    let mut count = 0u64;
    let mut over = false;
    for_each_dadic(n, d, opts, &mut |_| {
        count += 1;
        if count > limits.max_distributions {
            over = true;
        }
        !over
    })?;
    if over {
        return Err(Error::ResourceCap(format!(
            "more than {} distributions for n = {n}, d = {d}",
            limits.max_distributions
        )));
    }
    Ok(count)
}

/// All d-adic distributions on n elements matching `opts`.
///
/// Canonical order is depth-first over nondecreasing exponent tuples, by
/// support size; labeled output lists the distinct permutations of each
/// canonical distribution in lexicographic order.
pub fn enumerate_dadic(
    n: usize,
    d: u32,
    opts: EnumOptions,
    limits: &Limits,
) -> Result<Vec<DAdicDistribution>> {
    count_dadic(n, d, opts, limits)?;
    let mut out = Vec::new();
    for_each_dadic(n, d, opts, &mut |mu| {
        out.push(mu.clone());
        true
    })?;
    Ok(out)
}

pub fn enumerate_dyadic(n: usize, opts: EnumOptions, limits: &Limits) -> Result<Vec<DAdicDistribution>> {
    enumerate_dadic(n, 2, opts, limits)
}

/// Streams distributions to `visit` until it returns false.
pub fn for_each_dadic(
    n: usize,
    d: u32,
    opts: EnumOptions,
    visit: &mut dyn FnMut(&DAdicDistribution) -> bool,
) -> Result<()> {
    if d < 2 {
        return domain(format!("base must be at least 2, got {d}"));
    }
    if n == 0 {
        return domain("n must be positive");
    }
    let sizes: Vec<usize> = if opts.full_support { vec![n] } else { (1..=n).collect() };
    let mut go_on = true;
    for m in sizes {
        if !go_on {
            break;
        }
        visit_canonical_support(m, d, &mut |tuple| {
            if !go_on {
                return;
            }
            let mut exps: Vec<Option<u32>> = tuple.iter().map(|&e| Some(e)).collect();
            exps.resize(n, None);
            let mu = DAdicDistribution { base: d, exps };
            if opts.non_constant && mu.is_constant() {
                return;
            }
            if opts.canonical {
                go_on = visit(&mu);
            } else {
                let mut keys: Vec<u64> = mu.exps.iter().map(|&e| order_key(e)).collect();
                loop {
                    let exps = keys
                        .iter()
                        .map(|&k| if k == u64::MAX { None } else { Some(k as u32) })
                        .collect();
                    if !visit(&DAdicDistribution { base: d, exps }) {
                        go_on = false;
                        return;
                    }
                    if !next_permutation(&mut keys) {
                        break;
                    }
                }
            }
        })?;
    }
    Ok(())
}

pub(crate) fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A tail: its members (ascending indices) and total mass d^{-a}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tail {
    pub members: Vec<usize>,
    pub a: u32,
}

/// Indices in nonincreasing probability order, ties by index.
fn sorted_order(mu: &DAdicDistribution) -> Vec<usize> {
    let mut idx = mu.support();
    idx.sort_by_key(|&i| (mu.exps[i], i));
    idx
}

/// Elements strictly lighter than d^{-a}, if their mass is exactly d^{-a}.
fn light_set(mu: &DAdicDistribution, a: u32) -> Option<Vec<usize>> {
    let members: Vec<usize> = (0..mu.n()).filter(|&i| matches!(mu.exps[i], Some(e) if e > a)).collect();
    if members.is_empty() {
        return None;
    }
    let mass = members.iter().fold(BigRational::zero(), |s, &i| s + mu.prob(i));
    (mass == inv_pow(mu.base, a)).then_some(members)
}

fn single_tail(mu: &DAdicDistribution) -> Result<Tail> {
    let order = sorted_order(mu);
    let last = *order.last().expect("nonempty support");
    let a = mu.exps[last].expect("support element");
    if a == 0 {
        return precondition("a Dirac distribution has no tail");
    }
    Ok(Tail { members: vec![last], a })
}

/// The largest set T with probabilities 2^{-a-1}, ..., 2^{-a-|T|+1},
/// 2^{-a-|T|+1} (a >= 1) such that everything outside T has probability at
/// least 2^{-a}. A single lightest element is a tail of length one.
pub fn tail(mu: &DAdicDistribution) -> Result<Tail> {
    if mu.base != 2 {
        return domain("tail() needs a dyadic distribution; use generalized_tail");
    }
    if mu.is_dirac() {
        return precondition("a Dirac distribution has no tail");
    }
    let mut best: Option<Tail> = None;
    for a in 1..=mu.max_exponent() {
        let Some(members) = light_set(mu, a) else { continue };
        let m = members.len() as u32;
        if m < 2 {
            continue;
        }
        let mut es: Vec<u32> = members.iter().map(|&i| mu.exps[i].unwrap()).collect();
        es.sort_unstable();
        let mut pattern: Vec<u32> = (1..m).map(|j| a + j).collect();
        pattern.push(a + m - 1);
        if es == pattern && best.as_ref().map_or(true, |t| t.members.len() < members.len()) {
            best = Some(Tail { members, a });
        }
    }
    match best {
        Some(t) => Ok(t),
        None => single_tail(mu),
    }
}

/// The largest set T of nonzero elements with mass d^{-a} (a >= 1) such that
/// every nonzero element outside T has probability at least d^{-a}.
pub fn generalized_tail(mu: &DAdicDistribution) -> Result<Tail> {
    if mu.is_dirac() {
        return precondition("a Dirac distribution has no tail");
    }
    let mut best: Option<Tail> = None;
    for a in 1..=mu.max_exponent() {
        if let Some(members) = light_set(mu, a) {
            if best.as_ref().map_or(true, |t| t.members.len() < members.len()) {
                best = Some(Tail { members, a });
            }
        }
    }
    match best {
        Some(t) if t.members.len() > 1 => Ok(t),
        _ => single_tail(mu),
    }
}

/// Boundaries of the greedy prefix partition of a nonincreasing list of
/// d-adic probabilities (given by exponents) into intervals of mass d^{-a}.
/// Entry j is the number of elements in the first j+1 intervals.
pub fn prefix_split(exps: &[u32], d: u32, a: u32) -> Result<Vec<usize>> {
    if exps.is_empty() {
        return precondition("empty list");
    }
    if exps.windows(2).any(|w| w[0] > w[1]) {
        return precondition("probabilities must be nonincreasing");
    }
    if exps[0] < a {
        return precondition(format!("largest probability exceeds {d}^-{a}"));
    }
    let emax = *exps.iter().max().unwrap();
    let unit = BigUint::from(d).pow(emax - a);
    let total = exps.iter().fold(BigUint::zero(), |s, &e| s + BigUint::from(d).pow(emax - e));
    if (&total % &unit) != BigUint::zero() {
        return precondition(format!("total mass is not a multiple of {d}^-{a}"));
    }
    let mut ends = Vec::new();
    let mut acc = BigUint::zero();
    let mut goal = unit.clone();
    for (i, &e) in exps.iter().enumerate() {
        acc += BigUint::from(d).pow(emax - e);
        if acc == goal {
            ends.push(i + 1);
            goal += &unit;
        } else if acc > goal {
            return Err(Error::Internal("prefix sum skipped a multiple".into()));
        }
    }
    Ok(ends)
}

/// A point (c, b) of the amount-sequence domain for a fixed beta.
///
/// There are c_i n elements of probability mu_1 / 2^i with mu_1 = 2^{b-k},
/// except that one element of the last class is a tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmountSequence {
    pub b: u32,
    pub beta: BigRational,
    pub c: Vec<BigRational>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmountSequenceFile {
    pub b: u32,
    pub beta: String,
    pub c: Vec<String>,
}

impl AmountSequence {
    pub fn new(b: u32, beta: BigRational, c: Vec<BigRational>) -> Result<Self> {
        let one = BigRational::one();
        let two = BigRational::from_integer(2.into());
        if beta < one || beta >= two {
            return domain(format!("beta = {beta} lies outside [1, 2)"));
        }
        if c.first().map_or(true, |c0| !c0.is_positive()) {
            return domain("c_0 must be positive");
        }
        if c.iter().any(|x| x.is_negative()) {
            return domain("amounts must be nonnegative");
        }
        let sum: BigRational = c.iter().fold(BigRational::zero(), |s, x| s + x);
        if sum > one {
            return domain(format!("amounts sum to {sum} > 1"));
        }
        let seq = AmountSequence { b, beta, c };
        if seq.mass() != one {
            return domain(format!("sum c_i 2^(b-i) beta = {}, not 1", seq.mass()));
        }
        Ok(seq)
    }

    fn mass(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, ci) in self.c.iter().enumerate() {
            acc += ci * pow2(self.b as i64 - i as i64);
        }
        acc * &self.beta
    }

    /// Index of the last nonzero amount.
    pub fn t(&self) -> usize {
        self.c.iter().rposition(|x| !x.is_zero()).expect("c_0 > 0")
    }

    pub fn to_file(&self) -> AmountSequenceFile {
        AmountSequenceFile {
            b: self.b,
            beta: self.beta.to_string(),
            c: self.c.iter().map(|x| x.to_string()).collect(),
        }
    }

    pub fn c_f64(&self) -> Vec<f64> {
        self.c.iter().map(crate::numerics::rational_to_f64).collect()
    }
}

pub(crate) fn pow2(e: i64) -> BigRational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// Integer value of a rational, if it is one.
pub(crate) fn as_integer(x: &BigRational) -> Option<BigInt> {
    x.is_integer().then(|| x.to_integer())
}

/// True when every c_i beta 2^k is a nonnegative integer.
pub fn is_k_feasible(seq: &AmountSequence, k: u32) -> bool {
    let n = &seq.beta * pow2(k as i64);
    seq.c.iter().all(|ci| as_integer(&(ci * &n)).map_or(false, |v| !v.is_negative()))
}

/// Largest distribution `from_amount_sequence` will build.
pub const MAX_MATERIALIZED: usize = 1 << 20;

/// The canonical distribution described by (c, b) with n = beta 2^k.
pub fn from_amount_sequence(seq: &AmountSequence, k: u32) -> Result<DAdicDistribution> {
    let n_rat = &seq.beta * pow2(k as i64);
    let n = as_integer(&n_rat)
        .and_then(|v| v.to_usize())
        .ok_or_else(|| Error::Domain(format!("n = beta 2^k = {n_rat} is not an integer")))?;
    if n > MAX_MATERIALIZED {
        return Err(Error::ResourceCap(format!("n = {n} exceeds {MAX_MATERIALIZED} elements")));
    }
    if !is_k_feasible(seq, k) {
        return domain(format!("amounts are not {k}-feasible"));
    }
    let t = seq.t();
    let mut exps = Vec::with_capacity(n);
    let mut placed = 0usize;
    for (i, ci) in seq.c.iter().enumerate().take(t + 1) {
        let count = (ci * &n_rat).to_integer().to_usize().unwrap();
        let e = k as i64 + i as i64 - seq.b as i64;
        if e < 0 && count > 0 {
            return domain(format!("class {i} would have probability above 1"));
        }
        let keep = if i == t { count - 1 } else { count };
        exps.extend(std::iter::repeat(Some(e as u32)).take(keep));
        placed += count;
    }
    let tail_len = n + 1 - placed;
    let a = (k as i64 + t as i64 - seq.b as i64) as u32;
    if tail_len == 1 {
        exps.push(Some(a));
    } else {
        let m = tail_len as u32;
        exps.extend((1..m).map(|j| Some(a + j)));
        exps.push(Some(a + m - 1));
    }
    DAdicDistribution::new(2, exps)
}

/// Contracts the tail of mu to one element and reads off (c, b) with
/// beta = n / 2^k.
pub fn to_amount_sequence(mu: &DAdicDistribution, k: u32) -> Result<AmountSequence> {
    if mu.base != 2 {
        return domain("amount sequences describe dyadic distributions");
    }
    if !mu.is_full_support() {
        return precondition("amount sequences need full support");
    }
    if mu.is_constant() || mu.is_dirac() {
        return precondition("constant distribution");
    }
    let n = mu.n();
    if (1usize << k) > n || (n >> k) >= 2 {
        return precondition(format!("n = {n} is not in [2^{k}, 2^{})", k + 1));
    }
    let t = tail(mu)?;
    let mut exps: Vec<u32> = (0..n)
        .filter(|i| !t.members.contains(i))
        .map(|i| mu.exps[i].unwrap())
        .collect();
    exps.push(t.a);
    let e1 = *exps.iter().min().unwrap();
    if e1 > k {
        return Err(Error::Internal("largest probability below 2^-k".into()));
    }
    let b = k - e1;
    let last = *exps.iter().max().unwrap();
    let nn = BigInt::from(n);
    let c = (e1..=last)
        .map(|e| {
            let count = exps.iter().filter(|&&x| x == e).count();
            BigRational::new(BigInt::from(count), nn.clone())
        })
        .collect();
    let beta = BigRational::new(nn, BigInt::one() << k);
    AmountSequence::new(b, beta, c)
}

/// A random full-support canonical d-adic distribution on n elements, grown
/// from the Dirac distribution by splitting a uniformly chosen element into
/// d equal parts. Needs n = 1 mod (d - 1).
pub fn random_split<R: rand::Rng + ?Sized>(n: usize, d: u32, rng: &mut R) -> Result<DAdicDistribution> {
    if d < 2 || n == 0 || (n - 1) % (d as usize - 1) != 0 {
        return domain(format!("n = {n} is not reachable by splitting in base {d}"));
    }
    let mut exps = vec![0u32];
    while exps.len() < n {
        let i = rng.gen_range(0..exps.len());
        let e = exps.swap_remove(i) + 1;
        checked_pow(d, e)?;
        exps.extend(std::iter::repeat(e).take(d as usize));
    }
    exps.sort_unstable();
    DAdicDistribution::new(d, exps.into_iter().map(Some).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(DAdicDistribution::dyadic(&[1, 2]).is_err());
        assert!(DAdicDistribution::dyadic(&[1, 2, 2]).is_ok());
        assert!(DAdicDistribution::new(3, vec![Some(1), Some(1), Some(1), None]).is_ok());
    }

    #[test]
    fn counts_small() {
        let lim = Limits::default();
        let full = EnumOptions { full_support: true, non_constant: true, canonical: true };
        assert_eq!(enumerate_dyadic(2, full, &lim).unwrap().len(), 0);
        let three = enumerate_dyadic(3, full, &lim).unwrap();
        assert_eq!(three.len(), 1);
        assert_eq!(three[0].sort_key(), vec![1, 2, 2]);
        let labeled = EnumOptions { full_support: true, non_constant: true, canonical: false };
        assert_eq!(enumerate_dyadic(3, labeled, &lim).unwrap().len(), 3);
        let all = EnumOptions { full_support: false, non_constant: false, canonical: false };
        // Dirac (3), half-half (3), (1/2,1/4,1/4) (3)
        assert_eq!(enumerate_dyadic(3, all, &lim).unwrap().len(), 9);
    }

    #[test]
    fn cap_is_enforced() {
        let lim = Limits { max_distributions: 10, ..Limits::default() };
        let all = EnumOptions::default();
        assert!(matches!(enumerate_dyadic(6, all, &lim), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn tails() {
        let mu = DAdicDistribution::dyadic(&[2, 2, 2, 3, 4, 4]).unwrap();
        assert_eq!(tail(&mu).unwrap(), Tail { members: vec![3, 4, 5], a: 2 });
        let mu = DAdicDistribution::dyadic(&[1, 1]).unwrap();
        assert_eq!(tail(&mu).unwrap(), Tail { members: vec![1], a: 1 });
        let mu = DAdicDistribution::dyadic(&[1, 2, 3, 4, 4]).unwrap();
        assert_eq!(tail(&mu).unwrap(), Tail { members: vec![1, 2, 3, 4], a: 1 });
        // four equal eighths do not form a binary tail pattern
        let mu = DAdicDistribution::dyadic(&[1, 3, 3, 3, 3]).unwrap();
        assert_eq!(tail(&mu).unwrap(), Tail { members: vec![4], a: 3 });
        assert_eq!(generalized_tail(&mu).unwrap(), Tail { members: vec![1, 2, 3, 4], a: 1 });
        let mu = DAdicDistribution::new(3, vec![Some(1), Some(1), Some(2), Some(2), Some(2)]).unwrap();
        assert_eq!(generalized_tail(&mu).unwrap(), Tail { members: vec![2, 3, 4], a: 1 });
        let dirac = DAdicDistribution::dyadic(&[0]).unwrap();
        assert!(tail(&dirac).is_err());
    }

    #[test]
    fn prefix_split_example() {
        assert_eq!(prefix_split(&[2, 2, 3, 3, 3, 3], 2, 1).unwrap(), vec![2, 6]);
        assert!(prefix_split(&[2, 3], 2, 1).is_err());
        assert!(prefix_split(&[3, 2], 2, 1).is_err());
    }

    #[test]
    fn amount_round_trip() {
        let seq = AmountSequence::new(1, rat(5, 4), vec![rat(2, 5)]).unwrap();
        let mu = from_amount_sequence(&seq, 2).unwrap();
        assert_eq!(mu.sort_key(), vec![1, 2, 3, 4, 4]);
        assert_eq!(to_amount_sequence(&mu, 2).unwrap(), seq);

        let seq = AmountSequence::new(0, rat(1, 1), vec![rat(1, 1)]).unwrap();
        assert_eq!(from_amount_sequence(&seq, 3).unwrap().sort_key(), vec![3; 8]);

        let seq = AmountSequence::new(1, rat(5, 4), vec![rat(1, 5), rat(1, 5), rat(1, 5), rat(2, 5)]).unwrap();
        assert_eq!(from_amount_sequence(&seq, 2).unwrap().sort_key(), vec![1, 2, 3, 4, 4]);
        assert!(from_amount_sequence(&seq, 1).is_err());

        let mu = DAdicDistribution::dyadic(&[1, 2, 2]).unwrap();
        let seq = to_amount_sequence(&mu, 1).unwrap();
        assert_eq!(seq.b, 0);
        assert_eq!(from_amount_sequence(&seq, 1).unwrap(), mu);

        let uniform = DAdicDistribution::dyadic(&[2, 2, 2, 2]).unwrap();
        assert!(to_amount_sequence(&uniform, 2).is_err());
    }

    #[test]
    fn feasibility() {
        let seq = AmountSequence::new(1, rat(5, 4), vec![rat(2, 5)]).unwrap();
        assert!(is_k_feasible(&seq, 2));
        assert!(!is_k_feasible(&seq, 0));
        assert!(AmountSequence::new(1, rat(5, 4), vec![rat(1, 2)]).is_err());
    }
}
