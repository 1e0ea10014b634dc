//! Splitting and dividing sets, relative densities, and block partitions.
//!
//! Counting never enumerates subsets. Elements are grouped into probability
//! classes and a dynamic program runs over (mass, size) states, picking how
//! many elements of each class join the set.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{
    generalized_tail, prefix_split, visit_canonical_support, AmountSequence,
    DAdicDistribution,
};
use crate::error::{domain, precondition, Error, Result};
use crate::numerics::{binomial, multinomial};
use crate::Limits;

/// |Spl(mu)_i| for every size i in 0..=n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplittingProfile {
    pub n: usize,
    pub counts: Vec<BigUint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeCount {
    pub size: usize,
    pub count: String,
    pub denom: String,
}

impl SplittingProfile {
    /// Nonzero sizes with their counts and C(n, size).
    pub fn entries(&self) -> Vec<SizeCount> {
        (1..self.n)
            .filter(|&i| !self.counts[i].is_zero())
            .map(|i| SizeCount {
                size: i,
                count: self.counts[i].to_string(),
                denom: binomial(self.n as u64, i as u64).to_string(),
            })
            .collect()
    }

    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }
}

/// One probability class: `count` elements of `units` mass each, every one
/// standing for `weight` ground elements (more than one only for a
/// contracted tail).
#[derive(Clone, Copy, Debug)]
struct Class {
    units: u128,
    count: usize,
    weight: usize,
}

/// Number of ways to pick per-class counts reaching mass `target`, by size.
/// `caps[j]` bounds how many of class j may be picked; `binom_top[j]` is the
/// top argument of the binomial weight.
fn subset_counts(classes: &[Class], caps: &[usize], binom_top: &[usize], target: u128, n: usize) -> Vec<BigUint> {
    let mut states: HashMap<(u128, usize), BigUint> = HashMap::new();
    states.insert((0, 0), BigUint::one());
    for (j, cl) in classes.iter().enumerate() {
        let ways: Vec<BigUint> = (0..=caps[j]).map(|k| binomial(binom_top[j] as u64, k as u64)).collect();
        let mut next: HashMap<(u128, usize), BigUint> = HashMap::new();
        for ((mass, size), cnt) in states {
            for k in 0..=caps[j] {
                let m = mass + cl.units * k as u128;
                if m > target {
                    break;
                }
                *next.entry((m, size + k * cl.weight)).or_default() += &cnt * &ways[k];
            }
        }
        states = next;
    }
    let mut counts = vec![BigUint::zero(); n + 1];
    for ((mass, size), cnt) in states {
        if mass == target {
            counts[size] += cnt;
        }
    }
    counts
}

fn classes_of(mu: &DAdicDistribution) -> Result<(Vec<Class>, u128)> {
    let (units, total) = mu.units()?;
    let mut map: BTreeMap<u128, usize> = BTreeMap::new();
    for u in units {
        *map.entry(u).or_default() += 1;
    }
    let classes = map
        .into_iter()
        .rev()
        .map(|(units, count)| Class { units, count, weight: 1 })
        .collect();
    Ok((classes, total))
}

/// |Spl(mu)_i| for all i, where Spl(mu) are the sets of mass exactly 1/2.
pub fn splitting_counts(mu: &DAdicDistribution) -> Result<SplittingProfile> {
    if mu.base() != 2 {
        return domain("splitting sets exist only for dyadic distributions");
    }
    let (classes, total) = classes_of(mu)?;
    if total % 2 == 1 {
        return Ok(SplittingProfile { n: mu.n(), counts: vec![BigUint::zero(); mu.n() + 1] });
    }
    let caps: Vec<usize> = classes.iter().map(|c| c.count).collect();
    let counts = subset_counts(&classes, &caps, &caps, total / 2, mu.n());
    Ok(SplittingProfile { n: mu.n(), counts })
}

/// Splitting counts of the sets that contain the tail and of those that
/// avoid it, by size.
pub fn splitting_counts_by_tail(mu: &DAdicDistribution) -> Result<(Vec<BigUint>, Vec<BigUint>)> {
    let t = crate::distributions::tail(mu)?;
    let (units, total) = mu.units()?;
    let tail_units: u128 = t.members.iter().map(|&i| units[i]).sum();
    let mut map: BTreeMap<u128, usize> = BTreeMap::new();
    for i in (0..mu.n()).filter(|i| !t.members.contains(i)) {
        *map.entry(units[i]).or_default() += 1;
    }
    let mut classes: Vec<Class> = map.into_iter().rev().map(|(units, count)| Class { units, count, weight: 1 }).collect();
    classes.push(Class { units: tail_units, count: 1, weight: t.members.len() });
    let mut caps: Vec<usize> = classes.iter().map(|c| c.count).collect();
    let tops = caps.clone();
    let last = classes.len() - 1;
    let half = total / 2;
    caps[last] = 0;
    let without = subset_counts(&classes, &caps, &tops, half, mu.n());
    let all = subset_counts(&classes, &tops, &tops, half, mu.n());
    let with: Vec<BigUint> = all.iter().zip(&without).map(|(a, b)| a - b).collect();
    Ok((with, without))
}

/// max over 1 <= i <= n-1 of |Spl_i| / C(n, i).
pub fn max_relative_density(profile: &SplittingProfile) -> Result<BigRational> {
    (1..profile.n)
        .filter(|&i| !profile.counts[i].is_zero())
        .map(|i| ratio(&profile.counts[i], &binomial(profile.n as u64, i as u64)))
        .max()
        .ok_or_else(|| Error::Precondition("no splitting sets".into()))
}

fn ratio(a: &BigUint, b: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(a.clone()), BigInt::from(b.clone()))
}

#[derive(Clone, Debug)]
pub struct RhoMin {
    pub n: usize,
    pub d: u32,
    pub rho: BigRational,
    pub witness: DAdicDistribution,
    pub examined: usize,
}

fn canonical_support(n: usize, d: u32, limits: &Limits) -> Result<Vec<Vec<u32>>> {
    let mut all = Vec::new();
    let mut over = false;
    visit_canonical_support(n, d, &mut |t| {
        if (all.len() as u64) < limits.max_distributions {
            all.push(t.to_vec());
        } else {
            over = true;
        }
    })?;
    if over {
        return Err(Error::ResourceCap(format!("more than {} distributions", limits.max_distributions)));
    }
    Ok(all)
}

fn pick_min<T: Send>(items: Vec<(BigRational, Vec<i64>, T)>) -> Option<(BigRational, Vec<i64>, T)> {
    items.into_iter().min_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)))
}

/// Minimum of rho(Spl(mu)) over non-constant full-support dyadic
/// distributions on n elements, with the lexicographically smallest
/// canonical witness.
pub fn rho_min(n: usize, limits: &Limits) -> Result<RhoMin> {
    if n < 3 {
        return domain(format!("no non-constant full-support dyadic distribution on {n} elements"));
    }
    let tuples = canonical_support(n, 2, limits)?;
    let examined = tuples.len();
    let scored = tuples
        .into_par_iter()
        .filter(|t| t.iter().any(|&e| e != t[0]))
        .map(|t| {
            let mu = DAdicDistribution::dyadic(&t)?;
            let rho = max_relative_density(&splitting_counts(&mu)?)?;
            Ok((rho, mu.sort_key(), mu))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rho, _, witness) = pick_min(scored).ok_or_else(|| Error::Domain("empty domain".into()))?;
    Ok(RhoMin { n, d: 2, rho, witness, examined })
}

#[derive(Clone, Debug)]
pub struct RhoStar {
    pub n: usize,
    pub k: u32,
    pub rho_star: BigRational,
    pub witness: AmountSequence,
}

/// The amount-sequence proxy: min over k-feasible (c, b) of the max over
/// sizes of sum_{alpha in S_d} prod_i C(c_i n, alpha_i c_i n) / C(n, d),
/// where S_d leaves at least one element of the last class out.
pub fn rho_star_min(n: usize, limits: &Limits) -> Result<RhoStar> {
    if n < 3 {
        return domain(format!("no non-constant full-support dyadic distribution on {n} elements"));
    }
    let k = usize::BITS - 1 - n.leading_zeros();
    let beta = BigRational::new(BigInt::from(n), BigInt::one() << k);
    let mut candidates = Vec::new();
    for m in 2..=n {
        for t in canonical_support(m, 2, limits)? {
            if m == n && t.iter().all(|&e| e == t[0]) {
                continue;
            }
            candidates.push(t);
        }
    }
    let scored = candidates
        .into_par_iter()
        .map(|t| {
            let e1 = t[0];
            let last = *t.last().unwrap();
            let counts: Vec<usize> = (e1..=last).map(|e| t.iter().filter(|&&x| x == e).count()).collect();
            let classes: Vec<Class> = counts
                .iter()
                .enumerate()
                .map(|(i, &count)| Class { units: 1u128 << (last - e1 - i as u32), count, weight: 1 })
                .collect();
            let tops = counts.clone();
            let mut caps = counts.clone();
            *caps.last_mut().unwrap() -= 1;
            let total: u128 = classes.iter().map(|c| c.units * c.count as u128).sum();
            let by_size = subset_counts(&classes, &caps, &tops, total / 2, n);
            let value = (1..n)
                .filter(|&s| !by_size[s].is_zero())
                .map(|s| ratio(&by_size[s], &binomial(n as u64, s as u64)))
                .max()
                .ok_or_else(|| Error::Internal(format!("every S_d is empty for {t:?}")))?;
            let nn = BigInt::from(n);
            let c = counts.iter().map(|&x| BigRational::new(BigInt::from(x), nn.clone())).collect();
            let seq = AmountSequence::new(k - e1, beta.clone(), c)?;
            let key = t.iter().map(|&e| e as i64).collect::<Vec<_>>();
            Ok((value, key, seq))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rho_star, _, witness) = pick_min(scored).ok_or_else(|| Error::Domain("empty domain".into()))?;
    Ok(RhoStar { n, k, rho_star, witness })
}

/// |Div(mu)_kbar| for every type kbar with a nonzero count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DividingProfile {
    pub n: usize,
    pub d: u32,
    pub types: BTreeMap<Vec<usize>, BigUint>,
}

impl DividingProfile {
    pub fn rho(&self) -> Result<BigRational> {
        self.types
            .iter()
            .map(|(k, c)| {
                let parts: Vec<u64> = k.iter().map(|&x| x as u64).collect();
                Ok(ratio(c, &multinomial(self.n as u64, &parts)?))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .ok_or_else(|| Error::Precondition("no dividing partitions".into()))
    }

    pub fn total(&self) -> BigUint {
        self.types.values().sum()
    }
}

/// Ordered partitions (S_1, ..., S_d) with every part of mass exactly 1/d,
/// counted by type. The generalized tail is counted as one element.
pub fn dividing_counts(mu: &DAdicDistribution) -> Result<DividingProfile> {
    let d = mu.base() as usize;
    let n = mu.n();
    let (units, total) = mu.units()?;
    let target = total / d as u128;
    let mut grouped: BTreeMap<(u128, usize), usize> = BTreeMap::new();
    let tail_members = if mu.is_dirac() { vec![] } else { generalized_tail(mu)?.members };
    if tail_members.len() > 1 {
        let tail_units: u128 = tail_members.iter().map(|&i| units[i]).sum();
        *grouped.entry((tail_units, tail_members.len())).or_default() += 1;
    }
    for (i, &u) in units.iter().enumerate() {
        if tail_members.len() > 1 && tail_members.contains(&i) {
            continue;
        }
        *grouped.entry((u, 1)).or_default() += 1;
    }
    let mut states: HashMap<(Vec<u128>, Vec<usize>), BigUint> = HashMap::new();
    states.insert((vec![0; d], vec![0; d]), BigUint::one());
    for (&(u, weight), &count) in grouped.iter().rev() {
        let splits = compositions(count, d);
        let mut next: HashMap<(Vec<u128>, Vec<usize>), BigUint> = HashMap::new();
        for ((masses, sizes), cnt) in &states {
            'split: for parts in &splits {
                let mut m = masses.clone();
                let mut s = sizes.clone();
                for j in 0..d {
                    m[j] += u * parts[j] as u128;
                    if m[j] > target {
                        continue 'split;
                    }
                    s[j] += parts[j] * weight;
                }
                let p: Vec<u64> = parts.iter().map(|&x| x as u64).collect();
                *next.entry((m, s)).or_default() += cnt * multinomial(count as u64, &p)?;
            }
        }
        states = next;
    }
    let mut types = BTreeMap::new();
    for ((masses, sizes), cnt) in states {
        if masses.iter().all(|&m| m == target) {
            *types.entry(sizes).or_insert_with(BigUint::zero) += cnt;
        }
    }
    Ok(DividingProfile { n, d: d as u32, types })
}

/// All ways to write m as an ordered sum of d nonnegative parts.
pub(crate) fn compositions(m: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; d];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, out);
        }
    }
    rec(0, m, &mut cur, &mut out);
    out
}

/// Minimum of rho(Div(mu)) over d-adic distributions on n elements with a
/// nonempty Div, zeros allowed.
pub fn rho_min_d(n: usize, d: u32, limits: &Limits) -> Result<RhoMin> {
    if d < 2 {
        return domain("arity must be at least 2");
    }
    let mut tuples = Vec::new();
    for m in 2..=n {
        for t in canonical_support(m, d, limits)? {
            tuples.push(t);
        }
    }
    let examined = tuples.len();
    let scored = tuples
        .into_par_iter()
        .filter_map(|t| {
            let mut exps: Vec<Option<u32>> = t.iter().map(|&e| Some(e)).collect();
            exps.resize(n, None);
            let mu = match DAdicDistribution::new(d, exps) {
                Ok(mu) => mu,
                Err(e) => return Some(Err(e)),
            };
            let rho = if d == 2 {
                splitting_counts(&mu).and_then(|p| max_relative_density(&p))
            } else {
                dividing_counts(&mu).and_then(|p| p.rho())
            };
            match rho {
                Ok(r) => Some(Ok((r, mu.sort_key(), mu))),
                Err(Error::Precondition(_)) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let (rho, _, witness) =
        pick_min(scored).ok_or_else(|| Error::Domain(format!("no {d}-adic distribution on {n} elements is divisible")))?;
    Ok(RhoMin { n, d, rho, witness, examined })
}

/// One step of the block partition: D is a run of equal probabilities p and
/// E a suffix of mass r p, with |D| = d c - r.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub d_set: Vec<usize>,
    pub e_set: Vec<usize>,
    pub exponent: u32,
    pub c: usize,
    pub r: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockPartition {
    pub d: u32,
    pub n: usize,
    pub blocks: Vec<Block>,
    pub gamma: usize,
}

/// Splits a canonical full-support d-adic distribution into pairs (D_i, E_i)
/// as above, leaving one element of the first run aside when the run length
/// is a multiple of d so that E_1 absorbs the light elements.
pub fn block_partition(mu: &DAdicDistribution) -> Result<BlockPartition> {
    if !mu.is_canonical() {
        return precondition("distribution must be sorted nonincreasing");
    }
    if !mu.is_full_support() {
        return precondition("block partition needs full support");
    }
    if mu.is_dirac() {
        return precondition("constant distribution");
    }
    let d = mu.base() as usize;
    let exps: Vec<u32> = mu.exps().iter().map(|e| e.unwrap()).collect();
    let mut lo = 0usize;
    let mut hi = exps.len();
    let mut blocks = Vec::new();
    while lo < hi {
        let p = exps[lo];
        let mut run = lo;
        while run < hi && exps[run] == p {
            run += 1;
        }
        let mut len = run - lo;
        if blocks.is_empty() && len % d == 0 && run < hi {
            len -= 1;
        }
        let c = len.div_ceil(d);
        let r = d * c - len;
        let d_end = lo + len;
        let mut e_start = hi;
        if r > 0 {
            let ends = prefix_split(&exps[d_end..hi], d as u32, p)?;
            if ends.len() < r {
                return Err(Error::Internal("not enough mass left for E".into()));
            }
            e_start = d_end + if ends.len() == r { 0 } else { ends[ends.len() - r - 1] };
        }
        blocks.push(Block {
            d_set: (lo..d_end).collect(),
            e_set: (e_start..hi).collect(),
            exponent: p,
            c,
            r,
        });
        lo = d_end;
        hi = e_start;
    }
    let gamma = blocks.len();
    Ok(BlockPartition { d: d as u32, n: exps.len(), blocks, gamma })
}

/// Checks the block invariants; returns a description of the first failure.
pub fn check_block_partition(mu: &DAdicDistribution, bp: &BlockPartition) -> std::result::Result<(), String> {
    let n = mu.n();
    let d = mu.base() as usize;
    let mut seen = vec![false; n];
    for (i, blk) in bp.blocks.iter().enumerate() {
        for &x in blk.d_set.iter().chain(&blk.e_set) {
            if seen[x] {
                return Err(format!("element {x} covered twice"));
            }
            seen[x] = true;
        }
        if blk.d_set.len() + blk.r != d * blk.c || blk.r >= d {
            return Err(format!("block {i}: |D| = {} is not d c - r", blk.d_set.len()));
        }
        if blk.d_set.iter().any(|&x| mu.exps()[x] != Some(blk.exponent)) {
            return Err(format!("block {i}: D is not a run of equal probabilities"));
        }
        let p = crate::numerics::inv_pow(mu.base(), blk.exponent);
        let e_mass = blk.e_set.iter().fold(BigRational::zero(), |s, &x| s + mu.prob(x));
        if e_mass != &p * BigRational::from_integer(BigInt::from(blk.r)) {
            return Err(format!("block {i}: mu(E) != r p"));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err("blocks do not cover the ground set".into());
    }
    let bound = 2.0 * (n as f64).ln() / (d as f64).ln() + 4.0;
    if bp.gamma as f64 > bound {
        return Err(format!("gamma = {} exceeds {bound}", bp.gamma));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dy(e: &[u32]) -> DAdicDistribution {
        DAdicDistribution::dyadic(e).unwrap()
    }

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn profile_of_three() {
        let p = splitting_counts(&dy(&[1, 2, 2])).unwrap();
        assert_eq!(p.counts, vec![0u32, 1, 1, 0].into_iter().map(BigUint::from).collect::<Vec<_>>());
        assert_eq!(max_relative_density(&p).unwrap(), r(1, 3));
    }

    #[test]
    fn profile_of_five() {
        let p = splitting_counts(&dy(&[1, 2, 3, 4, 4])).unwrap();
        assert_eq!(max_relative_density(&p).unwrap(), r(1, 5));
        let e = p.entries();
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].size, e[0].count.as_str(), e[0].denom.as_str()), (1, "1", "5"));
        assert_eq!((e[1].size, e[1].count.as_str()), (4, "1"));
    }

    #[test]
    fn dirac_has_no_splits() {
        let p = splitting_counts(&DAdicDistribution::new(2, vec![Some(0), None]).unwrap()).unwrap();
        assert!(max_relative_density(&p).is_err());
    }

    #[test]
    fn rho_min_small() {
        let lim = Limits::default();
        let r3 = rho_min(3, &lim).unwrap();
        assert_eq!(r3.rho, r(1, 3));
        assert_eq!(r3.witness.sort_key(), vec![1, 2, 2]);
        assert!(rho_min(2, &lim).is_err());
        assert_eq!(rho_min(5, &lim).unwrap().rho, r(1, 5));
    }

    #[test]
    fn rho_star_three() {
        let lim = Limits::default();
        assert_eq!(rho_star_min(3, &lim).unwrap().rho_star, r(1, 3));
    }

    #[test]
    fn dividing_ternary() {
        let mu = DAdicDistribution::new(3, vec![Some(1), Some(1), Some(2), Some(2), Some(2)]).unwrap();
        let p = dividing_counts(&mu).unwrap();
        assert_eq!(p.total(), BigUint::from(6u32));
        assert_eq!(p.types.get(&vec![1, 1, 3]), Some(&BigUint::from(2u32)));
        assert_eq!(p.rho().unwrap(), r(1, 10));
    }

    #[test]
    fn rho_min_d_small() {
        let lim = Limits::default();
        assert_eq!(rho_min_d(3, 3, &lim).unwrap().rho, r(1, 1));
        assert_eq!(rho_min_d(3, 2, &lim).unwrap().rho, r(1, 3));
        assert_eq!(rho_min_d(4, 3, &lim).unwrap().rho, r(1, 2));
    }

    #[test]
    fn blocks() {
        let bp = block_partition(&dy(&[1, 2, 3, 4, 4])).unwrap();
        assert_eq!(bp.gamma, 1);
        assert_eq!(bp.blocks[0].d_set, vec![0]);
        assert_eq!(bp.blocks[0].e_set, vec![1, 2, 3, 4]);
        let bp = block_partition(&dy(&[2, 2, 2, 2])).unwrap();
        assert_eq!(bp.gamma, 1);
        assert_eq!(bp.blocks[0].d_set.len(), 4);
        let mu = DAdicDistribution::new(3, vec![Some(1), Some(1), Some(2), Some(2), Some(2)]).unwrap();
        let bp = block_partition(&mu).unwrap();
        assert_eq!(bp.blocks[0].e_set, vec![2, 3, 4]);
        assert!(check_block_partition(&mu, &bp).is_ok());
    }
}
