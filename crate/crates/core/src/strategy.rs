//! Decision trees, Huffman codes, restricted optimal costs and the
//! optimality verifier for question sets.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::ops::Add;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::distributions::{for_each_dadic, DAdicDistribution, EnumOptions};
use crate::error::{domain, precondition, Error, Result};
use crate::Limits;

/// An ordered partition of the ground set into d parts, stored as bitmasks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Question {
    parts: Vec<u64>,
}

impl Question {
    pub fn new(n: usize, parts: Vec<u64>) -> Result<Self> {
        if n == 0 || n > 64 {
            return domain(format!("question ground sets hold 1..=64 elements, got {n}"));
        }
        let full = full_mask(n);
        let mut seen = 0u64;
        for &p in &parts {
            if p & seen != 0 {
                return domain("question parts overlap");
            }
            if p == full {
                return domain("a question part equals the whole ground set");
            }
            seen |= p;
        }
        if seen != full {
            return domain("question parts do not cover the ground set");
        }
        Ok(Question { parts })
    }

    /// A binary question given by the subset asked about.
    pub fn subset(n: usize, mask: u64) -> Result<Self> {
        Self::new(n, vec![mask, full_mask(n) & !mask])
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    /// Same question with parts listed by their smallest element; for two
    /// parts, the one holding element 0 comes first.
    pub fn canonical(&self) -> Question {
        let mut parts = self.parts.clone();
        parts.sort_by_key(|&p| if p == 0 { u32::MAX } else { p.trailing_zeros() });
        Question { parts }
    }

    /// Every part has mass exactly total / d.
    pub fn divides(&self, units: &[u128], total: u128) -> bool {
        let d = self.parts.len() as u128;
        if total % d != 0 {
            return false;
        }
        let goal = total / d;
        self.parts.iter().all(|&p| mask_mass(p, units) == goal)
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub(crate) fn mask_mass(mut mask: u64, units: &[u128]) -> u128 {
    let mut s = 0;
    while mask != 0 {
        s += units[mask.trailing_zeros() as usize];
        mask &= mask - 1;
    }
    s
}

fn mask_elements(mut mask: u64) -> Vec<usize> {
    let mut v = Vec::new();
    while mask != 0 {
        v.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    v
}

fn elements_mask(elems: &[usize], n: usize) -> Result<u64> {
    let mut m = 0u64;
    for &x in elems {
        if x >= n {
            return domain(format!("element {x} outside a ground set of size {n}"));
        }
        m |= 1 << x;
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuestionSet {
    pub n: usize,
    pub d: u32,
    pub questions: Vec<Question>,
}

/// On-disk form. Binary questions are subsets; d-ary ones are lists of parts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuestionSetFile {
    pub n: usize,
    pub d: u32,
    pub questions: Value,
}

impl QuestionSet {
    pub fn new(n: usize, d: u32, questions: Vec<Question>) -> Result<Self> {
        if d < 2 {
            return domain("arity must be at least 2");
        }
        for q in &questions {
            if q.parts.len() != d as usize {
                return domain(format!("question has {} parts, expected {d}", q.parts.len()));
            }
            if q.parts.iter().fold(0, |a, p| a | p) != full_mask(n) {
                return domain("question does not partition the ground set");
            }
        }
        Ok(QuestionSet { n, d, questions })
    }

    /// All d-ary questions on n elements (binary ones as all subsets other
    /// than the empty set and the whole set).
    pub fn full(n: usize, d: u32) -> Result<Self> {
        if d == 2 {
            let qs = (1..full_mask(n))
                .map(|m| Question::subset(n, m))
                .collect::<Result<Vec<_>>>()?;
            return Self::new(n, 2, qs);
        }
        let total = (d as u64).checked_pow(n as u32).filter(|&t| t <= 1 << 24);
        let Some(total) = total else {
            return Err(Error::ResourceCap(format!("{d}^{n} questions")));
        };
        let mut qs = Vec::new();
        for code in 0..total {
            let mut parts = vec![0u64; d as usize];
            let mut c = code;
            for x in 0..n {
                parts[(c % d as u64) as usize] |= 1 << x;
                c /= d as u64;
            }
            if parts.iter().all(|&p| p != full_mask(n)) {
                qs.push(Question { parts });
            }
        }
        Self::new(n, d, qs)
    }

    pub fn from_file(file: &QuestionSetFile) -> Result<Self> {
        let n = file.n;
        let bad = || Error::Domain("malformed questions array".into());
        let arr = file.questions.as_array().ok_or_else(bad)?;
        let elems = |v: &Value| -> Result<Vec<usize>> {
            v.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(bad))
                .collect()
        };
        let mut qs = Vec::with_capacity(arr.len());
        for q in arr {
            if file.d == 2 {
                qs.push(Question::subset(n, elements_mask(&elems(q)?, n)?)?);
            } else {
                let parts = q
                    .as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(|p| elements_mask(&elems(p)?, n))
                    .collect::<Result<Vec<_>>>()?;
                qs.push(Question::new(n, parts)?);
            }
        }
        Self::new(n, file.d, qs)
    }

    pub fn to_file(&self) -> QuestionSetFile {
        let questions = self
            .questions
            .iter()
            .map(|q| {
                if self.d == 2 {
                    serde_json::json!(mask_elements(q.parts[0]))
                } else {
                    Value::Array(q.parts.iter().map(|&p| serde_json::json!(mask_elements(p))).collect())
                }
            })
            .collect();
        QuestionSetFile { n: self.n, d: self.d, questions: Value::Array(questions) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionTree {
    /// `None` marks a padding leaf that no element reaches.
    Leaf { element: Option<usize> },
    Node { parts: Vec<Vec<usize>>, children: Vec<DecisionTree> },
}

impl DecisionTree {
    /// Depth of every element that owns a leaf.
    pub fn depths(&self, n: usize) -> Vec<Option<u32>> {
        let mut out = vec![None; n];
        fn walk(t: &DecisionTree, depth: u32, out: &mut Vec<Option<u32>>) {
            match t {
                DecisionTree::Leaf { element: Some(x) } => out[*x] = Some(depth),
                DecisionTree::Leaf { element: None } => {}
                DecisionTree::Node { children, .. } => children.iter().for_each(|c| walk(c, depth + 1, out)),
            }
        }
        walk(self, 0, &mut out);
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    pub cost: f64,
    pub code_lengths: Vec<u32>,
    /// Leaf depths of the padded tree; real elements first.
    pub leaf_depths: Vec<u32>,
    pub padding: usize,
    pub tree: DecisionTree,
}

impl CostReport {
    /// tau_i = d^{-depth_i} over real and padding leaves; sums to one.
    pub fn induced(&self, d: u32) -> Result<DAdicDistribution> {
        DAdicDistribution::new(d, self.leaf_depths.iter().map(|&e| Some(e)).collect())
    }
}

#[derive(PartialEq)]
struct HeapItem {
    prob: f64,
    tie: usize,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (prob, tie)
        other.prob.total_cmp(&self.prob).then_with(|| other.tie.cmp(&self.tie))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// d-ary Huffman code. Zero-probability padding brings the number of leaves
/// to 1 mod (d-1); ties between equal masses go to the smallest original
/// index.
pub fn huffman(pi: &[f64], d: u32) -> Result<CostReport> {
    if d < 2 {
        return domain("arity must be at least 2");
    }
    if pi.is_empty() {
        return domain("empty distribution");
    }
    if pi.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return precondition("probabilities must be finite and nonnegative");
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return precondition(format!("probabilities sum to {total}, not 1"));
    }
    let n = pi.len();
    let d = d as usize;
    let padding = if n == 1 { 0 } else { (d - 1 - (n - 1) % (d - 1)) % (d - 1) };
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n + padding];
    let mut heap = BinaryHeap::new();
    for i in 0..n + padding {
        heap.push(HeapItem { prob: if i < n { pi[i] } else { 0.0 }, tie: i, node: i });
    }
    while heap.len() > 1 {
        let mut prob = 0.0;
        let mut tie = usize::MAX;
        let mut kids = Vec::with_capacity(d);
        for _ in 0..d {
            let it = heap.pop().expect("heap size is 1 mod (d-1)");
            prob += it.prob;
            tie = tie.min(it.tie);
            kids.push(it.node);
        }
        children.push(kids);
        heap.push(HeapItem { prob, tie, node: children.len() - 1 });
    }
    let root = heap.pop().unwrap().node;
    let mut leaf_depths = vec![0u32; n + padding];
    let tree = build_huffman_tree(root, 0, n, n + padding, &children, &mut leaf_depths);
    let code_lengths = leaf_depths[..n].to_vec();
    let cost = pi.iter().zip(&code_lengths).map(|(p, &l)| p * l as f64).sum();
    Ok(CostReport { cost, code_lengths, leaf_depths, padding, tree })
}

fn leaves_below(node: usize, leaves: usize, children: &[Vec<usize>], out: &mut Vec<usize>) {
    if node < leaves {
        out.push(node);
    } else {
        children[node].iter().for_each(|&c| leaves_below(c, leaves, children, out));
    }
}

fn build_huffman_tree(
    node: usize,
    depth: u32,
    n: usize,
    leaves: usize,
    children: &[Vec<usize>],
    depths: &mut [u32],
) -> DecisionTree {
    if node < leaves {
        depths[node] = depth;
        return DecisionTree::Leaf { element: (node < n).then_some(node) };
    }
    let mut parts: Vec<Vec<usize>> = children[node]
        .iter()
        .map(|&c| {
            let mut v = Vec::new();
            leaves_below(c, leaves, children, &mut v);
            v.retain(|&x| x < n);
            v.sort_unstable();
            v
        })
        .collect();
    let inside: Vec<usize> = parts.iter().flatten().copied().collect();
    let last = parts.len() - 1;
    parts[last].extend((0..n).filter(|x| !inside.contains(x)));
    parts[last].sort_unstable();
    let kids = children[node]
        .iter()
        .map(|&c| build_huffman_tree(c, depth + 1, n, leaves, children, depths))
        .collect();
    DecisionTree::Node { parts, children: kids }
}

/// Optimal expected number of d-ary questions over all decision trees.
pub fn opt_cost(pi: &[f64], d: u32) -> Result<f64> {
    Ok(huffman(pi, d)?.cost)
}

#[derive(Clone, Debug)]
pub struct RestrictedCost<W> {
    pub cost: W,
    pub tree: DecisionTree,
}

/// Weights the restricted cost can be computed with.
pub trait Weight: Clone + Zero + PartialOrd + Add<Output = Self> + Send + Sync {}
impl<T: Clone + Zero + PartialOrd + Add<Output = T> + Send + Sync> Weight for T {}

/// Cheapest decision tree that only asks questions from `qs`.
///
/// The memo is keyed by the set of supported elements still possible; a
/// question that leaves that set in one part is skipped.
pub fn restricted_opt_cost<W: Weight>(pi: &[W], qs: &QuestionSet, limits: &Limits) -> Result<RestrictedCost<W>> {
    let n = qs.n;
    if pi.len() != n {
        return domain(format!("distribution has {} elements, questions expect {n}", pi.len()));
    }
    if n > limits.max_subset_n {
        return Err(Error::ResourceCap(format!("n = {n} exceeds the subset cap {}", limits.max_subset_n)));
    }
    let support = (0..n).filter(|&i| pi[i] > W::zero()).fold(0u64, |m, i| m | (1 << i));
    if support == 0 {
        return precondition("distribution has no support");
    }
    let mut memo: HashMap<u64, (W, Option<usize>)> = HashMap::new();
    let cost = solve(support, pi, qs, &mut memo)?;
    let tree = rebuild(support, qs, &memo);
    Ok(RestrictedCost { cost, tree })
}

fn solve<W: Weight>(s: u64, pi: &[W], qs: &QuestionSet, memo: &mut HashMap<u64, (W, Option<usize>)>) -> Result<W> {
    if s.count_ones() <= 1 {
        return Ok(W::zero());
    }
    if let Some((c, _)) = memo.get(&s) {
        return Ok(c.clone());
    }
    let mass = mask_elements(s).into_iter().fold(W::zero(), |a, i| a + pi[i].clone());
    let mut best: Option<(W, usize)> = None;
    for (qi, q) in qs.questions.iter().enumerate() {
        if q.parts.iter().any(|&p| p & s == s) {
            continue;
        }
        let mut c = mass.clone();
        for &p in &q.parts {
            c = c + solve(p & s, pi, qs, memo)?;
        }
        if best.as_ref().map_or(true, |(b, _)| c < *b) {
            best = Some((c, qi));
        }
    }
    match best {
        Some((c, qi)) => {
            memo.insert(s, (c.clone(), Some(qi)));
            Ok(c)
        }
        None => {
            let e = mask_elements(s);
            Err(Error::Inseparable(e[0], e[1]))
        }
    }
}

fn rebuild<W: Clone>(s: u64, qs: &QuestionSet, memo: &HashMap<u64, (W, Option<usize>)>) -> DecisionTree {
    if s.count_ones() <= 1 {
        return DecisionTree::Leaf { element: (s != 0).then(|| s.trailing_zeros() as usize) };
    }
    let qi = memo[&s].1.expect("solved node");
    let q = &qs.questions[qi];
    DecisionTree::Node {
        parts: q.parts.iter().map(|&p| mask_elements(p)).collect(),
        children: q.parts.iter().map(|&p| rebuild(p & s, qs, memo)).collect(),
    }
}

/// Restricted cost of a d-adic distribution in exact arithmetic.
pub fn restricted_opt_cost_exact(mu: &DAdicDistribution, qs: &QuestionSet, limits: &Limits) -> Result<BigRational> {
    Ok(restricted_opt_cost(&mu.probs(), qs, limits)?.cost)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMethod {
    /// Some question divides every non-Dirac d-adic distribution.
    Hitting,
    /// The restricted cost equals the entropy for every d-adic distribution.
    Cost,
    /// Both, failing loudly if they disagree.
    Both,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub optimal: bool,
    pub counterexample: Option<DAdicDistribution>,
    pub checked: usize,
}

fn labeled_divisible(n: usize, d: u32, limits: &Limits) -> Result<Vec<DAdicDistribution>> {
    let opts = EnumOptions { full_support: false, non_constant: false, canonical: false };
    crate::distributions::count_dadic(n, d, opts, limits)?;
    let mut all = Vec::new();
    for_each_dadic(n, d, opts, &mut |mu| {
        if !mu.is_dirac() {
            all.push(mu.clone());
        }
        true
    })?;
    Ok(all)
}

/// Labeled non-Dirac d-adic distributions on n elements, in enumeration order.
pub fn divisible_distributions(n: usize, d: u32, limits: &Limits) -> Result<Vec<DAdicDistribution>> {
    labeled_divisible(n, d, limits)
}

/// Whether `qs` is optimal for every distribution on its ground set.
/// A counterexample is the lexicographically first (by exponent list, -1
/// for zero) d-adic distribution that no question divides.
pub fn is_optimal_question_set(qs: &QuestionSet, method: VerifyMethod, limits: &Limits) -> Result<Verdict> {
    let n = qs.n;
    if n > limits.max_verify_n {
        return Err(Error::ResourceCap(format!("n = {n} exceeds the verifier cap {}", limits.max_verify_n)));
    }
    let all = labeled_divisible(n, qs.d, limits)?;
    let checked = all.len();
    let hit = |mu: &DAdicDistribution| -> Result<bool> {
        let (units, total) = mu.units()?;
        Ok(qs.questions.iter().any(|q| q.divides(&units, total)))
    };
    let by_hitting = || -> Result<Verdict> {
        let misses = all
            .par_iter()
            .map(|mu| Ok((!hit(mu)?).then(|| mu.clone())))
            .collect::<Result<Vec<_>>>()?;
        let counterexample = misses.into_iter().flatten().min_by_key(|m| m.sort_key());
        Ok(Verdict { optimal: counterexample.is_none(), counterexample, checked })
    };
    let by_cost = || -> Result<bool> {
        let bad = all
            .par_iter()
            .map(|mu| match restricted_opt_cost_exact(mu, qs, limits) {
                Ok(c) => Ok(c != mu.entropy_exact()),
                Err(Error::Inseparable(..)) => Ok(true),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(!bad.into_iter().any(|b| b))
    };
    match method {
        VerifyMethod::Hitting => by_hitting(),
        VerifyMethod::Cost => {
            let optimal = by_cost()?;
            let counterexample = if optimal { None } else { by_hitting()?.counterexample };
            Ok(Verdict { optimal, counterexample, checked })
        }
        VerifyMethod::Both => {
            let v = by_hitting()?;
            if by_cost()? != v.optimal {
                return Err(Error::Internal("hitting and cost verdicts disagree".into()));
            }
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singletons(n: usize) -> QuestionSet {
        QuestionSet::new(n, 2, (0..n).map(|i| Question::subset(n, 1 << i).unwrap()).collect()).unwrap()
    }

    #[test]
    fn huffman_dyadic() {
        let r = huffman(&[0.5, 0.25, 0.25], 2).unwrap();
        assert_eq!(r.code_lengths, vec![1, 2, 2]);
        assert!((r.cost - 1.5).abs() < 1e-15);
        let r = huffman(&[0.4, 0.3, 0.2, 0.1], 2).unwrap();
        assert!((r.cost - 1.9).abs() < 1e-12);
    }

    #[test]
    fn huffman_ternary_padding() {
        let r = huffman(&[0.25; 4], 3).unwrap();
        assert_eq!(r.padding, 1);
        assert!((r.cost - 1.5).abs() < 1e-12);
        let tau = r.induced(3).unwrap();
        assert_eq!(tau.n(), 5);
        let r = huffman(&[1.0], 3).unwrap();
        assert_eq!(r.cost, 0.0);
        assert!(huffman(&[0.5, 0.4], 2).is_err());
    }

    #[test]
    fn restricted_matches_huffman() {
        let lim = Limits::default();
        let pi: [f64; 4] = [0.4, 0.3, 0.2, 0.1];
        let full = QuestionSet::full(4, 2).unwrap();
        let rc = restricted_opt_cost(&pi, &full, &lim).unwrap();
        assert!((rc.cost - 1.9).abs() < 1e-12);
        let pi3: [f64; 4] = [0.25; 4];
        let full3 = QuestionSet::full(4, 3).unwrap();
        let rc = restricted_opt_cost(&pi3, &full3, &lim).unwrap();
        assert!((rc.cost - 1.5).abs() < 1e-12);
    }

    #[test]
    fn inseparable_pair() {
        let lim = Limits::default();
        let qs = QuestionSet::new(3, 2, vec![Question::subset(3, 0b001).unwrap()]).unwrap();
        let err = restricted_opt_cost(&[0.5, 0.25, 0.25], &qs, &lim).unwrap_err();
        assert!(matches!(err, Error::Inseparable(1, 2)));
    }

    #[test]
    fn verifier_examples() {
        let lim = Limits::default();
        let v = is_optimal_question_set(&singletons(3), VerifyMethod::Both, &lim).unwrap();
        assert!(v.optimal);
        let qs = QuestionSet::new(3, 2, vec![Question::subset(3, 1).unwrap(), Question::subset(3, 2).unwrap()]).unwrap();
        let v = is_optimal_question_set(&qs, VerifyMethod::Both, &lim).unwrap();
        assert!(!v.optimal);
        assert_eq!(v.counterexample.unwrap().sort_key(), vec![2, 2, 1]);
        let qs = QuestionSet::new(2, 2, vec![Question::subset(2, 1).unwrap()]).unwrap();
        assert!(is_optimal_question_set(&qs, VerifyMethod::Both, &lim).unwrap().optimal);
    }

    #[test]
    fn question_file_round_trip() {
        let qs = singletons(3);
        let f = qs.to_file();
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"n":3,"d":2,"questions":[[0],[1],[2]]}"#);
        assert_eq!(QuestionSet::from_file(&f).unwrap(), qs);
        let text = r#"{"n":5,"d":3,"questions":[[[0],[1],[2,3,4]]]}"#;
        let f: QuestionSetFile = serde_json::from_str(text).unwrap();
        let qs = QuestionSet::from_file(&f).unwrap();
        assert_eq!(serde_json::to_string(&qs.to_file()).unwrap(), text);
        let bad: QuestionSetFile = serde_json::from_str(r#"{"n":3,"d":2,"questions":[[0,1,2]]}"#).unwrap();
        assert!(QuestionSet::from_file(&bad).is_err());
    }
}
