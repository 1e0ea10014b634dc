//! The acceptance suite: one check per criterion, each returning whether it
//! passed and the values it observed.

use std::time::Instant;

use anyhow::{anyhow, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use qsplit::dary_bounds::{f_opt, magic_constant, verify_reduction};
use qsplit::distributions::{
    enumerate_dadic, for_each_dadic, from_amount_sequence, is_k_feasible, prefix_split, random_split, tail,
    AmountSequence, DAdicDistribution, EnumOptions,
};
use qsplit::gbeta::{
    alpha_is_k_feasible, alpha_residual, alpha_transfer, curves, empirical_g, g_lb_uniform, g_ub_single_block,
    inner_max, log2_five_quarters, payoff, perturbation_gain, round_alpha_feasible, round_c_feasible, scan_1236,
};
use qsplit::hitters::{exact_min_hitter, greedy_hitter, halving_baseline, randomized_hitter};
use qsplit::numerics::{entropy, f_d, rational_from_f64, rational_to_f64};
use qsplit::splitting::{block_partition, check_block_partition, max_relative_density, rho_min, rho_star_min, splitting_counts};
use qsplit::strategy::{huffman, is_optimal_question_set, opt_cost, restricted_opt_cost, Question, QuestionSet, VerifyMethod};
use qsplit::{Error, Limits};
use qsplit_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub profile: Profile,
    /// Multiplies every numeric tolerance; 0 turns the suite into a
    /// negative control.
    pub tol_scale: f64,
}

impl Settings {
    pub fn new(profile: Profile) -> Self {
        Settings { profile, tol_scale: 1.0 }
    }

    fn full(&self) -> bool {
        self.profile == Profile::Full
    }

    fn tol(&self, t: f64) -> f64 {
        t * self.tol_scale
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub observed: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.1}s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.observed,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub profile: Profile,
    pub tol_scale: f64,
    pub criteria: Vec<Outcome>,
    pub all_pass: bool,
}

pub const CRITERIA: [(u32, &str); 12] = [
    (1, "exact densities"),
    (2, "exact hitters"),
    (3, "bound constants"),
    (4, "bound curves"),
    (5, "d-ary constants"),
    (6, "strategy correctness"),
    (7, "verifier agreement"),
    (8, "rounding"),
    (9, "amount-sequence density"),
    (10, "structure"),
    (11, "perturbation certificate"),
    (12, "empirical convergence"),
];

type Check = fn(&Settings) -> Result<(bool, String)>;

fn check_fn(id: u32) -> Option<Check> {
    let f: Check = match id {
        1 => c1_densities,
        2 => c2_hitters,
        3 => c3_constants,
        4 => c4_curves,
        5 => c5_dary,
        6 => c6_strategies,
        7 => c7_verifier,
        8 => c8_rounding,
        9 => c9_rho_star,
        10 => c10_structure,
        11 => c11_perturbation,
        12 => c12_empirical,
        _ => return None,
    };
    Some(f)
}

pub fn run_criterion(id: u32, settings: &Settings) -> Result<Outcome> {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| *n)
        .ok_or_else(|| anyhow!("no criterion {id}"))?;
    let f = check_fn(id).expect("listed criterion");
    let start = Instant::now();
    let (pass, observed) = match f(settings) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(Outcome { id, name, pass, observed, seconds: start.elapsed().as_secs_f64() })
}

pub fn run_suite(settings: &Settings, only: &[u32]) -> Result<SuiteReport> {
    let ids: Vec<u32> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    let criteria = ids.iter().map(|&id| run_criterion(id, settings)).collect::<Result<Vec<_>>>()?;
    let all_pass = criteria.iter().all(|c| c.pass);
    Ok(SuiteReport { profile: settings.profile, tol_scale: settings.tol_scale, criteria, all_pass })
}

fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn canonical_full() -> EnumOptions {
    EnumOptions { full_support: true, non_constant: false, canonical: true }
}

fn c1_densities(s: &Settings) -> Result<(bool, String)> {
    let lim = Limits::default();
    let r3 = rho_min(3, &lim)?;
    let ok3 = r3.rho == rat(1, 3) && r3.witness.exps() == [Some(1), Some(2), Some(2)];
    let r5 = rho_min(5, &lim)?;
    let named = DAdicDistribution::dyadic(&[1, 2, 3, 4, 4])?;
    let named_rho = max_relative_density(&splitting_counts(&named)?)?;
    let ok5 = r5.rho <= rat(1, 5) && named_rho == r5.rho;
    let nmax = if s.full() { 10 } else { 8 };
    let mut checked = 0;
    let mut mismatches = 0;
    for n in 2..=nmax {
        for mu in enumerate_dadic(n, 2, canonical_full(), &lim)? {
            let fast: Vec<u64> = splitting_counts(&mu)?.counts.iter().map(|c| c.to_u64().unwrap_or(u64::MAX)).collect();
            if fast != oracle::splitting_counts(&oracle::probs(2, mu.exps())) {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    let pass = ok3 && ok5 && mismatches == 0;
    Ok((
        pass,
        format!(
            "rho_min(3) = {} witness {:?}; rho_min(5) = {} (named witness gives {}); {checked} distributions with n <= {nmax}, {mismatches} mismatches",
            r3.rho,
            r3.witness.sort_key(),
            r5.rho,
            named_rho
        ),
    ))
}

fn c2_hitters(_: &Settings) -> Result<(bool, String)> {
    let lim = Limits::default();
    let q2 = exact_min_hitter(2, 2, &lim)?.size;
    let q3 = exact_min_hitter(3, 2, &lim)?.size;
    let mut pass = q2 == 1 && q3 == 3;
    let mut parts = vec![format!("q(2) = {q2}, q(3) = {q3}")];
    for (n, d) in [(3, 2), (4, 2), (5, 2), (3, 3), (4, 3)] {
        let r = verify_reduction(n, d, &lim)?;
        pass &= r.holds;
        parts.push(format!("(n={n},d={d}): {:.3} <= {} <= {:.1}", r.lower, r.q, r.upper));
    }
    Ok((pass, parts.join("; ")))
}

fn c3_constants(s: &Settings) -> Result<(bool, String)> {
    let floor = -log2_five_quarters();
    let lb = g_lb_uniform();
    let x = lb.params["x"];
    let ok_lb = (lb.value - floor).abs() <= s.tol(1e-7) && (x - 0.4).abs() <= s.tol(1e-7);
    let b125 = g_ub_single_block(1.25, 1)?.value;
    let b17 = g_ub_single_block(1.7, 1)?.value;
    let b195 = g_ub_single_block(1.95, 0)?.value;
    let ok_single = (b125 - floor).abs() <= s.tol(1e-9)
        && (b17 + 0.3083).abs() <= s.tol(5e-4)
        && (b195 + 0.30846).abs() <= s.tol(5e-4);
    let scan = scan_1236(1e-3)?;
    let ok_scan = (scan.value + 0.305758).abs() <= s.tol(1e-5) && (scan.beta_at_max - 1.80941).abs() <= s.tol(0.01);
    Ok((
        ok_lb && ok_single && ok_scan,
        format!(
            "uniform {:.9} at x = {:.9}; single(1.25,1) = {:.10}, (1.7,1) = {:.5}, (1.95,0) = {:.5}; scan {:.7} at beta = {:.4} (base {:.5})",
            lb.value,
            x,
            b125,
            b17,
            b195,
            scan.value,
            scan.beta_at_max,
            (-scan.value).exp2()
        ),
    ))
}

fn c4_curves(_: &Settings) -> Result<(bool, String)> {
    let rows = curves(1.5, 1.999, 0.005)?;
    let window: Vec<_> = rows.iter().filter(|r| r.beta >= 1.78 - 1e-9 && r.beta <= 1.84 + 1e-9).collect();
    let below = window.iter().all(|r| r.two_block < r.single_b0 && r.two_block < r.single_b1);
    let singles: Vec<f64> = rows.iter().map(|r| r.single_b0.min(r.single_b1)).collect();
    let min_of_min = singles.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_of_min = singles.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((
        below && !window.is_empty() && min_of_min <= -0.3040,
        format!(
            "{} grid points, two-block below both singles on all {} points of [1.78, 1.84]: {below}; min over grid of the single-block minimum {:.5}, max {:.5}",
            rows.len(),
            window.len(),
            min_of_min,
            max_of_min
        ),
    ))
}

fn c5_dary(s: &Settings) -> Result<(bool, String)> {
    let m2 = magic_constant(2)?;
    let mut worst_exp = 0.0f64;
    for d in 2..=64 {
        worst_exp = worst_exp.max(((-f_opt(d)?).exp2() - magic_constant(d)?).abs());
    }
    let f2 = f_d(2, 0.2)?;
    let mut envelope = (f64::INFINITY, f64::NEG_INFINITY);
    for d in 4..=64u32 {
        let ratio = (2.0 - magic_constant(d)?) / ((d as f64).log2() / d as f64);
        envelope = (envelope.0.min(ratio), envelope.1.max(ratio));
    }
    let pass = m2 == 1.25
        && worst_exp <= s.tol(1e-12)
        && (f2 + log2_five_quarters()).abs() <= s.tol(1e-9)
        && envelope.0 >= 0.3
        && envelope.1 <= 3.0;
    Ok((
        pass,
        format!(
            "magic(2) = {m2}; max |2^-f_opt - magic| = {worst_exp:.2e}; f_2(0.2) = {f2:.10}; (2 - magic) d / log2 d in [{:.4}, {:.4}]",
            envelope.0, envelope.1
        ),
    ))
}

fn corpus(count: usize) -> Vec<(Vec<f64>, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(1..=7usize);
            let d = if i % 2 == 0 { 2 } else { 3 };
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = w.iter().sum();
            (w.iter().map(|x| x / total).collect(), d)
        })
        .collect()
}

fn c6_strategies(s: &Settings) -> Result<(bool, String)> {
    let lim = Limits::default();
    let cases = corpus(100);
    let mut worst_kraft = 0.0f64;
    let mut worst_restricted = 0.0f64;
    for (p, d) in &cases {
        let h = huffman(p, *d)?.cost;
        worst_kraft = worst_kraft.max((h - oracle::min_code_cost(p, *d)).abs());
        let full = QuestionSet::full(p.len(), *d)?;
        let r = restricted_opt_cost(p, &full, &lim)?.cost;
        worst_restricted = worst_restricted.max((r - opt_cost(p, *d)?).abs());
    }
    let nmax = if s.full() { 8 } else { 5 };
    let mut worst_entropy = 0.0f64;
    let mut count = 0;
    for d in [2u32, 3] {
        for n in 1..=nmax {
            for_each_dadic(n, d, canonical_full(), &mut |mu| {
                let p = mu.probs_f64();
                if let (Ok(c), Ok(e)) = (opt_cost(&p, d), entropy(&p, d)) {
                    worst_entropy = worst_entropy.max((c - e).abs());
                } else {
                    worst_entropy = f64::INFINITY;
                }
                count += 1;
                true
            })?;
        }
    }
    let tol = s.tol(1e-12);
    Ok((
        worst_kraft <= tol && worst_restricted <= tol && worst_entropy <= tol,
        format!(
            "100 cases: max |huffman - kraft search| = {worst_kraft:.1e}, max |restricted(full) - opt| = {worst_restricted:.1e}; {count} d-adic distributions (n <= {nmax}): max |opt - entropy| = {worst_entropy:.1e}"
        ),
    ))
}

fn random_question(rng: &mut ChaCha8Rng, n: usize, d: u32) -> Result<Question> {
    loop {
        let mut parts = vec![0u64; d as usize];
        for x in 0..n {
            parts[rng.gen_range(0..d as usize)] |= 1 << x;
        }
        if parts.iter().all(|&p| p != 0) {
            return Ok(Question::new(n, parts)?);
        }
    }
}

fn c7_verifier(s: &Settings) -> Result<(bool, String)> {
    let lim = Limits::default();
    let pairs = if s.full() { 100 } else { 30 };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agree = 0;
    let mut total = 0;
    let mut optimal_count = 0;
    for i in 0..pairs {
        let d: u32 = if i % 3 == 2 { 3 } else { 2 };
        let n = rng.gen_range(if d == 2 { 2 } else { 3 }..=5usize);
        let base = match i % 4 {
            0 => exact_min_hitter(n, d, &lim)?.questions,
            1 => greedy_hitter(n, d, &lim)?.questions,
            2 => randomized_hitter(n, d, i as u64, 1.0, &lim)?.questions,
            _ => QuestionSet::full(n, d)?,
        };
        let mut mutated = base.questions.clone();
        let drop = rng.gen_range(0..mutated.len());
        mutated.remove(drop);
        if rng.gen_bool(0.5) || mutated.is_empty() {
            mutated.push(random_question(&mut rng, n, d)?);
        }
        for qs in [base, QuestionSet::new(n, d, mutated)?] {
            let hit = is_optimal_question_set(&qs, VerifyMethod::Hitting, &lim)?.optimal;
            let cost = is_optimal_question_set(&qs, VerifyMethod::Cost, &lim)?.optimal;
            total += 1;
            agree += (hit == cost) as usize;
            optimal_count += hit as usize;
        }
    }
    let halving_ok = (2..=6).all(|n| {
        halving_baseline(n, &lim)
            .and_then(|h| is_optimal_question_set(&h.questions, VerifyMethod::Both, &lim))
            .map(|v| v.optimal)
            .unwrap_or(false)
    });
    let seeds = if s.full() { 100 } else { 20 };
    let mut random_ok = 0;
    for seed in 0..seeds {
        let n = 5;
        let r = randomized_hitter(n, 2, seed, 1.0, &lim)?;
        random_ok += is_optimal_question_set(&r.questions, VerifyMethod::Hitting, &lim)?.optimal as usize;
    }
    let need = (seeds as f64 * 0.95).ceil() as usize;
    Ok((
        agree == total && total >= 2 * pairs && halving_ok && random_ok >= need,
        format!(
            "{agree}/{total} verdicts agree ({optimal_count} optimal); halving optimal for n = 2..6: {halving_ok}; randomized n = 5 optimal on {random_ok}/{seeds} seeds"
        ),
    ))
}

/// A random point of the amount domain whose entries beyond c_0 lie on the
/// grid 1/(64 beta), so that it is K-feasible for some K.
fn random_grid_amounts(rng: &mut ChaCha8Rng) -> (Vec<BigRational>, u32, BigRational) {
    loop {
        let beta = rat(rng.gen_range(8..16), 8);
        let b = rng.gen_range(0..=2u32);
        let len = rng.gen_range(0..=4usize);
        let mut c = vec![BigRational::zero()];
        for _ in 0..len {
            c.push(rat(rng.gen_range(0..=8), 64) / &beta);
        }
        let top = (&beta * rat(1 << b, 1)).recip();
        let rest = c.iter().enumerate().skip(1).fold(BigRational::zero(), |acc, (i, ci)| acc + ci / rat(1 << i, 1));
        c[0] = top - rest;
        let sum = c.iter().fold(BigRational::zero(), |a, x| a + x);
        if c[0] > BigRational::zero() && sum <= rat(1, 1) {
            return (c, b, beta);
        }
    }
}

fn random_feasible_alpha(rng: &mut ChaCha8Rng, c: &[f64], b: u32, beta: f64) -> Vec<f64> {
    let target = 1.0 / (beta * 2f64.powi(b as i32 + 1));
    for _ in 0..200 {
        let mut alpha: Vec<f64> = (0..c.len()).map(|_| rng.gen::<f64>()).collect();
        let rest: f64 = (1..c.len()).map(|i| alpha[i] * c[i] * 0.5f64.powi(i as i32)).sum();
        alpha[0] = (target - rest) / c[0];
        if (0.0..=1.0).contains(&alpha[0]) {
            return alpha;
        }
    }
    vec![0.5; c.len()]
}

fn c8_rounding(s: &Settings) -> Result<(bool, String)> {
    let instances = if s.full() { 200 } else { 50 };
    let eps = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut alpha_fail = 0;
    let mut c_fail = 0;
    let mut worst_alpha = 0.0f64;
    let mut worst_transfer = 0.0f64;
    let mut built = 0;
    let mut max_k = 0;
    for _ in 0..instances {
        let (c, b, beta) = random_grid_amounts(&mut rng);
        let cf: Vec<f64> = c.iter().map(rational_to_f64).collect();
        let betaf = rational_to_f64(&beta);
        let alpha = random_feasible_alpha(&mut rng, &cf, b, betaf);
        match round_alpha_feasible(&c, b, &beta, &alpha, eps, 0) {
            Ok(r) => {
                worst_alpha = worst_alpha.max(r.delta_p.abs());
                let seq = AmountSequence::new(b, beta.clone(), c.clone())?;
                if !(alpha_is_k_feasible(&c, &r.alpha, b, &beta, r.k) && is_k_feasible(&seq, r.k))
                    || r.delta_p.abs() > s.tol(eps)
                {
                    alpha_fail += 1;
                }
            }
            Err(_) => alpha_fail += 1,
        }
        // off-grid amounts for the second lemma
        let mut real = vec![BigRational::zero()];
        for ci in c.iter().skip(1) {
            let jitter: f64 = rng.gen_range(0.0..1e-2);
            real.push(rational_from_f64(rational_to_f64(ci) + jitter)?);
        }
        let top = (&beta * rat(1 << b, 1)).recip();
        let rest = real.iter().enumerate().skip(1).fold(BigRational::zero(), |acc, (i, ci)| acc + ci / rat(1 << i, 1));
        real[0] = top - rest;
        if real[0] <= BigRational::zero() || real.iter().fold(BigRational::zero(), |a, x| a + x) > rat(1, 1) {
            real = c.clone();
        }
        match round_c_feasible(&real, b, &beta, eps) {
            Ok(r) => {
                let seq = AmountSequence::new(b, beta.clone(), r.c.clone());
                let grid_ok = match &seq {
                    Ok(q) if is_k_feasible(q, r.k) => match from_amount_sequence(q, r.k) {
                        Ok(_) => {
                            built += 1;
                            true
                        }
                        Err(Error::ResourceCap(_)) => true,
                        Err(_) => false,
                    },
                    _ => false,
                };
                max_k = max_k.max(r.k);
                let tf: Vec<f64> = r.c.iter().map(rational_to_f64).collect();
                let inner = inner_max(&tf, b, betaf)?;
                let moved = alpha_transfer(&real, &r.c, &inner.alpha, b);
                let realf: Vec<f64> = real.iter().map(rational_to_f64).collect();
                let transfer_ok = match &moved {
                    Ok(a) => {
                        let gap = (payoff(&tf, &inner.alpha) - payoff(&realf, a)).abs();
                        worst_transfer = worst_transfer.max(gap);
                        gap <= s.tol(eps)
                            && alpha_residual(&realf, a, b, betaf).abs() <= 1e-9
                            && a.iter().all(|x| (0.0..=1.0).contains(x))
                    }
                    Err(_) => false,
                };
                if !(grid_ok && transfer_ok && r.delta_p <= s.tol(eps)) {
                    c_fail += 1;
                }
            }
            Err(_) => c_fail += 1,
        }
    }
    let one = round_c_feasible(&[rat(1, 1)], 0, &rat(1, 1), eps)?;
    let two_fifths = round_c_feasible(&[rat(2, 5)], 1, &rat(5, 4), eps)?;
    let grid_alpha = round_alpha_feasible(&[rat(2, 5)], 1, &rat(5, 4), &[0.5], eps, 0)?;
    let degenerate = one.unchanged && one.k == 0 && two_fifths.unchanged && grid_alpha.alpha == vec![rat(1, 2)];
    Ok((
        alpha_fail == 0 && c_fail == 0 && degenerate,
        format!(
            "{instances} instances: alpha rounding failures {alpha_fail} (max |dP| = {worst_alpha:.2e}), amount rounding failures {c_fail} (max transfer |dP| = {worst_transfer:.2e}, max k {max_k}, {built} distributions built); degenerate inputs unchanged: {degenerate}"
        ),
    ))
}

fn c9_rho_star(s: &Settings) -> Result<(bool, String)> {
    let lim = Limits::default();
    let nmax = if s.full() { 8 } else { 5 };
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 3..=nmax {
        let r = rho_min(n, &lim)?.rho;
        let st = rho_star_min(n, &lim)?.rho_star;
        let ok = &r / rat(2, 1) <= st && st <= &r * rat(n as i64, 1);
        pass &= ok;
        parts.push(format!("n={n}: {st} vs {r}"));
    }
    Ok((pass, parts.join(", ")))
}

fn reachable(n: usize, d: u32) -> usize {
    let step = d as usize - 1;
    1 + (n.max(2) - 1).div_ceil(step) * step
}

fn c10_structure(s: &Settings) -> Result<(bool, String)> {
    let runs = if s.full() { 500 } else { 100 };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut block_fail = 0;
    let mut max_gamma = 0;
    for i in 0..runs {
        let d = [2u32, 3, 5][i % 3];
        let n = reachable(rng.gen_range(3..=64), d).min(if d == 2 { 64 } else { 61 });
        let mu = random_split(n, d, &mut rng)?;
        if mu.is_dirac() {
            continue;
        }
        match block_partition(&mu) {
            Ok(bp) => {
                max_gamma = max_gamma.max(bp.gamma);
                block_fail += check_block_partition(&mu, &bp).is_err() as usize;
            }
            Err(_) => block_fail += 1,
        }
    }
    let mut prefix_fail = 0;
    for i in 0..runs {
        let d = [2u32, 3, 5][i % 3];
        let n = reachable(rng.gen_range(2..=40), d);
        let mu = random_split(n, d, &mut rng)?;
        let exps: Vec<u32> = mu.exps().iter().map(|e| e.unwrap()).collect();
        let a = rng.gen_range(0..=exps[0]);
        let unit = BigRational::new(BigInt::from(1), BigInt::from(d).pow(a));
        let ok = prefix_split(&exps, d, a).map(|ends| {
            let mut start = 0;
            let mut good = true;
            for &end in &ends {
                let m = (start..end).fold(BigRational::zero(), |acc, j| acc + mu.prob(j));
                good &= m == unit;
                start = end;
            }
            good && start == n
        });
        prefix_fail += !ok.unwrap_or(false) as usize;
    }
    let lim = Limits::default();
    let nmax = if s.full() { 10 } else { 8 };
    let mut tail_fail = 0;
    let mut sets = 0;
    for n in 3..=nmax {
        for mu in enumerate_dadic(n, 2, canonical_full(), &lim)? {
            if mu.is_dirac() {
                continue;
            }
            let t = tail(&mu)?;
            let tmask: u64 = t.members.iter().map(|&i| 1u64 << i).sum();
            let p = oracle::probs(2, mu.exps());
            for mask in 0u64..(1 << n) {
                let m = (0..n).filter(|&i| mask >> i & 1 == 1).fold(BigRational::zero(), |acc, i| acc + &p[i]);
                if m == rat(1, 2) {
                    sets += 1;
                    tail_fail += (mask & tmask != 0 && mask & tmask != tmask) as usize;
                }
            }
        }
    }
    Ok((
        block_fail == 0 && prefix_fail == 0 && tail_fail == 0,
        format!(
            "{runs} block partitions: {block_fail} failures (max gamma {max_gamma}); {runs} prefix splits: {prefix_fail} failures; {sets} splitting sets with n <= {nmax}: {tail_fail} cut the tail"
        ),
    ))
}

fn random_real_amounts(rng: &mut ChaCha8Rng, beta: f64) -> (Vec<f64>, u32) {
    loop {
        let b = rng.gen_range(0..=1u32);
        let len = rng.gen_range(0..=3usize);
        let mut c = vec![0.0];
        for _ in 0..len {
            c.push(rng.gen_range(0.0..0.3));
        }
        let top = 1.0 / (beta * 2f64.powi(b as i32));
        c[0] = top - (1..c.len()).map(|i| c[i] * 0.5f64.powi(i as i32)).sum::<f64>();
        if c[0] > 0.0 && c.iter().sum::<f64>() <= 1.0 {
            return (c, b);
        }
    }
}

/// Amounts with b = 1 and total close to 2/5, where the uniform alpha is
/// nearly optimal.
fn near_amounts(rng: &mut ChaCha8Rng, beta: f64) -> (Vec<f64>, u32) {
    let delta0 = (beta - 1.25).abs() / 100.0;
    loop {
        let x = 0.4 + rng.gen_range(-0.5..0.5) * delta0;
        let c2 = if rng.gen_bool(0.5) { rng.gen_range(0.0..0.05) } else { 0.0 };
        let c1 = 2.0 * (x - 0.75 * c2 - 1.0 / (2.0 * beta));
        let c0 = x - c2 - c1;
        if c0 > 0.0 && c1 >= 0.0 {
            let mut c = vec![c0, c1];
            if c2 > 0.0 {
                c.push(c2);
            }
            return (c, 1);
        }
    }
}

fn c11_perturbation(s: &Settings) -> Result<(bool, String)> {
    let per_beta = if s.full() { 100 } else { 20 };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = 0;
    let mut near = 0;
    let mut strict = 0;
    let mut min_gain = f64::INFINITY;
    for beta in [1.5, 1.8, 1.95] {
        for i in 0..per_beta {
            let (c, b) = if i % 2 == 0 { random_real_amounts(&mut rng, beta) } else { near_amounts(&mut rng, beta) };
            let cert = match perturbation_gain(&c, b, beta) {
                Ok(cert) => cert,
                Err(_) => {
                    failures += 1;
                    continue;
                }
            };
            let feasible = alpha_residual(&c, &cert.alpha, b, beta).abs() <= 1e-12
                && cert.alpha.iter().all(|a| (0.0..=1.0).contains(a))
                && (cert.eta_s * cert.p_s + cert.eta_t * cert.p_t).abs() <= 1e-12;
            let mut ok = feasible && cert.payoff >= cert.payoff_uniform;
            if cert.branch == "near" {
                near += 1;
            }
            if cert.lever.abs() > 1e-9 {
                ok &= cert.payoff > cert.payoff_uniform + 1e-9;
                strict += 1;
            }
            min_gain = min_gain.min(cert.gain);
            failures += !ok as usize;
        }
    }
    let at_floor = matches!(perturbation_gain(&[0.4], 1, 1.25), Err(Error::Precondition(_)));
    Ok((
        failures == 0 && at_floor,
        format!(
            "{} instances ({near} near 2/5, {strict} with a nonzero lever): {failures} failures, min gain over the floor {min_gain:.3e}; beta = 5/4 rejected: {at_floor}",
            3 * per_beta
        ),
    ))
}

fn c12_empirical(_: &Settings) -> Result<(bool, String)> {
    let lim = Limits::default();
    let report = empirical_g(&rat(5, 4), &[2, 3, 4], &lim)?;
    let gaps: Vec<f64> = report.points.iter().map(|p| (p.value + log2_five_quarters()).abs()).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = report
        .points
        .iter()
        .zip(&gaps)
        .map(|(p, g)| format!("n={}: rho_min = {}, gap {g:.5}", p.n, p.rho_min))
        .collect();
    Ok((decreasing, shown.join("; ")))
}
