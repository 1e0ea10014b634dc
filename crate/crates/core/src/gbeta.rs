//! The payoff P(c, alpha) = sum h(alpha_i) c_i - h(sum alpha_i c_i), its
//! maximum over feasible alpha, and the bounds on G(beta) built from it.
//!
//! Amounts c_i describe a dyadic distribution through n = beta 2^k: there are
//! c_i n elements of probability 2^{b-k-i}. A vector alpha is feasible when
//! sum alpha_i c_i / 2^i = 1 / (beta 2^{b+1}).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{as_integer, pow2, AmountSequence};
use crate::error::{domain, precondition, Error, Result};
use crate::numerics::{h, h_prime, rational_from_f64, rational_to_f64};
use crate::splitting::rho_min;
use crate::Limits;

/// Tolerance on sum c_i 2^{b-i} beta = 1 for real-valued amounts.
pub const AMOUNT_TOL: f64 = 1e-9;
/// Tolerance on the alpha constraint for inputs to the rounding lemmas.
pub const ALPHA_TOL: f64 = 1e-3;
/// s = 829/2000, the second-block parameter of the 1.236 bound.
pub const TWO_BLOCK_S: f64 = 0.4145;

/// log2(5/4).
pub fn log2_five_quarters() -> f64 {
    1.25f64.log2()
}

/// sum h(alpha_i) c_i - h(sum alpha_i c_i). Missing entries count as zero.
pub fn payoff(c: &[f64], alpha: &[f64]) -> f64 {
    let m = c.len().min(alpha.len());
    let mut gain = 0.0;
    let mut mass = 0.0;
    for i in 0..m {
        gain += h(alpha[i]) * c[i];
        mass += alpha[i] * c[i];
    }
    gain - h(mass)
}

/// 1 / (beta 2^{b+1}), the right-hand side of the alpha constraint.
pub fn alpha_target(b: u32, beta: f64) -> f64 {
    1.0 / (beta * 2f64.powi(b as i32 + 1))
}

pub fn alpha_residual(c: &[f64], alpha: &[f64], b: u32, beta: f64) -> f64 {
    let s: f64 = c.iter().zip(alpha).enumerate().map(|(i, (ci, ai))| ai * ci * 0.5f64.powi(i as i32)).sum();
    s - alpha_target(b, beta)
}

pub fn check_amounts(c: &[f64], b: u32, beta: f64) -> Result<()> {
    if !(1.0..2.0).contains(&beta) {
        return domain(format!("beta = {beta} lies outside [1, 2)"));
    }
    if c.first().map_or(true, |&c0| c0 <= 0.0) {
        return domain("c_0 must be positive");
    }
    if c.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return domain("amounts must be finite and nonnegative");
    }
    let mass: f64 = c.iter().enumerate().map(|(i, ci)| ci * 2f64.powi(b as i32 - i as i32) * beta).sum();
    if (mass - 1.0).abs() > AMOUNT_TOL {
        return domain(format!("sum c_i 2^(b-i) beta = {mass}, not 1"));
    }
    if c.iter().sum::<f64>() > 1.0 + AMOUNT_TOL {
        return domain("amounts sum above 1");
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    UniformAlpha,
    SingleBlock,
    TwoBlock,
    Scan,
    Perturbation,
    Empirical,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRecord {
    pub beta: Option<f64>,
    pub method: BoundMethod,
    pub b: Option<u32>,
    pub value: f64,
    pub params: BTreeMap<String, f64>,
}

fn sigma(z: f64) -> f64 {
    // 1 / (1 + 2^z), the inverse of h'
    if z > 0.0 {
        let t = (-z).exp2();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + z.exp2())
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stationary points of P on one face: coordinates in `fixed` are held at
/// their values, the rest are interior. On such a point
/// alpha_i = sigma(u + lambda 2^{-i}) with u = h'(A), A = sum alpha_i c_i; for
/// each u the constraint fixes lambda, and u is then a root of
/// sum c_i alpha_i - sigma(u).
fn face_critical_points(c: &[f64], free: &[usize], fixed: &[(usize, f64)], target: f64) -> Vec<Vec<f64>> {
    let w = |i: usize| c[i] * 0.5f64.powi(i as i32);
    let fixed_w: f64 = fixed.iter().map(|&(i, a)| a * w(i)).sum();
    let fixed_c: f64 = fixed.iter().map(|&(i, a)| a * c[i]).sum();
    let assemble = |vals: &[(usize, f64)]| {
        let mut alpha = vec![0.5; c.len()];
        for &(i, a) in fixed.iter().chain(vals) {
            alpha[i] = a;
        }
        alpha
    };
    if free.is_empty() {
        return if (fixed_w - target).abs() <= 1e-12 { vec![assemble(&[])] } else { vec![] };
    }
    let need = target - fixed_w;
    let wsum: f64 = free.iter().map(|&i| w(i)).sum();
    if need <= 0.0 || need >= wsum {
        return vec![];
    }
    let lambda_of = |u: f64| -> f64 {
        let g = |lam: f64| free.iter().map(|&i| w(i) * sigma(u + lam * 0.5f64.powi(i as i32))).sum::<f64>() - need;
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        for _ in 0..400 {
            if g(lo) > 0.0 {
                break;
            }
            lo *= 2.0;
        }
        for _ in 0..400 {
            if g(hi) < 0.0 {
                break;
            }
            hi *= 2.0;
        }
        bisect(lo, hi, g)
    };
    let residual = |u: f64| -> f64 {
        let lam = lambda_of(u);
        free.iter().map(|&i| c[i] * sigma(u + lam * 0.5f64.powi(i as i32))).sum::<f64>() + fixed_c - sigma(u)
    };
    let free_c: f64 = free.iter().map(|&i| c[i]).sum();
    let a_hi = (fixed_c + free_c).min(1.0 - 1e-15);
    let a_lo = fixed_c.max(1e-300);
    let u_lo = h_prime(a_hi).max(-80.0);
    let u_hi = h_prime(a_lo).min(80.0);
    const GRID: usize = 1200;
    let us: Vec<f64> = (0..=GRID).map(|j| u_lo + (u_hi - u_lo) * j as f64 / GRID as f64).collect();
    let fs: Vec<f64> = us.iter().map(|&u| residual(u)).collect();
    let mut out = Vec::new();
    for j in 0..GRID {
        if fs[j] == 0.0 || (fs[j] > 0.0) != (fs[j + 1] > 0.0) {
            let u = if fs[j] == 0.0 { us[j] } else { bisect(us[j], us[j + 1], &residual) };
            let lam = lambda_of(u);
            let vals: Vec<(usize, f64)> =
                free.iter().map(|&i| (i, sigma(u + lam * 0.5f64.powi(i as i32)))).collect();
            out.push(assemble(&vals));
        }
    }
    out
}

/// Euclidean projection onto {alpha in [0,1]^m : sum w_i alpha_i = target}.
fn project(y: &[f64], w: &[f64], target: f64) -> Vec<f64> {
    let at = |tau: f64| -> Vec<f64> { y.iter().zip(w).map(|(yi, wi)| (yi - tau * wi).clamp(0.0, 1.0)).collect() };
    let g = |tau: f64| at(tau).iter().zip(w).map(|(a, wi)| a * wi).sum::<f64>() - target;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while g(lo) < 0.0 && lo > -1e300 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 && hi < 1e300 {
        hi *= 2.0;
    }
    at(bisect(lo, hi, g))
}

fn ascend(c: &[f64], w: &[f64], target: f64, start: Vec<f64>) -> Vec<f64> {
    let mut alpha = start;
    let mut val = payoff(c, &alpha);
    let mut step = 0.1;
    for _ in 0..400 {
        let mass: f64 = alpha.iter().zip(c).map(|(a, ci)| a * ci).sum();
        let hm = h_prime(mass.clamp(1e-12, 1.0 - 1e-12));
        let grad: Vec<f64> = alpha
            .iter()
            .zip(c)
            .map(|(&a, &ci)| ci * (h_prime(a.clamp(1e-12, 1.0 - 1e-12)) - hm))
            .collect();
        let mut moved = false;
        while step > 1e-14 {
            let y: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            let cand = project(&y, w, target);
            let v = payoff(c, &cand);
            if v > val {
                alpha = cand;
                val = v;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    alpha
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerMax {
    pub alpha: Vec<f64>,
    pub value: f64,
    /// True when every face of the feasible polytope was searched.
    pub certified: bool,
}

pub const MULTISTART_SEEDS: u64 = 64;

/// max of P(c, alpha) over feasible alpha.
pub fn inner_max(c: &[f64], b: u32, beta: f64) -> Result<InnerMax> {
    check_amounts(c, b, beta)?;
    let target = alpha_target(b, beta);
    let support: Vec<usize> = (0..c.len()).filter(|&i| c[i] > 0.0).collect();
    let uniform = vec![0.5; c.len()];
    let mut best = (payoff(c, &uniform), uniform);
    let consider = |alpha: Vec<f64>, best: &mut (f64, Vec<f64>)| {
        if alpha.iter().all(|a| (0.0..=1.0).contains(a)) && alpha_residual(c, &alpha, b, beta).abs() <= 1e-10 {
            let v = payoff(c, &alpha);
            if v > best.0 {
                *best = (v, alpha);
            }
        }
    };
    let m = support.len();
    let certified = m <= 3;
    if certified {
        for code in 0..3usize.pow(m as u32) {
            let mut free = Vec::new();
            let mut fixed = Vec::new();
            let mut x = code;
            for &i in &support {
                match x % 3 {
                    0 => free.push(i),
                    1 => fixed.push((i, 0.0)),
                    _ => fixed.push((i, 1.0)),
                }
                x /= 3;
            }
            for alpha in face_critical_points(c, &free, &fixed, target) {
                consider(alpha, &mut best);
            }
        }
    } else {
        for alpha in face_critical_points(c, &support, &[], target) {
            consider(alpha, &mut best);
        }
        let w: Vec<f64> = support.iter().map(|&i| c[i] * 0.5f64.powi(i as i32)).collect();
        let cs: Vec<f64> = support.iter().map(|&i| c[i]).collect();
        let found: Vec<Vec<f64>> = (0..MULTISTART_SEEDS)
            .into_par_iter()
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let y: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
                let local = ascend(&cs, &w, target, project(&y, &w, target));
                let mut alpha = vec![0.5; c.len()];
                for (j, &i) in support.iter().enumerate() {
                    alpha[i] = local[j];
                }
                alpha
            })
            .collect();
        for alpha in found {
            consider(alpha, &mut best);
        }
    }
    Ok(InnerMax { alpha: best.1, value: best.0, certified })
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// min over x in [0,1] of x - h(x/2), the payoff of alpha = 1/2 everywhere;
/// a lower bound on G(beta) for every beta.
pub fn g_lb_uniform() -> BoundRecord {
    // the derivative 1 - h'(x/2)/2 is increasing
    let x = bisect(1e-300, 1.0, |x| 1.0 - h_prime(x / 2.0) / 2.0);
    let value = x - h(x / 2.0);
    BoundRecord {
        beta: None,
        method: BoundMethod::UniformAlpha,
        b: None,
        value,
        params: BTreeMap::from([("x".to_string(), x)]),
    }
}

/// The upper bound on G(beta) from the single block c_0 = 1/(2^b beta),
/// which forces alpha_0 = 1/2.
pub fn g_ub_single_block(beta: f64, b: u32) -> Result<BoundRecord> {
    if !(1.0..2.0).contains(&beta) {
        return domain(format!("beta = {beta} lies outside [1, 2)"));
    }
    let c0 = 1.0 / (2f64.powi(b as i32) * beta);
    let value = c0 - h(c0 / 2.0);
    Ok(BoundRecord {
        beta: Some(beta),
        method: BoundMethod::SingleBlock,
        b: Some(b),
        value,
        params: BTreeMap::from([("c0".to_string(), c0)]),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoBlockSolution {
    pub s: f64,
    pub beta: f64,
    pub c0: f64,
    pub c1: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub lambda: f64,
    /// max of the interior stationary value and every boundary value
    pub value: f64,
    pub interior_value: f64,
    pub boundary_value: f64,
    pub is_interior_max: bool,
    pub residuals: [f64; 3],
}

/// Inner maximum for c = (1/beta - s, 2s - 1/beta) with b = 1.
///
/// Interior stationary points satisfy
/// (1-a0)/a0 = ((1-a1)/a1)^2 A/(1-A) with A = a0 c0 + a1 c1, together with
/// a0 c0 + a1 c1/2 = 1/(4 beta); a0 is eliminated through the constraint and
/// the remaining equation is bracketed on a grid in a1. The multiplier is
/// reported with c_i (h'(a_i) - h'(A)) + lambda w_i = 0, w = (c0, c1/2).
pub fn two_block_solve(beta: f64, s: f64) -> Result<TwoBlockSolution> {
    let c0 = 1.0 / beta - s;
    let c1 = 2.0 * s - 1.0 / beta;
    if !(c0 > 0.0 && c1 > 0.0) {
        return domain(format!("s = {s} gives a degenerate block at beta = {beta}"));
    }
    let t = 1.0 / (4.0 * beta);
    let a0_of = |a1: f64| (t - a1 * c1 / 2.0) / c0;
    let stationarity = |a1: f64| {
        let a0 = a0_of(a1);
        let m = a0 * c0 + a1 * c1;
        ((1.0 - a0) / a0).ln() - 2.0 * ((1.0 - a1) / a1).ln() - (m / (1.0 - m)).ln()
    };
    let val = |a0: f64, a1: f64| h(a0) * c0 + h(a1) * c1 - h(a0 * c0 + a1 * c1);
    let lo = (2.0 * (t - c0) / c1).max(0.0);
    let hi = (2.0 * t / c1).min(1.0);
    const GRID: usize = 4000;
    let pad = (hi - lo) * 1e-12;
    let xs: Vec<f64> = (0..=GRID).map(|j| lo + pad + (hi - lo - 2.0 * pad) * j as f64 / GRID as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| stationarity(x)).collect();
    let mut interior: Option<(f64, f64, f64)> = None;
    for j in 0..GRID {
        if !(fs[j].is_finite() && fs[j + 1].is_finite()) {
            continue;
        }
        if fs[j] == 0.0 || (fs[j] > 0.0) != (fs[j + 1] > 0.0) {
            let a1 = if fs[j] == 0.0 { xs[j] } else { bisect(xs[j], xs[j + 1], &stationarity) };
            let a0 = a0_of(a1);
            let v = val(a0, a1);
            if interior.map_or(true, |(bv, _, _)| v > bv) {
                interior = Some((v, a0, a1));
            }
        }
    }
    let Some((interior_value, alpha0, alpha1)) = interior else {
        return domain(format!("no interior stationary point at beta = {beta}, s = {s}"));
    };
    let mut boundary_value = f64::NEG_INFINITY;
    for a0 in [0.0, 1.0] {
        let a1 = 2.0 * (t - a0 * c0) / c1;
        if (0.0..=1.0).contains(&a1) {
            boundary_value = boundary_value.max(val(a0, a1));
        }
    }
    for a1 in [0.0, 1.0] {
        let a0 = a0_of(a1);
        if (0.0..=1.0).contains(&a0) {
            boundary_value = boundary_value.max(val(a0, a1));
        }
    }
    let m = alpha0 * c0 + alpha1 * c1;
    let ratio = |a: f64| ((1.0 - a) * m / (a * (1.0 - m))).log2();
    let lambda = -ratio(alpha0);
    let residuals = [
        c0 * (ratio(alpha0) + lambda),
        c1 * (ratio(alpha1) + lambda / 2.0),
        alpha0 * c0 + alpha1 * c1 / 2.0 - t,
    ];
    Ok(TwoBlockSolution {
        s,
        beta,
        c0,
        c1,
        alpha0,
        alpha1,
        lambda,
        value: interior_value.max(boundary_value),
        interior_value,
        boundary_value,
        is_interior_max: interior_value >= boundary_value,
        residuals,
    })
}

pub fn two_block_record(sol: &TwoBlockSolution) -> BoundRecord {
    BoundRecord {
        beta: Some(sol.beta),
        method: BoundMethod::TwoBlock,
        b: Some(1),
        value: sol.value,
        params: BTreeMap::from([("s".to_string(), sol.s)]),
    }
}

/// The s minimizing the two-block bound at beta: a 1/1000 grid, then
/// golden-section search around the best grid point.
pub fn best_two_block_s(beta: f64) -> Result<TwoBlockSolution> {
    let lo = 1.0 / (2.0 * beta);
    let hi = 1.0 / beta;
    let grid: Vec<f64> = (0..=2000)
        .map(|j| j as f64 / 1000.0)
        .filter(|&s| s > lo && s < hi)
        .collect();
    let eval = |s: f64| two_block_solve(beta, s).map(|t| t.value).unwrap_or(f64::INFINITY);
    let best = grid
        .par_iter()
        .map(|&s| (eval(s), s))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .ok_or_else(|| Error::Domain(format!("no admissible s at beta = {beta}")))?;
    let s = golden_min((best.1 - 1e-3).max(lo + 1e-12), (best.1 + 1e-3).min(hi - 1e-12), eval);
    let refined = two_block_solve(beta, s)?;
    if refined.value <= best.0 {
        Ok(refined)
    } else {
        two_block_solve(beta, best.1)
    }
}

/// Best upper bound on G(beta) among single blocks with b in 0..=8 and the
/// two-block family with an optimized s.
pub fn best_upper_bound(beta: f64) -> Result<BoundRecord> {
    let mut best = g_ub_single_block(beta, 0)?;
    for b in 1..=8 {
        let r = g_ub_single_block(beta, b)?;
        if r.value < best.value {
            best = r;
        }
    }
    if let Ok(sol) = best_two_block_s(beta) {
        if sol.value < best.value {
            best = two_block_record(&sol);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct Scan {
    pub value: f64,
    pub beta_at_max: f64,
    pub two_block_max: f64,
    pub single_low_sup: f64,
    pub single_high_sup: f64,
    pub step: f64,
}

impl Scan {
    pub fn record(&self) -> BoundRecord {
        BoundRecord {
            beta: Some(self.beta_at_max),
            method: BoundMethod::Scan,
            b: Some(1),
            value: self.value,
            params: BTreeMap::from([
                ("s".to_string(), TWO_BLOCK_S),
                ("step".to_string(), self.step),
                ("two_block_max".to_string(), self.two_block_max),
                ("single_low_sup".to_string(), self.single_low_sup),
                ("single_high_sup".to_string(), self.single_high_sup),
            ]),
        }
    }
}

/// Upper bound on sup_beta G(beta): the two-block bound with s = 829/2000 on
/// (1.7, 1.95), single blocks with b = 1 on [1, 1.7] and b = 0 on [1.95, 2).
pub fn scan_1236(step: f64) -> Result<Scan> {
    if !(step > 0.0 && step <= 1e-3) {
        return domain(format!("grid step must lie in (0, 1e-3], got {step}"));
    }
    let grid = |a: f64, b: f64, inclusive: bool| -> Vec<f64> {
        let count = ((b - a) / step).floor() as usize;
        (0..=count)
            .map(|j| a + j as f64 * step)
            .filter(|&x| if inclusive { x <= b } else { x > a && x < b })
            .collect()
    };
    let mid = grid(1.7, 1.95, false);
    let (two_block_max, beta_at_max) = mid
        .par_iter()
        .map(|&beta| two_block_solve(beta, TWO_BLOCK_S).map(|s| (s.value, beta)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Internal("empty scan grid".into()))?;
    let sup = |betas: Vec<f64>, b: u32| -> Result<f64> {
        betas
            .iter()
            .map(|&beta| g_ub_single_block(beta, b).map(|r| r.value))
            .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
    };
    let single_low_sup = sup(grid(1.0, 1.7, true), 1)?;
    let high: Vec<f64> = grid(1.95, 2.0, true).into_iter().filter(|&b| b < 2.0).collect();
    let single_high_sup = sup(high, 0)?;
    let value = two_block_max.max(single_low_sup).max(single_high_sup);
    Ok(Scan { value, beta_at_max, two_block_max, single_low_sup, single_high_sup, step })
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveRow {
    pub beta: f64,
    pub single_b1: f64,
    pub single_b0: f64,
    pub two_block: f64,
}

/// The single-block bounds (b = 1 and b = 0) and the two-block bound at
/// s = 829/2000 on a beta grid; NaN where the two blocks degenerate.
pub fn curves(beta_min: f64, beta_max: f64, step: f64) -> Result<Vec<CurveRow>> {
    if !(1.0 <= beta_min && beta_min <= beta_max && beta_max < 2.0 && step > 0.0) {
        return domain(format!("bad grid [{beta_min}, {beta_max}] step {step}"));
    }
    let count = ((beta_max - beta_min) / step + 1e-9).floor() as usize;
    (0..=count)
        .into_par_iter()
        .map(|j| {
            let beta = beta_min + j as f64 * step;
            Ok(CurveRow {
                beta,
                single_b1: g_ub_single_block(beta, 1)?.value,
                single_b0: g_ub_single_block(beta, 0)?.value,
                two_block: two_block_solve(beta, TWO_BLOCK_S).map_or(f64::NAN, |s| s.value),
            })
        })
        .collect()
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("beta,single_b1,single_b0,two_block\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.beta, r.single_b1, r.single_b0, r.two_block));
    }
    out
}

fn s_threshold(b: u32) -> f64 {
    2f64.powi(-2 * (b as i32 + 5))
}

/// (s1, s2): the least indices with c_i and alpha_i at least 2^{-2(b+5)},
/// and with c_i at least that and alpha_i < 3/4.
pub fn find_s_indices(c: &[f64], alpha: &[f64], b: u32, beta: f64) -> Result<(usize, usize)> {
    check_amounts(c, b, beta)?;
    if alpha_residual(c, alpha, b, beta).abs() > ALPHA_TOL {
        return precondition("alpha is not feasible for c");
    }
    let thr = s_threshold(b);
    let limit = 1usize << (b + 4);
    let get = |i: usize| alpha.get(i).copied().unwrap_or(0.0);
    let s1 = (0..c.len()).find(|&i| c[i] >= thr && get(i) >= thr);
    let s2 = (0..c.len()).find(|&i| c[i] >= thr && get(i) < 0.75);
    match (s1, s2) {
        (Some(a), Some(b)) if a <= limit && b <= limit => Ok((a, b)),
        _ => Err(Error::Internal("no admissible s index".into())),
    }
}

/// Smallest K with x 2^K an integer, when x is a dyadic rational.
fn dyadic_exponent(x: &BigRational) -> Option<u32> {
    let d = x.denom();
    let bits = d.bits();
    (d == &(BigInt::one() << (bits - 1))).then(|| (bits - 1) as u32)
}

fn amounts_exact(c: &[BigRational]) -> Vec<f64> {
    c.iter().map(rational_to_f64).collect()
}

fn last_nonzero(c: &[BigRational]) -> usize {
    c.iter().rposition(|x| !x.is_zero()).unwrap_or(0)
}

/// Smallest K for which beta 2^K and every c_i beta 2^K are integers.
fn feasibility_level(c: &[BigRational], beta: &BigRational) -> Result<u32> {
    let mut k = dyadic_exponent(beta).ok_or_else(|| Error::Precondition("beta has a non-dyadic denominator".into()))?;
    for ci in c {
        let e = dyadic_exponent(&(ci * beta)).ok_or_else(|| Error::Precondition("c is not K-feasible for any K".into()))?;
        k = k.max(e);
    }
    Ok(k)
}

/// True when alpha is exactly feasible for (c, b, beta), every alpha_i c_i n
/// is an integer for n = beta 2^k, and alpha_t < 1 for the last class.
pub fn alpha_is_k_feasible(c: &[BigRational], alpha: &[BigRational], b: u32, beta: &BigRational, k: u32) -> bool {
    let n = beta * pow2(k as i64);
    if as_integer(&n).is_none() {
        return false;
    }
    let mut lhs = BigRational::zero();
    for (i, ci) in c.iter().enumerate() {
        let a = alpha.get(i).cloned().unwrap_or_else(BigRational::zero);
        if a.is_negative() || a > BigRational::one() {
            return false;
        }
        if as_integer(&(ci * &n)).is_none() || as_integer(&(&a * ci * &n)).is_none() {
            return false;
        }
        lhs += &a * ci * pow2(-(i as i64));
    }
    let t = last_nonzero(c);
    let at = alpha.get(t).cloned().unwrap_or_else(BigRational::zero);
    lhs == (beta * pow2(b as i64 + 1)).recip() && at < BigRational::one()
}

#[derive(Clone, Debug)]
pub struct AlphaRounding {
    pub k: u32,
    pub alpha: Vec<BigRational>,
    pub s: usize,
    pub delta_p: f64,
    pub epsilon_used: f64,
    /// the epsilon the grid construction actually ran with
    pub inner_epsilon: f64,
}

/// Rounds a feasible alpha to a k-feasible one: every alpha_i other than
/// alpha_s is snapped down onto the grid l / (c_i beta 2^t) with
/// h(alpha_i - snapped) <= eps'/K, entries beyond K are dropped, and alpha_s
/// absorbs the change so the constraint holds exactly. eps' is halved until
/// |P(c, alpha) - P(c, rounded)| <= epsilon.
pub fn round_alpha_feasible(
    c: &[BigRational],
    b: u32,
    beta: &BigRational,
    alpha: &[f64],
    epsilon: f64,
    min_k: u32,
) -> Result<AlphaRounding> {
    AmountSequence::new(b, beta.clone(), c.to_vec())?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return domain(format!("epsilon = {epsilon} outside (0, 1/2)"));
    }
    let k0 = feasibility_level(c, beta)?;
    let cf = amounts_exact(c);
    let betaf = rational_to_f64(beta);
    if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return domain("alpha entries must lie in [0, 1]");
    }
    if alpha_residual(&cf, alpha, b, betaf).abs() > ALPHA_TOL {
        return precondition("alpha is not feasible for c");
    }
    let get = |i: usize| alpha.get(i).copied().unwrap_or(0.0);
    let thr = s_threshold(b);
    let s = (0..c.len())
        .find(|&i| cf[i] >= thr && get(i) < 0.75)
        .ok_or_else(|| Error::Internal("no index with alpha < 3/4".into()))?;
    let t_last = last_nonzero(c);
    let target = (beta * pow2(b as i64 + 1)).recip();
    let p_orig = payoff(&cf, alpha);
    for attempt in 0..60 {
        let eps = epsilon / 2f64.powi(attempt);
        let mut kk = s;
        while kk + 1 < c.len() && cf[kk + 1..].iter().sum::<f64>() >= eps {
            kk += 1;
        }
        let per = eps / kk.max(1) as f64;
        let mut rounded = vec![BigRational::zero(); c.len()];
        for i in 0..c.len() {
            if i == s || i > kk || c[i].is_zero() || get(i) == 0.0 {
                continue;
            }
            let a = rational_from_f64(get(i))?;
            let q = &c[i] * beta;
            let mut snapped = None;
            for t in 0..=256i64 {
                let scale = &q * pow2(t);
                let mut l = (&a * &scale).floor();
                if i == t_last && l == scale {
                    l -= BigRational::one();
                }
                let cand = l / &scale;
                if h(rational_to_f64(&(&a - &cand))) <= per {
                    snapped = Some(cand);
                    break;
                }
            }
            rounded[i] = snapped.ok_or_else(|| Error::Internal("grid refinement did not converge".into()))?;
        }
        let mut rest = BigRational::zero();
        for (i, a) in rounded.iter().enumerate() {
            if i != s {
                rest += a * &c[i] * pow2(-(i as i64));
            }
        }
        let a_s = (&target - rest) * pow2(s as i64) / &c[s];
        if a_s.is_negative() || a_s > BigRational::one() || (s == t_last && a_s == BigRational::one()) {
            continue;
        }
        rounded[s] = a_s;
        let mut k = min_k.max(k0).max(kk as u32);
        for (i, a) in rounded.iter().enumerate() {
            let e = dyadic_exponent(&(a * &c[i] * beta))
                .ok_or_else(|| Error::Internal("rounded class count is not dyadic".into()))?;
            k = k.max(e);
        }
        let rf = amounts_exact(&rounded);
        let delta_p = p_orig - payoff(&cf, &rf);
        if delta_p.abs() <= epsilon {
            return Ok(AlphaRounding { k, alpha: rounded, s, delta_p, epsilon_used: epsilon, inner_epsilon: eps });
        }
    }
    precondition(format!("epsilon = {epsilon} is too large for this instance"))
}

#[derive(Clone, Debug)]
pub struct CRounding {
    pub k: u32,
    pub c: Vec<BigRational>,
    /// Bound on |P(c_tilde, alpha_tilde) - P(c, transfer(alpha_tilde))| over
    /// every feasible alpha_tilde.
    pub delta_p: f64,
    pub epsilon_used: f64,
    pub inner_epsilon: f64,
    pub unchanged: bool,
}

/// Rounds amounts onto the grid l / (beta 2^t): c_i for 1 <= i <= K is
/// snapped down by at most eps'/K, later entries are dropped, and c_0 takes
/// up the removed mass so the defining constraint holds exactly.
pub fn round_c_feasible(c: &[BigRational], b: u32, beta: &BigRational, epsilon: f64) -> Result<CRounding> {
    let cf = amounts_exact(c);
    let betaf = rational_to_f64(beta);
    check_amounts(&cf, b, betaf)?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return domain(format!("epsilon = {epsilon} outside (0, 1/2)"));
    }
    let trimmed = &c[..=last_nonzero(c)];
    if b == 0 && beta.is_one() && trimmed.len() == 1 && trimmed[0].is_one() {
        return Ok(CRounding {
            k: 0,
            c: trimmed.to_vec(),
            delta_p: 0.0,
            epsilon_used: epsilon,
            inner_epsilon: epsilon,
            unchanged: true,
        });
    }
    let thr = s_threshold(b);
    let limit = 1usize << (b + 4);
    let beta_level = dyadic_exponent(beta).ok_or_else(|| Error::Precondition("beta has a non-dyadic denominator".into()))?;
    let base = (beta * pow2(b as i64)).recip();
    for attempt in 0..60 {
        let eps = epsilon / 2f64.powi(attempt);
        let mut kk = 0usize;
        while kk + 1 < c.len() && cf[kk + 1..].iter().sum::<f64>() >= eps {
            kk += 1;
        }
        let per = eps / kk.max(1) as f64;
        let mut rounded = vec![BigRational::zero(); kk + 1];
        for i in 1..=kk {
            let mut snapped = None;
            for t in 0..=256i64 {
                let scale = beta * pow2(t);
                let cand = (&c[i] * &scale).floor() / &scale;
                if rational_to_f64(&(&c[i] - &cand)) <= per {
                    snapped = Some(cand);
                    break;
                }
            }
            rounded[i] = snapped.ok_or_else(|| Error::Internal("grid refinement did not converge".into()))?;
        }
        let mut rest = BigRational::zero();
        for (i, ci) in rounded.iter().enumerate().skip(1) {
            rest += ci * pow2(-(i as i64));
        }
        rounded[0] = &base - rest;
        if AmountSequence::new(b, beta.clone(), rounded.clone()).is_err() {
            continue;
        }
        let rf = amounts_exact(&rounded);
        let worst = (0..rf.len())
            .filter(|&i| rf[i] > thr && i <= limit)
            .map(|i| 2f64.powi(i as i32) / cf[i])
            .fold(0.0f64, f64::max);
        let spread = 4.0 * eps * worst;
        if spread >= thr {
            continue;
        }
        let bound = 4.0 * eps + h((4.0 * eps).min(0.5)) + 2.0 * h(spread);
        if bound > epsilon {
            continue;
        }
        let mut k = beta_level.max(kk as u32);
        for ci in &rounded {
            let e = dyadic_exponent(&(ci * beta))
                .ok_or_else(|| Error::Internal("rounded amount is not dyadic".into()))?;
            k = k.max(e);
        }
        let unchanged = rounded.len() == trimmed.len() && rounded.iter().zip(trimmed).all(|(a, b)| a == b);
        return Ok(CRounding { k, c: rounded, delta_p: bound, epsilon_used: epsilon, inner_epsilon: eps, unchanged });
    }
    precondition(format!("epsilon = {epsilon} is too large for this instance"))
}

/// Moves a feasible alpha_tilde for c_tilde to a feasible alpha for c by
/// correcting one coordinate s by delta_s = 2^s r / c_s, where r is the
/// constraint defect the amount change introduces.
pub fn alpha_transfer(c: &[BigRational], c_tilde: &[BigRational], alpha_tilde: &[f64], b: u32) -> Result<Vec<f64>> {
    let len = c.len().max(c_tilde.len()).max(alpha_tilde.len());
    let at = |v: &[BigRational], i: usize| v.get(i).map(rational_to_f64).unwrap_or(0.0);
    let diff = |i: usize| {
        let a = c.get(i).cloned().unwrap_or_else(BigRational::zero);
        let t = c_tilde.get(i).cloned().unwrap_or_else(BigRational::zero);
        rational_to_f64(&(a - t))
    };
    let mut alpha: Vec<f64> = (0..len).map(|i| alpha_tilde.get(i).copied().unwrap_or(0.0)).collect();
    let mut r = alpha[0] * diff(0);
    for i in 1..len {
        r += alpha[i] * diff(i) * 0.5f64.powi(i as i32);
    }
    let thr = s_threshold(b);
    let limit = (1usize << (b + 4)).min(len - 1);
    let s = (0..=limit)
        .find(|&i| at(c_tilde, i) > thr && if r >= 0.0 { alpha[i] > thr } else { alpha[i] < 0.75 })
        .ok_or_else(|| Error::Internal("no admissible transfer index".into()))?;
    let delta = 2f64.powi(s as i32) * r / at(c, s);
    alpha[s] -= delta;
    if !(0.0..=1.0).contains(&alpha[s]) {
        return precondition("amount change too large for the transfer");
    }
    Ok(alpha)
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationCertificate {
    pub beta: f64,
    pub branch: &'static str,
    pub s_set: Vec<usize>,
    pub i_index: Option<usize>,
    pub p_s: f64,
    pub q_s: f64,
    pub p_t: f64,
    pub q_t: f64,
    pub eta0: f64,
    pub eta_s: f64,
    pub eta_t: f64,
    pub lever: f64,
    pub alpha: Vec<f64>,
    pub payoff: f64,
    pub payoff_uniform: f64,
    /// payoff + log2(5/4)
    pub gain: f64,
}

/// A feasible alpha whose payoff beats alpha = 1/2 when beta != 5/4.
///
/// Away from sum c = 2/5 the uniform alpha already gains through the
/// curvature of x - h(x/2). Near it, alpha is moved to 1/2 + eta_S on S and
/// 1/2 + eta_T on T with eta_S p_S + eta_T p_T = 0; the sign makes
/// eta_S q_S + eta_T q_T negative, which lowers h(sum alpha_i c_i) since
/// sum alpha_i c_i < 1/2.
pub fn perturbation_gain(c: &[f64], b: u32, beta: f64) -> Result<PerturbationCertificate> {
    check_amounts(c, b, beta)?;
    let delta_beta = beta - 1.25;
    if delta_beta.abs() < 1e-15 {
        return precondition("beta = 5/4 admits no perturbation gain");
    }
    let delta0 = delta_beta.abs() / 100.0;
    let eta0 = delta_beta.abs().powf(1.5) / 10.0;
    let x: f64 = c.iter().sum();
    let uniform = vec![0.5; c.len()];
    let payoff_uniform = payoff(c, &uniform);
    let floor = -log2_five_quarters();
    let mut cert = PerturbationCertificate {
        beta,
        branch: "far",
        s_set: vec![],
        i_index: None,
        p_s: 0.0,
        q_s: 0.0,
        p_t: 0.0,
        q_t: 0.0,
        eta0,
        eta_s: 0.0,
        eta_t: 0.0,
        lever: 0.0,
        alpha: uniform,
        payoff: payoff_uniform,
        payoff_uniform,
        gain: payoff_uniform - floor,
    };
    if (x - 0.4).abs() >= delta0 {
        return Ok(cert);
    }
    cert.branch = "near";
    let w: Vec<f64> = c.iter().enumerate().map(|(i, ci)| ci * 0.5f64.powi(i as i32)).collect();
    let p_total = 1.0 / (beta * 2f64.powi(b as i32));
    let prefix = |i: usize| w[..=i].iter().sum::<f64>();
    let (s_set, i_index): (Vec<usize>, usize) = if x - p_total < 0.0 {
        let i = (0..c.len()).find(|&i| prefix(i) >= p_total / 2.0).unwrap_or(c.len() - 1);
        ((0..=i).collect(), i)
    } else {
        let mut i = 0usize;
        while x - 2f64.powi(i as i32 + 1 - b as i32) / beta >= 0.0 {
            i += 1;
        }
        let i = i.min(c.len() - 1);
        if prefix(i) >= p_total / 2.0 {
            ((0..=i).collect(), i)
        } else {
            ((i + 1..c.len()).collect(), i)
        }
    };
    let in_s = |i: usize| s_set.contains(&i);
    let p_s: f64 = (0..c.len()).filter(|&i| in_s(i)).map(|i| w[i]).sum();
    let q_s: f64 = (0..c.len()).filter(|&i| in_s(i)).map(|i| c[i]).sum();
    let p_t: f64 = (0..c.len()).filter(|&i| !in_s(i)).map(|i| w[i]).sum();
    let q_t: f64 = (0..c.len()).filter(|&i| !in_s(i)).map(|i| c[i]).sum();
    let lever = q_t - p_t / p_s * q_s;
    cert.s_set = s_set.clone();
    cert.i_index = Some(i_index);
    cert.p_s = p_s;
    cert.q_s = q_s;
    cert.p_t = p_t;
    cert.q_t = q_t;
    cert.lever = lever;
    if lever == 0.0 || p_s <= 0.0 {
        return Ok(cert);
    }
    let mut eta = eta0;
    for _ in 0..80 {
        let eta_t = -lever.signum() * eta;
        let eta_s = -p_t / p_s * eta_t;
        let alpha: Vec<f64> = (0..c.len()).map(|i| 0.5 + if in_s(i) { eta_s } else { eta_t }).collect();
        let v = payoff(c, &alpha);
        if v > payoff_uniform {
            cert.eta_s = eta_s;
            cert.eta_t = eta_t;
            cert.alpha = alpha;
            cert.payoff = v;
            cert.gain = v - floor;
            return Ok(cert);
        }
        eta /= 2.0;
    }
    Ok(cert)
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalPoint {
    pub k: u32,
    pub n: usize,
    pub rho_min: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalReport {
    pub beta: String,
    pub points: Vec<EmpiricalPoint>,
    pub analytic: Vec<BoundRecord>,
}

/// log2(rho_min(n)) / n for n = beta 2^k, next to the analytic bounds.
pub fn empirical_g(beta: &BigRational, ks: &[u32], limits: &Limits) -> Result<EmpiricalReport> {
    let mut points = Vec::new();
    for &k in ks {
        let n_rat = beta * pow2(k as i64);
        let n = as_integer(&n_rat)
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| Error::Domain(format!("beta 2^{k} = {n_rat} is not an integer")))?;
        let r = rho_min(n, limits)?;
        let value = log2_rational(&r.rho) / n as f64;
        points.push(EmpiricalPoint { k, n, rho_min: r.rho.to_string(), value });
    }
    let betaf = rational_to_f64(beta);
    let mut analytic = vec![g_ub_single_block(betaf, 1)?, g_ub_single_block(betaf, 0)?];
    if let Ok(sol) = two_block_solve(betaf, TWO_BLOCK_S) {
        analytic.push(two_block_record(&sol));
    }
    analytic.push(g_lb_uniform());
    Ok(EmpiricalReport { beta: beta.to_string(), points, analytic })
}

pub fn log2_rational(x: &BigRational) -> f64 {
    let bits = |v: &BigInt| -> f64 {
        let b = v.bits();
        let shift = b.saturating_sub(60);
        let top: f64 = rational_to_f64(&BigRational::from_integer(v >> shift));
        top.log2() + shift as f64
    };
    bits(x.numer()) - bits(x.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payoff_examples() {
        assert!((payoff(&[0.4], &[0.5]) + log2_five_quarters()).abs() < 1e-9);
        assert!(payoff(&[1.0], &[0.5]).abs() < 1e-15);
        assert!((payoff(&[0.3, 0.2], &[0.5, 0.5]) + 0.311_278).abs() < 1e-6);
    }

    #[test]
    fn uniform_lower_bound() {
        let r = g_lb_uniform();
        assert!((r.value + log2_five_quarters()).abs() < 1e-9);
        assert!((r.params["x"] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn single_blocks() {
        assert!((g_ub_single_block(1.25, 1).unwrap().value + log2_five_quarters()).abs() < 1e-9);
        assert!((g_ub_single_block(1.7, 1).unwrap().value + 0.3083).abs() < 5e-4);
        assert!((g_ub_single_block(1.95, 0).unwrap().value + 0.30846).abs() < 5e-4);
        assert!(g_ub_single_block(2.0, 0).is_err());
    }

    #[test]
    fn two_block_reference() {
        let sol = two_block_solve(1.80941, TWO_BLOCK_S).unwrap();
        assert!((sol.value + 0.305_758).abs() < 1e-5, "{}", sol.value);
        assert!(sol.is_interior_max);
        assert!(sol.residuals.iter().all(|r| r.abs() <= 1e-10), "{:?}", sol.residuals);
        assert!(two_block_solve(1.5, 1.0 / 1.5).is_err());
    }

    #[test]
    fn inner_max_agrees_with_two_block() {
        let beta = 1.80941;
        let c = [1.0 / beta - TWO_BLOCK_S, 2.0 * TWO_BLOCK_S - 1.0 / beta];
        let im = inner_max(&c, 1, beta).unwrap();
        assert!(im.certified);
        assert!((im.value + 0.305_758).abs() < 1e-5, "{}", im.value);
    }

    #[test]
    fn inner_max_single_block() {
        let beta = 1.6;
        let c0 = 1.0 / (2.0 * beta);
        let im = inner_max(&[c0], 1, beta).unwrap();
        assert!((im.alpha[0] - 0.5).abs() < 1e-12);
        assert!((im.value - g_ub_single_block(beta, 1).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn s_indices() {
        assert_eq!(find_s_indices(&[0.4], &[0.5], 1, 1.25).unwrap(), (0, 0));
        assert_eq!(find_s_indices(&[0.6, 0.4], &[1.0 / 3.0, 1.0], 0, 1.25).unwrap(), (0, 0));
    }

    #[test]
    fn dyadic_levels() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(dyadic_exponent(&r(3, 8)), Some(3));
        assert_eq!(dyadic_exponent(&r(5, 1)), Some(0));
        assert_eq!(dyadic_exponent(&r(1, 3)), None);
        assert!((log2_rational(&r(1, 323)) + 323f64.log2()).abs() < 1e-12);
    }
}
