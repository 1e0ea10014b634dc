//! Closed forms for the d-ary game and the hard d-adic family.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::distributions::{checked_pow, generalized_tail, DAdicDistribution};
use crate::error::{domain, Error, Result};
use crate::hitters::exact_min_hitter;
use crate::numerics::{f_d, rational_to_f64};
use crate::splitting::{rho_min, rho_min_d};
use crate::Limits;

fn check_arity(d: u32) -> Result<()> {
    if d < 2 {
        return domain(format!("arity must be at least 2, got {d}"));
    }
    Ok(())
}

/// d^{d/(d-1)}
fn big_d(d: u32) -> f64 {
    let df = d as f64;
    df.powf(df / (df - 1.0))
}

/// 1 + (d-1) / d^{d/(d-1)}; 5/4 for d = 2.
pub fn magic_constant(d: u32) -> Result<f64> {
    check_arity(d)?;
    Ok(1.0 + (d as f64 - 1.0) / big_d(d))
}

/// The minimizer 1 / (d^{d/(d-1)} - 1 + d) of f_d.
pub fn optimal_beta(d: u32) -> Result<f64> {
    check_arity(d)?;
    Ok(1.0 / (big_d(d) - 1.0 + d as f64))
}

/// log2(D / (D + d - 1)) with D = d^{d/(d-1)}.
pub fn f_opt(d: u32) -> Result<f64> {
    check_arity(d)?;
    let dd = big_d(d);
    Ok((dd / (dd + d as f64 - 1.0)).log2())
}

#[derive(Clone, Debug, Serialize)]
pub struct DaryBoundReport {
    pub d: u32,
    #[serde(rename = "magic")]
    pub magic_constant: f64,
    #[serde(rename = "beta")]
    pub optimal_beta: f64,
    pub f_opt: f64,
    pub two_minus_mc: f64,
}

pub fn dary_report(d: u32) -> Result<DaryBoundReport> {
    let magic_constant = magic_constant(d)?;
    Ok(DaryBoundReport {
        d,
        magic_constant,
        optimal_beta: optimal_beta(d)?,
        f_opt: f_opt(d)?,
        two_minus_mc: 2.0 - magic_constant,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HardDistribution {
    pub d: u32,
    pub a: u32,
    pub n: usize,
    /// d^a / (d n) as an exact rational string
    pub beta_prime: String,
    pub heavy: usize,
    pub tail_len: usize,
    pub padding: usize,
    #[serde(skip)]
    pub mu: DAdicDistribution,
}

/// d^a - 1 elements of probability d^{-a} followed by a tail of mass d^{-a},
/// built by repeatedly splitting the lightest element into d equal parts,
/// for n = floor(d^a / (d beta*)). When the tail length is not 1 mod (d-1)
/// the last few slots are zeros.
pub fn hard_distribution(d: u32, a: u32) -> Result<HardDistribution> {
    check_arity(d)?;
    if a == 0 {
        return domain("a must be positive");
    }
    let da = checked_pow(d, a).map_err(|_| Error::Domain(format!("{d}^{a} is too large")))?;
    let n = if d == 2 {
        // beta* = 1/5 exactly
        (da * 5 / 2) as usize
    } else {
        (da as f64 / (d as f64 * optimal_beta(d)?) + 1e-9).floor() as usize
    };
    if n < d as usize + 1 {
        return domain(format!("n = {n} is below d + 1 for d = {d}, a = {a}"));
    }
    let heavy = (da - 1) as usize;
    if heavy >= n {
        return domain(format!("no room for a tail at d = {d}, a = {a}"));
    }
    let slots = n - heavy;
    let step = d as usize - 1;
    let tail_len = 1 + (slots - 1) / step * step;
    let mut tail = vec![a];
    while tail.len() < tail_len {
        let e = tail.pop().expect("nonempty tail");
        tail.extend(std::iter::repeat(e + 1).take(d as usize));
    }
    let mut exps: Vec<Option<u32>> = vec![Some(a); heavy];
    exps.extend(tail.into_iter().map(Some));
    exps.resize(n, None);
    let mu = DAdicDistribution::new(d, exps)?;
    let beta_prime = BigRational::new(BigInt::from(da), BigInt::from(d as u64 * n as u64));
    Ok(HardDistribution { d, a, n, beta_prime: beta_prime.to_string(), heavy, tail_len, padding: slots - tail_len, mu })
}

/// Checks that the generalized tail of the hard distribution is the
/// constructed one.
pub fn hard_tail_matches(hd: &HardDistribution) -> Result<bool> {
    let t = generalized_tail(&hd.mu)?;
    let expected: Vec<usize> = (hd.heavy..hd.heavy + hd.tail_len).collect();
    Ok(t.a == hd.a && t.members == expected)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    pub n: usize,
    pub d: u32,
    pub rho_min: String,
    pub q: usize,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Computes q^(d)(n) exactly and checks
/// 1/rho_min <= q <= n^2 log2(n) / rho_min for d = 2, n >= 3, and
/// 1/rho_min <= q <= 2 n^{2d} ln(n) / rho_min otherwise.
pub fn verify_reduction(n: usize, d: u32, limits: &Limits) -> Result<ReductionReport> {
    check_arity(d)?;
    let q = exact_min_hitter(n, d, limits)?.size;
    let (rho, factor) = if d == 2 && n >= 3 {
        let nf = n as f64;
        (rho_min(n, limits)?.rho, nf * nf * nf.log2())
    } else {
        let nf = n as f64;
        (rho_min_d(n, d, limits)?.rho, 2.0 * nf.powi(2 * d as i32) * nf.ln())
    };
    if rho.is_zero() {
        return Err(Error::Internal("zero minimum density".into()));
    }
    let inv = rational_to_f64(&rho.recip());
    let lower = inv;
    let upper = factor * inv;
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    Ok(ReductionReport {
        n,
        d,
        rho_min: rho.to_string(),
        q,
        lower,
        upper,
        holds: lower <= qf + 1e-9 && qf <= upper + 1e-9,
    })
}

/// f_d at beta, re-exported for the d-ary reports.
pub fn f_d_at(d: u32, beta: f64) -> Result<f64> {
    f_d(d, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_constants() {
        assert_eq!(magic_constant(2).unwrap(), 1.25);
        assert!((optimal_beta(2).unwrap() - 0.2).abs() < 1e-15);
        assert!((f_opt(2).unwrap() + 1.25f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn ternary_constants() {
        assert!((magic_constant(3).unwrap() - 1.384_900).abs() < 1e-5);
        assert!((optimal_beta(3).unwrap() - 0.138_963).abs() < 1e-6);
    }

    #[test]
    fn hard_examples() {
        let h = hard_distribution(2, 3).unwrap();
        assert_eq!((h.n, h.heavy, h.tail_len), (20, 7, 13));
        assert!(hard_tail_matches(&h).unwrap());
        let h = hard_distribution(2, 1).unwrap();
        assert_eq!((h.n, h.heavy, h.tail_len), (5, 1, 4));
        let exps: Vec<_> = h.mu.exps().iter().map(|e| e.unwrap()).collect();
        assert_eq!(exps, vec![1, 2, 3, 4, 4]);
        let h = hard_distribution(3, 2).unwrap();
        assert_eq!(h.n, 21);
        assert!(hard_tail_matches(&h).unwrap());
    }
}
