//! Entropies, multinomials and the d-ary exponent function.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{domain, precondition, Result};

/// Exact rational used for probabilities and densities.
pub type ExactRational = BigRational;

const SUM_TOL: f64 = 1e-9;

/// h(x) = -x log2 x - (1-x) log2 (1-x), with h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return domain(format!("binary entropy of {x} is undefined"));
    }
    Ok(h(x))
}

/// Binary entropy with the argument clamped into [0, 1].
pub(crate) fn h(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// h'(x) = log2((1-x)/x).
pub(crate) fn h_prime(x: f64) -> f64 {
    ((1.0 - x) / x).log2()
}

/// Shannon entropy of `dist` in base `base`.
pub fn entropy(dist: &[f64], base: u32) -> Result<f64> {
    if base < 2 {
        return domain(format!("entropy base must be at least 2, got {base}"));
    }
    if dist.iter().any(|&p| p < 0.0 || p.is_nan()) {
        return precondition("probabilities must be nonnegative");
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return precondition(format!("probabilities sum to {total}, not 1"));
    }
    let ln_base = (base as f64).ln();
    Ok(dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln() / ln_base)
        .sum())
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// n! / (k_1! ... k_m!).
pub fn multinomial(n: u64, parts: &[u64]) -> Result<BigUint> {
    if parts.iter().sum::<u64>() != n {
        return domain(format!("parts {parts:?} do not sum to {n}"));
    }
    let mut acc = BigUint::one();
    let mut left = n;
    for &k in parts {
        acc *= binomial(left, k);
        left -= k;
    }
    Ok(acc)
}

/// f_d(beta) = d beta log2 d - H(1-(d-1)beta, beta, ..., beta), the exponent
/// of the density of the hard d-adic family.
pub fn f_d(d: u32, beta: f64) -> Result<f64> {
    if d < 2 {
        return domain(format!("arity must be at least 2, got {d}"));
    }
    let df = d as f64;
    let hi = 1.0 / (df - 1.0);
    if !(beta > 0.0 && beta <= hi) {
        return domain(format!("beta = {beta} lies outside (0, {hi}]"));
    }
    let rest = 1.0 - (df - 1.0) * beta;
    let mut ent = (df - 1.0) * beta * (1.0 / beta).log2();
    if rest > 0.0 {
        ent += rest * (1.0 / rest).log2();
    }
    Ok(df * beta * df.log2() - ent)
}

/// d^{-e} as an exact rational.
pub fn inv_pow(d: u32, e: u32) -> BigRational {
    BigRational::new(1.into(), num_bigint::BigInt::from(d).pow(e))
}

/// Exact rational from a finite float.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| crate::Error::Domain(format!("{x} is not finite")))
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_endpoints() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn entropy_of_fifth() {
        // log2 5 - 8/5
        let v = binary_entropy(0.2).unwrap();
        assert!((v - 0.721_928_094_887_362_3).abs() < 1e-12);
    }

    #[test]
    fn shannon_entropy() {
        let v = entropy(&[0.5, 0.25, 0.25], 2).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
        let v = entropy(&[1.0 / 3.0; 3], 3).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(entropy(&[0.5, 0.4], 2).is_err());
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(5, &[1, 1, 3]).unwrap(), BigUint::from(20u32));
        assert_eq!(multinomial(4, &[2, 2]).unwrap(), BigUint::from(6u32));
        assert!(multinomial(4, &[2, 1]).is_err());
        assert_eq!(binomial(20, 10), BigUint::from(184_756u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
    }

    #[test]
    fn f_d_values() {
        let v = f_d(2, 0.2).unwrap();
        assert!((v + 1.25f64.log2()).abs() < 1e-12);
        assert!(f_d(2, 0.0).is_err());
        assert!(f_d(3, 0.6).is_err());
        // at beta = 1/(d-1) only the beta-mass terms remain
        let v = f_d(3, 0.5).unwrap();
        assert!((v - (1.5 * 3f64.log2() - 1.0)).abs() < 1e-12);
    }
}
