//! The abundancy index and the product bounds built from it.

use num_bigint::BigUint;

use super::factor::Factorization;
use super::rational::Rational;
use super::sigma::{geometric_sum, sigma};
use crate::error::{Error, Result};

/// `sigma(n) / n`.
pub fn abundancy(f: &Factorization) -> Rational {
    Rational::from(sigma(f)) / Rational::from(f.value())
}

/// `prod p/(p-1)`, the supremum of `sigma(n)/n` over `n` with these primes.
pub fn abundancy_sup(primes: &[u64]) -> Rational {
    primes.iter().map(|&p| Rational::from_ratio(p, p - 1)).product()
}

/// `sigma(p^a) / p^a`.
pub fn prime_power_abundancy(p: u64, a: u32) -> Rational {
    Rational::from(geometric_sum(p, a)) / Rational::from(BigUint::from(p).pow(a))
}

/// `1 - p^-(a+1)`, the factor of `p^a` in the f product.
pub fn f_factor(p: u64, a: u32) -> Rational {
    let power = Rational::from(BigUint::from(p).pow(a + 1));
    Rational::one() - power.recip()
}

/// `prod (1 - p_i^-(a_i+1))`; equals `abundancy / abundancy_sup`.
pub fn f_value(primes: &[u64], exponents: &[u32]) -> Result<Rational> {
    if primes.len() != exponents.len() {
        return Err(Error::LengthMismatch {
            primes: primes.len(),
            exponents: exponents.len(),
        });
    }
    Ok(primes.iter().zip(exponents).map(|(&p, &a)| f_factor(p, a)).product())
}
