use num_bigint::BigUint;

use super::factor::Factorization;
use super::primes::is_prime;
use crate::error::{Error, Result};

/// `1 + p + ... + p^a`.
pub fn sigma_prime_power(p: u64, a: u32) -> Result<BigUint> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(geometric_sum(p, a))
}

pub(crate) fn geometric_sum(p: u64, a: u32) -> BigUint {
    let p_big = BigUint::from(p);
    (p_big.pow(a + 1) - 1u32) / (p - 1)
}

/// Sum of divisors, multiplicative over the prime powers of `f`.
pub fn sigma(f: &Factorization) -> BigUint {
    f.entries()
        .iter()
        .fold(BigUint::from(1u32), |acc, &(p, a)| acc * geometric_sum(p, a))
}

/// `sigma(p^a)` in 128-bit arithmetic, `None` on overflow.
pub fn sigma_prime_power_u128(p: u64, a: u32) -> Option<u128> {
    let mut term: u128 = 1;
    let mut sum: u128 = 1;
    for _ in 0..a {
        term = term.checked_mul(p as u128)?;
        sum = sum.checked_add(term)?;
    }
    Some(sum)
}

/// `sigma(n)` for a 64-bit `n`; never overflows since `sigma(n) < 2^70`.
pub fn sigma_u64(n: u64) -> u128 {
    let f = super::factor::factorize(n);
    f.entries()
        .iter()
        .map(|&(p, a)| sigma_prime_power_u128(p, a).expect("fits: p^a <= n < 2^64"))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::factor::factorize;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(sigma_prime_power(3, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(sigma_prime_power(3, 2).unwrap(), BigUint::from(13u32));
        assert_eq!(sigma_prime_power(3, 6).unwrap(), BigUint::from(1093u32));
        assert!(matches!(sigma_prime_power(9, 2), Err(Error::NotPrime(9))));
        assert_eq!(sigma(&Factorization::one()), BigUint::from(1u32));
        assert_eq!(sigma(&factorize(9_018_009)), BigUint::from(18_035_199u32));
        assert_eq!(sigma(&factorize(2)), BigUint::from(3u32));
        assert_eq!(sigma_u64(9_018_009), 18_035_199);
    }

    #[test]
    fn agrees_with_naive_summation() {
        for p in crate::arith::primes::primes_up_to(100) {
            for a in 0..=12u32 {
                let naive: BigUint = (0..=a).map(|i| BigUint::from(p).pow(i)).sum();
                assert_eq!(sigma_prime_power(p, a).unwrap(), naive, "p={p} a={a}");
            }
        }
    }

    proptest! {
        #[test]
        fn multiplicative(m in 1u64..1_000_000, n in 1u64..1_000_000) {
            let (fm, fn_) = (factorize(m), factorize(n));
            if let Ok(joint) = fm.disjoint_union(&fn_) {
                prop_assert_eq!(sigma(&joint), sigma(&fm) * sigma(&fn_));
            }
        }
    }
}
