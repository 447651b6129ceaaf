use num_integer::Integer;

use super::factor::factorize;
use super::primes::pow_mod;
use crate::error::{Error, Result};

/// Euler's totient.
pub fn euler_phi(m: u64) -> u64 {
    factorize(m).entries().iter().fold(m, |acc, &(p, _)| acc / p * (p - 1))
}

/// Least `k >= 1` with `a^k = 1 (mod m)`.
///
/// Starts from `phi(m)` and strips prime factors while the power stays 1, so
/// the cost is a handful of modular exponentiations regardless of `m`.
pub fn multiplicative_order(a: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("modulus {m} < 2")));
    }
    let a = a % m;
    if a.gcd(&m) != 1 {
        return Err(Error::NotCoprime { a, m });
    }
    let mut order = euler_phi(m);
    for &(q, _) in factorize(order).entries() {
        while order.is_multiple_of(q) && pow_mod(a, order / q, m) == 1 {
            order /= q;
        }
    }
    Ok(order)
}

/// `ord_m(p)` for every modulus (rows) and prime (columns); `None` where
/// `gcd(p, m) != 1`.
pub fn order_table(primes: &[u64], moduli: &[u64]) -> Result<Vec<Vec<Option<u64>>>> {
    moduli
        .iter()
        .map(|&m| {
            primes
                .iter()
                .map(|&p| match multiplicative_order(p, m) {
                    Ok(k) => Ok(Some(k)),
                    Err(Error::NotCoprime { .. }) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect()
}
