use num_bigint::BigUint;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::primes::{is_prime, mul_mod};
use crate::error::{Error, Result};

/// Trial division handles every prime factor below this cutoff.
const TRIAL_CUTOFF: u64 = 1 << 10;

/// Canonical prime-power decomposition: primes strictly increasing, exponents
/// at least one. The empty factorization is the number 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u64, u32)>", into = "Vec<(u64, u32)>")]
pub struct Factorization {
    entries: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn new(entries: Vec<(u64, u32)>) -> Result<Self> {
        for (i, &(p, a)) in entries.iter().enumerate() {
            if !is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            if a == 0 {
                return Err(Error::InvalidArgument(format!("exponent of {p} is zero")));
            }
            if i > 0 && entries[i - 1].0 >= p {
                return Err(Error::InvalidArgument("primes must be strictly increasing".into()));
            }
        }
        Ok(Factorization { entries })
    }

    pub fn one() -> Self {
        Factorization::default()
    }

    pub fn entries(&self) -> &[(u64, u32)] {
        &self.entries
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|&(p, _)| p)
    }

    pub fn exponents(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&(_, a)| a)
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> usize {
        self.entries.len()
    }

    pub fn value(&self) -> BigUint {
        self.entries
            .iter()
            .fold(BigUint::from(1u32), |acc, &(p, a)| acc * BigUint::from(p).pow(a))
    }

    /// Merge two factorizations with disjoint prime sets.
    pub fn disjoint_union(&self, other: &Factorization) -> Result<Factorization> {
        let mut entries: Vec<(u64, u32)> = self.entries.iter().chain(&other.entries).copied().collect();
        entries.sort_unstable();
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("factorizations share a prime".into()));
        }
        Ok(Factorization { entries })
    }
}

impl TryFrom<Vec<(u64, u32)>> for Factorization {
    type Error = Error;

    fn try_from(entries: Vec<(u64, u32)>) -> Result<Self> {
        Factorization::new(entries)
    }
}

impl From<Factorization> for Vec<(u64, u32)> {
    fn from(f: Factorization) -> Self {
        f.entries
    }
}

impl std::fmt::Display for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "1");
        }
        for (i, &(p, a)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if a == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{a}")?;
            }
        }
        Ok(())
    }
}

/// Factor `n` completely. Output is deterministic for a given input.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize expects a positive integer");
    let mut primes = Vec::new();
    let mut rest = n;
    let mut d = 2u64;
    while d < TRIAL_CUTOFF && d * d <= rest {
        while rest.is_multiple_of(d) {
            primes.push(d);
            rest /= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        split_large(rest, &mut primes);
    }
    primes.sort_unstable();
    let mut entries: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match entries.last_mut() {
            Some((q, a)) if *q == p => *a += 1,
            _ => entries.push((p, 1)),
        }
    }
    Factorization { entries }
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let root = super::primes::isqrt(n);
    if root * root == n {
        split_large(root, out);
        split_large(root, out);
        return;
    }
    let d = brent_rho(n);
    split_large(d, out);
    split_large(n / d, out);
}

/// Brent's variant of Pollard rho with a fixed schedule of polynomial
/// constants, so runs are reproducible. `n` must be odd and composite.
fn brent_rho(n: u64) -> u64 {
    for c in 1..u64::MAX {
        let f = |x: u64| ((x as u128 * x as u128 + c as u128) % n as u128) as u64;
        let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
        let (mut x, mut ys);
        let mut g;
        const BATCH: u64 = 128;
        loop {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            loop {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += BATCH;
                if k >= r || g != 1 {
                    break;
                }
            }
            r *= 2;
            if g != 1 {
                break;
            }
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g != 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!("rho exhausted every polynomial constant")
}
