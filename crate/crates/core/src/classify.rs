//! Perfect / deficient / abundant classification and the divisor witnesses
//! for the deficient-perfect, near-perfect and almost-perfect classes.

use serde::{Deserialize, Serialize};

use crate::arith::{abundancy, factorize, sigma_u64, Factorization, Rational};

/// A verified deficient perfect number: `sigma(n) = 2n - d` with `d | n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpnRecord {
    pub n: u64,
    pub factorization: Factorization,
    /// Deficient divisor.
    pub d: u64,
    /// Complement `n / d`.
    #[serde(rename = "D")]
    pub complement: u64,
}

impl DpnRecord {
    /// `n = 1` is the only case with `d = n`.
    pub fn is_degenerate(&self) -> bool {
        self.d == self.n
    }

    /// Re-derive every defining identity from scratch.
    pub fn verify(&self) -> bool {
        let n = self.n as u128;
        if self.n == 0 || self.d == 0 || !self.n.is_multiple_of(self.d) || self.n / self.d != self.complement {
            return false;
        }
        if self.factorization != factorize(self.n) {
            return false;
        }
        let sigma = sigma_u64(self.n);
        if sigma + self.d as u128 != 2 * n {
            return false;
        }
        // sigma(n)/n + 1/D = 2
        abundancy(&self.factorization) + Rational::from_ratio(1, self.complement) == Rational::from(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Deficient,
    Perfect,
    Abundant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub n: u64,
    pub sigma: u128,
    pub kind: Kind,
    pub deficient_perfect: Option<DpnRecord>,
    /// Redundant divisor `d` with `sigma(n) = 2n + d`, `d` a proper divisor.
    pub near_perfect_divisor: Option<u64>,
    pub almost_perfect: bool,
}

pub fn classify(n: u64) -> Classification {
    assert!(n >= 1, "classify expects a positive integer");
    let sigma = sigma_u64(n);
    classify_with_sigma(n, sigma)
}

/// Classification when `sigma(n)` is already known.
pub(crate) fn classify_with_sigma(n: u64, sigma: u128) -> Classification {
    let twice = 2 * n as u128;
    let kind = match sigma.cmp(&twice) {
        std::cmp::Ordering::Less => Kind::Deficient,
        std::cmp::Ordering::Equal => Kind::Perfect,
        std::cmp::Ordering::Greater => Kind::Abundant,
    };
    let deficient_perfect = match kind {
        Kind::Deficient => {
            let delta = (twice - sigma) as u64;
            n.is_multiple_of(delta).then(|| DpnRecord {
                n,
                factorization: factorize(n),
                d: delta,
                complement: n / delta,
            })
        }
        _ => None,
    };
    let near_perfect_divisor = match kind {
        Kind::Abundant => {
            let delta = sigma - twice;
            (delta < n as u128 && (n as u128).is_multiple_of(delta)).then_some(delta as u64)
        }
        _ => None,
    };
    let almost_perfect = deficient_perfect.as_ref().is_some_and(|r| r.d == 1);
    Classification {
        n,
        sigma,
        kind,
        deficient_perfect,
        near_perfect_divisor,
        almost_perfect,
    }
}

pub fn has_all_even_exponents(f: &Factorization) -> bool {
    f.exponents().all(|a| a % 2 == 0)
}
