//! Primality, modular exponentiation and prime generation for 64-bit values.
//!
//! `is_prime` is a strong Miller-Rabin test with the first twelve primes as
//! witnesses. That witness set has no strong pseudoprime below
//! 3.3 * 10^24, so the test is exact on the whole `u64` range.

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &SMALL_PRIMES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`, or `None` past the largest 64-bit prime.
pub fn prime_at_or_after(n: u64) -> Option<u64> {
    if n <= 2 {
        return Some(2);
    }
    let mut c = n | 1;
    loop {
        if is_prime(c) {
            return Some(c);
        }
        c = c.checked_add(2)?;
    }
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime(n: u64) -> Option<u64> {
    prime_at_or_after(n.checked_add(1)?)
}

/// Largest prime `<= n`.
pub fn prime_at_or_below(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    if n == 2 {
        return Some(2);
    }
    let mut c = if n.is_multiple_of(2) { n - 1 } else { n };
    while c >= 3 {
        if is_prime(c) {
            return Some(c);
        }
        c -= 2;
    }
    Some(2)
}

/// Largest prime strictly below `n`.
pub fn prev_prime(n: u64) -> Option<u64> {
    prime_at_or_below(n.checked_sub(1)?)
}

/// All primes `<= limit`, generated by a segmented sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    primes_in_range(2, limit)
}

/// Primes in the closed interval `[lo, hi]`.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || lo > hi {
        return Vec::new();
    }
    let lo = lo.max(2);
    let root = isqrt(hi);
    let base = simple_sieve(root);
    let mut out = Vec::new();
    const SEGMENT: u64 = 1 << 18;
    let mut seg_lo = lo;
    let mut mark = vec![false; SEGMENT as usize];
    loop {
        let seg_hi = seg_lo.saturating_add(SEGMENT - 1).min(hi);
        let len = (seg_hi - seg_lo + 1) as usize;
        mark[..len].iter_mut().for_each(|m| *m = true);
        for &p in &base {
            if p * p > seg_hi {
                break;
            }
            let mut start = (seg_lo.div_ceil(p)) * p;
            if start < p * p {
                start = p * p;
            }
            let mut j = start;
            while j <= seg_hi {
                mark[(j - seg_lo) as usize] = false;
                j += p;
            }
        }
        for (i, &m) in mark[..len].iter().enumerate() {
            if m {
                out.push(seg_lo + i as u64);
            }
        }
        if seg_hi == hi {
            break;
        }
        seg_lo = seg_hi + 1;
    }
    out
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x.checked_mul(x).is_none_or(|sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn small_values_match_trial_division() {
        for n in 0..20_000 {
            assert_eq!(is_prime(n), naive(n), "n = {n}");
        }
    }

    #[test]
    fn known_values() {
        assert!(!is_prime(1));
        assert!(is_prime(1093));
        assert!(!is_prime(9_018_009));
        assert!(is_prime(18_446_744_073_709_551_557));
        // strong pseudoprime to bases 2..=37 would need > 3.3e24; spot-check
        // classic Carmichael numbers and base-2 pseudoprimes.
        for n in [561u64, 1105, 1729, 2047, 3215031751, 4759123141, 1122004669633] {
            assert!(!is_prime(n), "{n}");
        }
    }

    #[test]
    fn neighbours() {
        assert_eq!(next_prime(23), Some(29));
        assert_eq!(prime_at_or_after(29), Some(29));
        assert_eq!(prev_prime(29), Some(23));
        assert_eq!(prime_at_or_below(200), Some(199));
        assert_eq!(prime_at_or_below(1), None);
        assert_eq!(next_prime(u64::MAX - 1), None);
    }

    #[test]
    fn segmented_sieve_agrees() {
        let all = primes_up_to(1_000_000);
        assert_eq!(all.len(), 78_498);
        let window = primes_in_range(999_000, 1_001_000);
        assert!(window.iter().all(|&p| is_prime(p)));
        let expected = (999_000..=1_001_000).filter(|&n| is_prime(n)).count();
        assert_eq!(window.len(), expected);
    }

    #[test]
    fn isqrt_edges() {
        assert_eq!(isqrt(u64::MAX), 4_294_967_295);
        assert_eq!(isqrt(99), 9);
        assert_eq!(isqrt(100), 10);
    }
}
