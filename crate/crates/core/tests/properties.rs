use dpn_core::arith::{
    abundancy, abundancy_sup, f_value, factorize, is_prime, multiplicative_order, primes_up_to, sigma, sigma_u64,
    Factorization, Rational,
};
use dpn_core::classify::classify;
use dpn_core::eliminator::{g_from_primes, q_can_divide_sigma_even_exp};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn divisor_sum_naive(n: u64) -> u128 {
    let mut s = 0u128;
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            s += d as u128;
            if d != n / d {
                s += (n / d) as u128;
            }
        }
        d += 1;
    }
    s
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #[test]
    fn sigma_is_multiplicative(a in 1u64..200_000, b in 1u64..200_000) {
        prop_assume!(gcd(a, b) == 1);
        prop_assert_eq!(sigma_u64(a * b), sigma_u64(a) * sigma_u64(b));
    }

    #[test]
    fn sigma_matches_divisor_enumeration(n in 1u64..2_000_000) {
        prop_assert_eq!(sigma_u64(n), divisor_sum_naive(n));
    }

    #[test]
    fn factorization_round_trips(n in 1u64..u64::MAX) {
        let f = factorize(n);
        prop_assert_eq!(f.value(), BigUint::from(n));
        prop_assert!(f.primes().all(is_prime));
    }

    #[test]
    fn f_never_exceeds_one_and_falls_with_exponent(p_idx in 1usize..40, a in 1u32..12) {
        let p = primes_up_to(200)[p_idx];
        let lo = f_value(&[p], &[a]).unwrap();
        let hi = f_value(&[p], &[a + 2]).unwrap();
        prop_assert!(lo < hi);
        prop_assert!(hi < Rational::one());
    }
}

/// `sigma(n)/n = S * f` on random odd factorizations, exactly.
#[test]
fn abundancy_splits_into_s_times_f() {
    let primes: Vec<u64> = primes_up_to(2000).into_iter().skip(1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=6);
        let mut ps: Vec<u64> = primes.choose_multiple(&mut rng, k).copied().collect();
        ps.sort_unstable();
        let exps: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=9)).collect();
        let f = Factorization::new(ps.iter().copied().zip(exps.iter().copied()).collect()).unwrap();
        let lhs = Rational::new(sigma(&f), f.value()).unwrap();
        assert_eq!(lhs, abundancy(&f));
        assert_eq!(lhs, abundancy_sup(&ps) * f_value(&ps, &exps).unwrap(), "{f:?}");
    }
}

/// Independent oracle: try every even exponent through two full periods.
fn q_divides_some_even_sigma(p: u64, q: u64) -> bool {
    let ord = multiplicative_order(p, q).unwrap();
    let limit = 2 * q * ord;
    let (mut term, mut sum) = (1u64, 1u64);
    for a in 1..=limit {
        term = term * p % q;
        sum = (sum + term) % q;
        if a % 2 == 0 && sum == 0 {
            return true;
        }
    }
    false
}

#[test]
fn q_can_divide_matches_brute_force() {
    let primes = primes_up_to(60);
    let mut checked = 0;
    for &q in primes.iter().filter(|&&q| q > 2) {
        for &p in &primes {
            if p == q {
                assert!(q_can_divide_sigma_even_exp(p, q).is_err());
                continue;
            }
            assert_eq!(
                q_can_divide_sigma_even_exp(p, q).unwrap(),
                q_divides_some_even_sigma(p, q),
                "p={p} q={q}"
            );
            checked += 1;
        }
    }
    assert!(checked > 200);
}

/// On an actual solution the two sides of `f = (2 - 1/D) prod (p-1)/p` agree.
#[test]
fn f_equals_g_on_the_known_solution() {
    let rec = classify(9_018_009).deficient_perfect.unwrap();
    let ps: Vec<u64> = rec.factorization.primes().collect();
    let es: Vec<u32> = rec.factorization.exponents().collect();
    assert_eq!(f_value(&ps, &es).unwrap(), g_from_primes(rec.complement, &ps).unwrap());
}
