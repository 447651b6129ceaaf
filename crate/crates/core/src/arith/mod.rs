//! Exact integer and rational arithmetic underneath everything else.

pub mod abundancy;
pub mod factor;
pub mod order;
pub mod primes;
pub mod rational;
pub mod sigma;

pub use abundancy::{abundancy, abundancy_sup, f_factor, f_value, prime_power_abundancy};
pub use factor::{factorize, Factorization};
pub use order::{euler_phi, multiplicative_order, order_table};
pub use primes::{
    is_prime, next_prime, pow_mod, prev_prime, prime_at_or_after, prime_at_or_below, primes_in_range, primes_up_to,
};
pub use rational::{DecimalMode, Rational};
pub use sigma::{sigma, sigma_prime_power, sigma_u64};
