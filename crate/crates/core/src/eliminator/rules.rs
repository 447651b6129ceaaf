//! The elimination rules. Each rule either returns a witness that refutes a
//! case (or a slice of it) or reports that it has nothing to say.
//!
//! Every witness carries the exact quantities a checker needs to confirm the
//! conclusion with integer and rational arithmetic only.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::case::{CaseSpec, ExponentRange, SlotBounds};
use crate::arith::{
    f_value, factorize, is_prime, multiplicative_order, pow_mod, prev_prime, prime_at_or_after, prime_power_abundancy,
    primes_up_to, Rational,
};
use crate::error::{Error, Result};

/// Largest number of complements R2 will branch into.
pub const MAX_D_VALUES: usize = 64;

/// Primes below this are found by trial division when factoring `sigma(p^a)`.
pub const SIGMA_TRIAL_LIMIT: u64 = 1_000_000;

fn two() -> Rational {
    Rational::from(2)
}

fn effective_or_err(case: &CaseSpec) -> Result<Vec<SlotBounds>> {
    case.effective()
        .ok_or_else(|| Error::InvalidCase(format!("no admissible primes for {case}")))
}

// ---------------------------------------------------------------- R1

/// `sigma(n)/n + 1/D` bounded above by `ceiling + 1/d_min`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbundancyWitness {
    /// Smallest admissible prime of each slot.
    pub primes: Vec<u64>,
    /// Exponent caps used in place of the `p/(p-1)` supremum.
    pub exponent_caps: Vec<Option<u32>>,
    pub ceiling: Rational,
    pub d_min: u64,
    pub total: Rational,
    /// True when the ceiling is a supremum that is never attained.
    pub strict: bool,
}

impl AbundancyWitness {
    pub fn eliminates(&self) -> bool {
        self.total < two() || (self.total == two() && self.strict)
    }
}

/// Evaluate the abundancy bound of a case without deciding anything.
pub fn abundancy_bound(case: &CaseSpec, d_min: u64) -> Result<AbundancyWitness> {
    if d_min == 0 {
        return Err(Error::InvalidArgument("d_min must be positive".into()));
    }
    let eff = effective_or_err(case)?;
    let (ceiling, strict) = case.abundancy_ceiling(&eff);
    let total = &ceiling + &Rational::from_ratio(1, d_min);
    Ok(AbundancyWitness {
        primes: eff.iter().map(|b| b.min).collect(),
        exponent_caps: case.exponents.iter().map(|e| e.ub).collect(),
        ceiling,
        d_min,
        total,
        strict,
    })
}

/// Eliminate the whole case when even the largest possible abundancy plus
/// `1/d_min` falls short of 2.
pub fn r1_abundancy_eliminate(case: &CaseSpec, d_min: u64) -> Result<Option<AbundancyWitness>> {
    let w = abundancy_bound(case, d_min)?;
    Ok(w.eliminates().then_some(w))
}

/// R1 at the case's own lower bound for `D`.
pub(crate) fn r1_default(case: &CaseSpec) -> Result<Option<AbundancyWitness>> {
    let eff = effective_or_err(case)?;
    r1_abundancy_eliminate(case, case.d_lower_bound(&eff))
}

// ---------------------------------------------------------------- slot bounds

/// The slot can be cut to `[min, bound]`: putting `next_prime(bound)` in the
/// slot (later slots at the next primes above it) triggers R1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundWitness {
    pub slot: usize,
    pub bound: u64,
    pub first_excluded: u64,
    pub test: AbundancyWitness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotBound {
    /// R1 never fires however large the prime.
    Unbounded,
    /// R1 does not fire anywhere in the slot's current range.
    WithinRange,
    /// R1 fires already at the slot's smallest prime.
    Empty,
    Bounded(BoundWitness),
}

impl SlotBound {
    pub fn bound(&self) -> Option<u64> {
        match self {
            SlotBound::Bounded(w) => Some(w.bound),
            _ => None,
        }
    }
}

fn slot_factor(b: &SlotBounds, e: &ExponentRange) -> Rational {
    match e.ub {
        Some(ub) => prime_power_abundancy(b.min, ub),
        None => Rational::from_ratio(b.min, b.min - 1),
    }
}

/// Largest prime the slot can hold before R1 eliminates the case.
pub fn bound_prime_slot(case: &CaseSpec, slot: usize) -> Result<SlotBound> {
    if slot >= case.k {
        return Err(Error::InvalidArgument(format!("slot index {slot} out of range")));
    }
    let eff = effective_or_err(case)?;
    let SlotBounds { min, max } = eff[slot];
    let hypothetical = |p: u64| -> Option<AbundancyWitness> {
        let h = case.clone().with_fixed(slot, p);
        let e = h.effective()?;
        abundancy_bound(&h, h.d_lower_bound(&e)).ok()
    };
    let fires = |p: u64| hypothetical(p).is_none_or(|w| w.eliminates());

    if fires(min) {
        return Ok(SlotBound::Empty);
    }
    let hi = match max {
        Some(m) => {
            if !fires(m) {
                return Ok(SlotBound::WithinRange);
            }
            m
        }
        None => {
            // Limit of the bound as the slot prime grows: earlier slots stay at
            // their minima, this slot and later ones tend to factor 1.
            let prefix: Rational = eff[..slot]
                .iter()
                .zip(&case.exponents)
                .map(|(b, e)| slot_factor(b, e))
                .product();
            let d_term = if slot == 0 && case.fixed_d().is_none() {
                Rational::zero()
            } else {
                Rational::from_ratio(1, case.d_lower_bound(&eff))
            };
            if prefix + d_term >= two() {
                return Ok(SlotBound::Unbounded);
            }
            let mut x = min;
            loop {
                x = x
                    .checked_mul(2)
                    .ok_or_else(|| Error::Inapplicable("slot bound search overflowed".into()))?;
                let p =
                    prime_at_or_after(x).ok_or_else(|| Error::Inapplicable("slot bound search overflowed".into()))?;
                if fires(p) {
                    break p;
                }
            }
        }
    };
    // Smallest prime in (min, hi] that fires.
    let (mut lo_x, mut hi_x) = (min, hi);
    while hi_x - lo_x > 1 {
        let mid = lo_x + (hi_x - lo_x) / 2;
        let p = prime_at_or_after(mid).expect("below a known prime");
        if fires(p) {
            hi_x = mid;
        } else {
            lo_x = mid;
        }
    }
    let first_excluded = prime_at_or_after(hi_x).expect("below a known prime");
    let bound = prev_prime(first_excluded).expect("first_excluded > min");
    let test = hypothetical(first_excluded).ok_or_else(|| Error::Inapplicable("bound witness case is empty".into()))?;
    Ok(SlotBound::Bounded(BoundWitness {
        slot,
        bound,
        first_excluded,
        test,
    }))
}

// ---------------------------------------------------------------- R2

/// Every `D >= threshold` satisfies `ceiling + 1/D < 2`, so only the listed
/// smaller complements remain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DBoundWitness {
    pub ceiling: Rational,
    pub strict: bool,
    pub threshold: u64,
    pub values: Vec<u64>,
}

/// Products of the fixed slot primes (respecting exponent caps) in `(1, limit)`.
pub(crate) fn admissible_d_below(case: &CaseSpec, limit: u64, cap: usize) -> Option<Vec<u64>> {
    let mut out = vec![1u64];
    for (i, p) in case.fixed_primes() {
        let ub = case.exponents[i].ub;
        let mut next = Vec::new();
        for &d in &out {
            let mut x = d;
            let mut e = 0u32;
            while x < limit && ub.is_none_or(|u| e <= u) {
                next.push(x);
                if next.len() > cap + 1 {
                    return None;
                }
                match x.checked_mul(p) {
                    Some(y) => x = y,
                    None => break,
                }
                e += 1;
            }
        }
        out = next;
    }
    out.retain(|&d| d > 1);
    if let Some(ds) = &case.d_candidates {
        out.retain(|d| ds.binary_search(d).is_ok());
    }
    out.sort_unstable();
    (out.len() <= cap).then_some(out)
}

/// Complements left after `S + 1/D < 2` removes every large `D`.
///
/// Applies when the abundancy ceiling is below 2 and every open slot already
/// starts at or above the threshold, so `D` can only use fixed primes.
pub fn feasible_d_values(case: &CaseSpec) -> Result<Option<DBoundWitness>> {
    let eff = effective_or_err(case)?;
    let (ceiling, strict) = case.abundancy_ceiling(&eff);
    if ceiling >= two() {
        return Ok(None);
    }
    let x = (two() - &ceiling).recip();
    let t = if strict && x.is_integer() {
        x.floor()
    } else {
        x.floor() + 1
    };
    let Some(threshold) = t.to_u64() else {
        return Ok(None);
    };
    if case.open_slots().any(|j| eff[j].min < threshold) {
        return Ok(None);
    }
    let Some(values) = admissible_d_below(case, threshold, MAX_D_VALUES) else {
        return Ok(None);
    };
    Ok(Some(DBoundWitness {
        ceiling,
        strict,
        threshold,
        values,
    }))
}

// ---------------------------------------------------------------- R3

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimeChoice {
    Min,
    Max,
}

/// `(2 - 1/D) * prod (p-1)/p`.
pub fn g_from_primes(d: u64, primes: &[u64]) -> Result<Rational> {
    if d == 0 {
        return Err(Error::InvalidArgument("D must be positive".into()));
    }
    let lead = two() - Rational::from_ratio(1, d);
    Ok(primes
        .iter()
        .map(|&p| Rational::from_ratio(p - 1, p))
        .fold(lead, |acc, x| acc * x))
}

fn check_d_admissible(case: &CaseSpec, eff: &[SlotBounds], d: u64) -> Result<()> {
    if d == 0 || d.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("D = {d} is not a positive odd integer")));
    }
    for &(r, _) in factorize(d).entries() {
        let fixed = case.fixed_primes().any(|(_, p)| p == r);
        let open = case.open_slots().any(|j| eff[j].contains(r));
        if !fixed && !open {
            return Err(Error::InvalidArgument(format!(
                "D = {d} uses prime {r} outside the case"
            )));
        }
    }
    Ok(())
}

/// g at the chosen extreme of every slot. An unbounded slot contributes its
/// supremum 1 under `Max`.
pub fn g_value(case: &CaseSpec, d: u64, choose: PrimeChoice) -> Result<Rational> {
    let eff = effective_or_err(case)?;
    check_d_admissible(case, &eff, d)?;
    let primes: Vec<u64> = eff
        .iter()
        .filter_map(|b| match choose {
            PrimeChoice::Min => Some(b.min),
            PrimeChoice::Max => b.max,
        })
        .collect();
    g_from_primes(d, &primes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum GapWitness {
    /// `f` at its smallest exceeds `g` at its largest.
    FgGap {
        f_primes: Vec<u64>,
        f_exponents: Vec<u32>,
        f_min: Rational,
        g_primes: Vec<Option<u64>>,
        g_max: Rational,
    },
    /// `sigma(n)/n` is at least the product over bounded slots at their
    /// largest prime and smallest exponent, which already exceeds `2 - 1/D`.
    Floor {
        primes: Vec<Option<u64>>,
        exponents: Vec<u32>,
        floor: Rational,
        target: Rational,
        strict: bool,
    },
}

/// Compare the smallest possible `f` with the largest possible `g`; fall back
/// to an abundancy floor over the bounded slots.
pub fn r3_fg_gap_eliminate(case: &CaseSpec, d: u64) -> Result<Option<GapWitness>> {
    let eff = effective_or_err(case)?;
    check_d_admissible(case, &eff, d)?;
    let f_primes: Vec<u64> = eff.iter().map(|b| b.min).collect();
    let f_exponents: Vec<u32> = case.exponents.iter().map(|e| e.lb).collect();
    let f_min = f_value(&f_primes, &f_exponents)?;
    let g_primes: Vec<Option<u64>> = eff.iter().map(|b| b.max).collect();
    let g_max = g_value(case, d, PrimeChoice::Max)?;
    if f_min > g_max {
        return Ok(Some(GapWitness::FgGap {
            f_primes,
            f_exponents,
            f_min,
            g_primes,
            g_max,
        }));
    }
    let floor: Rational = g_primes
        .iter()
        .zip(&f_exponents)
        .filter_map(|(p, &a)| p.map(|p| prime_power_abundancy(p, a)))
        .product();
    let strict = g_primes.iter().any(Option::is_none);
    let target = two() - Rational::from_ratio(1, d);
    if floor > target || (floor == target && strict) {
        return Ok(Some(GapWitness::Floor {
            primes: g_primes,
            exponents: f_exponents,
            floor,
            target,
            strict,
        }));
    }
    Ok(None)
}

// ---------------------------------------------------------------- R4

/// Whether `q` divides `sigma(p^a)` for some even `a >= 2`.
pub fn q_can_divide_sigma_even_exp(p: u64, q: u64) -> Result<bool> {
    if p == q {
        return Err(Error::InvalidArgument(format!("p = q = {p}")));
    }
    if q < 3 || !is_prime(q) {
        return Err(Error::InvalidArgument(format!("{q} is not an odd prime")));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p % q == 1 {
        return Ok(true);
    }
    let ord = multiplicative_order(p, q)?;
    Ok(ord % 2 == 1 && ord > 1)
}

/// `sigma(p^a) mod m`.
pub fn sigma_mod(p: u64, a: u32, m: u64) -> u64 {
    let mut acc = 0u64;
    let mut term = 1 % m;
    for _ in 0..=a {
        acc = (acc + term) % m;
        term = ((term as u128 * p as u128) % m as u128) as u64;
    }
    acc
}

/// One line of an order table: `modulus` never divides `sigma(prime^a)` for
/// the admissible `a`. Either `order` is even, or every residue is listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRow {
    pub prime: u64,
    pub modulus: u64,
    pub order: u64,
    pub exponents: ExponentRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residues: Option<Vec<(u32, u64)>>,
}

/// Build the row proving `q` never divides `sigma(p^a)`, if that holds.
pub(crate) fn order_row(p: u64, q: u64, exps: ExponentRange) -> Result<Option<OrderRow>> {
    let order = multiplicative_order(p, q)?;
    let row = |residues| OrderRow {
        prime: p,
        modulus: q,
        order,
        exponents: exps,
        residues,
    };
    if order % 2 == 0 {
        return Ok(Some(row(None)));
    }
    let Some(values) = exps.values() else {
        return Ok(None);
    };
    let residues: Vec<(u32, u64)> = values.map(|a| (a, sigma_mod(p, a, q))).collect();
    if residues.iter().all(|&(_, r)| r != 0) {
        Ok(Some(row(Some(residues))))
    } else {
        Ok(None)
    }
}

/// Why a prime must divide `sigma(n)` in `sigma(n) * D = (2D - 1) * n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "because", rename_all = "snake_case")]
pub enum Requirement {
    /// Divides `2D - 1` and is not a prime of `n`.
    DividesTwoDMinusOne,
    /// A slot prime whose exponent in `n` exceeds its exponent in `D`.
    SlotPrime { valuation_in_d: u32, exponent_lb: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ParityWitness {
    /// `q` must divide `sigma(n)` but divides no `sigma(p_i^a_i)`.
    Modulus {
        q: u64,
        requirement: Requirement,
        rows: Vec<OrderRow>,
    },
    /// `sigma(prime^a) > 1` has no prime factor the equation can absorb.
    Slot { prime: u64, rows: Vec<OrderRow> },
}

pub(crate) fn valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

fn fixed_tuple(case: &CaseSpec) -> Result<Vec<u64>> {
    case.slots
        .iter()
        .map(|s| s.fixed())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Inapplicable("every slot must be fixed".into()))
}

/// Primes forced to divide `sigma(n)` for a fully fixed case.
pub fn required_primes(case: &CaseSpec, d: u64) -> Result<Vec<(u64, Requirement)>> {
    let primes = fixed_tuple(case)?;
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("D = {d} is not an odd integer > 1")));
    }
    let mut out: Vec<(u64, Requirement)> = factorize(2 * d - 1)
        .primes()
        .filter(|r| !primes.contains(r))
        .map(|r| (r, Requirement::DividesTwoDMinusOne))
        .collect();
    for (i, &p) in primes.iter().enumerate() {
        let v = valuation(d, p);
        let lb = case.exponents[i].lb;
        if lb > v {
            out.push((
                p,
                Requirement::SlotPrime {
                    valuation_in_d: v,
                    exponent_lb: lb,
                },
            ));
        }
    }
    out.sort_unstable_by_key(|&(q, _)| q);
    Ok(out)
}

/// Refute a fully fixed case because the required prime `q` divides none of
/// the `sigma(p_i^a_i)`.
pub fn r4_order_parity_eliminate(case: &CaseSpec, d: u64, q: u64) -> Result<Option<ParityWitness>> {
    let primes = fixed_tuple(case)?;
    let requirement = required_primes(case, d)?
        .into_iter()
        .find(|&(r, _)| r == q)
        .map(|(_, why)| why)
        .ok_or_else(|| Error::Inapplicable(format!("{q} is not forced to divide sigma(n)")))?;
    let mut rows = Vec::new();
    for (i, &p) in primes.iter().enumerate() {
        if p == q {
            continue;
        }
        match order_row(p, q, case.exponents[i])? {
            Some(row) => rows.push(row),
            None => return Ok(None),
        }
    }
    Ok(Some(ParityWitness::Modulus { q, requirement, rows }))
}

/// Refute a fully fixed case because some `sigma(p^a)` can be divisible by
/// none of the primes the equation makes available.
pub fn r4_slot_supply_eliminate(case: &CaseSpec, d: u64) -> Result<Option<ParityWitness>> {
    let primes = fixed_tuple(case)?;
    let mut allowed: Vec<u64> = factorize(2 * d - 1).primes().chain(primes.iter().copied()).collect();
    allowed.sort_unstable();
    allowed.dedup();
    'slot: for (i, &p) in primes.iter().enumerate() {
        let mut rows = Vec::new();
        for &r in allowed.iter().filter(|&&r| r != p) {
            match order_row(p, r, case.exponents[i])? {
                Some(row) => rows.push(row),
                None => continue 'slot,
            }
        }
        return Ok(Some(ParityWitness::Slot { prime: p, rows }));
    }
    Ok(None)
}

/// First parity refutation in canonical order: required primes ascending,
/// then slots left to right.
pub(crate) fn r4_scan(case: &CaseSpec, d: u64) -> Result<Option<ParityWitness>> {
    for (q, _) in required_primes(case, d)? {
        if let Some(w) = r4_order_parity_eliminate(case, d, q)? {
            return Ok(Some(w));
        }
    }
    r4_slot_supply_eliminate(case, d)
}

// ---------------------------------------------------------------- R5

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "because", rename_all = "snake_case")]
pub enum ExclusionReason {
    /// A prime factor of `sigma(p^a)` that is not a fixed slot prime, does not
    /// divide `2D - 1`, and lies in no open slot's range.
    ForcedOutsideRange { factor: u64 },
    /// `factor` divides `2D - 1` only `available` times, is no slot prime, and
    /// divides `sigma(p^a)` `valuation` times.
    ExcessMultiplicity {
        factor: u64,
        valuation: u32,
        available: u32,
    },
    /// All slots fixed and `sigma(p^a)`, stripped of the other slot primes
    /// and of `2D - 1`, leaves this cofactor.
    UnsuppliedCofactor { cofactor: String },
    /// More distinct primes need an open slot than there are open slots.
    TooManyPrimes { factors: Vec<u64>, open_slots: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForcingWitness {
    pub slot: usize,
    pub prime: u64,
    pub exponent: u32,
    pub sigma: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForcingOutcome {
    ExponentExcluded(ForcingWitness),
    /// The only prime left over must fill this open slot.
    SlotForced {
        slot: usize,
        prime: u64,
    },
    Inconclusive,
}

/// Partial factorization of `sigma(p^a)`: the listed prime powers times
/// `rest`, where `rest` is 1 or has only prime factors above the trial limit
/// and does not fit in 64 bits.
#[derive(Debug, Clone)]
struct SigmaFactors {
    sigma: BigUint,
    factors: Vec<(u64, u32)>,
    rest: BigUint,
}

fn trial_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(SIGMA_TRIAL_LIMIT))
}

fn rem_u64(n: &BigUint, m: u64) -> u64 {
    n.iter_u64_digits()
        .rev()
        .fold(0u128, |acc, d| ((acc << 64) | d as u128) % m as u128) as u64
}

fn sigma_factors(p: u64, a: u32) -> SigmaFactors {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), SigmaFactors>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("cache poisoned").get(&(p, a)) {
        return hit.clone();
    }
    let sigma = crate::arith::sigma::geometric_sum(p, a);
    let mut factors = Vec::new();
    let mut rest = sigma.clone();
    for &r in trial_primes() {
        if let Some(small) = rest.to_u64() {
            factors.extend(factorize(small).entries().iter().copied());
            rest = BigUint::one();
            break;
        }
        if rem_u64(&rest, r) != 0 {
            continue;
        }
        let mut v = 0;
        while rem_u64(&rest, r) == 0 {
            rest /= r;
            v += 1;
        }
        factors.push((r, v));
    }
    factors.sort_unstable();
    let out = SigmaFactors { sigma, factors, rest };
    cache.lock().expect("cache poisoned").insert((p, a), out.clone());
    out
}

/// Test whether `sigma(p^a)` for the prime fixed in `slot` can divide
/// `(2D - 1) * n / D` given the rest of the case.
pub fn r5_sigma_forcing(case: &CaseSpec, d: u64, slot: usize, a: u32) -> Result<ForcingOutcome> {
    let eff = effective_or_err(case)?;
    let p = case
        .slots
        .get(slot)
        .and_then(|s| s.fixed())
        .ok_or_else(|| Error::Inapplicable(format!("slot {} is not fixed", slot + 1)))?;
    if a < 2 || !a.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("exponent {a} is not even and >= 2")));
    }
    if d == 0 || d.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("D = {d} is not a positive odd integer")));
    }
    let sf = sigma_factors(p, a);
    let fixed: Vec<u64> = case.fixed_primes().map(|(_, q)| q).collect();
    let rhs = factorize(2 * d - 1);
    let open: Vec<SlotBounds> = case.open_slots().map(|j| eff[j]).collect();
    let in_open = |r: u64| open.iter().any(|b| b.contains(r));
    let excluded = |reason| {
        Ok(ForcingOutcome::ExponentExcluded(ForcingWitness {
            slot,
            prime: p,
            exponent: a,
            sigma: sf.sigma.to_string(),
            reason,
        }))
    };

    let mut needs_slot = Vec::new();
    for &(r, v) in &sf.factors {
        if fixed.contains(&r) {
            continue;
        }
        let available = rhs.entries().iter().find(|&&(s, _)| s == r).map_or(0, |&(_, e)| e);
        if v <= available {
            continue;
        }
        if !in_open(r) {
            return excluded(if available == 0 {
                ExclusionReason::ForcedOutsideRange { factor: r }
            } else {
                ExclusionReason::ExcessMultiplicity {
                    factor: r,
                    valuation: v,
                    available,
                }
            });
        }
        needs_slot.push(r);
    }
    if open.is_empty() && !sf.rest.is_one() {
        return excluded(ExclusionReason::UnsuppliedCofactor {
            cofactor: sf.rest.to_string(),
        });
    }
    if needs_slot.len() > open.len() {
        return excluded(ExclusionReason::TooManyPrimes {
            factors: needs_slot,
            open_slots: open.len(),
        });
    }
    if let ([r], true) = (needs_slot.as_slice(), sf.rest.is_one()) {
        let mut holders = case.open_slots().filter(|&j| eff[j].contains(*r));
        if let (Some(j), None) = (holders.next(), holders.next()) {
            return Ok(ForcingOutcome::SlotForced { slot: j, prime: *r });
        }
    }
    Ok(ForcingOutcome::Inconclusive)
}

// ---------------------------------------------------------------- helpers

/// `pow_mod` based check that `order` is exactly the multiplicative order.
pub(crate) fn is_exact_order(a: u64, m: u64, order: u64) -> bool {
    if order == 0 || pow_mod(a, order, m) != 1 {
        return false;
    }
    factorize(order).primes().all(|r| pow_mod(a, order / r, m) != 1)
}

#[cfg(test)]
mod tests {
    use super::super::case::Slot;
    use super::*;

    fn range(lo: u64, hi: Option<u64>) -> Slot {
        Slot::Range { lo, hi }
    }

    fn fixed(ps: &[u64]) -> CaseSpec {
        CaseSpec::from_slots(ps.iter().map(|&p| Slot::Fixed(p)).collect())
    }

    #[test]
    fn r1_examples() {
        let case = CaseSpec::from_slots(vec![range(5, None); 4]);
        let w = r1_abundancy_eliminate(&case, 5).unwrap().unwrap();
        assert_eq!(w.primes, vec![5, 7, 11, 13]);
        assert_eq!(w.ceiling, Rational::from_ratio(1001, 576));
        assert_eq!(w.total, Rational::from_ratio(5581, 2880));

        let case = CaseSpec::from_slots(vec![Slot::Fixed(3), range(29, None), range(31, None), range(37, None)]);
        assert!(r1_abundancy_eliminate(&case, 3).unwrap().is_some());

        let case = CaseSpec::from_slots(vec![range(7, None); 5]);
        let w = r1_abundancy_eliminate(&case, 7).unwrap().unwrap();
        assert_eq!(w.ceiling, Rational::from_ratio(323_323, 207_360));
        assert_eq!(w.total, Rational::from_ratio(2_470_621, 1_451_520));

        let case = CaseSpec::from_slots(vec![Slot::Fixed(3), range(5, None), range(7, None), range(11, None)]);
        assert!(r1_abundancy_eliminate(&case, 3).unwrap().is_none());
        assert!(r1_abundancy_eliminate(&fixed(&[5, 3]), 3).is_err());
    }

    #[test]
    fn truncated_abundancy() {
        // 3^4 pinned: sigma(3^4)/3^4 = 121/81 replaces 3/2.
        let case = CaseSpec::from_slots(vec![
            Slot::Fixed(3),
            Slot::Fixed(11),
            range(199, None),
            range(211, None),
        ])
        .with_exponents(0, ExponentRange::exactly(4));
        let w = abundancy_bound(&case, 3).unwrap();
        assert_eq!(w.exponent_caps[0], Some(4));
        assert_eq!(
            w.ceiling,
            Rational::from_ratio(121, 81)
                * Rational::from_ratio(11, 10)
                * Rational::from_ratio(199, 198)
                * Rational::from_ratio(211, 210)
        );
    }

    #[test]
    fn slot_bounds() {
        let base = CaseSpec::open(4).with_fixed(0, 3);
        assert_eq!(bound_prime_slot(&base, 1).unwrap().bound(), Some(23));
        assert_eq!(
            bound_prime_slot(&base.clone().with_fixed(1, 13), 2).unwrap().bound(),
            Some(73)
        );
        assert_eq!(
            bound_prime_slot(&base.clone().with_fixed(1, 11), 2).unwrap().bound(),
            Some(197)
        );
        assert_eq!(
            bound_prime_slot(&base.clone().with_fixed(1, 5), 2).unwrap(),
            SlotBound::Unbounded
        );
        assert_eq!(bound_prime_slot(&CaseSpec::open(4), 0).unwrap().bound(), Some(3));
        assert_eq!(bound_prime_slot(&CaseSpec::open(5), 0).unwrap().bound(), Some(5));
    }

    #[test]
    fn bound_witness_is_tight() {
        let base = CaseSpec::open(4).with_fixed(0, 3);
        let SlotBound::Bounded(w) = bound_prime_slot(&base, 1).unwrap() else {
            panic!("expected a bound");
        };
        assert_eq!(w.first_excluded, 29);
        assert_eq!(w.test.primes, vec![3, 29, 31, 37]);
        assert!(w.test.eliminates());
        let at_bound = base.with_fixed(1, 23);
        assert!(r1_default(&at_bound).unwrap().is_none());
    }

    #[test]
    fn feasible_d_examples() {
        let open4 = |ps: &[u64]| {
            let mut c = CaseSpec::open(4);
            for (i, &p) in ps.iter().enumerate() {
                c = c.with_fixed(i, p);
            }
            c.normalized()
        };
        assert_eq!(
            feasible_d_values(&open4(&[3, 23, 29])).unwrap().unwrap().values,
            vec![3]
        );
        assert_eq!(
            feasible_d_values(&open4(&[3, 11, 13])).unwrap().unwrap().values,
            vec![3, 9]
        );
        assert_eq!(feasible_d_values(&open4(&[3, 19])).unwrap().unwrap().values, vec![3]);
        assert!(feasible_d_values(&open4(&[3, 5])).unwrap().is_none());
    }

    #[test]
    fn g_examples() {
        let case = fixed(&[3, 19, 37, 41]);
        let g = g_value(&case, 3, PrimeChoice::Max).unwrap();
        assert!(g.to_decimal(6, Default::default()).starts_with("0.999202"));
        let case = fixed(&[3, 17, 41, 43]);
        let g = g_value(&case, 3, PrimeChoice::Max).unwrap();
        assert!(g.to_decimal(6, Default::default()).starts_with("0.996518"));
        assert_eq!(g_from_primes(1, &[]).unwrap(), Rational::one());
        assert!(g_value(&case, 5, PrimeChoice::Max).is_err());
        assert!(g_value(&case, 4, PrimeChoice::Max).is_err());
    }

    #[test]
    fn r3_examples() {
        let case = CaseSpec::from_slots(vec![
            Slot::Fixed(3),
            Slot::Fixed(19),
            range(23, Some(37)),
            range(29, Some(41)),
        ])
        .with_exp_lb(0, 6);
        assert!(matches!(
            r3_fg_gap_eliminate(&case, 3).unwrap(),
            Some(GapWitness::FgGap { .. })
        ));

        let case = CaseSpec::from_slots(vec![Slot::Fixed(3), Slot::Fixed(11), Slot::Fixed(13), range(17, None)]);
        let Some(GapWitness::FgGap { g_max, .. }) = r3_fg_gap_eliminate(&case, 3).unwrap() else {
            panic!("expected an f/g gap");
        };
        assert_eq!(g_max, Rational::from_ratio(400, 429));

        let case = CaseSpec::from_slots(vec![
            Slot::Fixed(3),
            Slot::Fixed(13),
            range(31, Some(73)),
            range(37, Some(79)),
        ])
        .with_exp_lb(0, 6);
        assert!(r3_fg_gap_eliminate(&case, 3).unwrap().is_some());
    }

    #[test]
    fn r3_floor_variant() {
        // f/g alone cannot close p3 = 71 with p4 unbounded; the floor does.
        let case = CaseSpec::from_slots(vec![Slot::Fixed(3), Slot::Fixed(11), Slot::Fixed(71), range(73, None)])
            .with_exp_lb(0, 4)
            .with_exp_lb(1, 4);
        let Some(GapWitness::Floor { floor, .. }) = r3_fg_gap_eliminate(&case, 3).unwrap() else {
            panic!("expected the floor form");
        };
        assert_eq!(floor, Rational::from_ratio(82_344_865, 49_406_841));
    }

    #[test]
    fn divisibility_rule() {
        assert!(!q_can_divide_sigma_even_exp(3, 5).unwrap());
        assert!(!q_can_divide_sigma_even_exp(29, 5).unwrap());
        // ord_7(11) = 3 and sigma(11^2) = 133 = 7 * 19
        assert!(q_can_divide_sigma_even_exp(11, 7).unwrap());
        assert!(q_can_divide_sigma_even_exp(11, 5).unwrap());
        assert!(q_can_divide_sigma_even_exp(5, 5).is_err());
        assert!(q_can_divide_sigma_even_exp(5, 2).is_err());
    }

    #[test]
    fn r4_examples() {
        let w = r4_order_parity_eliminate(&fixed(&[3, 23, 29, 47]), 3, 5)
            .unwrap()
            .unwrap();
        let ParityWitness::Modulus { rows, requirement, .. } = w else {
            panic!()
        };
        assert_eq!(requirement, Requirement::DividesTwoDMinusOne);
        assert_eq!(rows.iter().map(|r| r.order).collect::<Vec<_>>(), vec![4, 4, 2, 4]);

        let w = r4_order_parity_eliminate(&fixed(&[3, 23, 29, 31]), 3, 31)
            .unwrap()
            .unwrap();
        let ParityWitness::Modulus { rows, .. } = w else {
            panic!()
        };
        assert_eq!(rows.iter().map(|r| r.order).collect::<Vec<_>>(), vec![30, 10, 10]);

        let w = r4_order_parity_eliminate(&fixed(&[3, 11, 13, 17]), 9, 17)
            .unwrap()
            .unwrap();
        let ParityWitness::Modulus { rows, .. } = w else {
            panic!()
        };
        assert_eq!(rows.iter().map(|r| r.order).collect::<Vec<_>>(), vec![16, 16, 4]);

        assert!(r4_order_parity_eliminate(&fixed(&[3, 23, 29, 47]), 3, 7).is_err());
        assert!(r4_order_parity_eliminate(&CaseSpec::open(4), 3, 5).is_err());
    }

    #[test]
    fn r5_examples() {
        let case = CaseSpec::open(4).with_fixed(0, 3).with_fixed(1, 19).normalized();
        let ForcingOutcome::ExponentExcluded(w) = r5_sigma_forcing(&case, 3, 0, 2).unwrap() else {
            panic!("sigma(3^2) = 13 should be excluded");
        };
        assert_eq!(w.reason, ExclusionReason::ForcedOutsideRange { factor: 13 });
        let ForcingOutcome::ExponentExcluded(w) = r5_sigma_forcing(&case, 3, 0, 4).unwrap() else {
            panic!("sigma(3^4) = 121 should be excluded");
        };
        assert_eq!(w.sigma, "121");
        assert!(matches!(w.reason, ExclusionReason::ForcedOutsideRange { factor: 11 }));

        let case = CaseSpec::from_slots(vec![
            Slot::Fixed(3),
            Slot::Fixed(11),
            range(191, Some(193)),
            range(193, Some(197)),
        ]);
        let ForcingOutcome::ExponentExcluded(w) = r5_sigma_forcing(&case, 3, 0, 6).unwrap() else {
            panic!("1093 cannot fill p4");
        };
        assert_eq!(w.reason, ExclusionReason::ForcedOutsideRange { factor: 1093 });

        let case = CaseSpec::from_slots(vec![
            Slot::Fixed(3),
            Slot::Fixed(11),
            range(191, Some(193)),
            range(193, None),
        ]);
        assert_eq!(
            r5_sigma_forcing(&case, 3, 0, 6).unwrap(),
            ForcingOutcome::SlotForced { slot: 3, prime: 1093 }
        );
    }

    #[test]
    fn sigma_factorization_is_complete_when_small() {
        let sf = sigma_factors(11, 20);
        let product = sf
            .factors
            .iter()
            .fold(sf.rest.clone(), |acc, &(r, v)| acc * BigUint::from(r).pow(v));
        assert_eq!(product, sf.sigma);
        assert!(sf.factors.iter().all(|&(r, _)| is_prime(r)));
    }

    #[test]
    fn exact_order_check() {
        assert!(is_exact_order(3, 31, 30));
        assert!(!is_exact_order(3, 31, 15));
        assert!(!is_exact_order(3, 31, 60));
    }
}
