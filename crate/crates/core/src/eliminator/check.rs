//! Independent re-verification of a proof trace.
//!
//! Each step is checked from its stored witnesses with exact arithmetic:
//! stored rationals are recomputed from the stated primes and exponents,
//! orders are confirmed by modular powers, and every child case must be the
//! exact refinement or split the step claims. No rule search is re-run.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::case::{CaseSpec, ExponentRange, Slot, SlotBounds};
use super::engine::with_d_raised;
use super::rules::{
    admissible_d_below, is_exact_order, sigma_mod, AbundancyWitness, DBoundWitness, ExclusionReason, ForcingWitness,
    GapWitness, OrderRow, ParityWitness, Requirement, MAX_D_VALUES,
};
use super::trace::{ProofTrace, RuleId, TraceNode, TraceSummary, Verdict, Witness};
use crate::arith::{factorize, is_prime, next_prime, prime_power_abundancy, Rational};

/// The first step that failed to re-check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFailure {
    pub path: String,
    pub rule: Option<RuleId>,
    pub case: String,
    pub message: String,
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = self.rule.map_or("survived", |r| r.as_str());
        write!(f, "{} [{}] {}: {}", self.path, rule, self.case, self.message)
    }
}

impl std::error::Error for CheckFailure {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub steps_checked: usize,
    pub summary: TraceSummary,
}

type Check = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Re-verify every step of `trace`.
pub fn check_trace(trace: &ProofTrace) -> std::result::Result<CheckReport, CheckFailure> {
    if let Err(e) = trace.root.case.validate() {
        return Err(CheckFailure {
            path: "root".into(),
            rule: trace.root.rule,
            case: trace.root.case.to_string(),
            message: e.to_string(),
        });
    }
    let mut steps = 0;
    let mut path = String::from("root");
    walk(&trace.root, &mut path, &mut steps)?;
    Ok(CheckReport {
        steps_checked: steps,
        summary: trace.summary(),
    })
}

fn walk(node: &TraceNode, path: &mut String, steps: &mut usize) -> std::result::Result<(), CheckFailure> {
    *steps += 1;
    check_node(node).map_err(|message| CheckFailure {
        path: path.clone(),
        rule: node.rule,
        case: node.case.to_string(),
        message,
    })?;
    for (i, child) in node.children.iter().enumerate() {
        let len = path.len();
        path.push('/');
        path.push_str(&node.child_label(i));
        walk(child, path, steps)?;
        path.truncate(len);
    }
    Ok(())
}

fn effective(case: &CaseSpec) -> std::result::Result<Vec<SlotBounds>, String> {
    case.effective().ok_or_else(|| "case admits no primes".to_string())
}

fn check_node(node: &TraceNode) -> Check {
    let case = &node.case;
    let no_children = || ensure(node.children.is_empty(), || "leaf has children".into());
    use Verdict::*;
    match (node.rule, node.verdict, &node.witnesses) {
        (Some(RuleId::R1Abundancy), Eliminated, Witness::EmptyCase) => {
            no_children()?;
            ensure(case.effective().is_none(), || "case is not empty".into())
        }
        (Some(RuleId::R1Abundancy), Eliminated, Witness::Abundancy(w)) => {
            no_children()?;
            check_abundancy(case, w)
        }
        (Some(RuleId::R1Abundancy), Refined, Witness::SlotCuts { cuts }) => {
            ensure(!cuts.is_empty(), || "no cuts".into())?;
            ensure(node.children.len() == cuts.len() + 1, || {
                "one child per cut plus the rest expected".into()
            })?;
            let mut cur = case.clone();
            for (cut, child) in cuts.iter().zip(&node.children) {
                ensure(cut.slot < cur.k && !cur.slots[cut.slot].is_fixed(), || {
                    format!("slot {} is not open", cut.slot + 1)
                })?;
                let eff = effective(&cur)?;
                let b = eff[cut.slot];
                ensure(cut.bound >= b.min && b.max.is_none_or(|m| cut.bound < m), || {
                    format!("cut {} outside the slot range", cut.bound)
                })?;
                let first = next_prime(cut.bound).ok_or("no prime after the cut")?;
                let refuted = cur
                    .clone()
                    .with_slot(cut.slot, Slot::Range { lo: first, hi: b.max })
                    .normalized();
                ensure(child.case == refuted, || {
                    format!("cut child is not the part above {}", cut.bound)
                })?;
                ensure(
                    child.verdict == Eliminated && child.rule == Some(RuleId::R1Abundancy),
                    || "cut child is not refuted by R1".into(),
                )?;
                cur = cur
                    .with_slot(
                        cut.slot,
                        Slot::Range {
                            lo: b.min,
                            hi: Some(cut.bound),
                        },
                    )
                    .normalized();
            }
            ensure(node.children.last().map(|c| &c.case) == Some(&cur), || {
                "remaining case does not match the cuts".into()
            })
        }
        (Some(RuleId::R2DBound), Eliminated | Branched, Witness::DBound(w)) => {
            ensure((node.verdict == Eliminated) == w.values.is_empty(), || {
                "verdict disagrees with the D list".into()
            })?;
            check_d_bound(case, w)?;
            ensure(node.children.len() == w.values.len(), || {
                "one child per D expected".into()
            })?;
            for (&d, child) in w.values.iter().zip(&node.children) {
                ensure(child.case == with_d_raised(case, d), || {
                    format!("child for D = {d} does not match")
                })?;
            }
            Ok(())
        }
        (
            Some(RuleId::R5SigmaForcing),
            Eliminated | Refined,
            Witness::Forcing {
                slot,
                exclusions,
                new_lb,
            },
        ) => {
            check_forcing(case, *slot, exclusions, *new_lb)?;
            let exhausted = case.exponents[*slot].ub.is_some_and(|u| *new_lb > u);
            if exhausted {
                ensure(node.verdict == Eliminated, || {
                    "every exponent excluded but not eliminated".into()
                })?;
                no_children()
            } else {
                ensure(node.verdict == Refined && node.children.len() == 1, || {
                    "refinement needs one child".into()
                })?;
                let expected = case.clone().with_exp_lb(*slot, *new_lb).normalized();
                ensure(node.children[0].case == expected, || {
                    "child does not carry the raised exponent bound".into()
                })
            }
        }
        (Some(RuleId::R4OrderParity), Eliminated, Witness::Parity(w)) => {
            no_children()?;
            check_parity(case, w)
        }
        (Some(RuleId::R3FgGap), Eliminated, Witness::Gap(w)) => {
            no_children()?;
            check_gap(case, w)
        }
        (Some(RuleId::Branch), Branched, Witness::PrimeSplit { slot, primes }) => {
            ensure(*slot < case.k && !case.slots[*slot].is_fixed(), || {
                "split slot is not open".into()
            })?;
            let b = effective(case)?[*slot];
            let max = b.max.ok_or("cannot split an unbounded slot")?;
            let expected: Vec<u64> = (b.min..=max).filter(|&p| is_prime(p)).collect();
            ensure(*primes == expected, || {
                "split does not list every prime of the range".into()
            })?;
            ensure(node.children.len() == primes.len(), || {
                "one child per prime expected".into()
            })?;
            for (&p, child) in primes.iter().zip(&node.children) {
                ensure(child.case == case.clone().with_fixed(*slot, p).normalized(), || {
                    format!("child for {p} does not match")
                })?;
            }
            Ok(())
        }
        (Some(RuleId::Branch), Branched, Witness::ExponentSplit { slot, exponent }) => {
            ensure(*slot < case.k, || "slot out of range".into())?;
            let e = case.exponents[*slot];
            ensure(e.lb == *exponent && !e.is_pinned(), || {
                "split exponent is not the open lower bound".into()
            })?;
            let pinned = case
                .clone()
                .with_exponents(*slot, ExponentRange::exactly(e.lb))
                .normalized();
            let rest = case
                .clone()
                .with_exponents(*slot, ExponentRange { lb: e.lb + 2, ub: e.ub })
                .normalized();
            ensure(node.children.len() == 2, || "exponent split needs two children".into())?;
            ensure(node.children[0].case == pinned && node.children[1].case == rest, || {
                "children do not partition the exponent range".into()
            })
        }
        (None, Survived, Witness::Survival(_)) => no_children(),
        _ => Err("rule, verdict and witness do not fit together".into()),
    }
}

fn ceiling_of(primes: &[u64], caps: &[Option<u32>]) -> (Rational, bool) {
    let mut strict = false;
    let value = primes
        .iter()
        .zip(caps)
        .map(|(&p, cap)| match cap {
            Some(u) => prime_power_abundancy(p, *u),
            None => {
                strict = true;
                Rational::from_ratio(p, p - 1)
            }
        })
        .product();
    (value, strict)
}

fn check_abundancy(case: &CaseSpec, w: &AbundancyWitness) -> Check {
    let eff = effective(case)?;
    let mins: Vec<u64> = eff.iter().map(|b| b.min).collect();
    ensure(w.primes == mins, || {
        format!("primes {:?} are not the slot minima {mins:?}", w.primes)
    })?;
    let caps: Vec<Option<u32>> = case.exponents.iter().map(|e| e.ub).collect();
    ensure(w.exponent_caps == caps, || "exponent caps differ from the case".into())?;
    let d_bound = match case.d_candidates.as_deref() {
        Some([d]) => *d,
        Some(ds) if !ds.is_empty() => ds[0].max(mins[0]),
        _ => mins[0],
    };
    ensure(w.d_min >= 1 && w.d_min <= d_bound, || {
        format!("d_min {} exceeds the smallest admissible D {d_bound}", w.d_min)
    })?;
    let (ceiling, strict) = ceiling_of(&w.primes, &w.exponent_caps);
    ensure(ceiling == w.ceiling, || {
        format!("ceiling is {ceiling}, witness says {}", w.ceiling)
    })?;
    ensure(strict == w.strict, || "strictness flag is wrong".into())?;
    let total = &ceiling + &Rational::from_ratio(1, w.d_min);
    ensure(total == w.total, || {
        format!("total is {total}, witness says {}", w.total)
    })?;
    let two = Rational::from(2);
    ensure(total < two || (total == two && strict), || {
        format!("{total} does not fall below 2")
    })
}

fn check_d_bound(case: &CaseSpec, w: &DBoundWitness) -> Check {
    ensure(case.fixed_d().is_none(), || "D already fixed".into())?;
    let eff = effective(case)?;
    let mins: Vec<u64> = eff.iter().map(|b| b.min).collect();
    let caps: Vec<Option<u32>> = case.exponents.iter().map(|e| e.ub).collect();
    let (ceiling, strict) = ceiling_of(&mins, &caps);
    ensure(ceiling == w.ceiling && strict == w.strict, || {
        "ceiling does not match the case".into()
    })?;
    let two = Rational::from(2);
    let at_t = &ceiling + &Rational::from_ratio(1, w.threshold.max(1));
    ensure(at_t < two || (at_t == two && strict), || {
        format!("D >= {} is not excluded", w.threshold)
    })?;
    ensure(case.open_slots().all(|j| eff[j].min >= w.threshold), || {
        "an open slot prime could divide a small D".into()
    })?;
    let fixed: Vec<(u64, Option<u32>)> = case.fixed_primes().map(|(i, p)| (p, case.exponents[i].ub)).collect();
    let allowed = |d: u64| {
        let in_cands = case.d_candidates.as_ref().is_none_or(|ds| ds.contains(&d));
        in_cands
            && factorize(d)
                .entries()
                .iter()
                .all(|&(r, v)| fixed.iter().any(|&(p, ub)| p == r && ub.is_none_or(|u| v <= u)))
    };
    let expected: Vec<u64> = if w.threshold <= 1_000_000 {
        (2..w.threshold).filter(|&d| allowed(d)).collect()
    } else {
        admissible_d_below(case, w.threshold, MAX_D_VALUES).ok_or("too many D values")?
    };
    ensure(w.values == expected, || {
        format!("D list {:?}, expected {expected:?}", w.values)
    })
}

fn valuation_big(n: &BigUint, r: u64) -> u32 {
    let mut v = 0;
    let mut n = n.clone();
    while !n.is_zero() && (&n % r).is_zero() {
        n /= r;
        v += 1;
    }
    v
}

fn check_forcing(case: &CaseSpec, slot: usize, exclusions: &[ForcingWitness], new_lb: u32) -> Check {
    let d = case.fixed_d().ok_or("D is not fixed")?;
    let p = case
        .slots
        .get(slot)
        .and_then(Slot::fixed)
        .ok_or("forcing slot is not fixed")?;
    ensure(!exclusions.is_empty(), || "no exclusions".into())?;
    let eff = effective(case)?;
    let fixed: Vec<u64> = case.fixed_primes().map(|(_, q)| q).collect();
    let open: Vec<SlotBounds> = case.open_slots().map(|j| eff[j]).collect();
    let rhs = 2 * d - 1;
    let mut lb = case.exponents[slot].lb;
    for w in exclusions {
        ensure(w.slot == slot && w.prime == p && w.exponent == lb, || {
            format!("exclusion out of order at exponent {}", w.exponent)
        })?;
        let sigma = (BigUint::from(p).pow(lb + 1) - 1u32) / (p - 1);
        ensure(sigma.to_string() == w.sigma, || format!("sigma({p}^{lb}) is {sigma}"))?;
        let unplaceable = |r: u64| !fixed.contains(&r) && !open.iter().any(|b| b.contains(r));
        match &w.reason {
            ExclusionReason::ForcedOutsideRange { factor: r } => {
                ensure(is_prime(*r) && (&sigma % *r).is_zero(), || {
                    format!("{r} is not a prime factor of {sigma}")
                })?;
                ensure(rhs % r != 0, || format!("{r} divides 2D - 1"))?;
                ensure(unplaceable(*r), || format!("{r} can be a prime of n"))?;
            }
            ExclusionReason::ExcessMultiplicity {
                factor: r,
                valuation,
                available,
            } => {
                ensure(is_prime(*r), || format!("{r} is not prime"))?;
                ensure(valuation_big(&sigma, *r) == *valuation, || {
                    "valuation in sigma is wrong".into()
                })?;
                ensure(super::rules::valuation(rhs, *r) == *available, || {
                    "valuation in 2D - 1 is wrong".into()
                })?;
                ensure(valuation > available, || "no excess".into())?;
                ensure(unplaceable(*r), || format!("{r} can be a prime of n"))?;
            }
            ExclusionReason::UnsuppliedCofactor { cofactor } => {
                ensure(open.is_empty(), || "open slots could supply the cofactor".into())?;
                let mut c = sigma.clone();
                for &q in &fixed {
                    while (&c % q).is_zero() {
                        c /= q;
                    }
                }
                for &(r, e) in factorize(rhs).entries() {
                    for _ in 0..e {
                        if !(&c % r).is_zero() {
                            break;
                        }
                        c /= r;
                    }
                }
                ensure(!c.is_one() && c.to_string() == *cofactor, || format!("cofactor is {c}"))?;
            }
            ExclusionReason::TooManyPrimes { factors, open_slots } => {
                ensure(*open_slots == open.len(), || "open slot count is wrong".into())?;
                ensure(factors.len() > open.len(), || "not more primes than slots".into())?;
                let mut sorted = factors.clone();
                sorted.sort_unstable();
                sorted.dedup();
                ensure(sorted.len() == factors.len(), || "repeated prime".into())?;
                for &r in factors {
                    ensure(is_prime(r) && (&sigma % r).is_zero() && !fixed.contains(&r), || {
                        format!("{r} does not need an open slot")
                    })?;
                    ensure(valuation_big(&sigma, r) > super::rules::valuation(rhs, r), || {
                        format!("{r} is absorbed by 2D - 1")
                    })?;
                }
            }
        }
        lb += 2;
    }
    ensure(new_lb == lb, || format!("new lower bound should be {lb}"))
}

fn check_row(row: &OrderRow) -> Check {
    let (p, m) = (row.prime, row.modulus);
    ensure(is_exact_order(p, m, row.order), || {
        format!("ord_{m}({p}) is not {}", row.order)
    })?;
    if row.order.is_multiple_of(2) {
        return Ok(());
    }
    let residues = row
        .residues
        .as_ref()
        .ok_or_else(|| format!("odd ord_{m}({p}) needs residues"))?;
    let ub = row.exponents.ub.ok_or("residues need a bounded exponent range")?;
    let expected: Vec<u32> = (row.exponents.lb..=ub).step_by(2).collect();
    let listed: Vec<u32> = residues.iter().map(|&(a, _)| a).collect();
    ensure(listed == expected, || "residues do not cover the exponent range".into())?;
    for &(a, r) in residues {
        ensure(sigma_mod(p, a, m) == r && r != 0, || {
            format!("sigma({p}^{a}) mod {m} is not {r} or is zero")
        })?;
    }
    Ok(())
}

fn check_parity(case: &CaseSpec, w: &ParityWitness) -> Check {
    let d = case.fixed_d().ok_or("D is not fixed")?;
    let primes: Vec<u64> = case
        .slots
        .iter()
        .map(Slot::fixed)
        .collect::<Option<_>>()
        .ok_or("open slot")?;
    let rhs = 2 * d - 1;
    let check_rows =
        |rows: &[OrderRow], skip: u64, moduli: Option<&[u64]>, fixed_prime: Option<(usize, u64)>| -> Check {
            let expected: Vec<(u64, u64, ExponentRange)> = match (moduli, fixed_prime) {
                (None, None) => primes
                    .iter()
                    .enumerate()
                    .filter(|&(_, &p)| p != skip)
                    .map(|(i, &p)| (p, skip, case.exponents[i]))
                    .collect(),
                (Some(ms), Some((i, p))) => ms.iter().map(|&m| (p, m, case.exponents[i])).collect(),
                _ => unreachable!(),
            };
            let got: Vec<(u64, u64, ExponentRange)> = rows.iter().map(|r| (r.prime, r.modulus, r.exponents)).collect();
            ensure(got == expected, || {
                "order table does not cover the required rows".into()
            })?;
            rows.iter().try_for_each(check_row)
        };
    match w {
        ParityWitness::Modulus { q, requirement, rows } => {
            ensure(is_prime(*q) && *q > 2, || format!("{q} is not an odd prime"))?;
            match *requirement {
                Requirement::DividesTwoDMinusOne => {
                    ensure(rhs % q == 0 && !primes.contains(q), || {
                        format!("{q} is not a new prime of 2D - 1")
                    })?;
                }
                Requirement::SlotPrime {
                    valuation_in_d,
                    exponent_lb,
                } => {
                    let i = primes.iter().position(|p| p == q).ok_or("not a slot prime")?;
                    ensure(super::rules::valuation(d, *q) == valuation_in_d, || {
                        "valuation in D is wrong".into()
                    })?;
                    ensure(
                        case.exponents[i].lb == exponent_lb && exponent_lb > valuation_in_d,
                        || "exponent does not exceed the valuation in D".into(),
                    )?;
                }
            }
            check_rows(rows, *q, None, None)
        }
        ParityWitness::Slot { prime, rows } => {
            let i = primes.iter().position(|p| p == prime).ok_or("not a slot prime")?;
            let mut allowed: Vec<u64> = factorize(rhs)
                .primes()
                .chain(primes.iter().copied())
                .filter(|r| r != prime)
                .collect();
            allowed.sort_unstable();
            allowed.dedup();
            check_rows(rows, 0, Some(&allowed), Some((i, *prime)))
        }
    }
}

fn check_gap(case: &CaseSpec, w: &GapWitness) -> Check {
    let d = case.fixed_d().ok_or("D is not fixed")?;
    let eff = effective(case)?;
    let mins: Vec<u64> = eff.iter().map(|b| b.min).collect();
    let maxs: Vec<Option<u64>> = eff.iter().map(|b| b.max).collect();
    let lbs: Vec<u32> = case.exponents.iter().map(|e| e.lb).collect();
    let target = Rational::from(2) - Rational::from_ratio(1, d);
    match w {
        GapWitness::FgGap {
            f_primes,
            f_exponents,
            f_min,
            g_primes,
            g_max,
        } => {
            ensure(*f_primes == mins && *f_exponents == lbs, || {
                "f is not taken at the slot minima".into()
            })?;
            ensure(*g_primes == maxs, || "g is not taken at the slot maxima".into())?;
            let f: Rational = f_primes
                .iter()
                .zip(f_exponents)
                .map(|(&p, &a)| Rational::one() - Rational::from(BigUint::from(p).pow(a + 1)).recip())
                .product();
            let g = g_primes
                .iter()
                .flatten()
                .fold(target, |acc, &p| acc * Rational::from_ratio(p - 1, p));
            ensure(f == *f_min, || format!("f is {f}"))?;
            ensure(g == *g_max, || format!("g is {g}"))?;
            ensure(f > g, || "no gap".into())
        }
        GapWitness::Floor {
            primes,
            exponents,
            floor,
            target: t,
            strict,
        } => {
            ensure(*primes == maxs && *exponents == lbs, || {
                "floor is not taken at the slot maxima".into()
            })?;
            let value: Rational = primes
                .iter()
                .zip(exponents)
                .filter_map(|(p, &a)| p.map(|p| prime_power_abundancy(p, a)))
                .product();
            ensure(value == *floor, || format!("floor is {value}"))?;
            ensure(*t == target, || "target is not 2 - 1/D".into())?;
            ensure(*strict == primes.iter().any(Option::is_none), || {
                "strictness flag is wrong".into()
            })?;
            ensure(value > target || (value == target && *strict), || {
                "floor does not exceed 2 - 1/D".into()
            })
        }
    }
}
