use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{is_prime, prime_at_or_after, prime_at_or_below, prime_power_abundancy, Rational};
use crate::error::{Error, Result};

/// One prime position `p_i` of a candidate `n = p_1^a_1 ... p_k^a_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Fixed(u64),
    Range {
        lo: u64,
        #[serde(default)]
        hi: Option<u64>,
    },
}

impl Slot {
    pub fn is_fixed(&self) -> bool {
        matches!(self, Slot::Fixed(_))
    }

    pub fn fixed(&self) -> Option<u64> {
        match *self {
            Slot::Fixed(p) => Some(p),
            Slot::Range { .. } => None,
        }
    }

    fn bounds(&self) -> (u64, Option<u64>) {
        match *self {
            Slot::Fixed(p) => (p, Some(p)),
            Slot::Range { lo, hi } => (lo, hi),
        }
    }
}

/// Admissible exponents: even values in `[lb, ub]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentRange {
    pub lb: u32,
    pub ub: Option<u32>,
}

impl ExponentRange {
    pub const AT_LEAST_TWO: ExponentRange = ExponentRange { lb: 2, ub: None };

    pub fn at_least(lb: u32) -> Self {
        ExponentRange { lb, ub: None }
    }

    pub fn exactly(a: u32) -> Self {
        ExponentRange { lb: a, ub: Some(a) }
    }

    pub fn is_pinned(&self) -> bool {
        self.ub == Some(self.lb)
    }

    pub fn is_empty(&self) -> bool {
        self.ub.is_some_and(|ub| ub < self.lb)
    }

    /// Even exponents in range; `None` when unbounded.
    pub fn values(&self) -> Option<impl Iterator<Item = u32>> {
        let ub = self.ub?;
        Some((self.lb..=ub).step_by(2))
    }
}

/// Effective prime interval of a slot after the ordering `p_1 < ... < p_k`
/// has been propagated: `min` and `max` are primes, `max = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotBounds {
    pub min: u64,
    pub max: Option<u64>,
}

impl SlotBounds {
    pub fn contains(&self, p: u64) -> bool {
        p >= self.min && self.max.is_none_or(|m| p <= m)
    }
}

/// A family of candidate odd deficient perfect numbers with `k` distinct
/// prime factors, all exponents even.
///
/// In JSON only `k` is required; missing slots are open from 3 and missing
/// exponents are at least 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "CaseSpecRepr")]
pub struct CaseSpec {
    pub k: usize,
    pub slots: Vec<Slot>,
    pub exponents: Vec<ExponentRange>,
    /// Admissible complements `D = n/d`; `None` admits every `D > 1` built
    /// from the slot primes.
    pub d_candidates: Option<Vec<u64>>,
}

#[derive(Deserialize)]
struct CaseSpecRepr {
    k: usize,
    #[serde(default)]
    slots: Vec<Slot>,
    #[serde(default)]
    exponents: Vec<ExponentRange>,
    #[serde(default)]
    d_candidates: Option<Vec<u64>>,
}

impl From<CaseSpecRepr> for CaseSpec {
    fn from(r: CaseSpecRepr) -> Self {
        let mut c = CaseSpec::open(r.k);
        // Lengths beyond k are kept so that validation reports them.
        for (i, slot) in r.slots.into_iter().enumerate() {
            match c.slots.get_mut(i) {
                Some(s) => *s = slot,
                None => c.slots.push(slot),
            }
        }
        for (i, e) in r.exponents.into_iter().enumerate() {
            match c.exponents.get_mut(i) {
                Some(x) => *x = e,
                None => c.exponents.push(e),
            }
        }
        c.d_candidates = r.d_candidates;
        c
    }
}

impl CaseSpec {
    /// `k` open slots starting at 3, every exponent at least 2.
    pub fn open(k: usize) -> Self {
        CaseSpec {
            k,
            slots: vec![Slot::Range { lo: 3, hi: None }; k],
            exponents: vec![ExponentRange::AT_LEAST_TWO; k],
            d_candidates: None,
        }
    }

    /// Build from a list of slots with default exponent bounds.
    pub fn from_slots(slots: Vec<Slot>) -> Self {
        let k = slots.len();
        CaseSpec {
            k,
            slots,
            exponents: vec![ExponentRange::AT_LEAST_TWO; k],
            d_candidates: None,
        }
    }

    pub fn with_slot(mut self, i: usize, slot: Slot) -> Self {
        self.slots[i] = slot;
        self
    }

    pub fn with_fixed(self, i: usize, p: u64) -> Self {
        self.with_slot(i, Slot::Fixed(p))
    }

    pub fn with_exponents(mut self, i: usize, e: ExponentRange) -> Self {
        self.exponents[i] = e;
        self
    }

    pub fn with_exp_lb(mut self, i: usize, lb: u32) -> Self {
        self.exponents[i].lb = lb;
        self
    }

    pub fn with_d(mut self, d: u64) -> Self {
        self.d_candidates = Some(vec![d]);
        self
    }

    pub fn with_d_candidates(mut self, mut ds: Vec<u64>) -> Self {
        ds.sort_unstable();
        ds.dedup();
        self.d_candidates = Some(ds);
        self
    }

    /// The complement when it is pinned to a single value.
    pub fn fixed_d(&self) -> Option<u64> {
        match self.d_candidates.as_deref() {
            Some([d]) => Some(*d),
            _ => None,
        }
    }

    pub fn all_fixed(&self) -> bool {
        self.slots.iter().all(Slot::is_fixed)
    }

    pub fn fixed_primes(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.fixed().map(|p| (i, p)))
    }

    pub fn open_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_fixed())
            .map(|(i, _)| i)
    }

    /// Structural checks on user-supplied cases.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCase(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.slots.len() != self.k || self.exponents.len() != self.k {
            return bad(format!(
                "k = {} but {} slots and {} exponent bounds",
                self.k,
                self.slots.len(),
                self.exponents.len()
            ));
        }
        for (i, slot) in self.slots.iter().enumerate() {
            match *slot {
                Slot::Fixed(p) if p == 2 || !is_prime(p) => {
                    return bad(format!("slot {}: {p} is not an odd prime", i + 1))
                }
                Slot::Range { hi: Some(hi), lo } if hi < lo => {
                    return bad(format!("slot {}: empty range [{lo}, {hi}]", i + 1))
                }
                _ => {}
            }
        }
        let mut last_fixed = 0;
        for p in self.slots.iter().filter_map(Slot::fixed) {
            if p <= last_fixed {
                return bad("fixed primes must be strictly increasing".into());
            }
            last_fixed = p;
        }
        for (i, e) in self.exponents.iter().enumerate() {
            if e.lb < 2 || e.lb % 2 != 0 {
                return bad(format!("slot {}: exponent lower bound must be even and >= 2", i + 1));
            }
            if let Some(ub) = e.ub {
                if ub % 2 != 0 || ub < e.lb {
                    return bad(format!("slot {}: bad exponent upper bound {ub}", i + 1));
                }
            }
        }
        if let Some(ds) = &self.d_candidates {
            if ds.is_empty() {
                return bad("empty D candidate set".into());
            }
            if let Some(d) = ds.iter().find(|&&d| d < 3 || d % 2 == 0) {
                return bad(format!("D = {d} is not an odd integer > 1"));
            }
        }
        if self.effective().is_none() {
            return bad("slot constraints admit no increasing prime tuple".into());
        }
        Ok(())
    }

    /// Effective bounds per slot, or `None` when no increasing tuple of odd
    /// primes satisfies every slot.
    pub fn effective(&self) -> Option<Vec<SlotBounds>> {
        let k = self.slots.len();
        let mut mins = Vec::with_capacity(k);
        let mut prev = 2u64;
        for slot in &self.slots {
            let (lo, hi) = slot.bounds();
            let m = match *slot {
                Slot::Fixed(p) => (p > prev).then_some(p)?,
                Slot::Range { .. } => prime_at_or_after(lo.max(prev + 1))?,
            };
            if hi.is_some_and(|h| m > h) {
                return None;
            }
            mins.push(m);
            prev = m;
        }
        let mut maxs = vec![None; k];
        let mut next: Option<u64> = None;
        for j in (0..k).rev() {
            let (_, hi) = self.slots[j].bounds();
            let cap = match (hi, next) {
                (Some(h), Some(n)) => Some(h.min(n - 1)),
                (Some(h), None) => Some(h),
                (None, Some(n)) => Some(n - 1),
                (None, None) => None,
            };
            let m = match cap {
                Some(c) => {
                    let p = if self.slots[j].is_fixed() {
                        self.slots[j].fixed().filter(|&p| p <= c)?
                    } else {
                        prime_at_or_below(c)?
                    };
                    if p < mins[j] {
                        return None;
                    }
                    Some(p)
                }
                None => None,
            };
            maxs[j] = m;
            next = m;
        }
        if self.exponents.iter().any(ExponentRange::is_empty) {
            return None;
        }
        Some(
            mins.into_iter()
                .zip(maxs)
                .map(|(min, max)| SlotBounds { min, max })
                .collect(),
        )
    }

    /// Canonical form: ranges shrunk to their effective primes, singleton
    /// ranges turned into fixed slots. Empty cases are returned unchanged.
    pub fn normalized(&self) -> CaseSpec {
        let Some(eff) = self.effective() else {
            return self.clone();
        };
        let mut out = self.clone();
        for (slot, b) in out.slots.iter_mut().zip(&eff) {
            if slot.is_fixed() {
                continue;
            }
            *slot = if b.max == Some(b.min) {
                Slot::Fixed(b.min)
            } else {
                Slot::Range { lo: b.min, hi: b.max }
            };
        }
        out
    }

    /// Smallest value the complement `D` can take.
    pub fn d_lower_bound(&self, eff: &[SlotBounds]) -> u64 {
        match self.d_candidates.as_deref() {
            Some([d]) => *d,
            Some(ds) if !ds.is_empty() => ds[0].max(eff[0].min),
            _ => eff[0].min,
        }
    }

    /// Upper bound on `sigma(n)/n` over the case: each slot contributes
    /// `p/(p-1)` at its smallest prime, or `sigma(p^u)/p^u` when its
    /// exponent is capped at `u`. The flag is true when the bound is never
    /// attained.
    pub fn abundancy_ceiling(&self, eff: &[SlotBounds]) -> (Rational, bool) {
        let mut strict = false;
        let value = eff
            .iter()
            .zip(&self.exponents)
            .map(|(b, e)| match e.ub {
                Some(ub) => prime_power_abundancy(b.min, ub),
                None => {
                    strict = true;
                    Rational::from_ratio(b.min, b.min - 1)
                }
            })
            .product();
        (value, strict)
    }

    /// Short human-readable description, e.g. `p1=3 p2=23 p3∈[29,31] p4≥31 a1≥6 D=3`.
    pub fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, slot) in self.slots.iter().enumerate() {
            parts.push(match *slot {
                Slot::Fixed(p) => format!("p{}={p}", i + 1),
                Slot::Range { lo, hi: Some(hi) } => format!("p{}∈[{lo},{hi}]", i + 1),
                Slot::Range { lo, hi: None } => format!("p{}≥{lo}", i + 1),
            });
        }
        for (i, e) in self.exponents.iter().enumerate() {
            match (e.lb, e.ub) {
                (2, None) => {}
                (lb, None) => parts.push(format!("a{}≥{lb}", i + 1)),
                (lb, Some(ub)) if lb == ub => parts.push(format!("a{}={lb}", i + 1)),
                (lb, Some(ub)) => parts.push(format!("a{}∈[{lb},{ub}]", i + 1)),
            }
        }
        match self.d_candidates.as_deref() {
            None => {}
            Some([d]) => parts.push(format!("D={d}")),
            Some(ds) => parts.push(format!(
                "D∈{{{}}}",
                ds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
            )),
        }
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_json_fills_defaults() {
        let c: CaseSpec = serde_json::from_str(r#"{"k":4,"slots":[{"fixed":3},{"fixed":23}]}"#).unwrap();
        assert_eq!(c, CaseSpec::open(4).with_fixed(0, 3).with_fixed(1, 23));
        let back: CaseSpec = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let long: CaseSpec = serde_json::from_str(r#"{"k":1,"slots":[{"fixed":3},{"fixed":5}]}"#).unwrap();
        assert!(long.validate().is_err());
        let open: CaseSpec = serde_json::from_str(r#"{"k":2,"slots":[{"range":{"lo":5}}]}"#).unwrap();
        assert_eq!(open.slots[0], Slot::Range { lo: 5, hi: None });
    }

    fn range(lo: u64, hi: Option<u64>) -> Slot {
        Slot::Range { lo, hi }
    }

    #[test]
    fn effective_propagates_ordering() {
        let case = CaseSpec::from_slots(vec![Slot::Fixed(3), Slot::Fixed(23), range(3, None), range(3, None)]);
        let eff = case.effective().unwrap();
        assert_eq!(eff[2], SlotBounds { min: 29, max: None });
        assert_eq!(eff[3], SlotBounds { min: 31, max: None });

        let case = CaseSpec::from_slots(vec![Slot::Fixed(3), range(5, None), range(5, Some(200))]);
        let eff = case.effective().unwrap();
        assert_eq!(eff[1], SlotBounds { min: 5, max: Some(197) });
        assert_eq!(eff[2], SlotBounds { min: 7, max: Some(199) });
    }

    #[test]
    fn empty_cases() {
        let case = CaseSpec::from_slots(vec![Slot::Fixed(7), Slot::Fixed(5)]);
        assert!(case.effective().is_none());
        let case = CaseSpec::from_slots(vec![Slot::Fixed(3), range(4, Some(4))]);
        assert!(case.effective().is_none());
        let case = CaseSpec::from_slots(vec![range(3, Some(5)), range(3, Some(5)), range(3, Some(5))]);
        assert!(case.effective().is_none());
    }

    #[test]
    fn normalization_fixes_singletons() {
        let case = CaseSpec::from_slots(vec![
            Slot::Fixed(3),
            Slot::Fixed(17),
            Slot::Fixed(43),
            range(44, Some(52)),
        ]);
        let norm = case.normalized();
        assert_eq!(norm.slots[3], Slot::Fixed(47));
        assert_eq!(norm.normalized(), norm);
    }

    #[test]
    fn validation() {
        assert!(CaseSpec::open(4).validate().is_ok());
        assert!(CaseSpec::from_slots(vec![Slot::Fixed(9)]).validate().is_err());
        assert!(CaseSpec::open(2).with_exp_lb(0, 3).validate().is_err());
        assert!(CaseSpec::open(2).with_d(4).validate().is_err());
        assert!(CaseSpec::from_slots(vec![Slot::Fixed(5), Slot::Fixed(3)])
            .validate()
            .is_err());
    }

    #[test]
    fn display() {
        let case = CaseSpec::from_slots(vec![
            Slot::Fixed(3),
            Slot::Fixed(23),
            range(29, Some(31)),
            range(31, None),
        ])
        .with_exp_lb(0, 6)
        .with_d(3);
        assert_eq!(case.to_string(), "p1=3 p2=23 p3∈[29,31] p4≥31 a1≥6 D=3");
    }

    #[test]
    fn json_shape() {
        let case = CaseSpec::from_slots(vec![Slot::Fixed(3), range(5, None)]);
        let json = serde_json::to_string(&case).unwrap();
        assert_eq!(
            json,
            r#"{"k":2,"slots":[{"fixed":3},{"range":{"lo":5,"hi":null}}],"exponents":[{"lb":2,"ub":null},{"lb":2,"ub":null}],"d_candidates":null}"#
        );
    }
}
