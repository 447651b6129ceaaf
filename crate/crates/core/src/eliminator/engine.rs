//! Depth-first driver. At every node the rules run in a fixed order:
//! R1 on the whole case, R1 slot cuts, the D bound (R2), then with `D`
//! fixed the sigma forcing (R5), order parity (R4) and the f/g gap (R3),
//! and finally a branch on the first open slot or on an exponent.

use std::collections::BTreeSet;

use super::case::{CaseSpec, ExponentRange, Slot};
use super::rules::{
    bound_prime_slot, feasible_d_values, r1_default, r3_fg_gap_eliminate, r4_scan, r5_sigma_forcing, valuation,
    ForcingOutcome, SlotBound,
};
use super::trace::{Budget, ProofTrace, RuleId, SlotCut, SurvivalReason, TraceNode, Verdict, Witness};
use crate::arith::{factorize, primes_in_range};
use crate::error::{Error, Result};

/// Case with `D` pinned and each fixed prime's exponent raised to cover its
/// power in `D`.
pub fn with_d_raised(case: &CaseSpec, d: u64) -> CaseSpec {
    let mut out = case.clone().with_d(d);
    for (i, p) in case.fixed_primes() {
        let v = valuation(d, p);
        let need = v + v % 2;
        if need > out.exponents[i].lb {
            out.exponents[i].lb = need;
        }
    }
    out.normalized()
}

struct Engine<'a> {
    budget: &'a Budget,
    nodes: u64,
}

impl Engine<'_> {
    fn solve(&mut self, case: CaseSpec, depth: u32) -> Result<TraceNode> {
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Ok(TraceNode::survived(case, SurvivalReason::Budget));
        }
        let Some(eff) = case.effective() else {
            return Ok(TraceNode::leaf(case, RuleId::R1Abundancy, Witness::EmptyCase));
        };
        if let Some(w) = r1_default(&case)? {
            return Ok(TraceNode::leaf(case, RuleId::R1Abundancy, Witness::Abundancy(w)));
        }
        if self.budget.max_branch_depth.is_some_and(|limit| depth >= limit) {
            return Ok(TraceNode::survived(case, SurvivalReason::ScopeLimit));
        }

        let mut cur = case.clone();
        let mut cuts = Vec::new();
        let mut children = Vec::new();
        for j in 0..case.k {
            if cur.slots[j].is_fixed() {
                continue;
            }
            if let SlotBound::Bounded(w) = bound_prime_slot(&cur, j)? {
                let cur_eff = cur.effective().expect("non-empty");
                let refuted = cur
                    .clone()
                    .with_slot(
                        j,
                        Slot::Range {
                            lo: w.first_excluded,
                            hi: cur_eff[j].max,
                        },
                    )
                    .normalized();
                children.push(TraceNode::leaf(
                    refuted,
                    RuleId::R1Abundancy,
                    Witness::Abundancy(w.test),
                ));
                cuts.push(SlotCut {
                    slot: j,
                    bound: w.bound,
                });
                cur = cur
                    .with_slot(
                        j,
                        Slot::Range {
                            lo: cur_eff[j].min,
                            hi: Some(w.bound),
                        },
                    )
                    .normalized();
            }
        }
        if !cuts.is_empty() {
            children.push(self.solve(cur, depth)?);
            return Ok(TraceNode {
                case,
                rule: Some(RuleId::R1Abundancy),
                verdict: Verdict::Refined,
                witnesses: Witness::SlotCuts { cuts },
                children,
            });
        }

        match case.fixed_d() {
            None => {
                if let Some(w) = feasible_d_values(&case)? {
                    let children = w
                        .values
                        .iter()
                        .map(|&d| self.solve(with_d_raised(&case, d), depth))
                        .collect::<Result<Vec<_>>>()?;
                    let verdict = if children.is_empty() {
                        Verdict::Eliminated
                    } else {
                        Verdict::Branched
                    };
                    return Ok(TraceNode {
                        case,
                        rule: Some(RuleId::R2DBound),
                        verdict,
                        witnesses: Witness::DBound(w),
                        children,
                    });
                }
            }
            Some(d) => {
                if let Some(node) = self.sigma_forcing(&case, d, depth)? {
                    return Ok(node);
                }
                if case.all_fixed() {
                    if let Some(w) = r4_scan(&case, d)? {
                        return Ok(TraceNode::leaf(case, RuleId::R4OrderParity, Witness::Parity(w)));
                    }
                }
                if let Some(w) = r3_fg_gap_eliminate(&case, d)? {
                    return Ok(TraceNode::leaf(case, RuleId::R3FgGap, Witness::Gap(w)));
                }
            }
        }

        self.branch(case, &eff, depth)
    }

    fn sigma_forcing(&mut self, case: &CaseSpec, d: u64, depth: u32) -> Result<Option<TraceNode>> {
        let cap = self.budget.exponent_cap;
        for (i, _) in case.fixed_primes() {
            let ExponentRange { mut lb, ub } = case.exponents[i];
            let mut exclusions = Vec::new();
            while lb <= cap && ub.is_none_or(|u| lb <= u) {
                match r5_sigma_forcing(case, d, i, lb)? {
                    ForcingOutcome::ExponentExcluded(w) => {
                        exclusions.push(w);
                        lb += 2;
                    }
                    _ => break,
                }
            }
            if exclusions.is_empty() {
                continue;
            }
            let witnesses = Witness::Forcing {
                slot: i,
                exclusions,
                new_lb: lb,
            };
            if ub.is_some_and(|u| lb > u) {
                return Ok(Some(TraceNode::leaf(case.clone(), RuleId::R5SigmaForcing, witnesses)));
            }
            let child = self.solve(case.clone().with_exp_lb(i, lb).normalized(), depth)?;
            return Ok(Some(TraceNode {
                case: case.clone(),
                rule: Some(RuleId::R5SigmaForcing),
                verdict: Verdict::Refined,
                witnesses,
                children: vec![child],
            }));
        }
        Ok(None)
    }

    fn branch(&mut self, case: CaseSpec, eff: &[super::case::SlotBounds], depth: u32) -> Result<TraceNode> {
        let cap = self.budget.exponent_cap;
        let splittable = |e: &ExponentRange| !e.is_pinned() && e.lb <= cap;
        let first_open = case.open_slots().next();
        if let Some(j) = first_open {
            if let Some(max) = eff[j].max {
                let primes = primes_in_range(eff[j].min, max);
                if primes.len() > self.budget.max_branch_width {
                    return Ok(TraceNode::survived(case, SurvivalReason::Budget));
                }
                let children = primes
                    .iter()
                    .map(|&p| self.solve(case.clone().with_fixed(j, p).normalized(), depth + 1))
                    .collect::<Result<Vec<_>>>()?;
                return Ok(TraceNode {
                    case,
                    rule: Some(RuleId::Branch),
                    verdict: Verdict::Branched,
                    witnesses: Witness::PrimeSplit { slot: j, primes },
                    children,
                });
            }
            let fixed: Vec<usize> = case.fixed_primes().map(|(i, _)| i).collect();
            for i in fixed {
                let e = case.exponents[i];
                if !splittable(&e) {
                    continue;
                }
                let pinned = case.clone().with_exponents(i, ExponentRange::exactly(e.lb));
                if bound_prime_slot(&pinned, j)? != SlotBound::Unbounded {
                    return self.exponent_split(case, i, depth);
                }
            }
            return Ok(TraceNode::survived(case, SurvivalReason::Unbounded { slot: j }));
        }
        if let Some(i) = case.exponents.iter().position(splittable) {
            return self.exponent_split(case, i, depth);
        }
        Ok(TraceNode::survived(case, SurvivalReason::ExponentCap { cap }))
    }

    fn exponent_split(&mut self, case: CaseSpec, i: usize, depth: u32) -> Result<TraceNode> {
        let e = case.exponents[i];
        let pinned = case
            .clone()
            .with_exponents(i, ExponentRange::exactly(e.lb))
            .normalized();
        let rest = case
            .clone()
            .with_exponents(i, ExponentRange { lb: e.lb + 2, ub: e.ub })
            .normalized();
        let children = vec![self.solve(pinned, depth + 1)?, self.solve(rest, depth + 1)?];
        Ok(TraceNode {
            case,
            rule: Some(RuleId::Branch),
            verdict: Verdict::Branched,
            witnesses: Witness::ExponentSplit {
                slot: i,
                exponent: e.lb,
            },
            children,
        })
    }
}

/// Run the rules on `case` until every leaf is refuted or survives.
pub fn eliminate(case: &CaseSpec, budget: &Budget) -> Result<ProofTrace> {
    eliminate_named(case, budget, "custom")
}

fn eliminate_named(case: &CaseSpec, budget: &Budget, target: &str) -> Result<ProofTrace> {
    case.validate()?;
    if let Some(d) = case.fixed_d() {
        let eff = case.effective().expect("validated");
        for &(r, _) in factorize(d).entries() {
            let fixed = case.fixed_primes().any(|(_, p)| p == r);
            let open = case.open_slots().any(|j| eff[j].contains(r));
            if !fixed && !open {
                return Err(Error::InvalidCase(format!("D = {d} uses prime {r} outside the case")));
            }
        }
    }
    let mut engine = Engine { budget, nodes: 0 };
    let root = engine.solve(case.clone(), 0)?;
    Ok(ProofTrace {
        target: target.to_string(),
        budget: budget.clone(),
        root,
    })
}

/// Four prime factors: `p1 = 3`, and every `p2` except 5 and 7 is refuted.
pub fn prove_theorem_1() -> Result<ProofTrace> {
    prove(Target::Theorem1, &Target::Theorem1.default_budget())
}

/// Five prime factors: `p1 >= 7` is refuted; 3 and 5 stay open.
pub fn prove_theorem_2() -> Result<ProofTrace> {
    prove(Target::Theorem2, &Target::Theorem2.default_budget())
}

/// Run a theorem target under an explicit budget.
pub fn prove(target: Target, budget: &Budget) -> Result<ProofTrace> {
    let (k, name) = match target {
        Target::Theorem1 => (4, "theorem-1"),
        Target::Theorem2 => (5, "theorem-2"),
        Target::Custom => return Err(Error::InvalidCase("a custom target needs a case".into())),
    };
    eliminate_named(&CaseSpec::open(k), budget, name)
}

/// Which theorem a trace is assessed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Theorem1,
    Theorem2,
    Custom,
}

impl Target {
    pub fn from_name(name: &str) -> Self {
        match name {
            "theorem-1" => Target::Theorem1,
            "theorem-2" => Target::Theorem2,
            _ => Target::Custom,
        }
    }

    /// Theorem 2 only needs the first prime bounded, so it stops after one split.
    pub fn default_budget(self) -> Budget {
        match self {
            Target::Theorem2 => Budget {
                max_branch_depth: Some(1),
                ..Budget::default()
            },
            _ => Budget::default(),
        }
    }
}

/// What a trace establishes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assessment {
    pub holds: bool,
    pub inconclusive: bool,
    /// Values of the theorem's distinguished slot among survivors.
    pub survived_values: BTreeSet<u64>,
    pub notes: Vec<String>,
}

fn slot_value(case: &CaseSpec, i: usize) -> Option<u64> {
    case.slots.get(i).and_then(Slot::fixed)
}

/// Check the trace's survivors against the expected outcome of its target.
pub fn assess(trace: &ProofTrace) -> Assessment {
    let survivors = trace.survivors();
    let inconclusive = survivors
        .iter()
        .any(|(_, n)| n.witnesses == Witness::Survival(SurvivalReason::Budget));
    let mut notes = Vec::new();
    let (slot, expected): (usize, &[u64]) = match Target::from_name(&trace.target) {
        Target::Theorem1 => (1, &[5, 7]),
        Target::Theorem2 => (0, &[3, 5]),
        Target::Custom => {
            let holds = survivors.is_empty();
            if !holds {
                notes.push(format!("{} surviving leaves", survivors.len()));
            }
            return Assessment {
                holds,
                inconclusive,
                survived_values: BTreeSet::new(),
                notes,
            };
        }
    };
    let mut values = BTreeSet::new();
    let mut stray = false;
    for (path, node) in &survivors {
        match slot_value(&node.case, slot) {
            Some(v) => {
                values.insert(v);
            }
            None => {
                stray = true;
                notes.push(format!("survivor at {path} leaves p{} open", slot + 1));
            }
        }
        if Target::from_name(&trace.target) == Target::Theorem1 && slot_value(&node.case, 0) != Some(3) {
            stray = true;
            notes.push(format!("survivor at {path} does not have p1 = 3"));
        }
    }
    let expected: BTreeSet<u64> = expected.iter().copied().collect();
    if values != expected {
        notes.push(format!("survived values {values:?}, expected {expected:?}"));
    }
    Assessment {
        holds: !stray && !inconclusive && values == expected,
        inconclusive,
        survived_values: values,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_raising() {
        let case = CaseSpec::open(4)
            .with_fixed(0, 3)
            .with_fixed(1, 11)
            .with_fixed(2, 13)
            .normalized();
        let raised = with_d_raised(&case, 27);
        assert_eq!(raised.exponents[0].lb, 4);
        assert_eq!(raised.fixed_d(), Some(27));
        assert_eq!(with_d_raised(&case, 9).exponents[0].lb, 2);
    }

    #[test]
    fn p1_at_least_five_is_refuted() {
        let case = CaseSpec::open(4).with_slot(0, Slot::Range { lo: 5, hi: None });
        let trace = eliminate(&case, &Budget::default()).unwrap();
        assert_eq!(trace.root.verdict, Verdict::Eliminated);
        assert!(trace.survivors().is_empty());
    }

    #[test]
    fn p2_equal_23_is_refuted() {
        let case = CaseSpec::open(4).with_fixed(0, 3).with_fixed(1, 23).normalized();
        let trace = eliminate(&case, &Budget::default()).unwrap();
        assert!(trace.survivors().is_empty(), "{:?}", trace.survivors());
    }

    #[test]
    fn p2_equal_7_survives() {
        let case = CaseSpec::open(4).with_fixed(0, 3).with_fixed(1, 7).normalized();
        let trace = eliminate(&case, &Budget::default()).unwrap();
        assert!(!trace.survivors().is_empty());
    }

    #[test]
    fn budget_exhaustion_is_recorded() {
        let case = CaseSpec::open(4).with_fixed(0, 3).with_fixed(1, 13).normalized();
        let budget = Budget {
            max_nodes: 5,
            ..Budget::default()
        };
        let trace = eliminate(&case, &budget).unwrap();
        assert!(trace.summary().budget_survivors > 0);
        assert!(assess(&trace).inconclusive);
    }
}
