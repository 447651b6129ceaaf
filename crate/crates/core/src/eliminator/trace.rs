use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::case::CaseSpec;
use super::rules::{AbundancyWitness, DBoundWitness, ForcingWitness, GapWitness, ParityWitness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    #[serde(rename = "R1-abundancy")]
    R1Abundancy,
    #[serde(rename = "R2-D-bound")]
    R2DBound,
    #[serde(rename = "R3-fg-gap")]
    R3FgGap,
    #[serde(rename = "R4-order-parity")]
    R4OrderParity,
    #[serde(rename = "R5-sigma-forcing")]
    R5SigmaForcing,
    Branch,
}

impl RuleId {
    pub fn as_str(&self) -> &'static str {
        match self {
            RuleId::R1Abundancy => "R1-abundancy",
            RuleId::R2DBound => "R2-D-bound",
            RuleId::R3FgGap => "R3-fg-gap",
            RuleId::R4OrderParity => "R4-order-parity",
            RuleId::R5SigmaForcing => "R5-sigma-forcing",
            RuleId::Branch => "Branch",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Eliminated,
    Refined,
    Branched,
    Survived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SurvivalReason {
    /// No rule bounds this open slot.
    Unbounded { slot: usize },
    /// Every exponent is pinned or past the scanning cap.
    ExponentCap { cap: u32 },
    /// The branch depth limit was reached.
    ScopeLimit,
    /// The node or branch-width budget ran out.
    Budget,
}

/// Prime cut of one slot: the part above `bound` is refuted by R1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCut {
    pub slot: usize,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Abundancy(AbundancyWitness),
    /// No increasing tuple of primes fits the slots.
    EmptyCase,
    /// Children: one refuted part per cut, then the remaining case.
    SlotCuts {
        cuts: Vec<SlotCut>,
    },
    DBound(DBoundWitness),
    Forcing {
        slot: usize,
        exclusions: Vec<ForcingWitness>,
        new_lb: u32,
    },
    Parity(ParityWitness),
    Gap(GapWitness),
    PrimeSplit {
        slot: usize,
        primes: Vec<u64>,
    },
    /// Children: exponent pinned at `exponent`, then exponent at least `exponent + 2`.
    ExponentSplit {
        slot: usize,
        exponent: u32,
    },
    Survival(SurvivalReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceNode {
    pub case: CaseSpec,
    pub rule: Option<RuleId>,
    pub verdict: Verdict,
    pub witnesses: Witness,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TraceNode>,
}

impl TraceNode {
    pub fn leaf(case: CaseSpec, rule: RuleId, witnesses: Witness) -> Self {
        TraceNode {
            case,
            rule: Some(rule),
            verdict: Verdict::Eliminated,
            witnesses,
            children: Vec::new(),
        }
    }

    pub fn survived(case: CaseSpec, reason: SurvivalReason) -> Self {
        TraceNode {
            case,
            rule: None,
            verdict: Verdict::Survived,
            witnesses: Witness::Survival(reason),
            children: Vec::new(),
        }
    }

    /// Label of the `i`-th child as it appears in trace paths.
    pub fn child_label(&self, i: usize) -> String {
        let child = &self.children[i];
        match &self.witnesses {
            Witness::PrimeSplit { slot, primes } => format!("p{}={}", slot + 1, primes.get(i).copied().unwrap_or(0)),
            Witness::ExponentSplit { slot, exponent } if i == 0 => format!("a{}={exponent}", slot + 1),
            Witness::ExponentSplit { slot, exponent } => format!("a{}>={}", slot + 1, exponent + 2),
            Witness::DBound(w) => format!("D={}", w.values.get(i).copied().unwrap_or(0)),
            Witness::SlotCuts { cuts } => match cuts.get(i) {
                Some(c) => format!("cut-p{}>{}", c.slot + 1, c.bound),
                None => "rest".to_string(),
            },
            Witness::Forcing { slot, new_lb, .. } => format!("a{}>={new_lb}", slot + 1),
            _ => child.rule.map_or("step", |r| r.as_str()).to_string(),
        }
    }

    /// Depth-first walk with the path of each node.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&str, &'a TraceNode)) {
        fn go<'a>(node: &'a TraceNode, path: &mut String, f: &mut impl FnMut(&str, &'a TraceNode)) {
            f(path, node);
            for i in 0..node.children.len() {
                let len = path.len();
                path.push('/');
                path.push_str(&node.child_label(i));
                go(&node.children[i], path, f);
                path.truncate(len);
            }
        }
        let mut path = String::from("root");
        go(self, &mut path, f);
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(TraceNode::depth).max().unwrap_or(0)
    }
}

/// Limits on the elimination search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_nodes: u64,
    /// Branch steps allowed below the root; `None` is unlimited.
    pub max_branch_depth: Option<u32>,
    /// Largest exponent R5 examines and exponent splitting pins.
    pub exponent_cap: u32,
    /// Largest prime split performed at one node.
    pub max_branch_width: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 2_000_000,
            max_branch_depth: None,
            exponent_cap: 20,
            max_branch_width: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTrace {
    pub target: String,
    pub budget: Budget,
    pub root: TraceNode,
}

/// Leaves of a trace that share the value of one slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotLeaves {
    pub eliminated: usize,
    pub survived: usize,
    /// Rules applied at any node with this slot value, splits excluded.
    pub rules: BTreeSet<RuleId>,
}

/// Counts over a trace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub nodes: usize,
    pub eliminated: usize,
    pub survived: usize,
    pub budget_survivors: usize,
    pub by_rule: BTreeMap<String, usize>,
    pub max_depth: usize,
}

impl ProofTrace {
    pub fn summary(&self) -> TraceSummary {
        let mut s = TraceSummary {
            max_depth: self.root.depth(),
            ..Default::default()
        };
        self.root.walk(&mut |_, node| {
            s.nodes += 1;
            match node.verdict {
                Verdict::Eliminated => {
                    s.eliminated += 1;
                    let rule = node.rule.map_or("none", |r| r.as_str());
                    *s.by_rule.entry(rule.to_string()).or_default() += 1;
                }
                Verdict::Survived => {
                    s.survived += 1;
                    if node.witnesses == Witness::Survival(SurvivalReason::Budget) {
                        s.budget_survivors += 1;
                    }
                }
                _ => {}
            }
        });
        s
    }

    /// Every surviving leaf with its path.
    pub fn survivors(&self) -> Vec<(String, &TraceNode)> {
        let mut out = Vec::new();
        self.root.walk(&mut |path, node| {
            if node.verdict == Verdict::Survived {
                out.push((path.to_string(), node));
            }
        });
        out
    }

    /// Leaves grouped by the prime in `slot`; `None` collects leaves where the
    /// slot is still open.
    pub fn leaves_by_slot(&self, slot: usize) -> BTreeMap<Option<u64>, SlotLeaves> {
        let mut out: BTreeMap<Option<u64>, SlotLeaves> = BTreeMap::new();
        self.root.walk(&mut |_, node| {
            let key = node.case.slots.get(slot).and_then(|s| s.fixed());
            let entry = out.entry(key).or_default();
            match node.verdict {
                Verdict::Eliminated => entry.eliminated += 1,
                Verdict::Survived => entry.survived += 1,
                Verdict::Refined | Verdict::Branched => {}
            }
            if let Some(rule) = node.rule.filter(|&r| r != RuleId::Branch) {
                entry.rules.insert(rule);
            }
        });
        out.retain(|_, v| v.eliminated + v.survived > 0 || !v.rules.is_empty());
        out
    }

    /// Every refuted leaf with its path.
    pub fn eliminated_leaves(&self) -> Vec<(String, &TraceNode)> {
        let mut out = Vec::new();
        self.root.walk(&mut |path, node| {
            if node.verdict == Verdict::Eliminated {
                out.push((path.to_string(), node));
            }
        });
        out
    }
}
