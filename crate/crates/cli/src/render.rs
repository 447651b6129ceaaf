use std::collections::BTreeSet;
use std::fmt::Write as _;

use dpn_core::arith::{DecimalMode, Factorization, Rational};
use dpn_core::classify::{Classification, Kind};
use dpn_core::eliminator::rules::{ExclusionReason, GapWitness, OrderRow, ParityWitness, Requirement};
use dpn_core::eliminator::{Assessment, ProofTrace, SurvivalReason, Target, TraceNode, Witness};
use dpn_core::search::SearchReport;

/// How rationals are shown next to their exact value.
#[derive(Debug, Clone, Copy)]
pub struct Decimals {
    pub digits: usize,
    pub mode: DecimalMode,
}

impl Decimals {
    fn show(&self, r: &Rational) -> String {
        format!("{r} ({}...)", r.to_decimal(self.digits, self.mode))
    }
}

pub fn factorization(f: &Factorization) -> String {
    if f.entries().is_empty() {
        return "1".to_string();
    }
    f.entries()
        .iter()
        .map(|&(p, a)| if a == 1 { p.to_string() } else { format!("{p}^{a}") })
        .collect::<Vec<_>>()
        .join(" * ")
}

pub fn classification(c: &Classification) -> String {
    let mut out = String::new();
    let kind = match (&c.deficient_perfect, c.kind) {
        (Some(r), _) if r.is_degenerate() => format!("deficient perfect (degenerate), d={}, D={}", r.d, r.complement),
        (Some(r), _) => format!("deficient perfect, d={}, D={}", r.d, r.complement),
        (None, Kind::Perfect) => "perfect".to_string(),
        (None, Kind::Deficient) => "deficient".to_string(),
        (None, Kind::Abundant) => "abundant".to_string(),
    };
    let _ = writeln!(out, "{}: {kind}", c.n);
    let f = dpn_core::arith::factorize(c.n);
    let _ = writeln!(out, "factorization: {}", factorization(&f));
    let _ = writeln!(out, "sigma: {}", c.sigma);
    if c.almost_perfect {
        let _ = writeln!(out, "almost perfect: sigma(n) = 2n - 1");
    }
    if let Some(d) = c.near_perfect_divisor {
        let _ = writeln!(out, "near perfect: sigma(n) = 2n + {d}");
    }
    out
}

fn rows(rows: &[OrderRow]) -> String {
    rows.iter()
        .map(|r| {
            let mut s = format!("ord_{}({})={}", r.modulus, r.prime, r.order);
            if let Some(res) = &r.residues {
                let shown: Vec<String> = res.iter().map(|(a, v)| format!("a={a}:{v}")).collect();
                let _ = write!(s, " [sigma mod {}: {}]", r.modulus, shown.join(" "));
            }
            s
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn exclusion(reason: &ExclusionReason) -> String {
    match reason {
        ExclusionReason::ForcedOutsideRange { factor } => {
            format!("forces prime {factor}, which fits no slot")
        }
        ExclusionReason::ExcessMultiplicity {
            factor,
            valuation,
            available,
        } => {
            format!("{factor}^{valuation} divides it but only {factor}^{available} is available")
        }
        ExclusionReason::UnsuppliedCofactor { cofactor } => format!("leaves cofactor {cofactor}"),
        ExclusionReason::TooManyPrimes { factors, open_slots } => {
            format!("needs primes {factors:?} but only {open_slots} open slots")
        }
    }
}

/// One-line description of what a node's witness establishes.
pub fn witness(node: &TraceNode, dec: Decimals) -> String {
    match &node.witnesses {
        Witness::Abundancy(w) => format!(
            "abundancy of {:?} at most {} plus 1/{} is {} {} 2",
            w.primes,
            dec.show(&w.ceiling),
            w.d_min,
            dec.show(&w.total),
            if w.strict { "<=" } else { "<" }
        ),
        Witness::EmptyCase => "no increasing prime tuple fits the slots".to_string(),
        Witness::SlotCuts { cuts } => {
            let cuts: Vec<String> = cuts.iter().map(|c| format!("p{} <= {}", c.slot + 1, c.bound)).collect();
            format!("abundancy bounds {}", cuts.join(", "))
        }
        Witness::DBound(w) => format!(
            "D in {:?}; every D >= {} fails against ceiling {}",
            w.values,
            w.threshold,
            dec.show(&w.ceiling)
        ),
        Witness::Forcing {
            slot,
            exclusions,
            new_lb,
        } => {
            let parts: Vec<String> = exclusions
                .iter()
                .map(|x| format!("sigma({}^{})={} {}", x.prime, x.exponent, x.sigma, exclusion(&x.reason)))
                .collect();
            if exclusions.is_empty() {
                format!("a{} >= {new_lb}", slot + 1)
            } else {
                format!("a{} >= {new_lb}: {}", slot + 1, parts.join("; "))
            }
        }
        Witness::Parity(ParityWitness::Modulus {
            q,
            requirement,
            rows: r,
        }) => {
            let why = match requirement {
                Requirement::DividesTwoDMinusOne => "divides 2D-1".to_string(),
                Requirement::SlotPrime {
                    valuation_in_d,
                    exponent_lb,
                } => format!("appears to exponent >= {exponent_lb} in n but {valuation_in_d} in D"),
            };
            format!("{q} {why}, so it must divide sigma(n), yet {}", rows(r))
        }
        Witness::Parity(ParityWitness::Slot { prime, rows: r }) => {
            format!("sigma({prime}^a) has no prime the equation can absorb: {}", rows(r))
        }
        Witness::Gap(GapWitness::FgGap { f_min, g_max, .. }) => {
            format!("f >= {} > {} >= g", dec.show(f_min), dec.show(g_max))
        }
        Witness::Gap(GapWitness::Floor { floor, target, .. }) => {
            format!("sigma(n)/n >= {} > 2 - 1/D = {}", dec.show(floor), dec.show(target))
        }
        Witness::PrimeSplit { slot, primes } => {
            let shown = if primes.len() > 12 {
                format!(
                    "{} primes from {} to {}",
                    primes.len(),
                    primes[0],
                    primes[primes.len() - 1]
                )
            } else {
                format!("{primes:?}")
            };
            format!("split p{} over {shown}", slot + 1)
        }
        Witness::ExponentSplit { slot, exponent } => {
            format!("split a{0} = {exponent} | a{0} >= {1}", slot + 1, exponent + 2)
        }
        Witness::Survival(reason) => match reason {
            SurvivalReason::Unbounded { slot } => {
                format!("p{} is not bounded by any rule", slot + 1)
            }
            SurvivalReason::ExponentCap { cap } => format!("exponent cap {cap} reached"),
            SurvivalReason::ScopeLimit => "branch depth limit reached".to_string(),
            SurvivalReason::Budget => "node budget exhausted".to_string(),
        },
    }
}

fn distinguished_slot(trace: &ProofTrace) -> Option<usize> {
    match Target::from_name(&trace.target) {
        Target::Theorem1 => Some(1),
        Target::Theorem2 => Some(0),
        Target::Custom => None,
    }
}

pub fn trace(trace: &ProofTrace, assessment: &Assessment, dec: Decimals, all_leaves: bool) -> String {
    let mut out = String::new();
    let s = trace.summary();
    let _ = writeln!(out, "target: {}", trace.target);
    let _ = writeln!(out, "root: {}", trace.root.case);
    let _ = writeln!(
        out,
        "nodes: {}  eliminated: {}  survived: {}  max depth: {}",
        s.nodes, s.eliminated, s.survived, s.max_depth
    );
    let by_rule: Vec<String> = s.by_rule.iter().map(|(r, n)| format!("{r} {n}")).collect();
    let _ = writeln!(out, "eliminated by rule: {}", by_rule.join(", "));

    if let Some(slot) = distinguished_slot(trace) {
        let _ = writeln!(out, "leaves by p{}:", slot + 1);
        for (value, leaves) in trace.leaves_by_slot(slot) {
            let label = value.map_or_else(|| "open".to_string(), |v| v.to_string());
            let rules: BTreeSet<&str> = leaves.rules.iter().map(|r| r.as_str()).collect();
            let _ = writeln!(
                out,
                "  p{}={label}: {} eliminated, {} survived; rules {}",
                slot + 1,
                leaves.eliminated,
                leaves.survived,
                rules.into_iter().collect::<Vec<_>>().join(", ")
            );
        }
    }

    let survivors = trace.survivors();
    let _ = writeln!(out, "survivors: {}", survivors.len());
    for (path, node) in &survivors {
        let _ = writeln!(out, "  {path}: {} ({})", node.case, witness(node, dec));
    }
    if all_leaves {
        let _ = writeln!(out, "eliminated leaves:");
        for (path, node) in trace.eliminated_leaves() {
            let rule = node.rule.map_or("-", |r| r.as_str());
            let _ = writeln!(out, "  {path} [{rule}] {}: {}", node.case, witness(node, dec));
        }
    }
    let verdict = if assessment.inconclusive {
        "inconclusive".to_string()
    } else if assessment.holds {
        match distinguished_slot(trace) {
            Some(slot) => format!(
                "holds; survivors have p{} in {:?}",
                slot + 1,
                assessment.survived_values
            ),
            None => "holds; every case eliminated".to_string(),
        }
    } else {
        "does not hold".to_string()
    };
    let _ = writeln!(out, "result: {verdict}");
    for note in &assessment.notes {
        let _ = writeln!(out, "  note: {note}");
    }
    out
}

pub fn search(report: &SearchReport) -> String {
    let mut out = String::new();
    let job = &report.job;
    let _ = writeln!(
        out,
        "search: k={} parity={:?} bound={} even exponents only={}",
        job.k, job.parity, job.bound, job.even_exponents_only
    );
    if let Some(p) = job.partition {
        let _ = writeln!(out, "part {} of {}", p.index, p.ways);
    }
    for p in &report.merged_parts {
        let _ = writeln!(out, "merged part {} of {}", p.index, p.ways);
    }
    let _ = writeln!(
        out,
        "candidates examined: {}  units: {}/{}{}",
        report.candidates_examined,
        report.units_done,
        report.units_total,
        if report.complete { "" } else { " (incomplete)" }
    );
    let _ = writeln!(out, "hits: {:?}", report.hit_values());
    for h in &report.hits {
        let _ = writeln!(
            out,
            "  {} = {}  d={} D={}",
            h.n,
            factorization(&h.factorization),
            h.d,
            h.complement
        );
    }
    for event in &report.lineage {
        let _ = writeln!(out, "checkpoint: {event}");
    }
    out
}

pub fn order_table(primes: &[u64], moduli: &[u64], table: &[Vec<Option<u64>>]) -> String {
    let cells: Vec<Vec<String>> = table
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| c.map_or_else(|| "—".to_string(), |v| v.to_string()))
                .collect()
        })
        .collect();
    let head: Vec<String> = primes.iter().map(u64::to_string).collect();
    let label_width = moduli
        .iter()
        .map(|m| format!("ord_{m}").len())
        .max()
        .unwrap_or(0)
        .max(3);
    let widths: Vec<usize> = (0..primes.len())
        .map(|j| {
            cells
                .iter()
                .map(|r| r[j].chars().count())
                .chain([head[j].len()])
                .max()
                .unwrap_or(1)
        })
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:label_width$}", "p");
    for (h, w) in head.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    for (m, row) in moduli.iter().zip(&cells) {
        let _ = write!(out, "{:label_width$}", format!("ord_{m}"));
        for (c, w) in row.iter().zip(&widths) {
            let pad = w - c.chars().count();
            let _ = write!(out, "  {}{c}", " ".repeat(pad));
        }
        out.push('\n');
    }
    out
}
