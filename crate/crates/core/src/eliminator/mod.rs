//! Mechanized case elimination for odd deficient perfect numbers with a
//! fixed number of distinct prime factors.

pub mod case;
pub mod check;
pub mod engine;
pub mod rules;
pub mod trace;

pub use case::{CaseSpec, ExponentRange, Slot, SlotBounds};
pub use check::{check_trace, CheckFailure, CheckReport};
pub use engine::{assess, eliminate, prove, prove_theorem_1, prove_theorem_2, Assessment, Target};
pub use rules::{
    bound_prime_slot, feasible_d_values, g_from_primes, g_value, q_can_divide_sigma_even_exp, r1_abundancy_eliminate,
    r3_fg_gap_eliminate, r4_order_parity_eliminate, r5_sigma_forcing, ForcingOutcome, PrimeChoice, SlotBound,
};
pub use trace::{Budget, ProofTrace, RuleId, SlotLeaves, SurvivalReason, TraceNode, TraceSummary, Verdict, Witness};
