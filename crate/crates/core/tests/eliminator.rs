use dpn_core::arith::Rational;
use dpn_core::eliminator::{
    assess, check_trace, eliminate, prove_theorem_2, Budget, CaseSpec, ProofTrace, RuleId, Verdict, Witness,
};
use dpn_core::envelope::{Envelope, Metadata, KIND_PROOF_TRACE};

fn case(fixed: &[u64]) -> CaseSpec {
    fixed
        .iter()
        .enumerate()
        .fold(CaseSpec::open(4), |c, (i, &p)| c.with_fixed(i, p))
}

fn payload_json(trace: &ProofTrace) -> String {
    serde_json::to_string(trace).unwrap()
}

#[test]
fn p2_equal_23_is_eliminated_and_rechecks() {
    let trace = eliminate(&case(&[3, 23]), &Budget::default()).unwrap();
    assert!(trace.survivors().is_empty());
    assert!(assess(&trace).holds);
    let report = check_trace(&trace).unwrap();
    assert_eq!(report.steps_checked, trace.summary().nodes);
}

#[test]
fn traces_are_deterministic() {
    let a = eliminate(&case(&[3, 19]), &Budget::default()).unwrap();
    let b = eliminate(&case(&[3, 19]), &Budget::default()).unwrap();
    assert_eq!(payload_json(&a), payload_json(&b));
}

#[test]
fn envelope_round_trip_preserves_the_trace() {
    let trace = eliminate(&case(&[3, 19]), &Budget::default()).unwrap();
    let json = Envelope::new(KIND_PROOF_TRACE, Metadata::now(None), trace.clone())
        .to_json()
        .unwrap();
    let back: Envelope<ProofTrace> = Envelope::from_json(json.as_bytes(), KIND_PROOF_TRACE).unwrap();
    assert_eq!(back.payload, trace);
}

/// Add one to the `nth` stored numerator.
fn perturb_numerator(json: &str, nth: usize) -> Option<String> {
    let key = "\"num\":\"";
    let start = json.match_indices(key).nth(nth)?.0 + key.len();
    let end = start + json[start..].find('"')?;
    let value: num_bigint::BigInt = json[start..end].parse().ok()?;
    Some(format!("{}{}{}", &json[..start], value + 1, &json[end..]))
}

#[test]
fn every_perturbed_numerator_is_caught() {
    let trace = eliminate(&case(&[3, 23]), &Budget::default()).unwrap();
    let json = payload_json(&trace);
    let count = json.matches("\"num\":\"").count();
    assert!(count > 3);
    for nth in 0..count {
        let tampered: ProofTrace = serde_json::from_str(&perturb_numerator(&json, nth).unwrap()).unwrap();
        let failure = check_trace(&tampered).expect_err("perturbation went unnoticed");
        assert!(failure.path.starts_with("root"), "{failure}");
    }
}

#[test]
fn dropped_branch_is_caught() {
    let mut trace = eliminate(&case(&[3, 19]), &Budget::default()).unwrap();
    fn drop_first_split_child(node: &mut dpn_core::eliminator::TraceNode) -> bool {
        if matches!(node.witnesses, Witness::PrimeSplit { .. }) && node.children.len() > 1 {
            node.children.pop();
            return true;
        }
        node.children.iter_mut().any(drop_first_split_child)
    }
    assert!(drop_first_split_child(&mut trace.root));
    assert!(check_trace(&trace).is_err());
}

#[test]
fn five_factor_root_cut_uses_the_exact_witness() {
    let trace = prove_theorem_2().unwrap();
    assert!(assess(&trace).holds);
    let mut totals = Vec::new();
    trace.root.walk(&mut |_, node| {
        if node.verdict == Verdict::Eliminated && node.rule == Some(RuleId::R1Abundancy) {
            if let Witness::Abundancy(w) = &node.witnesses {
                totals.push((w.primes.clone(), w.total.clone()));
            }
        }
    });
    let expected = Rational::new(2_470_621, 1_451_520).unwrap();
    assert!(
        totals.iter().any(|(p, t)| p == &[7, 11, 13, 17, 19] && *t == expected),
        "{totals:?}"
    );
}
