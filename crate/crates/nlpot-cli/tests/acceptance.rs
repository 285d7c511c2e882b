//! The acceptance gate: every criterion must pass at its pinned tolerance.
//! One line per criterion is printed so failures are self-describing.

#[test]
fn acceptance_criteria() {
    let results = nlpot_cli::acceptance::run_all(7);
    assert_eq!(results.len(), 13);
    let mut all_passed = true;
    for r in &results {
        println!(
            "{} criterion {:2}: {} — {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail
        );
        all_passed &= r.passed;
    }
    assert!(all_passed, "acceptance criteria failed; see the table above");
}
