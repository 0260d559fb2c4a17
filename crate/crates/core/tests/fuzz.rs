// SPDX-License-Identifier: Apache-2.0

use uil::fuzz::{fuzz, generate_text, trial};
use uil::ir::{validate, Severity};
use uil::text::parse;

#[test]
fn generation_is_deterministic_and_valid() {
    for seed in 0..50 {
        let a = generate_text(seed);
        assert_eq!(a, generate_text(seed));
        let p = parse(&a).unwrap();
        assert!(
            validate(&p).iter().all(|d| d.severity != Severity::Error),
            "seed {seed}"
        );
    }
    assert_ne!(generate_text(1), generate_text(2));
}

#[test]
fn refinement_holds_on_a_sample() {
    let r = fuzz(7, 150);
    assert_eq!(r.checks, 450);
    assert!(r.ok(), "{:#?}", r.failures.first());
}

#[test]
fn report_does_not_depend_on_scheduling() {
    let a = fuzz(99, 20);
    let serial: Vec<_> = (99..119).flat_map(trial).collect();
    assert_eq!(a.checks as usize, serial.len());
    assert_eq!(
        a.failures.len(),
        serial.iter().filter(|r| r.is_err()).count()
    );
}
