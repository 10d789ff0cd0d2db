//! One pass/fail line per acceptance criterion. Tolerances live in the
//! criteria themselves: exact equality for every invariant, and wall-clock
//! limits of 1 s, 10 s, 60 s per class and 600 s for the quartic family.

use p2scatter::invariants::ExtractConfig;
use p2scatter::verify::{criterion, Golden, CRITERIA};

#[test]
fn acceptance() {
    let golden = Golden::default();
    let cfg = ExtractConfig::default();
    let mut failed = Vec::new();
    for id in CRITERIA {
        let r = criterion(id, &golden, &cfg);
        println!("{}", r.line());
        if !r.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
