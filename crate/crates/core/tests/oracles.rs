mod common;

use std::time::Instant;

use common::feature_oracle_sweep;

#[test]
fn measures_match_brute_force_on_small_graphs() {
    let t = Instant::now();
    let (checked, bad) = feature_oracle_sweep(2024, 200, 12, 1e-9);
    assert!(checked > 200);
    assert!(bad.is_empty(), "{} mismatches, first: {:?}", bad.len(), &bad[..bad.len().min(10)]);
    assert!(t.elapsed().as_secs() < 60);
}
