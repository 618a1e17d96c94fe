//! Law of large numbers for a single walker: the exact averaged kernel,
//! rescaled by `1/n`, approaches the limit law `F`.

use qwalk::{averaged_kernel, ks_distance_to_limit};

// Computed with an independent numpy evolution of the amplitudes and the
// closed form F(x) = 1/2 + atan(x/√(1−2x²))/π.
const FROZEN: [(u64, f64); 3] = [
    (20, 0.092_786_343_430_682_84),
    (200, 0.037_566_384_096_947_056),
    (2000, 0.014_243_679_387_958_647),
];

#[test]
fn ks_matches_frozen_values_and_decreases() {
    let mut previous = f64::INFINITY;
    for (n, expected) in FROZEN {
        let ks = ks_distance_to_limit(&averaged_kernel(n), n);
        assert!((ks - expected).abs() < 1e-8, "n = {n}: {ks} vs {expected}");
        assert!(ks < previous);
        previous = ks;
    }
    assert!(previous <= 0.03);
}
