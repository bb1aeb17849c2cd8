//! Property tests for the metric space of label sequences.

mod common;

use common::edit_distance_recursive;
use proptest::prelude::*;

use shortfirst::ctc::Label;
use shortfirst::metrics::{edit_distance, norm_nll};

fn seq(max_len: usize) -> impl Strategy<Value = Vec<Label>> {
    prop::collection::vec(0u32..5, 0..=max_len)
}

proptest! {
    #[test]
    fn matches_the_exhaustive_oracle(a in seq(12), b in seq(12)) {
        prop_assert_eq!(edit_distance(&a, &b), edit_distance_recursive(&a, &b));
    }

    #[test]
    fn identity_and_symmetry(a in seq(12), b in seq(12)) {
        prop_assert_eq!(edit_distance(&a, &a), 0);
        if a != b {
            prop_assert!(edit_distance(&a, &b) > 0);
        }
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
    }

    #[test]
    fn triangle_inequality(a in seq(12), b in seq(12), c in seq(12)) {
        let ab = edit_distance(&a, &b);
        let bc = edit_distance(&b, &c);
        let ac = edit_distance(&a, &c);
        prop_assert!(ac <= ab + bc, "d(a,c)={ac} > d(a,b)+d(b,c)={}", ab + bc);
    }

    #[test]
    fn length_bounds(a in seq(12), b in seq(12)) {
        let d = edit_distance(&a, &b);
        prop_assert!(d >= a.len().abs_diff(b.len()));
        prop_assert!(d <= a.len().max(b.len()));
    }

    #[test]
    fn norm_nll_concatenation_is_order_independent(
        head in prop::collection::vec((0.0f64..10.0, 1usize..40), 1..20),
        tail in prop::collection::vec((0.0f64..10.0, 1usize..40), 1..20),
    ) {
        // The ratio of sums only sees the multiset of pairs.
        let mut joined = head.clone();
        joined.extend(tail.iter().copied());
        let direct = norm_nll(&joined).unwrap();
        let pooled = (head.iter().map(|&(n, _)| n).sum::<f64>()
            + tail.iter().map(|&(n, _)| n).sum::<f64>())
            / (head.iter().map(|&(_, l)| l).sum::<usize>()
                + tail.iter().map(|&(_, l)| l).sum::<usize>()) as f64;
        prop_assert!((direct - pooled).abs() <= 1e-12 * direct.abs().max(1.0));
    }
}
