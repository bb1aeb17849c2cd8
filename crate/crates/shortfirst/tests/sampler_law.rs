//! The sampler's draw distribution against the analytic law, plus the
//! rejection loop's termination bound.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

use shortfirst::sampler::{shortness, CurriculumSchedule, SamplingWeights};

/// Analytic draw probabilities: `s^lambda / sum(s^lambda)`.
fn law(weights: &SamplingWeights, lambda: f64) -> Vec<f64> {
    let powered: Vec<f64> = weights
        .shortness_values()
        .iter()
        .map(|s| s.powf(lambda))
        .collect();
    let norm: f64 = powered.iter().sum();
    powered.into_iter().map(|p| p / norm).collect()
}

fn empirical_frequencies(
    weights: &SamplingWeights,
    lambda: f64,
    draws: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..draws {
        counts[weights.draw(lambda, &mut rng)] += 1;
    }
    counts.into_iter().map(|c| c as f64 / draws as f64).collect()
}

fn assert_law_within_4_sigma(weights: &SamplingWeights, lambda: f64, draws: usize, seed: u64) {
    let expected = law(weights, lambda);
    let observed = empirical_frequencies(weights, lambda, draws, seed);
    for (t, (&p, &f)) in expected.iter().zip(&observed).enumerate() {
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        assert!(
            (f - p).abs() <= 4.0 * sigma,
            "sample {t}: frequency {f} vs probability {p} (4 sigma = {})",
            4.0 * sigma
        );
    }
}

#[test]
fn hand_normalized_law_lambda_1() {
    // shortness [0.2, 0.1, 0.05] at lambda=1 normalizes to [4/7, 2/7, 1/7].
    let w = SamplingWeights::from_shortness(vec![0.2, 0.1, 0.05]).unwrap();
    let expected = law(&w, 1.0);
    assert!((expected[0] - 4.0 / 7.0).abs() < 1e-15);
    assert!((expected[1] - 2.0 / 7.0).abs() < 1e-15);
    assert!((expected[2] - 1.0 / 7.0).abs() < 1e-15);
    assert_law_within_4_sigma(&w, 1.0, 300_000, 11);
}

#[test]
fn lambda_zero_is_flat() {
    let w = SamplingWeights::from_shortness(vec![0.2, 0.1, 0.05]).unwrap();
    let expected = law(&w, 0.0);
    assert!(expected.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    assert_law_within_4_sigma(&w, 0.0, 300_000, 13);
}

#[test]
fn two_sample_lambda_2_matches_point_eight() {
    // 0.04 / (0.04 + 0.01) = 0.8.
    let w = SamplingWeights::from_shortness(vec![0.2, 0.1]).unwrap();
    let freq = empirical_frequencies(&w, 2.0, 1_000_000, 17);
    assert!(
        (freq[0] - 0.8).abs() <= 0.003,
        "frequency {} vs 0.8",
        freq[0]
    );
}

#[test]
fn scale_invariance_power_of_two_is_draw_identical() {
    // Halving every weight leaves each accept ratio bit-identical, so the
    // whole seeded draw sequence is unchanged.
    let lengths: Vec<usize> = (1..=60).collect();
    let w = SamplingWeights::from_lengths(&lengths, 5).unwrap();
    let scaled = SamplingWeights::from_shortness(
        w.shortness_values().iter().map(|s| s * 0.5).collect(),
    )
    .unwrap();
    for lambda in [0.0, 1.0, 3.0] {
        let mut rng_a = Pcg64Mcg::seed_from_u64(23);
        let mut rng_b = Pcg64Mcg::seed_from_u64(23);
        for _ in 0..100_000 {
            assert_eq!(w.draw(lambda, &mut rng_a), scaled.draw(lambda, &mut rng_b));
        }
    }
}

#[test]
fn scale_invariance_general_constant_in_distribution() {
    let lengths: Vec<usize> = (1..=50).collect();
    let w = SamplingWeights::from_lengths(&lengths, 5).unwrap();
    let scaled = SamplingWeights::from_shortness(
        w.shortness_values().iter().map(|s| s * 0.37).collect(),
    )
    .unwrap();
    let expected = law(&w, 3.0);
    let observed = empirical_frequencies(&scaled, 3.0, 1_000_000, 29);
    let draws = 1_000_000f64;
    for (t, (&p, &f)) in expected.iter().zip(&observed).enumerate() {
        let sigma = (p * (1.0 - p) / draws).sqrt();
        assert!(
            (f - p).abs() <= 4.0 * sigma,
            "sample {t}: {f} vs {p} after rescaling"
        );
    }
}

#[test]
fn longer_of_two_unclipped_lengths_is_rarer() {
    // Both lengths exceed m_min, so the shorter must be strictly favoured.
    let w = SamplingWeights::from_lengths(&[6, 30], 5).unwrap();
    let freq = empirical_frequencies(&w, 1.0, 200_000, 31);
    assert!(freq[0] > freq[1]);
    let freq3 = empirical_frequencies(&w, 3.0, 200_000, 31);
    assert!(freq3[0] > freq3[1]);
    assert!(freq3[0] > freq[0], "larger lambda sharpens the preference");
}

#[test]
fn curriculum_shifts_expected_length_below_corpus_mean() {
    let lengths: Vec<usize> = (1..=60).collect();
    let corpus_mean = lengths.iter().sum::<usize>() as f64 / lengths.len() as f64;
    let w = SamplingWeights::from_lengths(&lengths, 5).unwrap();

    let analytic: f64 = law(&w, 3.0)
        .iter()
        .zip(&lengths)
        .map(|(&p, &l)| p * l as f64)
        .sum();
    assert!(analytic < corpus_mean);

    let mut rng = Pcg64Mcg::seed_from_u64(37);
    let draws = 200_000;
    let mut total = 0u64;
    for _ in 0..draws {
        total += lengths[w.draw(3.0, &mut rng)] as u64;
    }
    let empirical = total as f64 / draws as f64;
    assert!(
        empirical < corpus_mean,
        "drawn mean {empirical} vs corpus mean {corpus_mean}"
    );
    assert!(
        (empirical - analytic).abs() < 0.5,
        "drawn mean {empirical} vs analytic {analytic}"
    );
}

#[test]
fn rejection_acceptance_rate_beats_analytic_bound() {
    let lengths: Vec<usize> = (1..=60).collect();
    let w = SamplingWeights::from_lengths(&lengths, 5).unwrap();
    let lambda = 3.0;
    let min_s = w
        .shortness_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    // Expected proposals per draw <= (max/min)^lambda, so the acceptance
    // rate must be at least the reciprocal.
    let bound = (min_s / w.max_shortness()).powf(lambda);

    let mut rng = Pcg64Mcg::seed_from_u64(41);
    let draws = 100_000u64;
    let mut proposals = 0u64;
    for _ in 0..draws {
        proposals += w.draw_counted(lambda, &mut rng).1;
    }
    let rate = draws as f64 / proposals as f64;
    assert!(
        rate >= bound,
        "acceptance rate {rate} below analytic bound {bound}"
    );
}

#[test]
fn curriculum_draws_deterministic_across_reruns() {
    let w = SamplingWeights::from_lengths(&(1..=30).collect::<Vec<_>>(), 5).unwrap();
    let run = || {
        let mut rng = Pcg64Mcg::seed_from_u64(43);
        (0..1000).map(|_| w.draw(2.0, &mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn shortness_is_clipped_and_nonincreasing(
        m in 1usize..20,
        len_a in 0usize..200,
        extra in 1usize..100,
    ) {
        let a = shortness(len_a, m).unwrap();
        let b = shortness(len_a + extra, m).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0 / m as f64);
        prop_assert!(b <= a);
        if len_a + extra <= m {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn lambda_schedule_is_linear_then_zero(
        lambda in 0.0f64..8.0,
        span in 1u64..1_000_000,
        at in 0u64..2_000_000,
    ) {
        let s = CurriculumSchedule::new(lambda, span, 5).unwrap();
        let got = s.lambda_at(at);
        if at >= span {
            prop_assert_eq!(got, 0.0);
        } else {
            let expected = lambda * (1.0 - at as f64 / span as f64);
            prop_assert!((got - expected).abs() < 1e-9 * lambda.max(1.0));
        }
    }
}
