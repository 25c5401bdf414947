use hybridplan_core::tbf::{max_conformant_volume, TokenBucket};
use hybridplan_core::units::{DataVolume, Rate, TimeSpan};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct BucketSpec {
    rate: f64,
    capacity: f64,
    initial: f64,
}

fn bucket_spec() -> impl Strategy<Value = BucketSpec> {
    (0.0_f64..200.0, 0.0_f64..500.0, 0.0_f64..1.0).prop_map(|(rate, capacity, frac)| BucketSpec {
        rate,
        capacity,
        initial: capacity * frac,
    })
}

proptest! {
    /// Contract preservation: over any prefix window, conformant volume never
    /// exceeds rate * t + the initial token level, for any offered sequence.
    #[test]
    fn conformant_volume_respects_the_analytic_bound(
        spec in bucket_spec(),
        offered in prop::collection::vec(0.0_f64..400.0, 1..60),
        dt in 0.1_f64..5.0,
    ) {
        let mut bucket = TokenBucket::with_tokens(
            Rate::new(spec.rate),
            DataVolume::new(spec.capacity),
            DataVolume::new(spec.initial),
            TimeSpan::ZERO,
        );
        let initial_tokens = bucket.tokens().value();
        let mut conformant_total = 0.0;
        for (k, &volume) in offered.iter().enumerate() {
            let now = TimeSpan::new((k + 1) as f64 * dt);
            let split = bucket.conform(DataVolume::new(volume), now).unwrap();
            conformant_total += split.conformant.value();
            let bound = spec.rate * now.value() + initial_tokens;
            prop_assert!(
                conformant_total <= bound + 1e-9 * bound.max(1.0),
                "prefix {k}: conformant {conformant_total} above bound {bound}"
            );
        }
    }

    /// Volume conservation per call and accumulated, and the token level
    /// stays within [0, capacity] after every operation.
    #[test]
    fn conform_conserves_volume_and_bounds_tokens(
        spec in bucket_spec(),
        offered in prop::collection::vec(0.0_f64..400.0, 1..60),
    ) {
        let mut bucket = TokenBucket::with_tokens(
            Rate::new(spec.rate),
            DataVolume::new(spec.capacity),
            DataVolume::new(spec.initial),
            TimeSpan::ZERO,
        );
        let mut offered_total = 0.0;
        let mut split_total = 0.0;
        for (k, &volume) in offered.iter().enumerate() {
            let now = TimeSpan::new((k + 1) as f64);
            let split = bucket.conform(DataVolume::new(volume), now).unwrap();
            let recombined = split.conformant.value() + split.excess.value();
            prop_assert!((recombined - volume).abs() <= 1e-12 * volume.max(1.0));
            offered_total += volume;
            split_total += recombined;
            prop_assert!(bucket.tokens().value() >= 0.0);
            prop_assert!(bucket.tokens().value() <= bucket.capacity().value());
        }
        prop_assert!((split_total - offered_total).abs() <= 1e-9 * offered_total.max(1.0));
    }

    /// For piecewise-constant load with steps aligned to the breakpoints,
    /// halving the step leaves the accumulated conformant volume unchanged
    /// (the fluid model is exactly step-invariant).
    #[test]
    fn fluid_model_is_step_invariant_on_aligned_grids(
        spec in bucket_spec(),
        segments in prop::collection::vec((0.0_f64..400.0, 1_u32..6), 1..8),
    ) {
        let run = |substeps_per_segment: u32| -> f64 {
            let mut bucket = TokenBucket::with_tokens(
                Rate::new(spec.rate),
                DataVolume::new(spec.capacity),
                DataVolume::new(spec.initial),
                TimeSpan::ZERO,
            );
            let mut now = 0.0;
            let mut conformant = 0.0;
            for &(load_rate, seconds) in &segments {
                let dt = 1.0 / substeps_per_segment as f64;
                for _ in 0..seconds * substeps_per_segment {
                    now += dt;
                    let split = bucket
                        .conform(DataVolume::new(load_rate * dt), TimeSpan::new(now))
                        .unwrap();
                    conformant += split.conformant.value();
                }
            }
            conformant
        };
        let coarse = run(1);
        let fine = run(2);
        prop_assert!(
            (coarse - fine).abs() <= 1e-9 * coarse.abs().max(1.0),
            "coarse {coarse} vs fine {fine}"
        );
    }

    /// The analytic bound is achieved by saturating demand from a full bucket.
    #[test]
    fn saturating_demand_attains_the_bound(
        rate in 1.0_f64..200.0,
        capacity in 0.0_f64..100.0,
        steps in 1_u32..50,
    ) {
        let mut bucket = TokenBucket::full(
            Rate::new(rate),
            DataVolume::new(capacity),
            TimeSpan::ZERO,
        );
        let huge = DataVolume::new(rate * 10.0 + capacity + 1.0);
        let mut conformant = 0.0;
        for k in 1..=steps {
            let split = bucket.conform(huge, TimeSpan::new(k as f64)).unwrap();
            conformant += split.conformant.value();
        }
        let bound = max_conformant_volume(
            Rate::new(rate),
            DataVolume::new(capacity),
            TimeSpan::new(steps as f64),
        )
        .value();
        prop_assert!((conformant - bound).abs() <= 1e-9 * bound.max(1.0));
    }
}
