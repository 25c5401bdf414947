use hybridplan_core::billing::group_revenue;
use hybridplan_core::planner::{design_hybrid_plan, AlphaPolicy, FlatRatePlan, NPolicy};
use hybridplan_core::simulator::{
    extreme_case_scenarios, run_hybrid, run_hybrid_observed, run_legacy, Breakpoint,
    DemandScenario, DemandTrace, GroupContract, LegacyShaper,
};
use hybridplan_core::units::{DataVolume, Money, Rate, TimeSpan};
use proptest::prelude::*;

const TGR_L: f64 = 50.0;
const TGR_H: f64 = 152.0;
const MONTH: f64 = 2.592e6;

fn reference_plan(n: u32) -> hybridplan_core::planner::HybridPlan {
    let lower = FlatRatePlan::new(Money::from_pounds_str("26.50").unwrap(), Rate::new(TGR_L));
    let higher = FlatRatePlan::new(Money::from_pounds_str("39").unwrap(), Rate::new(TGR_H));
    let mut plan = design_hybrid_plan(
        &lower,
        &higher,
        TimeSpan::new(MONTH),
        NPolicy::Max,
        AlphaPolicy::Max,
    )
    .unwrap();
    plan.n_subscribers = n;
    plan
}

/// Per subscriber: segments of (rate, duration in steps), laid out on the
/// step grid so no snapping happens.
type Segments = Vec<Vec<(f64, u32)>>;

fn scenario_from_segments(segments: &Segments, step: f64) -> DemandScenario {
    let horizon_steps: u32 = segments
        .iter()
        .map(|segs| segs.iter().map(|&(_, len)| len).sum::<u32>())
        .max()
        .unwrap()
        .max(1);
    let traces = segments
        .iter()
        .enumerate()
        .map(|(i, segs)| {
            let mut breakpoints = Vec::new();
            let mut at = 0u32;
            for &(rate, len) in segs {
                breakpoints.push(Breakpoint {
                    start: TimeSpan::new(at as f64 * step),
                    rate: Rate::new(rate),
                });
                at += len;
            }
            DemandTrace {
                subscriber_id: format!("sub{}", i + 1),
                breakpoints,
            }
        })
        .collect();
    DemandScenario {
        horizon: TimeSpan::new(horizon_steps as f64 * step),
        traces,
    }
}

fn segments_strategy(n: usize, max_rate: f64) -> impl Strategy<Value = Segments> {
    prop::collection::vec(
        prop::collection::vec((0.0..max_rate, 1_u32..80), 1..5),
        n..=n,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The virtual-subscriber contract: over any window, the group never
    /// hands out more than `TGR_H * dt + TBS_H`.
    #[test]
    fn group_grant_respects_the_shared_contract(
        segments in (1_usize..=3).prop_flat_map(|n| segments_strategy(n, 400.0)),
        tbs_h in 0.0_f64..500.0,
    ) {
        let n = segments.len();
        let plan = reference_plan(n as u32);
        let group = GroupContract::new(Rate::new(TGR_H), DataVolume::new(tbs_h));
        let scenario = scenario_from_segments(&segments, 1.0);

        let mut cumulative = vec![0.0_f64];
        run_hybrid_observed(&plan, &group, &scenario, TimeSpan::new(1.0), |_, granted| {
            let step_total: f64 = granted.iter().sum();
            cumulative.push(cumulative.last().unwrap() + step_total);
        })
        .unwrap();

        for i in 0..cumulative.len() {
            for j in (i + 1)..cumulative.len() {
                let granted = cumulative[j] - cumulative[i];
                let bound = TGR_H * (j - i) as f64 + tbs_h;
                prop_assert!(
                    granted <= bound + 1e-9 * bound.max(1.0),
                    "window [{i}, {j}]: granted {granted} above contract {bound}"
                );
            }
        }
    }

    /// A subscriber who keeps demanding at least their guaranteed rate gets
    /// at least the flat-rate entitlement, whatever the others do.
    #[test]
    fn continuous_demand_keeps_the_guaranteed_floor(
        mut segments in (2_usize..=3).prop_flat_map(|n| segments_strategy(n, 400.0)),
    ) {
        for seg in &mut segments[0] {
            seg.0 = seg.0.max(TGR_L);
        }
        let n = segments.len();
        let plan = reference_plan(n as u32);
        let group = GroupContract::new(Rate::new(TGR_H), DataVolume::ZERO);
        let scenario = scenario_from_segments(&segments, 1.0);
        let result = run_hybrid(&plan, &group, &scenario, TimeSpan::new(1.0)).unwrap();

        let horizon = scenario.horizon.value();
        let entitlement = TGR_L * horizon;
        let conformant = result.usage_records[0].conformant_volume.value();
        prop_assert!(
            conformant >= entitlement - TGR_L * 1.0,
            "conformant {conformant} under entitlement {entitlement}"
        );
    }

    /// Granted volume decomposes exactly into conformant plus excess.
    #[test]
    fn grant_decomposes_into_conformant_plus_excess(
        segments in (1_usize..=3).prop_flat_map(|n| segments_strategy(n, 400.0)),
    ) {
        let n = segments.len();
        let plan = reference_plan(n as u32);
        let group = GroupContract::new(Rate::new(TGR_H), DataVolume::ZERO);
        let scenario = scenario_from_segments(&segments, 1.0);
        let result = run_hybrid(&plan, &group, &scenario, TimeSpan::new(1.0)).unwrap();

        let horizon = scenario.horizon.value();
        for (record, qos) in result.usage_records.iter().zip(&result.qos) {
            let granted = qos.mean_granted_rate.value() * horizon;
            let parts = record.conformant_volume.value() + record.excess_volume.value();
            prop_assert!(
                (granted - parts).abs() <= 1e-9 * granted.max(1.0),
                "granted {granted} vs conformant+excess {parts}"
            );
        }
    }

    /// Excess allocation only ever adds: hybrid mode grants every subscriber
    /// at least what the legacy arrangement would.
    #[test]
    fn hybrid_dominates_legacy_per_subscriber(
        segments in (1_usize..=3).prop_flat_map(|n| segments_strategy(n, 400.0)),
        tbs_h in 0.0_f64..200.0,
    ) {
        let n = segments.len();
        let plan = reference_plan(n as u32);
        let group = GroupContract::new(Rate::new(TGR_H), DataVolume::new(tbs_h));
        let scenario = scenario_from_segments(&segments, 1.0);

        let hybrid = run_hybrid(&plan, &group, &scenario, TimeSpan::new(1.0)).unwrap();
        let shapers = vec![
            LegacyShaper {
                token_generation_rate: Rate::new(TGR_L),
                token_bucket_size: DataVolume::ZERO,
            };
            n
        ];
        let legacy = run_legacy(&group, &shapers, &scenario, TimeSpan::new(1.0)).unwrap();

        let horizon = scenario.horizon.value();
        for (h, l) in hybrid.qos.iter().zip(&legacy.qos) {
            let hybrid_granted = h.mean_granted_rate.value() * horizon;
            let legacy_granted = l.mean_granted_rate.value() * horizon;
            prop_assert!(
                hybrid_granted >= legacy_granted - 1e-9 * legacy_granted.max(1.0),
                "hybrid {hybrid_granted} under legacy {legacy_granted}"
            );
        }
    }

    /// Halving the step moves each subscriber's excess by at most one step's
    /// worth of group volume.
    #[test]
    fn halving_the_step_barely_moves_usage(
        segments in (1_usize..=3).prop_flat_map(|n| segments_strategy(n, 400.0)),
    ) {
        let n = segments.len();
        let plan = reference_plan(n as u32);
        let group = GroupContract::new(Rate::new(TGR_H), DataVolume::ZERO);
        let coarse_step = 2.0;
        let scenario = scenario_from_segments(&segments, coarse_step);

        let coarse = run_hybrid(&plan, &group, &scenario, TimeSpan::new(coarse_step)).unwrap();
        let fine = run_hybrid(&plan, &group, &scenario, TimeSpan::new(coarse_step / 2.0)).unwrap();
        for (c, f) in coarse.usage_records.iter().zip(&fine.usage_records) {
            let gap = (c.excess_volume.value() - f.excess_volume.value()).abs();
            prop_assert!(
                gap <= TGR_H * coarse_step + 1e-6,
                "excess moved by {gap} between steps"
            );
        }
    }
}

/// End-to-end closure: feeding the simulator's usage records into billing
/// reproduces the two reference revenues.
#[test]
fn extreme_cases_reproduce_reference_revenues() {
    let plan = reference_plan(3);
    let group = GroupContract::new(Rate::new(TGR_H), DataVolume::ZERO);
    let (case1, case2) = extreme_case_scenarios(&plan, &group);

    let result1 = run_hybrid(&plan, &group, &case1, TimeSpan::new(1.0)).unwrap();
    let revenue1 = group_revenue(&plan, &result1.usage_records).unwrap();
    assert!(
        (revenue1.to_pounds() - 92.0).abs() <= 1e-3,
        "case 1 revenue {revenue1}"
    );
    assert!((result1.usage_records[0].excess_volume.value() - 2.64384e8).abs() <= TGR_H);

    let result2 = run_hybrid(&plan, &group, &case2, TimeSpan::new(1.0)).unwrap();
    let revenue2 = group_revenue(&plan, &result2.usage_records).unwrap();
    assert!(
        (revenue2.to_pounds() - 79.745).abs() <= 1e-3,
        "case 2 revenue {revenue2}"
    );
    for record in &result2.usage_records {
        assert!((record.excess_volume.value() - 1.728e6).abs() <= TGR_H);
    }
}
