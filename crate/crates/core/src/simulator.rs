//! Discrete-time fluid simulation of a hybrid plan group over a billing month.
//!
//! Hybrid mode follows the two-level arrangement: a single virtual bucket
//! shapes the group's aggregate at the shared link, the conformant rate is
//! water-filled among active subscribers, and each subscriber's own bucket
//! then classifies their grant into conformant volume and billable excess.
//! The per-subscriber buckets never block in hybrid mode; the group bucket is
//! the sole capacity limit.
//!
//! Legacy mode shapes every subscriber independently with their own bucket
//! and drops the rest, which is what makes the wasted-capacity metric
//! interesting: spare group bandwidth is unreachable there no matter how
//! much unmet demand exists.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{allocate, AllocError, SubscriberState};
use crate::billing::UsageRecord;
use crate::planner::{HybridPlan, Requirement};
use crate::tbf::{TbfError, TokenBucket};
use crate::units::{DataVolume, Rate, TimeSpan};

/// The shared-link contract the group is shaped against (the higher tier's
/// token bucket parameters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupContract {
    pub token_generation_rate: Rate,
    pub token_bucket_size: DataVolume,
}

impl GroupContract {
    pub fn new(token_generation_rate: Rate, token_bucket_size: DataVolume) -> Self {
        Self {
            token_generation_rate,
            token_bucket_size,
        }
    }
}

/// A change of offered load: from `start` onward the subscriber offers `rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub start: TimeSpan,
    pub rate: Rate,
}

/// Piecewise-constant offered load for one subscriber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandTrace {
    pub subscriber_id: String,
    pub breakpoints: Vec<Breakpoint>,
}

impl DemandTrace {
    /// Constant offered load over the whole scenario.
    pub fn constant(subscriber_id: impl Into<String>, rate: Rate) -> Self {
        Self {
            subscriber_id: subscriber_id.into(),
            breakpoints: vec![Breakpoint {
                start: TimeSpan::ZERO,
                rate,
            }],
        }
    }
}

/// Offered-load traces for every subscriber over a common horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandScenario {
    pub horizon: TimeSpan,
    pub traces: Vec<DemandTrace>,
}

impl DemandScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon.value() <= 0.0 {
            return Err(SimError::InvalidScenario {
                reason: "horizon must be positive".to_string(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for trace in &self.traces {
            if !seen.insert(trace.subscriber_id.as_str()) {
                return Err(SimError::InvalidScenario {
                    reason: format!("duplicate subscriber id {:?}", trace.subscriber_id),
                });
            }
            let Some(first) = trace.breakpoints.first() else {
                return Err(SimError::InvalidScenario {
                    reason: format!("subscriber {:?} has no breakpoints", trace.subscriber_id),
                });
            };
            if first.start.value() != 0.0 {
                return Err(SimError::InvalidScenario {
                    reason: format!(
                        "subscriber {:?} must start its trace at t=0, not t={}",
                        trace.subscriber_id,
                        first.start.value()
                    ),
                });
            }
            for pair in trace.breakpoints.windows(2) {
                if pair[1].start.value() <= pair[0].start.value() {
                    return Err(SimError::InvalidScenario {
                        reason: format!(
                            "subscriber {:?} breakpoints must be strictly increasing",
                            trace.subscriber_id
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-subscriber service quality over the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscriberQos {
    pub subscriber_id: String,
    pub mean_granted_rate: Rate,
    /// Granted volume over offered volume, 1.0 for an idle subscriber.
    pub demand_satisfaction_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub usage_records: Vec<UsageRecord>,
    pub qos: Vec<SubscriberQos>,
    /// Volume the group contract admitted (hybrid) or the sum of individual
    /// grants (legacy).
    pub group_conformant_volume: DataVolume,
    /// Contract bandwidth left idle while some demand went unsatisfied.
    pub wasted_capacity_volume: DataVolume,
    /// Grid-snapping notes; empty when the scenario already sat on the grid.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(
        "infeasible group: {n} subscribers x {tgr_l_mbps} Mbit/s guaranteed exceeds the group \
         contract {tgr_h_mbps} Mbit/s (requirement: {requirement})"
    )]
    InfeasibleGroup {
        n: u32,
        tgr_l_mbps: f64,
        tgr_h_mbps: f64,
        requirement: Requirement,
    },
    #[error("scenario has {scenario} subscriber traces but the plan covers {plan}")]
    SubscriberCountMismatch { plan: u32, scenario: usize },
    #[error("invalid scenario: {reason}")]
    InvalidScenario { reason: String },
    #[error("simulation step must be positive and finite, got {step_s} s")]
    InvalidStep { step_s: f64 },
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Tbf(#[from] TbfError),
}

/// Scenario discretized onto the step grid.
struct Grid {
    n_steps: u64,
    /// Per subscriber: (first step index, rate) in increasing index order.
    traces: Vec<Vec<(u64, f64)>>,
    warnings: Vec<String>,
}

fn snap_to_grid(scenario: &DemandScenario, step: f64) -> Grid {
    let mut warnings = Vec::new();
    let horizon = scenario.horizon.value();
    let mut n_steps = (horizon / step).round() as u64;
    if n_steps == 0 {
        n_steps = 1;
    }
    if (n_steps as f64 * step - horizon).abs() > 1e-9 * horizon.max(step) {
        warnings.push(format!(
            "horizon {horizon} s snapped to {} s ({} steps of {step} s)",
            n_steps as f64 * step,
            n_steps
        ));
    }
    let mut traces = Vec::with_capacity(scenario.traces.len());
    for trace in &scenario.traces {
        let mut snapped: Vec<(u64, f64)> = Vec::with_capacity(trace.breakpoints.len());
        for bp in &trace.breakpoints {
            let start = bp.start.value();
            let index = (start / step).round() as u64;
            if (index as f64 * step - start).abs() > 1e-9 * start.max(step) {
                warnings.push(format!(
                    "subscriber {:?}: breakpoint at {start} s snapped to {} s",
                    trace.subscriber_id,
                    index as f64 * step
                ));
            }
            match snapped.last_mut() {
                Some(last) if last.0 == index => {
                    warnings.push(format!(
                        "subscriber {:?}: breakpoints collapsed onto one grid point at step {index}; \
                         keeping the last",
                        trace.subscriber_id
                    ));
                    last.1 = bp.rate.value();
                }
                _ => snapped.push((index, bp.rate.value())),
            }
        }
        traces.push(snapped);
    }
    Grid {
        n_steps,
        traces,
        warnings,
    }
}

fn feasibility_check(n: u32, tgr_l: Rate, group: &GroupContract) -> Result<(), SimError> {
    let required = n as f64 * tgr_l.value();
    let available = group.token_generation_rate.value();
    if required > available * (1.0 + 1e-9) {
        return Err(SimError::InfeasibleGroup {
            n,
            tgr_l_mbps: tgr_l.value(),
            tgr_h_mbps: available,
            requirement: Requirement::SubscriberCountCapacity,
        });
    }
    Ok(())
}

/// Runs the hybrid architecture. Equivalent to
/// [`run_hybrid_observed`] with a no-op observer.
pub fn run_hybrid(
    plan: &HybridPlan,
    group: &GroupContract,
    scenario: &DemandScenario,
    step: TimeSpan,
) -> Result<SimulationResult, SimError> {
    run_hybrid_observed(plan, group, scenario, step, |_, _| {})
}

/// Runs the hybrid architecture, calling `observer` once per step with the
/// interval start time (seconds) and the granted rates (Mbit/s) in trace
/// order. Useful for emitting time series without buffering them here.
pub fn run_hybrid_observed(
    plan: &HybridPlan,
    group: &GroupContract,
    scenario: &DemandScenario,
    step: TimeSpan,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<SimulationResult, SimError> {
    let step = check_step(step)?;
    scenario.validate()?;
    if scenario.traces.len() != plan.n_subscribers as usize {
        return Err(SimError::SubscriberCountMismatch {
            plan: plan.n_subscribers,
            scenario: scenario.traces.len(),
        });
    }
    feasibility_check(plan.n_subscribers, plan.token_generation_rate, group)?;

    let grid = snap_to_grid(scenario, step);
    let n = scenario.traces.len();
    let tgr_l = plan.token_generation_rate;

    let mut group_bucket = TokenBucket::full(
        group.token_generation_rate,
        group.token_bucket_size,
        TimeSpan::ZERO,
    );
    let mut sub_buckets: Vec<TokenBucket> = (0..n)
        .map(|_| TokenBucket::full(tgr_l, plan.token_bucket_size, TimeSpan::ZERO))
        .collect();

    let mut acc = Accumulators::new(n);
    let mut demands = vec![0.0_f64; n];
    let mut cursors = vec![0_usize; n];
    let mut subs: Vec<SubscriberState> = (0..n)
        .map(|i| SubscriberState {
            id: i,
            guaranteed_rate: tgr_l,
            weight: tgr_l,
            demand: Rate::ZERO,
        })
        .collect();
    let mut granted_rates = vec![0.0_f64; n];

    for step_index in 0..grid.n_steps {
        advance_demands(&grid.traces, &mut cursors, &mut demands, step_index);
        let now = TimeSpan::new((step_index + 1) as f64 * step);

        let mut group_offered = 0.0;
        for (sub, &demand) in subs.iter_mut().zip(&demands) {
            sub.demand = Rate::new(demand);
            group_offered += demand * step;
        }
        let admitted = group_bucket
            .conform(DataVolume::new(group_offered), now)?
            .conformant;

        // The admitted rate can land an ulp below the guaranteed floor when
        // demand is fully conformant; bump it so the guarantees always fit.
        let floor: f64 = subs
            .iter()
            .map(|s| s.demand.value().min(s.guaranteed_rate.value()))
            .sum();
        let capacity = Rate::new((admitted.value() / step).max(floor));
        let allocation = allocate(capacity, &subs)?;

        let mut granted_step_volume = 0.0;
        let mut any_unsatisfied = false;
        for (i, share) in allocation.shares.iter().enumerate() {
            let granted_rate = share.granted_rate.value();
            granted_rates[i] = granted_rate;
            let granted_volume = granted_rate * step;
            let split = sub_buckets[i].conform(DataVolume::new(granted_volume), now)?;
            acc.offered[i] += demands[i] * step;
            acc.granted[i] += granted_volume;
            acc.conformant[i] += split.conformant.value();
            acc.excess[i] += split.excess.value();
            granted_step_volume += granted_volume;
            if demands[i] * step > granted_volume {
                any_unsatisfied = true;
            }
        }
        acc.group_conformant += admitted.value();
        if any_unsatisfied {
            acc.wasted += waste_above_noise(
                group.token_generation_rate.value() * step - granted_step_volume,
                group.token_generation_rate.value() * step,
            );
        }
        observer(step_index as f64 * step, &granted_rates);
    }

    Ok(acc.into_result(scenario, grid.n_steps as f64 * step, grid.warnings))
}

// Shortfalls at the rounding noise floor of a step's volume are artifacts of
// the allocator's conservation margin, not idle bandwidth.
fn waste_above_noise(shortfall: f64, step_volume: f64) -> f64 {
    if shortfall <= 32.0 * f64::EPSILON * step_volume {
        0.0
    } else {
        shortfall
    }
}

/// Per-subscriber token bucket parameters for the legacy arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegacyShaper {
    pub token_generation_rate: Rate,
    pub token_bucket_size: DataVolume,
}

/// Runs the legacy arrangement: every subscriber shaped independently,
/// non-conformant volume dropped. See [`run_legacy_observed`].
pub fn run_legacy(
    group: &GroupContract,
    shapers: &[LegacyShaper],
    scenario: &DemandScenario,
    step: TimeSpan,
) -> Result<SimulationResult, SimError> {
    run_legacy_observed(group, shapers, scenario, step, |_, _| {})
}

pub fn run_legacy_observed(
    group: &GroupContract,
    shapers: &[LegacyShaper],
    scenario: &DemandScenario,
    step: TimeSpan,
    mut observer: impl FnMut(f64, &[f64]),
) -> Result<SimulationResult, SimError> {
    let step = check_step(step)?;
    scenario.validate()?;
    if scenario.traces.len() != shapers.len() {
        return Err(SimError::SubscriberCountMismatch {
            plan: shapers.len() as u32,
            scenario: scenario.traces.len(),
        });
    }
    let guaranteed_sum: f64 = shapers.iter().map(|s| s.token_generation_rate.value()).sum();
    if guaranteed_sum > group.token_generation_rate.value() * (1.0 + 1e-9) {
        return Err(SimError::InfeasibleGroup {
            n: shapers.len() as u32,
            tgr_l_mbps: guaranteed_sum / shapers.len().max(1) as f64,
            tgr_h_mbps: group.token_generation_rate.value(),
            requirement: Requirement::SubscriberCountCapacity,
        });
    }

    let grid = snap_to_grid(scenario, step);
    let n = scenario.traces.len();
    let mut sub_buckets: Vec<TokenBucket> = shapers
        .iter()
        .map(|s| TokenBucket::full(s.token_generation_rate, s.token_bucket_size, TimeSpan::ZERO))
        .collect();

    let mut acc = Accumulators::new(n);
    let mut demands = vec![0.0_f64; n];
    let mut cursors = vec![0_usize; n];
    let mut granted_rates = vec![0.0_f64; n];

    for step_index in 0..grid.n_steps {
        advance_demands(&grid.traces, &mut cursors, &mut demands, step_index);
        let now = TimeSpan::new((step_index + 1) as f64 * step);

        let mut granted_step_volume = 0.0;
        let mut any_unsatisfied = false;
        for i in 0..n {
            let offered = demands[i] * step;
            let split = sub_buckets[i].conform(DataVolume::new(offered), now)?;
            let granted = split.conformant.value();
            granted_rates[i] = granted / step;
            acc.offered[i] += offered;
            acc.granted[i] += granted;
            // Dropped volume is not billable; only the conformant part counts.
            acc.conformant[i] += granted;
            granted_step_volume += granted;
            if offered > granted {
                any_unsatisfied = true;
            }
        }
        acc.group_conformant += granted_step_volume;
        if any_unsatisfied {
            acc.wasted += waste_above_noise(
                group.token_generation_rate.value() * step - granted_step_volume,
                group.token_generation_rate.value() * step,
            );
        }
        observer(step_index as f64 * step, &granted_rates);
    }

    Ok(acc.into_result(scenario, grid.n_steps as f64 * step, grid.warnings))
}

/// The two bounding utilization patterns used to judge a plan: one lone
/// saturating subscriber, and all subscribers saturating together.
pub fn extreme_case_scenarios(
    plan: &HybridPlan,
    group: &GroupContract,
) -> (DemandScenario, DemandScenario) {
    let n = plan.n_subscribers as usize;
    let saturating = group.token_generation_rate;
    let single = DemandScenario {
        horizon: plan.month_length,
        traces: (0..n)
            .map(|i| {
                let rate = if i == 0 { saturating } else { Rate::ZERO };
                DemandTrace::constant(format!("sub{}", i + 1), rate)
            })
            .collect(),
    };
    let all = DemandScenario {
        horizon: plan.month_length,
        traces: (0..n)
            .map(|i| DemandTrace::constant(format!("sub{}", i + 1), saturating))
            .collect(),
    };
    (single, all)
}

fn check_step(step: TimeSpan) -> Result<f64, SimError> {
    let s = step.value();
    if s <= 0.0 {
        return Err(SimError::InvalidStep { step_s: s });
    }
    Ok(s)
}

fn advance_demands(
    traces: &[Vec<(u64, f64)>],
    cursors: &mut [usize],
    demands: &mut [f64],
    step_index: u64,
) {
    for (i, trace) in traces.iter().enumerate() {
        while cursors[i] < trace.len() && trace[cursors[i]].0 <= step_index {
            demands[i] = trace[cursors[i]].1;
            cursors[i] += 1;
        }
    }
}

struct Accumulators {
    offered: Vec<f64>,
    granted: Vec<f64>,
    conformant: Vec<f64>,
    excess: Vec<f64>,
    group_conformant: f64,
    wasted: f64,
}

impl Accumulators {
    fn new(n: usize) -> Self {
        Self {
            offered: vec![0.0; n],
            granted: vec![0.0; n],
            conformant: vec![0.0; n],
            excess: vec![0.0; n],
            group_conformant: 0.0,
            wasted: 0.0,
        }
    }

    fn into_result(
        self,
        scenario: &DemandScenario,
        horizon_s: f64,
        warnings: Vec<String>,
    ) -> SimulationResult {
        let horizon = TimeSpan::new(horizon_s);
        let usage_records = scenario
            .traces
            .iter()
            .enumerate()
            .map(|(i, trace)| UsageRecord {
                subscriber_id: trace.subscriber_id.clone(),
                conformant_volume: DataVolume::new(self.conformant[i]),
                excess_volume: DataVolume::new(self.excess[i]),
                month_length: horizon,
            })
            .collect();
        let qos = scenario
            .traces
            .iter()
            .enumerate()
            .map(|(i, trace)| SubscriberQos {
                subscriber_id: trace.subscriber_id.clone(),
                mean_granted_rate: Rate::new(self.granted[i] / horizon_s),
                demand_satisfaction_ratio: if self.offered[i] > 0.0 {
                    (self.granted[i] / self.offered[i]).min(1.0)
                } else {
                    1.0
                },
            })
            .collect();
        SimulationResult {
            usage_records,
            qos,
            group_conformant_volume: DataVolume::new(self.group_conformant),
            wasted_capacity_volume: DataVolume::new(self.wasted),
            warnings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{design_hybrid_plan, AlphaPolicy, FlatRatePlan, NPolicy};
    use crate::units::Money;

    const MONTH: f64 = 2.592e6;

    fn reference_setup() -> (HybridPlan, GroupContract) {
        let lower = FlatRatePlan::new(Money::from_pounds_str("26.50").unwrap(), Rate::new(50.0));
        let higher = FlatRatePlan::new(Money::from_pounds_str("39").unwrap(), Rate::new(152.0));
        let plan = design_hybrid_plan(
            &lower,
            &higher,
            TimeSpan::new(MONTH),
            NPolicy::Max,
            AlphaPolicy::Max,
        )
        .unwrap();
        let group = GroupContract::new(Rate::new(152.0), DataVolume::ZERO);
        (plan, group)
    }

    fn scenario(horizon: f64, rates: &[f64]) -> DemandScenario {
        DemandScenario {
            horizon: TimeSpan::new(horizon),
            traces: rates
                .iter()
                .enumerate()
                .map(|(i, &r)| DemandTrace::constant(format!("sub{}", i + 1), Rate::new(r)))
                .collect(),
        }
    }

    #[test]
    fn single_active_subscriber_takes_the_whole_month_excess() {
        let (plan, group) = reference_setup();
        let sc = scenario(MONTH, &[200.0, 0.0, 0.0]);
        let result = run_hybrid(&plan, &group, &sc, TimeSpan::new(1.0)).unwrap();
        let step_volume = 152.0;
        assert!(
            (result.usage_records[0].excess_volume.value() - 2.64384e8).abs() <= step_volume,
            "u1 = {}",
            result.usage_records[0].excess_volume.value()
        );
        assert_eq!(result.usage_records[1].excess_volume.value(), 0.0);
        assert_eq!(result.usage_records[2].excess_volume.value(), 0.0);
    }

    #[test]
    fn three_active_subscribers_split_the_excess() {
        let (plan, group) = reference_setup();
        let sc = scenario(MONTH, &[200.0, 200.0, 200.0]);
        let result = run_hybrid(&plan, &group, &sc, TimeSpan::new(1.0)).unwrap();
        for record in &result.usage_records {
            assert!(
                (record.excess_volume.value() - 1.728e6).abs() <= 152.0,
                "u = {}",
                record.excess_volume.value()
            );
        }
    }

    #[test]
    fn idle_month_grants_nothing_and_bills_base() {
        let (plan, group) = reference_setup();
        let sc = scenario(MONTH, &[0.0, 0.0, 0.0]);
        let result = run_hybrid(&plan, &group, &sc, TimeSpan::new(3600.0)).unwrap();
        for record in &result.usage_records {
            assert_eq!(record.excess_volume.value(), 0.0);
            assert_eq!(record.conformant_volume.value(), 0.0);
        }
        for qos in &result.qos {
            assert_eq!(qos.demand_satisfaction_ratio, 1.0);
            assert_eq!(qos.mean_granted_rate.value(), 0.0);
        }
        let revenue = crate::billing::group_revenue(&plan, &result.usage_records).unwrap();
        assert_eq!(revenue, Money::from_pounds_str("79.50").unwrap());
    }

    #[test]
    fn legacy_single_subscriber_is_stuck_at_the_guaranteed_rate() {
        let (plan, group) = reference_setup();
        let sc = scenario(MONTH, &[200.0]);
        let shaper = LegacyShaper {
            token_generation_rate: Rate::new(50.0),
            token_bucket_size: DataVolume::ZERO,
        };
        let legacy = run_legacy(&group, &[shaper], &sc, TimeSpan::new(1.0)).unwrap();
        assert!((legacy.usage_records[0].conformant_volume.value() - 1.296e8).abs() < 1.0);

        let one_sub_plan = HybridPlan {
            n_subscribers: 1,
            ..plan
        };
        let hybrid = run_hybrid(&one_sub_plan, &group, &sc, TimeSpan::new(1.0)).unwrap();
        let hybrid_granted = hybrid.qos[0].mean_granted_rate.value() * MONTH;
        let legacy_granted = legacy.qos[0].mean_granted_rate.value() * MONTH;
        assert!(
            (hybrid_granted - legacy_granted - 2.64384e8).abs() <= 152.0,
            "hybrid {hybrid_granted} legacy {legacy_granted}"
        );
        // The unreachable bandwidth shows up as waste in legacy mode only.
        assert!(legacy.wasted_capacity_volume.value() > 0.0);
        assert_eq!(hybrid.wasted_capacity_volume.value(), 0.0);
    }

    #[test]
    fn legacy_zero_demand_wastes_nothing() {
        let (_, group) = reference_setup();
        let sc = scenario(1000.0, &[0.0, 0.0]);
        let shapers = vec![
            LegacyShaper {
                token_generation_rate: Rate::new(50.0),
                token_bucket_size: DataVolume::ZERO,
            };
            2
        ];
        let result = run_legacy(&group, &shapers, &sc, TimeSpan::new(1.0)).unwrap();
        assert_eq!(result.wasted_capacity_volume.value(), 0.0);
        assert_eq!(result.group_conformant_volume.value(), 0.0);
    }

    #[test]
    fn modes_agree_when_demand_sits_at_the_guarantee() {
        let (plan, group) = reference_setup();
        let sc = scenario(5000.0, &[50.0, 50.0, 50.0]);
        let hybrid = run_hybrid(&plan, &group, &sc, TimeSpan::new(1.0)).unwrap();
        let shapers = vec![
            LegacyShaper {
                token_generation_rate: plan.token_generation_rate,
                token_bucket_size: plan.token_bucket_size,
            };
            3
        ];
        let legacy = run_legacy(&group, &shapers, &sc, TimeSpan::new(1.0)).unwrap();
        assert_eq!(hybrid.usage_records, legacy.usage_records);
        assert_eq!(hybrid.qos, legacy.qos);
        assert_eq!(
            hybrid.group_conformant_volume,
            legacy.group_conformant_volume
        );
        assert_eq!(hybrid.wasted_capacity_volume, legacy.wasted_capacity_volume);
    }

    #[test]
    fn infeasible_group_is_rejected_up_front() {
        let (mut plan, group) = reference_setup();
        plan.n_subscribers = 4;
        let sc = scenario(100.0, &[10.0, 10.0, 10.0, 10.0]);
        let err = run_hybrid(&plan, &group, &sc, TimeSpan::new(1.0)).unwrap_err();
        match err {
            SimError::InfeasibleGroup { requirement, .. } => {
                assert_eq!(requirement, Requirement::SubscriberCountCapacity);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn scenario_count_must_match_plan() {
        let (plan, group) = reference_setup();
        let sc = scenario(100.0, &[10.0, 10.0]);
        assert!(matches!(
            run_hybrid(&plan, &group, &sc, TimeSpan::new(1.0)),
            Err(SimError::SubscriberCountMismatch { plan: 3, scenario: 2 })
        ));
    }

    #[test]
    fn extreme_cases_have_the_right_shape() {
        let (plan, group) = reference_setup();
        let (case1, case2) = extreme_case_scenarios(&plan, &group);
        let active = |sc: &DemandScenario| {
            sc.traces
                .iter()
                .filter(|t| t.breakpoints.iter().any(|b| b.rate.value() > 0.0))
                .count()
        };
        assert_eq!(active(&case1), 1);
        assert_eq!(active(&case2), 3);
        assert_eq!(case1.traces.len(), 3);
        for trace in &case2.traces {
            assert_eq!(trace.breakpoints[0].rate.value(), 152.0);
        }

        let single_plan = HybridPlan {
            n_subscribers: 1,
            ..plan
        };
        let (c1, c2) = extreme_case_scenarios(&single_plan, &group);
        assert_eq!(c1, c2);
    }

    #[test]
    fn breakpoints_snap_to_the_grid_with_warnings() {
        let (plan, group) = reference_setup();
        let mut sc = scenario(100.0, &[60.0, 0.0, 0.0]);
        sc.traces[0].breakpoints.push(Breakpoint {
            start: TimeSpan::new(50.4),
            rate: Rate::ZERO,
        });
        let result = run_hybrid(&plan, &group, &sc, TimeSpan::new(1.0)).unwrap();
        assert!(!result.warnings.is_empty());
        // 60 Mbit/s for 50 snapped seconds.
        let granted = result.qos[0].mean_granted_rate.value() * 100.0;
        assert!((granted - 3000.0).abs() < 1e-6, "granted {granted}");
    }

    #[test]
    fn mid_month_arrival_shares_from_its_breakpoint() {
        let (plan, group) = reference_setup();
        let mut sc = scenario(1000.0, &[200.0, 0.0, 0.0]);
        sc.traces[1] = DemandTrace {
            subscriber_id: "sub2".to_string(),
            breakpoints: vec![
                Breakpoint {
                    start: TimeSpan::ZERO,
                    rate: Rate::ZERO,
                },
                Breakpoint {
                    start: TimeSpan::new(500.0),
                    rate: Rate::new(200.0),
                },
            ],
        };
        let result = run_hybrid(&plan, &group, &sc, TimeSpan::new(1.0)).unwrap();
        // First half: sub1 alone at 152; second half: they split 152 evenly.
        let expected_sub1 = 500.0 * 152.0 + 500.0 * 76.0;
        let expected_sub2 = 500.0 * 76.0;
        let granted1 = result.qos[0].mean_granted_rate.value() * 1000.0;
        let granted2 = result.qos[1].mean_granted_rate.value() * 1000.0;
        assert!((granted1 - expected_sub1).abs() <= 152.0, "sub1 {granted1}");
        assert!((granted2 - expected_sub2).abs() <= 152.0, "sub2 {granted2}");
    }
}
