//! Monthly bills under the hybrid tariff and the revenue requirement checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{FlatRatePlan, HybridPlan, Requirement, ValidationEntry};
use crate::units::{DataVolume, Money, TimeSpan};

/// Accumulated volumes for one subscriber over a billing month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub subscriber_id: String,
    pub conformant_volume: DataVolume,
    /// The billable excess usage.
    pub excess_volume: DataVolume,
    pub month_length: TimeSpan,
}

impl UsageRecord {
    pub fn zero(subscriber_id: impl Into<String>, month_length: TimeSpan) -> Self {
        Self {
            subscriber_id: subscriber_id.into(),
            conformant_volume: DataVolume::ZERO,
            excess_volume: DataVolume::ZERO,
            month_length,
        }
    }
}

/// One subscriber's monthly bill; `total = base + usage_charge` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bill {
    pub subscriber_id: String,
    pub base: Money,
    pub usage_charge: Money,
    pub total: Money,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BillingError {
    #[error("plan covers {expected} subscribers but {actual} usage records were supplied")]
    WrongRecordCount { expected: u32, actual: usize },
    #[error(
        "subscriber {subscriber_id} recorded {excess_mbit} Mbit of excess, above the plan \
         maximum {u_max_mbit} Mbit"
    )]
    UsageExceedsMaximum {
        subscriber_id: String,
        excess_mbit: f64,
        u_max_mbit: f64,
    },
}

/// Usage charge `alpha * u`, rounded to the nearest micro-pound half away
/// from zero. This is the only place a usage amount becomes money.
pub fn usage_charge(plan: &HybridPlan, u: DataVolume) -> Money {
    Money::round_pounds(plan.slope.value() * u.value())
}

/// Total monthly price for excess usage `u`: the base price plus the usage
/// charge. Zero usage costs exactly the base (lower-tier) price.
pub fn monthly_price(plan: &HybridPlan, u: DataVolume) -> Money {
    plan.base_price + usage_charge(plan, u)
}

/// Full bill line item for one usage record.
pub fn bill(plan: &HybridPlan, usage: &UsageRecord) -> Bill {
    let charge = usage_charge(plan, usage.excess_volume);
    Bill {
        subscriber_id: usage.subscriber_id.clone(),
        base: plan.base_price,
        usage_charge: charge,
        total: plan.base_price + charge,
    }
}

/// Exact sum of all subscribers' bills. Requires one record per subscriber;
/// inactive subscribers must appear with zero usage.
pub fn group_revenue(plan: &HybridPlan, usages: &[UsageRecord]) -> Result<Money, BillingError> {
    if usages.len() != plan.n_subscribers as usize {
        return Err(BillingError::WrongRecordCount {
            expected: plan.n_subscribers,
            actual: usages.len(),
        });
    }
    Ok(usages
        .iter()
        .map(|u| monthly_price(plan, u.excess_volume))
        .sum())
}

/// Requirement evaluation for one month of realized usage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementReport {
    pub revenue: Money,
    pub max_bill: Money,
    pub entries: Vec<ValidationEntry>,
}

impl RequirementReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Checks the revenue and bill-cap requirements against realized usage:
/// revenue must beat both the higher tier and N lower-tier subscriptions,
/// and no individual bill may exceed the higher tier's price.
pub fn check_requirements(
    plan: &HybridPlan,
    lower: &FlatRatePlan,
    higher: &FlatRatePlan,
    usages: &[UsageRecord],
) -> Result<RequirementReport, BillingError> {
    let revenue = group_revenue(plan, usages)?;
    let max_bill = usages
        .iter()
        .map(|u| monthly_price(plan, u.excess_volume))
        .max()
        .unwrap_or(plan.base_price);
    let lower_sum = lower.monthly_price * plan.n_subscribers;

    let entries = vec![
        ValidationEntry {
            requirement: Requirement::RevenueAtLeastHigherPlan,
            lhs: revenue.to_pounds(),
            rhs: higher.monthly_price.to_pounds(),
            unit: "GBP".to_string(),
            pass: revenue >= higher.monthly_price,
        },
        ValidationEntry {
            requirement: Requirement::RevenueAtLeastLowerPlanSum,
            lhs: revenue.to_pounds(),
            rhs: lower_sum.to_pounds(),
            unit: "GBP".to_string(),
            pass: revenue >= lower_sum,
        },
        ValidationEntry {
            requirement: Requirement::BillCapAtHigherPlan,
            lhs: max_bill.to_pounds(),
            rhs: higher.monthly_price.to_pounds(),
            unit: "GBP".to_string(),
            pass: max_bill <= higher.monthly_price,
        },
    ];
    Ok(RequirementReport {
        revenue,
        max_bill,
        entries,
    })
}

/// Flags any record whose excess exceeds the plan-pair maximum. Only
/// meaningful when the governing `u_max` is known exactly.
pub fn validate_usage_bounds(
    usages: &[UsageRecord],
    u_max: DataVolume,
) -> Result<(), BillingError> {
    for usage in usages {
        if usage.excess_volume.value() > u_max.value() {
            return Err(BillingError::UsageExceedsMaximum {
                subscriber_id: usage.subscriber_id.clone(),
                excess_mbit: usage.excess_volume.value(),
                u_max_mbit: u_max.value(),
            });
        }
    }
    Ok(())
}
