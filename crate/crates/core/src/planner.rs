//! Hybrid-plan parameter derivation and validation.
//!
//! A hybrid plan is designed from a pair of existing flat-rate tiers. The
//! subscriber count must sit between the price floor `P_H / P_L` (the group
//! must out-earn the higher tier even at zero usage) and the capacity
//! ceiling `TGR_H / TGR_L` (guarantees must fit the shared contract). The
//! usage-price slope is bounded above by `(P_H - P_L) / u_max` so a maxed-out
//! subscriber never pays more than the higher tier.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::units::{DataVolume, Money, PriceSlope, Rate, TimeSpan};

/// Price and token-bucket parameters of an existing flat-rate tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatRatePlan {
    pub monthly_price: Money,
    pub token_generation_rate: Rate,
    /// Bucket size if advertised; tier listings often omit it.
    pub token_bucket_size: Option<DataVolume>,
}

impl FlatRatePlan {
    pub fn new(monthly_price: Money, token_generation_rate: Rate) -> Self {
        Self {
            monthly_price,
            token_generation_rate,
            token_bucket_size: None,
        }
    }

    pub fn with_bucket_size(mut self, size: DataVolume) -> Self {
        self.token_bucket_size = Some(size);
        self
    }
}

/// The designed plan: `N` subscribers share the higher tier's contract, each
/// paying the lower tier's price plus a linear charge on excess usage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridPlan {
    pub n_subscribers: u32,
    /// Always the lower tier's monthly price: zero usage must cost P_L.
    pub base_price: Money,
    pub slope: PriceSlope,
    pub token_generation_rate: Rate,
    /// Zero when the source tier's bucket size is unknown.
    pub token_bucket_size: DataVolume,
    pub month_length: TimeSpan,
}

/// Real-valued and integer-feasible subscriber-count bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubscriberRange {
    /// Price floor `P_H / P_L`.
    pub n_min: f64,
    /// Capacity ceiling `TGR_H / TGR_L`.
    pub n_max: f64,
    pub integer_min: u32,
    pub integer_max: u32,
}

/// Everything a designer needs to see at once for a chosen subscriber count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanBounds {
    pub subscriber_range: SubscriberRange,
    pub alpha_min: PriceSlope,
    pub alpha_max: PriceSlope,
    pub u_max: DataVolume,
}

/// The plan requirements a design can satisfy or violate. Each knows its
/// defining inequality for reports and error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Requirement {
    /// Guaranteed rates must fit the group contract.
    SubscriberCountCapacity,
    /// The group must out-earn the higher tier even at zero usage.
    SubscriberCountPriceFloor,
    /// No subscriber's bill may exceed the higher tier's price.
    BillCapAtHigherPlan,
    /// A subscriber with zero excess usage pays the lower tier's price.
    ZeroUsagePriceMatchesLowerPlan,
    /// Group revenue at least matches the higher tier.
    RevenueAtLeastHigherPlan,
    /// Group revenue at least matches N lower-tier subscriptions.
    RevenueAtLeastLowerPlanSum,
    /// Slope cannot exceed the bill-cap ceiling.
    SlopeCeiling,
    /// Slope must recover the higher-tier price at full usage.
    SlopeFloor,
}

impl Requirement {
    pub fn formula(self) -> &'static str {
        match self {
            Requirement::SubscriberCountCapacity => "N * TGR_L <= TGR_H",
            Requirement::SubscriberCountPriceFloor => "N >= P_H / P_L",
            Requirement::BillCapAtHigherPlan => "P + alpha * u_max <= P_H",
            Requirement::ZeroUsagePriceMatchesLowerPlan => "P = P_L",
            Requirement::RevenueAtLeastHigherPlan => "sum of bills >= P_H",
            Requirement::RevenueAtLeastLowerPlanSum => "sum of bills >= N * P_L",
            Requirement::SlopeCeiling => "alpha <= (P_H - P_L) / ((TGR_H - TGR_L) * T_month)",
            Requirement::SlopeFloor => "alpha >= max(0, (P_H - N * P_L) / ((TGR_H - TGR_L) * T_month))",
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.formula())
    }
}

/// One checked inequality with both sides as computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub requirement: Requirement,
    pub lhs: f64,
    pub rhs: f64,
    pub unit: String,
    pub pass: bool,
}

impl fmt::Display for ValidationEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} vs {} {} -> {}",
            self.requirement,
            self.lhs,
            self.rhs,
            self.unit,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid flat-rate plan pair: {reason}")]
    InvalidPlanPair { reason: String },
    #[error(
        "no valid subscriber count: the price floor P_H/P_L = {n_min} and capacity ceiling \
         TGR_H/TGR_L = {n_max} leave no integer N with ceil({n_min}) <= N <= floor({n_max})"
    )]
    NoFeasibleSubscriberCount { n_min: f64, n_max: f64 },
    #[error("subscriber count {n} violates {requirement}: valid integer range is [{min}, {max}]")]
    SubscriberCountOutOfBounds {
        n: u32,
        min: u32,
        max: u32,
        requirement: Requirement,
    },
    #[error(
        "usage-price slope {alpha} GBP/Mbit violates {requirement}: valid range is \
         [{alpha_min}, {alpha_max}] GBP/Mbit"
    )]
    SlopeOutOfBounds {
        alpha: f64,
        alpha_min: f64,
        alpha_max: f64,
        requirement: Requirement,
    },
    #[error("token bucket sizes are unknown for at least one tier; exact excess volume needs both")]
    MissingBucketSize,
}

/// How to compute the maximum monthly excess volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UMaxMode {
    /// `(TGR_H - TGR_L) * T_month + (TBS_H - TBS_L)`; needs both bucket sizes.
    Exact,
    /// `(TGR_H - TGR_L) * T_month`; the bucket term is negligible over a month.
    Approximate,
}

/// Subscriber-count selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NPolicy {
    Max,
    Min,
    Given(u32),
}

/// Usage-price slope selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaPolicy {
    Max,
    Min,
    Given(PriceSlope),
}

fn check_pair(lower: &FlatRatePlan, higher: &FlatRatePlan) -> Result<(), PlanError> {
    let reason = if !lower.monthly_price.is_positive() || !higher.monthly_price.is_positive() {
        Some("monthly prices must be positive".to_string())
    } else if lower.token_generation_rate.value() <= 0.0
        || higher.token_generation_rate.value() <= 0.0
    {
        Some("token generation rates must be positive".to_string())
    } else if lower.monthly_price > higher.monthly_price {
        Some(format!(
            "lower tier price {} exceeds higher tier price {}",
            lower.monthly_price, higher.monthly_price
        ))
    } else if lower.token_generation_rate.value() > higher.token_generation_rate.value() {
        Some(format!(
            "lower tier rate {} exceeds higher tier rate {}",
            lower.token_generation_rate, higher.token_generation_rate
        ))
    } else {
        None
    };
    match reason {
        Some(reason) => Err(PlanError::InvalidPlanPair { reason }),
        None => Ok(()),
    }
}

/// Computes the subscriber-count window for a plan pair.
///
/// Fails when no integer fits between the rounded-up price floor and the
/// rounded-down capacity ceiling; the error carries both real-valued bounds.
pub fn feasible_n_range(
    lower: &FlatRatePlan,
    higher: &FlatRatePlan,
) -> Result<SubscriberRange, PlanError> {
    check_pair(lower, higher)?;
    let n_min =
        higher.monthly_price.micro_pounds() as f64 / lower.monthly_price.micro_pounds() as f64;
    let n_max = higher.token_generation_rate.value() / lower.token_generation_rate.value();
    let integer_min = n_min.ceil();
    let integer_max = n_max.floor();
    if integer_min > integer_max {
        return Err(PlanError::NoFeasibleSubscriberCount { n_min, n_max });
    }
    Ok(SubscriberRange {
        n_min,
        n_max,
        integer_min: integer_min as u32,
        integer_max: integer_max as u32,
    })
}

/// Maximum excess volume a single subscriber can consume in a month: all
/// spare group bandwidth, plus the spare burst allowance in exact mode.
pub fn compute_u_max(
    lower: &FlatRatePlan,
    higher: &FlatRatePlan,
    t_month: TimeSpan,
    mode: UMaxMode,
) -> Result<DataVolume, PlanError> {
    check_pair(lower, higher)?;
    let rate_gap = Rate::new(
        higher.token_generation_rate.value() - lower.token_generation_rate.value(),
    );
    let base = rate_gap * t_month;
    match mode {
        UMaxMode::Approximate => Ok(base),
        UMaxMode::Exact => {
            let (Some(tbs_l), Some(tbs_h)) = (lower.token_bucket_size, higher.token_bucket_size)
            else {
                return Err(PlanError::MissingBucketSize);
            };
            Ok(DataVolume::new(
                base.value() + (tbs_h.value() - tbs_l.value()),
            ))
        }
    }
}

/// Slope window for a chosen subscriber count, using the approximate
/// excess-volume form (the bucket-size terms are unknown or negligible).
///
/// With identical tiers there is no excess volume to price; both bounds
/// collapse to zero and the plan degenerates to the flat rate.
pub fn alpha_bounds(
    lower: &FlatRatePlan,
    higher: &FlatRatePlan,
    n: u32,
    t_month: TimeSpan,
) -> Result<(PriceSlope, PriceSlope), PlanError> {
    let range = feasible_n_range(lower, higher)?;
    if n < range.integer_min || n > range.integer_max {
        return Err(PlanError::SubscriberCountOutOfBounds {
            n,
            min: range.integer_min,
            max: range.integer_max,
            requirement: if n > range.integer_max {
                Requirement::SubscriberCountCapacity
            } else {
                Requirement::SubscriberCountPriceFloor
            },
        });
    }
    let u_max = compute_u_max(lower, higher, t_month, UMaxMode::Approximate)?;
    if u_max.is_zero() {
        return Ok((PriceSlope::ZERO, PriceSlope::ZERO));
    }
    let floor_gap = higher.monthly_price - lower.monthly_price * n;
    let alpha_min = (floor_gap.to_pounds() / u_max.value()).max(0.0);
    let price_gap = higher.monthly_price - lower.monthly_price;
    let alpha_max = price_gap.to_pounds() / u_max.value();
    Ok((PriceSlope::new(alpha_min), PriceSlope::new(alpha_max)))
}

/// Derives every bound in one shot for a chosen subscriber count.
pub fn plan_bounds(
    lower: &FlatRatePlan,
    higher: &FlatRatePlan,
    n: u32,
    t_month: TimeSpan,
) -> Result<PlanBounds, PlanError> {
    let subscriber_range = feasible_n_range(lower, higher)?;
    let (alpha_min, alpha_max) = alpha_bounds(lower, higher, n, t_month)?;
    let u_max = compute_u_max(lower, higher, t_month, UMaxMode::Approximate)?;
    Ok(PlanBounds {
        subscriber_range,
        alpha_min,
        alpha_max,
        u_max,
    })
}

/// Picks a hybrid plan from the pair according to the given policies.
///
/// The base price is forced to the lower tier's price, and the per-subscriber
/// token bucket parameters are copied from the lower tier (size defaults to
/// zero when unknown).
pub fn design_hybrid_plan(
    lower: &FlatRatePlan,
    higher: &FlatRatePlan,
    t_month: TimeSpan,
    n_policy: NPolicy,
    alpha_policy: AlphaPolicy,
) -> Result<HybridPlan, PlanError> {
    let range = feasible_n_range(lower, higher)?;
    let n = match n_policy {
        NPolicy::Max => range.integer_max,
        NPolicy::Min => range.integer_min,
        NPolicy::Given(k) => k,
    };
    let (alpha_min, alpha_max) = alpha_bounds(lower, higher, n, t_month)?;
    let slope = match alpha_policy {
        AlphaPolicy::Max => alpha_max,
        AlphaPolicy::Min => alpha_min,
        AlphaPolicy::Given(a) => {
            if a.value() > alpha_max.value() {
                return Err(PlanError::SlopeOutOfBounds {
                    alpha: a.value(),
                    alpha_min: alpha_min.value(),
                    alpha_max: alpha_max.value(),
                    requirement: Requirement::SlopeCeiling,
                });
            }
            if a.value() < alpha_min.value() {
                return Err(PlanError::SlopeOutOfBounds {
                    alpha: a.value(),
                    alpha_min: alpha_min.value(),
                    alpha_max: alpha_max.value(),
                    requirement: Requirement::SlopeFloor,
                });
            }
            a
        }
    };
    Ok(HybridPlan {
        n_subscribers: n,
        base_price: lower.monthly_price,
        slope,
        token_generation_rate: lower.token_generation_rate,
        token_bucket_size: lower.token_bucket_size.unwrap_or(DataVolume::ZERO),
        month_length: t_month,
    })
}

// Float inequalities carry a small relative guard so boundary designs
// (N exactly at the capacity ceiling) do not fail on rounding noise.
fn le_with_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-9 * rhs.abs().max(lhs.abs()).max(1.0)
}

/// Checks a plan against every static requirement, reporting both sides of
/// each inequality. Failures are entries, not errors.
pub fn validate_hybrid_plan(
    plan: &HybridPlan,
    lower: &FlatRatePlan,
    higher: &FlatRatePlan,
) -> ValidationReport {
    let mut entries = Vec::with_capacity(4);

    let guaranteed_sum = plan.n_subscribers as f64 * plan.token_generation_rate.value();
    entries.push(ValidationEntry {
        requirement: Requirement::SubscriberCountCapacity,
        lhs: guaranteed_sum,
        rhs: higher.token_generation_rate.value(),
        unit: "Mbit/s".to_string(),
        pass: le_with_slack(guaranteed_sum, higher.token_generation_rate.value()),
    });

    let u_max = Rate::new(
        (higher.token_generation_rate.value() - plan.token_generation_rate.value()).max(0.0),
    ) * plan.month_length;
    let max_bill = plan.base_price + Money::round_pounds(plan.slope.value() * u_max.value());
    entries.push(ValidationEntry {
        requirement: Requirement::BillCapAtHigherPlan,
        lhs: max_bill.to_pounds(),
        rhs: higher.monthly_price.to_pounds(),
        unit: "GBP".to_string(),
        // One micro-pound of slack: the ceiling itself is defined through
        // the same rounding.
        pass: max_bill <= higher.monthly_price + Money::from_micro_pounds(1),
    });

    entries.push(ValidationEntry {
        requirement: Requirement::ZeroUsagePriceMatchesLowerPlan,
        lhs: plan.base_price.to_pounds(),
        rhs: lower.monthly_price.to_pounds(),
        unit: "GBP".to_string(),
        pass: plan.base_price == lower.monthly_price,
    });

    let floor_gap = higher.monthly_price - lower.monthly_price * plan.n_subscribers;
    entries.push(ValidationEntry {
        requirement: Requirement::SubscriberCountPriceFloor,
        lhs: floor_gap.to_pounds(),
        rhs: 0.0,
        unit: "GBP".to_string(),
        pass: floor_gap <= Money::ZERO,
    });

    ValidationReport { entries }
}
