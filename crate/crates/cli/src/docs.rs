//! On-disk document formats.
//!
//! Everything is JSON with explicit unit suffixes in the field names; money
//! travels as decimal strings, never floats. Struct field order is the
//! serialized field order, so a document written by one command parses and
//! re-serializes byte-identically in the next.

use serde::{Deserialize, Serialize};

use hybridplan_core::planner::{AlphaPolicy, FlatRatePlan, HybridPlan, NPolicy, PlanBounds};
use hybridplan_core::simulator::{
    Breakpoint, DemandScenario, DemandTrace, GroupContract, SimulationResult,
};
use hybridplan_core::units::{DataVolume, Money, PriceSlope, Rate, TimeSpan};

pub const DEFAULT_MONTH_SECONDS: f64 = 2.592e6;
pub const DEFAULT_STEP_SECONDS: f64 = 1.0;
pub const DEFAULT_CSV_MAX_ROWS: usize = 10_000;

fn default_month_seconds() -> f64 {
    DEFAULT_MONTH_SECONDS
}

fn default_step_seconds() -> f64 {
    DEFAULT_STEP_SECONDS
}

fn default_csv_max_rows() -> usize {
    DEFAULT_CSV_MAX_ROWS
}

fn default_n_policy() -> NPolicy {
    NPolicy::Max
}

fn default_alpha_policy() -> AlphaPolicy {
    AlphaPolicy::Max
}

/// Top-level configuration consumed by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub lower_plan: PlanTierDoc,
    pub higher_plan: PlanTierDoc,
    #[serde(default = "default_month_seconds")]
    pub month_seconds: f64,
    #[serde(default = "default_n_policy")]
    pub n_policy: NPolicy,
    #[serde(default = "default_alpha_policy")]
    pub alpha_policy: AlphaPolicy,
    #[serde(default = "default_step_seconds")]
    pub step_seconds: f64,
    #[serde(default)]
    pub scenarios: Vec<ScenarioDoc>,
    /// Time-series CSVs are decimated down to at most this many rows.
    #[serde(default = "default_csv_max_rows")]
    pub csv_max_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanTierDoc {
    pub monthly_price_gbp: Money,
    pub token_generation_rate_mbps: Rate,
    #[serde(default)]
    pub token_bucket_size_mbit: Option<DataVolume>,
}

impl PlanTierDoc {
    pub fn to_plan(&self) -> FlatRatePlan {
        FlatRatePlan {
            monthly_price: self.monthly_price_gbp,
            token_generation_rate: self.token_generation_rate_mbps,
            token_bucket_size: self.token_bucket_size_mbit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    /// Defaults to the configured month length.
    #[serde(default)]
    pub horizon_seconds: Option<f64>,
    pub subscribers: Vec<SubscriberTraceDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubscriberTraceDoc {
    pub id: String,
    pub breakpoints: Vec<BreakpointDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakpointDoc {
    pub start_seconds: f64,
    pub rate_mbps: f64,
}

impl ScenarioDoc {
    pub fn to_scenario(&self, default_horizon_s: f64) -> Result<DemandScenario, String> {
        let horizon = self.horizon_seconds.unwrap_or(default_horizon_s);
        let horizon = TimeSpan::try_new(horizon).map_err(|e| e.to_string())?;
        let traces = self
            .subscribers
            .iter()
            .map(|sub| {
                let breakpoints = sub
                    .breakpoints
                    .iter()
                    .map(|bp| {
                        Ok(Breakpoint {
                            start: TimeSpan::try_new(bp.start_seconds).map_err(|e| e.to_string())?,
                            rate: Rate::try_new(bp.rate_mbps).map_err(|e| e.to_string())?,
                        })
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Ok(DemandTrace {
                    subscriber_id: sub.id.clone(),
                    breakpoints,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(DemandScenario { horizon, traces })
    }
}

impl ConfigDocument {
    pub fn group_contract(&self) -> GroupContract {
        GroupContract {
            token_generation_rate: self.higher_plan.token_generation_rate_mbps,
            token_bucket_size: self
                .higher_plan
                .token_bucket_size_mbit
                .unwrap_or(DataVolume::ZERO),
        }
    }
}

/// Output of `design`: the chosen plan plus the window it was chosen from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub plan: HybridPlanDoc,
    pub bounds: BoundsDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridPlanDoc {
    pub n_subscribers: u32,
    pub base_price_gbp: Money,
    pub usage_price_slope_gbp_per_mbit: f64,
    pub token_generation_rate_mbps: Rate,
    pub token_bucket_size_mbit: DataVolume,
    pub month_seconds: f64,
}

impl HybridPlanDoc {
    pub fn from_plan(plan: &HybridPlan) -> Self {
        Self {
            n_subscribers: plan.n_subscribers,
            base_price_gbp: plan.base_price,
            usage_price_slope_gbp_per_mbit: plan.slope.value(),
            token_generation_rate_mbps: plan.token_generation_rate,
            token_bucket_size_mbit: plan.token_bucket_size,
            month_seconds: plan.month_length.value(),
        }
    }

    pub fn to_plan(&self) -> Result<HybridPlan, String> {
        Ok(HybridPlan {
            n_subscribers: self.n_subscribers,
            base_price: self.base_price_gbp,
            slope: PriceSlope::try_new(self.usage_price_slope_gbp_per_mbit)
                .map_err(|e| e.to_string())?,
            token_generation_rate: self.token_generation_rate_mbps,
            token_bucket_size: self.token_bucket_size_mbit,
            month_length: TimeSpan::try_new(self.month_seconds).map_err(|e| e.to_string())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsDoc {
    pub n_min: f64,
    pub n_max: f64,
    pub n_integer_min: u32,
    pub n_integer_max: u32,
    pub alpha_min_gbp_per_mbit: f64,
    pub alpha_max_gbp_per_mbit: f64,
    pub u_max_mbit: f64,
}

impl BoundsDoc {
    pub fn from_bounds(bounds: &PlanBounds) -> Self {
        Self {
            n_min: bounds.subscriber_range.n_min,
            n_max: bounds.subscriber_range.n_max,
            n_integer_min: bounds.subscriber_range.integer_min,
            n_integer_max: bounds.subscriber_range.integer_max,
            alpha_min_gbp_per_mbit: bounds.alpha_min.value(),
            alpha_max_gbp_per_mbit: bounds.alpha_max.value(),
            u_max_mbit: bounds.u_max.value(),
        }
    }
}

/// Output of `simulate`: one entry per scenario and mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub n_subscribers: u32,
    pub step_seconds: f64,
    pub scenarios: Vec<ScenarioResultDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Hybrid,
    Legacy,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Hybrid,
    Legacy,
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunMode::Hybrid => "hybrid",
            RunMode::Legacy => "legacy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResultDoc {
    pub name: String,
    pub mode: RunMode,
    pub horizon_seconds: f64,
    pub usage_records: Vec<UsageRecordDoc>,
    pub qos: Vec<QosDoc>,
    pub group_conformant_volume_mbit: f64,
    pub wasted_capacity_volume_mbit: f64,
    /// File name of the granted-rate time series, next to the results file.
    pub granted_rates_csv: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageRecordDoc {
    pub subscriber_id: String,
    pub conformant_volume_mbit: f64,
    pub excess_volume_mbit: f64,
    pub month_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosDoc {
    pub subscriber_id: String,
    pub mean_granted_rate_mbps: f64,
    pub demand_satisfaction_ratio: f64,
}

impl ScenarioResultDoc {
    pub fn from_result(
        name: &str,
        mode: RunMode,
        result: &SimulationResult,
        csv: Option<String>,
    ) -> Self {
        Self {
            name: name.to_string(),
            mode,
            horizon_seconds: result
                .usage_records
                .first()
                .map(|r| r.month_length.value())
                .unwrap_or(0.0),
            usage_records: result
                .usage_records
                .iter()
                .map(|r| UsageRecordDoc {
                    subscriber_id: r.subscriber_id.clone(),
                    conformant_volume_mbit: r.conformant_volume.value(),
                    excess_volume_mbit: r.excess_volume.value(),
                    month_seconds: r.month_length.value(),
                })
                .collect(),
            qos: result
                .qos
                .iter()
                .map(|q| QosDoc {
                    subscriber_id: q.subscriber_id.clone(),
                    mean_granted_rate_mbps: q.mean_granted_rate.value(),
                    demand_satisfaction_ratio: q.demand_satisfaction_ratio,
                })
                .collect(),
            group_conformant_volume_mbit: result.group_conformant_volume.value(),
            wasted_capacity_volume_mbit: result.wasted_capacity_volume.value(),
            granted_rates_csv: csv,
            warnings: result.warnings.clone(),
        }
    }

    pub fn to_usage_records(&self) -> Result<Vec<hybridplan_core::UsageRecord>, String> {
        self.usage_records
            .iter()
            .map(|r| {
                Ok(hybridplan_core::UsageRecord {
                    subscriber_id: r.subscriber_id.clone(),
                    conformant_volume: DataVolume::try_new(r.conformant_volume_mbit)
                        .map_err(|e| e.to_string())?,
                    excess_volume: DataVolume::try_new(r.excess_volume_mbit)
                        .map_err(|e| e.to_string())?,
                    month_length: TimeSpan::try_new(r.month_seconds).map_err(|e| e.to_string())?,
                })
            })
            .collect()
    }
}

/// Output of `bill`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillsDocument {
    /// Static plan checks (base price, bill cap, subscriber window).
    pub plan_requirements: Vec<RequirementEntryDoc>,
    pub scenarios: Vec<ScenarioBillsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBillsDoc {
    pub name: String,
    pub mode: RunMode,
    pub bills: Vec<BillDoc>,
    pub revenue_gbp: Money,
    /// What the same subscribers would have paid on the flat-rate tiers.
    pub higher_plan_price_gbp: Money,
    pub lower_plan_sum_gbp: Money,
    pub requirements: Vec<RequirementEntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillDoc {
    pub subscriber_id: String,
    pub base_gbp: Money,
    pub usage_charge_gbp: Money,
    pub total_gbp: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementEntryDoc {
    pub requirement: hybridplan_core::Requirement,
    pub formula: String,
    pub lhs: f64,
    pub rhs: f64,
    pub unit: String,
    pub pass: bool,
}

impl RequirementEntryDoc {
    pub fn from_entry(entry: &hybridplan_core::ValidationEntry) -> Self {
        Self {
            requirement: entry.requirement,
            formula: entry.requirement.formula().to_string(),
            lhs: entry.lhs,
            rhs: entry.rhs,
            unit: entry.unit.clone(),
            pass: entry.pass,
        }
    }
}

/// Output of `report`: the whole pipeline in one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub plan: HybridPlanDoc,
    pub bounds: BoundsDoc,
    pub plan_requirements: Vec<RequirementEntryDoc>,
    pub cases: Vec<ReportCaseDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCaseDoc {
    pub name: String,
    pub revenue_gbp: Money,
    pub bills: Vec<BillDoc>,
    pub requirements: Vec<RequirementEntryDoc>,
    pub usage_records: Vec<UsageRecordDoc>,
    pub qos: Vec<QosDoc>,
}
