//! Design toolkit and fluid simulator for hybrid ISP service plans in
//! shared access networks.
//!
//! The pieces fit together in a pipeline:
//!
//! * [`units`] — unit-safe scalars (rates, volumes, time, exact money).
//! * [`tbf`] — the fluid token bucket filter both architectures shape with.
//! * [`allocator`] — weighted progressive filling of excess bandwidth.
//! * [`planner`] — derives valid plan parameters (N, alpha, P) from a pair
//!   of flat-rate tiers and validates candidate plans.
//! * [`simulator`] — runs a demand scenario through the hybrid (group
//!   bucket + allocation) or legacy (independent buckets) arrangement.
//! * [`billing`] — turns usage records into bills, revenue, and
//!   requirement reports.

pub mod allocator;
pub mod billing;
pub mod planner;
pub mod simulator;
pub mod tbf;
pub mod units;

pub use allocator::{allocate, AllocationResult, SubscriberState};
pub use billing::{Bill, RequirementReport, UsageRecord};
pub use planner::{
    AlphaPolicy, FlatRatePlan, HybridPlan, NPolicy, PlanBounds, Requirement, UMaxMode,
    ValidationEntry, ValidationReport,
};
pub use simulator::{
    DemandScenario, DemandTrace, GroupContract, LegacyShaper, SimulationResult, SubscriberQos,
};
pub use tbf::TokenBucket;
pub use units::{DataVolume, Money, PriceSlope, Rate, TimeSpan};
