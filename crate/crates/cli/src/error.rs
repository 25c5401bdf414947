//! CLI error taxonomy and exit codes.
//!
//! Exit codes: 0 success, 2 usage (from clap), 3 validation failure,
//! 4 configuration error, 5 I/O error.

use thiserror::Error;

use hybridplan_core::allocator::AllocError;
use hybridplan_core::billing::BillingError;
use hybridplan_core::planner::PlanError;
use hybridplan_core::simulator::SimError;

#[derive(Debug, Error)]
pub enum CliError {
    /// The inputs are well-formed but violate a plan requirement.
    #[error("validation failure: {0}")]
    Validation(String),
    /// The inputs themselves are malformed or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_IO: i32 = 5;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<PlanError> for CliError {
    fn from(err: PlanError) -> Self {
        match err {
            PlanError::InvalidPlanPair { .. } | PlanError::MissingBucketSize => {
                CliError::Config(err.to_string())
            }
            PlanError::NoFeasibleSubscriberCount { .. }
            | PlanError::SubscriberCountOutOfBounds { .. }
            | PlanError::SlopeOutOfBounds { .. } => CliError::Validation(err.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::InfeasibleGroup { .. } => CliError::Validation(err.to_string()),
            SimError::Alloc(AllocError::InfeasibleGuarantees { .. }) => {
                CliError::Validation(err.to_string())
            }
            _ => CliError::Config(err.to_string()),
        }
    }
}

impl From<BillingError> for CliError {
    fn from(err: BillingError) -> Self {
        match err {
            BillingError::WrongRecordCount { .. } => CliError::Config(err.to_string()),
            BillingError::UsageExceedsMaximum { .. } => CliError::Validation(err.to_string()),
        }
    }
}
