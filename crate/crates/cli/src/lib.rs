//! Library backing the `hybridplan` binary; the command implementations are
//! exposed so integration tests can drive the pipeline without spawning
//! processes.

pub mod commands;
pub mod docs;
pub mod error;

pub use commands::{cmd_bill, cmd_design, cmd_report, cmd_simulate};
pub use docs::{
    BillsDocument, ConfigDocument, Mode, PlanDocument, ReportDocument, ResultsDocument,
};
pub use error::CliError;
