//! Core of a workbench for categorising software libraries along the 24
//! PyPI Topic classifiers with independent assessors, conflict-driven
//! arbitration and vulnerability-driven class revision.

pub mod engine;
pub mod error;
pub mod ingest;
pub mod model;
pub mod replay;
pub mod stats;
pub mod store;
pub mod taxonomy;
pub mod workflow;

pub use error::{Error, Result};
pub use model::*;
pub use taxonomy::{ClassPartition, NetworkClass, Topic};
pub use workflow::{Project, Role, WorkflowState};
