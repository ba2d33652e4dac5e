//! Transversal security layer: the policy repository and manager, and the
//! tamper-evident audit log.

pub mod audit;
pub mod policy;

use thiserror::Error;

pub use audit::{
    entry_digest, verify_bytes, verify_entries, verify_file, AuditEntry, AuditLog, VerifyReport,
    GENESIS_HASH,
};
pub use policy::{
    Action, Decision, Effect, Policy, PolicyManager, PolicySet, ResourcePattern, DEFAULT_POLICIES,
    ROLES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SecurityError {
    #[error("policy line {line}: {message}")]
    PolicyParse { line: usize, message: String },
    #[error("audit log storage failed: {0}")]
    Audit(String),
    #[error("audit chain broken at seq {seq}")]
    Tampered { seq: u64 },
}
