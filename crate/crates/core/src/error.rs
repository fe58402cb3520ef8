use thiserror::Error;

/// Library error type. The CLI maps variants onto its exit-code contract:
/// capacity errors exit 3, everything else here exits 4.
#[derive(Debug, Error)]
pub enum DssspError {
    /// Malformed or out-of-domain input.
    #[error("invalid input: {0}")]
    Input(String),

    /// Asymmetric alignment is undefined (target path shorter than the
    /// sequence). Distinct from `Input`: the arguments are well-formed but
    /// the quantity does not exist.
    #[error("alignment undefined: {0}")]
    AedUndefined(String),

    /// A deliberately capped computation was asked to exceed its cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, DssspError>;
