use fredholm_core::Error as CoreError;

/// Failures of a lab run, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Numeric(#[from] CoreError),

    /// A property the run was meant to confirm did not hold.
    #[error("property violation: {0}")]
    Violation(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serialize(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) | LabError::Io(_) | LabError::Serialize(_) => 1,
            LabError::Violation(_) => 3,
            LabError::Numeric(e) => match e {
                CoreError::Convergence { .. }
                | CoreError::PhaseProximity { .. }
                | CoreError::BranchCut { .. } => 2,
                CoreError::NotSymmetrizable { .. } | CoreError::NoConsistentOffset => 3,
                CoreError::InvalidParameter(_)
                | CoreError::NoAnnulus { .. }
                | CoreError::RealCriticalPoints { .. }
                | CoreError::Precondition(_)
                | CoreError::NotPermutation(_) => 1,
            },
        }
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Serialize(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Serialize(e.to_string())
    }
}

pub type LabResult<T> = Result<T, LabError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(LabError::Usage("x".into()).exit_code(), 1);
        assert_eq!(LabError::Violation("x".into()).exit_code(), 3);
        let conv = CoreError::Convergence { what: "x", estimate: 1.0, tolerance: 0.1 };
        assert_eq!(LabError::from(conv).exit_code(), 2);
        assert_eq!(LabError::from(CoreError::NoConsistentOffset).exit_code(), 3);
        assert_eq!(LabError::from(CoreError::NoAnnulus { inner: 1.0, outer: 1.0 }).exit_code(), 1);
    }
}
