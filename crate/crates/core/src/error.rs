use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cluster {cluster} is degenerate: {reason}")]
    DegenerateCluster { cluster: usize, reason: &'static str },

    #[error("degenerate cluster {cluster} at iteration {iteration}")]
    Degeneracy { iteration: usize, cluster: usize },

    /// A combinatorial stage would exceed its configured cap. `required`
    /// saturates at `u128::MAX`.
    #[error("budget exceeded in {stage}: {required} exceeds the limit of {limit}")]
    BudgetExceeded {
        stage: &'static str,
        required: u128,
        limit: u128,
    },

    /// The brute-force oracle refuses instances above its point cap.
    /// `partitions` is the number of partitions it would have to scan.
    #[error("oracle cap exceeded: {n} points exceed the cap of {cap} ({partitions} partitions to scan)")]
    OracleCap { n: usize, cap: usize, partitions: u128 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Budget errors are the only ones a caller can fix by raising a cap.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. } | Error::OracleCap { .. })
    }
}
