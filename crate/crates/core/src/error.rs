use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate integration domain for coarse node {node}: {reason}")]
    DegenerateSigma { node: usize, reason: String },

    /// Constraint rows that are numerically dependent on earlier rows.
    /// Indices refer to the rows of the constraint matrix handed to the solver.
    #[error("constraint rows {rows:?} are linearly dependent on preceding rows")]
    ConstraintDegeneracy { rows: Vec<usize> },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSigma { .. } | Error::ConstraintDegeneracy { .. } | Error::Solver(_)
        )
    }
}
