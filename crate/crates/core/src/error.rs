use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not normal: |MM* - M*M| = {residual:e}")]
    NotNormal { residual: f64 },
    #[error("eigensolver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NotFinite(&'static str),
    #[error("declared symmetry violated by {residual:e}")]
    SymmetryViolated { residual: f64 },
    #[error("matrix is not unitary: |UU* - I| = {residual:e}")]
    NotUnitary { residual: f64 },
    #[error("structure not validated: d^2 residual {residual:e}")]
    NotValidated { residual: f64 },
    #[error("integrability violated: (0,2) part of d(phi) is nonzero")]
    NotIntegrable,
    #[error("form is not of pure bidegree")]
    MixedBidegree,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("metric is balanced: |eta| = {norm:e}")]
    Balanced { norm: f64 },
    #[error("metric is not BTP: |nabla^b T| = {residual:e}")]
    NotBtp { residual: f64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("point lies within the singular guard radius")]
    SingularPoint,
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
