use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("palette is empty")]
    EmptyPalette,
    #[error("color {0:?} appears twice in the palette")]
    DuplicateColor(String),
    #[error("color {0:?} is reserved")]
    ReservedColor(String),
    #[error("palette has {0} colors, at most {max} are supported", max = crate::label::MAX_COLORS - 2)]
    TooManyColors(usize),
    #[error("forbidden structure {index} uses {color:?}")]
    ForbiddenUsesNullOrEquality { index: usize, color: String },
    #[error("unknown color {0:?}")]
    UnknownColor(String),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("arity {arity} exceeds the cap {cap}")]
    ArityCapExceeded { arity: usize, cap: usize },
    #[error("atom {atom} has {scope} variables but its relation has arity {arity}")]
    ScopeArityMismatch { atom: usize, scope: usize, arity: usize },
    #[error("index {index} is out of range for arity {arity}")]
    IndexOutOfRange { index: i64, arity: usize },
    #[error("variable {0} is out of range")]
    UnknownVariable(usize),
    #[error("orbit set is not a subset of the first projection")]
    NotASubsetOfProjection,
    #[error("projections do not match: {0}")]
    ProjectionMismatch(String),
    #[error("expected arity {expected}, found {found}")]
    WrongArity { expected: usize, found: usize },
    #[error("amalgam overlap mismatch: {0}")]
    OverlapMismatch(String),
    #[error("malformed relation: {0}")]
    Malformed(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("relations do not agree on projections")]
    ProjectionsDisagree,
    #[error("vertex is not in the graph")]
    UnknownVertex,
    #[error("no obstruction: {0}")]
    NoObstruction(String),
    #[error("derivation budget exceeded: {0}")]
    DerivationBudgetExceeded(String),
    #[error("replay mismatch at step {step}: {reason}")]
    ReplayMismatch { step: usize, reason: String },
    #[error("witness {index} failed: {reason}")]
    WitnessFailure { index: usize, reason: String },
    #[error("expected arity {expected}, found {found}")]
    WrongArity { expected: usize, found: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("instance has {vars} variables, the oracle cap is {cap}")]
    OracleCapExceeded { vars: usize, cap: usize },
    #[error("component mixes orbit sets")]
    MixedComponent,
    #[error("component does not shrink the instance")]
    NoShrink,
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("malformed operation: {0}")]
    Malformed(String),
}
