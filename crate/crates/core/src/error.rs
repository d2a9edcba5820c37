use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("could not parse word `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("relator {0} is empty")]
    EmptyRelator(usize),
    #[error("relator {0} is not cyclically reduced")]
    NotCyclicallyReduced(usize),
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),
    #[error("small-cancellation parameter {0} exceeds 1/6")]
    LambdaTooLarge(String),
    #[error("presentation fails the C'({lambda}) condition (max piece {piece})")]
    SmallCancellationFailed { lambda: String, piece: usize },
    #[error("operation not supported by this word-problem strategy: {0}")]
    StrategyUnsupported(String),
    #[error("subgroup membership is not decidable: {0}")]
    UndecidableSpec(String),
    #[error("budget exceeded: {what} (limit {limit})")]
    BudgetExceeded { what: String, limit: usize },
    #[error("integer overflow while evaluating {0}")]
    Overflow(String),
    #[error("word `{0}` is not in the quasimorphism's domain")]
    NotInDomain(String),
    #[error("empty pattern")]
    EmptyPattern,
    #[error("conjugate of `{k}` by `{g}` leaves the subgroup")]
    ConjugateLeavesSubgroup { k: String, g: String },
    #[error("K-letter `{0}` is not in the subgroup")]
    KLetterNotInSubgroup(String),
    #[error("invalid relative alphabet: {0}")]
    InvalidRelAlphabet(String),
    #[error("vertex `{0}` is not in the ball")]
    VertexNotInBall(String),
    #[error("path is broken between positions {0} and {1}")]
    PathBroken(usize, usize),
    #[error("kernel sample is empty")]
    EmptyKernelSample,
    #[error("relator {0} does not lie in ker(theta)")]
    RelatorNotInKernel(usize),
    #[error("lifted relator {0} does not represent its K-element")]
    LiftMismatch(usize),
    #[error("section is undefined at `{0}`")]
    SectionIncomplete(String),
    #[error("no preimage of `{0}` found within the search limits")]
    NoCandidateFound(String),
    #[error("witness {0} leaves the ball")]
    WitnessOutsideBall(usize),
    #[error("`{0}` is not in the mixed commutator subgroup")]
    NotInMixedCommutatorSubgroup(String),
    #[error("defect bound is zero; use the abelianisation instead")]
    DegenerateDefect,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
