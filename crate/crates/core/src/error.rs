use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operator is not Hermitian (max |A - A†| = {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("operator is not unitary (max |A A† - 1| = {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("operator is not involutory (max |A² - 1| = {defect:.3e})")]
    NotInvolutory { defect: f64 },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("invalid Pauli word {0:?}")]
    InvalidPauliWord(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unitary path does not start at the identity (max deviation {deviation:.3e})")]
    PathNotAtIdentity { deviation: f64 },

    #[error("alpha profile violates boundary conditions: alpha(0) = {start}, alpha(1) = {end}")]
    BoundaryConditions { start: f64, end: f64 },

    #[error("empty sample grid")]
    EmptyGrid,

    #[error("basis is not closed under the Lie bracket: [{left}, {right}] produces {missing}")]
    BasisNotClosed { left: String, right: String, missing: String },

    #[error("invariant leaves the basis span at s = {s} (weight {weight:.3e} outside)")]
    OutsideBasis { s: f64, weight: f64 },

    #[error("no Hamiltonian in the basis span solves the invariant equation at s = {s} (least-squares residual {residual:.3e})")]
    Inconsistent { s: f64, residual: f64 },

    #[error("coefficient system ill-conditioned at s = {s} (condition number {condition:.3e})")]
    IllConditioned { s: f64, condition: f64 },

    #[error("schedule has no scalar frequency profile")]
    NoScalarProfile,

    #[error("ground state degenerate at s = {s} (gap {gap:.3e})")]
    DegenerateGround { s: f64, gap: f64 },

    #[error("trajectory has no state at s = {s}")]
    TrajectoryMismatch { s: f64 },

    #[error("quadrature did not converge (estimated error {estimate:.3e})")]
    QuadratureFailed { estimate: f64 },

    #[error("truth table {0:?} is neither constant nor balanced")]
    PromiseViolated(String),

    #[error("measurement certainty {certainty} is inconsistent with the promise")]
    AmbiguousOutcome { certainty: f64 },

    #[error("construction failed: fidelity with target {fidelity}")]
    ConstructionFailed { fidelity: f64 },

    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Csv(err.to_string())
    }
}
