use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type. Variants carry enough data for a caller to
/// report the failure or decide on a remedy (deeper discretization, smaller
/// k, larger epsilon, ...).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The spec failed admissibility checks; one message per violation.
    InvalidSpec(Vec<String>),
    /// A computation needed more levels than a non-cycled spec defines.
    DepthUnavailable { requested: usize, available: usize },
    /// A word carries a child index outside its level's range.
    IndexOutOfRange {
        position: usize,
        index: u32,
        children: usize,
    },
    /// Antichain construction exceeded the cardinality cap.
    CardinalityCapExceeded { cap: usize },
    /// Discretization would exceed the atom cap.
    AtomCapExceeded { requested: u128, cap: usize },
    /// Catch-all for argument validation (non-positive order, empty level
    /// list handed to an op, inverted ranges, ...).
    InvalidArgument(String),
    /// An atom range [lo, hi] was empty or out of bounds.
    EmptyRange { lo: usize, hi: usize },
    /// The exhaustive solver refused an instance above its size guard.
    OracleGuard { atoms: usize, n: usize },
    /// A ball-mass query used a radius below the measure's resolution.
    EpsilonBelowResolution { epsilon: f64, min_epsilon: f64 },
    /// The discretization is too coarse for the requested point count.
    AdequacyFailed {
        w_inf_bound: f64,
        required: f64,
        margin: f64,
    },
    /// Similarity transport with scale zero.
    ZeroScale,
    /// Lloyd initialization was not sorted strictly increasing.
    UnsortedInitial,
    /// Dimension fit asked for a window with too few usable rows or no
    /// spread in the regressor.
    DegenerateWindow(String),
    /// The index rule has no valid k for this n.
    KRuleDomain { n: usize, min_n: usize },
    /// Inputs passed together disagree (different order r, foreign
    /// codepoints, ...).
    MismatchedInputs(String),
    /// Spec file parsing failed.
    Parse(String),
    /// File system failure while loading a spec.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(violations) => {
                write!(f, "spec is not admissible: {}", violations.join("; "))
            }
            Error::DepthUnavailable {
                requested,
                available,
            } => write!(
                f,
                "depth {requested} requested but the spec defines {available} level(s) and does not cycle"
            ),
            Error::IndexOutOfRange {
                position,
                index,
                children,
            } => write!(
                f,
                "word index {index} at position {position} exceeds the level's {children} children"
            ),
            Error::CardinalityCapExceeded { cap } => {
                write!(f, "antichain cardinality exceeded the cap of {cap}")
            }
            Error::AtomCapExceeded { requested, cap } => {
                write!(f, "discretization needs {requested} atoms, above the cap of {cap}")
            }
            Error::InvalidArgument(msg) => write!(f, "{msg}"),
            Error::EmptyRange { lo, hi } => write!(f, "empty or invalid atom range [{lo}, {hi}]"),
            Error::OracleGuard { atoms, n } => write!(
                f,
                "exhaustive solver guard: {atoms} atoms with n = {n} is above the supported size"
            ),
            Error::EpsilonBelowResolution {
                epsilon,
                min_epsilon,
            } => write!(
                f,
                "epsilon {epsilon:e} is below the measure's resolution; minimum admissible is {min_epsilon:e}"
            ),
            Error::AdequacyFailed {
                w_inf_bound,
                required,
                margin,
            } => write!(
                f,
                "discretization too coarse: transport bound {w_inf_bound:e} exceeds the required {required:e} (margin {margin:.3})"
            ),
            Error::ZeroScale => write!(f, "similarity transport requires a nonzero scale"),
            Error::UnsortedInitial => {
                write!(f, "initial codepoints must be sorted strictly increasing")
            }
            Error::DegenerateWindow(msg) => write!(f, "degenerate fit window: {msg}"),
            Error::KRuleDomain { n, min_n } => write!(
                f,
                "index rule has no admissible k for n = {n}; smallest supported n is {min_n}"
            ),
            Error::MismatchedInputs(msg) => write!(f, "mismatched inputs: {msg}"),
            Error::Parse(msg) => write!(f, "spec parse error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
