use std::fmt;

/// Errors raised by grid construction, operator evaluation and the
/// verification harnesses.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid has no cells or a zero-length axis.
    EmptyGrid,
    /// More axes than the cube-sum corner expansion supports.
    TooManyDims(usize),
    /// A value or mass is NaN or infinite.
    NonFinite(&'static str),
    /// Cell width must be strictly positive.
    BadCellWidth(f64),
    /// A measure mass is negative.
    NegativeMass(f64),
    /// Two grids that must share geometry do not.
    GeometryMismatch,
    /// Cube side must be at least one cell.
    BadCubeSide,
    /// Cube dilation factors must be odd (cell-lattice alignment).
    EvenDilation(u64),
    /// The operation requires the cube to lie fully inside the grid.
    CubeOutsideGrid,
    /// Config variant does not match the operation.
    VariantMismatch {
        expected: &'static str,
        got: &'static str,
    },
    /// beta must lie in [0, n].
    BetaOutOfRange { beta: f64, ndim: usize },
    /// alpha outside its admissible range.
    AlphaOutOfRange(f64),
    /// The FPW exponent is undefined for alpha = 0 (John-Nirenberg branch).
    FpwAlphaZero,
    /// The FPW exponent requires n > alpha.
    FpwAlphaTooLarge { alpha: f64, ndim: usize },
    /// Oscillation exponent must be >= 1.
    BadExponent(f64),
    /// A cube family is empty after filtering.
    EmptyFamily,
    /// A domain mask has no cells set.
    EmptyMask,
    /// Mask cells do not form one face-connected component.
    MaskDisconnected,
    /// Value requested at a cell outside the domain mask.
    NotAMaskCell(Vec<i64>),
    /// Brute-force guard: grid too large for exhaustive enumeration.
    BruteForceGuard { cells: usize, limit: usize },
    /// Scale-split radius outside [1, max_side].
    BadSplitRadius { r0: usize, max_side: usize },
    /// Whitney chain source is not a cube of the decomposition.
    SourceNotInDecomposition,
    /// Whitney depth must be >= 1.
    BadDepth,
    /// Annulus radius must satisfy 0 < 2 r0 < L.
    BadAnnulusRadius,
    /// Finite differences need at least two cells per axis.
    GridTooSmall,
    /// Harness guard: zero input norm/seminorm, ratio undefined.
    ZeroInputNorm,
    /// Scenario failed its pre-flight hypothesis check.
    ScenarioInvalid(String),
    /// Invalid configuration (CLI layer).
    Config(String),
    /// I/O failure.
    Io(String),
    /// File format violation (bad magic, truncation, version).
    Format(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyGrid => write!(f, "grid must have at least one cell per axis"),
            Error::TooManyDims(n) => write!(f, "at most 8 axes supported, got {n}"),
            Error::NonFinite(what) => write!(f, "{what} must be finite"),
            Error::BadCellWidth(h) => write!(f, "cell width must be positive, got {h}"),
            Error::NegativeMass(m) => write!(f, "measure masses must be nonnegative, got {m}"),
            Error::GeometryMismatch => write!(f, "grids do not share shape and cell width"),
            Error::BadCubeSide => write!(f, "cube side must be at least 1"),
            Error::EvenDilation(k) => {
                write!(f, "dilation factor must be odd for cell alignment, got {k}")
            }
            Error::CubeOutsideGrid => write!(f, "cube must lie fully inside the grid"),
            Error::VariantMismatch { expected, got } => {
                write!(f, "operation expects variant {expected}, config has {got}")
            }
            Error::BetaOutOfRange { beta, ndim } => {
                write!(f, "beta must lie in [0, {ndim}], got {beta}")
            }
            Error::AlphaOutOfRange(a) => write!(f, "alpha outside admissible range: {a}"),
            Error::FpwAlphaZero => write!(f, "self-improvement exponent undefined for alpha = 0"),
            Error::FpwAlphaTooLarge { alpha, ndim } => {
                write!(f, "self-improvement exponent requires n > alpha, got n={ndim}, alpha={alpha}")
            }
            Error::BadExponent(q) => write!(f, "exponent must be >= 1, got {q}"),
            Error::EmptyFamily => write!(f, "cube family is empty after filtering"),
            Error::EmptyMask => write!(f, "domain mask has no cells"),
            Error::MaskDisconnected => write!(f, "domain mask is not face-connected"),
            Error::NotAMaskCell(idx) => write!(f, "cell {idx:?} is outside the domain mask"),
            Error::BruteForceGuard { cells, limit } => {
                write!(f, "brute force guard: {cells} cells exceeds limit {limit}")
            }
            Error::BadSplitRadius { r0, max_side } => {
                write!(f, "split radius {r0} not in [1, {max_side}]")
            }
            Error::SourceNotInDecomposition => {
                write!(f, "chain source is not a cube of the decomposition")
            }
            Error::BadDepth => write!(f, "decomposition depth must be >= 1"),
            Error::BadAnnulusRadius => write!(f, "annulus radius must satisfy 0 < 2 r0 < L"),
            Error::GridTooSmall => write!(f, "finite differences need extent >= 2 per axis"),
            Error::ZeroInputNorm => write!(f, "input norm is zero, ratio undefined"),
            Error::ScenarioInvalid(why) => write!(f, "scenario invalid: {why}"),
            Error::Config(e) => write!(f, "invalid config: {e}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Format(e) => write!(f, "format error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
