use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("measure has no atoms")]
    EmptyMeasure,

    #[error("measure has zero total mass")]
    ZeroMass,

    #[error("invalid atom ({position}, {mass}): positions must be finite and masses finite and nonnegative")]
    InvalidAtom { position: f64, mass: f64 },

    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("value {value} lies outside the truncation box [-{bound}, {bound}] of grid N={n}")]
    GridOverflow { value: f64, bound: f64, n: u32 },

    #[error("grid N={n} is too coarse for this run; smallest admissible N is {min_admissible}")]
    GridTooCoarse { n: u32, min_admissible: u32 },

    #[error("invalid grid size N={0}: must be at least 1")]
    InvalidGrid(u32),

    #[error("invalid velocity measure: {0}")]
    InvalidVelocityMeasure(String),

    #[error("piecewise-linear table is invalid: {0}")]
    InvalidTable(String),

    #[error("phi must be nondecreasing on [0, 1]")]
    NonMonotonePhi,

    #[error("phi must be strictly increasing on [0, 1] to be inverted")]
    NonInvertiblePhi,

    #[error("interpolation offset {tau} outside [0, {dt}]")]
    InvalidTau { tau: f64, dt: f64 },

    #[error("invalid time horizon {0}")]
    InvalidTime(f64),

    #[error("step would make a mass negative: {0}")]
    PositivityViolation(String),

    #[error("source rates do not line up with the measure atoms")]
    SourceMismatch,

    #[error("brute-force search supports at most {max} atoms per measure, got {got}")]
    TooManyAtoms { max: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("snapshot parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
