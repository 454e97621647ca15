use thiserror::Error;

#[derive(Debug, Error)]
pub enum GasketError {
    #[error("level {level} exceeds the level cap {cap}")]
    LevelTooLarge { level: u32, cap: u32 },

    #[error("({a}, {b}) is not a vertex of the level-{level} gasket")]
    InvalidVertex { level: u32, a: u32, b: u32 },

    #[error("invalid symbol {0}: symbols are 1, 2 or 3")]
    InvalidSymbol(u32),

    #[error(
        "conformity violation at level-{level} vertex ({a}, {b}): cells prescribe {first} and {second}"
    )]
    ConformityViolation {
        level: u32,
        a: u32,
        b: u32,
        first: f64,
        second: f64,
    },

    #[error("shared image mismatch at level-{level} vertex ({a}, {b}): {first} vs {second}")]
    SharedImageMismatch {
        level: u32,
        a: u32,
        b: u32,
        first: f64,
        second: f64,
    },

    #[error("base function disagrees with the seed at corner q{corner}: f = {f}, b = {b}")]
    IncompatibleBase { corner: usize, f: f64, b: f64 },

    #[error("sampler is inconsistent at level-{level} vertex ({a}, {b}): {coarse} vs {fine}")]
    InconsistentSampler {
        level: u32,
        a: u32,
        b: u32,
        coarse: f64,
        fine: f64,
    },

    #[error("level mismatch: {0}")]
    LevelMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("regression needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GasketError>;
