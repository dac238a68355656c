use num_complex::Complex64;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the numerical layers.
///
/// `Validation`-class errors mean the inputs violate a documented
/// precondition; non-convergence errors mean an iterative scheme ran out of
/// budget and carry enough context to locate the failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("quadrature did not converge: worst panel near {location} (estimate {estimate:.3e})")]
    QuadratureNonConvergence { location: Complex64, estimate: f64 },

    #[error("root finding stagnated: {stagnant} of {degree} roots unconverged, cluster near {location}")]
    RootsNonConvergence {
        stagnant: usize,
        degree: usize,
        location: Complex64,
    },

    #[error("evaluation at or too close to a pole at {0}")]
    PoleProximity(Complex64),

    #[error("degenerate lattice: Im(omega'/omega) = {0:.3e} must be positive")]
    DegenerateLattice(f64),

    #[error("meromorphy condition violated at x = {point}: offending coefficients {detail}")]
    Meromorphy { point: f64, detail: String },

    #[error("product of the pair is outside the quadratic-form domain: residue {residue:.3e} at x = {point}")]
    ResidueObstruction { point: f64, residue: f64 },

    #[error("integral tail did not converge (last increment {0:.3e})")]
    TailNonConvergence(f64),

    #[error("seed eigenfunction vanishes on the real line near x = {0}")]
    SeedVanishes(f64),

    #[error("Darboux level coincides with the dressing level {0}")]
    LevelCollision(Complex64),

    #[error("non-generic Bloch multiplier: {0}")]
    NonGenericMultiplier(String),

    #[error("ill-conditioned period system (condition estimate {0:.3e})")]
    IllConditionedPeriods(f64),

    #[error("tau construction failed: KdV residual {residual:.3e} at n = {n}")]
    TauResidual { n: u32, residual: f64 },

    #[error("contour resolution too low: {0}")]
    ContourResolution(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Exit code used by the CLI: 2 for validation errors, 3 for numerical
    /// non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::DegenerateLattice(_)
            | Error::PoleProximity(_)
            | Error::LevelCollision(_)
            | Error::NonGenericMultiplier(_)
            | Error::Meromorphy { .. }
            | Error::ResidueObstruction { .. } => 2,
            _ => 3,
        }
    }
}
