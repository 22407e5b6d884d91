use thiserror::Error;

pub type Result<T> = std::result::Result<T, NptError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NptError {
    /// An argument lies outside the domain of the operation (e.g. `z <= 1`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature ran out of refinement levels before meeting its tolerance.
    #[error("quadrature did not converge: {what} (last error estimate {estimate:e})")]
    Convergence { what: String, estimate: f64 },

    /// The semi-infinite Q representation diverges for these indices.
    #[error("overflow guard: cosh({m}t) growth defeats the decay of degree index {n}")]
    OverflowGuard { m: i64, n: i64 },

    /// The Cartesian point sits on the z-axis or on the focal ring.
    #[error("point lies on a singular locus of toroidal coordinates: {0}")]
    SingularLocus(&'static str),

    /// Target too close to the surface for plain tensor quadrature.
    #[error("target at distance {distance:e} is closer than {limit:e} to the surface")]
    TooClose { distance: f64, limit: f64 },

    #[error("boundary-limit extrapolation did not stabilise (spread {spread:e})")]
    ExtrapolationDiverged { spread: f64 },

    #[error("eigensolver failed: {0}")]
    SolverFailure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
