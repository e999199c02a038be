use thiserror::Error;

/// Everything that can go wrong while assembling a lattice or evaluating
/// one of its spectra. Variants carry enough context to be actionable
/// from the command line without a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    /// The lattice description itself is inconsistent (non-positive mass,
    /// dangling node, malformed link, ...).
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    /// A parameter is outside the domain where the requested quantity is
    /// defined (wavevector off the Brillouin zone, mass ratio out of range).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested frequency lies on or too close to a continuous
    /// spectrum, where resolvent-based quantities blow up.
    #[error(
        "frequency {omega} is within {distance:.3e} of the {which} spectrum (guard {guard:.1e})"
    )]
    SpectrumViolation { omega: f64, which: &'static str, distance: f64, guard: f64 },

    /// An iterative scheme (quadrature refinement, projection refinement,
    /// root scan) hit its resolution cap before reaching the target.
    #[error("{what} did not converge: reached {achieved:.3e}, wanted {target:.3e} ({detail})")]
    NonConvergence { what: &'static str, achieved: f64, target: f64, detail: String },

    /// A matrix that must be invertible came out singular.
    #[error("singular matrix while {0}")]
    Singular(String),

    /// A determinant that should be real (up to roundoff) was not.
    #[error("determinant at omega={omega} has relative imaginary part {residual:.3e} (limit {limit:.1e})")]
    ComplexResidual { omega: f64, residual: f64, limit: f64 },

    /// Mode reconstruction was asked for a frequency that is not a root.
    #[error("omega={omega} is not a root: |det| = {det_abs:.3e}")]
    NotARoot { omega: f64, det_abs: f64 },

    /// Null-space extraction found the wrong number of small singular values.
    #[error("null space at omega={omega} is {found}-dimensional within threshold {threshold:.1e}, expected 1")]
    DegenerateNullSpace { omega: f64, found: usize, threshold: f64 },

    /// Configuration file problems (I/O wrapped as string to stay Send + Sync).
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
