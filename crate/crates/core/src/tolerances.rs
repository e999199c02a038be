//! Numerical policy in one place. These are the knobs the physics routines
//! share; changing one here changes it everywhere consistently.

/// Minimum distance between a query frequency and any continuous spectrum.
/// Resolvent averages blow up on the spectrum; inside this guard we return a
/// typed error instead of a garbage number.
pub const SPECTRUM_GUARD: f64 = 1e-9;

/// Acceptance gate on the relative imaginary part `|Im| / (1 + |Re|)` of
/// determinants that are real in exact arithmetic. Roots failing the gate
/// are rejected as quadrature artifacts.
pub const REALNESS_LIMIT: f64 = 1e-6;

/// Default tolerance for the k2 resolvent average.
pub const QUAD_TOL: f64 = 1e-10;

/// Bisection width for frequency roots.
pub const ROOT_XTOL: f64 = 1e-10;

/// Modulus bound certified for the determinant at every returned root.
pub const DET_AT_ROOT: f64 = 1e-8;

/// Initial sign-scan resolution inside one search interval.
pub const SCAN_POINTS: usize = 128;

/// Gaps narrower than this are treated as closed. Projections carry a few
/// orders of magnitude more error than ROOT_XTOL at their endpoints, so a
/// sliver below this width cannot be distinguished from a touching pair of
/// bands.
pub const GAP_MIN_WIDTH: f64 = 1e-8;

/// Default tolerance for the scalar gap diagnostic `d1`.
pub const D1_TOL: f64 = 1e-11;
