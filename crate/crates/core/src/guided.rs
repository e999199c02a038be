//! Waves guided along the strip defect: quasiperiodic along `e1`, decaying
//! away from the strip. Their frequencies are the zeros of
//!
//! ```text
//! det( I + omega^2 <Lp^-1>_2 M1 ) = 0
//! ```
//!
//! where `<.>_2` averages the inverse Bloch operator over `k2`. The
//! determinant is only meaningful off the propagating band at the given
//! `k1`; every entry point guards that precondition.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::lattice::LatticeSpec;
use crate::propagative::{self, ProjectionOptions};
use crate::quad::{self, MeanResult};
use crate::roots;
use crate::tolerances::{
    DET_AT_ROOT, QUAD_TOL, REALNESS_LIMIT, ROOT_XTOL, SCAN_POINTS, SPECTRUM_GUARD,
};

/// `(1/2pi) int Lp(omega, k1, k2)^-1 dk2` with its error estimate.
#[derive(Clone, Debug)]
pub struct AveragedResolvent {
    pub omega: f64,
    pub k1: f64,
    pub matrix: DMatrix<Complex64>,
    pub quad_error: f64,
    pub samples: usize,
}

impl AveragedResolvent {
    /// Largest deviation from Hermitian symmetry; bounded by `quad_error`
    /// for a converged average.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Determinant value plus the diagnostics root acceptance needs.
#[derive(Clone, Copy, Debug)]
pub struct Determinant {
    pub value: Complex64,
    /// `|Im| / (1 + |Re|)`; zero in exact arithmetic for sign-definite
    /// perturbations.
    pub realness: f64,
    pub quad_error: f64,
}

pub(crate) fn realness_of(z: Complex64) -> f64 {
    z.im.abs() / (1.0 + z.re.abs())
}

/// Band at fixed `k1`, tight enough to serve as the resolvent guard.
fn band_at_k1(spec: &LatticeSpec, k1: f64) -> Result<IntervalSet> {
    propagative::projection_k1(spec, k1, &ProjectionOptions::default())
}

fn guard_band(band: &IntervalSet, omega: f64, which: &'static str) -> Result<()> {
    let distance = band.distance(omega);
    if distance <= SPECTRUM_GUARD {
        return Err(Error::SpectrumViolation { omega, which, distance, guard: SPECTRUM_GUARD });
    }
    Ok(())
}

fn resolvent_with_band(
    spec: &LatticeSpec,
    band: &IntervalSet,
    omega: f64,
    k1: f64,
    tol: f64,
) -> Result<AveragedResolvent> {
    if omega < 0.0 || !omega.is_finite() {
        return Err(Error::Domain(format!("frequency must be finite and >= 0, got {omega}")));
    }
    guard_band(band, omega, "propagative")?;
    let mean: MeanResult<DMatrix<Complex64>> = quad::periodic_mean(
        |k2| {
            let ops = spec.assemble_bloch([k1, k2])?;
            ops.propagative_matrix(omega).try_inverse().ok_or_else(|| {
                Error::Singular(format!("inverting Lp at k=[{k1}, {k2}], omega={omega}"))
            })
        },
        tol,
        quad::MEAN_CAP,
    )?;
    Ok(AveragedResolvent {
        omega,
        k1,
        matrix: mean.value,
        quad_error: mean.est_error,
        samples: mean.samples,
    })
}

/// k2-average of the inverse Bloch operator at `(omega, k1)`.
pub fn averaged_resolvent_k2(
    spec: &LatticeSpec,
    omega: f64,
    k1: f64,
    tol: f64,
) -> Result<AveragedResolvent> {
    let band = band_at_k1(spec, k1)?;
    resolvent_with_band(spec, &band, omega, k1, tol)
}

/// Resolvent average without the per-k1 band check, for callers that have
/// already excluded `omega` from the full propagating spectrum (which
/// contains every fixed-k1 band).
pub(crate) fn resolvent_unguarded(
    spec: &LatticeSpec,
    omega: f64,
    k1: f64,
    tol: f64,
) -> Result<AveragedResolvent> {
    resolvent_with_band(spec, &IntervalSet::empty(), omega, k1, tol)
}

fn det_with_band(
    spec: &LatticeSpec,
    band: &IntervalSet,
    omega: f64,
    k1: f64,
    tol: f64,
) -> Result<Determinant> {
    let res = resolvent_with_band(spec, band, omega, k1, tol)?;
    let strip = spec.strip();
    let dim = spec.dim();
    let mut m = DMatrix::<Complex64>::identity(dim, dim);
    let w2 = omega * omega;
    for j in 0..dim {
        if strip[j] != 0.0 {
            let s = Complex64::new(w2 * strip[j], 0.0);
            for i in 0..dim {
                m[(i, j)] += res.matrix[(i, j)] * s;
            }
        }
    }
    let value = m.determinant();
    Ok(Determinant { value, realness: realness_of(value), quad_error: res.quad_error })
}

/// `det(I + omega^2 <Lp^-1>_2 M1)`. Real up to quadrature noise when the
/// strip perturbation is sign-definite; the `realness` field reports the
/// relative imaginary part either way.
pub fn guided_det(spec: &LatticeSpec, omega: f64, k1: f64, tol: f64) -> Result<Determinant> {
    let band = band_at_k1(spec, k1)?;
    det_with_band(spec, &band, omega, k1, tol)
}

/// Upper end of any possible guided frequency: the heaviest admissible cell
/// bounds the generalized eigenvalues by `8 / min effective mass`.
fn omega_cap(spec: &LatticeSpec) -> f64 {
    let m_min = spec
        .masses()
        .iter()
        .zip(spec.strip())
        .map(|(&m, &s)| m.min(m + s))
        .fold(f64::INFINITY, f64::min);
    (8.0 / m_min).sqrt() + 1.0
}

/// Default search region at fixed `k1`: the complement of the propagating
/// band within `[0, omega_cap]`, shrunk away from each edge by 1e-4 of the
/// local gap width. The margin keeps the resolvent quadrature affordable;
/// only roots hugging an edge closer than that are missed.
pub fn default_search(spec: &LatticeSpec, k1: f64) -> Result<IntervalSet> {
    let band = band_at_k1(spec, k1)?;
    Ok(search_from_band(spec, &band))
}

fn search_from_band(spec: &LatticeSpec, band: &IntervalSet) -> IntervalSet {
    search_with_margin(spec, band, 1e-4)
}

/// Search region with a custom relative edge margin. Projection sweeps pass
/// a wider margin than the standalone default: quadrature cost grows as the
/// inverse square root of the distance to a band edge, and a branch the
/// margin cuts off is recovered by the band-edge extension in the envelope
/// assembly, so sweeps lose nothing by standing further back.
fn search_with_margin(spec: &LatticeSpec, band: &IntervalSet, rel: f64) -> IntervalSet {
    let cap = omega_cap(spec);
    let gaps = band.complement_within(0.0, cap, 0.0);
    let mut out = Vec::new();
    for gap in gaps.intervals() {
        let m = (gap.width() * rel).max(SPECTRUM_GUARD);
        let (lo, hi) = (gap.lo + m, gap.hi - m);
        if lo < hi {
            out.push(Interval::new(lo, hi));
        }
    }
    IntervalSet::from_intervals(out)
}

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    pub scan_points: usize,
    pub xtol: f64,
    pub quad_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { scan_points: SCAN_POINTS, xtol: ROOT_XTOL, quad_tol: QUAD_TOL }
    }
}

/// All guided roots at fixed `k1` inside `search`, which must stay clear of
/// the propagating band. Scans the real part of the determinant for sign
/// changes, bisects each bracket, then polishes and gates the root on its
/// realness residual and determinant modulus.
pub fn guided_spectrum(
    spec: &LatticeSpec,
    k1: f64,
    search: &IntervalSet,
    opts: &RootOptions,
) -> Result<Vec<f64>> {
    let band = band_at_k1(spec, k1)?;
    spectrum_with_band(spec, &band, k1, search, opts)
}

fn spectrum_with_band(
    spec: &LatticeSpec,
    band: &IntervalSet,
    k1: f64,
    search: &IntervalSet,
    opts: &RootOptions,
) -> Result<Vec<f64>> {
    for iv in search.intervals() {
        let clear = band.distance(iv.lo) > SPECTRUM_GUARD / 2.0
            && band.distance(iv.hi) > SPECTRUM_GUARD / 2.0
            && !band.intervals().iter().any(|b| iv.lo < b.lo && b.lo < iv.hi);
        if !clear {
            return Err(Error::Domain(format!(
                "search interval [{}, {}] overlaps the propagating band at k1={k1}",
                iv.lo, iv.hi
            )));
        }
    }
    if !spec.has_strip() {
        return Ok(Vec::new()); // det is identically 1
    }
    let f = |omega: f64| det_with_band(spec, band, omega, k1, opts.quad_tol).map(|d| d.value.re);
    let mut out = Vec::new();
    for iv in search.intervals() {
        let raw = roots::scan_roots(&f, iv.lo, iv.hi, opts.scan_points, opts.xtol)?;
        for r in raw {
            if let Some(root) = certify_root(spec, band, r, k1, iv, opts)? {
                out.push(root);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * opts.xtol);
    Ok(out)
}

/// Secant polish plus the two acceptance gates. Returns `None` for scan
/// artifacts (complex residual too large), an error if a genuine root
/// refuses to satisfy the determinant bound.
fn certify_root(
    spec: &LatticeSpec,
    band: &IntervalSet,
    mut omega: f64,
    k1: f64,
    iv: &Interval,
    opts: &RootOptions,
) -> Result<Option<f64>> {
    let mut det = det_with_band(spec, band, omega, k1, opts.quad_tol)?;
    if det.realness > REALNESS_LIMIT {
        return Ok(None);
    }
    for _ in 0..4 {
        if det.value.re.abs() <= DET_AT_ROOT / 100.0 {
            break;
        }
        let h = (opts.xtol * 0.5).max(omega.abs() * 1e-13);
        let lo = det_with_band(spec, band, omega - h, k1, opts.quad_tol)?;
        let hi = det_with_band(spec, band, omega + h, k1, opts.quad_tol)?;
        let slope = (hi.value.re - lo.value.re) / (2.0 * h);
        if slope == 0.0 {
            break;
        }
        let next = (omega - det.value.re / slope).clamp(iv.lo, iv.hi);
        let next_det = det_with_band(spec, band, next, k1, opts.quad_tol)?;
        if next_det.value.re.abs() >= det.value.re.abs() {
            break;
        }
        omega = next;
        det = next_det;
    }
    if det.value.norm() > DET_AT_ROOT {
        return Err(Error::NonConvergence {
            what: "guided root polish",
            achieved: det.value.norm(),
            target: DET_AT_ROOT,
            detail: format!("root near omega={omega}, k1={k1}"),
        });
    }
    Ok(Some(omega))
}

/// Closed-form guided frequency of the single-mass lattice with strip ratio
/// `m1`. Solves the scalar dispersion equation exactly:
/// `omega_g^2 = (2 cos k1 - 4 -+ 2 sqrt(m1^2 (cos k1 - 2)^2 - m1^2 + 1)) / (m1^2 - 1)`
/// with the `-` branch for `-1 < m1 < 0` and `+` for `m1 > 0`. At `m1 = 0`
/// the curve collapses onto the lower band edge; at `m1 = 1` the quadratic
/// degenerates and the limit is returned.
pub fn guided_closed_form(m1: f64, k1: f64) -> Result<f64> {
    if m1 <= -1.0 {
        return Err(Error::Domain(format!("strip mass ratio must exceed -1, got {m1}")));
    }
    let c = k1.cos();
    if m1 == 0.0 {
        return Ok((2.0 - 2.0 * c).sqrt());
    }
    if m1 == 1.0 {
        let a = 2.0 * c - 4.0;
        return Ok(((a * a - 4.0) / (2.0 * a.abs())).sqrt());
    }
    let disc = m1 * m1 * (c - 2.0) * (c - 2.0) - m1 * m1 + 1.0; // >= 1 since (c-2)^2 >= 1
    let sign = if m1 < 0.0 { -1.0 } else { 1.0 };
    let w2 = (2.0 * c - 4.0 + sign * 2.0 * disc.sqrt()) / (m1 * m1 - 1.0);
    Ok(w2.max(0.0).sqrt())
}

/// Scalar averaged resolvent of the defect-free lattice:
/// `sign(a) / sqrt(a^2 - 4)` with `a = omega^2 - 4 + 2 cos k1`; negative
/// below the band, positive above it.
pub fn uniform_averaged_resolvent(omega: f64, k1: f64) -> Result<f64> {
    let a = omega * omega - 4.0 + 2.0 * k1.cos();
    if a.abs() <= 2.0 {
        return Err(Error::Domain(format!(
            "omega={omega} lies inside the propagating band at k1={k1}"
        )));
    }
    Ok(a.signum() / (a * a - 4.0).sqrt())
}

/// Closed-form guided frequency range for the single-mass lattice. The
/// guided curve is monotone in `k1` on `[0, pi]`, so the range is spanned by
/// its endpoint values; empty without a strip.
pub fn i_g_closed_form(m1: f64) -> Result<IntervalSet> {
    if m1 <= -1.0 {
        return Err(Error::Domain(format!("strip mass ratio must exceed -1, got {m1}")));
    }
    if m1 == 0.0 {
        return Ok(IntervalSet::empty());
    }
    let lo = guided_closed_form(m1, 0.0)?;
    let hi = guided_closed_form(m1, PI)?;
    Ok(IntervalSet::singleton(lo, hi))
}

/// Guided frequencies over all `k1`, as a merged interval set.
///
/// The guided set is even in `k1` for every lattice (the full `k2` average
/// turns `k1 -> -k1` into complex conjugation), so only `[0, pi]` is swept.
/// Roots on consecutive grid lines are grouped into branches run by run;
/// each branch contributes its min/max. A branch that terminates because
/// its surrounding gap pinches off is extended to the pinch frequency, so
/// projections that close onto a band edge converge at full precision.
pub fn guided_projection(spec: &LatticeSpec, opts: &ProjectionOptions) -> Result<IntervalSet> {
    if !spec.has_strip() {
        return Ok(IntervalSet::empty());
    }
    // Coarser per-line scan than the standalone default: the count doubling
    // inside scan_roots and the sweep-level grid doubling both re-check for
    // missed roots, and the sweep visits hundreds of lines.
    let root_opts = RootOptions { scan_points: 32, ..RootOptions::default() };
    let sample = |k1: f64| -> Result<(IntervalSet, Vec<f64>)> {
        let band = band_at_k1(spec, k1)?;
        let search = search_with_margin(spec, &band, SWEEP_MARGIN_REL);
        let roots = spectrum_with_band(spec, &band, k1, &search, &root_opts)?;
        Ok((band, roots))
    };
    let mut n = opts.initial_grid.max(8);
    let mut prev: Option<IntervalSet> = None;
    loop {
        let xs: Vec<f64> = (0..=n).map(|j| PI * j as f64 / n as f64).collect();
        let samples = crate::par::try_map(&xs, |&k1| sample(k1))?;
        let cur = assemble_projection(&samples);
        if let Some(p) = prev {
            let moved = p.endpoint_distance(&cur);
            if moved <= opts.tol {
                return Ok(cur);
            }
            if n >= opts.max_grid {
                return Err(Error::NonConvergence {
                    what: "guided projection",
                    achieved: moved,
                    target: opts.tol,
                    detail: format!("{n} k1 cells"),
                });
            }
        }
        prev = Some(cur);
        n *= 2;
    }
}

/// Relative edge margin for projection sweep lines; see `search_with_margin`.
const SWEEP_MARGIN_REL: f64 = 1e-3;

/// A boundary root at most this far (relative to its size) from its own
/// line's band edge is treated as riding the edge rather than terminating.
/// Must stay comfortably above `SWEEP_MARGIN_REL`: a root cut off at the
/// next grid line sits within a few margins of the edge at the boundary
/// line. Firing spuriously is harmless for the envelope (the chained edge
/// values lie inside the propagating spectrum); failing to fire leaves the
/// envelope endpoint pinned to the grid, which blocks convergence.
const EDGE_HUG_REL: f64 = 3e-2;

/// Builds branch envelopes from per-k1 root lists. Within a run of grid
/// lines carrying equal root counts, the b-th sorted roots form one branch.
/// At a run boundary each branch is extended toward the adjacent grid line:
/// if the nearest band edge there sits within a few branch steps, the branch
/// is treated as closing onto the band and that edge enters its envelope.
///
/// A branch whose boundary root already rides its own line's band edge gets
/// a stronger extension: its root hugs the edge closer than the search
/// margin, so past the boundary it is invisible to the scan rather than
/// gone. The envelope then follows the chained band edge across the whole
/// adjacent stretch of lines missing the branch. The unseen remainder sits
/// within a margin of the edge curve, and the edge curve's range lies inside
/// the propagating spectrum, so this extension never adds a frequency the
/// combined spectrum does not already contain, while making the envelope
/// independent of where exactly the margin cuts the branch off.
fn assemble_projection(samples: &[(IntervalSet, Vec<f64>)]) -> IntervalSet {
    let mut pieces: Vec<Interval> = Vec::new();
    let mut run_start = 0;
    while run_start < samples.len() {
        let count = samples[run_start].1.len();
        let mut run_end = run_start;
        while run_end + 1 < samples.len() && samples[run_end + 1].1.len() == count {
            run_end += 1;
        }
        if count > 0 {
            for b in 0..count {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for s in &samples[run_start..=run_end] {
                    lo = lo.min(s.1[b]);
                    hi = hi.max(s.1[b]);
                }
                let step_at = |j: usize, other: usize| {
                    if run_end > run_start {
                        (samples[j].1[b] - samples[other].1[b]).abs()
                    } else {
                        1.0
                    }
                };
                for (edge_of, boundary, endpoint, step) in [
                    (
                        run_start.checked_sub(1),
                        run_start,
                        samples[run_start].1[b],
                        step_at(run_start, (run_start + 1).min(run_end)),
                    ),
                    (
                        if run_end + 1 < samples.len() { Some(run_end + 1) } else { None },
                        run_end,
                        samples[run_end].1[b],
                        step_at(run_end, run_end.saturating_sub(1).max(run_start)),
                    ),
                ] {
                    let Some(j) = edge_of else { continue };
                    let hugging = samples[j].1.len() < count
                        && nearest_band_edge(&samples[boundary].0, endpoint).is_some_and(|e| {
                            (e - endpoint).abs() <= EDGE_HUG_REL * endpoint.abs().max(1.0)
                        });
                    if hugging {
                        let dir: isize = if j < run_start { -1 } else { 1 };
                        let mut cur = endpoint;
                        let mut idx = j as isize;
                        while idx >= 0
                            && (idx as usize) < samples.len()
                            && samples[idx as usize].1.len() < count
                        {
                            let Some(e) = nearest_band_edge(&samples[idx as usize].0, cur) else {
                                break;
                            };
                            cur = e;
                            lo = lo.min(cur);
                            hi = hi.max(cur);
                            idx += dir;
                        }
                    } else if let Some(e) = nearest_band_edge(&samples[j].0, endpoint) {
                        if (e - endpoint).abs() <= 10.0 * step.min(1.0) {
                            lo = lo.min(e);
                            hi = hi.max(e);
                        }
                    }
                }
                pieces.push(Interval::new(lo, hi));
            }
        }
        run_start = run_end + 1;
    }
    IntervalSet::from_intervals(pieces)
}

fn nearest_band_edge(band: &IntervalSet, omega: f64) -> Option<f64> {
    band.intervals()
        .iter()
        .flat_map(|iv| [iv.lo, iv.hi])
        .min_by(|a, b| (a - omega).abs().total_cmp(&(b - omega).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn resolvent_scalar_reference_points() {
        let spec = LatticeSpec::square(1, 1);
        let r = averaged_resolvent_k2(&spec, 0.0, PI, 1e-12).unwrap();
        assert_relative_eq!(r.matrix[(0, 0)].re, -1.0 / 32f64.sqrt(), epsilon = 1e-10);
        assert!(r.matrix[(0, 0)].im.abs() < 1e-12);

        let r = averaged_resolvent_k2(&spec, 10f64.sqrt(), 0.0, 1e-12).unwrap();
        assert_relative_eq!(r.matrix[(0, 0)].re, 1.0 / 60f64.sqrt(), epsilon = 1e-10);

        let r = averaged_resolvent_k2(&spec, 3.0, PI / 2.0, 1e-12).unwrap();
        assert_relative_eq!(
            r.matrix[(0, 0)].re,
            uniform_averaged_resolvent(3.0, PI / 2.0).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn resolvent_rejects_band_frequencies() {
        let spec = LatticeSpec::square(1, 1);
        // band at k1=pi is [2, 2 sqrt 2]
        let r = averaged_resolvent_k2(&spec, 2.2, PI, 1e-10);
        assert!(matches!(r, Err(Error::SpectrumViolation { .. })));
        assert!(uniform_averaged_resolvent(2.2, PI).is_err());
    }

    #[test]
    fn resolvent_sign_split() {
        let spec = LatticeSpec::square(1, 1);
        // below the band: strictly negative; above: strictly positive
        let below = averaged_resolvent_k2(&spec, 0.7, PI, 1e-10).unwrap();
        assert!(below.matrix[(0, 0)].re < 0.0);
        let above = averaged_resolvent_k2(&spec, 3.1, PI, 1e-10).unwrap();
        assert!(above.matrix[(0, 0)].re > 0.0);
    }

    #[test]
    fn resolvent_is_hermitian_on_supercells() {
        let spec = LatticeSpec::square(2, 2);
        let r = averaged_resolvent_k2(&spec, 3.2, 0.8, 1e-10).unwrap();
        assert!(r.hermitian_defect() <= r.quad_error.max(1e-12));
    }

    #[test]
    fn det_without_strip_is_one() {
        let spec = LatticeSpec::square(1, 1);
        let d = guided_det(&spec, 3.0, 0.4, 1e-10).unwrap();
        assert_eq!(d.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn closed_form_branches() {
        // m1 = 2, k1 = pi: omega^2 = (-6 + 2 sqrt 33) / 3
        let w = guided_closed_form(2.0, PI).unwrap();
        assert_relative_eq!(w * w, (-6.0 + 2.0 * 33f64.sqrt()) / 3.0, epsilon = 1e-14);
        // m1 = -0.9, k1 = 0: omega^2 = 4 / 0.19
        let w = guided_closed_form(-0.9, 0.0).unwrap();
        assert_relative_eq!(w * w, 4.0 / 0.19, epsilon = 1e-12);
        // m1 -> 0 collapses onto the lower band edge
        assert_relative_eq!(guided_closed_form(0.0, PI).unwrap(), 2.0, epsilon = 1e-15);
        // m1 = 1 degenerate limit at k1 = pi: omega^2 = 8/3
        let w = guided_closed_form(1.0, PI).unwrap();
        assert_relative_eq!(w * w, 8.0 / 3.0, epsilon = 1e-14);
        assert!(guided_closed_form(-1.0, 0.0).is_err());
    }

    #[test]
    fn spectrum_matches_closed_form_at_samples() {
        for &(m1, k1) in &[(2.0, PI), (-0.5, 0.0), (-0.9, 1.1), (0.5, 2.0)] {
            let spec = LatticeSpec::uniform_with_defects(m1, 0.0).unwrap();
            let search = default_search(&spec, k1).unwrap();
            let roots = guided_spectrum(&spec, k1, &search, &RootOptions::default()).unwrap();
            assert_eq!(roots.len(), 1, "m1={m1}, k1={k1}: {roots:?}");
            assert_relative_eq!(roots[0], guided_closed_form(m1, k1).unwrap(), epsilon = 1e-8);
        }
    }

    #[test]
    fn no_strip_means_no_roots() {
        let spec = LatticeSpec::square(1, 1);
        let search = default_search(&spec, 1.3).unwrap();
        let roots = guided_spectrum(&spec, 1.3, &search, &RootOptions::default()).unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn search_overlapping_band_is_rejected() {
        let spec = LatticeSpec::uniform_with_defects(-0.9, 0.0).unwrap();
        let bad = IntervalSet::singleton(0.5, 4.0); // crosses the band at k1=pi
        let r = guided_spectrum(&spec, PI, &bad, &RootOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn projection_negative_m1() {
        let spec = LatticeSpec::uniform_with_defects(-0.9, 0.0).unwrap();
        let opts = ProjectionOptions { initial_grid: 32, ..Default::default() };
        let p = guided_projection(&spec, &opts).unwrap();
        let want = i_g_closed_form(-0.9).unwrap();
        assert_eq!(p.intervals().len(), 1);
        assert_relative_eq!(p.intervals()[0].lo, want.intervals()[0].lo, epsilon = 1e-8);
        assert_relative_eq!(p.intervals()[0].hi, want.intervals()[0].hi, epsilon = 1e-8);
    }

    #[test]
    fn projection_positive_m1_reaches_zero() {
        let spec = LatticeSpec::uniform_with_defects(2.0, 0.0).unwrap();
        let opts = ProjectionOptions { initial_grid: 32, ..Default::default() };
        let p = guided_projection(&spec, &opts).unwrap();
        let want = i_g_closed_form(2.0).unwrap();
        assert_eq!(p.intervals().len(), 1);
        assert_relative_eq!(p.intervals()[0].lo, 0.0, epsilon = 1e-8);
        assert_relative_eq!(p.intervals()[0].hi, want.intervals()[0].hi, epsilon = 1e-8);
    }

    #[test]
    fn projection_without_strip_is_empty() {
        let spec = LatticeSpec::square(1, 1);
        assert!(guided_projection(&spec, &ProjectionOptions::default()).unwrap().is_empty());
    }
}
