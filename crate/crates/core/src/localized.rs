//! Point-defect spectra.
//!
//! Off both continuous spectra the defect problem closes into a finite
//! determinant condition: `d_loc(omega) = det(I + omega^2 K(omega) M2)`,
//! where `K` is the k1-average of `Lg^-1 <Lp^-1>_2` and `M2` the point
//! layer. Roots of `d_loc` inside spectral gaps are the trapped
//! frequencies. This module computes the kernel, the determinant, the gap
//! bookkeeping, the root isolation, and the closed-form existence
//! classification for the single-node cell.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::guided::{self, Determinant};
use crate::interval::{Interval, IntervalSet};
use crate::lattice::LatticeSpec;
use crate::propagative::{self, ProjectionOptions};
use crate::quad;
use crate::roots;
use crate::tolerances::{
    DET_AT_ROOT, GAP_MIN_WIDTH, QUAD_TOL, REALNESS_LIMIT, ROOT_XTOL, SCAN_POINTS, SPECTRUM_GUARD,
};

/// Extrapolation target for the band-edge diagnostic.
const D1_EDGE_TOL: f64 = 1e-11;

/// The tail scan stops expanding once the determinant sits this close to
/// its large-frequency limit.
const ASYMPTOTE_TOL: f64 = 1e-6;

/// Quadrature tolerance for determinant evaluations that only feed sign
/// decisions (scans, bisection, margin samples). Sign errors are confined
/// to a neighborhood of the root no wider than this tolerance divided by
/// the determinant's slope, and certification repolishes at full precision.
const SCAN_QUAD_TOL: f64 = 1e-7;

/// Both continuous spectra of a lattice and the gaps between them, within
/// the bracket `[0, omega_max]`.
#[derive(Clone, Debug, Serialize)]
pub struct GapStructure {
    pub i_p: IntervalSet,
    pub i_g: IntervalSet,
    /// Complement of the union of `i_p` and `i_g` within `[0, omega_max]`,
    /// with components narrower than the gap resolution dropped.
    pub gaps: IntervalSet,
    /// Index into `gaps` of the component reaching `omega_max`: the gap
    /// extending to arbitrarily high frequency. Its upper end is the
    /// bracket, not a spectral edge. `None` when `omega_max` cuts a band.
    pub tail: Option<usize>,
    pub omega_max: f64,
}

impl GapStructure {
    fn from_sets(i_p: IntervalSet, i_g: IntervalSet, omega_max: f64) -> GapStructure {
        let union = i_p.union(&i_g);
        let gaps = union.complement_within(0.0, omega_max, GAP_MIN_WIDTH);
        let tail = match gaps.intervals().last() {
            Some(iv) if iv.hi >= omega_max => Some(gaps.intervals().len() - 1),
            _ => None,
        };
        GapStructure { i_p, i_g, gaps, tail, omega_max }
    }
}

/// Projects both spectra and takes the complement within `[0, omega_max]`.
pub fn gap_structure(spec: &LatticeSpec, omega_max: f64) -> Result<GapStructure> {
    if !(omega_max > 0.0) || !omega_max.is_finite() {
        return Err(Error::Domain(format!(
            "omega_max must be finite and positive, got {omega_max}"
        )));
    }
    let opts = ProjectionOptions::default();
    let i_p = propagative::projection_full(spec, &opts)?;
    let i_g = guided::guided_projection(spec, &opts)?;
    Ok(GapStructure::from_sets(i_p, i_g, omega_max))
}

/// Strict upper bound on every frequency the lattice can carry, localized
/// modes included: the hopping part has eigenvalues in `[0, 8]` and each of
/// the three mass layers is bounded below by its lightest node.
pub fn frequency_bound(spec: &LatticeSpec) -> f64 {
    let mut m_min = f64::INFINITY;
    for i in 0..spec.dim() {
        let m = spec.masses()[i];
        let s = m + spec.strip()[i];
        let p = s + spec.point()[i];
        m_min = m_min.min(m).min(s).min(p);
    }
    (8.0 / m_min).sqrt() + 1.0
}

/// Large-frequency limit of the determinant: the hopping term washes out
/// and `d_loc -> prod(1 + p / (m + s))` over the cell. Positive for every
/// admissible mass assignment.
pub fn d_loc_asymptote(spec: &LatticeSpec) -> f64 {
    spec.masses()
        .iter()
        .zip(spec.strip())
        .zip(spec.point())
        .map(|((&m, &s), &p)| 1.0 + p / (m + s))
        .product()
}

/// Doubly averaged resolvent kernel `<Lg^-1 <Lp^-1>_2>_1` at one frequency.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub omega: f64,
    pub matrix: DMatrix<Complex64>,
    pub outer_error: f64,
    /// Worst inner (k2) average error across the outer samples.
    pub inner_error: f64,
    /// Outer sample count.
    pub samples: usize,
}

fn atomic_max(slot: &AtomicU64, v: f64) {
    let mut cur = slot.load(Ordering::Relaxed);
    while f64::from_bits(cur) < v {
        match slot.compare_exchange_weak(cur, v.to_bits(), Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => break,
            Err(now) => cur = now,
        }
    }
}

fn guard_spectra(gs: &GapStructure, omega: f64) -> Result<()> {
    if omega < 0.0 || !omega.is_finite() {
        return Err(Error::Domain(format!("frequency must be finite and >= 0, got {omega}")));
    }
    for (set, which) in [(&gs.i_p, "propagative"), (&gs.i_g, "guided")] {
        if set.is_empty() {
            continue;
        }
        let distance = set.distance(omega);
        if distance <= SPECTRUM_GUARD {
            return Err(Error::SpectrumViolation { omega, which, distance, guard: SPECTRUM_GUARD });
        }
    }
    Ok(())
}

/// The inner average needs no per-k1 band check here: callers hold a guard
/// against the full propagating spectrum, which contains every fixed-k1
/// band, and against the guided spectrum, which contains every zero of Lg.
fn kernel_unguarded(spec: &LatticeSpec, omega: f64, tol: f64) -> Result<Kernel> {
    // Split so both quadrature layers contribute comparably: inner errors
    // pass linearly through the outer average.
    let outer_tol = tol / 10f64.sqrt();
    let inner_tol = tol / 10.0;
    let dim = spec.dim();
    let strip = spec.strip();
    let w2 = omega * omega;
    let worst_inner = AtomicU64::new(0);
    let mean = quad::periodic_mean(
        |k1| {
            let res = guided::resolvent_unguarded(spec, omega, k1, inner_tol)?;
            atomic_max(&worst_inner, res.quad_error);
            let mut lg = DMatrix::<Complex64>::identity(dim, dim);
            for j in 0..dim {
                if strip[j] != 0.0 {
                    let s = Complex64::new(w2 * strip[j], 0.0);
                    for i in 0..dim {
                        lg[(i, j)] += res.matrix[(i, j)] * s;
                    }
                }
            }
            let lg_inv = lg.try_inverse().ok_or_else(|| {
                Error::Singular(format!("inverting Lg at k1={k1}, omega={omega}"))
            })?;
            Ok(lg_inv * &res.matrix)
        },
        outer_tol,
        quad::MEAN_CAP,
    )?;
    Ok(Kernel {
        omega,
        matrix: mean.value,
        outer_error: mean.est_error,
        inner_error: f64::from_bits(worst_inner.load(Ordering::Relaxed)),
        samples: mean.samples,
    })
}

fn determinant_from_kernel(spec: &LatticeSpec, kernel: &Kernel) -> Determinant {
    let point = spec.point();
    let dim = spec.dim();
    let w2 = kernel.omega * kernel.omega;
    let mut m = DMatrix::<Complex64>::identity(dim, dim);
    for j in 0..dim {
        if point[j] != 0.0 {
            let s = Complex64::new(w2 * point[j], 0.0);
            for i in 0..dim {
                m[(i, j)] += kernel.matrix[(i, j)] * s;
            }
        }
    }
    let value = m.determinant();
    Determinant { value, realness: guided::realness_of(value), quad_error: kernel.outer_error }
}

/// One localized frequency with its certification diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalizedRoot {
    pub omega: f64,
    /// Index into `GapStructure::gaps`.
    pub gap: usize,
    pub in_tail: bool,
    pub det_abs: f64,
    pub realness: f64,
}

/// Root scan outcome. Sign changes whose determinant fails the realness
/// gate land in `ambiguous` instead of being silently dropped; the scalar
/// theory guarantees real determinants, but multi-node cells with
/// mixed-sign defects can produce genuinely complex ones.
#[derive(Clone, Debug, Default, Serialize)]
pub struct LocalizedModes {
    pub roots: Vec<LocalizedRoot>,
    pub ambiguous: Vec<f64>,
}

/// Solver context for one lattice: the gap structure is computed once and
/// reused by every determinant evaluation and root scan.
pub struct LocalizedProblem {
    spec: LatticeSpec,
    gaps: GapStructure,
}

impl LocalizedProblem {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        let omega_max = frequency_bound(&spec);
        let gaps = gap_structure(&spec, omega_max)?;
        Ok(LocalizedProblem { spec, gaps })
    }

    /// Same cell with a different point layer, reusing the band
    /// projections: neither continuous spectrum reads the point masses.
    pub fn with_point(&self, point: Vec<f64>) -> Result<Self> {
        let spec = self.spec.clone().with_point(point)?;
        let omega_max = frequency_bound(&spec).max(self.gaps.omega_max);
        let gaps = GapStructure::from_sets(self.gaps.i_p.clone(), self.gaps.i_g.clone(), omega_max);
        Ok(LocalizedProblem { spec, gaps })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn gaps(&self) -> &GapStructure {
        &self.gaps
    }

    pub fn asymptote(&self) -> f64 {
        d_loc_asymptote(&self.spec)
    }

    pub fn kernel(&self, omega: f64, tol: f64) -> Result<Kernel> {
        guard_spectra(&self.gaps, omega)?;
        kernel_unguarded(&self.spec, omega, tol)
    }

    pub fn d_loc(&self, omega: f64) -> Result<Determinant> {
        self.d_loc_with_tol(omega, QUAD_TOL)
    }

    pub fn d_loc_with_tol(&self, omega: f64, tol: f64) -> Result<Determinant> {
        if !self.spec.has_point() {
            guard_spectra(&self.gaps, omega)?;
            return Ok(Determinant {
                value: Complex64::new(1.0, 0.0),
                realness: 0.0,
                quad_error: 0.0,
            });
        }
        let kernel = self.kernel(omega, tol)?;
        Ok(determinant_from_kernel(&self.spec, &kernel))
    }

    /// All localized frequencies, gap by gap. Single-node cells use the
    /// monotonicity of the scalar determinant on each gap (endpoint signs
    /// plus one bisection); larger cells get an exhaustive sign scan, with
    /// the unbounded gap scanned on a log-spaced grid up to the point where
    /// the determinant settles onto its limit. Scans keep a margin of 1e-4
    /// of the gap width from each edge; for single-node cells a root inside
    /// the margin of a guided edge is still caught through the known sign
    /// of the divergence there.
    pub fn modes(&self) -> Result<LocalizedModes> {
        let mut out = LocalizedModes::default();
        if !self.spec.has_point() {
            return Ok(out); // determinant is identically 1
        }
        for (gi, gap) in self.gaps.gaps.intervals().iter().enumerate() {
            let in_tail = Some(gi) == self.gaps.tail;
            if self.spec.dim() == 1 {
                self.scan_scalar(gi, gap, in_tail, &mut out)?;
            } else {
                self.scan_general(gi, gap, in_tail, &mut out)?;
            }
        }
        out.roots.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        out.roots.dedup_by(|a, b| (a.omega - b.omega).abs() <= 10.0 * ROOT_XTOL);
        Ok(out)
    }

    fn edge_is_guided(&self, e: f64) -> bool {
        self.gaps.i_g.distance(e) <= 1e-6 && self.gaps.i_p.distance(e) > 1e-6
    }

    /// Determinant at scan precision: root scans and margin samples only
    /// need a trustworthy sign, so they run a few digits looser than the
    /// final certification, which repolishes at full precision.
    fn d_scan(&self, omega: f64) -> Result<Determinant> {
        self.d_loc_with_tol(omega, SCAN_QUAD_TOL)
    }

    /// Far endpoint for the tail scan: expands geometrically until the
    /// determinant settles onto its limit, capped by the hard frequency
    /// bound past which no root can exist.
    fn tail_far_point(&self, gap: &Interval) -> Result<(f64, Determinant)> {
        let asym = self.asymptote();
        let mut b = (gap.lo * 1.5).max(gap.lo + 1.0);
        loop {
            b = b.min(self.gaps.omega_max);
            let d = self.d_scan(b)?;
            if (d.value.re - asym).abs() < ASYMPTOTE_TOL || b >= self.gaps.omega_max {
                return Ok((b, d));
            }
            b *= 2.0;
        }
    }

    fn scan_scalar(
        &self,
        gi: usize,
        gap: &Interval,
        in_tail: bool,
        out: &mut LocalizedModes,
    ) -> Result<()> {
        let m2 = self.spec.point()[0];
        let delta = (gap.width().min(1.0) * 1e-4).max(10.0 * SPECTRUM_GUARD);
        let a_pt = gap.lo + delta;
        let (b_pt, db) = if in_tail {
            self.tail_far_point(gap)?
        } else {
            let b = gap.hi - delta;
            (b, self.d_scan(b)?)
        };
        if a_pt >= b_pt {
            return Ok(());
        }
        let da = self.d_scan(a_pt)?;
        let mut brackets: Vec<(f64, f64, f64)> = Vec::new();
        if da.value.re == 0.0 || (da.value.re > 0.0) != (db.value.re > 0.0) {
            brackets.push((a_pt, b_pt, da.value.re));
        }
        // The determinant diverges at guided-type edges, with the sign
        // fixed by which side of the guided interval the gap sits on. A
        // margin sample disagreeing with that sign means a root hides
        // between the edge and the sample.
        let mut hug = |edge: f64, pt: f64, f_pt: f64, edge_is_lo: bool| -> Result<()> {
            let lim_positive = if edge_is_lo { m2 > 0.0 } else { m2 < 0.0 };
            if f_pt == 0.0 || lim_positive == (f_pt > 0.0) {
                return Ok(());
            }
            let tight = edge + if edge_is_lo { delta * 1e-3 } else { -(delta * 1e-3) };
            let dt = self.d_scan(tight)?;
            if (dt.value.re > 0.0) == (f_pt > 0.0) {
                return Err(Error::NonConvergence {
                    what: "localized root isolation",
                    achieved: (pt - edge).abs(),
                    target: delta * 1e-3,
                    detail: format!(
                        "a sign change hugs the gap edge at omega={edge} inside the scan margin"
                    ),
                });
            }
            if edge_is_lo {
                brackets.push((tight, pt, dt.value.re));
            } else {
                brackets.push((pt, tight, f_pt));
            }
            Ok(())
        };
        if self.edge_is_guided(gap.lo) {
            hug(gap.lo, a_pt, da.value.re, true)?;
        }
        if !in_tail && self.edge_is_guided(gap.hi) {
            hug(gap.hi, b_pt, db.value.re, false)?;
        }
        let f = |w: f64| self.d_scan(w).map(|d| d.value.re);
        for (lo, hi, flo) in brackets {
            let r = roots::bisect(&f, lo, hi, flo, ROOT_XTOL)?;
            match self.certify(r, (lo, hi), gi, in_tail)? {
                Some(root) => out.roots.push(root),
                None => out.ambiguous.push(r),
            }
        }
        Ok(())
    }

    fn scan_general(
        &self,
        gi: usize,
        gap: &Interval,
        in_tail: bool,
        out: &mut LocalizedModes,
    ) -> Result<()> {
        let delta = (gap.width().min(1.0) * 1e-4).max(10.0 * SPECTRUM_GUARD);
        let lo = gap.lo + delta;
        let (found, clamp_hi) = if in_tail {
            let (b_pt, _) = self.tail_far_point(gap)?;
            if lo >= b_pt {
                return Ok(());
            }
            // log-spaced: uniform scan in log-frequency, so the far field
            // is covered without drowning the near-edge region
            let g = |t: f64| self.d_scan(lo * t.exp()).map(|d| d.value.re);
            let t_max = (b_pt / lo).ln();
            let ts = roots::scan_roots(&g, 0.0, t_max, SCAN_POINTS, ROOT_XTOL / b_pt)?;
            (ts.into_iter().map(|t| lo * t.exp()).collect::<Vec<_>>(), b_pt)
        } else {
            let hi = gap.hi - delta;
            if lo >= hi {
                return Ok(());
            }
            let f = |w: f64| self.d_scan(w).map(|d| d.value.re);
            (roots::scan_roots(&f, lo, hi, SCAN_POINTS, ROOT_XTOL)?, hi)
        };
        for r in found {
            match self.certify(r, (lo, clamp_hi), gi, in_tail)? {
                Some(root) => out.roots.push(root),
                None => out.ambiguous.push(r),
            }
        }
        Ok(())
    }

    /// Secant polish plus the two acceptance gates, mirroring the guided
    /// root certification.
    fn certify(
        &self,
        mut omega: f64,
        clamp: (f64, f64),
        gap: usize,
        in_tail: bool,
    ) -> Result<Option<LocalizedRoot>> {
        let mut det = self.d_loc(omega)?;
        if det.realness > REALNESS_LIMIT {
            return Ok(None);
        }
        for _ in 0..4 {
            if det.value.re.abs() <= DET_AT_ROOT / 100.0 {
                break;
            }
            let h = (ROOT_XTOL * 0.5).max(omega.abs() * 1e-13);
            let lo = self.d_loc(omega - h)?;
            let hi = self.d_loc(omega + h)?;
            let slope = (hi.value.re - lo.value.re) / (2.0 * h);
            if slope == 0.0 {
                break;
            }
            let next = (omega - det.value.re / slope).clamp(clamp.0, clamp.1);
            let next_det = self.d_loc(next)?;
            if next_det.value.re.abs() >= det.value.re.abs() {
                break;
            }
            omega = next;
            det = next_det;
        }
        if det.value.norm() > DET_AT_ROOT {
            return Err(Error::NonConvergence {
                what: "localized root polish",
                achieved: det.value.norm(),
                target: DET_AT_ROOT,
                detail: format!("root near omega={omega}"),
            });
        }
        Ok(Some(LocalizedRoot {
            omega,
            gap,
            in_tail,
            det_abs: det.value.norm(),
            realness: det.realness,
        }))
    }
}

/// One-shot kernel; builds the gap structure per call. Prefer
/// `LocalizedProblem` when evaluating many frequencies on one lattice.
pub fn localized_kernel(spec: &LatticeSpec, omega: f64, tol: f64) -> Result<Kernel> {
    LocalizedProblem::new(spec.clone())?.kernel(omega, tol)
}

/// One-shot determinant; see `localized_kernel` about reuse.
pub fn d_loc(spec: &LatticeSpec, omega: f64) -> Result<Determinant> {
    LocalizedProblem::new(spec.clone())?.d_loc(omega)
}

/// One-shot root scan; see `localized_kernel` about reuse.
pub fn localized_modes(spec: &LatticeSpec) -> Result<LocalizedModes> {
    LocalizedProblem::new(spec.clone())?.modes()
}

/// Scalar gap diagnostic of the single-node cell: the k1-average of
/// `omega^2 / (omega^2 m1 + sqrt(a^2 - 4))` with `a = omega^2 - 4 + 2 cos k1`.
/// Strictly decreasing on every spectral gap, `+inf` at a guided edge
/// approached from above, `-inf` from below, and `1/(1+m1)` at infinity;
/// its range on a gap decides where `1 + m2 * d1` can vanish.
pub fn d1(omega: f64, m1: f64, tol: f64) -> Result<f64> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::Domain(format!("frequency must be finite and >= 0, got {omega}")));
    }
    let band = IntervalSet::singleton(0.0, 8f64.sqrt());
    let d_band = band.distance(omega);
    if d_band <= SPECTRUM_GUARD {
        return Err(Error::SpectrumViolation {
            omega,
            which: "propagative",
            distance: d_band,
            guard: SPECTRUM_GUARD,
        });
    }
    let i_g = guided::i_g_closed_form(m1)?;
    if !i_g.is_empty() {
        let d_g = i_g.distance(omega);
        if d_g <= SPECTRUM_GUARD {
            return Err(Error::SpectrumViolation {
                omega,
                which: "guided",
                distance: d_g,
                guard: SPECTRUM_GUARD,
            });
        }
    }
    let w2 = omega * omega;
    let mean = quad::periodic_mean(
        |k1: f64| {
            let a = w2 - 4.0 + 2.0 * k1.cos();
            Ok(w2 / (w2 * m1 + (a * a - 4.0).sqrt()))
        },
        tol,
        quad::MEAN_CAP,
    )?;
    Ok(mean.value)
}

/// The diagnostic exactly at the top of the propagating band, where the
/// spectrum guard blocks the plain average. Over a half period the
/// integrand reduces to `1 / (4 m1 + sqrt((cos k + 2)^2 - 1))`, smooth on
/// `[0, pi]`, integrated by midpoint refinement with extrapolation.
///
/// Defined for `m1 in (-1, -1/sqrt(2))`, where the denominator stays
/// negative, and for `m1 > 0`, where it stays positive; in between it has a
/// zero on the path (or at an endpoint) and the integral diverges.
pub fn d1_edge(m1: f64) -> Result<f64> {
    if m1 <= -1.0 {
        return Err(Error::Domain(format!("strip mass ratio must exceed -1, got {m1}")));
    }
    let inv_sqrt2 = 0.5f64.sqrt();
    if (-inv_sqrt2..=0.0).contains(&m1) {
        return Err(Error::Domain(format!(
            "band-edge diagnostic diverges for strip mass ratio {m1}: \
             4*m1 + sqrt((cos k + 2)^2 - 1) vanishes on the integration path"
        )));
    }
    let f = |k: f64| {
        let c = k.cos() + 2.0;
        1.0 / (4.0 * m1 + (c * c - 1.0).sqrt())
    };
    let integral = quad::midpoint_integral(f, 0.0, PI, D1_EDGE_TOL)?;
    Ok(4.0 / PI * integral.value)
}

/// One gap of an existence report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapVerdict {
    pub lo: f64,
    /// `None` when the gap extends without bound.
    pub hi: Option<f64>,
    pub modes: usize,
    pub label: &'static str,
}

/// Closed-form existence classification for the single-node cell.
#[derive(Clone, Debug, Serialize)]
pub struct ExistenceReport {
    pub m1: f64,
    pub m2: f64,
    pub case_id: &'static str,
    /// `-1 / d1_edge(m1)` where the gap touching the band top needs it.
    pub threshold: Option<f64>,
    pub verdicts: Vec<GapVerdict>,
}

impl ExistenceReport {
    pub fn total_modes(&self) -> usize {
        self.verdicts.iter().map(|v| v.modes).sum()
    }
}

/// Decides per gap whether `1 + m2 * d1` crosses zero, using only the
/// monotone range of `d1` on each gap. No root search is involved, so this
/// classification and `localized_modes` validate each other.
pub fn classify_existence(m1: f64, m2: f64) -> Result<ExistenceReport> {
    if 1.0 + m1 <= 0.0 {
        return Err(Error::Domain(format!(
            "strip-reduced mass 1 + m1 must be positive, got {}",
            1.0 + m1
        )));
    }
    if 1.0 + m1 + m2 <= 0.0 {
        return Err(Error::Domain(format!(
            "point-reduced mass 1 + m1 + m2 must be positive, got {}",
            1.0 + m1 + m2
        )));
    }
    let inv_sqrt2 = 0.5f64.sqrt();
    let band_top = 8f64.sqrt();
    if m1 < -inv_sqrt2 {
        // Heavy strip: the guided interval detaches upward from the band,
        // leaving a finite gap under it and the unbounded one above. On the
        // finite gap d1 falls from d1_edge (negative) to -inf, on the tail
        // from +inf to 1/(1+m1).
        let ig = guided::i_g_closed_form(m1)?;
        let (g_lo, g_hi) = (ig.inf().unwrap(), ig.sup().unwrap());
        let threshold = -1.0 / d1_edge(m1)?;
        let (in_finite, in_tail) = if m2 < 0.0 {
            (0, 1)
        } else if m2 > 0.0 && m2 < threshold {
            (1, 0)
        } else {
            (0, 0)
        };
        Ok(ExistenceReport {
            m1,
            m2,
            case_id: "two-gap",
            threshold: Some(threshold),
            verdicts: vec![
                GapVerdict {
                    lo: band_top,
                    hi: Some(g_lo),
                    modes: in_finite,
                    label: "between the propagating band and the guided interval",
                },
                GapVerdict {
                    lo: g_hi,
                    hi: None,
                    modes: in_tail,
                    label: "above the guided interval",
                },
            ],
        })
    } else if m1 <= 0.0 {
        // The guided interval overlaps the band top (empty at m1 = 0): one
        // gap above everything, where d1 falls from +inf to 1/(1+m1) > 0,
        // so only a negative point defect can host a crossing.
        let lo = match guided::i_g_closed_form(m1)?.sup() {
            Some(hi) => hi.max(band_top),
            None => band_top,
        };
        let modes = if m2 < 0.0 { 1 } else { 0 };
        Ok(ExistenceReport {
            m1,
            m2,
            case_id: "one-gap-above-guided",
            threshold: None,
            verdicts: vec![GapVerdict { lo, hi: None, modes, label: "above the guided interval" }],
        })
    } else {
        // Light strip: the guided interval hides below the band; one gap
        // above the band where d1 falls from d1_edge (positive) to
        // 1/(1+m1), so the crossing needs m2 below the negative threshold.
        let threshold = -1.0 / d1_edge(m1)?;
        let modes = if m2 < threshold { 1 } else { 0 };
        Ok(ExistenceReport {
            m1,
            m2,
            case_id: "one-gap-above-propagative",
            threshold: Some(threshold),
            verdicts: vec![GapVerdict {
                lo: band_top,
                hi: None,
                modes,
                label: "above the propagating band",
            }],
        })
    }
}

/// Critical reduced point mass at reduced strip mass `m_tilde = 1 + m1`:
/// cells whose total reduced mass stays below the returned value trap a
/// state in the gap touching the band top. Falls from 1 at `m_tilde = 1`
/// toward `3/4 - 1/(2 pi)` as `m_tilde` grows.
pub fn region_boundary(m_tilde: f64) -> Result<f64> {
    if !(m_tilde > 0.0) || !m_tilde.is_finite() {
        return Err(Error::Domain(format!(
            "reduced strip mass must be finite and positive, got {m_tilde}"
        )));
    }
    if m_tilde == 1.0 {
        // no strip: the two curve families meet at 1
        return Ok(1.0);
    }
    Ok(m_tilde - 1.0 / d1_edge(m_tilde - 1.0)?)
}
