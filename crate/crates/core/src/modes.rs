//! Real-space mode shapes for guided and localized frequencies.
//!
//! A root of one of the determinants pins down a frequency; the shape comes
//! from running the defect layers back through the resolvents. For a guided
//! root the strip trace of the field spans the null space of the guided
//! matrix, and the full field is `-omega^2 <Lp^-1 M1 v>` synthesized over
//! the transverse wavenumber. For a localized root the point trace spans
//! the null space of the localized matrix, and the field additionally picks
//! up the strip's back-action before the double synthesis over both
//! wavenumbers. Fourier synthesis uses plain periodic-grid means, which
//! converge spectrally fast here because every resolvent is analytic in `k`
//! at a gap frequency; the grid is doubled until the window stops moving.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::guided;
use crate::lattice::LatticeSpec;
use crate::localized::LocalizedProblem;
use crate::tolerances::QUAD_TOL;

/// `|det|` above this fails the root re-verification. Looser than the root
/// certification threshold: callers hand in frequencies with bisection
/// error, which the determinant's slope amplifies.
const REVERIFY_DET: f64 = 1e-6;

/// A singular value below this (relative to the largest) counts as part of
/// the null space; reconstruction requires exactly one.
const NULL_THRESHOLD: f64 = 1e-6;

/// Synthesis grids start here (points per wavenumber axis) and double until
/// the window's max-norm change drops below `SYNTH_TOL`.
const SYNTH_START: usize = 256;
const SYNTH_CAP: usize = 4096;
const SYNTH_TOL: f64 = 1e-6;

/// Leading distance skipped by the decay fits: the near field mixes
/// evanescent branches before the slowest one dominates.
const FIT_SKIP: usize = 2;

/// Real-space window of a reconstructed mode.
#[derive(Clone, Debug)]
pub struct ModeResult {
    pub omega: f64,
    /// Node grid size of the window: `(2 hx + 1) n1` by `(2 hy + 1) n2`.
    pub width: usize,
    pub height: usize,
    /// Node coordinates of the defect cell's origin inside the window.
    pub center: (usize, usize),
    /// Displacement field, row-major, scaled so the peak amplitude is 1
    /// with zero phase.
    pub shape: Vec<Complex64>,
    /// Exponential decay rates per node step along each axis away from the
    /// defect; zero along an axis the mode does not decay on.
    pub decay_rate_x: f64,
    pub decay_rate_y: f64,
    /// Coefficient of determination of each decay fit (1 = perfect).
    pub decay_r2_x: f64,
    pub decay_r2_y: f64,
    /// Inverse participation measure of the window, in `(0, 1]`.
    pub participation: f64,
}

impl ModeResult {
    pub fn value(&self, x: usize, y: usize) -> Complex64 {
        self.shape[x + y * self.width]
    }

    /// Largest relative deviation of the window from conjugate-reflection
    /// symmetry through the defect cell, `u(r) = conj(u(-r))`. Zero in
    /// exact arithmetic for any mode built from a real defect trace.
    pub fn conjugate_reflection_defect(&self) -> f64 {
        let peak = self.shape.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for y in 0..self.height {
            for x in 0..self.width {
                let (rx, ry) = (2 * self.center.0, 2 * self.center.1);
                if rx < x || ry < y || rx - x >= self.width || ry - y >= self.height {
                    continue;
                }
                let d = (self.value(x, y) - self.value(rx - x, ry - y).conj()).norm();
                worst = worst.max(d / peak);
            }
        }
        worst
    }
}

/// `|<a, b>| / (|a| |b|)`, the phase-invariant overlap used to compare a
/// reconstructed window against an independently computed one.
pub fn cosine_similarity(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot.norm() / (na * nb)
}

/// Participation ratio of a complex field, `(0, 1]`.
pub fn participation_of(shape: &[Complex64]) -> f64 {
    let n2: f64 = shape.iter().map(|z| z.norm_sqr()).sum();
    let n4: f64 = shape.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum();
    if n4 == 0.0 {
        return 1.0;
    }
    (n2 * n2) / (shape.len() as f64 * n4)
}

/// Least-squares exponential fit `amp ~ exp(-rate * d)` on log amplitudes.
/// Returns `(rate, r_squared)`. Points with vanishing amplitude are
/// dropped; fewer than three surviving points fit nothing (rate 0, r2 0).
fn exp_decay_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|&&(_, a)| a > 1e-280).map(|&(d, a)| (d, a.ln())).collect();
    if logs.len() < 3 {
        return (0.0, 0.0);
    }
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return (0.0, 0.0);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let icpt = (sy - slope * sx) / n;
    let mean = sy / n;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = logs.iter().map(|p| (p.1 - slope * p.0 - icpt).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (-slope, r2)
}

/// Unique null vector of a small matrix: the right singular vector of its
/// smallest singular value. Errors unless exactly one singular value sits
/// below `NULL_THRESHOLD` relative to the largest.
fn null_vector(m: &DMatrix<Complex64>, omega: f64) -> Result<DVector<Complex64>> {
    let svd = m.clone().svd(false, true);
    let sv = &svd.singular_values;
    let s_max = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut min_i = 0usize;
    let mut small = 0usize;
    for i in 0..sv.len() {
        if sv[i] <= NULL_THRESHOLD * s_max.max(1e-300) {
            small += 1;
        }
        if sv[i] < sv[min_i] {
            min_i = i;
        }
    }
    // A 1 x 1 matrix always has the trivial null direction once the root
    // check has passed; the threshold count is only meaningful above it.
    if m.nrows() > 1 && small != 1 {
        return Err(Error::DegenerateNullSpace { omega, found: small, threshold: NULL_THRESHOLD });
    }
    let v_t = svd.v_t.expect("requested right singular vectors");
    Ok(v_t.row(min_i).adjoint())
}

/// Decay-fit input along one axis: `(distance, peak amplitude at it)`.
/// Amplitude at node distance `d` is the window maximum over the line of
/// nodes `d` steps from the defect cell along the axis, which tracks the
/// slowest evanescent branch without pinning the fit to a nodal line.
fn axis_profile(
    shape: &[Complex64],
    width: usize,
    height: usize,
    center: (usize, usize),
    axis_x: bool,
) -> Vec<(f64, f64)> {
    let (span, cross) = if axis_x { (width, height) } else { (height, width) };
    let c = if axis_x { center.0 } else { center.1 };
    let mut out = Vec::new();
    for d in (FIT_SKIP + 1)..(span - c) {
        let mut amp = 0.0f64;
        for t in 0..cross {
            let (x, y) = if axis_x { (c + d, t) } else { (t, c + d) };
            amp = amp.max(shape[x + y * width].norm());
        }
        out.push((d as f64, amp));
    }
    out
}

fn normalize_peak(shape: &mut [Complex64]) {
    let mut peak = Complex64::ZERO;
    for z in shape.iter() {
        if z.norm_sqr() > peak.norm_sqr() {
            peak = *z;
        }
    }
    if peak != Complex64::ZERO {
        for z in shape.iter_mut() {
            *z /= peak;
        }
    }
}

/// Reconstructs the guided mode at `(k1, omega)` on a window of
/// `(2 half.0 + 1) x (2 half.1 + 1)` cells centered on the strip.
///
/// `omega` must be a guided root at `k1` (re-verified through the guided
/// determinant). The strip trace of the field is the null vector of the
/// guided matrix; each transverse wavenumber then carries
/// `-omega^2 Lp^-1 M1 v`, and the window is the periodic-grid synthesis of
/// those slices. Phases are chosen so translating one period along the
/// strip multiplies the field by `exp(i k1)`.
pub fn reconstruct_guided_mode(
    spec: &LatticeSpec,
    k1: f64,
    omega: f64,
    half: (usize, usize),
) -> Result<ModeResult> {
    if !spec.has_strip() {
        return Err(Error::Domain("guided reconstruction needs a nonzero strip layer".into()));
    }
    let det = guided::guided_det(spec, omega, k1, QUAD_TOL)?;
    if det.value.norm() > REVERIFY_DET {
        return Err(Error::NotARoot { omega, det_abs: det.value.norm() });
    }
    let res = guided::averaged_resolvent_k2(spec, omega, k1, QUAD_TOL)?;
    let dim = spec.dim();
    let strip = spec.strip();
    let w2 = omega * omega;
    let mut lg = DMatrix::<Complex64>::identity(dim, dim);
    for j in 0..dim {
        if strip[j] != 0.0 {
            let s = Complex64::new(w2 * strip[j], 0.0);
            for i in 0..dim {
                lg[(i, j)] += res.matrix[(i, j)] * s;
            }
        }
    }
    let v = null_vector(&lg, omega)?;
    // Right-hand side -omega^2 M1 v of the transverse synthesis.
    let rhs = DVector::from_fn(dim, |j, _| -w2 * strip[j] * v[j]);

    let (n1, n2) = spec.cell_size();
    let (hx, hy) = half;
    let width = (2 * hx + 1) * n1;
    let height = (2 * hy + 1) * n2;
    let slice_len = (2 * hy + 1) * dim;
    let mut slices: Option<Vec<Complex64>> = None;
    let mut points = SYNTH_START;
    loop {
        // One transverse slice per cell row: mean over the k2 grid of
        // Lp^-1 rhs twisted by exp(-i r2 k2).
        let mut acc = vec![Complex64::ZERO; slice_len];
        for s in 0..points {
            let k2 = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * s as f64 / points as f64;
            let ops = spec.assemble_bloch([k1, k2])?;
            let sol = ops.propagative_matrix(omega).lu().solve(&rhs).ok_or_else(|| {
                Error::Singular(format!("inverting Lp at k2={k2}, omega={omega}"))
            })?;
            for r2 in -(hy as i64)..=(hy as i64) {
                let phase = Complex64::from_polar(1.0, -(r2 as f64) * k2);
                let base = ((r2 + hy as i64) as usize) * dim;
                for j in 0..dim {
                    acc[base + j] += sol[j] * phase;
                }
            }
        }
        for z in &mut acc {
            *z /= points as f64;
        }
        let done = slices.as_ref().is_some_and(|prev| {
            acc.iter().zip(prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) < SYNTH_TOL
        });
        let finished = done;
        slices = Some(acc);
        if finished {
            break;
        }
        if points >= SYNTH_CAP {
            return Err(Error::NonConvergence {
                what: "mode synthesis",
                achieved: f64::NAN,
                target: SYNTH_TOL,
                detail: format!("transverse grid capped at {SYNTH_CAP} points"),
            });
        }
        points *= 2;
    }
    let slices = slices.expect("at least one synthesis pass ran");

    // Conjugating flips the quasiperiodic phase to exp(+i k1) per period
    // while still solving the same real-coefficient eigenproblem.
    let mut shape = vec![Complex64::ZERO; width * height];
    for r1 in -(hx as i64)..=(hx as i64) {
        let bloch = Complex64::from_polar(1.0, -(r1 as f64) * k1).conj();
        for r2 in -(hy as i64)..=(hy as i64) {
            let base = ((r2 + hy as i64) as usize) * dim;
            for i2 in 0..n2 {
                for i1 in 0..n1 {
                    let val = slices[base + spec.node_index(i1, i2)].conj() * bloch;
                    let x = ((r1 + hx as i64) as usize) * n1 + i1;
                    let y = ((r2 + hy as i64) as usize) * n2 + i2;
                    shape[x + y * width] = val;
                }
            }
        }
    }
    normalize_peak(&mut shape);
    let center = (hx * n1, hy * n2);
    let participation = participation_of(&shape);
    let (decay_rate_y, decay_r2_y) =
        exp_decay_fit(&axis_profile(&shape, width, height, center, false));
    Ok(ModeResult {
        omega,
        width,
        height,
        center,
        shape,
        // Quasiperiodic along the strip: amplitudes repeat every period.
        decay_rate_x: 0.0,
        decay_r2_x: 1.0,
        decay_rate_y: decay_rate_y.max(0.0),
        decay_r2_y,
        participation,
    })
}

/// Reconstructs the localized mode at `omega` on a window of
/// `(2 half.0 + 1) x (2 half.1 + 1)` cells centered on the defect cell.
///
/// `omega` must be a localized root of `problem` (re-verified through the
/// localized determinant). The defect-cell trace spans the null space of
/// the localized matrix; each wavenumber column then carries the resolvent
/// image of `-omega^2 M2 v` corrected by the strip back-action, and the
/// window is the double periodic-grid synthesis.
pub fn reconstruct_localized_mode(
    problem: &LocalizedProblem,
    omega: f64,
    half: (usize, usize),
) -> Result<ModeResult> {
    let spec = problem.spec();
    if !spec.has_point() {
        return Err(Error::Domain("localized reconstruction needs a nonzero point layer".into()));
    }
    let det = problem.d_loc(omega)?;
    if det.value.norm() > REVERIFY_DET {
        return Err(Error::NotARoot { omega, det_abs: det.value.norm() });
    }
    let kernel = problem.kernel(omega, QUAD_TOL)?;
    let dim = spec.dim();
    let point = spec.point();
    let strip = spec.strip();
    let w2 = omega * omega;
    let mut dloc = DMatrix::<Complex64>::identity(dim, dim);
    for j in 0..dim {
        if point[j] != 0.0 {
            let s = Complex64::new(w2 * point[j], 0.0);
            for i in 0..dim {
                dloc[(i, j)] += kernel.matrix[(i, j)] * s;
            }
        }
    }
    let v = null_vector(&dloc, omega)?;
    let rhs = DVector::from_fn(dim, |j, _| -w2 * point[j] * v[j]);

    let (n1, n2) = spec.cell_size();
    let (hx, hy) = half;
    let width = (2 * hx + 1) * n1;
    let height = (2 * hy + 1) * n2;
    let cells = (2 * hx + 1) * (2 * hy + 1);
    let mut window: Option<Vec<Complex64>> = None;
    let mut points = SYNTH_START;
    loop {
        let mut acc = vec![Complex64::ZERO; cells * dim];
        for s1 in 0..points {
            let k1 = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * s1 as f64 / points as f64;
            let res = guided::resolvent_unguarded(spec, omega, k1, QUAD_TOL)?;
            // Strip back-action: w = (I - omega^2 M1 Lg^-1 R) rhs.
            let mut lg = DMatrix::<Complex64>::identity(dim, dim);
            for j in 0..dim {
                if strip[j] != 0.0 {
                    let s = Complex64::new(w2 * strip[j], 0.0);
                    for i in 0..dim {
                        lg[(i, j)] += res.matrix[(i, j)] * s;
                    }
                }
            }
            let r_rhs = &res.matrix * &rhs;
            let lg_sol = lg.lu().solve(&r_rhs).ok_or_else(|| {
                Error::Singular(format!("inverting Lg at k1={k1}, omega={omega}"))
            })?;
            let mut w_vec = rhs.clone();
            for j in 0..dim {
                w_vec[j] -= Complex64::new(w2 * strip[j], 0.0) * lg_sol[j];
            }
            // Transverse pass at this k1.
            let mut col = vec![Complex64::ZERO; (2 * hy + 1) * dim];
            for s2 in 0..points {
                let k2 =
                    -std::f64::consts::PI + 2.0 * std::f64::consts::PI * s2 as f64 / points as f64;
                let ops = spec.assemble_bloch([k1, k2])?;
                let sol = ops.propagative_matrix(omega).lu().solve(&w_vec).ok_or_else(|| {
                    Error::Singular(format!("inverting Lp at k=[{k1}, {k2}], omega={omega}"))
                })?;
                for r2 in -(hy as i64)..=(hy as i64) {
                    let phase = Complex64::from_polar(1.0, -(r2 as f64) * k2);
                    let base = ((r2 + hy as i64) as usize) * dim;
                    for j in 0..dim {
                        col[base + j] += sol[j] * phase;
                    }
                }
            }
            for z in &mut col {
                *z /= points as f64;
            }
            for r1 in -(hx as i64)..=(hx as i64) {
                let phase = Complex64::from_polar(1.0, -(r1 as f64) * k1);
                for r2 in 0..(2 * hy + 1) {
                    let cell = (r1 + hx as i64) as usize + r2 * (2 * hx + 1);
                    for j in 0..dim {
                        acc[cell * dim + j] += col[r2 * dim + j] * phase;
                    }
                }
            }
        }
        for z in &mut acc {
            *z /= points as f64;
        }
        let done = window.as_ref().is_some_and(|prev| {
            acc.iter().zip(prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) < SYNTH_TOL
        });
        let finished = done;
        window = Some(acc);
        if finished {
            break;
        }
        if points >= SYNTH_CAP {
            return Err(Error::NonConvergence {
                what: "mode synthesis",
                achieved: f64::NAN,
                target: SYNTH_TOL,
                detail: format!("synthesis grid capped at {SYNTH_CAP} points per axis"),
            });
        }
        points *= 2;
    }
    let cells_acc = window.expect("at least one synthesis pass ran");

    let mut shape = vec![Complex64::ZERO; width * height];
    for r2 in 0..(2 * hy + 1) {
        for r1 in 0..(2 * hx + 1) {
            let cell = r1 + r2 * (2 * hx + 1);
            for i2 in 0..n2 {
                for i1 in 0..n1 {
                    let x = r1 * n1 + i1;
                    let y = r2 * n2 + i2;
                    shape[x + y * width] = cells_acc[cell * dim + spec.node_index(i1, i2)];
                }
            }
        }
    }
    normalize_peak(&mut shape);
    let center = (hx * n1, hy * n2);
    let participation = participation_of(&shape);
    let (rx, r2x) = exp_decay_fit(&axis_profile(&shape, width, height, center, true));
    let (ry, r2y) = exp_decay_fit(&axis_profile(&shape, width, height, center, false));
    Ok(ModeResult {
        omega,
        width,
        height,
        center,
        shape,
        decay_rate_x: rx.max(0.0),
        decay_r2_x: r2x,
        decay_rate_y: ry.max(0.0),
        decay_r2_y: r2y,
        participation,
    })
}
