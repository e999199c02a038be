//! Propagating Bloch waves of the unperturbed periodic lattice: dispersion
//! branches at a wavevector, sampled dispersion tables, and frequency
//! projections (the set of omega carried by at least one propagating wave).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalSet};
use crate::lattice::LatticeSpec;
use crate::par;

/// Dispersion branches at wavevector `k`, ascending. Solves the generalized
/// cell problem `(4I - hopping) u = omega^2 M u` through the symmetric
/// reduction `M^{-1/2} (4I - hopping) M^{-1/2}`, which keeps the spectrum
/// real and nonnegative.
pub fn branches(spec: &LatticeSpec, k: [f64; 2]) -> Result<Vec<f64>> {
    let ops = spec.assemble_bloch(k)?;
    let dim = spec.dim();
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let s = 1.0 / (ops.m_hat[i] * ops.m_hat[j]).sqrt();
            a[(i, j)] = -ops.l_hat[(i, j)] * s;
        }
    }
    // symmetrize away assembly roundoff before the Hermitian solver
    let a = (&a + &a.adjoint()).scale(0.5);
    let eig = a.symmetric_eigen();
    let mut lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    lam.sort_by(f64::total_cmp);
    lam.iter()
        .map(|&l| {
            if l < -1e-9 {
                return Err(Error::InvalidLattice(format!(
                    "dynamical matrix has eigenvalue {l} < 0 at k = [{}, {}]",
                    k[0], k[1]
                )));
            }
            Ok(l.max(0.0).sqrt())
        })
        .collect()
}

/// Closed-form branch of the defect-free single-mass lattice.
pub fn uniform_branch(k: [f64; 2]) -> f64 {
    (4.0 - 2.0 * k[0].cos() - 2.0 * k[1].cos()).sqrt()
}

/// Refinement controls shared by the projection routines.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionOptions {
    /// Cells in the first sampling grid; doubled on each refinement pass.
    pub initial_grid: usize,
    /// Stop once one doubling moves every projection endpoint by less than
    /// this.
    pub tol: f64,
    /// Grid-cell cap per axis.
    pub max_grid: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions { initial_grid: 64, tol: 1e-10, max_grid: 1 << 16 }
    }
}

/// Per-branch min/max over a sampled axis, sharpened by evaluating the true
/// branches at the parabolic vertex of each interior three-point extremum.
/// All envelope values are genuinely attained, so the envelope can only grow
/// toward the true projection as the grid refines. Alongside each interval
/// the largest per-cell movement of that branch is returned; it calibrates
/// how far the sampling can miss a crossing tip.
fn branch_envelopes<F>(
    samples: &[Vec<f64>],
    xs: &[f64],
    eval: F,
) -> Result<(Vec<Interval>, Vec<f64>)>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync + Send,
{
    let branches = samples[0].len();
    let mut lo = vec![f64::INFINITY; branches];
    let mut hi = vec![f64::NEG_INFINITY; branches];
    let mut step = vec![0.0f64; branches];
    for row in samples {
        for (b, &v) in row.iter().enumerate() {
            lo[b] = lo[b].min(v);
            hi[b] = hi[b].max(v);
        }
    }
    for j in 1..samples.len() {
        for b in 0..branches {
            step[b] = step[b].max((samples[j][b] - samples[j - 1][b]).abs());
        }
    }
    let mut vertices: Vec<f64> = Vec::new();
    for b in 0..branches {
        for j in 1..samples.len() - 1 {
            let (f0, f1, f2) = (samples[j - 1][b], samples[j][b], samples[j + 1][b]);
            let curv = f0 - 2.0 * f1 + f2;
            let is_min = f1 <= f0 && f1 <= f2 && curv > 0.0;
            let is_max = f1 >= f0 && f1 >= f2 && curv < 0.0;
            if is_min || is_max {
                let h = xs[j] - xs[j - 1];
                let x = xs[j] + 0.5 * h * (f0 - f2) / curv;
                if x > xs[j - 1] && x < xs[j + 1] && (x - xs[j]).abs() > 1e-15 {
                    vertices.push(x);
                }
            }
        }
    }
    if !vertices.is_empty() {
        let refined = par::try_map(&vertices, |&x| eval(x))?;
        for row in &refined {
            for (b, &v) in row.iter().enumerate() {
                lo[b] = lo[b].min(v);
                hi[b] = hi[b].max(v);
            }
        }
    }
    let intervals = (0..branches).map(|b| Interval::new(lo[b], hi[b])).collect();
    Ok((intervals, step))
}

/// Joins ranges of consecutive sorted branches that a crossing connects.
/// Where branches cross, the upper branch's minimum equals the lower
/// branch's value at the crossing, so in exact arithmetic the two ranges
/// touch; sampling misses the tip by at most a few per-cell steps. Gaps
/// below that resolution are sewn shut: they shrink linearly with the grid
/// step on refinement, so genuine gaps always survive.
fn sew_branches(intervals: Vec<Interval>, steps: &[f64]) -> IntervalSet {
    let mut out: Vec<Interval> = Vec::new();
    for (b, iv) in intervals.into_iter().enumerate() {
        let eps = if b > 0 { 4.0 * steps[b].max(steps[b - 1]) } else { 0.0 };
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi + eps => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    IntervalSet::from_intervals(out)
}

fn project_axis<F>(eval: F, opts: &ProjectionOptions, what: &'static str) -> Result<IntervalSet>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync + Send,
{
    use std::f64::consts::PI;
    let mut n = opts.initial_grid.max(8);
    let mut prev: Option<IntervalSet> = None;
    loop {
        let xs: Vec<f64> = (0..=n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect();
        let samples = par::try_map(&xs, |&x| eval(x))?;
        let (envelopes, steps) = branch_envelopes(&samples, &xs, &eval)?;
        let cur = sew_branches(envelopes, &steps);
        if let Some(p) = prev {
            let moved = p.endpoint_distance(&cur);
            if moved <= opts.tol {
                return Ok(cur);
            }
            if n >= opts.max_grid {
                return Err(Error::NonConvergence {
                    what,
                    achieved: moved,
                    target: opts.tol,
                    detail: format!("{n} grid cells"),
                });
            }
        }
        prev = Some(cur);
        n *= 2;
    }
}

/// Frequencies carried by propagating waves at fixed `k1`: the union over
/// `k2` of all dispersion branches.
pub fn projection_k1(spec: &LatticeSpec, k1: f64, opts: &ProjectionOptions) -> Result<IntervalSet> {
    project_axis(|k2| branches(spec, [k1, k2]), opts, "projection at fixed k1")
}

/// Full propagative spectrum: the union of `projection_k1` over the `k1`
/// axis, refined on the same doubling schedule.
pub fn projection_full(spec: &LatticeSpec, opts: &ProjectionOptions) -> Result<IntervalSet> {
    use std::f64::consts::PI;
    let mut n = opts.initial_grid.max(8);
    let mut prev: Option<IntervalSet> = None;
    loop {
        let xs: Vec<f64> = (0..=n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect();
        let slices = par::try_map(&xs, |&k1| projection_k1(spec, k1, opts))?;
        let mut cur = IntervalSet::empty();
        for s in &slices {
            cur = cur.union(s);
        }
        if let Some(p) = prev {
            let moved = p.endpoint_distance(&cur);
            if moved <= opts.tol {
                return Ok(cur);
            }
            if n >= opts.max_grid {
                return Err(Error::NonConvergence {
                    what: "full projection",
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

/// Sampled dispersion surface on a rectangular wavevector grid.
#[derive(Clone, Debug, Serialize)]
pub struct DispersionTable {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    /// Row-major over the grid with `k1` varying fastest:
    /// `branches[ik2 * k1.len() + ik1]`, each entry ascending in omega.
    pub branches: Vec<Vec<f64>>,
    pub meta: TableMeta,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableMeta {
    pub n_k1: usize,
    pub n_k2: usize,
    pub spec_digest: String,
}

/// Dispersion branches tabulated over the closed grid
/// `[-pi, pi]^2` with `n_k1 x n_k2` points (endpoints included).
pub fn dispersion_table(spec: &LatticeSpec, n_k1: usize, n_k2: usize) -> Result<DispersionTable> {
    use std::f64::consts::PI;
    if n_k1 < 2 || n_k2 < 2 {
        return Err(Error::Domain("dispersion table needs at least 2 points per axis".into()));
    }
    let axis = |n: usize| -> Vec<f64> {
        (0..n).map(|j| -PI + 2.0 * PI * j as f64 / (n - 1) as f64).collect()
    };
    let k1 = axis(n_k1);
    let k2 = axis(n_k2);
    let points: Vec<[f64; 2]> =
        k2.iter().flat_map(|&q2| k1.iter().map(move |&q1| [q1, q2])).collect();
    let rows = par::try_map(&points, |&k| branches(spec, k))?;
    Ok(DispersionTable {
        k1,
        k2,
        branches: rows,
        meta: TableMeta { n_k1, n_k2, spec_digest: spec.digest() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn uniform_branch_matches_eigensolve() {
        let spec = LatticeSpec::square(1, 1);
        for &k in &[[0.0, 0.0], [PI, PI], [0.3, -1.1], [2.0, 0.5]] {
            let b = branches(&spec, k).unwrap();
            assert_eq!(b.len(), 1);
            assert_relative_eq!(b[0], uniform_branch(k), epsilon = 1e-12);
        }
    }

    #[test]
    fn supercell_folds_the_uniform_branch() {
        // A 2x1 supercell at reduced wavevector q folds the primitive branch:
        // eigenvalues must be { omega(q/2, k2), omega(q/2 - pi, k2) } as a set.
        let spec = LatticeSpec::square(2, 1);
        for &(q, k2) in &[(0.8, 0.3), (-2.0, 1.7), (PI, -0.4)] {
            let got = branches(&spec, [q, k2]).unwrap();
            let mut want = vec![uniform_branch([q / 2.0, k2]), uniform_branch([q / 2.0 - PI, k2])];
            want.sort_by(f64::total_cmp);
            assert_eq!(got.len(), 2);
            for (g, w) in got.iter().zip(&want) {
                assert_relative_eq!(g, w, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mass_scaling_shifts_frequencies() {
        // doubling every mass divides omega^2 by 2
        let spec = LatticeSpec::square(2, 2);
        let heavy =
            LatticeSpec::new(2, 2, vec![2.0; 4], vec![0.0; 4], vec![0.0; 4], spec.links().to_vec())
                .unwrap();
        let k = [1.1, -0.7];
        let a = branches(&spec, k).unwrap();
        let b = branches(&heavy, k).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x / 2f64.sqrt(), *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn fixed_k1_projection_hits_closed_form() {
        let spec = LatticeSpec::square(1, 1);
        let opts = ProjectionOptions::default();
        for &k1 in &[0.0, 0.9, PI / 2.0, PI] {
            let p = projection_k1(&spec, k1, &opts).unwrap();
            assert_eq!(p.intervals().len(), 1);
            let iv = p.intervals()[0];
            assert_relative_eq!(iv.lo, (2.0 - 2.0 * k1.cos()).sqrt(), epsilon = 1e-9);
            assert_relative_eq!(iv.hi, (6.0 - 2.0 * k1.cos()).sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn full_projection_is_the_whole_band() {
        let spec = LatticeSpec::square(1, 1);
        let p = projection_full(&spec, &ProjectionOptions::default()).unwrap();
        assert_eq!(p.intervals().len(), 1);
        assert_relative_eq!(p.intervals()[0].lo, 0.0, epsilon = 1e-9);
        assert_relative_eq!(p.intervals()[0].hi, 8f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn table_layout_and_symmetry() {
        let spec = LatticeSpec::square(1, 1);
        let t = dispersion_table(&spec, 5, 9).unwrap();
        assert_eq!(t.branches.len(), 45);
        assert_eq!(t.k1.len(), 5);
        // omega(k) = omega(-k): reversed grid gives the same table
        for i2 in 0..9 {
            for i1 in 0..5 {
                let a = &t.branches[i2 * 5 + i1];
                let b = &t.branches[(8 - i2) * 5 + (4 - i1)];
                for (x, y) in a.iter().zip(b) {
                    assert_relative_eq!(x, y, epsilon = 1e-12);
                }
            }
        }
    }
}
