//! Clamped finite sections of the lattice and the gap-mode oracle.
//!
//! Truncating the infinite lattice to a `width x height` block with clamped
//! (zero-displacement) surroundings gives an ordinary generalized eigenvalue
//! problem whose spectrum approximates the infinite one: bands fill with
//! standing waves, and defect modes reappear as isolated eigenvalues inside
//! the gaps, converging exponentially in the box size. Solving that problem
//! with machinery disjoint from the resolvent formulas (banded Sturm
//! bisection instead of quadrature and determinants) makes it an independent
//! cross-check for the whole localized pipeline.
//!
//! The quadratic form of the clamped block is the infinite form evaluated on
//! fields extended by zero, so every finite Rayleigh quotient, and with it
//! every finite eigenvalue, stays below the supremum of the infinite
//! spectrum. Spill into a gap can therefore only come from truncated guided
//! or band states just below a gap's lower edge; the search windows stand
//! back from the gap edges by a small buffer to exclude them.

use serde::Serialize;

use crate::banded::{GenEig, SymBanded};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::localized::{frequency_bound, gap_structure, GapStructure};

/// Minimum box side for the oracle: smaller boxes leak weakly localized
/// modes through the boundary faster than the agreement tolerances assume.
pub const MIN_ORACLE_SIDE: usize = 41;

/// Participation ratio below which an in-gap eigenvector counts as
/// localized. Point modes on a 41x41 or larger box come out two orders of
/// magnitude lower; extended standing waves two orders higher.
pub const PR_LOCALIZED: f64 = 0.05;

/// Boundary-to-peak amplitude ratio above which a candidate is flagged:
/// the box is too small for that mode and its frequency is not converged.
pub const BOUNDARY_WARN: f64 = 1e-6;

/// Gap windows are shrunk by this much at each finite edge. Truncated
/// guided states protrude past their band edge by `O(1/side^2)`, about
/// 7e-4 at the minimum box size; the buffer keeps them out of the windows.
const WINDOW_BUFFER: f64 = 2e-3;

/// Relative bisection width for eigenvalue isolation, in `mu = omega^2`.
const EIG_XTOL: f64 = 1e-9;

/// One finite block of the lattice with clamped surroundings.
pub struct FiniteLattice {
    width: usize,
    height: usize,
    masses: Vec<f64>,
    stiffness: SymBanded,
    /// Node rows `[lo, hi)` carrying the strip perturbation.
    strip_rows: (usize, usize),
    /// Node region `(x, y) in [px, px+n1) x [py, py+n2)` carrying the point
    /// perturbation.
    point_origin: (usize, usize),
}

impl FiniteLattice {
    /// Cuts a `width x height` node block out of the infinite lattice.
    /// The strip runs through the vertically centered row of cells and the
    /// point perturbation sits in the centered cell of that row. Both sides
    /// must be whole multiples of the cell so the tiling is unbroken.
    pub fn from_spec(spec: &LatticeSpec, width: usize, height: usize) -> Result<Self> {
        let (n1, n2) = spec.cell_size();
        if width == 0 || height == 0 || width % n1 != 0 || height % n2 != 0 {
            return Err(Error::Domain(format!(
                "block {width} x {height} does not tile with the {n1} x {n2} cell"
            )));
        }
        let cells_x = width / n1;
        let cells_y = height / n2;
        let cx = (cells_x - 1) / 2;
        let cy = (cells_y - 1) / 2;
        let strip_rows = (cy * n2, (cy + 1) * n2);
        let point_origin = (cx * n1, cy * n2);

        let n = width * height;
        let idx = |x: usize, y: usize| x + y * width;
        let mut masses = vec![0.0; n];
        for y in 0..height {
            for x in 0..width {
                let a = spec.node_index(x % n1, y % n2);
                let mut m = spec.masses()[a];
                if strip_rows.0 <= y && y < strip_rows.1 {
                    m += spec.strip()[a];
                    if point_origin.0 <= x && x < point_origin.0 + n1 {
                        m += spec.point()[a];
                    }
                }
                masses[idx(x, y)] = m;
            }
        }

        // Bandwidth bound: a link moves at most one cell in each direction,
        // so node indices differ by at most n2 rows plus n1 columns.
        let bw = (n2 * width + n1).min(n - 1);
        let mut k = SymBanded::zeros(n, bw);
        for i in 0..n {
            // Clamped boundary: springs to frozen exterior nodes still
            // anchor the diagonal, so every node keeps its full degree.
            k.add(i, i, 4.0);
        }
        for cyl in 0..cells_y {
            for cxl in 0..cells_x {
                for link in spec.links() {
                    let (a1, a2) = (link.a % n1, link.a / n1);
                    let (b1, b2) = (link.b % n1, link.b / n1);
                    let gx = cxl as i64 + link.offset[0] as i64;
                    let gy = cyl as i64 + link.offset[1] as i64;
                    if gx < 0 || gy < 0 || gx >= cells_x as i64 || gy >= cells_y as i64 {
                        continue;
                    }
                    let ua = idx(cxl * n1 + a1, cyl * n2 + a2);
                    let ub = idx(gx as usize * n1 + b1, gy as usize * n2 + b2);
                    k.add(ua, ub, -1.0);
                }
            }
        }
        Ok(FiniteLattice { width, height, masses, stiffness: k, strip_rows, point_origin })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn node_count(&self) -> usize {
        self.width * self.height
    }

    pub fn node_index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        x + y * self.width
    }

    pub fn mass(&self, x: usize, y: usize) -> f64 {
        self.masses[self.node_index(x, y)]
    }

    pub fn strip_rows(&self) -> (usize, usize) {
        self.strip_rows
    }

    /// Node coordinates of the point-perturbed cell's origin.
    pub fn point_origin(&self) -> (usize, usize) {
        self.point_origin
    }

    pub fn stiffness(&self) -> &SymBanded {
        &self.stiffness
    }

    /// Number of eigenfrequencies strictly below `omega`.
    pub fn count_below(&self, omega: f64) -> Result<usize> {
        Ok(GenEig::new(&self.stiffness, &self.masses)?.count_below(omega * omega))
    }

    /// Eigenpairs with frequency in `(lo, hi)`: `(omega, shape)` with the
    /// shape 2-normalized. Frequencies are resolved far beyond the window
    /// placement, so the open bounds are only ambiguous for an eigenvalue
    /// within roundoff of a bound.
    pub fn eigenpairs_in(&self, lo: f64, hi: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        if !(0.0 <= lo && lo < hi) {
            return Err(Error::Domain(format!("bad frequency window [{lo}, {hi}]")));
        }
        let pencil = GenEig::new(&self.stiffness, &self.masses)?;
        let mus = pencil.eigenvalues_in(lo * lo, hi * hi, EIG_XTOL)?;
        let mut out = Vec::with_capacity(mus.len());
        for mu in mus {
            let (shape, rho) = pencil.eigenvector(mu)?;
            out.push((rho.max(0.0).sqrt(), shape));
        }
        Ok(out)
    }

    /// Largest amplitude on the outermost node ring relative to the peak.
    pub fn boundary_ratio(&self, shape: &[f64]) -> f64 {
        assert_eq!(shape.len(), self.node_count());
        let peak = shape.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        let mut edge = 0.0f64;
        for x in 0..self.width {
            edge = edge.max(shape[self.node_index(x, 0)].abs());
            edge = edge.max(shape[self.node_index(x, self.height - 1)].abs());
        }
        for y in 0..self.height {
            edge = edge.max(shape[self.node_index(0, y)].abs());
            edge = edge.max(shape[self.node_index(self.width - 1, y)].abs());
        }
        edge / peak
    }

    /// Values of `shape` on the centered window of half-widths `(hx, hy)`,
    /// row-major with index `(dx + hx) + (dy + hy) * (2 hx + 1)`. The window
    /// is centered on the point-perturbed cell's origin node.
    pub fn center_window(&self, shape: &[f64], hx: usize, hy: usize) -> Result<Vec<f64>> {
        assert_eq!(shape.len(), self.node_count());
        let (cx, cy) = self.point_origin;
        if cx < hx || cy < hy || cx + hx >= self.width || cy + hy >= self.height {
            return Err(Error::Domain(format!(
                "window half-widths ({hx}, {hy}) exceed the block around ({cx}, {cy})"
            )));
        }
        let mut out = Vec::with_capacity((2 * hx + 1) * (2 * hy + 1));
        for dy in -(hy as i64)..=(hy as i64) {
            for dx in -(hx as i64)..=(hx as i64) {
                let x = (cx as i64 + dx) as usize;
                let y = (cy as i64 + dy) as usize;
                out.push(shape[self.node_index(x, y)]);
            }
        }
        Ok(out)
    }
}

/// Inverse participation measure normalized to `(0, 1]`: 1 for a perfectly
/// uniform shape, `1/N` for a single-node spike.
pub fn participation_ratio(shape: &[f64]) -> f64 {
    let n2: f64 = shape.iter().map(|v| v * v).sum();
    let n4: f64 = shape.iter().map(|v| v.powi(4)).sum();
    if n4 == 0.0 {
        return 1.0;
    }
    (n2 * n2) / (shape.len() as f64 * n4)
}

/// One in-gap eigenfrequency of the finite block that passes the
/// localization filter.
#[derive(Clone, Serialize)]
pub struct GapCandidate {
    pub omega: f64,
    pub participation: f64,
    /// Boundary-to-peak amplitude ratio; above `BOUNDARY_WARN` the box is
    /// too small and `omega` is untrustworthy.
    pub boundary_ratio: f64,
    /// Index into `GapStructure::gaps` of the hosting gap.
    pub gap: usize,
    pub in_tail: bool,
    /// 2-normalized displacement field, row-major over the block.
    #[serde(skip)]
    pub shape: Vec<f64>,
}

impl GapCandidate {
    pub fn boundary_warning(&self) -> bool {
        self.boundary_ratio > BOUNDARY_WARN
    }
}

/// A searched frequency window: a spectral gap pulled back from its edges.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapWindow {
    pub lo: f64,
    pub hi: f64,
    /// Index into `GapStructure::gaps`.
    pub gap: usize,
    pub in_tail: bool,
}

/// Everything the finite cross-check produces.
#[derive(Serialize)]
pub struct OracleReport {
    pub width: usize,
    pub height: usize,
    pub windows: Vec<GapWindow>,
    pub candidates: Vec<GapCandidate>,
    /// In-window eigenfrequencies rejected by the participation filter,
    /// with their participation ratios (truncation artifacts, typically
    /// standing waves leaking past a window edge).
    pub rejected: Vec<(f64, f64)>,
}

/// Diagonalizes a clamped `width x height` block over every spectral gap of
/// the infinite lattice and returns the localized candidates it finds.
/// Sides below `MIN_ORACLE_SIDE` are refused: agreement tolerances against
/// the infinite problem assume at least that much room to decay.
pub fn finite_oracle(spec: &LatticeSpec, width: usize, height: usize) -> Result<OracleReport> {
    if width < MIN_ORACLE_SIDE || height < MIN_ORACLE_SIDE {
        return Err(Error::Domain(format!(
            "oracle block {width} x {height} is below the minimum side {MIN_ORACLE_SIDE}"
        )));
    }
    let omega_max = frequency_bound(spec);
    let gaps = gap_structure(spec, omega_max)?;
    finite_oracle_with_gaps(spec, &gaps, width, height)
}

/// Same as [`finite_oracle`] for callers that already hold the gap
/// structure (it is the expensive half of the call).
pub fn finite_oracle_with_gaps(
    spec: &LatticeSpec,
    gaps: &GapStructure,
    width: usize,
    height: usize,
) -> Result<OracleReport> {
    let block = FiniteLattice::from_spec(spec, width, height)?;
    let mut windows = Vec::new();
    for (g, iv) in gaps.gaps.intervals().iter().enumerate() {
        let in_tail = gaps.tail == Some(g);
        // The tail's upper end is the search bracket, not a spectral edge;
        // no truncated band presses against it, so it needs no buffer.
        let lo = iv.lo + WINDOW_BUFFER;
        let hi = if in_tail { iv.hi } else { iv.hi - WINDOW_BUFFER };
        if lo < hi {
            windows.push(GapWindow { lo, hi, gap: g, in_tail });
        }
    }
    let mut candidates = Vec::new();
    let mut rejected = Vec::new();
    for w in &windows {
        for (omega, shape) in block.eigenpairs_in(w.lo, w.hi)? {
            let participation = participation_ratio(&shape);
            if participation < PR_LOCALIZED {
                let boundary_ratio = block.boundary_ratio(&shape);
                candidates.push(GapCandidate {
                    omega,
                    participation,
                    boundary_ratio,
                    gap: w.gap,
                    in_tail: w.in_tail,
                    shape,
                });
            } else {
                rejected.push((omega, participation));
            }
        }
    }
    candidates.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    Ok(OracleReport { width, height, windows, candidates, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_block_mass_and_stiffness() {
        let spec = LatticeSpec::square(1, 1);
        let b = FiniteLattice::from_spec(&spec, 5, 5).unwrap();
        assert_eq!(b.node_count(), 25);
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(b.mass(x, y), 1.0);
            }
        }
        let k = b.stiffness();
        // Interior node: degree 4, four -1 couplings.
        let c = b.node_index(2, 2);
        assert_eq!(k.get(c, c), 4.0);
        assert_eq!(k.get(c, b.node_index(3, 2)), -1.0);
        assert_eq!(k.get(c, b.node_index(2, 1)), -1.0);
        // Corner keeps full diagonal but has only two interior couplings.
        let corner = b.node_index(0, 0);
        assert_eq!(k.get(corner, corner), 4.0);
        assert_eq!(k.get(corner, b.node_index(1, 0)), -1.0);
        assert_eq!(k.get(corner, b.node_index(0, 1)), -1.0);
        let row_sum: f64 = (0..25).map(|j| k.get(corner, j)).sum();
        assert_eq!(row_sum, 2.0);
    }

    #[test]
    fn defect_layers_land_on_centered_nodes() {
        let spec = LatticeSpec::uniform_with_defects(-0.9, 0.25).unwrap();
        let b = FiniteLattice::from_spec(&spec, 61, 61).unwrap();
        assert_eq!(b.strip_rows(), (30, 31));
        assert_eq!(b.point_origin(), (30, 30));
        assert_eq!(b.mass(0, 0), 1.0);
        assert_eq!(b.mass(10, 30), 1.0 + (-0.9));
        assert_eq!(b.mass(30, 30), 1.0 + (-0.9) + 0.25);
    }

    #[test]
    fn clamped_uniform_block_matches_product_spectrum() {
        // Clamped w x h uniform block separates into two chains:
        // mu = 4 - 2 cos(i pi/(w+1)) - 2 cos(j pi/(h+1)).
        let spec = LatticeSpec::square(1, 1);
        let b = FiniteLattice::from_spec(&spec, 7, 5).unwrap();
        let mut want: Vec<f64> = Vec::new();
        for i in 1..=7usize {
            for j in 1..=5usize {
                let mu = 4.0
                    - 2.0 * (i as f64 * std::f64::consts::PI / 8.0).cos()
                    - 2.0 * (j as f64 * std::f64::consts::PI / 6.0).cos();
                want.push(mu.sqrt());
            }
        }
        want.sort_by(f64::total_cmp);
        let got = b.eigenpairs_in(1e-6, 3.0).unwrap();
        assert_eq!(got.len(), want.len());
        for ((omega, _), w) in got.iter().zip(&want) {
            assert!((omega - w).abs() <= 1e-8, "{omega} vs {w}");
        }
    }

    #[test]
    fn supercell_block_matches_primitive_block() {
        // The same physical block described with a 2x2 supercell must give
        // identical stiffness and masses.
        let spec1 = LatticeSpec::square(1, 1);
        let spec2 = LatticeSpec::square(2, 2);
        let b1 = FiniteLattice::from_spec(&spec1, 8, 8).unwrap();
        let b2 = FiniteLattice::from_spec(&spec2, 8, 8).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(b1.mass(x, y), b2.mass(x, y));
            }
        }
        for i in 0..64 {
            for j in 0..64 {
                assert_eq!(b1.stiffness().get(i, j), b2.stiffness().get(i, j), "({i}, {j})");
            }
        }
    }

    #[test]
    fn participation_limits() {
        let spike = {
            let mut v = vec![0.0; 100];
            v[3] = 1.0;
            v
        };
        assert!((participation_ratio(&spike) - 0.01).abs() <= 1e-12);
        let flat = vec![0.3; 100];
        assert!((participation_ratio(&flat) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn oracle_refuses_small_blocks() {
        let spec = LatticeSpec::uniform_with_defects(-0.9, 0.1).unwrap();
        assert!(matches!(finite_oracle(&spec, 31, 61), Err(Error::Domain(_))));
    }

    #[test]
    fn uniform_block_has_no_frequency_above_band_top() {
        // Rayleigh quotients of the clamped block sit inside the numerical
        // range of the infinite operator, which tops out at sqrt(8).
        let spec = LatticeSpec::square(1, 1);
        let b = FiniteLattice::from_spec(&spec, 61, 61).unwrap();
        let top = 8.0f64.sqrt() + 1e-6;
        assert_eq!(b.count_below(top).unwrap(), b.node_count());
    }
}
