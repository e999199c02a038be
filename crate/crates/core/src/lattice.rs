//! Unit cell description and Bloch reduction.
//!
//! The model is a square-periodic arrangement of point masses joined by unit
//! springs. A cell holds `n1 * n2` nodes on an `n1 x n2` grid; node `(i1, i2)`
//! sits at index `i1 + i2 * n1`. Displacements satisfy
//!
//! ```text
//! sum_{n' ~ n} u_{n'} - deg(n) u_n = -omega^2 M_n u_n
//! ```
//!
//! with every node required to have degree 4 (square coordination). Masses
//! come in three layers: a periodic background `M`, a strip perturbation
//! `M1` repeated along the first axis only, and a point perturbation `M2`
//! confined to a single cell. Perturbed masses must stay positive layer by
//! layer: `M > 0`, `M + M1 > 0`, `M + M1 + M2 > 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spring between node `a` in the reference cell and node `b` in the cell
/// displaced by `offset` (in cell units, components in {-1, 0, 1}).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub offset: [i32; 2],
}

impl Link {
    /// Canonical orientation so that a link and its reverse compare equal.
    fn canonical(&self) -> (usize, usize, [i32; 2]) {
        let fwd = (self.a, self.b, self.offset);
        let rev = (self.b, self.a, [-self.offset[0], -self.offset[1]]);
        fwd.min(rev)
    }
}

/// Complete description of the periodic lattice with its two defect layers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeSpec {
    n1: usize,
    n2: usize,
    masses: Vec<f64>,
    strip: Vec<f64>,
    point: Vec<f64>,
    links: Vec<Link>,
}

impl LatticeSpec {
    /// Builds and validates a spec from raw parts. `masses`, `strip` and
    /// `point` are indexed node-major (`i1 + i2 * n1`).
    pub fn new(
        n1: usize,
        n2: usize,
        masses: Vec<f64>,
        strip: Vec<f64>,
        point: Vec<f64>,
        links: Vec<Link>,
    ) -> Result<Self> {
        let dim = n1 * n2;
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidLattice("cell dimensions must be positive".into()));
        }
        for (name, v) in [("masses", &masses), ("strip", &strip), ("point", &point)] {
            if v.len() != dim {
                return Err(Error::InvalidLattice(format!(
                    "{name} has {} entries, cell has {dim} nodes",
                    v.len()
                )));
            }
        }
        for n in 0..dim {
            if masses[n] <= 0.0 {
                return Err(Error::InvalidLattice(format!(
                    "background mass at node {n} is {} (must be > 0)",
                    masses[n]
                )));
            }
            if masses[n] + strip[n] <= 0.0 {
                return Err(Error::InvalidLattice(format!(
                    "strip-perturbed mass at node {n} is {} (must be > 0)",
                    masses[n] + strip[n]
                )));
            }
            if masses[n] + strip[n] + point[n] <= 0.0 {
                return Err(Error::InvalidLattice(format!(
                    "fully perturbed mass at node {n} is {} (must be > 0)",
                    masses[n] + strip[n] + point[n]
                )));
            }
        }
        let mut degree = vec![0usize; dim];
        let mut seen = std::collections::BTreeSet::new();
        for link in &links {
            if link.a >= dim || link.b >= dim {
                return Err(Error::InvalidLattice(format!(
                    "link ({}, {}) references a node outside the cell",
                    link.a, link.b
                )));
            }
            if link.offset.iter().any(|c| c.abs() > 1) {
                return Err(Error::InvalidLattice(format!(
                    "link offset {:?} exceeds one cell",
                    link.offset
                )));
            }
            if link.a == link.b && link.offset == [0, 0] {
                return Err(Error::InvalidLattice(format!(
                    "node {} linked to itself within the cell",
                    link.a
                )));
            }
            if !seen.insert(link.canonical()) {
                return Err(Error::InvalidLattice(format!(
                    "duplicate link ({}, {}, {:?})",
                    link.a, link.b, link.offset
                )));
            }
            degree[link.a] += 1;
            degree[link.b] += 1;
        }
        for (n, d) in degree.iter().enumerate() {
            if *d != 4 {
                return Err(Error::InvalidLattice(format!(
                    "node {n} has degree {d}, square coordination needs 4"
                )));
            }
        }
        Ok(LatticeSpec { n1, n2, masses, strip, point, links })
    }

    /// Square lattice supercell: `n1 x n2` nodes, nearest-neighbour springs,
    /// unit background masses, no defects.
    pub fn square(n1: usize, n2: usize) -> Self {
        let dim = n1 * n2;
        let idx = |i1: usize, i2: usize| i1 + i2 * n1;
        let mut links = Vec::with_capacity(2 * dim);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                if i1 + 1 < n1 {
                    links.push(Link { a: idx(i1, i2), b: idx(i1 + 1, i2), offset: [0, 0] });
                } else {
                    links.push(Link { a: idx(i1, i2), b: idx(0, i2), offset: [1, 0] });
                }
                if i2 + 1 < n2 {
                    links.push(Link { a: idx(i1, i2), b: idx(i1, i2 + 1), offset: [0, 0] });
                } else {
                    links.push(Link { a: idx(i1, i2), b: idx(i1, 0), offset: [0, 1] });
                }
            }
        }
        LatticeSpec::new(n1, n2, vec![1.0; dim], vec![0.0; dim], vec![0.0; dim], links)
            .expect("square lattice is always valid")
    }

    /// The single-node cell with background mass 1, strip perturbation `m1`
    /// and point perturbation `m2`. This is the workhorse configuration with
    /// closed-form reference spectra.
    pub fn uniform_with_defects(m1: f64, m2: f64) -> Result<Self> {
        let base = LatticeSpec::square(1, 1);
        LatticeSpec::new(1, 1, base.masses, vec![m1], vec![m2], base.links)
    }

    pub fn cell_size(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn dim(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn node_index(&self, i1: usize, i2: usize) -> usize {
        debug_assert!(i1 < self.n1 && i2 < self.n2);
        i1 + i2 * self.n1
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn strip(&self) -> &[f64] {
        &self.strip
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn with_strip(mut self, strip: Vec<f64>) -> Result<Self> {
        self.strip = strip;
        LatticeSpec::new(self.n1, self.n2, self.masses, self.strip, self.point, self.links)
    }

    pub fn with_point(mut self, point: Vec<f64>) -> Result<Self> {
        self.point = point;
        LatticeSpec::new(self.n1, self.n2, self.masses, self.strip, self.point, self.links)
    }

    /// Hex SHA-256 of the canonical JSON form. Stamped into output metadata
    /// so result files are traceable to the exact lattice that produced them.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("lattice serialization cannot fail");
        let out = Sha256::digest(json.as_bytes());
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// True if any strip entry is nonzero.
    pub fn has_strip(&self) -> bool {
        self.strip.iter().any(|&m| m != 0.0)
    }

    /// True if any point entry is nonzero.
    pub fn has_point(&self) -> bool {
        self.point.iter().any(|&m| m != 0.0)
    }

    /// Assembles the Bloch operators at wavevector `k` in `[-pi, pi]^2`.
    ///
    /// The hopping matrix gets `exp(-i k . c)` at `(a, b)` for a link from
    /// `a` to `b` crossing cell offset `c`, the conjugate at `(b, a)`, and
    /// `-4` on the diagonal; a self-wrapping link contributes
    /// `2 cos(k . c)`. The result is Hermitian by construction.
    pub fn assemble_bloch(&self, k: [f64; 2]) -> Result<BlochOperators> {
        for (axis, kj) in k.iter().enumerate() {
            if !kj.is_finite() || kj.abs() > std::f64::consts::PI + 1e-12 {
                return Err(Error::Domain(format!(
                    "wavevector component k{} = {kj} outside [-pi, pi]",
                    axis + 1
                )));
            }
        }
        let dim = self.dim();
        let mut l_hat = DMatrix::<Complex64>::zeros(dim, dim);
        for link in &self.links {
            let dot = k[0] * link.offset[0] as f64 + k[1] * link.offset[1] as f64;
            let phase = Complex64::new(dot.cos(), -dot.sin());
            l_hat[(link.a, link.b)] += phase;
            l_hat[(link.b, link.a)] += phase.conj();
        }
        for n in 0..dim {
            l_hat[(n, n)] -= Complex64::new(4.0, 0.0);
        }
        Ok(BlochOperators {
            k,
            l_hat,
            m_hat: DVector::from_row_slice(&self.masses),
            m1_hat: DVector::from_row_slice(&self.strip),
            m2_hat: DVector::from_row_slice(&self.point),
        })
    }
}

/// Bloch-reduced cell operators at a fixed wavevector.
#[derive(Clone, Debug)]
pub struct BlochOperators {
    pub k: [f64; 2],
    /// Hopping matrix minus `4 I`; negative semi-definite.
    pub l_hat: DMatrix<Complex64>,
    /// Background masses (diagonal).
    pub m_hat: DVector<f64>,
    /// Strip mass perturbation (diagonal).
    pub m1_hat: DVector<f64>,
    /// Point mass perturbation (diagonal).
    pub m2_hat: DVector<f64>,
}

impl BlochOperators {
    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let dim = self.l_hat.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let d = (self.l_hat[(i, j)] - self.l_hat[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `L_hat + omega^2 diag(m_hat)`, the operator whose kernel carries
    /// propagating waves.
    pub fn propagative_matrix(&self, omega: f64) -> DMatrix<Complex64> {
        let mut m = self.l_hat.clone();
        let w2 = omega * omega;
        for n in 0..m.nrows() {
            m[(n, n)] += Complex64::new(w2 * self.m_hat[n], 0.0);
        }
        m
    }
}
