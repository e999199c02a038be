//! Banded symmetric eigensolver for finite lattice sections.
//!
//! A clamped `w x h` grid gives a stiffness matrix with bandwidth `w` in
//! row-major node order; dense factorizations would cost `O((wh)^3)` while
//! the band structure brings every step down to `O(wh * w^2)`. The pieces:
//! symmetric banded storage, an LDL^T pass that counts eigenvalues below a
//! shift (Sylvester inertia), bisection on those counts to isolate
//! generalized eigenvalues `K u = mu M u` with diagonal `M`, and inverse
//! iteration through a partially pivoted banded LU for the eigenvectors.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relative sizes of the shift jitters tried when an LU factorization hits
/// an exact zero pivot (the shift sits on an eigenvalue).
const JITTERS: [f64; 4] = [0.0, 1e-12, 8e-12, 6.4e-11];

/// Inverse-iteration residual target, relative to the operator scale.
const EIGVEC_RES: f64 = 1e-9;

/// Symmetric banded matrix: `n x n`, entries stored for `|i - j| <= bw`.
/// Lower-triangle column storage: `data[j * (bw + 1) + d]` holds `A[j+d, j]`.
#[derive(Clone, Debug)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.data[lo * (self.bw + 1) + d]
        }
    }

    /// Adds `v` at `(i, j)` (and by symmetry at `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        self.data[lo * (self.bw + 1) + d] += v;
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        let ld = self.bw + 1;
        for j in 0..self.n {
            y[j] += self.data[j * ld] * x[j];
            let imax = (j + self.bw).min(self.n - 1);
            for i in (j + 1)..=imax {
                let a = self.data[j * ld + (i - j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
    }

    fn abs_max(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// In-place LDL^T without pivoting; returns the count of negative pivots.
/// Pivots smaller than `pivmin` are clamped to `-pivmin`: a tiny pivot
/// means the shift sits on an eigenvalue of a leading submatrix, and either
/// sign choice is consistent with a count taken infinitesimally to one
/// side. A clamped pivot injects one huge trailing update, which the next
/// pivot absorbs as a large value of the opposite sign, so the elimination
/// self-heals and any miscount stays confined to eigenvalues within
/// roundoff of the shift. That blur is far below the bisection widths used
/// on top of these counts.
fn ldlt_inertia(bands: &mut [f64], n: usize, bw: usize, pivmin: f64) -> usize {
    let ld = bw + 1;
    let mut below = 0usize;
    for j in 0..n {
        let mut dj = bands[j * ld];
        if dj.abs() < pivmin {
            dj = -pivmin;
        }
        if dj < 0.0 {
            below += 1;
        }
        let jmax = (j + bw).min(n - 1);
        for t in (j + 1)..=jmax {
            let l_tj = bands[j * ld + (t - j)] / dj;
            if l_tj != 0.0 {
                for i in t..=jmax {
                    bands[t * ld + (i - t)] -= l_tj * bands[j * ld + (i - j)];
                }
            }
        }
    }
    below
}

/// Generalized symmetric pencil `(K, M)` with diagonal positive `M`.
pub struct GenEig<'a> {
    k: &'a SymBanded,
    m: &'a [f64],
    scale: f64,
}

impl<'a> GenEig<'a> {
    pub fn new(k: &'a SymBanded, m: &'a [f64]) -> Result<Self> {
        if m.len() != k.n {
            return Err(Error::Domain(format!(
                "mass vector has {} entries, matrix is {} x {}",
                m.len(),
                k.n,
                k.n
            )));
        }
        if let Some(bad) = m.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::Domain(format!("mass {bad} must be positive")));
        }
        let m_max = m.iter().fold(0.0f64, |a, &b| a.max(b));
        Ok(GenEig { k, m, scale: k.abs_max().max(m_max).max(1.0) })
    }

    fn shifted_bands(&self, mu: f64) -> Vec<f64> {
        let ld = self.k.bw + 1;
        let mut bands = self.k.data.clone();
        for j in 0..self.k.n {
            bands[j * ld] -= mu * self.m[j];
        }
        bands
    }

    /// Number of eigenvalues of `K u = mu M u` strictly below `mu`, by
    /// Sylvester's law applied to `K - mu M`.
    pub fn count_below(&self, mu: f64) -> usize {
        let pivmin = 1e-30 * self.scale;
        let mut bands = self.shifted_bands(mu);
        ldlt_inertia(&mut bands, self.k.n, self.k.bw, pivmin)
    }

    /// All eigenvalues in `(lo, hi)`, each refined until its enclosing
    /// bracket is narrower than `xtol * max(1, |mu|)`. Multiple eigenvalues
    /// are reported once per multiplicity. Bound order is the caller's
    /// contract; counts at the bounds define which eigenvalues are inside.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64, xtol: f64) -> Result<Vec<f64>> {
        if !(lo < hi) {
            return Err(Error::Domain(format!("empty eigenvalue window [{lo}, {hi}]")));
        }
        let c_lo = self.count_below(lo);
        let c_hi = self.count_below(hi);
        let mut out = Vec::with_capacity(c_hi.saturating_sub(c_lo));
        let mut stack = vec![(lo, hi, c_lo, c_hi)];
        while let Some((a, b, ca, cb)) = stack.pop() {
            let k = cb.saturating_sub(ca);
            if k == 0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            if b - a <= xtol * mid.abs().max(1.0) {
                for _ in 0..k {
                    out.push(mid);
                }
                continue;
            }
            let cm = self.count_below(mid);
            stack.push((a, mid, ca, cm));
            stack.push((mid, b, cm, cb));
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    /// Eigenvector for the eigenvalue nearest `mu` (which inverse iteration
    /// locks onto when `mu` comes out of `eigenvalues_in`). Returns the
    /// 2-normalized vector and its Rayleigh quotient.
    pub fn eigenvector(&self, mu: f64) -> Result<(Vec<f64>, f64)> {
        let n = self.k.n;
        let mut rng = ChaCha8Rng::seed_from_u64(0x1a77_1ce5);
        let mut lu = None;
        for jitter in JITTERS {
            match BandedLu::factor_shifted(self.k, self.m, mu + jitter * self.scale) {
                Ok(f) => {
                    lu = Some(f);
                    break;
                }
                Err(Error::Singular(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let Some(lu) = lu else {
            return Err(Error::Singular(format!(
                "factoring K - mu M for inverse iteration at mu={mu}"
            )));
        };
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut ky = vec![0.0; n];
        for _ in 0..50 {
            let mut y: Vec<f64> = x.iter().zip(self.m).map(|(&xi, &mi)| xi * mi).collect();
            lu.solve_in_place(&mut y);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Singular(format!("inverse iteration collapsed at mu={mu}")));
            }
            for v in &mut y {
                *v /= norm;
            }
            self.k.matvec(&y, &mut ky);
            let kq: f64 = y.iter().zip(&ky).map(|(a, b)| a * b).sum();
            let mq: f64 = y.iter().zip(self.m).map(|(&a, &m)| a * a * m).sum();
            let rho = kq / mq;
            let res: f64 = ky
                .iter()
                .zip(&y)
                .zip(self.m)
                .map(|((&k, &v), &m)| {
                    let r = k - rho * m * v;
                    r * r
                })
                .sum::<f64>()
                .sqrt();
            if res <= EIGVEC_RES * self.scale * (1.0 + rho.abs()) {
                return Ok((y, rho));
            }
            x = y;
        }
        Err(Error::NonConvergence {
            what: "inverse iteration",
            achieved: f64::NAN,
            target: EIGVEC_RES,
            detail: format!("no eigenvector after 50 iterations at mu={mu}"),
        })
    }
}

/// Banded LU with partial pivoting. Lower bandwidth `p`, upper bandwidth
/// `q` before pivoting; row interchanges widen the upper band to `p + q`,
/// so storage holds `2p + q + 1` diagonals per column.
pub struct BandedLu {
    n: usize,
    p: usize,
    /// Upper bandwidth after fill-in, `p + q`.
    kv: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Factors `K - mu * diag(m)` for symmetric banded `K`.
    pub fn factor_shifted(k: &SymBanded, m: &[f64], mu: f64) -> Result<Self> {
        let bw = k.bw;
        Self::factor(k.n, bw, bw, |i, j| {
            let v = k.get(i, j);
            if i == j {
                v - mu * m[i]
            } else {
                v
            }
        })
    }

    /// Factors the banded matrix given entrywise by `entry` (queried only
    /// inside the band).
    pub fn factor(
        n: usize,
        p: usize,
        q: usize,
        entry: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let kv = p + q;
        let ldab = kv + p + 1;
        let mut ab = vec![0.0; ldab * n];
        for j in 0..n {
            let i_lo = j.saturating_sub(q);
            let i_hi = (j + p).min(n - 1);
            for i in i_lo..=i_hi {
                ab[j * ldab + (kv + i - j)] = entry(i, j);
            }
        }
        let mut piv = vec![0usize; n];
        for j in 0..n {
            let km = (n - 1 - j).min(p);
            let mut best_t = 0usize;
            let mut best = ab[j * ldab + kv].abs();
            for t in 1..=km {
                let v = ab[j * ldab + kv + t].abs();
                if v > best {
                    best = v;
                    best_t = t;
                }
            }
            piv[j] = j + best_t;
            if best == 0.0 {
                return Err(Error::Singular(format!("banded LU pivot at column {j} is zero")));
            }
            if best_t != 0 {
                // Row j+t has no entries beyond column j + kv, so the swap
                // stays inside the widened band.
                let c_hi = (j + kv).min(n - 1);
                for c in j..=c_hi {
                    let r1 = c * ldab + (kv + j - c);
                    let r2 = r1 + best_t;
                    ab.swap(r1, r2);
                }
            }
            let pivot = ab[j * ldab + kv];
            for t in 1..=km {
                ab[j * ldab + kv + t] /= pivot;
            }
            let c_hi = (j + kv).min(n - 1);
            for c in (j + 1)..=c_hi {
                let u = ab[c * ldab + (kv + j - c)];
                if u != 0.0 {
                    for t in 1..=km {
                        ab[c * ldab + (kv + j - c) + t] -= ab[j * ldab + kv + t] * u;
                    }
                }
            }
        }
        Ok(BandedLu { n, p, kv, ab, piv })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let ldab = self.kv + self.p + 1;
        for j in 0..self.n {
            if self.piv[j] != j {
                b.swap(j, self.piv[j]);
            }
            let km = (self.n - 1 - j).min(self.p);
            let bj = b[j];
            if bj != 0.0 {
                for t in 1..=km {
                    b[j + t] -= self.ab[j * ldab + self.kv + t] * bj;
                }
            }
        }
        for j in (0..self.n).rev() {
            b[j] /= self.ab[j * ldab + self.kv];
            let bj = b[j];
            if bj != 0.0 {
                let i_lo = j.saturating_sub(self.kv);
                for i in i_lo..j {
                    b[i] -= self.ab[j * ldab + (self.kv + i - j)] * bj;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::PI;

    fn random_sym_banded(rng: &mut ChaCha8Rng, n: usize, bw: usize) -> SymBanded {
        let mut a = SymBanded::zeros(n, bw);
        for j in 0..n {
            for i in j..=(j + bw).min(n - 1) {
                a.add(i, j, rng.random::<f64>() * 2.0 - 1.0);
            }
        }
        a
    }

    fn to_dense(a: &SymBanded) -> DMatrix<f64> {
        DMatrix::from_fn(a.n(), a.n(), |i, j| a.get(i, j))
    }

    /// Clamped 1D chain Laplacian: tridiagonal (-1, 2, -1).
    fn chain(n: usize) -> SymBanded {
        let mut k = SymBanded::zeros(n, 1);
        for i in 0..n {
            k.add(i, i, 2.0);
            if i + 1 < n {
                k.add(i + 1, i, -1.0);
            }
        }
        k
    }

    #[test]
    fn banded_lu_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, bw) in &[(12usize, 2usize), (40, 5), (25, 24)] {
            let a = random_sym_banded(&mut rng, n, bw);
            let dense = to_dense(&a);
            let rhs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let lu = BandedLu::factor(n, bw, bw, |i, j| a.get(i, j)).unwrap();
            let mut x = rhs.clone();
            lu.solve_in_place(&mut x);
            let x_dense = dense.clone().lu().solve(&DVector::from_row_slice(&rhs)).unwrap();
            for i in 0..n {
                assert!(
                    (x[i] - x_dense[i]).abs() <= 1e-9 * (1.0 + x_dense[i].abs()),
                    "n={n} bw={bw} i={i}: {} vs {}",
                    x[i],
                    x_dense[i]
                );
            }
        }
    }

    #[test]
    fn banded_lu_pivots_through_small_diagonal() {
        // Leading diagonal entry forces an interchange immediately.
        let n = 6;
        let mut a = SymBanded::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, if i == 0 { 1e-18 } else { 1.0 });
            if i + 1 < n {
                a.add(i + 1, i, 1.0);
            }
        }
        let lu = BandedLu::factor(n, 2, 2, |i, j| a.get(i, j)).unwrap();
        let dense = to_dense(&a);
        let rhs: Vec<f64> = (1..=n).map(|v| v as f64).collect();
        let mut x = rhs.clone();
        lu.solve_in_place(&mut x);
        let want = dense.lu().solve(&DVector::from_row_slice(&rhs)).unwrap();
        for i in 0..n {
            assert!((x[i] - want[i]).abs() <= 1e-9 * (1.0 + want[i].abs()));
        }
    }

    #[test]
    fn inertia_matches_dense_eigenvalue_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 30;
        let a = random_sym_banded(&mut rng, n, 4);
        let m: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
        let pencil = GenEig::new(&a, &m).unwrap();
        // Dense reference: eigenvalues of M^{-1/2} A M^{-1/2}.
        let scaled = DMatrix::from_fn(n, n, |i, j| a.get(i, j) / (m[i] * m[j]).sqrt());
        let mut eigs: Vec<f64> = scaled.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        for mu in [-3.0, -1.0, -0.1, 0.0, 0.3, 1.5, 4.0] {
            let want = eigs.iter().filter(|&&e| e < mu).count();
            assert_eq!(pencil.count_below(mu), want, "mu={mu}");
        }
    }

    #[test]
    fn sturm_bisection_matches_chain_spectrum() {
        // Eigenvalues of the clamped chain are 2 - 2 cos(j pi / (n+1)).
        let n = 50;
        let k = chain(n);
        let m = vec![1.0; n];
        let pencil = GenEig::new(&k, &m).unwrap();
        let got = pencil.eigenvalues_in(0.0, 4.1, 1e-12).unwrap();
        assert_eq!(got.len(), n);
        for (j, &mu) in got.iter().enumerate() {
            let want = 2.0 - 2.0 * ((j + 1) as f64 * PI / (n as f64 + 1.0)).cos();
            assert!((mu - want).abs() <= 1e-10, "j={j}: {mu} vs {want}");
        }
    }

    #[test]
    fn window_extraction_counts_correctly() {
        let n = 50;
        let k = chain(n);
        let m = vec![1.0; n];
        let pencil = GenEig::new(&k, &m).unwrap();
        let all: Vec<f64> =
            (1..=n).map(|j| 2.0 - 2.0 * (j as f64 * PI / (n as f64 + 1.0)).cos()).collect();
        // Bounds chosen between chain eigenvalues; a bound exactly on an
        // eigenvalue would leave strict-inequality membership ambiguous.
        let (lo, hi) = (1.02, 2.47);
        let want: Vec<f64> = all.iter().copied().filter(|&e| lo < e && e < hi).collect();
        let got = pencil.eigenvalues_in(lo, hi, 1e-12).unwrap();
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-10);
        }
    }

    #[test]
    fn inverse_iteration_recovers_chain_mode() {
        let n = 40;
        let k = chain(n);
        let m = vec![1.0; n];
        let pencil = GenEig::new(&k, &m).unwrap();
        let j = 7usize;
        let mu = 2.0 - 2.0 * (j as f64 * PI / (n as f64 + 1.0)).cos();
        let (v, rho) = pencil.eigenvector(mu).unwrap();
        assert!((rho - mu).abs() <= 1e-10);
        // Exact mode is sin(j pi i / (n+1)) up to sign and scale.
        let exact: Vec<f64> =
            (1..=n).map(|i| (j as f64 * PI * i as f64 / (n as f64 + 1.0)).sin()).collect();
        let dot: f64 = v.iter().zip(&exact).map(|(a, b)| a * b).sum();
        let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ne: f64 = exact.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(dot.abs() / (nv * ne) >= 1.0 - 1e-10);
    }

    #[test]
    fn generalized_masses_shift_the_spectrum() {
        // Heavier masses must lower every generalized eigenvalue.
        let n = 30;
        let k = chain(n);
        let light = vec![1.0; n];
        let heavy = vec![2.5; n];
        let p_light = GenEig::new(&k, &light).unwrap();
        let p_heavy = GenEig::new(&k, &heavy).unwrap();
        let el = p_light.eigenvalues_in(0.0, 4.1, 1e-12).unwrap();
        let eh = p_heavy.eigenvalues_in(0.0, 4.1, 1e-12).unwrap();
        assert_eq!(el.len(), n);
        assert_eq!(eh.len(), n);
        for (a, b) in el.iter().zip(&eh) {
            assert!((b * 2.5 - a).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}
