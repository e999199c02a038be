//! Quadrature for the two averaging operations that occur everywhere here:
//! means of smooth periodic functions over `[-pi, pi]`, and one proper
//! integral on a finite interval whose integrand is awkward at an endpoint.
//!
//! Periodic means use the trapezoid rule on a uniform grid with doubling:
//! for a periodic integrand the rule converges spectrally, and doubling
//! reuses all previous samples (`mean_2n = (mean_n + mean_of_midpoints)/2`).
//! The refinement stops when one doubling moves the mean by less than the
//! requested tolerance; that difference is reported as the error estimate.
//!
//! The endpoint-sensitive integral uses the composite midpoint rule (which
//! never evaluates the endpoints) with Richardson extrapolation in h^2.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::par;

/// Values a quadrature can average: needs a zero of matching shape, axpy-style
/// accumulation and a max-norm for convergence checks.
pub trait QuadSample: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn accumulate(&mut self, other: &Self);
    fn scale(&mut self, s: f64);
    fn max_abs_diff(&self, other: &Self) -> f64;
    fn max_abs(&self) -> f64;
}

impl QuadSample for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn scale(&mut self, s: f64) {
        *self *= s;
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl QuadSample for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::ZERO
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn scale(&mut self, s: f64) {
        *self *= s;
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
}

impl QuadSample for DMatrix<Complex64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn accumulate(&mut self, other: &Self) {
        *self += other;
    }
    fn scale(&mut self, s: f64) {
        *self *= Complex64::new(s, 0.0);
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct MeanResult<T> {
    pub value: T,
    /// Change produced by the final doubling; an upper bound on the error of
    /// the previous iterate, hence conservative for the returned one.
    pub est_error: f64,
    pub samples: usize,
}

/// Mean of `f` over one period `[-pi, pi]`, refined by grid doubling until
/// one doubling changes the result by at most `tol * max(1, |mean|)`; the
/// relative scaling keeps the stop reachable when the integrand blows up
/// near a spectral edge and the mean is large. `cap` bounds the number of
/// sample points.
pub fn periodic_mean<T, F>(f: F, tol: f64, cap: usize) -> Result<MeanResult<T>>
where
    T: QuadSample,
    F: Fn(f64) -> Result<T> + Sync + Send,
{
    const N0: usize = 32;
    let mean_of = |points: &[f64]| -> Result<T> {
        let values = par::try_map(points, |&x| f(x))?;
        let mut acc = values[0].zero_like();
        for v in &values {
            acc.accumulate(v);
        }
        acc.scale(1.0 / points.len() as f64);
        Ok(acc)
    };

    let mut n = N0;
    let base: Vec<f64> = (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect();
    let mut mean = mean_of(&base)?;
    loop {
        let mids: Vec<f64> = (0..n).map(|j| -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64).collect();
        let mid_mean = mean_of(&mids)?;
        let mut next = mean.clone();
        next.accumulate(&mid_mean);
        next.scale(0.5);
        let diff = next.max_abs_diff(&mean);
        n *= 2;
        mean = next;
        if diff <= tol * mean.max_abs().max(1.0) {
            return Ok(MeanResult { value: mean, est_error: diff, samples: n });
        }
        if n >= cap {
            return Err(Error::NonConvergence {
                what: "periodic mean",
                achieved: diff,
                target: tol,
                detail: format!("{n} sample points"),
            });
        }
    }
}

/// Default sample cap for periodic means. Generous: refinement is only this
/// deep when the frequency sits close to a spectral edge.
pub const MEAN_CAP: usize = 1 << 20;

/// Integral of `f` over `[a, b]` by the composite midpoint rule with
/// Richardson extrapolation. Panel counts double per level; extrapolation
/// assumes an even-power error expansion, which holds for integrands smooth
/// in the open interval, and the endpoints are never evaluated.
pub fn midpoint_integral<F>(f: F, a: f64, b: f64, tol: f64) -> Result<MeanResult<f64>>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    const MAX_LEVEL: usize = 22;
    const MAX_COLUMN: usize = 8;
    let h0 = b - a;
    let midpoint_sum = |panels: usize| -> f64 {
        let h = h0 / panels as f64;
        let xs: Vec<f64> = (0..panels).map(|j| a + (j as f64 + 0.5) * h).collect();
        let vals = par::map(&xs, |&x| f(x));
        vals.iter().sum::<f64>() * h
    };

    let mut rows: Vec<Vec<f64>> = vec![vec![midpoint_sum(1)]];
    for level in 1..=MAX_LEVEL {
        let mut row = vec![midpoint_sum(1 << level)];
        for j in 1..=level.min(MAX_COLUMN) {
            let factor = 4f64.powi(j as i32);
            let v = (factor * row[j - 1] - rows[level - 1][j - 1]) / (factor - 1.0);
            row.push(v);
        }
        let best = *row.last().unwrap();
        let prev_best = *rows[level - 1].last().unwrap();
        let diff = (best - prev_best).abs();
        rows.push(row);
        if level >= 3 && diff <= tol {
            return Ok(MeanResult {
                value: best,
                est_error: diff,
                samples: (1 << (level + 1)) - 1,
            });
        }
    }
    let last = rows.last().unwrap();
    let prev = &rows[rows.len() - 2];
    Err(Error::NonConvergence {
        what: "midpoint integral",
        achieved: (last.last().unwrap() - prev.last().unwrap()).abs(),
        target: tol,
        detail: format!("{} refinement levels", MAX_LEVEL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn periodic_mean_is_spectrally_accurate() {
        // mean of 1/(2 + cos k) over a period is 1/sqrt(3)
        let r = periodic_mean(|k: f64| Ok(1.0 / (2.0 + k.cos())), 1e-13, MEAN_CAP).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert!(r.samples <= 512, "needed {} samples", r.samples);
    }

    #[test]
    fn periodic_mean_complex_and_matrix() {
        let r =
            periodic_mean(|k: f64| Ok(Complex64::new(k.cos() * k.cos(), k.sin())), 1e-13, MEAN_CAP)
                .unwrap();
        assert_relative_eq!(r.value.re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.value.im, 0.0, epsilon = 1e-12);

        let m = periodic_mean(
            |k: f64| {
                Ok(DMatrix::from_fn(2, 2, |i, j| {
                    Complex64::new(((i + j) as f64 + k.cos()).cos(), 0.0)
                }))
            },
            1e-12,
            MEAN_CAP,
        )
        .unwrap();
        // diagonal of a Bessel-type mean; just check hermitian symmetry of shape
        assert_eq!(m.value.nrows(), 2);
        assert!(m.est_error <= 1e-12);
    }

    #[test]
    fn periodic_mean_reports_nonconvergence() {
        // |sin| has a kink, so the trapezoid mean converges only at O(1/n^2)
        // and cannot meet 1e-12 within the 1024-point cap.
        let r = periodic_mean(|k: f64| Ok(k.sin().abs()), 1e-12, 1 << 10);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn midpoint_handles_endpoint_kinks() {
        // integral of sqrt(1 - x) on [0, 1]: derivative blows up at b
        let r = midpoint_integral(|x| (1.0 - x).sqrt(), 0.0, 1.0, 1e-7).unwrap();
        assert_relative_eq!(r.value, 2.0 / 3.0, epsilon = 1e-6);
        // and an analytic one converges tightly
        let s = midpoint_integral(|x| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(s.value, 1f64.exp() - 1.0, epsilon = 1e-12);
    }
}
