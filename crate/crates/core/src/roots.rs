//! Scalar root finding: exhaustive sign scans over an interval followed by
//! bracketed bisection. No derivatives are assumed; the determinants we chase
//! are smooth but can steepen arbitrarily near spectral edges.

use crate::error::{Error, Result};

/// Bisection on a bracket `[lo, hi]` with `f(lo) * f(hi) < 0`, to absolute
/// width `xtol`. Returns the midpoint of the final bracket.
pub fn bisect<F>(f: &F, mut lo: f64, mut hi: f64, mut flo: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if flo == 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid)?;
        if fmid == 0.0 {
            return Ok(mid);
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All roots of `f` in `[lo, hi]` found by sign changes on a uniform grid of
/// `n0` cells, doubled until the root count and locations are stable, then
/// bisected to `xtol`. Roots of even multiplicity (no sign change) are
/// invisible to this scan by design; the determinants handled here cross
/// zero transversally.
pub fn scan_roots<F>(f: &F, lo: f64, hi: f64, n0: usize, xtol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    if hi <= lo {
        return Ok(Vec::new());
    }
    let roots_at = |n: usize| -> Result<Vec<f64>> {
        let h = (hi - lo) / n as f64;
        let mut prev_x = lo;
        let mut prev_f = f(lo)?;
        let mut roots = Vec::new();
        for j in 1..=n {
            let x = if j == n { hi } else { lo + j as f64 * h };
            let fx = f(x)?;
            if prev_f == 0.0 {
                roots.push(prev_x);
            } else if fx != 0.0 && (fx > 0.0) != (prev_f > 0.0) {
                roots.push(bisect(f, prev_x, x, prev_f, xtol)?);
            }
            prev_x = x;
            prev_f = fx;
        }
        if prev_f == 0.0 {
            roots.push(prev_x);
        }
        Ok(roots)
    };

    let mut n = n0.max(8);
    let mut prev = roots_at(n)?;
    let cap = n * 64;
    loop {
        n *= 2;
        let cur = roots_at(n)?;
        let stable = cur.len() == prev.len()
            && cur.iter().zip(&prev).all(|(a, b)| (a - b).abs() <= 100.0 * xtol);
        if stable {
            return Ok(cur);
        }
        if n >= cap {
            return Err(Error::NonConvergence {
                what: "root scan",
                achieved: cur.len() as f64,
                target: prev.len() as f64,
                detail: format!("root count still changing at {n} grid cells on [{lo}, {hi}]"),
            });
        }
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_all_sine_roots() {
        let f = |x: f64| Ok((3.0 * x).sin());
        let roots = scan_roots(&f, 0.1, 3.0, 16, 1e-12).unwrap();
        let expect = [std::f64::consts::PI / 3.0, 2.0 * std::f64::consts::PI / 3.0];
        assert_eq!(roots.len(), 2);
        for (r, e) in roots.iter().zip(expect) {
            assert!((r - e).abs() < 1e-10, "{r} vs {e}");
        }
    }

    #[test]
    fn empty_interval_and_no_roots() {
        let f = |x: f64| Ok(x * x + 1.0);
        assert!(scan_roots(&f, 2.0, 1.0, 16, 1e-10).unwrap().is_empty());
        assert!(scan_roots(&f, -5.0, 5.0, 16, 1e-10).unwrap().is_empty());
    }

    #[test]
    fn bisect_reaches_requested_width() {
        let f = |x: f64| Ok(x * x - 2.0);
        let r = bisect(&f, 0.0, 2.0, -2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }
}
