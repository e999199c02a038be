//! Closed intervals on the frequency axis and finite unions of them.
//!
//! Spectra are reported as `IntervalSet`s: sorted, pairwise disjoint closed
//! intervals. Complements are taken within an explicit bracket since every
//! spectrum here lives on `[0, inf)`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Distance from `x` to the interval, zero if inside.
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

/// Sorted union of disjoint closed intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    /// Normalizes an arbitrary collection: sorts by lower end and merges
    /// intervals that overlap or touch.
    pub fn from_intervals(mut raw: Vec<Interval>) -> Self {
        raw.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut intervals: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match intervals.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    last.hi = last.hi.max(iv.hi);
                }
                _ => intervals.push(iv),
            }
        }
        IntervalSet { intervals }
    }

    pub fn singleton(lo: f64, hi: f64) -> Self {
        IntervalSet { intervals: vec![Interval::new(lo, hi)] }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        IntervalSet::from_intervals(all)
    }

    /// Merges components separated by less than `gap`. Used when assembling
    /// projections from sampled branches, where adjacent bands may leave
    /// slivers below the sampling resolution.
    pub fn merged_within(&self, gap: f64) -> IntervalSet {
        let mut intervals: Vec<Interval> = Vec::with_capacity(self.intervals.len());
        for iv in &self.intervals {
            match intervals.last_mut() {
                Some(last) if iv.lo <= last.hi + gap => {
                    last.hi = last.hi.max(iv.hi);
                }
                _ => intervals.push(*iv),
            }
        }
        IntervalSet { intervals }
    }

    /// Complement within `[lo, hi]`, dropping components narrower than
    /// `min_width`. Zero-width gaps are treated as absent.
    pub fn complement_within(&self, lo: f64, hi: f64, min_width: f64) -> IntervalSet {
        let mut out = Vec::new();
        let mut cursor = lo;
        for iv in &self.intervals {
            if iv.hi < lo {
                continue;
            }
            if iv.lo > hi {
                break;
            }
            if iv.lo > cursor && iv.lo - cursor > min_width {
                out.push(Interval::new(cursor, iv.lo.min(hi)));
            }
            cursor = cursor.max(iv.hi);
        }
        if cursor < hi && hi - cursor > min_width {
            out.push(Interval::new(cursor, hi));
        }
        IntervalSet { intervals: out }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// Distance from `x` to the set; `inf` for an empty set.
    pub fn distance(&self, x: f64) -> f64 {
        self.intervals.iter().map(|iv| iv.distance(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn inf(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv.lo)
    }

    pub fn sup(&self) -> Option<f64> {
        self.intervals.last().map(|iv| iv.hi)
    }

    /// Largest absolute difference between matching endpoints of two sets,
    /// `inf` if the component counts differ. Drives projection refinement.
    pub fn endpoint_distance(&self, other: &IntervalSet) -> f64 {
        if self.intervals.len() != other.intervals.len() {
            return f64::INFINITY;
        }
        self.intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| (a.lo - b.lo).abs().max((a.hi - b.hi).abs()))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_merges_overlaps_and_touching() {
        let s = IntervalSet::from_intervals(vec![
            Interval::new(2.0, 3.0),
            Interval::new(0.0, 1.0),
            Interval::new(1.0, 1.5),
            Interval::new(2.5, 2.7),
        ]);
        assert_eq!(s.intervals(), &[Interval::new(0.0, 1.5), Interval::new(2.0, 3.0)]);
    }

    #[test]
    fn complement_drops_zero_width_gaps() {
        let s = IntervalSet::from_intervals(vec![
            Interval::new(0.0, 1.0),
            Interval::new(1.0 + 1e-15, 2.0),
        ]);
        let c = s.complement_within(0.0, 3.0, 1e-12);
        assert_eq!(c.intervals(), &[Interval::new(2.0, 3.0)]);
    }

    #[test]
    fn distance_and_membership() {
        let s = IntervalSet::singleton(1.0, 2.0);
        assert!(s.contains(1.5));
        assert_eq!(s.distance(0.5), 0.5);
        assert_eq!(s.distance(2.5), 0.5);
        assert_eq!(s.distance(1.5), 0.0);
        assert_eq!(IntervalSet::empty().distance(1.0), f64::INFINITY);
    }

    #[test]
    fn complement_within_bracket() {
        let s = IntervalSet::from_intervals(vec![Interval::new(1.0, 2.0), Interval::new(3.0, 4.0)]);
        let c = s.complement_within(0.0, 5.0, 0.0);
        assert_eq!(
            c.intervals(),
            &[Interval::new(0.0, 1.0), Interval::new(2.0, 3.0), Interval::new(4.0, 5.0)]
        );
    }

    #[test]
    fn endpoint_distance_tracks_refinement() {
        let a = IntervalSet::singleton(0.0, 1.0);
        let b = IntervalSet::singleton(0.0, 1.25);
        assert_eq!(a.endpoint_distance(&b), 0.25);
        let c = IntervalSet::from_intervals(vec![Interval::new(0.0, 0.4), Interval::new(0.6, 1.0)]);
        assert_eq!(a.endpoint_distance(&c), f64::INFINITY);
    }
}
