//! Piecewise-constant functions on the line, with exact interval-overlay
//! arithmetic.
//!
//! A [`StepFn`] is a right-open step function: value `vals[i]` on
//! `[xs[i], xs[i+1])` and `0` outside `[xs[0], xs[n])`. Gaps are stored as
//! explicit zero pieces, so the representation is always contiguous. All
//! distances and integrals are sums over overlaid intervals — no quadrature.

use crate::error::Error;
use crate::Result;

/// A contiguous, right-open piecewise-constant function, zero outside its
/// span.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFn {
    /// Strictly increasing breakpoints; `len = vals.len() + 1` (or 0).
    xs: Vec<f64>,
    vals: Vec<f64>,
}

impl StepFn {
    /// The zero function.
    pub fn zero() -> Self {
        StepFn {
            xs: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Builds from disjoint `(lo, hi, value)` intervals, in any order.
    /// Zero-length intervals are dropped; gaps become explicit zero pieces.
    pub fn from_intervals(mut intervals: Vec<(f64, f64, f64)>) -> Result<Self> {
        intervals.retain(|&(lo, hi, _)| hi > lo);
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs: Vec<f64> = Vec::with_capacity(intervals.len() * 2);
        let mut vals: Vec<f64> = Vec::with_capacity(intervals.len() * 2);
        for &(lo, hi, v) in &intervals {
            if !lo.is_finite() || !hi.is_finite() || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    what: "step function interval",
                    detail: format!("non-finite entry ({lo}, {hi}, {v})"),
                });
            }
            match xs.last().copied() {
                None => xs.push(lo),
                Some(last) if lo < last => {
                    return Err(Error::InvalidParameter {
                        what: "step function intervals",
                        detail: format!("overlap at x = {lo}"),
                    });
                }
                Some(last) if lo > last => {
                    // gap: explicit zero piece [last, lo)
                    vals.push(0.0);
                    xs.push(lo);
                }
                Some(_) => {}
            }
            vals.push(v);
            xs.push(hi);
        }
        debug_assert_eq!(xs.len(), vals.len() + usize::from(!xs.is_empty()));
        Ok(StepFn { xs, vals })
    }

    /// Builds from a uniform cell grid: `values[i]` on
    /// `[x0 + i dx, x0 + (i+1) dx)`.
    pub fn from_cells(x0: f64, dx: f64, values: &[f64]) -> Self {
        if values.is_empty() {
            return StepFn::zero();
        }
        let xs = (0..=values.len()).map(|i| x0 + i as f64 * dx).collect();
        StepFn {
            xs,
            vals: values.to_vec(),
        }
    }

    /// Number of pieces.
    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Breakpoints (empty for the zero function).
    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    /// Piece values.
    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// `(first, last)` breakpoint, if any piece exists.
    pub fn span(&self) -> Option<(f64, f64)> {
        if self.xs.is_empty() {
            None
        } else {
            Some((self.xs[0], *self.xs.last().unwrap()))
        }
    }

    /// Point evaluation with the right-open convention.
    pub fn eval(&self, x: f64) -> f64 {
        if self.xs.is_empty() || x < self.xs[0] || x >= *self.xs.last().unwrap() {
            return 0.0;
        }
        let i = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        self.vals[i.min(self.vals.len() - 1)]
    }

    /// `∫ self` over the whole line.
    pub fn integral(&self) -> f64 {
        self.vals
            .iter()
            .zip(self.xs.windows(2))
            .map(|(v, w)| v * (w[1] - w[0]))
            .sum()
    }

    /// `∫ self` over `[lo, hi]`.
    pub fn integral_over(&self, lo: f64, hi: f64) -> f64 {
        let mut acc = 0.0;
        for (v, w) in self.vals.iter().zip(self.xs.windows(2)) {
            let (a, b) = (w[0].max(lo), w[1].min(hi));
            if b > a {
                acc += v * (b - a);
            }
        }
        acc
    }

    /// Overlays `a` and `b` on merged breakpoints and combines piece values
    /// with `op` (applied as `op(a_val, b_val)`).
    pub fn overlay_with(a: &StepFn, b: &StepFn, op: impl Fn(f64, f64) -> f64) -> StepFn {
        let mut cuts: Vec<f64> = a.xs.iter().chain(b.xs.iter()).cloned().collect();
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup();
        if cuts.len() < 2 {
            return StepFn::zero();
        }
        let mut vals = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            vals.push(op(a.eval(mid), b.eval(mid)));
        }
        StepFn { xs: cuts, vals }
    }

    /// Pointwise sum.
    pub fn add(a: &StepFn, b: &StepFn) -> StepFn {
        StepFn::overlay_with(a, b, |x, y| x + y)
    }

    /// Exact `∫_{[lo,hi]} |a - b|`.
    pub fn l1_distance(a: &StepFn, b: &StepFn, lo: f64, hi: f64) -> f64 {
        StepFn::overlay_with(a, b, |x, y| (x - y).abs()).integral_over(lo, hi)
    }

    /// Drops everything at or beyond `cut` (restriction to `(-inf, cut)`).
    pub fn truncate_above(&self, cut: f64) -> StepFn {
        if self.xs.is_empty() || cut <= self.xs[0] {
            return StepFn::zero();
        }
        if cut >= *self.xs.last().unwrap() {
            return self.clone();
        }
        let mut xs = Vec::new();
        let mut vals = Vec::new();
        for (v, w) in self.vals.iter().zip(self.xs.windows(2)) {
            if w[0] >= cut {
                break;
            }
            xs.push(w[0]);
            vals.push(*v);
            if w[1] >= cut {
                xs.push(cut);
                break;
            }
        }
        if xs.len() == vals.len() {
            xs.push(*self.xs.last().unwrap());
        }
        StepFn { xs, vals }
    }

    /// Total variation of `map(self)`, counting the jumps to the ambient
    /// value `map(0)` at both ends of the span.
    pub fn tv_mapped(&self, map: impl Fn(f64) -> f64) -> f64 {
        if self.vals.is_empty() {
            return 0.0;
        }
        let ambient = map(0.0);
        let mut tv = 0.0;
        let mut prev = ambient;
        for &v in &self.vals {
            let mv = map(v);
            tv += (mv - prev).abs();
            prev = mv;
        }
        tv + (ambient - prev).abs()
    }

    /// Total variation of `map(self)` restricted to the open interval
    /// `(lo, hi)`: only jumps strictly inside count.
    pub fn tv_mapped_within(&self, lo: f64, hi: f64, map: impl Fn(f64) -> f64) -> f64 {
        if self.vals.is_empty() || hi <= lo {
            return 0.0;
        }
        let mut seq: Vec<f64> = Vec::new();
        if lo < self.xs[0] && hi > self.xs[0] {
            seq.push(0.0);
        }
        for (v, w) in self.vals.iter().zip(self.xs.windows(2)) {
            if w[1] <= lo || w[0] >= hi {
                continue;
            }
            seq.push(*v);
        }
        if hi > *self.xs.last().unwrap() && lo < *self.xs.last().unwrap() {
            seq.push(0.0);
        }
        seq.windows(2)
            .map(|w| (map(w[1]) - map(w[0])).abs())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn intervals_with_gap_get_zero_piece() {
        let f = StepFn::from_intervals(vec![(0.0, 1.0, 2.0), (2.0, 3.0, 4.0)]).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval(1.5), 0.0);
        assert_eq!(f.eval(2.5), 4.0);
        assert_eq!(f.eval(3.0), 0.0); // right-open
        assert!((f.integral() - 6.0).abs() < 1e-15);
    }

    #[test]
    fn overlap_is_rejected() {
        assert!(StepFn::from_intervals(vec![(0.0, 1.0, 1.0), (0.5, 2.0, 1.0)]).is_err());
    }

    #[test]
    fn l1_rectangle() {
        let a = StepFn::from_intervals(vec![(0.0, 1.0, 0.5)]).unwrap();
        let b = StepFn::zero();
        assert!((StepFn::l1_distance(&a, &b, -10.0, 10.0) - 0.5).abs() < 1e-15);
        assert_eq!(StepFn::l1_distance(&a, &a, -10.0, 10.0), 0.0);
    }

    #[test]
    fn l1_shifted_platoons_hand_computed() {
        // a = 0.4 on [0,2), b = 0.7 on [1,3): overlap [1,2) differs by 0.3,
        // [0,1) contributes 0.4, [2,3) contributes 0.7
        let a = StepFn::from_intervals(vec![(0.0, 2.0, 0.4)]).unwrap();
        let b = StepFn::from_intervals(vec![(1.0, 3.0, 0.7)]).unwrap();
        let d = StepFn::l1_distance(&a, &b, -10.0, 10.0);
        assert!((d - (0.4 + 0.3 + 0.7)).abs() < 1e-15);
        // window cutting through the overlap
        let dw = StepFn::l1_distance(&a, &b, 1.5, 2.5);
        assert!((dw - (0.3 * 0.5 + 0.7 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn truncate_above_cuts_mid_piece() {
        let f = StepFn::from_intervals(vec![(0.0, 2.0, 1.0)]).unwrap();
        let g = f.truncate_above(1.5);
        assert!((g.integral() - 1.5).abs() < 1e-15);
        assert_eq!(g.eval(1.6), 0.0);
        assert_eq!(f.truncate_above(-1.0).len(), 0);
        assert_eq!(f.truncate_above(5.0), f);
    }

    #[test]
    fn tv_counts_boundary_jumps() {
        // single platoon at value c, map = identity: jumps c at both ends
        let f = StepFn::from_intervals(vec![(0.0, 1.0, 0.3)]).unwrap();
        assert!((f.tv_mapped(|v| v) - 0.6).abs() < 1e-15);
        // two adjacent platoons c1, c2
        let g = StepFn::from_intervals(vec![(0.0, 1.0, 0.3), (1.0, 2.0, 0.8)]).unwrap();
        assert!((g.tv_mapped(|v| v) - (0.3 + 0.5 + 0.8)).abs() < 1e-15);
        assert_eq!(StepFn::zero().tv_mapped(|v| v), 0.0);
    }

    fn arb_stepfn() -> impl Strategy<Value = StepFn> {
        prop::collection::vec((0.0f64..10.0, 0.01f64..2.0, 0.0f64..1.0), 0..8).prop_map(|raw| {
            let mut intervals = Vec::new();
            let mut cursor = 0.0;
            for (gap, len, v) in raw {
                let lo = cursor + gap;
                intervals.push((lo, lo + len, v));
                cursor = lo + len;
            }
            StepFn::from_intervals(intervals).unwrap()
        })
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(a in arb_stepfn(), b in arb_stepfn(), c in arb_stepfn()) {
            let (lo, hi) = (-1.0, 200.0);
            let dab = StepFn::l1_distance(&a, &b, lo, hi);
            let dba = StepFn::l1_distance(&b, &a, lo, hi);
            let dac = StepFn::l1_distance(&a, &c, lo, hi);
            let dcb = StepFn::l1_distance(&c, &b, lo, hi);
            prop_assert!((dab - dba).abs() < 1e-12);
            prop_assert!(dab <= dac + dcb + 1e-12);
            prop_assert!(StepFn::l1_distance(&a, &a, lo, hi) == 0.0);
        }

        #[test]
        fn add_integrates_linearly(a in arb_stepfn(), b in arb_stepfn()) {
            let s = StepFn::add(&a, &b);
            prop_assert!((s.integral() - a.integral() - b.integral()).abs() < 1e-10);
        }
    }
}
