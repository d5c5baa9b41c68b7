//! B-spline bases by the Cox–de Boor recursion.

use crate::error::{FrodoError, Result};

/// All `knots.len() − degree − 1` basis functions of the given degree at `x`.
///
/// Intervals are half-open except the last non-empty one, which is closed
/// so that the right end of the span is covered.
pub fn bspline_basis(x: f64, knots: &[f64], degree: usize) -> Result<Vec<f64>> {
    if knots.len() < degree + 2 {
        return Err(FrodoError::Config(format!("{} knots cannot carry degree {degree}", knots.len())));
    }
    if knots.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(FrodoError::Config("knots must be finite and non-decreasing".into()));
    }
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    if !(x >= lo && x <= hi) || lo == hi {
        return Err(FrodoError::Data(format!("{x} lies outside the knot span [{lo}, {hi}]")));
    }
    let last = (0..knots.len() - 1).rev().find(|&i| knots[i] < knots[i + 1]).expect("non-empty span");
    let mut b: Vec<f64> = (0..knots.len() - 1)
        .map(|i| {
            let inside = knots[i] <= x && x < knots[i + 1];
            f64::from(u8::from(inside || (i == last && x == hi)))
        })
        .collect();
    for p in 1..=degree {
        let next: Vec<f64> = (0..knots.len() - 1 - p)
            .map(|i| {
                let left = ratio(x - knots[i], knots[i + p] - knots[i]) * b[i];
                let right = ratio(knots[i + p + 1] - x, knots[i + p + 1] - knots[i + 1]) * b[i + 1];
                left + right
            })
            .collect();
        b = next;
    }
    Ok(b)
}

/// `n / d` with the 0/0 = 0 convention of the recursion.
fn ratio(n: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        n / d
    }
}

/// Equally spaced knots for a P-spline on `[lo, hi]`: `interior` knots
/// strictly inside and `degree + 1` more at and beyond each end, so the
/// basis sums to one on the whole interval.
pub fn uniform_knots(lo: f64, hi: f64, interior: usize, degree: usize) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(FrodoError::Data(format!("empty knot interval [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (interior + 1) as f64;
    let d = degree as i64;
    Ok((-d..=interior as i64 + 1 + d).map(|j| lo + j as f64 * step).collect())
}
