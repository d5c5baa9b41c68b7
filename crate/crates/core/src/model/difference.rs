use crate::error::{FrodoError, Result};
use crate::gradient::Real;

/// `Δ^r c`: the vector of `K − r` order-`r` forward differences.
pub fn finite_difference(c: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 || order >= c.len() {
        return Err(FrodoError::InvalidOrder { order, len: c.len() });
    }
    let mut d = c.to_vec();
    for _ in 0..order {
        d = d.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(d)
}

/// Signed binomial weights of `θ_{k−r}, …, θ_{k−1}` in the recurrence
/// `θ_k = (Δ^r θ)_{k−r} + Σ_j w_j θ_{k−r+j}`.
pub(crate) fn recurrence_weights(order: usize) -> &'static [f64] {
    match order {
        1 => &[1.0],
        2 => &[-1.0, 2.0],
        3 => &[1.0, -3.0, 3.0],
        _ => panic!("unsupported random-walk order {order}"),
    }
}

/// Reconstructs `c` from its first `r` entries and `Δ^r c`.
pub fn invert_difference(initial: &[f64], increments: &[f64]) -> Vec<f64> {
    extend_by_recurrence(initial.to_vec(), increments)
}

/// Appends one entry per increment using the order-`initial.len()`
/// recurrence. Generic so that the model can record it on a tape.
pub(crate) fn extend_by_recurrence<R: Real>(mut values: Vec<R>, increments: &[R]) -> Vec<R> {
    let order = values.len();
    let weights = recurrence_weights(order);
    let mut coeffs = weights.to_vec();
    coeffs.push(1.0);
    let mut window: Vec<R> = Vec::with_capacity(order + 1);
    values.reserve(increments.len());
    for &inc in increments {
        window.clear();
        window.extend_from_slice(&values[values.len() - order..]);
        window.push(inc);
        values.push(R::linear_combination(&window, &coeffs, 0.0));
    }
    values
}

/// In-place form for `f64`: on entry `c[order..]` holds the increments.
pub(crate) fn recurrence_in_place(order: usize, c: &mut [f64]) {
    let weights = recurrence_weights(order);
    for k in order..c.len() {
        let mut acc = c[k];
        for (j, w) in weights.iter().enumerate() {
            acc += w * c[k - order + j];
        }
        c[k] = acc;
    }
}

/// Reverse sweep of [`extend_by_recurrence`]. On entry `adj[k]` is the
/// direct derivative of some output with respect to `c_k`; on exit the
/// first `order` entries are the total derivatives with respect to the
/// initial values and entry `order + j` is the derivative with respect to
/// increment `j`.
pub(crate) fn recurrence_adjoint(order: usize, adj: &mut [f64]) {
    let weights = recurrence_weights(order);
    for k in (order..adj.len()).rev() {
        let a = adj[k];
        for (j, w) in weights.iter().enumerate() {
            adj[k - order + j] += w * a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn second_difference_of_short_vector() {
        assert_eq!(finite_difference(&[1.0, 2.0, 4.0], 2).unwrap(), vec![1.0]);
    }

    #[test]
    fn second_difference_of_line_is_zero() {
        assert_eq!(finite_difference(&[3.0, 5.0, 7.0, 9.0], 2).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn third_difference_matches_repeated_first_difference() {
        let c = [1.0, -1.0, 2.0, 0.0, 5.0];
        // Δ¹: (-2, 3, -2, 5); Δ²: (5, -5, 7); Δ³: (-10, 12)
        assert_eq!(finite_difference(&c, 3).unwrap(), vec![-10.0, 12.0]);
        assert_eq!(finite_difference(&c, 1).unwrap(), vec![-2.0, 3.0, -2.0, 5.0]);
    }

    #[test]
    fn worked_closed_forms() {
        let c = [0.3, 1.7, -0.4, 2.2];
        let d3 = finite_difference(&c, 3).unwrap();
        assert!((d3[0] - (c[3] - 3.0 * c[2] + 3.0 * c[1] - c[0])).abs() < 1e-14);
    }

    #[test]
    fn order_must_be_below_length() {
        assert!(matches!(
            finite_difference(&[1.0, 2.0], 2),
            Err(FrodoError::InvalidOrder { order: 2, len: 2 })
        ));
        assert!(finite_difference(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn in_place_recurrence_agrees() {
        let start = [0.0, 0.4, -0.3];
        let inc = [1.0, -2.0, 0.5, 0.25];
        let mut buf: Vec<f64> = start.iter().chain(&inc).copied().collect();
        recurrence_in_place(3, &mut buf);
        for (x, y) in buf.iter().zip(invert_difference(&start, &inc)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_matches_finite_differences() {
        // d/dx of Σ g_k c_k(x) for the reconstructed c
        let g = [0.3, -1.0, 2.0, 0.5, -0.7, 1.1];
        for order in 1..=3 {
            let start: Vec<f64> = (0..order).map(|i| 0.2 * i as f64).collect();
            let inc: Vec<f64> = (0..6 - order).map(|i| (i as f64).cos()).collect();
            let f = |s: &[f64], d: &[f64]| -> f64 {
                invert_difference(s, d).iter().zip(&g).map(|(c, g)| c * g).sum()
            };
            let mut adj = g.to_vec();
            recurrence_adjoint(order, &mut adj);
            for j in 0..6 {
                let (mut s1, mut d1) = (start.clone(), inc.clone());
                if j < order { s1[j] += 1.0 } else { d1[j - order] += 1.0 }
                // the map is linear, so a unit step is exact
                assert!((f(&s1, &d1) - f(&start, &inc) - adj[j]).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn composition(c in prop::collection::vec(-10.0..10.0f64, 5..15), r in 2usize..4) {
            let once = finite_difference(&c, 1).unwrap();
            let lhs = finite_difference(&c, r).unwrap();
            let rhs = finite_difference(&once, r - 1).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn recurrence_inverts_difference(c in prop::collection::vec(-10.0..10.0f64, 5..15), r in 1usize..4) {
            let d = finite_difference(&c, r).unwrap();
            let back = invert_difference(&c[..r], &d);
            for (x, y) in back.iter().zip(&c) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
