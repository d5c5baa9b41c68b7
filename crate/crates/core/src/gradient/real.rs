use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar type the log-density code is written against.
///
/// `f64` gives the plain evaluator; [`Var`](super::Var) records onto a tape
/// for reverse-mode gradients. The n-ary reductions exist so that a tape
/// records one node per reduction instead of one per term.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Whether values of this type record derivatives.
    const DIFFERENTIABLE: bool;

    fn value(self) -> f64;

    /// A constant living in the same evaluation context as `self`.
    fn lift(self, c: f64) -> Self;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln_gamma(self) -> Self;

    fn square(self) -> Self {
        self * self
    }

    /// Sum of a non-empty slice.
    fn sum(xs: &[Self]) -> Self;

    /// `Σ w_k x_k` for constant weights.
    fn weighted_sum(xs: &[Self], weights: &[f64]) -> Self;

    /// `Σ c_k x_k + offset` for constant coefficients.
    fn linear_combination(xs: &[Self], coefficients: &[f64], offset: f64) -> Self;

    /// `Σ x_k y_k`.
    fn dot(xs: &[Self], ys: &[Self]) -> Self;

    /// `log Σ exp(x_k)` with max-subtraction.
    fn log_sum_exp(xs: &[Self]) -> Self;

    /// `Σ x_k²`.
    fn sum_of_squares(xs: &[Self]) -> Self;

    /// A node whose value and partial derivatives with respect to `inputs`
    /// were computed by the caller. `inputs` must be non-empty.
    fn custom(inputs: &[Self], value: f64, partials: &[f64]) -> Self;
}

pub(crate) fn ln_gamma_f64(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub(crate) fn digamma_f64(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

pub(crate) fn log_sum_exp_f64(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

impl Real for f64 {
    const DIFFERENTIABLE: bool = false;

    #[inline]
    fn value(self) -> f64 {
        self
    }

    #[inline]
    fn lift(self, c: f64) -> f64 {
        c
    }

    #[inline]
    fn exp(self) -> f64 {
        f64::exp(self)
    }

    #[inline]
    fn ln(self) -> f64 {
        f64::ln(self)
    }

    #[inline]
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }

    fn ln_gamma(self) -> f64 {
        ln_gamma_f64(self)
    }

    fn sum(xs: &[f64]) -> f64 {
        xs.iter().sum()
    }

    fn weighted_sum(xs: &[f64], weights: &[f64]) -> f64 {
        xs.iter().zip(weights).map(|(x, w)| x * w).sum()
    }

    fn linear_combination(xs: &[f64], coefficients: &[f64], offset: f64) -> f64 {
        xs.iter().zip(coefficients).map(|(x, c)| x * c).sum::<f64>() + offset
    }

    fn dot(xs: &[f64], ys: &[f64]) -> f64 {
        xs.iter().zip(ys).map(|(x, y)| x * y).sum()
    }

    fn log_sum_exp(xs: &[f64]) -> f64 {
        log_sum_exp_f64(xs)
    }

    fn sum_of_squares(xs: &[f64]) -> f64 {
        xs.iter().map(|x| x * x).sum()
    }

    fn custom(_inputs: &[f64], value: f64, _partials: &[f64]) -> f64 {
        value
    }
}
