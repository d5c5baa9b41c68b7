//! Exact gradients of scalar log-densities.

mod flat;
mod real;
mod tape;

pub use flat::{FlatParameterVector, Layout};
pub use real::Real;
pub use tape::{Tape, Var};

pub(crate) use real::{digamma_f64, ln_gamma_f64, log_sum_exp_f64};

/// A log-density written once, generically over the scalar type.
pub trait Model {
    /// Number of unconstrained coordinates.
    fn dim(&self) -> usize;

    fn log_density<R: Real>(&self, q: &[R]) -> R;
}

/// Anything the sampler can differentiate.
pub trait GradientTarget: Sync {
    fn dim(&self) -> usize;

    /// Writes the gradient into `grad` and returns the log-density.
    ///
    /// A non-finite return value means the point is outside the support or
    /// the evaluation overflowed; `grad` is then zeroed.
    fn value_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64;
}

/// Outcome of one reverse-mode evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueAndGrad {
    pub value: f64,
    pub grad: Vec<f64>,
    /// False when the primal was non-finite; the gradient is then all zero.
    pub finite: bool,
}

/// Evaluates `model` at `q` on a fresh tape and sweeps it backwards.
pub fn value_and_grad<M: Model + ?Sized>(model: &M, q: &[f64]) -> ValueAndGrad {
    let mut grad = vec![0.0; q.len()];
    let value = value_and_grad_into(model, q, &mut grad);
    ValueAndGrad { value, finite: value.is_finite(), grad }
}

pub(crate) fn value_and_grad_into<M: Model + ?Sized>(model: &M, q: &[f64], grad: &mut [f64]) -> f64 {
    let tape = Tape::new();
    let inputs: Vec<Var<'_>> = q.iter().map(|&x| tape.var(x)).collect();
    let out = model.log_density(&inputs);
    let value = out.value();
    if !value.is_finite() {
        grad.iter_mut().for_each(|g| *g = 0.0);
        return value;
    }
    let adj = tape.adjoints(out);
    for (g, x) in grad.iter_mut().zip(&inputs) {
        *g = adj.get(x.index()).copied().unwrap_or(0.0);
    }
    if grad.iter().any(|g| !g.is_finite()) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        return f64::NAN;
    }
    value
}

/// Adapter running a [`Model`] through the tape for the sampler.
pub struct TapeTarget<M>(pub M);

impl<M: Model + Sync> GradientTarget for TapeTarget<M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        value_and_grad_into(&self.0, q, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct HalfSquaredNorm(usize);

    impl Model for HalfSquaredNorm {
        fn dim(&self) -> usize {
            self.0
        }
        fn log_density<R: Real>(&self, q: &[R]) -> R {
            R::sum_of_squares(q) * 0.5
        }
    }

    struct LogSoftmax(usize);

    impl Model for LogSoftmax {
        fn dim(&self) -> usize {
            4
        }
        fn log_density<R: Real>(&self, q: &[R]) -> R {
            q[self.0] - R::log_sum_exp(q)
        }
    }

    #[test]
    fn quadratic_gradient_is_identity() {
        let q = [0.3, -1.2, 2.5, 0.0];
        let out = value_and_grad(&HalfSquaredNorm(4), &q);
        assert_eq!(out.grad, q.to_vec());
        assert_eq!(out.value, 0.5 * q.iter().map(|x| x * x).sum::<f64>());
    }

    #[test]
    fn log_softmax_adjoint_is_indicator_minus_probability() {
        let q = [0.1, 2.0, -0.7, 1.3];
        let lse = q.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        for k in 0..4 {
            let out = value_and_grad(&LogSoftmax(k), &q);
            for j in 0..4 {
                let p = (q[j] - lse).exp();
                let expected = if j == k { 1.0 - p } else { -p };
                assert!((out.grad[j] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tape_value_matches_plain_evaluation() {
        let q = [0.1, 2.0, -0.7, 1.3];
        let plain: f64 = LogSoftmax(2).log_density(&q);
        assert_eq!(value_and_grad(&LogSoftmax(2), &q).value, plain);
    }

    #[test]
    fn non_finite_primal_zeroes_gradient() {
        struct LogOf;
        impl Model for LogOf {
            fn dim(&self) -> usize {
                1
            }
            fn log_density<R: Real>(&self, q: &[R]) -> R {
                q[0].ln()
            }
        }
        let out = value_and_grad(&LogOf, &[-1.0]);
        assert!(!out.finite);
        assert_eq!(out.grad, vec![0.0]);
    }

    #[test]
    fn unused_inputs_get_zero_gradient() {
        struct First;
        impl Model for First {
            fn dim(&self) -> usize {
                3
            }
            fn log_density<R: Real>(&self, q: &[R]) -> R {
                q[0].exp()
            }
        }
        let out = value_and_grad(&First, &[0.0, 5.0, 6.0]);
        assert_eq!(out.grad, vec![1.0, 0.0, 0.0]);
    }
}
