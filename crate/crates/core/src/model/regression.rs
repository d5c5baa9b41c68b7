use super::difference::extend_by_recurrence;
use super::CoefficientFunction;
use crate::error::{FrodoError, Result};
use crate::gradient::Real;

/// Prior scale multiplier of `α`, `β⁰_2` (per unit bin width) and `β_Z`.
pub(crate) const DIFFUSE_SCALE: f64 = 20.0;

/// Subtracts the central-density weighted mean so that `Σ w_k β_k = 0`.
pub fn center_beta(beta0: &CoefficientFunction, central_weights: &[f64]) -> Result<CoefficientFunction> {
    if beta0.values.len() != central_weights.len() {
        return Err(FrodoError::Dimension(format!(
            "beta has {} bins, weights have {}",
            beta0.values.len(),
            central_weights.len()
        )));
    }
    let shift: f64 = beta0.values.iter().zip(central_weights).map(|(b, w)| b * w).sum();
    Ok(CoefficientFunction {
        values: beta0.values.iter().map(|b| b - shift).collect(),
        centered: true,
    })
}

/// `α + h Σ_k β_k φ_ik (+ β_Z z_i)`.
pub fn regression_mean(
    alpha: f64,
    beta: &CoefficientFunction,
    phi_i: &[f64],
    h: f64,
    beta_z: Option<f64>,
    z_i: Option<f64>,
) -> Result<f64> {
    if beta.values.len() != phi_i.len() {
        return Err(FrodoError::Dimension("beta and phi differ in length".into()));
    }
    let functional: f64 = beta.values.iter().zip(phi_i).map(|(b, p)| b * p).sum::<f64>() * h;
    let scalar = match (beta_z, z_i) {
        (Some(b), Some(z)) => b * z,
        (None, None) => 0.0,
        _ => {
            return Err(FrodoError::Config(
                "scalar covariate coefficient and value must be given together".into(),
            ))
        }
    };
    Ok(alpha + functional + scalar)
}

/// `σ_Y = |z| / √(2g)`: a half-t₄ variate with scale `1/√2` when
/// `z ~ N(0, 1)` and `g ~ Gamma(2, rate 2)`.
pub fn sigma_y_from_components(z: f64, g: f64) -> f64 {
    z.abs() / (2.0 * g).sqrt()
}

/// Uncentered `β⁰` from its innovations: `β⁰_1 = 0`, `β⁰_2 = 20hσ_Y b`,
/// second differences `τ_β σ_Y b_rw`.
pub(crate) fn build_beta0<R: Real>(h: f64, sigma_y: R, tau_beta: R, b_free: R, b_rw: &[R]) -> Vec<R> {
    let start = vec![sigma_y.lift(0.0), sigma_y * b_free * (DIFFUSE_SCALE * h)];
    let scale = tau_beta * sigma_y;
    let increments: Vec<R> = b_rw.iter().map(|&e| scale * e).collect();
    extend_by_recurrence(start, &increments)
}
