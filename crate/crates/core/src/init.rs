//! Chain initialization: a penalized Poisson fit of every histogram,
//! inverted to the non-centered parameterization, then jittered per chain.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FrodoError, Result};
use crate::gradient::{value_and_grad, Model};
use crate::model::{
    finite_difference, BinnedCovariates, DomainSpec, FrodoModel, GroupInnovations, LatentBlock, ModelConfig,
    ParameterState, RegressionBlock, WalkOrder,
};

const MAX_PIRLS_ITERATIONS: usize = 100;
const GRADIENT_TOLERANCE: f64 = 1e-8;
const RIDGE_RETRIES: [f64; 3] = [1e-3, 1e-2, 1e-1];
/// Smallest smoothing scale used for an initial value.
pub const TAU_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSettings {
    /// Ridge weight of the difference penalty in the Poisson fit.
    pub lambda_init: f64,
    /// Standard deviation of the noise added to every innovation.
    pub theta_noise: f64,
    /// Shape of the Gamma draw of `τ_i` (rate `shape/δ_i`); 0 keeps `τ_i`.
    pub tau_shape: f64,
    /// Shape of the Gamma draws of latent scale components, centred on
    /// their current values; 0 keeps them.
    pub scale_shape: f64,
    pub max_retries: usize,
}

impl Default for InitSettings {
    fn default() -> Self {
        InitSettings { lambda_init: 1.0, theta_noise: 0.1, tau_shape: 2.0, scale_shape: 10.0, max_retries: 20 }
    }
}

impl InitSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_init > 0.0) {
            return Err(FrodoError::Config("lambda_init must be positive".into()));
        }
        if [self.theta_noise, self.tau_shape, self.scale_shape].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(FrodoError::Config("jitter scales must be non-negative".into()));
        }
        Ok(())
    }

    /// Settings that leave a state unchanged.
    pub fn no_jitter() -> Self {
        InitSettings { theta_noise: 0.0, tau_shape: 0.0, scale_shape: 0.0, ..Default::default() }
    }
}

/// Dense `D^T D` for the order-`r` difference matrix on `k` coefficients.
fn penalty_matrix(k: usize, order: usize) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::identity(k, k);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        d = DMatrix::from_fn(rows, k, |i, j| d[(i + 1, j)] - d[(i, j)]);
    }
    d.transpose() * d
}

fn poisson_objective(m: &[f64], theta: &DVector<f64>, lambda: f64, p: &DMatrix<f64>) -> f64 {
    let fit: f64 = m.iter().zip(theta.iter()).map(|(&mk, &t)| mk * t - t.exp()).sum();
    fit - 0.5 * lambda * theta.dot(&(p * theta))
}

/// Penalized Poisson objective `Σ m_k θ_k − e^θ_k − λ‖Δ^r θ‖²/2`.
pub fn pspline_poisson_objective(counts: &[u32], order: usize, lambda: f64, theta: &[f64]) -> f64 {
    let m: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    poisson_objective(&m, &DVector::from_column_slice(theta), lambda, &penalty_matrix(counts.len(), order))
}

/// Maximizer of the penalized Poisson objective, or `None` when Newton's
/// method has not converged within the iteration budget.
/// `ridge` adds `ridge·‖θ‖²/2` to the penalty, which removes its null space.
fn newton_poisson(counts: &[u32], order: usize, lambda: f64, ridge: f64) -> Option<Vec<f64>> {
    let k = counts.len();
    let m: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let p = penalty_matrix(k, order) + DMatrix::<f64>::identity(k, k) * (ridge / lambda);
    let total: f64 = m.iter().sum();
    let mut theta = DVector::from_element(k, (total.max(0.5) / k as f64).ln());
    let mut obj = poisson_objective(&m, &theta, lambda, &p);
    for _ in 0..MAX_PIRLS_ITERATIONS {
        let mu = theta.map(f64::exp);
        let grad = DVector::from_iterator(k, m.iter().zip(mu.iter()).map(|(a, b)| a - b)) - &p * &theta * lambda;
        if grad.norm() < GRADIENT_TOLERANCE {
            return Some(theta.iter().copied().collect());
        }
        let hess = DMatrix::from_diagonal(&mu) + &p * lambda;
        let step = hess.cholesky()?.solve(&grad);
        // damped Newton: halve until the objective does not decrease
        let mut t = 1.0;
        loop {
            let cand = &theta + &step * t;
            let cand_obj = poisson_objective(&m, &cand, lambda, &p);
            if cand_obj >= obj || t < 1e-10 {
                theta = cand;
                obj = cand_obj;
                break;
            }
            t *= 0.5;
        }
    }
    None
}

/// P-spline (degree-zero) Poisson fit of one group's bin counts, shifted so
/// that the first coefficient is zero. Sparse histograms can leave the
/// penalized fit without a finite maximizer; those are refit with a small
/// ridge, and only then fall back to the uniform shape.
pub fn pspline_poisson_fit(counts: &[u32], order: usize, lambda_init: f64) -> Result<Vec<f64>> {
    let k = counts.len();
    if order == 0 || k < order + 1 {
        return Err(FrodoError::InvalidOrder { order, len: k });
    }
    if !(lambda_init > 0.0) {
        return Err(FrodoError::Config("lambda_init must be positive".into()));
    }
    let fit = newton_poisson(counts, order, lambda_init, 0.0).or_else(|| {
        RIDGE_RETRIES.iter().find_map(|&ridge| {
            log::debug!("Poisson initialization refit with ridge {ridge}");
            newton_poisson(counts, order, lambda_init, ridge)
        })
    });
    match fit {
        Some(theta) => {
            let first = theta[0];
            Ok(theta.into_iter().map(|t| t - first).collect())
        }
        None => {
            log::warn!("Poisson initialization did not converge; using the uniform shape");
            Ok(vec![0.0; k])
        }
    }
}

/// Method-of-moments guesses for the latent group variables, on the
/// standardized scale.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentGuess {
    None,
    Exponential { lambda: Vec<f64>, mu_lambda: f64, alpha_lambda: f64 },
    Gaussian { xi: Vec<f64>, mu_xi: f64, sigma_xi: f64, sigma_x: f64 },
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

impl LatentGuess {
    /// Guesses from standardized group samples: `ξ_i` is the sample mean,
    /// `λ_i = 1/(mean − a)`.
    pub fn from_groups(order: WalkOrder, domain: &DomainSpec, x: &[Vec<f64>]) -> Result<Self> {
        if x.iter().any(Vec::is_empty) {
            return Err(FrodoError::EmptyData);
        }
        let means: Vec<f64> = x.iter().map(|g| mean_sd(g).0).collect();
        Ok(match order {
            WalkOrder::First => LatentGuess::None,
            WalkOrder::Second => {
                let floor = 1e-3 * domain.h;
                let lambda: Vec<f64> = means.iter().map(|m| 1.0 / (m - domain.a).max(floor)).collect();
                let (mu, sd) = mean_sd(&lambda);
                let alpha = if sd > 0.0 { (mu / sd).powi(2) } else { 10.0 };
                LatentGuess::Exponential { lambda, mu_lambda: mu, alpha_lambda: alpha.clamp(0.1, 100.0) }
            }
            WalkOrder::Third => {
                let (mu, sd) = mean_sd(&means);
                let pooled: f64 = x.iter().map(|g| {
                    let m = mean_sd(g).0;
                    g.iter().map(|v| (v - m).powi(2)).sum::<f64>()
                }).sum();
                let n: usize = x.iter().map(Vec::len).sum();
                let within = (pooled / (n.saturating_sub(x.len()).max(1)) as f64).sqrt();
                LatentGuess::Gaussian {
                    xi: means,
                    mu_xi: mu,
                    sigma_xi: sd.max(0.05),
                    sigma_x: if within > 0.0 { within } else { 1.0 },
                }
            }
        })
    }

    fn free_means(&self, i: usize, domain: &DomainSpec) -> Vec<f64> {
        let h = domain.h;
        match self {
            LatentGuess::None => vec![],
            LatentGuess::Exponential { lambda, .. } => vec![-lambda[i] * h],
            LatentGuess::Gaussian { xi, sigma_x, .. } => (2..=3)
                .map(|k| h * (k - 1) as f64 / sigma_x.powi(2) * (xi[i] - (domain.a + k as f64 * h / 2.0)))
                .collect(),
        }
    }

    fn matches(&self, order: WalkOrder) -> bool {
        matches!(
            (self, order),
            (LatentGuess::None, WalkOrder::First)
                | (LatentGuess::Exponential { .. }, WalkOrder::Second)
                | (LatentGuess::Gaussian { .. }, WalkOrder::Third)
        )
    }
}

/// Neutral regression block: `σ_Y` and `τ_β` at typical prior values.
fn neutral_regression(cfg: &ModelConfig) -> RegressionBlock {
    RegressionBlock {
        alpha: 0.0,
        beta0_free: 0.0,
        beta0_rw: vec![0.0; cfg.k - 2],
        log_tau_beta: 0.5f64.ln(),
        // σ_Y = z / sqrt(2g) = 1/√2 at z = g = 1
        log_sigma_y_z: 0.0,
        log_sigma_y_g: 0.0,
        beta_z: cfg.has_scalar_covariate.then_some(0.0),
    }
}

/// Innovations that reproduce `theta_hat` exactly under the latent guesses.
/// `τ_i` is the root mean square of the order-`r` differences of
/// `θ̂_i`, floored at [`TAU_FLOOR`].
pub fn invert_to_noncentered(theta_hat: &[Vec<f64>], cfg: &ModelConfig, guess: &LatentGuess) -> Result<ParameterState> {
    let r = cfg.order.as_usize();
    if !guess.matches(cfg.order) {
        return Err(FrodoError::Config("latent guess does not match the random-walk order".into()));
    }
    let mut groups = Vec::with_capacity(theta_hat.len());
    for (i, row) in theta_hat.iter().enumerate() {
        if row.len() != cfg.k {
            return Err(FrodoError::Dimension(format!("group {i}: {} coefficients, K = {}", row.len(), cfg.k)));
        }
        if row.iter().any(|t| !t.is_finite()) {
            return Err(FrodoError::Data(format!("group {i}: non-finite initial coefficients")));
        }
        let shifted: Vec<f64> = row.iter().map(|t| t - row[0]).collect();
        let diffs = finite_difference(&shifted, r)?;
        let means = guess.free_means(i, &cfg.domain);
        let free_dev: Vec<f64> = means.iter().zip(&shifted[1..r]).map(|(m, t)| t - m).collect();
        // scale all innovations together so none starts far out in the funnel
        let n_innov = (diffs.len() + free_dev.len()) as f64;
        let rms = (diffs.iter().chain(&free_dev).map(|d| d * d).sum::<f64>() / n_innov).sqrt();
        let tau = if rms >= TAU_FLOOR {
            rms
        } else {
            log::debug!("group {i}: smoothing guess {rms:.2e} clamped to {TAU_FLOOR}");
            TAU_FLOOR
        };
        let eta_free = free_dev.iter().map(|d| d / tau).collect();
        let eta_rw = diffs.iter().map(|d| d / tau).collect();
        groups.push(GroupInnovations { eta_free, eta_rw, log_tau: tau.ln() });
    }
    let latent = match guess {
        LatentGuess::None => LatentBlock::None,
        LatentGuess::Exponential { lambda, mu_lambda, alpha_lambda } => LatentBlock::Exponential {
            log_lambda: lambda.iter().map(|l| l.ln()).collect(),
            log_mu_lambda: mu_lambda.ln(),
            log_alpha_lambda: alpha_lambda.ln(),
        },
        LatentGuess::Gaussian { xi, mu_xi, sigma_xi, sigma_x } => LatentBlock::Gaussian {
            xi_raw: xi.iter().map(|x| (x - mu_xi) / sigma_xi).collect(),
            mu_xi: *mu_xi,
            log_sigma_xi: sigma_xi.ln(),
            log_sigma_x: sigma_x.ln(),
        },
    };
    Ok(ParameterState { groups, latent, regression: neutral_regression(cfg) })
}

/// The un-jittered starting state: Poisson fits per group, inverted, with
/// the intercept at the mean response.
pub fn initial_state(
    cfg: &ModelConfig,
    binned: &BinnedCovariates,
    x_groups: &[Vec<f64>],
    y: &[f64],
    settings: &InitSettings,
) -> Result<ParameterState> {
    settings.validate()?;
    let r = cfg.order.as_usize();
    let theta_hat = binned
        .counts
        .iter()
        .map(|c| pspline_poisson_fit(c, r, settings.lambda_init))
        .collect::<Result<Vec<_>>>()?;
    let guess = LatentGuess::from_groups(cfg.order, &cfg.domain, x_groups)?;
    let mut state = invert_to_noncentered(&theta_hat, cfg, &guess)?;
    if !y.is_empty() {
        state.regression.alpha = y.iter().sum::<f64>() / y.len() as f64;
    }
    Ok(state)
}

fn gamma_around<R: Rng>(rng: &mut R, shape: f64, mean: f64) -> f64 {
    if shape == 0.0 {
        return mean;
    }
    // a zero draw would leave the log-scale parameter at -inf
    Gamma::new(shape, mean / shape).map(|g| g.sample(rng).max(f64::MIN_POSITIVE)).unwrap_or(mean)
}

/// A diffuse variant of `state`: Gaussian noise on every innovation,
/// `τ_i ~ Gamma(shape, shape/δ_i)` and Gamma draws of the latent scales
/// centred on their current values.
pub fn jitter_init<R: Rng>(state: &ParameterState, cfg: &ModelConfig, settings: &InitSettings, rng: &mut R) -> ParameterState {
    let mut s = state.clone();
    let sd = settings.theta_noise;
    let mut noise = |v: &mut f64| {
        if sd > 0.0 {
            *v += sd * rng.sample::<f64, _>(StandardNormal);
        }
    };
    for g in &mut s.groups {
        g.eta_free.iter_mut().chain(g.eta_rw.iter_mut()).for_each(&mut noise);
    }
    if let LatentBlock::Gaussian { xi_raw, .. } = &mut s.latent {
        xi_raw.iter_mut().for_each(&mut noise);
    }
    let reg = &mut s.regression;
    noise(&mut reg.alpha);
    noise(&mut reg.beta0_free);
    reg.beta0_rw.iter_mut().for_each(&mut noise);
    if let Some(bz) = reg.beta_z.as_mut() {
        noise(bz);
    }
    for (g, delta) in s.groups.iter_mut().zip(&cfg.delta) {
        if settings.tau_shape > 0.0 {
            g.log_tau = gamma_around(rng, settings.tau_shape, *delta).ln();
        }
    }
    let k = settings.scale_shape;
    match &mut s.latent {
        LatentBlock::None => {}
        LatentBlock::Exponential { log_mu_lambda, log_alpha_lambda, .. } => {
            *log_mu_lambda = gamma_around(rng, k, log_mu_lambda.exp()).ln();
            *log_alpha_lambda = gamma_around(rng, k, log_alpha_lambda.exp()).ln();
        }
        LatentBlock::Gaussian { log_sigma_xi, log_sigma_x, .. } => {
            *log_sigma_xi = gamma_around(rng, k, log_sigma_xi.exp()).ln();
            *log_sigma_x = gamma_around(rng, k, log_sigma_x.exp()).ln();
        }
    }
    s
}

/// Generator for the jitter of chain `chain`, distinct from the sampler's.
pub fn init_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1_5eed_0f_1417);
    rng.set_stream(chain as u64);
    rng
}

/// One jittered start per chain, each with a finite log-posterior and
/// gradient; retries a chain up to `max_retries` times.
pub fn jittered_starts(
    model: &FrodoModel,
    base: &ParameterState,
    settings: &InitSettings,
    chains: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let cfg = model.config();
    (0..chains)
        .map(|c| {
            let mut rng = init_rng(seed, c);
            for _ in 0..settings.max_retries.max(1) {
                let q = jitter_init(base, cfg, settings, &mut rng).flatten(cfg)?.values;
                let vg = value_and_grad(model, &q);
                if vg.finite && model.log_density(&q).is_finite() {
                    return Ok(q);
                }
            }
            Err(FrodoError::InitFailure {
                attempts: settings.max_retries,
                reason: format!("chain {c}: log-posterior or gradient not finite"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{decode_theta, DomainSpec};
    use crate::nuts::SamplerSettings;
    use proptest::prelude::*;
    use rand::Rng;

    fn cfg(order: WalkOrder, k: usize, n: usize) -> ModelConfig {
        ModelConfig {
            order,
            k,
            domain: DomainSpec::new(-2.0, 4.0, 0.5, 1.5, k).unwrap(),
            delta: vec![0.1; n],
            has_scalar_covariate: false,
            sampler: SamplerSettings::default(),
        }
    }

    #[test]
    fn equal_counts_give_flat_fit() {
        for r in 1..=3 {
            assert_eq!(pspline_poisson_fit(&[7; 9], r, 1.0).unwrap(), vec![0.0; 9]);
        }
    }

    #[test]
    fn huge_penalty_forces_uniform() {
        let theta = pspline_poisson_fit(&[1, 9, 0, 4, 2, 12], 1, 1e12).unwrap();
        assert!(theta.iter().all(|t| t.abs() < 1e-6), "{theta:?}");
    }

    #[test]
    fn too_short_for_order() {
        assert!(pspline_poisson_fit(&[1, 2, 3], 3, 1.0).is_err());
    }

    /// Cyclic coordinate-wise Newton ascent, an optimizer independent of the
    /// joint Newton solve.
    fn coordinate_ascent(counts: &[u32], order: usize, lambda: f64) -> Vec<f64> {
        let k = counts.len();
        let p = penalty_matrix(k, order);
        let mut theta = vec![0.0; k];
        for _ in 0..200_000 {
            let mut moved = 0.0f64;
            for j in 0..k {
                for _ in 0..3 {
                    let pen: f64 = (0..k).map(|l| p[(j, l)] * theta[l]).sum();
                    let g = counts[j] as f64 - theta[j].exp() - lambda * pen;
                    let h = theta[j].exp() + lambda * p[(j, j)];
                    theta[j] += g / h;
                    moved = moved.max((g / h).abs());
                }
            }
            if moved < 1e-14 {
                break;
            }
        }
        theta
    }

    #[test]
    fn matches_independent_optimizer() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let counts: Vec<u32> = (0..10).map(|_| rng.random_range(0..15)).collect();
            let ours = newton_poisson(&counts, 2, 1.0, 0.0).unwrap();
            let other = coordinate_ascent(&counts, 2, 1.0);
            let a = pspline_poisson_objective(&counts, 2, 1.0, &ours);
            let b = pspline_poisson_objective(&counts, 2, 1.0, &other);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            assert!(a >= b - 1e-12);
        }
    }

    #[test]
    fn first_order_innovations_are_scaled_differences() {
        let c = cfg(WalkOrder::First, 5, 1);
        let theta = vec![vec![0.0, 0.4, -0.2, 0.1, 0.1]];
        let s = invert_to_noncentered(&theta, &c, &LatentGuess::None).unwrap();
        let tau = s.groups[0].log_tau.exp();
        let d = finite_difference(&theta[0], 1).unwrap();
        for (e, d) in s.groups[0].eta_rw.iter().zip(d) {
            assert!((e - d / tau).abs() < 1e-15);
        }
    }

    #[test]
    fn flat_fit_clamps_tau() {
        let c = cfg(WalkOrder::First, 5, 1);
        let s = invert_to_noncentered(&[vec![0.0; 5]], &c, &LatentGuess::None).unwrap();
        assert!((s.groups[0].log_tau.exp() - TAU_FLOOR).abs() < 1e-15);
    }

    #[test]
    fn flat_fit_far_from_free_means_keeps_innovations_bounded() {
        let c = cfg(WalkOrder::Second, 5, 1);
        let guess = LatentGuess::Exponential { lambda: vec![1.0], mu_lambda: 1.0, alpha_lambda: 2.0 };
        let s = invert_to_noncentered(&[vec![0.0; 5]], &c, &guess).unwrap();
        let g = &s.groups[0];
        assert!(g.log_tau.exp() > TAU_FLOOR);
        let worst = g.eta_free.iter().chain(&g.eta_rw).fold(0.0f64, |a, e| a.max(e.abs()));
        assert!(worst <= 2.0, "largest innovation {worst}");
    }

    #[test]
    fn concentrated_counts_still_get_a_fit() {
        // all mass in one bin: the unpenalized directions of the r = 3
        // penalty have no finite maximizer
        let mut counts = vec![0u32; 12];
        counts[5] = 20;
        let theta = pspline_poisson_fit(&counts, 3, 1.0).unwrap();
        let peak = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(theta.iter().all(|t| t.is_finite()));
        assert!(peak > 1.0 && (theta[5] - peak).abs() < 1e-9, "{theta:?}");
    }

    fn round_trip(order: WalkOrder, theta: Vec<Vec<f64>>, guess: LatentGuess) -> f64 {
        let c = cfg(order, theta[0].len(), theta.len());
        let s = invert_to_noncentered(&theta, &c, &guess).unwrap();
        let back = decode_theta(&s, &c).unwrap();
        theta
            .iter()
            .zip(&back)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - a[0] - y).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn gaussian_bins_round_trip() {
        let d = DomainSpec::new(-2.0, 4.0, 0.5, 1.5, 10).unwrap();
        let theta: Vec<Vec<f64>> = [(-0.5, 0.8), (0.3, 1.1), (1.0, 0.6)]
            .iter()
            .map(|&(m, s)| d.midpoints().iter().map(|x| -0.5 * ((x - m) / s).powi(2) + 0.7).collect())
            .collect();
        let guess = LatentGuess::Gaussian { xi: vec![-0.5, 0.3, 1.0], mu_xi: 0.27, sigma_xi: 0.6, sigma_x: 0.9 };
        assert!(round_trip(WalkOrder::Third, theta, guess) < 1e-10);
    }

    proptest! {
        #[test]
        fn decode_after_invert_is_identity(
            rows in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 8), 1..4),
            order in 1usize..=3,
        ) {
            let n = rows.len();
            let order = WalkOrder::try_from(order).unwrap();
            let guess = match order {
                WalkOrder::First => LatentGuess::None,
                WalkOrder::Second => LatentGuess::Exponential { lambda: vec![0.7; n], mu_lambda: 0.7, alpha_lambda: 3.0 },
                WalkOrder::Third => LatentGuess::Gaussian { xi: vec![0.2; n], mu_xi: 0.1, sigma_xi: 0.5, sigma_x: 1.2 },
            };
            prop_assert!(round_trip(order, rows, guess) < 1e-10);
        }
    }

    #[test]
    fn zero_jitter_is_identity_and_seeded_jitter_repeats() {
        let c = cfg(WalkOrder::Third, 6, 2);
        let guess = LatentGuess::Gaussian { xi: vec![0.0, 1.0], mu_xi: 0.5, sigma_xi: 0.5, sigma_x: 1.0 };
        let s = invert_to_noncentered(&vec![vec![0.0, 0.2, 0.3, 0.2, 0.0, -0.4]; 2], &c, &guess).unwrap();
        let same = jitter_init(&s, &c, &InitSettings::no_jitter(), &mut init_rng(1, 0));
        assert_eq!(same, s);
        let a = jitter_init(&s, &c, &InitSettings::default(), &mut init_rng(1, 0));
        let b = jitter_init(&s, &c, &InitSettings::default(), &mut init_rng(1, 0));
        let other = jitter_init(&s, &c, &InitSettings::default(), &mut init_rng(1, 1));
        assert_eq!(a, b);
        assert_ne!(a, other);
    }
}
