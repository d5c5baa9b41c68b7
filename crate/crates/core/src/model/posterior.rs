//! The joint log-posterior, written once over [`Real`] so the same code
//! serves plain evaluation and taped gradients.

use super::density::{decode_group, FreeMeans};
use super::difference::{recurrence_adjoint, recurrence_in_place};
use super::params::Blocks;
use super::regression::{build_beta0, DIFFUSE_SCALE};
use super::{
    center_beta, density_coefficients, empirical_central_density, log_multinomial_coefficient,
    multinomial_loglik, regression_mean, BinnedCovariates, CoefficientFunction, ModelConfig,
    ParameterState, WalkOrder,
};
use crate::error::{FrodoError, Result};
use crate::gradient::{Layout, Model, Real};

mod analytic;

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
pub(crate) const LN_2: f64 = std::f64::consts::LN_2;

/// Rate of the exponential prior on `τ_β`.
pub(crate) const TAU_BETA_RATE: f64 = 2.0;
/// Scale of the half-normal prior on `α_λ`.
const ALPHA_LAMBDA_SCALE: f64 = 10.0;

/// Everything the likelihood needs, on the standardized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub binned: BinnedCovariates,
    pub y: Vec<f64>,
    pub z: Option<Vec<f64>>,
    /// Bin weights of the pooled covariate histogram.
    pub central_weights: Vec<f64>,
}

impl ModelData {
    pub fn new(binned: BinnedCovariates, y: Vec<f64>, z: Option<Vec<f64>>) -> Result<Self> {
        let n = binned.n_groups();
        if y.len() != n || z.as_ref().is_some_and(|z| z.len() != n) {
            return Err(FrodoError::Dimension(format!(
                "{n} groups of counts but {} responses",
                y.len()
            )));
        }
        let central_weights = if n == 0 { Vec::new() } else { empirical_central_density(&binned)? };
        Ok(ModelData { binned, y, z, central_weights })
    }

    pub fn n_groups(&self) -> usize {
        self.binned.n_groups()
    }
}

/// Latent quantities in whatever scalar type the evaluation runs in.
enum Latent<R> {
    None,
    Exponential { lambda: Vec<R> },
    Gaussian { xi: Vec<R>, inv_var: R },
}

/// Prior log-density plus the decoded constrained parameters it produced.
struct PriorPieces<R> {
    log_prior: R,
    tau: Vec<R>,
    latent: Latent<R>,
    sigma_y: R,
    log_sigma_y: R,
    tau_beta: R,
    alpha: R,
    beta_z: Option<R>,
}

impl<R: Real> PriorPieces<R> {
    fn free_means(&self, i: usize) -> FreeMeans<R> {
        match &self.latent {
            Latent::None => FreeMeans::None,
            Latent::Exponential { lambda } => FreeMeans::Exponential { lambda: lambda[i] },
            Latent::Gaussian { xi, inv_var } => FreeMeans::Gaussian { xi: xi[i], inv_var: *inv_var },
        }
    }
}

pub(crate) fn std_normal<R: Real>(xs: &[R]) -> Option<R> {
    (!xs.is_empty()).then(|| R::sum_of_squares(xs) * -0.5 - xs.len() as f64 * LN_SQRT_2PI)
}

/// Half-normal(0, s) log-density of `x = exp(u)` plus the log-Jacobian `u`.
pub(crate) fn log_half_normal<R: Real>(u: R, x: R, s: f64) -> R {
    u - (x / s).square() * 0.5 + (LN_2 - s.ln() - LN_SQRT_2PI)
}

/// N(m, s) log-density at `x` for a parameter-dependent `s`.
pub(crate) fn log_normal<R: Real>(x: R, m: f64, s: R, log_s: R) -> R {
    -log_s - ((x - m) / s).square() * 0.5 - LN_SQRT_2PI
}

fn prior_pieces<R: Real>(cfg: &ModelConfig, b: &Blocks, q: &[R]) -> PriorPieces<R> {
    let mut terms: Vec<R> = Vec::with_capacity(16);
    let mut constant = 0.0;

    // Random-walk and free innovations of every group.
    terms.extend(std_normal(&q[b.eta_free.start..b.eta_rw.end]));

    // τ_i ~ Exp(rate 1/δ_i), sampled on the log scale.
    let log_tau = &q[b.log_tau.clone()];
    let tau: Vec<R> = log_tau.iter().map(|u| u.exp()).collect();
    if b.n > 0 {
        let rates: Vec<f64> = cfg.delta.iter().map(|d| 1.0 / d).collect();
        terms.push(R::sum(log_tau));
        terms.push(-R::weighted_sum(&tau, &rates));
        constant += rates.iter().map(|r| r.ln()).sum::<f64>();
    }

    let hyper = b.latent_hyper.start;
    let latent = match cfg.order {
        WalkOrder::First => Latent::None,
        WalkOrder::Second => {
            let log_lambda = &q[b.latent_group.clone()];
            let lambda: Vec<R> = log_lambda.iter().map(|u| u.exp()).collect();
            let (log_mu, log_shape) = (q[hyper], q[hyper + 1]);
            let (mu, shape) = (log_mu.exp(), log_shape.exp());
            terms.push(log_half_normal(log_mu, mu, 1.0));
            terms.push(log_half_normal(log_shape, shape, ALPHA_LAMBDA_SCALE));
            if b.n > 0 {
                // Σ_i log Gamma(λ_i | shape, rate = shape/μ) on the log scale
                let rate = shape / mu;
                let per_group = shape * (log_shape - log_mu) - shape.ln_gamma();
                terms.push(per_group * b.n as f64);
                terms.push(shape * R::sum(log_lambda));
                terms.push(-(rate * R::sum(&lambda)));
            }
            Latent::Exponential { lambda }
        }
        WalkOrder::Third => {
            let raw = &q[b.latent_group.clone()];
            terms.extend(std_normal(raw));
            let (mu_xi, log_sxi, log_sx) = (q[hyper], q[hyper + 1], q[hyper + 2]);
            let (sxi, sx) = (log_sxi.exp(), log_sx.exp());
            let k = cfg.k as f64;
            let mu_scale = 15.0 / (k * k);
            let mu_mean = cfg.domain.latent_location_prior_mean();
            terms.push(((mu_xi - mu_mean) / mu_scale).square() * -0.5);
            constant -= mu_scale.ln() + LN_SQRT_2PI;
            terms.push(log_half_normal(log_sxi, sxi, 1.0));
            terms.push(log_half_normal(log_sx, sx, 1.0));
            let xi = raw.iter().map(|&r| mu_xi + sxi * r).collect();
            Latent::Gaussian { xi, inv_var: (log_sx * -2.0).exp() }
        }
    };

    // σ_Y = |z| / √(2g), z ~ HN(0, 1), g ~ Gamma(2, rate 2).
    let (log_z, log_g) = (q[b.log_sigma_y_z], q[b.log_sigma_y_g]);
    let g = log_g.exp();
    terms.push(log_half_normal(log_z, log_z.exp(), 1.0));
    terms.push(log_g * 2.0 - g * 2.0);
    constant += 2.0 * LN_2;
    let log_sigma_y = log_z - log_g * 0.5 - 0.5 * LN_2;
    let sigma_y = log_sigma_y.exp();

    let diffuse = sigma_y * DIFFUSE_SCALE;
    let log_diffuse = log_sigma_y + DIFFUSE_SCALE.ln();
    let alpha = q[b.alpha];
    terms.push(log_normal(alpha, 0.0, diffuse, log_diffuse));
    terms.extend(std_normal(&q[b.beta0_free..b.beta0_rw.end]));

    let log_tau_beta = q[b.log_tau_beta];
    let tau_beta = log_tau_beta.exp();
    terms.push(log_tau_beta - tau_beta * TAU_BETA_RATE);
    constant += TAU_BETA_RATE.ln();

    let beta_z = b.beta_z.map(|i| {
        terms.push(log_normal(q[i], 0.0, diffuse, log_diffuse));
        q[i]
    });

    PriorPieces {
        log_prior: R::sum(&terms) + constant,
        tau,
        latent,
        sigma_y,
        log_sigma_y,
        tau_beta,
        alpha,
        beta_z,
    }
}

/// Per-group likelihood pieces with hand-written partial derivatives.
///
/// Inputs are `θ_2..θ_r`, `τ`, the walk innovations `η` and (for the mean
/// only) `β⁰`. Outputs are `Σ_k m_k θ_k − n lse(θ)` and `Σ_k β⁰_k softmax_k(θ)`.
struct GroupKernel {
    order: usize,
    theta: Vec<f64>,
    probs: Vec<f64>,
    adj: Vec<f64>,
    partials_mult: Vec<f64>,
    partials_mu: Vec<f64>,
}

impl GroupKernel {
    fn new(order: usize, k: usize) -> Self {
        GroupKernel {
            order,
            theta: Vec::with_capacity(k),
            probs: Vec::with_capacity(k),
            adj: Vec::with_capacity(k),
            partials_mult: Vec::with_capacity(k + 1),
            partials_mu: Vec::with_capacity(2 * k + 1),
        }
    }

    /// `inputs` holds `θ_2..θ_r`, `τ`, `η`; returns the multinomial term
    /// and the functional part of the mean. Partials are filled only when
    /// `R` records derivatives.
    fn evaluate<R: Real>(&mut self, inputs: &[R], counts: &[f64], size: f64, beta0: &[f64]) -> (f64, f64) {
        let r = self.order;
        let tau = inputs[r - 1].value();
        let eta = &inputs[r..];
        self.theta.clear();
        self.theta.push(0.0);
        self.theta.extend(inputs[..r - 1].iter().map(|x| x.value()));
        self.theta.extend(eta.iter().map(|e| tau * e.value()));
        recurrence_in_place(r, &mut self.theta);

        let max = self.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.probs.clear();
        self.probs.extend(self.theta.iter().map(|t| (t - max).exp()));
        let total: f64 = self.probs.iter().sum();
        let lse = max + total.ln();
        self.probs.iter_mut().for_each(|p| *p /= total);
        let mult = f64::weighted_sum(&self.theta, counts) - lse * size;
        let mu0 = f64::dot(beta0, &self.probs);
        if !R::DIFFERENTIABLE {
            return (mult, mu0);
        }

        let fill = |adj: &mut Vec<f64>, out: &mut Vec<f64>| {
            recurrence_adjoint(r, adj);
            out.clear();
            out.extend_from_slice(&adj[1..r]);
            out.push(adj[r..].iter().zip(eta).map(|(a, e)| a * e.value()).sum());
            out.extend(adj[r..].iter().map(|a| tau * a));
        };
        self.adj.clear();
        self.adj.extend(counts.iter().zip(&self.probs).map(|(m, p)| m - size * p));
        fill(&mut self.adj, &mut self.partials_mult);
        self.adj.clear();
        self.adj.extend(beta0.iter().zip(&self.probs).map(|(b, p)| p * (b - mu0)));
        fill(&mut self.adj, &mut self.partials_mu);
        self.partials_mu.extend_from_slice(&self.probs);
        (mult, mu0)
    }
}

/// The joint posterior of a configured model on fixed data.
#[derive(Debug, Clone)]
pub struct FrodoModel {
    cfg: ModelConfig,
    data: ModelData,
    blocks: Blocks,
    layout: Layout,
    counts: Vec<Vec<f64>>,
    sizes: Vec<f64>,
    /// Whether the target keeps the parameter-free likelihood constants.
    full: bool,
    log_coefficients: f64,
}

impl FrodoModel {
    pub fn new(cfg: ModelConfig, data: ModelData) -> Result<Self> {
        let n = data.n_groups();
        cfg.validate(n)?;
        if n > 0 && data.binned.n_bins() != cfg.k {
            return Err(FrodoError::Dimension(format!(
                "counts have {} bins, K = {}",
                data.binned.n_bins(),
                cfg.k
            )));
        }
        if data.z.is_some() != cfg.has_scalar_covariate {
            return Err(FrodoError::Config(
                "scalar covariate must be supplied exactly when the model includes it".into(),
            ));
        }
        let (blocks, layout) = Blocks::new(cfg.order, cfg.k, n, cfg.has_scalar_covariate);
        let counts = data
            .binned
            .counts
            .iter()
            .map(|row| row.iter().map(|&m| m as f64).collect())
            .collect();
        let sizes = data.binned.group_sizes.iter().map(|&m| m as f64).collect();
        let log_coefficients = data.binned.counts.iter().map(|c| log_multinomial_coefficient(c)).sum();
        Ok(FrodoModel { cfg, data, blocks, layout, counts, sizes, full: false, log_coefficients })
    }

    /// Keep the multinomial coefficients and Gaussian normalizing constants
    /// in the target. Sampling is unaffected; values become exact.
    pub fn with_full_constants(mut self) -> Self {
        self.full = true;
        self
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn data(&self) -> &ModelData {
        &self.data
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_groups(&self) -> usize {
        self.blocks.n
    }

    pub fn unflatten(&self, q: &[f64]) -> Result<ParameterState> {
        ParameterState::unflatten(q, &self.cfg, self.blocks.n)
    }

    fn log_likelihood<R: Real>(&self, q: &[R], p: &PriorPieces<R>) -> Option<R> {
        let b = &self.blocks;
        if b.n == 0 {
            return None;
        }
        let dom = &self.cfg.domain;
        let beta0 = build_beta0(dom.h, p.sigma_y, p.tau_beta, q[b.beta0_free], &q[b.beta0_rw.clone()]);
        let beta0_values: Vec<f64> = beta0.iter().map(|v| v.value()).collect();
        let offset = p.alpha - R::weighted_sum(&beta0, &self.data.central_weights);
        let mut kernel = GroupKernel::new(self.cfg.order.as_usize(), dom.k);
        let mut multinomial = Vec::with_capacity(b.n);
        let mut residuals = Vec::with_capacity(b.n);
        let mut inputs: Vec<R> = Vec::with_capacity(2 * dom.k + 1);
        for i in 0..b.n {
            let tau = p.tau[i];
            inputs.clear();
            p.free_means(i).push_means(dom, &mut inputs);
            for (m, &e) in inputs.iter_mut().zip(&q[b.eta_free_of(i)]) {
                *m = *m + tau * e;
            }
            inputs.push(tau);
            inputs.extend_from_slice(&q[b.eta_rw_of(i)]);
            let (mult, mu0) = kernel.evaluate(&inputs, &self.counts[i], self.sizes[i], &beta0_values);
            if self.sizes[i] > 0.0 {
                multinomial.push(R::custom(&inputs, mult, &kernel.partials_mult));
            }
            inputs.extend_from_slice(&beta0);
            let mut mu = offset + R::custom(&inputs, mu0, &kernel.partials_mu);
            if let (Some(bz), Some(z)) = (p.beta_z, &self.data.z) {
                mu = mu + bz * z[i];
            }
            residuals.push(mu - self.data.y[i]);
        }
        let n = b.n as f64;
        let mut ll = R::sum_of_squares(&residuals) / p.sigma_y.square() * -0.5 - p.log_sigma_y * n;
        if !multinomial.is_empty() {
            ll = ll + R::sum(&multinomial);
        }
        if self.full {
            ll = ll + (self.log_coefficients - n * LN_SQRT_2PI);
        }
        Some(ll)
    }

    /// Prior log-density at `q`.
    pub fn log_prior_at(&self, q: &[f64]) -> f64 {
        prior_pieces(&self.cfg, &self.blocks, q).log_prior
    }

    /// Decodes `q` into constrained parameters and derived quantities.
    pub fn decode(&self, q: &[f64]) -> Result<DecodedState> {
        if q.len() != self.blocks.dim() {
            return Err(FrodoError::Dimension(format!("expected {} coordinates, got {}", self.blocks.dim(), q.len())));
        }
        let b = &self.blocks;
        let p = prior_pieces(&self.cfg, b, q);
        let dom = &self.cfg.domain;
        let theta: Vec<Vec<f64>> = (0..b.n)
            .map(|i| decode_group(dom, 0.0, p.tau[i], &p.free_means(i), &q[b.eta_free_of(i)], &q[b.eta_rw_of(i)]))
            .collect();
        let phi = density_coefficients(&theta, dom.h)?.phi;
        let beta0 = build_beta0(dom.h, p.sigma_y, p.tau_beta, q[b.beta0_free], &q[b.beta0_rw.clone()]);
        let beta = if b.n > 0 {
            center_beta(&CoefficientFunction::uncentered(beta0.clone()), &self.data.central_weights)?.values
        } else {
            beta0.clone()
        };
        let hyper = b.latent_hyper.start;
        let latent = match p.latent {
            Latent::None => DecodedLatent::None,
            Latent::Exponential { lambda } => DecodedLatent::Exponential {
                lambda,
                mu_lambda: q[hyper].exp(),
                alpha_lambda: q[hyper + 1].exp(),
            },
            Latent::Gaussian { xi, .. } => DecodedLatent::Gaussian {
                xi,
                mu_xi: q[hyper],
                sigma_xi: q[hyper + 1].exp(),
                sigma_x: q[hyper + 2].exp(),
            },
        };
        Ok(DecodedState {
            theta,
            phi,
            tau: p.tau,
            latent,
            alpha: p.alpha,
            beta0,
            beta,
            tau_beta: p.tau_beta,
            sigma_y: p.sigma_y,
            beta_z: p.beta_z,
        })
    }
}

impl Model for FrodoModel {
    fn dim(&self) -> usize {
        self.blocks.dim()
    }

    fn log_density<R: Real>(&self, q: &[R]) -> R {
        let pieces = prior_pieces(&self.cfg, &self.blocks, q);
        match self.log_likelihood(q, &pieces) {
            Some(ll) => pieces.log_prior + ll,
            None => pieces.log_prior,
        }
    }
}

/// Prior log-density of a parameter state, Jacobian terms included.
pub fn log_prior(state: &ParameterState, cfg: &ModelConfig) -> Result<f64> {
    let flat = state.flatten(cfg)?;
    let (blocks, _) = Blocks::new(cfg.order, cfg.k, state.n_groups(), cfg.has_scalar_covariate);
    if cfg.delta.len() != state.n_groups() {
        return Err(FrodoError::Config("delta length differs from the number of groups".into()));
    }
    Ok(prior_pieces(cfg, &blocks, &flat.values).log_prior)
}

/// Joint log-posterior, up to parameter-free constants.
pub fn log_posterior(state: &ParameterState, data: &ModelData, cfg: &ModelConfig) -> Result<f64> {
    let model = FrodoModel::new(cfg.clone(), data.clone())?;
    let flat = state.flatten(cfg)?;
    if flat.values.len() != model.dim() {
        return Err(FrodoError::Dimension("state and data disagree on the number of groups".into()));
    }
    Ok(model.log_density(&flat.values))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodedLatent {
    None,
    Exponential { lambda: Vec<f64>, mu_lambda: f64, alpha_lambda: f64 },
    Gaussian { xi: Vec<f64>, mu_xi: f64, sigma_xi: f64, sigma_x: f64 },
}

/// Constrained parameters on the standardized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedState {
    pub theta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    pub latent: DecodedLatent,
    pub alpha: f64,
    /// Uncentered coefficient function.
    pub beta0: Vec<f64>,
    /// Centered coefficient function.
    pub beta: Vec<f64>,
    pub tau_beta: f64,
    pub sigma_y: f64,
    pub beta_z: Option<f64>,
}

impl DecodedState {
    /// Log-likelihood recomputed from the constrained parameters through
    /// the public building blocks, centering `beta0` afresh. Includes all
    /// normalizing constants.
    pub fn log_likelihood(&self, data: &ModelData, h: f64) -> Result<f64> {
        let beta = center_beta(&CoefficientFunction::uncentered(self.beta0.clone()), &data.central_weights)?;
        let phi = density_coefficients(&self.theta, h)?.phi;
        let mut ll = 0.0;
        for (i, counts) in data.binned.counts.iter().enumerate() {
            ll += multinomial_loglik(counts, &phi[i], h) + log_multinomial_coefficient(counts);
            let z = data.z.as_ref().map(|z| z[i]);
            let mu = regression_mean(self.alpha, &beta, &phi[i], h, self.beta_z, z)?;
            let r = (data.y[i] - mu) / self.sigma_y;
            ll += -0.5 * r * r - self.sigma_y.ln() - LN_SQRT_2PI;
        }
        Ok(ll)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DomainSpec, LatentBlock};
    use crate::nuts::SamplerSettings;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(order: WalkOrder, k: usize, n: usize, has_z: bool) -> ModelConfig {
        ModelConfig {
            order,
            k,
            domain: DomainSpec::new(-2.0, 3.0, 0.4, 1.3, k).unwrap(),
            delta: (0..n).map(|i| 0.1 + 0.05 * i as f64).collect(),
            has_scalar_covariate: has_z,
            sampler: SamplerSettings::default(),
        }
    }

    fn data(k: usize, n: usize, has_z: bool, rng: &mut ChaCha8Rng) -> ModelData {
        let counts = (0..n).map(|_| (0..k).map(|_| rng.random_range(0..6)).collect()).collect();
        let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = has_z.then(|| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        ModelData::new(BinnedCovariates::from_counts(counts).unwrap(), y, z).unwrap()
    }

    fn random_q(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn posterior_is_prior_plus_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for order in [WalkOrder::First, WalkOrder::Second, WalkOrder::Third] {
            for has_z in [false, true] {
                let cfg = config(order, 7, 4, has_z);
                let d = data(7, 4, has_z, &mut rng);
                let model = FrodoModel::new(cfg.clone(), d.clone()).unwrap().with_full_constants();
                let q = random_q(model.dim(), &mut rng);
                let decoded = model.decode(&q).unwrap();
                let total = model.log_density(&q);
                let split = model.log_prior_at(&q) + decoded.log_likelihood(&d, cfg.domain.h).unwrap();
                assert!((total - split).abs() < 1e-9, "{order:?} z={has_z}: {total} vs {split}");
            }
        }
    }

    #[test]
    fn sampling_target_differs_only_by_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cfg = config(WalkOrder::Third, 6, 3, false);
        let d = data(6, 3, false, &mut rng);
        let plain = FrodoModel::new(cfg.clone(), d.clone()).unwrap();
        let full = plain.clone().with_full_constants();
        let gaps: Vec<f64> = (0..3)
            .map(|_| {
                let q = random_q(plain.dim(), &mut rng);
                full.log_density(&q) - plain.log_density(&q)
            })
            .collect();
        assert!((gaps[0] - gaps[1]).abs() < 1e-10 && (gaps[1] - gaps[2]).abs() < 1e-10);
    }

    #[test]
    fn shift_of_beta0_is_absorbed_by_centering() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cfg = config(WalkOrder::Third, 8, 5, true);
        let d = data(8, 5, true, &mut rng);
        let model = FrodoModel::new(cfg.clone(), d.clone()).unwrap();
        let q = random_q(model.dim(), &mut rng);
        let mut decoded = model.decode(&q).unwrap();
        let before = decoded.log_likelihood(&d, cfg.domain.h).unwrap();
        for c in [-3.0, 0.7, 25.0] {
            let original = decoded.beta0.clone();
            decoded.beta0.iter_mut().for_each(|b| *b += c);
            let after = decoded.log_likelihood(&d, cfg.domain.h).unwrap();
            assert!((before - after).abs() < 1e-10, "shift {c}: {before} vs {after}");
            decoded.beta0 = original;
        }
    }

    #[test]
    fn zero_groups_leave_only_the_prior() {
        let cfg = config(WalkOrder::Second, 5, 0, false);
        let d = ModelData::new(BinnedCovariates::from_counts(vec![]).unwrap(), vec![], None).unwrap();
        let state = ParameterState::zeros(&cfg, 0);
        let lp = log_posterior(&state, &d, &cfg).unwrap();
        assert_eq!(lp, log_prior(&state, &cfg).unwrap());
    }

    #[test]
    fn innovation_block_at_zero_is_standard_normal_mode() {
        // With every innovation at zero, only the normalizing constants of
        // the standard-normal terms remain from those blocks.
        let cfg = config(WalkOrder::First, 5, 2, false);
        let mut s = ParameterState::zeros(&cfg, 2);
        let base = log_prior(&s, &cfg).unwrap();
        s.groups[0].eta_rw[2] = 1.5;
        let moved = log_prior(&s, &cfg).unwrap();
        assert!((base - moved - 0.5 * 1.5 * 1.5).abs() < 1e-12);
        // Count: 2 groups × 4 walk innovations + 1 + 3 β⁰ innovations.
        let n_std = 2 * 4 + 1 + 3;
        let expected_innovations = -(n_std as f64) * LN_SQRT_2PI;
        let mut t = s.clone();
        t.groups[0].eta_rw[2] = 0.0;
        let remainder = log_prior(&t, &cfg).unwrap() - expected_innovations;
        // The rest is the hyperprior block, independent of the innovations.
        let mut u = t.clone();
        u.groups[1].eta_rw[0] = 0.0;
        assert!((log_prior(&u, &cfg).unwrap() - expected_innovations - remainder).abs() < 1e-12);
    }

    #[test]
    fn tau_prior_at_its_mean() {
        // Vary only τ_1 and compare against e⁻¹/δ times the Jacobian τ.
        let cfg = config(WalkOrder::First, 4, 2, false);
        let delta = cfg.delta[0];
        let mut s = ParameterState::zeros(&cfg, 2);
        s.groups[0].log_tau = delta.ln();
        let at_mean = log_prior(&s, &cfg).unwrap();
        s.groups[0].log_tau = 0.0;
        let at_one = log_prior(&s, &cfg).unwrap();
        let exp_logpdf = |t: f64| -delta.ln() - t / delta;
        let expected = (exp_logpdf(delta) + delta.ln()) - (exp_logpdf(1.0) + 0.0);
        assert!((at_mean - at_one - expected).abs() < 1e-12);
        assert!((exp_logpdf(delta) - ((-1f64).exp() / delta).ln()).abs() < 1e-14);
    }

    #[test]
    fn response_shift_changes_only_the_gaussian_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let cfg = config(WalkOrder::Second, 6, 3, false);
        let mut d = data(6, 3, false, &mut rng);
        let model = FrodoModel::new(cfg.clone(), d.clone()).unwrap();
        let q = random_q(model.dim(), &mut rng);
        let decoded = model.decode(&q).unwrap();
        let beta = CoefficientFunction { values: decoded.beta.clone(), centered: true };
        let mu = regression_mean(decoded.alpha, &beta, &decoded.phi[1], cfg.domain.h, None, None).unwrap();
        let before = model.log_density(&q);
        let t = 0.37;
        let y_old = d.y[1];
        d.y[1] += t;
        let shifted = FrodoModel::new(cfg, d).unwrap().log_density(&q);
        let s = decoded.sigma_y;
        let expected = -0.5 * ((y_old + t - mu) / s).powi(2) + 0.5 * ((y_old - mu) / s).powi(2);
        assert!((shifted - before - expected).abs() < 1e-10);
    }

    #[test]
    fn decoded_state_matches_unflattened_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let cfg = config(WalkOrder::Third, 6, 3, false);
        let d = data(6, 3, false, &mut rng);
        let model = FrodoModel::new(cfg.clone(), d).unwrap();
        let q = random_q(model.dim(), &mut rng);
        let state = model.unflatten(&q).unwrap();
        let decoded = model.decode(&q).unwrap();
        assert_eq!(decoded.theta, crate::model::decode_theta(&state, &cfg).unwrap());
        let LatentBlock::Gaussian { log_sigma_x, .. } = state.latent else { panic!() };
        let DecodedLatent::Gaussian { sigma_x, .. } = decoded.latent else { panic!() };
        assert_eq!(sigma_x, log_sigma_x.exp());
        let r = &state.regression;
        let expected = crate::model::sigma_y_from_components(r.log_sigma_y_z.exp(), r.log_sigma_y_g.exp());
        assert!((decoded.sigma_y - expected).abs() < 1e-14);
        let w = &model.data().central_weights;
        let weighted: f64 = decoded.beta.iter().zip(w).map(|(b, w)| b * w).sum();
        assert!(weighted.abs() < 1e-12);
    }

    #[test]
    fn mismatched_covariate_setting_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let cfg = config(WalkOrder::First, 5, 3, true);
        assert!(FrodoModel::new(cfg, data(5, 3, false, &mut rng)).is_err());
    }
}
