use super::difference::extend_by_recurrence;
use super::params::LatentBlock;
use super::{BinnedCovariates, DensityCoefficients, DomainSpec, ModelConfig, ParameterState, WalkOrder};
use crate::error::{FrodoError, Result};
use crate::gradient::{log_sum_exp_f64, Real};

/// Prior means of the free coefficients `θ_i2, …, θ_ir` implied by the
/// limiting shape of the random walk.
pub(crate) enum FreeMeans<R> {
    None,
    /// `−λ_i h`.
    Exponential { lambda: R },
    /// `h(k−1)/σ² · (ξ_i − (a + kh/2))` for `k = 2, 3`.
    Gaussian { xi: R, inv_var: R },
}

impl<R: Real> FreeMeans<R> {
    /// Appends the means to `out`.
    pub(crate) fn push_means(&self, domain: &DomainSpec, out: &mut Vec<R>) {
        let h = domain.h;
        match *self {
            FreeMeans::None => {}
            FreeMeans::Exponential { lambda } => out.push(lambda * (-h)),
            FreeMeans::Gaussian { xi, inv_var } => {
                for k in 2..=3 {
                    let centre = domain.a + k as f64 * h / 2.0;
                    out.push((xi - centre) * inv_var * (h * (k - 1) as f64));
                }
            }
        }
    }
}

/// Reconstructs one group's `θ_i` from its innovations.
pub(crate) fn decode_group<R: Real>(
    domain: &DomainSpec,
    anchor: R,
    tau: R,
    free_means: &FreeMeans<R>,
    eta_free: &[R],
    eta_rw: &[R],
) -> Vec<R> {
    let mut theta = Vec::with_capacity(domain.k);
    theta.push(anchor.lift(0.0));
    let mut means = Vec::with_capacity(2);
    free_means.push_means(domain, &mut means);
    for (m, &e) in means.into_iter().zip(eta_free) {
        theta.push(m + tau * e);
    }
    let increments: Vec<R> = eta_rw.iter().map(|&e| tau * e).collect();
    extend_by_recurrence(theta, &increments)
}

/// Decodes the log-density coefficients `θ` (N×K) from a parameter state.
pub fn decode_theta(state: &ParameterState, cfg: &ModelConfig) -> Result<Vec<Vec<f64>>> {
    let r = cfg.order.as_usize();
    state
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            if g.eta_free.len() != r - 1 || g.eta_rw.len() != cfg.k - r {
                return Err(FrodoError::Dimension(format!("group {i}: innovation lengths")));
            }
            let means = match (&state.latent, cfg.order) {
                (LatentBlock::None, WalkOrder::First) => FreeMeans::None,
                (LatentBlock::Exponential { log_lambda, .. }, WalkOrder::Second) => {
                    FreeMeans::Exponential { lambda: log_lambda[i].exp() }
                }
                (LatentBlock::Gaussian { xi_raw, mu_xi, log_sigma_xi, log_sigma_x }, WalkOrder::Third) => {
                    let xi = mu_xi + log_sigma_xi.exp() * xi_raw[i];
                    FreeMeans::Gaussian { xi, inv_var: (-2.0 * log_sigma_x).exp() }
                }
                _ => return Err(FrodoError::Dimension("latent block does not match r".into())),
            };
            Ok(decode_group(&cfg.domain, 0.0, g.log_tau.exp(), &means, &g.eta_free, &g.eta_rw))
        })
        .collect()
}

/// Scaled softmax: `φ_ik = exp(θ_ik) / (h Σ_j exp(θ_ij))`.
pub fn density_coefficients(theta: &[Vec<f64>], h: f64) -> Result<DensityCoefficients> {
    if !(h > 0.0) {
        return Err(FrodoError::Config(format!("bin width must be positive, got {h}")));
    }
    let phi = theta
        .iter()
        .map(|row| {
            let lse = log_sum_exp_f64(row);
            row.iter().map(|t| (t - lse).exp() / h).collect()
        })
        .collect();
    Ok(DensityCoefficients { phi })
}

/// `Σ_k m_k log(h φ_k)`: the multinomial log-likelihood without its
/// combinatorial coefficient. The cell probabilities are `h φ_k`.
pub fn multinomial_loglik(counts: &[u32], phi: &[f64], h: f64) -> f64 {
    counts
        .iter()
        .zip(phi)
        .filter(|(&m, _)| m > 0)
        .map(|(&m, &p)| m as f64 * (h * p).ln())
        .sum()
}

/// `log(n! / Π m_k!)`, the term omitted by [`multinomial_loglik`].
pub fn log_multinomial_coefficient(counts: &[u32]) -> f64 {
    use statrs::function::factorial::ln_factorial;
    let n: u64 = counts.iter().map(|&m| m as u64).sum();
    ln_factorial(n) - counts.iter().map(|&m| ln_factorial(m as u64)).sum::<f64>()
}

/// Bin weights of the pooled histogram of all covariate values. The
/// density height on bin `k` is `w_k / h`.
pub fn empirical_central_density(binned: &BinnedCovariates) -> Result<Vec<f64>> {
    let k = binned.n_bins();
    let mut col = vec![0.0; k];
    for row in &binned.counts {
        for (c, &m) in col.iter_mut().zip(row) {
            *c += m as f64;
        }
    }
    let total: f64 = col.iter().sum();
    if !(total > 0.0) {
        return Err(FrodoError::EmptyData);
    }
    Ok(col.into_iter().map(|c| c / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DomainSpec, ModelConfig, ParameterState};
    use crate::nuts::SamplerSettings;
    use crate::model::params::LatentBlock;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn cfg(order: WalkOrder, k: usize, a: f64, b: f64) -> ModelConfig {
        ModelConfig {
            order,
            k,
            domain: DomainSpec::unit_scale(a, b, k).unwrap(),
            delta: vec![0.1],
            has_scalar_covariate: false,
            sampler: SamplerSettings::default(),
        }
    }

    #[test]
    fn gaussian_free_means_vanish_at_bin_centre() {
        let c = cfg(WalkOrder::Third, 6, -3.0, 3.0);
        let h = c.domain.h;
        for k in [2usize, 3] {
            let mut s = ParameterState::zeros(&c, 1);
            let xi = c.domain.a + k as f64 * h / 2.0;
            s.latent = LatentBlock::Gaussian { xi_raw: vec![0.0], mu_xi: xi, log_sigma_xi: 0.0, log_sigma_x: 0.3 };
            let theta = decode_theta(&s, &c).unwrap();
            assert!(theta[0][k - 1].abs() < 1e-15, "k = {k}: {}", theta[0][k - 1]);
        }
    }

    #[test]
    fn exponential_free_mean() {
        let c = cfg(WalkOrder::Second, 4, 0.0, 2.0);
        assert_eq!(c.domain.h, 0.5);
        let mut s = ParameterState::zeros(&c, 1);
        s.latent = LatentBlock::Exponential { log_lambda: vec![2f64.ln()], log_mu_lambda: 0.0, log_alpha_lambda: 0.0 };
        let theta = decode_theta(&s, &c).unwrap();
        assert!((theta[0][1] + 1.0).abs() < 1e-15);
        // Zero innovations give an exactly linear θ with slope −λh.
        for k in 0..4 {
            assert!((theta[0][k] + k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_walk_is_cumulative_sum() {
        let c = cfg(WalkOrder::First, 4, 0.0, 1.0);
        let mut s = ParameterState::zeros(&c, 1);
        let t = 0.7f64;
        s.groups[0].log_tau = t.ln();
        s.groups[0].eta_rw = vec![0.5, -1.0, 2.0];
        let theta = decode_theta(&s, &c).unwrap();
        let expected = [0.0, t * 0.5, t * 0.5 - t, t * 0.5 - t + 2.0 * t];
        for (x, e) in theta[0].iter().zip(expected) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_shape_matches_log_density_at_midpoints() {
        // With zero innovations the decoded θ is the quadratic through the
        // first three midpoint log-density differences, which is the
        // Gaussian log-density itself.
        let (xi, sigma) = (0.4, 0.9);
        for k in [10usize, 100] {
            let c = cfg(WalkOrder::Third, k, -3.0, 3.0);
            let mut s = ParameterState::zeros(&c, 1);
            s.latent = LatentBlock::Gaussian { xi_raw: vec![0.0], mu_xi: xi, log_sigma_xi: 0.0, log_sigma_x: sigma.ln() };
            let theta = decode_theta(&s, &c).unwrap();
            let logf = |x: f64| -0.5 * ((x - xi) / sigma).powi(2);
            let m0 = c.domain.midpoint(0);
            let dev = (0..k)
                .map(|j| (theta[0][j] - (logf(c.domain.midpoint(j)) - logf(m0))).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-9 * k as f64, "K = {k}: {dev}");
        }
    }

    #[test]
    fn gaussian_shape_approaches_bin_averages_as_k_grows() {
        use statrs::function::erf::erf;
        let (xi, sigma) = (0.4f64, 0.9f64);
        let cdf = |x: f64| 0.5 * (1.0 + erf((x - xi) / (sigma * std::f64::consts::SQRT_2)));
        let deviation = |k: usize| {
            let c = cfg(WalkOrder::Third, k, -3.0, 3.0);
            let mut s = ParameterState::zeros(&c, 1);
            s.latent = LatentBlock::Gaussian { xi_raw: vec![0.0], mu_xi: xi, log_sigma_xi: 0.0, log_sigma_x: sigma.ln() };
            let theta = decode_theta(&s, &c).unwrap();
            let mass = |j: usize| cdf(c.domain.edge(j + 1)) - cdf(c.domain.edge(j));
            // restrict to the central region where bin masses are resolvable
            (0..k)
                .filter(|&j| (c.domain.midpoint(j) - xi).abs() < 2.0 * sigma)
                .map(|j| (theta[0][j] - (mass(j).ln() - mass(0).ln())).abs())
                .fold(0.0, f64::max)
        };
        let coarse = deviation(10);
        let fine = deviation(100);
        assert!(fine < coarse / 10.0, "K=10: {coarse}, K=100: {fine}");
    }

    #[test]
    fn uniform_theta_gives_flat_density() {
        let d = density_coefficients(&[vec![0.0; 4]], 0.25).unwrap();
        for p in &d.phi[0] {
            assert!((p - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_two_bins() {
        let d = density_coefficients(&[vec![0.0, 3f64.ln()]], 0.5).unwrap();
        assert!((d.phi[0][0] - 0.5).abs() < 1e-15);
        assert!((d.phi[0][1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn softmax_survives_large_theta() {
        let d = density_coefficients(&[vec![0.0, 800.0, 799.0]], 1.0).unwrap();
        assert!(d.phi[0].iter().all(|p| p.is_finite()));
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial_loglik(&[0, 0], &[1.0, 1.0], 0.5), 0.0);
        let ll = multinomial_loglik(&[3, 1], &[1.0, 1.0], 0.5);
        assert!((ll - 4.0 * 0.5f64.ln()).abs() < 1e-14);
        assert_eq!(multinomial_loglik(&[1, 1], &[2.0, 0.0], 0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn multinomial_matches_exact_pmf() {
        // Exact pmf through log-factorials, written independently.
        fn ln_fact(n: u32) -> f64 {
            (1..=n).map(|i| (i as f64).ln()).sum()
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let k = rng.random_range(2..12);
            let theta: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let counts: Vec<u32> = (0..k).map(|_| rng.random_range(0..7)).collect();
            let h = 0.3;
            let phi = &density_coefficients(&[theta], h).unwrap().phi[0];
            let n: u32 = counts.iter().sum();
            let exact = ln_fact(n) - counts.iter().map(|&m| ln_fact(m)).sum::<f64>()
                + counts.iter().zip(phi).map(|(&m, p)| m as f64 * (h * p).ln()).sum::<f64>();
            let ours = multinomial_loglik(&counts, phi, h) + log_multinomial_coefficient(&counts);
            assert!((exact - ours).abs() < 1e-10);
        }
    }

    #[test]
    fn central_density_examples() {
        let b = BinnedCovariates::from_counts(vec![vec![5, 0, 0], vec![2, 0, 0]]).unwrap();
        assert_eq!(empirical_central_density(&b).unwrap(), vec![1.0, 0.0, 0.0]);
        let b = BinnedCovariates::from_counts(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(empirical_central_density(&b).unwrap(), vec![0.5, 0.5]);
        let b = BinnedCovariates::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(matches!(empirical_central_density(&b), Err(FrodoError::EmptyData)));
    }

    proptest! {
        #[test]
        fn normalization(theta in prop::collection::vec(-30.0..30.0f64, 20), h in 0.01..5.0f64) {
            let d = density_coefficients(&[theta], h).unwrap();
            let total: f64 = d.phi[0].iter().sum::<f64>() * h;
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn central_weights_are_column_proportions(
            counts in prop::collection::vec(prop::collection::vec(0u32..20, 6), 2..8)
        ) {
            prop_assume!(counts.iter().flatten().any(|&c| c > 0));
            let b = BinnedCovariates::from_counts(counts.clone()).unwrap();
            let w = empirical_central_density(&b).unwrap();
            let total: u32 = counts.iter().flatten().sum();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..6 {
                let col: u32 = counts.iter().map(|r| r[k]).sum();
                prop_assert!((w[k] - col as f64 / total as f64).abs() < 1e-15);
            }
        }
    }
}
