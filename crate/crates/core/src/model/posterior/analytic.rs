//! Hand-written reverse pass of the log-posterior. The sampler uses this
//! instead of the tape; the taped [`Model`] implementation stays the
//! reference it is tested against.

use super::super::difference::{recurrence_adjoint, recurrence_in_place};
use super::{FrodoModel, ALPHA_LAMBDA_SCALE, LN_2, LN_SQRT_2PI, TAU_BETA_RATE};
use crate::gradient::{digamma_f64, ln_gamma_f64, GradientTarget};
use crate::model::regression::DIFFUSE_SCALE;
use crate::model::WalkOrder;

/// Per-call working storage, one slot per bin.
struct Scratch {
    theta: Vec<f64>,
    probs: Vec<f64>,
    adj: Vec<f64>,
}

impl FrodoModel {
    fn analytic(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let b = &self.blocks;
        let cfg = &self.cfg;
        let n = b.n;
        let k = b.k;
        let h = cfg.domain.h;
        let mut lp = 0.0;

        // innovations of the group walks
        let walk = b.eta_free.start..b.eta_rw.end;
        for j in walk.clone() {
            lp -= 0.5 * q[j] * q[j];
            grad[j] = -q[j];
        }
        lp -= walk.len() as f64 * LN_SQRT_2PI;

        // τ_i ~ Exp(rate 1/δ_i) on the log scale
        let tau: Vec<f64> = q[b.log_tau.clone()].iter().map(|u| u.exp()).collect();
        for (i, (&t, d)) in tau.iter().zip(&cfg.delta).enumerate() {
            let u = b.log_tau.start + i;
            lp += q[u] - t / d - d.ln();
            grad[u] = 1.0 - t / d;
        }

        // latent variables; `means` holds the free-coefficient means per group
        let hyper = b.latent_hyper.start;
        let f = b.free_len();
        let mut means = vec![0.0; n * f];
        let mut lambda = Vec::new();
        let mut xi = Vec::new();
        let mut inv_var = 0.0;
        match b.order {
            WalkOrder::First => {}
            WalkOrder::Second => {
                let (a, s) = (q[hyper], q[hyper + 1]);
                let (mu, shape) = (a.exp(), s.exp());
                lp += a - 0.5 * mu * mu + LN_2 - LN_SQRT_2PI;
                grad[hyper] += 1.0 - mu * mu;
                let sc = ALPHA_LAMBDA_SCALE;
                lp += s - 0.5 * (shape / sc).powi(2) + LN_2 - sc.ln() - LN_SQRT_2PI;
                grad[hyper + 1] += 1.0 - (shape / sc).powi(2);
                lambda = q[b.latent_group.clone()].iter().map(|l| l.exp()).collect();
                if n > 0 {
                    let rate = shape / mu;
                    let nf = n as f64;
                    let sum_log: f64 = q[b.latent_group.clone()].iter().sum();
                    let sum_lambda: f64 = lambda.iter().sum();
                    lp += nf * (shape * (s - a) - ln_gamma_f64(shape)) + shape * sum_log - rate * sum_lambda;
                    grad[hyper + 1] +=
                        nf * shape * (s - a + 1.0 - digamma_f64(shape)) + shape * sum_log - rate * sum_lambda;
                    grad[hyper] += -nf * shape + rate * sum_lambda;
                    for (i, l) in lambda.iter().enumerate() {
                        grad[b.latent_group.start + i] += shape - rate * l;
                        means[i] = -l * h;
                    }
                }
            }
            WalkOrder::Third => {
                let raw = &q[b.latent_group.clone()];
                for (i, x) in raw.iter().enumerate() {
                    lp -= 0.5 * x * x;
                    grad[b.latent_group.start + i] = -x;
                }
                lp -= n as f64 * LN_SQRT_2PI;
                let (mu_xi, v, w) = (q[hyper], q[hyper + 1], q[hyper + 2]);
                let (sxi, sx) = (v.exp(), w.exp());
                let kf = k as f64;
                let mu_scale = 15.0 / (kf * kf);
                let dev = (mu_xi - cfg.domain.latent_location_prior_mean()) / mu_scale;
                lp += -0.5 * dev * dev - mu_scale.ln() - LN_SQRT_2PI;
                grad[hyper] += -dev / mu_scale;
                lp += v - 0.5 * sxi * sxi + LN_2 - LN_SQRT_2PI;
                grad[hyper + 1] += 1.0 - sxi * sxi;
                lp += w - 0.5 * sx * sx + LN_2 - LN_SQRT_2PI;
                grad[hyper + 2] += 1.0 - sx * sx;
                inv_var = (-2.0 * w).exp();
                xi = raw.iter().map(|x| mu_xi + sxi * x).collect();
                for (i, x) in xi.iter().enumerate() {
                    for j in 0..2 {
                        let centre = cfg.domain.a + (j + 2) as f64 * h / 2.0;
                        means[i * 2 + j] = (x - centre) * inv_var * (h * (j + 1) as f64);
                    }
                }
            }
        }

        // σ_Y = |z| / √(2g)
        let (lz, lg) = (q[b.log_sigma_y_z], q[b.log_sigma_y_g]);
        let g = lg.exp();
        lp += lz - 0.5 * (2.0 * lz).exp() + LN_2 - LN_SQRT_2PI;
        grad[b.log_sigma_y_z] += 1.0 - (2.0 * lz).exp();
        lp += 2.0 * lg - 2.0 * g + 2.0 * LN_2;
        grad[b.log_sigma_y_g] += 2.0 - 2.0 * g;
        let log_sigma = lz - 0.5 * lg - 0.5 * LN_2;
        let sigma = log_sigma.exp();
        // derivative with respect to log σ_Y, pushed to (lz, lg) at the end
        let mut d_log_sigma = 0.0;

        let diffuse = DIFFUSE_SCALE * sigma;
        let log_diffuse = log_sigma + DIFFUSE_SCALE.ln();
        let diffuse_normal = |j: usize, grad: &mut [f64], lp: &mut f64, d_ls: &mut f64| {
            let t = q[j] / diffuse;
            *lp += -log_diffuse - 0.5 * t * t - LN_SQRT_2PI;
            grad[j] += -t / diffuse;
            *d_ls += -1.0 + t * t;
        };
        diffuse_normal(b.alpha, grad, &mut lp, &mut d_log_sigma);
        if let Some(j) = b.beta_z {
            diffuse_normal(j, grad, &mut lp, &mut d_log_sigma);
        }

        let coef = b.beta0_free..b.beta0_rw.end;
        for j in coef.clone() {
            lp -= 0.5 * q[j] * q[j];
            grad[j] = -q[j];
        }
        lp -= coef.len() as f64 * LN_SQRT_2PI;

        let lt = q[b.log_tau_beta];
        let tau_beta = lt.exp();
        lp += lt - TAU_BETA_RATE * tau_beta + TAU_BETA_RATE.ln();
        grad[b.log_tau_beta] += 1.0 - TAU_BETA_RATE * tau_beta;

        if n > 0 {
            lp += self.analytic_likelihood(q, grad, &tau, &means, &lambda, &xi, inv_var, sigma, log_sigma, tau_beta, &mut d_log_sigma);
        }
        grad[b.log_sigma_y_z] += d_log_sigma;
        grad[b.log_sigma_y_g] -= 0.5 * d_log_sigma;

        if !lp.is_finite() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return lp;
        }
        if grad.iter().any(|g| !g.is_finite()) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::NAN;
        }
        lp
    }

    #[allow(clippy::too_many_arguments)]
    fn analytic_likelihood(
        &self,
        q: &[f64],
        grad: &mut [f64],
        tau: &[f64],
        means: &[f64],
        lambda: &[f64],
        xi: &[f64],
        inv_var: f64,
        sigma: f64,
        log_sigma: f64,
        tau_beta: f64,
        d_log_sigma: &mut f64,
    ) -> f64 {
        let b = &self.blocks;
        let n = b.n;
        let k = b.k;
        let r = b.order.as_usize();
        let f = b.free_len();
        let h = self.cfg.domain.h;
        let weights = &self.data.central_weights;

        // β⁰: first value 0, second 20hσ b, second differences τ_β σ b_rw
        let rw_scale = tau_beta * sigma;
        let mut beta0 = vec![0.0; k];
        beta0[1] = sigma * q[b.beta0_free] * DIFFUSE_SCALE * h;
        for (j, e) in q[b.beta0_rw.clone()].iter().enumerate() {
            beta0[2 + j] = rw_scale * e;
        }
        recurrence_in_place(2, &mut beta0);
        let offset = q[b.alpha] - beta0.iter().zip(weights).map(|(b, w)| b * w).sum::<f64>();

        let inv_s2 = 1.0 / (sigma * sigma);
        let mut ll = 0.0;
        let mut ss = 0.0;
        let mut d_beta0 = vec![0.0; k];
        let mut d_alpha = 0.0;
        let mut d_bz = 0.0;
        let mut d_log_sx = 0.0;
        let mut d_xi_sum = 0.0;
        let mut d_xi_raw_weighted = 0.0;
        let mut s = Scratch { theta: vec![0.0; k], probs: vec![0.0; k], adj: vec![0.0; k] };
        let bz = b.beta_z.map(|j| q[j]);
        let (sxi, raw_start) = match b.order {
            WalkOrder::Third => (q[b.latent_hyper.start + 1].exp(), b.latent_group.start),
            _ => (0.0, 0),
        };

        for i in 0..n {
            let t = tau[i];
            let free = b.eta_free_of(i);
            let rw = b.eta_rw_of(i);
            s.theta[0] = 0.0;
            for j in 0..f {
                s.theta[1 + j] = means[i * f + j] + t * q[free.start + j];
            }
            for (j, e) in q[rw.clone()].iter().enumerate() {
                s.theta[r + j] = t * e;
            }
            recurrence_in_place(r, &mut s.theta);

            let max = s.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (p, th) in s.probs.iter_mut().zip(&s.theta) {
                *p = (th - max).exp();
                total += *p;
            }
            let lse = max + total.ln();
            s.probs.iter_mut().for_each(|p| *p /= total);
            let counts = &self.counts[i];
            let size = self.sizes[i];
            if size > 0.0 {
                ll += s.theta.iter().zip(counts).map(|(a, c)| a * c).sum::<f64>() - lse * size;
            }
            let mu0: f64 = beta0.iter().zip(&s.probs).map(|(a, p)| a * p).sum();
            let mut mu = offset + mu0;
            if let (Some(bz), Some(z)) = (bz, &self.data.z) {
                mu += bz * z[i];
            }
            let res = mu - self.data.y[i];
            ss += res * res;
            let rho = -res * inv_s2;
            d_alpha += rho;
            if let Some(z) = &self.data.z {
                d_bz += rho * z[i];
            }
            for kk in 0..k {
                let p = s.probs[kk];
                d_beta0[kk] += rho * (p - weights[kk]);
                s.adj[kk] = counts[kk] - size * p + rho * p * (beta0[kk] - mu0);
            }
            recurrence_adjoint(r, &mut s.adj);

            let mut d_tau = 0.0;
            for j in 0..f {
                let a = s.adj[1 + j];
                grad[free.start + j] += a * t;
                d_tau += a * q[free.start + j];
                // derivative with respect to the free mean
                match b.order {
                    WalkOrder::Second => grad[b.latent_group.start + i] += a * (-lambda[i] * h),
                    WalkOrder::Third => {
                        let m = means[i * f + j];
                        let dm_dxi = inv_var * h * (j + 1) as f64;
                        let d_xi = a * dm_dxi;
                        grad[raw_start + i] += d_xi * sxi;
                        d_xi_sum += d_xi;
                        d_xi_raw_weighted += d_xi * (xi[i] - q[b.latent_hyper.start]);
                        // m ∝ e^{−2 log σ_X}
                        d_log_sx -= 2.0 * a * m;
                    }
                    WalkOrder::First => {}
                }
            }
            for (j, e) in q[rw.clone()].iter().enumerate() {
                let a = s.adj[r + j];
                grad[rw.start + j] += a * t;
                d_tau += a * e;
            }
            grad[b.log_tau.start + i] += d_tau * t;
        }

        if let WalkOrder::Third = b.order {
            let hyper = b.latent_hyper.start;
            grad[hyper] += d_xi_sum;
            // ξ − μ = σ_ξ r, so ∂ξ/∂ log σ_ξ = ξ − μ
            grad[hyper + 1] += d_xi_raw_weighted;
            grad[hyper + 2] += d_log_sx;
        }

        let nf = n as f64;
        ll += -0.5 * ss * inv_s2 - nf * log_sigma;
        if self.full {
            ll += self.log_coefficients - nf * LN_SQRT_2PI;
        }
        *d_log_sigma += ss * inv_s2 - nf;

        grad[b.alpha] += d_alpha;
        if let Some(j) = b.beta_z {
            grad[j] += d_bz;
        }
        // back through the β⁰ recurrence
        recurrence_adjoint(2, &mut d_beta0);
        grad[b.beta0_free] += d_beta0[1] * sigma * DIFFUSE_SCALE * h;
        let mut d_rw_scale = 0.0;
        for (j, e) in q[b.beta0_rw.clone()].iter().enumerate() {
            grad[b.beta0_rw.start + j] += d_beta0[2 + j] * rw_scale;
            d_rw_scale += d_beta0[2 + j] * e;
        }
        // β⁰ is linear in σ_Y; τ_β enters through the walk scale only
        *d_log_sigma += d_beta0[1] * beta0[1] + d_rw_scale * rw_scale;
        grad[b.log_tau_beta] += d_rw_scale * rw_scale;
        ll
    }
}

impl GradientTarget for FrodoModel {
    fn dim(&self) -> usize {
        self.blocks.dim()
    }

    fn value_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        self.analytic(q, grad)
    }
}

#[cfg(test)]
mod tests {
    use crate::gradient::{value_and_grad, GradientTarget, Model};
    use crate::model::{BinnedCovariates, DomainSpec, FrodoModel, ModelConfig, ModelData, WalkOrder};
    use crate::nuts::SamplerSettings;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_the_taped_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for order in [WalkOrder::First, WalkOrder::Second, WalkOrder::Third] {
            for has_z in [false, true] {
                for full in [false, true] {
                    let (k, n) = (9, 6);
                    let cfg = ModelConfig {
                        order,
                        k,
                        domain: DomainSpec::new(-1.5, 2.5, 0.2, 1.1, k).unwrap(),
                        delta: (0..n).map(|i| 0.2 + 0.1 * i as f64).collect(),
                        has_scalar_covariate: has_z,
                        sampler: SamplerSettings::default(),
                    };
                    // one empty group exercises the size-zero branch
                    let counts =
                        (0..n).map(|i| (0..k).map(|_| if i == 2 { 0 } else { rng.random_range(0..7) }).collect()).collect();
                    let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let z = has_z.then(|| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
                    let data = ModelData::new(BinnedCovariates::from_counts(counts).unwrap(), y, z).unwrap();
                    let mut model = FrodoModel::new(cfg, data).unwrap();
                    if full {
                        model = model.with_full_constants();
                    }
                    for _ in 0..5 {
                        let q: Vec<f64> = (0..Model::dim(&model)).map(|_| rng.random_range(-1.5..1.5)).collect();
                        let taped = value_and_grad(&model, &q);
                        let mut grad = vec![f64::NAN; q.len()];
                        let value = GradientTarget::value_and_grad(&model, &q, &mut grad);
                        assert!((value - taped.value).abs() < 1e-9 * (1.0 + value.abs()), "{order:?}: {value} vs {}", taped.value);
                        for (j, (a, t)) in grad.iter().zip(&taped.grad).enumerate() {
                            assert!((a - t).abs() < 1e-9 * (1.0 + t.abs()), "{order:?} z={has_z} coordinate {j}: {a} vs {t}");
                        }
                    }
                }
            }
        }
    }
}
