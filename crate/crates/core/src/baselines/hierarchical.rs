//! Joint model of latent group parameters and the response, using the
//! scenario's true covariate family. Responses are standardized; the
//! covariates stay on their original scale because the families are not
//! closed under affine maps.

use super::{diffuse_coefficient, gaussian_loglik, sigma_y_block, BaselineModel};
use crate::error::{FrodoError, Result};
use crate::gradient::{Layout, Model, Real};
use crate::model::{log_half_normal, GroupedDataset};
use crate::pipeline::StandardizationInfo;
use crate::simulate::Scenario;

/// Covariate values closer than this to 0 or 1 are clamped before taking
/// logarithms in the Beta likelihoods.
const BETA_EDGE: f64 = 1e-12;
/// Half-normal scale of the exponential family's shape hyperparameter.
const SHAPE_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    /// `X ~ N(ξ, σ_X)`, `ξ ~ N(μ, σ_ξ)`.
    Gaussian,
    /// `X ~ Exp(λ)`, `λ ~ Gamma(shape, rate = shape/μ_λ)`.
    Exponential,
    /// `X ~ Beta(ξ, 1 − ξ)`, `ξ ~ U(0, 1)`.
    BetaMean,
    /// `X ~ Beta(ξ, ξ)`, `log ξ ~ N(μ, σ)`.
    BetaSymmetric,
}

#[derive(Debug, Clone)]
struct GroupStats {
    n: f64,
    mean: f64,
    /// Within-group sum of squared deviations.
    ss: f64,
    sum: f64,
    sum_log: f64,
    sum_log1m: f64,
}

#[derive(Debug, Clone)]
pub struct HierarchicalModel {
    scenario: Scenario,
    family: Family,
    y: Vec<f64>,
    z: Option<Vec<f64>>,
    stats: Vec<GroupStats>,
    layout: Layout,
    info: StandardizationInfo,
    /// Pooled covariate mean and standard deviation, used to scale the
    /// hyperpriors.
    x_mean: f64,
    x_sd: f64,
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn r_sigmoid<R: Real>(u: R) -> R {
    let s = sigmoid(u.value());
    R::custom(&[u], s, &[s * (1.0 - s)])
}

/// `log σ(u) = −softplus(−u)`.
fn r_log_sigmoid<R: Real>(u: R) -> R {
    R::custom(&[u], -softplus(-u.value()), &[sigmoid(-u.value())])
}

impl HierarchicalModel {
    pub fn new(data: &GroupedDataset, info: &StandardizationInfo, scenario: Scenario) -> Result<Self> {
        data.validate()?;
        let family = match scenario {
            Scenario::GaussLinear | Scenario::GaussQuadratic | Scenario::Croon => Family::Gaussian,
            Scenario::ExpLinear => Family::Exponential,
            Scenario::BetaLinear => Family::BetaMean,
            Scenario::BetaQuadratic => Family::BetaSymmetric,
        };
        let stats: Vec<GroupStats> = data
            .groups
            .iter()
            .map(|g| {
                let n = g.x.len() as f64;
                let sum: f64 = g.x.iter().sum();
                let mean = sum / n;
                let clamp = |v: f64| v.clamp(BETA_EDGE, 1.0 - BETA_EDGE);
                GroupStats {
                    n,
                    mean,
                    ss: g.x.iter().map(|v| (v - mean).powi(2)).sum(),
                    sum,
                    sum_log: g.x.iter().map(|&v| clamp(v).ln()).sum(),
                    sum_log1m: g.x.iter().map(|&v| (1.0 - clamp(v)).ln()).sum(),
                }
            })
            .collect();
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(FrodoError::Data(format!("{scenario} covariates must be {what}")))
            }
        };
        match family {
            Family::Exponential => check(data.all_x().all(|v| v >= 0.0) && stats.iter().all(|s| s.sum > 0.0), "positive")?,
            Family::BetaMean | Family::BetaSymmetric => check(data.all_x().all(|v| (0.0..=1.0).contains(&v)), "in [0, 1]")?,
            Family::Gaussian => {}
        }
        let n = data.len();
        let mut layout = Layout::new();
        layout.push("latent", n);
        match family {
            Family::Gaussian => {
                layout.push("mu_xi", 1);
                layout.push("log_sigma_xi", 1);
                layout.push("log_sigma_x", 1);
            }
            Family::Exponential => {
                layout.push("log_mu_lambda", 1);
                layout.push("log_shape_lambda", 1);
            }
            Family::BetaMean => {}
            Family::BetaSymmetric => {
                layout.push("mu_log_xi", 1);
                layout.push("log_sigma_log_xi", 1);
            }
        }
        layout.push("alpha", 1);
        layout.push("beta", 1);
        layout.push("log_sigma_y_z", 1);
        layout.push("log_sigma_y_g", 1);
        let z = data.scalar_covariates();
        if z.is_some() {
            layout.push("beta_z", 1);
        }
        let y = data.groups.iter().map(|g| (g.y - info.y_mean) / info.y_sd).collect();
        Ok(HierarchicalModel {
            scenario,
            family,
            y,
            z,
            stats,
            layout,
            info: *info,
            x_mean: info.x_mean,
            x_sd: info.x_sd,
        })
    }

    fn at(&self, name: &str) -> usize {
        self.layout.get(name).expect("layout block").start
    }

    fn latent<'a, R>(&self, q: &'a [R]) -> &'a [R] {
        &q[self.layout.get("latent").expect("layout block")]
    }

    /// Regression signal of one group and the prior-plus-likelihood
    /// contributions of the latent block.
    fn latent_terms<R: Real>(&self, q: &[R], terms: &mut Vec<R>) -> Vec<R> {
        let u = self.latent(q);
        match self.family {
            Family::Gaussian => {
                let mu = q[self.at("mu_xi")];
                let (lsxi, lsx) = (q[self.at("log_sigma_xi")], q[self.at("log_sigma_x")]);
                let (sxi, sx) = (lsxi.exp(), lsx.exp());
                terms.push(((mu - self.x_mean) / (5.0 * self.x_sd)).square() * -0.5);
                terms.push(log_half_normal(lsxi, sxi, 2.0 * self.x_sd));
                terms.push(log_half_normal(lsx, sx, 2.0 * self.x_sd));
                let dev: Vec<R> = u.iter().map(|&xi| xi - mu).collect();
                terms.push(R::sum_of_squares(&dev) / sxi.square() * -0.5 - lsxi * u.len() as f64);
                let inv_var = (lsx * -2.0).exp();
                let n_total: f64 = self.stats.iter().map(|s| s.n).sum();
                let ss: f64 = self.stats.iter().map(|s| s.ss).sum();
                let scaled: Vec<R> = u.iter().zip(&self.stats).map(|(&xi, s)| (xi - s.mean) * s.n.sqrt()).collect();
                terms.push((R::sum_of_squares(&scaled) + ss) * inv_var * -0.5 - lsx * n_total);
                match self.scenario {
                    Scenario::GaussQuadratic => {
                        let var_x = sx.square();
                        u.iter().map(|&xi| xi.square() + var_x).collect()
                    }
                    _ => u.to_vec(),
                }
            }
            Family::Exponential => {
                let (lmu, lshape) = (q[self.at("log_mu_lambda")], q[self.at("log_shape_lambda")]);
                let (mu, shape) = (lmu.exp(), lshape.exp());
                let pooled_mean = self.stats.iter().map(|s| s.sum).sum::<f64>() / self.stats.iter().map(|s| s.n).sum::<f64>();
                terms.push(log_half_normal(lmu, mu, 2.0 / pooled_mean));
                terms.push(log_half_normal(lshape, shape, SHAPE_SCALE));
                let lambda: Vec<R> = u.iter().map(|l| l.exp()).collect();
                // Gamma(shape, rate = shape/μ) on log λ, then the Exp likelihood
                let n = u.len() as f64;
                terms.push((shape * (lshape - lmu) - shape.ln_gamma()) * n);
                terms.push(shape * R::sum(u));
                terms.push(-(R::sum(&lambda) * (shape / mu)));
                let counts: Vec<f64> = self.stats.iter().map(|s| s.n).collect();
                let sums: Vec<f64> = self.stats.iter().map(|s| s.sum).collect();
                terms.push(R::weighted_sum(u, &counts) - R::weighted_sum(&lambda, &sums));
                u.iter().map(|l| (-*l).exp()).collect()
            }
            Family::BetaMean => {
                let mut signal = Vec::with_capacity(u.len());
                for (&v, s) in u.iter().zip(&self.stats) {
                    let xi = r_sigmoid(v);
                    let xi_c = r_sigmoid(-v);
                    // uniform prior on ξ through the logit Jacobian
                    terms.push(r_log_sigmoid(v) + r_log_sigmoid(-v));
                    terms.push((xi - 1.0) * s.sum_log - xi * s.sum_log1m - (xi.ln_gamma() + xi_c.ln_gamma()) * s.n);
                    signal.push(xi);
                }
                signal
            }
            Family::BetaSymmetric => {
                let mu = q[self.at("mu_log_xi")];
                let ls = q[self.at("log_sigma_log_xi")];
                let sigma = ls.exp();
                terms.push((mu / 2.0).square() * -0.5);
                terms.push(log_half_normal(ls, sigma, 1.0));
                let dev: Vec<R> = u.iter().map(|&l| l - mu).collect();
                terms.push(R::sum_of_squares(&dev) / sigma.square() * -0.5 - ls * u.len() as f64);
                let mut signal = Vec::with_capacity(u.len());
                for (&l, s) in u.iter().zip(&self.stats) {
                    let xi = l.exp();
                    let ln_beta = xi.ln_gamma() * 2.0 - (xi * 2.0).ln_gamma();
                    terms.push((xi - 1.0) * (s.sum_log + s.sum_log1m) - ln_beta * s.n);
                    let d = xi * 2.0 + 1.0;
                    signal.push(d.lift(1.0) / d + 1.0);
                }
                signal
            }
        }
    }

    /// Group-level covariate of each group on the original scale: the latent
    /// mean of the covariate family.
    fn latent_means(&self, q: &[f64]) -> Vec<f64> {
        let u = self.latent(q);
        match self.family {
            Family::Gaussian => u.to_vec(),
            Family::Exponential => u.iter().map(|l| (-l).exp()).collect(),
            Family::BetaMean => u.iter().map(|&v| sigmoid(v)).collect(),
            Family::BetaSymmetric => u.iter().map(|l| l.exp()).collect(),
        }
    }
}

impl Model for HierarchicalModel {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_density<R: Real>(&self, q: &[R]) -> R {
        let mut terms = Vec::with_capacity(16);
        let signal = self.latent_terms(q, &mut terms);
        let (lp_sigma, sigma, log_sigma) = sigma_y_block(q[self.at("log_sigma_y_z")], q[self.at("log_sigma_y_g")]);
        let (alpha, beta) = (q[self.at("alpha")], q[self.at("beta")]);
        terms.push(lp_sigma);
        terms.push(diffuse_coefficient(alpha, sigma, log_sigma));
        terms.push(diffuse_coefficient(beta, sigma, log_sigma));
        let mut mean: Vec<R> = signal.iter().map(|&s| alpha + beta * s).collect();
        if let Some(z) = &self.z {
            let bz = q[self.at("beta_z")];
            terms.push(diffuse_coefficient(bz, sigma, log_sigma));
            mean.iter_mut().zip(z).for_each(|(m, &v)| *m = *m + bz * v);
        }
        terms.push(gaussian_loglik(&self.y, &mean, sigma, log_sigma));
        R::sum(&terms)
    }
}

impl BaselineModel for HierarchicalModel {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn initial_point(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.dim()];
        let lat = self.layout.get("latent").expect("layout block");
        let means: Vec<f64> = self.stats.iter().map(|s| s.mean).collect();
        let n = means.len() as f64;
        let m = means.iter().sum::<f64>() / n;
        let sd = (means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
        match self.family {
            Family::Gaussian => {
                q[lat].copy_from_slice(&means);
                let within = (self.stats.iter().map(|s| s.ss).sum::<f64>()
                    / self.stats.iter().map(|s| s.n - 1.0).sum::<f64>().max(1.0))
                .sqrt();
                q[self.at("mu_xi")] = m;
                q[self.at("log_sigma_xi")] = sd.max(0.05 * self.x_sd).ln();
                q[self.at("log_sigma_x")] = within.max(0.05 * self.x_sd).ln();
            }
            Family::Exponential => {
                let logs: Vec<f64> = means.iter().map(|v| -v.max(1e-6).ln()).collect();
                q[lat].copy_from_slice(&logs);
                q[self.at("log_mu_lambda")] = -m.ln();
                q[self.at("log_shape_lambda")] = 1.0;
            }
            Family::BetaMean => {
                for (qi, &v) in q[lat].iter_mut().zip(&means) {
                    let p = v.clamp(0.02, 0.98);
                    *qi = (p / (1.0 - p)).ln();
                }
            }
            Family::BetaSymmetric => {
                let logs: Vec<f64> = self
                    .stats
                    .iter()
                    .map(|s| {
                        // Var = 1 / (4(2ξ + 1)) for Beta(ξ, ξ)
                        let v = (s.ss / (s.n - 1.0).max(1.0)).max(1e-6);
                        ((1.0 / (4.0 * v) - 1.0) / 2.0).clamp(0.05, 20.0).ln()
                    })
                    .collect();
                let lm = logs.iter().sum::<f64>() / n;
                q[lat].copy_from_slice(&logs);
                q[self.at("mu_log_xi")] = lm;
                q[self.at("log_sigma_log_xi")] = 0.0;
            }
        }
        q[self.at("log_sigma_y_z")] = 0.0;
        q[self.at("log_sigma_y_g")] = 0.0;
        q
    }

    fn derived_names(&self) -> Vec<String> {
        let mut names = vec!["sigma_y".to_string(), "alpha".into(), "slope".into()];
        if self.z.is_some() {
            names.push("beta_z".into());
        }
        names.extend((0..self.stats.len()).map(|i| format!("xi[{i}]")));
        names
    }

    fn derived(&self, q: &[f64]) -> Vec<f64> {
        let (_, sigma, _) = sigma_y_block(q[self.at("log_sigma_y_z")], q[self.at("log_sigma_y_g")]);
        let info = &self.info;
        let mut out = vec![
            info.response_scale(sigma),
            info.response(q[self.at("alpha")]),
            info.response_scale(q[self.at("beta")]),
        ];
        if self.z.is_some() {
            out.push(info.response_scale(q[self.at("beta_z")]));
        }
        out.extend(self.latent_means(q));
        out
    }
}
