//! The unconstrained (non-centered) parameter state and its flat layout.
//!
//! Positive quantities are stored as logarithms. Innovations (`eta_*`,
//! `xi_raw`, `beta0_*`) carry standard-normal priors and are mapped to the
//! model parameters deterministically at evaluation time.

use std::ops::Range;

use super::{ModelConfig, WalkOrder};
use crate::error::{FrodoError, Result};
use crate::gradient::{FlatParameterVector, Layout};

#[derive(Debug, Clone, PartialEq)]
pub struct GroupInnovations {
    /// Innovations of `θ_i2, …, θ_ir` around their latent-driven means.
    pub eta_free: Vec<f64>,
    /// Innovations of the order-`r` random walk, `K − r` of them.
    pub eta_rw: Vec<f64>,
    /// Log of the smoothing parameter `τ_i`.
    pub log_tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatentBlock {
    /// `r = 1`: no latent group variables.
    None,
    /// `r = 2`: latent exponential rates.
    Exponential {
        log_lambda: Vec<f64>,
        log_mu_lambda: f64,
        log_alpha_lambda: f64,
    },
    /// `r = 3`: latent Gaussian locations, `ξ_i = μ_ξ + σ_ξ · xi_raw_i`.
    Gaussian {
        xi_raw: Vec<f64>,
        mu_xi: f64,
        log_sigma_xi: f64,
        log_sigma_x: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionBlock {
    pub alpha: f64,
    /// `β⁰_2 = 20 h σ_Y · beta0_free`.
    pub beta0_free: f64,
    /// `(Δ²β⁰)_{k−2} = τ_β σ_Y · beta0_rw[k−3]`, `K − 2` entries.
    pub beta0_rw: Vec<f64>,
    pub log_tau_beta: f64,
    /// Log of the half-normal numerator of `σ_Y`.
    pub log_sigma_y_z: f64,
    /// Log of the Gamma(2, 2) denominator component of `σ_Y`.
    pub log_sigma_y_g: f64,
    pub beta_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState {
    pub groups: Vec<GroupInnovations>,
    pub latent: LatentBlock,
    pub regression: RegressionBlock,
}

/// Index ranges of every block of the flat vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Blocks {
    pub n: usize,
    pub k: usize,
    pub order: WalkOrder,
    pub eta_free: Range<usize>,
    pub eta_rw: Range<usize>,
    pub log_tau: Range<usize>,
    pub latent_group: Range<usize>,
    pub latent_hyper: Range<usize>,
    pub alpha: usize,
    pub beta0_free: usize,
    pub beta0_rw: Range<usize>,
    pub log_tau_beta: usize,
    pub log_sigma_y_z: usize,
    pub log_sigma_y_g: usize,
    pub beta_z: Option<usize>,
}

impl Blocks {
    pub fn new(order: WalkOrder, k: usize, n: usize, has_z: bool) -> (Self, Layout) {
        let r = order.as_usize();
        let mut layout = Layout::new();
        let eta_free = layout.push("eta_free", n * (r - 1));
        let eta_rw = layout.push("eta_rw", n * (k - r));
        let log_tau = layout.push("log_tau", n);
        let (latent_group, latent_hyper) = match order {
            WalkOrder::First => (log_tau.end..log_tau.end, log_tau.end..log_tau.end),
            WalkOrder::Second => {
                let g = layout.push("log_lambda", n);
                let s = layout.push("log_mu_lambda", 1).start;
                layout.push("log_alpha_lambda", 1);
                (g, s..s + 2)
            }
            WalkOrder::Third => {
                let g = layout.push("xi_raw", n);
                let s = layout.push("mu_xi", 1).start;
                layout.push("log_sigma_xi", 1);
                layout.push("log_sigma_x", 1);
                (g, s..s + 3)
            }
        };
        let alpha = layout.push("alpha", 1).start;
        let beta0_free = layout.push("beta0_free", 1).start;
        let beta0_rw = layout.push("beta0_rw", k - 2);
        let log_tau_beta = layout.push("log_tau_beta", 1).start;
        let log_sigma_y_z = layout.push("log_sigma_y_z", 1).start;
        let log_sigma_y_g = layout.push("log_sigma_y_g", 1).start;
        let beta_z = has_z.then(|| layout.push("beta_z", 1).start);
        let blocks = Blocks {
            n,
            k,
            order,
            eta_free,
            eta_rw,
            log_tau,
            latent_group,
            latent_hyper,
            alpha,
            beta0_free,
            beta0_rw,
            log_tau_beta,
            log_sigma_y_z,
            log_sigma_y_g,
            beta_z,
        };
        (blocks, layout)
    }

    pub fn dim(&self) -> usize {
        self.beta_z.map_or(self.log_sigma_y_g + 1, |b| b + 1)
    }

    pub fn free_len(&self) -> usize {
        self.order.as_usize() - 1
    }

    pub fn rw_len(&self) -> usize {
        self.k - self.order.as_usize()
    }

    pub fn eta_free_of(&self, i: usize) -> Range<usize> {
        let f = self.free_len();
        self.eta_free.start + i * f..self.eta_free.start + (i + 1) * f
    }

    pub fn eta_rw_of(&self, i: usize) -> Range<usize> {
        let w = self.rw_len();
        self.eta_rw.start + i * w..self.eta_rw.start + (i + 1) * w
    }
}

/// Total unconstrained dimension.
pub fn dimension(order: WalkOrder, k: usize, n: usize, has_z: bool) -> usize {
    let r = order.as_usize();
    let per_group = (r - 1) + (k - r) + 1;
    let latent = match order {
        WalkOrder::First => 0,
        WalkOrder::Second => n + 2,
        WalkOrder::Third => n + 3,
    };
    let regression = 1 + 1 + (k - 2) + 1 + 2 + usize::from(has_z);
    n * per_group + latent + regression
}

impl ParameterState {
    /// All-zero innovations with unit scales.
    pub fn zeros(cfg: &ModelConfig, n: usize) -> Self {
        let r = cfg.order.as_usize();
        let groups = (0..n)
            .map(|_| GroupInnovations {
                eta_free: vec![0.0; r - 1],
                eta_rw: vec![0.0; cfg.k - r],
                log_tau: 0.0,
            })
            .collect();
        let latent = match cfg.order {
            WalkOrder::First => LatentBlock::None,
            WalkOrder::Second => LatentBlock::Exponential {
                log_lambda: vec![0.0; n],
                log_mu_lambda: 0.0,
                log_alpha_lambda: 0.0,
            },
            WalkOrder::Third => LatentBlock::Gaussian {
                xi_raw: vec![0.0; n],
                mu_xi: 0.0,
                log_sigma_xi: 0.0,
                log_sigma_x: 0.0,
            },
        };
        let regression = RegressionBlock {
            alpha: 0.0,
            beta0_free: 0.0,
            beta0_rw: vec![0.0; cfg.k - 2],
            log_tau_beta: 0.0,
            log_sigma_y_z: 0.0,
            log_sigma_y_g: 0.0,
            beta_z: cfg.has_scalar_covariate.then_some(0.0),
        };
        ParameterState { groups, latent, regression }
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    fn check(&self, cfg: &ModelConfig) -> Result<()> {
        let r = cfg.order.as_usize();
        let n = self.groups.len();
        let bad = |what: &str| Err(FrodoError::Dimension(format!("parameter state: {what}")));
        if self.groups.iter().any(|g| g.eta_free.len() != r - 1 || g.eta_rw.len() != cfg.k - r) {
            return bad("innovation lengths do not match r and K");
        }
        match (&self.latent, cfg.order) {
            (LatentBlock::None, WalkOrder::First) => {}
            (LatentBlock::Exponential { log_lambda, .. }, WalkOrder::Second) if log_lambda.len() == n => {}
            (LatentBlock::Gaussian { xi_raw, .. }, WalkOrder::Third) if xi_raw.len() == n => {}
            _ => return bad("latent block does not match r"),
        }
        if self.regression.beta0_rw.len() != cfg.k - 2 {
            return bad("beta0_rw length must be K - 2");
        }
        if self.regression.beta_z.is_some() != cfg.has_scalar_covariate {
            return bad("beta_z presence must match the scalar-covariate setting");
        }
        Ok(())
    }

    pub fn flatten(&self, cfg: &ModelConfig) -> Result<FlatParameterVector> {
        self.check(cfg)?;
        let n = self.groups.len();
        let (b, layout) = Blocks::new(cfg.order, cfg.k, n, cfg.has_scalar_covariate);
        let mut q = vec![0.0; b.dim()];
        for (i, g) in self.groups.iter().enumerate() {
            q[b.eta_free_of(i)].copy_from_slice(&g.eta_free);
            q[b.eta_rw_of(i)].copy_from_slice(&g.eta_rw);
            q[b.log_tau.start + i] = g.log_tau;
        }
        match &self.latent {
            LatentBlock::None => {}
            LatentBlock::Exponential { log_lambda, log_mu_lambda, log_alpha_lambda } => {
                q[b.latent_group.clone()].copy_from_slice(log_lambda);
                q[b.latent_hyper.start] = *log_mu_lambda;
                q[b.latent_hyper.start + 1] = *log_alpha_lambda;
            }
            LatentBlock::Gaussian { xi_raw, mu_xi, log_sigma_xi, log_sigma_x } => {
                q[b.latent_group.clone()].copy_from_slice(xi_raw);
                q[b.latent_hyper.start] = *mu_xi;
                q[b.latent_hyper.start + 1] = *log_sigma_xi;
                q[b.latent_hyper.start + 2] = *log_sigma_x;
            }
        }
        let reg = &self.regression;
        q[b.alpha] = reg.alpha;
        q[b.beta0_free] = reg.beta0_free;
        q[b.beta0_rw.clone()].copy_from_slice(&reg.beta0_rw);
        q[b.log_tau_beta] = reg.log_tau_beta;
        q[b.log_sigma_y_z] = reg.log_sigma_y_z;
        q[b.log_sigma_y_g] = reg.log_sigma_y_g;
        if let (Some(idx), Some(v)) = (b.beta_z, reg.beta_z) {
            q[idx] = v;
        }
        FlatParameterVector::new(q, layout)
    }

    pub fn unflatten(q: &[f64], cfg: &ModelConfig, n: usize) -> Result<Self> {
        let (b, _) = Blocks::new(cfg.order, cfg.k, n, cfg.has_scalar_covariate);
        if q.len() != b.dim() {
            return Err(FrodoError::Dimension(format!(
                "flat vector has {} values, expected {}",
                q.len(),
                b.dim()
            )));
        }
        let groups = (0..n)
            .map(|i| GroupInnovations {
                eta_free: q[b.eta_free_of(i)].to_vec(),
                eta_rw: q[b.eta_rw_of(i)].to_vec(),
                log_tau: q[b.log_tau.start + i],
            })
            .collect();
        let h = b.latent_hyper.start;
        let latent = match cfg.order {
            WalkOrder::First => LatentBlock::None,
            WalkOrder::Second => LatentBlock::Exponential {
                log_lambda: q[b.latent_group.clone()].to_vec(),
                log_mu_lambda: q[h],
                log_alpha_lambda: q[h + 1],
            },
            WalkOrder::Third => LatentBlock::Gaussian {
                xi_raw: q[b.latent_group.clone()].to_vec(),
                mu_xi: q[h],
                log_sigma_xi: q[h + 1],
                log_sigma_x: q[h + 2],
            },
        };
        let regression = RegressionBlock {
            alpha: q[b.alpha],
            beta0_free: q[b.beta0_free],
            beta0_rw: q[b.beta0_rw.clone()].to_vec(),
            log_tau_beta: q[b.log_tau_beta],
            log_sigma_y_z: q[b.log_sigma_y_z],
            log_sigma_y_g: q[b.log_sigma_y_g],
            beta_z: b.beta_z.map(|i| q[i]),
        };
        Ok(ParameterState { groups, latent, regression })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DomainSpec;
    use crate::nuts::SamplerSettings;

    fn cfg(order: WalkOrder, k: usize, n: usize, has_z: bool) -> ModelConfig {
        ModelConfig {
            order,
            k,
            domain: DomainSpec::unit_scale(-3.0, 3.0, k).unwrap(),
            delta: vec![0.1; n],
            has_scalar_covariate: has_z,
            sampler: SamplerSettings::default(),
        }
    }

    #[test]
    fn dimension_matches_block_count() {
        // r = 3, K = 10, N = 275: per group 2 + 7 + 1, latent N + 3,
        // regression 1 + 1 + 8 + 1 + 2.
        let expected = 275 * 10 + 275 + 3 + 13;
        assert_eq!(dimension(WalkOrder::Third, 10, 275, false), expected);
        let (blocks, layout) = Blocks::new(WalkOrder::Third, 10, 275, false);
        let counted: usize = layout.blocks().map(|(_, r)| r.len()).sum();
        assert_eq!(counted, expected);
        assert_eq!(blocks.dim(), expected);
        assert_eq!(layout.dim(), expected);
    }

    #[test]
    fn scalar_covariate_adds_one_coordinate() {
        for order in [WalkOrder::First, WalkOrder::Second, WalkOrder::Third] {
            assert_eq!(dimension(order, 12, 7, true), dimension(order, 12, 7, false) + 1);
        }
    }

    #[test]
    fn round_trip() {
        for (order, has_z) in [(WalkOrder::First, false), (WalkOrder::Second, true), (WalkOrder::Third, true)] {
            let c = cfg(order, 8, 4, has_z);
            let dim = dimension(order, 8, 4, has_z);
            let q: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin()).collect();
            let state = ParameterState::unflatten(&q, &c, 4).unwrap();
            let flat = state.flatten(&c).unwrap();
            assert_eq!(flat.values, q);
            assert_eq!(ParameterState::unflatten(&flat.values, &c, 4).unwrap(), state);
        }
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let c = cfg(WalkOrder::Third, 8, 3, false);
        let mut s = ParameterState::zeros(&c, 3);
        s.regression.beta_z = Some(1.0);
        assert!(s.flatten(&c).is_err());
        assert!(ParameterState::unflatten(&[0.0; 5], &c, 3).is_err());
    }
}
