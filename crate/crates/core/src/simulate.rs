//! Data-generating processes of the six simulation studies.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FrodoError, Result};
use crate::model::{GroupRecord, GroupedDataset, WalkOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    GaussLinear,
    GaussQuadratic,
    ExpLinear,
    BetaLinear,
    BetaQuadratic,
    Croon,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::GaussLinear,
        Scenario::GaussQuadratic,
        Scenario::ExpLinear,
        Scenario::BetaLinear,
        Scenario::BetaQuadratic,
        Scenario::Croon,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scenario::GaussLinear => "gauss_linear",
            Scenario::GaussQuadratic => "gauss_quadratic",
            Scenario::ExpLinear => "exp_linear",
            Scenario::BetaLinear => "beta_linear",
            Scenario::BetaQuadratic => "beta_quadratic",
            Scenario::Croon => "croon",
        }
    }

    pub fn has_scalar_covariate(self) -> bool {
        self == Scenario::Croon
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = FrodoError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.id() == s)
            .ok_or_else(|| FrodoError::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSizes {
    Fixed(usize),
    /// Each group independently gets `small` or `large` members with
    /// probability one half.
    CoinFlip { small: usize, large: usize },
}

/// Full description of one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n_groups: usize,
    pub group_sizes: GroupSizes,
    pub alpha: f64,
    pub beta_tilde: f64,
    pub sigma_y: f64,
    /// Spread of the latent group means (Gaussian scenarios).
    pub sigma_xi: f64,
    /// Within-group spread (Gaussian scenarios).
    pub sigma_x: f64,
    /// Shape and rate of the Gamma law of the exponential rates.
    pub lambda_shape: f64,
    pub lambda_rate: f64,
    pub beta_z: f64,
    pub seed: u64,
    /// Forces the response noise and the within-group deviations to zero.
    #[serde(default)]
    pub noise_free: bool,
}

impl ScenarioSpec {
    /// Default study settings for `scenario`.
    pub fn study(scenario: Scenario, seed: u64) -> Self {
        let base = ScenarioSpec {
            scenario,
            n_groups: 275,
            group_sizes: GroupSizes::Fixed(20),
            alpha: 0.3,
            beta_tilde: 0.4,
            sigma_y: 0.5,
            sigma_xi: 2.0,
            sigma_x: 3.0,
            lambda_shape: 10.0,
            lambda_rate: 10.0,
            beta_z: 0.0,
            seed,
            noise_free: false,
        };
        match scenario {
            Scenario::GaussLinear => base,
            Scenario::GaussQuadratic => ScenarioSpec { group_sizes: GroupSizes::Fixed(50), ..base },
            Scenario::ExpLinear => ScenarioSpec {
                n_groups: 200,
                group_sizes: GroupSizes::Fixed(50),
                alpha: 0.1,
                beta_tilde: -0.9,
                sigma_y: 0.1,
                ..base
            },
            Scenario::BetaLinear => ScenarioSpec {
                n_groups: 250,
                group_sizes: GroupSizes::Fixed(15),
                alpha: 0.2,
                beta_tilde: 1.0,
                sigma_y: 0.05,
                ..base
            },
            Scenario::BetaQuadratic => ScenarioSpec {
                n_groups: 250,
                group_sizes: GroupSizes::Fixed(60),
                alpha: 0.7,
                beta_tilde: 1.0,
                sigma_y: 0.1,
                ..base
            },
            Scenario::Croon => ScenarioSpec {
                n_groups: 100,
                group_sizes: GroupSizes::CoinFlip { small: 10, large: 40 },
                alpha: 0.3,
                beta_tilde: 0.3,
                sigma_y: 0.35f64.sqrt(),
                sigma_xi: 1.0,
                sigma_x: 3.0,
                beta_z: 0.3,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_groups < 2 {
            return Err(FrodoError::Config("a scenario needs at least 2 groups".into()));
        }
        let sizes_ok = match self.group_sizes {
            GroupSizes::Fixed(n) => n > 0,
            GroupSizes::CoinFlip { small, large } => small > 0 && large > 0,
        };
        if !sizes_ok {
            return Err(FrodoError::Config("group sizes must be positive".into()));
        }
        let positive = [self.sigma_y, self.sigma_xi, self.sigma_x, self.lambda_shape, self.lambda_rate];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(FrodoError::Config("scale and rate parameters must be positive".into()));
        }
        if ![self.alpha, self.beta_tilde, self.beta_z].iter().all(|v| v.is_finite()) {
            return Err(FrodoError::Config("regression parameters must be finite".into()));
        }
        Ok(())
    }

    /// Latent value of group `i` on the deterministic mesh of the beta studies.
    fn mesh(&self, i: usize) -> f64 {
        let (lo, hi) = match self.scenario {
            Scenario::BetaQuadratic => (0.1, 2.0),
            _ => (0.1, 0.9),
        };
        lo + (hi - lo) * i as f64 / (self.n_groups - 1) as f64
    }
}

/// What generated a dataset, for comparison against fitted output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: Scenario,
    /// ξ_i, or λ_i for the exponential study.
    pub latent: Vec<f64>,
    pub alpha: f64,
    pub beta_tilde: f64,
    pub sigma_y: f64,
    pub sigma_x: Option<f64>,
    pub beta_z: Option<f64>,
    /// Noise-free responses `E[Y_i]`.
    pub expected_response: Vec<f64>,
}

impl GroundTruth {
    /// The true coefficient function on the original covariate scale.
    pub fn beta_star(&self, x: f64) -> f64 {
        beta_star(self.scenario, self.beta_tilde, x)
    }
}

pub fn beta_star(scenario: Scenario, beta_tilde: f64, x: f64) -> f64 {
    match scenario {
        Scenario::GaussQuadratic => beta_tilde * x * x,
        // the constant β̃ makes E_i[β*(X)] equal the stated response mean
        Scenario::BetaQuadratic => 4.0 * beta_tilde * (x - 0.5).powi(2) + beta_tilde,
        _ => beta_tilde * x,
    }
}

/// Noise-free part of the response given the latent value and `z`.
fn expected_response(spec: &ScenarioSpec, latent: f64, z: f64) -> f64 {
    let b = spec.beta_tilde;
    let signal = match spec.scenario {
        Scenario::GaussLinear | Scenario::BetaLinear => b * latent,
        Scenario::Croon => b * latent + spec.beta_z * z,
        Scenario::GaussQuadratic => b * (latent * latent + spec.sigma_x * spec.sigma_x),
        Scenario::ExpLinear => b / latent,
        Scenario::BetaQuadratic => b * (1.0 + 1.0 / (2.0 * latent + 1.0)),
    };
    spec.alpha + signal
}

fn dist_err(e: impl fmt::Display) -> FrodoError {
    FrodoError::Config(e.to_string())
}

/// Simulates one dataset from `spec`, drawing all randomness from `rng`.
pub fn simulate_with<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Result<(GroupedDataset, GroundTruth)> {
    spec.validate()?;
    let noise = if spec.noise_free { 0.0 } else { 1.0 };
    let lambda_law = Gamma::new(spec.lambda_shape, 1.0 / spec.lambda_rate).map_err(dist_err)?;
    let mut groups = Vec::with_capacity(spec.n_groups);
    let mut latent = Vec::with_capacity(spec.n_groups);
    let mut expected = Vec::with_capacity(spec.n_groups);
    for i in 0..spec.n_groups {
        let n = match spec.group_sizes {
            GroupSizes::Fixed(n) => n,
            GroupSizes::CoinFlip { small, large } => {
                if rng.random_bool(0.5) {
                    small
                } else {
                    large
                }
            }
        };
        let (l, x): (f64, Vec<f64>) = match spec.scenario {
            Scenario::GaussLinear | Scenario::GaussQuadratic | Scenario::Croon => {
                let xi = spec.sigma_xi * rng.sample::<f64, _>(StandardNormal);
                let law = Normal::new(xi, spec.sigma_x * noise).map_err(dist_err)?;
                (xi, (0..n).map(|_| law.sample(rng)).collect())
            }
            Scenario::ExpLinear => {
                let lambda = lambda_law.sample(rng);
                let law = Exp::new(lambda).map_err(dist_err)?;
                (lambda, (0..n).map(|_| law.sample(rng)).collect())
            }
            Scenario::BetaLinear => {
                let xi = spec.mesh(i);
                let law = Beta::new(xi, 1.0 - xi).map_err(dist_err)?;
                (xi, (0..n).map(|_| law.sample(rng)).collect())
            }
            Scenario::BetaQuadratic => {
                let xi = spec.mesh(i);
                let law = Beta::new(xi, xi).map_err(dist_err)?;
                (xi, (0..n).map(|_| law.sample(rng)).collect())
            }
        };
        let z = if spec.scenario.has_scalar_covariate() { Some(rng.sample::<f64, _>(StandardNormal)) } else { None };
        let mean = expected_response(spec, l, z.unwrap_or(0.0));
        let y = mean + noise * spec.sigma_y * rng.sample::<f64, _>(StandardNormal);
        latent.push(l);
        expected.push(mean);
        groups.push(GroupRecord { y, x, z });
    }
    let gaussian = matches!(spec.scenario, Scenario::GaussLinear | Scenario::GaussQuadratic | Scenario::Croon);
    let truth = GroundTruth {
        scenario: spec.scenario,
        latent,
        alpha: spec.alpha,
        beta_tilde: spec.beta_tilde,
        sigma_y: spec.sigma_y,
        sigma_x: gaussian.then_some(spec.sigma_x),
        beta_z: spec.scenario.has_scalar_covariate().then_some(spec.beta_z),
        expected_response: expected,
    };
    Ok((GroupedDataset::new(groups)?, truth))
}

/// Simulates with a generator seeded from `spec.seed`; bit-reproducible.
pub fn simulate(spec: &ScenarioSpec) -> Result<(GroupedDataset, GroundTruth)> {
    simulate_with(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

/// How the covariate domain is chosen from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainRule {
    /// Observed range widened on both sides by this fraction of its width.
    Padded(f64),
    /// `[0, observed max]`.
    ZeroToMax,
    Unit,
    /// Observed range.
    Range,
}

/// Fraction of the observed range added on each side by the pad rule.
pub const DOMAIN_PAD: f64 = 0.005;

impl DomainRule {
    pub fn apply(self, data: &GroupedDataset) -> Result<(f64, f64)> {
        let (lo, hi) = data
            .all_x()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if !lo.is_finite() {
            return Err(FrodoError::EmptyData);
        }
        Ok(match self {
            DomainRule::Padded(frac) => {
                let pad = frac * (hi - lo);
                (lo - pad, hi + pad)
            }
            DomainRule::ZeroToMax => (0.0, hi),
            DomainRule::Unit => (0.0, 1.0),
            DomainRule::Range => (lo, hi),
        })
    }
}

/// The modelling choices used for each study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDefaults {
    pub order: WalkOrder,
    pub k: usize,
    pub domain_rule: DomainRule,
    pub delta: Vec<f64>,
    pub target_accept: f64,
}

pub fn default_config_for(scenario: Scenario, data: &GroupedDataset) -> ScenarioDefaults {
    let n = data.len();
    let (order, k, domain_rule, delta) = match scenario {
        Scenario::GaussLinear | Scenario::GaussQuadratic => {
            (WalkOrder::Third, 10, DomainRule::Padded(DOMAIN_PAD), vec![0.1; n])
        }
        Scenario::ExpLinear => (WalkOrder::Second, 20, DomainRule::ZeroToMax, vec![0.1; n]),
        Scenario::BetaLinear => (WalkOrder::First, 12, DomainRule::Unit, vec![1.0; n]),
        Scenario::BetaQuadratic => (WalkOrder::First, 15, DomainRule::Unit, vec![1.0; n]),
        Scenario::Croon => {
            let delta = data.group_sizes().iter().map(|&m| if m <= 10 { 0.05 } else { 0.1 }).collect();
            (WalkOrder::Third, 10, DomainRule::Range, delta)
        }
    };
    let target_accept = match scenario {
        Scenario::GaussLinear | Scenario::GaussQuadratic => 0.985,
        _ => 0.99,
    };
    ScenarioDefaults { order, k, domain_rule, delta, target_accept }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.id().parse::<Scenario>().unwrap(), s);
        }
        assert!(matches!("nope".parse::<Scenario>(), Err(FrodoError::UnknownScenario(_))));
    }

    #[test]
    fn reproducible() {
        for s in Scenario::ALL {
            let spec = ScenarioSpec { n_groups: 12, ..ScenarioSpec::study(s, 9) };
            assert_eq!(simulate(&spec).unwrap(), simulate(&spec).unwrap());
        }
    }

    #[test]
    fn noise_free_gauss_linear() {
        let spec = ScenarioSpec { noise_free: true, n_groups: 30, ..ScenarioSpec::study(Scenario::GaussLinear, 2) };
        let (data, truth) = simulate(&spec).unwrap();
        for (g, xi) in data.groups.iter().zip(&truth.latent) {
            assert_eq!(g.y, 0.3 + 0.4 * xi);
            assert!(g.x.iter().all(|x| x == xi));
        }
    }

    #[test]
    fn noise_free_matches_expected_response() {
        for s in Scenario::ALL {
            let spec = ScenarioSpec { noise_free: true, n_groups: 20, ..ScenarioSpec::study(s, 3) };
            let (data, truth) = simulate(&spec).unwrap();
            for (g, e) in data.groups.iter().zip(&truth.expected_response) {
                assert_eq!(g.y, *e);
            }
        }
    }

    #[test]
    fn beta_quadratic_response_at_two() {
        let spec = ScenarioSpec::study(Scenario::BetaQuadratic, 1);
        assert!((expected_response(&spec, 2.0, 0.0) - spec.alpha - 1.2).abs() < 1e-15);
    }

    #[test]
    fn beta_quadratic_moment_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for xi in [0.3, 2.0] {
            let law = Beta::new(xi, xi).unwrap();
            let n = 1_000_000;
            let v: Vec<f64> = (0..n).map(|_| 4.0 * (law.sample(&mut rng) - 0.5f64).powi(2)).collect();
            let m = v.iter().sum::<f64>() / n as f64;
            let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            let se = sd / (n as f64).sqrt();
            assert!((m - 1.0 / (2.0 * xi + 1.0)).abs() < 3.0 * se, "xi {xi}: {m}");
        }
    }

    #[test]
    fn beta_star_reproduces_expected_response_quadratic() {
        // E_i[β*(X)] under Beta(ξ, ξ) by midpoint quadrature
        let xi: f64 = 0.7;
        let law = statrs::distribution::Beta::new(xi, xi).unwrap();
        use statrs::distribution::Continuous;
        let m = 200_000;
        let mut acc = 0.0;
        for j in 0..m {
            let x = (j as f64 + 0.5) / m as f64;
            acc += beta_star(Scenario::BetaQuadratic, 1.0, x) * law.pdf(x) / m as f64;
        }
        assert!((acc - (1.0 + 1.0 / (2.0 * xi + 1.0))).abs() < 1e-3);
    }

    #[test]
    fn croon_group_sizes_and_z() {
        let (data, truth) = simulate(&ScenarioSpec::study(Scenario::Croon, 5)).unwrap();
        let sizes = data.group_sizes();
        assert!(sizes.iter().all(|&n| n == 10 || n == 40));
        assert!(sizes.contains(&10) && sizes.contains(&40));
        assert!(data.has_scalar_covariate());
        assert_eq!(truth.beta_z, Some(0.3));
        let d = default_config_for(Scenario::Croon, &data);
        for (n, delta) in sizes.iter().zip(&d.delta) {
            assert_eq!(*delta, if *n == 10 { 0.05 } else { 0.1 });
        }
    }

    #[test]
    fn defaults_table() {
        let expect = [
            (Scenario::GaussLinear, 3, 10, 0.1),
            (Scenario::GaussQuadratic, 3, 10, 0.1),
            (Scenario::ExpLinear, 2, 20, 0.1),
            (Scenario::BetaLinear, 1, 12, 1.0),
            (Scenario::BetaQuadratic, 1, 15, 1.0),
        ];
        for (s, r, k, delta) in expect {
            let (data, _) = simulate(&ScenarioSpec { n_groups: 10, ..ScenarioSpec::study(s, 1) }).unwrap();
            let d = default_config_for(s, &data);
            assert_eq!((d.order.as_usize(), d.k), (r, k));
            assert!(d.delta.iter().all(|&x| x == delta));
        }
    }

    #[test]
    fn covariates_inside_domain() {
        for s in Scenario::ALL {
            let (data, _) = simulate(&ScenarioSpec { n_groups: 40, ..ScenarioSpec::study(s, 4) }).unwrap();
            let (a, b) = default_config_for(s, &data).domain_rule.apply(&data).unwrap();
            assert!(data.all_x().all(|x| x >= a && x <= b), "{s}");
        }
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = ScenarioSpec { sigma_y: 0.0, ..ScenarioSpec::study(Scenario::GaussLinear, 1) };
        assert!(simulate(&spec).is_err());
    }
}
