//! Domain types and the joint log-posterior of the density-regression model.

mod density;
mod difference;
mod params;
mod posterior;
mod regression;

pub use density::{
    decode_theta, density_coefficients, empirical_central_density, log_multinomial_coefficient,
    multinomial_loglik,
};
pub use difference::{finite_difference, invert_difference};
pub use params::{dimension, GroupInnovations, LatentBlock, ParameterState, RegressionBlock};
pub use posterior::{log_posterior, log_prior, DecodedLatent, DecodedState, FrodoModel, ModelData};
pub(crate) use posterior::{log_half_normal, log_normal, LN_2, LN_SQRT_2PI, TAU_BETA_RATE};
pub(crate) use regression::{build_beta0, DIFFUSE_SCALE};
pub use regression::{center_beta, regression_mean, sigma_y_from_components};

use serde::{Deserialize, Serialize};

use crate::error::{FrodoError, Result};
use crate::nuts::SamplerSettings;

/// One group: a response, the individual-level covariate sample and an
/// optional group-level scalar covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub y: f64,
    pub x: Vec<f64>,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupedDataset {
    pub groups: Vec<GroupRecord>,
}

impl GroupedDataset {
    pub fn new(groups: Vec<GroupRecord>) -> Result<Self> {
        let ds = GroupedDataset { groups };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn has_scalar_covariate(&self) -> bool {
        self.groups.first().is_some_and(|g| g.z.is_some())
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.len() < 2 {
            return Err(FrodoError::Data(format!(
                "need at least 2 groups, got {}",
                self.groups.len()
            )));
        }
        let with_z = self.has_scalar_covariate();
        for (i, g) in self.groups.iter().enumerate() {
            if g.x.is_empty() {
                return Err(FrodoError::Data(format!("group {i} has no covariate values")));
            }
            if !g.y.is_finite() || g.x.iter().any(|x| !x.is_finite()) {
                return Err(FrodoError::Data(format!("group {i} contains non-finite values")));
            }
            match g.z {
                Some(z) if !z.is_finite() => {
                    return Err(FrodoError::Data(format!("group {i} has non-finite z")))
                }
                Some(_) if !with_z => {
                    return Err(FrodoError::Data("z must be present for all groups or none".into()))
                }
                None if with_z => {
                    return Err(FrodoError::Data(format!("group {i} is missing z")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn responses(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.y).collect()
    }

    pub fn scalar_covariates(&self) -> Option<Vec<f64>> {
        self.groups.iter().map(|g| g.z).collect()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.x.len()).collect()
    }

    pub fn all_x(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups.iter().flat_map(|g| g.x.iter().copied())
    }
}

/// The common covariate domain, on both the original and the standardized
/// scale, split into `k` equal-width bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub a_prime: f64,
    pub b_prime: f64,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub k: usize,
}

impl DomainSpec {
    /// Builds the domain from original-scale endpoints and the marginal
    /// covariate mean and standard deviation.
    pub fn new(a_prime: f64, b_prime: f64, x_mean: f64, x_sd: f64, k: usize) -> Result<Self> {
        if !(a_prime < b_prime) || !a_prime.is_finite() || !b_prime.is_finite() {
            return Err(FrodoError::Config(format!("invalid domain [{a_prime}, {b_prime}]")));
        }
        if !(x_sd > 0.0) {
            return Err(FrodoError::Config("covariate standard deviation must be positive".into()));
        }
        if k == 0 {
            return Err(FrodoError::Config("K must be positive".into()));
        }
        let a = (a_prime - x_mean) / x_sd;
        let b = (b_prime - x_mean) / x_sd;
        Ok(DomainSpec { a_prime, b_prime, a, b, h: (b - a) / k as f64, k })
    }

    /// A domain whose original and standardized scales coincide.
    pub fn unit_scale(a: f64, b: f64, k: usize) -> Result<Self> {
        Self::new(a, b, 0.0, 1.0, k)
    }

    /// Lower edge of bin `k` (0-based).
    pub fn edge(&self, k: usize) -> f64 {
        self.a + k as f64 * self.h
    }

    /// Midpoint of bin `k` (0-based), standardized scale.
    pub fn midpoint(&self, k: usize) -> f64 {
        self.a + (k as f64 + 0.5) * self.h
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.k).map(|k| self.midpoint(k)).collect()
    }

    /// Bin of a standardized value: half-open bins, the last one closed at `b`.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.a && x <= self.b) {
            return None;
        }
        let mut idx = (((x - self.a) / self.h).floor() as usize).min(self.k - 1);
        // agree with `edge` when the division rounds across a boundary
        if idx > 0 && x < self.edge(idx) {
            idx -= 1;
        } else if idx + 1 < self.k && x >= self.edge(idx + 1) {
            idx += 1;
        }
        Some(idx)
    }

    /// Prior mean of the latent location hyperparameter: the standardized
    /// image of zero on the original scale, `(a'b − b'a)/(a' − b')`.
    pub fn latent_location_prior_mean(&self) -> f64 {
        (self.a_prime * self.b - self.b_prime * self.a) / (self.a_prime - self.b_prime)
    }
}

/// Order of the random-walk prior on the log-density coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum WalkOrder {
    /// Limiting shape: uniform.
    First,
    /// Limiting shape: exponential.
    Second,
    /// Limiting shape: Gaussian.
    Third,
}

impl WalkOrder {
    pub fn as_usize(self) -> usize {
        match self {
            WalkOrder::First => 1,
            WalkOrder::Second => 2,
            WalkOrder::Third => 3,
        }
    }
}

impl TryFrom<usize> for WalkOrder {
    type Error = FrodoError;

    fn try_from(r: usize) -> Result<Self> {
        match r {
            1 => Ok(WalkOrder::First),
            2 => Ok(WalkOrder::Second),
            3 => Ok(WalkOrder::Third),
            _ => Err(FrodoError::Config(format!("random-walk order must be 1, 2 or 3, got {r}"))),
        }
    }
}

impl From<WalkOrder> for usize {
    fn from(r: WalkOrder) -> usize {
        r.as_usize()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub order: WalkOrder,
    pub k: usize,
    pub domain: DomainSpec,
    /// Per-group prior scale of the smoothing parameters.
    pub delta: Vec<f64>,
    pub has_scalar_covariate: bool,
    pub sampler: SamplerSettings,
}

impl ModelConfig {
    pub fn validate(&self, n_groups: usize) -> Result<()> {
        let r = self.order.as_usize();
        if self.k < r + 1 {
            return Err(FrodoError::Config(format!("K = {} must be at least r + 1 = {}", self.k, r + 1)));
        }
        if self.k < 3 {
            return Err(FrodoError::Config("K must be at least 3 for the coefficient function".into()));
        }
        if self.domain.k != self.k {
            return Err(FrodoError::Config("domain bin count differs from K".into()));
        }
        if self.delta.len() != n_groups {
            return Err(FrodoError::Config(format!(
                "delta has {} entries for {} groups",
                self.delta.len(),
                n_groups
            )));
        }
        if self.delta.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(FrodoError::Config("all delta values must be positive".into()));
        }
        self.sampler.validate()
    }
}

/// Bin counts per group: the sufficient statistic of the density likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCovariates {
    /// `counts[i][k]` is the number of observations of group `i` in bin `k`.
    pub counts: Vec<Vec<u32>>,
    pub group_sizes: Vec<u32>,
}

impl BinnedCovariates {
    pub fn from_counts(counts: Vec<Vec<u32>>) -> Result<Self> {
        let k = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|row| row.len() != k) {
            return Err(FrodoError::Dimension("ragged bin-count matrix".into()));
        }
        let group_sizes = counts.iter().map(|row| row.iter().sum()).collect();
        Ok(BinnedCovariates { counts, group_sizes })
    }

    pub fn n_groups(&self) -> usize {
        self.counts.len()
    }

    pub fn n_bins(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn total(&self) -> u64 {
        self.group_sizes.iter().map(|&n| n as u64).sum()
    }
}

/// Density heights of every group's histogram; `h · Σ_k φ_ik = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCoefficients {
    pub phi: Vec<Vec<f64>>,
}

/// Piecewise-constant coefficient function on the `K` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFunction {
    pub values: Vec<f64>,
    pub centered: bool,
}

impl CoefficientFunction {
    pub fn uncentered(values: Vec<f64>) -> Self {
        CoefficientFunction { values, centered: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_geometry() {
        let d = DomainSpec::new(-13.67077, 11.0, 0.5, 3.5, 10).unwrap();
        assert!((d.h * 10.0 - (d.b - d.a)).abs() < 1e-12);
        assert!((d.a - (-13.67077 - 0.5) / 3.5).abs() < 1e-15);
        assert_eq!(d.bin_of(d.a), Some(0));
        assert_eq!(d.bin_of(d.b), Some(9));
        assert_eq!(d.bin_of(d.b + 1e-9), None);
        assert_eq!(d.bin_of(d.edge(3)), Some(3));
    }

    #[test]
    fn latent_location_prior_mean_is_standardized_zero() {
        for (ap, bp, m, s) in [(-13.67, 11.0, 0.3, 3.6), (0.0, 16.4, 1.1, 1.2), (-2.0, 5.0, -0.7, 0.4)] {
            let d = DomainSpec::new(ap, bp, m, s, 10).unwrap();
            assert!((d.latent_location_prior_mean() - (-m / s)).abs() < 1e-12);
        }
    }

    #[test]
    fn dataset_validation() {
        let g = |z| GroupRecord { y: 1.0, x: vec![0.5], z };
        assert!(GroupedDataset::new(vec![g(None)]).is_err());
        assert!(GroupedDataset::new(vec![g(None), g(Some(1.0))]).is_err());
        assert!(GroupedDataset::new(vec![g(Some(0.0)), g(Some(1.0))]).is_ok());
        let empty = GroupRecord { y: 1.0, x: vec![], z: None };
        assert!(GroupedDataset::new(vec![g(None), empty]).is_err());
    }

    #[test]
    fn walk_order_round_trip() {
        for r in 1..=3 {
            assert_eq!(WalkOrder::try_from(r).unwrap().as_usize(), r);
        }
        assert!(WalkOrder::try_from(4).is_err());
    }
}
