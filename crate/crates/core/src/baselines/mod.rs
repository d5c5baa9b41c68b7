//! Scalar comparison models: naive regressions on group summaries and the
//! hierarchical model with the scenario's known parametric form.

pub mod bspline;
mod hierarchical;
mod naive;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use bspline::{bspline_basis, uniform_knots};
pub use hierarchical::HierarchicalModel;
pub use naive::{NaiveModel, GAM_DEGREE, GAM_INTERIOR_KNOTS};

use crate::diagnostics::PosteriorSummary;
use crate::error::{FrodoError, Result};
use crate::gradient::{value_and_grad, Layout, Model, Real, TapeTarget};
use crate::init::init_rng;
use crate::model::{log_half_normal, log_normal, DIFFUSE_SCALE, LN_2, LN_SQRT_2PI};
use crate::model::GroupedDataset;
use crate::nuts::{ChainOutput, SamplerSettings};
use crate::pipeline::{gate_report, run_timed, DerivedDraws, GateReport, StandardizationInfo};
use crate::simulate::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    NaiveLinear,
    NaiveGam,
    NaiveTransformed,
    Hierarchical,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] =
        [BaselineKind::NaiveLinear, BaselineKind::NaiveGam, BaselineKind::NaiveTransformed, BaselineKind::Hierarchical];

    pub fn id(self) -> &'static str {
        match self {
            BaselineKind::NaiveLinear => "naive_linear",
            BaselineKind::NaiveGam => "naive_gam",
            BaselineKind::NaiveTransformed => "naive_transformed",
            BaselineKind::Hierarchical => "hierarchical",
        }
    }

    pub fn is_naive(self) -> bool {
        self != BaselineKind::Hierarchical
    }

    /// The naive variant used for a scenario's comparison.
    pub fn naive_for(scenario: Scenario) -> Self {
        match scenario {
            Scenario::GaussQuadratic => BaselineKind::NaiveGam,
            Scenario::BetaQuadratic => BaselineKind::NaiveTransformed,
            _ => BaselineKind::NaiveLinear,
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BaselineKind {
    type Err = FrodoError;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| FrodoError::Config(format!("unknown baseline kind `{s}`")))
    }
}

/// A baseline model for one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub scenario: Scenario,
}

impl BaselineSpec {
    pub fn new(kind: BaselineKind, scenario: Scenario) -> Result<Self> {
        let ok = match kind {
            BaselineKind::NaiveGam => scenario == Scenario::GaussQuadratic,
            BaselineKind::NaiveTransformed => scenario == Scenario::BetaQuadratic,
            BaselineKind::NaiveLinear | BaselineKind::Hierarchical => true,
        };
        if !ok {
            return Err(FrodoError::IncompatibleBaseline { kind: kind.id().into(), scenario: scenario.id().into() });
        }
        Ok(BaselineSpec { kind, scenario })
    }

    /// How the naive group-level covariate is derived from a group's sample.
    pub fn covariate_rule(&self) -> &'static str {
        match self.kind {
            BaselineKind::NaiveTransformed => "mean of (x - 1/2)^2",
            BaselineKind::Hierarchical => "latent group parameter",
            _ => "sample mean of x",
        }
    }
}

/// Sampler-facing contract shared by the baseline models.
pub(crate) trait BaselineModel: Model + Sync {
    fn layout(&self) -> &Layout;
    fn initial_point(&self) -> Vec<f64>;
    /// Names of the original-scale quantities reported by `derived`.
    fn derived_names(&self) -> Vec<String>;
    fn derived(&self, q: &[f64]) -> Vec<f64>;
}

/// σ_Y on the log scale from its half-normal and Gamma components, with
/// the same prior as the main model. Returns `(log prior, σ_Y, log σ_Y)`.
pub(crate) fn sigma_y_block<R: Real>(log_z: R, log_g: R) -> (R, R, R) {
    let g = log_g.exp();
    let lp = log_half_normal(log_z, log_z.exp(), 1.0) + log_g * 2.0 - g * 2.0 + 2.0 * LN_2;
    let log_sigma = log_z - log_g * 0.5 - 0.5 * LN_2;
    (lp, log_sigma.exp(), log_sigma)
}

/// N(0, 20σ_Y) log-density of a regression coefficient.
pub(crate) fn diffuse_coefficient<R: Real>(c: R, sigma: R, log_sigma: R) -> R {
    log_normal(c, 0.0, sigma * DIFFUSE_SCALE, log_sigma + DIFFUSE_SCALE.ln())
}

/// Gaussian log-likelihood of `y` given means and σ_Y.
pub(crate) fn gaussian_loglik<R: Real>(y: &[f64], mean: &[R], sigma: R, log_sigma: R) -> R {
    let resid: Vec<R> = mean.iter().zip(y).map(|(&m, &v)| -(m - v)).collect();
    R::sum_of_squares(&resid) / sigma.square() * -0.5 - log_sigma * y.len() as f64 - y.len() as f64 * LN_SQRT_2PI
}

/// Posterior fit of a baseline model.
#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub spec: BaselineSpec,
    pub info: StandardizationInfo,
    pub settings: SamplerSettings,
    pub coordinate_names: Vec<String>,
    pub chains: Vec<ChainOutput>,
    pub chain_seconds: Vec<f64>,
    /// Quantities on the original scale.
    pub derived: DerivedDraws,
}

impl BaselineRun {
    pub fn summary(&self) -> Result<PosteriorSummary> {
        self.derived.summary()
    }

    pub fn gates(&self) -> GateReport {
        gate_report(&self.chains, &self.coordinate_names, &self.derived)
    }

    /// Posterior mean of a derived quantity.
    pub fn mean(&self, name: &str) -> Option<f64> {
        let v = self.derived.get(name)?;
        let n: usize = v.iter().map(Vec::len).sum();
        Some(v.iter().flatten().sum::<f64>() / n as f64)
    }
}

const JITTER_SD: f64 = 0.1;
const MAX_START_ATTEMPTS: usize = 20;

fn sample_model<M: BaselineModel>(
    model: M,
    spec: BaselineSpec,
    info: StandardizationInfo,
    settings: &SamplerSettings,
) -> Result<BaselineRun> {
    let base = model.initial_point();
    let starts = (0..settings.chains)
        .map(|c| {
            let mut rng = init_rng(settings.seed, c);
            for _ in 0..MAX_START_ATTEMPTS {
                let q: Vec<f64> =
                    base.iter().map(|v| v + JITTER_SD * rng.sample::<f64, _>(StandardNormal)).collect();
                if value_and_grad(&model, &q).finite {
                    return Ok(q);
                }
            }
            Err(FrodoError::InitFailure {
                attempts: MAX_START_ATTEMPTS,
                reason: format!("baseline chain {c}: log-posterior or gradient not finite"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let target = TapeTarget(model);
    let (chains, chain_seconds) = run_timed(&target, &starts, settings)?;
    let model = target.0;
    let mut derived = DerivedDraws::new(model.derived_names(), chains.len());
    for (c, chain) in chains.iter().enumerate() {
        for q in &chain.draws {
            derived.push(c, &model.derived(q));
        }
    }
    Ok(BaselineRun {
        spec,
        info,
        settings: settings.clone(),
        coordinate_names: model.layout().coordinate_names(),
        chains,
        chain_seconds,
        derived,
    })
}

/// Fits a baseline with the same sampler as the main model.
pub fn fit_baseline(data: &GroupedDataset, spec: BaselineSpec, settings: &SamplerSettings) -> Result<BaselineRun> {
    let info = StandardizationInfo::from_dataset(data)?;
    if spec.kind.is_naive() {
        sample_model(NaiveModel::new(data, &info, spec.kind)?, spec, info, settings)
    } else {
        sample_model(HierarchicalModel::new(data, &info, spec.scenario)?, spec, info, settings)
    }
}

/// Naive regression on group summaries.
pub fn naive_fit(data: &GroupedDataset, spec: BaselineSpec, settings: &SamplerSettings) -> Result<PosteriorSummary> {
    if !spec.kind.is_naive() {
        return Err(FrodoError::Config(format!("`{}` is not a naive baseline", spec.kind)));
    }
    fit_baseline(data, spec, settings)?.summary()
}

/// Hierarchical model with the scenario's parametric covariate family.
pub fn hierarchical_fit(
    data: &GroupedDataset,
    spec: BaselineSpec,
    settings: &SamplerSettings,
) -> Result<PosteriorSummary> {
    if spec.kind != BaselineKind::Hierarchical {
        return Err(FrodoError::Config(format!("`{}` is not the hierarchical baseline", spec.kind)));
    }
    fit_baseline(data, spec, settings)?.summary()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compatibility_rules() {
        use BaselineKind::*;
        for s in Scenario::ALL {
            assert!(BaselineSpec::new(NaiveLinear, s).is_ok());
            assert!(BaselineSpec::new(Hierarchical, s).is_ok());
            assert_eq!(BaselineSpec::new(NaiveGam, s).is_ok(), s == Scenario::GaussQuadratic);
            assert_eq!(BaselineSpec::new(NaiveTransformed, s).is_ok(), s == Scenario::BetaQuadratic);
            assert!(BaselineSpec::new(BaselineKind::naive_for(s), s).is_ok());
        }
        let e = BaselineSpec::new(NaiveGam, Scenario::Croon).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        for k in BaselineKind::ALL {
            assert_eq!(k.id().parse::<BaselineKind>().unwrap(), k);
        }
    }

    #[test]
    fn sigma_block_matches_direct_construction() {
        let (lp, s, ls) = sigma_y_block(0.3f64, -0.2f64);
        let (z, g) = (0.3f64.exp(), (-0.2f64).exp());
        assert!((s - z / (2.0 * g).sqrt()).abs() < 1e-14);
        assert!((ls - s.ln()).abs() < 1e-14);
        // half-normal(z) · Gamma(2, 2)(g) · Jacobians z g
        let hn = (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * z * z).exp();
        let gam = 4.0 * g * (-2.0 * g).exp();
        assert!((lp - (hn * gam * z * g).ln()).abs() < 1e-12);
    }
}
