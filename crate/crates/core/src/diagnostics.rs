//! Convergence diagnostics and posterior summaries.
//!
//! R̂ and ESS are computed on rank-normalized split chains, so both are
//! invariant under strictly monotone transformations of the draws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{FrodoError, Result};
use crate::model::DomainSpec;

/// Minimum R̂ threshold used by the gates.
pub const RHAT_THRESHOLD: f64 = 1.01;
/// Minimum effective sample size used by the gates.
pub const ESS_THRESHOLD: f64 = 400.0;
/// Minimum number of draws for pointwise bands.
pub const MIN_BAND_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    /// ESS capped at the total number of draws.
    pub ess: f64,
    pub ess_raw: f64,
    pub rhat: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub parameters: Vec<ParameterSummary>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn max_rhat(&self) -> f64 {
        self.parameters.iter().map(|p| p.rhat).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.parameters.iter().map(|p| p.ess).fold(f64::INFINITY, f64::min)
    }
}

fn check_chains(chains: &[Vec<f64>]) -> Result<usize> {
    let s = chains.first().map_or(0, Vec::len);
    if chains.is_empty() || chains.iter().any(|c| c.len() != s) {
        return Err(FrodoError::Dimension("chains must be non-empty and of equal length".into()));
    }
    if s < 4 {
        return Err(FrodoError::UndefinedDiagnostic(format!("need at least 4 draws per chain, got {s}")));
    }
    if chains.iter().flatten().any(|x| !x.is_finite()) {
        return Err(FrodoError::UndefinedDiagnostic("draws contain non-finite values".into()));
    }
    Ok(s)
}

/// Splits every chain into halves, dropping the middle draw of odd chains.
fn split(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

/// Replaces every draw by the normal score of its pooled rank, with ties
/// receiving their average rank.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = chains.iter().map(Vec::len).sum();
    let mut idx: Vec<(f64, usize, usize)> = chains
        .iter()
        .enumerate()
        .flat_map(|(c, v)| v.iter().enumerate().map(move |(i, &x)| (x, c, i)))
        .collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0));
    let std_normal = Normal::standard();
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let n = total as f64;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && idx[end].0 == idx[start].0 {
            end += 1;
        }
        // 1-based average rank of the tie block
        let rank = (start + end + 1) as f64 / 2.0;
        let z = std_normal.inverse_cdf((rank - 0.375) / (n + 0.25));
        for &(_, c, i) in &idx[start..end] {
            out[c][i] = z;
        }
        start = end;
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn rhat_basic(chains: &[Vec<f64>]) -> Result<f64> {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let within = chains.iter().map(|c| sample_variance(c)).sum::<f64>() / chains.len() as f64;
    if !(within > 0.0) {
        return Err(FrodoError::UndefinedDiagnostic("zero within-chain variance".into()));
    }
    let between = if chains.len() > 1 { n * sample_variance(&means) } else { 0.0 };
    // sampling noise can push the ratio a hair below one
    Ok(((between / within + n - 1.0) / n).sqrt().max(1.0))
}

fn ess_basic(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    let n = chains[0].len();
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let acov = |lag: usize| -> f64 {
        chains
            .iter()
            .zip(&means)
            .map(|(c, mu)| (0..n - lag).map(|i| (c[i] - mu) * (c[i + lag] - mu)).sum::<f64>() / nf)
            .sum::<f64>()
            / m as f64
    };
    let mean_var = acov(0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += sample_variance(&means);
    }
    if !(var_plus > 0.0) {
        return Err(FrodoError::UndefinedDiagnostic("zero variance".into()));
    }
    let rho_at = |lag: usize| 1.0 - (mean_var - acov(lag)) / var_plus;

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut even = 1.0;
    let mut odd = rho_at(1);
    rho[1] = odd;
    let mut t = 0;
    // Geyer's initial positive sequence over pairs of lags
    while t + 5 < n && (even + odd) > 0.0 {
        t += 2;
        even = rho_at(t);
        odd = rho_at(t + 1);
        if even + odd >= 0.0 {
            rho[t] = even;
            rho[t + 1] = odd;
        }
    }
    let max_t = t;
    if even > 0.0 {
        rho[max_t] = even;
    }
    // initial monotone sequence
    let mut t = 0;
    while t + 4 <= max_t {
        t += 2;
        let prev = rho[t - 2] + rho[t - 1];
        if rho[t] + rho[t + 1] > prev {
            rho[t] = prev / 2.0;
            rho[t + 1] = prev / 2.0;
        }
    }
    let total = (m * n) as f64;
    let tau = (-1.0 + 2.0 * rho[..max_t].iter().sum::<f64>() + rho[max_t]).max(1.0 / total.log10());
    Ok(total / tau)
}

/// Rank-normalized split R̂ of one parameter, from `C` chains of `S` draws.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    check_chains(chains)?;
    rhat_basic(&rank_normalize(&split(chains)))
}

/// Rank-normalized effective sample size with Geyer's pairwise truncation.
/// May exceed `C × S` for antithetic chains; see [`ParameterSummary::ess`]
/// for the capped value.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    check_chains(chains)?;
    ess_basic(&rank_normalize(&split(chains)))
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (`h = (n − 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

/// Summary of one scalar parameter given per-chain draws.
pub fn summarize(name: &str, chains: &[Vec<f64>]) -> Result<ParameterSummary> {
    let s = check_chains(chains)?;
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let ess_raw = ess(chains)?;
    Ok(ParameterSummary {
        name: name.to_string(),
        mean: mean(&pooled),
        sd: sample_variance(&pooled).sqrt(),
        q025: quantile_sorted(&sorted, 0.025),
        q975: quantile_sorted(&sorted, 0.975),
        ess: ess_raw.min((s * chains.len()) as f64),
        ess_raw,
        rhat: split_rhat(chains)?,
    })
}

/// Pointwise bands of a function-valued quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBand {
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Per-bin mean and 2.5% / 97.5% quantiles; `draws` holds one row per draw.
pub fn functional_bands(draws: &[Vec<f64>]) -> Result<FunctionalBand> {
    if draws.len() < MIN_BAND_DRAWS {
        return Err(FrodoError::Config(format!(
            "pointwise bands need at least {MIN_BAND_DRAWS} draws, got {}",
            draws.len()
        )));
    }
    let k = draws[0].len();
    if draws.iter().any(|d| d.len() != k) {
        return Err(FrodoError::Dimension("ragged draws".into()));
    }
    let mut band = FunctionalBand { mean: Vec::with_capacity(k), lo: Vec::with_capacity(k), hi: Vec::with_capacity(k) };
    let mut col = vec![0.0; draws.len()];
    for j in 0..k {
        for (c, d) in col.iter_mut().zip(draws) {
            *c = d[j];
        }
        band.mean.push(mean(&col));
        col.sort_by(f64::total_cmp);
        band.lo.push(quantile_sorted(&col, 0.025));
        band.hi.push(quantile_sorted(&col, 0.975));
    }
    Ok(band)
}

/// Slope of the secant through the first and last bin midpoints, on the
/// standardized scale.
pub fn secant_slope(beta_means: &[f64], domain: &DomainSpec) -> Result<f64> {
    let k = beta_means.len();
    if k < 2 || k != domain.k {
        return Err(FrodoError::Dimension(format!("{k} bin means for a domain of {} bins", domain.k)));
    }
    Ok((beta_means[k - 1] - beta_means[0]) / ((k - 1) as f64 * domain.h))
}
