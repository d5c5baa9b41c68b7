//! Regressions that treat a per-group summary of the covariate sample as
//! if it were the exact covariate.

use super::{bspline_basis, diffuse_coefficient, gaussian_loglik, sigma_y_block, uniform_knots, BaselineKind, BaselineModel};
use crate::error::{FrodoError, Result};
use crate::gradient::{Layout, Model, Real};
use crate::model::{build_beta0, GroupedDataset, TAU_BETA_RATE};
use crate::pipeline::StandardizationInfo;

/// Interior knots of the naive P-spline.
pub const GAM_INTERIOR_KNOTS: usize = 20;
pub const GAM_DEGREE: usize = 3;

#[derive(Debug, Clone)]
enum Design {
    Linear { w: Vec<f64> },
    /// Basis rows with column means removed, so fitted curves average to
    /// zero over the groups.
    Spline { basis: Vec<Vec<f64>>, knot_step: f64 },
}

/// Naive Gaussian regression of the standardized response on a
/// standardized per-group summary `w`.
#[derive(Debug, Clone)]
pub struct NaiveModel {
    y: Vec<f64>,
    z: Option<Vec<f64>>,
    design: Design,
    layout: Layout,
    info: StandardizationInfo,
    w_mean: f64,
    w_sd: f64,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

impl NaiveModel {
    pub fn new(data: &GroupedDataset, info: &StandardizationInfo, kind: BaselineKind) -> Result<Self> {
        data.validate()?;
        let summary = |x: &[f64]| -> f64 {
            let n = x.len() as f64;
            match kind {
                BaselineKind::NaiveTransformed => x.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>() / n,
                _ => x.iter().sum::<f64>() / n,
            }
        };
        let raw: Vec<f64> = data.groups.iter().map(|g| summary(&g.x)).collect();
        let (w_mean, w_sd) = mean_sd(&raw);
        // constant summaries leave the slope to its prior
        let w_sd = if w_sd > 0.0 { w_sd } else { 1.0 };
        let w: Vec<f64> = raw.iter().map(|v| (v - w_mean) / w_sd).collect();
        let mut layout = Layout::new();
        layout.push("alpha", 1);
        let design = match kind {
            BaselineKind::NaiveLinear | BaselineKind::NaiveTransformed => {
                layout.push("beta", 1);
                Design::Linear { w }
            }
            BaselineKind::NaiveGam => {
                let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                if !(lo < hi) {
                    return Err(FrodoError::Data("spline covariate has no spread".into()));
                }
                let knots = uniform_knots(lo, hi, GAM_INTERIOR_KNOTS, GAM_DEGREE)?;
                let mut basis = w.iter().map(|&v| bspline_basis(v, &knots, GAM_DEGREE)).collect::<Result<Vec<_>>>()?;
                let m = basis[0].len();
                let n = basis.len() as f64;
                for j in 0..m {
                    let mean = basis.iter().map(|r| r[j]).sum::<f64>() / n;
                    basis.iter_mut().for_each(|r| r[j] -= mean);
                }
                layout.push("spline_free", 1);
                layout.push("spline_rw", m - 2);
                layout.push("log_tau_beta", 1);
                Design::Spline { basis, knot_step: knots[1] - knots[0] }
            }
            BaselineKind::Hierarchical => {
                return Err(FrodoError::Config("hierarchical is not a naive baseline".into()))
            }
        };
        layout.push("log_sigma_y_z", 1);
        layout.push("log_sigma_y_g", 1);
        let z = data.scalar_covariates();
        if z.is_some() {
            layout.push("beta_z", 1);
        }
        let y = data.groups.iter().map(|g| (g.y - info.y_mean) / info.y_sd).collect();
        Ok(NaiveModel { y, z, design, layout, info: *info, w_mean, w_sd })
    }

    fn at(&self, name: &str) -> usize {
        self.layout.get(name).expect("layout block").start
    }
}

impl Model for NaiveModel {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn log_density<R: Real>(&self, q: &[R]) -> R {
        let (lp_sigma, sigma, log_sigma) = sigma_y_block(q[self.at("log_sigma_y_z")], q[self.at("log_sigma_y_g")]);
        let alpha = q[self.at("alpha")];
        let mut terms = vec![lp_sigma, diffuse_coefficient(alpha, sigma, log_sigma)];
        let mut mean: Vec<R> = match &self.design {
            Design::Linear { w } => {
                let beta = q[self.at("beta")];
                terms.push(diffuse_coefficient(beta, sigma, log_sigma));
                w.iter().map(|&v| alpha + beta * v).collect()
            }
            Design::Spline { basis, knot_step } => {
                let free = q[self.at("spline_free")];
                let rw = &q[self.layout.get("spline_rw").expect("layout block")];
                let log_tau = q[self.at("log_tau_beta")];
                let tau = log_tau.exp();
                terms.push(free.square() * -0.5);
                terms.push(R::sum_of_squares(rw) * -0.5);
                terms.push(log_tau - tau * TAU_BETA_RATE);
                let coef = build_beta0(*knot_step, sigma, tau, free, rw);
                basis.iter().map(|row| alpha + R::linear_combination(&coef, row, 0.0)).collect()
            }
        };
        if let Some(z) = &self.z {
            let bz = q[self.at("beta_z")];
            terms.push(diffuse_coefficient(bz, sigma, log_sigma));
            mean.iter_mut().zip(z).for_each(|(m, &v)| *m = *m + bz * v);
        }
        terms.push(gaussian_loglik(&self.y, &mean, sigma, log_sigma));
        R::sum(&terms)
    }
}

impl BaselineModel for NaiveModel {
    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn initial_point(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.dim()];
        if let Some(r) = self.layout.get("log_tau_beta") {
            q[r.start] = 0.5f64.ln();
        }
        q
    }

    fn derived_names(&self) -> Vec<String> {
        let mut names = vec!["sigma_y".to_string(), "alpha".to_string()];
        match self.design {
            Design::Linear { .. } => names.push("slope".into()),
            Design::Spline { .. } => names.push("tau_beta".into()),
        }
        if self.z.is_some() {
            names.push("beta_z".into());
        }
        names
    }

    fn derived(&self, q: &[f64]) -> Vec<f64> {
        let (_, sigma, _) = sigma_y_block(q[self.at("log_sigma_y_z")], q[self.at("log_sigma_y_g")]);
        let alpha = q[self.at("alpha")];
        let info = &self.info;
        let mut out = vec![info.response_scale(sigma)];
        match self.design {
            Design::Linear { .. } => {
                let beta = q[self.at("beta")];
                // intercept at a zero summary on the original scale
                out.push(info.response(alpha - beta * self.w_mean / self.w_sd));
                out.push(info.response_scale(beta) / self.w_sd);
            }
            Design::Spline { .. } => {
                out.push(info.response(alpha));
                out.push(q[self.at("log_tau_beta")].exp());
            }
        }
        if self.z.is_some() {
            out.push(info.response_scale(q[self.at("beta_z")]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{fit_baseline, BaselineSpec};
    use crate::gradient::value_and_grad;
    use crate::model::GroupRecord;
    use crate::nuts::SamplerSettings;
    use crate::simulate::Scenario;

    fn linear_data(n: usize, constant_x: bool) -> GroupedDataset {
        let groups = (0..n)
            .map(|i| {
                let x = if constant_x { 1.0 } else { -2.0 + 4.0 * i as f64 / (n - 1) as f64 };
                let noise = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
                GroupRecord { y: 0.3 + 0.4 * x + 0.05 * noise, x: vec![x - 0.1, x + 0.1], z: None }
            })
            .collect();
        GroupedDataset { groups }
    }

    fn quick() -> SamplerSettings {
        SamplerSettings { chains: 2, warmup: 300, sampling: 400, seed: 11, ..SamplerSettings::default() }
    }

    #[test]
    fn exact_covariates_recover_the_slope() {
        let data = linear_data(200, false);
        let run = fit_baseline(&data, BaselineSpec::new(BaselineKind::NaiveLinear, Scenario::GaussLinear).unwrap(), &quick())
            .unwrap();
        let slope = run.mean("slope").unwrap();
        assert!((slope - 0.4).abs() < 0.01, "slope {slope}");
        assert!((run.mean("alpha").unwrap() - 0.3).abs() < 0.02);
    }

    #[test]
    fn constant_covariate_leaves_the_prior() {
        let mut data = linear_data(60, true);
        // make responses vary so the standardization is defined
        for (i, g) in data.groups.iter_mut().enumerate() {
            g.y = (i % 5) as f64;
        }
        let info = StandardizationInfo { y_mean: 0.0, y_sd: 1.0, x_mean: 0.0, x_sd: 1.0 };
        let m = NaiveModel::new(&data, &info, BaselineKind::NaiveLinear).unwrap();
        // the likelihood does not depend on the slope
        let mut q = m.initial_point();
        let base = m.log_density(&q);
        let b = m.at("beta");
        q[b] = 0.7;
        let (_, sigma, log_sigma) = sigma_y_block(0.0, 0.0);
        let prior_shift = diffuse_coefficient(0.7, sigma, log_sigma) - diffuse_coefficient(0.0, sigma, log_sigma);
        assert!((m.log_density(&q) - base - prior_shift).abs() < 1e-12);
    }

    #[test]
    fn gam_gradient_and_design() {
        let data = linear_data(80, false);
        let info = StandardizationInfo::from_dataset(&data).unwrap();
        let m = NaiveModel::new(&data, &info, BaselineKind::NaiveGam).unwrap();
        assert_eq!(m.layout.get("spline_rw").unwrap().len(), GAM_INTERIOR_KNOTS + GAM_DEGREE - 1);
        let q: Vec<f64> = (0..m.dim()).map(|j| 0.1 * ((j * 31 % 17) as f64 - 8.0) / 8.0).collect();
        let g = value_and_grad(&m, &q);
        for j in 0..m.dim() {
            let e = 1e-6;
            let (mut a, mut b) = (q.clone(), q.clone());
            a[j] += e;
            b[j] -= e;
            let fd = (m.log_density(&a) - m.log_density(&b)) / (2.0 * e);
            assert!((fd - g.grad[j]).abs() < 1e-5 * (1.0 + fd.abs()), "coordinate {j}: {fd} vs {}", g.grad[j]);
        }
    }

    #[test]
    fn transformed_summary_is_squared_deviation() {
        let data = GroupedDataset {
            groups: vec![
                GroupRecord { y: 0.0, x: vec![0.0, 1.0], z: None },
                GroupRecord { y: 1.0, x: vec![0.5, 0.5], z: None },
                GroupRecord { y: 2.0, x: vec![0.25, 0.75], z: None },
            ],
        };
        let info = StandardizationInfo::from_dataset(&data).unwrap();
        let m = NaiveModel::new(&data, &info, BaselineKind::NaiveTransformed).unwrap();
        let (mean, _) = mean_sd(&[0.25, 0.0, 0.0625]);
        assert!((m.w_mean - mean).abs() < 1e-15);
    }
}
