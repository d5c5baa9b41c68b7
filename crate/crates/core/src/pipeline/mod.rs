//! End-to-end orchestration: standardization, binning, fitting and the
//! gated summaries written by the command-line tool.

pub mod io;
pub mod report;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    ess, functional_bands, secant_slope, split_rhat, summarize, FunctionalBand, PosteriorSummary, ESS_THRESHOLD,
    RHAT_THRESHOLD,
};
use crate::error::{FrodoError, Result};
use crate::gradient::GradientTarget;
use crate::init::{initial_state, jittered_starts, InitSettings};
use crate::model::{
    BinnedCovariates, DomainSpec, FrodoModel, GroupRecord, GroupedDataset, ModelConfig, ModelData, WalkOrder,
};
use crate::nuts::{run_chain, ChainOutput, SamplerSettings};
use crate::simulate::{default_config_for, Scenario};

/// Marginal means and standard deviations used to standardize a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationInfo {
    pub y_mean: f64,
    pub y_sd: f64,
    pub x_mean: f64,
    pub x_sd: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

impl StandardizationInfo {
    /// Responses are standardized over groups, covariates over all
    /// individuals pooled; standard deviations use `n − 1`.
    pub fn from_dataset(data: &GroupedDataset) -> Result<Self> {
        data.validate()?;
        let (y_mean, y_sd) = mean_sd(&data.responses());
        let (x_mean, x_sd) = mean_sd(&data.all_x().collect::<Vec<_>>());
        if !(y_sd > 0.0) || !(x_sd > 0.0) {
            return Err(FrodoError::Data("responses or covariates have zero variance".into()));
        }
        Ok(StandardizationInfo { y_mean, y_sd, x_mean, x_sd })
    }

    fn map(&self, data: &GroupedDataset, fy: impl Fn(f64) -> f64, fx: impl Fn(f64) -> f64) -> GroupedDataset {
        let groups = data
            .groups
            .iter()
            .map(|g| GroupRecord { y: fy(g.y), x: g.x.iter().map(|&x| fx(x)).collect(), z: g.z })
            .collect();
        GroupedDataset { groups }
    }

    pub fn transform(&self, data: &GroupedDataset) -> GroupedDataset {
        self.map(data, |y| (y - self.y_mean) / self.y_sd, |x| (x - self.x_mean) / self.x_sd)
    }

    pub fn back_transform(&self, data: &GroupedDataset) -> GroupedDataset {
        self.map(data, |y| self.y_mean + self.y_sd * y, |x| self.x_mean + self.x_sd * x)
    }

    /// A standardized response level on the original scale.
    pub fn response(&self, v: f64) -> f64 {
        self.y_mean + self.y_sd * v
    }

    /// A standardized response scale (σ_Y, β values) on the original scale.
    pub fn response_scale(&self, v: f64) -> f64 {
        self.y_sd * v
    }

    /// A slope in `x` on the original scale.
    pub fn slope(&self, v: f64) -> f64 {
        v * self.y_sd / self.x_sd
    }

    pub fn covariate(&self, v: f64) -> f64 {
        self.x_mean + self.x_sd * v
    }
}

pub fn standardize(data: &GroupedDataset) -> Result<(GroupedDataset, StandardizationInfo)> {
    let info = StandardizationInfo::from_dataset(data)?;
    Ok((info.transform(data), info))
}

/// Bin counts of standardized covariates over `domain`.
pub fn bin_covariates(data: &GroupedDataset, domain: &DomainSpec) -> Result<BinnedCovariates> {
    let mut counts = Vec::with_capacity(data.len());
    for (i, g) in data.groups.iter().enumerate() {
        let mut row = vec![0u32; domain.k];
        for &x in &g.x {
            let k = domain.bin_of(x).ok_or_else(|| {
                // report on the original scale
                let value = domain.a_prime + (x - domain.a) * (domain.b_prime - domain.a_prime) / (domain.b - domain.a);
                FrodoError::OutOfDomain { group: i, value, a: domain.a_prime, b: domain.b_prime }
            })?;
            row[k] += 1;
        }
        counts.push(row);
    }
    BinnedCovariates::from_counts(counts)
}

/// Smoothing-prior scales: one shared value or one per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Shared(f64),
    PerGroup(Vec<f64>),
}

impl DeltaSpec {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            DeltaSpec::Shared(d) => Ok(vec![*d; n]),
            DeltaSpec::PerGroup(v) if v.len() == n => Ok(v.clone()),
            DeltaSpec::PerGroup(v) => {
                Err(FrodoError::Config(format!("delta lists {} values for {n} groups", v.len())))
            }
        }
    }
}

fn default_sampler() -> SamplerSettings {
    SamplerSettings::default()
}

fn default_init() -> InitSettings {
    InitSettings::default()
}

/// Flat configuration file of a fit. Field names mirror the model,
/// sampler and initialization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub order: WalkOrder,
    pub k: usize,
    /// Covariate domain on the original scale.
    pub a_prime: f64,
    pub b_prime: f64,
    pub delta: DeltaSpec,
    #[serde(default = "d_chains")]
    pub chains: usize,
    #[serde(default = "d_warmup")]
    pub warmup: usize,
    #[serde(default = "d_sampling")]
    pub sampling: usize,
    #[serde(default = "d_depth")]
    pub max_tree_depth: usize,
    #[serde(default = "d_accept")]
    pub target_accept: f64,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default = "d_lambda_init")]
    pub lambda_init: f64,
    #[serde(default = "d_theta_noise")]
    pub theta_noise: f64,
    #[serde(default = "d_tau_shape")]
    pub tau_shape: f64,
    #[serde(default = "d_scale_shape")]
    pub scale_shape: f64,
    #[serde(default = "d_retries")]
    pub max_retries: usize,
}

fn d_chains() -> usize {
    default_sampler().chains
}
fn d_warmup() -> usize {
    default_sampler().warmup
}
fn d_sampling() -> usize {
    default_sampler().sampling
}
fn d_depth() -> usize {
    default_sampler().max_tree_depth
}
fn d_accept() -> f64 {
    default_sampler().target_accept
}
fn d_seed() -> u64 {
    default_sampler().seed
}
fn d_lambda_init() -> f64 {
    default_init().lambda_init
}
fn d_theta_noise() -> f64 {
    default_init().theta_noise
}
fn d_tau_shape() -> f64 {
    default_init().tau_shape
}
fn d_scale_shape() -> f64 {
    default_init().scale_shape
}
fn d_retries() -> usize {
    default_init().max_retries
}

impl FitConfig {
    /// The study's modelling choices, with the domain taken from `data`.
    pub fn for_scenario(scenario: Scenario, data: &GroupedDataset, seed: u64) -> Result<Self> {
        let d = default_config_for(scenario, data);
        let (a_prime, b_prime) = d.domain_rule.apply(data)?;
        let s = default_sampler();
        let i = default_init();
        Ok(FitConfig {
            order: d.order,
            k: d.k,
            a_prime,
            b_prime,
            delta: DeltaSpec::PerGroup(d.delta),
            chains: s.chains,
            warmup: s.warmup,
            sampling: s.sampling,
            max_tree_depth: s.max_tree_depth,
            target_accept: d.target_accept,
            seed,
            lambda_init: i.lambda_init,
            theta_noise: i.theta_noise,
            tau_shape: i.tau_shape,
            scale_shape: i.scale_shape,
            max_retries: i.max_retries,
        })
    }

    pub fn sampler(&self) -> SamplerSettings {
        SamplerSettings {
            chains: self.chains,
            warmup: self.warmup,
            sampling: self.sampling,
            max_tree_depth: self.max_tree_depth,
            target_accept: self.target_accept,
            seed: self.seed,
        }
    }

    pub fn init(&self) -> InitSettings {
        InitSettings {
            lambda_init: self.lambda_init,
            theta_noise: self.theta_noise,
            tau_shape: self.tau_shape,
            scale_shape: self.scale_shape,
            max_retries: self.max_retries,
        }
    }

    pub fn with_sampler(mut self, s: &SamplerSettings) -> Self {
        self.chains = s.chains;
        self.warmup = s.warmup;
        self.sampling = s.sampling;
        self.max_tree_depth = s.max_tree_depth;
        self.target_accept = s.target_accept;
        self.seed = s.seed;
        self
    }

    pub fn model_config(&self, info: &StandardizationInfo, n_groups: usize, has_z: bool) -> Result<ModelConfig> {
        let domain = DomainSpec::new(self.a_prime, self.b_prime, info.x_mean, info.x_sd, self.k)?;
        let cfg = ModelConfig {
            order: self.order,
            k: self.k,
            domain,
            delta: self.delta.resolve(n_groups)?,
            has_scalar_covariate: has_z,
            sampler: self.sampler(),
        };
        cfg.validate(n_groups)?;
        self.init().validate()?;
        Ok(cfg)
    }
}

/// Runs one chain per start concurrently and records each chain's wall time.
pub fn run_timed<T: GradientTarget + ?Sized>(
    target: &T,
    inits: &[Vec<f64>],
    settings: &SamplerSettings,
) -> Result<(Vec<ChainOutput>, Vec<f64>)> {
    settings.validate()?;
    if inits.len() != settings.chains {
        return Err(FrodoError::Config(format!("{} starts for {} chains", inits.len(), settings.chains)));
    }
    let results: Vec<Result<(ChainOutput, f64)>> = std::thread::scope(|s| {
        let handles: Vec<_> = inits
            .iter()
            .enumerate()
            .map(|(c, init)| {
                s.spawn(move || {
                    let t = Instant::now();
                    run_chain(target, init, settings, c).map(|o| (o, t.elapsed().as_secs_f64()))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(FrodoError::SamplerFailure("chain thread panicked".into()))))
            .collect()
    });
    let mut chains = Vec::with_capacity(results.len());
    let mut secs = Vec::with_capacity(results.len());
    for r in results {
        let (c, t) = r?;
        chains.push(c);
        secs.push(t);
    }
    Ok((chains, secs))
}

/// Draws of named derived quantities, indexed `[parameter][chain][draw]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DerivedDraws {
    pub names: Vec<String>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl DerivedDraws {
    pub fn new(names: Vec<String>, chains: usize) -> Self {
        let values = names.iter().map(|_| vec![Vec::new(); chains]).collect();
        DerivedDraws { names, values }
    }

    pub fn push(&mut self, chain: usize, row: &[f64]) {
        for (p, v) in self.values.iter_mut().zip(row) {
            p[chain].push(*v);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Vec<Vec<f64>>> {
        self.names.iter().position(|n| n == name).map(|i| &self.values[i])
    }

    pub fn summary(&self) -> Result<PosteriorSummary> {
        let parameters =
            self.names.iter().zip(&self.values).map(|(n, v)| summarize(n, v)).collect::<Result<Vec<_>>>()?;
        Ok(PosteriorSummary { parameters })
    }
}

/// Convergence gates over every sampled coordinate and derived quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub max_rhat: f64,
    pub max_rhat_parameter: String,
    pub min_ess: f64,
    pub min_ess_parameter: String,
    pub divergences: usize,
    /// Parameters whose diagnostics are undefined (zero variance).
    pub undefined: Vec<String>,
    pub rhat_threshold: f64,
    pub ess_threshold: f64,
    pub passed: bool,
}

impl GateReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_rhat > self.rhat_threshold {
            out.push(format!("max R-hat {:.4} ({}) exceeds {}", self.max_rhat, self.max_rhat_parameter, self.rhat_threshold));
        }
        if self.min_ess < self.ess_threshold {
            out.push(format!("min ESS {:.1} ({}) below {}", self.min_ess, self.min_ess_parameter, self.ess_threshold));
        }
        if self.divergences > 0 {
            out.push(format!("{} divergent transitions after warmup", self.divergences));
        }
        if !self.undefined.is_empty() {
            out.push(format!("undefined diagnostics for {}", self.undefined.join(", ")));
        }
        out
    }
}

/// Gate values for the sampled coordinates (named by `names`) and the
/// derived quantities. ESS is capped at the number of draws.
pub fn gate_report(chains: &[ChainOutput], names: &[String], derived: &DerivedDraws) -> GateReport {
    let total = chains.iter().map(|c| c.draws.len()).sum::<usize>() as f64;
    let mut rep = GateReport {
        max_rhat: f64::NEG_INFINITY,
        max_rhat_parameter: String::new(),
        min_ess: f64::INFINITY,
        min_ess_parameter: String::new(),
        divergences: chains.iter().map(ChainOutput::divergences).sum(),
        undefined: Vec::new(),
        rhat_threshold: RHAT_THRESHOLD,
        ess_threshold: ESS_THRESHOLD,
        passed: false,
    };
    let mut check = |name: &str, cols: &[Vec<f64>]| match (split_rhat(cols), ess(cols)) {
        (Ok(r), Ok(e)) => {
            if r > rep.max_rhat {
                rep.max_rhat = r;
                rep.max_rhat_parameter = name.to_string();
            }
            let e = e.min(total);
            if e < rep.min_ess {
                rep.min_ess = e;
                rep.min_ess_parameter = name.to_string();
            }
        }
        _ => rep.undefined.push(name.to_string()),
    };
    for (j, name) in names.iter().enumerate() {
        let cols: Vec<Vec<f64>> = chains.iter().map(|c| c.column(j)).collect();
        check(name, &cols);
    }
    for (name, cols) in derived.names.iter().zip(&derived.values) {
        check(name, cols);
    }
    rep.passed = rep.failures().is_empty();
    rep
}

/// Per-bin band of a function on the original covariate scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinBand {
    pub midpoints: Vec<f64>,
    pub band: FunctionalBand,
}

/// A finished FRODO fit.
#[derive(Debug, Clone)]
pub struct FrodoRun {
    pub config: FitConfig,
    pub model: FrodoModel,
    pub info: StandardizationInfo,
    pub chains: Vec<ChainOutput>,
    pub chain_seconds: Vec<f64>,
    /// Derived quantities on the original scale.
    pub derived: DerivedDraws,
    /// Draws of the centered coefficient function, original response scale.
    beta_draws: Vec<Vec<f64>>,
}

/// Standardizes, bins, initializes and samples.
pub fn fit_frodo(data: &GroupedDataset, config: &FitConfig) -> Result<FrodoRun> {
    let (std_data, info) = standardize(data)?;
    let has_z = data.has_scalar_covariate();
    let cfg = config.model_config(&info, data.len(), has_z)?;
    let binned = bin_covariates(&std_data, &cfg.domain)?;
    let x_groups: Vec<Vec<f64>> = std_data.groups.iter().map(|g| g.x.clone()).collect();
    let y = std_data.responses();
    let model_data = ModelData::new(binned.clone(), y.clone(), std_data.scalar_covariates())?;
    let model = FrodoModel::new(cfg.clone(), model_data)?;
    let init = config.init();
    let base = initial_state(&cfg, &binned, &x_groups, &y, &init)?;
    let starts = jittered_starts(&model, &base, &init, config.chains, config.seed)?;
    let (chains, chain_seconds) = run_timed(&model, &starts, &config.sampler())?;
    let (derived, beta_draws) = frodo_derived(&model, &info, &chains)?;
    Ok(FrodoRun { config: config.clone(), model, info, chains, chain_seconds, derived, beta_draws })
}

fn frodo_derived(
    model: &FrodoModel,
    info: &StandardizationInfo,
    chains: &[ChainOutput],
) -> Result<(DerivedDraws, Vec<Vec<f64>>)> {
    let k = model.config().k;
    let mut names = vec!["sigma_y".to_string(), "alpha".to_string(), "tau_beta".to_string()];
    if model.config().has_scalar_covariate {
        names.push("beta_z".to_string());
    }
    names.extend((0..k).map(|j| format!("beta[{j}]")));
    let mut derived = DerivedDraws::new(names, chains.len());
    let mut beta_draws = Vec::new();
    let mut row = Vec::new();
    for (c, chain) in chains.iter().enumerate() {
        for q in &chain.draws {
            let d = model.decode(q)?;
            row.clear();
            row.push(info.response_scale(d.sigma_y));
            row.push(info.response(d.alpha));
            row.push(d.tau_beta);
            if let Some(bz) = d.beta_z {
                row.push(info.response_scale(bz));
            }
            let beta: Vec<f64> = d.beta.iter().map(|b| info.response_scale(*b)).collect();
            row.extend_from_slice(&beta);
            derived.push(c, &row);
            beta_draws.push(beta);
        }
    }
    Ok((derived, beta_draws))
}

impl FrodoRun {
    pub fn summary(&self) -> Result<PosteriorSummary> {
        self.derived.summary()
    }

    pub fn coordinate_names(&self) -> Vec<String> {
        self.model.layout().coordinate_names()
    }

    pub fn gates(&self) -> GateReport {
        gate_report(&self.chains, &self.coordinate_names(), &self.derived)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.model.config().domain
    }

    /// Bin midpoints on the original covariate scale.
    pub fn midpoints(&self) -> Vec<f64> {
        self.domain().midpoints().into_iter().map(|m| self.info.covariate(m)).collect()
    }

    /// Pointwise band of the centered coefficient function.
    pub fn beta_band(&self) -> Result<BinBand> {
        Ok(BinBand { midpoints: self.midpoints(), band: functional_bands(&self.beta_draws)? })
    }

    /// Pointwise band of group `i`'s density on the original scale.
    pub fn density_band(&self, i: usize) -> Result<BinBand> {
        if i >= self.model.n_groups() {
            return Err(FrodoError::Config(format!("no group {i}")));
        }
        let mut draws = Vec::new();
        for chain in &self.chains {
            for q in &chain.draws {
                let d = self.model.decode(q)?;
                draws.push(d.phi[i].iter().map(|p| p / self.info.x_sd).collect());
            }
        }
        Ok(BinBand { midpoints: self.midpoints(), band: functional_bands(&draws)? })
    }

    /// Secant slope of the posterior mean coefficient function, original scale.
    pub fn secant_slope(&self) -> Result<f64> {
        let k = self.model.config().k;
        let means: Vec<f64> = (0..k)
            .map(|j| {
                let v = self.derived.get(&format!("beta[{j}]")).expect("beta draws");
                let n: usize = v.iter().map(Vec::len).sum();
                v.iter().flatten().sum::<f64>() / n as f64
            })
            .collect();
        // means are already on the response scale; only x needs rescaling
        Ok(secant_slope(&means, self.domain())? / self.info.x_sd)
    }

    /// Bin weights of the pooled covariate histogram.
    pub fn central_weights(&self) -> &[f64] {
        &self.model.data().central_weights
    }

    pub fn divergences(&self) -> usize {
        self.chains.iter().map(ChainOutput::divergences).sum()
    }
}

/// Version string recorded in manifests.
pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// `frodo` or a baseline kind.
    pub kind: String,
    pub scenario: Option<Scenario>,
    /// Echo of the configuration the run used.
    pub config: serde_json::Value,
    pub seed: u64,
    pub chain_seconds: Vec<f64>,
    pub gates: GateReport,
    pub standardization: StandardizationInfo,
    /// Covariate domain of a FRODO run.
    pub domain: Option<DomainSpec>,
    pub software_version: String,
}

/// Everything written to a run directory.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub manifest: RunManifest,
    pub summary: PosteriorSummary,
    /// Original-scale derived draws.
    pub draws: io::DrawTable,
    pub bands: Vec<(String, BinBand)>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DRAWS_FILE: &str = "draws.bin";
pub const GATES_FILE: &str = "gates.txt";

fn draw_table(derived: &DerivedDraws) -> io::DrawTable {
    let n_chains = derived.values.first().map_or(0, Vec::len);
    let chains = (0..n_chains)
        .map(|c| {
            let n = derived.values[0][c].len();
            (0..n).map(|d| derived.values.iter().map(|p| p[c][d]).collect()).collect()
        })
        .collect();
    io::DrawTable { names: derived.names.clone(), chains }
}

/// Density draws `f[i][k]` of the requested groups, original scale.
fn add_density_draws(run: &FrodoRun, groups: &[usize], derived: &mut DerivedDraws) -> Result<()> {
    let k = run.model.config().k;
    for &i in groups {
        if i >= run.model.n_groups() {
            return Err(FrodoError::Config(format!("no group {i}")));
        }
        for j in 0..k {
            derived.names.push(format!("f[{i}][{j}]"));
            derived.values.push(vec![Vec::new(); run.chains.len()]);
        }
    }
    let base = derived.names.len() - groups.len() * k;
    for (c, chain) in run.chains.iter().enumerate() {
        for q in &chain.draws {
            let d = run.model.decode(q)?;
            for (g, &i) in groups.iter().enumerate() {
                for j in 0..k {
                    derived.values[base + g * k + j][c].push(d.phi[i][j] / run.info.x_sd);
                }
            }
        }
    }
    Ok(())
}

impl FrodoRun {
    /// Outputs of the run, with density draws for `density_groups`.
    pub fn record(&self, scenario: Option<Scenario>, density_groups: &[usize]) -> Result<RunRecord> {
        let mut derived = self.derived.clone();
        add_density_draws(self, density_groups, &mut derived)?;
        let mut bands = vec![("beta".to_string(), self.beta_band()?)];
        for &i in density_groups {
            bands.push((format!("density_{i}"), self.density_band(i)?));
        }
        let manifest = RunManifest {
            kind: "frodo".into(),
            scenario,
            config: serde_json::to_value(&self.config).map_err(|e| FrodoError::Config(e.to_string()))?,
            seed: self.config.seed,
            chain_seconds: self.chain_seconds.clone(),
            gates: self.gates(),
            standardization: self.info,
            domain: Some(*self.domain()),
            software_version: SOFTWARE_VERSION.into(),
        };
        Ok(RunRecord { manifest, summary: self.summary()?, draws: draw_table(&derived), bands })
    }
}

impl crate::baselines::BaselineRun {
    pub fn record(&self) -> Result<RunRecord> {
        let config = serde_json::json!({
            "kind": self.spec.kind,
            "scenario": self.spec.scenario,
            "covariate_rule": self.spec.covariate_rule(),
            "sampler": self.settings,
        });
        let manifest = RunManifest {
            kind: self.spec.kind.id().into(),
            scenario: Some(self.spec.scenario),
            config,
            seed: self.settings.seed,
            chain_seconds: self.chain_seconds.clone(),
            gates: self.gates(),
            standardization: self.info,
            domain: None,
            software_version: SOFTWARE_VERSION.into(),
        };
        Ok(RunRecord { manifest, summary: self.summary()?, draws: draw_table(&self.derived), bands: Vec::new() })
    }
}

/// Writes manifest, summary, draws, gate report and band files into `dir`.
pub fn write_run(dir: &std::path::Path, record: &RunRecord) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| FrodoError::io(dir, e))?;
    io::write_json(&dir.join(MANIFEST_FILE), &record.manifest)?;
    io::write_summary(&dir.join(SUMMARY_FILE), &record.summary)?;
    io::write_draws(&dir.join(DRAWS_FILE), &record.draws)?;
    let gates = &record.manifest.gates;
    let mut text = format!(
        "max_rhat {:.6} ({})\nmin_ess {:.1} ({})\ndivergences {}\npassed {}\n",
        gates.max_rhat, gates.max_rhat_parameter, gates.min_ess, gates.min_ess_parameter, gates.divergences, gates.passed
    );
    for f in gates.failures() {
        text.push_str(&format!("failure: {f}\n"));
    }
    std::fs::write(dir.join(GATES_FILE), text).map_err(|e| FrodoError::io(dir.join(GATES_FILE), e))?;
    for (name, band) in &record.bands {
        io::write_band(&dir.join(format!("{name}_band.csv")), band)?;
    }
    Ok(())
}
