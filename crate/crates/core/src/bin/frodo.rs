use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use frodo::baselines::{fit_baseline, BaselineKind, BaselineSpec};
use frodo::nuts::SamplerSettings;
use frodo::pipeline::io::{read_dataset, read_json, write_dataset, write_json};
use frodo::pipeline::report::{build_report, LoadedRun};
use frodo::pipeline::{fit_frodo, write_run, FitConfig, GateReport};
use frodo::simulate::{simulate, Scenario, ScenarioSpec};
use frodo::{FrodoError, Result};

const DATASET_FILE: &str = "dataset.csv";
const TRUTH_FILE: &str = "truth.json";
const SPEC_FILE: &str = "scenario.json";
const GATE_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(name = "frodo", version, about = "Functional regression on group-specific covariate densities")]
struct Cli {
    /// Base directory for outputs when `--out` is not given.
    #[arg(long, global = true, env = "FRODO_OUT_DIR", default_value = "frodo-out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one of the study scenarios.
    Simulate {
        #[arg(long)]
        scenario: Scenario,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of groups; defaults to the study's value.
        #[arg(long)]
        groups: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the density-regression model.
    Fit {
        /// Dataset file, or a directory written by `simulate`.
        #[arg(long)]
        data: PathBuf,
        /// Flat TOML configuration. Without it the scenario defaults apply.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario whose defaults to use; read from the data directory if omitted.
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Groups whose density bands to emit.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        density_groups: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write outputs and exit 0 even when convergence gates fail.
        #[arg(long)]
        no_gate: bool,
    },
    /// Fit a scalar comparison model.
    Baseline {
        #[arg(long)]
        kind: BaselineKind,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scenario: Option<Scenario>,
        /// TOML with sampler fields (a fit configuration also works).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_gate: bool,
    },
    /// Compare finished runs.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Simulate { scenario, seed, groups, out } => {
            let out = out.unwrap_or_else(|| cli.out_dir.join(format!("{scenario}-seed{seed}")));
            let mut spec = ScenarioSpec::study(scenario, seed);
            if let Some(n) = groups {
                spec.n_groups = n;
            }
            let (data, truth) = simulate(&spec)?;
            write_dataset(&out.join(DATASET_FILE), &data)?;
            write_json(&out.join(TRUTH_FILE), &truth)?;
            write_json(&out.join(SPEC_FILE), &spec)?;
            println!("{}", out.display());
            Ok(0)
        }
        Command::Fit { data, config, scenario, density_groups, out, no_gate } => {
            let out = out.unwrap_or_else(|| cli.out_dir.join("fit"));
            let dataset = read_dataset(&dataset_path(&data))?;
            let scenario = scenario.or(scenario_of(&data)?);
            let cfg = match (&config, scenario) {
                (Some(path), _) => read_toml::<FitConfig>(path)?,
                (None, Some(s)) => FitConfig::for_scenario(s, &dataset, SamplerSettings::default().seed)?,
                (None, None) => {
                    return Err(FrodoError::Config("give --config or a scenario to take defaults from".into()))
                }
            };
            let groups: Vec<usize> = density_groups.into_iter().filter(|&i| i < dataset.len()).collect();
            info!("fitting {} groups, K = {}, {} chains", dataset.len(), cfg.k, cfg.chains);
            let run = fit_frodo(&dataset, &cfg)?;
            let record = run.record(scenario, &groups)?;
            write_run(&out, &record)?;
            finish(&out, &record.manifest.gates, no_gate)
        }
        Command::Baseline { kind, data, scenario, config, out, no_gate } => {
            let out = out.unwrap_or_else(|| cli.out_dir.join(kind.id()));
            let dataset = read_dataset(&dataset_path(&data))?;
            let scenario = scenario
                .or(scenario_of(&data)?)
                .ok_or_else(|| FrodoError::Config("baselines need --scenario".into()))?;
            let settings = match &config {
                Some(path) => sampler_settings(path)?,
                None => SamplerSettings::default(),
            };
            let run = fit_baseline(&dataset, BaselineSpec::new(kind, scenario)?, &settings)?;
            let record = run.record()?;
            write_run(&out, &record)?;
            finish(&out, &record.manifest.gates, no_gate)
        }
        Command::Report { runs, out } => {
            let out = out.unwrap_or_else(|| cli.out_dir.join("report"));
            let loaded = runs.iter().map(|d| LoadedRun::load(d)).collect::<Result<Vec<_>>>()?;
            let report = build_report(&loaded)?;
            report.write(&out)?;
            print!("{}", report.digest());
            Ok(0)
        }
    }
}

fn finish(out: &Path, gates: &GateReport, no_gate: bool) -> Result<u8> {
    println!("{}", out.display());
    if gates.passed {
        return Ok(0);
    }
    for f in gates.failures() {
        eprintln!("gate: {f}");
    }
    Ok(if no_gate { 0 } else { GATE_FAILURE })
}

fn dataset_path(data: &Path) -> PathBuf {
    if data.is_dir() {
        data.join(DATASET_FILE)
    } else {
        data.to_path_buf()
    }
}

/// Scenario recorded by `simulate` next to the dataset, if any.
fn scenario_of(data: &Path) -> Result<Option<Scenario>> {
    let spec = data.join(SPEC_FILE);
    if data.is_dir() && spec.exists() {
        Ok(Some(read_json::<ScenarioSpec>(&spec)?.scenario))
    } else {
        Ok(None)
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| FrodoError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| FrodoError::Config(format!("{}: {e}", path.display())))
}

fn sampler_settings(path: &Path) -> Result<SamplerSettings> {
    read_toml::<SamplerSettings>(path).or_else(|_| read_toml::<FitConfig>(path).map(|c| c.sampler()))
}
