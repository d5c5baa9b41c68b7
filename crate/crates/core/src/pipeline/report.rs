//! Cross-run comparison: the σ_Y table, slopes and plot-ready bands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::io::{self, DrawTable};
use super::{BinBand, RunManifest, DRAWS_FILE, MANIFEST_FILE};
use crate::diagnostics::{functional_bands, secant_slope, summarize, ParameterSummary};
use crate::error::{FrodoError, Result};

/// Row groups of the comparison table, in display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Frodo,
    Hierarchical,
}

impl Method {
    pub fn of_kind(kind: &str) -> Result<Self> {
        match kind {
            "frodo" => Ok(Method::Frodo),
            "hierarchical" => Ok(Method::Hierarchical),
            k if k.starts_with("naive") => Ok(Method::Naive),
            other => Err(FrodoError::Config(format!("unknown run kind `{other}`"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Frodo => "FRODO",
            Method::Hierarchical => "hierarchical",
        }
    }
}

/// One loaded run directory.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub draws: DrawTable,
}

impl LoadedRun {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: RunManifest = io::read_json(&dir.join(MANIFEST_FILE))?;
        let draws = io::read_draws(&dir.join(DRAWS_FILE))?;
        Ok(LoadedRun { dir: dir.to_path_buf(), manifest, draws })
    }

    pub fn method(&self) -> Result<Method> {
        Method::of_kind(&self.manifest.kind)
    }

    pub fn summarize(&self, name: &str) -> Result<ParameterSummary> {
        let j = self
            .draws
            .index_of(name)
            .ok_or_else(|| FrodoError::format(self.dir.join(DRAWS_FILE), format!("no column `{name}`")))?;
        summarize(name, &self.draws.column(j))
    }

    fn pooled(&self, j: usize) -> Vec<f64> {
        self.draws.chains.iter().flat_map(|c| c.iter().map(move |d| d[j])).collect()
    }

    fn columns_with_prefix(&self, prefix: &str) -> Vec<usize> {
        (0..self.draws.names.len()).filter(|&j| self.draws.names[j].starts_with(prefix)).collect()
    }

    /// Slope on the original scale: the secant of the coefficient function
    /// for FRODO runs, the regression slope for baselines.
    pub fn slope(&self) -> Result<Option<f64>> {
        if let Some(domain) = &self.manifest.domain {
            let cols = self.columns_with_prefix("beta[");
            let means: Vec<f64> = cols
                .iter()
                .map(|&j| {
                    let v = self.pooled(j);
                    v.iter().sum::<f64>() / v.len() as f64
                })
                .collect();
            let x_sd = self.manifest.standardization.x_sd;
            return Ok(Some(secant_slope(&means, domain)? / x_sd));
        }
        Ok(self.draws.index_of("slope").map(|j| {
            let v = self.pooled(j);
            v.iter().sum::<f64>() / v.len() as f64
        }))
    }

    /// Pointwise bands for β and every stored density, keyed by file stem.
    pub fn bands(&self) -> Result<Vec<(String, BinBand)>> {
        let Some(domain) = &self.manifest.domain else { return Ok(Vec::new()) };
        let st = &self.manifest.standardization;
        let midpoints: Vec<f64> = domain.midpoints().into_iter().map(|m| st.covariate(m)).collect();
        let band_of = |cols: &[usize]| -> Result<BinBand> {
            let rows: Vec<Vec<f64>> =
                self.draws.chains.iter().flatten().map(|d| cols.iter().map(|&j| d[j]).collect()).collect();
            Ok(BinBand { midpoints: midpoints.clone(), band: functional_bands(&rows)? })
        };
        let mut out = vec![("beta".to_string(), band_of(&self.columns_with_prefix("beta["))?)];
        let mut groups: Vec<usize> = self
            .draws
            .names
            .iter()
            .filter_map(|n| n.strip_prefix("f[")?.split(']').next()?.parse().ok())
            .collect();
        groups.dedup();
        for i in groups {
            out.push((format!("density_{i}"), band_of(&self.columns_with_prefix(&format!("f[{i}]")))?));
        }
        Ok(out)
    }
}

/// One row of the σ_Y comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaRow {
    pub method: Method,
    pub kind: String,
    pub scenario: String,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub slope: Option<f64>,
    pub gates_passed: bool,
}

/// The comparison of a set of runs.
#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<SigmaRow>,
    pub bands: Vec<(String, BinBand)>,
}

pub fn build_report(runs: &[LoadedRun]) -> Result<Report> {
    if runs.is_empty() {
        return Err(FrodoError::Config("no runs to report".into()));
    }
    let mut rows = Vec::new();
    let mut bands = Vec::new();
    for run in runs {
        let s = run.summarize("sigma_y")?;
        let scenario = run.manifest.scenario.map_or_else(|| "data".to_string(), |s| s.id().to_string());
        let method = run.method()?;
        rows.push(SigmaRow {
            method,
            kind: run.manifest.kind.clone(),
            scenario: scenario.clone(),
            mean: s.mean,
            lo: s.q025,
            hi: s.q975,
            slope: run.slope()?,
            gates_passed: run.manifest.gates.passed,
        });
        for (name, band) in run.bands()? {
            bands.push((format!("{scenario}_{}_{name}", run.manifest.kind), band));
        }
    }
    rows.sort_by(|a, b| (a.method, &a.scenario).cmp(&(b.method, &b.scenario)));
    Ok(Report { rows, bands })
}

impl Report {
    /// Table with one row per method and one column per scenario, each
    /// cell `mean (2.5%, 97.5%)`.
    pub fn sigma_table(&self) -> String {
        let mut scenarios: Vec<&str> = self.rows.iter().map(|r| r.scenario.as_str()).collect();
        scenarios.sort_unstable();
        scenarios.dedup();
        let mut methods: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        methods.dedup();
        let width = 24;
        let mut out = format!("{:<14}", "sigma_Y");
        for s in &scenarios {
            let _ = write!(out, "{s:>width$}");
        }
        out.push('\n');
        for m in methods {
            let _ = write!(out, "{:<14}", m.label());
            for s in &scenarios {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| r.method == m && r.scenario == *s)
                    .map_or_else(|| "-".to_string(), |r| format!("{:.3} ({:.3}, {:.3})", r.mean, r.lo, r.hi));
                let _ = write!(out, "{cell:>width$}");
            }
            out.push('\n');
        }
        out
    }

    /// Human-readable digest: the table, slopes and gate status.
    pub fn digest(&self) -> String {
        let mut out = self.sigma_table();
        out.push('\n');
        for r in &self.rows {
            let slope = r.slope.map_or_else(|| "-".to_string(), |s| format!("{s:.4}"));
            let gates = if r.gates_passed { "passed" } else { "FAILED" };
            let _ = writeln!(out, "{} {} ({}): slope {slope}, gates {gates}", r.scenario, r.method.label(), r.kind);
        }
        out
    }

    /// Writes `sigma_y_table.csv`, `digest.txt` and one band file per
    /// function into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| FrodoError::io(dir, e))?;
        let path = dir.join("sigma_y_table.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| FrodoError::format(&path, e.to_string()))?;
        for r in &self.rows {
            w.serialize(r).map_err(|e| FrodoError::format(&path, e.to_string()))?;
        }
        w.flush().map_err(|e| FrodoError::io(&path, e))?;
        let digest = dir.join("digest.txt");
        std::fs::write(&digest, self.digest()).map_err(|e| FrodoError::io(&digest, e))?;
        for (name, band) in &self.bands {
            io::write_band(&dir.join(format!("{name}_band.csv")), band)?;
        }
        Ok(())
    }
}
