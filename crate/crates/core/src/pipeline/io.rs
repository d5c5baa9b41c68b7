//! File formats: datasets, ground truth, posterior draws, summaries and bands.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::diagnostics::PosteriorSummary;
use crate::error::{FrodoError, Result};
use crate::model::{GroupRecord, GroupedDataset};

use super::BinBand;

pub const DATASET_HEADER: &str = "# frodo-dataset v1";
const DRAWS_MAGIC: &[u8; 8] = b"FRODRAWS";
const DRAWS_VERSION: u32 = 1;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FrodoError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| FrodoError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| FrodoError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> FrodoError {
    FrodoError::format(path, e.to_string())
}

/// Writes a dataset as long-format CSV: one `x` row per individual, one
/// `y` row (and optionally one `z` row) per group.
pub fn write_dataset(path: &Path, data: &GroupedDataset) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{DATASET_HEADER}").map_err(|e| FrodoError::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    let io = |e| csv_err(path, e);
    w.write_record(["kind", "group", "value"]).map_err(io)?;
    for (i, g) in data.groups.iter().enumerate() {
        let id = i.to_string();
        w.write_record(["y", &id, &format!("{:?}", g.y)]).map_err(io)?;
        if let Some(z) = g.z {
            w.write_record(["z", &id, &format!("{z:?}")]).map_err(io)?;
        }
        for x in &g.x {
            w.write_record(["x", &id, &format!("{x:?}")]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| FrodoError::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<GroupedDataset> {
    let mut reader = open(path)?;
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| FrodoError::io(path, e))?;
    if first.trim_end() != DATASET_HEADER {
        return Err(FrodoError::format(path, format!("expected header `{DATASET_HEADER}`")));
    }
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["kind", "group", "value"] {
        return Err(FrodoError::format(path, "columns must be kind,group,value"));
    }
    let mut ys: Vec<Option<f64>> = Vec::new();
    let mut zs: Vec<Option<f64>> = Vec::new();
    let mut xs: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |m: &str| FrodoError::format(path, format!("row {}: {m}", line + 1));
        let group: usize = rec[1].parse().map_err(|_| bad("group must be a non-negative integer"))?;
        let value: f64 = rec[2].parse().map_err(|_| bad("value is not a number"))?;
        if group >= ys.len() {
            ys.resize(group + 1, None);
            zs.resize(group + 1, None);
            xs.resize(group + 1, Vec::new());
        }
        let slot = match &rec[0] {
            "x" => {
                xs[group].push(value);
                continue;
            }
            "y" => &mut ys[group],
            "z" => &mut zs[group],
            other => return Err(bad(&format!("unknown kind `{other}`"))),
        };
        if slot.replace(value).is_some() {
            return Err(bad("duplicate group-level value"));
        }
    }
    let groups = ys
        .into_iter()
        .zip(zs)
        .zip(xs)
        .enumerate()
        .map(|(i, ((y, z), x))| {
            let y = y.ok_or_else(|| FrodoError::Data(format!("group {i} has no response")))?;
            Ok(GroupRecord { y, x, z })
        })
        .collect::<Result<Vec<_>>>()?;
    let data = GroupedDataset { groups };
    let with_z = data.groups.iter().filter(|g| g.z.is_some()).count();
    if with_z != 0 && with_z != data.len() {
        return Err(FrodoError::Data("scalar covariate given for only some groups".into()));
    }
    data.validate()?;
    Ok(data)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| FrodoError::format(path, e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| FrodoError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| FrodoError::format(path, e.to_string()))
}

/// Posterior draws laid out `[chain][draw][parameter]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawTable {
    pub names: Vec<String>,
    pub chains: Vec<Vec<Vec<f64>>>,
}

impl DrawTable {
    /// Column `j` of every chain.
    pub fn column(&self, j: usize) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.iter().map(|d| d[j]).collect()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Path of the parameter-name sidecar of a draws file.
pub fn names_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".names");
    PathBuf::from(p)
}

/// Binary draws: magic, version, then chain / draw / parameter counts as
/// little-endian integers followed by the values as little-endian `f64`.
/// Parameter names go to a text sidecar, one per line.
pub fn write_draws(path: &Path, table: &DrawTable) -> Result<()> {
    let n_draws = table.chains.first().map_or(0, Vec::len);
    let p = table.names.len();
    if table.chains.iter().any(|c| c.len() != n_draws || c.iter().any(|d| d.len() != p)) {
        return Err(FrodoError::Dimension("ragged draw table".into()));
    }
    let mut out = create(path)?;
    let e = |e| FrodoError::io(path, e);
    out.write_all(DRAWS_MAGIC).map_err(e)?;
    out.write_all(&DRAWS_VERSION.to_le_bytes()).map_err(e)?;
    for n in [table.chains.len(), n_draws, p] {
        out.write_all(&(n as u64).to_le_bytes()).map_err(e)?;
    }
    for v in table.chains.iter().flatten().flatten() {
        out.write_all(&v.to_le_bytes()).map_err(e)?;
    }
    out.flush().map_err(e)?;
    let sidecar = names_path(path);
    let mut names = create(&sidecar)?;
    for n in &table.names {
        writeln!(names, "{n}").map_err(|e| FrodoError::io(&sidecar, e))?;
    }
    names.flush().map_err(|e| FrodoError::io(&sidecar, e))
}

pub fn read_draws(path: &Path) -> Result<DrawTable> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(|e| FrodoError::io(path, e))?;
    let bad = |m: &str| FrodoError::format(path, m.to_string());
    if bytes.len() < 36 || &bytes[..8] != DRAWS_MAGIC {
        return Err(bad("not a draws file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != DRAWS_VERSION {
        return Err(bad(&format!("unsupported draws version {version}")));
    }
    let dim = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes")) as usize;
    let (c, d, p) = (dim(12), dim(20), dim(28));
    let body = &bytes[36..];
    if c.checked_mul(d).and_then(|n| n.checked_mul(p)).and_then(|n| n.checked_mul(8)) != Some(body.len()) {
        return Err(bad("length does not match the header"));
    }
    let mut values = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")));
    let chains = (0..c).map(|_| (0..d).map(|_| values.by_ref().take(p).collect()).collect()).collect();
    let sidecar = names_path(path);
    let text = fs::read_to_string(&sidecar).map_err(|e| FrodoError::io(&sidecar, e))?;
    let names: Vec<String> = text.lines().map(str::to_string).collect();
    if names.len() != p {
        return Err(FrodoError::format(&sidecar, format!("{} names for {p} columns", names.len())));
    }
    Ok(DrawTable { names, chains })
}

pub fn write_summary(path: &Path, summary: &PosteriorSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for p in &summary.parameters {
        w.serialize(p).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| FrodoError::io(path, e))
}

pub fn write_band(path: &Path, band: &BinBand) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["midpoint", "mean", "lo", "hi"]).map_err(|e| csv_err(path, e))?;
    let b = &band.band;
    for (j, m) in band.midpoints.iter().enumerate() {
        w.write_record([m, &b.mean[j], &b.lo[j], &b.hi[j]].map(|v| format!("{v:?}"))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| FrodoError::io(path, e))
}

/// Reads a band file back as `(midpoint, mean, lo, hi)` rows.
pub fn read_band(path: &Path) -> Result<Vec<[f64; 4]>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}
