//! C ABI over the `frodo` engine.
//!
//! Every function returns a [`FrodoStatus`]; on failure the message is
//! available from [`frodo_last_error`] on the same thread. Objects are
//! opaque handles created by `*_new`/constructor calls and released with
//! the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use frodo::model::{GroupRecord, GroupedDataset};
use frodo::pipeline::{fit_frodo, io, write_run, FitConfig, FrodoRun};
use frodo::simulate::{simulate, Scenario, ScenarioSpec};
use frodo::FrodoError;

/// Result codes. Values 3 and 4 match the command-line exit codes for
/// configuration and data errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrodoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    DataError = 4,
    SamplerError = 5,
    Panic = 6,
}

/// A grouped dataset.
pub struct FrodoDataset(GroupedDataset);

/// A fit configuration.
pub struct FrodoConfig(FitConfig);

/// A finished fit.
pub struct FrodoRunHandle(FrodoRun);

/// Convergence gate values of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FrodoGates {
    pub max_rhat: f64,
    pub min_ess: f64,
    pub divergences: u64,
    /// 1 when every gate holds.
    pub passed: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &FrodoError) -> FrodoStatus {
    match e.exit_code() {
        3 => FrodoStatus::ConfigError,
        4 => FrodoStatus::DataError,
        _ => FrodoStatus::SamplerError,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (FrodoStatus, String)>) -> FrodoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FrodoStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FrodoStatus::Panic
        }
    }
}

trait Check<T> {
    fn check(self) -> Result<T, (FrodoStatus, String)>;
}

impl<T> Check<T> for frodo::Result<T> {
    fn check(self) -> Result<T, (FrodoStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (FrodoStatus, String) {
    (FrodoStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (FrodoStatus, String) {
    (FrodoStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FrodoStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, (FrodoStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (FrodoStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn frodo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn frodo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an empty dataset.
#[no_mangle]
pub extern "C" fn frodo_dataset_new() -> *mut FrodoDataset {
    Box::into_raw(Box::new(FrodoDataset(GroupedDataset::default())))
}

/// Appends a group with response `y` and `n` covariate values. `z` is the
/// group's scalar covariate, or null when there is none.
///
/// # Safety
/// `ds` must come from this library; `x` must point to `n` doubles; `z` must
/// be null or point to one double.
#[no_mangle]
pub unsafe extern "C" fn frodo_dataset_add_group(
    ds: *mut FrodoDataset,
    y: f64,
    x: *const f64,
    n: usize,
    z: *const f64,
) -> FrodoStatus {
    guard(|| {
        let ds = out_ptr(ds, "dataset")?;
        if x.is_null() && n > 0 {
            return Err(null("x"));
        }
        let xs = if n == 0 { Vec::new() } else { std::slice::from_raw_parts(x, n).to_vec() };
        ds.0.groups.push(GroupRecord { y, x: xs, z: z.as_ref().copied() });
        Ok(())
    })
}

/// Number of groups, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn frodo_dataset_len(ds: *const FrodoDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Reads a dataset file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frodo_dataset_read(path: *const c_char, out: *mut *mut FrodoDataset) -> FrodoStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_ptr(out, "out")?;
        let data = io::read_dataset(Path::new(path)).check()?;
        *out = Box::into_raw(Box::new(FrodoDataset(data)));
        Ok(())
    })
}

/// Writes a dataset file.
///
/// # Safety
/// `ds` must come from this library and `path` be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn frodo_dataset_write(ds: *const FrodoDataset, path: *const c_char) -> FrodoStatus {
    guard(|| {
        let ds = obj(ds, "dataset")?;
        let path = str_arg(path, "path")?;
        ds.0.validate().check()?;
        io::write_dataset(Path::new(path), &ds.0).check()
    })
}

/// Simulates a study scenario; `n_groups = 0` keeps the study's size.
///
/// # Safety
/// `scenario` must be nul-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frodo_simulate(
    scenario: *const c_char,
    seed: u64,
    n_groups: usize,
    out: *mut *mut FrodoDataset,
) -> FrodoStatus {
    guard(|| {
        let scenario: Scenario = str_arg(scenario, "scenario")?.parse().check()?;
        let out = out_ptr(out, "out")?;
        let mut spec = ScenarioSpec::study(scenario, seed);
        if n_groups > 0 {
            spec.n_groups = n_groups;
        }
        let (data, _) = simulate(&spec).check()?;
        *out = Box::into_raw(Box::new(FrodoDataset(data)));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn frodo_dataset_free(ds: *mut FrodoDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// The study defaults of `scenario` for the given dataset.
///
/// # Safety
/// Pointers must be valid; `scenario` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn frodo_config_for_scenario(
    scenario: *const c_char,
    ds: *const FrodoDataset,
    seed: u64,
    out: *mut *mut FrodoConfig,
) -> FrodoStatus {
    guard(|| {
        let scenario: Scenario = str_arg(scenario, "scenario")?.parse().check()?;
        let ds = obj(ds, "dataset")?;
        let out = out_ptr(out, "out")?;
        let cfg = FitConfig::for_scenario(scenario, &ds.0, seed).check()?;
        *out = Box::into_raw(Box::new(FrodoConfig(cfg)));
        Ok(())
    })
}

/// Parses a flat TOML configuration.
///
/// # Safety
/// `text` must be nul-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn frodo_config_from_toml(text: *const c_char, out: *mut *mut FrodoConfig) -> FrodoStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_ptr(out, "out")?;
        let cfg: FitConfig = toml::from_str(text).map_err(|e| (FrodoStatus::ConfigError, e.to_string()))?;
        *out = Box::into_raw(Box::new(FrodoConfig(cfg)));
        Ok(())
    })
}

/// Overrides the sampler's chain count, warmup and sampling lengths and seed.
///
/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn frodo_config_set_sampler(
    cfg: *mut FrodoConfig,
    chains: usize,
    warmup: usize,
    sampling: usize,
    seed: u64,
) -> FrodoStatus {
    guard(|| {
        let cfg = out_ptr(cfg, "config")?;
        let mut s = cfg.0.sampler();
        s.chains = chains;
        s.warmup = warmup;
        s.sampling = sampling;
        s.seed = seed;
        s.validate().check()?;
        cfg.0 = cfg.0.clone().with_sampler(&s);
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn frodo_config_free(cfg: *mut FrodoConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Fits the model. Blocks until every chain has finished.
///
/// # Safety
/// Pointers must be valid handles from this library.
#[no_mangle]
pub unsafe extern "C" fn frodo_fit(
    ds: *const FrodoDataset,
    cfg: *const FrodoConfig,
    out: *mut *mut FrodoRunHandle,
) -> FrodoStatus {
    guard(|| {
        let ds = obj(ds, "dataset")?;
        let cfg = obj(cfg, "config")?;
        let out = out_ptr(out, "out")?;
        let run = fit_frodo(&ds.0, &cfg.0).check()?;
        *out = Box::into_raw(Box::new(FrodoRunHandle(run)));
        Ok(())
    })
}

/// Number of bins `K` of a run, or 0 for a null handle.
///
/// # Safety
/// `run` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn frodo_run_bins(run: *const FrodoRunHandle) -> usize {
    run.as_ref().map_or(0, |r| r.0.model.config().k)
}

/// Posterior mean and central 95% interval of σ_Y, original scale.
///
/// # Safety
/// `run` must come from this library; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn frodo_run_sigma_y(
    run: *const FrodoRunHandle,
    mean: *mut f64,
    lo: *mut f64,
    hi: *mut f64,
) -> FrodoStatus {
    guard(|| {
        let run = obj(run, "run")?;
        let (mean, lo, hi) = (out_ptr(mean, "mean")?, out_ptr(lo, "lo")?, out_ptr(hi, "hi")?);
        let summary = run.0.summary().check()?;
        let s = summary.get("sigma_y").ok_or_else(|| invalid("no sigma_y summary"))?;
        (*mean, *lo, *hi) = (s.mean, s.q025, s.q975);
        Ok(())
    })
}

/// Secant slope of the posterior mean coefficient function.
///
/// # Safety
/// `run` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn frodo_run_secant_slope(run: *const FrodoRunHandle, out: *mut f64) -> FrodoStatus {
    guard(|| {
        let run = obj(run, "run")?;
        *out_ptr(out, "out")? = run.0.secant_slope().check()?;
        Ok(())
    })
}

/// Copies the pointwise β band into four caller arrays of length `len`,
/// which must equal [`frodo_run_bins`].
///
/// # Safety
/// Arrays must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn frodo_run_beta_band(
    run: *const FrodoRunHandle,
    midpoint: *mut f64,
    mean: *mut f64,
    lo: *mut f64,
    hi: *mut f64,
    len: usize,
) -> FrodoStatus {
    guard(|| {
        let run = obj(run, "run")?;
        let band = run.0.beta_band().check()?;
        if len != band.midpoints.len() {
            return Err(invalid(format!("arrays hold {len} values, the band has {}", band.midpoints.len())));
        }
        let b = &band.band;
        for (dst, src, what) in
            [(midpoint, &band.midpoints, "midpoint"), (mean, &b.mean, "mean"), (lo, &b.lo, "lo"), (hi, &b.hi, "hi")]
        {
            if dst.is_null() {
                return Err(null(what));
            }
            std::slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
        }
        Ok(())
    })
}

/// Convergence gate values of a run.
///
/// # Safety
/// `run` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn frodo_run_gates(run: *const FrodoRunHandle, out: *mut FrodoGates) -> FrodoStatus {
    guard(|| {
        let run = obj(run, "run")?;
        let g = run.0.gates();
        *out_ptr(out, "out")? = FrodoGates {
            max_rhat: g.max_rhat,
            min_ess: g.min_ess,
            divergences: g.divergences as u64,
            passed: i32::from(g.passed),
        };
        Ok(())
    })
}

/// Writes the run's manifest, summaries, draws and bands into `dir`.
///
/// # Safety
/// `run` must come from this library and `dir` be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn frodo_run_write(run: *const FrodoRunHandle, dir: *const c_char) -> FrodoStatus {
    guard(|| {
        let run = obj(run, "run")?;
        let dir = str_arg(dir, "dir")?;
        let record = run.0.record(None, &[]).check()?;
        write_run(Path::new(dir), &record).check()
    })
}

/// # Safety
/// `run` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn frodo_run_free(run: *mut FrodoRunHandle) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
