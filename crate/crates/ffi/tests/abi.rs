use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use frodo_ffi::*;

fn last_error() -> String {
    let p = frodo_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        assert_eq!(frodo_dataset_add_group(ptr::null_mut(), 1.0, ptr::null(), 0, ptr::null()), FrodoStatus::NullPointer);
        assert!(last_error().contains("dataset"));
        let mut out = 0.0;
        assert_eq!(frodo_run_secant_slope(ptr::null(), &mut out), FrodoStatus::NullPointer);
        assert_eq!(frodo_dataset_len(ptr::null()), 0);
        frodo_dataset_free(ptr::null_mut());
        frodo_run_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_cli_codes() {
    unsafe {
        let mut ds = ptr::null_mut();
        let bad = CString::new("no_such_scenario").unwrap();
        assert_eq!(frodo_simulate(bad.as_ptr(), 1, 0, &mut ds), FrodoStatus::ConfigError);
        assert!(last_error().contains("no_such_scenario"));
        assert!(ds.is_null());

        let mut cfg = ptr::null_mut();
        let text = CString::new("order = 7\nk = 5\na_prime = 0.0\nb_prime = 1.0\ndelta = 0.1\n").unwrap();
        assert_eq!(frodo_config_from_toml(text.as_ptr(), &mut cfg), FrodoStatus::ConfigError);

        let missing = CString::new("/nonexistent/frodo/data.csv").unwrap();
        assert_eq!(frodo_dataset_read(missing.as_ptr(), &mut ds), FrodoStatus::DataError);
    }
}

#[test]
fn dataset_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d.csv").to_str().unwrap()).unwrap();
    unsafe {
        let ds = frodo_dataset_new();
        let x = [0.1, 0.5, 0.9];
        assert_eq!(frodo_dataset_add_group(ds, 1.0, x.as_ptr(), 3, ptr::null()), FrodoStatus::Ok);
        assert_eq!(frodo_dataset_add_group(ds, 2.0, x.as_ptr(), 2, ptr::null()), FrodoStatus::Ok);
        assert_eq!(frodo_dataset_write(ds, path.as_ptr()), FrodoStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(frodo_dataset_read(path.as_ptr(), &mut back), FrodoStatus::Ok);
        assert_eq!(frodo_dataset_len(back), 2);
        frodo_dataset_free(ds);
        frodo_dataset_free(back);
    }
}

#[test]
fn small_fit_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let scenario = CString::new("beta_linear").unwrap();
        let mut ds = ptr::null_mut();
        assert_eq!(frodo_simulate(scenario.as_ptr(), 3, 8, &mut ds), FrodoStatus::Ok);
        let mut cfg = ptr::null_mut();
        assert_eq!(frodo_config_for_scenario(scenario.as_ptr(), ds, 3, &mut cfg), FrodoStatus::Ok);
        assert_eq!(frodo_config_set_sampler(cfg, 0, 100, 100, 1), FrodoStatus::ConfigError);
        assert_eq!(frodo_config_set_sampler(cfg, 2, 150, 100, 1), FrodoStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(frodo_fit(ds, cfg, &mut run), FrodoStatus::Ok, "{}", last_error());
        let k = frodo_run_bins(run);
        assert_eq!(k, 12);
        let (mut m, mut lo, mut hi) = (0.0, 0.0, 0.0);
        assert_eq!(frodo_run_sigma_y(run, &mut m, &mut lo, &mut hi), FrodoStatus::Ok);
        assert!(lo <= m && m <= hi && m > 0.0);
        let mut bands = vec![vec![0.0; k]; 4];
        let [a, b, c, d] = &mut bands[..] else { unreachable!() };
        assert_eq!(
            frodo_run_beta_band(run, a.as_mut_ptr(), b.as_mut_ptr(), c.as_mut_ptr(), d.as_mut_ptr(), k - 1),
            FrodoStatus::InvalidArgument
        );
        assert_eq!(frodo_run_beta_band(run, a.as_mut_ptr(), b.as_mut_ptr(), c.as_mut_ptr(), d.as_mut_ptr(), k), FrodoStatus::Ok);
        assert!((0..k).all(|j| bands[2][j] <= bands[1][j] && bands[1][j] <= bands[3][j]));
        let mut gates = FrodoGates::default();
        assert_eq!(frodo_run_gates(run, &mut gates), FrodoStatus::Ok);
        assert!(gates.max_rhat >= 1.0);
        let out = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
        assert_eq!(frodo_run_write(run, out.as_ptr()), FrodoStatus::Ok);
        assert!(dir.path().join("run/manifest.json").exists());
        frodo_run_free(run);
        frodo_config_free(cfg);
        frodo_dataset_free(ds);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(frodo_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/frodo.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["frodo_fit", "frodo_last_error", "FrodoDataset", "FRODO_STATUS_DATA_ERROR", "FrodoGates"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).status() else {
        eprintln!("no C compiler found; skipped the compile check");
        return;
    };
    assert!(status.success());
}
