use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use uwbdetect_ffi::*;

fn last_error() -> String {
    let p = uwb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(env: UwbEnvironment, n: usize, seed: u64) -> *mut UwbDataset {
    let mut raw = ptr::null_mut();
    let mut mf = ptr::null_mut();
    let mut std = ptr::null_mut();
    let mut dropped = 0usize;
    unsafe {
        assert_eq!(uwb_dataset_generate(env, UwbScheme::Simple4, n, seed, &mut raw), UwbStatus::Ok);
        assert_eq!(
            uwb_dataset_derive(raw, UwbDataType::MotionFiltered, &mut mf, &mut dropped),
            UwbStatus::Ok
        );
        assert_eq!(uwb_dataset_standardize(mf, &mut std, &mut dropped), UwbStatus::Ok);
        uwb_dataset_free(raw);
        uwb_dataset_free(mf);
    }
    std
}

fn shape(ds: *const UwbDataset) -> (usize, usize) {
    let (mut n, mut b) = (0, 0);
    assert_eq!(unsafe { uwb_dataset_shape(ds, &mut n, &mut b) }, UwbStatus::Ok);
    (n, b)
}

#[test]
fn dsp_routines() {
    let x = [2.0, 4.0, 6.0];
    let mut out = [0.0; 3];
    assert_eq!(unsafe { uwb_standardize(x.as_ptr(), 3, out.as_mut_ptr()) }, UwbStatus::Ok);
    assert!((out[2] - 1.224_744_871).abs() < 1e-8);

    let s = [0.5; 8];
    let mut mf = [1.0; 8];
    let st = unsafe { uwb_motion_filter(s.as_ptr(), s.as_ptr(), s.as_ptr(), 8, mf.as_mut_ptr()) };
    assert_eq!(st, UwbStatus::Ok);
    assert_eq!(mf, [0.0; 8]);

    let tone: Vec<f64> = (0..64)
        .map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / 64.0).cos())
        .collect();
    let mut env = vec![0.0; 64];
    assert_eq!(unsafe { uwb_envelope(tone.as_ptr(), 64, env.as_mut_ptr()) }, UwbStatus::Ok);
    assert!(env.iter().all(|e| (e - 1.0).abs() < 1e-9));
}

#[test]
fn errors_carry_status_and_message() {
    let x = [3.0; 4];
    let mut out = [0.0; 4];
    let st = unsafe { uwb_standardize(x.as_ptr(), 4, out.as_mut_ptr()) };
    assert_eq!(st, UwbStatus::DegenerateScan);
    assert!(last_error().contains("degenerate"));

    let st = unsafe { uwb_standardize(ptr::null(), 4, out.as_mut_ptr()) };
    assert_eq!(st, UwbStatus::NullPointer);

    let mut ds = ptr::null_mut();
    let missing = CString::new("/nonexistent/file.uwbd").unwrap();
    assert_eq!(unsafe { uwb_dataset_read(missing.as_ptr(), &mut ds) }, UwbStatus::MissingInput);
    assert!(ds.is_null());

    // success clears the slot
    let ok = [1.0, 2.0];
    let mut o2 = [0.0; 2];
    assert_eq!(unsafe { uwb_standardize(ok.as_ptr(), 2, o2.as_mut_ptr()) }, UwbStatus::Ok);
    assert!(uwb_last_error().is_null());
}

#[test]
fn fit_predict_save_load() {
    let ds = generate(UwbEnvironment::Outdoor, 10, 3);
    let (n, bins) = shape(ds);
    assert_eq!(n, 40);
    let mut scans = vec![0.0; n * bins];
    let mut labels = vec![0u32; n];
    assert_eq!(
        unsafe { uwb_dataset_copy(ds, scans.as_mut_ptr(), labels.as_mut_ptr()) },
        UwbStatus::Ok
    );

    let params = CString::new(r#"{"criterion": "gini", "max_features": "sqrt"}"#).unwrap();
    let mut model = ptr::null_mut();
    let st = unsafe { uwb_model_fit(UwbEstimator::DecisionTree, params.as_ptr(), 1, ds, &mut model) };
    assert_eq!(st, UwbStatus::Ok);
    let mut pred = vec![0u32; n];
    let st = unsafe { uwb_model_predict(model, scans.as_ptr(), n, bins, pred.as_mut_ptr()) };
    assert_eq!(st, UwbStatus::Ok);
    // an unpruned tree reproduces its training labels
    assert_eq!(pred, labels);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.uwbm").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { uwb_model_save(model, path.as_ptr()) }, UwbStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { uwb_model_load(path.as_ptr(), &mut back) }, UwbStatus::Ok);
    let mut pred2 = vec![0u32; n];
    let st = unsafe { uwb_model_predict(back, scans.as_ptr(), n, bins, pred2.as_mut_ptr()) };
    assert_eq!(st, UwbStatus::Ok);
    assert_eq!(pred, pred2);

    let st = unsafe { uwb_model_predict(back, scans.as_ptr(), n, bins - 1, pred2.as_mut_ptr()) };
    assert_eq!(st, UwbStatus::InvalidInput);

    unsafe {
        uwb_model_free(model);
        uwb_model_free(back);
        uwb_dataset_free(ds);
    }
}

#[test]
fn bad_params_are_rejected() {
    let ds = generate(UwbEnvironment::Indoor, 4, 1);
    let mut model = ptr::null_mut();
    for text in [r#"{"n_neighbors": 0}"#, r#"{"k": 3}"#, "not json", "{}"] {
        let p = CString::new(text).unwrap();
        let st = unsafe {
            uwb_model_fit(UwbEstimator::KNearestNeighbors, p.as_ptr(), 0, ds, &mut model)
        };
        assert_eq!(st, UwbStatus::InvalidParam, "{text}");
        assert!(model.is_null());
    }
    unsafe { uwb_dataset_free(ds) };
}

#[test]
fn dataset_file_round_trip() {
    let ds = generate(UwbEnvironment::Outdoor, 3, 5);
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d.uwbd").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { uwb_dataset_write(ds, path.as_ptr()) }, UwbStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { uwb_dataset_read(path.as_ptr(), &mut back) }, UwbStatus::Ok);
    assert_eq!(shape(ds), shape(back));
    let (n, b) = shape(ds);
    let mut a = vec![0.0; n * b];
    let mut c = vec![0.0; n * b];
    unsafe {
        uwb_dataset_copy(ds, a.as_mut_ptr(), ptr::null_mut());
        uwb_dataset_copy(back, c.as_mut_ptr(), ptr::null_mut());
        uwb_dataset_free(ds);
        uwb_dataset_free(back);
    }
    assert_eq!(a, c);
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libuwbdetect_ffi.a");
    if !lib.is_file() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C link test: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
