use std::ffi::{CStr, CString};
use std::ptr;

use ddos_ffi::*;

fn last_error() -> String {
    let p = ddos_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn synth(spec: &str) -> *mut DdosDataset {
    let spec = CString::new(spec).unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { ddos_dataset_synth(spec.as_ptr(), &mut ds) }, DdosStatus::Ok);
    assert!(!ds.is_null());
    ds
}

#[test]
fn dataset_shape_and_counts() {
    let ds = synth("benign=30,ddos=12,features=5,seed=1");
    let (mut rows, mut cols, mut b, mut d) = (0, 0, 0, 0);
    unsafe {
        assert_eq!(ddos_dataset_rows(ds, &mut rows), DdosStatus::Ok);
        assert_eq!(ddos_dataset_cols(ds, &mut cols), DdosStatus::Ok);
        assert_eq!(ddos_dataset_label_counts(ds, &mut b, &mut d), DdosStatus::Ok);
        ddos_dataset_free(ds);
    }
    assert_eq!((rows, cols, b, d), (42, 5, 30, 12));
    assert!(ddos_last_error_message().is_null());
}

#[test]
fn errors_carry_status_and_message() {
    let mut rows = 0;
    assert_eq!(unsafe { ddos_dataset_rows(ptr::null(), &mut rows) }, DdosStatus::NullPointer);
    assert!(last_error().contains("dataset"));

    let bad = CString::new("bogus=1").unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { ddos_dataset_synth(bad.as_ptr(), &mut ds) }, DdosStatus::Parse);
    assert!(last_error().contains("bogus"));
    assert!(ds.is_null());

    let missing = CString::new("/nonexistent/flows.csv").unwrap();
    assert_eq!(
        unsafe { ddos_dataset_load_csv(missing.as_ptr(), ptr::null(), &mut ds) },
        DdosStatus::Io
    );

    let mut auc = 0.0;
    let y = [1u8, 1];
    let s = [0.2, 0.4];
    assert_eq!(
        unsafe { ddos_metrics_roc_auc(y.as_ptr(), s.as_ptr(), 2, &mut auc) },
        DdosStatus::InvalidArgument
    );
}

#[test]
fn load_csv_through_ffi() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flows.csv");
    std::fs::write(&path, "bytes,proto,class\n10,tcp,0\n,udp,1\n30,tcp,1\n").unwrap();
    let p = CString::new(path.to_str().unwrap()).unwrap();
    let label = CString::new("class").unwrap();
    let mut ds = ptr::null_mut();
    let (mut rows, mut b, mut d) = (0, 0, 0);
    unsafe {
        assert_eq!(ddos_dataset_load_csv(p.as_ptr(), label.as_ptr(), &mut ds), DdosStatus::Ok);
        ddos_dataset_rows(ds, &mut rows);
        ddos_dataset_label_counts(ds, &mut b, &mut d);
        ddos_dataset_free(ds);
    }
    assert_eq!((rows, b, d), (3, 1, 2));
}

#[test]
fn metrics_round_trip() {
    let y = [1u8, 0, 1, 0];
    let p = [1u8, 0, 0, 0];
    let s = [0.9, 0.1, 0.4, 0.3];
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(ddos_metrics_evaluate(y.as_ptr(), p.as_ptr(), s.as_ptr(), 4, &mut json), DdosStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        ddos_string_free(json);
        assert_eq!(v["accuracy"], 0.75);
        assert_eq!(v["recall"], 0.5);
        assert_eq!(v["auc"], 1.0);
    }
    let mut auc = 0.0;
    assert_eq!(unsafe { ddos_metrics_roc_auc(y.as_ptr(), s.as_ptr(), 4, &mut auc) }, DdosStatus::Ok);
    assert_eq!(auc, 1.0);
}

#[test]
fn experiment_then_model_predict() {
    let ds = synth("n=60,features=6,seed=3");
    let cfg = CString::new("models = [\"knn\"]\ntracks = [\"balanced\"]\ncv_folds = 3\nlof_k = 5\ngrid_knn_k = [1, 3]\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut json = ptr::null_mut();
    let status = unsafe { ddos_experiment_run(ds, cfg.as_ptr(), out.as_ptr(), &mut json) };
    assert_eq!(status, DdosStatus::Ok, "{}", if status == DdosStatus::Ok { String::new() } else { last_error() });
    let report: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    unsafe { ddos_string_free(json) };
    assert_eq!(report["tracks"].as_array().unwrap().len(), 1);
    assert_eq!(report["tracks"][0]["track"], "balanced");

    let model_path = CString::new(dir.path().join("models/knn_balanced.json").to_str().unwrap()).unwrap();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(ddos_model_load(model_path.as_ptr(), &mut model), DdosStatus::Ok);
        let mut d = 0;
        ddos_model_n_features(model, &mut d);
        assert_eq!(d, 6);
        // one row near each class centre
        let rows = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 6.0, 6.0, 6.0, 2.0, 6.0, 6.0];
        let mut probs = [0.0; 2];
        let mut labels = [9u8; 2];
        assert_eq!(
            ddos_model_predict(model, rows.as_ptr(), 2, 6, probs.as_mut_ptr(), labels.as_mut_ptr()),
            DdosStatus::Ok
        );
        assert_eq!(labels, [0, 1]);
        assert!(probs[0] < 0.5 && probs[1] >= 0.5);
        assert_eq!(
            ddos_model_predict(model, rows.as_ptr(), 3, 4, probs.as_mut_ptr(), ptr::null_mut()),
            DdosStatus::Schema
        );
        ddos_model_free(model);
        ddos_dataset_free(ds);
    }
}

#[test]
fn free_accepts_null() {
    unsafe {
        ddos_dataset_free(ptr::null_mut());
        ddos_model_free(ptr::null_mut());
        ddos_string_free(ptr::null_mut());
    }
}

/// Compile the C example against the generated header and shared library.
/// Skipped when no C compiler is on the path.
#[test]
fn c_example_links_and_runs() {
    use std::path::PathBuf;
    use std::process::Command;

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    if !lib_dir.join("libddos_ffi.so").exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or shared library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("examples/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(lib_dir)
        .arg("-lddos_ffi")
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).env("LD_LIBRARY_PATH", lib_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "rows=30 cols=4 benign=20 ddos=10 auc=1.000"
    );
}
