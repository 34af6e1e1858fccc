//! C ABI over `ddos-core`.
//!
//! Every function returns a [`DdosStatus`]. On failure the message is kept
//! per thread and can be read with [`ddos_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function; strings
//! returned through `char **` must be released with [`ddos_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ddos_core::config::FileConfig;
use ddos_core::dataset::{clean_and_encode, load_csv, CategoryEncoder, Dataset};
use ddos_core::experiment::{run_full_experiment, write_outputs, ArtifactContext};
use ddos_core::metrics::{evaluate, roc_auc};
use ddos_core::synth::{self, SynthConfig};
use ddos_core::{Error, Matrix, ModelArtifact};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DdosStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Schema = 5,
    Model = 6,
    Pipeline = 7,
    Panic = 99,
}

/// Loaded, cleaned and encoded flow table.
pub struct DdosDataset {
    dataset: Dataset,
    encoder: CategoryEncoder,
    label_column: String,
}

/// Saved model with its preprocessing.
pub struct DdosModel {
    artifact: ModelArtifact,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DdosStatus {
    match e {
        Error::Stage { source, .. } => status_of(source),
        Error::Io { .. } => DdosStatus::Io,
        Error::Csv(_) | Error::Row { .. } | Error::Json(_) | Error::Config(_) => DdosStatus::Parse,
        Error::Schema(_) | Error::ArityMismatch { .. } => DdosStatus::Schema,
        Error::ModelFile(_) => DdosStatus::Model,
        Error::InvalidInput(_) | Error::Hyperparameter { .. } => DdosStatus::InvalidArgument,
    }
}

struct Failure(DdosStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DdosStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, record any failure and turn panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DdosStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DdosStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DdosStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DdosStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn out_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(DdosStatus::Pipeline, "output contains a nul byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ddos_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn ddos_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// Load a CSV, impute gaps and encode categorical columns.
#[no_mangle]
pub unsafe extern "C" fn ddos_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    out: *mut *mut DdosDataset,
) -> DdosStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let label = opt_str_arg(label_column, "label_column")?.unwrap_or("label");
        let table = load_csv(path, label)?;
        let (dataset, encoder) = clean_and_encode(&table)?;
        *out = Box::into_raw(Box::new(DdosDataset {
            dataset,
            encoder,
            label_column: label.to_string(),
        }));
        Ok(())
    })
}

/// Generate a synthetic dataset from a spec such as `"sep=6,n=2000"`.
#[no_mangle]
pub unsafe extern "C" fn ddos_dataset_synth(spec: *const c_char, out: *mut *mut DdosDataset) -> DdosStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg: SynthConfig = opt_str_arg(spec, "spec")?.unwrap_or("").parse()?;
        let dataset = synth::generate(&cfg)?;
        *out = Box::into_raw(Box::new(DdosDataset {
            dataset,
            encoder: synth::encoder(&cfg),
            label_column: "label".into(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ddos_dataset_rows(ds: *const DdosDataset, out: *mut usize) -> DdosStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = ds.dataset.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ddos_dataset_cols(ds: *const DdosDataset, out: *mut usize) -> DdosStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = ds.dataset.n_features();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ddos_dataset_label_counts(
    ds: *const DdosDataset,
    benign: *mut usize,
    ddos: *mut usize,
) -> DdosStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let dist = ds.dataset.label_distribution();
        *benign.as_mut().ok_or_else(|| null("benign"))? = dist.benign_count;
        *ddos.as_mut().ok_or_else(|| null("ddos"))? = dist.ddos_count;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ddos_dataset_free(ds: *mut DdosDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// Run the full experiment. `config_toml` (nullable) uses the same flat keys
/// as the CLI config file. When `out_dir` is non-null the report, plot data
/// and model files are written there too. The report JSON is returned
/// through `out_json`.
#[no_mangle]
pub unsafe extern "C" fn ddos_experiment_run(
    ds: *const DdosDataset,
    config_toml: *const c_char,
    out_dir: *const c_char,
    out_json: *mut *mut c_char,
) -> DdosStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let cfg = match opt_str_arg(config_toml, "config_toml")? {
            Some(text) => FileConfig::parse(text)?.experiment,
            None => Default::default(),
        };
        let outcome = run_full_experiment(&cfg, &ds.dataset)?;
        if let Some(dir) = opt_str_arg(out_dir, "out_dir")? {
            let ctx = ArtifactContext {
                feature_names: &ds.dataset.feature_names,
                label_column: &ds.label_column,
                encoder: &ds.encoder,
            };
            write_outputs(&outcome, Path::new(dir), Some(ctx))?;
        }
        out_string(out_json, outcome.report.to_json()?)
    })
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn ddos_model_load(path: *const c_char, out: *mut *mut DdosModel) -> DdosStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let artifact = ModelArtifact::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(DdosModel { artifact }));
        Ok(())
    })
}

/// Number of raw input columns the model expects.
#[no_mangle]
pub unsafe extern "C" fn ddos_model_n_features(model: *const DdosModel, out: *mut usize) -> DdosStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.artifact.feature_names.len();
        Ok(())
    })
}

/// Score `n_rows` row-major raw feature rows (categorical columns given as
/// their integer codes). Writes one probability per row to `out_probs` and,
/// when non-null, one 0/1 label per row to `out_labels`.
#[no_mangle]
pub unsafe extern "C" fn ddos_model_predict(
    model: *const DdosModel,
    rows: *const f64,
    n_rows: usize,
    n_cols: usize,
    out_probs: *mut f64,
    out_labels: *mut u8,
) -> DdosStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let len = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Failure(DdosStatus::InvalidArgument, "row buffer size overflows".into()))?;
        let data = slice_arg(rows, len, "rows")?.to_vec();
        if n_rows > 0 && out_probs.is_null() {
            return Err(null("out_probs"));
        }
        let x = Matrix::new(n_rows, n_cols, data)?;
        let pred = m.artifact.predict_raw(&x)?;
        if n_rows > 0 {
            std::slice::from_raw_parts_mut(out_probs, n_rows).copy_from_slice(&pred.positive_probabilities);
            if !out_labels.is_null() {
                std::slice::from_raw_parts_mut(out_labels, n_rows).copy_from_slice(&pred.labels);
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ddos_model_free(model: *mut DdosModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Full metrics report as JSON for `n` labels, predictions and positive-class
/// probabilities.
#[no_mangle]
pub unsafe extern "C" fn ddos_metrics_evaluate(
    y_true: *const u8,
    y_pred: *const u8,
    probs: *const f64,
    n: usize,
    out_json: *mut *mut c_char,
) -> DdosStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let y = slice_arg(y_true, n, "y_true")?;
        let p = slice_arg(y_pred, n, "y_pred")?;
        let s = slice_arg(probs, n, "probs")?;
        let (report, _) = evaluate(y, p, s)?;
        out_string(out_json, serde_json::to_string(&report).map_err(Error::from)?)
    })
}

/// Area under the ROC curve.
#[no_mangle]
pub unsafe extern "C" fn ddos_metrics_roc_auc(
    y_true: *const u8,
    scores: *const f64,
    n: usize,
    out_auc: *mut f64,
) -> DdosStatus {
    guard(|| {
        let y = slice_arg(y_true, n, "y_true")?;
        let s = slice_arg(scores, n, "scores")?;
        let out = out_auc.as_mut().ok_or_else(|| null("out_auc"))?;
        *out = roc_auc(y, s)?.auc;
        Ok(())
    })
}
