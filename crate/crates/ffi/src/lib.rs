//! C ABI over the uwbdetect pipeline.
//!
//! Every function returns a [`UwbStatus`]. On failure the message is kept in
//! a thread-local slot readable through [`uwb_last_error`]. Datasets and
//! models are opaque handles owned by the caller and released with the
//! matching `_free` function. Panics never cross the boundary; they are
//! reported as [`UwbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use uwbdetect::estimators::ParamValue;
use uwbdetect::labeling::{GridGeometry, RadialZones};
use uwbdetect::sigproc;
use uwbdetect::synth::{generate_dataset, TargetModel};
use uwbdetect::{
    DataType, EstimatorKind, EstimatorSpec, Error, LabelScheme, LabeledDataset, Matrix, Scenario,
    TrainedModel,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UwbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DegenerateScan = 3,
    InvalidParam = 4,
    MissingInput = 5,
    Format = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UwbEnvironment {
    Indoor = 0,
    Outdoor = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UwbScheme {
    Simple4 = 0,
    Grid10 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UwbDataType {
    Raw = 0,
    Baseband = 1,
    MotionFiltered = 2,
}

/// Order matches the report order: LR, Per, kNN, SVM, DT, RF, ET, SGB.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UwbEstimator {
    LogisticRegression = 0,
    Perceptron = 1,
    KNearestNeighbors = 2,
    LinearSvc = 3,
    DecisionTree = 4,
    RandomForest = 5,
    ExtraTrees = 6,
    GradientBoosting = 7,
}

/// Opaque dataset handle.
pub struct UwbDataset(LabeledDataset);

/// Opaque trained model handle.
pub struct UwbModel(TrainedModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> UwbStatus {
    match err {
        Error::InvalidInput(_) | Error::NonFinite(_) | Error::LengthMismatch { .. } => {
            UwbStatus::InvalidInput
        }
        Error::InsufficientClass { .. } => UwbStatus::InvalidInput,
        Error::DegenerateScan => UwbStatus::DegenerateScan,
        Error::InvalidParam { .. } | Error::Config(_) => UwbStatus::InvalidParam,
        Error::MissingInput(_) => UwbStatus::MissingInput,
        Error::Format(_) => UwbStatus::Format,
        Error::Io(_) => UwbStatus::Io,
    }
}

struct Fail(UwbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(UwbStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UwbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            UwbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            UwbStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(UwbStatus::InvalidInput, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn data_type(d: UwbDataType) -> DataType {
    match d {
        UwbDataType::Raw => DataType::Raw,
        UwbDataType::Baseband => DataType::Baseband,
        UwbDataType::MotionFiltered => DataType::MotionFiltered,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn uwb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Zero-mean, unit-variance copy of `x[0..n]` into `out[0..n]`.
///
/// # Safety
/// `x` and `out` must point to `n` valid doubles.
#[no_mangle]
pub unsafe extern "C" fn uwb_standardize(x: *const f64, n: usize, out: *mut f64) -> UwbStatus {
    guard(|| {
        let x = slice(x, n, "x")?;
        let out = slice_mut(out, n, "out")?;
        out.copy_from_slice(&sigproc::standardize(x)?);
        Ok(())
    })
}

/// Analytic-signal envelope of `x[0..n]`.
///
/// # Safety
/// `x` and `out` must point to `n` valid doubles.
#[no_mangle]
pub unsafe extern "C" fn uwb_envelope(x: *const f64, n: usize, out: *mut f64) -> UwbStatus {
    guard(|| {
        let x = slice(x, n, "x")?;
        let out = slice_mut(out, n, "out")?;
        out.copy_from_slice(&sigproc::analytic_envelope(x)?);
        Ok(())
    })
}

/// Motion filter over the scans at `t`, `t-1` and `t-2`.
///
/// # Safety
/// All four pointers must point to `n` valid doubles.
#[no_mangle]
pub unsafe extern "C" fn uwb_motion_filter(
    t: *const f64,
    t1: *const f64,
    t2: *const f64,
    n: usize,
    out: *mut f64,
) -> UwbStatus {
    guard(|| {
        let r = sigproc::motion_filter(slice(t, n, "t")?, slice(t1, n, "t1")?, slice(t2, n, "t2")?)?;
        slice_mut(out, n, "out")?.copy_from_slice(&r);
        Ok(())
    })
}

/// Synthesize a raw dataset with the built-in scenario, default labeling
/// geometry and target model. The result keeps its slow-time history, so it
/// can be passed to [`uwb_dataset_derive`].
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn uwb_dataset_generate(
    environment: UwbEnvironment,
    scheme: UwbScheme,
    n_per_class: usize,
    seed: u64,
    out: *mut *mut UwbDataset,
) -> UwbStatus {
    guard(|| {
        let scenario = match environment {
            UwbEnvironment::Indoor => Scenario::indoor(),
            UwbEnvironment::Outdoor => Scenario::outdoor(),
        };
        let scheme = match scheme {
            UwbScheme::Simple4 => LabelScheme::Simple4(RadialZones::default()),
            UwbScheme::Grid10 => LabelScheme::Grid10(GridGeometry::default()),
        };
        let ds = generate_dataset(&scenario, &scheme, &TargetModel::default(), n_per_class, seed)?;
        put(out, UwbDataset(ds))
    })
}

/// Derive a representation from a raw dataset. Constant scans are dropped
/// and counted in `dropped` (may be NULL).
///
/// # Safety
/// `raw` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn uwb_dataset_derive(
    raw: *const UwbDataset,
    kind: UwbDataType,
    out: *mut *mut UwbDataset,
    dropped: *mut usize,
) -> UwbStatus {
    guard(|| {
        let raw = handle(raw, "raw")?;
        let d = sigproc::derive_dataset(&raw.0, data_type(kind))?;
        if !dropped.is_null() {
            *dropped = d.dropped;
        }
        put(out, UwbDataset(d.dataset))
    })
}

/// Standardize every scan of a dataset on its own.
///
/// # Safety
/// `ds` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn uwb_dataset_standardize(
    ds: *const UwbDataset,
    out: *mut *mut UwbDataset,
    dropped: *mut usize,
) -> UwbStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let (s, n) = sigproc::standardize_dataset(&ds.0)?;
        if !dropped.is_null() {
            *dropped = n;
        }
        put(out, UwbDataset(s))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn uwb_dataset_read(path: *const c_char, out: *mut *mut UwbDataset) -> UwbStatus {
    guard(|| {
        let p = PathBuf::from(string(path, "path")?);
        put(out, UwbDataset(LabeledDataset::read_file(&p)?))
    })
}

/// # Safety
/// `ds` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn uwb_dataset_write(ds: *const UwbDataset, path: *const c_char) -> UwbStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        ds.0.write_file(&PathBuf::from(string(path, "path")?))?;
        Ok(())
    })
}

/// Number of examples and bins per scan.
///
/// # Safety
/// `ds` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn uwb_dataset_shape(
    ds: *const UwbDataset,
    n_examples: *mut usize,
    n_bins: *mut usize,
) -> UwbStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        if n_examples.is_null() || n_bins.is_null() {
            return Err(null("shape output"));
        }
        *n_examples = ds.0.len();
        *n_bins = ds.0.n_bins();
        Ok(())
    })
}

/// Copy the row-major scan matrix (`n_examples * n_bins` doubles) and the
/// labels (`n_examples` values). Either output may be NULL to skip it.
///
/// # Safety
/// `ds` must be a live handle; non-null outputs must have room for the
/// sizes reported by [`uwb_dataset_shape`].
#[no_mangle]
pub unsafe extern "C" fn uwb_dataset_copy(
    ds: *const UwbDataset,
    scans: *mut f64,
    labels: *mut u32,
) -> UwbStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        if !scans.is_null() {
            let s = ds.0.scans.as_slice();
            slice_mut(scans, s.len(), "scans")?.copy_from_slice(s);
        }
        if !labels.is_null() {
            slice_mut(labels, ds.0.len(), "labels")?.copy_from_slice(&ds.0.labels);
        }
        Ok(())
    })
}

/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uwb_dataset_free(ds: *mut UwbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Fit an estimator on a dataset. `params_json` is a JSON object holding
/// every hyperparameter of the estimator, e.g. `{"n_neighbors": 3}`.
///
/// # Safety
/// `ds` must be a live handle, `params_json` a NUL-terminated string and
/// `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn uwb_model_fit(
    kind: UwbEstimator,
    params_json: *const c_char,
    seed: u64,
    ds: *const UwbDataset,
    out: *mut *mut UwbModel,
) -> UwbStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let kind = EstimatorKind::from_id(kind as u8).expect("enum mirrors EstimatorKind");
        let text = string(params_json, "params_json")?;
        let mut map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
            .map_err(|e| Fail(UwbStatus::InvalidParam, format!("params_json: {e}")))?;
        let mut params = Vec::new();
        for &axis in kind.axes() {
            if let Some(v) = map.remove(axis) {
                let v: ParamValue = serde_json::from_value(v)
                    .map_err(|e| Fail(UwbStatus::InvalidParam, format!("{axis}: {e}")))?;
                params.push((axis.to_string(), v));
            }
        }
        if let Some(extra) = map.keys().next() {
            return Err(Fail(
                UwbStatus::InvalidParam,
                format!("unknown parameter '{extra}' for {}", kind.short_name()),
            ));
        }
        let spec = EstimatorSpec::new(kind, params, seed);
        let model = uwbdetect::fit(&spec, &ds.0.scans, &ds.0.labels)?;
        put(out, UwbModel(model))
    })
}

/// Predict `rows` scans of `cols` bins each, row-major in `x`.
///
/// # Safety
/// `model` must be a live handle, `x` must hold `rows * cols` doubles and
/// `labels` room for `rows` values.
#[no_mangle]
pub unsafe extern "C" fn uwb_model_predict(
    model: *const UwbModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    labels: *mut u32,
) -> UwbStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail(UwbStatus::InvalidInput, "rows * cols overflows".into()))?;
        let x = Matrix::from_vec(rows, cols, slice(x, n, "x")?.to_vec())?;
        let pred = m.0.predict(&x)?;
        slice_mut(labels, rows, "labels")?.copy_from_slice(&pred);
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn uwb_model_save(model: *const UwbModel, path: *const c_char) -> UwbStatus {
    guard(|| {
        let m = handle(model, "model")?;
        m.0.save(&PathBuf::from(string(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn uwb_model_load(path: *const c_char, out: *mut *mut UwbModel) -> UwbStatus {
    guard(|| {
        let p = PathBuf::from(string(path, "path")?);
        put(out, UwbModel(TrainedModel::load(&p)?))
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uwb_model_free(model: *mut UwbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
