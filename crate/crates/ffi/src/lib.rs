//! C ABI for kirsf.
//!
//! Datasets and models are opaque handles created and released through this
//! interface. Every fallible function returns a `KirsfStatus`; on failure a
//! description is available from `kirsf_last_error_message` on the same
//! thread until the next failing call. Panics never cross the boundary; they
//! are reported as `KIRSF_STATUS_PANIC`.
//!
//! Covariate matrices are dense, row-major `n x p` arrays of `double`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use kirsf::data::{load_csv, ColumnSchema};
use kirsf::{
    c_index, Error, ForestConfig, KernelChoice, SplitRule, SurvivalDataset, SurvivalModel, SurvivalRecord, TreeConfig,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KirsfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    DimensionMismatch = 5,
    NoEvents = 6,
    VersionMismatch = 7,
    CorruptPayload = 8,
    Undefined = 9,
    Panic = 10,
    Internal = 11,
}

/// Values accepted in `KirsfFitOptions::split_rule`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KirsfSplitRule {
    Logrank = 0,
    Deviance = 1,
}

/// Values accepted in `KirsfFitOptions::kernel`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KirsfKernel {
    None = 0,
    Linear = 1,
    Polynomial = 2,
    Gaussian = 3,
}

/// Forest and kernel settings for `kirsf_model_fit`.
///
/// Fill with `kirsf_fit_options_default` and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KirsfFitOptions {
    pub n_trees: usize,
    /// Candidate features per node; 0 selects ceil(sqrt(p)).
    pub mtry: usize,
    pub min_node_events: usize,
    pub min_node_size: usize,
    /// 0 means unlimited.
    pub max_depth: usize,
    /// One of `KirsfSplitRule`.
    pub split_rule: u32,
    /// One of `KirsfKernel`.
    pub kernel: u32,
    /// Polynomial degree.
    pub degree: u32,
    /// Polynomial offset c.
    pub offset_c: f64,
    /// Gaussian sigma^2; values <= 0 select the standardized dimension.
    pub sigma2: f64,
    pub seed: u64,
}

/// Opaque survival dataset.
pub struct KirsfDataset {
    inner: SurvivalDataset,
}

/// Opaque fitted model.
pub struct KirsfModel {
    inner: SurvivalModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> KirsfStatus {
    match err {
        Error::Io { .. } => KirsfStatus::Io,
        Error::Csv(_) | Error::MissingColumn(_) | Error::Row { .. } => KirsfStatus::Parse,
        Error::DimensionMismatch { .. } => KirsfStatus::DimensionMismatch,
        Error::NoEvents => KirsfStatus::NoEvents,
        Error::VersionMismatch { .. } => KirsfStatus::VersionMismatch,
        Error::CorruptPayload(_) => KirsfStatus::CorruptPayload,
        Error::UndefinedConcordance | Error::NoOobTrees(_) => KirsfStatus::Undefined,
        Error::NonFinite(_)
        | Error::InvalidArgument(_)
        | Error::UnknownEndpoint { .. }
        | Error::SplitRetriesExhausted { .. }
        | Error::ZeroBaseline { .. } => KirsfStatus::InvalidArgument,
        Error::Experiment(_) => KirsfStatus::Internal,
    }
}

struct Failure(KirsfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(KirsfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(KirsfStatus::InvalidArgument, msg.into())
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> KirsfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => KirsfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            KirsfStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn rows(covariates: *const f64, n: usize, p: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let len = n.checked_mul(p).ok_or_else(|| invalid("n * p overflows"))?;
    let flat = slice(covariates, len, "covariates")?;
    if p == 0 {
        return Ok(vec![Vec::new(); n]);
    }
    Ok(flat.chunks(p).map(<[f64]>::to_vec).collect())
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failing call on this thread, or null if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kirsf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kirsf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes the library defaults into `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `KirsfFitOptions`.
#[no_mangle]
pub unsafe extern "C" fn kirsf_fit_options_default(out: *mut KirsfFitOptions) -> KirsfStatus {
    guard(|| {
        let d = ForestConfig::default();
        write_out(
            out,
            KirsfFitOptions {
                n_trees: d.n_trees,
                mtry: 0,
                min_node_events: d.tree.min_node_events,
                min_node_size: d.tree.min_node_size,
                max_depth: 0,
                split_rule: KirsfSplitRule::Logrank as u32,
                kernel: KirsfKernel::None as u32,
                degree: 2,
                offset_c: 1.0,
                sigma2: 0.0,
                seed: d.seed,
            },
            "out",
        )
    })
}

/// Loads a CSV file; every numeric column other than `time_column` and
/// `event_column` becomes a covariate.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be null or
/// writable. The handle written to `out` is released with
/// `kirsf_dataset_free`.
#[no_mangle]
pub unsafe extern "C" fn kirsf_dataset_load_csv(
    path: *const c_char,
    time_column: *const c_char,
    event_column: *const c_char,
    out: *mut *mut KirsfDataset,
) -> KirsfStatus {
    guard(|| {
        let path = PathBuf::from(c_str(path, "path")?);
        let schema = ColumnSchema::new(c_str(time_column, "time_column")?, c_str(event_column, "event_column")?);
        let inner = load_csv(&path, &schema)?;
        write_out(out, Box::into_raw(Box::new(KirsfDataset { inner })), "out")
    })
}

/// Builds a dataset from arrays; covariates are named `X1..Xp`.
///
/// `events[i]` must be 0 (censored) or 1 (event).
///
/// # Safety
/// `times` and `events` must hold `n` elements and `covariates` `n * p`
/// elements; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kirsf_dataset_from_arrays(
    times: *const f64,
    events: *const u8,
    covariates: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut KirsfDataset,
) -> KirsfStatus {
    guard(|| {
        let times = slice(times, n, "times")?;
        let events = slice(events, n, "events")?;
        let x = rows(covariates, n, p)?;
        let records = times
            .iter()
            .zip(events)
            .zip(x)
            .enumerate()
            .map(|(i, ((&t, &e), row))| {
                let event = match e {
                    0 => false,
                    1 => true,
                    other => return Err(invalid(format!("event value {other} at row {i} is not 0 or 1"))),
                };
                SurvivalRecord::new(t, event, row).map_err(Failure::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let names = (1..=p).map(|j| format!("X{j}")).collect();
        let inner = SurvivalDataset::new(records, names)?;
        write_out(out, Box::into_raw(Box::new(KirsfDataset { inner })), "out")
    })
}

/// Number of records and covariates.
///
/// # Safety
/// `dataset` must be null or a live handle; outputs must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kirsf_dataset_shape(
    dataset: *const KirsfDataset,
    n_out: *mut usize,
    p_out: *mut usize,
) -> KirsfStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        write_out(n_out, ds.inner.len(), "n_out")?;
        write_out(p_out, ds.inner.p(), "p_out")
    })
}

/// Releases a dataset handle; null is ignored.
///
/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kirsf_dataset_free(dataset: *mut KirsfDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

fn fit_settings(opts: &KirsfFitOptions) -> Result<(ForestConfig, Option<KernelChoice>), Failure> {
    let split_rule = match opts.split_rule {
        0 => SplitRule::Logrank,
        1 => SplitRule::Deviance,
        other => return Err(invalid(format!("unknown split rule {other}"))),
    };
    let kernel = match opts.kernel {
        0 => None,
        1 => Some(KernelChoice::Linear),
        2 => Some(KernelChoice::Polynomial {
            c: opts.offset_c,
            degree: opts.degree,
        }),
        3 => Some(KernelChoice::Gaussian {
            sigma2: (opts.sigma2 > 0.0).then_some(opts.sigma2),
        }),
        other => return Err(invalid(format!("unknown kernel {other}"))),
    };
    let config = ForestConfig {
        n_trees: opts.n_trees,
        tree: TreeConfig {
            mtry: (opts.mtry > 0).then_some(opts.mtry),
            min_node_events: opts.min_node_events,
            min_node_size: opts.min_node_size,
            split_rule,
            max_depth: (opts.max_depth > 0).then_some(opts.max_depth),
        },
        seed: opts.seed,
    };
    Ok((config, kernel))
}

/// Fits a model. When `oob_error_out` is non-null it receives the
/// out-of-bag prediction error `1 - C`.
///
/// # Safety
/// `dataset` must be a live handle, `options` null or readable, and the
/// output pointers null or writable. The model is released with
/// `kirsf_model_free`.
#[no_mangle]
pub unsafe extern "C" fn kirsf_model_fit(
    dataset: *const KirsfDataset,
    options: *const KirsfFitOptions,
    out: *mut *mut KirsfModel,
    oob_error_out: *mut f64,
) -> KirsfStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let opts = options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (config, kernel) = fit_settings(opts)?;
        let inner = SurvivalModel::fit(&ds.inner, &config, kernel)?;
        if !oob_error_out.is_null() {
            oob_error_out.write(inner.oob_concordance()?.prediction_error);
        }
        out.write(Box::into_raw(Box::new(KirsfModel { inner })));
        Ok(())
    })
}

/// Number of raw covariates the model expects.
///
/// # Safety
/// `model` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kirsf_model_input_dim(model: *const KirsfModel, out: *mut usize) -> KirsfStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        write_out(out, m.inner.input_dim(), "out")
    })
}

/// Ensemble mortality for `n` rows of `p` raw covariates, written to `out[0..n]`.
///
/// # Safety
/// `covariates` must hold `n * p` values and `out` room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn kirsf_model_predict_mortality(
    model: *const KirsfModel,
    covariates: *const f64,
    n: usize,
    p: usize,
    out: *mut f64,
) -> KirsfStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if p != m.inner.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: m.inner.input_dim(),
                found: p,
            }
            .into());
        }
        let x = rows(covariates, n, p)?;
        let pred = m.inner.predict_mortality(&x)?;
        if n > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (i, v) in pred.into_iter().enumerate() {
            out.add(i).write(v);
        }
        Ok(())
    })
}

/// Saves a model to `path`.
///
/// # Safety
/// `model` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kirsf_model_save(model: *const KirsfModel, path: *const c_char) -> KirsfStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        m.inner.save(c_str(path, "path")?)?;
        Ok(())
    })
}

/// Loads a model saved by `kirsf_model_save` or the command-line tool.
///
/// # Safety
/// `path` must be NUL-terminated and `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kirsf_model_load(path: *const c_char, out: *mut *mut KirsfModel) -> KirsfStatus {
    guard(|| {
        let inner = SurvivalModel::load(c_str(path, "path")?)?;
        write_out(out, Box::into_raw(Box::new(KirsfModel { inner })), "out")
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kirsf_model_free(model: *mut KirsfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Harrell's C-index of `predicted` (higher means worse) against the
/// observed times and 0/1 event indicators.
///
/// # Safety
/// The three arrays must hold `n` elements; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kirsf_c_index(
    times: *const f64,
    events: *const u8,
    predicted: *const f64,
    n: usize,
    out: *mut f64,
) -> KirsfStatus {
    guard(|| {
        let times = slice(times, n, "times")?;
        let events = slice(events, n, "events")?;
        let predicted = slice(predicted, n, "predicted")?;
        let events = events
            .iter()
            .map(|&e| match e {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(invalid(format!("event value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let result = c_index(times, &events, predicted)?;
        write_out(out, result.c_index, "out")
    })
}
