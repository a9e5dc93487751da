//! C ABI over `goe-core`.
//!
//! Every fallible call returns a [`GoeStatus`]; on failure the message is
//! kept in a thread-local slot readable through [`goe_last_error`].
//! Datasets are opaque handles owned by the caller and released with
//! [`goe_dataset_free`]. Strings handed out by this library must be
//! released with [`goe_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use goe_core::eval::{aupr, auroc, fpr_at_95_tpr, run_experiment, ExperimentConfig};
use goe_core::graph::{load_dataset, DatasetManifest, TextAttributedGraph};
use goe_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    InsufficientNodes = 6,
    Llm = 7,
    Numeric = 8,
    Panic = 9,
    Other = 10,
}

/// Opaque dataset handle.
pub struct GoeDataset {
    graph: TextAttributedGraph,
    manifest: DatasetManifest,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(message).ok());
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> GoeStatus {
    match err {
        Error::Io { .. } => GoeStatus::Io,
        Error::Parse { .. } | Error::Json(_) => GoeStatus::Parse,
        Error::InsufficientNodes { .. } | Error::NoPseudoOod => GoeStatus::InsufficientNodes,
        Error::Llm(_) | Error::CacheMiss(_) | Error::UnparseableGeneration => GoeStatus::Llm,
        Error::NonFinite(_) | Error::NonFiniteLoss { .. } => GoeStatus::Numeric,
        Error::InvalidArgument(_)
        | Error::Shape(_)
        | Error::Empty(_)
        | Error::ClassSplit(_)
        | Error::RowCountMismatch { .. }
        | Error::EdgeOutOfRange(..) => GoeStatus::InvalidArgument,
    }
}

/// Runs `body`, converting errors and panics into a status plus message.
fn guard(body: impl FnOnce() -> Result<(), (GoeStatus, String)>) -> GoeStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GoeStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside goe");
            GoeStatus::Panic
        }
    }
}

fn core_err(err: Error) -> (GoeStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (GoeStatus, String) {
    (GoeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, (GoeStatus, String)> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| (GoeStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_scores<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], (GoeStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (GoeStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn goe_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a dataset directory.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn goe_dataset_load(dir: *const c_char, out: *mut *mut GoeDataset) -> GoeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let dir = read_str(dir, "dir")?;
        let (graph, manifest) = load_dataset(Path::new(dir)).map_err(core_err)?;
        *out = Box::into_raw(Box::new(GoeDataset { graph, manifest }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from [`goe_dataset_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn goe_dataset_free(dataset: *mut GoeDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn goe_dataset_node_count(dataset: *const GoeDataset, out: *mut usize) -> GoeStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        write_out(out, d.graph.node_count(), "out")
    })
}

/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn goe_dataset_embedding_dim(dataset: *const GoeDataset, out: *mut usize) -> GoeStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        write_out(out, d.graph.embedding_dim(), "out")
    })
}

/// Number of distinct categories declared by the dataset manifest.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn goe_dataset_category_count(dataset: *const GoeDataset, out: *mut usize) -> GoeStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        write_out(out, d.manifest.category_names.len(), "out")
    })
}

/// Energy `-logsumexp(z)` of each row of a row-major `rows x cols` matrix.
///
/// # Safety
/// `logits` must hold `rows * cols` doubles; `out` must hold `rows`.
#[no_mangle]
pub unsafe extern "C" fn goe_energy(logits: *const f64, rows: usize, cols: usize, out: *mut f64) -> GoeStatus {
    guard(|| {
        if cols == 0 {
            return Err((GoeStatus::InvalidArgument, "cols must be positive".into()));
        }
        let n = rows.checked_mul(cols).ok_or((GoeStatus::InvalidArgument, "rows * cols overflows".into()))?;
        let values = read_scores(logits, n, "logits")?;
        if rows > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (r, row) in values.chunks_exact(cols).enumerate() {
            let e = goe_core::objectives::energy(ndarray::ArrayView1::from(row));
            if !e.is_finite() {
                return Err((GoeStatus::Numeric, format!("non-finite energy in row {r}")));
            }
            *out.add(r) = e;
        }
        Ok(())
    })
}

type Metric = fn(&[f64], &[f64]) -> goe_core::Result<f64>;

unsafe fn metric(
    f: Metric,
    id: *const f64,
    n_id: usize,
    ood: *const f64,
    n_ood: usize,
    out: *mut f64,
) -> GoeStatus {
    guard(|| {
        let id = read_scores(id, n_id, "id_scores")?;
        let ood = read_scores(ood, n_ood, "ood_scores")?;
        let value = f(id, ood).map_err(core_err)?;
        write_out(out, value, "out")
    })
}

/// AUROC with OOD as the positive class (higher score = more OOD).
///
/// # Safety
/// `id` and `ood` must hold `n_id` and `n_ood` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn goe_auroc(id: *const f64, n_id: usize, ood: *const f64, n_ood: usize, out: *mut f64) -> GoeStatus {
    metric(auroc, id, n_id, ood, n_ood, out)
}

/// # Safety
/// Same contract as [`goe_auroc`].
#[no_mangle]
pub unsafe extern "C" fn goe_aupr(id: *const f64, n_id: usize, ood: *const f64, n_ood: usize, out: *mut f64) -> GoeStatus {
    metric(aupr, id, n_id, ood, n_ood, out)
}

/// # Safety
/// Same contract as [`goe_auroc`].
#[no_mangle]
pub unsafe extern "C" fn goe_fpr95(id: *const f64, n_id: usize, ood: *const f64, n_ood: usize, out: *mut f64) -> GoeStatus {
    metric(fpr_at_95_tpr, id, n_id, ood, n_ood, out)
}

/// Runs a full experiment from a JSON config and returns the report as
/// JSON in `*out`, to be released with [`goe_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn goe_run_experiment(config_json: *const c_char, out: *mut *mut c_char) -> GoeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(config_json, "config_json")?;
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| (GoeStatus::Parse, format!("config: {e}")))?;
        let report = run_experiment(&config).map_err(core_err)?;
        let json = serde_json::to_string(&report).map_err(|e| (GoeStatus::Other, e.to_string()))?;
        *out = CString::new(json).map_err(|e| (GoeStatus::Other, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn goe_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
