//! C interface to the lcpow toolkit.
//!
//! Conventions: every fallible call returns a status code and writes its
//! result through an out pointer that is touched only on `Ok`. A failing
//! call stores a message retrievable with `lcpow_last_error_message` until
//! the next failing call on the same thread. Handles are opaque; each
//! `*_free` accepts null. Strings returned through out pointers are owned
//! by the caller and released with `lcpow_string_free`. Panics never cross
//! the boundary: they are caught and surfaced as `Internal`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::AssertUnwindSafe;
use std::path::PathBuf;

use lcpow::logconcavity::logconcave_prefix_ints;
use lcpow::nekrasov::q_recurrence;
use lcpow::rat::format_rat;
use lcpow::sequences::{generate, SeriesSpec};
use lcpow::series::TruncatedSeries;
use lcpow::table::PowerTable;
use lcpow::Error;

/// Status code of an interface call. Zero is success; everything else is
/// a failure whose message `lcpow_last_error_message` returns.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    /// A required pointer argument was null.
    NullArg = 1,
    /// An argument was out of range or otherwise unusable.
    InvalidArg = 2,
    /// Text input (series id, file content) failed to parse.
    Parse = 3,
    /// The requested computation exceeds the memory budget.
    Resource = 4,
    /// The truncation order is too small for the requested certified
    /// computation.
    Precision = 5,
    /// File input/output or serialization failed.
    Io = 6,
    /// An internal invariant failed; the handle contents are suspect.
    Internal = 7,
}

/// A rational power series truncated at a fixed order, the base object
/// tables are built from.
pub struct Series {
    f: TruncatedSeries,
    id: String,
}

/// Exact coefficient table of f^1 .. f^K up to a truncation order.
pub struct Table {
    t: PowerTable,
}

/// Nekrasov-Okounkov polynomials Q_0 .. Q_n with exact rational
/// coefficients.
pub struct QTable {
    q: lcpow::nekrasov::QTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let stored = CString::new(msg)
        .unwrap_or_else(|_| CString::new("error message contained a NUL byte").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(stored));
}

fn fail_str(status: Status, msg: &str) -> Status {
    set_error(msg.to_string());
    status
}

fn fail(err: Error) -> Status {
    let status = match &err {
        Error::Usage(_) | Error::Domain(_) => Status::InvalidArg,
        Error::Format { .. } => Status::Parse,
        Error::Resource { .. } => Status::Resource,
        Error::Precision { .. } => Status::Precision,
        Error::Io(_) | Error::Json(_) | Error::Cache(_) => Status::Io,
        _ => Status::Internal,
    };
    set_error(err.to_string());
    status
}

/// Runs the body with a panic guard so unwinding never crosses the C
/// boundary.
fn guarded(body: impl FnOnce() -> Status) -> Status {
    match std::panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unidentified panic".into());
            set_error(format!("internal panic: {msg}"));
            Status::Internal
        }
    }
}

unsafe fn read_c_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Status> {
    if ptr.is_null() {
        return Err(fail_str(Status::NullArg, &format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail_str(Status::Parse, &format!("{what} is not UTF-8: {e}")))
}

fn give_string(out: *mut *mut c_char, s: String) -> Status {
    let c = match CString::new(s) {
        Ok(c) => c,
        Err(e) => return fail_str(Status::Internal, &format!("interior NUL: {e}")),
    };
    unsafe { *out = c.into_raw() };
    Status::Ok
}

/// Toolkit version as a static NUL-terminated string. Never null; do not
/// free.
#[no_mangle]
pub extern "C" fn lcpow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failing call on this thread, as a fresh
/// string the caller frees with `lcpow_string_free`. Null when no call
/// has failed yet.
#[no_mangle]
pub extern "C" fn lcpow_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map(|c| c.clone().into_raw())
            .unwrap_or(std::ptr::null_mut())
    })
}

/// Releases a string returned through an out pointer. Null is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not
/// freed since.
#[no_mangle]
pub unsafe extern "C" fn lcpow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the series named by `series_id` ("geometric", "geometric:p/q",
/// "constant:p/q", "sigma-shifted", "sigma", "custom:<path>") truncated at
/// order `n`, writing the new handle to `out`.
///
/// # Safety
/// `series_id` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcpow_series_new(
    series_id: *const c_char,
    n: usize,
    out: *mut *mut Series,
) -> Status {
    guarded(|| {
        if out.is_null() {
            return fail_str(Status::NullArg, "out pointer is null");
        }
        let id = match read_c_str(series_id, "series_id") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let spec = match SeriesSpec::parse(id) {
            Ok(spec) => spec,
            Err(e) => return fail(e),
        };
        match generate(&spec, n) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(Series { f, id: spec.id() }));
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Truncation order of the series; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle from `lcpow_series_new`.
#[no_mangle]
pub unsafe extern "C" fn lcpow_series_truncation(series: *const Series) -> usize {
    if series.is_null() {
        return 0;
    }
    (*series).f.truncation_order()
}

/// Writes coefficient a_n as a canonical "p/q" string to `out`.
///
/// # Safety
/// `series` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcpow_series_coeff_str(
    series: *const Series,
    n: usize,
    out: *mut *mut c_char,
) -> Status {
    guarded(|| {
        if series.is_null() || out.is_null() {
            return fail_str(Status::NullArg, "series or out pointer is null");
        }
        let f = &(*series).f;
        match f.coeffs().get(n) {
            Some(c) => give_string(out, format_rat(c)),
            None => fail_str(
                Status::InvalidArg,
                &format!("index {n} exceeds the truncation {}", f.truncation_order()),
            ),
        }
    })
}

/// Releases a series handle. Null is a no-op.
///
/// # Safety
/// `series` must be null or a live handle, and is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn lcpow_series_free(series: *mut Series) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Builds the exact table of f^1 .. f^k_max truncated at order `n`
/// (at most the series truncation), writing the handle to `out`.
///
/// # Safety
/// `series` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcpow_table_build(
    series: *const Series,
    k_max: u32,
    n: usize,
    out: *mut *mut Table,
) -> Status {
    guarded(|| {
        if series.is_null() || out.is_null() {
            return fail_str(Status::NullArg, "series or out pointer is null");
        }
        let s = &*series;
        match PowerTable::build(&s.f, &s.id, k_max, n) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(Table { t }));
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Largest power K held by the table; 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lcpow_table_k_max(table: *const Table) -> u32 {
    if table.is_null() {
        return 0;
    }
    (*table).t.k_max()
}

/// Truncation order of the table; 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lcpow_table_n(table: *const Table) -> usize {
    if table.is_null() {
        return 0;
    }
    (*table).t.n()
}

/// Writes coefficient [q^n] f^k as a canonical "p/q" string to `out`.
///
/// # Safety
/// `table` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcpow_table_coeff_str(
    table: *const Table,
    k: u32,
    n: usize,
    out: *mut *mut c_char,
) -> Status {
    guarded(|| {
        if table.is_null() || out.is_null() {
            return fail_str(Status::NullArg, "table or out pointer is null");
        }
        let t = &(*table).t;
        let row = match t.row(k) {
            Some(row) => row,
            None => {
                return fail_str(
                    Status::InvalidArg,
                    &format!("row k = {k} is not in the table (K = {})", t.k_max()),
                )
            }
        };
        if n > t.n() {
            return fail_str(
                Status::InvalidArg,
                &format!("index {n} exceeds the truncation {}", t.n()),
            );
        }
        give_string(out, format_rat(&row.coeff_rat(n)))
    })
}

/// Scans row k for log-concavity: writes the number of interior indices
/// passing c_{n-1} c_{n+1} <= c_n^2 before the first failure to
/// `out_prefix_len`, and the first failing index to `out_first_violation`
/// (-1 when the whole row passes).
///
/// # Safety
/// `table` must be a live handle; both out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lcpow_table_logconcave_prefix(
    table: *const Table,
    k: u32,
    out_prefix_len: *mut usize,
    out_first_violation: *mut i64,
) -> Status {
    guarded(|| {
        if table.is_null() || out_prefix_len.is_null() || out_first_violation.is_null() {
            return fail_str(Status::NullArg, "table or out pointer is null");
        }
        let t = &(*table).t;
        let row = match t.row(k) {
            Some(row) => row,
            None => {
                return fail_str(
                    Status::InvalidArg,
                    &format!("row k = {k} is not in the table (K = {})", t.k_max()),
                )
            }
        };
        let report = logconcave_prefix_ints(&row.num);
        *out_prefix_len = report.prefix_length;
        *out_first_violation = report
            .first_violation
            .map(|v| v as i64)
            .unwrap_or(-1);
        Status::Ok
    })
}

/// Saves the table as JSON at `path`.
///
/// # Safety
/// `table` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lcpow_table_save(table: *const Table, path: *const c_char) -> Status {
    guarded(|| {
        if table.is_null() {
            return fail_str(Status::NullArg, "table is null");
        }
        let p = match read_c_str(path, "path") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        match (*table).t.save(&p) {
            Ok(()) => Status::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Loads a table previously written by `lcpow_table_save`, validating the
/// file before accepting it.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcpow_table_load(path: *const c_char, out: *mut *mut Table) -> Status {
    guarded(|| {
        if out.is_null() {
            return fail_str(Status::NullArg, "out pointer is null");
        }
        let p = match read_c_str(path, "path") {
            Ok(s) => PathBuf::from(s),
            Err(status) => return status,
        };
        match PowerTable::load(&p) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(Table { t }));
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a table handle. Null is a no-op.
///
/// # Safety
/// `table` must be null or a live handle, and is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn lcpow_table_free(table: *mut Table) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Builds Q_0 .. Q_n_max by the divisor-sum recurrence. `budget_mib`
/// caps estimated memory; 0 selects the default budget.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcpow_qtable_build(
    n_max: usize,
    budget_mib: u64,
    out: *mut *mut QTable,
) -> Status {
    guarded(|| {
        if out.is_null() {
            return fail_str(Status::NullArg, "out pointer is null");
        }
        let budget = if budget_mib == 0 {
            None
        } else {
            Some(budget_mib)
        };
        match q_recurrence(n_max, budget) {
            Ok(q) => {
                *out = Box::into_raw(Box::new(QTable { q }));
                Status::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Largest n held by the Q-table; 0 for a null handle.
///
/// # Safety
/// `qtable` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lcpow_qtable_n_max(qtable: *const QTable) -> usize {
    if qtable.is_null() {
        return 0;
    }
    (*qtable).q.n_max()
}

/// Writes the coefficient of z^j in Q_n as a canonical "p/q" string to
/// `out`. Q_n has degree n, so j ranges over 0..=n.
///
/// # Safety
/// `qtable` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lcpow_qtable_coeff_str(
    qtable: *const QTable,
    n: usize,
    j: usize,
    out: *mut *mut c_char,
) -> Status {
    guarded(|| {
        if qtable.is_null() || out.is_null() {
            return fail_str(Status::NullArg, "qtable or out pointer is null");
        }
        let q = &(*qtable).q;
        let poly = match q.poly(n) {
            Some(p) => p,
            None => {
                return fail_str(
                    Status::InvalidArg,
                    &format!("n = {n} exceeds the table maximum {}", q.n_max()),
                )
            }
        };
        match poly.coeffs().get(j) {
            Some(c) => give_string(out, format_rat(c)),
            None => fail_str(
                Status::InvalidArg,
                &format!("z-power {j} exceeds the degree {}", poly.degree()),
            ),
        }
    })
}

/// Releases a Q-table handle. Null is a no-op.
///
/// # Safety
/// `qtable` must be null or a live handle, and is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn lcpow_qtable_free(qtable: *mut QTable) {
    if !qtable.is_null() {
        drop(Box::from_raw(qtable));
    }
}
