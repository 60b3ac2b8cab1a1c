//! C ABI over `rcfm`.
//!
//! Matrices cross the boundary as opaque [`RcfmMatrix`] handles. Every call
//! returns an [`RcfmStatus`]; on failure the message is available from
//! [`rcfm_last_error_message`] on the same thread. Strings handed out by the
//! library are freed with [`rcfm_string_free`], handles with [`rcfm_matrix_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rcfm::extensions::{self, ExtensionError};
use rcfm::fredholm::{self, FredholmError, TruncationConfig};
use rcfm::{BpfMatrix, EvalError};

/// Outcome of a call. `RCFM_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcfmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Eval = 4,
    Json = 5,
    NotFredholm = 6,
    TruncationLimit = 7,
    Uncertified = 8,
    Fredholm = 9,
    Extension = 10,
    InvalidArgument = 11,
    Panic = 12,
}

/// An exact row-and-column-finite matrix.
pub struct RcfmMatrix(BpfMatrix);

/// Kernel and cokernel dimensions with `index = kernel_dim − coker_dim`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RcfmIndex {
    pub kernel_dim: u64,
    pub coker_dim: u64,
    pub index: i64,
    pub certified: bool,
    pub truncation_used: u64,
}

/// Triviality verdict for the extension generated by `x ↦ x_image`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RcfmVerdict {
    pub trivial: bool,
    pub index: i64,
    /// Whether an exact splitting was constructed.
    pub has_splitting: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RcfmStatus, String);

impl From<FredholmError> for Failure {
    fn from(e: FredholmError) -> Self {
        let status = match &e {
            FredholmError::NotFredholm(_) => RcfmStatus::NotFredholm,
            FredholmError::TruncationLimit { .. } => RcfmStatus::TruncationLimit,
            FredholmError::UncertifiedInput => RcfmStatus::Uncertified,
            FredholmError::Eval(_) => RcfmStatus::Eval,
            _ => RcfmStatus::Fredholm,
        };
        Failure(status, e.to_string())
    }
}

impl From<ExtensionError> for Failure {
    fn from(e: ExtensionError) -> Self {
        match e {
            ExtensionError::Fredholm(inner) => inner.into(),
            ExtensionError::UncertifiedIndex => Failure(RcfmStatus::Uncertified, e.to_string()),
            e => Failure(RcfmStatus::Extension, e.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure(RcfmStatus::Eval, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RcfmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RcfmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            RcfmStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(RcfmStatus::NullPointer, "null pointer argument".into())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(RcfmStatus::InvalidUtf8, e.to_string()))
}

unsafe fn read_matrix<'a>(m: *const RcfmMatrix) -> Result<&'a BpfMatrix, Failure> {
    m.as_ref().map(|m| &m.0).ok_or_else(null)
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn write_matrix(out: *mut *mut RcfmMatrix, m: BpfMatrix) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(Box::into_raw(Box::new(RcfmMatrix(m))));
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    let c = CString::new(s).map_err(|e| Failure(RcfmStatus::InvalidArgument, e.to_string()))?;
    out.write(c.into_raw());
    Ok(())
}

fn config(max_trunc: u64, window: usize) -> TruncationConfig {
    let d = TruncationConfig::default();
    TruncationConfig {
        max_trunc: if max_trunc == 0 { d.max_trunc } else { max_trunc },
        window: if window == 0 { d.window } else { window },
    }
}

/// Message of the last failing call on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn rcfm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code, such as `"not_fredholm"`; `"unknown"` for
/// values outside [`RcfmStatus`].
#[no_mangle]
pub extern "C" fn rcfm_status_name(status: i32) -> *const c_char {
    let name: &'static CStr = match status {
        0 => c"ok",
        1 => c"null_pointer",
        2 => c"invalid_utf8",
        3 => c"parse",
        4 => c"eval",
        5 => c"json",
        6 => c"not_fredholm",
        7 => c"truncation_limit",
        8 => c"uncertified",
        9 => c"fredholm",
        10 => c"extension",
        11 => c"invalid_argument",
        12 => c"panic",
        _ => c"unknown",
    };
    name.as_ptr()
}

/// Parses and evaluates an expression such as `"S(-1)*Dgeo(2) + E(1,3)"`.
///
/// # Safety
/// `expr` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_parse(expr: *const c_char, out: *mut *mut RcfmMatrix) -> RcfmStatus {
    guard(|| {
        let text = read_str(expr)?;
        let e = rcfm::parse(text).map_err(|e| Failure(RcfmStatus::Parse, e.to_string()))?;
        write_matrix(out, e.eval()?)
    })
}

/// Reads the canonical JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_from_json(json: *const c_char, out: *mut *mut RcfmMatrix) -> RcfmStatus {
    guard(|| {
        let text = read_str(json)?;
        let m: BpfMatrix = serde_json::from_str(text).map_err(|e| Failure(RcfmStatus::Json, e.to_string()))?;
        write_matrix(out, m)
    })
}

/// Writes the canonical JSON form; free it with [`rcfm_string_free`].
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_to_json(m: *const RcfmMatrix, out: *mut *mut c_char) -> RcfmStatus {
    guard(|| {
        let m = read_matrix(m)?;
        let s = serde_json::to_string(m).map_err(|e| Failure(RcfmStatus::Json, e.to_string()))?;
        write_string(out, s)
    })
}

/// Writes a human-readable rendering; free it with [`rcfm_string_free`].
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_to_string(m: *const RcfmMatrix, out: *mut *mut c_char) -> RcfmStatus {
    guard(|| write_string(out, read_matrix(m)?.to_string()))
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_free(m: *mut RcfmMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rcfm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `out = a + b`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_add(
    a: *const RcfmMatrix,
    b: *const RcfmMatrix,
    out: *mut *mut RcfmMatrix,
) -> RcfmStatus {
    guard(|| write_matrix(out, read_matrix(a)? + read_matrix(b)?))
}

/// `out = a · b`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_mul(
    a: *const RcfmMatrix,
    b: *const RcfmMatrix,
    out: *mut *mut RcfmMatrix,
) -> RcfmStatus {
    guard(|| write_matrix(out, read_matrix(a)? * read_matrix(b)?))
}

/// `out = aᵀ`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_transpose(a: *const RcfmMatrix, out: *mut *mut RcfmMatrix) -> RcfmStatus {
    guard(|| write_matrix(out, read_matrix(a)?.transpose()))
}

/// Exact structural equality.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_equal(a: *const RcfmMatrix, b: *const RcfmMatrix, out: *mut bool) -> RcfmStatus {
    guard(|| write(out, read_matrix(a)? == read_matrix(b)?))
}

/// Entry `(i, j)`, 1-based, as a rational string such as `"-3/2"`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_matrix_entry(m: *const RcfmMatrix, i: u64, j: u64, out: *mut *mut c_char) -> RcfmStatus {
    guard(|| {
        if i == 0 || j == 0 {
            return Err(Failure(RcfmStatus::InvalidArgument, "indices start at 1".into()));
        }
        write_string(out, read_matrix(m)?.entry(i, j).to_string())
    })
}

/// Fredholm index. Zero for `max_trunc` or `window` selects the default.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_index(m: *const RcfmMatrix, max_trunc: u64, window: usize, out: *mut RcfmIndex) -> RcfmStatus {
    guard(|| {
        let r = fredholm::index(read_matrix(m)?, &config(max_trunc, window))?;
        write(
            out,
            RcfmIndex {
                kernel_dim: r.kernel_dim,
                coker_dim: r.coker_dim,
                index: r.index,
                certified: r.certified,
                truncation_used: r.truncation_used,
            },
        )
    })
}

/// Classifies the extension with generator images `x`, `y` (inverse modulo
/// finite matrices). `depth` bounds the monomial check; zero selects 6.
///
/// # Safety
/// `x` and `y` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_classify(
    x: *const RcfmMatrix,
    y: *const RcfmMatrix,
    depth: u32,
    out: *mut RcfmVerdict,
) -> RcfmStatus {
    guard(|| {
        let depth = if depth == 0 { 6 } else { depth };
        let ext = extensions::make_extension(read_matrix(x)?, read_matrix(y)?, "ffi", depth)?;
        let v = extensions::classify_trivial(&ext, &TruncationConfig::default())?;
        write(
            out,
            RcfmVerdict {
                trivial: v.trivial,
                index: v.index,
                has_splitting: v.splitting.is_some(),
            },
        )
    })
}

/// Runs one CLI command, e.g. `{"--json", "index", "S(-1)"}`, without the
/// program name. `out` receives standard output, `exit_code` the code the
/// CLI would exit with; standard error goes to the last-error slot.
///
/// # Safety
/// `argv` must point to `argc` NUL-terminated strings; `exit_code` and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rcfm_run(
    argv: *const *const c_char,
    argc: usize,
    exit_code: *mut i32,
    out: *mut *mut c_char,
) -> RcfmStatus {
    guard(|| {
        if argv.is_null() && argc > 0 {
            return Err(null());
        }
        let mut args = vec!["rcfm".to_string()];
        for k in 0..argc {
            args.push(read_str(*argv.add(k))?.to_string());
        }
        let result = rcfm::cli::run(args);
        if !result.stderr.is_empty() {
            set_last_error(result.stderr.trim_end());
        }
        write(exit_code, result.code)?;
        write_string(out, result.stdout)
    })
}
