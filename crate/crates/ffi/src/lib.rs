//! C ABI over `rectex`.
//!
//! Every function returns a [`RectexStatus`]; on failure the message is
//! available from [`rectex_last_error`] on the same thread. Networks live behind
//! the opaque [`RectexNetwork`] handle and must be released with
//! [`rectex_network_free`]. Strings returned by the library are released with
//! [`rectex_string_free`]. Matrices are passed column-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rectex::compression::{exact_factorize, min_infnorm_factor, UMatrix, VMatrix};
use rectex::conversion::{make_theorem2_witness, relu_to_threshold, threshold2_to_relu, ConversionOptions, NormalForm};
use rectex::io::NetworkFile;
use rectex::nalgebra::DMatrix;
use rectex::regions::region_count;
use rectex::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    DimensionMismatch = 5,
    SizeGuard = 6,
    NotFactorable = 7,
    Solver = 8,
    BufferTooSmall = 9,
    Failure = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectexForm {
    Dnf = 0,
    Cnf = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RectexConversionReport {
    pub n1: usize,
    pub n2: usize,
    pub first_layer_units: usize,
    pub second_layer_units: usize,
}

/// Opaque network handle.
pub struct RectexNetwork {
    inner: NetworkFile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RectexStatus {
    match e {
        Error::Parse(_) | Error::InvalidNetwork(_) => RectexStatus::Parse,
        Error::DimensionMismatch { .. } => RectexStatus::DimensionMismatch,
        Error::SizeGuard(_) | Error::Overflow(_) => RectexStatus::SizeGuard,
        Error::NotFactorable { .. } | Error::NotPowerOfTwo(_) => RectexStatus::NotFactorable,
        Error::Solver(_) => RectexStatus::Solver,
        Error::InvalidArgument(_) | Error::IndexOutOfRange(_) | Error::NonFinite(_) => RectexStatus::InvalidArgument,
        _ => RectexStatus::Failure,
    }
}

struct Fail(RectexStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RectexStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RectexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RectexStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RectexStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn network<'a>(p: *const RectexNetwork) -> Result<&'a NetworkFile, Fail> {
    p.as_ref().map(|n| &n.inner).ok_or_else(|| null("network"))
}

fn boxed(inner: NetworkFile) -> *mut RectexNetwork {
    Box::into_raw(Box::new(RectexNetwork { inner }))
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn rectex_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn rectex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a network JSON document (`kind` is `relu`, `threshold` or `general`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rectex_network_from_json(json: *const c_char, out: *mut *mut RectexNetwork) -> RectexStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let s = CStr::from_ptr(json).to_str().map_err(|e| Fail(RectexStatus::InvalidUtf8, e.to_string()))?;
        let net = NetworkFile::from_json(s)?;
        write_out(out, boxed(net), "out")
    })
}

/// # Safety
/// `net` must be a live handle; `out` must be writable. Free the result with [`rectex_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rectex_network_to_json(net: *const RectexNetwork, out: *mut *mut c_char) -> RectexStatus {
    guard(|| {
        let s = network(net)?.to_json()?;
        let c = CString::new(s).map_err(|e| Fail(RectexStatus::Failure, e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `net` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rectex_network_free(net: *mut RectexNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rectex_network_dim(net: *const RectexNetwork, out: *mut usize) -> RectexStatus {
    guard(|| write_out(out, network(net)?.dim(), "out"))
}

/// Writes `+1` or `-1` to `out`.
///
/// # Safety
/// `x` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rectex_network_eval(
    net: *const RectexNetwork,
    x: *const f64,
    len: usize,
    out: *mut i8,
) -> RectexStatus {
    guard(|| {
        let s = network(net)?.eval(slice(x, len, "x")?)?;
        write_out(out, s.as_i8(), "out")
    })
}

/// Converts a rectifier network into a three-layer threshold network.
///
/// `max_first_layer_units` of 0 selects the default guard.
///
/// # Safety
/// `net` must be a live handle; `out` must be writable; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn rectex_convert(
    net: *const RectexNetwork,
    form: RectexForm,
    max_first_layer_units: usize,
    force: bool,
    out: *mut *mut RectexNetwork,
    report: *mut RectexConversionReport,
) -> RectexStatus {
    guard(|| {
        let NetworkFile::Relu(relu) = network(net)? else {
            return Err(Fail(RectexStatus::InvalidArgument, "conversion needs a relu network".into()));
        };
        let mut opts = ConversionOptions { force, ..Default::default() };
        if max_first_layer_units > 0 {
            opts.max_first_layer_units = max_first_layer_units;
        }
        let form = match form {
            RectexForm::Dnf => NormalForm::Dnf,
            RectexForm::Cnf => NormalForm::Cnf,
        };
        let (t, rep) = relu_to_threshold(relu, form, opts)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !report.is_null() {
            report.write(RectexConversionReport {
                n1: rep.n1,
                n2: rep.n2,
                first_layer_units: rep.first_layer_units,
                second_layer_units: rep.second_layer_units,
            });
        }
        write_out(out, boxed(NetworkFile::Threshold(t)), "out")
    })
}

/// Rectifier network with two units per sign unit of a two-layer threshold network.
///
/// # Safety
/// `net` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rectex_approximate(
    net: *const RectexNetwork,
    eps: f64,
    out: *mut *mut RectexNetwork,
) -> RectexStatus {
    guard(|| {
        let NetworkFile::Threshold(t) = network(net)? else {
            return Err(Fail(RectexStatus::InvalidArgument, "approximation needs a threshold network".into()));
        };
        let r = threshold2_to_relu(t, eps)?;
        write_out(out, boxed(NetworkFile::Relu(r)), "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rectex_region_count(n: u64, d: u64, out: *mut u64) -> RectexStatus {
    guard(|| {
        let r = region_count(n, d)?;
        let r = u64::try_from(r).map_err(|_| Fail(RectexStatus::SizeGuard, format!("{r} does not fit in 64 bits")))?;
        write_out(out, r, "out")
    })
}

/// Witness point for the subset bitmask `subset` of the first `n` coordinates.
///
/// # Safety
/// `out` must point to `len >= d` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rectex_theorem2_witness(
    n: usize,
    d: usize,
    subset: u64,
    out: *mut f64,
    len: usize,
) -> RectexStatus {
    guard(|| {
        let x = make_theorem2_witness(n, d, subset)?;
        copy_out(&x, out, len)
    })
}

unsafe fn copy_out(v: &[f64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if len < v.len() {
        return Err(Fail(RectexStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", v.len())));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    Ok(())
}

unsafe fn read_v(v: *const f64, rows: usize, cols: usize) -> Result<VMatrix, Fail> {
    let len = rows.checked_mul(cols).ok_or_else(|| Fail(RectexStatus::SizeGuard, "matrix too large".into()))?;
    Ok(VMatrix::new(DMatrix::from_column_slice(rows, cols, slice(v, len, "v")?))?)
}

fn write_u(u: &UMatrix, out: *mut f64, len: usize) -> Result<(), Fail> {
    unsafe { copy_out(u.matrix().as_slice(), out, len) }
}

/// Recovers `U` (`rows x (n+1)`, column-major) from `V = U T` (`rows x 2^n`).
///
/// # Safety
/// `v` must hold `rows * cols` doubles; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rectex_exact_factorize(
    v: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    len: usize,
) -> RectexStatus {
    guard(|| {
        let u = exact_factorize(&read_v(v, rows, cols)?)?;
        write_u(&u, out, len)
    })
}

/// Best `U` under the induced infinity norm of `(V - U T)^T`; the optimum goes to `objective`.
///
/// # Safety
/// As [`rectex_exact_factorize`]; `objective` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rectex_min_infnorm_factor(
    v: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    len: usize,
    objective: *mut f64,
) -> RectexStatus {
    guard(|| {
        let fit = min_infnorm_factor(&read_v(v, rows, cols)?)?;
        write_u(&fit.u, out, len)?;
        write_out(objective, fit.objective, "objective")
    })
}
