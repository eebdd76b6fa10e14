//! Runtime binding to the system UMFPACK library (multifrontal LU, symmetric
//! strategy: AMD on A+Aᵀ with diagonal pivot preference). The library is
//! opened with dlopen, so builds do not depend on it; when it is missing the
//! caller falls back to the pure-Rust LU. Setting `OSEEN_LU=faer` disables it.

use std::ffi::c_void;
use std::ptr;
use std::sync::OnceLock;

use libloading::Library;

use crate::error::{Error, Result};

const CONTROL: usize = 20;
const INFO: usize = 90;
const STRATEGY: usize = 5;
const STRATEGY_SYMMETRIC: f64 = 3.0;
const IRSTEP: usize = 7;
const SYS_A: i64 = 0;
const SYS_AT: i64 = 1;
const STATUS_OK: i64 = 0;
const WARNING_SINGULAR: i64 = 1;
const ERROR_OUT_OF_MEMORY: i64 = -1;

type SymbolicFn = unsafe extern "C" fn(
    i64,
    i64,
    *const i64,
    *const i64,
    *const f64,
    *mut *mut c_void,
    *const f64,
    *mut f64,
) -> i64;
type NumericFn = unsafe extern "C" fn(
    *const i64,
    *const i64,
    *const f64,
    *mut c_void,
    *mut *mut c_void,
    *const f64,
    *mut f64,
) -> i64;
type SolveFn = unsafe extern "C" fn(
    i64,
    *const i64,
    *const i64,
    *const f64,
    *mut f64,
    *const f64,
    *mut c_void,
    *const f64,
    *mut f64,
) -> i64;
type FreeFn = unsafe extern "C" fn(*mut *mut c_void);
type DefaultsFn = unsafe extern "C" fn(*mut f64);

struct Api {
    _lib: Library,
    symbolic: SymbolicFn,
    numeric: NumericFn,
    solve: SolveFn,
    free_symbolic: FreeFn,
    free_numeric: FreeFn,
    control: [f64; CONTROL],
}

fn load() -> Option<Api> {
    if std::env::var("OSEEN_LU").is_ok_and(|v| v.eq_ignore_ascii_case("faer")) {
        return None;
    }
    let names = ["libumfpack.so.5", "libumfpack.so", "libumfpack.dylib"];
    // SAFETY: UMFPACK has no library constructors with preconditions, and the
    // symbol signatures below follow the umfpack_dl_* prototypes.
    unsafe {
        let lib = names.iter().find_map(|n| Library::new(n).ok())?;
        let symbolic = *lib.get::<SymbolicFn>(b"umfpack_dl_symbolic\0").ok()?;
        let numeric = *lib.get::<NumericFn>(b"umfpack_dl_numeric\0").ok()?;
        let solve = *lib.get::<SolveFn>(b"umfpack_dl_solve\0").ok()?;
        let free_symbolic = *lib.get::<FreeFn>(b"umfpack_dl_free_symbolic\0").ok()?;
        let free_numeric = *lib.get::<FreeFn>(b"umfpack_dl_free_numeric\0").ok()?;
        let defaults = *lib.get::<DefaultsFn>(b"umfpack_dl_defaults\0").ok()?;
        let mut control = [0.0; CONTROL];
        defaults(control.as_mut_ptr());
        control[STRATEGY] = STRATEGY_SYMMETRIC;
        // no iterative refinement: the outer Krylov method corrects instead
        control[IRSTEP] = 0.0;
        Some(Api {
            _lib: lib,
            symbolic,
            numeric,
            solve,
            free_symbolic,
            free_numeric,
            control,
        })
    }
}

fn api() -> Option<&'static Api> {
    static API: OnceLock<Option<Api>> = OnceLock::new();
    API.get_or_init(load).as_ref()
}

pub fn available() -> bool {
    api().is_some()
}

fn status_error(what: &str, status: i64) -> Error {
    if status == ERROR_OUT_OF_MEMORY {
        Error::Configuration(format!("UMFPACK {what}: out of memory"))
    } else {
        Error::Configuration(format!("UMFPACK {what} failed with status {status}"))
    }
}

/// Column-compressed copy of a square matrix with 64-bit indices.
struct Csc {
    ptr: Vec<i64>,
    idx: Vec<i64>,
    val: Vec<f64>,
}

/// Symbolic analysis, reusable for every matrix with the same pattern.
pub struct UmfpackSymbolic {
    handle: *mut c_void,
}

// SAFETY: the handle owns plain heap memory that UMFPACK never ties to a thread.
unsafe impl Send for UmfpackSymbolic {}
unsafe impl Sync for UmfpackSymbolic {}

impl Drop for UmfpackSymbolic {
    fn drop(&mut self) {
        if let Some(api) = api() {
            // SAFETY: handle came from umfpack_dl_symbolic and is freed once.
            unsafe { (api.free_symbolic)(&mut self.handle) };
        }
    }
}

pub struct UmfpackLu {
    numeric: *mut c_void,
    n: usize,
}

// SAFETY: as for the symbolic handle; solves only read the numeric object.
unsafe impl Send for UmfpackLu {}
unsafe impl Sync for UmfpackLu {}

impl Drop for UmfpackLu {
    fn drop(&mut self) {
        if let Some(api) = api() {
            // SAFETY: numeric came from umfpack_dl_numeric and is freed once.
            unsafe { (api.free_numeric)(&mut self.numeric) };
        }
    }
}

impl std::fmt::Debug for UmfpackLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "UmfpackLu(n={})", self.n)
    }
}

/// The CSR arrays of A, read as CSC, describe Aᵀ; UMFPACK factors Aᵀ and the
/// solves use the transposed system flag.
fn as_transpose_csc(row_offsets: &[usize], col_indices: &[usize], values: &[f64]) -> Csc {
    Csc {
        ptr: row_offsets.iter().map(|&v| v as i64).collect(),
        idx: col_indices.iter().map(|&v| v as i64).collect(),
        val: values.to_vec(),
    }
}

pub fn symbolic(n: usize, row_offsets: &[usize], col_indices: &[usize], values: &[f64]) -> Result<UmfpackSymbolic> {
    let api = api().ok_or_else(|| Error::Configuration("UMFPACK is not available".into()))?;
    let csc = as_transpose_csc(row_offsets, col_indices, values);
    let mut handle = ptr::null_mut();
    let mut info = [0.0; INFO];
    // SAFETY: arrays are a valid CSC matrix of order n and outlive the call.
    let status = unsafe {
        (api.symbolic)(
            n as i64,
            n as i64,
            csc.ptr.as_ptr(),
            csc.idx.as_ptr(),
            csc.val.as_ptr(),
            &mut handle,
            api.control.as_ptr(),
            info.as_mut_ptr(),
        )
    };
    if status != STATUS_OK {
        return Err(status_error("symbolic analysis", status));
    }
    Ok(UmfpackSymbolic { handle })
}

pub fn numeric(
    sym: &UmfpackSymbolic,
    n: usize,
    row_offsets: &[usize],
    col_indices: &[usize],
    values: &[f64],
) -> Result<UmfpackLu> {
    let api = api().ok_or_else(|| Error::Configuration("UMFPACK is not available".into()))?;
    let csc = as_transpose_csc(row_offsets, col_indices, values);
    let mut handle = ptr::null_mut();
    let mut info = [0.0; INFO];
    // SAFETY: same pattern as the symbolic analysis; arrays outlive the call.
    let status = unsafe {
        (api.numeric)(
            csc.ptr.as_ptr(),
            csc.idx.as_ptr(),
            csc.val.as_ptr(),
            sym.handle,
            &mut handle,
            api.control.as_ptr(),
            info.as_mut_ptr(),
        )
    };
    let lu = UmfpackLu { numeric: handle, n };
    match status {
        STATUS_OK => Ok(lu),
        WARNING_SINGULAR => Err(Error::Singular { index: 0 }),
        s => Err(status_error("numeric factorization", s)),
    }
}

impl UmfpackLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    fn solve_sys(&self, sys: i64, b: &[f64]) -> Vec<f64> {
        let api = api().expect("factorization exists only when loaded");
        let mut x = vec![0.0; b.len()];
        let mut info = [0.0; INFO];
        // SAFETY: x and b have length n; the numeric object is alive. The
        // matrix arrays are only read for iterative refinement, which is off.
        unsafe {
            (api.solve)(
                sys,
                ptr::null(),
                ptr::null(),
                ptr::null(),
                x.as_mut_ptr(),
                b.as_ptr(),
                self.numeric,
                api.control.as_ptr(),
                info.as_mut_ptr(),
            )
        };
        x
    }

    /// A x = b for the matrix given in CSR form.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_sys(SYS_AT, b)
    }

    /// Aᵀ x = b
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        self.solve_sys(SYS_A, b)
    }
}
