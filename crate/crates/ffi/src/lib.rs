//! C ABI over the `hicontrast` library.
//!
//! Objects are opaque handles created by `hc_*_new`-style functions and released with the
//! matching `hc_*_free`. Every fallible call returns an [`HcStatus`]; on failure the
//! message is available from [`hc_last_error`] on the same thread. Output arrays are
//! caller-allocated and their length is checked against the expected size.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hicontrast::fem::DEFAULT_SOLVER_TOL;
use hicontrast::functions::ScalarFunction;
use hicontrast::geometry::{generate_mesh, GeometrySpec, Mesh};
use hicontrast::pressure::{ExpansionSeries, PressureProblem, PressureSolver};
use hicontrast::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string was not UTF-8, an array had the wrong length or an index was out of range.
    InvalidArgument = 2,
    Geometry = 3,
    Resolution = 4,
    Validation = 5,
    Parse = 6,
    Config = 7,
    Solver = 8,
    Internal = 9,
    Unsupported = 10,
    Dimension = 11,
    Io = 12,
    /// The library panicked; the handle arguments should be treated as poisoned.
    Panic = 13,
}

/// Triangulation with subdomain tags.
pub struct HcMesh(Mesh);

/// Scalar high-contrast problem with its assembled operators and characteristic basis.
pub struct HcPressure(PressureSolver);

/// Expansion terms `u_0, ..., u_J` of a scalar problem.
pub struct HcSeries(ExpansionSeries);

struct Failure(HcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Geometry(_) => HcStatus::Geometry,
            Error::Resolution(_) => HcStatus::Resolution,
            Error::Validation(_) => HcStatus::Validation,
            Error::Parse { .. } => HcStatus::Parse,
            Error::Config { .. } => HcStatus::Config,
            Error::Solver(_) => HcStatus::Solver,
            Error::Internal(_) => HcStatus::Internal,
            Error::Unsupported(_) => HcStatus::Unsupported,
            Error::Dimension { .. } => HcStatus::Dimension,
            Error::Io(_) => HcStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(HcStatus::InvalidArgument, msg.into())
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            HcStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(HcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(HcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(HcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, expected: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure(HcStatus::NullPointer, format!("{what} is null")));
    }
    if len != expected {
        return Err(invalid(format!("{what} has length {len}, expected {expected}")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, expected: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure(HcStatus::NullPointer, format!("{what} is null")));
    }
    if len != expected {
        return Err(invalid(format!("{what} has length {len}, expected {expected}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn parse_json<T: serde::de::DeserializeOwned>(json: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(json).map_err(|e| Failure(HcStatus::Parse, format!("{what}: {e}")))
}

unsafe fn publish<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failure on this thread, or null if none occurred.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Generates a mesh from a JSON geometry description
/// (`{"outer": {...}, "inclusions": [...], "target_h": h}`).
///
/// # Safety
/// `geometry_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_mesh_generate(geometry_json: *const c_char, out: *mut *mut HcMesh) -> HcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let spec: GeometrySpec = parse_json(text(geometry_json, "geometry_json")?, "geometry")?;
        let mesh = generate_mesh(&spec)?;
        publish(out, HcMesh(mesh));
        Ok(())
    })
}

/// Reads a mesh JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hc_mesh_load(path: *const c_char, out: *mut *mut HcMesh) -> HcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let mesh = Mesh::load(Path::new(text(path, "path")?))?;
        publish(out, HcMesh(mesh));
        Ok(())
    })
}

/// Writes a mesh JSON file.
///
/// # Safety
/// `mesh` must come from this library and `path` be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hc_mesh_save(mesh: *const HcMesh, path: *const c_char) -> HcStatus {
    guard(|| {
        let mesh = borrow(mesh, "mesh")?;
        mesh.0.save(Path::new(text(path, "path")?))?;
        Ok(())
    })
}

/// Number of nodes, triangles and inclusions.
///
/// # Safety
/// `mesh` must come from this library; each output pointer may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn hc_mesh_sizes(
    mesh: *const HcMesh,
    nodes: *mut usize,
    triangles: *mut usize,
    inclusions: *mut usize,
) -> HcStatus {
    guard(|| {
        let mesh = &borrow(mesh, "mesh")?.0;
        for (p, v) in [(nodes, mesh.num_nodes()), (triangles, mesh.num_triangles()), (inclusions, mesh.num_inclusions)] {
            if let Some(slot) = p.as_mut() {
                *slot = v;
            }
        }
        Ok(())
    })
}

/// Copies node coordinates as interleaved `x, y` pairs; `len` must be twice the node count.
///
/// # Safety
/// `mesh` must come from this library and `xy` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_mesh_coordinates(mesh: *const HcMesh, xy: *mut f64, len: usize) -> HcStatus {
    guard(|| {
        let mesh = &borrow(mesh, "mesh")?.0;
        let dst = slice_mut(xy, len, 2 * mesh.num_nodes(), "xy")?;
        for (d, p) in dst.chunks_exact_mut(2).zip(&mesh.nodes) {
            d.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Releases a mesh; null is ignored.
///
/// # Safety
/// `mesh` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hc_mesh_free(mesh: *mut HcMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Sets up the scalar problem `-div(κ∇u) = f`, `u = g` on the outer boundary, on a copy
/// of `mesh`. `source_json` and `boundary_json` are function descriptions such as
/// `{"kind": "constant", "value": 1}`; null means zero. `solver_tol <= 0` selects the default.
///
/// # Safety
/// `mesh` must come from this library, the strings be NUL-terminated or null, and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hc_pressure_new(
    mesh: *const HcMesh,
    source_json: *const c_char,
    boundary_json: *const c_char,
    solver_tol: f64,
    out: *mut *mut HcPressure,
) -> HcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let mesh = borrow(mesh, "mesh")?.0.clone();
        let function = |p: *const c_char, what: &str| -> Result<ScalarFunction, Failure> {
            if p.is_null() {
                Ok(ScalarFunction::zero())
            } else {
                parse_json(text(p, what)?, what)
            }
        };
        let problem = PressureProblem {
            source: function(source_json, "source_json")?,
            boundary: function(boundary_json, "boundary_json")?,
        };
        let tol = if solver_tol > 0.0 { solver_tol } else { DEFAULT_SOLVER_TOL };
        publish(out, HcPressure(PressureSolver::new(mesh, problem, tol)?));
        Ok(())
    })
}

/// Releases a scalar problem; null is ignored.
///
/// # Safety
/// `problem` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hc_pressure_free(problem: *mut HcPressure) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of nodal values in every field of `problem`.
///
/// # Safety
/// `problem` must come from this library and `len` be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_pressure_field_len(problem: *const HcPressure, len: *mut usize) -> HcStatus {
    guard(|| {
        let s = &borrow(problem, "problem")?.0;
        *out_ptr(len, "len")? = s.mesh().num_nodes();
        Ok(())
    })
}

/// Computes the terms `u_0, ..., u_order`.
///
/// # Safety
/// `problem` must come from this library and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_pressure_expand(problem: *const HcPressure, order: usize, out: *mut *mut HcSeries) -> HcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let s = &borrow(problem, "problem")?.0;
        publish(out, HcSeries(s.expand(order)?));
        Ok(())
    })
}

/// Solves the full problem at contrast `eta` directly.
///
/// # Safety
/// `problem` must come from this library and `u` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_pressure_solve_direct(problem: *const HcPressure, eta: f64, u: *mut f64, len: usize) -> HcStatus {
    guard(|| {
        let s = &borrow(problem, "problem")?.0;
        let dst = slice_mut(u, len, s.mesh().num_nodes(), "u")?;
        dst.copy_from_slice(&s.solve_direct(eta)?);
        Ok(())
    })
}

/// `‖reference − approx‖_{H¹} / ‖reference‖_{H¹}`.
///
/// # Safety
/// `problem` must come from this library, both arrays hold `len` doubles and `error` be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_pressure_relative_h1_error(
    problem: *const HcPressure,
    reference: *const f64,
    approx: *const f64,
    len: usize,
    error: *mut f64,
) -> HcStatus {
    guard(|| {
        let s = &borrow(problem, "problem")?.0;
        let n = s.mesh().num_nodes();
        let r = slice(reference, len, n, "reference")?;
        let a = slice(approx, len, n, "approx")?;
        *out_ptr(error, "error")? = s.relative_h1_error(r, a)?;
        Ok(())
    })
}

/// Number of computed terms (`J + 1`).
///
/// # Safety
/// `series` must come from this library and `count` be valid.
#[no_mangle]
pub unsafe extern "C" fn hc_series_num_terms(series: *const HcSeries, count: *mut usize) -> HcStatus {
    guard(|| {
        *out_ptr(count, "count")? = borrow(series, "series")?.0.terms.len();
        Ok(())
    })
}

/// Copies term `j`.
///
/// # Safety
/// `series` must come from this library and `u` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_series_term(series: *const HcSeries, j: usize, u: *mut f64, len: usize) -> HcStatus {
    guard(|| {
        let terms = &borrow(series, "series")?.0.terms;
        let term = terms.get(j).ok_or_else(|| invalid(format!("term {j} requested, {} computed", terms.len())))?;
        slice_mut(u, len, term.len(), "u")?.copy_from_slice(term);
        Ok(())
    })
}

/// Writes `Σ_{j ≤ order} eta^{-j} u_j`.
///
/// # Safety
/// `series` must come from this library and `u` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hc_series_partial_sum(series: *const HcSeries, order: usize, eta: f64, u: *mut f64, len: usize) -> HcStatus {
    guard(|| {
        let s = &borrow(series, "series")?.0;
        if order > s.order() {
            return Err(invalid(format!("order {order} requested, series has order {}", s.order())));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(invalid(format!("contrast must be positive and finite, got {eta}")));
        }
        let sum = s.partial_sum(order, eta);
        slice_mut(u, len, sum.len(), "u")?.copy_from_slice(&sum);
        Ok(())
    })
}

/// Releases a series; null is ignored.
///
/// # Safety
/// `series` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hc_series_free(series: *mut HcSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}
