//! C interface to the billiard map and the Gibbs-Markov spectral routines.
//!
//! Every fallible function returns a [`MixlabStatus`]; on failure the message is
//! available from [`mixlab_last_error`] on the same thread. Handles are opaque
//! and owned by the caller, who releases them with the matching `_free`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mixlab::billiard::{self, BilliardTable, CollisionState, Disk, Vec2};
use mixlab::gibbs_markov::{leading_eigenvalue, GmSystem, Roof, SpectralOptions};
use mixlab::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidTable = 3,
    Grazing = 4,
    CapExceeded = 5,
    NoGap = 6,
    NoConvergence = 7,
    Internal = 8,
}

/// A point of the collision section.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixlabCollision {
    pub component: usize,
    /// Angle on circular components, arclength on straight ones.
    pub param: f64,
    /// Outgoing angle from the inward normal, in [-pi/2, pi/2].
    pub phi: f64,
}

/// Opaque billiard table.
pub struct MixlabTable(BilliardTable);

/// Opaque base map with its roof.
pub struct MixlabGm {
    gm: GmSystem,
    roof: Roof,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MixlabStatus {
    match e {
        Error::Grazing { .. } => MixlabStatus::Grazing,
        Error::CapExceeded { .. } => MixlabStatus::CapExceeded,
        Error::InvalidTable(_) => MixlabStatus::InvalidTable,
        Error::NoGap { .. } => MixlabStatus::NoGap,
        Error::NoConvergence { .. } => MixlabStatus::NoConvergence,
        Error::BadParams(_) | Error::ConfigInvalid { .. } | Error::UnsupportedVariant(_) => {
            MixlabStatus::InvalidArgument
        }
        _ => MixlabStatus::Internal,
    }
}

/// Run `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (MixlabStatus, String)>) -> MixlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            MixlabStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MixlabStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (MixlabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MixlabStatus, String) {
    (MixlabStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (MixlabStatus, String) {
    (MixlabStatus::InvalidArgument, msg.into())
}

fn put_table(table: BilliardTable, out: *mut *mut MixlabTable) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(MixlabTable(table))) };
}

/// Message of the last failed call on this thread (empty after a success).
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn mixlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mixlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Lorentz gas on the unit torus with `n` disks; `centers` holds `2n` values.
///
/// # Safety
/// `centers` must point to `2n` doubles, `radii` to `n` doubles, `out` to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mixlab_table_lorentz(
    centers: *const f64,
    radii: *const f64,
    n: usize,
    out: *mut *mut MixlabTable,
) -> MixlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 {
            return Err(invalid("need at least one disk"));
        }
        if centers.is_null() || radii.is_null() {
            return Err(null("centers or radii"));
        }
        let c = std::slice::from_raw_parts(centers, 2 * n);
        let r = std::slice::from_raw_parts(radii, n);
        let disks = (0..n)
            .map(|i| Disk {
                center: Vec2::new(c[2 * i], c[2 * i + 1]),
                radius: r[i],
            })
            .collect();
        put_table(BilliardTable::lorentz_torus(disks).map_err(lib_err)?, out);
        Ok(())
    })
}

/// Bunimovich stadium with straight half-length `a` and cap radius `rho`.
///
/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mixlab_table_stadium(
    a: f64,
    rho: f64,
    out: *mut *mut MixlabTable,
) -> MixlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        put_table(BilliardTable::stadium(a, rho).map_err(lib_err)?, out);
        Ok(())
    })
}

/// # Safety
/// `table` must come from a `mixlab_table_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mixlab_table_free(table: *mut MixlabTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of boundary components of `table`, or 0 for a null handle.
///
/// # Safety
/// `table` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mixlab_table_components(table: *const MixlabTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.components().len())
}

fn to_state(
    t: &BilliardTable,
    x: &MixlabCollision,
) -> Result<CollisionState, (MixlabStatus, String)> {
    if x.component >= t.components().len() {
        return Err(invalid(format!("component {} out of range", x.component)));
    }
    if !x.param.is_finite() || !(x.phi.abs() <= std::f64::consts::FRAC_PI_2) {
        return Err(invalid("param must be finite and |phi| <= pi/2"));
    }
    Ok(CollisionState {
        component: x.component,
        param: x.param,
        phi: x.phi,
    })
}

fn from_state(x: &CollisionState) -> MixlabCollision {
    MixlabCollision {
        component: x.component,
        param: x.param,
        phi: x.phi,
    }
}

/// One step of the billiard map. `flight_time` may be null.
///
/// # Safety
/// Pointers must be valid; `input` and `output` may alias.
#[no_mangle]
pub unsafe extern "C" fn mixlab_billiard_map(
    table: *const MixlabTable,
    input: *const MixlabCollision,
    output: *mut MixlabCollision,
    flight_time: *mut f64,
) -> MixlabStatus {
    guard(|| {
        let t = &table.as_ref().ok_or_else(|| null("table"))?.0;
        let x = to_state(t, input.as_ref().ok_or_else(|| null("input"))?)?;
        if output.is_null() {
            return Err(null("output"));
        }
        let seg = billiard::billiard_step(t, &x, billiard::DEFAULT_T_CAP).map_err(lib_err)?;
        *output = from_state(&seg.end);
        if !flight_time.is_null() {
            *flight_time = seg.flight_time;
        }
        Ok(())
    })
}

/// `n` independent draws from the invariant collision measure.
///
/// # Safety
/// `out` must point to `n` writable collisions.
#[no_mangle]
pub unsafe extern "C" fn mixlab_sample_invariant(
    table: *const MixlabTable,
    seed: u64,
    n: usize,
    out: *mut MixlabCollision,
) -> MixlabStatus {
    guard(|| {
        let t = &table.as_ref().ok_or_else(|| null("table"))?.0;
        if n == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, n);
        for (d, x) in dst.iter_mut().zip(billiard::sample_invariant(t, seed, n)) {
            *d = from_state(&x);
        }
        Ok(())
    })
}

/// Built-in base map (`doubling`, `gauss`, `lsv_induced`) with a polynomial
/// roof `sum coeffs[k] y^k`. `alpha` is read only by `lsv_induced`.
///
/// # Safety
/// `name` must be NUL-terminated, `coeffs` must point to `n_coeffs` doubles and
/// `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mixlab_gm_new(
    name: *const c_char,
    alpha: f64,
    coeffs: *const f64,
    n_coeffs: usize,
    out: *mut *mut MixlabGm,
) -> MixlabStatus {
    guard(|| {
        if out.is_null() || name.is_null() {
            return Err(null("name or out"));
        }
        if n_coeffs == 0 || coeffs.is_null() {
            return Err(invalid("roof needs at least one coefficient"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| invalid("name is not UTF-8"))?;
        let gm = GmSystem::builtin(name, Some(alpha)).map_err(lib_err)?;
        let roof = Roof::poly(std::slice::from_raw_parts(coeffs, n_coeffs));
        if !(roof.inf(&gm) > 0.0) {
            return Err(invalid("roof must be positive"));
        }
        *out = Box::into_raw(Box::new(MixlabGm { gm, roof }));
        Ok(())
    })
}

/// # Safety
/// `gm` must come from [`mixlab_gm_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mixlab_gm_free(gm: *mut MixlabGm) {
    if !gm.is_null() {
        drop(Box::from_raw(gm));
    }
}

/// Leading eigenvalue of the twisted transfer operator at `s = re + i im`.
///
/// # Safety
/// `gm` must be a live handle; `re_out` and `im_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mixlab_gm_leading_eigenvalue(
    gm: *const MixlabGm,
    re: f64,
    im: f64,
    resolution: usize,
    re_out: *mut f64,
    im_out: *mut f64,
) -> MixlabStatus {
    guard(|| {
        let g = gm.as_ref().ok_or_else(|| null("gm"))?;
        if re_out.is_null() || im_out.is_null() {
            return Err(null("re_out or im_out"));
        }
        if resolution < 4 {
            return Err(invalid("resolution must be at least 4"));
        }
        let opts = SpectralOptions {
            resolution,
            ..Default::default()
        };
        let r =
            leading_eigenvalue(&g.gm, &g.roof, Complex64::new(re, im), &opts).map_err(lib_err)?;
        *re_out = r.lambda.re;
        *im_out = r.lambda.im;
        Ok(())
    })
}
