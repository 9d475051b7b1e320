//! C ABI over the scattering engine: opaque potential handles, status
//! codes, and a thread-local last-error message. The header is
//! generated into include/svc_scatter.h at build time.
//!
//! Conventions: every fallible function returns SvcStatus and writes
//! results through out-pointers only on SVC_STATUS_OK. Handles are
//! created by svc_spec_new/svc_spec_new_poly and must be released with
//! svc_spec_free exactly once. All functions are thread-safe; the
//! last-error message is per-thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use svc_scatter::analysis::renormalized_height;
use svc_scatter::engine::transmission;
use svc_scatter::error::Error;
use svc_scatter::geometry::{build_layout, segment_length, spacing, PotentialSpec};
use svc_scatter::oracle::{brute_force_transmission, chain_from_layout};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvcStatus {
    SvcStatusOk = 0,
    /// A pointer argument was null.
    SvcStatusNullArgument = 1,
    /// The potential parameters violate a validity constraint.
    SvcStatusInvalidSpec = 2,
    /// An index or energy is outside its valid range.
    SvcStatusOutOfRange = 3,
    /// Internal numerical failure; details via svc_last_error.
    SvcStatusInternal = 4,
}

/// Opaque potential handle.
pub struct SvcSpec {
    inner: PotentialSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(err: Error) -> SvcStatus {
    let status = match &err {
        Error::InvalidSpec(_) | Error::Config { .. } => SvcStatus::SvcStatusInvalidSpec,
        Error::OutOfRange(_) | Error::StageTooLarge(..) => SvcStatus::SvcStatusOutOfRange,
        _ => SvcStatus::SvcStatusInternal,
    };
    let msg = CString::new(err.to_string()).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
    status
}

/// One scattering evaluation. When `underflowed` is nonzero, `t`
/// underflowed f64 range and `log10_t` carries the magnitude.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SvcPoint {
    pub t: f64,
    pub r: f64,
    pub log10_t: f64,
    pub underflowed: i32,
}

/// Copies the calling thread's last error message into `buf`
/// (NUL-terminated, truncated to `len` bytes) and returns the full
/// message length in bytes excluding the NUL. `buf` may be null to
/// query the length.
#[no_mangle]
pub unsafe extern "C" fn svc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates an SVC(rho, n) potential at stage `g` with height `v` over
/// span `l`. On success writes the new handle to `out`.
#[no_mangle]
pub unsafe extern "C" fn svc_spec_new(
    rho: f64,
    n: f64,
    g: u32,
    v: f64,
    l: f64,
    out: *mut *mut SvcSpec,
) -> SvcStatus {
    if out.is_null() {
        return SvcStatus::SvcStatusNullArgument;
    }
    match PotentialSpec::new(rho, n, g, v, l) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SvcSpec { inner }));
            SvcStatus::SvcStatusOk
        }
        Err(e) => fail(e),
    }
}

/// Like svc_spec_new, with the stage exponent replaced by the
/// polynomial a0 + a1 g + ... given by `coeffs[0..coeff_count]`.
#[no_mangle]
pub unsafe extern "C" fn svc_spec_new_poly(
    rho: f64,
    g: u32,
    v: f64,
    l: f64,
    coeffs: *const f64,
    coeff_count: usize,
    out: *mut *mut SvcSpec,
) -> SvcStatus {
    if out.is_null() || (coeffs.is_null() && coeff_count > 0) {
        return SvcStatus::SvcStatusNullArgument;
    }
    let coeffs = std::slice::from_raw_parts(coeffs, coeff_count).to_vec();
    let built = PotentialSpec::new(rho, 1.0, g, v, l).and_then(|s| s.with_exponent_poly(coeffs));
    match built {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SvcSpec { inner }));
            SvcStatus::SvcStatusOk
        }
        Err(e) => fail(e),
    }
}

/// Releases a handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn svc_spec_free(spec: *mut SvcSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

unsafe fn with_spec<T>(
    spec: *const SvcSpec,
    out: *mut T,
    f: impl FnOnce(&PotentialSpec) -> Result<T, Error>,
) -> SvcStatus {
    if spec.is_null() || out.is_null() {
        return SvcStatus::SvcStatusNullArgument;
    }
    match f(&(*spec).inner) {
        Ok(value) => {
            *out = value;
            SvcStatus::SvcStatusOk
        }
        Err(e) => fail(e),
    }
}

/// Transmission/reflection at energy `e` via the super-periodic closed
/// form (O(G²)).
#[no_mangle]
pub unsafe extern "C" fn svc_transmission(
    spec: *const SvcSpec,
    e: f64,
    out: *mut SvcPoint,
) -> SvcStatus {
    with_spec(spec, out, |s| {
        let p = transmission(s, e)?;
        Ok(SvcPoint {
            t: p.t,
            r: p.r,
            log10_t: p.log10_t,
            underflowed: p.underflowed as i32,
        })
    })
}

/// Transmission at energy `e` by brute-force composition of all 2^G
/// barrier matrices (ground truth; G <= 14).
#[no_mangle]
pub unsafe extern "C" fn svc_transmission_brute(
    spec: *const SvcSpec,
    e: f64,
    out: *mut SvcPoint,
) -> SvcStatus {
    with_spec(spec, out, |s| {
        let layout = build_layout(s)?;
        let chain = chain_from_layout(&layout)?;
        let p = brute_force_transmission(&chain, s.height, e)?;
        Ok(SvcPoint {
            t: p.t,
            r: p.r,
            log10_t: p.log10_t,
            underflowed: p.underflowed as i32,
        })
    })
}

/// Barrier width l_g after g removal stages.
#[no_mangle]
pub unsafe extern "C" fn svc_segment_length(
    spec: *const SvcSpec,
    g: u32,
    out: *mut f64,
) -> SvcStatus {
    with_spec(spec, out, |s| segment_length(s, g))
}

/// Super-periodic repetition spacing s_p at hierarchy level p (1-based,
/// p <= G).
#[no_mangle]
pub unsafe extern "C" fn svc_spacing(spec: *const SvcSpec, p: u32, out: *mut f64) -> SvcStatus {
    with_spec(spec, out, |s| spacing(s, p))
}

/// Area-preserving renormalized height V_G = L V0 / (2^G l_G).
#[no_mangle]
pub unsafe extern "C" fn svc_renormalized_height(
    spec: *const SvcSpec,
    out: *mut f64,
) -> SvcStatus {
    with_spec(spec, out, renormalized_height)
}
