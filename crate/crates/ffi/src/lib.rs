//! C ABI over `unital_core`.
//!
//! Every call returns a [`UnitalStatus`]. On failure the message is available
//! from [`unital_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};

use unital_core::charspec::{SpectrumEngine, bounds};
use unital_core::cli::{FSelector, ThetaSel, instance_for, resolve_theta};
use unital_core::fields::{Elem, FieldCtx, FieldSpec, ThetaSetup};
use unital_core::geometry::{Instance, PairCheck, UnitalDesign, build_unital};
use unital_core::gf2rank::rank2_of_unital;
use unital_core::kloosterman::kloosterman;
use unital_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotPlanar = 3,
    NotNormal = 4,
    Violation = 5,
    EngineMismatch = 6,
    BufferTooSmall = 7,
    Unsupported = 8,
    Io = 9,
    Panic = 10,
}

/// Opaque instance: a planar function on GF(q²) together with a fixed θ.
pub struct UnitalInstance {
    inst: Instance,
    setup: ThetaSetup,
    design: Option<UnitalDesign>,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UnitalBounds {
    pub upper: u64,
    pub leung_xiang: u64,
    /// Zero unless `has_corollary`.
    pub corollary: u64,
    pub has_corollary: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> UnitalStatus {
    match e {
        Error::NotOddPrime { .. } | Error::ReducibleModulus { .. } | Error::InvalidArgument(_) | Error::WidthMismatch { .. } => {
            UnitalStatus::InvalidArgument
        }
        Error::NotPlanar { .. } => UnitalStatus::NotPlanar,
        Error::NotNormal { .. } => UnitalStatus::NotNormal,
        Error::Violation { .. } | Error::UpperBoundExceeded { .. } => UnitalStatus::Violation,
        Error::EngineMismatch { .. } => UnitalStatus::EngineMismatch,
        Error::Unsupported { .. } => UnitalStatus::Unsupported,
        Error::Io { .. } | Error::Json { .. } | Error::Parse { .. } => UnitalStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (UnitalStatus, String)>) -> UnitalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UnitalStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            UnitalStatus::Panic
        }
    }
}

fn core<T>(r: unital_core::Result<T>) -> Result<T, (UnitalStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (UnitalStatus, String) {
    (UnitalStatus::NullPointer, "null pointer argument".into())
}

/// Message for the last failing call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn unital_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Creates an instance over GF(p^m).
///
/// `f` is `square`, `cm:K` or `pow:D`; NULL means `square`. A `theta_index`
/// of 0 picks θ automatically.
///
/// # Safety
/// `f` must be NULL or a NUL-terminated string. `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_instance_new(
    p: u32,
    m: u32,
    f: *const c_char,
    theta_index: u32,
    out: *mut *mut UnitalInstance,
) -> UnitalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let sel = if f.is_null() {
            FSelector::Square
        } else {
            let s = unsafe { CStr::from_ptr(f) }
                .to_str()
                .map_err(|_| (UnitalStatus::InvalidArgument, "f is not UTF-8".to_string()))?;
            let sel = core(FSelector::parse(s))?;
            if matches!(sel, FSelector::User(_)) {
                return Err((UnitalStatus::Unsupported, "user tables are not available here".into()));
            }
            sel
        };
        let inst = core(instance_for(p, m, None, &sel))?;
        let theta = if theta_index == 0 { ThetaSel::Auto } else { ThetaSel::Index(theta_index) };
        let setup = core(resolve_theta(&inst, theta))?;
        let h = Box::new(UnitalInstance { inst, setup, design: None });
        unsafe { *out = Box::into_raw(h) };
        Ok(())
    })
}

/// # Safety
/// `h` must be NULL or come from [`unital_instance_new`] and not be freed yet.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_instance_free(h: *mut UnitalInstance) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// q, or 0 for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_instance_q(h: *const UnitalInstance) -> u32 {
    unsafe { h.as_ref() }.map_or(0, |h| h.inst.q())
}

/// Element index of θ in GF(q²), or 0 for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_instance_theta_index(h: *const UnitalInstance) -> u32 {
    unsafe { h.as_ref() }.map_or(0, |h| h.setup.theta_index())
}

/// Whether f is normal.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_instance_is_normal(h: *const UnitalInstance) -> bool {
    unsafe { h.as_ref() }.is_some_and(|h| h.inst.is_normal())
}

fn design(h: &mut UnitalInstance) -> Result<&UnitalDesign, (UnitalStatus, String)> {
    if h.design.is_none() {
        h.design = Some(core(build_unital(&h.inst, &h.setup, PairCheck::Auto))?);
    }
    Ok(h.design.as_ref().unwrap())
}

/// Number of points and blocks of U_θ. Builds and caches the design.
///
/// # Safety
/// `h` must be a live handle; the out pointers must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_design_size(
    h: *mut UnitalInstance,
    out_points: *mut usize,
    out_blocks: *mut usize,
) -> UnitalStatus {
    guard(|| {
        let h = unsafe { h.as_mut() }.ok_or_else(null)?;
        if out_points.is_null() || out_blocks.is_null() {
            return Err(null());
        }
        let d = design(h)?;
        unsafe {
            *out_points = d.num_points();
            *out_blocks = d.num_blocks();
        }
        Ok(())
    })
}

/// 2-rank of the incidence matrix by GF(2) elimination, point ∞ included.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_rank_gf2(h: *mut UnitalInstance, early_stop: bool, out: *mut usize) -> UnitalStatus {
    guard(|| {
        let h = unsafe { h.as_mut() }.ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let r = core(rank2_of_unital(design(h)?, true, early_stop))?;
        unsafe { *out = r.rank };
        Ok(())
    })
}

/// Size of the character spectrum. Requires a normal f.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_rank_spectrum(h: *const UnitalInstance, out: *mut usize) -> UnitalStatus {
    guard(|| {
        let h = unsafe { h.as_ref() }.ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        let s = core(core(SpectrumEngine::new(&h.inst, &h.setup))?.spectrum())?;
        unsafe { *out = s.size };
        Ok(())
    })
}

/// Spectrum membership bitmap, bit k for character index k = u·q² + v·q + w,
/// least significant bit first. Needs ⌈q³/8⌉ bytes; `out_len` receives that
/// size even when `cap` is too small.
///
/// # Safety
/// `h` must be a live handle, `buf` valid for `cap` bytes of writes (or NULL
/// with `cap` 0), and `out_len` valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_spectrum_bitmap(
    h: *const UnitalInstance,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> UnitalStatus {
    guard(|| {
        let h = unsafe { h.as_ref() }.ok_or_else(null)?;
        if out_len.is_null() {
            return Err(null());
        }
        let q = h.inst.q() as usize;
        let need = (q * q * q).div_ceil(8);
        unsafe { *out_len = need };
        if cap < need || buf.is_null() {
            return Err((UnitalStatus::BufferTooSmall, format!("bitmap needs {need} bytes")));
        }
        let bits = core(core(SpectrumEngine::new(&h.inst, &h.setup))?.spectrum())?.bitmap();
        unsafe { std::ptr::copy_nonoverlapping(bits.as_ptr(), buf, need) };
        Ok(())
    })
}

/// Upper, Leung–Xiang and (for p = 3) corollary bounds for q = p^m.
///
/// # Safety
/// `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_bounds(p: u32, m: u32, out: *mut UnitalBounds) -> UnitalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let q = (p as u64)
            .checked_pow(m)
            .ok_or_else(|| (UnitalStatus::InvalidArgument, "q overflows".to_string()))?;
        let b = core(bounds(q, p as u64, m))?;
        unsafe {
            *out = UnitalBounds {
                upper: b.upper,
                leung_xiang: b.leung_xiang,
                corollary: b.corollary.unwrap_or(0),
                has_corollary: b.corollary.is_some(),
            }
        };
        Ok(())
    })
}

/// Integer value of the Kloosterman sum K(a) over GF(3^m), where `a_index`
/// is the base-3 element index.
///
/// # Safety
/// `out` must be valid for writes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn unital_kloosterman(p: u32, m: u32, a_index: u32, out: *mut i64) -> UnitalStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let field = core(FieldCtx::new(&FieldSpec::new(p, m)))?;
        if a_index >= field.order() {
            return Err((UnitalStatus::InvalidArgument, format!("a = {a_index} is outside GF({})", field.order())));
        }
        let rec = core(kloosterman(&field, Elem(a_index)))?;
        let v = rec
            .integer
            .ok_or_else(|| (UnitalStatus::Unsupported, format!("K(a) is not rational for p = {p}")))?;
        unsafe { *out = v };
        Ok(())
    })
}
