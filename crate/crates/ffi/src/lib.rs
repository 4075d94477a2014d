//! C ABI over `swi-core`.
//!
//! Every fallible function returns a [`SwiStatus`]; on failure a message is
//! available from [`swi_last_error_message`] on the same thread. Objects are
//! opaque handles created by `*_new`/`*_load` functions and released with the
//! matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use swi_core::eval;
use swi_core::filter::{FilterKind, FilterSpec};
use swi_core::forward::FrameStack;
use swi_core::io;
use swi_core::retrieve::reconstruct;
use swi_core::{DepthMap, Image, OpticalConfig, ShiftSchedule, SwiError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Inconsistent = 4,
    DimensionMismatch = 5,
    Format = 6,
    Numerical = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwiFilterKind {
    None = 0,
    Gaussian = 1,
    JointBilateral = 2,
}

/// Envelope filter settings; sigmas in µm on the object.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SwiFilterSpec {
    pub kind: SwiFilterKind,
    pub spatial_sigma_um: f64,
    pub intensity_sigma: f64,
    pub pixel_pitch_um: f64,
}

pub struct SwiOptics(OpticalConfig);
pub struct SwiSchedule(ShiftSchedule);
pub struct SwiFrameStack(FrameStack);
pub struct SwiDepthMap(DepthMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &SwiError) -> SwiStatus {
    match e {
        SwiError::Io { .. } => SwiStatus::Io,
        SwiError::Format { .. } => SwiStatus::Format,
        SwiError::Inconsistent(_) => SwiStatus::Inconsistent,
        SwiError::DimensionMismatch(_) => SwiStatus::DimensionMismatch,
        SwiError::FitDiverged(_) | SwiError::EmptyMask | SwiError::InsufficientSpan { .. } => SwiStatus::Numerical,
        _ => SwiStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Core(SwiError),
}

impl From<SwiError> for Fail {
    fn from(e: SwiError) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SwiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SwiStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SwiStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SwiStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| SwiError::InvalidParameter("path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the most recent failure on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn swi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

// ---- optics -------------------------------------------------------------

/// Optics from two wavelengths in nm.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn swi_optics_new(lambda1_nm: f64, lambda2_nm: f64, out: *mut *mut SwiOptics) -> SwiStatus {
    guard(|| {
        let o = self::out(out, "out")?;
        *o = boxed(SwiOptics(OpticalConfig::from_wavelengths(lambda1_nm, lambda2_nm)?));
        Ok(())
    })
}

/// Optics with a chosen synthetic wavelength in µm.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn swi_optics_from_synthetic(
    lambda1_nm: f64,
    lambda_s_um: f64,
    out: *mut *mut SwiOptics,
) -> SwiStatus {
    guard(|| {
        let o = self::out(out, "out")?;
        *o = boxed(SwiOptics(OpticalConfig::for_synthetic_wavelength(lambda1_nm, lambda_s_um)?));
        Ok(())
    })
}

/// Synthetic wavelength in µm, or NaN for a null handle.
///
/// # Safety
/// `optics` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swi_optics_lambda_s(optics: *const SwiOptics) -> f64 {
    optics.as_ref().map_or(f64::NAN, |o| o.0.lambda_s)
}

/// Unambiguous depth range `λ_s/2` in µm, or NaN for a null handle.
///
/// # Safety
/// `optics` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swi_optics_unambiguous_range(optics: *const SwiOptics) -> f64 {
    optics.as_ref().map_or(f64::NAN, |o| o.0.unambiguous_range())
}

/// # Safety
/// `optics` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swi_optics_free(optics: *mut SwiOptics) {
    if !optics.is_null() {
        drop(Box::from_raw(optics));
    }
}

// ---- schedule -----------------------------------------------------------

/// # Safety
/// `optics` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn swi_schedule_new(
    optics: *const SwiOptics,
    m: usize,
    n: usize,
    l0_um: f64,
    out: *mut *mut SwiSchedule,
) -> SwiStatus {
    guard(|| {
        let c = deref(optics, "optics")?;
        let o = self::out(out, "out")?;
        *o = boxed(SwiSchedule(ShiftSchedule::new(&c.0, m, n, l0_um)?));
        Ok(())
    })
}

/// `M·N`, or 0 for a null handle.
///
/// # Safety
/// `schedule` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swi_schedule_frame_count(schedule: *const SwiSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.frame_count())
}

/// Mirror position for synthetic shift `n` and carrier shift `m`, µm.
///
/// # Safety
/// `schedule` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn swi_schedule_position(
    schedule: *const SwiSchedule,
    n: usize,
    m: usize,
    out: *mut f64,
) -> SwiStatus {
    guard(|| {
        let s = &deref(schedule, "schedule")?.0;
        if n >= s.n || m >= s.m {
            return Err(SwiError::InvalidParameter(format!("shift ({n}, {m}) outside {{{}, {}}}", s.m, s.n)).into());
        }
        *self::out(out, "out")? = s.position(n, m);
        Ok(())
    })
}

/// # Safety
/// `schedule` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swi_schedule_free(schedule: *mut SwiSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

// ---- frame stacks -------------------------------------------------------

/// Loads a frame-stack directory (`frame_n{n}_m{m}.pfm` plus `stack.json`).
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn swi_frame_stack_load(dir: *const c_char, out: *mut *mut SwiFrameStack) -> SwiStatus {
    guard(|| {
        let p = path(dir)?;
        let o = self::out(out, "out")?;
        let (stack, _) = io::read_stack(p)?;
        *o = boxed(SwiFrameStack(stack));
        Ok(())
    })
}

/// Builds a stack from `M·N` row-major frames stored back to back in
/// `data`, ordered `frames[n·M + m]`.
///
/// # Safety
/// `data` must point to `len` doubles; handles must be live.
#[no_mangle]
pub unsafe extern "C" fn swi_frame_stack_new(
    optics: *const SwiOptics,
    schedule: *const SwiSchedule,
    width: usize,
    height: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut SwiFrameStack,
) -> SwiStatus {
    guard(|| {
        let c = deref(optics, "optics")?.0;
        let s = deref(schedule, "schedule")?.0.clone();
        let values = slice(data, len, "data")?;
        let o = self::out(out, "out")?;
        let px = width * height;
        if px == 0 || len != px * s.frame_count() {
            return Err(SwiError::DimensionMismatch(format!(
                "{len} values for {} frames of {width}x{height}",
                s.frame_count()
            ))
            .into());
        }
        let frames = values
            .chunks_exact(px)
            .map(|f| Image::new(width, height, f.to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        *o = boxed(SwiFrameStack(FrameStack::new(frames, s, c)?));
        Ok(())
    })
}

/// # Safety
/// `stack` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swi_frame_stack_width(stack: *const SwiFrameStack) -> usize {
    stack.as_ref().map_or(0, |s| s.0.width())
}

/// # Safety
/// `stack` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swi_frame_stack_height(stack: *const SwiFrameStack) -> usize {
    stack.as_ref().map_or(0, |s| s.0.height())
}

/// # Safety
/// `stack` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swi_frame_stack_free(stack: *mut SwiFrameStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

// ---- reconstruction -----------------------------------------------------

/// Runs the full phase retrieval pipeline. `guide` holds `width·height`
/// intensities and may be NULL unless the filter is joint bilateral.
///
/// # Safety
/// Handles must be live; `guide` must be NULL or point to `guide_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn swi_reconstruct(
    stack: *const SwiFrameStack,
    filter: SwiFilterSpec,
    guide: *const f64,
    guide_len: usize,
    out: *mut *mut SwiDepthMap,
) -> SwiStatus {
    guard(|| {
        let st = &deref(stack, "stack")?.0;
        let o = self::out(out, "out")?;
        let kind = match filter.kind {
            SwiFilterKind::None => FilterKind::None,
            SwiFilterKind::Gaussian => FilterKind::Gaussian,
            SwiFilterKind::JointBilateral => FilterKind::JointBilateral,
        };
        let spec = FilterSpec {
            kind,
            spatial_sigma: filter.spatial_sigma_um,
            intensity_sigma: filter.intensity_sigma,
            pixel_pitch: filter.pixel_pitch_um,
        };
        let guide = if guide.is_null() {
            None
        } else {
            let g = slice(guide, guide_len, "guide")?;
            Some(Image::new(st.width(), st.height(), g.to_vec())?)
        };
        *o = boxed(SwiDepthMap(reconstruct(st, &spec, guide.as_ref())?));
        Ok(())
    })
}

// ---- depth maps ---------------------------------------------------------

/// Depth map from row-major values; `mask` may be NULL (all valid), nonzero
/// bytes mark valid pixels. Non-finite depths are masked.
///
/// # Safety
/// `depth` must point to `width·height` doubles and `mask`, if not NULL, to
/// as many bytes.
#[no_mangle]
pub unsafe extern "C" fn swi_depth_new(
    width: usize,
    height: usize,
    depth: *const f64,
    mask: *const u8,
    out: *mut *mut SwiDepthMap,
) -> SwiStatus {
    guard(|| {
        let n = width * height;
        let d = slice(depth, n, "depth")?.to_vec();
        let o = self::out(out, "out")?;
        let map = if mask.is_null() {
            DepthMap::new(width, height, d)?
        } else {
            let m = slice(mask, n, "mask")?.iter().map(|&b| b != 0).collect();
            DepthMap::with_mask(width, height, d, m)?
        };
        *o = boxed(SwiDepthMap(map));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn swi_depth_load_pfm(path: *const c_char, out: *mut *mut SwiDepthMap) -> SwiStatus {
    guard(|| {
        let p = self::path(path)?;
        let o = self::out(out, "out")?;
        *o = boxed(SwiDepthMap(io::read_depth_pfm(p)?));
        Ok(())
    })
}

/// Writes a little-endian PFM; masked pixels are stored as NaN.
///
/// # Safety
/// `depth` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn swi_depth_save_pfm(depth: *const SwiDepthMap, path: *const c_char) -> SwiStatus {
    guard(|| {
        let d = &deref(depth, "depth")?.0;
        io::write_depth_pfm(self::path(path)?, d)?;
        Ok(())
    })
}

/// # Safety
/// `depth` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swi_depth_width(depth: *const SwiDepthMap) -> usize {
    depth.as_ref().map_or(0, |d| d.0.width)
}

/// # Safety
/// `depth` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn swi_depth_height(depth: *const SwiDepthMap) -> usize {
    depth.as_ref().map_or(0, |d| d.0.height)
}

/// Copies depths and mask (1 valid, 0 masked) into caller buffers of `len`
/// elements; either buffer may be NULL.
///
/// # Safety
/// Non-NULL buffers must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn swi_depth_copy(
    depth: *const SwiDepthMap,
    values: *mut f64,
    mask: *mut u8,
    len: usize,
) -> SwiStatus {
    guard(|| {
        let d = &deref(depth, "depth")?.0;
        if len != d.depth.len() {
            return Err(SwiError::DimensionMismatch(format!("buffer of {len} for {} pixels", d.depth.len())).into());
        }
        if !values.is_null() {
            std::slice::from_raw_parts_mut(values, len).copy_from_slice(&d.depth);
        }
        if !mask.is_null() {
            for (dst, &m) in std::slice::from_raw_parts_mut(mask, len).iter_mut().zip(&d.mask) {
                *dst = u8::from(m);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `depth` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn swi_depth_free(depth: *mut SwiDepthMap) {
    if !depth.is_null() {
        drop(Box::from_raw(depth));
    }
}

// ---- metrics ------------------------------------------------------------

/// RMSE over jointly valid pixels.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn swi_rmse(est: *const SwiDepthMap, gt: *const SwiDepthMap, out: *mut f64) -> SwiStatus {
    guard(|| {
        *self::out(out, "out")? = eval::rmse(&deref(est, "est")?.0, &deref(gt, "gt")?.0)?;
        Ok(())
    })
}

/// Median absolute error over jointly valid pixels.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn swi_medae(est: *const SwiDepthMap, gt: *const SwiDepthMap, out: *mut f64) -> SwiStatus {
    guard(|| {
        *self::out(out, "out")? = eval::medae(&deref(est, "est")?.0, &deref(gt, "gt")?.0)?;
        Ok(())
    })
}

/// RMSE with residuals wrapped to the unambiguous range.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn swi_wrapped_rmse(
    est: *const SwiDepthMap,
    gt: *const SwiDepthMap,
    optics: *const SwiOptics,
    out: *mut f64,
) -> SwiStatus {
    guard(|| {
        let c = &deref(optics, "optics")?.0;
        *self::out(out, "out")? = eval::wrapped_rmse(&deref(est, "est")?.0, &deref(gt, "gt")?.0, c)?;
        Ok(())
    })
}

/// Per-axis downsampling factor of an equal-time point-scanning system.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn swi_scanning_equivalent_factor(
    scan_rate_hz: f64,
    images_per_depth: usize,
    total_time_s: f64,
    image_width: usize,
    out: *mut usize,
) -> SwiStatus {
    guard(|| {
        *self::out(out, "out")? =
            eval::scanning_equivalent_factor(scan_rate_hz, images_per_depth, total_time_s, image_width)?;
        Ok(())
    })
}
