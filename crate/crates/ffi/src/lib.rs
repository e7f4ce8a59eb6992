//! C ABI over the `stpd` library.
//!
//! Conventions:
//! - Every fallible function returns a [`StpdStatus`]; on failure a
//!   description is available from [`stpd_last_error_message`] on the same
//!   thread.
//! - Handles (`StpdSequence`, `StpdFlow`) are opaque and must be released
//!   with their `_free` function. Strings returned through out-parameters
//!   are released with [`stpd_string_free`].
//! - Panics never cross the boundary; they surface as
//!   `STPD_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use stpd::error::{Error, ErrorCategory};
use stpd::flow::{self, FlowField, FlowParams, FlowSource};
use stpd::imgproc::Plane;
use stpd::perceptual::{PerceptualModelParams, PerceptualTrajectory, TrajectoryDomain};
use stpd::report::{self, ReportOptions};
use stpd::spatial::lpips;
use stpd::straightness;
use stpd::tradeoff::{self, TradeoffConfig};
use stpd::video_io::{self, FrameSequence, SequencePair, ValueRange};

/// Result code of every fallible call. Input, metric and missing-score
/// failures share their numeric values with the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StpdStatus {
    Ok = 0,
    NullPointer = 1,
    Input = 2,
    Metric = 3,
    MissingScores = 4,
    InvalidUtf8 = 5,
    Internal = 6,
}

/// A loaded frame sequence.
pub struct StpdSequence(FrameSequence);

/// A dense optical flow field.
pub struct StpdFlow(FlowField);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> StpdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            StpdStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e.category() {
                ErrorCategory::Input => StpdStatus::Input,
                ErrorCategory::Metric => StpdStatus::Metric,
                ErrorCategory::MissingScores => StpdStatus::MissingScores,
            }
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is NULL"));
            StpdStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            StpdStatus::InvalidUtf8
        }
        Err(_) => {
            set_error("internal panic");
            StpdStatus::Internal
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure::Utf8(what))
}

unsafe fn optional_path(p: *const c_char, what: &'static str) -> Result<Option<PathBuf>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        path_arg(p, what).map(Some)
    }
}

/// Message describing the most recent failure on this thread, or an empty
/// string. Valid until the next `stpd_` call on the same thread.
#[no_mangle]
pub extern "C" fn stpd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Load a numbered PNG/BMP directory or a `.y4m` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_sequence_load(path: *const c_char, out: *mut *mut StpdSequence) -> StpdStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let seq = video_io::load_sequence(&path_arg(path, "path")?, None)?;
        *out = Box::into_raw(Box::new(StpdSequence(seq)));
        Ok(())
    })
}

/// Build a gray 8-bit sequence from `frames` consecutive row-major
/// `width * height` byte planes.
///
/// # Safety
/// `data` must point to `frames * width * height` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn stpd_sequence_from_gray_u8(
    data: *const u8,
    width: usize,
    height: usize,
    frames: usize,
    out: *mut *mut StpdSequence,
) -> StpdStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        if data.is_null() {
            return Err(Failure::Null("data"));
        }
        let n = width
            .checked_mul(height)
            .and_then(|p| p.checked_mul(frames))
            .ok_or_else(|| Error::InvalidParameter("sequence size overflows".into()))?;
        if n == 0 {
            return Err(Error::NoFramesFound(PathBuf::from("<buffer>")).into());
        }
        let bytes = std::slice::from_raw_parts(data, n);
        let planes: Vec<Plane> = bytes
            .chunks_exact(width * height)
            .map(|c| Plane::new(width, height, c.iter().map(|&b| b as f64).collect()))
            .collect();
        let seq = FrameSequence::from_planes(&planes, ValueRange::Byte, "<buffer>")?;
        *out = Box::into_raw(Box::new(StpdSequence(seq)));
        Ok(())
    })
}

/// Release a sequence; NULL is ignored.
///
/// # Safety
/// `seq` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stpd_sequence_free(seq: *mut StpdSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// # Safety
/// `seq` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_sequence_dims(
    seq: *const StpdSequence,
    frames: *mut usize,
    width: *mut usize,
    height: *mut usize,
    channels: *mut usize,
) -> StpdStatus {
    guard(|| {
        let s = &as_ref(seq, "seq")?.0;
        *as_mut(frames, "frames")? = s.len();
        *as_mut(width, "width")? = s.width();
        *as_mut(height, "height")? = s.height();
        *as_mut(channels, "channels")? = s.channels();
        Ok(())
    })
}

/// Straightness (radians) of a trajectory of `n_points` row-major points
/// of dimension `dim`. Writes `n_points - 2` node values to
/// `out_straightness` and their mean to `out_mean`.
///
/// # Safety
/// `points` must hold `n_points * dim` values and `out_straightness`
/// room for `n_points - 2`.
#[no_mangle]
pub unsafe extern "C" fn stpd_straightness(
    points: *const f64,
    n_points: usize,
    dim: usize,
    out_straightness: *mut f64,
    out_mean: *mut f64,
) -> StpdStatus {
    guard(|| {
        if points.is_null() {
            return Err(Failure::Null("points"));
        }
        if out_straightness.is_null() {
            return Err(Failure::Null("out_straightness"));
        }
        let out_mean = as_mut(out_mean, "out_mean")?;
        if n_points < 3 || dim == 0 {
            return Err(Error::TooFewFrames {
                what: "trajectory curvature",
                needed: 3,
                got: n_points,
            }
            .into());
        }
        let flat = std::slice::from_raw_parts(points, n_points * dim);
        let traj = PerceptualTrajectory::new(
            flat.chunks_exact(dim).map(<[f64]>::to_vec).collect(),
            TrajectoryDomain::Perceptual,
        )?;
        let s = straightness::curvature_series(&traj)?;
        std::slice::from_raw_parts_mut(out_straightness, s.len()).copy_from_slice(&s.straightness);
        *out_mean = s.mean_straightness;
        Ok(())
    })
}

/// PQ_Temporal of a sequence with the default perceptual model.
///
/// # Safety
/// `seq` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_pq_temporal(seq: *const StpdSequence, out: *mut f64) -> StpdStatus {
    guard(|| {
        let s = &as_ref(seq, "seq")?.0;
        let out = as_mut(out, "out")?;
        let params = PerceptualModelParams::default();
        let p = straightness::curvature_series(&stpd::perceptual::to_perceptual_trajectory(s, &params)?)?;
        let i = straightness::curvature_series(&stpd::perceptual::to_intensity_trajectory(
            s,
            params.crop,
            params.downscale,
        )?)?;
        *out = straightness::pq_temporal(&p, &i)?;
        Ok(())
    })
}

unsafe fn pair_of(reference: *const StpdSequence, test: *const StpdSequence) -> Result<SequencePair, Failure> {
    let r = as_ref(reference, "reference")?.0.clone();
    let t = as_ref(test, "test")?.0.clone();
    Ok(SequencePair::new(r, t)?)
}

/// MSE_Pix on the 0–255 scale.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_mse_pix(
    reference: *const StpdSequence,
    test: *const StpdSequence,
    out: *mut f64,
) -> StpdStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = tradeoff::mse_pix(&pair_of(reference, test)?, ValueRange::Byte)?.0;
        Ok(())
    })
}

/// MSE_OF and tOF with natively estimated flow (default parameters).
///
/// # Safety
/// Handles must be live; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_mse_of_native(
    reference: *const StpdSequence,
    test: *const StpdSequence,
    out_mse_of: *mut f64,
    out_t_of: *mut f64,
) -> StpdStatus {
    guard(|| {
        let out_mse_of = as_mut(out_mse_of, "out_mse_of")?;
        let out_t_of = as_mut(out_t_of, "out_t_of")?;
        let pair = pair_of(reference, test)?;
        let d = flow::flow_distortion_for(pair.reference(), pair.test(), &FlowSource::Native(FlowParams::default()))?;
        *out_mse_of = d.mse_of;
        *out_t_of = d.t_of;
        Ok(())
    })
}

/// D_ST = mse_pix + alpha * mse_of.
#[no_mangle]
pub extern "C" fn stpd_d_st(mse_pix: f64, mse_of: f64, alpha: f64) -> f64 {
    let cfg = TradeoffConfig {
        alpha,
        ..TradeoffConfig::default()
    };
    tradeoff::d_st(mse_pix, mse_of, &cfg)
}

/// P_ST = pq_spatial / pq_temporal; fails when pq_temporal <= 0.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_p_st(pq_spatial: f64, pq_temporal: f64, out: *mut f64) -> StpdStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = tradeoff::p_st(pq_spatial, pq_temporal)?;
        Ok(())
    })
}

/// Read a Middlebury `.flo` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_flow_read(path: *const c_char, out: *mut *mut StpdFlow) -> StpdStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let f = flow::read_flo(&path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(StpdFlow(f)));
        Ok(())
    })
}

/// Write a flow field as `.flo`.
///
/// # Safety
/// `flow` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn stpd_flow_write(flow: *const StpdFlow, path: *const c_char) -> StpdStatus {
    guard(|| {
        let f = &as_ref(flow, "flow")?.0;
        flow::write_flo(f, &path_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `flow` must be a live handle; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_flow_dims(flow: *const StpdFlow, width: *mut usize, height: *mut usize) -> StpdStatus {
    guard(|| {
        let f = &as_ref(flow, "flow")?.0;
        *as_mut(width, "width")? = f.width();
        *as_mut(height, "height")? = f.height();
        Ok(())
    })
}

/// Copy the horizontal and vertical components (row-major) into caller
/// buffers of `len` elements each; `len` must equal width * height.
///
/// # Safety
/// `u` and `v` must each have room for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn stpd_flow_copy(flow: *const StpdFlow, u: *mut f32, v: *mut f32, len: usize) -> StpdStatus {
    guard(|| {
        let f = &as_ref(flow, "flow")?.0;
        if u.is_null() {
            return Err(Failure::Null("u"));
        }
        if v.is_null() {
            return Err(Failure::Null("v"));
        }
        if len != f.u().len() {
            return Err(Error::InvalidParameter(format!("buffer length {len}, flow has {} pixels", f.u().len())).into());
        }
        std::slice::from_raw_parts_mut(u, len).copy_from_slice(f.u());
        std::slice::from_raw_parts_mut(v, len).copy_from_slice(f.v());
        Ok(())
    })
}

/// Release a flow field; NULL is ignored.
///
/// # Safety
/// `flow` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stpd_flow_free(flow: *mut StpdFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Full JSON report with default settings.
///
/// `lpips_csv` (per-frame LPIPS scores) and `flow_dir` (external `.flo`
/// files) may be NULL. With `partial` non-zero, failing measures are
/// recorded as unavailable instead of failing the call. The string is
/// released with `stpd_string_free`.
///
/// # Safety
/// Handles must be live, non-NULL strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stpd_report_json(
    reference: *const StpdSequence,
    test: *const StpdSequence,
    lpips_csv: *const c_char,
    flow_dir: *const c_char,
    partial: i32,
    out: *mut *mut c_char,
) -> StpdStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let pair = pair_of(reference, test)?;
        let lpips_path = optional_path(lpips_csv, "lpips_csv")?;
        let mut opts = ReportOptions {
            partial: partial != 0,
            ..ReportOptions::default()
        };
        if let Some(p) = &lpips_path {
            opts.lpips = lpips::read_lpips(p)?;
            opts.lpips_source = Some(p.display().to_string());
        }
        if let Some(dir) = optional_path(flow_dir, "flow_dir")? {
            opts.flow = FlowSource::directory(dir);
        }
        let json = report::build_report(&pair, &opts)?.to_json();
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// Release a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stpd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
