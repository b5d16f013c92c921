//! C interface to the depthtrack tracker.
//!
//! Every function returns a [`DtStatus`]. On failure a description is kept in
//! thread-local storage and can be copied out with
//! [`dt_last_error_message`]. Handles are opaque, created by `*_new` or
//! `*_load` functions and released with the matching `*_free`; freeing NULL
//! is a no-op. Panics never cross the boundary.
//!
//! Poses are `[tx, ty, tz, qw, qx, qy, qz]` (camera from object, meters),
//! twists `[vx, vy, vz, wx, wy, wz]` in the object frame. Depth images are
//! row-major `f32` meters with NaN for missing readings.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use depthtrack::filter::{InitialPrior, ParticleSet, Tracker};
use depthtrack::geometry::{DepthImage, Pose, TriangleMesh, Twist};
use depthtrack::harness::config::RunConfig;
use depthtrack::Error;

/// Result of every call. Values 3 to 9 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DtStatus {
    Ok = 0,
    NullPointer = 1,
    /// The tracker has no particle set yet; call `dt_tracker_init`.
    NotInitialized = 2,
    Io = 3,
    Format = 4,
    InvalidArgument = 5,
    DimensionMismatch = 6,
    Untrackable = 7,
    TimestampMismatch = 8,
    Other = 9,
    Panic = 10,
}

/// Opaque triangle mesh.
pub struct DtMesh(TriangleMesh);

/// Opaque tracker together with its current particle set.
pub struct DtTracker {
    tracker: Tracker,
    set: Option<ParticleSet>,
}

/// Per-frame diagnostics of [`dt_tracker_step`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DtDiagnostics {
    pub log_evidence: f64,
    pub ess: f64,
    /// NaN when no particle saw the object.
    pub mean_p_vis: f64,
    pub tracking_lost: bool,
    pub resampled: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> DtStatus {
    match err {
        Error::Io { .. } => DtStatus::Io,
        Error::Mesh(_) | Error::Format(_) => DtStatus::Format,
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidMeasurement(_) => DtStatus::InvalidArgument,
        Error::DimensionMismatch(_) => DtStatus::DimensionMismatch,
        Error::Untrackable(_) => DtStatus::Untrackable,
        Error::TimestampMismatch(_) => DtStatus::TimestampMismatch,
        Error::TimeOutOfRange(_) | Error::DegenerateWeights => DtStatus::Other,
    }
}

/// Runs `f`, recording its error or panic.
fn guard(f: impl FnOnce() -> Result<(), (DtStatus, String)>) -> DtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {}", msg));
            DtStatus::Panic
        }
    }
}

fn lib(err: Error) -> (DtStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (DtStatus, String) {
    (DtStatus::NullPointer, format!("{} is NULL", what))
}

fn invalid(msg: impl Into<String>) -> (DtStatus, String) {
    (DtStatus::InvalidArgument, msg.into())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DtStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{} is not UTF-8", what)))
}

unsafe fn read_pose(p: *const f64, what: &str) -> Result<Pose, (DtStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let a: [f64; 7] = ptr::read(p as *const [f64; 7]);
    Pose::from_array(a).map_err(lib)
}

unsafe fn write_pose(out: *mut f64, pose: &Pose) {
    ptr::write(out as *mut [f64; 7], pose.to_array());
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len − 1` bytes) and returns the full message
/// length in bytes, excluding the terminator. `buf` may be NULL to query the
/// length.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads a Wavefront OBJ mesh.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dt_mesh_load_obj(path: *const c_char, out: *mut *mut DtMesh) -> DtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = c_str(path, "path")?;
        let mesh = TriangleMesh::load_obj(Path::new(path)).map_err(lib)?;
        *out = Box::into_raw(Box::new(DtMesh(mesh)));
        Ok(())
    })
}

/// Builds a mesh from `vertex_count` xyz triples and `triangle_count`
/// index triples.
///
/// # Safety
/// `vertices` must hold `3 · vertex_count` doubles, `indices`
/// `3 · triangle_count` integers, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dt_mesh_new(
    vertices: *const f64,
    vertex_count: usize,
    indices: *const u32,
    triangle_count: usize,
    out: *mut *mut DtMesh,
) -> DtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if vertices.is_null() || indices.is_null() {
            return Err(null("vertices or indices"));
        }
        let v = std::slice::from_raw_parts(vertices, 3 * vertex_count);
        let t = std::slice::from_raw_parts(indices, 3 * triangle_count);
        let verts = v.chunks_exact(3).map(|c| [c[0], c[1], c[2]].into()).collect();
        let tris = t.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let mesh = TriangleMesh::new(verts, tris).map_err(lib)?;
        *out = Box::into_raw(Box::new(DtMesh(mesh)));
        Ok(())
    })
}

/// Number of triangles kept after degenerate ones were dropped.
///
/// # Safety
/// `mesh` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dt_mesh_triangle_count(mesh: *const DtMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.triangles().len())
}

/// # Safety
/// `mesh` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dt_mesh_free(mesh: *mut DtMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Creates a tracker for `mesh`. `config_toml` is the text of a run
/// configuration or NULL for the defaults; `DEPTHTRACK_*` environment
/// overrides apply either way. The mesh is copied.
///
/// # Safety
/// `mesh` must be a live handle, `config_toml` NULL or NUL-terminated, and
/// `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_new(
    mesh: *const DtMesh,
    config_toml: *const c_char,
    out: *mut *mut DtTracker,
) -> DtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let text = if config_toml.is_null() { "" } else { c_str(config_toml, "config_toml")? };
        let cfg = RunConfig::from_toml(text, std::env::vars()).map_err(lib)?;
        let tracker = Tracker::new(mesh.0.clone(), cfg.camera, cfg.observation, cfg.occlusion, cfg.process, cfg.filter)
            .map_err(lib)?;
        *out = Box::into_raw(Box::new(DtTracker {
            tracker,
            set: None,
        }));
        Ok(())
    })
}

/// Configured image width and height.
///
/// # Safety
/// `tracker` must be a live handle; `width` and `height` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_image_size(tracker: *const DtTracker, width: *mut u32, height: *mut u32) -> DtStatus {
    guard(|| {
        let t = tracker.as_ref().ok_or_else(|| null("tracker"))?;
        if width.is_null() || height.is_null() {
            return Err(null("width or height"));
        }
        *width = t.tracker.camera().width;
        *height = t.tracker.camera().height;
        Ok(())
    })
}

/// (Re)starts tracking from a Gaussian prior around `pose` (7 doubles)
/// with the configured prior spread.
///
/// # Safety
/// `tracker` must be a live handle and `pose` point to 7 doubles.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_init(tracker: *mut DtTracker, pose: *const f64, timestamp: f64) -> DtStatus {
    guard(|| {
        let t = tracker.as_mut().ok_or_else(|| null("tracker"))?;
        let mean = read_pose(pose, "pose")?;
        let f = t.tracker.filter();
        let prior = InitialPrior {
            mean,
            trans_sigma: f.prior_trans_sigma,
            rot_sigma: f.prior_rot_sigma,
        };
        t.set = Some(t.tracker.initialize(&prior, timestamp).map_err(lib)?);
        Ok(())
    })
}

/// Advances the filter by one depth frame of `width · height` values taken
/// `dt` seconds after the previous one. `control` is NULL or 6 doubles and
/// is used only in controlled mode. Writes the pose estimate (7 doubles) and,
/// if `diagnostics` is not NULL, the frame diagnostics.
///
/// # Safety
/// `tracker` must be a live handle, `depths` hold `width · height` floats,
/// `control` be NULL or hold 6 doubles, `pose_out` have room for 7 doubles
/// and `diagnostics` be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_step(
    tracker: *mut DtTracker,
    depths: *const f32,
    width: u32,
    height: u32,
    timestamp: f64,
    dt: f64,
    control: *const f64,
    pose_out: *mut f64,
    diagnostics: *mut DtDiagnostics,
) -> DtStatus {
    guard(|| {
        let t = tracker.as_mut().ok_or_else(|| null("tracker"))?;
        if depths.is_null() || pose_out.is_null() {
            return Err(null("depths or pose_out"));
        }
        let n = width as usize * height as usize;
        let image = DepthImage::new(width, height, std::slice::from_raw_parts(depths, n).to_vec(), timestamp).map_err(lib)?;
        let control = (!control.is_null()).then(|| Twist::from(ptr::read(control as *const [f64; 6])));
        // reject bad input before the set is handed over, so that a refused
        // frame leaves the filter where it was
        if !image.matches(t.tracker.camera()) {
            return Err(lib(Error::DimensionMismatch(format!(
                "{}x{} image for a {}x{} camera",
                width,
                height,
                t.tracker.camera().width,
                t.tracker.camera().height
            ))));
        }
        if !(dt > 0.0 && dt.is_finite()) || control.is_some_and(|u| !u.is_finite()) {
            return Err(invalid("dt must be > 0 and the control finite"));
        }
        let set = t
            .set
            .take()
            .ok_or((DtStatus::NotInitialized, "dt_tracker_init has not been called".to_string()))?;
        let out = t.tracker.step(set, &image, control.as_ref(), dt).map_err(lib)?;
        write_pose(pose_out, &out.estimate);
        if let Some(d) = diagnostics.as_mut() {
            *d = DtDiagnostics {
                log_evidence: out.diagnostics.log_evidence,
                ess: out.diagnostics.ess,
                mean_p_vis: out.diagnostics.mean_p_vis,
                tracking_lost: out.diagnostics.tracking_lost,
                resampled: out.diagnostics.resampled,
            };
        }
        t.set = Some(out.set);
        Ok(())
    })
}

/// # Safety
/// `tracker` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_free(tracker: *mut DtTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}
