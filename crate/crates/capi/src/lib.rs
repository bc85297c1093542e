//! C ABI over the transfer/entanglement simulator.
//!
//! Conventions: every function returns a [`StirapStatus`]; results come back
//! through out-pointers; trajectories are opaque handles freed with
//! [`stirap_trajectory_free`]. On any non-OK status the thread-local message
//! from [`stirap_last_error_message`] describes the failure. Panics never
//! cross the boundary; they surface as `STIRAP_STATUS_PANIC`.
//!
//! The generated header lives in `include/stirap.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use stirap_core::dynamics::{fidelity_bound, perturbative_fidelity, run_single_transfer};
use stirap_core::frames::max_excited_population;
use stirap_core::network::{distillation_success, run_entanglement_generation, LossModel};
use stirap_core::{Error, Frame, IntegratorConfig, NoiseModel, SystemParams, Trajectory};

/// Result of every ABI call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StirapStatus {
    Ok = 0,
    /// Invalid parameter or configuration value.
    ConfigError = 1,
    /// Input outside an operation's domain (bad state, bad buffer size).
    DomainError = 2,
    /// The integrator failed mid-run.
    IntegrationError = 3,
    IoError = 4,
    NullPointer = 5,
    /// Internal panic caught at the boundary.
    Panic = 6,
}

/// Valid values for [`StirapParams::frame`].
#[repr(C)]
pub enum StirapFrame {
    Rwa = 0,
    Lab = 1,
}

/// Valid values for [`StirapParams::noise`].
#[repr(C)]
pub enum StirapNoise {
    Super = 0,
    Lab = 1,
    None = 2,
}

/// System parameters; rates in units of g, times in 1/g. The protocol lasts
/// pi / (2 ramp).
#[repr(C)]
#[derive(Clone, Copy)]
pub struct StirapParams {
    pub g: f64,
    pub delta: f64,
    pub ramp: f64,
    pub gamma: f64,
    /// Carrier frequency; used only by lab-frame runs.
    pub epsilon: f64,
    /// A [`StirapFrame`] value.
    pub frame: i32,
    /// A [`StirapNoise`] value.
    pub noise: i32,
}

/// Integrator controls. `base_step <= 0` selects the frame-appropriate
/// default.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct StirapIntegrator {
    pub base_step: f64,
    pub tolerance: f64,
    pub max_halvings: u32,
    pub record_stride: usize,
}

/// Opaque recorded evolution; query through the accessor functions.
pub struct StirapTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn fail(err: &Error) -> StirapStatus {
    set_error(&err.to_string());
    match err {
        Error::Config { .. } => StirapStatus::ConfigError,
        Error::Domain(_) => StirapStatus::DomainError,
        Error::Integration { .. } => StirapStatus::IntegrationError,
        Error::Io(_) => StirapStatus::IoError,
    }
}

fn null_pointer(name: &str) -> StirapStatus {
    set_error(&format!("null pointer: {name}"));
    StirapStatus::NullPointer
}

fn guard(f: impl FnOnce() -> StirapStatus) -> StirapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            StirapStatus::Panic
        }
    }
}

fn to_params(c: &StirapParams) -> Result<SystemParams, Error> {
    let frame = match c.frame {
        0 => Frame::RotatingRwa,
        1 => Frame::Lab,
        other => return Err(Error::config("frame", format!("invalid frame code {other}"))),
    };
    let noise = match c.noise {
        0 => NoiseModel::SuperadiabaticProjector,
        1 => NoiseModel::LabExcitedProjector,
        2 => NoiseModel::None,
        other => return Err(Error::config("noise", format!("invalid noise code {other}"))),
    };
    let p = SystemParams {
        g: c.g,
        delta: c.delta,
        ramp: c.ramp,
        gamma: c.gamma,
        epsilon: c.epsilon,
        frame,
        noise,
    };
    p.validate()?;
    Ok(p)
}

fn from_params(p: &SystemParams) -> StirapParams {
    StirapParams {
        g: p.g,
        delta: p.delta,
        ramp: p.ramp,
        gamma: p.gamma,
        epsilon: p.epsilon,
        frame: match p.frame {
            Frame::RotatingRwa => 0,
            Frame::Lab => 1,
        },
        noise: match p.noise {
            NoiseModel::SuperadiabaticProjector => 0,
            NoiseModel::LabExcitedProjector => 1,
            NoiseModel::None => 2,
        },
    }
}

fn to_integrator(c: Option<&StirapIntegrator>) -> IntegratorConfig {
    match c {
        None => IntegratorConfig::default(),
        Some(c) => IntegratorConfig {
            base_step: (c.base_step > 0.0).then_some(c.base_step),
            tolerance: c.tolerance,
            max_halvings: c.max_halvings,
            record_stride: c.record_stride,
        },
    }
}

/// Message for the most recent failure on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn stirap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Single-transfer reference parameters (delta = 50).
#[no_mangle]
pub unsafe extern "C" fn stirap_params_single_default(out: *mut StirapParams) -> StirapStatus {
    let Some(out) = out.as_mut() else { return null_pointer("out") };
    *out = from_params(&SystemParams::single_defaults());
    StirapStatus::Ok
}

/// Two-node reference parameters (delta = 70).
#[no_mangle]
pub unsafe extern "C" fn stirap_params_network_default(out: *mut StirapParams) -> StirapStatus {
    let Some(out) = out.as_mut() else { return null_pointer("out") };
    *out = from_params(&SystemParams::network_defaults());
    StirapStatus::Ok
}

/// Default integrator controls (auto base step, tolerance 1e-9).
#[no_mangle]
pub unsafe extern "C" fn stirap_integrator_default(out: *mut StirapIntegrator) -> StirapStatus {
    let Some(out) = out.as_mut() else { return null_pointer("out") };
    let d = IntegratorConfig::default();
    *out = StirapIntegrator {
        base_step: 0.0,
        tolerance: d.tolerance,
        max_halvings: d.max_halvings,
        record_stride: d.record_stride,
    };
    StirapStatus::Ok
}

/// Runs the one-node transfer from |1>. On success `*out` owns a trajectory
/// handle.
#[no_mangle]
pub unsafe extern "C" fn stirap_run_single(
    params: *const StirapParams,
    integrator: *const StirapIntegrator,
    out: *mut *mut StirapTrajectory,
) -> StirapStatus {
    let Some(params) = params.as_ref() else { return null_pointer("params") };
    let Some(out) = out.as_mut() else { return null_pointer("out") };
    let integrator = integrator.as_ref();
    guard(|| {
        let p = match to_params(params) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match run_single_transfer(&p, &to_integrator(integrator)) {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(StirapTrajectory { inner: traj }));
                StirapStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Runs two-node entanglement generation from the shared-photon state.
/// `out_trajectory` may be null when only the fidelity is wanted.
#[no_mangle]
pub unsafe extern "C" fn stirap_run_network(
    left: *const StirapParams,
    right: *const StirapParams,
    integrator: *const StirapIntegrator,
    out_trajectory: *mut *mut StirapTrajectory,
    out_fidelity: *mut f64,
) -> StirapStatus {
    let Some(left) = left.as_ref() else { return null_pointer("left") };
    let Some(right) = right.as_ref() else { return null_pointer("right") };
    let Some(out_fidelity) = out_fidelity.as_mut() else { return null_pointer("out_fidelity") };
    let integrator = integrator.as_ref();
    let out_trajectory = out_trajectory.as_mut();
    guard(|| {
        let pl = match to_params(left) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        let pr = match to_params(right) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match run_entanglement_generation(&pl, &pr, &to_integrator(integrator)) {
            Ok(run) => {
                *out_fidelity = run.bell_fidelity;
                if let Some(slot) = out_trajectory {
                    *slot = Box::into_raw(Box::new(StirapTrajectory { inner: run.trajectory }));
                }
                StirapStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of recorded time points.
#[no_mangle]
pub unsafe extern "C" fn stirap_trajectory_len(
    trajectory: *const StirapTrajectory,
    out: *mut usize,
) -> StirapStatus {
    let Some(traj) = trajectory.as_ref() else { return null_pointer("trajectory") };
    let Some(out) = out.as_mut() else { return null_pointer("out") };
    *out = traj.inner.times.len();
    StirapStatus::Ok
}

/// Number of population columns per record.
#[no_mangle]
pub unsafe extern "C" fn stirap_trajectory_dim(
    trajectory: *const StirapTrajectory,
    out: *mut usize,
) -> StirapStatus {
    let Some(traj) = trajectory.as_ref() else { return null_pointer("trajectory") };
    let Some(out) = out.as_mut() else { return null_pointer("out") };
    *out = traj.inner.basis.dim();
    StirapStatus::Ok
}

/// Copies the record times into `out` (capacity in elements).
#[no_mangle]
pub unsafe extern "C" fn stirap_trajectory_times(
    trajectory: *const StirapTrajectory,
    out: *mut f64,
    capacity: usize,
) -> StirapStatus {
    let Some(traj) = trajectory.as_ref() else { return null_pointer("trajectory") };
    if out.is_null() {
        return null_pointer("out");
    }
    let times = &traj.inner.times;
    if capacity < times.len() {
        set_error("times buffer too small");
        return StirapStatus::DomainError;
    }
    std::ptr::copy_nonoverlapping(times.as_ptr(), out, times.len());
    StirapStatus::Ok
}

/// Copies populations row-major (`len * dim` elements: all levels of record
/// 0, then record 1, ...).
#[no_mangle]
pub unsafe extern "C" fn stirap_trajectory_populations(
    trajectory: *const StirapTrajectory,
    out: *mut f64,
    capacity: usize,
) -> StirapStatus {
    let Some(traj) = trajectory.as_ref() else { return null_pointer("trajectory") };
    if out.is_null() {
        return null_pointer("out");
    }
    let dim = traj.inner.basis.dim();
    let need = traj.inner.populations.len() * dim;
    if capacity < need {
        set_error("populations buffer too small");
        return StirapStatus::DomainError;
    }
    let mut cursor = out;
    for row in &traj.inner.populations {
        std::ptr::copy_nonoverlapping(row.as_ptr(), cursor, dim);
        cursor = cursor.add(dim);
    }
    StirapStatus::Ok
}

/// Copies the final populations (`dim` elements).
#[no_mangle]
pub unsafe extern "C" fn stirap_trajectory_final_populations(
    trajectory: *const StirapTrajectory,
    out: *mut f64,
    capacity: usize,
) -> StirapStatus {
    let Some(traj) = trajectory.as_ref() else { return null_pointer("trajectory") };
    if out.is_null() {
        return null_pointer("out");
    }
    let pops = traj.inner.final_populations();
    if capacity < pops.len() {
        set_error("populations buffer too small");
        return StirapStatus::DomainError;
    }
    std::ptr::copy_nonoverlapping(pops.as_ptr(), out, pops.len());
    StirapStatus::Ok
}

/// Releases a trajectory handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn stirap_trajectory_free(trajectory: *mut StirapTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Peak excited-state population: perturbative closed form and numerical
/// maximization.
#[no_mangle]
pub unsafe extern "C" fn stirap_max_excited_population(
    params: *const StirapParams,
    out_closed: *mut f64,
    out_numeric: *mut f64,
) -> StirapStatus {
    let Some(params) = params.as_ref() else { return null_pointer("params") };
    let Some(out_closed) = out_closed.as_mut() else { return null_pointer("out_closed") };
    let Some(out_numeric) = out_numeric.as_mut() else { return null_pointer("out_numeric") };
    guard(|| {
        let p = match to_params(params) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match max_excited_population(&p) {
            Ok(pe) => {
                *out_closed = pe.closed_form;
                *out_numeric = pe.numeric;
                StirapStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Dephasing integral and the fidelity estimate 1 - gamma * integral.
#[no_mangle]
pub unsafe extern "C" fn stirap_perturbative_fidelity(
    params: *const StirapParams,
    out_integral: *mut f64,
    out_fidelity: *mut f64,
) -> StirapStatus {
    let Some(params) = params.as_ref() else { return null_pointer("params") };
    let Some(out_integral) = out_integral.as_mut() else { return null_pointer("out_integral") };
    let Some(out_fidelity) = out_fidelity.as_mut() else { return null_pointer("out_fidelity") };
    guard(|| {
        let p = match to_params(params) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match perturbative_fidelity(&p) {
            Ok(pf) => {
                *out_integral = pf.integral;
                *out_fidelity = pf.fidelity;
                StirapStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Rigorous infidelity bound and its per-ramp scaling coefficient.
#[no_mangle]
pub unsafe extern "C" fn stirap_fidelity_bound(
    params: *const StirapParams,
    out_bound: *mut f64,
    out_coefficient: *mut f64,
) -> StirapStatus {
    let Some(params) = params.as_ref() else { return null_pointer("params") };
    let Some(out_bound) = out_bound.as_mut() else { return null_pointer("out_bound") };
    let Some(out_coefficient) = out_coefficient.as_mut() else {
        return null_pointer("out_coefficient");
    };
    guard(|| {
        let p = match to_params(params) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match fidelity_bound(&p, None) {
            Ok(fb) => {
                *out_bound = fb.bound;
                *out_coefficient = fb.scaling_coefficient;
                StirapStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Bell fidelity after mixing in the photon-loss vacuum outcome:
/// (1 - p_loss) * fidelity_in.
#[no_mangle]
pub unsafe extern "C" fn stirap_lossy_bell_fidelity(
    fidelity_in: f64,
    p_loss: f64,
    out: *mut f64,
) -> StirapStatus {
    let Some(out) = out.as_mut() else { return null_pointer("out") };
    if !(fidelity_in.is_finite() && (0.0..=1.0).contains(&fidelity_in)) {
        set_error("fidelity_in outside [0, 1]");
        return StirapStatus::DomainError;
    }
    match LossModel::new(p_loss) {
        Ok(loss) => {
            *out = (1.0 - loss.p_loss()) * fidelity_in;
            StirapStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Success probability of the two-copy distillation step, (1 - p_loss)^2 / 2.
#[no_mangle]
pub unsafe extern "C" fn stirap_distillation_success(
    p_loss: f64,
    out: *mut f64,
) -> StirapStatus {
    let Some(out) = out.as_mut() else { return null_pointer("out") };
    match LossModel::new(p_loss) {
        Ok(loss) => {
            *out = distillation_success(&loss);
            StirapStatus::Ok
        }
        Err(e) => fail(&e),
    }
}
