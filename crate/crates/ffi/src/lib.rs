//! C interface to `coordinfer`.
//!
//! Every fallible function returns a [`CiStatus`]. On failure the message is
//! kept per thread and can be copied out with [`ci_last_error_message`].
//! Trajectory sets are opaque handles released with [`ci_trajectory_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use coordinfer::dirmath::{dist_dir, DirectionDeg};
use coordinfer::fit::{solve_support_qp, PredictionMatrix, ThresholdVector};
use coordinfer::io::{load_trajectory_csv, FillPolicy};
use coordinfer::simulate::{check_convergence, simulate, Regime, SimSpec};
use coordinfer::strategies::PurePredictions;
use coordinfer::trajectory::TrajectorySet;
use coordinfer::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    DataContract = 5,
    Panic = 6,
}

/// Opaque set of agent trajectories.
pub struct CiTrajectorySet {
    inner: TrajectorySet,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CiStatus {
    match e {
        Error::Parse { .. } | Error::Format(_) | Error::Json(_) => CiStatus::Parse,
        Error::Io(_) => CiStatus::Io,
        _ if e.exit_code() == 3 => CiStatus::DataContract,
        _ => CiStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CiStatus, String)>) -> CiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CiStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CiStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CiStatus, String) {
    (CiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CiStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CiStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ci_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Angular distance in degrees between two headings, in `[0, 180]`.
#[no_mangle]
pub extern "C" fn ci_dist_dir(a_deg: f64, b_deg: f64) -> f64 {
    dist_dir(DirectionDeg::new(a_deg), DirectionDeg::new(b_deg))
}

/// Simulates one event. `model` is one of HM, LRA, HM_AND_LRA, MIXED, RANDOM;
/// `rho` is used by HM only.
///
/// # Safety
/// `model` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ci_simulate(
    model: *const c_char,
    n_agents: usize,
    n_steps: usize,
    rho: f64,
    seed: u64,
    out: *mut *mut CiTrajectorySet,
) -> CiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = str_arg(model, "model")?;
        let regime =
            Regime::parse(name).ok_or_else(|| (CiStatus::InvalidArgument, format!("unknown model {name:?}")))?;
        let mut spec = SimSpec::new(regime, seed);
        spec.n_agents = n_agents;
        spec.n_steps = n_steps;
        if regime == Regime::Hm {
            spec.rho = rho;
        }
        let inner = simulate(&spec).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CiTrajectorySet { inner }));
        Ok(())
    })
}

/// Loads a `t,agent_id,x,y` CSV file. Gaps in the time grid are rejected.
///
/// # Safety
/// `path` must be a NUL-terminated string, `informed_ids` null or pointing
/// to `n_informed` values, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ci_load_csv(
    path: *const c_char,
    informed_ids: *const u32,
    n_informed: usize,
    out: *mut *mut CiTrajectorySet,
) -> CiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let ids = if n_informed == 0 {
            &[][..]
        } else if informed_ids.is_null() {
            return Err(null("informed_ids"));
        } else {
            std::slice::from_raw_parts(informed_ids, n_informed)
        };
        let inner = load_trajectory_csv(Path::new(path), ids, FillPolicy::Reject).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CiTrajectorySet { inner }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `set` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ci_trajectory_free(set: *mut CiTrajectorySet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of agents, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ci_trajectory_n_agents(set: *const CiTrajectorySet) -> usize {
    set.as_ref().map_or(0, |s| s.inner.n_agents())
}

/// Number of direction steps, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ci_trajectory_n_steps(set: *const CiTrajectorySet) -> usize {
    set.as_ref().map_or(0, |s| s.inner.n_steps())
}

/// Heading of agent index `agent` at step `t`, in degrees.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ci_trajectory_direction(
    set: *const CiTrajectorySet,
    agent: usize,
    t: usize,
    out: *mut f64,
) -> CiStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(|| null("set"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = s
            .inner
            .directions()
            .get(agent)
            .and_then(|row| row.get(t))
            .ok_or_else(|| {
                (
                    CiStatus::InvalidArgument,
                    format!("agent {agent}, step {t} out of range"),
                )
            })?;
        *out = d.degrees();
        Ok(())
    })
}

/// First step from which every agent stays within `epsilon` degrees of the
/// informed agent, or -1 if the event never settles.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ci_convergence_step(set: *const CiTrajectorySet, epsilon: f64, out: *mut i64) -> CiStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(|| null("set"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rep = check_convergence(&s.inner, epsilon).map_err(lib_err)?;
        *out = rep.converged_at.map_or(-1, |t| t as i64);
        Ok(())
    })
}

/// Fits the support vector `w` minimizing the embedded squared error of the
/// mixed prediction against `target`, subject to `w >= kappa`, `sum w = 1`.
/// The four direction arrays hold `n_rows` headings in degrees.
///
/// # Safety
/// Each array must point to `n_rows` values, `kappa` to 3 values (or be null
/// for zero thresholds) and `w_out` to 3 writable values.
#[no_mangle]
pub unsafe extern "C" fn ci_solve_support(
    hm: *const f64,
    lra: *const f64,
    ar: *const f64,
    target: *const f64,
    n_rows: usize,
    kappa: *const f64,
    w_out: *mut f64,
) -> CiStatus {
    guard(|| {
        for (p, what) in [(hm, "hm"), (lra, "lra"), (ar, "ar"), (target, "target")] {
            if p.is_null() && n_rows > 0 {
                return Err(null(what));
            }
        }
        if w_out.is_null() {
            return Err(null("w_out"));
        }
        let slice = |p: *const f64| {
            if n_rows == 0 {
                &[][..]
            } else {
                std::slice::from_raw_parts(p, n_rows)
            }
        };
        let (hm, lra, ar, target) = (slice(hm), slice(lra), slice(ar), slice(target));
        let kappa = if kappa.is_null() {
            ThresholdVector::ZERO
        } else {
            let k = std::slice::from_raw_parts(kappa, 3);
            ThresholdVector::new(k[0], k[1], k[2]).map_err(lib_err)?
        };
        let all = hm.iter().chain(lra).chain(ar).chain(target);
        if all.clone().any(|x| !x.is_finite()) {
            return Err((CiStatus::InvalidArgument, "directions must be finite".into()));
        }
        let m = PredictionMatrix {
            agent: 0,
            steps: (0..n_rows).map(|t| (0, t)).collect(),
            predictions: (0..n_rows)
                .map(|r| PurePredictions {
                    hm: DirectionDeg::new(hm[r]),
                    lra: DirectionDeg::new(lra[r]),
                    ar: DirectionDeg::new(ar[r]),
                })
                .collect(),
            targets: target.iter().map(|&d| DirectionDeg::new(d)).collect(),
        };
        let w = solve_support_qp(&m, &kappa).map_err(lib_err)?.as_array();
        std::ptr::copy_nonoverlapping(w.as_ptr(), w_out, 3);
        Ok(())
    })
}
