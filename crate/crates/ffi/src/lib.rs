//! C ABI over the simulator.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns a [`CsStatus`]
//! and leaves a message for [`cs_last_error`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coded_shuffle::analysis::{exact, theory_centralized, theory_decentralized, to_f64};
use coded_shuffle::config::{parse_mu, Mu};
use coded_shuffle::sim::FailureKind;
use coded_shuffle::{Baseline, DownlinkMode, PlacementMode, RunOptions, RunOutcome, SystemConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    VerificationFailed = 3,
    DecodeFailed = 4,
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsPlacement {
    Centralized = 0,
    Decentralized = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsDownlink {
    Mds = 0,
    Random = 1,
    Forward = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsBaseline {
    Coded = 0,
    Uncoded = 1,
}

/// Opaque system configuration.
pub struct CsConfig {
    inner: SystemConfig,
}

/// Opaque result of a completed, verified run.
pub struct CsReport {
    inner: RunOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> CsStatus) -> CsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            CsStatus::Panic
        }
    }
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration with storage fraction `mu_num / mu_den` and defaults
/// for everything else. Returns null if `mu_den` is zero.
#[no_mangle]
pub extern "C" fn cs_config_new(users: usize, files: usize, mu_num: u64, mu_den: u64) -> *mut CsConfig {
    if mu_den == 0 {
        set_error("storage fraction denominator is zero");
        return ptr::null_mut();
    }
    Box::into_raw(Box::new(CsConfig {
        inner: SystemConfig::new(users, files, Mu::new(mu_num, mu_den)),
    }))
}

/// # Safety
/// `cfg` must be null or a pointer from [`cs_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_config_free(cfg: *mut CsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn with_config(cfg: *mut CsConfig, f: impl FnOnce(&mut SystemConfig) -> CsStatus) -> CsStatus {
    match cfg.as_mut() {
        Some(c) => guard(|| f(&mut c.inner)),
        None => {
            set_error("null configuration handle");
            CsStatus::NullPointer
        }
    }
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_config_set_value_bits(cfg: *mut CsConfig, bits: usize) -> CsStatus {
    with_config(cfg, |c| {
        c.value_bits = bits;
        CsStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_config_set_seed(cfg: *mut CsConfig, seed: u64) -> CsStatus {
    with_config(cfg, |c| {
        c.seed = seed;
        CsStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_config_set_placement(cfg: *mut CsConfig, mode: CsPlacement) -> CsStatus {
    with_config(cfg, |c| {
        c.placement = match mode {
            CsPlacement::Centralized => PlacementMode::Centralized,
            CsPlacement::Decentralized => PlacementMode::Decentralized,
        };
        CsStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_config_set_downlink(cfg: *mut CsConfig, mode: CsDownlink) -> CsStatus {
    with_config(cfg, |c| {
        c.downlink = match mode {
            CsDownlink::Mds => DownlinkMode::Mds,
            CsDownlink::Random => DownlinkMode::Random,
            CsDownlink::Forward => DownlinkMode::Forward,
        };
        CsStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_config_set_baseline(cfg: *mut CsConfig, baseline: CsBaseline) -> CsStatus {
    with_config(cfg, |c| {
        c.baseline = match baseline {
            CsBaseline::Coded => Baseline::Coded,
            CsBaseline::Uncoded => Baseline::Uncoded,
        };
        CsStatus::Ok
    })
}

/// Storage fraction from text, `"p/q"` or decimal.
///
/// # Safety
/// `cfg` must be a live handle and `text` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cs_config_set_mu(cfg: *mut CsConfig, text: *const c_char) -> CsStatus {
    if text.is_null() {
        set_error("null string");
        return CsStatus::NullPointer;
    }
    let s = CStr::from_ptr(text).to_string_lossy().into_owned();
    with_config(cfg, |c| match parse_mu(&s, c.users) {
        Ok(mu) => {
            c.mu = mu;
            CsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            CsStatus::InvalidArgument
        }
    })
}

/// Runs the protocol and verifies every user against the oracle. On
/// success `*out` receives a report handle.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_run(cfg: *const CsConfig, out: *mut *mut CsReport) -> CsStatus {
    let (Some(c), false) = (cfg.as_ref(), out.is_null()) else {
        set_error("null argument");
        return CsStatus::NullPointer;
    };
    *out = ptr::null_mut();
    guard(|| match coded_shuffle::run(&c.inner, RunOptions::default()) {
        Ok(o) => {
            *out = Box::into_raw(Box::new(CsReport { inner: o }));
            CsStatus::Ok
        }
        Err(e) => {
            set_error(e.message.clone());
            match e.kind {
                FailureKind::Config => CsStatus::InvalidConfig,
                FailureKind::Verification => CsStatus::VerificationFailed,
                FailureKind::Decode => CsStatus::DecodeFailed,
            }
        }
    })
}

/// # Safety
/// `report` must be null or a handle from [`cs_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_report_free(report: *mut CsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Bit and load counters of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CsLoads {
    pub uplink_bits: u64,
    pub downlink_bits: u64,
    pub padding_bits_up: u64,
    pub padding_bits_down: u64,
    pub l_u: f64,
    pub l_d: f64,
    pub theory_l_u: f64,
    pub theory_l_d: f64,
    pub bound_l_u: f64,
    pub bound_l_d: f64,
    pub delta: f64,
    pub delta_theory: f64,
}

/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_report_loads(report: *const CsReport, out: *mut CsLoads) -> CsStatus {
    let (Some(r), Some(o)) = (report.as_ref(), out.as_mut()) else {
        set_error("null argument");
        return CsStatus::NullPointer;
    };
    let r = &r.inner.report;
    *o = CsLoads {
        uplink_bits: r.uplink_bits,
        downlink_bits: r.downlink_bits,
        padding_bits_up: r.padding_up,
        padding_bits_down: r.padding_down,
        l_u: to_f64(&r.l_u),
        l_d: to_f64(&r.l_d),
        theory_l_u: to_f64(&r.theory_l_u),
        theory_l_d: to_f64(&r.theory_l_d),
        bound_l_u: to_f64(&r.bound_l_u),
        bound_l_d: to_f64(&r.bound_l_d),
        delta: to_f64(&r.delta),
        delta_theory: to_f64(&r.delta_theory),
    };
    CsStatus::Ok
}

/// Number of users whose reduce output matched the oracle.
///
/// # Safety
/// `report` must be a live handle and `users` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_report_verified_users(report: *const CsReport, users: *mut usize) -> CsStatus {
    let (Some(r), Some(u)) = (report.as_ref(), users.as_mut()) else {
        set_error("null argument");
        return CsStatus::NullPointer;
    };
    *u = r.inner.verified_users;
    CsStatus::Ok
}

fn theory_args(mu_num: u64, mu_den: u64) -> Result<Mu, CsStatus> {
    if mu_den == 0 {
        set_error("storage fraction denominator is zero");
        return Err(CsStatus::InvalidArgument);
    }
    Ok(Mu::new(mu_num, mu_den))
}

/// Closed-form centralized loads.
///
/// # Safety
/// `uplink` and `downlink` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cs_theory_centralized(
    users: usize,
    mu_num: u64,
    mu_den: u64,
    uplink: *mut f64,
    downlink: *mut f64,
) -> CsStatus {
    let (Some(u), Some(d)) = (uplink.as_mut(), downlink.as_mut()) else {
        set_error("null argument");
        return CsStatus::NullPointer;
    };
    let mu = match theory_args(mu_num, mu_den) {
        Ok(m) => m,
        Err(s) => return s,
    };
    guard(|| match theory_centralized(users, &exact(mu)) {
        Ok((a, b)) => {
            *u = to_f64(&a);
            *d = to_f64(&b);
            CsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            CsStatus::InvalidArgument
        }
    })
}

/// Closed-form decentralized loads and information loss.
///
/// # Safety
/// `uplink`, `downlink` and `delta` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cs_theory_decentralized(
    users: usize,
    mu_num: u64,
    mu_den: u64,
    uplink: *mut f64,
    downlink: *mut f64,
    delta: *mut f64,
) -> CsStatus {
    let (Some(u), Some(d), Some(l)) = (uplink.as_mut(), downlink.as_mut(), delta.as_mut()) else {
        set_error("null argument");
        return CsStatus::NullPointer;
    };
    let mu = match theory_args(mu_num, mu_den) {
        Ok(m) => m,
        Err(s) => return s,
    };
    guard(|| match theory_decentralized(users, &exact(mu)) {
        Ok(t) => {
            *u = to_f64(&t.uplink);
            *d = to_f64(&t.downlink);
            *l = to_f64(&t.delta);
            CsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            CsStatus::InvalidArgument
        }
    })
}
