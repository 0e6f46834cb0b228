//! C ABI over the `mdi-qsdc` simulator.
//!
//! Configs and reports are opaque heap handles created and freed through this
//! API. Fallible calls return a [`QsdcStatus`]; the message of the most recent
//! failure on the calling thread is available from [`qsdc_last_error`].
//! A protocol abort is not an error: the run succeeds and the report records
//! the abort step.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mdi_qsdc::adversary::AdversaryModel;
use mdi_qsdc::cli::config_from_toml;
use mdi_qsdc::protocol::{ProtocolConfig, SessionReport, Transcript, Variant};
use mdi_qsdc::run_session;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsdcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Parse = 4,
    Protocol = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Values accepted by [`qsdc_config_set_variant`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsdcVariant {
    Full = 0,
    LinearOptics = 1,
    DetQkd = 2,
}

/// Session configuration.
pub struct QsdcConfig {
    inner: ProtocolConfig,
}

/// Finished session: report and transcript.
pub struct QsdcReport {
    report: SessionReport,
    transcript: Transcript,
    config: ProtocolConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let c = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: QsdcStatus, msg: impl ToString) -> QsdcStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> QsdcStatus) -> QsdcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(QsdcStatus::Panic, "internal panic"),
    }
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, QsdcStatus> {
    if s.is_null() {
        return Err(fail(QsdcStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(QsdcStatus::InvalidArgument, "string argument is not UTF-8"))
}

/// Message of the last failed call on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qsdc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn qsdc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New config with defaults (N=128, t0=16, t1=64, thresholds 0.11, honest).
#[no_mangle]
pub extern "C" fn qsdc_config_new() -> *mut QsdcConfig {
    Box::into_raw(Box::new(QsdcConfig {
        inner: ProtocolConfig::default(),
    }))
}

/// Parses TOML config text; on success `*out` owns a new config.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_from_toml(
    toml: *const c_char,
    out: *mut *mut QsdcConfig,
) -> QsdcStatus {
    guard(|| {
        if out.is_null() {
            return fail(QsdcStatus::NullPointer, "out is null");
        }
        let text = match c_str(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match config_from_toml(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QsdcConfig { inner }));
                QsdcStatus::Ok
            }
            Err(e) => fail(QsdcStatus::Parse, e),
        }
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_free(cfg: *mut QsdcConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn with_config(
    cfg: *mut QsdcConfig,
    f: impl FnOnce(&mut ProtocolConfig) -> QsdcStatus,
) -> QsdcStatus {
    match cfg.as_mut() {
        Some(c) => guard(|| f(&mut c.inner)),
        None => fail(QsdcStatus::NullPointer, "config is null"),
    }
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_set_message_len(cfg: *mut QsdcConfig, n: usize) -> QsdcStatus {
    with_config(cfg, |c| {
        c.n_message = n;
        QsdcStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_set_t0(cfg: *mut QsdcConfig, t0: usize) -> QsdcStatus {
    with_config(cfg, |c| {
        c.t0 = t0;
        QsdcStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_set_t1(cfg: *mut QsdcConfig, t1: usize) -> QsdcStatus {
    with_config(cfg, |c| {
        c.t1 = t1;
        QsdcStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_set_seed(cfg: *mut QsdcConfig, seed: u64) -> QsdcStatus {
    with_config(cfg, |c| {
        c.seed = seed;
        QsdcStatus::Ok
    })
}

/// `variant` is one of the `QsdcVariant` values.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_set_variant(cfg: *mut QsdcConfig, variant: u32) -> QsdcStatus {
    with_config(cfg, |c| {
        c.variant = match variant {
            v if v == QsdcVariant::Full as u32 => Variant::FullBell,
            v if v == QsdcVariant::LinearOptics as u32 => Variant::LinearOptics,
            v if v == QsdcVariant::DetQkd as u32 => Variant::DetQkd,
            other => {
                return fail(
                    QsdcStatus::InvalidArgument,
                    format!("unknown variant {other}"),
                )
            }
        };
        QsdcStatus::Ok
    })
}

/// Thresholds are checked when the session runs.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_set_thresholds(
    cfg: *mut QsdcConfig,
    security: c_double,
    integrity: c_double,
) -> QsdcStatus {
    with_config(cfg, |c| {
        c.security_threshold = security;
        c.integrity_threshold = integrity;
        QsdcStatus::Ok
    })
}

/// Sets the adversary from its text form, e.g. `"intercept-resend:pb"`.
///
/// # Safety
/// `cfg` must be a live config handle and `spec` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qsdc_config_set_adversary(
    cfg: *mut QsdcConfig,
    spec: *const c_char,
) -> QsdcStatus {
    with_config(cfg, |c| {
        let text = match c_str(spec) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match text.parse::<AdversaryModel>() {
            Ok(m) => {
                c.adversary = m;
                QsdcStatus::Ok
            }
            Err(e) => fail(QsdcStatus::Parse, e),
        }
    })
}

/// Runs one session. `bits` holds one message bit per byte (only the low bit
/// is used) and must have at least N entries; pass null to draw a message
/// from the seed. On success `*out` owns a new report.
///
/// # Safety
/// `cfg` must be a live config handle, `bits` null or valid for `len` bytes,
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsdc_run(
    cfg: *const QsdcConfig,
    bits: *const u8,
    len: usize,
    out: *mut *mut QsdcReport,
) -> QsdcStatus {
    guard(|| {
        let Some(cfg) = cfg.as_ref() else {
            return fail(QsdcStatus::NullPointer, "config is null");
        };
        if out.is_null() {
            return fail(QsdcStatus::NullPointer, "out is null");
        }
        if let Err(e) = cfg.inner.validate() {
            return fail(QsdcStatus::InvalidConfig, e);
        }
        let message = (!bits.is_null()).then(|| std::slice::from_raw_parts(bits, len));
        match run_session(&cfg.inner, message) {
            Ok((report, transcript)) => {
                *out = Box::into_raw(Box::new(QsdcReport {
                    report,
                    transcript,
                    config: cfg.inner.clone(),
                }));
                QsdcStatus::Ok
            }
            Err(e) => fail(QsdcStatus::Protocol, e),
        }
    })
}

/// # Safety
/// `report` must come from [`qsdc_run`] and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn qsdc_report_free(report: *mut QsdcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// 0 if the session completed, else the protocol step that aborted (3 or 6).
///
/// # Safety
/// `report` must be a live report handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn qsdc_report_abort_step(report: *const QsdcReport) -> u8 {
    report
        .as_ref()
        .and_then(|r| r.report.aborted_at)
        .map_or(0, |s| s.step())
}

/// # Safety
/// `report` must be a live report handle or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn qsdc_report_security_error_rate(report: *const QsdcReport) -> c_double {
    report
        .as_ref()
        .map_or(f64::NAN, |r| r.report.security_error_rate)
}

/// NaN when the integrity check was not reached.
///
/// # Safety
/// `report` must be a live report handle or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn qsdc_report_integrity_error_rate(report: *const QsdcReport) -> c_double {
    report
        .as_ref()
        .and_then(|r| r.report.integrity_error_rate)
        .unwrap_or(f64::NAN)
}

/// Bits the adversary read from the payload.
///
/// # Safety
/// `report` must be a live report handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn qsdc_report_leaked_bits(report: *const QsdcReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.leaked_bits)
}

/// Copies Bob's decoded message (one bit per byte) into `buf`. `*written`
/// receives the message length; if `cap` is too small nothing is copied and
/// `BufferTooSmall` is returned. An aborted session has length 0.
///
/// # Safety
/// `report` must be a live report handle, `buf` valid for `cap` bytes (may be
/// null when `cap` is 0), `written` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsdc_report_decoded(
    report: *const QsdcReport,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> QsdcStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(QsdcStatus::NullPointer, "report is null");
        };
        if written.is_null() {
            return fail(QsdcStatus::NullPointer, "written is null");
        }
        let bits = r
            .report
            .decoded_message
            .as_ref()
            .map_or(&[][..], |b| b.as_slice());
        *written = bits.len();
        if bits.is_empty() {
            return QsdcStatus::Ok;
        }
        if cap < bits.len() || buf.is_null() {
            return fail(
                QsdcStatus::BufferTooSmall,
                format!("need {} bytes, got {cap}", bits.len()),
            );
        }
        ptr::copy_nonoverlapping(bits.as_ptr(), buf, bits.len());
        QsdcStatus::Ok
    })
}

/// Config, report and transcript as a JSON document; free it with
/// [`qsdc_string_free`]. Null on failure.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn qsdc_report_to_json(report: *const QsdcReport) -> *mut c_char {
    let Some(r) = report.as_ref() else {
        set_error("report is null");
        return ptr::null_mut();
    };
    let doc = serde_json::json!({
        "schema": mdi_qsdc::cli::REPORT_SCHEMA,
        "config": r.config,
        "report": r.report,
        "transcript": r.transcript,
    });
    match CString::new(doc.to_string()) {
        Ok(s) => s.into_raw(),
        Err(e) => {
            set_error(e);
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn qsdc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
