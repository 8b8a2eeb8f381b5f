//! C interface to ringsim.
//!
//! Every function returns a [`RingsimStatus`]. On failure the message is
//! available from [`ringsim_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function; strings
//! returned through `char **` are released with [`ringsim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ringsim::analysis::{peak_train_model, PeakTrainParams};
use ringsim::ensemble::{
    probe_trace, run_scenario, Apparatus, ProbeTrace, ScenarioConfig, ScenarioResult,
};
use ringsim::error::Category;
use ringsim::magnetics::{
    characterize_trap, CrossSection, FieldSource, GuideGeometry, TrapOptions,
};
use ringsim::output::{fit_report, to_json, trap_report};
use ringsim::scenario::parse_scenario_str;
use ringsim::{Error, PhysicalConstants, Vec3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Parse = 4,
    Geometry = 5,
    Singularity = 6,
    Numeric = 7,
    Statistics = 8,
    Accuracy = 9,
    Schedule = 10,
    Io = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Parsed scenario.
pub struct RingsimScenario {
    config: ScenarioConfig,
    apparatus: Option<Apparatus>,
}

/// Finished ensemble run with its probe trace.
pub struct RingsimResult {
    result: ScenarioResult,
    trace: Option<ProbeTrace>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RingsimStatus {
    match e.category() {
        Category::InvalidInput => RingsimStatus::InvalidInput,
        Category::Parse => RingsimStatus::Parse,
        Category::Geometry => RingsimStatus::Geometry,
        Category::Singularity => RingsimStatus::Singularity,
        Category::Numeric => RingsimStatus::Numeric,
        Category::Statistics => RingsimStatus::Statistics,
        Category::Accuracy => RingsimStatus::Accuracy,
        Category::Schedule => RingsimStatus::Schedule,
        Category::Io => RingsimStatus::Io,
    }
}

enum Failure {
    Status(RingsimStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RingsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RingsimStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            RingsimStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(RingsimStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(RingsimStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s)
        .map_err(|_| Failure::Status(RingsimStatus::InvalidInput, "string holds NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn scenario<'a>(s: *const RingsimScenario) -> Result<&'a RingsimScenario, Failure> {
    s.as_ref().ok_or_else(|| null("scenario"))
}

/// Last error message on this thread, empty after a successful call. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ringsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn ringsim_version() -> *const c_char {
    static V: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!(),
        };
    V.as_ptr()
}

/// Parse scenario TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringsim_scenario_parse(
    toml: *const c_char,
    out: *mut *mut RingsimScenario,
) -> RingsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = text(toml, "toml")?;
        let file = parse_scenario_str(t, "<ffi>")?;
        file.config.validate()?;
        *out = Box::into_raw(Box::new(RingsimScenario {
            config: file.config,
            apparatus: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`ringsim_scenario_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ringsim_scenario_free(s: *mut RingsimScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Content hash of the scenario as a hex string.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringsim_scenario_hash(
    s: *const RingsimScenario,
    out: *mut *mut c_char,
) -> RingsimStatus {
    guard(|| {
        let s = scenario(s)?;
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(out, s.config.hash())
    })
}

/// Field of the full apparatus at `position` (m) and time `t` (s), written
/// to `field` (T).
///
/// # Safety
/// `s` must be a live scenario handle, `position` and `field` must point to
/// three doubles each.
#[no_mangle]
pub unsafe extern "C" fn ringsim_field(
    s: *mut RingsimScenario,
    position: *const f64,
    t: f64,
    field: *mut f64,
) -> RingsimStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("scenario"))?;
        if position.is_null() || field.is_null() {
            return Err(null("position or field"));
        }
        let p = std::slice::from_raw_parts(position, 3);
        if s.apparatus.is_none() {
            s.apparatus = Some(s.config.apparatus()?);
        }
        let b = s
            .apparatus
            .as_ref()
            .unwrap()
            .field(&Vec3::new(p[0], p[1], p[2]), t)?;
        std::slice::from_raw_parts_mut(field, 3).copy_from_slice(b.as_slice());
        Ok(())
    })
}

/// Trap characterization report as JSON.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringsim_characterize_json(
    s: *const RingsimScenario,
    out: *mut *mut c_char,
) -> RingsimStatus {
    guard(|| {
        let s = scenario(s)?;
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(out, to_json(&trap_report(&s.config)?)?)
    })
}

/// Run the ensemble. Blocks until done.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringsim_simulate(
    s: *const RingsimScenario,
    out: *mut *mut RingsimResult,
) -> RingsimStatus {
    guard(|| {
        let s = scenario(s)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let result = run_scenario(&s.config)?;
        let trace = if s.config.probe.delays.is_empty() {
            None
        } else {
            Some(probe_trace(&result, &s.config.probe)?)
        };
        *out = Box::into_raw(Box::new(RingsimResult { result, trace }));
        Ok(())
    })
}

/// # Safety
/// `r` must come from [`ringsim_simulate`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ringsim_result_free(r: *mut RingsimResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Run summary as JSON.
///
/// # Safety
/// `r` must be a live result handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringsim_result_summary_json(
    r: *const RingsimResult,
    out: *mut *mut c_char,
) -> RingsimStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(out, to_json(&r.result.summary)?)
    })
}

/// Copy the probe trace into caller buffers of `capacity` entries.
/// `len` always receives the trace length; a short buffer returns
/// `RINGSIM_STATUS_BUFFER_TOO_SMALL` without copying, so a first call with `capacity = 0`
/// sizes the buffers.
///
/// # Safety
/// `r` must be a live result handle, `len` valid, and `delays` and `signal`
/// valid for `capacity` doubles when `capacity > 0`.
#[no_mangle]
pub unsafe extern "C" fn ringsim_result_trace(
    r: *const RingsimResult,
    delays: *mut f64,
    signal: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> RingsimStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let t = r
            .trace
            .as_ref()
            .ok_or_else(|| Error::invalid("scenario has no probe delays"))?;
        let n = t.delays.len();
        *len = n;
        if capacity < n {
            return Err(Failure::Status(
                RingsimStatus::BufferTooSmall,
                format!("trace has {n} entries, buffer holds {capacity}"),
            ));
        }
        if delays.is_null() || signal.is_null() {
            return Err(null("delays or signal"));
        }
        std::slice::from_raw_parts_mut(delays, n).copy_from_slice(&t.delays);
        std::slice::from_raw_parts_mut(signal, n).copy_from_slice(&t.signal);
        Ok(())
    })
}

/// Fit the peak-train model to the run's probe trace; report as JSON.
///
/// # Safety
/// `s` and `r` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringsim_result_fit_json(
    s: *const RingsimScenario,
    r: *const RingsimResult,
    out: *mut *mut c_char,
) -> RingsimStatus {
    guard(|| {
        let s = scenario(s)?;
        let r = r.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = r
            .trace
            .as_ref()
            .ok_or_else(|| Error::invalid("scenario has no probe delays"))?;
        give_string(out, to_json(&fit_report(&s.config, t)?)?)
    })
}

/// # Safety
/// `p` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ringsim_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}

/// Static properties of a straight two-wire guide cross-section, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RingsimGuideTrap {
    /// T/m
    pub gradient: f64,
    /// T
    pub saddle_field: f64,
    /// m from the zero
    pub saddle_distance: f64,
    /// K, with the configured moment
    pub depth: f64,
    /// m
    pub loss_radius: f64,
    /// Hz
    pub frequency: f64,
}

/// Characterize a straight guide of wire `separation` (m) carrying `current`
/// (A) for a cloud at `temperature` (K), with the default moment.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ringsim_guide_trap(
    separation: f64,
    current: f64,
    temperature: f64,
    out: *mut RingsimGuideTrap,
) -> RingsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = PhysicalConstants::rb87();
        let g = GuideGeometry::new(separation, current)?;
        let t = characterize_trap(
            &CrossSection::Guide(g),
            &c,
            c.kb() * temperature,
            &TrapOptions::default(),
        )?;
        *out = RingsimGuideTrap {
            gradient: t.gradient_center,
            saddle_field: t.saddle_field,
            saddle_distance: (t.saddle_point - t.zero).norm(),
            depth: t.depth_kelvin,
            loss_radius: t.loss_radius,
            frequency: t.effective_frequency,
        };
        Ok(())
    })
}

/// Peak-train parameters in the order of the fit report.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RingsimPeakTrain {
    pub n0: f64,
    pub t_orb: f64,
    pub sigma0: f64,
    pub sigma_v: f64,
    pub v_bar: f64,
    pub tau: f64,
    pub beta: f64,
    pub tau_fill: f64,
    pub probe_width: f64,
}

/// Evaluate the peak-train model at `n` times.
///
/// # Safety
/// `params` must be valid, `t` and `out` valid for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ringsim_peak_train(
    params: *const RingsimPeakTrain,
    t: *const f64,
    n: usize,
    out: *mut f64,
) -> RingsimStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if n > 0 && (t.is_null() || out.is_null()) {
            return Err(null("t or out"));
        }
        let p = PeakTrainParams::from_vec(&[
            p.n0,
            p.t_orb,
            p.sigma0,
            p.sigma_v,
            p.v_bar,
            p.tau,
            p.beta,
            p.tau_fill,
            p.probe_width,
        ]);
        if n == 0 {
            return Ok(p.validate()?);
        }
        let t = std::slice::from_raw_parts(t, n);
        let out = std::slice::from_raw_parts_mut(out, n);
        for (o, &ti) in out.iter_mut().zip(t) {
            *o = peak_train_model(&p, ti)?;
        }
        Ok(())
    })
}
