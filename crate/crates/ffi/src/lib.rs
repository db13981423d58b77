//! C ABI over the shop environment, action grammar, scoring and the
//! oracle batch.
//!
//! Conventions: every fallible function returns an `AshStatus`; on failure a
//! message is available from `ash_last_error_message` on the same thread.
//! Handles are opaque and released with their `*_free` function. Strings
//! returned through `char **` out-parameters are owned by the caller and must
//! be released with `ash_string_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use ashprompt::action::{parse_action, Action};
use ashprompt::env::{self, Catalog, GoalSpec, PageState, Purchase};
use ashprompt::eval::{aggregate, Batch, PolicyKind, DEFAULT_BUCKET_EDGES};
use ashprompt::orchestrator::{Limits, Mode};
use ashprompt::prompting::TemplateSet;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AshStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInput = 4,
    IoError = 5,
    EpisodeDone = 6,
    OutOfRange = 7,
    Internal = 8,
}

/// Result of one environment step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AshStepResult {
    pub valid: bool,
    pub done: bool,
    /// Purchase score in [0, 1]; meaningful only when `done`.
    pub score: f64,
}

pub struct AshCatalog {
    inner: Arc<Catalog>,
}

pub struct AshGoals {
    inner: Vec<GoalSpec>,
}

/// One environment episode over a catalog and goal.
pub struct AshSession {
    catalog: Arc<Catalog>,
    goal: GoalSpec,
    state: PageState,
    observation: String,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn fail(status: AshStatus, msg: impl Into<String>) -> AshStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `AshStatus::Internal`.
fn guard(f: impl FnOnce() -> AshStatus) -> AshStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(AshStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, AshStatus> {
    if p.is_null() {
        return Err(fail(AshStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(AshStatus::InvalidUtf8, e.to_string()))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> AshStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            AshStatus::Ok
        }
        Err(_) => fail(AshStatus::Internal, "string contains a nul byte"),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! nonnull {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(AshStatus::NullArgument, concat!("null argument `", stringify!($p), "`"));
        })+
    };
}

/// Message for the last failure on this thread; empty if none. Valid until
/// the next call into this library on the same thread. Do not free.
#[no_mangle]
pub extern "C" fn ash_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ash_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ash_catalog_generate(seed: u64, size: usize, out: *mut *mut AshCatalog) -> AshStatus {
    guard(|| {
        nonnull!(out);
        if size == 0 {
            return fail(AshStatus::InvalidInput, "size must be >= 1");
        }
        let c = env::generate_catalog(seed, size);
        *out = Box::into_raw(Box::new(AshCatalog { inner: Arc::new(c) }));
        AshStatus::Ok
    })
}

/// Loads a catalog from a JSON file.
#[no_mangle]
pub unsafe extern "C" fn ash_catalog_load(path: *const c_char, out: *mut *mut AshCatalog) -> AshStatus {
    guard(|| {
        nonnull!(out);
        let path = tri!(read_str(path));
        match env::load_catalog(std::path::Path::new(path)) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(AshCatalog { inner: Arc::new(c) }));
                AshStatus::Ok
            }
            Err(e @ env::EnvError::Io { .. }) => fail(AshStatus::IoError, e.to_string()),
            Err(e) => fail(AshStatus::ParseError, e.to_string()),
        }
    })
}

/// Serializes the catalog as JSON.
#[no_mangle]
pub unsafe extern "C" fn ash_catalog_to_json(catalog: *const AshCatalog, out: *mut *mut c_char) -> AshStatus {
    guard(|| {
        nonnull!(catalog, out);
        write_string(out, (*catalog).inner.to_json())
    })
}

/// Number of products; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn ash_catalog_len(catalog: *const AshCatalog) -> usize {
    if catalog.is_null() {
        0
    } else {
        (*catalog).inner.len()
    }
}

#[no_mangle]
pub unsafe extern "C" fn ash_catalog_free(catalog: *mut AshCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ash_goals_generate(
    catalog: *const AshCatalog,
    seed: u64,
    count: usize,
    out: *mut *mut AshGoals,
) -> AshStatus {
    guard(|| {
        nonnull!(catalog, out);
        match env::generate_goals(&(*catalog).inner, seed, count) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(AshGoals { inner: g }));
                AshStatus::Ok
            }
            Err(e) => fail(AshStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Loads goals from a JSON file.
#[no_mangle]
pub unsafe extern "C" fn ash_goals_load(path: *const c_char, out: *mut *mut AshGoals) -> AshStatus {
    guard(|| {
        nonnull!(out);
        let path = tri!(read_str(path));
        match env::load_goals(std::path::Path::new(path)) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(AshGoals { inner: g }));
                AshStatus::Ok
            }
            Err(e @ env::EnvError::Io { .. }) => fail(AshStatus::IoError, e.to_string()),
            Err(e) => fail(AshStatus::ParseError, e.to_string()),
        }
    })
}

/// Number of goals; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn ash_goals_len(goals: *const AshGoals) -> usize {
    if goals.is_null() {
        0
    } else {
        (*goals).inner.len()
    }
}

#[no_mangle]
pub unsafe extern "C" fn ash_goals_instruction(
    goals: *const AshGoals,
    index: usize,
    out: *mut *mut c_char,
) -> AshStatus {
    guard(|| {
        nonnull!(goals, out);
        match (&*goals).inner.get(index) {
            Some(g) => write_string(out, g.instruction_text.clone()),
            None => fail(AshStatus::OutOfRange, format!("goal index {index} out of range")),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn ash_goals_free(goals: *mut AshGoals) {
    if !goals.is_null() {
        drop(Box::from_raw(goals));
    }
}

/// Starts an episode on goal `index`. The session keeps its own reference to
/// the catalog, so the catalog handle may be freed first.
#[no_mangle]
pub unsafe extern "C" fn ash_session_new(
    catalog: *const AshCatalog,
    goals: *const AshGoals,
    index: usize,
    out: *mut *mut AshSession,
) -> AshStatus {
    guard(|| {
        nonnull!(catalog, goals, out);
        let Some(goal) = (&*goals).inner.get(index) else {
            return fail(AshStatus::OutOfRange, format!("goal index {index} out of range"));
        };
        let catalog = (*catalog).inner.clone();
        let (state, obs) = env::reset(&catalog, goal);
        *out = Box::into_raw(Box::new(AshSession { catalog, goal: goal.clone(), state, observation: obs.text }));
        AshStatus::Ok
    })
}

/// Text of the latest observation.
#[no_mangle]
pub unsafe extern "C" fn ash_session_observation(session: *const AshSession, out: *mut *mut c_char) -> AshStatus {
    guard(|| {
        nonnull!(session, out);
        write_string(out, (*session).observation.clone())
    })
}

/// Parses `action` and applies it. Unparseable input returns `ParseError`
/// without changing the session; a well-formed but inapplicable action
/// succeeds with `valid = false`.
#[no_mangle]
pub unsafe extern "C" fn ash_session_step(
    session: *mut AshSession,
    action: *const c_char,
    out: *mut AshStepResult,
) -> AshStatus {
    guard(|| {
        nonnull!(session, out);
        let raw = tri!(read_str(action));
        let s = &mut *session;
        let action = match parse_action(raw) {
            Ok(a) => a,
            Err(e) => return fail(AshStatus::ParseError, e.to_string()),
        };
        match env::step(&s.state, &action, &s.catalog, &s.goal) {
            Ok(o) => {
                s.state = o.next_state;
                s.observation = o.observation.text;
                *out = AshStepResult { valid: o.valid, done: o.done, score: o.score.unwrap_or(0.0) };
                AshStatus::Ok
            }
            Err(e @ env::EnvError::SteppedAfterDone) => fail(AshStatus::EpisodeDone, e.to_string()),
            Err(e) => fail(AshStatus::Internal, e.to_string()),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn ash_session_free(session: *mut AshSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Scores a purchase given as JSON `{"product_id": ..., "selected_options": {...}}`
/// against goal `index`.
#[no_mangle]
pub unsafe extern "C" fn ash_score(
    catalog: *const AshCatalog,
    goals: *const AshGoals,
    index: usize,
    purchase_json: *const c_char,
    out: *mut f64,
) -> AshStatus {
    guard(|| {
        nonnull!(catalog, goals, out);
        let text = tri!(read_str(purchase_json));
        let Some(goal) = (&*goals).inner.get(index) else {
            return fail(AshStatus::OutOfRange, format!("goal index {index} out of range"));
        };
        let purchase: Purchase = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => return fail(AshStatus::ParseError, e.to_string()),
        };
        match env::score(&purchase, goal, &(*catalog).inner) {
            Ok(s) => {
                *out = s;
                AshStatus::Ok
            }
            Err(e) => fail(AshStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Parses an action string and writes its canonical form.
#[no_mangle]
pub unsafe extern "C" fn ash_action_canonicalize(raw: *const c_char, out: *mut *mut c_char) -> AshStatus {
    guard(|| {
        nonnull!(out);
        let raw = tri!(read_str(raw));
        match parse_action(raw) {
            Ok(a) => write_string(out, Action::canonicalize(&a)),
            Err(e) => fail(AshStatus::ParseError, e.to_string()),
        }
    })
}

/// Runs the oracle policy on every goal with default limits in a
/// non-summarizing `mode` (`"act"` or `"react"`) and writes the aggregate
/// report as JSON.
#[no_mangle]
pub unsafe extern "C" fn ash_oracle_batch(
    catalog: *const AshCatalog,
    goals: *const AshGoals,
    mode: *const c_char,
    workers: usize,
    out: *mut *mut c_char,
) -> AshStatus {
    guard(|| {
        nonnull!(catalog, goals, out);
        let mode: Mode = match tri!(read_str(mode)).parse() {
            Ok(m) => m,
            Err(e) => return fail(AshStatus::InvalidInput, e),
        };
        if mode.summarizes() {
            return fail(AshStatus::InvalidInput, format!("mode {mode} needs a completion backend"));
        }
        if workers == 0 {
            return fail(AshStatus::InvalidInput, "workers must be >= 1");
        }
        let batch = Batch {
            catalog: (*catalog).inner.clone(),
            goals: (*goals).inner.clone(),
            mode,
            policy: PolicyKind::Oracle,
            limits: Limits::default(),
            templates: Arc::new(TemplateSet::builtin()),
            backend: None,
            params: Default::default(),
            worker_count: workers,
        };
        let episodes = batch.run();
        match aggregate(&episodes, &DEFAULT_BUCKET_EDGES) {
            Ok(r) => write_string(out, serde_json::to_string(&r).expect("report serializes")),
            Err(e) => fail(AshStatus::InvalidInput, e.to_string()),
        }
    })
}
