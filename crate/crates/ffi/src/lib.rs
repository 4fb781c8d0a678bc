//! C ABI over the simulator: lattice/graph simulations behind opaque
//! handles, plus certificate reduction and verification.
//!
//! Every fallible call returns a [`StimStatus`]; on failure the message is
//! available from [`stim_last_error`] on the same thread. Strings returned
//! through `char **` must be released with [`stim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stimuli_core::ergodicity::{reduce_to_line, verify_certificate, ConfigSnapshot, MoveCertificate, PlaneConfig};
use stimuli_core::lattice::FoodEvent;
use stimuli_core::scenario::{parse_scenario, Event, Simulation};
use stimuli_core::CertificateError;

/// Status codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Scenario = 5,
    Simulation = 6,
    Certificate = 7,
    Panic = 8,
}

/// Agent counters of a simulation.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StimCounts {
    pub agents: u64,
    pub aware: u64,
    pub tokens: u64,
    pub witnesses: u64,
    pub tick: u64,
}

/// Opaque simulation handle.
pub struct StimSim {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type Res<T> = Result<T, (StimStatus, String)>;

fn guard(f: impl FnOnce() -> Res<()>) -> StimStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StimStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            StimStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err((StimStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (StimStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn sim_mut<'a>(p: *mut StimSim) -> Res<&'a mut StimSim> {
    p.as_mut().ok_or((StimStatus::NullPointer, "simulation handle is null".into()))
}

unsafe fn sim_ref<'a>(p: *const StimSim) -> Res<&'a StimSim> {
    p.as_ref().ok_or((StimStatus::NullPointer, "simulation handle is null".into()))
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Res<()> {
    if out.is_null() {
        return Err((StimStatus::NullPointer, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| (StimStatus::Simulation, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn stim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates trial `trial` of a scenario given as TOML text. Relative file
/// references resolve against the working directory.
///
/// # Safety
/// `scenario_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_new(scenario_toml: *const c_char, trial: u64, out: *mut *mut StimSim) -> StimStatus {
    guard(|| {
        if out.is_null() {
            return Err((StimStatus::NullPointer, "output pointer is null".into()));
        }
        let src = text(scenario_toml, "scenario")?;
        let scenario = parse_scenario(src, None).map_err(|e| (StimStatus::Parse, e.to_string()))?;
        let sim = Simulation::new(&scenario, trial).map_err(|e| (StimStatus::Scenario, e.to_string()))?;
        *out = Box::into_raw(Box::new(StimSim { sim }));
        Ok(())
    })
}

/// Releases a simulation; NULL is ignored.
///
/// # Safety
/// `sim` must come from [`stim_sim_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_free(sim: *mut StimSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances by `iterations` iterations, applying scheduled events.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_step(sim: *mut StimSim, iterations: u64) -> StimStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        for _ in 0..iterations {
            s.sim.advance().map_err(|e| (StimStatus::Simulation, e.to_string()))?;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_counts(sim: *const StimSim, out: *mut StimCounts) -> StimStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let out = out.as_mut().ok_or((StimStatus::NullPointer, "output pointer is null".into()))?;
        let w = s.sim.world();
        *out = StimCounts {
            agents: w.agent_count() as u64,
            aware: w.aware_count() as u64,
            tokens: w.token_count() as u64,
            witnesses: w.witness_count() as u64,
            tick: w.iteration(),
        };
        Ok(())
    })
}

/// State tag ("U", "A0", "AA", "AW", "AAW", "AC") of `agent`, as a static
/// string.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_agent_state(sim: *const StimSim, agent: u64, out: *mut *const c_char) -> StimStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if out.is_null() {
            return Err((StimStatus::NullPointer, "output pointer is null".into()));
        }
        let w = s.sim.world();
        if agent >= w.agent_count() as u64 {
            return Err((StimStatus::InvalidArgument, format!("agent {agent} out of range")));
        }
        let tag: &'static str = match w.state(agent as usize).tag() {
            "U" => "U\0",
            "A0" => "A0\0",
            "AA" => "AA\0",
            "AW" => "AW\0",
            "AAW" => "AAW\0",
            _ => "AC\0",
        };
        *out = tag.as_ptr().cast();
        Ok(())
    })
}

/// Lattice snapshot JSON; free with [`stim_string_free`].
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_snapshot_json(sim: *const StimSim, out: *mut *mut c_char) -> StimStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let json = s.sim.snapshot_json().ok_or((StimStatus::InvalidArgument, "snapshots need a lattice scenario".into()))?;
        give_string(out, json)
    })
}

unsafe fn inject(sim: *mut StimSim, ev: Event) -> StimStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        s.sim.inject(&ev).map(|_| ()).map_err(|e| (StimStatus::Simulation, e.to_string()))
    })
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_place_food(sim: *mut StimSim, q: i32, r: i32) -> StimStatus {
    inject(sim, Event::Food(FoodEvent::Place { q, r }))
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_remove_food(sim: *mut StimSim, q: i32, r: i32) -> StimStatus {
    inject(sim, Event::Food(FoodEvent::Remove { q, r }))
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_shift_food(sim: *mut StimSim, from_q: i32, from_r: i32, to_q: i32, to_r: i32) -> StimStatus {
    inject(sim, Event::Food(FoodEvent::Shift { from: [from_q, from_r], to: [to_q, to_r] }))
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_set_lambda(sim: *mut StimSim, lambda: f64) -> StimStatus {
    inject(sim, Event::SetLambda { value: lambda })
}

/// Graph mode: make `agent` a witness (`on != 0`) or not.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stim_sim_set_witness(sim: *mut StimSim, agent: u64, on: i32) -> StimStatus {
    let agent = agent as usize;
    inject(sim, if on != 0 { Event::AddWitness { agent } } else { Event::RemoveWitness { agent } })
}

/// Reduces a configuration (`{"pinned":[q,r],"agents":[[q,r],...]}`) to a
/// straight line; `direction` in 0..=5 fixes the line direction, -1 leaves
/// it free. The certificate JSON is written to `out`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stim_certificate_reduce(config_json: *const c_char, direction: i32, out: *mut *mut c_char) -> StimStatus {
    guard(|| {
        let src = text(config_json, "configuration")?;
        let dir = match direction {
            -1 => None,
            0..=5 => Some(direction as usize),
            d => return Err((StimStatus::InvalidArgument, format!("direction {d} outside -1..=5"))),
        };
        let snap: ConfigSnapshot = serde_json::from_str(src).map_err(|e| (StimStatus::Parse, e.to_string()))?;
        let cfg = PlaneConfig::from_snapshot(&snap).map_err(|e| (StimStatus::InvalidArgument, e.to_string()))?;
        let (cert, _) = reduce_to_line(&cfg, dir).map_err(|e| (StimStatus::Certificate, e.to_string()))?;
        give_string(out, serde_json::to_string(&cert).map_err(|e| (StimStatus::Parse, e.to_string()))?)
    })
}

/// Replays a certificate. On an invalid move `failing_move` (if not NULL)
/// receives its index, otherwise -1.
///
/// # Safety
/// `certificate_json` must be a NUL-terminated string; `failing_move` may
/// be NULL.
#[no_mangle]
pub unsafe extern "C" fn stim_certificate_verify(certificate_json: *const c_char, failing_move: *mut i64) -> StimStatus {
    if !failing_move.is_null() {
        *failing_move = -1;
    }
    guard(|| {
        let src = text(certificate_json, "certificate")?;
        let cert: MoveCertificate = serde_json::from_str(src).map_err(|e| (StimStatus::Parse, e.to_string()))?;
        verify_certificate(&cert).map_err(|e| {
            if let (CertificateError::InvalidMove { index, .. }, false) = (&e, failing_move.is_null()) {
                *failing_move = *index as i64;
            }
            (StimStatus::Certificate, e.to_string())
        })
    })
}

/// Releases a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
