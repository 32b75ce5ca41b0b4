//! C interface to `hamds3`.
//!
//! Graphs and runs are opaque handles owned by the caller and released with
//! the matching `*_free`. Every fallible call returns a [`Hamds3Status`]; on
//! failure `hamds3_last_error` describes it until the next call on the same
//! thread. Vertex ids are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hamds3::graph::Graph;
use hamds3::pipeline::{report_json, run_on_graph, sample, PipelineConfig, Run};
use hamds3::verify::check_hamilton;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hamds3Status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InputError = 3,
    NoCycle = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

/// Opaque graph handle.
pub struct Hamds3Graph {
    inner: Graph,
}

/// Opaque handle to a finished run.
pub struct Hamds3Run {
    inner: Run,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn guard(f: impl FnOnce() -> Result<(), (Hamds3Status, String)>) -> Hamds3Status {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Hamds3Status::Ok,
        Ok(Err((st, msg))) => {
            set_error(msg);
            st
        }
        Err(_) => {
            set_error("internal panic");
            Hamds3Status::Internal
        }
    }
}

fn null(what: &str) -> (Hamds3Status, String) {
    (Hamds3Status::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn hamds3_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn hamds3_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph from `m` edges given as `2m` consecutive vertex ids, in
/// edge order.
///
/// # Safety
/// `edges` must point to `2 * m` readable `uint32_t` values (or be null when
/// `m == 0`); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hamds3_graph_from_edges(
    n: usize,
    edges: *const u32,
    m: usize,
    out: *mut *mut Hamds3Graph,
) -> Hamds3Status {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if edges.is_null() && m > 0 {
            return Err(null("edges"));
        }
        let flat = if m == 0 { &[][..] } else { std::slice::from_raw_parts(edges, 2 * m) };
        let list = flat.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
        let g = Graph::from_edges(n, list).map_err(|e| (Hamds3Status::InputError, e.to_string()))?;
        *out = Box::into_raw(Box::new(Hamds3Graph { inner: g }));
        Ok(())
    })
}

/// Samples a random graph with `n` vertices, `round(c·n)` edges and minimum
/// degree 3.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hamds3_graph_sample(n: usize, c: f64, seed: u64, out: *mut *mut Hamds3Graph) -> Hamds3Status {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !c.is_finite() {
            return Err((Hamds3Status::InvalidArgument, "c must be finite".into()));
        }
        let (g, _, _) = sample(n, c, seed, &PipelineConfig::default())
            .map_err(|e| (Hamds3Status::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(Hamds3Graph { inner: g }));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hamds3_graph_n(g: *const Hamds3Graph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.n())
}

/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hamds3_graph_m(g: *const Hamds3Graph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.m())
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hamds3_graph_free(g: *mut Hamds3Graph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Runs the full pipeline. Algorithmic failure still yields a run handle;
/// inspect it with `hamds3_run_success`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hamds3_run(g: *const Hamds3Graph, seed: u64, out: *mut *mut Hamds3Run) -> Hamds3Status {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let run = run_on_graph(&g.inner, seed, &PipelineConfig::default()).map_err(|e| {
            let st = if e.is_input_error() { Hamds3Status::InputError } else { Hamds3Status::Internal };
            (st, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(Hamds3Run { inner: run }));
        Ok(())
    })
}

/// 1 if the run found a verified Hamilton cycle, 0 otherwise.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hamds3_run_success(r: *const Hamds3Run) -> c_int {
    r.as_ref().is_some_and(|r| r.inner.report.success) as c_int
}

/// Copies the cycle into `buf`. `len` receives the cycle length even when
/// the buffer is too small.
///
/// # Safety
/// `r` must be a live handle, `buf` must hold `cap` values (or be null when
/// `cap == 0`), `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hamds3_run_cycle(r: *const Hamds3Run, buf: *mut u32, cap: usize, len: *mut usize) -> Hamds3Status {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("run"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        let Some(c) = &r.inner.cycle else {
            *len = 0;
            return Err((Hamds3Status::NoCycle, "the run did not find a cycle".into()));
        };
        *len = c.len();
        if cap < c.len() {
            return Err((Hamds3Status::BufferTooSmall, format!("need {} entries", c.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len());
        Ok(())
    })
}

/// The run report as JSON. Release with `hamds3_string_free`; null on error.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hamds3_run_report_json(r: *const Hamds3Run) -> *mut c_char {
    let mut s = ptr::null_mut();
    let st = guard(|| {
        let r = r.as_ref().ok_or_else(|| null("run"))?;
        let json = report_json(&r.inner.report);
        s = CString::new(json).map_err(|e| (Hamds3Status::Internal, e.to_string()))?.into_raw();
        Ok(())
    });
    if st == Hamds3Status::Ok {
        s
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `s` must be null or a string from `hamds3_run_report_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hamds3_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hamds3_run_free(r: *mut Hamds3Run) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// 1 if `seq[0..len]` is a Hamilton cycle of `g`, 0 if not, -1 on a null argument.
///
/// # Safety
/// `g` must be a live handle and `seq` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn hamds3_check_hamilton(g: *const Hamds3Graph, seq: *const u32, len: usize) -> c_int {
    let (Some(g), false) = (g.as_ref(), seq.is_null()) else {
        return -1;
    };
    check_hamilton(&g.inner, std::slice::from_raw_parts(seq, len)) as c_int
}
