//! C ABI over `covmarket`.
//!
//! Markets and equilibria are opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! `CmStatus`; on failure `cm_last_error` gives a message for the calling
//! thread. Rationals cross the boundary as `p/q` strings or as `int64_t`
//! numerator and denominator pairs.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use covmarket::cli::solve_instance;
use covmarket::format::{parse_equilibrium, parse_instance, write_equilibrium, EquilibriumRecord};
use covmarket::market_model::{parse_rational, MarketInstance};
use covmarket::verifier::{check_price_equilibrium, verify_equilibrium};
use num::ToPrimitive;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInstance = 4,
    Solver = 5,
    OutOfRange = 6,
    Overflow = 7,
    Panic = 8,
}

/// A parsed, validated market.
pub struct CmMarket {
    inst: MarketInstance,
}

/// An equilibrium of a market, with its text form cached.
pub struct CmEquilibrium {
    record: EquilibriumRecord,
    text: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: CmStatus, msg: impl Into<String>) -> CmStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `CmStatus::Panic`.
fn guard(f: impl FnOnce() -> CmStatus) -> CmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CmStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, CmStatus> {
    if p.is_null() {
        return Err(fail(CmStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CmStatus::InvalidUtf8, "string is not UTF-8"))
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn cm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a market from instance text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_market_parse(text: *const c_char, out: *mut *mut CmMarket) -> CmStatus {
    guard(|| {
        if out.is_null() {
            return fail(CmStatus::NullPointer, "null output pointer");
        }
        let src = match str_arg(text) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let inst = match parse_instance(src) {
            Ok(i) => i,
            Err(e) => return fail(CmStatus::Parse, e.to_string()),
        };
        if let Err(e) = inst.validate() {
            return fail(CmStatus::InvalidInstance, e.to_string());
        }
        *out = Box::into_raw(Box::new(CmMarket { inst }));
        CmStatus::Ok
    })
}

/// # Safety
/// `market` must come from `cm_market_parse` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cm_market_free(market: *mut CmMarket) {
    if !market.is_null() {
        drop(Box::from_raw(market));
    }
}

/// # Safety
/// `market` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_market_num_agents(market: *const CmMarket) -> usize {
    market.as_ref().map_or(0, |m| m.inst.num_agents())
}

/// # Safety
/// `market` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_market_num_goods(market: *const CmMarket) -> usize {
    market.as_ref().map_or(0, |m| m.inst.num_goods())
}

/// Computes an equilibrium. Single-machine markets use the scheduling
/// solver unless `force_general` is set.
///
/// # Safety
/// `market` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cm_solve(market: *const CmMarket, force_general: bool, out: *mut *mut CmEquilibrium) -> CmStatus {
    guard(|| {
        let (Some(m), false) = (market.as_ref(), out.is_null()) else {
            return fail(CmStatus::NullPointer, "null argument");
        };
        let record = match solve_instance(&m.inst, force_general) {
            Ok(s) => s.record(),
            Err(e) => return fail(CmStatus::Solver, e),
        };
        let text = CString::new(write_equilibrium(&m.inst, &record)).expect("no NUL in output");
        *out = Box::into_raw(Box::new(CmEquilibrium { record, text }));
        CmStatus::Ok
    })
}

/// # Safety
/// `eq` must come from `cm_solve` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cm_equilibrium_free(eq: *mut CmEquilibrium) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// Equilibrium in the text format; owned by the handle.
///
/// # Safety
/// `eq` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cm_equilibrium_text(eq: *const CmEquilibrium) -> *const c_char {
    eq.as_ref().map_or(ptr::null(), |e| e.text.as_ptr())
}

/// Price of good `good` as `num / den`.
///
/// # Safety
/// `eq` must be a live handle; `num` and `den` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cm_equilibrium_price(eq: *const CmEquilibrium, good: usize, num: *mut i64, den: *mut i64) -> CmStatus {
    guard(|| {
        let Some(e) = eq.as_ref() else {
            return fail(CmStatus::NullPointer, "null equilibrium");
        };
        if num.is_null() || den.is_null() {
            return fail(CmStatus::NullPointer, "null output pointer");
        }
        let Some(p) = e.record.prices.get(good) else {
            return fail(CmStatus::OutOfRange, format!("good index {good}"));
        };
        match (p.numer().to_i64(), p.denom().to_i64()) {
            (Some(n), Some(d)) => {
                *num = n;
                *den = d;
                CmStatus::Ok
            }
            _ => fail(CmStatus::Overflow, "price does not fit in int64_t"),
        }
    })
}

/// Runs the equilibrium checks on equilibrium text; `passed` receives the verdict.
///
/// # Safety
/// `market` must be a live handle, `eq_text` NUL-terminated, `passed` valid.
#[no_mangle]
pub unsafe extern "C" fn cm_verify(market: *const CmMarket, eq_text: *const c_char, passed: *mut bool) -> CmStatus {
    guard(|| {
        let (Some(m), false) = (market.as_ref(), passed.is_null()) else {
            return fail(CmStatus::NullPointer, "null argument");
        };
        let src = match str_arg(eq_text) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let rec = match parse_equilibrium(&m.inst, src) {
            Ok(r) => r,
            Err(e) => return fail(CmStatus::Parse, e.to_string()),
        };
        match verify_equilibrium(&m.inst, &rec.allocation, &rec.prices) {
            Ok(r) => {
                *passed = r.passed();
                CmStatus::Ok
            }
            Err(e) => fail(CmStatus::InvalidInstance, e.to_string()),
        }
    })
}

/// Decides whether comma-separated `prices` are equilibrium prices.
///
/// # Safety
/// `market` must be a live handle, `prices` NUL-terminated, `is_equilibrium` valid.
#[no_mangle]
pub unsafe extern "C" fn cm_check_price(market: *const CmMarket, prices: *const c_char, is_equilibrium: *mut bool) -> CmStatus {
    guard(|| {
        let (Some(m), false) = (market.as_ref(), is_equilibrium.is_null()) else {
            return fail(CmStatus::NullPointer, "null argument");
        };
        let src = match str_arg(prices) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let parsed: Option<Vec<_>> = src.split(',').map(|t| parse_rational(t.trim())).collect();
        let Some(p) = parsed else {
            return fail(CmStatus::Parse, format!("bad price list `{src}`"));
        };
        match check_price_equilibrium(&m.inst, &p) {
            Ok(v) => {
                *is_equilibrium = v.is_some();
                CmStatus::Ok
            }
            Err(e) => fail(CmStatus::OutOfRange, e.to_string()),
        }
    })
}
