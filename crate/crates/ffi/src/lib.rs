//! C ABI for the sparesim toolkit.
//!
//! Conventions:
//! - Every fallible function returns a `sparesim_status` code; `0` is
//!   success. On failure a thread-local message is retrievable with
//!   [`sparesim_last_error`] until the next call on the same thread.
//! - Judgment matrices are opaque handles created by
//!   [`sparesim_matrix_from_json`] and released with
//!   [`sparesim_matrix_free`].
//! - Structured results come back as JSON strings allocated by this
//!   library; release them with [`sparesim_string_free`].
//!
//! The matching header lives at `include/sparesim.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use sparesim::ahp::{self, PairwiseMatrix, WeightMethod};
use sparesim::distfit::{self, Family, ObservationSeries};
use sparesim::simcore::{self, CostRates, DemandModel, InventoryPolicy, LeadTimeModel, SimConfig};

/// Status codes shared with the C header. Keep in sync with
/// `include/sparesim.h`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparesimStatus {
    Ok = 0,
    /// A pointer argument was null or an argument was out of range.
    InvalidArgument = 1,
    /// Input text failed to parse (UTF-8, JSON, or domain validation).
    Parse = 2,
    /// The computation itself reported an error.
    Compute = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let message: String = message.into();
    let sanitized = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
}

fn fail(status: SparesimStatus, message: impl Into<String>) -> SparesimStatus {
    set_error(message);
    status
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn sparesim_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// ABI version of this library; bump on breaking header changes.
#[no_mangle]
pub extern "C" fn sparesim_abi_version() -> u32 {
    1
}

/// Opaque validated judgment matrix.
pub struct SparesimMatrix {
    matrix: PairwiseMatrix,
}

unsafe fn read_utf8<'a>(ptr: *const c_char) -> Result<&'a str, String> {
    if ptr.is_null() {
        return Err("null string argument".into());
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|e| format!("invalid UTF-8: {e}"))
}

/// Parse and validate a judgment matrix from the JSON document form
/// `{"criteria": [...], "matrix": [[...], ...]}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated C string and `out` a valid
/// pointer; on success `*out` owns a handle that must be released with
/// [`sparesim_matrix_free`].
#[no_mangle]
pub unsafe extern "C" fn sparesim_matrix_from_json(
    json: *const c_char,
    out: *mut *mut SparesimMatrix,
) -> SparesimStatus {
    if out.is_null() {
        return fail(SparesimStatus::InvalidArgument, "null output pointer");
    }
    unsafe { *out = ptr::null_mut() };
    let text = match unsafe { read_utf8(json) } {
        Ok(t) => t,
        Err(e) => return fail(SparesimStatus::InvalidArgument, e),
    };
    let doc = match ahp::MatrixDocument::from_json(text) {
        Ok(d) => d,
        Err(e) => return fail(SparesimStatus::Parse, e.to_string()),
    };
    match doc.validate() {
        Ok(matrix) => {
            unsafe { *out = Box::into_raw(Box::new(SparesimMatrix { matrix })) };
            SparesimStatus::Ok
        }
        Err(e) => fail(SparesimStatus::Parse, e.to_string()),
    }
}

/// Release a matrix handle. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer from [`sparesim_matrix_from_json`]
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sparesim_matrix_free(handle: *mut SparesimMatrix) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Dimension of the matrix behind the handle; 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sparesim_matrix_dim(handle: *const SparesimMatrix) -> usize {
    if handle.is_null() {
        return 0;
    }
    unsafe { &*handle }.matrix.dimension()
}

/// Weight extraction methods, mirrored in the header.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparesimWeightMethod {
    Eigenvector = 0,
    ColumnNormalization = 1,
    RowGeometricMean = 2,
}

/// Extract criterion weights into a caller-provided buffer of length
/// `len` (which must equal the matrix dimension).
///
/// # Safety
/// `handle` must be a live handle; `out_weights` must point to at least
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sparesim_matrix_weights(
    handle: *const SparesimMatrix,
    method: SparesimWeightMethod,
    out_weights: *mut f64,
    len: usize,
) -> SparesimStatus {
    if handle.is_null() || out_weights.is_null() {
        return fail(SparesimStatus::InvalidArgument, "null argument");
    }
    let matrix = &unsafe { &*handle }.matrix;
    if len != matrix.dimension() {
        return fail(
            SparesimStatus::InvalidArgument,
            format!(
                "buffer length {len} does not match dimension {}",
                matrix.dimension()
            ),
        );
    }
    let method = match method {
        SparesimWeightMethod::Eigenvector => WeightMethod::Eigenvector,
        SparesimWeightMethod::ColumnNormalization => WeightMethod::ColumnNormalization,
        SparesimWeightMethod::RowGeometricMean => WeightMethod::RowGeometricMean,
    };
    match ahp::compute_weights(matrix, method) {
        Ok(weights) => {
            let out = unsafe { std::slice::from_raw_parts_mut(out_weights, len) };
            out.copy_from_slice(&weights.weights);
            SparesimStatus::Ok
        }
        Err(e) => fail(SparesimStatus::Compute, e.to_string()),
    }
}

/// Consistency diagnostics, mirrored in the header.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparesimConsistency {
    pub lambda_max: f64,
    pub inconsistency_index: f64,
    pub random_index: f64,
    pub inconsistency_ratio: f64,
    /// 1 when the ratio is acceptable (at most 0.1), else 0.
    pub acceptable: u8,
}

/// Consistency diagnostics using eigenvector weights.
///
/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sparesim_matrix_consistency(
    handle: *const SparesimMatrix,
    out: *mut SparesimConsistency,
) -> SparesimStatus {
    if handle.is_null() || out.is_null() {
        return fail(SparesimStatus::InvalidArgument, "null argument");
    }
    let matrix = &unsafe { &*handle }.matrix;
    let weights = match ahp::compute_weights(matrix, WeightMethod::Eigenvector) {
        Ok(w) => w,
        Err(e) => return fail(SparesimStatus::Compute, e.to_string()),
    };
    match ahp::consistency(matrix, &weights) {
        Ok(report) => {
            unsafe {
                *out = SparesimConsistency {
                    lambda_max: report.lambda_max,
                    inconsistency_index: report.inconsistency_index,
                    random_index: report.random_index,
                    inconsistency_ratio: report.inconsistency_ratio,
                    acceptable: u8::from(report.acceptable),
                };
            }
            SparesimStatus::Ok
        }
        Err(e) => fail(SparesimStatus::Compute, e.to_string()),
    }
}

fn to_c_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer returned by a `sparesim_*` function that
/// documents string ownership, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sparesim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Fit every applicable probability family to `values` and rank by the
/// information criterion. On success `*out_json` holds the ranked report:
/// `{"candidates": [...], "skipped": [...]}`.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out_json` must be a
/// valid pointer; the returned string must be released with
/// [`sparesim_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sparesim_fit_series(
    values: *const f64,
    len: usize,
    out_json: *mut *mut c_char,
) -> SparesimStatus {
    if out_json.is_null() {
        return fail(SparesimStatus::InvalidArgument, "null output pointer");
    }
    unsafe { *out_json = ptr::null_mut() };
    if values.is_null() || len == 0 {
        return fail(
            SparesimStatus::InvalidArgument,
            "null or empty values array",
        );
    }
    let slice = unsafe { std::slice::from_raw_parts(values, len) };
    let series = match ObservationSeries::new(slice.to_vec()) {
        Ok(s) => s,
        Err(e) => return fail(SparesimStatus::Parse, e.to_string()),
    };
    match distfit::select_best(&series, &Family::ALL) {
        Ok(report) => {
            let json = serde_json::to_string(&report).expect("report serializes");
            unsafe { *out_json = to_c_string(json) };
            SparesimStatus::Ok
        }
        Err(e) => fail(SparesimStatus::Compute, e.to_string()),
    }
}

#[derive(serde::Deserialize)]
struct SimulateRequest {
    policy: InventoryPolicy,
    demand: DemandModel,
    lead: LeadTimeModel,
    costs: CostRates,
    config: SimConfig,
    #[serde(default = "default_replications")]
    replications: u32,
}

fn default_replications() -> u32 {
    1
}

/// Run replicated simulation from a JSON request:
/// `{"policy": {"rop": R, "roq": Q}, "demand": {...}, "lead": {...},
///   "costs": {...}, "config": {...}, "replications": N}`.
/// On success `*out_json` holds the replication statistics.
///
/// # Safety
/// `request_json` must be a valid NUL-terminated C string and `out_json`
/// a valid pointer; release the result with [`sparesim_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sparesim_simulate(
    request_json: *const c_char,
    out_json: *mut *mut c_char,
) -> SparesimStatus {
    if out_json.is_null() {
        return fail(SparesimStatus::InvalidArgument, "null output pointer");
    }
    unsafe { *out_json = ptr::null_mut() };
    let text = match unsafe { read_utf8(request_json) } {
        Ok(t) => t,
        Err(e) => return fail(SparesimStatus::InvalidArgument, e),
    };
    let request: SimulateRequest = match serde_json::from_str(text) {
        Ok(r) => r,
        Err(e) => return fail(SparesimStatus::Parse, e.to_string()),
    };
    match simcore::replicate(
        request.policy,
        &request.demand,
        &request.lead,
        &request.costs,
        &request.config,
        request.replications,
    ) {
        Ok(stats) => {
            let json = serde_json::to_string(&stats).expect("stats serialize");
            unsafe { *out_json = to_c_string(json) };
            SparesimStatus::Ok
        }
        Err(e) => fail(SparesimStatus::Compute, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstr(text: &str) -> CString {
        CString::new(text).unwrap()
    }

    #[test]
    fn matrix_round_trip_through_the_abi() {
        let json = cstr(r#"{"criteria":["a","b","c"],"matrix":[[1,2,4],[0.5,1,2],[0.25,0.5,1]]}"#);
        let mut handle: *mut SparesimMatrix = ptr::null_mut();
        let status = unsafe { sparesim_matrix_from_json(json.as_ptr(), &mut handle) };
        assert_eq!(status, SparesimStatus::Ok);
        assert_eq!(unsafe { sparesim_matrix_dim(handle) }, 3);

        let mut weights = [0.0f64; 3];
        let status = unsafe {
            sparesim_matrix_weights(
                handle,
                SparesimWeightMethod::Eigenvector,
                weights.as_mut_ptr(),
                3,
            )
        };
        assert_eq!(status, SparesimStatus::Ok);
        assert!((weights[0] - 4.0 / 7.0).abs() < 1e-9);
        assert!((weights[1] - 2.0 / 7.0).abs() < 1e-9);
        assert!((weights[2] - 1.0 / 7.0).abs() < 1e-9);

        let mut report = SparesimConsistency {
            lambda_max: 0.0,
            inconsistency_index: 0.0,
            random_index: 0.0,
            inconsistency_ratio: 0.0,
            acceptable: 0,
        };
        let status = unsafe { sparesim_matrix_consistency(handle, &mut report) };
        assert_eq!(status, SparesimStatus::Ok);
        assert!((report.lambda_max - 3.0).abs() < 1e-9);
        assert_eq!(report.acceptable, 1);
        assert!((report.random_index - 0.58).abs() < 1e-12);

        unsafe { sparesim_matrix_free(handle) };
    }

    #[test]
    fn bad_matrix_reports_parse_error() {
        let json = cstr(r#"{"criteria":["a","b"],"matrix":[[1,2],[0.4,1]]}"#);
        let mut handle: *mut SparesimMatrix = ptr::null_mut();
        let status = unsafe { sparesim_matrix_from_json(json.as_ptr(), &mut handle) };
        assert_eq!(status, SparesimStatus::Parse);
        assert!(handle.is_null());
        let message = unsafe { CStr::from_ptr(sparesim_last_error()) };
        assert!(message.to_str().unwrap().contains("reciprocity"));
    }

    #[test]
    fn wrong_buffer_length_is_invalid_argument() {
        let json = cstr(r#"{"criteria":["a","b"],"matrix":[[1,2],[0.5,1]]}"#);
        let mut handle: *mut SparesimMatrix = ptr::null_mut();
        unsafe { sparesim_matrix_from_json(json.as_ptr(), &mut handle) };
        let mut weights = [0.0f64; 5];
        let status = unsafe {
            sparesim_matrix_weights(
                handle,
                SparesimWeightMethod::Eigenvector,
                weights.as_mut_ptr(),
                5,
            )
        };
        assert_eq!(status, SparesimStatus::InvalidArgument);
        unsafe { sparesim_matrix_free(handle) };
    }

    #[test]
    fn fit_series_returns_ranked_json() {
        let values: Vec<f64> = vec![4.0, 5.0, 6.0, 5.0, 4.0, 7.0, 5.0, 6.0];
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { sparesim_fit_series(values.as_ptr(), values.len(), &mut out) };
        assert_eq!(status, SparesimStatus::Ok);
        let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { sparesim_string_free(out) };
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        let candidates = report["candidates"].as_array().unwrap();
        assert!(candidates.len() >= 2);
        // head of the ranking carries the lowest criterion value
        let best = candidates[0]["bic"].as_f64().unwrap();
        for c in candidates {
            assert!(best <= c["bic"].as_f64().unwrap());
        }
    }

    #[test]
    fn fit_series_rejects_negative_values() {
        let values = [1.0f64, -2.0, 3.0];
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { sparesim_fit_series(values.as_ptr(), values.len(), &mut out) };
        assert_eq!(status, SparesimStatus::Parse);
        assert!(out.is_null());
    }

    #[test]
    fn simulate_round_trip() {
        let request = cstr(
            r#"{
                "policy": {"rop": 0, "roq": 12},
                "demand": {"kind": "constant_monthly", "qty": 1},
                "lead": {"kind": "constant_months", "months": 0},
                "costs": {"holding": 1.0, "ordering": 5.0, "shortage": 100.0},
                "config": {"horizon_years": 1, "initial_on_hand": 12, "seed": 1},
                "replications": 3
            }"#,
        );
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { sparesim_simulate(request.as_ptr(), &mut out) };
        assert_eq!(status, SparesimStatus::Ok);
        let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { sparesim_string_free(out) };
        let stats: serde_json::Value = serde_json::from_str(&text).unwrap();
        // deterministic model: 12 holding + 5 ordering, zero variance
        assert_eq!(stats["total_cost"]["mean"], 17.0);
        assert_eq!(stats["total_cost"]["std_dev"], 0.0);
    }

    #[test]
    fn simulate_rejects_malformed_json() {
        let request = cstr("{not json");
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { sparesim_simulate(request.as_ptr(), &mut out) };
        assert_eq!(status, SparesimStatus::Parse);
    }

    #[test]
    fn abi_version_is_stable() {
        assert_eq!(sparesim_abi_version(), 1);
    }
}
