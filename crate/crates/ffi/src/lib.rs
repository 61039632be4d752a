//! C ABI over `swarm-rfs`.
//!
//! Every function returns an [`SrfsStatus`]; on failure the message is
//! available from [`srfs_last_error`] on the same thread. Matrices cross the
//! boundary as column-major `double` arrays. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::{DMatrix, DVector};
use swarm_rfs::error::Error;
use swarm_rfs::gaussmix::eval_gaussian;
use swarm_rfs::mateq::{solve_continuous_lyapunov, solve_discrete_lyapunov, solve_sylvester, zoh_discretize};
use swarm_rfs::sim::{export_results, run_scenario, summary_json, LoopMode, ScenarioConfig, ScenarioResult};
use swarm_rfs::sparselqr::{admm_sparsify, centralized_gain, lqr_evaluate, AdmmOptions, FeedbackGain, SparseLqrProblem, TimeMode};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrfsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Solver = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrfsLoopMode {
    TrueState = 0,
    PhdEstimate = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrfsTimeMode {
    Continuous = 0,
    Discrete = 1,
}

/// Centralized ILQR baseline of a scenario run. Missing values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SrfsBaseline {
    pub ilqr_nnz: usize,
    pub ilqr_iterations: usize,
    pub ilqr_converged: bool,
    pub j_c: f64,
    pub distance_reduction: f64,
}

/// One γ of the sweep. When `ok` is false the remaining fields are NaN or 0
/// and the failure text is in [`srfs_last_error`] after the call.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SrfsGammaSummary {
    pub gamma: f64,
    pub ok: bool,
    pub nnz: usize,
    pub nnz_ratio: f64,
    pub j: f64,
    pub j_ratio: f64,
    pub edges: usize,
    pub distance_reduction: f64,
}

pub struct SrfsConfig {
    inner: ScenarioConfig,
}

pub struct SrfsResult {
    inner: ScenarioResult,
}

pub struct SrfsLqrProblem {
    inner: SparseLqrProblem,
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SrfsStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SrfsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            SrfsStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_last_error(&msg);
            SrfsStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(&e.to_string());
            match e {
                Error::Config(_) => SrfsStatus::Config,
                Error::Io(_) => SrfsStatus::Io,
                Error::DimensionMismatch(_) | Error::NonPositiveInput(_) => SrfsStatus::InvalidArgument,
                _ => SrfsStatus::Solver,
            }
        }
        Err(_) => {
            set_last_error("internal panic");
            SrfsStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn read_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure::Arg(format!("{what}: {e}")))
}

unsafe fn read_matrix(p: *const f64, rows: usize, cols: usize, what: &'static str) -> Result<DMatrix<f64>, Failure> {
    let len = rows.checked_mul(cols).ok_or_else(|| Failure::Arg(format!("{what}: size overflow")))?;
    if len == 0 {
        return Ok(DMatrix::zeros(rows, cols));
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(DMatrix::from_column_slice(rows, cols, std::slice::from_raw_parts(p, len)))
}

unsafe fn write_matrix(m: &DMatrix<f64>, out: *mut f64, len: usize, what: &'static str) -> Result<(), Failure> {
    if m.len() == 0 {
        return Ok(());
    }
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    if len < m.len() {
        return Err(Failure::Arg(format!("{what}: buffer holds {len} values, need {}", m.len())));
    }
    ptr::copy_nonoverlapping(m.as_slice().as_ptr(), out, m.len());
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    let slot = as_mut(out, what)?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn store_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let slot = as_mut(out, "out")?;
    *slot = CString::new(s).map_err(|e| Failure::Arg(e.to_string()))?.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next `srfs_*` call on the same thread.
#[no_mangle]
pub extern "C" fn srfs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn srfs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srfs_config_default(out: *mut *mut SrfsConfig) -> SrfsStatus {
    guard(|| store(out, SrfsConfig { inner: ScenarioConfig::default() }, "out"))
}

/// Parse a JSON config; unknown keys are rejected.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srfs_config_from_json(json: *const c_char, out: *mut *mut SrfsConfig) -> SrfsStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        store(out, SrfsConfig { inner: ScenarioConfig::from_json(text)? }, "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srfs_config_load(path: *const c_char, out: *mut *mut SrfsConfig) -> SrfsStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        store(out, SrfsConfig { inner: ScenarioConfig::load(Path::new(path))? }, "out")
    })
}

/// Serialize the config; release the string with [`srfs_string_free`].
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srfs_config_to_json(cfg: *const SrfsConfig, out: *mut *mut c_char) -> SrfsStatus {
    guard(|| {
        let cfg = as_ref(cfg, "cfg")?;
        let text = serde_json::to_string_pretty(&cfg.inner).map_err(|e| Failure::Arg(e.to_string()))?;
        store_string(out, text)
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn srfs_config_set_seed(cfg: *mut SrfsConfig, seed: u64) -> SrfsStatus {
    guard(|| {
        as_mut(cfg, "cfg")?.inner.rng_seed = seed;
        Ok(())
    })
}

/// Replace the γ list; the config is left unchanged if the list is invalid.
///
/// # Safety
/// `cfg` must be a live handle and `gammas` point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn srfs_config_set_gammas(cfg: *mut SrfsConfig, gammas: *const f64, len: usize) -> SrfsStatus {
    guard(|| {
        let cfg = as_mut(cfg, "cfg")?;
        let list = read_matrix(gammas, len, 1, "gammas")?.as_slice().to_vec();
        let candidate = ScenarioConfig { gamma_list: list, ..cfg.inner.clone() };
        candidate.validate()?;
        cfg.inner = candidate;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn srfs_config_set_loop_mode(cfg: *mut SrfsConfig, mode: SrfsLoopMode) -> SrfsStatus {
    guard(|| {
        as_mut(cfg, "cfg")?.inner.loop_mode = match mode {
            SrfsLoopMode::TrueState => LoopMode::TrueState,
            SrfsLoopMode::PhdEstimate => LoopMode::PhdEstimate,
        };
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn srfs_config_free(cfg: *mut SrfsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run ILQR, the γ sweep and the closed-loop rollouts.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srfs_run(cfg: *const SrfsConfig, out: *mut *mut SrfsResult) -> SrfsStatus {
    guard(|| {
        let cfg = as_ref(cfg, "cfg")?;
        store(out, SrfsResult { inner: run_scenario(&cfg.inner)? }, "out")
    })
}

/// # Safety
/// `res` must be null or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_free(res: *mut SrfsResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// # Safety
/// `res` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_baseline(res: *const SrfsResult, out: *mut SrfsBaseline) -> SrfsStatus {
    guard(|| {
        let b = &as_ref(res, "res")?.inner.baseline;
        *as_mut(out, "out")? = SrfsBaseline {
            ilqr_nnz: b.ilqr_nnz,
            ilqr_iterations: b.ilqr_iterations,
            ilqr_converged: b.ilqr_converged,
            j_c: b.j_c.unwrap_or(f64::NAN),
            distance_reduction: b.rollout.distance_reduction(),
        };
        Ok(())
    })
}

/// Number of γ entries; 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_gamma_count(res: *const SrfsResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.entries.len())
}

/// # Safety
/// `res` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_gamma(res: *const SrfsResult, index: usize, out: *mut SrfsGammaSummary) -> SrfsStatus {
    guard(|| {
        let res = as_ref(res, "res")?;
        let out = as_mut(out, "out")?;
        let e = res.inner.entries.get(index).ok_or_else(|| Failure::Arg(format!("index {index} out of range")))?;
        *out = match &e.record {
            Ok(r) => SrfsGammaSummary {
                gamma: e.gamma,
                ok: true,
                nnz: r.nnz,
                nnz_ratio: r.nnz_ratio,
                j: r.j,
                j_ratio: r.j_ratio.unwrap_or(f64::NAN),
                edges: r.edges,
                distance_reduction: r.rollout.distance_reduction(),
            },
            Err(msg) => {
                set_last_error(msg);
                SrfsGammaSummary {
                    gamma: e.gamma,
                    ok: false,
                    nnz: 0,
                    nnz_ratio: f64::NAN,
                    j: f64::NAN,
                    j_ratio: f64::NAN,
                    edges: 0,
                    distance_reduction: f64::NAN,
                }
            }
        };
        Ok(())
    })
}

/// Shape of the gain matrices (controls × states).
///
/// # Safety
/// `res` must be a live handle; `rows` and `cols` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_gain_shape(res: *const SrfsResult, rows: *mut usize, cols: *mut usize) -> SrfsStatus {
    guard(|| {
        let (r, c) = as_ref(res, "res")?.inner.baseline.ilqr_gain.f.shape();
        *as_mut(rows, "rows")? = r;
        *as_mut(cols, "cols")? = c;
        Ok(())
    })
}

/// Copy the polished gain of γ entry `index` (u = −Fx), column-major.
///
/// # Safety
/// `res` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_gain(res: *const SrfsResult, index: usize, out: *mut f64, len: usize) -> SrfsStatus {
    guard(|| {
        let res = as_ref(res, "res")?;
        let e = res.inner.entries.get(index).ok_or_else(|| Failure::Arg(format!("index {index} out of range")))?;
        let r = e.record.as_ref().map_err(|msg| Failure::Arg(format!("γ entry {index} failed: {msg}")))?;
        write_matrix(&r.gain.f, out, len, "out")
    })
}

/// Copy the centralized ILQR static gain (u = −Fx), column-major.
///
/// # Safety
/// `res` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_baseline_gain(res: *const SrfsResult, out: *mut f64, len: usize) -> SrfsStatus {
    guard(|| write_matrix(&as_ref(res, "res")?.inner.baseline.ilqr_gain.f, out, len, "out"))
}

/// Summary JSON; release the string with [`srfs_string_free`].
///
/// # Safety
/// `res` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_summary_json(res: *const SrfsResult, out: *mut *mut c_char) -> SrfsStatus {
    guard(|| store_string(out, summary_json(&as_ref(res, "res")?.inner)?))
}

/// Write all export files into `dir`, creating it if needed.
///
/// # Safety
/// `res` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn srfs_result_export(res: *const SrfsResult, dir: *const c_char) -> SrfsStatus {
    guard(|| {
        let res = as_ref(res, "res")?;
        export_results(&res.inner, Path::new(read_str(dir, "dir")?))?;
        Ok(())
    })
}

/// Solve `AᵀP + PA = −Q` (continuous) or `AᵀPA − P = −Q` (discrete).
///
/// # Safety
/// `a`, `q` and `out` must each hold `n·n` values.
#[no_mangle]
pub unsafe extern "C" fn srfs_solve_lyapunov(
    n: usize,
    a: *const f64,
    q: *const f64,
    mode: SrfsTimeMode,
    out: *mut f64,
) -> SrfsStatus {
    guard(|| {
        let a = read_matrix(a, n, n, "a")?;
        let q = read_matrix(q, n, n, "q")?;
        let p = match mode {
            SrfsTimeMode::Continuous => solve_continuous_lyapunov(&a, &q)?,
            SrfsTimeMode::Discrete => solve_discrete_lyapunov(&a, &q)?,
        };
        write_matrix(&p, out, n * n, "out")
    })
}

/// Solve `MX + XN = C` with `M` m×m, `N` n×n and `C`, `X` m×n.
///
/// # Safety
/// Each pointer must hold the number of values its shape implies.
#[no_mangle]
pub unsafe extern "C" fn srfs_solve_sylvester(
    m: usize,
    n: usize,
    mm: *const f64,
    nn: *const f64,
    c: *const f64,
    out: *mut f64,
) -> SrfsStatus {
    guard(|| {
        let x = solve_sylvester(&read_matrix(mm, m, m, "m")?, &read_matrix(nn, n, n, "n")?, &read_matrix(c, m, n, "c")?)?;
        write_matrix(&x, out, m * n, "out")
    })
}

/// Zero-order-hold discretization of `(Ac, Bc)` with `Ac` n×n, `Bc` n×m.
///
/// # Safety
/// `ac`, `ad` hold `n·n` values; `bc`, `bd` hold `n·m` values.
#[no_mangle]
pub unsafe extern "C" fn srfs_zoh_discretize(
    n: usize,
    m: usize,
    ac: *const f64,
    bc: *const f64,
    dt: f64,
    ad: *mut f64,
    bd: *mut f64,
) -> SrfsStatus {
    guard(|| {
        let (a, b) = zoh_discretize(&read_matrix(ac, n, n, "ac")?, &read_matrix(bc, n, m, "bc")?, dt)?;
        write_matrix(&a, ad, n * n, "ad")?;
        write_matrix(&b, bd, n * m, "bd")
    })
}

/// Density of `N(mean, cov)` at `x` in `dim` dimensions.
///
/// # Safety
/// `x`, `mean` hold `dim` values, `cov` `dim·dim`; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn srfs_eval_gaussian(
    dim: usize,
    x: *const f64,
    mean: *const f64,
    cov: *const f64,
    out: *mut f64,
) -> SrfsStatus {
    guard(|| {
        let x = DVector::from_column_slice(read_matrix(x, dim, 1, "x")?.as_slice());
        let m = DVector::from_column_slice(read_matrix(mean, dim, 1, "mean")?.as_slice());
        let v = eval_gaussian(&x, &m, &read_matrix(cov, dim, dim, "cov")?)?;
        *as_mut(out, "out")? = v;
        Ok(())
    })
}

/// LQR problem with `A` n×n, `B` n×m, `B2` n×p, `Q` n×n and `R` m×m.
///
/// # Safety
/// Each matrix pointer must hold the number of values its shape implies.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn srfs_lqr_problem_new(
    n: usize,
    m: usize,
    p: usize,
    a: *const f64,
    b: *const f64,
    b2: *const f64,
    q: *const f64,
    r: *const f64,
    mode: SrfsTimeMode,
    out: *mut *mut SrfsLqrProblem,
) -> SrfsStatus {
    guard(|| {
        let mode = match mode {
            SrfsTimeMode::Continuous => TimeMode::Continuous,
            SrfsTimeMode::Discrete => TimeMode::Discrete,
        };
        let prob = SparseLqrProblem::new(
            read_matrix(a, n, n, "a")?,
            read_matrix(b, n, m, "b")?,
            read_matrix(b2, n, p, "b2")?,
            read_matrix(q, n, n, "q")?,
            read_matrix(r, m, m, "r")?,
            mode,
        )?;
        store(out, SrfsLqrProblem { inner: prob }, "out")
    })
}

/// # Safety
/// `prob` must be null or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn srfs_lqr_problem_free(prob: *mut SrfsLqrProblem) {
    if !prob.is_null() {
        drop(Box::from_raw(prob));
    }
}

fn gain_dims(prob: &SparseLqrProblem) -> (usize, usize) {
    (prob.b.ncols(), prob.a.nrows())
}

/// Optimal centralized gain (u = −Fx), written as an m×n column-major matrix.
///
/// # Safety
/// `prob` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn srfs_lqr_centralized_gain(prob: *const SrfsLqrProblem, out: *mut f64, len: usize) -> SrfsStatus {
    guard(|| {
        let prob = &as_ref(prob, "prob")?.inner;
        write_matrix(&centralized_gain(prob)?.f, out, len, "out")
    })
}

/// Closed-loop cost `J(F)`; fails if `F` does not stabilize the plant.
///
/// # Safety
/// `prob` must be a live handle, `f` hold m·n values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn srfs_lqr_cost(prob: *const SrfsLqrProblem, f: *const f64, out: *mut f64) -> SrfsStatus {
    guard(|| {
        let prob = &as_ref(prob, "prob")?.inner;
        let (m, n) = gain_dims(prob);
        let j = lqr_evaluate(&read_matrix(f, m, n, "f")?, prob)?.j;
        *as_mut(out, "out")? = j;
        Ok(())
    })
}

/// Sparsity-promoting ADMM with default options from the stabilizing `f0`.
/// Writes the gain restricted to its pattern and the number of nonzeros.
///
/// # Safety
/// `prob` must be a live handle, `f0` hold m·n values, `out` hold `len`
/// values and `nnz` be null or valid.
#[no_mangle]
pub unsafe extern "C" fn srfs_lqr_sparsify(
    prob: *const SrfsLqrProblem,
    gamma: f64,
    f0: *const f64,
    out: *mut f64,
    len: usize,
    nnz: *mut usize,
) -> SrfsStatus {
    guard(|| {
        let prob = &as_ref(prob, "prob")?.inner;
        let (m, n) = gain_dims(prob);
        let start = FeedbackGain::full(read_matrix(f0, m, n, "f0")?);
        let res = admm_sparsify(prob, gamma, &start, &AdmmOptions::default())?;
        write_matrix(&res.gain.f, out, len, "out")?;
        if let Some(slot) = nnz.as_mut() {
            *slot = res.gain.nnz();
        }
        Ok(())
    })
}
