//! C ABI for `dlc-core`.
//!
//! Every fallible function returns a [`DlcStatus`] and writes its result
//! through an out-pointer, which is left untouched on failure. The message
//! of the last failure on the calling thread is available from
//! [`dlc_last_error`]. Architectures are opaque handles created with
//! [`dlc_architecture_new`] and released with [`dlc_architecture_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dlc_core::optimal::{self, Optimum, Regime, WidthRegimeReport};
use dlc_core::sim::{self, bessel_k_ratio};
use dlc_core::{perturbation, sigma_tilde, theory, Architecture, Error, ModelKind, Phase, Scenario};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DlcStatus {
    Ok = 0,
    InvalidArgument = 1,
    Domain = 2,
    NoPhysicalRoot = 3,
    IllConditioned = 4,
    RegimeAmbiguous = 5,
    NullPointer = 6,
    /// Deep networks with more than one hidden layer cannot be simulated.
    Unsupported = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DlcModel {
    Lr = 0,
    Rf = 1,
    Nn = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DlcPhase {
    UnderSampled = 0,
    Bottlenecked = 1,
    OverSampled = 2,
    Boundary = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DlcRegime {
    WiderAlwaysBetter = 0,
    WidthIrrelevant = 1,
    FiniteOptimum = 2,
    NarrowerAlwaysBetter = 3,
    ShallowerAlwaysBetter = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlcScenario {
    pub alpha: f64,
    pub sigma2: f64,
    pub eta: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlcTheoryResult {
    /// `+inf` at a divergent pole, NaN at a finite one.
    pub epsilon: f64,
    /// Order parameter of a network in the under-sampled phase, else NaN.
    pub z: f64,
    pub phase: DlcPhase,
    /// Location of the pole when `phase` is `Boundary`, else NaN.
    pub pole: f64,
    pub divergent: bool,
    pub multiple_roots: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlcOptimum {
    pub regime: DlcRegime,
    /// Optimal width, or NaN.
    pub width: f64,
    /// Optimal depth range; `depth_lo < depth_hi` marks a tie and both are
    /// -1 when there is no depth answer.
    pub depth_lo: i64,
    pub depth_hi: i64,
    pub sigma_tilde: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlcSimEstimate {
    pub mean: f64,
    pub se: f64,
    pub n_reps: usize,
    pub p: usize,
}

/// Opaque list of hidden-layer width ratios.
pub struct DlcArchitecture(Architecture);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DlcStatus {
    match e {
        Error::InvalidParameter(_) => DlcStatus::InvalidArgument,
        Error::Domain(_) => DlcStatus::Domain,
        Error::NoPhysicalRoot { .. } => DlcStatus::NoPhysicalRoot,
        Error::IllConditioned { .. } => DlcStatus::IllConditioned,
        Error::RegimeAmbiguous(_) => DlcStatus::RegimeAmbiguous,
    }
}

struct Failure(DlcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DlcStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, store its value in `out`, and translate errors and panics.
fn guard<T>(out: *mut T, f: impl FnOnce() -> Result<T, Failure>) -> DlcStatus {
    if out.is_null() {
        set_last_error("output pointer is null");
        return DlcStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            // SAFETY: checked non-null; the caller guarantees it is valid for writes
            unsafe { out.write(v) };
            DlcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            DlcStatus::Panic
        }
    }
}

fn scenario(s: DlcScenario) -> Result<Scenario, Failure> {
    Ok(Scenario::new(s.alpha, s.sigma2, s.eta)?)
}

/// # Safety
/// `arch` must be null or a live handle from [`dlc_architecture_new`].
unsafe fn model(kind: DlcModel, arch: *const DlcArchitecture) -> Result<ModelKind, Failure> {
    let arch = || unsafe { arch.as_ref() }.map(|a| a.0.clone()).ok_or_else(|| null("architecture"));
    Ok(match kind {
        DlcModel::Lr => ModelKind::Lr,
        DlcModel::Rf => ModelKind::Rf(arch()?),
        DlcModel::Nn => ModelKind::Nn(arch()?),
    })
}

fn regime(r: Regime) -> DlcRegime {
    match r {
        Regime::WiderAlwaysBetter => DlcRegime::WiderAlwaysBetter,
        Regime::WidthIrrelevant => DlcRegime::WidthIrrelevant,
        Regime::FiniteOptimum => DlcRegime::FiniteOptimum,
        Regime::NarrowerAlwaysBetter => DlcRegime::NarrowerAlwaysBetter,
        Regime::ShallowerAlwaysBetter => DlcRegime::ShallowerAlwaysBetter,
    }
}

fn optimum(r: WidthRegimeReport) -> DlcOptimum {
    let mut o = DlcOptimum {
        regime: regime(r.regime),
        width: f64::NAN,
        depth_lo: -1,
        depth_hi: -1,
        sigma_tilde: r.sigma_tilde,
    };
    match r.optimum {
        Some(Optimum::Width(g)) => o.width = g,
        Some(Optimum::Depth(ds)) => {
            o.depth_lo = ds.iter().copied().min().map_or(-1, |d| d as i64);
            o.depth_hi = ds.iter().copied().max().map_or(-1, |d| d as i64);
        }
        None => {}
    }
    o
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn dlc_status_name(status: DlcStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        DlcStatus::Ok => b"ok\0",
        DlcStatus::InvalidArgument => b"invalid_argument\0",
        DlcStatus::Domain => b"domain\0",
        DlcStatus::NoPhysicalRoot => b"no_physical_root\0",
        DlcStatus::IllConditioned => b"ill_conditioned\0",
        DlcStatus::RegimeAmbiguous => b"regime_ambiguous\0",
        DlcStatus::NullPointer => b"null_pointer\0",
        DlcStatus::Unsupported => b"unsupported\0",
        DlcStatus::Panic => b"panic\0",
    };
    s.as_ptr().cast()
}

/// Message of the last failure on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dlc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create an architecture from `len` width ratios.
///
/// # Safety
/// `widths` must point to `len` readable doubles and `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_architecture_new(
    widths: *const f64,
    len: usize,
    out: *mut *mut DlcArchitecture,
) -> DlcStatus {
    guard(out, || {
        if widths.is_null() {
            return Err(null("widths"));
        }
        // SAFETY: non-null and `len` elements by contract
        let w = unsafe { std::slice::from_raw_parts(widths, len) }.to_vec();
        let a = Architecture::new(w)?;
        Ok(Box::into_raw(Box::new(DlcArchitecture(a))))
    })
}

/// Release an architecture. Null is ignored.
///
/// # Safety
/// `arch` must be null or a handle from [`dlc_architecture_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn dlc_architecture_free(arch: *mut DlcArchitecture) {
    if !arch.is_null() {
        drop(unsafe { Box::from_raw(arch) });
    }
}

/// Number of hidden layers, or 0 for a null handle.
///
/// # Safety
/// `arch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dlc_architecture_depth(arch: *const DlcArchitecture) -> usize {
    unsafe { arch.as_ref() }.map_or(0, |a| a.0.depth())
}

/// Theoretical error of a model. `arch` may be null for `Lr`.
///
/// # Safety
/// `arch` must be null or a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_epsilon(
    kind: DlcModel,
    arch: *const DlcArchitecture,
    s: DlcScenario,
    out: *mut DlcTheoryResult,
) -> DlcStatus {
    guard(out, || {
        let m = unsafe { model(kind, arch) }?;
        let r = theory::epsilon(&m, &scenario(s)?)?;
        let (phase, pole) = match r.phase {
            Phase::UnderSampled => (DlcPhase::UnderSampled, f64::NAN),
            Phase::Bottlenecked { .. } => (DlcPhase::Bottlenecked, f64::NAN),
            Phase::OverSampled => (DlcPhase::OverSampled, f64::NAN),
            Phase::Boundary { pole } => (DlcPhase::Boundary, pole),
        };
        Ok(DlcTheoryResult {
            epsilon: r.epsilon,
            z: r.z.unwrap_or(f64::NAN),
            phase,
            pole,
            divergent: r.diagnostics.divergent,
            multiple_roots: r.diagnostics.multiple_roots,
        })
    })
}

/// Rescaled prior variance `sigma2 (1 - alpha) / (1 - alpha + eta^2)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_sigma_tilde(s: DlcScenario, out: *mut f64) -> DlcStatus {
    guard(out, || Ok(sigma_tilde(&scenario(s)?)?.value()))
}

/// `K_{nu+1}(x) / K_nu(x)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_bessel_k_ratio(nu: f64, x: f64, out: *mut f64) -> DlcStatus {
    guard(out, || Ok(bessel_k_ratio(nu, x)?))
}

/// Exact RF minus NN error for one hidden layer of width `gamma`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_gap_exact(gamma: f64, s: DlcScenario, out: *mut f64) -> DlcStatus {
    guard(out, || Ok(perturbation::gap_exact_two_layer(gamma, &scenario(s)?)?))
}

/// Optimal common width of an RF model with `depth` hidden layers.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_rf_optimal_width(depth: usize, s: DlcScenario, out: *mut DlcOptimum) -> DlcStatus {
    guard(out, || Ok(optimum(optimal::rf_optimal_width(depth, &scenario(s)?)?)))
}

/// Optimal depth of an RF model with all widths equal to `gamma`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_rf_optimal_depth(gamma: f64, s: DlcScenario, out: *mut DlcOptimum) -> DlcStatus {
    guard(out, || Ok(optimum(optimal::rf_optimal_depth(gamma, &scenario(s)?)?)))
}

/// Direction in which the NN error moves with width.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_nn_width_monotonicity(s: DlcScenario, out: *mut DlcOptimum) -> DlcStatus {
    guard(out, || Ok(optimum(optimal::nn_width_monotonicity(&scenario(s)?)?)))
}

/// Monte Carlo estimate of the error at input dimension `d`, with
/// `p = round(alpha d)` and widths `round(gamma_l d)`.
///
/// # Safety
/// `arch` must be null or a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dlc_simulate(
    kind: DlcModel,
    arch: *const DlcArchitecture,
    s: DlcScenario,
    d: usize,
    n_reps: usize,
    seed: u64,
    out: *mut DlcSimEstimate,
) -> DlcStatus {
    guard(out, || {
        let m = unsafe { model(kind, arch) }?;
        let est = sim::simulate_model(&m, &scenario(s)?, d, n_reps, seed)?.ok_or_else(|| {
            Failure(DlcStatus::Unsupported, "no estimator for networks with several hidden layers".into())
        })?;
        Ok(DlcSimEstimate { mean: est.mean, se: est.se, n_reps: est.n, p: est.p })
    })
}
