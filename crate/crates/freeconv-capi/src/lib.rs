//! C interface to the free-convolution engine.
//!
//! Measures and density grids are opaque handles created and released here;
//! every fallible call returns an [`FcStatus`] and, on failure, stores a
//! message retrievable through [`fc_last_error_message`] on the same thread.
//! Array pointers handed out by the density getters borrow their handle and
//! stay valid until that handle is freed.
//!
//! The matching C header lives in `include/freeconv.h` and is regenerated
//! from this file by the build script.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use freeconv::density::{density_grid, DensityGrid};
use freeconv::error::Error;
use freeconv::measure::{JacobiMeasure, MeasureSpec};
use freeconv::subordination::solve_point;
use freeconv::support::{find_support, SupportResult};

/// Result discriminant of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments or measure specifications failed to parse or validate.
    SpecError = 2,
    /// A solver, bracketing or evaluation stage failed.
    NumericsError = 3,
    /// The library caught an internal panic; treat the handle state as lost.
    Panic = 4,
}

/// A complex number passed by value across the boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for FcComplex {
    fn from(z: Complex64) -> Self {
        FcComplex { re: z.re, im: z.im }
    }
}

impl From<FcComplex> for Complex64 {
    fn from(z: FcComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Support interval and square-root edge data of a free convolution.
/// Index 0 of each pair belongs to the lower edge, index 1 to the upper.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcSupport {
    /// Lower endpoint of the support interval.
    pub e_minus: f64,
    /// Upper endpoint of the support interval.
    pub e_plus: f64,
    /// Boundary values of the first subordination function at the edges.
    pub omega_alpha: [f64; 2],
    /// Boundary values of the second subordination function at the edges.
    pub omega_beta: [f64; 2],
    /// Square-root slope coefficients of omega_alpha at the edges.
    pub gamma_alpha: [f64; 2],
    /// Square-root slope coefficients of omega_beta at the edges.
    pub gamma_beta: [f64; 2],
    /// |f - 1| of the edge certificate at each edge.
    pub edge_residuals: [f64; 2],
}

impl From<SupportResult> for FcSupport {
    fn from(s: SupportResult) -> Self {
        FcSupport {
            e_minus: s.e_minus,
            e_plus: s.e_plus,
            omega_alpha: s.omega_alpha,
            omega_beta: s.omega_beta,
            gamma_alpha: s.gamma_alpha,
            gamma_beta: s.gamma_beta,
            edge_residuals: s.edge_residuals,
        }
    }
}

/// A solved subordination point at one spectral parameter.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcSubordination {
    /// The spectral parameter the system was solved at.
    pub z: FcComplex,
    /// First subordination function at z.
    pub omega_alpha: FcComplex,
    /// Second subordination function at z.
    pub omega_beta: FcComplex,
    /// Stieltjes transform of the convolution at z.
    pub m: FcComplex,
    /// Fixed-point iterations spent.
    pub iterations: u64,
    /// Larger defect of the two defining equations at the returned point.
    pub residual: f64,
}

/// Opaque handle to an input measure.
pub struct FcMeasure {
    inner: JacobiMeasure,
}

/// Opaque handle to a tabulated density grid.
pub struct FcDensity {
    inner: DensityGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let owned = CString::new(msg)
        .unwrap_or_else(|_| CString::new(msg.replace('\0', "?")).expect("nul bytes replaced"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn classify(err: &Error) -> FcStatus {
    match err {
        Error::Spec(_) | Error::Invalid(_) => FcStatus::SpecError,
        Error::AtGridIndex { source, .. } => classify(source),
        _ => FcStatus::NumericsError,
    }
}

fn fail(err: Error) -> FcStatus {
    set_last_error(&err.to_string());
    classify(&err)
}

/// Runs an entry point with a panic fence so unwinding never crosses the
/// C boundary.
fn guarded<F: FnOnce() -> FcStatus>(f: F) -> FcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic inside the library");
            FcStatus::Panic
        }
    }
}

macro_rules! require {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_last_error(concat!("argument ", stringify!($ptr), " must not be null"));
            return FcStatus::NullPointer;
        }
    };
}

fn new_measure(result: Result<JacobiMeasure, Error>, out: *mut *mut FcMeasure) -> FcStatus {
    match result {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(FcMeasure { inner })) };
            FcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Version string of the library; static storage, never freed.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Message of the most recent failure on the calling thread. Never null;
/// empty before the first failure. The pointer stays valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn fc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Semicircle law of the given variance.
#[no_mangle]
pub extern "C" fn fc_measure_semicircle(variance: f64, out: *mut *mut FcMeasure) -> FcStatus {
    guarded(|| {
        require!(out);
        new_measure(JacobiMeasure::semicircle(variance), out)
    })
}

/// Arcsine law on [-radius, radius].
#[no_mangle]
pub extern "C" fn fc_measure_arcsine(radius: f64, out: *mut *mut FcMeasure) -> FcStatus {
    guarded(|| {
        require!(out);
        new_measure(JacobiMeasure::arcsine(radius), out)
    })
}

/// Centered Marchenko-Pastur law of the given aspect ratio in (0, 1].
#[no_mangle]
pub extern "C" fn fc_measure_marchenko_pastur(ratio: f64, out: *mut *mut FcMeasure) -> FcStatus {
    guarded(|| {
        require!(out);
        new_measure(JacobiMeasure::marchenko_pastur(ratio), out)
    })
}

/// General Jacobi-type measure on [lower, upper] with edge exponents in
/// (-1, 1) and an optional Chebyshev expansion of the smooth density
/// factor; pass NULL / 0 for the constant factor. The measure is
/// normalized to mass one and centered.
#[no_mangle]
pub extern "C" fn fc_measure_jacobi(
    lower: f64,
    upper: f64,
    t_minus: f64,
    t_plus: f64,
    smooth_cheb: *const f64,
    n_smooth: usize,
    out: *mut *mut FcMeasure,
) -> FcStatus {
    guarded(|| {
        require!(out);
        let smooth = if smooth_cheb.is_null() || n_smooth == 0 {
            vec![1.0]
        } else {
            unsafe { std::slice::from_raw_parts(smooth_cheb, n_smooth) }.to_vec()
        };
        new_measure(JacobiMeasure::new(lower, upper, t_minus, t_plus, smooth), out)
    })
}

/// Builds a measure from its JSON description (same schema the CLI uses).
#[no_mangle]
pub extern "C" fn fc_measure_from_json(json: *const c_char, out: *mut *mut FcMeasure) -> FcStatus {
    guarded(|| {
        require!(json);
        require!(out);
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_last_error("measure JSON is not valid UTF-8");
                return FcStatus::SpecError;
            }
        };
        let built = MeasureSpec::from_json(text).and_then(|spec| spec.build());
        new_measure(built, out)
    })
}

/// Serializes a measure back to JSON. The string must be released with
/// fc_string_free.
#[no_mangle]
pub extern "C" fn fc_measure_to_json(
    measure: *const FcMeasure,
    out: *mut *mut c_char,
) -> FcStatus {
    guarded(|| {
        require!(measure);
        require!(out);
        let json = unsafe { &(*measure).inner }.to_spec().to_json();
        let c = CString::new(json).expect("JSON never contains nul bytes");
        unsafe { *out = c.into_raw() };
        FcStatus::Ok
    })
}

/// Endpoints and variance of one measure; each output may be NULL.
#[no_mangle]
pub extern "C" fn fc_measure_info(
    measure: *const FcMeasure,
    lower: *mut f64,
    upper: *mut f64,
    variance: *mut f64,
) -> FcStatus {
    guarded(|| {
        require!(measure);
        let mu = unsafe { &(*measure).inner };
        if !lower.is_null() {
            unsafe { *lower = mu.lower() };
        }
        if !upper.is_null() {
            unsafe { *upper = mu.upper() };
        }
        if !variance.is_null() {
            unsafe { *variance = mu.variance() };
        }
        FcStatus::Ok
    })
}

/// Stieltjes transform m(z) = integral of d mu(x) / (x - z), defined off
/// the real axis and at real points outside the support.
#[no_mangle]
pub extern "C" fn fc_measure_stieltjes(
    measure: *const FcMeasure,
    z: FcComplex,
    out: *mut FcComplex,
) -> FcStatus {
    guarded(|| {
        require!(measure);
        require!(out);
        match unsafe { &(*measure).inner }.stieltjes(z.into()) {
            Ok(m) => {
                unsafe { *out = m.into() };
                FcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a measure handle. NULL is ignored.
#[no_mangle]
pub extern "C" fn fc_measure_free(measure: *mut FcMeasure) {
    if !measure.is_null() {
        drop(unsafe { Box::from_raw(measure) });
    }
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub extern "C" fn fc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Locates the support interval of the free convolution of the two
/// measures and the square-root data at both edges. `tol` is the energy
/// tolerance of the edge search; 1e-12 is a good default.
#[no_mangle]
pub extern "C" fn fc_find_support(
    mu_a: *const FcMeasure,
    mu_b: *const FcMeasure,
    tol: f64,
    out: *mut FcSupport,
) -> FcStatus {
    guarded(|| {
        require!(mu_a);
        require!(mu_b);
        require!(out);
        let (a, b) = unsafe { (&(*mu_a).inner, &(*mu_b).inner) };
        match find_support(a, b, tol) {
            Ok(sup) => {
                unsafe { *out = sup.into() };
                FcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Solves the subordination system at one point of the open upper
/// half-plane (z.im > 0) to the given residual tolerance.
#[no_mangle]
pub extern "C" fn fc_solve_point(
    mu_a: *const FcMeasure,
    mu_b: *const FcMeasure,
    z: FcComplex,
    tol: f64,
    out: *mut FcSubordination,
) -> FcStatus {
    guarded(|| {
        require!(mu_a);
        require!(mu_b);
        require!(out);
        let (a, b) = unsafe { (&(*mu_a).inner, &(*mu_b).inner) };
        match solve_point(a, b, z.into(), None, tol) {
            Ok(p) => {
                unsafe {
                    *out = FcSubordination {
                        z: p.z.into(),
                        omega_alpha: p.omega_alpha.into(),
                        omega_beta: p.omega_beta.into(),
                        m: p.m_value.into(),
                        iterations: p.iterations as u64,
                        residual: p.residual,
                    };
                }
                FcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Tabulates the density, cdf and moments of the free convolution on a
/// grid of `grid_n` points (at least 16) across its support. `eta` is the
/// spectral offset boundary values are read at (1e-8 is a good default)
/// and `tol` the solver tolerance.
#[no_mangle]
pub extern "C" fn fc_density_build(
    mu_a: *const FcMeasure,
    mu_b: *const FcMeasure,
    grid_n: usize,
    eta: f64,
    tol: f64,
    out: *mut *mut FcDensity,
) -> FcStatus {
    guarded(|| {
        require!(mu_a);
        require!(mu_b);
        require!(out);
        let (a, b) = unsafe { (&(*mu_a).inner, &(*mu_b).inner) };
        match density_grid(a, b, grid_n, eta, tol) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(FcDensity { inner })) };
                FcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of grid points, or 0 for a null handle.
#[no_mangle]
pub extern "C" fn fc_density_len(density: *const FcDensity) -> usize {
    if density.is_null() {
        0
    } else {
        unsafe { &(*density).inner }.x.len()
    }
}

/// Grid abscissas, ascending across the support; borrows the handle.
/// Null for a null handle.
#[no_mangle]
pub extern "C" fn fc_density_x(density: *const FcDensity) -> *const f64 {
    if density.is_null() {
        std::ptr::null()
    } else {
        unsafe { &(*density).inner }.x.as_ptr()
    }
}

/// Density values at the grid abscissas; borrows the handle.
#[no_mangle]
pub extern "C" fn fc_density_rho(density: *const FcDensity) -> *const f64 {
    if density.is_null() {
        std::ptr::null()
    } else {
        unsafe { &(*density).inner }.rho.as_ptr()
    }
}

/// Cumulative distribution values at the grid abscissas; borrows the
/// handle.
#[no_mangle]
pub extern "C" fn fc_density_cdf(density: *const FcDensity) -> *const f64 {
    if density.is_null() {
        std::ptr::null()
    } else {
        unsafe { &(*density).inner }.cdf.as_ptr()
    }
}

/// Support and edge data the grid was built on.
#[no_mangle]
pub extern "C" fn fc_density_support(density: *const FcDensity, out: *mut FcSupport) -> FcStatus {
    guarded(|| {
        require!(density);
        require!(out);
        unsafe { *out = (*density).inner.support.into() };
        FcStatus::Ok
    })
}

/// Mass, mean and variance of the tabulated density; each output may be
/// NULL.
#[no_mangle]
pub extern "C" fn fc_density_moments(
    density: *const FcDensity,
    mass: *mut f64,
    mean: *mut f64,
    variance: *mut f64,
) -> FcStatus {
    guarded(|| {
        require!(density);
        let grid = unsafe { &(*density).inner };
        if !mass.is_null() {
            unsafe { *mass = grid.mass };
        }
        if !mean.is_null() {
            unsafe { *mean = grid.mean };
        }
        if !variance.is_null() {
            unsafe { *variance = grid.variance };
        }
        FcStatus::Ok
    })
}

/// Cumulative distribution at a point of the closed support; points
/// outside it are an error.
#[no_mangle]
pub extern "C" fn fc_density_cdf_at(
    density: *const FcDensity,
    x: f64,
    out: *mut f64,
) -> FcStatus {
    guarded(|| {
        require!(density);
        require!(out);
        match unsafe { &(*density).inner }.cdf_at(x) {
            Ok(v) => {
                unsafe { *out = v };
                FcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a density handle. NULL is ignored.
#[no_mangle]
pub extern "C" fn fc_density_free(density: *mut FcDensity) {
    if !density.is_null() {
        drop(unsafe { Box::from_raw(density) });
    }
}
