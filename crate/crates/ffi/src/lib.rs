//! C ABI for kkwave.
//!
//! Every fallible function returns a [`KkStatus`]; on failure the message is
//! kept per thread and read with [`kk_last_error`]. Variable-length results
//! are returned through opaque handles that the caller releases with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use kkwave::continuation::cycles::{cycle_from_hopf, continue_cycle_fixed_period, CycleFamily, CycleOptions, CycleStability};
use kkwave::continuation::hopf::{continue_hopf, hopf_point_at, hopf_policy, BtPoint, HopfCurve, HopfPoint};
use kkwave::equilibria::{self, Equilibrium, EquilibriumKind, FoldBranch, FoldCurveTrace, ThetaPolicy};
use kkwave::model::{ModelParams, Param};
use kkwave::{export, normalforms, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KkStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Precondition = 3,
    NearBt = 4,
    NoConvergence = 5,
    Bracket = 6,
    Instability = 7,
    Config = 8,
    Io = 9,
    OutOfRange = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for KkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => KkStatus::Domain,
            Error::Precondition(_) => KkStatus::Precondition,
            Error::NearBt { .. } => KkStatus::NearBt,
            Error::NoConvergence { .. } => KkStatus::NoConvergence,
            Error::Bracket(_) => KkStatus::Bracket,
            Error::Instability { .. } => KkStatus::Instability,
            Error::Config(_) | Error::Json(_) => KkStatus::Config,
            Error::Io(_) => KkStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Run `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> KkStatus
where
    F: FnOnce() -> Result<(), (KkStatus, String)>,
{
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            KkStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            KkStatus::Panic
        }
    }
}

fn lift<T>(r: kkwave::Result<T>) -> Result<T, (KkStatus, String)> {
    r.map_err(|e| (KkStatus::from(&e), e.to_string()))
}

fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (KkStatus, String)> {
    // SAFETY: the caller guarantees that a non-null `p` points to writable storage for `T`.
    unsafe { p.as_mut() }.ok_or_else(|| (KkStatus::NullPointer, format!("`{name}` is null")))
}

fn handle_ref<'a, T>(p: *const T) -> Result<&'a T, (KkStatus, String)> {
    // SAFETY: non-null handles were created by this library and not yet freed.
    unsafe { p.as_ref() }.ok_or_else(|| (KkStatus::NullPointer, "handle is null".into()))
}

fn index<T>(items: &[T], i: usize) -> Result<&T, (KkStatus, String)> {
    items
        .get(i)
        .ok_or_else(|| (KkStatus::OutOfRange, format!("index {i} out of range (length {})", items.len())))
}

/// Copy `s` with a terminating NUL into `buf` of `len` bytes. Returns the
/// number of bytes needed, including the NUL.
fn copy_str(s: &str, buf: *mut c_char, len: usize) -> usize {
    let need = s.len() + 1;
    if !buf.is_null() && len >= need {
        // SAFETY: `buf` holds at least `need` bytes.
        unsafe {
            ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
            *buf.add(s.len()) = 0;
        }
    }
    need
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kk_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains a NUL"),
    };
    V.as_ptr()
}

/// Copy the calling thread's last error message into `buf` (`len` bytes).
/// Returns the size needed including the NUL; nothing is written when `len`
/// is too small.
#[no_mangle]
pub extern "C" fn kk_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_str(&e.borrow(), buf, len))
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KkCusp {
    pub q_g: f64,
    pub v_g: f64,
    pub v_c: f64,
    pub theta_bt: f64,
    pub ve3: f64,
    pub residual: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KkDbt {
    pub a3: f64,
    pub b2: f64,
    pub saddle_case: bool,
}

/// Cusp point `K` of the fold curve.
///
/// # Safety
/// `out` must be null or point to writable storage for a `KkCusp`.
#[no_mangle]
pub unsafe extern "C" fn kk_cusp_point(out: *mut KkCusp) -> KkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let k = lift(equilibria::cusp_point())?;
        *out = KkCusp {
            q_g: k.q_g,
            v_g: k.v_g,
            v_c: k.v_c,
            theta_bt: k.theta_bt,
            ve3: k.ve3,
            residual: k.residual,
        };
        Ok(())
    })
}

/// Degenerate Takens-Bogdanov coefficients at the cusp.
///
/// # Safety
/// `out` must be null or point to writable storage for a `KkDbt`.
#[no_mangle]
pub unsafe extern "C" fn kk_dbt_coefficients(out: *mut KkDbt) -> KkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let d = lift(equilibria::cusp_point().and_then(|k| normalforms::dbt_coefficients(&k)))?;
        *out = KkDbt {
            a3: d.a3,
            b2: d.b2,
            saddle_case: d.saddle_case,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KkEquilibriumKind {
    Saddle = 0,
    StableNode = 1,
    UnstableNode = 2,
    StableFocus = 3,
    UnstableFocus = 4,
    NonHyperbolic = 5,
}

impl From<EquilibriumKind> for KkEquilibriumKind {
    fn from(k: EquilibriumKind) -> Self {
        match k {
            EquilibriumKind::Saddle => Self::Saddle,
            EquilibriumKind::StableNode => Self::StableNode,
            EquilibriumKind::UnstableNode => Self::UnstableNode,
            EquilibriumKind::StableFocus => Self::StableFocus,
            EquilibriumKind::UnstableFocus => Self::UnstableFocus,
            EquilibriumKind::NonHyperbolic => Self::NonHyperbolic,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KkEquilibrium {
    pub v_c: f64,
    pub kind: KkEquilibriumKind,
    pub l1_re: f64,
    pub l1_im: f64,
    pub l2_re: f64,
    pub l2_im: f64,
    /// Trace of the linearization.
    pub b: f64,
    pub c: f64,
    /// `v_e'(v_c)`.
    pub ve1: f64,
    /// `v_e(v_c) - v_c`.
    pub residual: f64,
}

impl From<&Equilibrium> for KkEquilibrium {
    fn from(e: &Equilibrium) -> Self {
        Self {
            v_c: e.v_c,
            kind: e.kind.into(),
            l1_re: e.eigenvalues[0].re,
            l1_im: e.eigenvalues[0].im,
            l2_re: e.eigenvalues[1].re,
            l2_im: e.eigenvalues[1].im,
            b: e.b,
            c: e.c,
            ve1: e.ve1,
            residual: e.residual,
        }
    }
}

/// Opaque list of equilibria.
pub struct KkEquilibria(Vec<Equilibrium>);

/// All critical points at `(theta0, q_g, v_g)` with the standard constants.
///
/// # Safety
/// `out` must be null or point to writable storage for a handle pointer.
#[no_mangle]
pub unsafe extern "C" fn kk_equilibria_find(theta0: f64, q_g: f64, v_g: f64, out: *mut *mut KkEquilibria) -> KkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let p = lift(ModelParams::standard(theta0, q_g, v_g))?;
        let eqs = lift(equilibria::find_equilibria(&p, equilibria::default_interval(&p)))?;
        *out = Box::into_raw(Box::new(KkEquilibria(eqs)));
        Ok(())
    })
}

/// Number of equilibria in `h` (0 for a null handle).
///
/// # Safety
/// `h` must be null or a live handle from [`kk_equilibria_find`].
#[no_mangle]
pub unsafe extern "C" fn kk_equilibria_len(h: *const KkEquilibria) -> usize {
    h.as_ref().map_or(0, |h| h.0.len())
}

/// # Safety
/// `h` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_equilibria_get(h: *const KkEquilibria, i: usize, out: *mut KkEquilibrium) -> KkStatus {
    guard(|| {
        let h = handle_ref(h)?;
        let out = out_ref(out, "out")?;
        *out = index(&h.0, i)?.into();
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live handle, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn kk_equilibria_free(h: *mut KkEquilibria) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// First Lyapunov coefficient at `(q_g, v_g)`, evaluated at the interior
/// equilibrium (returned in `v_c`) with `theta0 = (v_c + v_g)^2`, by the
/// closed form and by the normal-form coefficients.
///
/// # Safety
/// `v_c`, `closed_form` and `via_g` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_lyapunov(q_g: f64, v_g: f64, v_c: *mut f64, closed_form: *mut f64, via_g: *mut f64) -> KkStatus {
    guard(|| {
        let out_vc = out_ref(v_c, "v_c")?;
        let a = out_ref(closed_form, "closed_form")?;
        let b = out_ref(via_g, "via_g")?;
        let p = lift(ModelParams::standard(1.0, q_g, v_g))?;
        let e = lift(equilibria::interior_equilibrium(&p))?
            .ok_or_else(|| (KkStatus::Domain, format!("no interior equilibrium with v_e' > 1 at ({q_g}, {v_g})")))?;
        let p = p.with_theta0((e.v_c + v_g).powi(2));
        *a = lift(normalforms::lyapunov_l1(&p, e.v_c))?;
        *b = lift(normalforms::lyapunov_l1_via_g(&p, e.v_c))?.ell1;
        *out_vc = e.v_c;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KkBranch {
    GammaPlus = 0,
    GammaMinus = 1,
}

impl From<FoldBranch> for KkBranch {
    fn from(b: FoldBranch) -> Self {
        match b {
            FoldBranch::UpperGammaPlus => Self::GammaPlus,
            FoldBranch::LowerGammaMinus => Self::GammaMinus,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KkHopfPoint {
    pub q_g: f64,
    pub v_g: f64,
    pub v_c: f64,
    pub omega0: f64,
    /// NaN where `omega0` is too small for a meaningful value.
    pub ell1: f64,
    pub residual: f64,
}

impl From<&HopfPoint> for KkHopfPoint {
    fn from(h: &HopfPoint) -> Self {
        Self {
            q_g: h.q_g,
            v_g: h.v_g,
            v_c: h.v_c,
            omega0: h.omega0,
            ell1: h.ell1.unwrap_or(f64::NAN),
            residual: h.residual,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KkBtPoint {
    pub q_g: f64,
    pub v_g: f64,
    pub v_c: f64,
    pub theta0: f64,
    pub branch: KkBranch,
}

impl From<&BtPoint> for KkBtPoint {
    fn from(b: &BtPoint) -> Self {
        Self {
            q_g: b.q_g,
            v_g: b.v_g,
            v_c: b.v_c,
            theta0: b.theta0,
            branch: b.branch.into(),
        }
    }
}

/// Opaque traced Hopf curve.
pub struct KkHopfCurve(HopfCurve);

fn store_curve(out: &mut *mut KkHopfCurve, r: kkwave::Result<HopfCurve>) -> Result<(), (KkStatus, String)> {
    *out = Box::into_raw(Box::new(KkHopfCurve(lift(r)?)));
    Ok(())
}

/// Hopf curve started at the `gamma-` Takens-Bogdanov point at `q_g`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_hopf_from_bt(q_g: f64, max_steps: usize, out: *mut *mut KkHopfCurve) -> KkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let trace = lift(FoldCurveTrace::new(q_g.min(0.02)))?;
        let (v_g, v_c, _) = lift(trace.at(q_g, FoldBranch::LowerGammaMinus))?;
        store_curve(out, continue_hopf((q_g, v_g, v_c), hopf_policy(), max_steps))
    })
}

/// Hopf curve through the point at `(theta0, q_g)`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_hopf_through(theta0: f64, q_g: f64, max_steps: usize, out: *mut *mut KkHopfCurve) -> KkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let h = lift(hopf_point_at(theta0, q_g))?;
        store_curve(out, continue_hopf((h.q_g, h.v_g, h.v_c), hopf_policy(), max_steps))
    })
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kk_hopf_len(h: *const KkHopfCurve) -> usize {
    h.as_ref().map_or(0, |h| h.0.points.len())
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kk_hopf_gh_count(h: *const KkHopfCurve) -> usize {
    h.as_ref().map_or(0, |h| h.0.gh.len())
}

/// # Safety
/// `h` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_hopf_point(h: *const KkHopfCurve, i: usize, out: *mut KkHopfPoint) -> KkStatus {
    guard(|| {
        let h = handle_ref(h)?;
        let out = out_ref(out, "out")?;
        *out = index(&h.0.points, i)?.into();
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_hopf_gh(h: *const KkHopfCurve, i: usize, out: *mut KkHopfPoint) -> KkStatus {
    guard(|| {
        let h = handle_ref(h)?;
        let out = out_ref(out, "out")?;
        *out = index(&h.0.gh, i)?.into();
        Ok(())
    })
}

/// Endpoint of the curve: `which = 0` for the start, `1` for the end.
/// Fails with `OutOfRange` when that end is not a BT point.
///
/// # Safety
/// `h` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_hopf_bt(h: *const KkHopfCurve, which: u32, out: *mut KkBtPoint) -> KkStatus {
    guard(|| {
        let h = handle_ref(h)?;
        let out = out_ref(out, "out")?;
        let bt = match which {
            0 => h.0.bt_start,
            1 => h.0.bt_end,
            _ => None,
        };
        let bt = bt.ok_or_else(|| (KkStatus::OutOfRange, format!("no BT point at end {which}")))?;
        *out = (&bt).into();
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live handle, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn kk_hopf_free(h: *mut KkHopfCurve) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KkCycleInfo {
    pub q_g: f64,
    pub v_g: f64,
    pub period: f64,
    pub amplitude: f64,
    pub floquet_multiplier: f64,
    pub closure: f64,
    pub stable: bool,
}

/// Opaque fixed-period cycle family.
pub struct KkCycleFamily(CycleFamily);

/// Family of cycles of period `period` grown from the Hopf point at
/// `(theta0, q_g)` for at most `max_steps` steps.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_cycle_family(theta0: f64, q_g: f64, period: f64, max_steps: usize, out: *mut *mut KkCycleFamily) -> KkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let opts = CycleOptions::default();
        let h = lift(hopf_point_at(theta0, q_g))?;
        let p = lift(h.params())?;
        let seed = lift(cycle_from_hopf(&p, h.v_c, Param::VG, &opts))?;
        let fam = lift(continue_cycle_fixed_period(&seed, period, max_steps, &opts))?;
        *out = Box::into_raw(Box::new(KkCycleFamily(fam)));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kk_cycle_family_len(h: *const KkCycleFamily) -> usize {
    h.as_ref().map_or(0, |h| h.0.cycles.len())
}

/// # Safety
/// `h` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_cycle_info(h: *const KkCycleFamily, i: usize, out: *mut KkCycleInfo) -> KkStatus {
    guard(|| {
        let h = handle_ref(h)?;
        let out = out_ref(out, "out")?;
        let c = index(&h.0.cycles, i)?;
        *out = KkCycleInfo {
            q_g: c.params.q_g,
            v_g: c.params.v_g,
            period: c.period,
            amplitude: c.amplitude(),
            floquet_multiplier: c.floquet_multiplier,
            closure: c.closure,
            stable: c.stability == CycleStability::Stable,
        };
        Ok(())
    })
}

/// JSON export of member `i` (the format read by `kkwave pde --cycle`),
/// written NUL-terminated into `buf`. `needed` receives the size including
/// the NUL; the status is `BufferTooSmall` when `len` is less than that.
///
/// # Safety
/// `h` must be null or a live handle; `buf` must hold `len` bytes or be null;
/// `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kk_cycle_json(h: *const KkCycleFamily, i: usize, buf: *mut c_char, len: usize, needed: *mut usize) -> KkStatus {
    guard(|| {
        let h = handle_ref(h)?;
        let needed = out_ref(needed, "needed")?;
        let c = index(&h.0.cycles, i)?;
        let header = export::Header::new("none", ThetaPolicy::Fixed(c.params.theta0).label());
        let text = lift(export::cycle_json(&header, c))?;
        *needed = copy_str(&text, buf, len);
        if len < *needed {
            return Err((KkStatus::BufferTooSmall, format!("{} bytes needed", *needed)));
        }
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a live handle, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn kk_cycle_family_free(h: *mut KkCycleFamily) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
