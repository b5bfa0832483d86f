//! C ABI over `ttpar`.
//!
//! Every fallible function returns a [`TtparStatus`]; on failure a message
//! is kept per thread and read with [`ttpar_last_error`]. Tensors are opaque
//! handles created by the library and released with [`ttpar_tensor_free`].
//! Panics never cross the boundary; they surface as `TTPAR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ttpar::comm::{CommError, SimWorld};
use ttpar::cost::{estimate, predicted_speedup, CostModelParams, OpKind, Shape};
use ttpar::ops::{self, NormMethod};
use ttpar::parallel::{self, Direction, RoundingOptions, RoundingVariant};
use ttpar::tsqr::TreeVariant;
use ttpar::tt::{io as ttio, random_tt, TTCore, TTTensor};
use ttpar::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtparStatus {
    TtparOk = 0,
    TtparNullPointer = 1,
    TtparInvalidArgument = 2,
    TtparShape = 3,
    TtparBounds = 4,
    TtparCapacity = 5,
    TtparContract = 6,
    TtparNumeric = 7,
    TtparComm = 8,
    TtparIo = 9,
    TtparFormat = 10,
    TtparPanic = 11,
}

pub const TTPAR_NORM_INNERPROD: c_int = 0;
pub const TTPAR_NORM_SYMMETRIC: c_int = 1;
pub const TTPAR_NORM_ORTHO: c_int = 2;

pub const TTPAR_ROUND_LRL: c_int = 0;
pub const TTPAR_ROUND_LRLI: c_int = 1;
pub const TTPAR_ROUND_RLR: c_int = 2;
pub const TTPAR_ROUND_RLRI: c_int = 3;

pub const TTPAR_DIR_LEFT: c_int = 0;
pub const TTPAR_DIR_RIGHT: c_int = 1;

pub const TTPAR_OP_ADD: c_int = 0;
pub const TTPAR_OP_HADAMARD: c_int = 1;
pub const TTPAR_OP_DOT: c_int = 2;
pub const TTPAR_OP_NORM: c_int = 3;
pub const TTPAR_OP_ORTHO: c_int = 4;
pub const TTPAR_OP_ROUND: c_int = 5;
pub const TTPAR_OP_TSQR: c_int = 6;
pub const TTPAR_OP_APPLYQ: c_int = 7;

/// Opaque tensor-train handle.
pub struct TtparTensor {
    inner: TTTensor,
}

/// Leading and total counts of one cost-model estimate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct TtparCost {
    pub flops: f64,
    pub leading_flops: f64,
    pub words: f64,
    pub messages: f64,
    pub seconds: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(TtparStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Shape(_) => TtparStatus::TtparShape,
            Error::Bounds(_) => TtparStatus::TtparBounds,
            Error::Capacity(_) => TtparStatus::TtparCapacity,
            Error::Contract(_) => TtparStatus::TtparContract,
            Error::Numeric(_) => TtparStatus::TtparNumeric,
            Error::Comm(_) => TtparStatus::TtparComm,
            Error::Io(_) => TtparStatus::TtparIo,
            Error::Format(_) => TtparStatus::TtparFormat,
        };
        Fail(status, e.to_string())
    }
}

impl From<CommError> for Fail {
    fn from(e: CommError) -> Self {
        Error::from(e).into()
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(TtparStatus::TtparInvalidArgument, msg.into())
}

fn null(what: &str) -> Fail {
    Fail(TtparStatus::TtparNullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TtparStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TtparStatus::TtparOk,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            TtparStatus::TtparPanic
        }
    }
}

unsafe fn tensor<'a>(t: *const TtparTensor, what: &str) -> Result<&'a TTTensor, Fail> {
    t.as_ref().map(|h| &h.inner).ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_tensor(out: *mut *mut TtparTensor, t: TTTensor) -> Result<(), Fail> {
    put(out, Box::into_raw(Box::new(TtparTensor { inner: t })), "out")
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("path is not valid UTF-8"))
}

fn norm_method(m: c_int) -> Result<NormMethod, Fail> {
    match m {
        TTPAR_NORM_INNERPROD => Ok(NormMethod::InnerProduct),
        TTPAR_NORM_SYMMETRIC => Ok(NormMethod::Symmetric),
        TTPAR_NORM_ORTHO => Ok(NormMethod::Ortho),
        _ => Err(invalid(format!("unknown norm method {m}"))),
    }
}

fn variant(v: c_int) -> Result<RoundingVariant, Fail> {
    match v {
        TTPAR_ROUND_LRL => Ok(RoundingVariant::Lrl),
        TTPAR_ROUND_LRLI => Ok(RoundingVariant::Lrli),
        TTPAR_ROUND_RLR => Ok(RoundingVariant::Rlr),
        TTPAR_ROUND_RLRI => Ok(RoundingVariant::Rlri),
        _ => Err(invalid(format!("unknown rounding variant {v}"))),
    }
}

fn direction(d: c_int) -> Result<Direction, Fail> {
    match d {
        TTPAR_DIR_LEFT => Ok(Direction::Left),
        TTPAR_DIR_RIGHT => Ok(Direction::Right),
        _ => Err(invalid(format!("unknown direction {d}"))),
    }
}

fn op_kind(op: c_int, v: c_int) -> Result<OpKind, Fail> {
    Ok(match op {
        TTPAR_OP_ADD => OpKind::Summation,
        TTPAR_OP_HADAMARD => OpKind::Hadamard,
        TTPAR_OP_DOT => OpKind::InnerProduct,
        TTPAR_OP_NORM => OpKind::Norm,
        TTPAR_OP_ORTHO => OpKind::Ortho,
        TTPAR_OP_ROUND => OpKind::Rounding(variant(v)?),
        TTPAR_OP_TSQR => OpKind::Tsqr,
        TTPAR_OP_APPLYQ => OpKind::ApplyQ,
        _ => Err(invalid(format!("unknown operation {op}")))?,
    })
}

fn ranks_ok(n: usize, ranks: &[usize]) -> Result<(), Fail> {
    if ranks.len() != n + 1 {
        return Err(invalid(format!("{n} modes need {} ranks", n + 1)));
    }
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ttpar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ttpar_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ttpar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Gaussian random train with `n` modes; `ranks` has `n + 1` entries with
/// unit ends.
///
/// # Safety
/// `dims` and `ranks` must point to `n` and `n + 1` readable values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_random(
    n: usize,
    dims: *const usize,
    ranks: *const usize,
    seed: u64,
    out: *mut *mut TtparTensor,
) -> TtparStatus {
    guard(|| {
        let dims = slice(dims, n, "dims")?;
        let ranks = slice(ranks, n + 1, "ranks")?;
        put_tensor(out, random_tt(dims, ranks, seed)?)
    })
}

/// Builds a train from cores stored back to back. Core `k` holds
/// `ranks[k] * dims[k] * ranks[k+1]` values with entry `(a, i, b)` at
/// `a + ranks[k] * (i + dims[k] * b)`.
///
/// # Safety
/// `dims`, `ranks` and `data` must point to `n`, `n + 1` and `data_len`
/// readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_from_cores(
    n: usize,
    dims: *const usize,
    ranks: *const usize,
    data: *const f64,
    data_len: usize,
    out: *mut *mut TtparTensor,
) -> TtparStatus {
    guard(|| {
        let dims = slice(dims, n, "dims")?;
        let ranks = slice(ranks, n + 1, "ranks")?;
        ranks_ok(n, ranks)?;
        let data = slice(data, data_len, "data")?;
        let mut cores = Vec::with_capacity(n);
        let mut at = 0usize;
        for k in 0..n {
            let len = ranks[k]
                .checked_mul(dims[k])
                .and_then(|v| v.checked_mul(ranks[k + 1]))
                .ok_or_else(|| invalid("core size overflows"))?;
            let end = at.checked_add(len).filter(|&e| e <= data.len());
            let end = end.ok_or_else(|| invalid(format!("data has {} values, too few for core {k}", data.len())))?;
            cores.push(TTCore::new(ranks[k], dims[k], ranks[k + 1], data[at..end].to_vec())?);
            at = end;
        }
        if at != data.len() {
            return Err(invalid(format!("data has {} values but the cores use {at}", data.len())));
        }
        put_tensor(out, TTTensor::new(cores)?)
    })
}

/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_free(t: *mut TtparTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_clone(t: *const TtparTensor, out: *mut *mut TtparTensor) -> TtparStatus {
    guard(|| put_tensor(out, tensor(t, "tensor")?.clone()))
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_order(t: *const TtparTensor) -> usize {
    t.as_ref().map_or(0, |h| h.inner.order())
}

/// Copies the `order` mode sizes into `out`.
///
/// # Safety
/// `t` must be a live handle; `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_dims(t: *const TtparTensor, out: *mut usize, len: usize) -> TtparStatus {
    guard(|| copy_out(&tensor(t, "tensor")?.dims(), out, len))
}

/// Copies the `order + 1` bond ranks into `out`.
///
/// # Safety
/// `t` must be a live handle; `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_ranks(t: *const TtparTensor, out: *mut usize, len: usize) -> TtparStatus {
    guard(|| copy_out(&tensor(t, "tensor")?.ranks(), out, len))
}

unsafe fn copy_out(v: &[usize], out: *mut usize, len: usize) -> Result<(), Fail> {
    if len < v.len() {
        return Err(invalid(format!("buffer holds {len} values, {} needed", v.len())));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    Ok(())
}

/// Single entry at a zero-based multi-index.
///
/// # Safety
/// `t` must be a live handle; `idx` must hold `n` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_entry(
    t: *const TtparTensor,
    idx: *const usize,
    n: usize,
    out: *mut f64,
) -> TtparStatus {
    guard(|| {
        let t = tensor(t, "tensor")?;
        let v = t.entry(slice(idx, n, "idx")?)?;
        put(out, v, "out")
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_load(path_: *const c_char, out: *mut *mut TtparTensor) -> TtparStatus {
    guard(|| {
        let f = std::fs::File::open(path(path_)?).map_err(Error::from)?;
        put_tensor(out, ttio::read_tt(std::io::BufReader::new(f))?)
    })
}

/// # Safety
/// `t` must be a live handle; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ttpar_tensor_save(t: *const TtparTensor, path_: *const c_char) -> TtparStatus {
    guard(|| {
        let t = tensor(t, "tensor")?;
        let f = std::fs::File::create(path(path_)?).map_err(Error::from)?;
        let mut w = std::io::BufWriter::new(f);
        ttio::write_tt(t, &mut w)?;
        std::io::Write::flush(&mut w).map_err(Error::from)?;
        Ok(())
    })
}

/// # Safety
/// `x` and `y` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_add(
    x: *const TtparTensor,
    y: *const TtparTensor,
    out: *mut *mut TtparTensor,
) -> TtparStatus {
    guard(|| put_tensor(out, ops::add(tensor(x, "x")?, tensor(y, "y")?)?))
}

/// # Safety
/// `x` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_scale(x: *const TtparTensor, alpha: f64, out: *mut *mut TtparTensor) -> TtparStatus {
    guard(|| put_tensor(out, ops::scale(tensor(x, "x")?, alpha)))
}

/// # Safety
/// `x` and `y` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_hadamard(
    x: *const TtparTensor,
    y: *const TtparTensor,
    out: *mut *mut TtparTensor,
) -> TtparStatus {
    guard(|| put_tensor(out, ops::hadamard(tensor(x, "x")?, tensor(y, "y")?)?))
}

/// # Safety
/// `x` and `y` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_dot(x: *const TtparTensor, y: *const TtparTensor, out: *mut f64) -> TtparStatus {
    guard(|| put(out, ops::inner_product(tensor(x, "x")?, tensor(y, "y")?)?, "out"))
}

/// Frobenius norm with one of the `TTPAR_NORM_*` methods.
///
/// # Safety
/// `x` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_norm(x: *const TtparTensor, method: c_int, out: *mut f64) -> TtparStatus {
    guard(|| {
        let m = norm_method(method)?;
        put(out, ops::norm(tensor(x, "x")?, m)?.value, "out")
    })
}

/// Orthonormalizes `x` in direction `TTPAR_DIR_*` on `nprocs` simulated
/// ranks (1 runs sequentially).
///
/// # Safety
/// `x` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_orthonormalize(
    x: *const TtparTensor,
    dir: c_int,
    nprocs: usize,
    out: *mut *mut TtparTensor,
) -> TtparStatus {
    guard(|| {
        let x = tensor(x, "x")?;
        let dir = direction(dir)?;
        let t = on_ranks(x, nprocs, |d, c| match dir {
            Direction::Left => parallel::left_orthonormalize(d, c, TreeVariant::Butterfly),
            Direction::Right => parallel::right_orthonormalize(d, c, TreeVariant::Butterfly),
        })?;
        put_tensor(out, t)
    })
}

/// Rounds `x` to relative accuracy `eps0` with variant `TTPAR_ROUND_*` on
/// `nprocs` simulated ranks. `max_rank` of 0 means no cap. The absolute
/// error bound reported by the truncations is written to `error_bound`
/// when it is not null.
///
/// # Safety
/// `x` must be a live handle; `out` must be writable; `error_bound` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn ttpar_round(
    x: *const TtparTensor,
    eps0: f64,
    variant_: c_int,
    max_rank: usize,
    nprocs: usize,
    out: *mut *mut TtparTensor,
    error_bound: *mut f64,
) -> TtparStatus {
    guard(|| {
        let x = tensor(x, "x")?;
        let opts = RoundingOptions {
            eps0,
            variant: variant(variant_)?,
            max_rank: (max_rank > 0).then_some(max_rank),
            ..Default::default()
        };
        let mut bound = 0.0;
        let t = on_ranks_with(x, nprocs, |d, c| parallel::round_dist(d, c, &opts), |rep| bound = rep.error_bound)?;
        if !error_bound.is_null() {
            error_bound.write(bound);
        }
        put_tensor(out, t)
    })
}

fn on_ranks(
    x: &TTTensor,
    nprocs: usize,
    body: impl Fn(&parallel::DistTTTensor, &dyn ttpar::comm::Communicator) -> ttpar::Result<parallel::DistTTTensor> + Sync,
) -> Result<TTTensor, Fail> {
    on_ranks_with(x, nprocs, |d, c| body(d, c).map(|t| (t, ())), |_| {})
}

fn on_ranks_with<R: Send>(
    x: &TTTensor,
    nprocs: usize,
    body: impl Fn(&parallel::DistTTTensor, &dyn ttpar::comm::Communicator) -> ttpar::Result<(parallel::DistTTTensor, R)>
        + Sync,
    mut report: impl FnMut(R),
) -> Result<TTTensor, Fail> {
    if nprocs == 0 {
        return Err(invalid("nprocs must be at least 1"));
    }
    let outs = SimWorld::new(nprocs).run(|c| -> ttpar::Result<(TTTensor, R)> {
        let d = parallel::distribute(x, c, true)?;
        let (y, r) = body(&d, c)?;
        Ok((parallel::gather(&y, c)?, r))
    });
    let mut first = None;
    for o in outs {
        let v = o.value?;
        first.get_or_insert(v);
    }
    let (t, r) = first.expect("at least one rank");
    report(r);
    Ok(t)
}

/// Cost-model estimate for a uniform shape. `l` of 0 uses `R/2`; `variant`
/// only matters for `TTPAR_OP_ROUND`. `alpha`, `beta` and `gamma` price
/// messages, words and flops; pass negative values for the defaults.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ttpar_cost_estimate(
    op: c_int,
    variant_: c_int,
    n: usize,
    i: usize,
    r: usize,
    p: usize,
    l: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    out: *mut TtparCost,
) -> TtparStatus {
    guard(|| {
        let kind = op_kind(op, variant_)?;
        let rep = estimate(kind, Shape { n, i, r, p, l: (l > 0).then_some(l) })?;
        let params = params(alpha, beta, gamma);
        let c = TtparCost {
            flops: rep.flops,
            leading_flops: rep.leading_flops(),
            words: rep.words,
            messages: rep.messages,
            seconds: rep.seconds(&params),
        };
        put(out, c, "out")
    })
}

/// Predicted `T(1)/T(P)` under the cost model; arguments as in
/// [`ttpar_cost_estimate`].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ttpar_predicted_speedup(
    op: c_int,
    variant_: c_int,
    n: usize,
    i: usize,
    r: usize,
    p: usize,
    l: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    out: *mut f64,
) -> TtparStatus {
    guard(|| {
        let kind = op_kind(op, variant_)?;
        let s = predicted_speedup(kind, Shape { n, i, r, p, l: (l > 0).then_some(l) }, &params(alpha, beta, gamma))?;
        put(out, s, "out")
    })
}

fn params(alpha: f64, beta: f64, gamma: f64) -> CostModelParams {
    let d = CostModelParams::default();
    let pick = |v: f64, def: f64| if v < 0.0 { def } else { v };
    CostModelParams { alpha: pick(alpha, d.alpha), beta: pick(beta, d.beta), gamma: pick(gamma, d.gamma) }
}
