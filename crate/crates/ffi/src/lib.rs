//! C ABI over the `gsched` partitioning and reconstruction routines.
//!
//! Objects are handed out as opaque pointers that the caller releases with the
//! matching `*_free` function. Every fallible call returns a [`GschedStatus`];
//! on failure the message is kept per thread and read back with
//! [`gsched_last_error_message`]. Panics never cross the boundary.
//!
//! Matrices are passed column-major. Node indices are zero-based.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};

use gsched::baselines::{sfrob_partition, srel_partition, SrelOptions};
use gsched::graph::Graph;
use gsched::partition::{hierarchical_partition, Partition, PdcaConfig};
use gsched::sampling::{aopt_objective, minimax_reconstruct_with_cond, Measurement, SamplingSet};
use gsched::signals::{heat_dictionary, SubspaceDictionary};
use gsched::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GschedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NumericalFailure = 3,
    DegenerateSubspace = 4,
    Config = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

/// A weighted undirected graph.
pub struct GschedGraph(Graph);

/// An `N × M` subspace dictionary.
pub struct GschedDictionary(SubspaceDictionary);

/// A balanced partition of the nodes into disjoint subsets.
pub struct GschedPartition(Partition);

/// Solver settings for [`gsched_partition_pdca`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GschedPdcaConfig {
    /// Step size is `1/lipschitz`.
    pub lipschitz: f64,
    pub beta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    /// Raise `lipschitz` to a computed bound when it is smaller.
    pub enforce_lipschitz_bound: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> GschedStatus {
    match e {
        Error::InvalidInput(_) => GschedStatus::InvalidInput,
        Error::NumericalFailure(_) => GschedStatus::NumericalFailure,
        Error::DegenerateSubspace(_) => GschedStatus::DegenerateSubspace,
        Error::Config(_) => GschedStatus::Config,
        Error::Parse(_) => GschedStatus::Parse,
        Error::Io(_) | Error::Csv(_) => GschedStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GschedStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GschedStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            GschedStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            GschedStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn checked_len(rows: usize, cols: usize) -> Result<usize, Failure> {
    rows.checked_mul(cols).ok_or_else(|| Failure::Lib(Error::InvalidInput(format!("{rows} x {cols} overflows"))))
}

/// Length of the last error message on this thread including the NUL, or 0.
#[no_mangle]
pub extern "C" fn gsched_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes_with_nul().len()))
}

/// Copies the last error message into `buf`, truncating to `len - 1` bytes.
///
/// Returns the full length including the NUL, so a caller can size a buffer
/// with a first call that passes `len = 0`.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or `len` must be 0.
#[no_mangle]
pub unsafe extern "C" fn gsched_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if len > 0 && !buf.is_null() {
                unsafe { *buf = 0 };
            }
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if len > 0 && !buf.is_null() {
            let n = (bytes.len() - 1).min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

#[no_mangle]
pub extern "C" fn gsched_status_name(status: GschedStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        GschedStatus::Ok => b"ok\0",
        GschedStatus::NullPointer => b"null pointer\0",
        GschedStatus::InvalidInput => b"invalid input\0",
        GschedStatus::NumericalFailure => b"numerical failure\0",
        GschedStatus::DegenerateSubspace => b"degenerate subspace\0",
        GschedStatus::Config => b"configuration error\0",
        GschedStatus::Parse => b"parse error\0",
        GschedStatus::Io => b"I/O error\0",
        GschedStatus::Panic => b"internal panic\0",
    };
    s.as_ptr() as *const c_char
}

/// Builds a graph from a symmetric `n × n` weight matrix.
///
/// # Safety
/// `weights` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_graph_from_weights(
    n: usize,
    weights: *const f64,
    out: *mut *mut GschedGraph,
) -> GschedStatus {
    guard(|| {
        let w = unsafe { slice(weights, checked_len(n, n)?, "weights")? };
        let g = Graph::from_weights(DMatrix::from_column_slice(n, n, w))?;
        unsafe { put(out, GschedGraph(g)) }
    })
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gsched_graph_n_nodes(graph: *const GschedGraph) -> usize {
    unsafe { graph.as_ref() }.map_or(0, |g| g.0.n_nodes())
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gsched_graph_free(graph: *mut GschedGraph) {
    if !graph.is_null() {
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Wraps a column-major `n_nodes × n_atoms` matrix.
///
/// # Safety
/// `matrix` must point to `n_nodes * n_atoms` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_dictionary_new(
    n_nodes: usize,
    n_atoms: usize,
    matrix: *const f64,
    out: *mut *mut GschedDictionary,
) -> GschedStatus {
    guard(|| {
        let m = unsafe { slice(matrix, checked_len(n_nodes, n_atoms)?, "matrix")? };
        let a = SubspaceDictionary::new(DMatrix::from_column_slice(n_nodes, n_atoms, m))?;
        unsafe { put(out, GschedDictionary(a)) }
    })
}

/// Heat-diffusion dictionary `U exp(-αΛ) Uᵀ` of the graph Laplacian.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_dictionary_heat(
    graph: *const GschedGraph,
    alpha: f64,
    out: *mut *mut GschedDictionary,
) -> GschedStatus {
    guard(|| {
        let g = unsafe { get(graph, "graph")? };
        let a = heat_dictionary(&g.0.gft_basis()?, alpha)?;
        unsafe { put(out, GschedDictionary(a)) }
    })
}

/// # Safety
/// `dict` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gsched_dictionary_n_nodes(dict: *const GschedDictionary) -> usize {
    unsafe { dict.as_ref() }.map_or(0, |d| d.0.n_nodes())
}

/// # Safety
/// `dict` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gsched_dictionary_n_atoms(dict: *const GschedDictionary) -> usize {
    unsafe { dict.as_ref() }.map_or(0, |d| d.0.n_atoms())
}

/// Copies the matrix out column-major.
///
/// # Safety
/// `dict` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gsched_dictionary_copy(
    dict: *const GschedDictionary,
    out: *mut f64,
    len: usize,
) -> GschedStatus {
    guard(|| {
        let d = unsafe { get(dict, "dict")? };
        let m = d.0.matrix();
        if len != m.len() {
            return Err(Error::InvalidInput(format!("buffer holds {len} values, matrix has {}", m.len())).into());
        }
        unsafe { slice_mut(out, len, "out")? }.copy_from_slice(m.as_slice());
        Ok(())
    })
}

/// # Safety
/// `dict` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gsched_dictionary_free(dict: *mut GschedDictionary) {
    if !dict.is_null() {
        drop(unsafe { Box::from_raw(dict) });
    }
}

#[no_mangle]
pub extern "C" fn gsched_pdca_config_default() -> GschedPdcaConfig {
    let d = PdcaConfig::default();
    GschedPdcaConfig {
        lipschitz: d.lipschitz,
        beta: d.beta,
        max_iters: d.max_iters,
        tol: d.tol,
        seed: d.seed,
        enforce_lipschitz_bound: d.enforce_lipschitz_bound,
    }
}

/// Splits the nodes into `2^levels` balanced subsets by recursive PDCA bipartitioning.
///
/// A null `cfg` uses [`gsched_pdca_config_default`].
///
/// # Safety
/// `dict` must be a live handle, `cfg` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_pdca(
    dict: *const GschedDictionary,
    levels: u32,
    cfg: *const GschedPdcaConfig,
    out: *mut *mut GschedPartition,
) -> GschedStatus {
    guard(|| {
        let d = unsafe { get(dict, "dict")? };
        let c = unsafe { cfg.as_ref() }.copied().unwrap_or_else(|| gsched_pdca_config_default());
        let cfg = PdcaConfig {
            lipschitz: c.lipschitz,
            beta: c.beta,
            max_iters: c.max_iters,
            tol: c.tol,
            seed: c.seed,
            enforce_lipschitz_bound: c.enforce_lipschitz_bound,
            ..PdcaConfig::default()
        };
        let p = hierarchical_partition(&d.0, levels, &cfg)?;
        unsafe { put(out, GschedPartition(p)) }
    })
}

/// Modularity clusters ranked by eigenvector centrality, dealt cyclically.
///
/// # Safety
/// `graph` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_srel(
    graph: *const GschedGraph,
    n_subsets: usize,
    seed: u64,
    out: *mut *mut GschedPartition,
) -> GschedStatus {
    guard(|| {
        let g = unsafe { get(graph, "graph")? };
        let p = srel_partition(&g.0, n_subsets, seed, SrelOptions::default())?;
        unsafe { put(out, GschedPartition(p)) }
    })
}

/// Greedy A-optimal ranking of the dictionary rows, dealt cyclically.
///
/// # Safety
/// `dict` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_sfrob(
    dict: *const GschedDictionary,
    n_subsets: usize,
    out: *mut *mut GschedPartition,
) -> GschedStatus {
    guard(|| {
        let d = unsafe { get(dict, "dict")? };
        let p = sfrob_partition(&d.0, n_subsets)?;
        unsafe { put(out, GschedPartition(p)) }
    })
}

/// Builds a partition from one subset label per node.
///
/// # Safety
/// `labels` must point to `n_nodes` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_from_labels(
    labels: *const usize,
    n_nodes: usize,
    n_subsets: usize,
    out: *mut *mut GschedPartition,
) -> GschedStatus {
    guard(|| {
        let l = unsafe { slice(labels, n_nodes, "labels")? };
        let p = Partition::from_labels(l, n_subsets)?;
        unsafe { put(out, GschedPartition(p)) }
    })
}

/// # Safety
/// `part` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_n_nodes(part: *const GschedPartition) -> usize {
    unsafe { part.as_ref() }.map_or(0, |p| p.0.n_nodes())
}

/// # Safety
/// `part` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_n_subsets(part: *const GschedPartition) -> usize {
    unsafe { part.as_ref() }.map_or(0, |p| p.0.n_subsets())
}

/// Writes the subset label of every node into `labels[0..n_nodes]`.
///
/// # Safety
/// `part` must be a live handle; `labels` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_labels(
    part: *const GschedPartition,
    labels: *mut usize,
    len: usize,
) -> GschedStatus {
    guard(|| {
        let p = unsafe { get(part, "partition")? };
        if len != p.0.n_nodes() {
            return Err(Error::InvalidInput(format!(
                "buffer holds {len} labels, partition has {} nodes",
                p.0.n_nodes()
            ))
            .into());
        }
        unsafe { slice_mut(labels, len, "labels")? }.copy_from_slice(&p.0.labels());
        Ok(())
    })
}

/// Number of nodes in subset `k`, or 0 when `k` is out of range.
///
/// # Safety
/// `part` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_subset_len(part: *const GschedPartition, k: usize) -> usize {
    unsafe { part.as_ref() }.and_then(|p| p.0.subsets().get(k)).map_or(0, SamplingSet::len)
}

/// Copies the sorted node indices of subset `k` into `nodes`.
///
/// # Safety
/// `part` must be a live handle; `nodes` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_subset(
    part: *const GschedPartition,
    k: usize,
    nodes: *mut usize,
    len: usize,
) -> GschedStatus {
    guard(|| {
        let p = unsafe { get(part, "partition")? };
        let s =
            p.0.subsets().get(k).ok_or_else(|| {
                Error::InvalidInput(format!("subset {k} out of range for {} subsets", p.0.n_subsets()))
            })?;
        if len != s.len() {
            return Err(Error::InvalidInput(format!("buffer holds {len} nodes, subset has {}", s.len())).into());
        }
        unsafe { slice_mut(nodes, len, "nodes")? }.copy_from_slice(s.indices());
        Ok(())
    })
}

/// # Safety
/// `part` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gsched_partition_free(part: *mut GschedPartition) {
    if !part.is_null() {
        drop(unsafe { Box::from_raw(part) });
    }
}

/// Minimax reconstruction `A (SᵀA)† y` from samples `y` on `nodes`.
///
/// Writes `n_nodes` values to `x_out` and, when `cond_out` is not null, the
/// condition number of `SᵀA`.
///
/// # Safety
/// `nodes` and `y` must hold `n_samples` values, `x_out` must hold the
/// dictionary's node count, `cond_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_reconstruct(
    dict: *const GschedDictionary,
    nodes: *const usize,
    y: *const f64,
    n_samples: usize,
    x_out: *mut f64,
    cond_out: *mut f64,
) -> GschedStatus {
    guard(|| {
        let d = unsafe { get(dict, "dict")? };
        let idx = unsafe { slice(nodes, n_samples, "nodes")? };
        let vals = unsafe { slice(y, n_samples, "y")? };
        let set = SamplingSet::new(d.0.n_nodes(), idx.to_vec())?;
        // measurements follow the sorted node order
        let mut pairs: Vec<(usize, f64)> = idx.iter().copied().zip(vals.iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        let meas =
            Measurement { values: DVector::from_iterator(n_samples, pairs.into_iter().map(|p| p.1)), set, sigma: 0.0 };
        let (x, cond) = minimax_reconstruct_with_cond(&d.0, &meas)?;
        let dst = unsafe { slice_mut(x_out, x.len(), "x_out")? };
        dst.copy_from_slice(x.as_slice());
        if !cond_out.is_null() {
            unsafe { *cond_out = cond };
        }
        Ok(())
    })
}

/// `tr((SᵀAAᵀS)⁻¹)` for the sampling set `nodes`; `+inf` when singular.
///
/// # Safety
/// `nodes` must hold `n_samples` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gsched_aopt_objective(
    dict: *const GschedDictionary,
    nodes: *const usize,
    n_samples: usize,
    out: *mut f64,
) -> GschedStatus {
    guard(|| {
        let d = unsafe { get(dict, "dict")? };
        let idx = unsafe { slice(nodes, n_samples, "nodes")? };
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let set = SamplingSet::new(d.0.n_nodes(), idx.to_vec())?;
        let v = aopt_objective(&d.0, &set)?;
        unsafe { *out = v };
        Ok(())
    })
}
