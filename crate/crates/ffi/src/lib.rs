//! C interface: embedding stores, label-array metrics and clustering.
//!
//! Every fallible function returns a [`WsiStatus`]; on failure the message is
//! available from [`wsi_last_error`] on the same thread until the next call.
//! Label arrays are `uint32_t` of length `n`; point matrices are row-major
//! `double` of `n * dim` values.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wsi_core::clustering::agglomerative::ag_labels;
use wsi_core::clustering::silhouette::select_k;
use wsi_core::clustering::xmeans::xmeans_labels;
use wsi_core::clustering::{agglomerate, DistanceMatrix, EmbeddingStore, Points, XMeansConfig};
use wsi_core::metrics::{b_cubed_labels, nmi_labels, paired_f_labels, rand_index_labels, v_measure_labels};
use wsi_core::WsiError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    MissingEmbeddings = 5,
    Panic = 99,
}

/// Opaque embedding store.
pub struct WsiStore(EmbeddingStore);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(WsiStatus, String);

impl From<WsiError> for Failure {
    fn from(e: WsiError) -> Self {
        let status = match &e {
            WsiError::Io { .. } => WsiStatus::Io,
            WsiError::Embedding(_) | WsiError::NonFinite(_) => WsiStatus::Format,
            WsiError::MissingEmbeddings { .. } => WsiStatus::MissingEmbeddings,
            _ => WsiStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(WsiStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WsiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WsiStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WsiStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(WsiStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{name} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn labels(gold: *const u32, system: *const u32, n: usize) -> Result<(Vec<usize>, Vec<usize>), Failure> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let g = slice(gold, n, "gold")?.iter().map(|&l| l as usize).collect();
    let s = slice(system, n, "system")?.iter().map(|&l| l as usize).collect();
    Ok((g, s))
}

unsafe fn points(data: *const f64, n: usize, dim: usize) -> Result<Points, Failure> {
    if n == 0 || dim == 0 {
        return Err(invalid("n and dim must be positive"));
    }
    let len = n.checked_mul(dim).ok_or_else(|| invalid("n * dim overflows"))?;
    let values = slice(data, len, "data")?.to_vec();
    Ok(Points::new((0..n).map(|i| i.to_string()).collect(), dim, values)?)
}

fn write_labels(out: &mut [u32], labels: &[usize]) {
    for (o, &l) in out.iter_mut().zip(labels) {
        *o = l as u32;
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn wsi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Empty store for vectors of length `dim`.
///
/// # Safety
/// `model_id` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsi_store_new(model_id: *const c_char, layer: u32, dim: u32, out: *mut *mut WsiStore) -> WsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let store = EmbeddingStore::new(c_str(model_id, "model_id")?, layer as usize, dim as usize)?;
        *out = Box::into_raw(Box::new(WsiStore(store)));
        Ok(())
    })
}

/// Reads `dir/layer_<layer>.emb` and its index.
///
/// # Safety
/// `dir` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsi_store_open(dir: *const c_char, layer: u32, out: *mut *mut WsiStore) -> WsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let store = EmbeddingStore::open_layer(c_str(dir, "dir")?, layer as usize)?;
        *out = Box::into_raw(Box::new(WsiStore(store)));
        Ok(())
    })
}

/// Writes the store as `dir/layer_<layer>.emb` and `.idx`.
///
/// # Safety
/// `store` must come from this library; `dir` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn wsi_store_write(store: *const WsiStore, dir: *const c_char) -> WsiStatus {
    guard(|| {
        non_null(store, "store")?;
        (*store).0.write_layer(c_str(dir, "dir")?)?;
        Ok(())
    })
}

/// # Safety
/// `store` must come from this library; `vector` must hold `dim` floats.
#[no_mangle]
pub unsafe extern "C" fn wsi_store_insert(
    store: *mut WsiStore,
    id: *const c_char,
    vector: *const f32,
    dim: usize,
) -> WsiStatus {
    guard(|| {
        non_null(store, "store")?;
        let id = c_str(id, "id")?;
        (*store).0.insert(id, slice(vector, dim, "vector")?)?;
        Ok(())
    })
}

/// Copies the vector of `id` into `out` (which holds `dim` floats).
///
/// # Safety
/// `store` must come from this library; `out` must hold `dim` floats.
#[no_mangle]
pub unsafe extern "C" fn wsi_store_get(store: *const WsiStore, id: *const c_char, out: *mut f32, dim: usize) -> WsiStatus {
    guard(|| {
        non_null(store, "store")?;
        let s = &(*store).0;
        if dim != s.dim() {
            return Err(invalid(format!("buffer holds {dim} values, store dim is {}", s.dim())));
        }
        let id = c_str(id, "id")?;
        let v = s.get(id).ok_or_else(|| Failure(WsiStatus::MissingEmbeddings, format!("no vector for `{id}`")))?;
        slice_mut(out, dim, "out")?.copy_from_slice(v);
        Ok(())
    })
}

/// # Safety
/// `store` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn wsi_store_len(store: *const WsiStore) -> usize {
    if store.is_null() {
        0
    } else {
        (*store).0.len()
    }
}

/// # Safety
/// `store` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn wsi_store_dim(store: *const WsiStore) -> usize {
    if store.is_null() {
        0
    } else {
        (*store).0.dim()
    }
}

/// # Safety
/// `store` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn wsi_store_free(store: *mut WsiStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// B-Cubed precision, recall and F. Any output pointer may be null.
///
/// # Safety
/// `gold` and `system` must hold `n` labels.
#[no_mangle]
pub unsafe extern "C" fn wsi_b_cubed(
    gold: *const u32,
    system: *const u32,
    n: usize,
    precision: *mut f64,
    recall: *mut f64,
    f: *mut f64,
) -> WsiStatus {
    guard(|| {
        let (g, s) = labels(gold, system, n)?;
        let b = b_cubed_labels(&g, &s);
        for (p, v) in [(precision, b.precision), (recall, b.recall), (f, b.f)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `gold` and `system` must hold `n` labels; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsi_nmi(gold: *const u32, system: *const u32, n: usize, out: *mut f64) -> WsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let (g, s) = labels(gold, system, n)?;
        *out = nmi_labels(&g, &s);
        Ok(())
    })
}

/// # Safety
/// `gold` and `system` must hold `n` labels; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsi_v_measure(gold: *const u32, system: *const u32, n: usize, out: *mut f64) -> WsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let (g, s) = labels(gold, system, n)?;
        *out = v_measure_labels(&g, &s);
        Ok(())
    })
}

/// Paired F-score; `undefined` (optional) is set to 1 when either side has no
/// same-cluster pair, in which case the score is 0.
///
/// # Safety
/// `gold` and `system` must hold `n` labels; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsi_paired_f(
    gold: *const u32,
    system: *const u32,
    n: usize,
    out: *mut f64,
    undefined: *mut u8,
) -> WsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let (g, s) = labels(gold, system, n)?;
        let counts = paired_f_labels(&g, &s);
        *out = counts.f();
        if !undefined.is_null() {
            *undefined = counts.degenerate() as u8;
        }
        Ok(())
    })
}

/// # Safety
/// `gold` and `system` must hold `n` labels; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsi_rand_index(gold: *const u32, system: *const u32, n: usize, out: *mut f64) -> WsiStatus {
    guard(|| {
        non_null(out, "out")?;
        let (g, s) = labels(gold, system, n)?;
        *out = rand_index_labels(&g, &s).0;
        Ok(())
    })
}

/// Average-linkage clustering into `k` clusters. `must_link` holds `m` index
/// pairs (2 * m values) whose distance is set to zero first.
///
/// # Safety
/// `data` must hold `n * dim` values, `must_link` 2 * m values, `labels_out` n values.
#[no_mangle]
pub unsafe extern "C" fn wsi_ag_cluster(
    data: *const f64,
    n: usize,
    dim: usize,
    k: usize,
    must_link: *const usize,
    m: usize,
    labels_out: *mut u32,
) -> WsiStatus {
    guard(|| {
        let p = points(data, n, dim)?;
        if k == 0 || k > n {
            return Err(invalid(format!("k = {k} outside 1..={n}")));
        }
        let out = slice_mut(labels_out, n, "labels_out")?;
        let mut dist = DistanceMatrix::euclidean(&p);
        let pairs: Vec<(usize, usize)> = slice(must_link, m.saturating_mul(2), "must_link")?
            .chunks(2)
            .map(|c| (c[0], c[1]))
            .collect();
        dist.apply_must_link(&pairs)?;
        write_labels(out, &ag_labels(&dist, k));
        Ok(())
    })
}

/// Average-linkage clustering with the cluster count chosen by silhouette over
/// `k_min..=k_max`; the chosen count goes to `k_out`.
///
/// # Safety
/// `data` must hold `n * dim` values, `labels_out` n values; `k_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsi_ag_silhouette(
    data: *const f64,
    n: usize,
    dim: usize,
    k_min: usize,
    k_max: usize,
    labels_out: *mut u32,
    k_out: *mut usize,
) -> WsiStatus {
    guard(|| {
        non_null(k_out, "k_out")?;
        if k_min > k_max {
            return Err(invalid("k_min > k_max"));
        }
        let p = points(data, n, dim)?;
        let out = slice_mut(labels_out, n, "labels_out")?;
        let dist = DistanceMatrix::euclidean(&p);
        let tree = agglomerate(&dist);
        let k = select_k(&dist, &tree, k_min, k_max);
        write_labels(out, &tree.cut(k));
        *k_out = k;
        Ok(())
    })
}

/// X-means with k-means++ seeding from `seed`; the final count goes to `k_out`.
///
/// # Safety
/// `data` must hold `n * dim` values, `labels_out` n values; `k_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wsi_xmeans(
    data: *const f64,
    n: usize,
    dim: usize,
    k_min: usize,
    k_max: usize,
    tolerance: f64,
    seed: u64,
    labels_out: *mut u32,
    k_out: *mut usize,
) -> WsiStatus {
    guard(|| {
        non_null(k_out, "k_out")?;
        if k_min == 0 || k_min > k_max || !(tolerance > 0.0) {
            return Err(invalid("need 1 <= k_min <= k_max and tolerance > 0"));
        }
        let p = points(data, n, dim)?;
        let out = slice_mut(labels_out, n, "labels_out")?;
        let config = XMeansConfig {
            k_min,
            k_max,
            tolerance,
            ..XMeansConfig::default()
        };
        let labels = xmeans_labels(&p, &config, seed);
        *k_out = labels.iter().copied().max().map_or(0, |m| m + 1);
        write_labels(out, &labels);
        Ok(())
    })
}
