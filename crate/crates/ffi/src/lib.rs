//! C interface to the cmpnet simulator.
//!
//! Every function returns a [`CmpnetStatus`]. On failure a message is kept
//! per thread and can be read with [`cmpnet_last_error`]. Networks live
//! behind an opaque [`CmpnetNetwork`] handle released by
//! [`cmpnet_network_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cmpnet::harness::{
    run_on, BoundSchedule, EdgeList, ExperimentConfig, ExperimentError, GraphIoError, PolicySpec, ReportError,
    Snapshot,
};
use cmpnet::hft::{search_ht, NodeKind, TreeRef};
use cmpnet::kernel::{NodeId, SimError};
use cmpnet::protocols::{LabelVariant, Msg, NodeVars, WillVariant};
use cmpnet::routing::{execute_will, label_of, simulate_route};

type Net = cmpnet::kernel::Network<NodeVars, Msg>;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Graph = 3,
    /// A simulation fault or a failed oracle or bound check.
    Fault = 4,
    Unsupported = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpnetPolicy {
    NodeChosen = 0,
    RandomAdversary = 1,
    StrongAdversary = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpnetLabels {
    Big = 0,
    Small = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpnetWills {
    OneRound = 0,
    Adversarial = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CmpnetConfig {
    pub b: u64,
    pub policy: CmpnetPolicy,
    /// Seed for `RandomAdversary`; ignored otherwise.
    pub policy_seed: u64,
    pub labels: CmpnetLabels,
    pub wills: CmpnetWills,
    /// Scales the default per-node budget of 64 log n words.
    pub budget_mult: f64,
    /// Numbers ports with gaps from this seed when `use_port_seed` is set.
    pub port_seed: u64,
    pub use_port_seed: bool,
    pub strict: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CmpnetRoute {
    pub delivered: bool,
    /// Every move, including moves between a node and the helper it hosts.
    pub hops: u64,
    /// Moves over real links only.
    pub link_hops: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CmpnetHeal {
    pub delta: u64,
    pub virtual_nodes: u64,
    pub max_degree_delta: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CmpnetTreeRef {
    pub exists: bool,
    /// 0 for a leaf, 1 for a non-leaf.
    pub kind: u8,
    pub label: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CmpnetNeighborhood {
    pub leaf_parent: CmpnetTreeRef,
    pub nonleaf_parent: CmpnetTreeRef,
    pub nonleaf_left: CmpnetTreeRef,
    pub nonleaf_right: CmpnetTreeRef,
}

/// A preprocessed network. Opaque to C.
pub struct CmpnetNetwork {
    net: Net,
    b: u64,
    report: Option<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CmpnetStatus, String);

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let s = match &e {
            ExperimentError::Config(_) | ExperimentError::NoGraph => CmpnetStatus::InvalidArgument,
            ExperimentError::GraphIo(_) | ExperimentError::Graph(_) => CmpnetStatus::Graph,
            ExperimentError::Sim(s) => return Failure::from(s.clone()),
        };
        Failure(s, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let s = match &e {
            SimError::Unsupported(_) => CmpnetStatus::Unsupported,
            SimError::Config(_) => CmpnetStatus::InvalidArgument,
            SimError::Graph(_) => CmpnetStatus::Graph,
            SimError::Fault(_) | SimError::RoundLimit { .. } => CmpnetStatus::Fault,
        };
        Failure(s, e.to_string())
    }
}

impl From<GraphIoError> for Failure {
    fn from(e: GraphIoError) -> Self {
        Failure(CmpnetStatus::Graph, e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let s = match e {
            ReportError::Io(_) => CmpnetStatus::Io,
            ReportError::Graph(_) => CmpnetStatus::Graph,
            _ => CmpnetStatus::InvalidArgument,
        };
        Failure(s, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CmpnetStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(CmpnetStatus::NullPointer, format!("{what} is null"))
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, records any failure and turns panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CmpnetStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmpnetStatus::Ok,
        Ok(Err(Failure(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            CmpnetStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map(Path::new).map_err(|_| invalid("path is not UTF-8"))
}

unsafe fn handle<'a>(net: *const CmpnetNetwork) -> Result<&'a CmpnetNetwork, Failure> {
    net.as_ref().ok_or_else(|| null("network"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

fn experiment_config(c: &CmpnetConfig) -> ExperimentConfig {
    ExperimentConfig {
        graph: None,
        b: c.b,
        policy: match c.policy {
            CmpnetPolicy::NodeChosen => PolicySpec::Node,
            CmpnetPolicy::RandomAdversary => PolicySpec::Rand(c.policy_seed),
            CmpnetPolicy::StrongAdversary => PolicySpec::Strong,
        },
        labels: match c.labels {
            CmpnetLabels::Big => LabelVariant::Big,
            CmpnetLabels::Small => LabelVariant::Small,
        },
        wills: match c.wills {
            CmpnetWills::OneRound => WillVariant::OneRound,
            CmpnetWills::Adversarial => WillVariant::Adversarial,
        },
        budget_mult: c.budget_mult,
        port_seed: c.use_port_seed.then_some(c.port_seed),
        strict: c.strict,
        ..Default::default()
    }
}

/// Defaults: b = 2, node-chosen reads, big labels, one-round wills,
/// the default memory budget, contiguous ports, strict mode.
#[no_mangle]
pub extern "C" fn cmpnet_config_default() -> CmpnetConfig {
    CmpnetConfig {
        b: 2,
        policy: CmpnetPolicy::NodeChosen,
        policy_seed: 0,
        labels: CmpnetLabels::Big,
        wills: CmpnetWills::OneRound,
        budget_mult: 1.0,
        port_seed: 0,
        use_port_seed: false,
        strict: true,
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next `cmpnet_*` call on the same thread.
#[no_mangle]
pub extern "C" fn cmpnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a network and runs the full preprocessing pipeline on it.
///
/// `edges` holds `2 * m` ids, one pair per edge. `nodes` may list extra
/// node ids (for a single-node graph) and may be null when `n` is 0. On
/// success `*out` owns a new handle. A failed oracle or bound check returns
/// `Fault` and leaves `*out` untouched.
///
/// # Safety
/// `nodes` and `edges` must point to `n` and `2 * m` readable ids, and
/// `config` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_preprocess(
    nodes: *const u64,
    n: usize,
    edges: *const u64,
    m: usize,
    config: *const CmpnetConfig,
    out: *mut *mut CmpnetNetwork,
) -> CmpnetStatus {
    guard(|| {
        let cfg = experiment_config(config.as_ref().ok_or_else(|| null("config"))?);
        let pairs = slice(edges, m.checked_mul(2).ok_or_else(|| invalid("edge count overflows"))?, "edges")?;
        let mut text = String::new();
        for id in slice(nodes, n, "nodes")? {
            text += &format!("{id}\n");
        }
        for e in pairs.chunks_exact(2) {
            text += &format!("{} {}\n", e[0], e[1]);
        }
        let g = EdgeList::parse(&text)?;
        let e = run_on(&cfg, &g, &BoundSchedule::default())?;
        if !e.report.passed() {
            return Err(Failure(
                CmpnetStatus::Fault,
                format!("preprocessing checks failed: {:?}", e.report.audit),
            ));
        }
        let report = e.report.to_json().map_err(Failure::from)?;
        let h = Box::new(CmpnetNetwork {
            net: e.network,
            b: cfg.b,
            report: Some(report),
        });
        write_out(out, Box::into_raw(h))
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `net` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_network_free(net: *mut CmpnetNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of live nodes.
///
/// # Safety
/// `net` must be a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_node_count(net: *const CmpnetNetwork, out: *mut u64) -> CmpnetStatus {
    guard(|| write_out(out, handle(net)?.net.node_ids().count() as u64))
}

/// The preprocessing report as a JSON string owned by the caller; release
/// it with `cmpnet_string_free`. Handles loaded from a snapshot have no
/// report and return `InvalidArgument`.
///
/// # Safety
/// `net` must be a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_report_json(net: *const CmpnetNetwork, out: *mut *mut c_char) -> CmpnetStatus {
    guard(|| {
        let r = handle(net)?.report.as_deref().ok_or_else(|| invalid("no report for this network"))?;
        let c = CString::new(r).map_err(|_| invalid("report contains NUL"))?;
        write_out(out, c.into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Routes a packet from `source` to `target`. Returns `Ok` whether or not
/// the packet arrived; when `delivered` is false, `cmpnet_last_error`
/// gives the reason.
///
/// # Safety
/// `net` must be a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_route(
    net: *const CmpnetNetwork,
    source: u64,
    target: u64,
    max_hops: u64,
    out: *mut CmpnetRoute,
) -> CmpnetStatus {
    guard(|| {
        let net = &handle(net)?.net;
        if !net.contains(NodeId(source)) {
            return Err(invalid(format!("source {source} is not in the network")));
        }
        let label = label_of(net, NodeId(target)).ok_or_else(|| invalid(format!("target {target} is not in the network")))?;
        let o = simulate_route(net, NodeId(source), &label, max_hops);
        if let Some(e) = &o.error {
            set_error(&e.to_string());
        }
        write_out(
            out,
            CmpnetRoute {
                delivered: o.delivered,
                hops: o.packet.hop_count,
                link_hops: o.link_hops(),
            },
        )
    })
}

/// Deletes `node` and heals the network from the wills. `out` may be null.
///
/// # Safety
/// `net` must be a valid handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_delete(net: *mut CmpnetNetwork, node: u64, out: *mut CmpnetHeal) -> CmpnetStatus {
    guard(|| {
        let h = net.as_mut().ok_or_else(|| null("network"))?;
        let r = execute_will(&mut h.net, NodeId(node))?;
        if !out.is_null() {
            out.write(CmpnetHeal {
                delta: r.delta,
                virtual_nodes: r.virtual_nodes,
                max_degree_delta: r.max_degree_delta(),
            });
        }
        Ok(())
    })
}

fn tree_ref(t: Option<TreeRef>) -> CmpnetTreeRef {
    match t {
        Some(t) if t.exists => CmpnetTreeRef {
            exists: true,
            kind: (t.kind == NodeKind::NonLeaf) as u8,
            label: t.label,
        },
        _ => CmpnetTreeRef::default(),
    }
}

/// Neighborhood of `y` in the half-full tree over `[a, b]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_query_ht(y: u64, a: u64, b: u64, out: *mut CmpnetNeighborhood) -> CmpnetStatus {
    guard(|| {
        let nb = search_ht(y, a, b).map_err(|e| invalid(e.to_string()))?;
        write_out(
            out,
            CmpnetNeighborhood {
                leaf_parent: tree_ref(Some(nb.leaf_parent)),
                nonleaf_parent: tree_ref(nb.nonleaf_parent),
                nonleaf_left: tree_ref(nb.nonleaf_left),
                nonleaf_right: tree_ref(nb.nonleaf_right),
            },
        )
    })
}

/// Writes the labeled network to a JSON snapshot.
///
/// # Safety
/// `net` must be a valid handle and `file` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_snapshot_save(net: *const CmpnetNetwork, file: *const c_char) -> CmpnetStatus {
    guard(|| {
        let h = handle(net)?;
        Snapshot::of(&h.net, h.b).save(path(file)?).map_err(Failure::from)
    })
}

/// Loads a snapshot into a new handle.
///
/// # Safety
/// `file` must be a NUL-terminated path and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cmpnet_snapshot_load(file: *const c_char, out: *mut *mut CmpnetNetwork) -> CmpnetStatus {
    guard(|| {
        let snap = Snapshot::load(path(file)?)?;
        let h = Box::new(CmpnetNetwork {
            net: snap.network()?,
            b: snap.b,
            report: None,
        });
        write_out(out, Box::into_raw(h))
    })
}
