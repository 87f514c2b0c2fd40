//! C interface to the qualnet engine.
//!
//! Networks, evidence sets and posteriors are opaque handles created and
//! released through this API. Every fallible call returns a [`QnStatus`];
//! the message of the last failure on the calling thread is available from
//! [`qn_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qualnet::engine::{compile, infer, BayesianNetwork, CompiledNetwork, Evidence, Observation, Posterior};
use qualnet::ingestion::cases;
use qualnet::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidNetwork = 5,
    UnknownNode = 6,
    InvalidEvidence = 7,
    ImpossibleEvidence = 8,
    NotInterval = 9,
    BufferTooSmall = 10,
    UnknownCase = 11,
    Panic = 12,
    Other = 13,
}

/// Summary of an interval node's posterior.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QnSummary {
    pub mean: f64,
    pub sd: f64,
    /// Index of the most probable bin.
    pub mode: usize,
}

/// A compiled network.
pub struct QnNetwork(CompiledNetwork);

/// A set of observations keyed by node id.
pub struct QnEvidence(Evidence);

/// Posterior marginals of every node.
pub struct QnPosterior(Posterior);

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn fail(status: QnStatus, message: impl Into<String>) -> QnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message.into()));
    status
}

fn status_of(e: &Error) -> QnStatus {
    match e {
        Error::Io(_) => QnStatus::Io,
        Error::Syntax { .. } | Error::FormatVersion { .. } => QnStatus::Parse,
        Error::UnknownNode(_) => QnStatus::UnknownNode,
        Error::InvalidEvidence { .. } => QnStatus::InvalidEvidence,
        Error::ImpossibleEvidence => QnStatus::ImpossibleEvidence,
        Error::NotInterval(_) => QnStatus::NotInterval,
        Error::DuplicateId { .. }
        | Error::DanglingReference { .. }
        | Error::Cycle(_)
        | Error::InvalidNode { .. }
        | Error::BadColumn { .. }
        | Error::InvalidDistribution(_)
        | Error::InvalidEdges(_)
        | Error::ZeroMass => QnStatus::InvalidNetwork,
        _ => QnStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), QnStatus>) -> QnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QnStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(QnStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, QnStatus>;
}

impl<T> OrStatus<T> for qualnet::Result<T> {
    fn or_status(self) -> Result<T, QnStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, QnStatus> {
    if s.is_null() {
        return Err(fail(QnStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(QnStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn refer<'a, T>(p: *const T) -> Result<&'a T, QnStatus> {
    p.as_ref().ok_or_else(|| fail(QnStatus::NullPointer, "null handle"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), QnStatus> {
    if out.is_null() {
        return Err(fail(QnStatus::NullPointer, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Loads and compiles a `bnet-v1` file.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qn_network_load(path: *const c_char, out: *mut *mut QnNetwork) -> QnStatus {
    guard(|| {
        let path = text(path)?;
        let source = std::fs::read_to_string(path).map_err(|e| fail(QnStatus::Io, format!("{path}: {e}")))?;
        let net = compile(&BayesianNetwork::parse(&source).or_status()?).or_status()?;
        write_out(out, Box::into_raw(Box::new(QnNetwork(net))))
    })
}

/// Builds one of the bundled networks, `maintainability` or `security`.
///
/// # Safety
/// `name` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qn_network_load_case(name: *const c_char, out: *mut *mut QnNetwork) -> QnStatus {
    guard(|| {
        let case = match text(name)? {
            "maintainability" => cases::maintainability_case(),
            "security" => cases::security_case(),
            other => return Err(fail(QnStatus::UnknownCase, format!("no bundled case `{other}`"))),
        };
        write_out(out, Box::into_raw(Box::new(QnNetwork(case.compiled))))
    })
}

/// # Safety
/// `net` must come from a load call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qn_network_free(net: *mut QnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of nodes, 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qn_network_node_count(net: *const QnNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.len())
}

/// Index of the node with the given id.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qn_network_node_index(
    net: *const QnNetwork,
    id: *const c_char,
    out: *mut usize,
) -> QnStatus {
    guard(|| {
        let net = refer(net)?;
        let idx = net.0.index_of(text(id)?).or_status()?;
        write_out(out, idx)
    })
}

/// An empty evidence set.
#[no_mangle]
pub extern "C" fn qn_evidence_new() -> *mut QnEvidence {
    Box::into_raw(Box::new(QnEvidence(Evidence::new())))
}

/// # Safety
/// `ev` must come from [`qn_evidence_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qn_evidence_free(ev: *mut QnEvidence) {
    if !ev.is_null() {
        drop(Box::from_raw(ev));
    }
}

/// Observes a numeric value; it is mapped to its bin at inference time.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qn_evidence_set_value(ev: *mut QnEvidence, node: *const c_char, value: f64) -> QnStatus {
    guard(|| {
        let ev = ev.as_mut().ok_or_else(|| fail(QnStatus::NullPointer, "null handle"))?;
        ev.0.insert(text(node)?.to_string(), Observation::Value(value));
        Ok(())
    })
}

/// Observes a state by label.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qn_evidence_set_state(
    ev: *mut QnEvidence,
    node: *const c_char,
    state: *const c_char,
) -> QnStatus {
    guard(|| {
        let ev = ev.as_mut().ok_or_else(|| fail(QnStatus::NullPointer, "null handle"))?;
        ev.0.insert(text(node)?.to_string(), Observation::State(text(state)?.to_string()));
        Ok(())
    })
}

/// Posterior marginals of all nodes. `ev` may be null for the prior.
///
/// # Safety
/// `net` must be live, `ev` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qn_infer(
    net: *const QnNetwork,
    ev: *const QnEvidence,
    out: *mut *mut QnPosterior,
) -> QnStatus {
    guard(|| {
        let net = refer(net)?;
        let empty = Evidence::new();
        let evidence = ev.as_ref().map_or(&empty, |e| &e.0);
        let posterior = infer(&net.0, evidence).or_status()?;
        write_out(out, Box::into_raw(Box::new(QnPosterior(posterior))))
    })
}

/// # Safety
/// `post` must come from [`qn_infer`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qn_posterior_free(post: *mut QnPosterior) {
    if !post.is_null() {
        drop(Box::from_raw(post));
    }
}

unsafe fn node_at<'a>(post: *const QnPosterior, node: usize) -> Result<&'a qualnet::engine::NodePosterior, QnStatus> {
    refer(post)?
        .0
        .nodes
        .get(node)
        .ok_or_else(|| fail(QnStatus::UnknownNode, format!("node index {node} out of range")))
}

/// Number of states of node `node`.
///
/// # Safety
/// `post` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qn_posterior_state_count(post: *const QnPosterior, node: usize, out: *mut usize) -> QnStatus {
    guard(|| write_out(out, node_at(post, node)?.probabilities.len()))
}

/// Copies the probabilities of node `node` into `buf`, which must hold at
/// least the node's state count.
///
/// # Safety
/// `post` must be live; `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qn_posterior_probabilities(
    post: *const QnPosterior,
    node: usize,
    buf: *mut f64,
    len: usize,
) -> QnStatus {
    guard(|| {
        let probs = &node_at(post, node)?.probabilities;
        if buf.is_null() {
            return Err(fail(QnStatus::NullPointer, "null buffer"));
        }
        if len < probs.len() {
            return Err(fail(
                QnStatus::BufferTooSmall,
                format!("buffer holds {len} values, node has {}", probs.len()),
            ));
        }
        ptr::copy_nonoverlapping(probs.as_ptr(), buf, probs.len());
        Ok(())
    })
}

/// Mean, sd and mode of an interval node.
///
/// # Safety
/// `post` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qn_posterior_summary(post: *const QnPosterior, node: usize, out: *mut QnSummary) -> QnStatus {
    guard(|| {
        let n = node_at(post, node)?;
        let s = n
            .summary
            .as_ref()
            .ok_or_else(|| fail(QnStatus::NotInterval, format!("node `{}` is ranked", n.id)))?;
        write_out(
            out,
            QnSummary {
                mean: s.mean,
                sd: s.sd,
                mode: s.mode,
            },
        )
    })
}

/// Message of the last failure on this thread, or null. Release it with
/// [`qn_string_free`].
#[no_mangle]
pub extern "C" fn qn_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_deref() {
        Some(msg) => CString::new(msg.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
