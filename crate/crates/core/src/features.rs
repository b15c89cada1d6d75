//! Routing-dynamics feature extraction.
//!
//! Events are grouped into fixed-width time bins and folded into 18 per-bin
//! features: raw update counts, distinct-prefix counts, the instability
//! classes of successive updates per (peer, prefix), and peer/session
//! bookkeeping (active peers, reachable prefixes, table-exchange activity).

use crate::error::{Error, Result};
use crate::event::{is_sorted, EventDetail, EventKind, Prefix, UpdateEvent};
use crate::matrix::{BinKey, BinRange, FeatureMatrix, MatrixMeta};
use crate::num::Scalar;
use std::collections::{HashMap, HashSet};
use std::net::IpAddr;

/// The 18 base features, in canonical column order.
pub const FEATURE_NAMES: [&str; 18] = [
    "Announce",
    "Withdrawal",
    "Update",
    "AnnouPrefix",
    "WithdwPrefix",
    "UpdatedPrefix",
    "WWDup",
    "AADupType1",
    "AADupType2",
    "AADiff",
    "WADupType1",
    "WADupType2",
    "WADup",
    "WADiff",
    "AW",
    "NPeers",
    "ReachPrefix",
    "TblExchgA",
];

pub fn base_feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Classification of one announce/withdraw against the per-(peer,prefix)
/// history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateClass {
    /// First event ever seen for the key.
    Plain,
    /// Withdraw following a withdraw.
    WwDup,
    /// Announce repeating the previous announcement exactly.
    AaDupType1,
    /// Announce repeating AS path and next hop, other attributes changed.
    AaDupType2,
    /// Announce replacing the path (implicit withdrawal).
    AaDiff,
    /// Re-announcement after a withdrawal, identical to the withdrawn route.
    WaDupType1,
    /// Re-announcement after a withdrawal, same AS path and next hop only.
    WaDupType2,
    /// New path announced after a withdrawal.
    WaDiff,
    /// Withdraw following an announce.
    Aw,
}

/// Route identity of the most recent announcement for a key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathInfo {
    pub as_path: Vec<u32>,
    pub next_hop: Option<IpAddr>,
    pub attr_digest: u64,
}

impl PathInfo {
    fn same_route(&self, other: &PathInfo) -> bool {
        self.as_path == other.as_path && self.next_hop == other.next_hop
    }

    fn same_everything(&self, other: &PathInfo) -> bool {
        self.same_route(other) && self.attr_digest == other.attr_digest
    }
}

/// Per-(peer, prefix) classification state.
///
/// `last_path` survives withdrawals so a re-announcement can be compared
/// against the route that was withdrawn.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixState {
    last_kind: Option<EventKind>,
    last_path: Option<PathInfo>,
    /// Whether the most recent announce repeated the route before it
    /// (drives the strict AW variant).
    last_announce_same_route: bool,
}

impl PrefixState {
    pub fn reachable(&self) -> bool {
        self.last_kind == Some(EventKind::Announce)
    }
}

/// Classifies one update against the key's state and advances the state.
///
/// State-change events are not per-prefix updates and are rejected.
pub fn classify_update(state: &mut PrefixState, event: &UpdateEvent) -> Result<UpdateClass> {
    match &event.detail {
        EventDetail::StateChange { .. } => Err(Error::param(
            "state-change events cannot be classified against a prefix",
        )),
        EventDetail::Withdraw { .. } => {
            let class = match state.last_kind {
                None => UpdateClass::Plain,
                Some(EventKind::Withdraw) => UpdateClass::WwDup,
                Some(EventKind::Announce) => UpdateClass::Aw,
                Some(EventKind::StateChange) => unreachable!("never stored"),
            };
            state.last_kind = Some(EventKind::Withdraw);
            Ok(class)
        }
        EventDetail::Announce {
            as_path,
            next_hop,
            attr_digest,
            ..
        } => {
            let incoming = PathInfo {
                as_path: as_path.clone(),
                next_hop: *next_hop,
                attr_digest: *attr_digest,
            };
            let class = match (state.last_kind, &state.last_path) {
                (None, _) => UpdateClass::Plain,
                (Some(EventKind::Announce), Some(prev)) => {
                    if prev.same_everything(&incoming) {
                        UpdateClass::AaDupType1
                    } else if prev.same_route(&incoming) {
                        UpdateClass::AaDupType2
                    } else {
                        UpdateClass::AaDiff
                    }
                }
                (Some(EventKind::Withdraw), Some(prev)) => {
                    if prev.same_everything(&incoming) {
                        UpdateClass::WaDupType1
                    } else if prev.same_route(&incoming) {
                        UpdateClass::WaDupType2
                    } else {
                        UpdateClass::WaDiff
                    }
                }
                // A withdraw arrived first, so there is no stored route.
                (Some(EventKind::Withdraw), None) => UpdateClass::WaDiff,
                (Some(EventKind::Announce), None) => unreachable!("announce always stores a path"),
                (Some(EventKind::StateChange), _) => unreachable!("never stored"),
            };
            state.last_announce_same_route = state
                .last_path
                .as_ref()
                .is_some_and(|prev| prev.same_route(&incoming));
            state.last_kind = Some(EventKind::Announce);
            state.last_path = Some(incoming);
            Ok(class)
        }
    }
}

/// Extraction parameters.
#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    /// Bin width in seconds.
    pub bin_width: u64,
    /// Bin-0 epoch; defaults to the first event's timestamp.
    pub dataset_start: Option<u64>,
    /// T: a peer counts toward TblExchgA only if it transitioned to
    /// Established within the previous T bins.
    pub table_exchange_window_bins: u64,
    /// P: ... and announced at least this many distinct prefixes in the bin.
    pub table_exchange_min_prefixes: usize,
    /// Strict AW variant: a withdraw counts as AW only when the announce it
    /// follows had repeated the route before it; other announce-then-withdraw
    /// sequences fall back to Plain. Off by default.
    pub strict_aw_equality: bool,
    pub dataset_id: Option<String>,
    /// Ground-truth label copied into the output metadata.
    pub anomaly_interval: Option<BinRange>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            bin_width: 60,
            dataset_start: None,
            table_exchange_window_bins: 5,
            table_exchange_min_prefixes: 100,
            strict_aw_equality: false,
            dataset_id: None,
            anomaly_interval: None,
        }
    }
}

#[derive(Debug, Default)]
struct PeerTracker {
    established: bool,
    last_established_bin: Option<u64>,
    announced_in_bin: HashSet<Prefix>,
}

#[derive(Debug, Default, Clone)]
struct BinCounters {
    announce: u64,
    withdraw: u64,
    ww_dup: u64,
    aa_dup1: u64,
    aa_dup2: u64,
    aa_diff: u64,
    wa_dup1: u64,
    wa_dup2: u64,
    wa_diff: u64,
    aw: u64,
}

/// Streams sorted events into the per-bin feature matrix.
///
/// Gap bins emit zero counters but carry the peer/reachability state
/// forward. Empty input yields an empty (0-row) matrix.
pub fn extract_features<F: Scalar>(
    events: &[UpdateEvent],
    config: &ExtractionConfig,
) -> Result<FeatureMatrix<F>> {
    if config.bin_width == 0 {
        return Err(Error::param("bin width must be positive"));
    }
    if !is_sorted(events) {
        return Err(Error::UnsortedInput);
    }

    let meta = MatrixMeta {
        bin_width: config.bin_width,
        dataset_id: config.dataset_id.clone(),
        anomaly_interval: config.anomaly_interval,
        ..MatrixMeta::default()
    };
    if events.is_empty() {
        return FeatureMatrix::new(base_feature_names(), Vec::new(), Vec::new(), meta);
    }

    let start = config.dataset_start.unwrap_or(events[0].timestamp);
    if events[0].timestamp < start {
        return Err(Error::param("dataset_start is after the first event"));
    }

    let mut extractor = Extractor::new(config);
    let first_bin = (events[0].timestamp - start) / config.bin_width;
    let last_bin = (events[events.len() - 1].timestamp - start) / config.bin_width;
    let nbins = usize::try_from(last_bin - first_bin + 1)
        .map_err(|_| Error::param("bin span too large"))?;

    let mut bin_keys = Vec::with_capacity(nbins);
    let mut values: Vec<F> = Vec::with_capacity(nbins * FEATURE_NAMES.len());
    let mut current_bin = first_bin;

    for (index, event) in events.iter().enumerate() {
        let bin = (event.timestamp - start) / config.bin_width;
        while current_bin < bin {
            extractor.flush_bin(current_bin, start, config.bin_width, &mut bin_keys, &mut values);
            current_bin += 1;
        }
        extractor.ingest(event).map_err(|e| match e {
            Error::InvalidEvent { reason, .. } => Error::InvalidEvent { index, reason },
            other => other,
        })?;
    }
    extractor.flush_bin(current_bin, start, config.bin_width, &mut bin_keys, &mut values);

    FeatureMatrix::new(base_feature_names(), bin_keys, values, meta)
}

struct Extractor<'a> {
    config: &'a ExtractionConfig,
    prefix_states: HashMap<(IpAddr, Prefix), PrefixState>,
    peers: HashMap<IpAddr, PeerTracker>,
    /// Count of peers currently announcing each prefix.
    reach_count: HashMap<Prefix, usize>,
    reachable_prefixes: usize,
    counters: BinCounters,
    announced_pairs: HashSet<(IpAddr, Prefix)>,
    withdrawn_pairs: HashSet<(IpAddr, Prefix)>,
}

impl<'a> Extractor<'a> {
    fn new(config: &'a ExtractionConfig) -> Self {
        Extractor {
            config,
            prefix_states: HashMap::new(),
            peers: HashMap::new(),
            reach_count: HashMap::new(),
            reachable_prefixes: 0,
            counters: BinCounters::default(),
            announced_pairs: HashSet::new(),
            withdrawn_pairs: HashSet::new(),
        }
    }

    fn ingest(&mut self, event: &UpdateEvent) -> Result<()> {
        event
            .validate()
            .map_err(|reason| Error::InvalidEvent { index: 0, reason })?;
        match &event.detail {
            EventDetail::StateChange { new_state, .. } => {
                let peer = self.peers.entry(event.peer_ip).or_default();
                peer.established = new_state.code() == 6;
                if peer.established {
                    // Bin is stamped at flush; remember it came up "now".
                    peer.last_established_bin = Some(u64::MAX);
                }
            }
            EventDetail::Announce { prefix, .. } | EventDetail::Withdraw { prefix } => {
                // A peer first seen through an update is assumed established.
                self.peers.entry(event.peer_ip).or_insert_with(|| PeerTracker {
                    established: true,
                    ..PeerTracker::default()
                });

                let key = (event.peer_ip, prefix.clone());
                let state = self.prefix_states.entry(key.clone()).or_default();
                let was_reachable = state.reachable();
                let was_same_route = state.last_announce_same_route;
                let mut class = classify_update(state, event)?;
                if self.config.strict_aw_equality && class == UpdateClass::Aw && !was_same_route {
                    class = UpdateClass::Plain;
                }
                let now_reachable = state.reachable();

                match event.kind() {
                    EventKind::Announce => {
                        self.counters.announce += 1;
                        self.announced_pairs.insert(key.clone());
                        self.peers
                            .get_mut(&event.peer_ip)
                            .expect("peer inserted above")
                            .announced_in_bin
                            .insert(prefix.clone());
                    }
                    EventKind::Withdraw => {
                        self.counters.withdraw += 1;
                        self.withdrawn_pairs.insert(key.clone());
                    }
                    EventKind::StateChange => unreachable!(),
                }

                if !was_reachable && now_reachable {
                    let n = self.reach_count.entry(prefix.clone()).or_insert(0);
                    *n += 1;
                    if *n == 1 {
                        self.reachable_prefixes += 1;
                    }
                } else if was_reachable && !now_reachable {
                    let n = self.reach_count.get_mut(prefix).expect("tracked prefix");
                    *n -= 1;
                    if *n == 0 {
                        self.reachable_prefixes -= 1;
                    }
                }

                match class {
                    UpdateClass::Plain => {}
                    UpdateClass::WwDup => self.counters.ww_dup += 1,
                    UpdateClass::AaDupType1 => self.counters.aa_dup1 += 1,
                    UpdateClass::AaDupType2 => self.counters.aa_dup2 += 1,
                    UpdateClass::AaDiff => self.counters.aa_diff += 1,
                    UpdateClass::WaDupType1 => self.counters.wa_dup1 += 1,
                    UpdateClass::WaDupType2 => self.counters.wa_dup2 += 1,
                    UpdateClass::WaDiff => self.counters.wa_diff += 1,
                    UpdateClass::Aw => self.counters.aw += 1,
                }
            }
        }
        Ok(())
    }

    fn flush_bin<F: Scalar>(
        &mut self,
        bin: u64,
        dataset_start: u64,
        width: u64,
        bin_keys: &mut Vec<BinKey>,
        values: &mut Vec<F>,
    ) {
        let c = &self.counters;
        let announced_pairs = self.announced_pairs.len() as u64;
        let withdrawn_pairs = self.withdrawn_pairs.len() as u64;

        let mut n_peers = 0u64;
        let mut tbl_exchg = 0u64;
        for peer in self.peers.values_mut() {
            // Transitions recorded during this bin get stamped here.
            if peer.last_established_bin == Some(u64::MAX) {
                peer.last_established_bin = Some(bin);
            }
            if peer.established {
                n_peers += 1;
            }
            let recent = peer
                .last_established_bin
                .is_some_and(|b| bin - b <= self.config.table_exchange_window_bins);
            if recent && peer.announced_in_bin.len() >= self.config.table_exchange_min_prefixes {
                tbl_exchg += 1;
            }
        }

        let row: [u64; 18] = [
            c.announce,
            c.withdraw,
            c.announce + c.withdraw,
            announced_pairs,
            withdrawn_pairs,
            announced_pairs + withdrawn_pairs,
            c.ww_dup,
            c.aa_dup1,
            c.aa_dup2,
            c.aa_diff,
            c.wa_dup1,
            c.wa_dup2,
            c.wa_dup1 + c.wa_dup2,
            c.wa_diff,
            c.aw,
            n_peers,
            self.reachable_prefixes as u64,
            tbl_exchg,
        ];
        values.extend(row.iter().map(|&v| F::from_count(v as usize)));
        bin_keys.push(BinKey {
            index: bin,
            start: dataset_start + bin * width,
            width,
        });

        self.counters = BinCounters::default();
        self.announced_pairs.clear();
        self.withdrawn_pairs.clear();
        for peer in self.peers.values_mut() {
            peer.announced_in_bin.clear();
        }
    }
}

/// Column indices (into [`FEATURE_NAMES`]) whose values are per-bin counts;
/// the complement (NPeers, ReachPrefix) is end-of-bin state.
const STATE_COLUMNS: [usize; 2] = [15, 16];

/// Aggregates groups of `factor` consecutive bins: counts are summed,
/// state-like columns keep the last value of the group. A short trailing
/// group is kept and flagged in the metadata.
pub fn rebin<F: Scalar>(matrix: &FeatureMatrix<F>, factor: usize) -> Result<FeatureMatrix<F>> {
    if factor < 1 {
        return Err(Error::param("rebin factor must be at least 1"));
    }
    if matrix.column_names() != base_feature_names().as_slice() {
        return Err(Error::ColumnMismatch(
            "rebin applies to the 18-column base feature matrix".into(),
        ));
    }
    if factor == 1 || matrix.nrows() == 0 {
        return Ok(matrix.clone());
    }

    let ncols = matrix.ncols();
    let n_groups = matrix.nrows().div_ceil(factor);
    let tail = matrix.nrows() % factor;
    let old_width = matrix.meta().bin_width;
    let new_width = old_width * factor as u64;

    let mut bin_keys = Vec::with_capacity(n_groups);
    let mut values = Vec::with_capacity(n_groups * ncols);
    let first_index = matrix.bin_keys()[0].index;
    let origin = matrix.bin_keys()[0].start;

    for g in 0..n_groups {
        let lo = g * factor;
        let hi = ((g + 1) * factor).min(matrix.nrows());
        for c in 0..ncols {
            let v = if STATE_COLUMNS.contains(&c) {
                matrix.value(hi - 1, c)
            } else {
                (lo..hi).fold(F::zero(), |acc, r| acc + matrix.value(r, c))
            };
            values.push(v);
        }
        bin_keys.push(BinKey {
            index: first_index / factor as u64 + g as u64,
            start: origin + g as u64 * new_width,
            width: new_width,
        });
    }

    let mut meta = matrix.meta().clone();
    meta.bin_width = new_width;
    meta.partial_tail_bins = (tail != 0).then_some(tail as u64);
    meta.anomaly_interval = matrix
        .anomaly_interval()
        .map(|r| BinRange::new(r.start / factor, r.end / factor).expect("scaled range stays valid"));
    FeatureMatrix::new(base_feature_names(), bin_keys, values, meta)
}
