//! Normalized BGP update events and the plain-text event log.
//!
//! The event log is the interchange format between the ingest stage and the
//! feature extractor: one event per line, ten comma-separated columns
//! (`timestamp,peer_ip,peer_as,kind,prefix,as_path,next_hop,attr_digest,old_state,new_state`),
//! `#` comment lines ignored, LF line endings. Unused columns stay empty.

use crate::error::{Error, Result};
use std::fmt;
use std::net::IpAddr;
use std::str::FromStr;

/// BGP finite-state-machine states (RFC 4271 numbering).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum BgpState {
    Idle = 1,
    Connect = 2,
    Active = 3,
    OpenSent = 4,
    OpenConfirm = 5,
    Established = 6,
}

impl BgpState {
    pub fn from_code(code: u16) -> Option<Self> {
        match code {
            1 => Some(BgpState::Idle),
            2 => Some(BgpState::Connect),
            3 => Some(BgpState::Active),
            4 => Some(BgpState::OpenSent),
            5 => Some(BgpState::OpenConfirm),
            6 => Some(BgpState::Established),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// An IP prefix in CIDR form. IPv6 prefixes are carried as text, no
/// attribute-level IPv6 handling happens downstream.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    pub addr: IpAddr,
    pub len: u8,
}

impl Prefix {
    pub fn new(addr: IpAddr, len: u8) -> Result<Self> {
        let max = match addr {
            IpAddr::V4(_) => 32,
            IpAddr::V6(_) => 128,
        };
        if len > max {
            return Err(Error::param(format!("prefix length {len} exceeds {max}")));
        }
        Ok(Prefix { addr, len })
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

impl FromStr for Prefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (addr, len) = s
            .split_once('/')
            .ok_or_else(|| Error::param(format!("prefix `{s}` missing /len")))?;
        let addr: IpAddr = addr
            .parse()
            .map_err(|_| Error::param(format!("bad prefix address `{addr}`")))?;
        let len: u8 = len
            .parse()
            .map_err(|_| Error::param(format!("bad prefix length `{len}`")))?;
        Prefix::new(addr, len)
    }
}

/// Discriminant of an [`UpdateEvent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Announce,
    Withdraw,
    StateChange,
}

/// Kind-specific payload of an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventDetail {
    Announce {
        prefix: Prefix,
        /// Flattened AS path, AS4 numbers. May be empty.
        as_path: Vec<u32>,
        /// May be absent when the source carried no NEXT_HOP.
        next_hop: Option<IpAddr>,
        /// 64-bit digest over the remaining path attributes; see `mrt::attr_digest`.
        attr_digest: u64,
    },
    Withdraw {
        prefix: Prefix,
    },
    StateChange {
        old_state: BgpState,
        new_state: BgpState,
    },
}

/// One normalized BGP event: an announcement, a withdrawal, or a peer
/// session state change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateEvent {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub peer_ip: IpAddr,
    pub peer_as: u32,
    pub detail: EventDetail,
}

impl UpdateEvent {
    pub fn kind(&self) -> EventKind {
        match self.detail {
            EventDetail::Announce { .. } => EventKind::Announce,
            EventDetail::Withdraw { .. } => EventKind::Withdraw,
            EventDetail::StateChange { .. } => EventKind::StateChange,
        }
    }

    /// Prefix of an announce/withdraw event; `None` for state changes.
    pub fn prefix(&self) -> Option<&Prefix> {
        match &self.detail {
            EventDetail::Announce { prefix, .. } | EventDetail::Withdraw { prefix } => Some(prefix),
            EventDetail::StateChange { .. } => None,
        }
    }

    /// Checks the invariants the payload enum cannot enforce on its own.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if let EventDetail::StateChange {
            old_state,
            new_state,
        } = self.detail
        {
            if old_state == new_state {
                return Err(format!(
                    "state change with old_state == new_state ({})",
                    old_state.code()
                ));
            }
        }
        Ok(())
    }
}

/// Stable sort by timestamp; ties keep input order.
pub fn sort_events(events: &mut [UpdateEvent]) {
    events.sort_by_key(|e| e.timestamp);
}

pub fn is_sorted(events: &[UpdateEvent]) -> bool {
    events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp)
}

const HEADER: &str =
    "# timestamp,peer_ip,peer_as,kind,prefix,as_path,next_hop,attr_digest,old_state,new_state";

/// Serializes events into the canonical event-log text.
///
/// Inverts [`parse_event_log`]; invalid events are rejected with their index.
pub fn write_event_log(events: &[UpdateEvent]) -> Result<String> {
    let mut out = String::with_capacity(events.len() * 64 + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for (index, event) in events.iter().enumerate() {
        event.validate().map_err(|reason| Error::InvalidEvent { index, reason })?;
        write_event_line(&mut out, event);
        out.push('\n');
    }
    Ok(out)
}

fn write_event_line(out: &mut String, event: &UpdateEvent) {
    use fmt::Write;
    write!(
        out,
        "{},{},{},",
        event.timestamp, event.peer_ip, event.peer_as
    )
    .unwrap();
    match &event.detail {
        EventDetail::Announce {
            prefix,
            as_path,
            next_hop,
            attr_digest,
        } => {
            write!(out, "A,{prefix},").unwrap();
            for (i, asn) in as_path.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{asn}").unwrap();
            }
            out.push(',');
            if let Some(nh) = next_hop {
                write!(out, "{nh}").unwrap();
            }
            write!(out, ",{attr_digest:016x},,").unwrap();
        }
        EventDetail::Withdraw { prefix } => {
            write!(out, "W,{prefix},,,,,").unwrap();
        }
        EventDetail::StateChange {
            old_state,
            new_state,
        } => {
            write!(out, "S,,,,,{},{}", old_state.code(), new_state.code()).unwrap();
        }
    }
}

/// Parses the canonical event log: one event per non-comment line, in file
/// order. Errors carry the offending 1-based line number.
pub fn parse_event_log(text: &str) -> Result<Vec<UpdateEvent>> {
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        events.push(parse_event_line(line, lineno)?);
    }
    Ok(events)
}

fn parse_event_line(line: &str, lineno: usize) -> Result<UpdateEvent> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != 10 {
        return Err(Error::line(
            lineno,
            format!("expected 10 columns, found {}", cols.len()),
        ));
    }
    let timestamp: u64 = cols[0]
        .parse()
        .map_err(|_| Error::line(lineno, format!("bad timestamp `{}`", cols[0])))?;
    let peer_ip: IpAddr = cols[1]
        .parse()
        .map_err(|_| Error::line(lineno, format!("bad peer_ip `{}`", cols[1])))?;
    let peer_as: u32 = cols[2]
        .parse()
        .map_err(|_| Error::line(lineno, format!("bad peer_as `{}`", cols[2])))?;

    let detail = match cols[3] {
        "A" => {
            let prefix = parse_prefix_col(cols[4], lineno)?;
            let as_path = parse_as_path(cols[5], lineno)?;
            let next_hop = if cols[6].is_empty() {
                None
            } else {
                Some(
                    cols[6]
                        .parse()
                        .map_err(|_| Error::line(lineno, format!("bad next_hop `{}`", cols[6])))?,
                )
            };
            let attr_digest = u64::from_str_radix(cols[7], 16)
                .map_err(|_| Error::line(lineno, format!("bad attr_digest `{}`", cols[7])))?;
            require_empty(&cols[8..10], lineno, "state columns on announce")?;
            EventDetail::Announce {
                prefix,
                as_path,
                next_hop,
                attr_digest,
            }
        }
        "W" => {
            let prefix = parse_prefix_col(cols[4], lineno)?;
            require_empty(&cols[5..10], lineno, "attribute columns on withdraw")?;
            EventDetail::Withdraw { prefix }
        }
        "S" => {
            require_empty(&cols[4..8], lineno, "prefix/attribute columns on state change")?;
            let old_state = parse_state_col(cols[8], lineno)?;
            let new_state = parse_state_col(cols[9], lineno)?;
            if old_state == new_state {
                return Err(Error::line(lineno, "state change with equal states"));
            }
            EventDetail::StateChange {
                old_state,
                new_state,
            }
        }
        other => {
            return Err(Error::line(lineno, format!("unknown kind `{other}`")));
        }
    };

    Ok(UpdateEvent {
        timestamp,
        peer_ip,
        peer_as,
        detail,
    })
}

fn parse_prefix_col(s: &str, lineno: usize) -> Result<Prefix> {
    if s.is_empty() {
        return Err(Error::line(lineno, "empty prefix"));
    }
    s.parse()
        .map_err(|e| Error::line(lineno, format!("bad prefix `{s}`: {e}")))
}

fn parse_as_path(s: &str, lineno: usize) -> Result<Vec<u32>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(' ')
        .map(|tok| {
            tok.parse()
                .map_err(|_| Error::line(lineno, format!("bad AS number `{tok}` in path")))
        })
        .collect()
}

fn parse_state_col(s: &str, lineno: usize) -> Result<BgpState> {
    let code: u16 = s
        .parse()
        .map_err(|_| Error::line(lineno, format!("bad state code `{s}`")))?;
    BgpState::from_code(code)
        .ok_or_else(|| Error::line(lineno, format!("state code {code} outside 1..6")))
}

fn require_empty(cols: &[&str], lineno: usize, what: &str) -> Result<()> {
    if cols.iter().any(|c| !c.is_empty()) {
        return Err(Error::line(lineno, format!("unexpected {what}")));
    }
    Ok(())
}
