//! MRT (RFC 6396) BGP4MP parsing.
//!
//! Accepts BGP4MP MESSAGE / MESSAGE_AS4 records carrying BGP UPDATEs and
//! STATE_CHANGE / STATE_CHANGE_AS4 records, and turns them into normalized
//! [`UpdateEvent`]s: one `Withdraw` per withdrawn prefix, one `Announce` per
//! NLRI prefix (all announcements from one UPDATE share the attribute
//! digest), one `StateChange` per state-change record. Everything else is
//! skipped and counted. Gzip-wrapped input is detected by magic bytes.

use crate::error::{Error, Result};
use crate::event::{sort_events, BgpState, EventDetail, Prefix, UpdateEvent};
use std::io::Read;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

pub const MRT_TYPE_BGP4MP: u16 = 16;

/// BGP4MP subtype constants.
mod subtypes {
    pub const STATE_CHANGE: u16 = 0;
    pub const MESSAGE: u16 = 1;
    pub const MESSAGE_AS4: u16 = 4;
    pub const STATE_CHANGE_AS4: u16 = 5;
}

/// BGP path attribute type codes this parser treats specially.
mod attr_types {
    pub const AS_PATH: u8 = 2;
    pub const NEXT_HOP: u8 = 3;
    pub const AS4_PATH: u8 = 17;
}

/// Fixed MRT record header (timestamp, type, subtype, body length).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MrtRecordHeader {
    pub timestamp: u32,
    pub record_type: u16,
    pub subtype: u16,
    pub length: u32,
}

/// How to react to malformed records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Record the problem in [`ParseStats`] and keep going.
    #[default]
    Lenient,
    /// Abort on the first malformed record.
    Strict,
}

/// Bookkeeping over one parse run.
///
/// `records_read = records_accepted + records_skipped + records_malformed`
/// always holds; accepted records are the update/state-change records that
/// were decoded (an empty UPDATE is accepted but yields no events).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub records_read: u64,
    pub records_accepted: u64,
    pub records_skipped: u64,
    pub records_malformed: u64,
    pub events_emitted: u64,
}

/// FNV-1a 64-bit digest over path attributes.
///
/// Attributes are hashed as (type octet, value octets) pairs sorted by type
/// code; AS_PATH, NEXT_HOP and AS4_PATH are excluded because the event
/// carries them explicitly. Two announcements compare "all fields equal"
/// exactly when as_path, next_hop and this digest all match.
pub fn attr_digest(attrs: &[(u8, Vec<u8>)]) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut sorted: Vec<&(u8, Vec<u8>)> = attrs
        .iter()
        .filter(|(code, _)| {
            *code != attr_types::AS_PATH
                && *code != attr_types::NEXT_HOP
                && *code != attr_types::AS4_PATH
        })
        .collect();
    sorted.sort_by_key(|(code, _)| *code);
    let mut hash = OFFSET;
    for (code, value) in sorted {
        hash ^= u64::from(*code);
        hash = hash.wrapping_mul(PRIME);
        for &b in value {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(PRIME);
        }
    }
    hash
}

/// Parses a full MRT stream (optionally gzip-compressed) into events.
///
/// Output is stably sorted by timestamp; ties keep record order.
pub fn parse_mrt_stream<R: Read>(mut reader: R, mode: ParseMode) -> Result<(Vec<UpdateEvent>, ParseStats)> {
    let mut data = Vec::new();
    reader.read_to_end(&mut data)?;
    if data.starts_with(&[0x1f, 0x8b]) {
        let mut decoded = Vec::new();
        flate2::read::GzDecoder::new(&data[..]).read_to_end(&mut decoded)?;
        data = decoded;
    }
    parse_mrt_bytes(&data, mode)
}

/// Parses concatenated MRT records from a byte slice.
pub fn parse_mrt_bytes(data: &[u8], mode: ParseMode) -> Result<(Vec<UpdateEvent>, ParseStats)> {
    let mut events = Vec::new();
    let mut stats = ParseStats::default();
    let mut pos: usize = 0;

    while pos < data.len() {
        let offset = pos as u64;
        stats.records_read += 1;

        let header = match read_header(data, &mut pos) {
            Ok(h) => h,
            Err(reason) => {
                // Framing is lost; nothing more can be recovered.
                stats.records_malformed += 1;
                if mode == ParseMode::Strict {
                    return Err(Error::MalformedRecord { offset, reason });
                }
                break;
            }
        };

        let body_len = header.length as usize;
        if data.len() - pos < body_len {
            stats.records_malformed += 1;
            if mode == ParseMode::Strict {
                return Err(Error::MalformedRecord {
                    offset,
                    reason: format!(
                        "truncated body: header claims {body_len} bytes, {} remain",
                        data.len() - pos
                    ),
                });
            }
            break;
        }
        let body = &data[pos..pos + body_len];
        pos += body_len;

        if header.record_type != MRT_TYPE_BGP4MP {
            stats.records_skipped += 1;
            continue;
        }
        match header.subtype {
            subtypes::MESSAGE | subtypes::MESSAGE_AS4 => {
                let as4 = header.subtype == subtypes::MESSAGE_AS4;
                match parse_bgp4mp_message(&header, body, as4) {
                    Ok(Some(mut evs)) => {
                        stats.records_accepted += 1;
                        stats.events_emitted += evs.len() as u64;
                        events.append(&mut evs);
                    }
                    Ok(None) => {
                        // Well-formed record, but not a BGP UPDATE.
                        stats.records_skipped += 1;
                    }
                    Err(reason) => {
                        stats.records_malformed += 1;
                        if mode == ParseMode::Strict {
                            return Err(Error::MalformedRecord { offset, reason });
                        }
                    }
                }
            }
            subtypes::STATE_CHANGE | subtypes::STATE_CHANGE_AS4 => {
                let as4 = header.subtype == subtypes::STATE_CHANGE_AS4;
                match parse_bgp4mp_state_change(&header, body, as4) {
                    Ok(ev) => {
                        stats.records_accepted += 1;
                        stats.events_emitted += 1;
                        events.push(ev);
                    }
                    Err(reason) => {
                        stats.records_malformed += 1;
                        if mode == ParseMode::Strict {
                            return Err(Error::MalformedRecord { offset, reason });
                        }
                    }
                }
            }
            _ => {
                stats.records_skipped += 1;
            }
        }
    }

    sort_events(&mut events);
    Ok((events, stats))
}

fn read_header(data: &[u8], pos: &mut usize) -> std::result::Result<MrtRecordHeader, String> {
    if data.len() - *pos < 12 {
        return Err(format!("truncated header: {} bytes remain", data.len() - *pos));
    }
    let b = &data[*pos..*pos + 12];
    *pos += 12;
    Ok(MrtRecordHeader {
        timestamp: u32::from_be_bytes([b[0], b[1], b[2], b[3]]),
        record_type: u16::from_be_bytes([b[4], b[5]]),
        subtype: u16::from_be_bytes([b[6], b[7]]),
        length: u32::from_be_bytes([b[8], b[9], b[10], b[11]]),
    })
}

/// Bounds-checked reader over one record body.
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.remaining() < n {
            return Err(format!("need {n} bytes, {} remain", self.remaining()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> std::result::Result<u16, String> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn read_peer_header(cur: &mut Cursor, as4: bool) -> std::result::Result<(u32, IpAddr), String> {
    let peer_as = if as4 {
        cur.u32()?
    } else {
        u32::from(cur.u16()?)
    };
    let _local_as = if as4 {
        cur.u32()?
    } else {
        u32::from(cur.u16()?)
    };
    let _ifindex = cur.u16()?;
    let afi = cur.u16()?;
    let peer_ip = read_ip(cur, afi)?;
    let _local_ip = read_ip(cur, afi)?;
    Ok((peer_as, peer_ip))
}

fn read_ip(cur: &mut Cursor, afi: u16) -> std::result::Result<IpAddr, String> {
    match afi {
        1 => {
            let b = cur.take(4)?;
            Ok(IpAddr::V4(Ipv4Addr::new(b[0], b[1], b[2], b[3])))
        }
        2 => {
            let b = cur.take(16)?;
            let mut oct = [0u8; 16];
            oct.copy_from_slice(b);
            Ok(IpAddr::V6(Ipv6Addr::from(oct)))
        }
        other => Err(format!("unsupported AFI {other}")),
    }
}

fn parse_bgp4mp_state_change(
    header: &MrtRecordHeader,
    body: &[u8],
    as4: bool,
) -> std::result::Result<UpdateEvent, String> {
    let mut cur = Cursor::new(body);
    let (peer_as, peer_ip) = read_peer_header(&mut cur, as4)?;
    let old_code = cur.u16()?;
    let new_code = cur.u16()?;
    let old_state = BgpState::from_code(old_code)
        .ok_or_else(|| format!("unknown FSM state code {old_code}"))?;
    let new_state = BgpState::from_code(new_code)
        .ok_or_else(|| format!("unknown FSM state code {new_code}"))?;
    if old_state == new_state {
        return Err(format!("state change with equal states {old_code}"));
    }
    Ok(UpdateEvent {
        timestamp: u64::from(header.timestamp),
        peer_ip,
        peer_as,
        detail: EventDetail::StateChange {
            old_state,
            new_state,
        },
    })
}

/// Returns `Ok(None)` for well-formed BGP messages that are not UPDATEs.
fn parse_bgp4mp_message(
    header: &MrtRecordHeader,
    body: &[u8],
    as4: bool,
) -> std::result::Result<Option<Vec<UpdateEvent>>, String> {
    let mut cur = Cursor::new(body);
    let (peer_as, peer_ip) = read_peer_header(&mut cur, as4)?;

    // BGP message header: 16-byte marker, 2-byte length, 1-byte type.
    let _marker = cur.take(16)?;
    let msg_len = cur.u16()? as usize;
    if msg_len < 19 {
        return Err(format!("BGP message length {msg_len} below minimum 19"));
    }
    let msg_type = cur.u8()?;
    let payload_len = msg_len - 19;
    let payload = cur.take(payload_len)?;
    if msg_type != 2 {
        return Ok(None);
    }

    let (withdrawn, announced, as_path, next_hop, digest) = parse_update_payload(payload, as4)?;

    let mut events = Vec::with_capacity(withdrawn.len() + announced.len());
    let timestamp = u64::from(header.timestamp);
    for prefix in withdrawn {
        events.push(UpdateEvent {
            timestamp,
            peer_ip,
            peer_as,
            detail: EventDetail::Withdraw { prefix },
        });
    }
    for prefix in announced {
        events.push(UpdateEvent {
            timestamp,
            peer_ip,
            peer_as,
            detail: EventDetail::Announce {
                prefix,
                as_path: as_path.clone(),
                next_hop,
                attr_digest: digest,
            },
        });
    }
    Ok(Some(events))
}

type UpdateParts = (Vec<Prefix>, Vec<Prefix>, Vec<u32>, Option<IpAddr>, u64);

fn parse_update_payload(payload: &[u8], as4: bool) -> std::result::Result<UpdateParts, String> {
    let mut cur = Cursor::new(payload);

    let withdrawn_len = cur.u16()? as usize;
    let withdrawn_bytes = cur.take(withdrawn_len)?;
    let withdrawn = parse_prefix_list(withdrawn_bytes)?;

    let attr_len = cur.u16()? as usize;
    let attr_bytes = cur.take(attr_len)?;
    let (attrs, as_path, next_hop) = parse_path_attributes(attr_bytes, as4)?;

    // NLRI runs to the end of the message.
    let nlri_bytes = cur.take(cur.remaining())?;
    let announced = parse_prefix_list(nlri_bytes)?;

    let digest = attr_digest(&attrs);
    Ok((withdrawn, announced, as_path, next_hop, digest))
}

fn parse_prefix_list(bytes: &[u8]) -> std::result::Result<Vec<Prefix>, String> {
    let mut cur = Cursor::new(bytes);
    let mut prefixes = Vec::new();
    while cur.remaining() > 0 {
        let bitlen = cur.u8()?;
        if bitlen > 32 {
            return Err(format!("IPv4 prefix length {bitlen} exceeds 32"));
        }
        let nbytes = usize::from(bitlen).div_ceil(8);
        let b = cur.take(nbytes)?;
        let mut oct = [0u8; 4];
        oct[..nbytes].copy_from_slice(b);
        prefixes.push(
            Prefix::new(IpAddr::V4(Ipv4Addr::from(oct)), bitlen).map_err(|e| e.to_string())?,
        );
    }
    Ok(prefixes)
}

type AttrParts = (Vec<(u8, Vec<u8>)>, Vec<u32>, Option<IpAddr>);

fn parse_path_attributes(bytes: &[u8], as4: bool) -> std::result::Result<AttrParts, String> {
    let mut cur = Cursor::new(bytes);
    let mut attrs = Vec::new();
    let mut as_path: Option<Vec<u32>> = None;
    let mut as4_path: Option<Vec<u32>> = None;
    let mut next_hop = None;

    while cur.remaining() > 0 {
        let flags = cur.u8()?;
        let type_code = cur.u8()?;
        let len = if flags & 0x10 != 0 {
            cur.u16()? as usize
        } else {
            usize::from(cur.u8()?)
        };
        let value = cur.take(len)?;

        match type_code {
            attr_types::AS_PATH => {
                as_path = Some(parse_as_path_segments(value, if as4 { 4 } else { 2 })?);
            }
            attr_types::AS4_PATH => {
                as4_path = Some(parse_as_path_segments(value, 4)?);
            }
            attr_types::NEXT_HOP => {
                if value.len() != 4 {
                    return Err(format!("NEXT_HOP length {} != 4", value.len()));
                }
                next_hop = Some(IpAddr::V4(Ipv4Addr::new(
                    value[0], value[1], value[2], value[3],
                )));
            }
            _ => {}
        }
        attrs.push((type_code, value.to_vec()));
    }

    // AS4_PATH supersedes AS_PATH when both are present.
    let path = as4_path.or(as_path).unwrap_or_default();
    Ok((attrs, path, next_hop))
}

fn parse_as_path_segments(bytes: &[u8], asn_size: usize) -> std::result::Result<Vec<u32>, String> {
    let mut cur = Cursor::new(bytes);
    let mut path = Vec::new();
    while cur.remaining() > 0 {
        let seg_type = cur.u8()?;
        if !(1..=4).contains(&seg_type) {
            return Err(format!("unknown AS path segment type {seg_type}"));
        }
        let count = usize::from(cur.u8()?);
        for _ in 0..count {
            let asn = if asn_size == 4 {
                cur.u32()?
            } else {
                u32::from(cur.u16()?)
            };
            path.push(asn);
        }
    }
    Ok(path)
}
