#!/usr/bin/env python3
"""Builds the golden MRT fixture for the parser tests.

Writes 1000 MRT records with raw struct packing (no shared code with the
Rust parser) plus the expected decode as an event-log CSV, with attribute
digests computed here independently (FNV-1a 64 over (type, value) pairs
sorted by type code, excluding AS_PATH/NEXT_HOP/AS4_PATH). Regenerate with:

    python3 tools/make_mrt_fixture.py

Outputs land in crates/core/tests/data/.
"""

import ipaddress
import random
import struct
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK = 0xFFFFFFFFFFFFFFFF

BGP4MP = 16
SUB_STATE_CHANGE = 0
SUB_MESSAGE = 1
SUB_MESSAGE_AS4 = 4
SUB_STATE_CHANGE_AS4 = 5


def fnv1a64(data: bytes, h: int = FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK
    return h


def attr_digest(attrs):
    """attrs: list of (type_code, value_bytes) in wire order."""
    kept = sorted((a for a in attrs if a[0] not in (2, 3, 17)), key=lambda a: a[0])
    h = FNV_OFFSET
    for code, value in kept:
        h = fnv1a64(bytes([code]) + value, h)
    return h


def mrt_record(ts, rtype, subtype, body):
    return struct.pack(">IHHI", ts, rtype, subtype, len(body)) + body


def pack_ip(ip):
    return ipaddress.ip_address(ip).packed


def peer_header(peer_as, peer_ip, as4):
    afi = 1 if ipaddress.ip_address(peer_ip).version == 4 else 2
    local_ip = "10.255.0.1" if afi == 1 else "2001:db8:ffff::1"
    fmt_as = ">I" if as4 else ">H"
    out = struct.pack(fmt_as, peer_as) + struct.pack(fmt_as, 64999)
    out += struct.pack(">HH", 7, afi)
    out += pack_ip(peer_ip) + pack_ip(local_ip)
    return out


def encode_prefix(prefix):
    net = ipaddress.ip_network(prefix)
    nbytes = (net.prefixlen + 7) // 8
    return bytes([net.prefixlen]) + net.network_address.packed[:nbytes]


def encode_attr(code, value, extended=False, flags=None):
    if flags is None:
        flags = 0x40  # well-known transitive
    if extended:
        flags |= 0x10
        return bytes([flags, code]) + struct.pack(">H", len(value)) + value
    return bytes([flags, code, len(value)]) + value


def encode_as_path(asns, asn_size):
    fmt = ">I" if asn_size == 4 else ">H"
    seg = bytes([2, len(asns)])  # AS_SEQUENCE
    for a in asns:
        seg += struct.pack(fmt, a)
    return seg


def bgp_message(msg_type, payload):
    return b"\xff" * 16 + struct.pack(">H", 19 + len(payload)) + bytes([msg_type]) + payload


def update_message(withdrawn, attrs_wire, nlri):
    wd = b"".join(encode_prefix(p) for p in withdrawn)
    nl = b"".join(encode_prefix(p) for p in nlri)
    payload = struct.pack(">H", len(wd)) + wd
    payload += struct.pack(">H", len(attrs_wire)) + attrs_wire
    payload += nl
    return bgp_message(2, payload)


def fmt_as_path(asns):
    return " ".join(str(a) for a in asns)


def main():
    rng = random.Random(20260809)
    OUT_DIR.mkdir(parents=True, exist_ok=True)

    # (as_number, ip, only_as4_records)
    peers = [
        (64500, "198.51.100.1", False),
        (64501, "198.51.100.2", False),
        (65010, "198.51.100.3", False),
        (4200000007, "198.51.100.4", True),
        (64777, "2001:db8::5", False),
    ]
    prefix_pool = [f"10.{i}.{j}.0/24" for i in range(4) for j in range(12)]
    prefix_pool += ["192.0.2.0/25", "198.18.0.0/15", "203.0.113.0/24", "172.16.0.0/12"]

    records = bytearray()
    expected_lines = [
        "# timestamp,peer_ip,peer_as,kind,prefix,as_path,next_hop,attr_digest,old_state,new_state"
    ]
    n_accepted = 0
    n_skipped = 0
    n_events = 0

    ts = 1043452800
    for i in range(1000):
        ts += rng.randint(0, 3)
        roll = rng.random()

        if roll < 0.70:
            # BGP4MP UPDATE (subtype 1 or 4)
            as4_peers = [p for p in peers]
            peer_as, peer_ip, as4_only = rng.choice(as4_peers)
            as4 = as4_only or rng.random() < 0.3
            subtype = SUB_MESSAGE_AS4 if as4 else SUB_MESSAGE
            asn_size = 4 if as4 else 2

            is_withdraw_only = rng.random() < 0.15
            is_eor = not is_withdraw_only and rng.random() < 0.02

            withdrawn = []
            nlri = []
            attrs = []  # (code, value) wire order
            as_path = []
            next_hop = None

            if is_eor:
                pass
            elif is_withdraw_only:
                withdrawn = rng.sample(prefix_pool, rng.randint(1, 3))
            else:
                withdrawn = rng.sample(prefix_pool, rng.randint(0, 2))
                nlri = rng.sample(
                    [p for p in prefix_pool if p not in withdrawn], rng.randint(1, 4)
                )
                hops = rng.randint(1, 4)
                as_path = [peer_as if asn_size == 4 else min(peer_as, 65000)]
                as_path += [rng.randint(64496, 65000) for _ in range(hops - 1)]
                use_as4_path = not as4 and rng.random() < 0.15
                wire_path = list(as_path)
                if use_as4_path:
                    # One hop above the 16-bit range: AS_TRANS on the wire,
                    # the real number in AS4_PATH (same length).
                    as_path[-1] = rng.randint(70000, 4000000000)
                    wire_path[-1] = 23456

                next_hop = f"192.0.2.{rng.randint(1, 254)}"
                attrs.append((1, bytes([rng.randint(0, 2)])))  # ORIGIN
                attrs.append((2, encode_as_path(wire_path, asn_size)))
                attrs.append((3, pack_ip(next_hop)))
                if use_as4_path:
                    attrs.append((17, encode_as_path(as_path, 4)))
                if rng.random() < 0.5:
                    attrs.append((4, struct.pack(">I", rng.randint(0, 500))))  # MED
                if rng.random() < 0.4:
                    ncomm = rng.randint(1, 70)  # large lists exercise ext. length
                    comm = b"".join(
                        struct.pack(">HH", rng.randint(64496, 65000), rng.randint(0, 999))
                        for _ in range(ncomm)
                    )
                    attrs.append((8, comm))
                rng.shuffle(attrs)

            wire = b""
            for code, value in attrs:
                flags = 0x40
                if code in (4,):
                    flags = 0x80  # optional non-transitive
                if code in (8, 17):
                    flags = 0xC0  # optional transitive
                extended = len(value) > 255 or (code == 8 and rng.random() < 0.3)
                wire += encode_attr(code, value, extended=extended, flags=flags)

            body = peer_header(peer_as, peer_ip, as4) + update_message(withdrawn, wire, nlri)
            records += mrt_record(ts, BGP4MP, subtype, body)
            n_accepted += 1

            digest = attr_digest(attrs)
            for p in withdrawn:
                expected_lines.append(f"{ts},{peer_ip},{peer_as},W,{p},,,,,")
                n_events += 1
            for p in nlri:
                expected_lines.append(
                    f"{ts},{peer_ip},{peer_as},A,{p},{fmt_as_path(as_path)},{next_hop},{digest:016x},,"
                )
                n_events += 1

        elif roll < 0.82:
            # State change (plain or AS4)
            peer_as, peer_ip, as4_only = rng.choice(peers)
            as4 = as4_only or rng.random() < 0.5
            subtype = SUB_STATE_CHANGE_AS4 if as4 else SUB_STATE_CHANGE
            old_state = rng.randint(1, 6)
            new_state = rng.choice([s for s in range(1, 7) if s != old_state])
            body = peer_header(peer_as, peer_ip, as4) + struct.pack(">HH", old_state, new_state)
            records += mrt_record(ts, BGP4MP, subtype, body)
            expected_lines.append(f"{ts},{peer_ip},{peer_as},S,,,,,{old_state},{new_state}")
            n_accepted += 1
            n_events += 1

        elif roll < 0.90:
            # Well-formed BGP4MP record carrying a KEEPALIVE: skipped.
            peer_as, peer_ip, _ = peers[0]
            body = peer_header(peer_as, peer_ip, False) + bgp_message(4, b"")
            records += mrt_record(ts, BGP4MP, SUB_MESSAGE, body)
            n_skipped += 1

        else:
            # Foreign record types: skipped by type.
            rtype = rng.choice([11, 12, 13, 32, 48])
            body = bytes(rng.randint(4, 24))
            records += mrt_record(ts, rtype, 0, body)
            n_skipped += 1

    (OUT_DIR / "fixture.mrt").write_bytes(bytes(records))
    (OUT_DIR / "fixture.expected.csv").write_text("\n".join(expected_lines) + "\n")
    (OUT_DIR / "fixture.stats.toml").write_text(
        "records_read = 1000\n"
        f"records_accepted = {n_accepted}\n"
        f"records_skipped = {n_skipped}\n"
        "records_malformed = 0\n"
        f"events_emitted = {n_events}\n"
    )
    print(f"accepted {n_accepted} skipped {n_skipped} events {n_events}")


if __name__ == "__main__":
    main()
