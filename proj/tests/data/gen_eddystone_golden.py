#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Regenerates eddystone_golden.txt by hand-assembling frames byte by byte.

Independent of the C++ codec: only the public Eddystone layouts and URL
expansion table are used here. Each line is `<hex> <debug-rendering>`.
"""
import struct
import sys

SCHEMES = ["http://www.", "https://www.", "http://", "https://"]
EXPANSIONS = [".com/", ".org/", ".edu/", ".net/", ".info/", ".biz/", ".gov/",
              ".com", ".org", ".edu", ".net", ".info", ".biz", ".gov"]


def compress(url):
    scheme = max((i for i, s in enumerate(SCHEMES) if url.startswith(s)),
                 key=lambda i: len(SCHEMES[i]))
    rest = url[len(SCHEMES[scheme]):]
    body = bytearray()
    i = 0
    while i < len(rest):
        hits = [c for c, e in enumerate(EXPANSIONS) if rest.startswith(e, i)]
        if hits:
            code = max(hits, key=lambda c: len(EXPANSIONS[c]))
            body.append(code)
            i += len(EXPANSIONS[code])
        else:
            body.append(ord(rest[i]))
            i += 1
    assert len(body) <= 17, url
    return scheme, bytes(body)


def uid(ns, inst, tx):
    raw = bytes([0x00]) + struct.pack(">b", tx) + ns + inst
    return raw, f"UID{{ns={ns.hex()},inst={inst.hex()},tx={tx}}}"


def url(u, tx):
    scheme, body = compress(u)
    raw = bytes([0x10]) + struct.pack(">bB", tx, scheme) + body
    return raw, f"URL{{scheme={scheme},body={body.hex()},url={u},tx={tx}}}"


def tlm(batt, temp_raw, adv, uptime):
    raw = bytes([0x20, 0x00]) + struct.pack(">HhII", batt, temp_raw, adv, uptime)
    return raw, f"TLM{{batt={batt},temp={temp_raw},adv={adv},uptime={uptime}}}"


def spot_instance(lot, number):
    return bytes([ord(lot)]) + number.to_bytes(5, "big")


frames = [
    uid(bytes(10), bytes(5) + b"\x01", -65),
    uid(bytes(10), spot_instance("A", 1), -62),
    uid(bytes(range(10)), spot_instance("B", 3), 0),
    uid(bytes.fromhex("ffeeddccbbaa99887766"), spot_instance("Z", 2**40 - 1), 127),
    uid(bytes.fromhex("8b0ca750e7a74e14bd99"), bytes.fromhex("000000000000"), -128),
    uid(bytes.fromhex("0102030405060708090a"), spot_instance("C", 12345), -20),
    url("https://example.com", -20),
    url("http://www.a.org/", -20),
    url("http://www.x.com/", 0),
    url("http://www.x.org/", 1),
    url("http://x.edu/", 2),
    url("https://x.net/", 3),
    url("https://www.x.info/", -1),
    url("http://x.biz/", -2),
    url("https://x.gov/", -3),
    url("https://x.com", -4),
    url("https://x.org", -5),
    url("http://x.edu", -6),
    url("http://www.x.net", -7),
    url("https://www.x.info", -8),
    url("http://x.biz", -9),
    url("https://x.gov", -10),
    url("https://", -62),
    url("http://www.", -62),
    url("https://park.lot/A1", -59),
    url("https://goo.gl/S6zT6P", -59),
    url("https://a.com/b.org/c.net", -30),
    url("https://abcdefghijklmnopq", 10),
    tlm(0, 0, 0, 0),
    tlm(3000, 0x1A80, 1234, 5678),
    tlm(65535, -1, 2**32 - 1, 2**32 - 1),
    tlm(2950, -2560, 42, 864000),
    tlm(3300, 0x7FFF, 1, 10),
    tlm(1, -32768, 2**31, 2**31),
]

out = sys.stdout if len(sys.argv) < 2 else open(sys.argv[1], "w")
for raw, text in frames:
    print(raw.hex(), text, file=out)
