"""PGM images and chain-trace files.

A trace saved under ``base`` is three files:

* ``base.csv``  - ``iteration,group,beta,gamma,accepted`` with one row per
  iteration and group (``accepted`` is the beta-move flag);
* ``base.fmc``  - coefficient snapshots: ``b"FMC1"``, then little-endian
  uint64 ``K``, snapshot count and thin, then the float64 LE snapshots;
* ``base.json`` - group names, counters, config echo and the per-iteration
  coefficient acceptance and residual arrays.

Floats are written with ``repr`` so reading back is bit-exact.
"""
from __future__ import annotations

import csv
import json
import re
import struct
from pathlib import Path

import numpy as np

from .chain import ChainTrace

MAGIC = b"FMC1"
_HEADER = struct.Struct("<4sQQQ")


class PGMFormatError(ValueError):
    pass


class TraceFormatError(ValueError):
    """Trace files are missing, truncated or inconsistent."""


# ---------------------------------------------------------------- PGM

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _tokens(buf: bytes, pos: int, count: int):
    out = []
    for _ in range(count):
        m = _TOKEN.match(buf, pos)
        if not m:
            raise PGMFormatError("malformed PGM header")
        out.append(m.group(1))
        pos = m.end()
    return out, pos


def read_image(path) -> np.ndarray:
    """Read an 8-bit P2 or P5 PGM into a float array."""
    buf = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _tokens(buf, 0, 4)
    if magic not in (b"P2", b"P5"):
        raise PGMFormatError(f"not a grayscale PGM (magic {magic!r})")
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise PGMFormatError("malformed PGM header") from None
    if w < 1 or h < 1:
        raise PGMFormatError("bad image size")
    if not 0 < maxval <= 255:
        raise PGMFormatError(f"unsupported maxval {maxval} (only 8-bit images)")
    n = w * h
    if magic == b"P5":
        data = buf[pos + 1: pos + 1 + n]  # exactly one whitespace byte after maxval
        if len(data) < n:
            raise PGMFormatError(f"truncated payload: {len(data)} of {n} bytes")
        img = np.frombuffer(data, dtype=np.uint8)
    else:
        vals = buf[pos:].split()
        if len(vals) < n:
            raise PGMFormatError(f"truncated payload: {len(vals)} of {n} values")
        try:
            img = np.array([int(v) for v in vals[:n]])
        except ValueError:
            raise PGMFormatError("non-integer pixel value") from None
    if img.max(initial=0) > maxval:
        raise PGMFormatError("pixel value exceeds maxval")
    return img.reshape(h, w).astype(float)


def write_image(path, img, binary: bool = True):
    """Write integer-valued pixels in [0, 255]; rounds, but never clips."""
    a = np.rint(np.asarray(img, dtype=float))
    if a.ndim != 2:
        raise ValueError("need a 2-D image")
    if a.min() < 0 or a.max() > 255:
        raise ValueError("pixel values must lie in [0, 255]; clamp first")
    a = a.astype(np.uint8)
    h, w = a.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(b"P5\n%d %d\n255\n" % (w, h))
            fh.write(a.tobytes())
        else:
            fh.write(b"P2\n%d %d\n255\n" % (w, h))
            for row in a:
                fh.write((" ".join(map(str, row)) + "\n").encode())


# ---------------------------------------------------------------- traces

def _paths(base):
    # append rather than replace, so bases like "run.seed1" keep their dots
    base = str(base)
    return Path(base + ".csv"), Path(base + ".fmc"), Path(base + ".json")


def write_snapshots(path, snapshots: np.ndarray, thin: int):
    snaps = np.ascontiguousarray(snapshots, dtype="<f8")
    N, K = snaps.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, K, N, thin))
        fh.write(snaps.tobytes())


def read_snapshots(path) -> tuple[np.ndarray, int]:
    buf = Path(path).read_bytes()
    if len(buf) < _HEADER.size:
        raise TraceFormatError("snapshot file shorter than its header")
    magic, K, N, thin = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        if magic[:3] == MAGIC[:3]:
            raise TraceFormatError(f"unsupported snapshot format version {magic[3:]!r}")
        raise TraceFormatError("bad magic: not a snapshot file")
    want = N * K * 8
    got = len(buf) - _HEADER.size
    if got != want:
        raise TraceFormatError(f"snapshot payload is {got} bytes, header implies {want}")
    snaps = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size).reshape(N, K).astype(float)
    return snaps, int(thin)


def write_trace(trace: ChainTrace, base):
    csv_path, bin_path, meta_path = _paths(base)
    with open(csv_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["iteration", "group", "beta", "gamma", "accepted"])
        for i in range(trace.iterations):
            for g in range(trace.G):
                wr.writerow([i + 1, g, repr(float(trace.beta[i, g])), repr(float(trace.gamma[i, g])),
                             int(trace.beta_accepted[i, g])])
    write_snapshots(bin_path, trace.snapshots, trace.thin)
    meta = {
        "format": 1,
        "group_names": list(trace.group_names),
        "counters": trace.counters,
        "config": trace.config,
        "x_accepted": [int(v) for v in trace.x_accepted],
        "residual": [float(v) for v in trace.residual],
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh)


def read_trace(base) -> ChainTrace:
    csv_path, bin_path, meta_path = _paths(base)
    for p in (csv_path, bin_path, meta_path):
        if not p.exists():
            raise TraceFormatError(f"missing trace file {p}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as err:
        raise TraceFormatError(f"unreadable trace metadata: {err}") from None
    missing = {"group_names", "x_accepted", "residual", "counters", "config"} - set(meta)
    if missing:
        raise TraceFormatError(f"trace metadata lacks {sorted(missing)}")
    G = len(meta["group_names"])
    T = len(meta["x_accepted"])
    rows = []
    with open(csv_path, newline="") as fh:
        rd = csv.reader(fh)
        if next(rd, None) != ["iteration", "group", "beta", "gamma", "accepted"]:
            raise TraceFormatError("unexpected CSV header")
        rows = list(rd)
    if len(rows) != T * G or any(len(r) != 5 for r in rows):
        raise TraceFormatError(f"CSV has {len(rows)} rows, expected {T * G}")
    try:
        beta = np.array([float(r[2]) for r in rows]).reshape(T, G)
        gamma = np.array([float(r[3]) for r in rows]).reshape(T, G)
        bacc = np.array([r[4] == "1" for r in rows]).reshape(T, G)
    except ValueError:
        raise TraceFormatError("non-numeric CSV entry") from None
    snaps, thin = read_snapshots(bin_path)
    if snaps.shape[0] != T // thin:
        raise TraceFormatError("snapshot count does not match the iteration count")
    return ChainTrace(gamma, beta, bacc, np.array(meta["x_accepted"], dtype=np.int64),
                      np.array(meta["residual"], dtype=float), snaps, thin, meta["group_names"],
                      counters=meta["counters"], config=meta["config"])


def write_histogram(path, table: np.ndarray):
    np.savetxt(path, table, delimiter=",", header="center,empirical,fitted", comments="", fmt="%.17g")
