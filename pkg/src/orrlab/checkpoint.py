"""Binary checkpoints of solver states.

Layout::

    b"ORRLABCK"                       8-byte magic
    uint32 little-endian              header length in bytes
    header                            UTF-8 JSON
    payload                           little-endian float64

The header records the format version, grid, time, step count,
multiplier parameters, run parameters, the configuration hash and the
payload size and SHA-256.  The payload is the complex coefficient array
(k-major, row-major, real and imaginary parts interleaved) followed by
the two accumulator grids I_ux and I_omega.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .nonlinear import SimState
from .spectral import Grid, SpectralField

__all__ = ["FORMAT_VERSION", "save_checkpoint", "load_checkpoint", "read_header"]

MAGIC = b"ORRLABCK"
FORMAT_VERSION = 1
_LEN = struct.Struct("<I")


def _payload(state: SimState) -> bytes:
    c = np.ascontiguousarray(state.h.coeffs, dtype="<c16")
    return c.tobytes() + np.asarray(state.I_ux, "<f8").tobytes() + np.asarray(state.I_omega, "<f8").tobytes()


def save_checkpoint(state: SimState, path, spec=None, config_hash: str | None = None) -> None:
    """Write ``state`` atomically to ``path``."""
    g = state.grid
    payload = _payload(state)
    header = {
        "format": "orrlab-checkpoint",
        "version": FORMAT_VERSION,
        "grid": {"k_max": g.k_max, "n_y": g.n_y, "L_y": g.L_y},
        "t": state.t,
        "step_count": state.step_count,
        "spec": spec.as_dict() if spec is not None else None,
        "params": state.params,
        "config_hash": config_hash,
        "payload_bytes": len(payload),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    hb = json.dumps(header, sort_keys=True).encode()
    p = Path(path)
    tmp = p.with_name(p.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_LEN.pack(len(hb)))
        fh.write(hb)
        fh.write(payload)
    os.replace(tmp, p)


def _split(raw: bytes, path) -> tuple[dict, bytes]:
    if len(raw) < len(MAGIC) + _LEN.size or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not an orrlab checkpoint (bad magic or truncated prefix)")
    (n,) = _LEN.unpack_from(raw, len(MAGIC))
    start = len(MAGIC) + _LEN.size
    if len(raw) < start + n:
        raise CheckpointError(f"{path}: truncated header ({len(raw) - start} of {n} bytes)")
    try:
        header = json.loads(raw[start:start + n].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from None
    return header, raw[start + n:]


def read_header(path) -> dict:
    """Header of a checkpoint file, after the version check."""
    raw = Path(path).read_bytes()
    header, _ = _split(raw, path)
    _check_version(header, path)
    return header


def _check_version(header: dict, path) -> None:
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: checkpoint format version {header.get('version')!r} is not supported "
            f"(expected {FORMAT_VERSION})"
        )


def load_checkpoint(path, expected_hash: str | None = None) -> SimState:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises CheckpointError on version mismatch, truncation, payload
    corruption, or when ``expected_hash`` differs from the stored
    configuration hash.  No partial state is ever returned.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc.strerror}") from None
    header, payload = _split(raw, path)
    _check_version(header, path)
    try:
        gd = header["grid"]
        grid = Grid(int(gd["k_max"]), int(gd["n_y"]), float(gd["L_y"]))
        n_bytes = int(header["payload_bytes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: incomplete header ({exc})") from None
    n_coef = grid.shape[0] * grid.shape[1]
    expected = 16 * n_coef + 16 * grid.n_y
    if n_bytes != expected:
        raise CheckpointError(f"{path}: header payload size {n_bytes} does not match grid ({expected})")
    if len(payload) < n_bytes:
        raise CheckpointError(f"{path}: truncated payload ({len(payload)} of {n_bytes} bytes)")
    if len(payload) > n_bytes:
        raise CheckpointError(f"{path}: {len(payload) - n_bytes} trailing bytes after payload")
    if hashlib.sha256(payload).hexdigest() != header.get("payload_sha256"):
        raise CheckpointError(f"{path}: payload hash mismatch (file corrupted)")
    if expected_hash is not None and header.get("config_hash") != expected_hash:
        raise CheckpointError(
            f"{path}: configuration hash mismatch ({header.get('config_hash')} != {expected_hash})"
        )
    coeffs = np.frombuffer(payload, "<c16", n_coef).reshape(grid.shape).astype(complex)
    rest = np.frombuffer(payload, "<f8", 2 * grid.n_y, offset=16 * n_coef).astype(float)
    t = float(header["t"])
    h = SpectralField(grid, coeffs, t)
    return SimState(h, t, rest[: grid.n_y].copy(), rest[grid.n_y:].copy(), int(header["step_count"]),
                    dict(header.get("params") or {}))
