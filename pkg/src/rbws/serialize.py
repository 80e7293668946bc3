"""Binary persistence for trained reduced models.

Layout: fixed header (magic ``RBWS``, format version, model kind, state
dimension, reduced dimension, iteration-space cap), then a kind-specific
sequence of matrices (column-major 64-bit little-endian floats, each
preceded by its u64 shape) and index arrays (u64 count then u64 entries),
then a trailing 64-bit checksum over all preceding bytes.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .msrb import MsrbHierarchy
from .rb import L1rocModel, PodBasis

MAGIC = b"RBWS"
VERSION = 1
_KINDS = {"pod": 1, "l1roc": 2, "msrb": 3}
_KIND_NAMES = {v: k for k, v in _KINDS.items()}


class ModelFormatError(Exception):
    """Bad magic, unsupported version, truncation, or checksum mismatch."""


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def _pack_matrix(M) -> bytes:
    M = np.ascontiguousarray(np.asarray(M, dtype=np.float64).T)  # column-major
    rows, cols = M.shape[1], M.shape[0]
    return struct.pack("<QQ", rows, cols) + M.astype("<f8").tobytes()


def _pack_indices(idx) -> bytes:
    idx = np.asarray(idx, dtype=np.uint64)
    return struct.pack("<Q", len(idx)) + idx.astype("<u8").tobytes()


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ModelFormatError("truncated model file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def matrix(self) -> np.ndarray:
        rows, cols = struct.unpack("<QQ", self.take(16))
        data = np.frombuffer(self.take(8 * rows * cols), dtype="<f8")
        return data.reshape(cols, rows).T.copy()

    def indices(self) -> np.ndarray:
        n = self.u64()
        return np.frombuffer(self.take(8 * n), dtype="<u8").astype(np.int64)


def _vec(M: np.ndarray) -> np.ndarray:
    return M.reshape(-1).copy()


def save_model(model, path) -> None:
    """Write a PodBasis, L1rocModel, or MsrbHierarchy to ``path``."""
    parts = []
    if isinstance(model, PodBasis):
        kind, n_h, N, K = "pod", model.basis.shape[0], model.dim, 0
        parts += [_pack_matrix(model.basis),
                  _pack_matrix(model.eigenvalues[:, None]),
                  struct.pack("<Q", model.n_snapshots)]
    elif isinstance(model, L1rocModel):
        kind, n_h, N, K = "l1roc", model.basis.shape[0], model.dim, 0
        parts += [_pack_matrix(model.basis),
                  _pack_matrix(model.transform),
                  _pack_matrix(model.chosen_mus),
                  _pack_matrix(model.indicator_history[:, None]),
                  _pack_indices(model.collocation),
                  _pack_indices(model.solution_points),
                  _pack_indices(model.residual_points),
                  struct.pack("<Q", int(model.saturated))]
    elif isinstance(model, MsrbHierarchy):
        kind = "msrb"
        n_h, N, K = model.init_basis.basis.shape[0], model.N, model.K_max
        parts += [_pack_matrix(model.init_basis.basis),
                  _pack_matrix(model.init_basis.eigenvalues[:, None]),
                  struct.pack("<Q", model.init_basis.n_snapshots),
                  struct.pack("<Q", len(model.bases))]
        for W in model.bases:
            parts.append(_pack_matrix(W))
        parts.append(struct.pack("<Q", len(model.spectra)))
        for s in model.spectra:
            parts.append(_pack_matrix(np.asarray(s)[:, None]))
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")

    header = MAGIC + struct.pack("<IIQQQ", VERSION, _KINDS[kind], n_h, N, K)
    payload = header + b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(payload + _checksum(payload))


def load_model(path):
    """Read a model back; raises ModelFormatError on any corruption."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + 32 + 8:
        raise ModelFormatError("file too short")
    payload, check = blob[:-8], blob[-8:]
    if payload[:4] != MAGIC:
        raise ModelFormatError("bad magic bytes")
    if _checksum(payload) != check:
        raise ModelFormatError("checksum mismatch")
    rd = _Reader(payload)
    rd.take(4)
    version, kind_id, n_h, N, K = struct.unpack("<IIQQQ", rd.take(32))
    if version != VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    kind = _KIND_NAMES.get(kind_id)
    if kind is None:
        raise ModelFormatError(f"unknown model kind {kind_id}")

    if kind == "pod":
        basis = rd.matrix()
        eig = _vec(rd.matrix())
        n_s = rd.u64()
        return PodBasis(basis=basis, eigenvalues=eig, n_snapshots=n_s)
    if kind == "l1roc":
        basis = rd.matrix()
        transform = rd.matrix()
        chosen = rd.matrix()
        history = _vec(rd.matrix())
        coll = rd.indices()
        xs = rd.indices()
        xr = rd.indices()
        saturated = bool(rd.u64())
        return L1rocModel(basis=basis, transform=transform, collocation=coll,
                          solution_points=xs, residual_points=xr,
                          chosen_mus=chosen, indicator_history=history,
                          saturated=saturated)
    init = PodBasis(basis=rd.matrix(), eigenvalues=_vec(rd.matrix()),
                    n_snapshots=rd.u64())
    bases = tuple(rd.matrix() for _ in range(rd.u64()))
    spectra = tuple(_vec(rd.matrix()) for _ in range(rd.u64()))
    return MsrbHierarchy(init_basis=init, bases=bases, N=N, K_max=K,
                         spectra=spectra)
