"""Instance file format and JSON helpers.

An instance file is one UTF-8 JSON header line ending in ``\\n``, then the
points as ``N*d`` little-endian float64 (row-major), the planted labels as
``N`` little-endian uint32, and, when ``has_pre`` is set, the
pre-perturbation points as another ``N*d`` float64 block.

Besides ``magic, N, d, k, sigma, cluster_sizes, seed, adversary`` the header
stores ``means``, ``covariances`` and ``has_pre``, which are needed to
rebuild the mixture. Floats are written with ``repr``, which round-trips.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import FormatError, SrgmmError
from .model import Covariance, Instance, MixtureParams

MAGIC = "SRGMM1"
_F8 = np.dtype("<f8")
_U4 = np.dtype("<u4")
_REQUIRED = ("magic", "N", "d", "k", "sigma", "cluster_sizes", "seed", "adversary", "means")


def dumps_json(obj) -> str:
    """Canonical JSON: sorted keys, no trailing whitespace, newline-terminated."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))


def _header(inst: Instance) -> dict:
    p = inst.params
    covs = None
    if any(c is not None for c in p.covariances):
        covs = [None if c is None else c.to_json() for c in p.covariances]
    return {
        "magic": MAGIC,
        "N": inst.N,
        "d": inst.d,
        "k": inst.k,
        "sigma": float(p.sigma),
        "cluster_sizes": list(p.cluster_sizes),
        "seed": inst.seed,
        "adversary": json.loads(inst.adversary),
        "means": p.means.tolist(),
        "covariances": covs,
        "has_pre": inst.pre_perturbation_points is not None,
    }


def encode_instance(inst: Instance) -> bytes:
    head = json.dumps(_header(inst), sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"
    parts = [head, inst.points.astype(_F8).tobytes(order="C"),
             inst.planted_labels.astype(_U4).tobytes()]
    if inst.pre_perturbation_points is not None:
        parts.append(inst.pre_perturbation_points.astype(_F8).tobytes(order="C"))
    return b"".join(parts)


def save_instance(inst: Instance, path):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(encode_instance(inst))
    os.replace(tmp, path)


def decode_instance(data: bytes) -> Instance:
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("missing header line")
    try:
        head = json.loads(data[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}") from None
    if not isinstance(head, dict) or head.get("magic") != MAGIC:
        raise FormatError("bad magic (not an SRGMM1 file)")
    missing = [key for key in _REQUIRED if key not in head]
    if missing:
        raise FormatError(f"header lacks {missing}")
    try:
        N, d, k = int(head["N"]), int(head["d"]), int(head["k"])
        if N < 0 or d < 1 or k < 1:
            raise FormatError("header has non-positive dimensions")
        body = memoryview(data)[nl + 1:]
        n_pts = N * d * 8
        expected = n_pts + N * 4 + (n_pts if head.get("has_pre") else 0)
        if len(body) != expected:
            raise FormatError(f"body is {len(body)} bytes, header implies {expected}")
        pts = np.frombuffer(body[:n_pts], dtype=_F8).reshape(N, d).astype(np.float64)
        labels = np.frombuffer(body[n_pts:n_pts + 4 * N], dtype=_U4).astype(np.int64)
        pre = None
        if head.get("has_pre"):
            pre = np.frombuffer(body[n_pts + 4 * N:], dtype=_F8).reshape(N, d).astype(np.float64)
        means = np.array(head["means"], dtype=np.float64).reshape(k, d)
        covs = head.get("covariances")
        covs = None if covs is None else [None if c is None else Covariance.from_json(c) for c in covs]
        params = MixtureParams(means, float(head["sigma"]), tuple(head["cluster_sizes"]), covs)
        return Instance(pts, labels, params, seed=int(head["seed"]),
                        adversary=json.dumps(head["adversary"], sort_keys=True, separators=(",", ":")),
                        pre_perturbation_points=pre)
    except FormatError:
        raise
    except (SrgmmError, ValueError, TypeError, KeyError) as exc:
        raise FormatError(f"inconsistent instance file: {exc}") from None


def load_instance(path) -> Instance:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    return decode_instance(data)
