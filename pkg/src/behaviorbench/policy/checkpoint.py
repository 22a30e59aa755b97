"""Versioned binary checkpoints of policy parameters.

Layout: 8 magic bytes, a little-endian uint32 header length, a UTF-8 JSON
header, then the raw little-endian float64 parameter array. A JSON sidecar
with the same header plus the checkpoint id is written next to the binary
so other tools can read the metadata without parsing it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from behaviorbench.errors import ProvenanceError
from behaviorbench.policy.network import PolicySpec

MAGIC = b"BBENCHP1"
CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    """A loaded checkpoint: parameters plus their provenance."""

    params: np.ndarray
    spec: PolicySpec
    seed: int
    step: int
    checkpoint_id: str


def params_hash(params: np.ndarray) -> str:
    """Stable identifier: SHA-256 of the little-endian float64 bytes."""
    return hashlib.sha256(
        np.ascontiguousarray(params, dtype="<f8").tobytes()
    ).hexdigest()


def _header(params: np.ndarray, spec: PolicySpec, seed: int, step: int) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "spec": spec.to_dict(),
        "seed": seed,
        "step": step,
        "param_count": int(params.size),
        "checkpoint_id": params_hash(params),
    }


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(Path(path).suffix + ".json")


def save_checkpoint(
    path: str | Path,
    params: np.ndarray,
    spec: PolicySpec | None = None,
    seed: int = 0,
    step: int = 0,
) -> str:
    """Write the checkpoint and its sidecar; returns the checkpoint id."""
    spec = spec or PolicySpec()
    params = np.ascontiguousarray(params, dtype="<f8")
    if params.size != spec.param_count:
        raise ProvenanceError(
            f"parameter count {params.size} does not match spec ({spec.param_count})"
        )
    header = _header(params, spec, seed, step)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        fh.write(params.tobytes())
    sidecar_path(path).write_text(
        json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return header["checkpoint_id"]


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint, verifying magic, version, and parameter hash."""
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ProvenanceError(f"{path}: not a checkpoint file (bad magic)")
    hlen = int(np.frombuffer(raw, dtype="<u4", count=1, offset=len(MAGIC))[0])
    start = len(MAGIC) + 4
    header = json.loads(raw[start : start + hlen].decode("utf-8"))
    if header.get("version") != CHECKPOINT_VERSION:
        raise ProvenanceError(f"{path}: unsupported checkpoint version")
    spec = PolicySpec.from_dict(header["spec"])
    params = np.frombuffer(raw, dtype="<f8", offset=start + hlen).astype(np.float64)
    if params.size != header["param_count"] or params.size != spec.param_count:
        raise ProvenanceError(f"{path}: parameter count mismatch")
    digest = params_hash(params)
    if digest != header["checkpoint_id"]:
        raise ProvenanceError(f"{path}: parameter hash mismatch (corrupt file)")
    return Checkpoint(
        params=params,
        spec=spec,
        seed=int(header["seed"]),
        step=int(header["step"]),
        checkpoint_id=digest,
    )
