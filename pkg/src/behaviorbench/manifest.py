"""Run manifests: what a run produced and how to verify it."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from behaviorbench import __version__
from behaviorbench.errors import ProvenanceError

MANIFEST_NAME = "manifest.json"


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    run_dir: str | Path,
    config: dict,
    seed: int,
    checkpoints: list[dict],
    artifacts: list[str],
) -> Path:
    """Hash every artifact (paths relative to the run dir) and write the manifest."""
    run_dir = Path(run_dir)
    entries = []
    for rel in sorted(artifacts):
        entries.append({"path": rel, "sha256": file_sha256(run_dir / rel)})
    manifest = {
        "tool": "behaviorbench",
        "version": __version__,
        "seed": seed,
        "config": config,
        "checkpoints": checkpoints,
        "artifacts": entries,
    }
    path = run_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
    return path


def load_manifest(run_dir: str | Path) -> dict:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.exists():
        raise ProvenanceError(f"no manifest at {path}")
    return json.loads(path.read_text("utf-8"))


def verify_manifest(run_dir: str | Path) -> list[str]:
    """Check all referenced artifacts exist and hash-match.

    Returns the list of verified relative paths; raises ProvenanceError on
    the first missing or altered file.
    """
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    verified = []
    for entry in manifest.get("artifacts", []):
        target = run_dir / entry["path"]
        if not target.exists():
            raise ProvenanceError(f"manifest artifact missing: {entry['path']}")
        actual = file_sha256(target)
        if actual != entry["sha256"]:
            raise ProvenanceError(
                f"manifest hash mismatch for {entry['path']}: "
                f"{actual[:12]} != {entry['sha256'][:12]}"
            )
        verified.append(entry["path"])
    return verified
