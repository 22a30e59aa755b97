"""Building scenario sets out of recorded rollout archives."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from behaviorbench.env.archive import read_rollout_archive
from behaviorbench.env.types import Action
from behaviorbench.errors import ContractViolationError
from behaviorbench.measures.scenario import ScenarioSet

Selection = Sequence  # (epoch, t) or (epoch, t, action)


def build_from_rollouts(
    path: str | Path,
    selections: Iterable[Selection],
    name: str = "selection",
) -> ScenarioSet:
    """Lift selected records out of an archive into a uniform scenario set.

    Each selection is an (epoch, t) pair, optionally extended with the
    action to pair the observation with; without one, the action the
    policy actually took at that step is used. Selections must be unique,
    and every index must exist in the archive.
    """
    path = Path(path)
    header, records = read_rollout_archive(path)
    index = {(record.epoch, record.t): record for record in records}

    seen: set[tuple[int, int]] = set()
    pairs = []
    provenance = []
    for selection in selections:
        if len(selection) == 2:
            epoch, t = selection
            action = None
        elif len(selection) == 3:
            epoch, t, action = selection
        else:
            raise ContractViolationError(
                f"selection {selection!r} is not (epoch, t) or (epoch, t, action)"
            )
        key = (int(epoch), int(t))
        if key in seen:
            raise ContractViolationError(
                f"duplicate selection (epoch, t) = {key}"
            )
        seen.add(key)
        record = index.get(key)
        if record is None:
            raise KeyError(f"no record with (epoch, t) = {key} in {path}")
        chosen = Action(record.action) if action is None else action
        pairs.append((record.observation, chosen))
        provenance.append({"epoch": key[0], "t": key[1]})

    source = f"archive seed={header.seed} checkpoint={header.checkpoint}"
    return ScenarioSet.uniform(name, pairs, source=source, provenance=provenance)
