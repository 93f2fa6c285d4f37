"""Session taint environment and its propagation rules.

The environment maps canonical resource keys to taint labels.  Keys with no
entry default to untainted unless a seed guard marks the scope sensitive.
Executed calls update the map through three rules applied in a fixed order:
delete drops the source entry, exec/spawn marks the sink tainted
unconditionally, and read/write combines the flow's taint into the sink
("tainted absorbs").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from .lattice import (
    DEL,
    EXEC,
    READ,
    SPAWN,
    TAINTED,
    UNTAINTED,
    WRITE,
    Boundary,
    ResourceGuard,
)

CTXT_KEY = "ctxt"


@dataclass(frozen=True)
class TaintEnvironment:
    entries: Tuple[Tuple[str, str], ...] = ()
    seeds: Tuple[ResourceGuard, ...] = ()

    @staticmethod
    def seeded(seeds) -> "TaintEnvironment":
        return TaintEnvironment(entries=(), seeds=tuple(seeds))

    def _lookup(self, key: str) -> Optional[str]:
        for k, v in self.entries:
            if k == key:
                return v
        return None

    def query(self, key: str) -> str:
        """Explicit entry wins; else a seed match is tainted; else untainted."""
        found = self._lookup(key)
        if found is not None:
            return found
        if any(seed.matches(key) for seed in self.seeds):
            return TAINTED
        return UNTAINTED

    def _with_entries(self, entries: Dict[str, str]) -> "TaintEnvironment":
        return TaintEnvironment(tuple(sorted(entries.items())), self.seeds)

    def propagate(
        self,
        phi: Boundary,
        sink_key: Optional[str],
        source_key: Optional[str],
    ) -> "TaintEnvironment":
        """Environment after executing a call abstracted as phi.

        Rule order when effects overlap: delete, then exec/spawn, then
        read/write.  The receiver is unchanged; a new environment is returned.
        """
        entries = dict(self.entries)
        effects = phi.effects
        if DEL in effects and source_key is not None:
            entries.pop(source_key, None)
        if {EXEC, SPAWN} & effects and sink_key is not None:
            entries[sink_key] = TAINTED
        if {READ, WRITE} & effects and sink_key is not None:
            existing = entries.get(sink_key)
            if existing is None:
                existing = (
                    TAINTED
                    if any(seed.matches(sink_key) for seed in self.seeds)
                    else UNTAINTED
                )
            combined = TAINTED if (existing == TAINTED or TAINTED in phi.taint) else UNTAINTED
            entries[sink_key] = combined
        return self._with_entries(entries)


def query_taint(env: TaintEnvironment, resource: str) -> str:
    return env.query(resource)


def propagate(
    env: TaintEnvironment,
    phi: Boundary,
    sink_key: Optional[str],
    source_key: Optional[str],
) -> TaintEnvironment:
    return env.propagate(phi, sink_key, source_key)
