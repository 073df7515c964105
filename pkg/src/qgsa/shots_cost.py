"""Shot-count calculators, the execution ledger and per-circuit/per-shot pricing."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class LedgerDelta:
    circuits: int = 0
    shots: int = 0

    def __add__(self, other: LedgerDelta) -> LedgerDelta:
        return LedgerDelta(self.circuits + other.circuits, self.shots + other.shots)

    @classmethod
    def runs(cls, circuits: int, shots_per_circuit: int) -> LedgerDelta:
        return cls(circuits, circuits * shots_per_circuit)


@dataclass
class ExecutionLedger:
    """Running count of circuit executions and shots.

    Every change goes through :meth:`record`, so the totals always equal the
    sum of the logged event deltas.
    """

    circuits: int = 0
    shots: int = 0
    events: list[tuple[str, int, int]] = field(default_factory=list)

    def record(self, label: str, delta: LedgerDelta) -> None:
        if delta.circuits < 0 or delta.shots < 0:
            raise ValueError("ledger deltas must be non-negative")
        self.circuits += delta.circuits
        self.shots += delta.shots
        self.events.append((label, delta.circuits, delta.shots))

    def circuits_for(self, label: str) -> int:
        return sum(c for lab, c, _ in self.events if lab == label)

    def merge(self, other: ExecutionLedger) -> ExecutionLedger:
        out = ExecutionLedger()
        for label, c, s in self.events + other.events:
            out.record(label, LedgerDelta(c, s))
        return out


@dataclass(frozen=True)
class PricingProfile:
    name: str
    per_circuit: float
    per_shot: float

    def __post_init__(self):
        if self.per_circuit < 0 or self.per_shot < 0:
            raise ValueError(f"prices must be non-negative in profile {self.name!r}")

    def price(self, circuits: int, shots: int) -> float:
        return circuits * self.per_circuit + shots * self.per_shot


_TABLE = (
    ("IonQ - Harmony", 0.3, 0.01),
    ("IonQ - Aria", 0.3, 0.03),
    ("OQC - Lucy", 0.3, 0.00035),
    ("Rigetti - Aspen-M", 0.3, 0.00035),
)


def builtin_profiles() -> list[PricingProfile]:
    return [PricingProfile(*row) for row in _TABLE]


def find_profile(name: str, profiles: list[PricingProfile] | None = None) -> PricingProfile | None:
    for p in builtin_profiles() if profiles is None else profiles:
        if p.name == name:
            return p
    return None


def load_profiles(path: str | Path) -> list[PricingProfile]:
    """Read ``[{"name", "per_circuit", "per_shot"}, ...]`` from a JSON file."""
    rows = json.loads(Path(path).read_text())
    if not isinstance(rows, list):
        raise ValueError("pricing file must hold a JSON array")
    return [PricingProfile(str(r["name"]), float(r["per_circuit"]), float(r["per_shot"])) for r in rows]


def cost(ledger: ExecutionLedger, profile: PricingProfile) -> float:
    return profile.price(ledger.circuits, ledger.shots)


def _hoeffding(width: float, delta: float, value_range: float | None) -> int:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    # value_range=None treats outcomes as unit-range
    scale = 1.0 if value_range is None else value_range**2
    if scale <= 0:
        raise ValueError("value_range must be positive")
    n = scale * math.log(2.0 / delta) / (2.0 * width**2)
    # guard against float fuzz pushing an exact integer up by one
    return max(1, math.ceil(n - 1e-9))


def shots_for_precision(epsilon: float, delta: float, value_range: float | None = None) -> int:
    """Shots so that the sample mean is within ``epsilon`` w.p. ``1 - delta``.

    With ``value_range=None`` this is ``ln(2/delta) / (2 epsilon^2)``. Passing
    the true outcome range (2 for ±1 outcomes) gives the full Hoeffding bound,
    which is four times larger for Pauli measurements.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return _hoeffding(epsilon, delta, value_range)


def shots_for_descent(gap: float, delta: float, value_range: float | None = None) -> int:
    """Shots needed to resolve whether a candidate point is below the current value.

    ``gap`` is the current value minus the candidate value.
    """
    if gap == 0:
        raise ValueError("gap must be nonzero; the two points are indistinguishable")
    return _hoeffding(abs(gap), delta, value_range)
