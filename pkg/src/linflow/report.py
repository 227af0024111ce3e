from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

INFINITY = math.inf

EXACT = "exact"
LOWER_BOUND = "lower_bound"
HORIZON_LIMITED = "horizon_limited"
STATUSES = (EXACT, LOWER_BOUND, HORIZON_LIMITED)


class UnsupportedDescriptor(ValueError):
    """The flow representation does not support the requested computation."""


@dataclass
class EntropyReport:
    """An entropy value in N u {inf} together with how far it is certified."""

    value: int | float
    status: str
    provenance: str
    witnesses: list[Any] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.value == INFINITY and self.status == EXACT:
            raise ValueError("an infinite value is never certified exact")

    @property
    def exact(self) -> bool:
        return self.status == EXACT

    def as_dict(self) -> dict[str, Any]:
        return {
            "value": "inf" if self.value == INFINITY else int(self.value),
            "status": self.status,
            "provenance": self.provenance,
            **({"details": self.details} if self.details else {}),
        }
