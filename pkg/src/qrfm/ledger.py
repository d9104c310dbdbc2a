"""Resource counters accumulated while a pipeline runs."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Mapping

ORACLES = ("U_x", "U_f", "U_w", "U_b")


def add_counts(*counts: Mapping[str, int]) -> dict[str, int]:
    out: dict[str, int] = {}
    for c in counts:
        for k, v in c.items():
            out[k] = out.get(k, 0) + int(v)
    return out


def scale_counts(counts: Mapping[str, int], factor: int) -> dict[str, int]:
    return {k: int(v) * int(factor) for k, v in counts.items()}


@dataclass
class ResourceLedger:
    """Oracle-query counters, ancilla watermark and amplification rounds.

    All counters only grow. Updates take a lock so a ledger can be shared
    between threads, though the pipeline itself keeps one ledger per trial.
    """

    queries: dict[str, int] = field(default_factory=lambda: {k: 0 for k in ORACLES})
    calls: dict[str, int] = field(default_factory=dict)
    ancilla_qubits: int = 0
    extra_gates: int = 0
    amplification_rounds: int = 0
    notes: dict[str, float] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def charge(self, counts: Mapping[str, int], times: int = 1) -> None:
        """Add ``times`` applications of a block-encoding with per-use ``counts``."""
        if times < 0:
            raise ValueError("cannot charge a negative number of applications")
        with self._lock:
            for k, v in counts.items():
                if v < 0:
                    raise ValueError("query counts must be nonnegative")
                self.queries[k] = self.queries.get(k, 0) + int(v) * int(times)

    def charge_calls(self, label: str, count: int) -> None:
        """Record ``count`` uses of a named block-encoding (e.g. during amplification)."""
        if count < 0:
            raise ValueError("call counts must be nonnegative")
        with self._lock:
            self.calls[label] = self.calls.get(label, 0) + int(count)

    def note_ancillas(self, count: int) -> None:
        with self._lock:
            self.ancilla_qubits = max(self.ancilla_qubits, int(count))

    def add_gates(self, count: int) -> None:
        if count < 0:
            raise ValueError("gate counts must be nonnegative")
        with self._lock:
            self.extra_gates += int(count)

    def add_rounds(self, count: int) -> None:
        if count < 0:
            raise ValueError("round counts must be nonnegative")
        with self._lock:
            self.amplification_rounds += int(count)

    def record(self, key: str, value: float) -> None:
        """Store a scalar diagnostic (kappa, xi, degrees)."""
        with self._lock:
            self.notes[key] = float(value)

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "queries": dict(self.queries),
                "calls": dict(self.calls),
                "ancilla_qubits": self.ancilla_qubits,
                "extra_gates": self.extra_gates,
                "amplification_rounds": self.amplification_rounds,
                "notes": dict(self.notes),
            }
