"""Ordered-search problem instances and the diagonal query operator.

An instance of size ``n`` is the monotone bit string with a single threshold:
``bit(i) = 1`` exactly when ``answer <= i < n``, and ``bit(i) = 0`` for every
``i >= n`` (the string is padded with an infinite tail of zeros, so querying
far indices is an identity). There are exactly ``n`` instances per size, one
per answer in ``0 .. n-1``.

A query multiplies the amplitude of each ``GenLabel(z, i)`` by ``(-1)**bit(i)``.
It is diagonal, self-inverse, and commutes with every other query.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .qcore import GenLabel, SparseState, apply_diagonal_phase


@dataclass(frozen=True)
class OrderedInstance:
    """Sorted list of length ``n`` whose leftmost 1 sits at ``answer``."""

    n: int
    answer: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"list length must be positive, got {self.n}")
        if not 0 <= self.answer < self.n:
            raise ValueError(
                f"answer must lie in [0, {self.n - 1}], got {self.answer}"
            )

    def bit(self, i: int) -> int:
        """Value of the list at index ``i`` (0 beyond the list)."""
        if i < 0:
            raise ValueError(f"bit index must be non-negative, got {i}")
        return 1 if self.answer <= i < self.n else 0

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "answer": self.answer})

    @classmethod
    def from_json(cls, text: str) -> "OrderedInstance":
        data = json.loads(text)
        return cls(n=int(data["n"]), answer=int(data["answer"]))


def enumerate_instances(n: int) -> list[OrderedInstance]:
    """All ``n`` instances of size ``n``, in increasing answer order."""
    if n < 1:
        raise ValueError(f"list length must be positive, got {n}")
    return [OrderedInstance(n, a) for a in range(n)]


def apply_query(state: SparseState, inst: OrderedInstance) -> SparseState:
    """One oracle query: phase ``(-1)**bit(i)`` on every ``GenLabel(z, i)``.

    Labels with ``i >= n`` are untouched (zero padding). Team-search labels
    are rejected; those states are queried through their own operator.
    """
    for label in state.labels():
        if not isinstance(label, GenLabel):
            raise TypeError(
                f"apply_query acts on GenLabel states only, found {label!r}"
            )
    return apply_diagonal_phase(
        state, lambda label: -1 if inst.bit(label.i) else 1
    )
