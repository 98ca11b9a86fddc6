"""Exact ordered search by a team of interfering classical-search branches.

Each basis state of a superposition is read as a classical searcher (a
"computer") that has narrowed the leftmost-1 position down to a dyadic
interval. A marker bit carries what the computer just learned. Three
operators drive one round:

* a marker mixer that puts interval-matched computers into the (0 +/- 1)
  basis, which is how two computers holding the same interval merge;
* a marker-directed refinement that halves an interval, keeping the lower
  half when the marker is 1 and the upper half when it is 0;
* a broadcast query in which every computer probes the midpoint of its own
  interval. The least-knowing computer receives the probed bit directly in
  its marker; all other computers receive it as a sign on their amplitude.
  The whole thing costs exactly one oracle call: the marker write is the
  standard inversion of phase kickback, realized here literally by routing
  the state through query-index labels, applying the diagonal query once,
  and routing back.

After the query, alternating refine/mix sweeps walk the interval sizes down
and collapse the team onto the exact answer position with probability one.
The module also provides the classical binary-search reference (and its
unitary embedding into the query model), the knowledge layouts that let one
query multiply every computer's explicitly known bits by a factor approaching
three, and the digit-decomposition accounting behind the query-count model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

from . import oracle as oracle_mod
from .oracle import OrderedInstance
from .qcore import (
    BasisLabel,
    GenLabel,
    SparseState,
    TeamLabel,
    apply_linear,
    measure_distribution,
)

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class CollisionError(ValueError):
    """A label permutation mapped two distinct labels onto the same image."""


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class Interval:
    """Inclusive dyadic interval of list positions."""

    lo: int
    hi: int

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError(f"need 0 <= lo <= hi, got [{self.lo},{self.hi}]")
        if not _is_pow2(self.length):
            raise ValueError(f"interval length {self.length} is not a power of two")
        if self.lo % self.length != 0:
            raise ValueError(f"[{self.lo},{self.hi}] is not dyadically aligned")

    @property
    def length(self) -> int:
        return self.hi - self.lo + 1

    @property
    def midpoint(self) -> int:
        """Last index of the lower half; the bit a searcher probes next."""
        if self.length < 2:
            raise ValueError(f"length-1 interval [{self.lo},{self.hi}] has no midpoint")
        return self.lo + self.length // 2 - 1

    def lower_half(self) -> "Interval":
        return Interval(self.lo, self.midpoint)

    def upper_half(self) -> "Interval":
        return Interval(self.midpoint + 1, self.hi)

    @classmethod
    def aligned_block(cls, position: int, length: int) -> "Interval":
        """The length-``length`` dyadic block containing ``position``."""
        lo = (position // length) * length
        return cls(lo, lo + length - 1)


def _permute_labels(
    state: SparseState, image_of: Callable[[BasisLabel], BasisLabel]
) -> SparseState:
    """Relabel a state through an injective map; exact, no float arithmetic."""
    mapping: dict[BasisLabel, BasisLabel] = {}
    sources: dict[BasisLabel, BasisLabel] = {}
    for label in state.labels():
        image = image_of(label)
        prior = sources.get(image)
        if prior is not None:
            raise CollisionError(
                f"labels {prior} and {label} both map to {image}"
            )
        sources[image] = label
        mapping[label] = image
    return SparseState(
        {mapping[label]: amp for label, amp in state.items()}
    )


# ---------------------------------------------------------------------------
# The three round operators


def apply_combine(state: SparseState, s: int) -> SparseState:
    """Marker mixer on intervals of length ``s``.

    ``(b, I) -> (|0> + (-1)^b |1>)/sqrt(2) (x) I`` for matching labels; all
    other labels pass through. Self-inverse on the matching block. Two
    computers holding the same interval with marker values 0 and ``bit``-sign
    interfere into the single computer ``(bit, I)``.
    """
    if not _is_pow2(s) or s < 2:
        raise ValueError(f"interval size must be a power of two >= 2, got {s}")

    def op(label):
        if isinstance(label, TeamLabel) and label.length == s:
            sign = 1.0 if label.b == 0 else -1.0
            return [
                (TeamLabel(0, label.lo, label.hi), _SQRT_HALF),
                (TeamLabel(1, label.lo, label.hi), sign * _SQRT_HALF),
            ]
        return [(label, 1.0)]

    return apply_linear(state, op, unitary=True)


def apply_refine(state: SparseState, s: int) -> SparseState:
    """Marker-directed halving of intervals of length ``s``.

    Marker 1 selects the lower half, marker 0 the upper half; the marker is
    cleared. A label permutation: colliding images are a hard error.
    """
    if not _is_pow2(s) or s < 2:
        raise ValueError(f"interval size must be a power of two >= 2, got {s}")

    def image_of(label):
        if isinstance(label, TeamLabel) and label.length == s:
            interval = Interval(label.lo, label.hi)
            half = interval.lower_half() if label.b == 1 else interval.upper_half()
            return TeamLabel(0, half.lo, half.hi)
        return label

    return _permute_labels(state, image_of)


def _routing_codec(n: int, bitwrite_length: int):
    """Bijection between team labels and query-routed general labels.

    The routed index is the interval midpoint, except that the least-knowing
    computer's marker-0 branch parks at the padding index ``n`` where every
    instance answers 0. The team label is packed into the workspace tag.
    """
    span = 2 * n  # intervals live in [0, 2n)

    def routed_index(b: int, lo: int, hi: int) -> int:
        if hi - lo + 1 == bitwrite_length and b == 0:
            return n
        return Interval(lo, hi).midpoint

    def route(label):
        if not isinstance(label, TeamLabel):
            raise TypeError(f"expected a TeamLabel, got {label!r}")
        z = ((label.hi * span + label.lo) << 1) | label.b
        return [(GenLabel(z, routed_index(label.b, label.lo, label.hi)), 1.0)]

    def unroute(label):
        if not isinstance(label, GenLabel):
            raise TypeError(f"expected a GenLabel, got {label!r}")
        b = label.z & 1
        rest = label.z >> 1
        hi, lo = divmod(rest, span)
        if label.i != routed_index(b, lo, hi):
            raise ValueError(
                f"label {label} does not sit on its routed query index"
            )
        return [(TeamLabel(b, lo, hi), 1.0)]

    return route, unroute


def apply_team_query(
    state: SparseState,
    inst: OrderedInstance,
    bitwrite_length: int | None = None,
) -> SparseState:
    """Broadcast query: every computer probes the midpoint of its interval.

    Computers whose interval length equals ``bitwrite_length`` (default: the
    largest length present, i.e. the least-knowing computer) get the probed
    bit XORed into their marker; all others pick up the sign (-1)**bit.
    Costs exactly one diagonal query: mixer, route, query, unroute, mixer.
    """
    lengths = set()
    for label in state.labels():
        if not isinstance(label, TeamLabel):
            raise TypeError(f"team query needs TeamLabel states, found {label!r}")
        if label.length < 2:
            raise ValueError(
                f"label {label} has no midpoint to query (length-1 interval)"
            )
        lengths.add(label.length)
    if not lengths:
        return state
    if bitwrite_length is None:
        bitwrite_length = max(lengths)
    if not _is_pow2(bitwrite_length) or bitwrite_length < 2:
        raise ValueError(
            f"bit-write interval size must be a power of two >= 2, "
            f"got {bitwrite_length}"
        )

    route, unroute = _routing_codec(inst.n, bitwrite_length)
    s = apply_combine(state, bitwrite_length)
    s = apply_linear(s, route, unitary=True)
    s = oracle_mod.apply_query(s, inst)
    s = apply_linear(s, unroute, unitary=True)
    return apply_combine(s, bitwrite_length)


def run_combine_round(
    state: SparseState, inst: OrderedInstance, record_stages: bool = False
):
    """One full round: broadcast query, then alternating refine/mix sweeps.

    The sweep sizes are read off the state: with largest interval length
    ``2r`` the sequence is query, refine(2r), then mix(s) refine(s) for
    s = r, r/2, ..., 2. Starting from a well-formed opening superposition the
    final state holds a single length-1 interval at the answer position.

    Returns the final state, or ``(final_state, stages)`` with every
    intermediate state when ``record_stages`` is set.
    """
    lengths = [
        label.length for label in state.labels() if isinstance(label, TeamLabel)
    ]
    if not lengths:
        raise ValueError("state holds no team labels")
    widest = max(lengths)
    if widest < 2 or not _is_pow2(widest):
        raise ValueError(f"unusable largest interval length {widest}")
    r = widest // 2

    stages = [state]
    state = apply_team_query(state, inst, bitwrite_length=widest)
    stages.append(state)
    state = apply_refine(state, widest)
    stages.append(state)
    size = r
    while size >= 2:
        state = apply_combine(state, size)
        stages.append(state)
        state = apply_refine(state, size)
        stages.append(state)
        size //= 2
    if record_stages:
        return state, stages
    return state


def write_stage_files(stages, directory) -> list[Path]:
    """Dump one canonical state file per stage into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for index, stage in enumerate(stages):
        path = directory / f"stage_{index:02d}.txt"
        path.write_text(stage.dump())
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# Knowledge layouts and opening states


@dataclass(frozen=True)
class KnowledgeLayout:
    """Per-computer sets of explicitly known oracle bits (1-based positions).

    A bit is explicitly known to a computer if the computer can output its
    value with certainty whatever the instance. The layout staggers the
    computers across the sublists so that a single broadcast query upgrades
    every computer to full knowledge of the answer's sublist.
    """

    r: int
    n_list: int
    computers: tuple[frozenset, ...]

    def bit_counts(self) -> list[int]:
        return [len(bits) for bits in self.computers]

    def to_jsonable(self) -> dict:
        return {
            "r": self.r,
            "n_list": self.n_list,
            "computers": [sorted(bits) for bits in self.computers],
        }


def team_knowledge_size(r: int) -> int:
    """Explicitly known bits per computer in the canonical layout: (2*r*r + 1)/3."""
    if not _is_pow2(r):
        raise ValueError(f"computer count must be a power of two, got {r}")
    return (2 * r * r + 1) // 3


def build_layout(r: int, n: int) -> KnowledgeLayout:
    """Canonical layout of ``r`` computers over a list of size ``n = 2*r*r``.

    The list splits into ``r`` sublists of size ``2r``. Computer ``c`` plays
    knowledge level ``ceil(log2(e+1))`` in the sublist ``e`` steps after its
    home sublist (cyclically): level 0 knows only the sublist's last bit,
    level ``k`` knows every ``(2r / 2**k)``-th bit of it.
    """
    if not _is_pow2(r):
        raise ValueError(f"computer count must be a power of two, got {r}")
    if n != 2 * r * r:
        raise ValueError(
            f"layout needs list size 2*r*r = {2 * r * r} for r={r}, got {n}"
        )
    sublist = 2 * r
    computers = []
    for c in range(r):
        known = set()
        for s in range(r):
            e = (s - c) % r
            level = e.bit_length()  # 0 -> 0, 1 -> 1, {2,3} -> 2, ...
            stride = sublist >> level
            base = sublist * s
            known.update(base + t * stride for t in range(1, (1 << level) + 1))
        computers.append(frozenset(known))
    return KnowledgeLayout(r=r, n_list=n, computers=tuple(computers))


def opening_state(inst: OrderedInstance, r: int) -> SparseState:
    """The team's joint state entering a combine round.

    One knowledge level per interval size: the level-0 computer only knows
    the answer's sublist (the whole size-``2r`` block); level ``j >= 1`` has
    it narrowed to the size-``2r / 2**j`` block, with ``2**(j-1)`` computers
    merged into that label. Marker 0 on the least-knowing computer (it will
    receive the queried bit), marker 1 elsewhere (they answer in sign).
    Each computer carries equal probability mass 1/r.
    """
    if not _is_pow2(r):
        raise ValueError(f"computer count must be a power of two, got {r}")
    sublist = 2 * r
    if inst.n % sublist != 0:
        raise ValueError(
            f"list size {inst.n} is not a multiple of the sublist size {sublist}"
        )
    levels = r.bit_length() - 1  # r = 2**levels
    entries = {}
    for j in range(levels + 1):
        count = 1 if j == 0 else 1 << (j - 1)
        block = Interval.aligned_block(inst.answer, sublist >> j)
        marker = 0 if j == 0 else 1
        entries[TeamLabel(marker, block.lo, block.hi)] = math.sqrt(count / r)
    return SparseState(entries)


def default_team_size(n: int) -> int:
    """Computer count for a full team run: n/2 up to n=8, else n = 2*r*r."""
    if n in (2, 4, 8):
        return n // 2
    r = math.isqrt(n // 2)
    if 2 * r * r != n or not _is_pow2(r):
        raise ValueError(
            f"no canonical team size for list size {n}; need n in {{2,4,8}} "
            f"or n = 2*r*r with r a power of two"
        )
    return r


# ---------------------------------------------------------------------------
# Steppable algorithms for trajectory analysis


class TeamCombineAlgorithm:
    """The one-query combine round as a steppable algorithm.

    The per-answer opening states stand in for knowledge acquired in earlier
    rounds (their preparation is outside this trace), so ``initial_state``
    takes the instance. The single ``advance`` spends the round's one oracle
    call; every other operator in the round is shared across instances.
    """

    def __init__(self, n: int, r: int | None = None):
        self.n = n
        self.r = default_team_size(n) if r is None else r
        if not _is_pow2(self.r):
            raise ValueError(f"computer count must be a power of two, got {self.r}")
        if n % (2 * self.r) != 0:
            raise ValueError(
                f"list size {n} is not a multiple of the sublist size {2 * self.r}"
            )
        self.num_queries = 1

    def initial_state(self, inst: OrderedInstance) -> SparseState:
        route, _ = _routing_codec(self.n, 2 * self.r)
        s = apply_combine(opening_state(inst, self.r), 2 * self.r)
        return apply_linear(s, route, unitary=True)

    def advance(self, j: int, state: SparseState, inst: OrderedInstance) -> SparseState:
        if j != 0:
            raise ValueError(f"the combine round has a single query, got step {j}")
        _, unroute = _routing_codec(self.n, 2 * self.r)
        s = oracle_mod.apply_query(state, inst)
        s = apply_linear(s, unroute, unitary=True)
        s = apply_combine(s, 2 * self.r)
        s = apply_refine(s, 2 * self.r)
        size = self.r
        while size >= 2:
            s = apply_combine(s, size)
            s = apply_refine(s, size)
            size //= 2
        return s

    def answer_of(self, label: BasisLabel) -> int:
        if not isinstance(label, TeamLabel) or label.length != 1:
            raise ValueError(f"final labels should pin one position, got {label!r}")
        return label.lo


class BinarySearchAlgorithm:
    """Classical binary search embedded unitarily in the query model.

    The workspace tag encodes the interval still containing the answer. Each
    round rotates the searcher into an equal superposition of "probe the
    midpoint" and "sit on the padding index", applies the query, and rotates
    back: the probed bit lands in which of the two labels survives (phase
    kickback against the identity region). A relabeling then halves the
    interval. Exact: the final measurement yields the answer with
    probability one after exactly log2(n) queries.
    """

    def __init__(self, n: int):
        if not _is_pow2(n):
            raise ValueError(f"list size must be a power of two, got {n}")
        self.n = n
        self.num_queries = n.bit_length() - 1
        self._pad = n
        self._span = 2 * n

    def _encode(self, lo: int, length: int) -> int:
        return lo * self._span + length

    def _decode(self, z: int) -> tuple[int, int] | None:
        lo, length = divmod(z, self._span)
        if (
            1 <= length <= self.n
            and _is_pow2(length)
            and lo % length == 0
            and lo + length <= self.n
        ):
            return lo, length
        return None

    def _mixer(self, label):
        # Rotates between the midpoint-probing label and the padding label.
        if isinstance(label, GenLabel):
            decoded = self._decode(label.z)
            if decoded is not None:
                lo, length = decoded
                if length >= 2:
                    mid = Interval(lo, lo + length - 1).midpoint
                    probe = GenLabel(label.z, mid)
                    park = GenLabel(label.z, self._pad)
                    if label.i == mid:
                        return [(probe, _SQRT_HALF), (park, _SQRT_HALF)]
                    if label.i == self._pad:
                        return [(probe, _SQRT_HALF), (park, -_SQRT_HALF)]
        return [(label, 1.0)]

    def _halve(self, label):
        # Post-mixer, the label position encodes the probed bit: the midpoint
        # label means bit 1 (answer in the lower half), the padding label
        # means bit 0 (upper half).
        if isinstance(label, GenLabel):
            decoded = self._decode(label.z)
            if decoded is not None:
                lo, length = decoded
                if length >= 2:
                    half = length // 2
                    mid = Interval(lo, lo + length - 1).midpoint
                    if label.i == mid:
                        return GenLabel(self._encode(lo, half), self._pad)
                    if label.i == self._pad:
                        return GenLabel(self._encode(lo + half, half), self._pad)
        return label

    def initial_state(self, inst: OrderedInstance | None = None) -> SparseState:
        state = SparseState.unit(GenLabel(self._encode(0, self.n), self._pad))
        if self.num_queries > 0:
            state = apply_linear(state, self._mixer, unitary=True)
        return state

    def advance(self, j: int, state: SparseState, inst: OrderedInstance) -> SparseState:
        s = oracle_mod.apply_query(state, inst)
        s = apply_linear(s, self._mixer, unitary=True)
        s = _permute_labels(s, self._halve)
        if j + 1 < self.num_queries:
            s = apply_linear(s, self._mixer, unitary=True)
        return s

    def answer_of(self, label: BasisLabel) -> int:
        if isinstance(label, GenLabel):
            decoded = self._decode(label.z)
            if decoded is not None and decoded[1] == 1:
                return decoded[0]
        raise ValueError(f"final labels should pin one position, got {label!r}")


class SimulationResult(NamedTuple):
    answer: int
    probability: float
    queries: int


def run_algorithm(algorithm, inst: OrderedInstance) -> SimulationResult:
    """Evolve one instance to the end and measure the answer outcome."""
    state = algorithm.initial_state(inst)
    for j in range(algorithm.num_queries):
        state = algorithm.advance(j, state, inst)
    distribution = measure_distribution(state, algorithm.answer_of)
    answer, probability = max(distribution.items(), key=lambda kv: kv[1])
    return SimulationResult(
        answer=answer, probability=probability, queries=algorithm.num_queries
    )


# ---------------------------------------------------------------------------
# Classical reference and query accounting


@dataclass(frozen=True)
class SearchTrace:
    """Classical binary-search run: answer, probed indices, known-bit growth.

    ``known[j]`` is the set of explicitly known bits after ``j`` queries, as
    1-based positions; it doubles each query independently of the instance.
    """

    answer: int
    queried: tuple[int, ...]
    known: tuple[frozenset, ...]


def known_bits_after(n: int, j: int) -> frozenset:
    """Explicitly known 1-based positions after ``j`` classical queries."""
    if not _is_pow2(n):
        raise ValueError(f"list size must be a power of two, got {n}")
    if not 0 <= j <= n.bit_length() - 1:
        raise ValueError(f"query count {j} out of range for n={n}")
    step = n >> j
    return frozenset(step * k for k in range(1, (1 << j) + 1))


def classical_binary_search(inst: OrderedInstance) -> SearchTrace:
    """Halve the candidate interval on each probed bit; exactly log2(n) queries."""
    n = inst.n
    if not _is_pow2(n):
        raise ValueError(f"list size must be a power of two, got {n}")
    lo, hi = 0, n - 1
    queried = []
    known = [known_bits_after(n, 0)]
    while lo < hi:
        mid = Interval(lo, hi).midpoint
        queried.append(mid)
        if inst.bit(mid):
            hi = mid
        else:
            lo = mid + 1
        known.append(known_bits_after(n, len(queried)))
    return SearchTrace(answer=lo, queried=tuple(queried), known=tuple(known))


@dataclass(frozen=True)
class Decomposition:
    """Digits of ``m`` in the base of values (2*4**k + 1)/3, each digit <= 3."""

    digits: tuple[int, ...]  # digits[k] multiplies (2*4**k + 1)/3

    def __post_init__(self):
        if not self.digits or self.digits[-1] == 0:
            raise ValueError("digit vector must be non-empty with a nonzero top digit")
        if any(not 0 <= d <= 3 for d in self.digits):
            raise ValueError(f"digits must lie in 0..3, got {self.digits}")

    @property
    def top(self) -> int:
        return len(self.digits) - 1

    def value(self) -> int:
        total, power = 0, 1
        for d in self.digits:
            total += d * ((2 * power + 1) // 3)
            power *= 4
        return total

    def expanded(self) -> int:
        total, power = 0, 2
        for d in self.digits:
            total += d * power
            power *= 4
        return total


def base_value(k: int) -> int:
    """The k-th digit value (2*4**k + 1)/3: 1, 3, 11, 43, 171, ..."""
    return (2 * 4**k + 1) // 3


def decompose(m: int) -> Decomposition:
    """Greedy digit expansion of ``m``, largest digit value first.

    Always reconstructs ``m`` exactly: after taking up to three copies of the
    top value the remainder drops below the next value down, and the unit
    digit value closes any gap.
    """
    if m < 1:
        raise ValueError(f"can only decompose positive integers, got {m}")
    values = [1]
    while 4 * values[-1] - 1 <= m:  # next digit value is 4*v - 1
        values.append(4 * values[-1] - 1)
    digits = [0] * len(values)
    remainder = m
    for k in range(len(values) - 1, -1, -1):
        take = remainder // values[k]
        if take > 3:
            take = 3
        digits[k] = take
        remainder -= take * values[k]
    if remainder != 0:
        raise ValueError(f"{m} is not representable with digits capped at 3")
    return Decomposition(tuple(digits))


class ExpansionStep(NamedTuple):
    m_next: int
    factor: float


def expansion_floor(top: int) -> float:
    """Guaranteed expansion factor for decompositions with top digit ``top``."""
    return 3.0 / (1.0 + 3.0 * (top + 1) / (2.0 * 4**top))


def expansion(m: int) -> ExpansionStep:
    """Known bits after one more query round: each digit value grows to 2*4**k."""
    decomposition = decompose(m)
    m_next = decomposition.expanded()
    return ExpansionStep(m_next=m_next, factor=m_next / m)


def ceil_log3(n: int) -> int:
    """Smallest q with 3**q >= n, computed in exact integer arithmetic."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    q, power = 0, 1
    while power < n:
        q += 1
        power *= 3
    return q


class QueryCount(NamedTuple):
    queries: int
    trace: tuple[int, ...]


def query_count_model(n: int, start: int = 1) -> QueryCount:
    """Iterate the expansion from ``start`` known bits until ``n`` is covered."""
    if n < 2:
        raise ValueError(f"query accounting needs n >= 2, got {n}")
    if start < 1:
        raise ValueError(f"starting knowledge must be positive, got {start}")
    trace = [start]
    m = start
    while m < n:
        m = expansion(m).m_next
        trace.append(m)
    return QueryCount(queries=len(trace) - 1, trace=tuple(trace))
