"""Weighted all-pairs overlap analysis for ordered-search algorithms.

The central quantity is the weighted sum, over all pairs of instances, of the
inner products of their current states:

    W_j = sum over (a, b) of weight(a, b) * <state_a^j | state_b^j>

For the ordered-search weights (inverse answer distance) the initial value is
``n * H_n - n`` and no single query can move W by more than ``pi * n``. This
module computes W trajectories for steppable algorithms, decomposes each
per-query drop into the per-index mass vectors gamma and delta, and checks
the full inequality chain

    drop <= 2 * sum_d sum_i (1/d) gamma_i delta_(d-i-1)
         <= 2 * ||gamma|| * ||M|| * ||delta||
         <= pi * n

where M is the banded inverse-distance (Hankel) matrix, whose spectral norm
is capped by the norm of the same-size Hilbert matrix, itself below pi.

Algorithm protocol expected by :func:`run_trajectory`:

* ``n``: problem size, ``num_queries``: number of oracle rounds T;
* ``initial_state(instance)``: the state entering the first query. Honest
  from-scratch algorithms ignore ``instance``; the team-search combine uses
  it to stand in for knowledge acquired in rounds outside the trace.
* ``advance(j, state, instance)``: apply exactly one oracle query followed by
  the round's shared (instance-independent) unitaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .oracle import enumerate_instances
from .qcore import BasisLabel, GenLabel, SparseState, inner_product

# Looser than state tolerances: the chain composes O(n^2) float sums.
CHAIN_TOL = 1e-8

# Above this size the spectral norm switches from a full symmetric
# eigensolve to deterministic power iteration.
EIGENSOLVE_LIMIT = 64


class ConvergenceError(RuntimeError):
    """Power iteration failed to reach tolerance within the iteration cap."""


# ---------------------------------------------------------------------------
# Scalar bound formulas


def harmonic(n: int) -> float:
    """n-th harmonic number, sum of 1/k for k = 1..n."""
    if n < 1:
        raise ValueError(f"harmonic number needs n >= 1, got {n}")
    return math.fsum(1.0 / k for k in range(1, n + 1))


def total_weight(n: int) -> float:
    """Total inverse-distance weight over all answer pairs: n*H_n - n."""
    if n < 1:
        raise ValueError(f"problem size must be positive, got {n}")
    return n * harmonic(n) - n


def distinguishability_threshold(eps: float) -> float:
    """Largest overlap magnitude allowing error probability at most eps."""
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"error probability must lie in [0, 1/2], got {eps}")
    return 2.0 * math.sqrt(eps * (1.0 - eps))


def query_lower_bound(W: float, Delta: float, eps: float) -> float:
    """Minimum query count when each query moves at most Delta of weight W."""
    if Delta <= 0:
        raise ValueError(f"per-query decrease bound must be positive, got {Delta}")
    if W < 0:
        raise ValueError(f"initial weight must be non-negative, got {W}")
    return (1.0 - distinguishability_threshold(eps)) * W / Delta


def ordered_search_bound(n: int, eps: float) -> float:
    """Query lower bound for ordered search: (1 - 2*sqrt(eps(1-eps)))*(H_n - 1)/pi."""
    if n < 2:
        raise ValueError(f"ordered-search bound needs n >= 2, got {n}")
    return (1.0 - distinguishability_threshold(eps)) * (harmonic(n) - 1.0) / math.pi


# ---------------------------------------------------------------------------
# Weights and overlaps


@dataclass(frozen=True)
class WeightSpec:
    """Non-negative pairwise weight over answers ``0 .. n-1``."""

    n: int
    weight: Callable[[int, int], float]

    @classmethod
    def inverse_distance(cls, n: int) -> "WeightSpec":
        """Ordered-search weights: 1/(b-a) for a < b, zero otherwise."""
        return cls(n=n, weight=lambda a, b: 1.0 / (b - a) if a < b else 0.0)

    def __call__(self, a: int, b: int) -> float:
        value = self.weight(a, b)
        if value < 0:
            raise ValueError(f"weight({a},{b}) = {value} is negative")
        return value


def weighted_overlap(states: Sequence[SparseState], w: WeightSpec) -> complex:
    """The weighted all-pairs inner product of one state per answer."""
    if len(states) != w.n:
        raise ValueError(f"expected {w.n} states, got {len(states)}")
    total = 0j
    for a in range(w.n):
        for b in range(w.n):
            wt = w(a, b)
            if wt != 0.0:
                total += wt * inner_product(states[a], states[b])
    return total


# ---------------------------------------------------------------------------
# Inverse-distance matrices and their norms


def hilbert_matrix(n: int) -> np.ndarray:
    """n x n matrix with entries 1/(k+l+1); spectral norm below pi."""
    if n < 1:
        raise ValueError(f"matrix size must be positive, got {n}")
    k = np.arange(n)
    return 1.0 / (k[:, None] + k[None, :] + 1.0)


def hankel_matrix(n: int) -> np.ndarray:
    """The banded variant: 1/(k+l+1) where k+l < n, zero past the anti-diagonal."""
    if n < 1:
        raise ValueError(f"matrix size must be positive, got {n}")
    k = np.arange(n)
    m = hilbert_matrix(n)
    m[k[:, None] + k[None, :] >= n] = 0.0
    return m


def spectral_norm(
    M: np.ndarray, tol: float = 1e-10, max_iterations: int = 100_000
) -> float:
    """Induced 2-norm of a square symmetric matrix.

    Small matrices (size <= 64) go through a full symmetric eigensolve;
    larger ones use power iteration from the deterministic all-equal start
    vector, stopping on residual ``||Mv - lam*v|| <= tol``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.array_equal(M, M.T):
        raise ValueError("matrix is not symmetric")
    n = M.shape[0]
    if n <= EIGENSOLVE_LIMIT:
        eigenvalues = np.linalg.eigvalsh(M)
        return float(max(abs(eigenvalues[0]), abs(eigenvalues[-1])))
    v = np.full(n, 1.0 / math.sqrt(n))
    for _ in range(max_iterations):
        w = M @ v
        lam = float(v @ w)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        residual = float(np.linalg.norm(M @ v - lam * v))
        if residual <= tol:
            return abs(lam)
    raise ConvergenceError(
        f"power iteration did not reach residual {tol:.1e} "
        f"within {max_iterations} iterations"
    )


# ---------------------------------------------------------------------------
# Per-query mass accounting


def gen_query_index(label: BasisLabel) -> int:
    """Queried index of a ``GenLabel``; the default classifier."""
    if not isinstance(label, GenLabel):
        raise TypeError(f"expected a GenLabel, got {label!r}")
    return label.i


@dataclass
class MassProfile:
    """Projections of per-answer states onto the index they query.

    ``betas[(a, i)]`` is the sub-state of answer ``a``'s state supported on
    labels querying index ``i``. ``gammas[i]`` aggregates mass queried ``i``
    positions at or above each answer, ``deltas[i]`` mass queried ``i + 1``
    positions below. Only in-range indices (0 .. n-1) contribute; queries in
    the zero-padding region never distinguish instances.
    """

    n: int
    betas: dict = field(repr=False)
    gammas: np.ndarray = field(repr=False)
    deltas: np.ndarray = field(repr=False)

    def mass(self, a: int, i: int) -> float:
        sub = self.betas.get((a, i))
        return 0.0 if sub is None else sub.squared_norm()


def mass_profile(
    states: Sequence[SparseState],
    queried_index_of: Callable[[BasisLabel], int] = gen_query_index,
) -> MassProfile:
    """Split each answer's state by queried index and aggregate the masses."""
    n = len(states)
    betas: dict[tuple[int, int], SparseState] = {}
    for a, state in enumerate(states):
        by_index: dict[int, dict] = {}
        for label, amp in state.items():
            i = queried_index_of(label)
            by_index.setdefault(i, {})[label] = amp
        for i, entries in by_index.items():
            betas[(a, i)] = SparseState(entries)

    size = max(n - 1, 0)
    gammas_sq = np.zeros(size)
    deltas_sq = np.zeros(size)
    for (a, i), sub in betas.items():
        if not 0 <= i < n:
            continue
        offset = i - a
        if offset >= 0:
            if offset < size:
                gammas_sq[offset] += sub.squared_norm()
        else:
            below = -offset - 1
            if below < size:
                deltas_sq[below] += sub.squared_norm()
    return MassProfile(
        n=n, betas=betas, gammas=np.sqrt(gammas_sq), deltas=np.sqrt(deltas_sq)
    )


def pairwise_drop(profile: MassProfile, w: WeightSpec) -> complex:
    """The per-query drop recomputed from projected sub-states.

    Equals ``W_j - W_(j+1)`` exactly (up to float error) when the round is
    one query followed by shared unitaries: only indices where two instances
    disagree, i.e. ``a <= i < b``, contribute.
    """
    total = 0j
    for a in range(profile.n):
        for b in range(a + 1, profile.n):
            wt = w(a, b)
            if wt == 0.0:
                continue
            overlap = 0j
            for i in range(a, b):
                beta_a = profile.betas.get((a, i))
                beta_b = profile.betas.get((b, i))
                if beta_a is not None and beta_b is not None:
                    overlap += inner_product(beta_a, beta_b)
            total += wt * overlap
    return 2.0 * total


@dataclass
class ChainReport:
    """The four quantities of the per-query inequality chain, checked in order."""

    n: int
    drop: float
    pair_bound: float
    norm_bound: float
    cap: float
    pair_identity_err: float
    failures: tuple[str, ...]

    @property
    def holds(self) -> bool:
        return not self.failures


def verify_drop_chain(
    states_before: Sequence[SparseState],
    states_after: Sequence[SparseState],
    w: WeightSpec,
    queried_index_of: Callable[[BasisLabel], int] = gen_query_index,
    tol: float = CHAIN_TOL,
) -> ChainReport:
    """Check the drop chain for one (query, unitary) round.

    Computes D = |W_before - W_after|, the explicit double sum
    S = 2 * sum_d sum_i (1/d) gamma_i delta_(d-i-1), the matrix bound
    B = 2 ||gamma|| ||M|| ||delta||, and the cap pi*n, and verifies
    D <= S + tol <= B + tol <= pi*n + tol. Valid for the inverse-distance
    weights; ``states_before`` must be the states entering the query.
    """
    n = w.n
    before = complex(weighted_overlap(states_before, w))
    after = complex(weighted_overlap(states_after, w))
    drop = abs(before - after)

    profile = mass_profile(states_before, queried_index_of)
    gammas, deltas = profile.gammas, profile.deltas
    pair_bound = 0.0
    for d in range(1, n):
        pair_bound += 2.0 / d * math.fsum(
            gammas[i] * deltas[d - 1 - i] for i in range(d)
        )
    if n >= 2:
        norm_bound = (
            2.0
            * float(np.linalg.norm(gammas))
            * spectral_norm(hankel_matrix(n - 1))
            * float(np.linalg.norm(deltas))
        )
    else:
        norm_bound = 0.0
    cap = math.pi * n

    identity_err = abs((before - after) - pairwise_drop(profile, w))

    failures = []
    if drop > pair_bound + tol:
        failures.append(
            f"drop {drop:.12g} exceeds explicit double sum {pair_bound:.12g}"
        )
    if pair_bound > norm_bound + tol:
        failures.append(
            f"double sum {pair_bound:.12g} exceeds matrix bound {norm_bound:.12g}"
        )
    if norm_bound > cap + tol:
        failures.append(f"matrix bound {norm_bound:.12g} exceeds cap {cap:.12g}")
    return ChainReport(
        n=n,
        drop=drop,
        pair_bound=pair_bound,
        norm_bound=norm_bound,
        cap=cap,
        pair_identity_err=identity_err,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# Trajectories


@dataclass
class StepRecord:
    j: int
    overlap: complex
    drop: complex | None  # W_j - W_(j+1); None on the final step


@dataclass
class TrajectoryRecord:
    """Per-query-step weighted overlaps for one algorithm run over all answers."""

    n: int
    bound: float  # pi * n
    steps: list[StepRecord]
    chain_reports: list[ChainReport] | None = None

    @property
    def initial_overlap(self) -> complex:
        return self.steps[0].overlap

    @property
    def final_overlap(self) -> complex:
        return self.steps[-1].overlap

    def drops(self) -> list[complex]:
        return [s.drop for s in self.steps if s.drop is not None]

    def max_drop_abs(self) -> float:
        return max((abs(d) for d in self.drops()), default=0.0)

    def telescoping_error(self) -> float:
        """|W_0 - W_T - sum of drops|; zero up to float error by construction."""
        return abs(self.initial_overlap - self.final_overlap - sum(self.drops(), 0j))

    def bound_satisfied(self, tol: float = 1e-9) -> bool:
        return self.max_drop_abs() <= self.bound + tol

    def to_csv(self) -> str:
        lines = ["j,W_re,W_im,drop_abs,bound"]
        for step in self.steps:
            drop_abs = "" if step.drop is None else f"{abs(step.drop):.17g}"
            lines.append(
                f"{step.j},{step.overlap.real:.17g},{step.overlap.imag:.17g},"
                f"{drop_abs},{self.bound:.17g}"
            )
        return "".join(line + "\n" for line in lines)


def run_trajectory(
    algorithm, n: int, w: WeightSpec, verify_chain: bool = False
) -> TrajectoryRecord:
    """Evolve one state per answer through the algorithm and record W_j.

    Snapshots are taken at the points where states meet each query, so the
    recorded drops are exactly the per-query decreases; shared unitaries
    between queries cannot move W. With ``verify_chain`` the full inequality
    chain is evaluated at every step.
    """
    instances = enumerate_instances(n)
    states = [algorithm.initial_state(inst) for inst in instances]
    overlaps = [weighted_overlap(states, w)]
    reports: list[ChainReport] = []
    for j in range(algorithm.num_queries):
        next_states = [
            algorithm.advance(j, state, inst)
            for state, inst in zip(states, instances)
        ]
        overlaps.append(weighted_overlap(next_states, w))
        if verify_chain:
            reports.append(verify_drop_chain(states, next_states, w))
        states = next_states

    steps = []
    for j, overlap in enumerate(overlaps):
        drop = overlaps[j] - overlaps[j + 1] if j + 1 < len(overlaps) else None
        steps.append(StepRecord(j=j, overlap=overlap, drop=drop))
    return TrajectoryRecord(
        n=n,
        bound=math.pi * n,
        steps=steps,
        chain_reports=reports if verify_chain else None,
    )
